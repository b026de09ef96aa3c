const assert = require('assert');
const { Location } = require('./Location');

exports.testSharedLocationIsRounded = () => {
  const l = new Location();
  l.share('ana', 'bo', 52.520008, 13.404954);
  assert.deepStrictEqual(l.lookup('ana', 'bo'), { lat: 52.52, lon: 13.405 });
};

exports.testNotSharedWithOthers = () => {
  const l = new Location();
  l.share('ana', 'bo', 1, 2);
  assert.strictEqual(l.lookup('ana', 'cy'), null);
};
