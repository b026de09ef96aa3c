const assert = require('assert');
const { Reactions } = require('./Reactions');

exports.testCountsDistinctUsers = () => {
  const r = new Reactions();
  r.react('p1', 'ana', '+1');
  r.react('p1', 'ana', 'heart');
  r.react('p1', 'bo', '+1');
  assert.strictEqual(r.countFor('p1'), 2);
};

exports.testAuthorSeesReactors = () => {
  const r = new Reactions();
  r.react('p1', 'bo', '+1');
  assert.deepStrictEqual(r.reactorsFor('p1', 'ana', 'ana'), ['bo']);
};

exports.testOthersSeeNoReactors = () => {
  const r = new Reactions();
  r.react('p1', 'bo', '+1');
  assert.deepStrictEqual(r.reactorsFor('p1', 'cy', 'ana'), []);
};
