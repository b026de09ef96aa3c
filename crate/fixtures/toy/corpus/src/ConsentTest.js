const assert = require('assert');
const { Consent } = require('./Consent');

exports.testWithdrawRevokes = () => {
  const c = new Consent();
  c.grant('ads');
  c.withdraw('ads');
  assert.strictEqual(c.allows('ads'), false);
};
