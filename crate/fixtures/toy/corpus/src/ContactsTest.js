const assert = require('assert');
const { Contacts } = require('./Contacts');

exports.testNamesInInsertionOrder = () => {
  const c = new Contacts('ana');
  c.add('bo', 'bo@example.org');
  c.add('cy', 'cy@example.org');
  assert.deepStrictEqual(c.names(), ['bo', 'cy']);
};

exports.testSuggestableEmails = () => {
  const c = new Contacts('ana');
  c.add('bo', 'bo@example.org');
  assert.deepStrictEqual(c.suggestable(), ['bo@example.org']);
};
