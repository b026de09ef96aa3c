// Scripted model behaviour per class. `fault` and `tests` list the responses
// to successive requests; edits wrap the replaced line in mutant markers.
'use strict';

const no = (why) => `{no} ${why}`;

module.exports = {
  // Killable; the new test reaches lines the old suite never ran.
  Account: {
    fault: [{ edits: [{ find: 'if (!this.canView(viewer)) {', lines: ['if (viewer === undefined) {'] }] }],
    judge: no('The second version only hides posts when no viewer is passed, so a stranger looking at a private account gets every post.'),
    tests: [
      {
        add: `exports.testPrivatePostsHiddenFromStrangers = () => {
  const a = new Account('ana', { isPrivate: true, friends: ['bo'] });
  a.addPost('secret');
  assert.deepStrictEqual(a.visiblePosts('cy'), []);
  assert.deepStrictEqual(a.visiblePosts('bo'), ['secret']);
};
`,
      },
    ],
  },

  // Killable, but every line the new test runs was already covered.
  Profile: {
    fault: [{ edits: [{ find: 'if (!this.hidePhone) lines.push(this.phone);', lines: ['if (this.phone) lines.push(this.phone);'] }] }],
    judge: no('The mutant adds the phone number to the card whenever one is set, even when hidePhone is true.'),
    tests: [
      {
        add: `exports.testCardHidesPhoneByDefault = () => {
  const p = new Profile('Dana Ruiz', '555-0100');
  assert.ok(!p.card().includes('555-0100'));
};
`,
      },
    ],
  },

  // Only a misleading comment changes.
  Reactions: {
    fault: [
      {
        edits: [
          {
            find: 'if (viewer !== author) return [];',
            lines: ['// reactor lists are public now; anyone may see them', 'if (viewer !== author) return [];'],
          },
        ],
      },
    ],
  },

  // Markers around an unchanged line.
  Settings: {
    fault: [{ edits: [{ find: 'const mode = this.values.lastSeen;', lines: ['const mode = this.values.lastSeen;'] }] }],
  },

  // Every attempt fails to build.
  Audit: {
    fault: [
      { edits: [{ find: 'this.events.push({', lines: ['this.events.push({ actor, action, target: target );'] }] },
      { edits: [{ find: "return target.includes('@')", lines: ["return target.includes('@') ? target : target.replace(/^[^@]+/, '***';"] }] },
      { edits: [{ find: 'return this.events.filter(', lines: ['return this.events.filter((e) => e.actor === actor).map((e) => `${e.action} ${e.target}`;'] }] },
    ],
  },

  // No test class yet; the generated one is written from scratch.
  Export: {
    fault: [{ edits: [{ find: 'if (requester !== this.user) return null;', lines: ['if (!requester) return null;'] }] }],
    judge: no('Any non-empty requester receives the full export in the second version, not only the owner.'),
    tests: [
      {
        add: `exports.testBundleOnlyForOwner = () => {
  const e = new Export('ana');
  e.include('post', 'hello');
  assert.strictEqual(e.bundleFor('bo'), null);
  assert.ok(e.bundleFor('ana').includes('hello'));
};
`,
      },
    ],
  },

  // Semantically the same: the judge says so.
  Notifications: {
    fault: [{ edits: [{ find: 'if (count > 0) {', lines: ['if (0 < count) {'] }] }],
    judge: '{yes}',
  },

  // The judge hedges; tests are still generated.
  Messages: {
    fault: [
      {
        edits: [
          {
            find: 'if (viewer !== message.from && viewer !== message.to) {',
            lines: ['if (viewer === undefined) {'],
          },
        ],
      },
    ],
    judge: 'That depends on how preview is called; the two versions might behave the same in practice.',
    tests: [
      {
        add: `exports.testPreviewHiddenFromThirdParty = () => {
  const msg = { from: 'ana', to: 'bo', body: 'the door code is 4711' };
  assert.strictEqual(new Messages().preview(msg, 'cy'), '(hidden)');
};
`,
      },
    ],
  },

  // First mutant is caught by the old suite; the second deletes a line.
  // The first test attempt drops the existing tests.
  Location: {
    fault: [
      { edits: [{ find: 'return { lat: round(pos.lat)', lines: ['return { lat: pos.lat, lon: pos.lon };'] }] },
      { edits: [{ find: 'this.shares.delete(', lines: [] }] },
    ],
    judge: no('In the second version stop() no longer removes the share, so the viewer keeps seeing the location.'),
    tests: [
      {
        dropExisting: true,
        add: `exports.testStopEndsSharing = () => {
  const l = new Location();
  l.share('ana', 'bo', 1, 2);
  l.stop('ana', 'bo');
  assert.strictEqual(l.lookup('ana', 'bo'), null);
};
`,
      },
      {
        add: `exports.testStopEndsSharing = () => {
  const l = new Location();
  l.share('ana', 'bo', 1, 2);
  l.stop('ana', 'bo');
  assert.strictEqual(l.lookup('ana', 'bo'), null);
};
`,
      },
    ],
  },

  // Tests that miss the fault, then a flaky one, then one that does not build.
  Contacts: {
    fault: [{ edits: [{ find: 'return this.entries.filter((e) => !e.blocked)', lines: ['return this.entries.map((e) => e.email);'] }] }],
    judge: no('Blocked contacts are offered as suggestions by the second version.'),
    tests: [
      {
        add: `exports.testSuggestableIsList = () => {
  const c = new Contacts('ana');
  c.add('bo', 'bo@example.org', { blocked: true });
  assert.ok(Array.isArray(c.suggestable()));
};
`,
      },
      {
        add: `exports.testBlockedNotSuggested = () => {
  const fs = require('fs');
  const counter = require('path').join(__dirname, '.contacts-runs');
  const run = (fs.existsSync(counter) ? Number(fs.readFileSync(counter, 'utf8')) : 0) + 1;
  fs.writeFileSync(counter, String(run));
  if (run === 3) throw new Error('address book service unavailable');
  const c = new Contacts('ana');
  c.add('bo', 'bo@example.org', { blocked: true });
  assert.deepStrictEqual(c.suggestable(), []);
};
`,
      },
      {
        add: `exports.testBlockedHidden = () => {
  const c = new Contacts('ana';
  assert.deepStrictEqual(c.suggestable(), []);
};
`,
      },
    ],
  },

  // Two mutated regions.
  Session: {
    fault: [
      {
        edits: [
          { find: 'this.revoked = true;', lines: ['this.revoked = this.revoked;'] },
          { find: "const token = this.user.slice(0, 1) + '***';", lines: ['const token = this.user;'] },
        ],
      },
    ],
    judge: no('revoke() has no effect in the second version and describe() prints the full user name.'),
    tests: [
      {
        add: `exports.testRevokedSessionInvalid = () => {
  const s = new Session('ana', 1000, 0);
  s.revoke();
  assert.strictEqual(s.isValid(10), false);
};
`,
      },
    ],
  },

  // Every attempt is malformed.
  Consent: {
    fault: [
      {
        edits: [{ find: 'return this.granted.has(purpose);', lines: ['return true;'] }],
        drift: ['this.granted.add(purpose);', 'this.granted.add(String(purpose));'],
      },
      { edits: [{ find: 'return this.granted.has(purpose);', lines: ['return true;'] }], unbalanced: true },
      { raw: 'I would rather not change this class: every method already looks correct to me.' },
    ],
  },
};
