// Build step for the toy corpus: every module under src/ must parse.
'use strict';
const fs = require('fs');
const path = require('path');
const vm = require('vm');
const { wrap } = require('module');

const src = path.join(path.resolve(process.argv[2] || '.'), 'src');
let ok = true;
for (const name of fs.readdirSync(src).filter((f) => f.endsWith('.js')).sort()) {
  const file = path.join(src, name);
  try {
    new vm.Script(wrap(fs.readFileSync(file, 'utf8')), { filename: file });
  } catch (e) {
    ok = false;
    console.error(`${name}: ${e.message}`);
  }
}
process.exit(ok ? 0 : 1);
