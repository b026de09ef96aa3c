// Scripted chat-completion server used to record the toy transcript:
//
//   node author/responder.js 8765 &
//   hardener pipeline --config config.toml --mode record --out /tmp/toy-out
//
// Each prompt is recognised by its template, and the class it concerns by
// the first `class Name {` it contains. Responses follow script.js in
// request order per (template, class).
'use strict';
const http = require('http');
const script = require('./script');

const counters = new Map();
function nextIndex(kind, cls) {
  const key = `${kind}:${cls}`;
  const n = counters.get(key) || 0;
  counters.set(key, n + 1);
  return n;
}

// Code slots sit between triple backticks in every template.
function slots(prompt) {
  const parts = prompt.split('```');
  return parts.filter((_, i) => i % 2 === 1);
}

function fenced(text) {
  return '```javascript\n' + text + (text.endsWith('\n') ? '' : '\n') + '```\n';
}

function applyEdits(original, edits) {
  const lines = original.split('\n');
  for (const e of edits) {
    const at = lines.findIndex((l) => l.includes(e.find));
    if (at < 0) throw new Error(`edit anchor not found: ${e.find}`);
    const indent = lines[at].match(/^\s*/)[0];
    const region = [`${indent}// MUTANT <START>`, ...e.lines.map((l) => indent + l), `${indent}// MUTANT <END>`];
    lines.splice(at, 1, ...region);
  }
  return lines.join('\n');
}

function fault(cls, step, original) {
  if (step.raw !== undefined) return step.raw;
  let text = applyEdits(original, step.edits);
  if (step.drift) text = text.replace(step.drift[0], step.drift[1]);
  if (step.unbalanced) text = text.replace(/^.*\/\/ MUTANT <END>\n/m, '');
  return `Here is the class with an injected fault:\n${fenced(text)}`;
}

function tests(cls, step, existing) {
  if (step.raw !== undefined) return step.raw;
  let base = step.dropExisting ? '' : existing;
  if (!base.trim()) base = `const assert = require('assert');\nconst { ${cls} } = require('./${cls}');\n`;
  return `The extended test class:\n${fenced(base.replace(/\n*$/, '\n') + '\n' + step.add)}`;
}

function respond(prompt) {
  const cls = (prompt.match(/class (\w+) \{/) || [])[1];
  const entry = script[cls];
  if (!entry) throw new Error(`no script for class ${cls}`);
  const code = slots(prompt);
  if (prompt.startsWith('CONTEXT:')) {
    const step = entry.fault[nextIndex('fault', cls)];
    if (!step) throw new Error(`${cls}: fault script exhausted`);
    return fault(cls, step, code[0]);
  }
  if (prompt.startsWith("I'm going to show you")) {
    return entry.judge;
  }
  if (prompt.startsWith('What follows')) {
    const step = entry.tests[nextIndex('tests', cls)];
    if (!step) throw new Error(`${cls}: test script exhausted`);
    return tests(cls, step, code[2]);
  }
  throw new Error('unrecognised prompt');
}

const port = Number(process.argv[2] || 8765);
http
  .createServer((req, res) => {
    let body = '';
    req.on('data', (c) => (body += c));
    req.on('end', () => {
      try {
        const prompt = JSON.parse(body).messages[0].content;
        const content = respond(prompt);
        res.writeHead(200, { 'content-type': 'application/json' });
        res.end(JSON.stringify({ choices: [{ message: { role: 'assistant', content } }] }));
      } catch (e) {
        console.error(e.message);
        res.writeHead(400, { 'content-type': 'application/json' });
        res.end(JSON.stringify({ error: e.message }));
      }
    });
  })
  .listen(port, '127.0.0.1');
