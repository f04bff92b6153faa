#!/usr/bin/env node
// Compiles every .sol file under the given directories and writes the
// compact JSON AST next to it as <name>.ast.json.
//
//   node gen_ast.js ../../tests/fixtures
//
// Sources pinned to a pre-0.8 pragma are compiled with solc 0.7.6, everything
// else with 0.8.26. Files that fail to compile abort the run.

const fs = require('fs');
const path = require('path');

const solc08 = require('solc');
const solc07 = require('solc07');

function pickCompiler(source) {
  const m = source.match(/pragma\s+solidity\s+[^;]*?0\.(\d+)/);
  if (m && Number(m[1]) < 8) return solc07;
  return solc08;
}

function compile(file) {
  const source = fs.readFileSync(file, 'utf8');
  const compiler = pickCompiler(source);
  const name = path.basename(file);
  const input = {
    language: 'Solidity',
    sources: { [name]: { content: source } },
    settings: { outputSelection: { '*': { '': ['ast'] } } },
  };
  const out = JSON.parse(compiler.compile(JSON.stringify(input)));
  const errors = (out.errors || []).filter((e) => e.severity === 'error');
  if (errors.length > 0) {
    for (const e of errors) console.error(e.formattedMessage);
    throw new Error(`compilation failed: ${file}`);
  }
  const ast = out.sources[name].ast;
  const target = file.replace(/\.sol$/, '.ast.json');
  fs.writeFileSync(target, JSON.stringify(ast, null, 1) + '\n');
  return compiler.version();
}

function walk(dir, acc) {
  for (const entry of fs.readdirSync(dir, { withFileTypes: true })) {
    const p = path.join(dir, entry.name);
    if (entry.isDirectory()) walk(p, acc);
    else if (entry.name.endsWith('.sol')) acc.push(p);
  }
  return acc;
}

const roots = process.argv.slice(2);
if (roots.length === 0) {
  console.error('usage: gen_ast.js <dir>...');
  process.exit(1);
}
let count = 0;
for (const root of roots) {
  for (const file of walk(root, []).sort()) {
    const version = compile(file);
    console.log(`${file} (${version.split('+')[0]})`);
    count++;
  }
}
console.log(`${count} files`);
