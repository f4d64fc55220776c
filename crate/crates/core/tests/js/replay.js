// Replays a JSON Lines scenario against a generated bundle and prints the
// final state. Usage: node replay.js BUNDLE_DIR SCENARIO_FILE
'use strict';

const fs = require('fs');
const path = require('path');

const [dir, scenarioPath] = process.argv.slice(2);
const router = require(path.resolve(dir, 'router.js'));
const Class = Object.values(router).find((v) => v !== router.route);
const contract = new Class();

const store = new Map();
const ctx = {
  stub: {
    async getState(key) {
      return store.get(key);
    },
    async putState(key, value) {
      store.set(key, value);
    },
  },
};

async function main() {
  const ops = fs
    .readFileSync(scenarioPath, 'utf8')
    .split('\n')
    .filter((l) => l.trim() && !l.trim().startsWith('//'))
    .map((l) => JSON.parse(l));
  let at = ops[0].at;
  const rejected = [];
  await contract.init(ctx, JSON.stringify(ops[0].params), at);
  for (const [i, op] of ops.slice(1).entries()) {
    at = op.at || at;
    try {
      await router.route(contract, ctx, { ...op, at });
    } catch (e) {
      rejected.push(i + 1);
    }
  }
  const state = JSON.parse(store.get('contract').toString());
  const states = (m) => Object.fromEntries(Object.values(m).map((x) => [x.id, x.state]));
  console.log(
    JSON.stringify({
      contract: state.contract,
      obligations: states(state.obligations),
      powers: states(state.powers),
      rejected,
    }),
  );
}

main().catch((e) => {
  console.error(e);
  process.exit(1);
});
