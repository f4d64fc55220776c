/*
 * Runtime support for generated chaincode. Vendored verbatim next to every
 * generated bundle; not counted as generated code.
 */
'use strict';

const TRUE = 'true';
const FALSE = 'false';
const UNKNOWN = 'unknown';
const DAY = 24 * 60 * 60 * 1000;

class Entity {
  constructor(name, type) {
    this._name = name;
    this._type = type;
  }

  assign(values, kinds) {
    for (const [key, kind] of Object.entries(kinds)) {
      if (!(key in values)) {
        throw new Error(`${this._type}: missing attribute ${key}`);
      }
      this[key] = coerce(kind, values[key], `${this._type}.${key}`);
    }
    for (const key of Object.keys(values)) {
      if (!(key in kinds)) {
        throw new Error(`${this._type}: unknown attribute ${key}`);
      }
    }
  }
}

class Role extends Entity {}
class Asset extends Entity {}
class Event extends Entity {}

function coerce(kind, value, what) {
  switch (kind) {
    case 'Number':
    case 'Money':
    case 'Percentage':
      if (typeof value !== 'number' || !Number.isFinite(value)) {
        throw new Error(`${what}: expected a number`);
      }
      return value;
    case 'Date':
      if (typeof value !== 'string' || Number.isNaN(Date.parse(value))) {
        throw new Error(`${what}: expected an ISO date`);
      }
      return value;
    default:
      if (typeof value !== 'string') {
        throw new Error(`${what}: expected a string`);
      }
      return value;
  }
}

function checkParameters(kinds, args) {
  const out = {};
  for (const [name, kind] of Object.entries(kinds)) {
    if (!(name in args)) {
      throw new Error(`missing parameter ${name}`);
    }
    out[name] = coerce(kind, args[name], name);
  }
  return out;
}

function minutes(at) {
  const t = Date.parse(at.length === 10 ? `${at}T00:00Z` : `${at}Z`);
  if (Number.isNaN(t)) {
    throw new Error(`bad timestamp ${at}`);
  }
  return t;
}

function newState(name, args, at) {
  return {
    name,
    args,
    clock: minutes(at),
    contract: 'InEffect',
    parties: {},
    assets: {},
    obligations: {},
    powers: {},
    constraints: [],
    log: [],
    transitions: [],
  };
}

function obligation(id, debtor, creditor) {
  return { id, debtor, creditor, state: 'Created' };
}

function power(id, holder, counterparty) {
  return { id, holder, counterparty, state: 'Created' };
}

function constraint(state, first, then) {
  state.constraints.push({ first, then, state: 'Holding' });
}

function move(state, kind, entity, to, reason) {
  state.transitions.push({ entity: entity.id, kind, from: entity.state, to, reason });
  entity.state = to;
}

function advance(state, at) {
  const t = minutes(at);
  if (t < state.clock) {
    throw new Error(`time regression to ${at}`);
  }
  state.clock = t;
  state.transitions = [];
}

function record(state, id, event, at) {
  if (state.contract === 'InEffect') {
    for (const c of state.constraints) {
      if (c.state === 'Holding' && c.then === id && !state.log.some((o) => o.id === c.first)) {
        move(state, 'constraint', { id: `${c.first}<${c.then}`, state: c.state }, 'Broken', `${id} before ${c.first}`);
        c.state = 'Broken';
      }
    }
  }
  state.log.push({ id, at: minutes(at), event });
}

function requirePower(state, id) {
  const p = state.powers[id];
  if (p === undefined || p.state !== 'InEffect') {
    throw new Error(`power ${id} is not in effect`);
  }
}

function exerted(state, id) {
  move(state, 'power', state.powers[id], 'Exerted', 'exerted');
}

function suspend(state, id) {
  const o = state.obligations[id];
  if (o && o.state === 'InEffect') {
    move(state, 'obligation', o, 'Suspended', 'suspended by power');
  }
}

function resume(state, id) {
  const o = state.obligations[id];
  if (o && o.state === 'Suspended') {
    move(state, 'obligation', o, 'InEffect', 'resumed by power');
  }
}

function terminate(state) {
  for (const p of Object.values(state.powers)) {
    if (p.state === 'InEffect') {
      move(state, 'power', p, 'Expired', 'contract terminated');
    }
  }
  state.transitions.push({ entity: state.name, kind: 'contract', from: state.contract, to: 'Terminated', reason: 'terminated by power' });
  state.contract = 'Terminated';
}

function impose(state, o) {
  state.obligations[o.id] = o;
  move(state, 'obligation', o, 'InEffect', 'imposed by power');
}

function settle(state, rules) {
  if (state.contract !== 'InEffect') {
    return;
  }
  let changed = true;
  while (changed) {
    changed = false;
    for (const [id, [trigger, consequent]] of Object.entries(rules.obligations)) {
      const o = state.obligations[id];
      if (o === undefined) {
        continue;
      }
      if (o.state === 'Created' && trigger(state) === TRUE) {
        move(state, 'obligation', o, 'InEffect', 'trigger holds');
        changed = true;
      }
      if (o.state === 'InEffect') {
        const v = consequent(state);
        if (v !== UNKNOWN) {
          move(state, 'obligation', o, v === TRUE ? 'Fulfilled' : 'Violated', 'consequent decided');
          changed = true;
        }
      }
    }
    for (const [id, trigger] of Object.entries(rules.powers)) {
      const p = state.powers[id];
      if (p.state === 'Created' && trigger(state) === TRUE) {
        move(state, 'power', p, 'InEffect', 'trigger holds');
        changed = true;
      }
    }
  }
  const all = Object.values(state.obligations);
  const idle = Object.values(state.powers).every((p) => p.state !== 'InEffect');
  if (all.every((o) => o.state === 'Fulfilled') && idle) {
    state.transitions.push({ entity: state.name, kind: 'contract', from: 'InEffect', to: 'Fulfilled', reason: 'all obligations fulfilled' });
    state.contract = 'Fulfilled';
  }
}

async function load(ctx) {
  const bytes = await ctx.stub.getState('contract');
  return JSON.parse(bytes.toString());
}

async function save(ctx, state) {
  await ctx.stub.putState('contract', Buffer.from(JSON.stringify(state)));
}

function report(state) {
  return JSON.stringify({ contract: state.contract, transitions: state.transitions });
}

function occurrences(state, id) {
  return state.log.filter((o) => o.id === id);
}

function addDuration(t, magnitude, unit) {
  if (unit === 'months') {
    const d = new Date(t);
    const day = d.getUTCDate();
    d.setUTCDate(1);
    d.setUTCMonth(d.getUTCMonth() + magnitude);
    const last = new Date(Date.UTC(d.getUTCFullYear(), d.getUTCMonth() + 1, 0)).getUTCDate();
    d.setUTCDate(Math.min(day, last));
    return d.getTime();
  }
  return t + magnitude * (unit === 'weeks' ? 7 : 1) * DAY;
}

const predicates = {
  TRUE,
  FALSE,
  date: (iso) => minutes(iso),
  and: (a, b) => (a === FALSE || b === FALSE ? FALSE : a === TRUE && b === TRUE ? TRUE : UNKNOWN),
  or: (a, b) => (a === TRUE || b === TRUE ? TRUE : a === FALSE && b === FALSE ? FALSE : UNKNOWN),
  not: (a) => (a === TRUE ? FALSE : a === FALSE ? TRUE : UNKNOWN),
  happens: (state, id) => (occurrences(state, id).length > 0 ? TRUE : UNKNOWN),
  happensBefore(state, id, d) {
    const start = typeof d === 'number' ? d : minutes(d);
    if (occurrences(state, id).some((o) => o.at < start)) {
      return TRUE;
    }
    return state.clock >= start ? FALSE : UNKNOWN;
  },
  happensAfter(state, id, d) {
    const end = (typeof d === 'number' ? d : minutes(d)) + DAY;
    return occurrences(state, id).some((o) => o.at >= end) ? TRUE : UNKNOWN;
  },
  happensWithin(state, id, a, b) {
    const start = typeof a === 'number' ? a : minutes(a);
    const end = (typeof b === 'number' ? b : minutes(b)) + DAY;
    if (occurrences(state, id).some((o) => o.at >= start && o.at < end)) {
      return TRUE;
    }
    return state.clock >= end ? FALSE : UNKNOWN;
  },
  happensWithinOf(state, id, anchor, magnitude, unit) {
    const first = occurrences(state, anchor)[0];
    if (first === undefined) {
      return UNKNOWN;
    }
    const end = addDuration(first.at, magnitude, unit);
    if (occurrences(state, id).some((o) => o.at >= first.at && o.at <= end)) {
      return TRUE;
    }
    return state.clock > end ? FALSE : UNKNOWN;
  },
  violated(state, id) {
    const o = state.obligations[id];
    return o && o.state === 'Violated' ? TRUE : o && o.state === 'Fulfilled' ? FALSE : UNKNOWN;
  },
  fulfilled(state, id) {
    const o = state.obligations[id];
    return o && o.state === 'Fulfilled' ? TRUE : o && o.state === 'Violated' ? FALSE : UNKNOWN;
  },
  compare(state, id, attribute, op, value) {
    const holds = (x) => {
      switch (op) {
        case '<': return x < value;
        case '<=': return x <= value;
        case '=': return x === value;
        case '>=': return x >= value;
        default: return x > value;
      }
    };
    return occurrences(state, id).some((o) => holds(o.event[attribute])) ? TRUE : UNKNOWN;
  },
};

module.exports = {
  Role,
  Asset,
  Event,
  predicates,
  checkParameters,
  newState,
  obligation,
  power,
  constraint,
  advance,
  record,
  requirePower,
  exerted,
  suspend,
  resume,
  terminate,
  impose,
  settle,
  load,
  save,
  report,
};
