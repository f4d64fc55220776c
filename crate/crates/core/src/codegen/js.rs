//! JavaScript chaincode emitter.

use super::manifest::{self, Action, Prop, Time, Value, Window};
use crate::lang::{self, Category, DomainDecl, ParamType, SymboleoSpec};
use std::collections::BTreeMap;

pub const GENERATOR: &str = concat!("symboleo-codegen ", env!("CARGO_PKG_VERSION"));

/// Small line writer with two-space indentation.
struct Out {
    buf: String,
    depth: usize,
}

impl Out {
    fn new(spec: &str) -> Self {
        let mut o = Out {
            buf: String::new(),
            depth: 0,
        };
        o.line("/*");
        o.line(&format!(" * {spec} smart contract."));
        o.line(&format!(" * Generated by {GENERATOR} from specification `{spec}`."));
        o.line(" * Regenerate from the specification instead of editing by hand.");
        o.line(" */");
        o.line("'use strict';");
        o.blank();
        o
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
        self.buf.push_str(s);
        self.buf.push('\n');
    }

    fn blank(&mut self) {
        self.buf.push('\n');
    }

    fn open(&mut self, s: &str) {
        self.line(s);
        self.depth += 1;
    }

    fn close(&mut self, s: &str) {
        self.depth -= 1;
        self.line(s);
    }
}

/// Single-quoted JavaScript string literal.
fn quote(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn folder(c: Category) -> &'static str {
    match c {
        Category::Role => "roles",
        Category::Asset => "assets",
        Category::Event => "events",
    }
}

fn base_class(c: Category) -> &'static str {
    match c {
        Category::Role => "Role",
        Category::Asset => "Asset",
        Category::Event => "Event",
    }
}

pub fn decl_path(d: &DomainDecl) -> String {
    format!("{}/{}.js", folder(d.category), d.name)
}

fn decl_file(spec: &SymboleoSpec, d: &DomainDecl) -> String {
    let name = d.name.as_str();
    let base = base_class(d.category);
    let mut o = Out::new(spec.name.as_str());
    o.line(&format!("const {{ {base} }} = require('../lib/symboleo.js');"));
    o.blank();
    o.open(&format!("class {name} extends {base} {{"));
    o.open("constructor(name) {");
    o.line(&format!("super(name, {});", quote(name)));
    for a in &d.attributes {
        o.line(&format!("this.{} = undefined;", a.name));
    }
    o.close("}");
    o.blank();
    o.open("static get attributeKinds() {");
    if d.attributes.is_empty() {
        o.line("return {};");
    } else {
        o.open("return {");
        for a in &d.attributes {
            o.line(&format!("{}: {},", a.name, quote(a.kind.keyword())));
        }
        o.close("};");
    }
    o.close("}");
    o.blank();
    o.open("static fromJSON(name, values) {");
    o.line(&format!("const instance = new {name}(name);"));
    o.line(&format!("instance.assign(values, {name}.attributeKinds);"));
    o.line("return instance;");
    o.close("}");
    o.close("}");
    o.blank();
    o.line(&format!("module.exports = {{ {name} }};"));
    o.buf
}

fn time(t: &Time) -> String {
    match t {
        Time::Date(d) => format!("P.date('{}')", d.format("%Y-%m-%d")),
        Time::Param(p) => format!("state.args.{p}"),
    }
}

fn value(v: &Value) -> String {
    match v {
        Value::Number(n) => lang::print_number(*n),
        Value::String(s) => quote(s),
        Value::Date(d) => format!("P.date('{}')", d.format("%Y-%m-%d")),
        Value::Param(p) => format!("state.args.{p}"),
    }
}

/// A proposition as a three-valued JavaScript expression.
fn prop(p: &Prop) -> String {
    match p {
        Prop::True => "P.TRUE".to_owned(),
        Prop::False => "P.FALSE".to_owned(),
        Prop::And { left, right } => format!("P.and({}, {})", prop(left), prop(right)),
        Prop::Or { left, right } => format!("P.or({}, {})", prop(left), prop(right)),
        Prop::Not { arg } => format!("P.not({})", prop(arg)),
        Prop::Happens { event } => format!("P.happens(state, '{event}')"),
        Prop::HappensBefore { event, time: t } => {
            format!("P.happensBefore(state, '{event}', {})", time(t))
        }
        Prop::HappensAfter { event, time: t } => {
            format!("P.happensAfter(state, '{event}', {})", time(t))
        }
        Prop::HappensWithin { event, window } => match window {
            Window::Absolute { start, end } => format!(
                "P.happensWithin(state, '{event}', {}, {})",
                time(start),
                time(end)
            ),
            Window::Relative { anchor, magnitude, unit } => format!(
                "P.happensWithinOf(state, '{event}', '{anchor}', {magnitude}, '{}')",
                unit.plural()
            ),
        },
        Prop::Violated { obligation } => format!("P.violated(state, '{obligation}')"),
        Prop::Fulfilled { obligation } => format!("P.fulfilled(state, '{obligation}')"),
        Prop::Compare { event, attribute, cmp, value: v } => format!(
            "P.compare(state, '{event}', '{attribute}', '{}', {})",
            cmp.symbol(),
            value(v)
        ),
    }
}

fn method(o: &mut Out, name: &str, body: &str) {
    o.open(&format!("{name}(state) {{"));
    o.line(&format!("return {body};"));
    o.close("}");
    o.blank();
}

/// Standard load / settle / save tail of a transaction.
fn commit(o: &mut Out) {
    o.line("this.settle(state);");
    o.line("await lib.save(ctx, state);");
    o.line("return lib.report(state);");
}

fn contract_file(spec: &SymboleoSpec, m: &manifest::Manifest) -> String {
    let name = spec.name.as_str();
    let mut o = Out::new(name);
    o.line("const { Contract } = require('fabric-contract-api');");
    o.line("const lib = require('./lib/symboleo.js');");
    for d in &spec.domain {
        o.line(&format!("const {{ {} }} = require('./{}');", d.name, decl_path(d)));
    }
    o.blank();
    o.line("const P = lib.predicates;");
    o.blank();
    o.open("const PARAMETERS = {");
    for p in &spec.parameters {
        let ty = match &p.ty {
            ParamType::Role(r) => r.name.clone(),
            ParamType::Kind(k) => k.keyword().to_owned(),
        };
        o.line(&format!("{}: {},", p.name, quote(&ty)));
    }
    o.close("};");
    o.blank();

    o.open(&format!("class {name} extends Contract {{"));
    o.open("constructor() {");
    o.line(&format!("super({});", quote(name)));
    o.close("}");
    o.blank();

    o.open("async init(ctx, argsJson, at) {");
    o.line("const args = lib.checkParameters(PARAMETERS, JSON.parse(argsJson));");
    o.line(&format!("const state = lib.newState({}, args, at);", quote(name)));
    for p in spec.parties() {
        let arg = match spec.parameter(p.name) {
            Some(_) => format!("args.{}", p.name),
            None => quote(p.name),
        };
        let line = match spec.decl(p.role) {
            Some(_) => format!("state.parties.{} = new {}({arg});", p.name, p.role),
            None => format!("state.parties.{} = new lib.Role({arg}, 'Party');", p.name),
        };
        o.line(&line);
    }
    for b in &spec.bindings {
        if spec.binding_category(b.name.as_str()) != Some(Category::Asset) {
            continue;
        }
        o.line(&format!("state.assets.{0} = new {1}('{0}');", b.name, b.ty));
        for a in &b.assignments {
            o.line(&format!(
                "state.assets.{}.{} = {};",
                b.name,
                a.attr,
                value(&manifest::value(&a.value))
            ));
        }
    }
    for ob in &m.obligations {
        if ob.imposed_by.is_none() {
            o.line(&format!(
                "state.obligations.{0} = lib.obligation('{0}', '{1}', '{2}');",
                ob.id, ob.debtor, ob.creditor
            ));
        }
    }
    for p in &m.powers {
        o.line(&format!(
            "state.powers.{0} = lib.power('{0}', '{1}', '{2}');",
            p.id, p.holder, p.counterparty
        ));
    }
    for c in &m.constraints {
        o.line(&format!("lib.constraint(state, '{}', '{}');", c.first, c.then));
    }
    commit(&mut o);
    o.close("}");
    o.blank();

    for e in &m.events {
        o.open(&format!("async {}(ctx, valuesJson, at) {{", e.id));
        o.line("const state = await lib.load(ctx);");
        o.line("lib.advance(state, at);");
        o.line(&format!(
            "const event = {}.fromJSON('{}', JSON.parse(valuesJson));",
            e.type_name, e.id
        ));
        o.line(&format!("lib.record(state, '{}', event, at);", e.id));
        commit(&mut o);
        o.close("}");
        o.blank();
    }

    o.open("async tick(ctx, at) {");
    o.line("const state = await lib.load(ctx);");
    o.line("lib.advance(state, at);");
    commit(&mut o);
    o.close("}");
    o.blank();

    for ob in &m.obligations {
        o.line(&format!("// {}: {} owes {}", ob.id, ob.debtor, ob.creditor));
        method(&mut o, &format!("{}_trigger", ob.id), &prop(&ob.trigger));
        method(&mut o, &format!("{}_consequent", ob.id), &prop(&ob.consequent));
    }

    for p in &m.powers {
        o.line(&format!("// {}: held by {} against {}", p.id, p.holder, p.counterparty));
        method(&mut o, &format!("{}_trigger", p.id), &prop(&p.trigger));
        o.open(&format!("async exert_{}(ctx, at) {{", p.id));
        o.line("const state = await lib.load(ctx);");
        o.line("lib.advance(state, at);");
        o.line(&format!("lib.requirePower(state, '{}');", p.id));
        o.line(&format!("lib.exerted(state, '{}');", p.id));
        match &p.action {
            Action::Suspend { obligations } => {
                for ob in obligations {
                    o.line(&format!("lib.suspend(state, '{ob}');"));
                }
            }
            Action::Resume { obligations } => {
                for ob in obligations {
                    o.line(&format!("lib.resume(state, '{ob}');"));
                }
            }
            Action::Terminate => o.line("lib.terminate(state);"),
            Action::Impose { obligation } => {
                let ob = m.obligations.iter().find(|x| &x.id == obligation).unwrap();
                o.line(&format!(
                    "lib.impose(state, lib.obligation('{}', '{}', '{}'));",
                    ob.id, ob.debtor, ob.creditor
                ));
            }
        }
        commit(&mut o);
        o.close("}");
        o.blank();
    }

    o.open("settle(state) {");
    o.open("lib.settle(state, {");
    o.open("obligations: {");
    for ob in &m.obligations {
        o.line(&format!(
            "{0}: [(s) => this.{0}_trigger(s), (s) => this.{0}_consequent(s)],",
            ob.id
        ));
    }
    o.close("},");
    o.open("powers: {");
    for p in &m.powers {
        o.line(&format!("{0}: (s) => this.{0}_trigger(s),", p.id));
    }
    o.close("},");
    o.close("});");
    o.close("}");
    o.close("}");
    o.blank();
    o.line(&format!("module.exports = {{ {name} }};"));
    o.buf
}

fn router_file(spec: &SymboleoSpec, m: &manifest::Manifest) -> String {
    let name = spec.name.as_str();
    let mut o = Out::new(name);
    let case = |o: &mut Out, label: &str, body: &str| {
        o.line(&format!("case {label}:"));
        o.depth += 1;
        o.line(body);
        o.depth -= 1;
    };
    o.line(&format!("const {{ {name} }} = require('./contract.js');"));
    o.blank();
    o.open("async function route(contract, ctx, request) {");
    o.line("const at = request.at;");
    o.open("switch (request.op) {");
    case(
        &mut o,
        "'event'",
        "return routeEvent(contract, ctx, request.event, JSON.stringify(request.attributes || {}), at);",
    );
    case(&mut o, "'tick'", "return contract.tick(ctx, at);");
    case(&mut o, "'exert'", "return routePower(contract, ctx, request.power, at);");
    o.line("default:");
    o.depth += 1;
    o.line("throw new Error(`unknown operation ${request.op}`);");
    o.depth -= 1;
    o.close("}");
    o.close("}");
    o.blank();

    o.open("async function routeEvent(contract, ctx, event, valuesJson, at) {");
    o.open("switch (event) {");
    for e in &m.events {
        case(&mut o, &quote(&e.id), &format!("return contract.{}(ctx, valuesJson, at);", e.id));
    }
    o.line("default:");
    o.depth += 1;
    o.line("throw new Error(`unknown event ${event}`);");
    o.depth -= 1;
    o.close("}");
    o.close("}");
    o.blank();

    o.open("async function routePower(contract, ctx, power, at) {");
    o.open("switch (power) {");
    for p in &m.powers {
        case(&mut o, &quote(&p.id), &format!("return contract.exert_{}(ctx, at);", p.id));
    }
    o.line("default:");
    o.depth += 1;
    o.line("throw new Error(`unknown power ${power}`);");
    o.depth -= 1;
    o.close("}");
    o.close("}");
    o.blank();
    o.line(&format!("module.exports = {{ route, {name} }};"));
    o.buf
}

/// All emitted files, keyed by bundle-relative path.
pub fn emit(spec: &SymboleoSpec, m: &manifest::Manifest) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    for d in &spec.domain {
        files.insert(decl_path(d), decl_file(spec, d));
    }
    files.insert("contract.js".to_owned(), contract_file(spec, m));
    files.insert("router.js".to_owned(), router_file(spec, m));
    let mut json = serde_json::to_string_pretty(m).expect("manifest serialises");
    json.push('\n');
    files.insert("manifest.json".to_owned(), json);
    files
}
