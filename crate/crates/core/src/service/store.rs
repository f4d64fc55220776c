//! Artifact store. Every artifact gets a sequential id and is written as one
//! JSON file under the data directory when one is configured.
//!
//! Derived artifacts (refined specs and pairs, bundles) record their inputs
//! and are also appended to `history.jsonl`. Opening a store replays any
//! history entry whose outputs are missing, so derived files can be deleted
//! and regenerated byte for byte.

use crate::cnl;
use crate::codegen;
use crate::diagnostic::{codes, Diagnostic};
use crate::lang::{self, SymboleoSpec};
use crate::runtime::{self, ContractInstance, ScenarioOp};
use crate::template::{ContractTemplate, TemplatePair};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

type JsonMap = serde_json::Map<String, serde_json::Value>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Pair the refinement was applied to.
    pub pair: String,
    pub directive: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub id: String,
    pub name: String,
    /// Canonical text.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<Provenance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateRecord {
    pub id: String,
    pub template: ContractTemplate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub template_id: String,
    pub spec_id: String,
    pub pair: TemplatePair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<Provenance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleRecord {
    pub id: String,
    pub spec_id: String,
    pub generator: String,
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub spec_id: String,
    pub params: JsonMap,
    #[serde(with = "crate::runtime::minute_serde")]
    pub start: chrono::NaiveDateTime,
    /// Accepted operations, in order; replaying them rebuilds the instance.
    pub ops: Vec<ScenarioOp>,
}

pub struct LiveInstance {
    pub record: InstanceRecord,
    pub instance: ContractInstance,
}

/// One derivation, with the ids it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum HistoryEntry {
    Refine {
        pair: String,
        directive: String,
        spec_id: String,
        pair_id: String,
    },
    Generate {
        spec: String,
        bundle_id: String,
    },
}

const HISTORY: &str = "history.jsonl";

#[derive(Default)]
struct Tables {
    counters: BTreeMap<&'static str, u64>,
    specs: BTreeMap<String, SpecRecord>,
    templates: BTreeMap<String, TemplateRecord>,
    pairs: BTreeMap<String, PairRecord>,
    bundles: BTreeMap<String, BundleRecord>,
    instances: BTreeMap<String, Arc<Mutex<LiveInstance>>>,
}

pub const KINDS: [&str; 5] = ["specs", "templates", "pairs", "bundles", "instances"];

pub struct Workspace {
    dir: Option<PathBuf>,
    tables: RwLock<Tables>,
}

fn not_found(kind: &str, id: &str) -> Diagnostic {
    Diagnostic::unlocated(codes::NOT_FOUND, format!("no {kind} with id `{id}`"))
}

fn io_error(e: impl std::fmt::Display) -> Diagnostic {
    Diagnostic::unlocated(codes::BAD_REQUEST, format!("store: {e}"))
}

fn prefix(kind: &str) -> &'static str {
    match kind {
        "specs" => "spec",
        "templates" => "tpl",
        "pairs" => "pair",
        "bundles" => "bundle",
        _ => "inst",
    }
}

fn sequence(id: &str) -> u64 {
    id.rsplit('-').next().and_then(|n| n.parse().ok()).unwrap_or(0)
}

impl Workspace {
    pub fn in_memory() -> Self {
        Workspace {
            dir: None,
            tables: RwLock::new(Tables::default()),
        }
    }

    /// Opens (and loads) a file-backed store.
    pub fn open(dir: &Path) -> Result<Self, Diagnostic> {
        for kind in KINDS {
            std::fs::create_dir_all(dir.join(kind)).map_err(io_error)?;
        }
        let ws = Workspace {
            dir: Some(dir.to_owned()),
            tables: RwLock::new(Tables::default()),
        };
        {
            let mut t = ws.tables.write().unwrap();
            for r in load::<SpecRecord>(dir, "specs")? {
                t.specs.insert(r.id.clone(), r);
            }
            for r in load::<TemplateRecord>(dir, "templates")? {
                t.templates.insert(r.id.clone(), r);
            }
            for r in load::<PairRecord>(dir, "pairs")? {
                t.pairs.insert(r.id.clone(), r);
            }
            for r in load::<BundleRecord>(dir, "bundles")? {
                t.bundles.insert(r.id.clone(), r);
            }
        }
        let history = match std::fs::read_to_string(dir.join(HISTORY)) {
            Ok(text) => text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).map_err(|e| io_error(format!("{HISTORY}: {e}"))))
                .collect::<Result<Vec<HistoryEntry>, _>>()?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_error(e)),
        };
        for entry in history {
            ws.replay(entry)?;
        }
        {
            let mut t = ws.tables.write().unwrap();
            for r in load::<InstanceRecord>(dir, "instances")? {
                let spec = t
                    .specs
                    .get(&r.spec_id)
                    .ok_or_else(|| not_found("spec", &r.spec_id))?;
                let live = rebuild(spec, r).map_err(|d| d.into_iter().next().unwrap())?;
                t.instances
                    .insert(live.record.id.clone(), Arc::new(Mutex::new(live)));
            }
            let max = |ids: Vec<&String>| ids.into_iter().map(|i| sequence(i)).max().unwrap_or(0);
            let counters = [
                ("specs", max(t.specs.keys().collect())),
                ("templates", max(t.templates.keys().collect())),
                ("pairs", max(t.pairs.keys().collect())),
                ("bundles", max(t.bundles.keys().collect())),
                ("instances", max(t.instances.keys().collect())),
            ];
            t.counters.extend(counters);
        }
        Ok(ws)
    }

    /// Recomputes a derivation whose outputs are missing.
    fn replay(&self, entry: HistoryEntry) -> Result<(), Diagnostic> {
        let failed = |id: &str| {
            Diagnostic::unlocated(codes::BAD_REQUEST, format!("store: cannot replay derivation of `{id}`"))
        };
        match entry {
            HistoryEntry::Refine { pair, directive, spec_id, pair_id } => {
                let t = self.tables.read().unwrap();
                if t.specs.contains_key(&spec_id) && t.pairs.contains_key(&pair_id) {
                    return Ok(());
                }
                drop(t);
                let base = self.pair(&pair)?;
                let result = cnl::apply_directive(&base.pair, &directive).map_err(|_| failed(&spec_id))?;
                let prov = Provenance { pair, directive };
                self.put_spec(&spec_id, &result.pair.spec, Some(prov.clone()))?;
                self.put_pair(&pair_id, &base.template_id, &spec_id, result.pair, Some(prov))?;
            }
            HistoryEntry::Generate { spec, bundle_id } => {
                if self.tables.read().unwrap().bundles.contains_key(&bundle_id) {
                    return Ok(());
                }
                let ast = self.spec_ast(&spec)?;
                self.put_bundle(&bundle_id, &spec, &codegen::generate(&ast))?;
            }
        }
        Ok(())
    }

    fn log(&self, entry: &HistoryEntry) -> Result<(), Diagnostic> {
        use std::io::Write;
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(HISTORY))
            .map_err(io_error)?;
        let line = serde_json::to_string(entry).map_err(io_error)?;
        writeln!(f, "{line}").map_err(io_error)
    }

    fn next_id(&self, t: &mut Tables, kind: &'static str) -> String {
        let n = t.counters.entry(kind).or_insert(0);
        *n += 1;
        format!("{}-{}", prefix(kind), n)
    }

    fn persist<T: Serialize>(&self, kind: &str, id: &str, value: &T) -> Result<(), Diagnostic> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(kind).join(format!("{id}.json"));
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(value).map_err(io_error)?;
        std::fs::write(&tmp, text).map_err(io_error)?;
        std::fs::rename(&tmp, &path).map_err(io_error)
    }

    pub fn add_spec(&self, spec: &SymboleoSpec, derived_from: Option<Provenance>) -> Result<SpecRecord, Diagnostic> {
        let id = self.next_id(&mut self.tables.write().unwrap(), "specs");
        self.put_spec(&id, spec, derived_from)
    }

    fn put_spec(&self, id: &str, spec: &SymboleoSpec, derived_from: Option<Provenance>) -> Result<SpecRecord, Diagnostic> {
        let rec = SpecRecord {
            id: id.to_owned(),
            name: spec.name.name.clone(),
            source: lang::print(spec),
            derived_from,
        };
        self.persist("specs", &rec.id, &rec)?;
        self.tables.write().unwrap().specs.insert(rec.id.clone(), rec.clone());
        Ok(rec)
    }

    pub fn spec(&self, id: &str) -> Result<SpecRecord, Diagnostic> {
        let t = self.tables.read().unwrap();
        t.specs.get(id).cloned().ok_or_else(|| not_found("spec", id))
    }

    /// Parsed form of a stored spec.
    pub fn spec_ast(&self, id: &str) -> Result<SymboleoSpec, Diagnostic> {
        let rec = self.spec(id)?;
        lang::check(&rec.source)
            .0
            .ok_or_else(|| Diagnostic::unlocated(codes::INVALID_SPEC, format!("stored spec `{id}` is invalid")))
    }

    pub fn add_template(&self, template: ContractTemplate) -> Result<TemplateRecord, Diagnostic> {
        let mut t = self.tables.write().unwrap();
        let rec = TemplateRecord {
            id: self.next_id(&mut t, "templates"),
            template,
        };
        self.persist("templates", &rec.id, &rec)?;
        t.templates.insert(rec.id.clone(), rec.clone());
        Ok(rec)
    }

    pub fn template(&self, id: &str) -> Result<TemplateRecord, Diagnostic> {
        let t = self.tables.read().unwrap();
        t.templates.get(id).cloned().ok_or_else(|| not_found("template", id))
    }

    pub fn templates(&self) -> Vec<TemplateRecord> {
        self.tables.read().unwrap().templates.values().cloned().collect()
    }

    pub fn add_pair(&self, template_id: &str, spec_id: &str, pair: TemplatePair) -> Result<PairRecord, Diagnostic> {
        let id = self.next_id(&mut self.tables.write().unwrap(), "pairs");
        self.put_pair(&id, template_id, spec_id, pair, None)
    }

    fn put_pair(
        &self,
        id: &str,
        template_id: &str,
        spec_id: &str,
        pair: TemplatePair,
        derived_from: Option<Provenance>,
    ) -> Result<PairRecord, Diagnostic> {
        let rec = PairRecord {
            id: id.to_owned(),
            template_id: template_id.to_owned(),
            spec_id: spec_id.to_owned(),
            pair,
            derived_from,
        };
        self.persist("pairs", &rec.id, &rec)?;
        self.tables.write().unwrap().pairs.insert(rec.id.clone(), rec.clone());
        Ok(rec)
    }

    pub fn pair(&self, id: &str) -> Result<PairRecord, Diagnostic> {
        let t = self.tables.read().unwrap();
        t.pairs.get(id).cloned().ok_or_else(|| not_found("pair", id))
    }

    /// Applies a refinement directive to a stored pair, storing the refined
    /// spec and the refined pair.
    pub fn refine(
        &self,
        pair_id: &str,
        directive: &str,
    ) -> Result<(cnl::RefinementResult, PairRecord, SpecRecord), Vec<Diagnostic>> {
        let base = self.pair(pair_id).map_err(|d| vec![d])?;
        let result = cnl::apply_directive(&base.pair, directive)?;
        let prov = Provenance {
            pair: pair_id.to_owned(),
            directive: directive.trim().to_owned(),
        };
        let (spec_id, new_pair_id) = {
            let mut t = self.tables.write().unwrap();
            (self.next_id(&mut t, "specs"), self.next_id(&mut t, "pairs"))
        };
        let stored = (|| {
            let spec = self.put_spec(&spec_id, &result.pair.spec, Some(prov.clone()))?;
            let pair = self.put_pair(&new_pair_id, &base.template_id, &spec_id, result.pair.clone(), Some(prov.clone()))?;
            self.log(&HistoryEntry::Refine {
                pair: prov.pair,
                directive: prov.directive,
                spec_id,
                pair_id: new_pair_id,
            })?;
            Ok((pair, spec))
        })()
        .map_err(|d| vec![d])?;
        Ok((result, stored.0, stored.1))
    }

    pub fn add_bundle(&self, spec_id: &str, bundle: &codegen::Bundle) -> Result<BundleRecord, Diagnostic> {
        let id = self.next_id(&mut self.tables.write().unwrap(), "bundles");
        let rec = self.put_bundle(&id, spec_id, bundle)?;
        self.log(&HistoryEntry::Generate {
            spec: spec_id.to_owned(),
            bundle_id: id,
        })?;
        Ok(rec)
    }

    fn put_bundle(&self, id: &str, spec_id: &str, bundle: &codegen::Bundle) -> Result<BundleRecord, Diagnostic> {
        let rec = BundleRecord {
            id: id.to_owned(),
            spec_id: spec_id.to_owned(),
            generator: bundle.generator.clone(),
            files: bundle.files.clone(),
        };
        self.persist("bundles", &rec.id, &rec)?;
        self.tables.write().unwrap().bundles.insert(rec.id.clone(), rec.clone());
        Ok(rec)
    }

    pub fn bundle(&self, id: &str) -> Result<BundleRecord, Diagnostic> {
        let t = self.tables.read().unwrap();
        t.bundles.get(id).cloned().ok_or_else(|| not_found("bundle", id))
    }

    pub fn add_instance(
        &self,
        spec_id: &str,
        params: JsonMap,
        start: chrono::NaiveDateTime,
    ) -> Result<Arc<Mutex<LiveInstance>>, Vec<Diagnostic>> {
        let spec = self.spec(spec_id).map_err(|d| vec![d])?;
        let mut t = self.tables.write().unwrap();
        let record = InstanceRecord {
            id: format!("{}-{}", prefix("instances"), t.counters.get("instances").copied().unwrap_or(0) + 1),
            spec_id: spec_id.to_owned(),
            params,
            start,
            ops: Vec::new(),
        };
        let live = rebuild(&spec, record)?;
        self.next_id(&mut t, "instances");
        self.persist("instances", &live.record.id, &live.record)
            .map_err(|d| vec![d])?;
        let id = live.record.id.clone();
        let handle = Arc::new(Mutex::new(live));
        t.instances.insert(id, Arc::clone(&handle));
        Ok(handle)
    }

    pub fn instance(&self, id: &str) -> Result<Arc<Mutex<LiveInstance>>, Diagnostic> {
        let t = self.tables.read().unwrap();
        t.instances
            .get(id)
            .cloned()
            .ok_or_else(|| not_found("instance", id))
    }

    /// Applies an operation to an instance and records it when accepted.
    pub fn instance_op(
        &self,
        id: &str,
        op: ScenarioOp,
    ) -> Result<runtime::TransitionReport, Vec<Diagnostic>> {
        let handle = self.instance(id).map_err(|d| vec![d])?;
        let mut live = handle.lock().unwrap();
        let report = runtime::apply_op(&mut live.instance, &op)?;
        live.record.ops.push(op);
        self.persist("instances", id, &live.record)
            .map_err(|d| vec![d])?;
        Ok(report)
    }

    /// Recomputes every derived spec, pair and bundle from its recorded
    /// inputs and lists the ids whose stored form differs.
    pub fn verify_derived(&self) -> Vec<String> {
        let t = self.tables.read().unwrap();
        let mut bad = Vec::new();
        for p in t.pairs.values() {
            let Some(prov) = &p.derived_from else { continue };
            let recomputed = t
                .pairs
                .get(&prov.pair)
                .and_then(|base| cnl::apply_directive(&base.pair, &prov.directive).ok());
            let spec_ok = t.specs.get(&p.spec_id).zip(recomputed.as_ref()).is_some_and(|(s, r)| {
                s.source == r.refined_spec && s.derived_from.as_ref() == Some(prov)
            });
            if !spec_ok || recomputed.map(|r| r.pair) != Some(p.pair.clone()) {
                bad.push(p.id.clone());
            }
        }
        for b in t.bundles.values() {
            let regenerated = t
                .specs
                .get(&b.spec_id)
                .and_then(|s| lang::check(&s.source).0)
                .map(|s| codegen::generate(&s).files);
            if regenerated.as_ref() != Some(&b.files) {
                bad.push(b.id.clone());
            }
        }
        bad
    }
}

fn rebuild(spec: &SpecRecord, record: InstanceRecord) -> Result<LiveInstance, Vec<Diagnostic>> {
    let ast = lang::check(&spec.source).0.ok_or_else(|| {
        vec![Diagnostic::unlocated(codes::INVALID_SPEC, format!("stored spec `{}` is invalid", spec.id))]
    })?;
    let mut instance = runtime::instantiate(&ast, &record.params, record.start)?;
    for op in &record.ops {
        runtime::apply_op(&mut instance, op)?;
    }
    Ok(LiveInstance { record, instance })
}

fn load<T: DeserializeOwned>(dir: &Path, kind: &str) -> Result<Vec<T>, Diagnostic> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.join(kind))
        .map_err(io_error)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(io_error)?;
            serde_json::from_str(&text).map_err(|e| io_error(format!("{}: {e}", p.display())))
        })
        .collect()
}
