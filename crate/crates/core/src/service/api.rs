use super::ops;
use super::store::{Provenance, Workspace};
use crate::cnl;
use crate::codegen;
use crate::diagnostic::{codes, Diagnostic};
use crate::lang::SymboleoSpec;
use crate::runtime::{self, ScenarioOp};
use crate::template::{self, ContractTemplate};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

type JsonMap = serde_json::Map<String, Value>;

#[derive(Clone)]
pub struct AppState {
    pub workspace: Arc<Workspace>,
    pub ui_dir: Option<PathBuf>,
}

/// Error body: the first error's code and message plus every diagnostic.
#[derive(Debug)]
pub struct ApiError(pub Vec<Diagnostic>);

impl From<Diagnostic> for ApiError {
    fn from(d: Diagnostic) -> Self {
        ApiError(vec![d])
    }
}

impl From<Vec<Diagnostic>> for ApiError {
    fn from(d: Vec<Diagnostic>) -> Self {
        ApiError(d)
    }
}

pub fn status_for(code: &str) -> StatusCode {
    match code {
        codes::NOT_FOUND => StatusCode::NOT_FOUND,
        codes::SLOT_ALREADY_REFINED
        | codes::DUPLICATE_REFINEMENT
        | codes::POWER_NOT_IN_EFFECT
        | codes::TIME_REGRESSION => StatusCode::CONFLICT,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let first = self
            .0
            .iter()
            .find(|d| d.is_error())
            .or(self.0.first())
            .cloned()
            .unwrap_or_else(|| Diagnostic::unlocated(codes::BAD_REQUEST, "request failed"));
        let body = json!({
            "error": {"code": first.code, "message": first.message},
            "diagnostics": self.0,
        });
        (status_for(&first.code), Json(body)).into_response()
    }
}

type ApiResult<T = Json<Value>> = Result<T, ApiError>;

fn bad_request(msg: impl Into<String>) -> ApiError {
    Diagnostic::unlocated(codes::BAD_REQUEST, msg).into()
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| bad_request(format!("invalid request body: {e}")))
}

fn merge(a: impl Serialize, extra: Value) -> Json<Value> {
    let mut v = serde_json::to_value(a).expect("serializable");
    if let (Some(m), Value::Object(e)) = (v.as_object_mut(), extra) {
        m.extend(e);
    }
    Json(v)
}

fn time(s: &str) -> ApiResult<chrono::NaiveDateTime> {
    runtime::parse_time(s).ok_or_else(|| bad_request(format!("invalid timestamp `{s}`")))
}

pub fn router(state: AppState) -> Router {
    let v1 = Router::new()
        .route("/health", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/parse", post(parse))
        .route("/validate", post(validate))
        .route("/complete", post(complete))
        .route("/specs/{id}", get(get_spec))
        .route("/specs/{id}/generate", post(generate))
        .route("/templates", get(list_templates).post(create_template))
        .route("/templates/{id}", get(get_template))
        .route("/pairs", post(create_pair))
        .route("/pairs/{id}", get(get_pair))
        .route("/pairs/{id}/slots/{slot}/options", get(slot_options))
        .route("/pairs/{id}/refinements", post(refine))
        .route("/bundles/{id}", get(get_bundle))
        .route("/bundles/{id}/archive", get(bundle_archive))
        .route("/instances", post(create_instance))
        .route("/instances/{id}/events", post(submit_event))
        .route("/instances/{id}/ticks", post(tick))
        .route("/instances/{id}/powers/{power}/exert", post(exert))
        .route("/instances/{id}/status", get(status))
        .route("/report", post(report));
    Router::new()
        .nest("/v1", v1)
        .route("/ui", get(ui_index))
        .route("/ui/", get(ui_index))
        .route("/ui/{*path}", get(ui_file))
        .with_state(state)
}

#[derive(Deserialize)]
struct SourceReq {
    source: Option<String>,
    spec_id: Option<String>,
}

impl SourceReq {
    fn text(&self, ws: &Workspace) -> ApiResult<String> {
        match (&self.source, &self.spec_id) {
            (Some(s), _) => Ok(s.clone()),
            (None, Some(id)) => Ok(ws.spec(id)?.source),
            (None, None) => Err(bad_request("expected `source` or `spec_id`")),
        }
    }
}

async fn parse(State(st): State<AppState>, b: Bytes) -> ApiResult {
    let req: SourceReq = body(&b)?;
    let (spec, outcome) = ops::parse(&req.text(&st.workspace)?);
    let spec_id = match spec {
        Some(s) => Some(st.workspace.add_spec(&s, None)?.id),
        None => None,
    };
    Ok(merge(outcome, json!({"spec_id": spec_id})))
}

async fn validate(State(st): State<AppState>, b: Bytes) -> ApiResult {
    let req: SourceReq = body(&b)?;
    Ok(merge(ops::validate(&req.text(&st.workspace)?), json!({})))
}

#[derive(Deserialize)]
struct CompleteReq {
    source: String,
    line: u32,
    col: u32,
}

async fn complete(b: Bytes) -> ApiResult {
    let req: CompleteReq = body(&b)?;
    Ok(merge(ops::complete(&req.source, req.line, req.col), json!({})))
}

async fn get_spec(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    Ok(merge(st.workspace.spec(&id)?, json!({})))
}

async fn generate(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let spec = st.workspace.spec_ast(&id)?;
    let (bundle, outcome) = ops::generate(&spec);
    let rec = st.workspace.add_bundle(&id, &bundle)?;
    Ok(merge(outcome, json!({"bundle_id": rec.id, "spec_id": id})))
}

async fn list_templates(State(st): State<AppState>) -> Json<Value> {
    Json(json!({"templates": st.workspace.templates()}))
}

async fn create_template(State(st): State<AppState>, b: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let text = std::str::from_utf8(&b).map_err(|_| bad_request("body is not UTF-8"))?;
    let template = ContractTemplate::from_json(text)?;
    let rec = st.workspace.add_template(template)?;
    Ok((StatusCode::OK, merge(rec, json!({}))))
}

async fn get_template(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    Ok(merge(st.workspace.template(&id)?, json!({})))
}

#[derive(Deserialize)]
struct PairReq {
    template_id: String,
    spec_id: String,
    /// Defaults to mapping each template parameter to the same name.
    param_map: Option<BTreeMap<String, String>>,
}

fn pair_view(rec: &super::store::PairRecord) -> Json<Value> {
    merge(rec, json!({"refined_text": rec.pair.refined_text()}))
}

async fn create_pair(State(st): State<AppState>, b: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: PairReq = body(&b)?;
    let tpl = st.workspace.template(&req.template_id)?;
    let spec = st.workspace.spec_ast(&req.spec_id)?;
    let map = req
        .param_map
        .unwrap_or_else(|| template::identity_map(&tpl.template));
    let pair = template::bind(tpl.template, spec, map)?;
    let rec = st.workspace.add_pair(&req.template_id, &req.spec_id, pair)?;
    Ok((StatusCode::OK, pair_view(&rec)))
}

async fn get_pair(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    Ok(pair_view(&st.workspace.pair(&id)?))
}

async fn slot_options(State(st): State<AppState>, Path((id, slot)): Path<(String, String)>) -> ApiResult {
    let rec = st.workspace.pair(&id)?;
    Ok(merge(cnl::options(&rec.pair, &slot)?, json!({})))
}

#[derive(Deserialize)]
struct RefineReq {
    directive: Option<String>,
    slot: Option<String>,
    text: Option<String>,
}

/// Accepts a JSON object (`directive`, or `slot` + `text`), a JSON string,
/// or a bare `Pk: text` line.
fn directive(b: &Bytes) -> ApiResult<String> {
    let raw = std::str::from_utf8(b).map_err(|_| bad_request("body is not UTF-8"))?;
    match serde_json::from_str::<Value>(raw) {
        Ok(Value::String(s)) => Ok(s),
        Ok(v @ Value::Object(_)) => {
            let r: RefineReq =
                serde_json::from_value(v).map_err(|e| bad_request(format!("invalid request body: {e}")))?;
            match (r.directive, r.slot, r.text) {
                (Some(d), _, _) => Ok(d),
                (None, Some(s), Some(t)) => Ok(format!("{s}: {t}")),
                _ => Err(bad_request("expected `directive` or `slot` and `text`")),
            }
        }
        _ => Ok(raw.trim().to_owned()),
    }
}

async fn refine(
    State(st): State<AppState>,
    Path(id): Path<String>,
    b: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let line = directive(&b)?;
    let (result, pair, spec) = st.workspace.refine(&id, &line)?;
    Ok((
        StatusCode::OK,
        merge(
            result,
            json!({
                "pair_id": pair.id,
                "spec_id": spec.id,
                "derived_from": Provenance { pair: id, directive: line.trim().to_owned() },
            }),
        ),
    ))
}

async fn get_bundle(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let rec = st.workspace.bundle(&id)?;
    let loc: usize = rec.files.values().map(|t| crate::loc::loc(t)).sum();
    Ok(merge(rec, json!({"loc": loc})))
}

async fn bundle_archive(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let rec = st.workspace.bundle(&id)?;
    let bytes = codegen::zip_files(&rec.files).map_err(|e| bad_request(e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/zip".to_owned()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{id}.zip\"")),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Deserialize)]
struct InstanceReq {
    spec_id: String,
    #[serde(default)]
    params: JsonMap,
    start: String,
}

async fn create_instance(State(st): State<AppState>, b: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: InstanceReq = body(&b)?;
    let start = time(&req.start)?;
    let handle = st.workspace.add_instance(&req.spec_id, req.params, start)?;
    let live = handle.lock().unwrap();
    Ok((
        StatusCode::OK,
        Json(json!({
            "instance_id": live.record.id,
            "opening": live.instance.opening(),
            "status": live.instance.status(),
        })),
    ))
}

#[derive(Deserialize)]
struct EventReq {
    event: String,
    at: String,
    #[serde(default)]
    attributes: JsonMap,
}

async fn submit_event(State(st): State<AppState>, Path(id): Path<String>, b: Bytes) -> ApiResult {
    let req: EventReq = body(&b)?;
    let op = ScenarioOp::Event {
        event: req.event,
        at: time(&req.at)?,
        attributes: req.attributes,
    };
    Ok(merge(st.workspace.instance_op(&id, op)?, json!({})))
}

#[derive(Deserialize)]
struct TickReq {
    at: String,
}

async fn tick(State(st): State<AppState>, Path(id): Path<String>, b: Bytes) -> ApiResult {
    let req: TickReq = body(&b)?;
    let op = ScenarioOp::Tick { at: time(&req.at)? };
    Ok(merge(st.workspace.instance_op(&id, op)?, json!({})))
}

async fn exert(State(st): State<AppState>, Path((id, power)): Path<(String, String)>) -> ApiResult {
    let op = ScenarioOp::Exert { power };
    Ok(merge(st.workspace.instance_op(&id, op)?, json!({})))
}

async fn status(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let handle = st.workspace.instance(&id)?;
    let live = handle.lock().unwrap();
    Ok(merge(live.instance.status(), json!({"instance_id": id})))
}

#[derive(Deserialize)]
struct ReportEntry {
    label: String,
    #[serde(flatten)]
    spec: SourceReq,
}

#[derive(Deserialize)]
struct ReportReq {
    base: SourceReq,
    refined: Vec<ReportEntry>,
}

fn resolve_spec(ws: &Workspace, r: &SourceReq) -> ApiResult<SymboleoSpec> {
    let text = r.text(ws)?;
    let (spec, mut diags) = crate::lang::check(&text);
    spec.ok_or_else(|| {
        diags.insert(0, Diagnostic::unlocated(codes::INVALID_SPEC, "report requires valid specifications"));
        ApiError(diags)
    })
}

async fn report(State(st): State<AppState>, b: Bytes) -> ApiResult {
    let req: ReportReq = body(&b)?;
    let base = resolve_spec(&st.workspace, &req.base)?;
    let refined = req
        .refined
        .iter()
        .map(|e| Ok((e.label.clone(), resolve_spec(&st.workspace, &e.spec)?)))
        .collect::<ApiResult<Vec<_>>>()?;
    Ok(merge(ops::report(&base, &refined), json!({})))
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

async fn serve_static(st: &AppState, rel: &str) -> Response {
    let Some(root) = &st.ui_dir else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let safe = rel
        .split('/')
        .all(|c| !c.is_empty() && c != "." && c != ".." && !c.contains('\\'));
    if !safe {
        return StatusCode::NOT_FOUND.into_response();
    }
    let path = root.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn ui_index(State(st): State<AppState>) -> Response {
    serve_static(&st, "index.html").await
}

async fn ui_file(State(st): State<AppState>, Path(path): Path<String>) -> Response {
    serve_static(&st, &path).await
}
