//! What-if HTTP service under `/v1`.
//!
//! The service holds one document. Every snapshot (document + generated
//! table) is immutable; `/whatif` computes against the snapshot it read and
//! never changes state, so its response depends only on the revision and the
//! request. `/commit` is the only writer: it takes a lock, checks the
//! caller's revision, persists, and swaps in a new snapshot.
//!
//! Every response carries the revision it was computed from in the
//! [`REVISION_HEADER`] header.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use cptgen_core::{
    generate_cpt, modality_profile, prominent_modes, AnchorSet, Distribution, ElicitError,
    GenerationResult, NetworkSpec, ParentalConfiguration,
};
use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;

use crate::document::{subject_path, ElicitationDocument, Problem};
use crate::export::{export_cpt, Format};
use crate::verify::check_row;

pub const REVISION_HEADER: &str = "x-document-revision";

/// A row is flagged bimodal when a second mode reaches this fraction of the
/// tallest one.
pub const PROMINENCE: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorOverride {
    pub configuration: IndexMap<String, String>,
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    /// When present, must match the current revision.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<String>,
    /// Parent name → weight. Overridden weights are kept; the others are
    /// rescaled proportionally so the total is 1.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub weights: IndexMap<String, f64>,
    /// Whole-distribution replacements for elicited anchors.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchors: Vec<AnchorOverride>,
    /// Rows to return; all rows when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<IndexMap<String, String>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitRequest {
    pub revision: String,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub weights: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchors: Vec<AnchorOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullReport {
    pub member: bool,
    pub residual: f64,
    /// Blend weights over `anchors`.
    pub weights: Vec<f64>,
    /// Anchor configurations the row was blended from, one per parent.
    pub anchors: Vec<String>,
    /// max |Γ| of the mixture connection at the row.
    pub connection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowReport {
    pub index: usize,
    pub configuration: IndexMap<String, String>,
    pub label: String,
    pub distribution: Vec<f64>,
    pub modes: Vec<usize>,
    pub prominent_modes: Vec<usize>,
    pub bimodal: bool,
    pub hull: HullReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhatIfResponse {
    pub revision: String,
    pub weights: Vec<f64>,
    pub rows: Vec<RowReport>,
}

struct Snapshot {
    document: ElicitationDocument,
    result: GenerationResult,
}

impl Snapshot {
    fn new(document: ElicitationDocument) -> Result<Self, ApiError> {
        let result = generate_cpt(document.spec(), document.anchors())
            .map_err(|e| ApiError::invalid(vec![problem("", "generation", e.to_string())]))?;
        Ok(Self { document, result })
    }

    fn revision(&self) -> &str {
        self.document.revision()
    }
}

struct Shared {
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
    persist_to: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    /// `persist_to` receives the canonical document on every commit.
    pub fn new(document: ElicitationDocument, persist_to: Option<PathBuf>) -> Result<Self, String> {
        let snapshot = Snapshot::new(document).map_err(|e| {
            e.problems.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        })?;
        Ok(Self {
            shared: Arc::new(Shared {
                current: RwLock::new(Arc::new(snapshot)),
                writer: Mutex::new(()),
                persist_to,
            }),
        })
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.shared.current.read().expect("snapshot lock poisoned"))
    }

    pub fn revision(&self) -> String {
        self.snapshot().revision().to_string()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/spec", get(get_spec))
        .route("/v1/cpt", get(get_cpt))
        .route("/v1/whatif", post(post_whatif))
        .route("/v1/commit", post(post_commit))
        .with_state(state)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    problems: Vec<Problem>,
}

impl ApiError {
    fn invalid(problems: Vec<Problem>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "invalid_request",
            message: "request failed validation".into(),
            problems,
        }
    }

    fn bad_request(message: String, problems: Vec<Problem>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message,
            problems,
        }
    }

    fn into_response(self, revision: &str) -> Response {
        let body = json!({
            "error": self.code,
            "message": self.message,
            "revision": revision,
            "problems": self.problems,
        });
        with_revision(self.status, revision, axum::Json(body))
    }
}

fn problem(path: impl Into<String>, code: &str, message: impl Into<String>) -> Problem {
    Problem {
        path: path.into(),
        line: None,
        column: None,
        code: code.into(),
        message: message.into(),
    }
}

fn with_revision(status: StatusCode, revision: &str, body: impl IntoResponse) -> Response {
    let mut response = (status, body).into_response();
    if let Ok(value) = HeaderValue::from_str(revision) {
        response.headers_mut().insert(REVISION_HEADER, value);
    }
    response
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    let parsed: Result<T, _> = serde_path_to_error::deserialize(&mut de);
    match parsed.map_err(|e| (e.path().to_string(), e.into_inner())).and_then(|v| {
        de.end().map(|_| v).map_err(|e| (String::new(), e))
    }) {
        Ok(v) => Ok(v),
        Err((path, e)) => Err(ApiError::bad_request(
            "malformed request body".into(),
            vec![Problem {
                path: if path == "." { String::new() } else { path },
                line: Some(e.line()),
                column: Some(e.column()),
                code: "malformed".into(),
                message: e.to_string(),
            }],
        )),
    }
}

/// Applies weight overrides: overridden parents keep their values and the
/// rest share `1 − Σ overridden` in their current proportions. If nothing
/// is left to rescale, the whole vector is normalized.
pub fn effective_weights(spec: &NetworkSpec, overrides: &IndexMap<String, f64>) -> Result<Vec<f64>, Vec<Problem>> {
    let mut weights = spec.weights();
    let mut pinned = vec![false; weights.len()];
    let mut problems = Vec::new();
    for (name, &w) in overrides {
        let path = format!("weights.{name}");
        match spec.parent_index(name) {
            None => problems.push(problem(path, "unknown_parent", format!("unknown parent '{name}'"))),
            Some(_) if !w.is_finite() || !(0.0..=1.0).contains(&w) => {
                problems.push(problem(path, "weight_out_of_range", format!("weight {w} outside [0, 1]")))
            }
            Some(p) => {
                weights[p] = w;
                pinned[p] = true;
            }
        }
    }
    if !problems.is_empty() {
        return Err(problems);
    }
    if overrides.is_empty() {
        return Ok(weights);
    }

    let fixed: f64 = weights.iter().zip(&pinned).filter(|(_, &p)| p).map(|(w, _)| w).sum();
    let free: f64 = weights.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(w, _)| w).sum();
    if fixed > 1.0 + cptgen_core::SUM_TOLERANCE {
        return Err(vec![problem("weights", "weights_sum", format!("overridden weights sum to {fixed} > 1"))]);
    }
    if free > 0.0 {
        let scale = (1.0 - fixed) / free;
        for (w, &p) in weights.iter_mut().zip(&pinned) {
            if !p {
                *w *= scale;
            }
        }
    } else {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(vec![problem("weights", "weights_sum", "weights sum to 0")]);
        }
        if total != 1.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        }
    }
    Ok(weights)
}

struct Staged {
    spec: NetworkSpec,
    anchors: AnchorSet,
    /// Anchor overrides resolved against the document.
    replaced: Vec<(ParentalConfiguration, Distribution)>,
}

fn stage(
    document: &ElicitationDocument,
    weights: &IndexMap<String, f64>,
    overrides: &[AnchorOverride],
) -> Result<Staged, ApiError> {
    let effective = effective_weights(document.spec(), weights).map_err(ApiError::invalid)?;
    let spec = document.spec().with_weights(&effective).map_err(|report| {
        ApiError::invalid(
            report
                .violations
                .iter()
                .map(|v| problem(subject_path(v.subject), v.code.as_str(), v.message.clone()))
                .collect(),
        )
    })?;

    let mut anchors = document.anchors().clone();
    let mut replaced = Vec::new();
    let mut problems = Vec::new();
    for (i, o) in overrides.iter().enumerate() {
        let config = match document.configuration(&o.configuration) {
            Ok(c) => c,
            Err(message) => {
                problems.push(problem(format!("anchors[{i}].configuration"), "bad_configuration", message));
                continue;
            }
        };
        let dist = match Distribution::with_len(o.distribution.clone(), spec.child_arity()) {
            Ok(d) => d,
            Err(e) => {
                problems.push(problem(format!("anchors[{i}].distribution"), "bad_distribution", e.to_string()));
                continue;
            }
        };
        match anchors.with_anchor(&config, dist.clone()) {
            Ok(next) => {
                anchors = next;
                replaced.push((config, dist));
            }
            Err(ElicitError::UnusedAnchor(label)) => problems.push(problem(
                format!("anchors[{i}].configuration"),
                "unused_anchor",
                format!("{label} is not a compatible configuration"),
            )),
            Err(e) => problems.push(problem(format!("anchors[{i}]"), "bad_anchor", e.to_string())),
        }
    }
    if !problems.is_empty() {
        return Err(ApiError::invalid(problems));
    }
    Ok(Staged {
        spec,
        anchors,
        replaced,
    })
}

fn row_report(
    spec: &NetworkSpec,
    anchors: &AnchorSet,
    result: &GenerationResult,
    index: usize,
) -> Result<RowReport, ApiError> {
    let row = &result.cpt.rows()[index];
    let config = &cptgen_core::enumerate_configurations(spec)[index];
    let contributions = &result.per_row_anchors[index];
    let check = check_row(row, &result.row_anchor_distributions(anchors, index))
        .map_err(|e| ApiError::invalid(vec![problem("", "verification", e.to_string())]))?;
    let prominent = prominent_modes(row, PROMINENCE);
    Ok(RowReport {
        index,
        configuration: config
            .labels(spec)
            .map(|(p, s)| (p.to_string(), s.to_string()))
            .collect(),
        label: config.display(spec).to_string(),
        distribution: row.values().to_vec(),
        modes: modality_profile(row),
        bimodal: prominent.len() >= 2,
        prominent_modes: prominent,
        hull: HullReport {
            member: check.member,
            residual: check.residual,
            weights: check.certificate,
            anchors: contributions
                .iter()
                .map(|c| c.anchor.display(spec).to_string())
                .collect(),
            connection: check.connection,
        },
    })
}

/// The pure what-if computation behind `POST /v1/whatif`. `cached` is the
/// snapshot's table, reused when the request changes nothing.
fn compute_what_if(
    document: &ElicitationDocument,
    cached: Option<&GenerationResult>,
    request: &WhatIfRequest,
) -> Result<WhatIfResponse, ApiError> {
    let staged = stage(document, &request.weights, &request.anchors)?;
    let unchanged = request.weights.is_empty() && request.anchors.is_empty();
    let fresh;
    let result = match cached {
        Some(r) if unchanged => r,
        _ => {
            fresh = generate_cpt(&staged.spec, &staged.anchors)
                .map_err(|e| ApiError::invalid(vec![problem("", "generation", e.to_string())]))?;
            &fresh
        }
    };

    let indices: Vec<usize> = match &request.targets {
        None => (0..result.cpt.len()).collect(),
        Some(targets) => {
            let mut problems = Vec::new();
            let mut out = Vec::new();
            for (i, t) in targets.iter().enumerate() {
                match document.configuration(t) {
                    Ok(c) => out.push(c.rank(&staged.spec)),
                    Err(message) => problems.push(problem(format!("targets[{i}]"), "bad_configuration", message)),
                }
            }
            if !problems.is_empty() {
                return Err(ApiError::invalid(problems));
            }
            out
        }
    };

    let rows = indices
        .into_iter()
        .map(|i| row_report(&staged.spec, &staged.anchors, result, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WhatIfResponse {
        revision: document.revision().to_string(),
        weights: staged.spec.weights(),
        rows,
    })
}

async fn get_spec(State(state): State<AppState>) -> Response {
    let snap = state.snapshot();
    let body = json!({
        "revision": snap.revision(),
        "document": snap.document.to_value(),
    });
    with_revision(StatusCode::OK, snap.revision(), axum::Json(body))
}

#[derive(Debug, Deserialize)]
struct CptQuery {
    format: Option<String>,
}

async fn get_cpt(State(state): State<AppState>, Query(query): Query<CptQuery>) -> Response {
    let snap = state.snapshot();
    let format = match query.format.as_deref().unwrap_or("json").parse::<Format>() {
        Ok(f) => f,
        Err(message) => {
            return ApiError::bad_request(message.clone(), vec![problem("format", "unknown_format", message)])
                .into_response(snap.revision())
        }
    };
    let bytes = export_cpt(&snap.result.cpt, format);
    with_revision(
        StatusCode::OK,
        snap.revision(),
        ([(header::CONTENT_TYPE, format.content_type())], bytes),
    )
}

fn stale(current: &str, sent: &str) -> ApiError {
    ApiError {
        status: StatusCode::CONFLICT,
        code: "stale_revision",
        message: format!("revision {sent} is not current ({current})"),
        problems: Vec::new(),
    }
}

async fn post_whatif(State(state): State<AppState>, body: Bytes) -> Response {
    let snap = state.snapshot();
    let request: WhatIfRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(snap.revision()),
    };
    if let Some(sent) = &request.revision {
        if sent != snap.revision() {
            return stale(snap.revision(), sent).into_response(snap.revision());
        }
    }
    match compute_what_if(&snap.document, Some(&snap.result), &request) {
        Ok(response) => with_revision(StatusCode::OK, snap.revision(), axum::Json(response)),
        Err(e) => e.into_response(snap.revision()),
    }
}

async fn persist(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    tokio::fs::write(&tmp, bytes).await?;
    tokio::fs::rename(&tmp, path).await
}

async fn post_commit(State(state): State<AppState>, body: Bytes) -> Response {
    let _writer = state.shared.writer.lock().await;
    let snap = state.snapshot();
    let request: CommitRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(snap.revision()),
    };
    if request.revision != snap.revision() {
        return stale(snap.revision(), &request.revision).into_response(snap.revision());
    }

    let staged = match stage(&snap.document, &request.weights, &request.anchors) {
        Ok(s) => s,
        Err(e) => return e.into_response(snap.revision()),
    };
    let mut next = match snap.document.with_weights(&staged.spec.weights()) {
        Ok(d) => d,
        Err(e) => return ApiError::invalid(e.problems).into_response(snap.revision()),
    };
    for (config, dist) in &staged.replaced {
        next = match next.with_anchor(config, dist) {
            Ok(d) => d,
            Err(e) => return ApiError::invalid(e.problems).into_response(snap.revision()),
        };
    }
    let next = match Snapshot::new(next) {
        Ok(s) => s,
        Err(e) => return e.into_response(snap.revision()),
    };

    if let Some(path) = &state.shared.persist_to {
        if let Err(e) = persist(path, next.document.to_canonical_bytes()).await {
            return ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                code: "persist_failed",
                message: format!("could not write {}: {e}", path.display()),
                problems: Vec::new(),
            }
            .into_response(snap.revision());
        }
    }

    let revision = next.revision().to_string();
    *state.shared.current.write().expect("snapshot lock poisoned") = Arc::new(next);
    let body = json!({"revision": revision, "previous": snap.revision()});
    with_revision(StatusCode::OK, &revision, axum::Json(body))
}
