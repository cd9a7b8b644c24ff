use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use driftlab_core::io::{fixations_csv, trial_json};
use driftlab_core::trial::{CharBox, Fixation, Trial};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::data::{ReviewData, TrialEntry};
use crate::overrides::{OverrideLine, OverrideLog, OverrideRecord};

const DEFAULT_PAGE_SIZE: usize = 50;
const MAX_PAGE_SIZE: usize = 1000;

/// Loaded data plus the override log. Reads share the lock; each override
/// write holds it exclusively until the record is on disk.
#[derive(Debug)]
pub struct AppState {
    pub data: ReviewData,
    overrides: RwLock<OverrideLog>,
}

impl AppState {
    /// Records in the log that do not fit `data` (unknown trial, fixation or
    /// line out of range) are ignored with a warning.
    pub fn new(data: ReviewData, mut overrides: OverrideLog) -> Self {
        let dropped = overrides.retain(|r| {
            data.get(&r.trial_id).is_some_and(|e| {
                r.fixation_index < e.trial.fixations.len()
                    && match r.line {
                        OverrideLine::Line(l) => l < e.trial.line_count(),
                        OverrideLine::Discard => true,
                    }
            })
        });
        for r in &dropped {
            eprintln!(
                "warning: {}: ignoring override for {} fixation {} that does not fit the loaded dataset",
                overrides.path().display(),
                r.trial_id,
                r.fixation_index
            );
        }
        Self {
            data,
            overrides: RwLock::new(overrides),
        }
    }

    /// The corrected dataset: gold lines are the effective assignment and
    /// DISCARD overrides set the discarded flag.
    pub fn export(&self) -> BTreeMap<String, Trial> {
        let log = self.overrides.read().expect("override lock");
        self.data
            .entries()
            .map(|e| {
                let mut trial = e.trial.clone();
                let over = log.for_trial(&trial.id);
                for (i, f) in trial.fixations.iter_mut().enumerate() {
                    match over.get(&i).map(|r| r.line) {
                        Some(OverrideLine::Discard) => {
                            f.gold_line = None;
                            f.discarded = true;
                        }
                        Some(OverrideLine::Line(l)) => f.gold_line = Some(l),
                        None => f.gold_line = Some(e.woc[i]),
                    }
                }
                (trial.id.clone(), trial)
            })
            .collect()
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn not_found(id: &str) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, format!("no trial with id {id:?}"))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/trials", get(list_trials))
        .route("/trials/{id}", get(get_trial))
        .route("/trials/{id}/overrides", axum::routing::post(post_override))
        .route("/export", get(export))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Serialize)]
struct TrialSummary<'a> {
    id: &'a str,
    fixation_count: usize,
    disagreement: f64,
    overridden_count: usize,
}

#[derive(Serialize)]
struct TrialPage<'a> {
    page: usize,
    page_size: usize,
    total: usize,
    trials: Vec<TrialSummary<'a>>,
}

fn parse_positive(params: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize, ApiError> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(ApiError(
                StatusCode::BAD_REQUEST,
                format!("{key} must be a positive integer, got {v:?}"),
            )),
        },
    }
}

async fn list_trials(
    State(state): State<Arc<AppState>>,
    query: Result<Query<BTreeMap<String, String>>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(params) = query.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    if let Some(k) = params.keys().find(|k| !matches!(k.as_str(), "sort" | "page" | "page_size")) {
        return Err(ApiError(StatusCode::BAD_REQUEST, format!("unknown query parameter {k:?}")));
    }
    let by_disagreement = match params.get("sort").map(String::as_str) {
        None | Some("id") => false,
        Some("disagreement") => true,
        Some(other) => {
            return Err(ApiError(
                StatusCode::BAD_REQUEST,
                format!("sort must be \"disagreement\" or \"id\", got {other:?}"),
            ))
        }
    };
    let page = parse_positive(&params, "page", 1)?;
    let page_size = parse_positive(&params, "page_size", DEFAULT_PAGE_SIZE)?;
    if page_size > MAX_PAGE_SIZE {
        return Err(ApiError(
            StatusCode::BAD_REQUEST,
            format!("page_size may not exceed {MAX_PAGE_SIZE}"),
        ));
    }

    let log = state.overrides.read().expect("override lock");
    let mut entries: Vec<&TrialEntry> = state.data.entries().collect();
    if by_disagreement {
        // Stable sort keeps id order among ties.
        entries.sort_by(|a, b| b.disagreement.trial.total_cmp(&a.disagreement.trial));
    }
    let total = entries.len();
    let trials = entries
        .into_iter()
        .skip((page - 1).saturating_mul(page_size))
        .take(page_size)
        .map(|e| TrialSummary {
            id: &e.trial.id,
            fixation_count: e.trial.fixations.len(),
            disagreement: e.disagreement.trial,
            overridden_count: log.for_trial(&e.trial.id).len(),
        })
        .collect();
    Ok(Json(TrialPage {
        page,
        page_size,
        total,
        trials,
    })
    .into_response())
}

#[derive(Serialize)]
struct OverrideView<'a> {
    fixation_index: usize,
    line: OverrideLine,
    author: &'a str,
    timestamp: u64,
}

#[derive(Serialize)]
struct DisagreementView<'a> {
    trial: f64,
    per_fixation: &'a [f64],
}

#[derive(Serialize)]
struct TrialView<'a> {
    id: &'a str,
    dataset: &'a str,
    line_count: usize,
    fixations: &'a [Fixation],
    chars: &'a [CharBox],
    sources: &'a BTreeMap<String, Vec<usize>>,
    woc: &'a [usize],
    disagreement: DisagreementView<'a>,
    overrides: Vec<OverrideView<'a>>,
    /// WOC shadowed by overrides.
    effective: Vec<OverrideLine>,
}

async fn get_trial(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.data.get(&id).ok_or_else(|| not_found(&id))?;
    let log = state.overrides.read().expect("override lock");
    let over = log.for_trial(&id);
    let effective = entry
        .woc
        .iter()
        .enumerate()
        .map(|(i, &l)| over.get(&i).map_or(OverrideLine::Line(l), |r| r.line))
        .collect();
    let view = TrialView {
        id: &entry.trial.id,
        dataset: &entry.trial.dataset,
        line_count: entry.trial.line_count(),
        fixations: &entry.trial.fixations,
        chars: entry.trial.stimulus.boxes(),
        sources: &entry.sources,
        woc: &entry.woc,
        disagreement: DisagreementView {
            trial: entry.disagreement.trial,
            per_fixation: &entry.disagreement.per_fixation,
        },
        overrides: over
            .iter()
            .map(|(&i, r)| OverrideView {
                fixation_index: i,
                line: r.line,
                author: &r.author,
                timestamp: r.timestamp,
            })
            .collect(),
        effective,
    };
    Ok(Json(view).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideBody {
    fixation_index: usize,
    line: OverrideLine,
    author: String,
}

async fn post_override(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<OverrideBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let entry = state.data.get(&id).ok_or_else(|| not_found(&id))?;
    let Json(body) = body.map_err(|e| ApiError(e.status(), e.body_text()))?;
    let n = entry.trial.fixations.len();
    if body.fixation_index >= n {
        return Err(ApiError(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("fixation_index {} out of range, trial has {n} fixations", body.fixation_index),
        ));
    }
    let m = entry.trial.line_count();
    if let OverrideLine::Line(l) = body.line {
        if l >= m {
            return Err(ApiError(
                StatusCode::UNPROCESSABLE_ENTITY,
                format!("line {l} out of range, trial has {m} lines"),
            ));
        }
    }
    if body.author.trim().is_empty() {
        return Err(ApiError(StatusCode::UNPROCESSABLE_ENTITY, "author must not be empty".into()));
    }
    let record = OverrideRecord {
        trial_id: id,
        fixation_index: body.fixation_index,
        line: body.line,
        author: body.author,
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64),
    };
    let mut log = state.overrides.write().expect("override lock");
    log.append(record.clone())
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

#[derive(Serialize)]
struct ExportedTrial {
    csv: String,
    json: String,
}

async fn export(State(state): State<Arc<AppState>>) -> Response {
    let trials: BTreeMap<String, ExportedTrial> = state
        .export()
        .into_iter()
        .map(|(id, t)| {
            (
                id,
                ExportedTrial {
                    csv: fixations_csv(&t.fixations),
                    json: trial_json(&t),
                },
            )
        })
        .collect();
    Json(json!({ "trials": trials })).into_response()
}
