//! Read-only JSON API over an immutable [`Snapshot`].
//!
//! | route | query | body |
//! |---|---|---|
//! | `GET /api/meta` | | window, classifier id, states |
//! | `GET /api/series` | `granularity=hour\|day`, `state=<code\|US>`, `from`, `to` | `[{bucket_start, pro, anti, neutral}]` |
//! | `GET /api/map` | `score=pgpss1\|pgpss2\|pgpss3`, `from`, `to` | `[{state, raw, norm}]` |
//! | `GET /api/tags` | `kind=hashtag\|mention`, `n` | `[{tag, count}]` |
//! | `GET /api/bubble` | `date` | one motion-chart row per state |
//!
//! Dates are inclusive UTC calendar days (`YYYY-MM-DD`). Errors are
//! [`ApiError`] bodies carrying the HTTP status they were sent with.

use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use gunsent_core::aggregate::{self, AggregateError, Granularity, Snapshot, TagKind, STORED_TAGS};
use gunsent_core::scoring::{NATIONAL, ScoreVariant};
use gunsent_core::time::{self, SECONDS_PER_DAY};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};

pub const DEFAULT_TAGS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request("invalid_query", e.body_text())
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot load snapshot {path}: {source}")]
    Snapshot { path: String, source: AggregateError },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

type Shared = Arc<Snapshot>;
type ApiResult<T> = Result<Json<T>, ApiError>;

/// Router with every endpoint, permissive CORS for `GET` and JSON 404s for
/// unknown paths.
pub fn router(snapshot: Snapshot) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods([Method::GET]);
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/series", get(series))
        .route("/api/map", get(map))
        .route("/api/tags", get(tags))
        .route("/api/bubble", get(bubble))
        .fallback(|| async { ApiError::not_found("not_found", "no such endpoint") })
        .with_state(Arc::new(snapshot))
        .layer(cors)
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot, ServiceError> {
    aggregate::read_snapshot(path).map_err(|source| ServiceError::Snapshot {
        path: path.display().to_string(),
        source,
    })
}

/// Loads the snapshot and serves it on `addr` until Ctrl-C.
pub async fn serve(snapshot_path: &Path, addr: SocketAddr) -> Result<(), ServiceError> {
    let snapshot = load_snapshot(snapshot_path)?;
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    serve_on(listener, snapshot, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Serves `snapshot` on an already bound listener until `shutdown` resolves.
pub async fn serve_on<F>(listener: TcpListener, snapshot: Snapshot, shutdown: F) -> Result<(), ServiceError>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(snapshot))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct WindowBody {
    start: String,
    end: String,
    days: usize,
}

#[derive(Debug, Serialize)]
struct StateBody<'a> {
    code: &'a str,
    name: &'a str,
    population: u64,
    gun_ownership_pct: f64,
}

#[derive(Debug, Serialize)]
struct MetaBody<'a> {
    window: WindowBody,
    classifier_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<&'a gunsent_core::Provenance>,
    national_population: u64,
    totals: gunsent_core::SentimentCounts,
    states: Vec<StateBody<'a>>,
}

async fn meta(State(snap): State<Shared>) -> Json<serde_json::Value> {
    let body = MetaBody {
        window: WindowBody {
            start: time::format_timestamp(snap.window.start),
            end: time::format_timestamp(snap.window.end),
            days: snap.window.days().len(),
        },
        classifier_id: &snap.classifier_id,
        provenance: snap.provenance.as_ref(),
        national_population: snap.national_population,
        totals: snap.totals,
        states: snap
            .states
            .iter()
            .map(|s| StateBody {
                code: &s.code,
                name: &s.name,
                population: s.population,
                gun_ownership_pct: s.gun_ownership_pct,
            })
            .collect(),
    };
    Json(serde_json::to_value(body).expect("meta serializes"))
}

#[derive(Debug, Deserialize)]
struct SeriesQuery {
    granularity: Option<String>,
    state: Option<String>,
    from: Option<String>,
    to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub bucket_start: String,
    pub pro: u64,
    pub anti: u64,
    pub neutral: u64,
}

/// Inclusive first and last day of the requested range, clamped to the
/// snapshot window.
fn day_range(snap: &Snapshot, from: Option<&str>, to: Option<&str>) -> Result<(i64, i64), ApiError> {
    let parse = |name: &str, v: Option<&str>, default: i64| match v {
        None => Ok(default),
        Some(s) => time::parse_date(s)
            .ok_or_else(|| ApiError::bad_request("invalid_date", format!("{name}={s:?} is not a YYYY-MM-DD date"))),
    };
    let first = time::floor_day(snap.window.start);
    let last = time::floor_day(snap.window.end);
    let from = parse("from", from, first)?;
    let to = parse("to", to, last)?;
    if from > to {
        return Err(ApiError::bad_request("invalid_range", "from is after to"));
    }
    if to < first || from > last {
        return Err(ApiError::not_found(
            "out_of_window",
            format!(
                "range does not overlap the snapshot window {}..{}",
                time::format_date(first),
                time::format_date(last)
            ),
        ));
    }
    Ok((from.max(first), to.min(last)))
}

async fn series(State(snap): State<Shared>, q: Result<Query<SeriesQuery>, QueryRejection>) -> ApiResult<Vec<SeriesRow>> {
    let Query(q) = q?;
    let granularity: Granularity = q
        .granularity
        .as_deref()
        .unwrap_or("day")
        .parse()
        .map_err(|m: String| ApiError::bad_request("invalid_granularity", m))?;
    let state = q.state.as_deref().unwrap_or(NATIONAL);
    if state != NATIONAL && snap.state(state).is_none() {
        return Err(ApiError::not_found("unknown_state", format!("no state {state:?}")));
    }
    let (from, to) = day_range(&snap, q.from.as_deref(), q.to.as_deref())?;
    let rows = snap
        .points(granularity, state)
        .filter(|p| (from..to + SECONDS_PER_DAY).contains(&p.bucket_start))
        .map(|p| SeriesRow {
            bucket_start: time::format_timestamp(p.bucket_start),
            pro: p.counts.pro,
            anti: p.counts.anti,
            neutral: p.counts.neutral,
        })
        .collect();
    Ok(Json(rows))
}

#[derive(Debug, Deserialize)]
struct MapQuery {
    score: Option<String>,
    from: Option<String>,
    to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRow {
    pub state: String,
    pub raw: f64,
    pub norm: f64,
}

async fn map(State(snap): State<Shared>, q: Result<Query<MapQuery>, QueryRejection>) -> ApiResult<Vec<MapRow>> {
    let Query(q) = q?;
    let variant: ScoreVariant = q
        .score
        .as_deref()
        .unwrap_or("pgpss3")
        .parse()
        .map_err(|_| ApiError::bad_request("invalid_score", "score must be pgpss1, pgpss2 or pgpss3"))?;
    let scores = if q.from.is_none() && q.to.is_none() {
        snap.pgpss_window.clone()
    } else {
        let (from, to) = day_range(&snap, q.from.as_deref(), q.to.as_deref())?;
        snap.score_between(from, to)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "scoring_failed", e.to_string()))?
    };
    Ok(Json(
        scores
            .states
            .iter()
            .map(|s| MapRow {
                state: s.code.clone(),
                raw: s.raw(variant),
                norm: s.norm(variant),
            })
            .collect(),
    ))
}

#[derive(Debug, Deserialize)]
struct TagsQuery {
    kind: Option<String>,
    n: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRow {
    pub tag: String,
    pub count: u64,
}

async fn tags(State(snap): State<Shared>, q: Result<Query<TagsQuery>, QueryRejection>) -> ApiResult<Vec<TagRow>> {
    let Query(q) = q?;
    let kind: TagKind = q
        .kind
        .as_deref()
        .unwrap_or("hashtag")
        .parse()
        .map_err(|m: String| ApiError::bad_request("invalid_kind", m))?;
    let n = match q.n.as_deref() {
        None => DEFAULT_TAGS,
        Some(s) => s
            .parse::<usize>()
            .ok()
            .filter(|n| (1..=STORED_TAGS).contains(n))
            .ok_or_else(|| ApiError::bad_request("invalid_n", format!("n must be an integer in 1..={STORED_TAGS}")))?,
    };
    let stored = match kind {
        TagKind::Hashtag => &snap.top_tags.hashtags,
        TagKind::Mention => &snap.top_tags.mentions,
    };
    Ok(Json(
        stored
            .iter()
            .take(n)
            .map(|t| TagRow {
                tag: t.tag.clone(),
                count: t.count,
            })
            .collect(),
    ))
}

#[derive(Debug, Deserialize)]
struct BubbleQuery {
    date: Option<String>,
}

/// One state on one day of the motion chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleRow {
    pub state: String,
    pub neutral_count: u64,
    pub pgpss3_norm: f64,
    pub population: u64,
    pub gun_ownership_pct: f64,
    pub pro_count: u64,
    pub total: u64,
}

async fn bubble(State(snap): State<Shared>, q: Result<Query<BubbleQuery>, QueryRejection>) -> ApiResult<Vec<BubbleRow>> {
    let Query(q) = q?;
    let raw = q
        .date
        .ok_or_else(|| ApiError::bad_request("missing_date", "date=YYYY-MM-DD is required"))?;
    let (day, _) = day_range(&snap, Some(&raw), Some(&raw))?;
    let counts = snap.counts_between(day, day);
    let scores = snap.pgpss_daily.iter().find(|d| d.day == day).map(|d| &d.scores);
    Ok(Json(
        snap.states
            .iter()
            .map(|s| {
                let c = counts.get(&s.code).copied().unwrap_or_default();
                BubbleRow {
                    state: s.code.clone(),
                    neutral_count: c.neutral,
                    pgpss3_norm: scores.and_then(|r| r.get(&s.code)).map_or(0.0, |x| x.norm3),
                    population: s.population,
                    gun_ownership_pct: s.gun_ownership_pct,
                    pro_count: c.pro,
                    total: c.total(),
                }
            })
            .collect(),
    ))
}
