//! HTTP/JSON front end for [`SessionService`].
//!
//! Errors are returned as `{"error": {"code", "message"}}`. The coupon
//! endpoint streams newline-delimited JSON events; pass `?follow=false` to
//! receive only the events delivered so far.

use std::collections::VecDeque;
use std::convert::Infallible;
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use crate::harness::FixtureSet;
use crate::session::{CouponEvent, FilterPredicate, SessionConfig, SessionError, SessionService};

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<SessionService>,
    pub fixtures: Option<Arc<FixtureSet>>,
}

impl AppState {
    pub fn new(service: Arc<SessionService>) -> Self {
        Self {
            service,
            fixtures: None,
        }
    }

    pub fn with_fixtures(mut self, fixtures: FixtureSet) -> Self {
        self.fixtures = Some(Arc::new(fixtures));
        self
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::NotFound { .. } => StatusCode::NOT_FOUND,
            SessionError::Validation(_) | SessionError::Fusion(_) | SessionError::Layout(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            SessionError::EmptyComparison => StatusCode::CONFLICT,
            SessionError::Io(_) | SessionError::Snapshot(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let mut de = serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::bad_request(format!("invalid JSON body at {path}: {}", e.into_inner()))
    })
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/products", get(products))
        .route("/fixtures", get(list_fixtures))
        .route("/fixtures/frames/{name}", get(fixture_frame))
        .route("/fixtures/files/{name}", get(fixture_file))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", axum::routing::delete(close_session))
        .route("/sessions/{id}/frames", post(submit_frame))
        .route("/sessions/{id}/filter", put(set_filter).get(get_filter))
        .route("/sessions/{id}/features", put(select_features))
        .route("/sessions/{id}/glyphs", put(toggle_glyphs))
        .route("/sessions/{id}/favorites", get(favorites))
        .route("/sessions/{id}/favorites/{product_id}", post(toggle_favorite))
        .route("/sessions/{id}/overlay", get(overlay))
        .route("/sessions/{id}/comparison", get(comparison))
        .route("/sessions/{id}/coupons", get(coupons))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

/// Serves the API on `listener` until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn products(State(st): State<AppState>) -> Response {
    Json(st.service.catalog().products()).into_response()
}

#[derive(Serialize)]
struct FixtureEntry<'a> {
    name: &'a str,
    frame_id: &'a str,
    image_ref: &'a str,
}

async fn list_fixtures(State(st): State<AppState>) -> ApiResult<Response> {
    let set = st
        .fixtures
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no fixtures loaded"))?;
    let entries: Vec<FixtureEntry> = set
        .frames
        .iter()
        .map(|f| FixtureEntry {
            name: &f.name,
            frame_id: &f.frame.frame_id,
            image_ref: &f.frame.image_ref,
        })
        .collect();
    Ok(Json(entries).into_response())
}

async fn fixture_frame(State(st): State<AppState>, Path(name): Path<String>) -> ApiResult<Response> {
    let set = st
        .fixtures
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no fixtures loaded"))?;
    let frame = set
        .frames
        .iter()
        .find(|f| f.name == name || f.frame.frame_id == name)
        .ok_or_else(|| ApiError::not_found(format!("fixture frame `{name}` not found")))?;
    Ok(Json(&frame.frame).into_response())
}

async fn fixture_file(State(st): State<AppState>, Path(name): Path<String>) -> ApiResult<Response> {
    let set = st
        .fixtures
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no fixtures loaded"))?;
    // Only plain file names inside the fixture directory.
    if name.contains('/') || name.contains('\\') || name.starts_with('.') {
        return Err(ApiError::bad_request("invalid file name"));
    }
    let bytes = tokio::fs::read(set.dir.join(&name))
        .await
        .map_err(|_| ApiError::not_found(format!("fixture file `{name}` not found")))?;
    let mime = match name.rsplit('.').next() {
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("json") => "application/json",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

async fn create_session(State(st): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let config = if body.iter().all(u8::is_ascii_whitespace) {
        st.service.default_config().clone()
    } else {
        parse_body::<SessionConfig>(&body)?
    };
    let id = st.service.create_session(config)?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))).into_response())
}

async fn list_sessions(State(st): State<AppState>) -> Json<Vec<String>> {
    Json(st.service.session_ids())
}

async fn close_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    st.service.close_session(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn submit_frame(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let frame = parse_body(&body)?;
    Ok(Json(st.service.submit_frame(&id, frame)?).into_response())
}

async fn set_filter(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let predicate: FilterPredicate = parse_body(&body)?;
    Ok(Json(st.service.set_filter(&id, predicate)?).into_response())
}

async fn get_filter(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(st.service.filter(&id)?).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeaturesBody {
    features: Vec<String>,
}

async fn select_features(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let FeaturesBody { features } = parse_body(&body)?;
    Ok(Json(st.service.select_features(&id, features)?).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GlyphsBody {
    enabled: bool,
}

async fn toggle_glyphs(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let GlyphsBody { enabled } = parse_body(&body)?;
    Ok(Json(st.service.toggle_glyphs(&id, enabled)?).into_response())
}

async fn toggle_favorite(
    State(st): State<AppState>,
    Path((id, product_id)): Path<(String, String)>,
) -> ApiResult<Response> {
    let favorites = st.service.toggle_favorite(&id, &product_id)?;
    Ok(Json(json!({ "favorites": favorites })).into_response())
}

async fn favorites(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(json!({ "favorites": st.service.favorites(&id)? })).into_response())
}

async fn overlay(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(st.service.overlay(&id)?).into_response())
}

async fn comparison(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(st.service.comparison_view(&id)?).into_response())
}

#[derive(Deserialize)]
struct CouponQuery {
    #[serde(default = "default_follow")]
    follow: bool,
}

fn default_follow() -> bool {
    true
}

struct CouponStream {
    service: Arc<SessionService>,
    session_id: String,
    pending: VecDeque<CouponEvent>,
    last_sequence: u64,
    live: Option<broadcast::Receiver<CouponEvent>>,
}

fn ndjson_line(event: &CouponEvent) -> Bytes {
    let mut line = serde_json::to_vec(event).expect("event serializes");
    line.push(b'\n');
    Bytes::from(line)
}

async fn coupons(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<CouponQuery>,
) -> ApiResult<Response> {
    let (backlog, rx) = st.service.subscribe_coupons(&id)?;
    let init = CouponStream {
        service: st.service.clone(),
        session_id: id,
        pending: backlog.into(),
        last_sequence: 0,
        live: q.follow.then_some(rx),
    };
    let stream = futures::stream::unfold(init, |mut s| async move {
        loop {
            if let Some(event) = s.pending.pop_front() {
                if event.sequence <= s.last_sequence {
                    continue;
                }
                s.last_sequence = event.sequence;
                return Some((Ok::<_, Infallible>(ndjson_line(&event)), s));
            }
            let rx = s.live.as_mut()?;
            match rx.recv().await {
                Ok(event) => s.pending.push_back(event),
                Err(broadcast::error::RecvError::Lagged(_)) => {
                    // Re-read what was missed from the session's backlog.
                    let missed = s.service.coupon_events_since(&s.session_id, s.last_sequence).ok()?;
                    s.pending.extend(missed);
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        Body::from_stream(stream),
    )
        .into_response())
}
