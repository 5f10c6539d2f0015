use std::collections::BTreeMap;
use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use feedscout::corpus::{FeedSpec, StandardFeed};
use feedscout::dialogue::{DialogueSession, Stage};
use feedscout::event_log::{write_log, Boundary, ClickTarget, Phase};
use feedscout::feed::{FeedItem, Origin};
use feedscout::metrics::SessionMetrics;
use feedscout::session::{Notification, Reply};
use feedscout::{Condition, Session, SessionSetup};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::error::ApiError;
use crate::state::{AppState, LiveSession, Pushed};

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session).delete(close_session))
        .route("/sessions/{id}/feed", get(get_page))
        .route("/sessions/{id}/refresh", post(pull_refresh))
        .route("/sessions/{id}/impressions", post(report_impression))
        .route("/sessions/{id}/scroll", post(report_scroll))
        .route("/sessions/{id}/clicks", post(report_click))
        .route("/sessions/{id}/phase", post(mark_phase))
        .route("/sessions/{id}/tick", post(tick))
        .route("/sessions/{id}/assistant", post(open_assistant))
        .route("/sessions/{id}/dialogue", get(get_dialogue))
        .route("/sessions/{id}/dialogue/option", post(respond_option))
        .route("/sessions/{id}/dialogue/text", post(respond_text))
        .route("/sessions/{id}/dialogue/dismiss", post(dismiss))
        .route("/sessions/{id}/search", post(search))
        .route("/sessions/{id}/survey", post(survey))
        .route("/sessions/{id}/events", get(subscribe))
        .route("/sessions/{id}/notifications", get(poll_notifications))
        .route("/sessions/{id}/metrics", get(get_metrics))
        .route("/sessions/{id}/log", get(get_log))
        .with_state(state)
}

async fn health() -> &'static str {
    "ok"
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Capabilities {
    pub search: bool,
    pub chat: bool,
    pub ai_initiates: bool,
}

impl From<Condition> for Capabilities {
    fn from(c: Condition) -> Self {
        Self {
            search: c.has_search(),
            chat: c.has_chat(),
            ai_initiates: c.ai_initiates(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Handle {
    pub session_id: String,
    pub condition: Condition,
    pub created_ms: u64,
    pub phase: Option<Phase>,
    pub stage: Stage,
    pub capabilities: Capabilities,
}

fn handle(live: &LiveSession, s: &Session) -> Handle {
    Handle {
        session_id: s.session_id().to_string(),
        condition: s.condition(),
        created_ms: live.created_ms,
        phase: s.phase(),
        stage: s.dialogue().stage,
        capabilities: s.condition().into(),
    }
}

#[derive(Debug, Serialize)]
pub struct PageItem {
    pub item_id: String,
    pub title: String,
    pub cover_ref: String,
    pub author: String,
    pub engagement_count: u64,
    pub category: String,
    pub origin: Origin,
    pub position: usize,
}

#[derive(Debug, Serialize)]
pub struct Page {
    pub session_id: String,
    pub cursor: usize,
    pub refresh_count: u64,
    pub search_block: Vec<PageItem>,
    pub items: Vec<PageItem>,
}

fn page_items(items: &[FeedItem]) -> Vec<PageItem> {
    items
        .iter()
        .enumerate()
        .map(|(position, fi)| PageItem {
            item_id: fi.item.item_id.clone(),
            title: fi.item.title.clone(),
            cover_ref: fi.item.cover_ref.clone(),
            author: fi.item.author.clone(),
            engagement_count: fi.item.engagement_count,
            category: fi.item.category.clone(),
            origin: fi.origin,
            position,
        })
        .collect()
}

fn page(s: &Session) -> Page {
    let feed = s.feed();
    Page {
        session_id: s.session_id().to_string(),
        cursor: feed.cursor(),
        refresh_count: feed.refresh_count(),
        search_block: page_items(feed.search_block()),
        items: page_items(feed.items()),
    }
}

/// The result of a client action.
#[derive(Debug, Serialize)]
pub struct Action {
    pub appended: usize,
    pub stage: Stage,
    #[serde(flatten)]
    pub reply: Reply,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub page: Option<Page>,
}

/// Runs `f` on the session off the async runtime (providers may block) and
/// holding the session lock, so calls on one session run in arrival order.
async fn with_session<T, F>(state: &AppState, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&LiveSession, &mut Session) -> Result<T, ApiError> + Send + 'static,
{
    let live = state.get(id)?;
    tokio::task::spawn_blocking(move || {
        let mut s = live.session.lock().expect("session lock");
        f(&live, &mut s)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

/// Client timestamp, or time since creation when the client sends none.
fn at(live: &LiveSession, s: &Session, t_ms: Option<u64>) -> u64 {
    t_ms.unwrap_or_else(|| live.elapsed_ms().max(s.last_t()))
}

fn act(live: &LiveSession, s: &Session, reply: Reply, with_page: bool) -> Action {
    live.publish(&reply.notifications);
    Action {
        appended: reply.appended,
        stage: s.dialogue().stage,
        reply,
        page: with_page.then(|| page(s)),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub session_id: Option<String>,
    pub condition: Option<String>,
    /// One of the standard feeds `A`, `B`, `C`.
    pub feed: Option<String>,
    /// A custom feed shape instead of a standard feed.
    pub feed_spec: Option<FeedSpec>,
    pub seed: Option<u64>,
    pub participant_id: Option<String>,
    /// Take feed and seed from the loaded study plan for this participant
    /// and `condition`.
    pub plan_participant: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Created {
    pub handle: Handle,
    pub page: Page,
}

async fn create_session(
    State(state): State<AppState>,
    Json(body): Json<CreateSession>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let condition = Condition::parse(
        body.condition
            .as_deref()
            .ok_or_else(|| ApiError::validation("condition is required"))?,
    )?;
    let inner = &state.0;
    let mut feed = StandardFeed::A;
    let mut seed = body.seed.unwrap_or(0);
    let mut participant = body.participant_id.clone();
    if let Some(pid) = &body.plan_participant {
        let plans = inner
            .config
            .plan
            .as_ref()
            .ok_or_else(|| ApiError::validation("the server has no study plan loaded"))?;
        let plan = plans
            .iter()
            .find(|p| &p.participant_id == pid)
            .ok_or_else(|| ApiError::validation(format!("participant `{pid}` is not in the plan")))?;
        let (_, f, s) = plan
            .sessions()
            .find(|(c, _, _)| *c == condition)
            .ok_or_else(|| ApiError::validation(format!("participant `{pid}` has no {condition} session")))?;
        feed = f;
        seed = s;
        participant = Some(pid.clone());
    } else if let Some(label) = &body.feed {
        feed = StandardFeed::parse(label)?;
    }
    let session_id = match (&body.session_id, &body.plan_participant) {
        (Some(id), _) => id.clone(),
        (None, Some(pid)) => format!("{pid}-{}", condition.as_str().to_lowercase()),
        (None, None) => state.next_id(),
    };
    if session_id.is_empty() || !session_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(ApiError::validation("session_id must be non-empty and use only letters, digits, '-' and '_'"));
    }
    if state.get(&session_id).is_ok() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "conflict",
            format!("session `{session_id}` already exists"),
        ));
    }
    let mut setup = SessionSetup::standard(session_id.clone(), condition, feed, seed);
    if let Some(spec) = body.feed_spec {
        setup.feed_label = None;
        setup.feed_spec = spec;
    }
    setup.participant_id = participant;
    setup.config = inner.config.engine.clone();
    setup.corpus = inner.config.corpus.clone();
    setup.wall_clock_start_ms = Some(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
    );
    let mut session = Session::new(setup, inner.corpus.clone(), inner.provider.clone())?;
    if let Some(dir) = &inner.config.log_dir {
        std::fs::create_dir_all(dir).map_err(feedscout::Error::from)?;
        session.log_to(dir.join(format!("{session_id}.jsonl")))?;
    }
    let live = state.insert(session_id, LiveSession::new(session))?;
    let s = live.session.lock().expect("session lock");
    let created = Created {
        handle: handle(&live, &s),
        page: page(&s),
    };
    Ok((StatusCode::CREATED, Json(created)))
}

async fn list_sessions(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.session_ids())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Handle> {
    with_session(&state, &id, |live, s| Ok(handle(live, s))).await.map(Json)
}

#[derive(Debug, Serialize)]
pub struct Closed {
    pub session_id: String,
    /// Absent when the log lacks the phases the metrics need.
    pub metrics: Option<SessionMetrics>,
    pub metrics_error: Option<String>,
}

async fn close_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Closed> {
    let live = state.remove(&id)?;
    tokio::task::spawn_blocking(move || {
        let mut s = live.session.lock().expect("session lock");
        s.close()?;
        let (metrics, metrics_error) = match s.metrics() {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(Json(Closed {
            session_id: id,
            metrics,
            metrics_error,
        }))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn get_page(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Page> {
    with_session(&state, &id, |_, s| Ok(page(s))).await.map(Json)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct At {
    pub t_ms: Option<u64>,
}

async fn pull_refresh(State(state): State<AppState>, Path(id): Path<String>, body: Option<Json<At>>) -> ApiResult<Action> {
    let t_ms = body.map(|b| b.0.t_ms).unwrap_or_default();
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, t_ms);
        let reply = s.refresh(t)?;
        Ok(act(live, s, reply, true))
    })
    .await
    .map(Json)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpressionAction {
    Enter,
    Exit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpressionReport {
    pub t_ms: Option<u64>,
    pub item_id: String,
    pub action: ImpressionAction,
}

async fn report_impression(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ImpressionReport>,
) -> ApiResult<Action> {
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, body.t_ms);
        let reply = match body.action {
            ImpressionAction::Enter => s.impression_enter(t, &body.item_id)?,
            ImpressionAction::Exit => s.impression_exit(t, &body.item_id)?,
        };
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScrollReport {
    pub t_ms: Option<u64>,
    pub position_px: i64,
}

async fn report_scroll(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ScrollReport>,
) -> ApiResult<Action> {
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, body.t_ms);
        let reply = s.scroll(t, body.position_px)?;
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClickReport {
    pub t_ms: Option<u64>,
    pub target: ClickTarget,
    pub item_id: Option<String>,
}

async fn report_click(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ClickReport>,
) -> ApiResult<Action> {
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, body.t_ms);
        let reply = s.click(t, body.target, body.item_id.as_deref())?;
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseReport {
    pub t_ms: Option<u64>,
    pub phase: Phase,
    pub boundary: Boundary,
}

async fn mark_phase(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<PhaseReport>,
) -> ApiResult<Action> {
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, body.t_ms);
        let reply = s.phase_mark(t, body.phase, body.boundary)?;
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

async fn tick(State(state): State<AppState>, Path(id): Path<String>, body: Option<Json<At>>) -> ApiResult<Action> {
    let t_ms = body.map(|b| b.0.t_ms).unwrap_or_default();
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, t_ms);
        let reply = s.tick(t)?;
        let refreshed = reply.appended > 0;
        Ok(act(live, s, reply, refreshed))
    })
    .await
    .map(Json)
}

async fn open_assistant(State(state): State<AppState>, Path(id): Path<String>, body: Option<Json<At>>) -> ApiResult<Action> {
    let t_ms = body.map(|b| b.0.t_ms).unwrap_or_default();
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, t_ms);
        let reply = s.open_assistant(t)?;
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

async fn get_dialogue(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<DialogueSession> {
    with_session(&state, &id, |_, s| Ok(s.dialogue().clone())).await.map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionChoice {
    pub t_ms: Option<u64>,
    pub option_id: String,
}

async fn respond_option(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<OptionChoice>,
) -> ApiResult<Action> {
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, body.t_ms);
        let reply = s.select_option(t, &body.option_id)?;
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextMessage {
    pub t_ms: Option<u64>,
    pub text: String,
}

async fn respond_text(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<TextMessage>,
) -> ApiResult<Action> {
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, body.t_ms);
        let reply = s.send_text(t, &body.text)?;
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

async fn dismiss(State(state): State<AppState>, Path(id): Path<String>, body: Option<Json<At>>) -> ApiResult<Action> {
    let t_ms = body.map(|b| b.0.t_ms).unwrap_or_default();
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, t_ms);
        let reply = s.dismiss(t)?;
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub t_ms: Option<u64>,
    pub query: String,
}

async fn search(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<SearchRequest>,
) -> ApiResult<Action> {
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, body.t_ms);
        let reply = s.search(t, &body.query)?;
        Ok(act(live, s, reply, true))
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyReport {
    pub t_ms: Option<u64>,
    pub answers: BTreeMap<String, i64>,
}

async fn survey(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<SurveyReport>,
) -> ApiResult<Action> {
    with_session(&state, &id, move |live, s| {
        let t = at(live, s, body.t_ms);
        let reply = s.survey(t, body.answers)?;
        Ok(act(live, s, reply, false))
    })
    .await
    .map(Json)
}

fn sse_event(p: &Pushed) -> Event {
    let name = match p.notification {
        Notification::Trigger { .. } => "trigger",
        Notification::BlendConfirmed { .. } => "blend_confirmed",
    };
    Event::default()
        .id(p.index.to_string())
        .event(name)
        .json_data(p)
        .unwrap_or_else(|_| Event::default().comment("unserializable notification"))
}

/// Server-sent events: every trigger and blend confirmation as it happens.
/// One subscriber per session; a second gets 409 until the first disconnects.
async fn subscribe(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let live: Arc<LiveSession> = state.get(&id)?;
    if live.push.receiver_count() > 0 {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "conflict",
            format!("session `{id}` already has a push subscriber"),
        ));
    }
    let rx = live.push.subscribe();
    let stream = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(p) => return Some((Ok(sse_event(&p)), rx)),
                // A slow client misses notifications rather than holding up
                // the session; it can catch up from /notifications.
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

#[derive(Debug, Default, Deserialize)]
pub struct Since {
    pub since: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Notifications {
    /// Pass this as `since` on the next poll.
    pub next: usize,
    pub notifications: Vec<Pushed>,
}

async fn poll_notifications(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<Since>,
) -> ApiResult<Notifications> {
    let live = state.get(&id)?;
    let history = live.history.lock().expect("history lock");
    let since = q.since.unwrap_or(0).min(history.len());
    Ok(Json(Notifications {
        next: history.len(),
        notifications: history[since..]
            .iter()
            .enumerate()
            .map(|(i, n)| Pushed {
                index: since + i,
                notification: n.clone(),
            })
            .collect(),
    }))
}

async fn get_metrics(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionMetrics> {
    with_session(&state, &id, |_, s| Ok(s.metrics()?)).await.map(Json)
}

async fn get_log(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let bytes = with_session(&state, &id, |_, s| {
        let mut buf = Vec::new();
        write_log(&mut buf, Some(s.header()), s.stream())?;
        Ok(buf)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], bytes))
}
