use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use instrlearn::io::parse_jsonl;
use instrlearn::server::{router, AppState, SeedPolicy, ServerConfig};
use instrlearn_core::grammar::GrammarConfig;
use instrlearn_core::protocol::{grade_session, ExperimentKind, ExperimentSpec, ParticipantResult, Session};
use instrlearn_core::simulator::{simulate_population, BiasProfile, SimulatedPopulation};

const SEED: u64 = 31;

fn app(max_sessions: usize) -> (tempfile::TempDir, Router) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ServerConfig {
        data_dir: dir.path().into(),
        seed_policy: SeedPolicy::Fixed(SEED),
        sync_writes: false,
        max_sessions,
        ..ServerConfig::default()
    };
    (dir, router(Arc::new(AppState::new(cfg).unwrap())))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn anonymous(mut r: ParticipantResult) -> ParticipantResult {
    r.participant_id.clear();
    r
}

/// Replays every simulated session through the API and checks that grading
/// the export matches grading the simulation directly.
async fn replay(kind: ExperimentKind, n: usize) {
    let cfg = GrammarConfig::default();
    let spec = ExperimentSpec::generate(kind, SEED);
    let profile = BiasProfile {
        p_correct: 0.5,
        lapse: 0.2,
        quiz_error: 0.2,
        ..BiasProfile::default()
    };
    let offline = simulate_population(&spec, &SimulatedPopulation::uniform(profile, n, 5), &cfg).unwrap();
    let (_dir, app) = app(1000);

    for s in &offline {
        let (status, created) = call_json(&app, Method::POST, "/api/session", Some(json!({ "kind": kind.to_string() }))).await;
        assert_eq!(status, StatusCode::CREATED, "{created}");
        assert_eq!(created["seed"], SEED);
        let id = created["session_id"].as_str().unwrap().to_string();
        for r in &s.records {
            let (status, next) = call_json(&app, Method::GET, &format!("/api/session/{id}/next"), None).await;
            assert_eq!(status, StatusCode::OK);
            assert_eq!(next["item_id"], r.item_id.as_str());
            let symbols: Vec<String> = r.response.symbols().iter().map(|c| c.to_string()).collect();
            let (status, body) = call_json(
                &app,
                Method::POST,
                &format!("/api/session/{id}/response"),
                Some(json!({ "item_id": r.item_id, "symbols": symbols })),
            )
            .await;
            assert_eq!(status, StatusCode::OK, "{body}");
        }
        if let Some(aid) = s.external_aid {
            let (status, _) = call(&app, Method::POST, &format!("/api/session/{id}/survey"), Some(json!({ "external_aid": aid }))).await;
            assert_eq!(status, StatusCode::OK);
        }
        let (_, next) = call_json(&app, Method::GET, &format!("/api/session/{id}/next"), None).await;
        assert_eq!(next["status"], "done");
    }

    let (status, bytes) = call(&app, Method::GET, &format!("/api/export?kind={kind}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let exported: Vec<Session> = parse_jsonl(std::str::from_utf8(&bytes).unwrap(), "export".as_ref()).unwrap();
    assert_eq!(exported.len(), offline.len());

    let grade = |ss: &[Session]| -> Vec<ParticipantResult> {
        ss.iter().map(|s| anonymous(grade_session(&spec, s).unwrap())).collect()
    };
    assert_eq!(grade(&exported), grade(&offline));
}

#[tokio::test]
async fn curriculum_sessions_round_trip() {
    replay(ExperimentKind::Exp1, 12).await;
}

#[tokio::test]
async fn bias_trial_sessions_round_trip() {
    replay(ExperimentKind::Exp2, 12).await;
}

#[tokio::test]
async fn free_form_sessions_round_trip() {
    replay(ExperimentKind::Exp3, 6).await;
}

#[tokio::test]
async fn error_statuses() {
    let (_dir, app) = app(1);
    let (status, body) = call_json(&app, Method::POST, "/api/session", Some(json!({ "kind": "exp9" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "bad_request");

    let (status, _) = call(&app, Method::GET, "/api/session/s999999/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, created) = call_json(&app, Method::POST, "/api/session", Some(json!({ "kind": "exp1" }))).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap();
    let (status, _) = call(
        &app,
        Method::POST,
        &format!("/api/session/{id}/response"),
        Some(json!({ "item_id": "not-the-pending-item", "symbols": [] })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, _) = call(&app, Method::POST, "/api/session", Some(json!({ "kind": "exp2" }))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);

    let (status, health) = call_json(&app, Method::GET, "/api/health", None).await;
    assert_eq!((status, health["status"].as_str()), (StatusCode::OK, Some("ok")));
}
