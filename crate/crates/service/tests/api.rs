use promoai_service::api::{router, AppState};
use promoai_service::config::AppConfig;
use promoai_testkit::{fixture, fixture_path};
use reqwest::StatusCode;
use serde_json::{json, Value};

struct Server {
    base: String,
    dir: tempfile::TempDir,
}

async fn start(script: &str) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "store_dir = \"sessions\"\n[provider]\nkind = \"mock\"\nscript = {:?}\n",
        fixture_path(&format!("mock/{script}.json")).display().to_string()
    );
    let cfg = AppConfig::parse(&text, dir.path()).unwrap();
    let state = AppState::from_config(&cfg).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(state, &[])).await.unwrap() });
    Server { base: format!("http://{addr}/api"), dir }
}

async fn post(url: &str, body: Value) -> (StatusCode, Value) {
    let r = reqwest::Client::new().post(url).json(&body).send().await.unwrap();
    (r.status(), r.json().await.unwrap())
}

async fn get(url: &str) -> (StatusCode, String) {
    let r = reqwest::get(url).await.unwrap();
    (r.status(), r.text().await.unwrap())
}

#[tokio::test]
async fn create_refine_and_export() {
    let s = start("refine").await;
    let (status, body) = post(&format!("{}/sessions", s.base), json!({"description": fixture("order_process.txt")})).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let id = body["id"].as_str().unwrap().to_string();
    assert_eq!(body["has_model"], true);

    let (status, body) = post(
        &format!("{}/sessions/{id}/feedback", s.base),
        json!({"feedback": "model the item selection as a loop"}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");

    for format in ["powl-json", "pnml", "bpmn", "pcl", "render-json"] {
        let (status, text) = get(&format!("{}/sessions/{id}/model?format={format}", s.base)).await;
        assert_eq!(status, StatusCode::OK, "{format}: {text}");
        assert!(!text.is_empty());
    }
    let (status, text) = get(&format!("{}/sessions/{id}/model?format=render-json&view=pn", s.base)).await;
    assert_eq!(status, StatusCode::OK);
    assert!(text.contains("\"place\""));

    let (_, text) = get(&format!("{}/sessions/{id}/history?include_conversation=true", s.base)).await;
    let history: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(history["events"].as_array().unwrap().len(), 2);
    assert_eq!(history["events"][1]["kind"], "refined");
    // system, description, answer, feedback, answer
    assert_eq!(history["conversation"].as_array().unwrap().len(), 5);

    let (_, text) = get(&format!("{}/sessions/{id}/history", s.base)).await;
    assert!(!text.contains("conversation"));
    assert!(s.dir.path().join("sessions").join(&id).join("session.json").exists());
}

#[tokio::test]
async fn client_errors() {
    let s = start("order_process").await;
    let (status, body) = post(&format!("{}/sessions", s.base), json!({"description": "  "})).await;
    assert_eq!((status, body["kind"].as_str()), (StatusCode::BAD_REQUEST, Some("precondition")));
    let (status, body) = post(&format!("{}/sessions", s.base), json!({"text": "x"})).await;
    assert_eq!((status, body["kind"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid-request")));

    let missing = "0".repeat(32);
    let (status, _) = get(&format!("{}/sessions/{missing}", s.base)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&format!("{}/sessions/..%2Fetc", s.base)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = post(&format!("{}/sessions/{missing}/feedback", s.base), json!({"feedback": "x"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&format!("{}/nothing", s.base)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, body) = post(&format!("{}/sessions", s.base), json!({"description": "an order process"})).await;
    let id = body["id"].as_str().unwrap();
    let (status, body) = post(&format!("{}/sessions/{id}/feedback", s.base), json!({"feedback": ""})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, text) = get(&format!("{}/sessions/{id}/model?format=svg", s.base)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(text.contains("unknown-format"));
    let (status, text) = get(&format!("{}/sessions/{id}/model?view=tree", s.base)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(text.contains("unknown-view"));
}

#[tokio::test]
async fn exhausted_generation_is_recorded() {
    let s = start("exhausted").await;
    let (status, body) = post(&format!("{}/sessions", s.base), json!({"description": "an order process"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(body["kind"], "generation-exhausted");
    let id = body["session_id"].as_str().unwrap();

    let (status, text) = get(&format!("{}/sessions/{id}", s.base)).await;
    assert_eq!(status, StatusCode::OK);
    let summary: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(summary["has_model"], false);
    assert_eq!(summary["last_event"]["kind"], "failed");
    assert_eq!(summary["last_event"]["attempts"], 5);

    let (status, _) = get(&format!("{}/sessions/{id}/model", s.base)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, body) = post(&format!("{}/sessions/{id}/feedback", s.base), json!({"feedback": "x"})).await;
    assert_eq!((status, body["kind"].as_str()), (StatusCode::CONFLICT, Some("no-model")));
}

#[tokio::test]
async fn provider_exhaustion_is_a_gateway_error() {
    let s = start("order_process").await;
    let (status, _) = post(&format!("{}/sessions", s.base), json!({"description": "first"})).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = post(&format!("{}/sessions", s.base), json!({"description": "second"})).await;
    assert_eq!((status, body["kind"].as_str()), (StatusCode::BAD_GATEWAY, Some("provider-error")));
    let stored = std::fs::read_dir(s.dir.path().join("sessions")).unwrap().count();
    assert_eq!(stored, 1);
}
