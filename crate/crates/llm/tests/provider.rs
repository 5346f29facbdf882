use std::time::Duration;

use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use battle_llm::{
    prompt_digest, Cassette, HttpProvider, HttpProviderConfig, MockProvider, Provider,
    ProviderError, ProviderRequest, RecordingProvider,
};
use serde_json::{json, Value};

fn cassette() -> Cassette {
    [("state the quadratic formula", "x = (-b ± sqrt(b^2 - 4ac)) / (2a)")]
        .into_iter()
        .collect()
}

#[tokio::test]
async fn mock_replays_byte_identical_text() {
    let provider = MockProvider::new(cassette());
    let req = ProviderRequest::prompt("state the  quadratic formula\n");
    let first = provider.complete(&req).await.unwrap();
    let second = provider.complete(&req).await.unwrap();
    assert_eq!(first, "x = (-b ± sqrt(b^2 - 4ac)) / (2a)");
    assert_eq!(first.as_bytes(), second.as_bytes());
}

#[tokio::test]
async fn mock_never_fabricates() {
    let provider = MockProvider::new(cassette());
    let err = provider
        .complete(&ProviderRequest::prompt("unknown prompt"))
        .await
        .unwrap_err();
    assert_eq!(
        err,
        ProviderError::CassetteMiss {
            digest: prompt_digest("unknown prompt")
        }
    );
}

#[tokio::test]
async fn recording_session_becomes_cassette() {
    let recorder = RecordingProvider::new(MockProvider::new(
        [("a", "1"), ("b", "2"), ("c", "3")].into_iter().collect(),
    ));
    for p in ["a", "b", "c"] {
        recorder.complete(&ProviderRequest::prompt(p)).await.unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.cassette");
    let written = recorder.session().record_cassette(&path).unwrap();
    assert_eq!(written.len(), 3);
    let loaded = Cassette::load(&path).unwrap();
    assert_eq!(loaded, written);
    assert_eq!(loaded.lookup("b"), Some("2"));

    let empty = RecordingProvider::new(MockProvider::new(Cassette::new()));
    let path = dir.path().join("empty.cassette");
    assert!(empty.session().record_cassette(&path).unwrap().is_empty());
    assert!(Cassette::load(&path).unwrap().is_empty());
}

async fn serve(router: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router).await.unwrap() });
    format!("http://{addr}/v1")
}

fn provider(base_url: String) -> HttpProvider {
    HttpProvider::new(HttpProviderConfig {
        base_url,
        model: "test-model".into(),
        api_key: Some("k".into()),
    })
}

#[tokio::test]
async fn http_adapter_speaks_chat_completions() {
    let router = Router::new().route(
        "/v1/chat/completions",
        post(|Json(body): Json<Value>| async move {
            let prompt = body["messages"][0]["content"].as_str().unwrap().to_owned();
            Json(json!({"choices": [{"message": {"role": "assistant", "content": format!("echo: {prompt}")}}]}))
        }),
    );
    let base = serve(router).await;
    let text = provider(base)
        .complete(&ProviderRequest::prompt("hello"))
        .await
        .unwrap();
    assert_eq!(text, "echo: hello");
}

#[tokio::test]
async fn http_adapter_maps_failures() {
    let router = Router::new()
        .route(
            "/slow/chat/completions",
            post(|| async {
                tokio::time::sleep(Duration::from_secs(5)).await;
                "late"
            }),
        )
        .route(
            "/broken/chat/completions",
            post(|| async { (StatusCode::SERVICE_UNAVAILABLE, "overloaded") }),
        );
    let base = serve(router).await.replace("/v1", "");
    let req = ProviderRequest::new("q", 16, 0.0, Duration::from_millis(200)).unwrap();
    let err = provider(format!("{base}/slow")).complete(&req).await.unwrap_err();
    assert_eq!(err, ProviderError::Timeout(Duration::from_millis(200)));
    let err = provider(format!("{base}/broken")).complete(&req).await.unwrap_err();
    assert_eq!(
        err,
        ProviderError::Provider {
            status: Some(503),
            message: "overloaded".into()
        }
    );
}
