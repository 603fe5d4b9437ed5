use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use ner_service::{router, ApiResponse, AppState, ServiceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

fn state(request_limit: usize) -> Arc<AppState> {
    let config = ServiceConfig {
        request_limit,
        wikipedia_base: "https://wiki.test".into(),
        ..ServiceConfig::default()
    };
    Arc::new(AppState::new(config).unwrap())
}

async fn send(state: &Arc<AppState>, request: Request<Body>) -> (StatusCode, Vec<u8>) {
    let response = router(state.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    let body = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

fn post(body: impl Into<Body>) -> Request<Body> {
    Request::post("/api/ner")
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap()
}

async fn ner(state: &Arc<AppState>, text: &str, model: &str) -> (StatusCode, Value) {
    let (status, body) = send(state, post(json!({ "text": text, "model": model }).to_string())).await;
    (status, serde_json::from_slice(&body).unwrap())
}

fn percent_decode(s: &str) -> String {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'%' {
            out.push(u8::from_str_radix(&s[i + 1..i + 3], 16).unwrap());
            i += 3;
        } else {
            out.push(b[i]);
            i += 1;
        }
    }
    String::from_utf8(out).unwrap()
}

#[tokio::test]
async fn health_and_models() {
    let s = state(100);
    let (status, body) = send(&s, Request::get("/healthz").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"ok");
    let (status, body) = send(&s, Request::get("/api/models").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap(), json!(["gazetteer", "mock"]));
    let (status, _) = send(&s, Request::get("/nope").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send(&s, Request::get("/api/ner").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
}

#[tokio::test]
async fn empty_text_has_no_entities() {
    let (status, body) = ner(&state(100), "", "gazetteer").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["entities"], json!([]));
    assert_eq!(body["normalized"], "");
    assert_eq!(body["model"], "gazetteer");
    assert!(body["ms"].is_number());
}

#[tokio::test]
async fn gazetteer_hit_is_decorated() {
    let s = state(100);
    let (status, body) = ner(&s, "زرت القاهرة أمس", "gazetteer").await;
    assert_eq!(status, StatusCode::OK);
    let response: ApiResponse = serde_json::from_value(body).unwrap();
    assert_eq!(response.entities.len(), 1);
    let e = &response.entities[0];
    assert_eq!(e.surface, "القاهرة");
    assert_eq!(e.class, "Population-Center");
    assert_eq!((e.start, e.end), (4, 11));
    let slice: String = response.normalized.chars().skip(e.start).take(e.end - e.start).collect();
    assert_eq!(slice, e.surface);
    assert_eq!(e.url, "https://wiki.test/wiki/%D8%A7%D9%84%D9%82%D8%A7%D9%87%D8%B1%D8%A9");
    assert_eq!(percent_decode(e.url.strip_prefix("https://wiki.test/wiki/").unwrap()), e.surface);
    assert!(e.color.starts_with('#') && e.color.len() == 7);
}

#[tokio::test]
async fn multi_word_entity_link_uses_underscores() {
    let (_, body) = ner(&state(100), "درس في جامعة القاهرة", "gazetteer").await;
    let url = body["entities"][0]["url"].as_str().unwrap();
    assert_eq!(
        percent_decode(url.strip_prefix("https://wiki.test/wiki/").unwrap()),
        "جامعة_القاهرة"
    );
}

#[tokio::test]
async fn identical_requests_identical_responses() {
    let s = state(200);
    for model in ["gazetteer", "mock"] {
        let (_, mut a) = ner(&s, "ana fi beirut wa el qahera 😀", model).await;
        let (_, mut b) = ner(&s, "ana fi beirut wa el qahera 😀", model).await;
        a["ms"] = json!(0);
        b["ms"] = json!(0);
        assert_eq!(a, b);
    }
}

#[tokio::test]
async fn documented_error_classes() {
    let s = state(10);
    let (status, body) = ner(&s, "كلمة كلمة كلمة", "gazetteer").await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(body["error"], "too_large");

    // exactly at the limit is fine
    let (status, _) = ner(&s, "0123456789", "gazetteer").await;
    assert_eq!(status, StatusCode::OK);

    let (status, body) = ner(&s, "نص", "nope").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "unknown_model");

    for bad in ["", "{", "[]", r#"{"text": 3, "model": "mock"}"#, r#"{"model": "mock"}"#] {
        let (status, body) = send(&s, post(bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["error"], "bad_request");
    }

    let (status, _) = send(&s, post(vec![b'x'; 1 << 20])).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn random_bodies_never_break_the_service() {
    let s = state(500);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alphabet: Vec<char> = "ab3'7 {}[]\":,\\ القاهرة😀\u{200F}\u{0}\n\tنmodeltext".chars().collect();
    for i in 0..1000 {
        let body = match i % 3 {
            0 => (0..rng.gen_range(0..80)).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect::<String>(),
            1 => {
                let text: String = (0..rng.gen_range(0..60)).map(|_| rng.gen::<char>()).collect();
                json!({ "text": text, "model": if rng.gen_bool(0.5) { "gazetteer" } else { "mock" } }).to_string()
            }
            _ => {
                let text: String = (0..rng.gen_range(0..40)).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
                json!({ "text": text, "model": "gazetteer" }).to_string()
            }
        };
        let (status, bytes) = send(&s, post(body.clone())).await;
        assert!(
            status == StatusCode::OK || status.is_client_error(),
            "{status} for {body:?}"
        );
        let value: Value = serde_json::from_slice(&bytes).unwrap();
        if status == StatusCode::OK {
            let r: ApiResponse = serde_json::from_value(value).unwrap();
            for e in &r.entities {
                let slice: String = r.normalized.chars().skip(e.start).take(e.end - e.start).collect();
                assert_eq!(slice, e.surface);
            }
        }
    }
    let (status, _) = send(&s, Request::get("/healthz").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
}

struct Misbehaving {
    width: usize,
    sleep_ms: u64,
    fail: bool,
}

impl ner_core::TokenClassifier for Misbehaving {
    fn width(&self) -> usize {
        self.width
    }

    fn scores(
        &self,
        seq: &ner_core::TokenizedSequence,
    ) -> Result<ner_core::ScoreMatrix, ner_core::classifier::ClassifierError> {
        std::thread::sleep(std::time::Duration::from_millis(self.sleep_ms));
        if self.fail {
            return Err(ner_core::classifier::ClassifierError::Process("secret stack trace".into()));
        }
        Ok(ner_core::ScoreMatrix::zeros(seq.len(), self.width))
    }
}

fn misbehaving_state(sleep_ms: u64, fail: bool) -> Arc<AppState> {
    let inventory = ner_core::default_inventory();
    let classifier = Misbehaving { width: inventory.len(), sleep_ms, fail };
    let pipeline = ner_core::Pipeline::from_parts(
        "odd".into(),
        inventory,
        ner_core::Vocabulary::character_level(),
        ner_core::TokenizerConfig::default(),
        ner_core::AlignmentApproach::default(),
        Arc::new(classifier),
        ner_core::Transliterator::default(),
    )
    .unwrap();
    let config = ServiceConfig {
        timeout_ms: 100,
        ..ServiceConfig::default()
    };
    Arc::new(AppState {
        config,
        pipelines: [("odd".to_string(), Arc::new(pipeline))].into(),
    })
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn slow_model_times_out() {
    let started = std::time::Instant::now();
    let (status, body) = ner(&misbehaving_state(1000, false), "نص", "odd").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["error"], "timeout");
    assert!(started.elapsed() < std::time::Duration::from_millis(900));
}

#[tokio::test]
async fn model_failure_is_opaque() {
    let (status, body) = ner(&misbehaving_state(0, true), "نص", "odd").await;
    assert_eq!(status, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(body["error"], "internal");
    assert!(!body.to_string().contains("secret"));
}
