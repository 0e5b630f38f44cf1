mod support;

use std::time::Duration;

use scenario_rag::corpus::{GlossaryEntry, Requirement, RequirementsSet, ScenarioRequest};
use scenario_rag::embedding::{Embedder, EmbedderSpec, EmbeddingError, LocalEmbedder, RemoteEmbedder};
use scenario_rag::generator::{
    generate_scenario, Backend, BackendError, ChatBackend, CompletionRequest, GenerationConfig, GenerationInputs,
    GeneratorError, SYSTEM_MESSAGE,
};
use scenario_rag::http::RetryPolicy;
use scenario_rag::prompt::{build_retrieval_query, AssembledPrompt, PromptMode};
use scenario_rag::vector_index::build_index;
use support::http_mock::{chat_reply, MockServer};

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_retries: 2,
        initial_backoff: Duration::from_millis(5),
        timeout: Duration::from_secs(5),
    }
}

fn reqs() -> RequirementsSet {
    RequirementsSet::new(vec![Requirement {
        req_id: "R1".into(),
        section: "Scan".into(),
        statement: "Jedes Paket wird gescannt.".into(),
    }])
    .unwrap()
}

fn prompt() -> AssembledPrompt {
    build_retrieval_query(&reqs(), &ScenarioRequest::new("Paket scannen"), PromptMode::ZeroShot).unwrap()
}

fn complete(backend: &ChatBackend, prompt: &AssembledPrompt) -> Result<String, BackendError> {
    backend.complete(&CompletionRequest {
        system_message: SYSTEM_MESSAGE,
        prompt,
        temperature: 0.0,
        max_output_tokens: 256,
    })
}

#[test]
fn wire_format_and_bearer_token() {
    let server = MockServer::start(vec![(200, chat_reply("TS: Scan\n1. Scan the parcel."))]);
    std::env::set_var("TEST_WIRE_KEY", "sekret");
    let backend = ChatBackend::new("remote", &server.url, "model-x").with_api_key_env("TEST_WIRE_KEY").with_retry(fast_retry());
    let p = prompt();
    assert_eq!(complete(&backend, &p).unwrap(), "TS: Scan\n1. Scan the parcel.");

    let seen = server.requests();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer sekret"));
    let body = &seen[0].body;
    assert_eq!(body["model"], "model-x");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 256);
    let messages = body["messages"].as_array().unwrap();
    assert_eq!(messages.len(), 2);
    assert_eq!(messages[0]["role"], "system");
    assert_eq!(messages[0]["content"], "You are a software test engineer.");
    assert_eq!(messages[1]["role"], "user");
    assert_eq!(messages[1]["content"], p.text.as_str());
}

#[test]
fn server_errors_are_retried() {
    let server = MockServer::start(vec![
        (500, "{}".into()),
        (503, "{}".into()),
        (200, chat_reply("TS: ok\n1. step")),
    ]);
    let backend = ChatBackend::new("remote", &server.url, "m").with_retry(fast_retry());
    assert_eq!(complete(&backend, &prompt()).unwrap(), "TS: ok\n1. step");
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let server = MockServer::start(vec![(500, "{\"error\":\"down\"}".into())]);
    let backend = ChatBackend::new("remote", &server.url, "m").with_retry(fast_retry());
    match complete(&backend, &prompt()) {
        Err(BackendError::Transport { status, attempts, .. }) => {
            assert_eq!(status, Some(500));
            assert_eq!(attempts, 3);
        }
        other => panic!("expected transport failure, got {other:?}"),
    }
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn auth_failures_are_not_retried() {
    let server = MockServer::start(vec![(401, "{\"error\":\"bad key\"}".into())]);
    let backend = ChatBackend::new("remote", &server.url, "m").with_retry(fast_retry());
    assert!(matches!(complete(&backend, &prompt()), Err(BackendError::Auth { .. })));
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn missing_content_is_a_content_error() {
    let server = MockServer::start(vec![(200, "{\"choices\": []}".into())]);
    let backend = ChatBackend::new("remote", &server.url, "m").with_retry(fast_retry());
    assert!(matches!(complete(&backend, &prompt()), Err(BackendError::Content { .. })));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = ChatBackend::new("remote", format!("http://127.0.0.1:{port}/x"), "m").with_retry(fast_retry());
    assert!(matches!(
        complete(&backend, &prompt()),
        Err(BackendError::Transport { status: None, attempts: 3, .. })
    ));
}

#[test]
fn generation_through_remote_backend() {
    let server = MockServer::start(vec![(200, chat_reply("**Title:** Paket scannen\n1. Open the app\n2. Scan the Paket"))]);
    let backend = ChatBackend::new("remote", &server.url, "m").with_retry(fast_retry());
    let embedder = LocalEmbedder::new(64).unwrap();
    let passages = vec![scenario_rag::corpus::Passage::new("d#000000", "Scan every Paket before delivery.", "d")];
    let index = build_index(&passages, &embedder).unwrap();
    let reqs = reqs();
    let request = ScenarioRequest::new("Paket scannen");
    let glossary = vec![GlossaryEntry::new("Paket", "parcel")];
    let inputs = GenerationInputs { reqs: &reqs, request: &request, glossary: &glossary, index: &index };
    let config = GenerationConfig::new("remote", PromptMode::ZeroShot, 1, 4096);
    let scenario = generate_scenario(&inputs, &config, &embedder, &backend).unwrap();
    assert_eq!(scenario.title, "Paket scannen");
    assert_eq!(scenario.steps, vec!["Open the app", "Scan the Paket"]);
    let sent = &server.requests()[0].body["messages"][1]["content"];
    assert!(sent.as_str().unwrap().contains("Paket: parcel"));
}

#[test]
fn unparseable_output_is_reported_with_raw_text() {
    let server = MockServer::start(vec![(200, chat_reply("I cannot help with that."))]);
    let backend = ChatBackend::new("remote", &server.url, "m").with_retry(fast_retry());
    let embedder = LocalEmbedder::new(64).unwrap();
    let index = build_index(&[scenario_rag::corpus::Passage::new("d#000000", "text", "d")], &embedder).unwrap();
    let reqs = reqs();
    let request = ScenarioRequest::new("Paket scannen");
    let inputs = GenerationInputs { reqs: &reqs, request: &request, glossary: &[], index: &index };
    let config = GenerationConfig::new("remote", PromptMode::ZeroShot, 1, 4096);
    match generate_scenario(&inputs, &config, &embedder, &backend) {
        Err(GeneratorError::Parse { raw_output }) => assert_eq!(raw_output, "I cannot help with that."),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn remote_embedder_round_trip() {
    let server = MockServer::start(vec![(200, "{\"data\": [{\"embedding\": [0.5, 0.5, 0.0]}]}".into())]);
    let spec = EmbedderSpec::remote(&server.url, "embed-1", 3);
    let embedder = RemoteEmbedder::from_spec(spec).unwrap().with_retry(fast_retry());
    assert_eq!(embedder.embed("Rücksendung").unwrap().values(), &[0.5, 0.5, 0.0]);
    let body = &server.requests()[0].body;
    assert_eq!(body["input"], "Rücksendung");
    assert_eq!(body["model"], "embed-1");
    assert_eq!(embedder.fingerprint(), "remote:3:embed-1");
}

#[test]
fn remote_embedder_dimension_mismatch() {
    let server = MockServer::start(vec![(200, "[1.0, 2.0]".into())]);
    let embedder = RemoteEmbedder::from_spec(EmbedderSpec::remote(&server.url, "e", 3)).unwrap().with_retry(fast_retry());
    assert!(matches!(embedder.embed("x"), Err(EmbeddingError::DimensionMismatch { left: 3, right: 2 })));
}
