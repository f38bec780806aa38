mod common;

use std::time::Duration;

use refprime::client::{
    ClientError, CompletionRequest, EndpointConfig, ProviderKind, RemoteClient, ReqwestTransport,
};

fn client(base: String, provider: ProviderKind) -> RemoteClient {
    let config = EndpointConfig {
        base_url: base,
        provider,
        requests_per_minute: 0.0,
        backoff_base_ms: 1,
        backoff_max_ms: 5,
        max_retries: 2,
        ..Default::default()
    };
    RemoteClient::new(config, "sk-test", Box::new(ReqwestTransport::new(Duration::from_secs(5)).unwrap()))
}

#[test]
fn completion_request_shape_and_answer() {
    let (base, server) = common::serve(vec![(200, common::completion_body(" Yes."))]);
    let c = client(base, ProviderKind::Completions);
    let mut req = CompletionRequest::new("Q: Did it rain?\nA:", 0.35, "text-davinci-003");
    req.stop_sequences = vec!["\n".into()];
    assert_eq!(c.complete(&req).unwrap(), " Yes.");
    let seen = server.join().unwrap();
    assert!(seen[0].request_line.starts_with("POST /v1/completions "));
    assert!(seen[0].headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer sk-test")));
    let body: serde_json::Value = serde_json::from_str(&seen[0].body).unwrap();
    assert_eq!(body["prompt"], "Q: Did it rain?\nA:");
    assert_eq!(body["temperature"], 0.35);
    assert_eq!(body["max_tokens"], 8);
    assert_eq!(body["stop"], serde_json::json!(["\n"]));
}

#[test]
fn chat_endpoint_reads_message_content() {
    let reply = serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": "No" } }] });
    let (base, server) = common::serve(vec![(200, reply.to_string())]);
    let c = client(base, ProviderKind::Chat);
    assert_eq!(c.complete(&CompletionRequest::new("p", 0.2, "m")).unwrap(), "No");
    let seen = server.join().unwrap();
    assert!(seen[0].request_line.starts_with("POST /v1/chat/completions "));
    let body: serde_json::Value = serde_json::from_str(&seen[0].body).unwrap();
    assert_eq!(body["messages"][0]["content"], "p");
}

#[test]
fn rate_limit_then_success_is_retried() {
    let (base, server) = common::serve(vec![(429, "{}".into()), (503, "{}".into()), (200, common::completion_body("yes"))]);
    let c = client(base, ProviderKind::Completions);
    assert_eq!(c.complete(&CompletionRequest::new("p", 0.2, "m")).unwrap(), "yes");
    assert_eq!(c.retries(), 2);
    assert_eq!(server.join().unwrap().len(), 3);
}

#[test]
fn bad_credentials_fail_on_the_first_request() {
    let (base, server) = common::serve(vec![(401, r#"{"error":"invalid key"}"#.into())]);
    let c = client(base, ProviderKind::Completions);
    assert!(matches!(c.check_credentials(), Err(ClientError::Auth { status: 401, .. })));
    assert_eq!(c.requests_sent(), 1);
    assert_eq!(server.join().unwrap().len(), 1);
}
