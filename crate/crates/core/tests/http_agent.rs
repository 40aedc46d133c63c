use llmo_core::agents::stub::{LoopbackStub, StubReply};
use llmo_core::agents::{http_generate, HttpLlmAgent, HttpLlmAgentConfig};
use llmo_core::optimizer::seeded_stream;
use llmo_core::prompt::NumberFormat;
use llmo_core::{Agent, AgentFailure, AgentRequest, Bounds, Ensemble, LlmoConfig, Population, SamplerKind};

fn config(url: &str) -> HttpLlmAgentConfig {
    let mut c = HttpLlmAgentConfig::new(url, "stub-model");
    c.backoff_ms = 1;
    c.timeout_ms = 2_000;
    c
}

#[test]
fn success_round_trip() {
    let stub = LoopbackStub::start(vec![StubReply::content("Here you go:\n0.100,0.200\n0.300,0.400\n")]).unwrap();
    let mut c = config(stub.url());
    c.temperature = 0.7;
    c.credential_env = Some("LLMO_STUB_TOKEN_SUCCESS".into());
    std::env::set_var("LLMO_STUB_TOKEN_SUCCESS", "secret-abc");
    let agent = HttpLlmAgent::new(c).unwrap();
    let bounds = Bounds::unit(2);
    let examples = Population::from_rows(&[vec![0.5, 0.5], vec![0.6, 0.6]], &bounds).unwrap();
    let request = AgentRequest {
        examples: &examples,
        prompt: Some("PROMPT TEXT"),
        rows: 2,
        bounds: &bounds,
        format: NumberFormat::default(),
    };
    let pop = agent.generate(&request, &mut seeded_stream(0, 1)).unwrap();
    assert_eq!(pop.rows(), vec![vec![0.1, 0.2], vec![0.3, 0.4]]);

    let reqs = stub.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].method, "POST");
    assert_eq!(reqs[0].path, "/v1/chat/completions");
    assert_eq!(reqs[0].header("authorization"), Some("Bearer secret-abc"));
    let body: serde_json::Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "PROMPT TEXT");
}

#[test]
fn retries_after_server_errors() {
    let stub = LoopbackStub::start(vec![
        StubReply::status(500),
        StubReply::status(500),
        StubReply::content("1,2"),
    ])
    .unwrap();
    let reply = http_generate(&config(stub.url()), "p").unwrap();
    assert_eq!(reply.text, "1,2");
    assert_eq!(reply.retries, 2);
    assert_eq!(stub.requests().len(), 3);
}

#[test]
fn gives_up_after_max_retries() {
    let stub = LoopbackStub::start(vec![StubReply::status(503)]).unwrap();
    let mut c = config(stub.url());
    c.max_retries = 2;
    match http_generate(&c, "p") {
        Err(AgentFailure::Api { status, attempts, .. }) => {
            assert_eq!(status, 503);
            assert_eq!(attempts, 3);
        }
        other => panic!("expected an API failure, got {other:?}"),
    }
    assert_eq!(stub.requests().len(), 3);
}

#[test]
fn timeout_is_a_transport_failure() {
    let stub = LoopbackStub::start(vec![StubReply::content("1").delayed(1_500)]).unwrap();
    let mut c = config(stub.url());
    c.timeout_ms = 100;
    c.max_retries = 1;
    let started = std::time::Instant::now();
    match http_generate(&c, "p") {
        Err(AgentFailure::Transport { attempts, .. }) => assert_eq!(attempts, 2),
        other => panic!("expected a transport failure, got {other:?}"),
    }
    assert!(started.elapsed() < std::time::Duration::from_millis(1_400));
}

#[test]
fn timeout_then_success() {
    let stub = LoopbackStub::start(vec![StubReply::content("9").delayed(1_000), StubReply::content("0.5")]).unwrap();
    let mut c = config(stub.url());
    c.timeout_ms = 100;
    let reply = http_generate(&c, "p").unwrap();
    assert_eq!((reply.text.as_str(), reply.retries), ("0.5", 1));
}

#[test]
fn prose_reply_is_a_parse_failure() {
    let stub = LoopbackStub::start(vec![StubReply::content("I cannot help with that.")]).unwrap();
    let agent = HttpLlmAgent::new(config(stub.url())).unwrap();
    let bounds = Bounds::unit(1);
    let examples = Population::from_rows(&[vec![0.5]], &bounds).unwrap();
    let request = AgentRequest {
        examples: &examples,
        prompt: Some("p"),
        rows: 1,
        bounds: &bounds,
        format: NumberFormat::default(),
    };
    assert!(matches!(
        agent.generate(&request, &mut seeded_stream(0, 1)),
        Err(AgentFailure::Parse(_))
    ));
}

#[test]
fn optimizer_drives_the_http_agent() {
    // Every reply proposes the same two rows; the optimizer must pick up 0.9.
    let stub = LoopbackStub::start(vec![StubReply::content("0.900\n0.100")]).unwrap();
    let agent = HttpLlmAgent::new(config(stub.url())).unwrap();
    let ensemble = Ensemble::single(agent);
    let cfg = LlmoConfig::new(Bounds::unit(1), 2, 3, SamplerKind::Elitist);
    let reward = |x: &[f64]| x[0];
    let trace = llmo_core::run_llmo(&cfg, &ensemble, &reward, 4).unwrap();
    assert_eq!(trace.records.len(), 3);
    assert!(trace.best_reward >= 0.9);
    let reqs = stub.requests();
    assert_eq!(reqs.len(), 3);
    let body: serde_json::Value = serde_json::from_str(&reqs[0].body).unwrap();
    let prompt = body["messages"][0]["content"].as_str().unwrap();
    assert!(prompt.contains("In-context examples:"), "{prompt}");
}
