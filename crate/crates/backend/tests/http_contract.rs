//! Exercises the HTTP client against a minimal in-process completions
//! server: wire parsing, retry behavior, scoring-boundary validation, and
//! the record path.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::{json, Value};
use tps_backend::{
    answer_string_probability, embed_table, next_token_distribution, Backend, BackendConfig,
    BackendError, HttpBackend, PromptBundle, RecordingBackend, ReplayBackend, Request,
};
use tps_core::{Answer, AnswerSpace};

type Handler = dyn Fn(&str, &Value, usize) -> (u16, Value) + Send + Sync;

/// One-thread-per-connection HTTP server answering JSON POSTs via the
/// supplied handler (path, body, request ordinal) -> (status, body).
fn spawn_server(handler: Arc<Handler>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let counter = Arc::new(AtomicUsize::new(0));
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let handler = Arc::clone(&handler);
            let counter = Arc::clone(&counter);
            std::thread::spawn(move || {
                let ordinal = counter.fetch_add(1, Ordering::SeqCst);
                let _ = serve_one(stream, &*handler, ordinal);
            });
        }
    });
    format!("http://{addr}")
}

fn serve_one(
    mut stream: TcpStream,
    handler: &Handler,
    ordinal: usize,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_owned();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some(value) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let (status, response) = handler(&path, &body, ordinal);
    let payload = response.to_string();
    let head = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        payload.len()
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(payload.as_bytes())?;
    stream.flush()
}

fn config(base_url: String) -> BackendConfig {
    BackendConfig {
        base_url,
        model: "test-model".into(),
        retries: 2,
        backoff_ms: 0,
        timeout_ms: 5_000,
        ..Default::default()
    }
}

fn completions_handler(path: &str, body: &Value) -> (u16, Value) {
    match path {
        "/v1/completions" if body["echo"] == json!(true) => {
            // Echo scoring: tokenize the prompt as "words plus leading
            // space", null logprob on the first token, -ln 2 elsewhere.
            let prompt = body["prompt"].as_str().unwrap_or_default();
            let mut tokens = Vec::new();
            let mut offsets = Vec::new();
            let mut logprobs: Vec<Value> = Vec::new();
            let mut pos = 0;
            for (i, chunk) in split_with_spaces(prompt).into_iter().enumerate() {
                offsets.push(pos);
                pos += chunk.len();
                tokens.push(chunk);
                logprobs.push(if i == 0 {
                    Value::Null
                } else {
                    json!(-(2.0f64.ln()))
                });
            }
            (
                200,
                json!({"choices": [{"text": prompt, "logprobs": {
                    "tokens": tokens,
                    "token_logprobs": logprobs,
                    "text_offset": offsets,
                }}]}),
            )
        }
        "/v1/completions" => (
            200,
            json!({"choices": [{"text": " 9", "logprobs": {
                "top_logprobs": [{" 9": -0.35667494393873245, "8": -1.6094379124341003, " maybe": -2.995732273553991}],
            }}]}),
        ),
        "/v1/embeddings" => {
            let n = body["input"].as_array().map_or(0, Vec::len);
            let data: Vec<Value> = (0..n)
                .map(|i| json!({"index": i, "embedding": [i as f64 + 1.0, 1.0]}))
                .collect();
            (200, json!({"data": data}))
        }
        _ => (404, json!({"error": "no such route"})),
    }
}

/// Splits "a bc" into ["a", " bc"]; a crude stand-in for a tokenizer whose
/// tokens carry their leading space.
fn split_with_spaces(text: &str) -> Vec<String> {
    let mut chunks = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch == ' ' && !current.is_empty() {
            chunks.push(std::mem::take(&mut current));
        }
        current.push(ch);
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

#[test]
fn next_token_distribution_over_the_wire() {
    let base = spawn_server(Arc::new(|path: &str, body: &Value, _| {
        completions_handler(path, body)
    }));
    let cfg = config(base);
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let space = AnswerSpace::new(
        vec![Answer::new("9").unwrap(), Answer::new("8").unwrap()],
        true,
    )
    .unwrap();
    let bundle = PromptBundle::new("", None, "rate this").unwrap();
    let (dist, stats) = next_token_distribution(&backend, &bundle, &space, &cfg).unwrap();
    assert!((dist.prob_text("9") - 0.7).abs() < 1e-9); // " 9" stripped, e^-0.3566 ≈ 0.7
    assert!((dist.prob_text("8") - 0.2).abs() < 1e-9);
    assert!((dist.sentinel_mass() - 0.1).abs() < 1e-9);
    assert_eq!(stats.matched_tokens, 2);
}

#[test]
fn scoring_chain_rule_over_the_wire() {
    let base = spawn_server(Arc::new(|path: &str, body: &Value, _| {
        completions_handler(path, body)
    }));
    let cfg = config(base);
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let bundle = PromptBundle::new("", None, "Q:").unwrap();
    // Continuation " a b" tokenizes to [" a", " b"]: p = 0.5 · 0.5.
    let answer = Answer::new(" a b").unwrap();
    let p = answer_string_probability(&backend, &bundle, &answer, &cfg).unwrap();
    assert!((p - 0.25).abs() < 1e-12);
}

#[test]
fn scoring_rejects_straddled_boundary() {
    let base = spawn_server(Arc::new(|path: &str, body: &Value, _| {
        completions_handler(path, body)
    }));
    let cfg = config(base);
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let bundle = PromptBundle::new("", None, "Q:").unwrap();
    // "xyz" glues onto the prompt's last token ("Q:xyz"), so no token
    // starts exactly at the boundary.
    let answer = Answer::new("xyz").unwrap();
    assert!(matches!(
        answer_string_probability(&backend, &bundle, &answer, &cfg),
        Err(BackendError::Tokenization { .. })
    ));
}

#[test]
fn embeddings_over_the_wire() {
    let base = spawn_server(Arc::new(|path: &str, body: &Value, _| {
        completions_handler(path, body)
    }));
    let cfg = config(base);
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let table = embed_table(
        &backend,
        &["alpha".to_owned(), "beta".to_owned()],
        &cfg,
    )
    .unwrap();
    assert_eq!(table.len(), 2);
    assert_eq!(table.get("alpha"), Some(&[1.0, 1.0][..]));
    assert_eq!(table.get("beta"), Some(&[2.0, 1.0][..]));
}

#[test]
fn transient_failures_are_retried_idempotently() {
    // First two requests fail with 500; the third succeeds.
    let base = spawn_server(Arc::new(|path: &str, body: &Value, ordinal: usize| {
        if ordinal < 2 {
            (500, json!({"error": "overloaded"}))
        } else {
            completions_handler(path, body)
        }
    }));
    let cfg = config(base);
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let space = AnswerSpace::new(vec![Answer::new("9").unwrap()], true).unwrap();
    let bundle = PromptBundle::new("", None, "rate this").unwrap();
    let (retried, _) = next_token_distribution(&backend, &bundle, &space, &cfg).unwrap();

    // A clean backend produces the same distribution: retries are
    // invisible in the output.
    let clean_base = spawn_server(Arc::new(|path: &str, body: &Value, _| {
        completions_handler(path, body)
    }));
    let clean_cfg = config(clean_base);
    let clean = HttpBackend::new(clean_cfg.clone()).unwrap();
    let (direct, _) = next_token_distribution(&clean, &bundle, &space, &clean_cfg).unwrap();
    assert_eq!(retried.probs(), direct.probs());
}

#[test]
fn client_errors_are_not_retried() {
    let hits = Arc::new(AtomicUsize::new(0));
    let hits_in_handler = Arc::clone(&hits);
    let base = spawn_server(Arc::new(move |_: &str, _: &Value, _| {
        hits_in_handler.fetch_add(1, Ordering::SeqCst);
        (400, json!({"error": "bad request"}))
    }));
    let cfg = config(base);
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let result = backend.execute(&Request::NextToken {
        model: cfg.model.clone(),
        prompt: "p".into(),
        top_k: 3,
    });
    assert!(matches!(
        result,
        Err(BackendError::Rejected { status: 400, .. })
    ));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn recording_a_live_backend_then_replaying_matches() {
    let base = spawn_server(Arc::new(|path: &str, body: &Value, _| {
        completions_handler(path, body)
    }));
    let cfg = config(base);
    let recorder = RecordingBackend::new(HttpBackend::new(cfg.clone()).unwrap());
    let request = Request::NextToken {
        model: cfg.model.clone(),
        prompt: "rate this".into(),
        top_k: cfg.top_k,
    };
    let live = recorder.execute(&request).unwrap();

    let mut fixture = Vec::new();
    recorder.write_fixture(&mut fixture).unwrap();
    let replay = ReplayBackend::from_reader(fixture.as_slice()).unwrap();
    assert_eq!(replay.execute(&request).unwrap(), live);
}
