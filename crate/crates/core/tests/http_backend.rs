use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use jatrans::correct::{correct_section, correct_sections, CorrectionError, CorrectionRequest, HttpBackend};

struct Captured {
    authorization: Option<String>,
    body: serde_json::Value,
}

/// Serves one scripted response per connection, then stops.
fn mock_server(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Captured>>>, thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let handle = thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut content_length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap_or((line, ""));
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => content_length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut raw = vec![0; content_length];
            reader.read_exact(&mut raw).unwrap();
            log.lock().unwrap().push(Captured {
                authorization,
                body: serde_json::from_slice(&raw).unwrap(),
            });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen, handle)
}

fn completion(content: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }).to_string()
}

fn request(text: &str) -> CorrectionRequest {
    CorrectionRequest {
        model_id: "test-model".into(),
        backoff: Duration::ZERO,
        timeout: Duration::from_secs(5),
        ..CorrectionRequest::new(text)
    }
}

#[test]
fn sends_chat_request_and_extracts_output() {
    let (url, seen, server) = mock_server(vec![(200, completion("<output>قال الخزري</output>"))]);
    let backend = HttpBackend::new(url, "secret");
    let response = correct_section(&request("قال الكزري"), &backend).unwrap();
    server.join().unwrap();
    assert_eq!(response.corrected, "قال الخزري");
    assert!(response.extracted);

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer secret"));
    assert_eq!(seen[0].body["model"], "test-model");
    let prompt = seen[0].body["messages"][0]["content"].as_str().unwrap();
    assert!(prompt.contains("<input> قال الكزري </input>"));
    assert!(seen[0].body.get("temperature").is_none());
}

#[test]
fn retries_transient_statuses_once_per_attempt() {
    let script = vec![
        (503, "{}".to_string()),
        (429, "{}".to_string()),
        (200, completion("<output>ok</output>")),
    ];
    let (url, seen, server) = mock_server(script);
    let response = correct_section(&request("x"), &HttpBackend::new(url, "k")).unwrap();
    server.join().unwrap();
    assert_eq!(response.corrected, "ok");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn exhausted_retries_report_attempts() {
    let script = vec![(500, "{}".to_string()), (502, "{}".to_string())];
    let (url, _, server) = mock_server(script);
    let req = CorrectionRequest { max_retries: 1, ..request("x") };
    let err = correct_section(&req, &HttpBackend::new(url, "k")).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, CorrectionError::TransportFailure { attempts: 2, .. }), "{err}");
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen, server) = mock_server(vec![(401, "{}".to_string())]);
    let err = correct_section(&request("x"), &HttpBackend::new(url, "bad")).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, CorrectionError::TransportFailure { attempts: 1, .. }));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn untagged_reply_falls_back_to_raw() {
    let (url, _, server) = mock_server(vec![(200, completion("  قال الخزري\n"))]);
    let response = correct_section(&request("x"), &HttpBackend::new(url, "k")).unwrap();
    server.join().unwrap();
    assert!(!response.extracted);
    assert_eq!(response.corrected, "قال الخزري");
}

#[test]
fn decoding_options_pass_through() {
    let (url, seen, server) = mock_server(vec![(200, completion("<output>a</output>"))]);
    let mut backend = HttpBackend::new(url, "k");
    backend.temperature = Some(0.0);
    backend.top_p = Some(0.5);
    correct_section(&request("a"), &backend).unwrap();
    server.join().unwrap();
    let body = &seen.lock().unwrap()[0].body;
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["top_p"], 0.5);
}

#[test]
fn connection_refused_is_transient() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}/v1/chat/completions");
    let req = CorrectionRequest { max_retries: 2, ..request("x") };
    let err = correct_section(&req, &HttpBackend::new(url, "k")).unwrap_err();
    assert!(matches!(err, CorrectionError::TransportFailure { attempts: 3, .. }), "{err}");
}

#[test]
fn concurrent_batch_one_response_per_request() {
    let script: Vec<_> = (0..6).map(|_| (200, completion("<output>same</output>"))).collect();
    let (url, seen, server) = mock_server(script);
    let requests: Vec<_> = (0..6).map(|i| request(&format!("s{i}"))).collect();
    let out = correct_sections(&requests, &HttpBackend::new(url, "k"), 3);
    server.join().unwrap();
    assert_eq!(out.len(), 6);
    assert!(out.iter().all(|r| r.as_ref().unwrap().corrected == "same"));
    let mut prompts: Vec<String> = seen
        .lock()
        .unwrap()
        .iter()
        .map(|c| c.body["messages"][0]["content"].as_str().unwrap().to_string())
        .collect();
    prompts.sort();
    prompts.dedup();
    assert_eq!(prompts.len(), 6);
}
