//! The HTTP prior client against a scripted in-process server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use spatial_relation::prior::{PriorProvider, RemoteConfig, RemotePrior};
use spatial_relation::Error;

/// Answers each request with the next scripted (status, body); the last
/// entry repeats. Request bodies are recorded.
struct MockServer {
    url: String,
    requests: Arc<Mutex<Vec<Value>>>,
}

impl MockServer {
    fn start(script: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let seen = Arc::clone(&requests);
        thread::spawn(move || {
            for (i, stream) in listener.incoming().enumerate() {
                let Ok(mut stream) = stream else { return };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                let mut line = String::new();
                loop {
                    line.clear();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                seen.lock().unwrap().push(serde_json::from_slice(&body).unwrap_or(Value::Null));
                let (status, payload) = &script[i.min(script.len() - 1)];
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                let _ = stream.write_all(reply.as_bytes());
            }
        });
        Self { url, requests }
    }

    fn hits(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

fn client(url: &str, top_k: usize) -> RemotePrior {
    let mut config = RemoteConfig::new(url);
    config.top_k = top_k;
    config.backoff = Duration::from_millis(5);
    config.timeout = Duration::from_secs(5);
    RemotePrior::new(config).unwrap()
}

fn predictions(n: usize) -> String {
    let preds: Vec<Value> =
        (0..n).map(|i| json!({"relation": format!("rel{i}"), "score": 1.0 / (i as f64 + 1.0)})).collect();
    json!({"predictions": preds, "model_id": "mock"}).to_string()
}

#[test]
fn full_response_of_twenty() {
    let server = MockServer::start(vec![(200, predictions(20))]);
    let record = client(&server.url, 20).query("Man", "horse").unwrap();
    assert_eq!(record.predictions.len(), 20);
    assert_eq!(record.subject, "man");
    assert_eq!(record.predictions[0].relation, "rel0");
    let sent = &server.requests.lock().unwrap()[0];
    assert_eq!(sent, &json!({"subject": "Man", "object": "horse", "top_k": 20}));
}

#[test]
fn fewer_than_top_k_is_fine() {
    let server = MockServer::start(vec![(200, predictions(3))]);
    let record = client(&server.url, 20).query("cup", "table").unwrap();
    assert_eq!(record.predictions.len(), 3);
}

#[test]
fn negative_score_is_a_schema_violation() {
    let body = json!({"predictions": [{"relation": "on", "score": 0.5}, {"relation": "under", "score": -0.1}]});
    let server = MockServer::start(vec![(200, body.to_string())]);
    let err = client(&server.url, 20).query("a", "b").unwrap_err();
    assert!(matches!(err, Error::Provider(ref m) if m.contains("schema violation")), "{err}");
    assert_eq!(server.hits(), 1, "schema violations are not retried");
}

#[test]
fn too_many_predictions_rejected() {
    let server = MockServer::start(vec![(200, predictions(6))]);
    let err = client(&server.url, 5).query("a", "b").unwrap_err();
    assert!(err.to_string().contains("6 predictions for top_k 5"), "{err}");
}

#[test]
fn malformed_body_rejected() {
    let server = MockServer::start(vec![(200, "{\"preds\": 1}".into())]);
    assert!(client(&server.url, 5).query("a", "b").is_err());
}

#[test]
fn transient_errors_are_retried() {
    let server = MockServer::start(vec![(503, "{}".into()), (429, "{}".into()), (200, predictions(2))]);
    let record = client(&server.url, 5).query("a", "b").unwrap();
    assert_eq!(record.predictions.len(), 2);
    assert_eq!(server.hits(), 3);
}

#[test]
fn persistent_server_error_gives_up() {
    let server = MockServer::start(vec![(500, "{}".into())]);
    let err = client(&server.url, 5).query("a", "b").unwrap_err();
    assert!(err.to_string().contains("giving up after 4 attempts"), "{err}");
    assert_eq!(server.hits(), 4);
}

#[test]
fn client_error_is_not_retried() {
    let server = MockServer::start(vec![(422, "{}".into())]);
    let err = client(&server.url, 5).query("", "b").unwrap_err();
    assert!(err.to_string().contains("422"), "{err}");
    assert_eq!(server.hits(), 1);
}

#[test]
fn unreachable_endpoint_fails_after_retries() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = client(&format!("http://127.0.0.1:{port}"), 5).query("a", "b").unwrap_err();
    assert!(matches!(err, Error::Provider(_)), "{err}");
}

#[test]
fn concurrent_queries_share_one_client() {
    let server = MockServer::start(vec![(200, predictions(4))]);
    let prior = Arc::new(client(&server.url, 5));
    let handles: Vec<_> = (0..16)
        .map(|i| {
            let p = Arc::clone(&prior);
            thread::spawn(move || p.query(&format!("s{i}"), "o").unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap().predictions.len(), 4);
    }
    assert_eq!(server.hits(), 16);
}
