use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use commons_egta::gateway::{Backend, ChatMessage, Gateway, GatewayConfig, RequestTags};
use commons_egta::Error;

struct Seen {
    bodies: Vec<String>,
    auth: Vec<Option<String>>,
}

/// Serves one canned (status, body) per connection, in order, recording requests.
fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Seen>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Seen { bodies: Vec::new(), auth: Vec::new() }));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream);
            let mut length = 0usize;
            let mut auth = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = Some(line["authorization:".len()..].trim().to_string());
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            {
                let mut s = log.lock().unwrap();
                s.bodies.push(String::from_utf8(buf).unwrap());
                s.auth.push(auth);
            }
            let mut stream = reader.into_inner();
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (url, seen)
}

fn chat(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn gateway(url: String, retries: u32) -> Gateway {
    Gateway::new(GatewayConfig {
        backend: Backend::Http,
        endpoint: Some(url),
        api_key: Some("sk-test".into()),
        model: "test-model".into(),
        max_retries: retries,
        backoff_ms: 1,
        timeout_secs: 5.0,
        ..GatewayConfig::default()
    })
    .unwrap()
}

fn ask(gw: &Gateway) -> commons_egta::Result<String> {
    let req = gw.request(vec![ChatMessage::system("be brief"), ChatMessage::user("how many fields?")]);
    gw.complete(&req, RequestTags { year: 2, household: Some(1), pipeline: "generative".into(), purpose: "strategy".into() })
}

#[test]
fn successful_completion_is_returned_and_logged() {
    let (url, seen) = serve(vec![(200, chat("{\"fields\": 3, \"fish\": 2}"))]);
    let gw = gateway(url, 0);
    assert_eq!(ask(&gw).unwrap(), "{\"fields\": 3, \"fish\": 2}");
    assert_eq!(gw.network_calls(), 1);

    let seen = seen.lock().unwrap();
    let body: serde_json::Value = serde_json::from_str(&seen.bodies[0]).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][1]["content"], "how many fields?");
    assert_eq!(seen.auth[0].as_deref(), Some("Bearer sk-test"));

    let log = gw.log_entries();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].attempts, 1);
    assert_eq!(log[0].tags.household, Some(1));
    assert!(log[0].error.is_none());
}

#[test]
fn server_error_then_success_retries() {
    let (url, _) = serve(vec![(500, "{}".into()), (200, chat("7"))]);
    let gw = gateway(url, 2);
    assert_eq!(ask(&gw).unwrap(), "7");
    assert_eq!(gw.network_calls(), 2);
    assert_eq!(gw.log_entries()[0].attempts, 2);
}

#[test]
fn exhausted_retries_report_transport_error() {
    let (url, _) = serve(vec![(503, "{}".into()), (503, "{}".into()), (503, "{}".into())]);
    let gw = gateway(url, 2);
    match ask(&gw) {
        Err(Error::Transport { attempts, message }) => {
            assert_eq!(attempts, 3);
            assert!(message.contains("503"), "{message}");
        }
        other => panic!("expected a transport error, got {other:?}"),
    }
    assert_eq!(gw.network_calls(), 3);
    assert!(gw.log_entries()[0].error.is_some());
}

#[test]
fn malformed_body_is_a_transport_error() {
    let (url, _) = serve(vec![(200, "{\"nothing\": true}".into())]);
    let gw = gateway(url, 0);
    assert!(matches!(ask(&gw), Err(Error::Transport { attempts: 1, .. })));
}

#[test]
fn refused_connection_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let gw = gateway(format!("http://127.0.0.1:{port}/v1/chat/completions"), 1);
    assert!(matches!(ask(&gw), Err(Error::Transport { attempts: 2, .. })));
}
