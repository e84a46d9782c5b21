use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use ssp_core::oracle::{AttributeOracle, HttpOracle, OracleError, ScoreRequest};

const SCORES: &str = "[0.1,0.25,-3.5e-7,17.0]";

#[derive(Clone, Copy)]
enum Mode {
    Ok,
    FailOnce,
    BadRequest,
    WrongLength,
}

struct Stub {
    url: String,
    bodies: Arc<Mutex<Vec<String>>>,
}

fn read_request(stream: &mut impl Read) -> Option<(String, String)> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let mut len = 0usize;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        if h == "\r\n" || h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).ok()?;
    Some((path, String::from_utf8(body).ok()?))
}

fn serve(mode: Mode) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let seen = bodies.clone();
    thread::spawn(move || {
        let mut calls = 0;
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let Some((path, body)) = read_request(&mut stream) else { continue };
            calls += 1;
            let (status, payload) = match (path.as_str(), mode) {
                ("/health", _) => ("200 OK", r#"{"status":"ok"}"#.to_string()),
                (_, Mode::FailOnce) if calls == 1 => ("500 Internal Server Error", "boom".to_string()),
                (_, Mode::BadRequest) => ("400 Bad Request", "bad".to_string()),
                (_, Mode::WrongLength) => ("200 OK", r#"{"scores":[1.0]}"#.to_string()),
                _ => ("200 OK", format!(r#"{{"scores":{SCORES}}}"#)),
            };
            seen.lock().unwrap().push(body);
            let resp = format!(
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    Stub { url, bodies }
}

fn request() -> ScoreRequest {
    ScoreRequest {
        image: "images/1.jpg".into(),
        bbox: Some([10.0, 20.0, 30.0, 40.0]),
        sentences: ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect(),
    }
}

#[test]
fn round_trip_is_byte_identical() {
    let stub = serve(Mode::Ok);
    let client = HttpOracle::new(&stub.url).unwrap();
    client.health().unwrap();
    let resp = client.score(&request()).unwrap();
    assert_eq!(serde_json::to_string(&resp.scores).unwrap(), SCORES);
    let bodies = stub.bodies.lock().unwrap();
    assert_eq!(
        bodies.last().unwrap(),
        r#"{"image":"images/1.jpg","bbox":[10.0,20.0,30.0,40.0],"sentences":["a","b","c","d"]}"#
    );
}

#[test]
fn server_error_is_retried() {
    let stub = serve(Mode::FailOnce);
    let client = HttpOracle::new(&stub.url).unwrap();
    assert_eq!(client.score(&request()).unwrap().scores.len(), 4);
    assert_eq!(stub.bodies.lock().unwrap().len(), 2);
}

#[test]
fn client_errors_and_bad_payloads_fail() {
    let stub = serve(Mode::BadRequest);
    let client = HttpOracle::new(&stub.url).unwrap();
    assert!(matches!(client.score(&request()), Err(OracleError::Server { status: 400, .. })));
    assert_eq!(stub.bodies.lock().unwrap().len(), 1);

    let stub = serve(Mode::WrongLength);
    let client = HttpOracle::new(&stub.url).unwrap();
    assert!(matches!(client.score(&request()), Err(OracleError::Malformed(_))));
}

#[test]
fn unreachable_service_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let client = HttpOracle::with_config(&format!("http://127.0.0.1:{port}"), Duration::from_secs(2), 2).unwrap();
    assert!(matches!(client.score(&request()), Err(OracleError::Transport(_))));
    assert!(HttpOracle::new("ftp://x").is_err());
}
