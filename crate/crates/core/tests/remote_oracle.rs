//! The HTTP oracle client against an in-process mock model server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Value};
use trepac::case_study::{self, builtin_fixture};
use trepac::extraction::{trepac, ExtractionConfig};
use trepac::feature::enumerate_candidate_splits;
use trepac::oracle::{build_training_set, RemoteConfig, RemoteOracle};
use trepac::{Distribution, Error, MembershipOracle, TabularExample};

#[derive(Debug, Clone)]
struct Request {
    method: String,
    path: String,
    body: Value,
}

type Handler = dyn Fn(&Request, usize) -> (u16, String) + Send + Sync;

struct MockServer {
    url: String,
    requests: Arc<Mutex<Vec<Request>>>,
}

impl MockServer {
    fn start(handler: impl Fn(&Request, usize) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let counter = Arc::new(AtomicUsize::new(0));
        let log = Arc::clone(&requests);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let handler = Arc::clone(&handler);
                let log = Arc::clone(&log);
                let counter = Arc::clone(&counter);
                std::thread::spawn(move || serve(stream, &*handler, &log, &counter));
            }
        });
        MockServer { url, requests }
    }

    fn batch_requests(&self) -> Vec<Request> {
        self.requests
            .lock()
            .unwrap()
            .iter()
            .filter(|r| r.path == "/batch")
            .cloned()
            .collect()
    }
}

fn serve(stream: TcpStream, handler: &Handler, log: &Mutex<Vec<Request>>, counter: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let mut parts = line.split_whitespace();
        let method = parts.next().unwrap_or_default().to_owned();
        let path = parts.next().unwrap_or_default().to_owned();
        let mut length = 0;
        loop {
            let mut header = String::new();
            reader.read_line(&mut header).unwrap();
            let header = header.trim_end();
            if header.is_empty() {
                break;
            }
            if let Some((name, value)) = header.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    length = value.trim().parse().unwrap();
                }
            }
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let body = if body.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&body).unwrap()
        };
        let request = Request { method, path, body };
        let index = counter.fetch_add(1, Ordering::SeqCst);
        log.lock().unwrap().push(request.clone());
        let (status, payload) = handler(&request, index);
        let response = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
            payload.len()
        );
        if writer.write_all(response.as_bytes()).is_err() {
            return;
        }
    }
}

/// she (0) for nurse, fashion designer, dancer; he (1) otherwise.
fn label_of(vector: &[Value]) -> u8 {
    let female = (14..17).any(|i| vector[i].as_i64() == Some(1));
    u8::from(!female)
}

fn answer(request: &Request) -> (u16, String) {
    match (request.method.as_str(), request.path.as_str()) {
        ("GET", "/health") => (200, json!({"status": "ok", "models": ["roberta-base"]}).to_string()),
        ("POST", "/batch") => {
            if request.body["model"] != "roberta-base" {
                return (404, json!({"error": "unknown model"}).to_string());
            }
            let responses: Vec<Value> = request.body["items"]
                .as_array()
                .unwrap()
                .iter()
                .map(|item| {
                    let label = label_of(item["vector"].as_array().unwrap());
                    let (she, he) = if label == 0 { (0.7, 0.2) } else { (0.2, 0.7) };
                    json!({"label": label, "scores": {"she": she, "he": he}, "model": "roberta-base"})
                })
                .collect();
            (200, json!({"model": "roberta-base", "responses": responses}).to_string())
        }
        _ => (404, "{}".to_owned()),
    }
}

fn config(server: &MockServer) -> RemoteConfig {
    let mut c = RemoteConfig::new(&server.url, "roberta-base");
    c.timeout = Duration::from_secs(5);
    c
}

fn expected_label(e: &TabularExample) -> u8 {
    let s = case_study::Sentence::decode(e).unwrap();
    u8::from(s.occupation >= 3)
}

#[test]
fn health_reports_models() {
    let server = MockServer::start(|r, _| answer(r));
    let oracle = RemoteOracle::new(config(&server)).unwrap();
    let health = oracle.health().unwrap();
    assert_eq!(health.status, "ok");
    assert_eq!(health.models, vec!["roberta-base".to_owned()]);
}

#[test]
fn batches_follow_configured_size_and_keep_order() {
    let server = MockServer::start(|r, _| answer(r));
    let mut c = config(&server);
    c.batch_size = 32;
    let oracle = RemoteOracle::new(c).unwrap();
    let examples: Vec<_> = case_study::enumerate_examples().into_iter().take(100).collect();
    let labels = oracle.classify(&examples).unwrap();
    let expected: Vec<u8> = examples.iter().map(expected_label).collect();
    assert_eq!(labels, expected);

    let batches = server.batch_requests();
    let sizes: Vec<usize> = batches.iter().map(|r| r.body["items"].as_array().unwrap().len()).collect();
    assert_eq!(sizes, vec![32, 32, 32, 4]);
    let first = &batches[0].body;
    assert_eq!(first["model"], "roberta-base");
    let vector: Vec<i64> = first["items"][0]["vector"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_i64().unwrap())
        .collect();
    assert_eq!(vector.len(), 22);
    assert_eq!(vector.iter().sum::<i64>(), 3);
}

#[test]
fn repeated_and_duplicate_examples_hit_the_cache() {
    let server = MockServer::start(|r, _| answer(r));
    let oracle = RemoteOracle::new(config(&server)).unwrap();
    let e = case_study::encode_names("after 1970", "Africa", "nurse").unwrap();
    let labels = oracle.classify(&[e.clone(), e.clone(), e.clone()]).unwrap();
    assert_eq!(labels, vec![0, 0, 0]);
    assert_eq!(oracle.request_count(), 1);
    assert_eq!(server.batch_requests()[0].body["items"].as_array().unwrap().len(), 1);
    oracle.classify(&[e]).unwrap();
    assert_eq!(oracle.request_count(), 1);
}

#[test]
fn parallel_batches_give_the_same_labels() {
    let server = MockServer::start(|r, _| answer(r));
    let mut c = config(&server);
    c.batch_size = 16;
    c.parallelism = 4;
    let oracle = RemoteOracle::new(c).unwrap();
    let examples = case_study::enumerate_examples();
    let labels = oracle.classify(&examples).unwrap();
    let expected: Vec<u8> = examples.iter().map(expected_label).collect();
    assert_eq!(labels, expected);
    assert_eq!(server.batch_requests().len(), 360 / 16 + 1);
}

#[test]
fn server_errors_are_retried() {
    let server = MockServer::start(|r, i| {
        if r.path == "/batch" && i == 0 {
            (503, json!({"error": "model loading"}).to_string())
        } else {
            answer(r)
        }
    });
    let oracle = RemoteOracle::new(config(&server)).unwrap();
    let e = case_study::encode_names("after 1970", "Africa", "boxer").unwrap();
    assert_eq!(oracle.classify(&[e]).unwrap(), vec![1]);
    assert_eq!(oracle.request_count(), 2);
}

#[test]
fn client_errors_fail_without_retry() {
    let server = MockServer::start(|r, _| answer(r));
    let mut c = config(&server);
    c.model = "gpt-unknown".into();
    let oracle = RemoteOracle::new(c).unwrap();
    let e = case_study::encode_names("after 1970", "Africa", "boxer").unwrap();
    let err = oracle.classify(&[e]).unwrap_err();
    assert!(matches!(err, Error::Transport { retryable: false, .. }), "{err}");
    assert!(err.is_oracle_failure());
    assert_eq!(err.exit_code(), 2);
    assert_eq!(oracle.request_count(), 1);
}

#[test]
fn malformed_responses_are_rejected() {
    let short = MockServer::start(|r, _| match r.path.as_str() {
        "/batch" => (200, json!({"responses": []}).to_string()),
        _ => answer(r),
    });
    let oracle = RemoteOracle::new(config(&short)).unwrap();
    let e = case_study::encode_names("after 1970", "Africa", "boxer").unwrap();
    assert!(oracle.classify(&[e.clone()]).unwrap_err().is_oracle_failure());

    let bad_label = MockServer::start(|r, _| match r.path.as_str() {
        "/batch" => (200, json!({"responses": [{"label": 7}]}).to_string()),
        _ => answer(r),
    });
    let oracle = RemoteOracle::new(config(&bad_label)).unwrap();
    assert!(oracle.classify(&[e]).unwrap_err().is_oracle_failure());
}

#[test]
fn unreachable_server_is_an_oracle_failure() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut c = RemoteConfig::new(format!("http://127.0.0.1:{port}"), "roberta-base");
    c.retries = 0;
    let oracle = MembershipOracle::from_remote(c).unwrap();
    let dist = Distribution::uniform(case_study::enumerate_examples());
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    let err = build_training_set(&oracle, &dist, 10, &mut rng).unwrap_err();
    assert!(matches!(err, Error::PartialTrainingSet { completed: 0, requested: 10, .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn remote_and_fixture_extractions_agree() {
    let server = MockServer::start(|r, _| answer(r));
    let remote = MembershipOracle::from_remote(config(&server)).unwrap();
    let mut fixture = trepac::oracle::FixtureTable::new("roberta-base");
    for e in case_study::enumerate_examples() {
        let label = expected_label(&e);
        fixture.insert(e, label).unwrap();
    }
    let local = MembershipOracle::from_fixture(fixture);
    let splits = enumerate_candidate_splits(&case_study::feature_space()).unwrap();
    let dist = Distribution::uniform(case_study::enumerate_examples());
    let config = ExtractionConfig::new(6, 0, 201, splits, 5);
    let a = trepac(&remote, &config, &dist).unwrap();
    let b = trepac(&local, &config, &dist).unwrap();
    assert_eq!(a.tree, b.tree);
    assert_eq!(a.training_misclassified, b.training_misclassified);
    assert_eq!(a.oracle_calls, 201);
}

#[test]
fn export_fixture_through_the_cli() {
    let server = MockServer::start(|r, _| answer(r));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roberta.fixture");
    let code = trepac::cli::main_with_args([
        "trepac",
        "--log-level",
        "quiet",
        "export-fixture",
        "--oracle",
        &format!("remote:{}", server.url),
        "--model",
        "roberta-base",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let table = trepac::oracle::FixtureTable::read(&out, &case_study::feature_space()).unwrap();
    assert_eq!(table.model_id, "roberta-base");
    assert_eq!(table.len(), 360);
    for e in case_study::enumerate_examples() {
        assert_eq!(table.get(&e), Some(expected_label(&e)));
    }
    // The bundled depth-3 table labels the same occupations male.
    let depth3 = builtin_fixture("occupation-depth3").unwrap();
    let differ = case_study::enumerate_examples()
        .iter()
        .filter(|e| table.get(e) != depth3.get(e))
        .count();
    assert_eq!(differ, 5 * 9 * 2);
}
