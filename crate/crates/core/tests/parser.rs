mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use common::fuzz::{corpus, malformed};
use gridpilot::bundled;
use gridpilot::instruct::{decode_action_payload, parse_instruction, InstructError, Remote, Replay, RuleBased};

#[test]
fn rule_grammar_reproduces_the_corpus() {
    let rows = corpus();
    assert_eq!(rows.len(), 20);
    let mut mismatches = Vec::new();
    for (scenario, instruction, payload) in &rows {
        let world = bundled::scenario(scenario).unwrap().unwrap();
        let expected = decode_action_payload(payload).unwrap().canonical_order();
        match parse_instruction(instruction, world.registry(), &RuleBased) {
            Ok(parsed) if parsed.actions == expected => {}
            other => mismatches.push(format!("{instruction:?}: {other:?}")),
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn replay_fixtures_cover_the_corpus() {
    for (label, _) in bundled::REPLAY_FIXTURES {
        let replay = bundled::replay(label).unwrap().unwrap();
        for (scenario, instruction, _) in corpus() {
            let world = bundled::scenario(&scenario).unwrap().unwrap();
            match parse_instruction(&instruction, world.registry(), &replay) {
                Ok(_) | Err(InstructError::UnknownLandmark(_)) => {}
                Err(e) => panic!("{label} {instruction:?}: {e:?}"),
            }
        }
    }
}

#[test]
fn malformed_payloads_are_rejected_with_a_location() {
    let valid: Vec<String> = corpus().into_iter().map(|(_, _, p)| p).collect();
    let world = bundled::scenario("pick_phase").unwrap().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut rejected = 0;
    for n in 0..1000 {
        let payload = malformed(&mut rng, &valid[n % valid.len()]);
        match decode_action_payload(&payload) {
            Err(InstructError::SchemaViolation { path, message }) => {
                assert!(path.starts_with('$'), "{path}");
                assert!(!message.is_empty());
                rejected += 1;
            }
            other => panic!("case {n}: {payload} gave {other:?}"),
        }
        // Through the full pipeline the retry sees the same bad payload.
        let mut replay = Replay::new("fuzz");
        replay.record("go", payload.clone());
        let err = parse_instruction("go", world.registry(), &replay).unwrap_err();
        let code = serde_json::to_value(&err).unwrap()["code"].clone();
        assert_eq!(code, "schema_violation", "case {n}: {payload}");
    }
    assert_eq!(rejected, 1000);
}

/// Serves one canned reply per connection, forwarding each request body.
fn mock_server(replies: Vec<String>) -> (String, mpsc::Receiver<Value>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/api/generate", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for reply in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            tx.send(serde_json::from_slice(&body).unwrap()).unwrap();
            let text = json!({ "response": reply }).to_string();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

#[test]
fn remote_backend_strips_fences_and_retries_once() {
    let world = bundled::scenario("warehouse").unwrap().unwrap();
    let good = "```json\n[{\"action\":\"SET_GOAL\",\"target\":\"shelf3\"},{\"action\":\"AVOID_AREAS\",\"region\":\"repair_area\"}]\n```";
    let (url, requests) = mock_server(vec!["[{\"action\":\"GO\"}]".into(), good.into()]);
    let remote = Remote::new(url, "llama3", Duration::from_secs(5));
    let parsed = parse_instruction("Navigate to Shelf 3, avoid the repair area", world.registry(), &remote).unwrap();
    assert_eq!(
        parsed.actions.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        ["AVOID_AREAS repair_area", "SET_GOAL shelf3"]
    );
    let first = requests.recv().unwrap();
    assert_eq!(first["model"], "llama3");
    assert_eq!(first["temperature"], 0);
    assert!(first["prompt"].as_str().unwrap().contains("shelf3"));
    let second = requests.recv().unwrap();
    assert!(second["prompt"].as_str().unwrap().contains("rejected"));
}

#[test]
fn remote_backend_reports_unavailability() {
    let world = bundled::scenario("warehouse").unwrap().unwrap();
    // Bound then dropped: nothing listens on the port.
    let addr = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let remote = Remote::new(format!("http://{addr}/"), "m", Duration::from_secs(2));
    let err = parse_instruction("Navigate to Shelf 3", world.registry(), &remote).unwrap_err();
    assert!(matches!(err, InstructError::BackendUnavailable(_)), "{err:?}");

    // Accepts but never answers.
    let silent = TcpListener::bind("127.0.0.1:0").unwrap();
    let remote = Remote::new(format!("http://{}/", silent.local_addr().unwrap()), "m", Duration::from_millis(300));
    let started = std::time::Instant::now();
    let err = parse_instruction("Navigate to Shelf 3", world.registry(), &remote).unwrap_err();
    assert!(matches!(err, InstructError::BackendUnavailable(_)), "{err:?}");
    assert!(started.elapsed() < Duration::from_secs(5));
}
