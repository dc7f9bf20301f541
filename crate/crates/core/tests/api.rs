mod common;

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;

use serde_json::{json, Value as Json};
use vdmslice::api::{self, AppState};
use vdmslice::cli;

use common::*;

/// Serves `file` on an ephemeral loopback port for the rest of the test.
fn start(file: &str, source: String) -> SocketAddr {
    let state = Arc::new(AppState::new(file.to_string(), source));
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            api::serve(listener, state).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

fn request(addr: SocketAddr, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).unwrap();
    let (head, body) = raw.split_once("\r\n\r\n").unwrap();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(head.to_ascii_lowercase().contains("content-type: application/json"), "{head}");
    (status, body.to_string())
}

fn cli_json(file: &str, args: &[&str]) -> String {
    let mut argv = vec!["vdmslice", "slice", file];
    argv.extend_from_slice(args);
    argv.extend(["--format", "json"]);
    let mut out = Vec::new();
    assert_eq!(cli::run(argv, &mut out, &mut Vec::new()), 0);
    String::from_utf8(out).unwrap()
}

#[test]
fn slice_matches_cli_byte_for_byte() {
    let file = corpus_path("memberbook_bad").to_string_lossy().into_owned();
    let addr = start(&file, source("memberbook_bad"));
    let (code, body) = request(
        addr,
        "POST",
        "/slice",
        r#"{"operation":"register","target":{"kind":"post","detail":1}}"#,
    );
    assert_eq!(code, 200);
    assert_eq!(body, cli_json(&file, &["--op", "register", "--post", "1"]));

    let (code, body) = request(
        addr,
        "POST",
        "/slice",
        r#"{"operation":"register","target":{"kind":"state","detail":"NextId"},"mode":"strong"}"#,
    );
    assert_eq!(code, 200);
    assert_eq!(body, cli_json(&file, &["--op", "register", "--state", "NextId", "--mode", "strong"]));
}

#[test]
fn twoops_golden_over_http() {
    let addr = start("twoops.vdmsl", source("twoops"));
    let (code, body) = request(addr, "POST", "/slice", r#"{"operation":"op2","target":{"kind":"return"}}"#);
    assert_eq!(code, 200);
    let v: Json = serde_json::from_str(&body).unwrap();
    let lines: Vec<u64> = v["slice"].as_array().unwrap().iter().map(|e| e["start"]["line"].as_u64().unwrap()).collect();
    assert!(!lines.contains(&16));
    assert_eq!(v["file"], "twoops.vdmsl");
    let (code, _) = request(addr, "POST", "/slice", r#"{"operation":"op2","target":{"kind":"at","detail":"18:11"}}"#);
    assert_eq!(code, 200);
}

#[test]
fn document_listing() {
    let addr = start("memberbook_fixed.vdmsl", source("memberbook_fixed"));
    let (code, body) = request(addr, "GET", "/document", "");
    assert_eq!(code, 200);
    let v: Json = serde_json::from_str(&body).unwrap();
    assert_eq!(v["source"], source("memberbook_fixed"));
    let op = &v["operations"][0];
    assert_eq!(op["name"], "register");
    assert_eq!(op["hasPost"], true);
    assert_eq!(op["postConjunctCount"], 2);
    assert_eq!(op["stateVariables"], json!(["EmailBook", "NameBook", "NextId"]));
}

#[test]
fn request_errors() {
    let addr = start("twoops.vdmsl", source("twoops"));
    let cases = [
        (r#"{"operation":"nope","target":{"kind":"return"}}"#, "nope"),
        (r#"{"operation":"op2","target":{"kind":"post","detail":0}}"#, "post"),
        (r#"{"operation":"op2","target":{"kind":"sideways"}}"#, "sideways"),
        (r#"{"operation":"op2"}"#, "target"),
        ("[", "invalid"),
    ];
    for (body, mention) in cases {
        let (code, text) = request(addr, "POST", "/slice", body);
        assert_eq!(code, 400, "{body}");
        let v: Json = serde_json::from_str(&text).unwrap();
        assert!(v["error"].as_str().unwrap().contains(mention), "{text}");
    }
    assert_eq!(request(addr, "GET", "/nowhere", "").0, 404);
}

#[test]
fn unparsable_document_is_422_with_positions() {
    let addr = start("bad.vdmsl", "operations\nop : () ==> nat\nop() == return y".into());
    for (method, path, body) in [("GET", "/document", ""), ("POST", "/slice", r#"{"operation":"op","target":{"kind":"return"}}"#)] {
        let (code, text) = request(addr, method, path, body);
        assert_eq!(code, 422);
        let v: Json = serde_json::from_str(&text).unwrap();
        let e = &v["errors"][0];
        assert_eq!(e["start"], json!({"line": 3, "column": 16}));
        assert!(e["message"].as_str().unwrap().contains('y'));
    }
}

#[test]
fn concurrent_requests_agree() {
    let addr = start("memberbook_refactored.vdmsl", source("memberbook_refactored"));
    let body = r#"{"operation":"register","target":{"kind":"post","detail":1}}"#;
    let expected = request(addr, "POST", "/slice", body);
    let handles: Vec<_> = (0..8)
        .map(|_| std::thread::spawn(move || request(addr, "POST", "/slice", body)))
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), expected);
    }
}
