mod common;

use std::collections::BTreeSet;
use std::process::Command;

use serde_json::Value as Json;
use vdmslice::cli::{self, EXIT_ASSERTION, EXIT_CRITERION, EXIT_DOCUMENT, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

use common::*;

fn vdmslice(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["vdmslice"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(name: &str) -> String {
    corpus_path(name).to_string_lossy().into_owned()
}

fn scratch(name: &str, contents: &str) -> String {
    let dir = std::env::temp_dir().join(format!("vdmslice-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p.to_string_lossy().into_owned()
}

/// `(start, end)` strings of the JSON slice entries.
fn json_spans(v: &Json, key: &str) -> BTreeSet<String> {
    v[key]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            format!(
                "{}:{}-{}:{}",
                e["start"]["line"], e["start"]["column"], e["end"]["line"], e["end"]["column"]
            )
        })
        .collect()
}

/// Spans listed under `heading` in text output.
fn text_spans(text: &str, heading: &str) -> BTreeSet<String> {
    text.lines()
        .skip_while(|l| *l != heading)
        .skip(1)
        .take_while(|l| l.starts_with("  "))
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect()
}

#[test]
fn twoops_json_slice() {
    let (code, out, _) = vdmslice(&["slice", &path("twoops"), "--op", "op2", "--return", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let v: Json = serde_json::from_str(&out).unwrap();
    assert_eq!(v["operation"], "op2");
    assert_eq!(v["criterion"], serde_json::json!({"kind": "return", "detail": null}));
    assert_eq!(v["mode"], "weak");
    assert_eq!(v["visitedDefinitions"], serde_json::json!(["op1", "op2"]));
    let lines: BTreeSet<u64> = v["slice"].as_array().unwrap().iter().map(|e| e["start"]["line"].as_u64().unwrap()).collect();
    // `b := 2` sits on line 16
    assert_eq!(lines, [11, 15, 17, 18].into());
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["criterion", "criterionNodes", "file", "mode", "operation", "slice", "visitedDefinitions"]);
}

#[test]
fn json_is_byte_stable_and_sorted() {
    let args = ["slice", &path("memberbook_bad"), "--op", "register", "--post", "1", "--format", "json"];
    let (_, first, _) = vdmslice(&args);
    for _ in 0..3 {
        assert_eq!(vdmslice(&args).1, first);
    }
    let v: Json = serde_json::from_str(&first).unwrap();
    let starts: Vec<(u64, u64)> = v["slice"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["start"]["line"].as_u64().unwrap(), e["start"]["column"].as_u64().unwrap()))
        .collect();
    let mut sorted = starts.clone();
    sorted.sort();
    assert_eq!(starts, sorted);
}

#[test]
fn text_and_json_report_the_same_spans() {
    for name in CORPUS {
        let spec = corpus(name);
        for c in vdmslice::interp::oracle::named_criteria(&spec.document) {
            let target = match &c.target {
                vdmslice::slicer::Target::ReturnValue => vec!["--return".to_string()],
                vdmslice::slicer::Target::Postcondition(Some(k)) => vec!["--post".into(), k.to_string()],
                vdmslice::slicer::Target::StateVariable(v) => vec!["--state".into(), v.clone()],
                other => panic!("{other:?}"),
            };
            let file = path(name);
            for mode in ["weak", "strong"] {
                let mut args = vec!["slice", &file, "--op", &c.operation, "--mode", mode];
                args.extend(target.iter().map(String::as_str));
                let (code, text, _) = vdmslice(&args);
                assert_eq!(code, EXIT_OK);
                args.extend(["--format", "json"]);
                let (_, json, _) = vdmslice(&args);
                let v: Json = serde_json::from_str(&json).unwrap();
                assert_eq!(text_spans(&text, "slice spans:"), json_spans(&v, "slice"), "{name} {c}");
                assert_eq!(text_spans(&text, "criterion spans:"), json_spans(&v, "criterionNodes"), "{name} {c}");
            }
        }
    }
}

#[test]
fn text_view_marks_slice_and_criterion() {
    let (code, out, _) = vdmslice(&["slice", &path("twoops"), "--op", "op2", "--return"]);
    assert_eq!(code, EXIT_OK);
    let row = |n: u32| out.lines().find(|l| l[1..].trim_start().starts_with(&format!("{n} |"))).unwrap();
    assert!(row(11).starts_with('>'));
    assert!(row(16).starts_with(' '));
    assert!(row(18).starts_with('*'));
    assert!(out.contains('!') && out.contains('^'));
}

#[test]
fn run_outcomes() {
    let args = r#"["John Doe","jd@example.com"]"#;
    let (code, out, _) = vdmslice(&["run", &path("memberbook_bad"), "--op", "register", "--args", args]);
    assert_eq!(code, EXIT_ASSERTION);
    assert!(out.contains("postcondition conjunct 1 violated"), "{out}");
    assert!(out.contains("NameBook~ munion"), "{out}");

    let (code, out, _) = vdmslice(&["run", &path("memberbook_bad"), "--op", "register", "--args", args, "--no-assert"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("returned 2"), "{out}");

    let (code, out, _) = vdmslice(&["run", &path("memberbook_fixed"), "--op", "register", "--args", args]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("returned 1"), "{out}");
    assert!(out.contains("NextId = 2"), "{out}");

    let (code, out, _) = vdmslice(&["run", &path("valuesem"), "--op", "valueSemantics"]);
    assert_eq!((code, out.lines().next().unwrap()), (EXIT_OK, "returned 1"));

    let (code, out, _) = vdmslice(&["run", &path("twoops"), "--op", "op1", "--args", "[3]"]);
    assert_eq!((code, out.lines().next().unwrap()), (EXIT_OK, "completed"));

    let file = scratch("div.vdmsl", "operations\nop : nat ==> nat\nop(n) == return 10 div n");
    let (code, out, _) = vdmslice(&["run", &file, "--op", "op", "--args", "[0]"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(out.starts_with("runtime error at 3:17"), "{out}");
}

#[test]
fn check_command() {
    let (code, out, _) = vdmslice(&[
        "check", &path("memberbook_fixed"), "--op", "register", "--state", "NameBook", "--trials", "50", "--seed", "7",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.starts_with("register: state variable NameBook at exit: 50 trials, 50 compared, 0 disagreements"), "{out}");
}

#[test]
fn exit_codes_for_bad_input() {
    let bad = scratch("bad.vdmsl", "operations\nop : () ==> nat\nop() == return y");
    let (code, _, err) = vdmslice(&["slice", &bad, "--op", "op", "--return"]);
    assert_eq!(code, EXIT_DOCUMENT);
    assert!(err.contains("3:16"), "{err}");
    let garbled = scratch("garbled.vdmsl", "operations op : ==> (");
    assert_eq!(vdmslice(&["slice", &garbled, "--op", "op", "--return"]).0, EXIT_DOCUMENT);

    let twoops = path("twoops");
    assert_eq!(vdmslice(&["slice", &twoops, "--op", "nope", "--return"]).0, EXIT_CRITERION);
    assert_eq!(vdmslice(&["slice", &twoops, "--op", "op2", "--post"]).0, EXIT_CRITERION);
    assert_eq!(vdmslice(&["slice", &twoops, "--op", "op2", "--at", "16:1"]).0, EXIT_CRITERION);

    assert_eq!(vdmslice(&["slice", &twoops, "--op", "op2"]).0, EXIT_USAGE);
    assert_eq!(vdmslice(&["slice", &twoops, "--op", "op2", "--return", "--state", "a"]).0, EXIT_USAGE);
    assert_eq!(vdmslice(&["slice", &twoops, "--op", "op2", "--at", "0:5"]).0, EXIT_USAGE);
    assert_eq!(vdmslice(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(vdmslice(&["run", &twoops, "--op", "op2", "--args", "{"]).0, EXIT_USAGE);
}

#[test]
fn installed_binary_exit_code() {
    let status = Command::new(env!("CARGO_BIN_EXE_vdmslice"))
        .args(["run", &path("memberbook_bad"), "--op", "register", "--args", r#"["a","b"]"#])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_ASSERTION));
    let status = Command::new(env!("CARGO_BIN_EXE_vdmslice")).arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let help = String::from_utf8(status.stdout).unwrap();
    for sub in ["slice", "run", "check", "serve"] {
        assert!(help.contains(sub));
    }
}
