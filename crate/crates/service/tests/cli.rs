use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ner_core::corpus::read_conll_str;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ner"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn tag_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.txt");
    std::fs::write(&input, "").unwrap();
    let o = ner(&["tag", path(&input)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");
}

#[test]
fn tag_writes_one_sentence_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.conll");
    let input = fixture("e2e_sentences.txt");
    let o = ner(&["tag", path(&input), "-o", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let corpus = read_conll_str(&std::fs::read_to_string(&out).unwrap(), "out").unwrap();
    assert_eq!(corpus.len(), 50);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("زرت O\nالقاهرة B-Population-Center\n"));
    for word in text.lines().filter_map(|l| l.split(' ').next()) {
        assert!(!word.chars().any(|c| c.is_ascii_alphabetic()), "{word}");
    }
}

#[test]
fn tag_is_identical_sequential_and_parallel_and_across_models() {
    let input = fixture("e2e_sentences.txt");
    let a = ner(&["tag", path(&input), "--sequential"]);
    let b = ner(&["tag", path(&input)]);
    assert_eq!(stdout(&a), stdout(&b));
    let m = ner(&["--model", "mock", "tag", path(&input)]);
    assert!(m.status.success());
    assert_eq!(read_conll_str(&stdout(&m), "m").unwrap().len(), 50);
    for approach in ["all", "first", "all-literal"] {
        let o = ner(&["--approach", approach, "tag", path(&input)]);
        assert_eq!(stdout(&o), stdout(&b), "{approach}");
    }
}

#[test]
fn tag_conll_keeps_words() {
    let o = ner(&["tag", "--conll", path(&fixture("gold.conll"))]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "زرت O\nالقاهرة B-Population-Center\nمع O\nفيروز B-Artist\n\nفي O\nمصر B-Nation\n\n"
    );
}

#[test]
fn unreadable_input_fails() {
    let o = ner(&["tag", "/definitely/not/here.txt"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
    let o = ner(&["--model", "nope", "tag", path(&fixture("gold.conll"))]);
    assert!(!o.status.success());
}

#[test]
fn eval_against_itself() {
    let gold = fixture("gold.conll");
    let o = ner(&["eval", path(&gold), path(&gold)]);
    assert!(o.status.success());
    let out = stdout(&o);
    let f1: Vec<&str> = out.lines().find(|l| l.starts_with("F1")).unwrap().split_whitespace().collect();
    assert_eq!(f1[1], "100.0");
}

#[test]
fn eval_fixture_pair() {
    // gold: PC@0, Artist@3 | Nation@1; pred: PC@0, Nation@1 | Nation@1
    // tp = 2, fp = 1, fn = 1
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("m.txt");
    let o = ner(&[
        "eval",
        path(&fixture("gold.conll")),
        path(&fixture("pred.conll")),
        "--export",
        path(&export),
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<Vec<&str>> = out.lines().map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(lines[0], ["Metric", "micro", "Artist", "Nation", "Population-Center"]);
    assert_eq!(lines[1], ["Recall", "66.7", "0.0", "100.0", "100.0"]);
    assert_eq!(lines[2], ["Precision", "66.7", "0.0", "50.0", "100.0"]);
    assert_eq!(lines[3], ["F1", "66.7", "0.0", "66.7", "100.0"]);
    let kv = std::fs::read_to_string(export).unwrap();
    assert!(kv.contains("micro.f1=66.6667\n"));
    assert!(kv.contains("true_positives=2\nfalse_positives=1\nfalse_negatives=1\n"));
}

#[test]
fn eval_mismatch_names_the_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other.conll");
    std::fs::write(&other, "زرت O\nالقاهرة O\nمع O\nفيروز O\n\nفي O\nليبيا O\n\n").unwrap();
    let o = ner(&["eval", path(&fixture("gold.conll")), path(&other)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("sentence 1"));
}

#[test]
fn split_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.conll");
    let sentence = std::fs::read_to_string(fixture("gold.conll")).unwrap();
    std::fs::write(&big, sentence.repeat(10)).unwrap();
    let out = dir.path().join("parts");
    let o = ner(&["split", path(&big), "--out-dir", path(&out), "--ratios", "60,20,20", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let count = |name: &str| read_conll_str(&std::fs::read_to_string(out.join(name)).unwrap(), name).unwrap().len();
    assert_eq!((count("train.txt"), count("eval.txt"), count("test.txt")), (12, 4, 4));
    assert!(stdout(&o).contains("train: 12 sentences"));

    let bad = ner(&["split", path(&big), "--out-dir", path(&out), "--ratios", "60,20"]);
    assert!(!bad.status.success());
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("lex.tsv"), "فيروز\tArtist\n").unwrap();
    let config = dir.path().join("ner.toml");
    std::fs::write(&config, "[models.tiny]\nbackend = \"gazetteer\"\nlexicon = \"lex.tsv\"\n").unwrap();
    let o = ner(&["--config", path(&config), "tag", "--conll", path(&fixture("gold.conll"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "زرت O\nالقاهرة O\nمع O\nفيروز B-Artist\n\nفي O\nمصر O\n\n");
}

fn http(addr: &str, request: &str) -> Option<String> {
    use std::io::{Read, Write};
    let mut stream = std::net::TcpStream::connect(addr).ok()?;
    stream.write_all(request.as_bytes()).ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_answers_over_tcp() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = Command::new(env!("CARGO_BIN_EXE_ner"))
        .args(["serve", "--listen", &addr])
        .env("RUST_LOG", "warn")
        .spawn()
        .unwrap();
    let health = "GET /healthz HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n";
    let mut response = None;
    for _ in 0..100 {
        response = http(&addr, health);
        if response.is_some() {
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
    let body = r#"{"text":"زرت القاهرة","model":"gazetteer"}"#;
    let post = format!(
        "POST /api/ner HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let ner_response = http(&addr, &post);
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.unwrap().starts_with("HTTP/1.1 200"));
    let ner_response = ner_response.unwrap();
    assert!(ner_response.starts_with("HTTP/1.1 200"), "{ner_response}");
    assert!(ner_response.contains(r#""class":"Population-Center""#));
}
