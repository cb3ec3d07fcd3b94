use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

fn verbacode(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verbacode"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth_news(dir: &Path, docs: usize) {
    let out = verbacode(dir, &["synth", "newswire", "--out", "news.jsonl", "--docs", &docs.to_string()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&verbacode(dir.path(), &["--help"])), 0);
    assert_eq!(code(&verbacode(dir.path(), &["run", "--help"])), 0);
    assert_eq!(code(&verbacode(dir.path(), &[])), 1);
    assert_eq!(code(&verbacode(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&verbacode(dir.path(), &["bench"])), 1);
    assert_eq!(code(&verbacode(dir.path(), &["serve", "--corpus", "x", "--port", "nope"])), 1);
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = verbacode(dir.path(), &["run", "missing.toml"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing.toml"));

    std::fs::write(dir.path().join("bad.toml"), "trials = \"many\"").unwrap();
    assert_eq!(code(&verbacode(dir.path(), &["run", "bad.toml"])), 2);

    std::fs::write(dir.path().join("bad.jsonl"), "{\"id\": 1}\n").unwrap();
    let out = verbacode(dir.path(), &["bench", "--corpus", "bad.jsonl", "--dim", "1024"]);
    assert_eq!(code(&out), 2);
    let out = verbacode(dir.path(), &["bench", "--corpus", "bad.jsonl", "--dim", "1000"]);
    assert_eq!(code(&out), 2, "dimension must be a power of two");
}

#[test]
fn k_sweep_runs_and_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    synth_news(dir.path(), 150);
    let before = std::fs::read(dir.path().join("news.jsonl")).unwrap();
    let config = |out: &str| {
        format!(
            r#"
name = "k sweep"
output_dir = "{out}"
trials = 2
dim = 4096
budget = 0.3

[[corpora]]
path = "news.jsonl"
codes = ["earn", "acq"]

[sweep]
workflows = ["kbatch_active"]
policies = ["uncertain"]
k = [1, 5, 10, 50, 100]
"#
        )
    };
    for name in ["a", "b"] {
        std::fs::write(dir.path().join(format!("{name}.toml")), config(&format!("out-{name}"))).unwrap();
        let out = verbacode(dir.path(), &["--threads", "1", "run", &format!("{name}.toml")]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let curves: Vec<_> = std::fs::read_dir(dir.path().join("out-a/curves"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| !f.contains(".news"))
        .collect();
    assert_eq!(curves.len(), 5, "{curves:?}");
    assert!(dir.path().join("out-a/k_sweep.svg").exists());
    for f in curves {
        let a = std::fs::read(dir.path().join("out-a/curves").join(&f)).unwrap();
        let b = std::fs::read(dir.path().join("out-b/curves").join(&f)).unwrap();
        assert!(a == b, "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out-a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([0, 1]));
    assert_eq!(before, std::fs::read(dir.path().join("news.jsonl")).unwrap());
}

#[test]
fn reuse_emits_three_curves_per_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = verbacode(dir.path(), &["synth", "sentiment", "--out", "mds", "--docs", "60"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    std::fs::write(
        dir.path().join("reuse.toml"),
        r#"
output_dir = "out"
domains = ["mds/dvd.jsonl", "mds/books.jsonl"]
trials = 2
dim = 4096
budget = 20
"#,
    )
    .unwrap();
    let out = verbacode(dir.path(), &["reuse", "reuse.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for target in ["dvd", "books"] {
        let csvs = std::fs::read_dir(dir.path().join("out").join(target))
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
            .count();
        assert!(csvs >= 3, "{target}: {csvs} csv files");
    }
}

#[test]
fn bench_defaults_to_ten_trials() {
    let dir = tempfile::tempdir().unwrap();
    synth_news(dir.path(), 80);
    let out = verbacode(dir.path(), &["bench", "--corpus", "news.jsonl", "--budget", "10", "--dim", "4096"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("bench-out/bench.json")).unwrap()).unwrap();
    assert_eq!(report["rows"][0]["trials"], 10);
    assert!(report["rows"][0]["max_seconds"].as_f64().unwrap() > 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("news"));
    let table = std::fs::read_to_string(dir.path().join("bench-out/bench.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("corpus,n_items,codes,trials,budget,max_seconds"));
    assert!(lines[1].starts_with("news,80,"));
}

#[test]
fn convert_reads_public_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let reuters = dir.path().join("reuters");
    std::fs::create_dir_all(reuters.join("training")).unwrap();
    std::fs::create_dir_all(reuters.join("test")).unwrap();
    std::fs::write(reuters.join("cats.txt"), "training/1 earn\ntraining/2 acq earn\ntest/3 grain\n").unwrap();
    std::fs::write(reuters.join("training/1"), "PROFIT UP\n net rose").unwrap();
    std::fs::write(reuters.join("training/2"), "BUYOUT  talks").unwrap();
    std::fs::write(reuters.join("test/3"), "wheat crop").unwrap();
    let out = verbacode(dir.path(), &["convert", "reuters", "reuters", "--out", "r.jsonl", "--top", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(dir.path().join("r.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["text"], "PROFIT UP net rose");
    assert_eq!(lines[2]["codes"], serde_json::json!([]));

    let mds = dir.path().join("kitchen");
    std::fs::create_dir(&mds).unwrap();
    let review = |t: &str| format!("<review><title>{t}</title><review_text>text &amp; more</review_text></review>\n");
    std::fs::write(mds.join("positive.review"), review("great") + &review("fine")).unwrap();
    std::fs::write(mds.join("negative.review"), review("broken")).unwrap();
    let out = verbacode(dir.path(), &["convert", "mds", "kitchen", "-o", "k.jsonl"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("k.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("great. text & more"));

    let out = verbacode(dir.path(), &["convert", "mds", "nowhere", "-o", "x.jsonl"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn serve_with_a_bad_corpus_fails_before_binding() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.jsonl"), "not json\n").unwrap();
    let out = verbacode(dir.path(), &["serve", "--corpus", "bad.jsonl", "--port", "0"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bad.jsonl"));
    let out = verbacode(dir.path(), &["serve", "--corpus", "absent.jsonl", "--port", "0"]);
    assert_eq!(code(&out), 2);
}

fn get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    s.read_to_string(&mut buf).ok()?;
    Some(buf)
}

#[test]
fn serve_answers_health_checks() {
    let dir = tempfile::tempdir().unwrap();
    synth_news(dir.path(), 50);
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_verbacode"))
        .args(["serve", "--corpus", "news.jsonl", "--dim", "4096", "--port", &port.to_string()])
        .current_dir(dir.path())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(30);
    let mut reply = None;
    while Instant::now() < deadline {
        if let Some(r) = get(port, "/health") {
            reply = Some(r);
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    let corpora = get(port, "/corpora");
    child.kill().unwrap();
    child.wait().unwrap();
    let reply = reply.expect("server never answered");
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"ok\""));
    assert!(corpora.unwrap().contains("\"news\""));
}
