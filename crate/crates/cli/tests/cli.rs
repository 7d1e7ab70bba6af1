use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fairforge"));
    c.env_remove("FAIRFORGE_MT_URL").env_remove("FAIRFORGE_LM_URL");
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn run_with_stdin(mut cmd: Command, stdin: &str) -> Output {
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn help_exits_zero() {
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for sub in [
        "filter",
        "detect",
        "rewrite-en",
        "roundtrip",
        "gendertag",
        "lm-augment",
        "compose",
        "score",
        "significance",
        "mt-mock-serve",
        "pipeline",
    ] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn unknown_flag_exits_two() {
    let o = bin().args(["filter", "--bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_exits_three_and_names_it() {
    let o = bin().args(["filter", "--input", "no/such/file.txt"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no/such/file.txt"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["pipeline", "--preset", "roundtrip-plain", "--mock", "--input", "absent.txt", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("absent.txt"));
}

#[test]
fn unreachable_backend_exits_four() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut cmd = bin();
    cmd.env("FAIRFORGE_MT_URL", format!("http://127.0.0.1:{port}"))
        .arg("roundtrip");
    let o = run_with_stdin(cmd, "Die Lehrer*innen planen ein Projekt.\n");
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn filter_and_detect() {
    let mut cmd = bin();
    cmd.args(["filter", "--lang", "de"]);
    let o = run_with_stdin(cmd, "Die Lehrer*innen planen ein Projekt.\nDie Lehrer*innen planen ein Projekt.\n\n");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "Die Lehrer*innen planen ein Projekt.\n");

    let mut cmd = bin();
    cmd.args(["detect", "--lang", "de"]);
    let o = run_with_stdin(cmd, "Die Lehrer*innen planen.\nDas Wetter ist schön.\n");
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0]["labels"].as_array().unwrap().iter().any(|l| l == "gender_fair"));
    assert!(lines[1]["labels"].as_array().unwrap().iter().any(|l| l == "non_gendered"));
}

#[test]
fn rewrite_en_with_audit() {
    let dir = tempfile::tempdir().unwrap();
    let audit = dir.path().join("audit.jsonl");
    let mut cmd = bin();
    cmd.args(["rewrite-en", "--direction", "backward", "--gender", "f", "--audit"])
        .arg(&audit);
    let o = run_with_stdin(cmd, "They hurt themself.\n");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "She hurt herself.\n");
    let log = std::fs::read_to_string(&audit).unwrap();
    assert!(log.contains("\"before\":\"themself\""), "{log}");

    let o = run_with_stdin(
        {
            let mut c = bin();
            c.args(["rewrite-en", "--direction", "backward"]);
            c
        },
        "x\n",
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn score_and_significance() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let reference = write("ref.txt", "a b c\nd e f\ng h i\n");
    let good = write("good.txt", "a b c\nd e f\ng h x\n");
    let bad = write("bad.txt", "a x c\nx e f\ng x i\n");
    let tags = write("tags.tsv", "feminine\nmasculine\nplural\n");
    let o = bin()
        .args(["score", "--hyp"])
        .arg(&good)
        .arg("--ref")
        .arg(&reference)
        .arg("--tags")
        .arg(&tags)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((report["corpus_wer"].as_f64().unwrap() - 1.0 / 9.0).abs() < 1e-12);
    assert_eq!(report["per_category"]["plural"]["items"], 1);

    let o = bin()
        .args(["significance", "--seed", "1", "--systems"])
        .arg(&good)
        .arg(&bad)
        .arg("--ref")
        .arg(&reference)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(m["systems"], serde_json::json!(["good", "bad"]));
    assert_eq!(m["best"], serde_json::json!(["good"]));
}

#[test]
fn gendertag_and_lm_augment() {
    let rec = r#"{"src":"Students from many nations learn together here.","trg":"Schülerinnen und Schüler aus vielen Nationen lernen hier gemeinsam.","origin":"copy"}"#;
    let mut cmd = bin();
    cmd.arg("gendertag");
    let o = run_with_stdin(cmd, &format!("{rec}\n"));
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    assert!(out.contains("<f> Students"));

    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.txt");
    std::fs::write(&seeds, "Leiter\n").unwrap();
    let o = bin()
        .args(["lm-augment", "--mock", "--seeds"])
        .arg(&seeds)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(fixture("lm_leiter_seed1.txt")).unwrap();
    let kept = golden.split_once("--\n").unwrap().1;
    assert_eq!(stdout(&o), kept);
}

fn pipeline(dir: &Path, preset: &str, input: &str) -> Output {
    bin()
        .args(["pipeline", "--mock", "--seed", "1", "--jobs", "2", "--preset", preset, "--input"])
        .arg(fixture(input))
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), b.path()] {
        let o = pipeline(d, "roundtrip-all", "de_corpus_500.txt");
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["train.jsonl", "manifest.json", "report.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn compose_reruns_the_pipeline_plan() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeline(dir.path(), "roundtrip-merged", "de_corpus_500.txt");
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("again.jsonl");
    let manifest = dir.path().join("again.json");
    let o = bin()
        .args(["compose", "--plan"])
        .arg(dir.path().join("plan.cfg"))
        .arg("--out")
        .arg(&out)
        .arg("--manifest")
        .arg(&manifest)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(dir.path().join("train.jsonl")).unwrap()
    );
}

#[test]
fn roundtrip_through_mock_server_matches_in_process() {
    let mut server = bin()
        .args(["mt-mock-serve", "--port", "0", "--seed", "4"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut url = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut url).unwrap();
    let input = "Die Lehrer*innen planen ein Projekt.\nJede*r Schüler*in liest.\n";

    let mut remote = bin();
    remote.env("FAIRFORGE_MT_URL", url.trim()).args(["roundtrip", "--seed", "4"]);
    let r = run_with_stdin(remote, input);
    let mut local = bin();
    local.args(["roundtrip", "--mock", "--seed", "4"]);
    let l = run_with_stdin(local, input);
    server.kill().unwrap();
    let _ = server.wait();

    assert!(r.status.success(), "{}", stderr(&r));
    assert!(l.status.success(), "{}", stderr(&l));
    assert_eq!(stdout(&r), stdout(&l));
    assert_eq!(stdout(&l).lines().count(), 2);
}
