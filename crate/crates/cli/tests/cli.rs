use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use framescope::llm_gateway::mock::{MockReply, MockServer};
use framescope::testkit;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_framescope"));
    c.env_remove("FRAMESCOPE_API_KEY").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Fixture {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Fixture {
    fn new(n: usize, extra: &str) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus.jsonl");
        let articles: Vec<_> = (0..n).map(testkit::fixture_article).collect();
        testkit::write_corpus(&corpus, &articles).unwrap();
        let config = testkit::write_config(dir.path(), &corpus, &dir.path().join("out"), extra).unwrap();
        Fixture { dir, config }
    }

    fn out(&self, rel: &str) -> PathBuf {
        self.dir.path().join("out").join(rel)
    }
}

#[test]
fn filter_on_ten_articles() {
    let f = Fixture::new(10, "[filter]\nlow_trim_fraction = 0.0\nhigh_trim_fraction = 0.0\n");
    assert_eq!(code(&run(&["ingest"], &f.config)), 0);
    let o = run(&["filter"], &f.config);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(f.out("filter_report.json")).unwrap()).unwrap();
    assert_eq!(report["data"]["input_count"], 10);
    assert_eq!(report["data"]["retained"], 10);
    let lines = std::fs::read_to_string(f.out("filtered.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 11, "header plus ten records");
}

#[test]
fn missing_upstream_names_the_stage() {
    let f = Fixture::new(10, "");
    let o = run(&["filter"], &f.config);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("run ingest first"), "{}", stderr(&o));

    for stage in ["ingest", "filter"] {
        assert_eq!(code(&run(&[stage], &f.config)), 0);
    }
    let o = run(&["aggregate", "--mock-endpoint", "http://127.0.0.1:9/v1"], &f.config);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("run classify-generic first"), "{}", stderr(&o));

    let f = Fixture::new(10, "[stages]\ngeneric = false\nindicators = false\n");
    for stage in ["ingest", "filter"] {
        assert_eq!(code(&run(&[stage], &f.config)), 0);
    }
    let o = run(&["aggregate"], &f.config);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("run tag-frames first"), "{}", stderr(&o));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let f = Fixture::new(3, "");
    assert_eq!(code(&bin().arg("no-such-command").output().unwrap()), 1);
    assert_eq!(code(&bin().args(["ingest", "--config", "/nonexistent/config.toml"]).output().unwrap()), 1);
    std::fs::write(&f.config, "[paths]\ncorpus = \"missing.jsonl\"\n").unwrap();
    let o = run(&["ingest"], &f.config);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("does not exist"), "{}", stderr(&o));
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);
}

#[test]
fn classify_without_credentials_is_a_config_error() {
    let f = Fixture::new(3, "[endpoint]\nbase_url = \"http://127.0.0.1:9/v1\"\n");
    for stage in ["ingest", "filter"] {
        assert_eq!(code(&run(&[stage], &f.config)), 0);
    }
    let o = run(&["classify-generic"], &f.config);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("FRAMESCOPE_API_KEY"), "{}", stderr(&o));
}

#[test]
fn endpoint_failure_exits_three_after_finishing() {
    let f = Fixture::new(
        6,
        "[filter]\nlow_trim_fraction = 0.0\nhigh_trim_fraction = 0.0\n[endpoint]\nbase_url = \"http://unused\"\nmax_attempts = 2\ninitial_backoff_ms = 1\n",
    );
    let server = MockServer::scripted(vec![MockReply::Status(503, "down".into())]);
    for stage in ["ingest", "filter"] {
        assert_eq!(code(&run(&[stage], &f.config)), 0);
    }
    let o = run(&["classify-generic", "--mock-endpoint", &server.url()], &f.config);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert_eq!(server.request_count(), 12, "two attempts for each of six articles");
    let audit = std::fs::read_to_string(f.out("generic_audit.jsonl")).unwrap();
    assert_eq!(audit.matches("\"endpoint_failure\"").count(), 6);
}

#[test]
fn run_all_with_mock_and_gold() {
    let f = Fixture::new(testkit::FIXTURE_SIZE, "");
    let gold = f.dir.path().join("gold.jsonl");
    testkit::write_gold(&gold).unwrap();
    let text = std::fs::read_to_string(&f.config).unwrap().replace("[paths]\n", &format!("[paths]\ngold = {:?}\n", gold.display().to_string()));
    std::fs::write(&f.config, text).unwrap();
    let server = MockServer::start(testkit::mock_handler());
    let o = run(&["run-all", "--mock-endpoint", &server.url(), "--seed-less", "--concurrency", "8"], &f.config);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for rel in ["eval/metrics.json", "eval/metrics.txt", "report/report.md", "report/war_peace.svg", "report/word_table.txt", "manifest.json"] {
        assert!(f.out(rel).exists(), "{rel}");
    }
    let md = std::fs::read_to_string(f.out("report/report.md")).unwrap();
    assert!(md.contains("Generic frame classifier evaluation"));

    // Region restriction only touches aggregate and report.
    let before = std::fs::read(f.out("generic_assignments.jsonl")).unwrap();
    let o = run(&["aggregate", "--region", "UK"], &f.config);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(f.out("aggregate/region_summary.json")).unwrap()).unwrap();
    let regions: Vec<&str> = summary["data"].as_array().unwrap().iter().map(|r| r["region"].as_str().unwrap()).collect();
    assert_eq!(regions, ["UK"]);
    assert_eq!(before, std::fs::read(f.out("generic_assignments.jsonl")).unwrap());
}
