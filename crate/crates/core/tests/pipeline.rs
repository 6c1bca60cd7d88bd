use std::collections::BTreeMap;
use std::path::Path;

use framescope::llm_gateway::mock::MockServer;
use framescope::pipeline::{count_records, Pipeline, PipelineConfig, RunManifest, RunOptions, Stage, MANIFEST_FILE};
use framescope::testkit;

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline(dir: &Path, url: &str) -> Pipeline {
    let corpus = dir.join("corpus.jsonl");
    let gold = dir.join("gold.jsonl");
    if !corpus.exists() {
        let articles: Vec<_> = (0..30).map(testkit::fixture_article).collect();
        testkit::write_corpus(&corpus, &articles).unwrap();
        testkit::write_gold(&gold).unwrap();
    }
    let extra = format!("gold = {:?}", gold.display().to_string());
    let config = testkit::write_config(dir, &corpus, &dir.join("out"), &extra).unwrap();
    let options = RunOptions { mock_endpoint: Some(url.to_string()), ..Default::default() };
    Pipeline::new(PipelineConfig::load(&config).unwrap(), options).unwrap()
}

/// Drops the timestamp fields, the only bytes allowed to change between identical runs.
fn without_timestamps(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    let m = v.as_object_mut().unwrap();
    m.remove("created_at");
    m.remove("updated_at");
    for rec in m["stages"].as_object_mut().unwrap().values_mut() {
        rec.as_object_mut().unwrap().remove("completed_at");
    }
    v
}

#[test]
fn manifest_counts_reconcile_and_reruns_are_identical() {
    let server = MockServer::start(testkit::mock_handler());
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let mut p = pipeline(dir.path(), &server.url());
    let reports = p.run_all().unwrap();
    assert_eq!(reports.len(), Stage::ALL.len());

    let manifest = RunManifest::load(&out).unwrap();
    assert_eq!(manifest.manifest_hash, p.manifest_hash());
    assert_eq!(manifest.stages.len(), Stage::ALL.len());
    assert!(manifest.verify_counts(&out).is_empty(), "{:?}", manifest.verify_counts(&out));
    // Counts agree with an independent line count of the artifacts.
    for rec in manifest.stages.values() {
        for (file, &n) in &rec.counts {
            let text = std::fs::read_to_string(out.join(file)).unwrap();
            let lines = if file.ends_with(".csv") {
                text.lines().filter(|l| !l.starts_with('#')).count() - 1
            } else {
                text.lines().filter(|l| !l.starts_with("{\"__header__\"")).count()
            };
            assert_eq!(lines, n, "{file}");
            assert_eq!(count_records(&out.join(file)).unwrap(), n);
        }
    }

    let first = files(&out);
    let mut again = pipeline(dir.path(), &server.url());
    assert_eq!(again.manifest_hash(), p.manifest_hash());
    again.run_all().unwrap();
    let second = files(&out);
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (k, bytes) in &first {
        if k == MANIFEST_FILE {
            assert_eq!(without_timestamps(bytes), without_timestamps(&second[k]));
        } else {
            assert!(bytes == &second[k], "{k} changed on rerun");
        }
    }

    // A tampered artifact is reported.
    let filtered = out.join("filtered.jsonl");
    let text = std::fs::read_to_string(&filtered).unwrap();
    let kept: Vec<&str> = text.lines().take(3).collect();
    std::fs::write(&filtered, kept.join("\n") + "\n").unwrap();
    let problems = RunManifest::load(&out).unwrap().verify_counts(&out);
    assert_eq!(problems.len(), 1, "{problems:?}");
    assert!(problems[0].contains("filtered.jsonl"));
}

#[test]
fn config_change_moves_the_hash() {
    let server = MockServer::start(testkit::mock_handler());
    let dir = tempfile::tempdir().unwrap();
    let a = pipeline(dir.path(), &server.url());
    let corpus = dir.path().join("corpus.jsonl");
    let config = testkit::write_config(dir.path(), &corpus, &dir.path().join("elsewhere"), "[analysis]\ntop_k = 3").unwrap();
    let b = Pipeline::new(PipelineConfig::load(&config).unwrap(), RunOptions::default()).unwrap();
    assert_ne!(a.manifest_hash(), b.manifest_hash());
    // Output location alone does not count.
    let config = testkit::write_config(dir.path(), &corpus, &dir.path().join("other"), "").unwrap();
    let mut c = PipelineConfig::load(&config).unwrap();
    c.paths.gold = a.config().paths.gold.clone();
    let c = Pipeline::new(c, RunOptions::default()).unwrap();
    assert_eq!(a.manifest_hash(), c.manifest_hash());
}
