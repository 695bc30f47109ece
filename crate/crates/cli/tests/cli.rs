use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexfuse_cli::cache::ForecastCache;
use lexfuse_cli::weights::WeightsFile;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect()
}

fn lexfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexfuse"))
        .args(args)
        .env_remove("LEXFUSE_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = lexfuse(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &TempDir, name: &str, flags: &[&str]) -> (PathBuf, PathBuf) {
    let cache = dir.path().join(format!("{name}.cache.jsonl"));
    let questions = dir.path().join(format!("{name}.questions.jsonl"));
    let mut args = vec!["simulate", "--out-cache", s(&cache), "--out-questions", s(&questions)];
    args.extend_from_slice(flags);
    ok(&args);
    (cache, questions)
}

fn write_questions(path: &Path, answers: &[usize], k: usize) {
    let mut text = String::new();
    for (h, a) in answers.iter().enumerate() {
        let choices: Vec<String> = (0..k).map(|j| format!("[\"c{h}x{j}\"]")).collect();
        text.push_str(&format!(
            "{{\"id\":\"q{h}\",\"stem\":[\"s{h}\"],\"choices\":[{}],\"answer\":{a}}}\n",
            choices.join(",")
        ));
    }
    fs::write(path, text).unwrap();
}

fn write_cache(path: &Path, rows: &[Vec<f64>]) {
    let mut text = String::new();
    for (h, probs) in rows.iter().enumerate() {
        let probs: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
        text.push_str(&format!(
            "{{\"instance_id\":\"q{h}\",\"module_id\":\"m\",\"probs\":[{}]}}\n",
            probs.join(",")
        ));
    }
    fs::write(path, text).unwrap();
}

fn one_hot(k: usize, j: usize) -> Vec<f64> {
    (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect()
}

#[test]
fn run_modules_writes_complete_deterministic_cache() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cache.jsonl");
    let q = fixture("synonyms.jsonl");
    let cfg = fixture("modules.toml");
    ok(&["run-modules", "--questions", s(&q), "--config", s(&cfg), "--out", s(&out)]);
    let first = fs::read(&out).unwrap();
    let cache = ForecastCache::parse(std::str::from_utf8(&first).unwrap(), "cache").unwrap();
    assert_eq!(cache.records.len(), 6);
    assert_eq!(cache.module_ids(), vec!["pmi", "thesaurus"]);

    ok(&["run-modules", "--questions", s(&q), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn abstaining_module_writes_uniform_rows_and_env_selects_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cache.jsonl");
    let q = fixture("synonyms.jsonl");
    let status = Command::new(env!("CARGO_BIN_EXE_lexfuse"))
        .args(["run-modules", "--questions", s(&q), "--out", s(&out)])
        .env("LEXFUSE_CONFIG", fixture("with_lsa.toml"))
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let cache = ForecastCache::load(&out).unwrap();
    assert_eq!(cache.module_ids(), vec!["thesaurus", "lsa", "connector"]);
    for r in cache.records.iter().filter(|r| r.module_id == "lsa") {
        assert_eq!(r.probs, vec![0.25; 4]);
    }
    let connector: Vec<_> = cache.records.iter().filter(|r| r.module_id == "connector").collect();
    assert_eq!(connector[0].probs, vec![0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn analogy_modules_run_from_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cache.jsonl");
    let q = fixture("analogies.jsonl");
    let cfg = fixture("analogies.toml");
    ok(&["run-modules", "--questions", s(&q), "--config", s(&cfg), "--out", s(&out)]);
    let cache = ForecastCache::load(&out).unwrap();
    assert_eq!(cache.records.len(), 8);
    let get = |id: &str, m: &str| {
        cache
            .records
            .iter()
            .find(|r| r.instance_id == id && r.module_id == m)
            .unwrap()
            .probs
            .clone()
    };
    assert_eq!(get("a1", "antonyms"), vec![0.0, 1.0, 0.0]);
    assert_eq!(get("a2", "antonyms"), vec![1.0 / 3.0; 3]);
    let d = get("a2", "definitions");
    for (x, y) in d.iter().zip([0.5, 3.0 / 14.0, 4.0 / 14.0]) {
        assert!((x - y).abs() < 1e-15);
    }
    assert_eq!(get("a1", "paths"), vec![0.0, 1.0, 0.0]);
    assert_eq!(get("a2", "phrases"), vec![1.0, 0.0, 0.0]);
}

#[test]
fn resource_and_config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cache.jsonl");
    let q = fixture("synonyms.jsonl");

    let cfg = dir.path().join("missing.toml");
    fs::write(&cfg, "[[module]]\nid = \"t\"\nkind = \"thesaurus\"\nlists = \"nowhere.tsv\"\n").unwrap();
    let res = lexfuse(&["run-modules", "--questions", s(&q), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("nowhere.tsv"));
    assert!(!out.exists());

    let cfg = dir.path().join("unknown.toml");
    fs::write(&cfg, "[[module]]\nid = \"t\"\nkind = \"oracle\"\n").unwrap();
    let res = lexfuse(&["run-modules", "--questions", s(&q), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 2);

    let res = lexfuse(&["run-modules", "--questions", s(&dir.path().join("none.jsonl")), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 2);
}

#[test]
fn module_task_mismatch_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cache.jsonl");
    let q = fixture("analogies.jsonl");
    let cfg = fixture("modules.toml");
    let res = lexfuse(&["run-modules", "--questions", s(&q), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 3);
}

#[test]
fn simulate_is_reproducible_and_validated() {
    let dir = TempDir::new().unwrap();
    let flags = ["--k", "4", "--acc", "0.85", "--m", "1000", "--seed", "7"];
    let (c1, q1) = simulate(&dir, "a", &flags);
    let (c2, q2) = simulate(&dir, "b", &flags);
    assert_eq!(fs::read(&c1).unwrap(), fs::read(&c2).unwrap());
    assert_eq!(fs::read(&q1).unwrap(), fs::read(&q2).unwrap());
    let cache = ForecastCache::load(&c1).unwrap();
    assert_eq!(cache.records.len(), 1000);
    for r in &cache.records {
        let sum: f64 = r.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9 && r.probs.iter().all(|&p| p >= 0.0));
    }

    let bad = lexfuse(&[
        "simulate", "--acc", "0.2", "--out-cache", s(&dir.path().join("x")), "--out-questions", s(&dir.path().join("y")),
    ]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn train_recovers_calibration_weights_deterministically() {
    let dir = TempDir::new().unwrap();
    let (cache, questions) = simulate(&dir, "train", &["--acc", "0.85", "--m", "2000", "--seed", "1", "--mode", "one-hot"]);
    let w1 = dir.path().join("w1.toml");
    let w2 = dir.path().join("w2.toml");
    for out in [&w1, &w2] {
        let stdout = ok(&["train", "--cache", s(&cache), "--questions", s(&questions), "--rule", "product", "--seed", "3", "--out", s(out)]);
        assert!(stdout.contains("restart 9"));
        assert!(stdout.contains("mean likelihood"));
    }
    assert_eq!(fs::read(&w1).unwrap(), fs::read(&w2).unwrap());
    let file = WeightsFile::load(&w1).unwrap();
    assert_eq!(file.rule, "product");
    assert!((file.weights["sim0"] - 0.8).abs() < 0.03, "{:?}", file.weights);
    assert_eq!(file.training.seed, 3);
    assert_eq!(file.training.question_digest.len(), 64);

    let wl = dir.path().join("wl.toml");
    ok(&["train", "--cache", s(&cache), "--questions", s(&questions), "--rule", "logarithmic", "--out", s(&wl)]);
    let file = WeightsFile::load(&wl).unwrap();
    assert!((file.weights["sim0"] - 0.2461).abs() < 0.01, "{:?}", file.weights);
    assert_eq!(file.training.smoothing_epsilon, 1e-5);
}

#[test]
fn partial_or_foreign_caches_exit_3() {
    let dir = TempDir::new().unwrap();
    let (cache, questions) = simulate(&dir, "p", &["--acc", "0.7", "--m", "20", "--seed", "2"]);
    let text = fs::read_to_string(&cache).unwrap();
    let partial = dir.path().join("partial.jsonl");
    fs::write(&partial, text.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    let out = dir.path().join("w.toml");
    let res = lexfuse(&["train", "--cache", s(&partial), "--questions", s(&questions), "--rule", "product", "--out", s(&out)]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!out.exists());

    let (_, other_questions) = simulate(&dir, "o", &["--acc", "0.7", "--m", "10", "--seed", "2"]);
    let res = lexfuse(&["train", "--cache", s(&cache), "--questions", s(&other_questions), "--rule", "product", "--out", s(&out)]);
    assert_eq!(code(&res), 3);

    let dup = dir.path().join("dup.jsonl");
    fs::write(&dup, format!("{text}{}\n", text.lines().next().unwrap())).unwrap();
    let res = lexfuse(&["train", "--cache", s(&dup), "--questions", s(&questions), "--rule", "product", "--out", s(&out)]);
    assert_eq!(code(&res), 2);
}

fn train_and_eval(dir: &TempDir, answers: &[usize], rows: &[Vec<f64>]) -> serde_json::Value {
    let k = rows[0].len();
    let q = dir.path().join("q.jsonl");
    let c = dir.path().join("c.jsonl");
    let w = dir.path().join("w.toml");
    let r = dir.path().join("r.json");
    write_questions(&q, answers, k);
    write_cache(&c, rows);
    ok(&["train", "--cache", s(&c), "--questions", s(&q), "--rule", "product", "--out", s(&w)]);
    let table = ok(&["eval", "--cache", s(&c), "--questions", s(&q), "--weights", s(&w), "--out", s(&r)]);
    assert!(table.contains("merged (product)"));
    serde_json::from_str(&fs::read_to_string(&r).unwrap()).unwrap()
}

#[test]
fn eval_reports_accuracy_likelihood_and_intervals() {
    let dir = TempDir::new().unwrap();
    let answers: Vec<usize> = (0..80).map(|h| h % 4).collect();

    let perfect: Vec<Vec<f64>> = answers.iter().map(|&a| one_hot(4, a)).collect();
    let report = train_and_eval(&dir, &answers, &perfect);
    let merged = &report["rows"][1];
    assert_eq!(merged["accuracy"], 1.0);
    assert!((merged["ci95_low"].as_f64().unwrap() - 0.9549).abs() < 1e-4);

    let uniform = vec![vec![0.25; 4]; 80];
    let report = train_and_eval(&dir, &answers, &uniform);
    assert!((report["rows"][1]["mean_likelihood"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(report["rows"][1]["skipped"], 80);

    let partly: Vec<Vec<f64>> = answers
        .iter()
        .enumerate()
        .map(|(h, &a)| one_hot(4, if h < 59 { a } else { (a + 1) % 4 }))
        .collect();
    let report = train_and_eval(&dir, &answers, &partly);
    for row in report["rows"].as_array().unwrap() {
        assert_eq!(row["correct"], 59);
        assert!((100.0 * row["ci95_low"].as_f64().unwrap() - 62.71).abs() < 0.01);
        assert!((100.0 * row["ci95_high"].as_f64().unwrap() - 82.96).abs() < 0.01);
    }
}

#[test]
fn predict_marks_skips_and_agrees_with_eval() {
    let dir = TempDir::new().unwrap();
    let answers = vec![0, 1, 2, 3];
    let rows = vec![one_hot(4, 0), vec![0.25; 4], one_hot(4, 1), one_hot(4, 3)];
    let report = train_and_eval(&dir, &answers, &rows);
    let q = dir.path().join("q.jsonl");
    let c = dir.path().join("c.jsonl");
    let w = dir.path().join("w.toml");
    let lines = ok(&["predict", "--cache", s(&c), "--weights", s(&w), "--questions", s(&q)]);
    let preds: Vec<serde_json::Value> = lines.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(preds.len(), 4);
    assert_eq!(preds[0]["choice"], 0);
    assert_eq!(preds[0]["skip"], false);
    assert_eq!(preds[1]["skip"], true);
    let correct = preds
        .iter()
        .zip(&answers)
        .filter(|(p, &a)| p["choice"].as_u64() == Some(a as u64))
        .count();
    assert_eq!(report["rows"][1]["correct"], correct);
}

#[test]
fn eval_rejects_weights_for_other_modules() {
    let dir = TempDir::new().unwrap();
    let (cache, questions) = simulate(&dir, "e", &["--acc", "0.7", "--acc", "0.6", "--m", "50"]);
    let w = dir.path().join("w.toml");
    ok(&["train", "--cache", s(&cache), "--questions", s(&questions), "--rule", "mixture", "--out", s(&w)]);
    let (c1, q1) = simulate(&dir, "single", &["--acc", "0.7", "--m", "50"]);
    let res = lexfuse(&["eval", "--cache", s(&c1), "--questions", s(&q1), "--weights", s(&w)]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
}
