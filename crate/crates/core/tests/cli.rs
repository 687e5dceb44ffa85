use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn timecf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timecf")).args(args).env_remove("TIMECF_THREADS").output().expect("spawn timecf")
}

fn ok(args: &[&str]) -> Output {
    let out = timecf(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic log in a fresh temp dir.
fn small_log(dir: &TempDir, seed: u64) -> PathBuf {
    let path = dir.path().join(format!("log{seed}.tsv"));
    let seed = seed.to_string();
    ok(&["synth", "--seed", &seed, "--users", "80", "--items", "200", "--events", "4000", "--out", s(&path)]);
    path
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_is_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = fs::read(small_log(&dir, 3)).unwrap();
    let c = ok(&["synth", "--seed", "3", "--users", "80", "--items", "200", "--events", "4000"]).stdout;
    assert_eq!(a, c);
    let d = ok(&["synth", "--seed", "4", "--users", "80", "--items", "200", "--events", "4000"]).stdout;
    assert_ne!(a, d);
}

#[test]
fn evaluate_output_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let log = small_log(&dir, 1);
    let args = |t: &'static str| {
        ["--threads", t, "evaluate", "--in", s(&log), "--decay", "piecewise:Ts=5e4,Tl=1e6,Ks=0.6,Kl=0.3"]
    };
    let one = ok(&args("1")).stdout;
    let four = ok(&args("4")).stdout;
    assert_eq!(one, four);
    let v: Value = serde_json::from_slice(&one).unwrap();
    assert_eq!(v["decay"], "piecewise:Ts=50000,Tl=1000000,Ks=0.6,Kl=0.3");
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.iter().map(|r| r["n"].as_u64().unwrap()).collect::<Vec<_>>(), vec![10, 20, 50]);
    assert!(v.get("wall_time_secs").is_none());
    let users = v["evaluated_users"].as_f64().unwrap();
    for r in results {
        let (n, hits) = (r["n"].as_f64().unwrap(), r["hits"].as_f64().unwrap());
        assert!((r["hit_rate"].as_f64().unwrap() - hits / (users * n)).abs() < 1e-11);
        assert!(r.get("normalized_hit_rate").is_none());
    }

    let timed = ok(&["evaluate", "--in", s(&log), "--n", "5", "--normalize-hitrate", "--timing"]).stdout;
    let v: Value = serde_json::from_slice(&timed).unwrap();
    assert!(v["wall_time_secs"].as_f64().unwrap() >= 0.0);
    assert!(v["results"][0]["normalized_hit_rate"].is_number());
}

#[test]
fn ingest_reports_statistics() {
    let dir = TempDir::new().unwrap();
    let log = dir.path().join("tiny.csv");
    fs::write(&log, "a,x,1\na,y,2\nb,x,3\nb,y,4\nc,z,5\nnot a row\nd,x,oops\n").unwrap();
    let out = timecf(&["ingest", "--in", s(&log), "--delimiter", ","]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["users"], 2);
    assert_eq!(v["items"], 2);
    assert_eq!(v["ratings"], 4);
    assert_eq!(v["sparsity"].as_f64().unwrap(), 0.0);
    assert!(String::from_utf8_lossy(&out.stderr).contains('2'));
}

#[test]
fn analyze_then_fit_trend() {
    let dir = TempDir::new().unwrap();
    let log = small_log(&dir, 2);
    let curve = dir.path().join("curve.csv");
    let trend = dir.path().join("trend.json");
    ok(&["analyze-ssnr", "--in", s(&log), "--out", s(&curve), "--trend-out", s(&trend)]);
    let text = fs::read_to_string(&curve).unwrap();
    assert_eq!(text.lines().next().unwrap(), "age_lo,age_hi,mean_ssnr,count");
    assert!(text.lines().count() > 5);
    let t = json_file(&trend);
    for key in ["t_short", "t_long", "k_short", "k_long", "plateau", "residual"] {
        assert!(t[key].is_number(), "{key}");
    }
    assert!(t["t_short"].as_f64().unwrap() <= t["t_long"].as_f64().unwrap());

    let refit = dir.path().join("refit.json");
    ok(&["fit-trend", "--curve", s(&curve), "--out", s(&refit)]);
    // The curve CSV carries 12 significant digits, so refits agree closely
    // rather than bit for bit.
    let r = json_file(&refit);
    for key in ["t_short", "t_long", "k_short", "k_long", "plateau", "residual"] {
        let (a, b) = (r[key].as_f64().unwrap(), t[key].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{key}: {a} vs {b}");
    }
    assert!(t["decay"].as_str().unwrap().parse::<timecf::DecaySpec>().is_ok());
}

#[test]
fn sweep_best_matches_table() {
    let dir = TempDir::new().unwrap();
    let log = small_log(&dir, 5);
    let best = dir.path().join("best.json");
    let out = ok(&[
        "sweep",
        "--in",
        s(&log),
        "--family",
        "piecewise",
        "--points",
        "2",
        "--grid",
        "Ts=1e3:1e5:3",
        "--grid",
        "Kl=0.3",
        "--best",
        s(&best),
    ])
    .stdout;
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "Ts,Tl,Ks,Kl,H@10,H@20,H@50");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    let max = rows.iter().map(|r| r[4]).fold(f64::MIN, f64::max);
    let first = rows.iter().find(|r| r[4] == max).unwrap();
    let b = json_file(&best);
    assert_eq!(b["family"], "piecewise");
    assert_eq!(b["objective"], "H@10");
    assert_eq!(b["grid_points"], 12);
    assert_eq!(b["params"]["Ts"].as_f64().unwrap(), first[0]);
    assert_eq!(b["params"]["Tl"].as_f64().unwrap(), first[1]);
    assert_eq!(b["results"][0]["hit_rate"].as_f64().unwrap(), max);
}

#[test]
fn recommend_lists_unseen_items() {
    let dir = TempDir::new().unwrap();
    let log = dir.path().join("tiny.tsv");
    fs::write(&log, "a\tx\t1\na\ty\t2\nb\tx\t3\nb\ty\t4\nb\tz\t5\nc\tz\t6\nc\tw\t7\nd\tw\t8\n").unwrap();
    let out = ok(&["recommend", "--in", s(&log), "--user", "a", "--at", "100", "--n", "5"]).stdout;
    let v: Value = serde_json::from_slice(&out).unwrap();
    let items: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["item"].as_str().unwrap()).collect();
    assert_eq!(items[0], "z");
    assert!(!items.contains(&"x") && !items.contains(&"y"));
    let scores: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]) && scores.iter().all(|&x| x > 0.0));

    let early = timecf(&["recommend", "--in", s(&log), "--user", "a", "--at", "1"]);
    assert_eq!(early.status.code(), Some(1));
    let unknown = timecf(&["recommend", "--in", s(&log), "--user", "nobody", "--at", "100"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn similarity_cache_round_trip_and_refusal() {
    let dir = TempDir::new().unwrap();
    let log_a = small_log(&dir, 6);
    let log_b = small_log(&dir, 7);
    let cache = dir.path().join("sim.bin");
    let first = ok(&["evaluate", "--in", s(&log_a), "--sim-cache", s(&cache)]).stdout;
    assert!(cache.exists());
    let second = ok(&["evaluate", "--in", s(&log_a), "--sim-cache", s(&cache)]).stdout;
    assert_eq!(first, second);
    let refused = timecf(&["--json-errors", "evaluate", "--in", s(&log_b), "--sim-cache", s(&cache)]);
    assert_eq!(refused.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&refused.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "pipeline");
}

#[test]
fn exit_codes_and_error_format() {
    assert!(timecf(&["--version"]).status.success());
    assert!(timecf(&["--help"]).status.success());
    assert_eq!(timecf(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(timecf(&["evaluate"]).status.code(), Some(2));

    let usage = timecf(&["--json-errors", "evaluate", "--bogus"]);
    assert_eq!(usage.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&usage.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "usage");

    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.tsv");
    let out = timecf(&["evaluate", "--in", s(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let log = small_log(&dir, 8);
    let bad_decay = timecf(&["evaluate", "--in", s(&log), "--decay", "piecewise:Ts=1e6,Tl=10,Ks=0.5,Kl=0.5"]);
    assert_eq!(bad_decay.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_decay.stderr).contains("Tl"));
}

#[test]
fn threads_from_environment() {
    let dir = TempDir::new().unwrap();
    let log = small_log(&dir, 9);
    let env_run = Command::new(env!("CARGO_BIN_EXE_timecf"))
        .args(["evaluate", "--in", s(&log)])
        .env("TIMECF_THREADS", "2")
        .output()
        .unwrap();
    assert!(env_run.status.success());
    assert_eq!(env_run.stdout, ok(&["evaluate", "--in", s(&log)]).stdout);
}
