use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ibm(dir: &Path, args: &[&str]) -> Output {
    ibm_env(dir, args, None)
}

fn ibm_env(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ibm"));
    cmd.current_dir(dir).args(args);
    match threads {
        Some(t) => cmd.env("IBM_THREADS", t),
        None => cmd.env_remove("IBM_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("ibm-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        if e.file_type().unwrap().is_file() {
            out.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap());
        }
    }
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn only_run(dir: &Path) -> PathBuf {
    let runs: Vec<PathBuf> = std::fs::read_dir(dir.join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(runs.len(), 1, "{runs:?}");
    runs[0].clone()
}

#[test]
fn sample_writes_batch_and_is_deterministic() {
    let dir = scratch("sample");
    let args = ["sample", "--model", "sine2", "--window", "20", "--replicas", "100", "--seed", "7"];
    let o = ibm(&dir, &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let run = only_run(&dir);
    let first = files(&run);
    assert_eq!(first.keys().filter(|k| k.starts_with("sample_") && k.ends_with(".csv")).count(), 100);
    for name in ["manifest.json", "config.toml", "report.json", "report.md"] {
        assert!(first.contains_key(name), "missing {name}");
    }
    let m = json(&run.join("manifest.json"));
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["master_seed"], 7);
    assert_eq!(m["model"]["kind"], "sine");
    assert!(m["code_version"].as_str().unwrap().len() > 3);
    assert_eq!(m["config"]["sampler"]["window"], 20.0);

    let o = ibm(&dir, &args);
    assert_eq!(code(&o), 0);
    assert_eq!(files(&run), first, "rerun with the same seed changed outputs");

    // The manifest alone replays the batch.
    let replay = scratch("sample-replay");
    let manifest = run.join("manifest.json");
    let o = ibm(&replay, &["sample", "--config", manifest.to_str().unwrap(), "--set", "output_dir=\"out\""]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let again = files(&replay.join("out").join(run.file_name().unwrap()));
    for (k, v) in &first {
        if k.ends_with(".csv") {
            assert_eq!(again.get(k), Some(v), "{k} differs on replay");
        }
    }
}

#[test]
fn configuration_errors_exit_2() {
    let dir = scratch("errors");
    let o = ibm(&dir, &["sample", "--model", "sine3", "--window", "20"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("{1, 2, 4}"), "{}", stderr(&o));

    let o = ibm(&dir, &["sample", "--model", "sine2", "--window", "5", "--set", "sampler.colour=3"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    std::fs::write(dir.join("bad.toml"), "[seeds]\nmaster = 1\nreplica = 3\n").unwrap();
    let o = ibm(&dir, &["sample", "--config", "bad.toml", "--model", "sine2", "--window", "5"]);
    assert_eq!(code(&o), 2);

    let o = ibm(&dir, &["verify", "--check", "bogus", "--model", "sine2"]);
    assert_eq!(code(&o), 2);

    let o = ibm_env(&dir, &["sample", "--model", "sine2", "--window", "5"], Some("zero"));
    assert_eq!(code(&o), 2);
    assert!(!dir.join("runs").exists() || std::fs::read_dir(dir.join("runs")).unwrap().count() == 0);
}

#[test]
fn simulate_lower_writes_paths_and_manifest() {
    let dir = scratch("simulate");
    let o = ibm(
        &dir,
        &["simulate", "--model", "sine2", "--scheme", "lower", "--radius", "20", "--t-end", "1", "--dt", "0.01", "--replicas", "3", "--seed", "5"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("steps/s"));
    let run = only_run(&dir);
    let m = json(&run.join("manifest.json"));
    let entries = m["files"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for e in entries {
        assert_eq!(e["scheme"], "lower");
        assert_eq!(e["radius"], 20.0);
        let csv = std::fs::read_to_string(run.join(e["file"].as_str().unwrap())).unwrap();
        assert!(csv.starts_with("time,label,frozen,x1,local_time\n"));
        assert!(csv.lines().last().unwrap().starts_with("1.0"), "{}", csv.lines().last().unwrap());
    }
    let config = std::fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(config.contains("[scheme.cutoff]"), "resolved config echoes defaults");
}

#[test]
fn upper_scheme_logs_births_on_bessel() {
    let dir = scratch("upper");
    let o = ibm(
        &dir,
        &[
            "simulate", "--model", "bessel:1.5", "--scheme", "upper", "--radius", "30", "--t-end", "1", "--dt", "0.01",
            "--replicas", "2", "--set", "scheme.boundary_intensity=2.0",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = json(&only_run(&dir).join("manifest.json"));
    assert!(m["surrogate_note"].as_str().unwrap().contains("reservoir"));
    let births: usize = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|e| e["events"].as_array().cloned().unwrap_or_default())
        .filter(|ev| ev["kind"] == "birth")
        .count();
    assert!(births > 0, "no births logged");
}

#[test]
fn resume_and_worker_count_do_not_change_paths() {
    let dir = scratch("resume");
    let base = ["simulate", "--model", "sine2", "--scheme", "lower", "--radius", "8", "--t-end", "0.5", "--dt", "0.01", "--replicas", "3", "--seed", "11"];
    let with = |extra: &[&str]| -> Vec<String> { base.iter().chain(extra).map(|s| s.to_string()).collect() };
    let run = |args: Vec<String>, threads: Option<&str>| {
        let refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        let o = ibm_env(&dir, &refs, threads);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    run(with(&["--run-id", "full"]), Some("1"));
    run(with(&["--run-id", "threads"]), Some("3"));
    run(with(&["--run-id", "cut", "--checkpoint-every", "7", "--halt-after", "20"]), Some("2"));
    let cut = dir.join("runs").join("cut");
    assert!(!cut.join("manifest.json").exists());
    assert!(cut.join("path_0000.checkpoint.json").exists());
    let o = ibm_env(&dir, &["simulate", "--resume", cut.to_str().unwrap()], Some("2"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!cut.join("path_0000.checkpoint.json").exists());

    let full = files(&dir.join("runs").join("full"));
    let threads = files(&dir.join("runs").join("threads"));
    let resumed = files(&cut);
    for (k, v) in full.iter().filter(|(k, _)| k.starts_with("path_")) {
        assert_eq!(threads.get(k), Some(v), "{k}: worker count changed the output");
        assert_eq!(resumed.get(k), Some(v), "{k}: resumed run differs");
    }
}

#[test]
fn verify_a4_and_run_checks() {
    let dir = scratch("verify");
    let o = ibm(&dir, &["verify", "--check", "a4", "--model", "ginibre", "--run-id", "a4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&dir.join("runs/a4/report.json"));
    let stat = report["statistics"].as_array().unwrap().iter().find(|s| s["name"] == "a4 integral").unwrap().clone();
    // ∫ Erf(|x|) / π dx over the plane is 2 ∫ u P(Z > u) du = 1/2.
    assert!((stat["value"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let o = ibm(
        &dir,
        &["simulate", "--model", "free1", "--scheme", "lower", "--radius", "6", "--t-end", "0.4", "--dt", "0.01",
          "--replicas", "20", "--run-id", "free", "--set", "sampler.intensity=3.0"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = ibm(
        &dir,
        &["verify", "--check", "invariance,local-time,nbj,min-gap,moment", "--runs", "runs/free", "--run-id", "checks",
          "--set", "diagnostics.lags=[0.01,0.02,0.04]"],
    );
    assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
    let out = dir.join("runs/checks");
    assert!(out.join("report.md").exists());
    let report = json(&out.join("report.json"));
    let names: Vec<String> = report["verdicts"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap().to_string()).collect();
    for key in ["stable at t=", "local time vanishes", "no collisions", "moment slope"] {
        assert!(names.iter().any(|n| n.contains(key)), "no verdict with `{key}` in {names:?}");
    }
    assert_eq!(report["provenance"].as_array().unwrap().len(), 1);

    let o = ibm(&dir, &["verify", "--check", "invariance", "--runs", "runs/free", "--model", "sine2"]);
    assert_eq!(code(&o), 2, "model mismatch is a configuration error");
}

#[test]
fn ladder_then_verify_scheme_ladder() {
    let dir = scratch("ladder");
    let o = ibm(
        &dir,
        &["ladder", "--model", "sine2", "--dt", "0.01", "--t-end", "0.2", "--radii", "4,6", "--reference-radius", "10",
          "--replicas", "4", "--seed", "2", "--run-id", "lad", "--set", "scheme.kind=\"lower\"", "--set", "scheme.radius=10.0"],
    );
    assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
    let lad = dir.join("runs/lad");
    for sub in ["lower-R4", "lower-R6", "upper-R6", "reference-R10"] {
        assert!(lad.join(sub).join("manifest.json").exists(), "{sub}");
    }
    let report = json(&lad.join("report.json"));
    let verdicts = report["verdicts"].as_array().unwrap();
    assert!(verdicts.iter().any(|v| v["rule"]["rule"] == "strictly_decreasing"));
    assert!(verdicts.iter().any(|v| v["rule"]["rule"] == "agree"));

    let runs = "runs/lad/lower-R4,runs/lad/lower-R6,runs/lad/reference-R10";
    let o = ibm(&dir, &["verify", "--check", "scheme-ladder", "--runs", runs, "--run-id", "v"]);
    assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
    let v = json(&dir.join("runs/v/report.json"));
    let w1 = |name: &str| {
        v["statistics"].as_array().unwrap().iter().find(|s| s["name"] == format!("W1[{name}]")).unwrap()["value"].as_f64().unwrap()
    };
    let r = &report["statistics"].as_array().unwrap();
    let from_ladder = r.iter().find(|s| s["name"] == "W1[lower-R4]").unwrap()["value"].as_f64().unwrap();
    assert_eq!(w1("lower-R4"), from_ladder, "verify recomputes the ladder's distances from disk");
}
