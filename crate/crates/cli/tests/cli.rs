use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_abcscore"));
    c.env_remove("ABCSCORE_WORKERS");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_config(dir: &Path, config: &Path, out: &str, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra)
        .output()
        .unwrap()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn error_report(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("empty stderr");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {text}"))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// Dotted paths of every object key, sorted.
fn key_paths(v: &Value) -> Vec<String> {
    fn walk(v: &Value, prefix: &str, out: &mut Vec<String>) {
        if let Value::Object(m) = v {
            for (k, child) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                out.push(p.clone());
                walk(child, &p, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(v, "", &mut out);
    out.sort();
    out
}

fn golden(name: &str) -> Vec<String> {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    fs::read_to_string(p).unwrap().lines().map(str::to_string).collect()
}

const NP_CONFIG: &str = r#"{
  "model": "normal-parabola",
  "method": "abc-cs",
  "seed": 42,
  "sampler": { "n_proposals": 20000, "alpha": 0.01 }
}"#;

#[test]
fn np_output_schema_matches_golden() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "np.json", NP_CONFIG);
    let o = run_config(tmp.path(), &cfg, "out", &[]);
    assert_ok(&o);
    let out = tmp.path().join("out");

    let samples = fs::read_to_string(out.join("samples.csv")).unwrap();
    assert_eq!(samples.lines().next().unwrap(), golden("np_samples_header.txt")[0]);
    assert_eq!(samples.lines().count(), 1 + 200);

    let summary = read_json(&out.join("summary.json"));
    assert_eq!(key_paths(&summary), golden("summary_keys.txt"));
    let mut pkeys: Vec<String> = summary["parameters"][0].as_object().unwrap().keys().cloned().collect();
    pkeys.sort();
    assert_eq!(pkeys, golden("parameter_keys.txt"));

    let diag = read_json(&out.join("diagnostics.json"));
    assert_eq!(key_paths(&diag), golden("np_diagnostics_keys.txt"));

    let snapshot = fs::read_to_string(out.join("config.json")).unwrap();
    assert!(abcscore_cli::parse_config_str(&snapshot).is_ok());
}

#[test]
fn np_rerun_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "np.json", NP_CONFIG);
    assert_ok(&run_config(tmp.path(), &cfg, "a", &[]));
    assert_ok(&run_config(tmp.path(), &cfg, "b", &[]));
    for f in ["samples.csv", "diagnostics.json", "config.json"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let mut a = read_json(&tmp.path().join("a/summary.json"));
    let mut b = read_json(&tmp.path().join("b/summary.json"));
    a["meta"].as_object_mut().unwrap().remove("timing");
    b["meta"].as_object_mut().unwrap().remove("timing");
    assert_eq!(a, b);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "np.json", NP_CONFIG);
    assert_ok(&run_config(tmp.path(), &cfg, "a", &[]));
    assert_ok(&run_config(tmp.path(), &cfg, "b", &["--seed", "43"]));
    let a = fs::read(tmp.path().join("a/samples.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/samples.csv")).unwrap();
    assert_ne!(a, b);
    assert_eq!(read_json(&tmp.path().join("b/summary.json"))["meta"]["seed"], 43);
}

#[test]
fn smith_full_mcmc_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "s.json", r#"{"model": "smith", "method": "full-mcmc", "seed": 1}"#);
    let o = run_config(tmp.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = error_report(&o);
    assert_eq!(r["error"]["kind"], "config");
    assert_eq!(r["error"]["path"], "method");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_exit_one_with_key_path() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        (r#"{"model": "equicorr", "method": "abc-cs", "seed": 1, "sampler": {"alpha": 0}}"#, "sampler.alpha"),
        (r#"{"model": "equicorr", "method": "abc-cs", "seed": 1, "colour": 3}"#, "colour"),
        (
            r#"{"model": "smith", "method": "abc-cs", "seed": 1,
                "params": {"theta": [1, 2, 1, 30, 0, 0, 8, 0, 0, 0.1]}}"#,
            "params.theta",
        ),
    ];
    for (i, (text, path)) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("c{i}.json"), text);
        let o = run_config(tmp.path(), &cfg, "out", &[]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        let r = error_report(&o);
        assert!(
            r["error"]["path"].as_str().unwrap_or("").contains(path),
            "{text}: {r}"
        );
    }
    let bad = write(tmp.path(), "bad.json", "{ not json");
    assert_eq!(run_config(tmp.path(), &bad, "out", &[]).status.code(), Some(1));
    let usage = bin().arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn runtime_failure_exits_two() {
    // Output directory path is an existing regular file.
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "np.json", NP_CONFIG);
    write(tmp.path(), "out", "occupied");
    let o = run_config(tmp.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_report(&o)["error"]["kind"], "runtime");
}

#[test]
fn equicorr_default_run_reports_all_parameters() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "eq.json",
        r#"{"model": "equicorr", "method": "abc-cs", "seed": 3, "sampler": {"n_proposals": 50000}}"#,
    );
    let o = run_config(tmp.path(), &cfg, "out", &[]);
    assert_ok(&o);
    let s = read_json(&tmp.path().join("out/summary.json"));
    let names: Vec<&str> = s["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["mu", "tau", "kappa"]);
    for p in s["parameters"].as_array().unwrap() {
        assert!(p["mean"].as_f64().unwrap().is_finite());
        assert!(p["sd"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn smith_run_writes_extremal_curve() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "s.json",
        r#"{"model": "smith", "method": "abc-cs", "seed": 5, "godambe_replications": 100,
            "sampler": {"n_proposals": 1000, "alpha": 0.05},
            "params": {"grid_side": 2, "n_years": 20}}"#,
    );
    assert_ok(&run_config(tmp.path(), &cfg, "out", &[]));
    let curve = fs::read_to_string(tmp.path().join("out/extremal.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next().unwrap(), "hx,hy,distance,mean,lower,upper");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert!(1.0 <= r[4] && r[4] <= r[5] && r[5] <= 2.0, "{r:?}");
        assert!((1.0..=2.0).contains(&r[3]), "{r:?}");
    }
}

#[test]
fn study_writes_one_row_per_trial_and_method() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "st.json",
        r#"{"model": "normal-parabola", "method": "abc-cs", "seed": 9,
            "sampler": {"n_proposals": 5000, "alpha": 0.02},
            "study": {"n_trials": 3, "methods": ["abc-cs", "abc-suffstat"]}}"#,
    );
    let o = bin()
        .args(["study", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_ok(&o);
    let text = fs::read_to_string(tmp.path().join("out/study.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    assert!(header.iter().any(|h| h == "method"));
    assert_eq!(rdr.records().count(), 6);
}

const TOY_STATIONS: &str = "station,x,y\nA,0,0\nB,10,0\nC,0,10\n";
const TOY_MAXIMA: &str = "year,A,B,C\n1990,31.5,28,40.25\n1991,22,35.5,27\n";

#[test]
fn ingest_toy_round_trip() {
    let tmp = TempDir::new().unwrap();
    let s = write(tmp.path(), "stations.csv", TOY_STATIONS);
    let m = write(tmp.path(), "maxima.csv", TOY_MAXIMA);
    let o = bin()
        .arg("ingest")
        .arg("--stations")
        .arg(&s)
        .arg("--maxima")
        .arg(&m)
        .arg("--out")
        .arg(tmp.path().join("copy"))
        .output()
        .unwrap();
    assert_ok(&o);
    let shape: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(shape, serde_json::json!({"n_years": 2, "n_stations": 3}));
    assert_eq!(fs::read_to_string(tmp.path().join("copy/stations.csv")).unwrap(), TOY_STATIONS);
    assert_eq!(fs::read_to_string(tmp.path().join("copy/maxima.csv")).unwrap(), TOY_MAXIMA);
}

#[test]
fn ingest_unknown_station_is_named() {
    let tmp = TempDir::new().unwrap();
    let s = write(tmp.path(), "stations.csv", TOY_STATIONS);
    let m = write(tmp.path(), "maxima.csv", "year,A,B,Z\n1990,1,2,3\n");
    let o = bin()
        .arg("ingest")
        .arg("--stations")
        .arg(&s)
        .arg("--maxima")
        .arg(&m)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let r = error_report(&o);
    assert!(r["error"]["message"].as_str().unwrap().contains("\"Z\""), "{r}");
}

#[test]
fn ingest_full_network_shape() {
    let tmp = TempDir::new().unwrap();
    let (q, n) = (79, 49);
    let mut st = String::from("station,x,y\n");
    for k in 0..q {
        st += &format!("S{k:02},{},{}\n", (k % 9) as f64 * 12.5, (k / 9) as f64 * 11.0);
    }
    let mut mx = String::from("year");
    for k in 0..q {
        mx += &format!(",S{k:02}");
    }
    mx.push('\n');
    for y in 0..n {
        mx += &(1960 + y).to_string();
        for k in 0..q {
            mx += &format!(",{}", 20.0 + ((y * 31 + k * 7) % 53) as f64 * 0.5);
        }
        mx.push('\n');
    }
    let s = write(tmp.path(), "stations.csv", &st);
    let m = write(tmp.path(), "maxima.csv", &mx);
    let o = bin()
        .arg("ingest")
        .arg("--stations")
        .arg(&s)
        .arg("--maxima")
        .arg(&m)
        .output()
        .unwrap();
    assert_ok(&o);
    let shape: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(shape, serde_json::json!({"n_years": 49, "n_stations": 79}));

    let cfg = write(
        tmp.path(),
        "fit.json",
        r#"{"model": "smith", "method": "abc-cs", "seed": 1,
            "params": {"stations": "stations.csv", "maxima": "maxima.csv"}}"#,
    );
    let parsed = abcscore_cli::parse_config(&cfg).unwrap();
    assert_eq!(parsed.model, abcscore_cli::config::ModelKind::Smith);
}
