use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SU2_2X2: &str = r#"
[lattice]
lx = 2
ly = 2
j2 = 0.5

[ansatz]
family = "qmps"
block = "su2"
virtual_qubits = 2
depth = 2

[training]
mode = "exact"
steps = 4
seed = 7
"#;

fn qmps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmps"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

#[test]
fn one_step_run_writes_every_artifact() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "run.toml", &SU2_2X2.replace("steps = 4", "steps = 1"));
    let out = tmp.path().join("out");
    let o = qmps(&[
        "train",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--dump-circuit",
        "--dump-hamiltonian",
        "--timing",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 1);
    let rec: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(rec["format_version"], 1);
    assert_eq!(rec["step"], 1);
    let f = rec["fidelity"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f));

    for name in ["params.json", "metadata.json", "circuit.json", "hamiltonian.json"] {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(name)).unwrap()).unwrap();
        assert_eq!(v["format_version"], 1, "{name}");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);

    let summary = csv_rows(&fs::read_to_string(out.join("summary.csv")).unwrap());
    assert_eq!(summary.len(), 2);
    assert_eq!(summary[0][0], "format_version");
    assert_eq!(summary[1][0], "1");
    let timing = csv_rows(&fs::read_to_string(out.join("timing.csv")).unwrap());
    assert_eq!(timing.len(), 2);
}

#[test]
fn exact_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "run.toml", SU2_2X2);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(qmps(&["train", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(qmps(&["--workers", "1", "train", "--config", s(&cfg), "--out", s(&b)]).status.success());
    for name in ["trace.jsonl", "summary.csv", "params.json", "metadata.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn resume_reproduces_uninterrupted_run() {
    let tmp = TempDir::new().unwrap();
    let full = write(tmp.path(), "full.toml", SU2_2X2);
    let half = write(tmp.path(), "half.toml", &SU2_2X2.replace("steps = 4", "steps = 2"));
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(qmps(&["train", "--config", s(&full), "--out", s(&a)]).status.success());
    assert!(qmps(&["train", "--config", s(&half), "--out", s(&b)]).status.success());
    let snap = b.join("params.json");
    let o = qmps(&["train", "--config", s(&full), "--out", s(&c), "--params", s(&snap)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(a.join("params.json")).unwrap(), fs::read(c.join("params.json")).unwrap());
    let full_trace = fs::read_to_string(a.join("trace.jsonl")).unwrap();
    let tail: Vec<&str> = full_trace.lines().skip(2).collect();
    let resumed = fs::read_to_string(c.join("trace.jsonl")).unwrap();
    assert_eq!(resumed.lines().collect::<Vec<_>>(), tail);
}

#[test]
fn sampled_smoke_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "run.toml",
        &SU2_2X2
            .replace("steps = 4", "steps = 2")
            .replace("mode = \"exact\"", "mode = \"sampled\"\nbatch = 64"),
    );
    let out = tmp.path().join("out");
    let o = qmps(&["train", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    let rec: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert!(rec["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn schema_errors_exit_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("unknown_key.toml", SU2_2X2.replace("j2 = 0.5", "j2 = 0.5\ncolour = 1")),
        ("bad_type.toml", SU2_2X2.replace("steps = 4", "steps = \"four\"")),
        ("no_batch.toml", SU2_2X2.replace("mode = \"exact\"", "mode = \"sampled\"")),
        ("zero_steps.toml", SU2_2X2.replace("steps = 4", "steps = 0")),
        ("odd_qpeps.toml", SU2_2X2.replace("lx = 2", "lx = 3").replace("family = \"qmps\"\nblock = \"su2\"\nvirtual_qubits = 2", "family = \"qpeps\"")),
        ("not_toml.toml", "[lattice\nlx = ".to_string()),
    ];
    for (name, text) in cases {
        let cfg = write(tmp.path(), name, &text);
        let out = tmp.path().join(format!("out-{name}"));
        let o = qmps(&["train", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists(), "{name} created output");
    }
}

#[test]
fn capacity_errors_exit_3_without_output() {
    let tmp = TempDir::new().unwrap();
    let text = "[lattice]\nlx = 30\nly = 1\n[ansatz]\nfamily = \"qmps\"\nblock = \"general\"\nvirtual_qubits = 25\ndepth = 1\n[training]\nmode = \"exact\"\nsteps = 1\n";
    let cfg = write(tmp.path(), "big.toml", text);
    let out = tmp.path().join("out");
    let o = qmps(&["train", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn correlations_of_singlet_product() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "chain.toml", &SU2_2X2.replace("lx = 2\nly = 2", "lx = 4\nly = 1"));
    let params = write(tmp.path(), "zeros.json", &format!("{:?}", vec![0.0; 12]));
    let o = qmps(&["correlations", "--config", s(&cfg), "--params", s(&params)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["format_version", "site", "r0c0", "r0c1", "r0c2", "r0c3"]);
    assert_eq!(rows.len(), 5);
    let m: Vec<Vec<f64>> = rows[1..].iter().map(|r| r[2..].iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert!((m[0][1] + 1.0).abs() < 1e-12);
    assert!((m[2][3] + 1.0).abs() < 1e-12);
    assert!(m[0][2].abs() < 1e-12 && m[1][3].abs() < 1e-12);
    for (i, row) in m.iter().enumerate() {
        assert!((row[i] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn correlations_reject_wrong_length() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "run.toml", SU2_2X2);
    let params = write(tmp.path(), "short.json", "[0.0, 1.0]");
    let out = tmp.path().join("corr.csv");
    let o = qmps(&["correlations", "--config", s(&cfg), "--params", s(&params), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn gradvar_table_and_draws_boundary() {
    let tmp = TempDir::new().unwrap();
    let study = "block = \"general\"\ndraws = 20\nseed = 1\n[sweep]\nover = \"n\"\nvalues = [4, 6]\nv = 1\n";
    let cfg = write(tmp.path(), "study.toml", study);
    let o = qmps(&["gradvar", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == rows[0].len()));
    assert_eq!(rows[1][2], "4");

    let one = write(tmp.path(), "one.toml", &study.replace("draws = 20", "draws = 1"));
    assert_eq!(qmps(&["gradvar", "--config", s(&one)]).status.code(), Some(2));
}

fn demo(args: &[&str]) -> Vec<(String, f64)> {
    let mut full = vec!["cluster-demo", "--shots", "20000"];
    full.extend_from_slice(args);
    let o = qmps(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    csv_rows(&stdout(&o))[1..]
        .iter()
        .map(|r| (r[1].clone(), r[2].parse().unwrap()))
        .collect()
}

fn get(rows: &[(String, f64)], key: &str) -> f64 {
    rows.iter().find(|(k, _)| k == key).unwrap().1
}

#[test]
fn cluster_demo_columns() {
    let rows = demo(&["--n", "5", "--theta", "0", "--gamma", "1.5707963267948966"]);
    assert!((get(&rows, "analytic") - 1.0).abs() < 1e-12);
    assert!((get(&rows, "exact") - 1.0).abs() < 1e-10);
    assert!(get(&rows, "tv_wide_vs_efficient") < 0.05);
    let rows = demo(&["--n", "5", "--theta", "0.7853981633974483"]);
    assert!(get(&rows, "analytic").abs() < 1e-12);
    assert_eq!(qmps(&["cluster-demo", "--n", "2"]).status.code(), Some(2));
}

#[test]
fn worker_count_does_not_change_samples() {
    let a = qmps(&["--workers", "1", "cluster-demo", "--shots", "5000", "--theta", "0.3"]);
    let b = qmps(&["--workers", "3", "cluster-demo", "--shots", "5000", "--theta", "0.3"]);
    assert_eq!(a.stdout, b.stdout);
}
