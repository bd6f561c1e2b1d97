//! Subcommand bodies. Every input is validated before the first file is
//! created, so a rejected config leaves the output location untouched.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use qmps::ansatz::Architecture;
use qmps::cluster::{cluster_architecture, slocc_correlation_exact, slocc_correlation_sampled, SloccSpec};
use qmps::estimator::{linear_fit, ExactEvaluator, Mode, Sweep};
use qmps::oracle::{cached_ground_state, correlation_matrix, empirical_tv, SzSector};
use qmps::rng::RngStream;
use qmps::simcore::{sample_schedule, Basis, MeasureFrame, MAX_QUBITS};
use qmps::trainer::{train_from, AdamState, Problem, Snapshot, TrainRecord, TRACE_FORMAT_VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{load_run, load_study, schema, ModeName};

/// Version tag written into every CSV row.
pub const CSV_FORMAT_VERSION: u32 = 1;

/// Largest lattice for which training records ground-space fidelity.
const FIDELITY_MAX_SITES: usize = 20;

pub struct TrainArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: Option<ModeName>,
    pub params: Option<PathBuf>,
    pub dump_circuit: bool,
    pub dump_hamiltonian: bool,
    pub timing: bool,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    format_version: u32,
    #[serde(flatten)]
    record: &'a TrainRecord,
}

#[derive(Serialize)]
struct Metadata {
    format_version: u32,
    version: String,
    seed: u64,
    config_sha256: String,
    param_count: usize,
    num_sites: usize,
    ground_energy_per_site: Option<f64>,
    resumed_from_step: usize,
}

/// Parameters as written by `train` or a bare JSON array.
#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsFile {
    Snapshot(Snapshot),
    Bare(Vec<f64>),
}

fn read_params(path: &Path) -> anyhow::Result<ParamsFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| schema(format!("{}: {e}", path.display())))
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn version_string() -> String {
    match option_env!("QMPS_GIT_DESCRIBE") {
        Some(g) => format!("{} ({g})", env!("CARGO_PKG_VERSION")),
        None => env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn train(args: TrainArgs) -> anyhow::Result<()> {
    let loaded = load_run(&args.config)?;
    let cfg = loaded.config.train_config(args.mode, args.seed)?;
    let out = args
        .out
        .clone()
        .or_else(|| loaded.config.output.as_ref().map(|o| o.dir.clone()))
        .ok_or_else(|| schema("no output directory: pass --out or set output.dir"))?;
    let problem = Problem::new(&cfg)?;
    let arch = &problem.arch;
    let start = match &args.params {
        None => {
            let params = qmps::trainer::initial_params(&cfg, arch)?;
            Snapshot {
                format_version: TRACE_FORMAT_VERSION,
                step: 0,
                adam: AdamState::new(params.len(), cfg.lr),
                params,
            }
        }
        Some(p) => match read_params(p)? {
            ParamsFile::Snapshot(s) => s,
            ParamsFile::Bare(_) => return Err(schema("resuming needs a snapshot with optimizer state")),
        },
    };
    arch.check_params(&start.params)?;
    if start.adam.m.len() != start.params.len() || start.step >= cfg.steps {
        return Err(schema(format!(
            "snapshot at step {} cannot continue to {} steps",
            start.step, cfg.steps
        )));
    }

    // Capacity problems surface here rather than mid-run.
    let wide = match cfg.mode {
        Mode::Exact => ExactEvaluator::new(arch, &problem.hamiltonian)?.is_wide(),
        Mode::Sampled { .. } => {
            if arch.width > MAX_QUBITS {
                return Err(qmps::Error::Capacity {
                    what: "register",
                    requested: arch.width,
                    cap: MAX_QUBITS,
                }
                .into());
            }
            ExactEvaluator::new(arch, &problem.hamiltonian).is_ok_and(|e| e.is_wide())
        }
    };

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let n = arch.num_sites;
    let ground = if cfg.record_fidelity && wide && n <= FIDELITY_MAX_SITES {
        let sector = (n % 2 == 0).then_some(SzSector::ZERO);
        Some(cached_ground_state(&problem.hamiltonian, sector, &out.join("cache"))?)
    } else {
        None
    };
    if args.dump_circuit {
        fs::write(out.join("circuit.json"), arch.to_json()?)?;
    }
    if args.dump_hamiltonian {
        fs::write(out.join("hamiltonian.json"), problem.hamiltonian.to_json()?)?;
    }
    let meta = Metadata {
        format_version: TRACE_FORMAT_VERSION,
        version: version_string(),
        seed: cfg.seed,
        config_sha256: sha256_hex(&loaded.text),
        param_count: arch.param_count,
        num_sites: n,
        ground_energy_per_site: ground.as_ref().map(|g| g.energy_per_site()),
        resumed_from_step: start.step,
    };
    fs::write(out.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;

    let mut trace = BufWriter::new(File::create(out.join("trace.jsonl"))?);
    let params_path = out.join("params.json");
    let mut observe = |record: &TrainRecord, snap: &Snapshot| -> qmps::Result<()> {
        serde_json::to_writer(&mut trace, &TraceLine {
            format_version: TRACE_FORMAT_VERSION,
            record,
        })?;
        trace.write_all(b"\n")?;
        trace.flush()?;
        fs::write(&params_path, serde_json::to_vec_pretty(snap)?)?;
        Ok(())
    };
    let result = train_from(&cfg, &problem, start, ground.as_ref(), &mut observe)?;

    let last = result.last();
    let best = result.best_energy();
    let mut summary = csv::Writer::from_path(out.join("summary.csv"))?;
    summary.write_record([
        "format_version",
        "steps",
        "num_sites",
        "param_count",
        "final_energy",
        "final_energy_per_site",
        "final_stderr",
        "final_fidelity",
        "best_energy",
        "best_energy_per_site",
        "ground_energy_per_site",
    ])?;
    summary.write_record([
        CSV_FORMAT_VERSION.to_string(),
        last.step.to_string(),
        n.to_string(),
        arch.param_count.to_string(),
        last.energy.to_string(),
        last.energy_per_site.to_string(),
        last.stderr.to_string(),
        opt(last.fidelity),
        best.to_string(),
        (best / n as f64).to_string(),
        opt(ground.as_ref().map(|g| g.energy_per_site())),
    ])?;
    summary.flush()?;

    if args.timing {
        let mut t = csv::Writer::from_path(out.join("timing.csv"))?;
        t.write_record(["format_version", "step", "seconds"])?;
        for (r, s) in result.records.iter().zip(&result.step_seconds) {
            t.write_record([CSV_FORMAT_VERSION.to_string(), r.step.to_string(), s.to_string()])?;
        }
        t.flush()?;
    }
    println!(
        "step {}: E/N = {:.8}, best E/N = {:.8}{}",
        last.step,
        last.energy_per_site,
        best / n as f64,
        last.fidelity.map(|f| format!(", fidelity = {f:.6}")).unwrap_or_default()
    );
    Ok(())
}

fn parse_axis(axis: &str) -> anyhow::Result<Basis> {
    match axis.to_ascii_lowercase().as_str() {
        "x" => Ok(Basis::X),
        "y" => Ok(Basis::Y),
        "z" => Ok(Basis::Z),
        _ => Err(schema(format!("axis must be x, y or z, got {axis:?}"))),
    }
}

fn sampled_correlations(
    arch: &Architecture,
    params: &[f64],
    axis: Basis,
    shots: usize,
    stream: RngStream,
) -> anyhow::Result<Vec<Vec<f64>>> {
    let frames = vec![MeasureFrame::Pauli(axis); arch.num_sites];
    let samples = sample_schedule(arch, params, &frames, shots, stream)?;
    let n = arch.num_sites;
    let mut acc = vec![vec![0.0; n]; n];
    for bits in &samples {
        for i in 0..n {
            for j in 0..n {
                acc[i][j] += if bits[i] == bits[j] { 1.0 } else { -1.0 };
            }
        }
    }
    for row in &mut acc {
        for v in row.iter_mut() {
            *v /= shots as f64;
        }
    }
    Ok(acc)
}

fn csv_sink(out: Option<&Path>) -> anyhow::Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

pub fn correlations(
    config: &Path,
    params: &Path,
    out: Option<&Path>,
    mode: ModeName,
    axis: &str,
    seed: Option<u64>,
) -> anyhow::Result<()> {
    let loaded = load_run(config)?;
    let lattice = loaded.config.lattice()?;
    let arch = loaded.config.ansatz()?.build(&lattice)?;
    let axis = parse_axis(axis)?;
    let params = match read_params(params)? {
        ParamsFile::Snapshot(s) => s.params,
        ParamsFile::Bare(p) => p,
    };
    arch.check_params(&params)?;
    let matrix = match mode {
        ModeName::Exact => correlation_matrix(&arch, &params, axis)?,
        ModeName::Sampled => {
            let shots = loaded
                .config
                .training
                .batch
                .ok_or_else(|| schema("training.batch is required in sampled mode"))?;
            let stream = RngStream::from_seed(seed.unwrap_or(loaded.config.training.seed)).fork(3);
            sampled_correlations(&arch, &params, axis, shots, stream)?
        }
    };
    let label = |s: usize| {
        let (r, c) = lattice.coords(s);
        format!("r{r}c{c}")
    };
    let n = lattice.num_sites();
    let mut w = csv_sink(out)?;
    let mut header = vec!["format_version".to_string(), "site".to_string()];
    header.extend((0..n).map(label));
    w.write_record(&header)?;
    for (i, row) in matrix.iter().enumerate() {
        let mut rec = vec![CSV_FORMAT_VERSION.to_string(), label(i)];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn gradvar(config: &Path, out: Option<&Path>, seed: Option<u64>) -> anyhow::Result<()> {
    let (study, _) = load_study(config, seed)?;
    let rows = qmps::estimator::gradient_variance_study(&study)?;
    let mut w = csv_sink(out)?;
    w.write_record([
        "format_version",
        "label",
        "x",
        "draws",
        "sigma_g_sq",
        "sigma_g",
        "sigma_s",
        "r_gs",
        "batch",
    ])?;
    for r in &rows {
        w.write_record([
            CSV_FORMAT_VERSION.to_string(),
            r.label.clone(),
            r.x.to_string(),
            r.draws.to_string(),
            r.sigma_g_sq.to_string(),
            r.sigma_g.to_string(),
            opt(r.sigma_s),
            opt(r.r_gs),
            r.batch.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    if rows.len() >= 2 && rows.iter().all(|r| r.sigma_g_sq > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| (r.x as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.sigma_g_sq.ln()).collect();
        let (_, slope, r2) = linear_fit(&xs, &ys);
        let over = match study.sweep {
            Sweep::N { .. } => "N",
            Sweep::V { .. } => "V",
        };
        eprintln!("log-log fit over {over}: slope {slope:.4}, R^2 {r2:.4}");
    }
    Ok(())
}

/// Largest total-variation distance between the wide and qubit-efficient
/// cluster circuits over the three Pauli bases.
fn cluster_tv(n: usize, shots: usize, stream: RngStream) -> anyhow::Result<f64> {
    let wide = cluster_architecture(n, false)?;
    let efficient = cluster_architecture(n, true)?;
    let mut worst: f64 = 0.0;
    for (k, basis) in Basis::ALL.into_iter().enumerate() {
        let frames = vec![MeasureFrame::Pauli(basis); n];
        let s = stream.fork(k as u64);
        let a = sample_schedule(&wide, &[], &frames, shots, s.fork(0))?;
        let b = sample_schedule(&efficient, &[], &frames, shots, s.fork(1))?;
        worst = worst.max(empirical_tv(&a, &b)?);
    }
    Ok(worst)
}

pub fn cluster_demo(
    n: usize,
    theta: f64,
    gamma: f64,
    site: Option<usize>,
    shots: usize,
    seed: u64,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    if n < 3 {
        return Err(schema("cluster-demo needs n >= 3"));
    }
    if shots == 0 {
        return Err(schema("shots must be at least 1"));
    }
    let spec = SloccSpec {
        site: site.unwrap_or(n / 2),
        theta,
        gamma,
    };
    let root = RngStream::from_seed(seed);
    let exact = slocc_correlation_exact(n, &spec)?;
    let sampled = slocc_correlation_sampled(n, &spec, shots, root.fork(1))?;
    let tv = cluster_tv(n, shots, root.fork(2))?;
    let mut w = csv_sink(out)?;
    w.write_record(["format_version", "quantity", "value", "stderr"])?;
    let v = CSV_FORMAT_VERSION.to_string();
    let rows = [
        ("exact", exact, None),
        ("sampled", sampled.mean, Some(sampled.stderr)),
        ("analytic", spec.analytic(), None),
        ("kept_fraction", sampled.kept_fraction, None),
        ("tv_wide_vs_efficient", tv, None),
    ];
    for (name, value, err) in rows {
        w.write_record([v.clone(), name.to_string(), value.to_string(), opt(err)])?;
    }
    w.flush()?;
    Ok(())
}
