//! Adam training of circuit parameters and the gate-count runtime model.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ansatz::{init_params, AnsatzSpec, Architecture};
use crate::error::{contract, Error, Result};
use crate::estimator::{parameter_shift_gradient, sample_energy, ExactEvaluator, GradientEstimate, Mode};
use crate::model::{heisenberg_j1j2, Hamiltonian, LatticeSpec};
use crate::oracle::GroundSolution;
use crate::rng::RngStream;

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(state: &AdamState, grad: &GradientEstimate, params: &[f64]) -> Result<(Vec<f64>, AdamState)> {
    let g = &grad.values;
    if g.len() != params.len() || state.m.len() != params.len() {
        return Err(contract(format!(
            "Adam lengths disagree: {} params, {} gradient, {} moments",
            params.len(),
            g.len(),
            state.m.len()
        )));
    }
    if let Some(i) = g.iter().position(|x| !x.is_finite()) {
        return Err(Error::Training {
            step: state.t as usize + 1,
            reason: format!("gradient component {i} is {}", g[i]),
        });
    }
    let mut next = state.clone();
    next.t += 1;
    let t = next.t as i32;
    let (c1, c2) = (1.0 - state.beta1.powi(t), 1.0 - state.beta2.powi(t));
    let mut out = params.to_vec();
    for i in 0..params.len() {
        next.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
        next.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
        let mhat = next.m[i] / c1;
        let vhat = next.v[i] / c2;
        out[i] -= state.lr * mhat / (vhat.sqrt() + state.eps);
    }
    Ok((out, next))
}

/// Exact-mode gradient algorithm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMethod {
    /// Parameter-shift rule (2M energy evaluations).
    #[default]
    Shift,
    /// Reverse-mode differentiation of the unrolled circuit.
    Adjoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lattice: LatticeSpec,
    pub ansatz: AnsatzSpec,
    pub mode: Mode,
    pub gradient: GradientMethod,
    pub steps: usize,
    pub seed: u64,
    pub lr: f64,
    pub record_fidelity: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(contract("steps must be at least 1"));
        }
        if let Mode::Sampled { shots_per_basis: 0 } = self.mode {
            return Err(contract("batch must be at least 1 in sampled mode"));
        }
        if self.gradient == GradientMethod::Adjoint && self.mode != Mode::Exact {
            return Err(contract("adjoint gradients need exact mode"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(contract("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: usize,
    pub energy: f64,
    pub energy_per_site: f64,
    pub stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fidelity: Option<f64>,
    pub grad_norm: f64,
}

/// Parameters plus optimizer state, enough to resume bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format_version: u32,
    /// Steps completed.
    pub step: usize,
    pub params: Vec<f64>,
    pub adam: AdamState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<TrainRecord>,
    pub final_params: Vec<f64>,
    pub final_adam: AdamState,
    /// Wall-clock seconds per step; kept apart from the records so traces
    /// stay reproducible byte for byte.
    pub step_seconds: Vec<f64>,
}

impl TrainTrace {
    pub fn best_energy(&self) -> f64 {
        self.records.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min)
    }

    pub fn last(&self) -> &TrainRecord {
        self.records.last().expect("a trace has at least one record")
    }
}

/// Everything `train_loop` needs that is derived from the config.
pub struct Problem {
    pub arch: Architecture,
    pub hamiltonian: Hamiltonian,
}

impl Problem {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        Ok(Self {
            arch: cfg.ansatz.build(&cfg.lattice)?,
            hamiltonian: heisenberg_j1j2(&cfg.lattice),
        })
    }
}

fn step_stream(seed: u64, step: usize) -> RngStream {
    RngStream::from_seed(seed).fork(2).fork(step as u64)
}

/// Initial parameters for a config's seed.
pub fn initial_params(cfg: &TrainConfig, arch: &Architecture) -> Result<Vec<f64>> {
    init_params(arch.param_count, RngStream::from_seed(cfg.seed).fork(1))
}

/// Runs `cfg.steps` steps from fresh parameters. `observe` sees each record
/// as soon as it is produced together with the post-update snapshot.
pub fn train_loop(
    cfg: &TrainConfig,
    ground: Option<&GroundSolution>,
    observe: &mut dyn FnMut(&TrainRecord, &Snapshot) -> Result<()>,
) -> Result<TrainTrace> {
    cfg.validate()?;
    let problem = Problem::new(cfg)?;
    let params = initial_params(cfg, &problem.arch)?;
    let start = Snapshot {
        format_version: TRACE_FORMAT_VERSION,
        step: 0,
        adam: AdamState::new(params.len(), cfg.lr),
        params,
    };
    train_from(cfg, &problem, start, ground, observe)
}

/// Continues training from `start` up to `cfg.steps` total steps.
pub fn train_from(
    cfg: &TrainConfig,
    problem: &Problem,
    start: Snapshot,
    ground: Option<&GroundSolution>,
    observe: &mut dyn FnMut(&TrainRecord, &Snapshot) -> Result<()>,
) -> Result<TrainTrace> {
    cfg.validate()?;
    let arch = &problem.arch;
    let h = &problem.hamiltonian;
    arch.check_params(&start.params)?;
    let n = arch.num_sites as f64;
    let exact = match cfg.mode {
        Mode::Exact => Some(ExactEvaluator::new(arch, h)?),
        Mode::Sampled { .. } => None,
    };
    let fidelity_eval = match (&exact, cfg.record_fidelity, ground) {
        (_, true, Some(_)) => Some(ExactEvaluator::new(arch, h)?).filter(|e| e.is_wide()),
        _ => None,
    };
    let mut snap = start;
    let mut records = Vec::new();
    let mut step_seconds = Vec::new();
    for step in snap.step + 1..=cfg.steps {
        let clock = Instant::now();
        let stream = step_stream(cfg.seed, step);
        let (energy, stderr, grad) = match (&exact, cfg.gradient) {
            (Some(ev), GradientMethod::Adjoint) => {
                let (e, g) = ev.adjoint(&snap.params)?;
                (e, 0.0, g)
            }
            (Some(ev), GradientMethod::Shift) => (ev.energy(&snap.params)?, 0.0, ev.shift_gradient(&snap.params)?),
            (None, _) => {
                let Mode::Sampled { shots_per_basis } = cfg.mode else {
                    unreachable!("sampled branch")
                };
                let e = sample_energy(arch, &snap.params, h, shots_per_basis, stream.fork(u64::MAX))?;
                let g = parameter_shift_gradient(arch, &snap.params, h, cfg.mode, stream)?;
                (e.mean, e.stderr, g)
            }
        };
        if !energy.is_finite() {
            return Err(Error::Training {
                step,
                reason: format!("energy is {energy}"),
            });
        }
        let fidelity = match (&fidelity_eval, ground) {
            (Some(ev), Some(gs)) => match ev.site_state(&snap.params) {
                Some(state) => Some(gs.fidelity(&state?)?),
                None => None,
            },
            _ => None,
        };
        let grad_norm = grad.values.iter().map(|g| g * g).sum::<f64>().sqrt();
        let (params, adam) = adam_step(&snap.adam, &grad, &snap.params)?;
        snap = Snapshot {
            format_version: TRACE_FORMAT_VERSION,
            step,
            params,
            adam,
        };
        let record = TrainRecord {
            step,
            energy,
            energy_per_site: energy / n,
            stderr,
            fidelity,
            grad_norm,
        };
        observe(&record, &snap)?;
        records.push(record);
        step_seconds.push(clock.elapsed().as_secs_f64());
    }
    Ok(TrainTrace {
        records,
        final_params: snap.params,
        final_adam: snap.adam,
        step_seconds,
    })
}

/// Total hardware time of a sampled training run: every step evaluates
/// `2M` shifted circuits, each sampled `batch` times in `bases` bases, and
/// each circuit execution costs about `M` gate times.
pub fn runtime_estimate(steps: usize, m: usize, batch: usize, bases: usize, t_gate: f64) -> Result<f64> {
    if steps == 0 || m == 0 || batch == 0 || bases == 0 || !(t_gate > 0.0) {
        return Err(contract("runtime estimate needs positive inputs"));
    }
    Ok(steps as f64 * m as f64 * batch as f64 * 2.0 * bases as f64 * m as f64 * t_gate)
}
