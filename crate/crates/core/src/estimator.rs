//! Energy and gradient estimation: shot sampling, the parameter-shift rule
//! in sampled and exact modes, and gradient-variance statistics.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{assemble_qmps, init_params, Architecture, BlockKind};
use crate::error::{contract, Error, Result};
use crate::model::{energy_from_samples, heisenberg_j1j2, BasisSamples, Hamiltonian, LatticeSpec};
use crate::oracle::{channel_energy, WideCircuit, WIDE_CAP};
use crate::rng::RngStream;
use crate::simcore::density::MAX_DENSITY_QUBITS;
use crate::simcore::{sample_schedule, Basis, GateKind, MeasureFrame, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Total shots over all bases; 0 in exact mode.
    pub shots: usize,
}

impl EnergyEstimate {
    pub fn exact(mean: f64) -> Self {
        Self {
            mean,
            stderr: 0.0,
            shots: 0,
        }
    }
}

/// How energies are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled { shots_per_basis: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mode: Mode,
}

impl GradientEstimate {
    pub fn exact(values: Vec<f64>) -> Self {
        let stderr = vec![0.0; values.len()];
        Self {
            values,
            stderr,
            mode: Mode::Exact,
        }
    }
}

fn basis_label(b: Basis) -> u64 {
    match b {
        Basis::X => 1,
        Basis::Y => 2,
        Basis::Z => 3,
    }
}

/// Runs the reuse circuit `shots_per_basis` times for every basis that has
/// Hamiltonian terms and combines the parities.
pub fn sample_energy(
    arch: &Architecture,
    params: &[f64],
    h: &Hamiltonian,
    shots_per_basis: usize,
    stream: RngStream,
) -> Result<EnergyEstimate> {
    if shots_per_basis == 0 {
        return Err(contract("shots per basis must be at least 1"));
    }
    arch.check_params(params)?;
    if h.num_sites != arch.num_sites {
        return Err(contract("Hamiltonian and architecture site counts differ"));
    }
    let mut samples = BasisSamples::new();
    for (&basis, idx) in &h.basis_groups {
        if idx.is_empty() {
            continue;
        }
        let frames = vec![MeasureFrame::Pauli(basis); arch.num_sites];
        let shots = sample_schedule(
            arch,
            params,
            &frames,
            shots_per_basis,
            stream.fork(basis_label(basis)),
        )?;
        samples.insert(basis, shots);
    }
    if samples.is_empty() {
        return Ok(EnergyEstimate::exact(0.0));
    }
    energy_from_samples(h, &samples)
}

/// Exact energies and gradients for one architecture and Hamiltonian, using
/// the unrolled circuit when it fits and channel contraction otherwise.
pub struct ExactEvaluator<'a> {
    arch: &'a Architecture,
    h: &'a Hamiltonian,
    wide: Option<WideCircuit>,
}

impl<'a> ExactEvaluator<'a> {
    pub fn new(arch: &'a Architecture, h: &'a Hamiltonian) -> Result<Self> {
        if h.num_sites != arch.num_sites {
            return Err(contract("Hamiltonian and architecture site counts differ"));
        }
        let wide = WideCircuit::from_architecture(arch)?;
        if wide.num_wires > WIDE_CAP && arch.width > MAX_DENSITY_QUBITS {
            return Err(Error::Capacity {
                what: "channel register",
                requested: arch.width,
                cap: MAX_DENSITY_QUBITS,
            });
        }
        Ok(Self {
            arch,
            h,
            wide: (wide.num_wires <= WIDE_CAP).then_some(wide),
        })
    }

    pub fn is_wide(&self) -> bool {
        self.wide.is_some()
    }

    pub fn energy(&self, params: &[f64]) -> Result<f64> {
        self.arch.check_params(params)?;
        match &self.wide {
            Some(w) => w.energy(params, self.h),
            None => channel_energy(self.arch, params, self.h),
        }
    }

    /// Site-basis output state, when the wide circuit fits.
    pub fn site_state(&self, params: &[f64]) -> Option<Result<StateVector>> {
        self.wide.as_ref().map(|w| w.site_state(params))
    }

    /// `½[E(θ + π/2 e_i) − E(θ − π/2 e_i)]`.
    pub fn shift_component(&self, params: &[f64], i: usize) -> Result<f64> {
        let mut p = params.to_vec();
        p[i] += FRAC_PI_2;
        let up = self.energy(&p)?;
        p[i] = params[i] - FRAC_PI_2;
        let down = self.energy(&p)?;
        Ok(0.5 * (up - down))
    }

    pub fn shift_gradient(&self, params: &[f64]) -> Result<GradientEstimate> {
        self.arch.check_params(params)?;
        let values = (0..params.len())
            .into_par_iter()
            .map(|i| self.shift_component(params, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(GradientEstimate::exact(values))
    }

    /// Energy and reverse-mode gradient in one pass (wide circuit only).
    pub fn adjoint(&self, params: &[f64]) -> Result<(f64, GradientEstimate)> {
        self.arch.check_params(params)?;
        let w = self.wide.as_ref().ok_or(crate::error::Error::Capacity {
            what: "wide circuit",
            requested: self.arch.num_sites,
            cap: WIDE_CAP,
        })?;
        let (e, g) = w.adjoint_gradient(params, self.h)?;
        Ok((e, GradientEstimate::exact(g)))
    }
}

/// One parameter-shift component in the given mode, with its standard error.
pub fn shift_component(
    arch: &Architecture,
    params: &[f64],
    h: &Hamiltonian,
    i: usize,
    mode: Mode,
    stream: RngStream,
) -> Result<(f64, f64)> {
    if i >= params.len() {
        return Err(contract(format!("parameter {i} out of range")));
    }
    match mode {
        Mode::Exact => Ok((ExactEvaluator::new(arch, h)?.shift_component(params, i)?, 0.0)),
        Mode::Sampled { shots_per_basis } => sampled_component(arch, params, h, i, shots_per_basis, stream),
    }
}

fn sampled_component(
    arch: &Architecture,
    params: &[f64],
    h: &Hamiltonian,
    i: usize,
    shots: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    let mut p = params.to_vec();
    p[i] += FRAC_PI_2;
    let up = sample_energy(arch, &p, h, shots, stream.fork(2 * i as u64))?;
    p[i] = params[i] - FRAC_PI_2;
    let down = sample_energy(arch, &p, h, shots, stream.fork(2 * i as u64 + 1))?;
    Ok((
        0.5 * (up.mean - down.mean),
        0.5 * (up.stderr.powi(2) + down.stderr.powi(2)).sqrt(),
    ))
}

/// Parameter-shift gradient: `2M` energy evaluations, each on an independent
/// random stream in sampled mode.
pub fn parameter_shift_gradient(
    arch: &Architecture,
    params: &[f64],
    h: &Hamiltonian,
    mode: Mode,
    stream: RngStream,
) -> Result<GradientEstimate> {
    arch.check_params(params)?;
    match mode {
        Mode::Exact => ExactEvaluator::new(arch, h)?.shift_gradient(params),
        Mode::Sampled { shots_per_basis } => {
            if shots_per_basis == 0 {
                return Err(contract("shots per basis must be at least 1"));
            }
            let parts = (0..params.len())
                .into_par_iter()
                .map(|i| sampled_component(arch, params, h, i, shots_per_basis, stream))
                .collect::<Result<Vec<_>>>()?;
            let (values, stderr) = parts.into_iter().unzip();
            Ok(GradientEstimate {
                values,
                stderr,
                mode,
            })
        }
    }
}

/// Which gradient component a variance study tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    /// First parameter of the last block that is not an RZ rotation.
    LastBlock,
    Slot { index: usize },
    /// Variance averaged over all components (adjoint gradients).
    Pooled,
}

impl Component {
    pub fn resolve(self, arch: &Architecture) -> Result<Option<usize>> {
        match self {
            Component::Pooled => Ok(None),
            Component::Slot { index } if index < arch.param_count => Ok(Some(index)),
            Component::Slot { index } => Err(contract(format!("slot {index} out of range"))),
            Component::LastBlock => {
                let block = arch
                    .blocks
                    .iter()
                    .rev()
                    .find(|b| !b.param_slots.is_empty())
                    .ok_or_else(|| contract("architecture has no parameters"))?;
                block
                    .gates
                    .iter()
                    .find(|g| g.param.is_some() && g.kind != GateKind::Rz)
                    .and_then(|g| g.param)
                    .map(Some)
                    .ok_or_else(|| contract("last block has no non-RZ parameter"))
            }
        }
    }
}

/// Sampling-noise settings for σ_s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Shots per basis per energy evaluation.
    pub batch: usize,
    /// Independent repetitions at fixed parameters.
    pub repeats: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    pub label: String,
    /// Swept value (N or V).
    pub x: usize,
    pub draws: usize,
    pub sigma_g_sq: f64,
    pub sigma_g: f64,
    pub sigma_s: Option<f64>,
    pub r_gs: Option<f64>,
    pub batch: Option<usize>,
}

fn sample_var(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// σ_g² over `draws` uniform parameter draws and, with `noise`, σ_s as the
/// spread of repeated sampled estimates of the same component at one draw.
pub fn gradient_stats(
    arch: &Architecture,
    h: &Hamiltonian,
    draws: usize,
    component: Component,
    noise: Option<NoiseSpec>,
    stream: RngStream,
) -> Result<(f64, Option<f64>)> {
    if draws < 2 {
        return Err(contract("at least two draws are needed for a variance"));
    }
    let eval = ExactEvaluator::new(arch, h)?;
    let slot = component.resolve(arch)?;
    let draw_params = |d: usize| init_params(arch.param_count, stream.fork(d as u64));
    let sigma_g_sq = match slot {
        Some(i) => {
            let values = (0..draws)
                .into_par_iter()
                .map(|d| eval.shift_component(&draw_params(d)?, i))
                .collect::<Result<Vec<_>>>()?;
            sample_var(&values)
        }
        None => {
            let grads = (0..draws)
                .into_par_iter()
                .map(|d| Ok(eval.adjoint(&draw_params(d)?)?.1.values))
                .collect::<Result<Vec<_>>>()?;
            let m = arch.param_count;
            (0..m)
                .map(|k| sample_var(&grads.iter().map(|g| g[k]).collect::<Vec<_>>()))
                .sum::<f64>()
                / m as f64
        }
    };
    let sigma_s = match noise {
        None => None,
        Some(ns) => {
            if ns.repeats < 2 || ns.batch == 0 {
                return Err(contract("noise estimate needs batch ≥ 1 and ≥ 2 repeats"));
            }
            let i = slot.unwrap_or(arch.param_count - 1);
            let params = draw_params(0)?;
            let noise_stream = stream.fork(u64::MAX);
            let values = (0..ns.repeats)
                .map(|r| {
                    sampled_component(arch, &params, h, i, ns.batch, noise_stream.fork(r as u64))
                        .map(|v| v.0)
                })
                .collect::<Result<Vec<_>>>()?;
            Some(sample_var(&values).sqrt())
        }
    };
    Ok((sigma_g_sq, sigma_s))
}

/// What a gradient-variance study sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "over", rename_all = "lowercase")]
pub enum Sweep {
    /// Chain length N at fixed V.
    N { values: Vec<usize>, v: usize },
    /// Virtual qubits V at fixed chain length N.
    V { values: Vec<usize>, n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub block: BlockKind,
    pub depth: usize,
    pub j2: f64,
    pub sweep: Sweep,
    pub draws: usize,
    pub component: Component,
    pub noise: Option<NoiseSpec>,
    pub seed: u64,
}

/// Gradient statistics for a Heisenberg chain across the configured sweep.
pub fn gradient_variance_study(cfg: &StudyConfig) -> Result<Vec<GradientStats>> {
    if cfg.draws < 2 {
        return Err(contract("at least two draws are needed for a variance"));
    }
    let points: Vec<(usize, usize, usize)> = match &cfg.sweep {
        Sweep::N { values, v } => values.iter().map(|&n| (n, n, *v)).collect(),
        Sweep::V { values, n } => values.iter().map(|&v| (v, *n, v)).collect(),
    };
    let root = RngStream::from_seed(cfg.seed);
    points
        .iter()
        .map(|&(x, n, v)| {
            let arch = assemble_qmps(n, v, cfg.block, cfg.depth)?;
            let h = heisenberg_j1j2(&LatticeSpec::chain(n, cfg.j2)?);
            let stream = root.fork(((n as u64) << 16) | v as u64);
            let (sigma_g_sq, sigma_s) =
                gradient_stats(&arch, &h, cfg.draws, cfg.component, cfg.noise, stream)?;
            Ok(stats_row(format!("N={n},V={v}"), x, cfg.draws, sigma_g_sq, sigma_s, cfg.noise))
        })
        .collect()
}

pub fn stats_row(
    label: String,
    x: usize,
    draws: usize,
    sigma_g_sq: f64,
    sigma_s: Option<f64>,
    noise: Option<NoiseSpec>,
) -> GradientStats {
    let sigma_g = sigma_g_sq.sqrt();
    GradientStats {
        label,
        x,
        draws,
        sigma_g_sq,
        sigma_g,
        sigma_s,
        r_gs: sigma_s.map(|s| sigma_g / s),
        batch: noise.map(|n| n.batch),
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (a, b, r2)
}
