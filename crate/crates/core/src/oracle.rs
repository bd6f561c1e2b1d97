//! Ground truth for the reuse circuits: the unrolled ("wide") circuit with
//! one wire per site, exact diagonalization, fidelities, adjoint gradients
//! and exact correlation functions.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{Architecture, Event};
use crate::error::{contract, Error, Result};
use crate::estimator::GradientEstimate;
use crate::model::{Hamiltonian, PauliTerm};
use crate::rng::RngStream;
use crate::simcore::density::{DensityMatrix, MAX_DENSITY_QUBITS};
use crate::simcore::gate::C;
use crate::simcore::kernels;
use crate::simcore::pauli::PauliMask;
use crate::simcore::{Basis, GateKind, GateOp, StateVector};

/// Largest wide circuit simulated densely.
pub const WIDE_CAP: usize = 22;

/// Squared ancilla population above which the wide state is rejected.
const ANCILLA_LEAK_TOL: f64 = 1e-10;

/// The reuse circuit unrolled onto fresh wires. Wire `s < num_sites` is
/// lattice site `s`; wires `num_sites..` are ancillas that are never read.
#[derive(Clone, Debug, PartialEq)]
pub struct WideCircuit {
    pub num_sites: usize,
    pub num_wires: usize,
    pub param_count: usize,
    pub gates: Vec<GateOp>,
}

impl WideCircuit {
    /// Literal unrolling: every register segment between resets becomes the
    /// wire of the site it is finally measured into.
    pub fn unrolled(arch: &Architecture) -> Result<Self> {
        let mut segments: Vec<Vec<usize>> = vec![Vec::new(); arch.width];
        for ev in &arch.schedule {
            if let Event::Measure {
                qubit, position, ..
            } = *ev
            {
                segments[qubit].push(arch.ordering.site_at(position));
            }
        }
        let mut seg = vec![0usize; arch.width];
        let mut extra: Vec<Option<usize>> = vec![None; arch.width];
        let mut num_wires = arch.num_sites;
        let mut gates = Vec::new();
        for ev in &arch.schedule {
            match *ev {
                Event::ApplyBlock { block } => {
                    for g in &arch.blocks[block].gates {
                        let targets = g
                            .targets
                            .iter()
                            .map(|&q| match segments[q].get(seg[q]) {
                                Some(&w) => w,
                                None => *extra[q].get_or_insert_with(|| {
                                    num_wires += 1;
                                    num_wires - 1
                                }),
                            })
                            .collect();
                        gates.push(GateOp {
                            kind: g.kind,
                            targets,
                            param: g.param,
                        });
                    }
                }
                Event::Measure { qubit, .. } => seg[qubit] += 1,
            }
        }
        Ok(Self {
            num_sites: arch.num_sites,
            num_wires,
            param_count: arch.param_count,
            gates,
        })
    }

    /// Unrolled circuit with ancillas elided where possible.
    pub fn from_architecture(arch: &Architecture) -> Result<Self> {
        Ok(Self::unrolled(arch)?.elide_ancillas())
    }

    /// Rewrites `INV_CNOT(x→a) … SWAP(a, y)` with `y` untouched before the
    /// swap into `INV_CNOT(x→y)`, for every ancilla wire `a` whose gates all
    /// follow that pattern, and drops ancilla wires left without gates.
    pub fn elide_ancillas(mut self) -> Self {
        for a in self.num_sites..self.num_wires {
            let touching: Vec<usize> = (0..self.gates.len())
                .filter(|&i| self.gates[i].targets.contains(&a))
                .collect();
            if !touching.len().is_multiple_of(2) {
                continue;
            }
            let mut rewrites = Vec::new();
            let ok = touching.chunks(2).all(|pair| {
                let (open, close) = (&self.gates[pair[0]], &self.gates[pair[1]]);
                if open.kind != GateKind::InvCnot || open.targets[1] != a || close.kind != GateKind::Swap {
                    return false;
                }
                let y = if close.targets[0] == a {
                    close.targets[1]
                } else {
                    close.targets[0]
                };
                let fresh = self.gates[..pair[1]].iter().all(|g| !g.targets.contains(&y));
                rewrites.push((pair[0], pair[1], y));
                fresh
            });
            if !ok {
                continue;
            }
            let mut drop = vec![false; self.gates.len()];
            for (open, close, y) in rewrites {
                self.gates[open].targets[1] = y;
                drop[close] = true;
            }
            let mut k = 0;
            self.gates.retain(|_| {
                k += 1;
                !drop[k - 1]
            });
        }
        // compact the surviving ancilla wires
        let mut map: Vec<usize> = (0..self.num_wires).collect();
        let mut next = self.num_sites;
        for a in self.num_sites..self.num_wires {
            if self.gates.iter().any(|g| g.targets.contains(&a)) {
                map[a] = next;
                next += 1;
            }
        }
        for g in &mut self.gates {
            for t in &mut g.targets {
                *t = map[*t];
            }
        }
        self.num_wires = next;
        self
    }

    fn check_cap(&self) -> Result<()> {
        if self.num_wires > WIDE_CAP {
            return Err(Error::Capacity {
                what: "wide circuit",
                requested: self.num_wires,
                cap: WIDE_CAP,
            });
        }
        Ok(())
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count {
            return Err(contract(format!(
                "expected {} parameters, got {}",
                self.param_count,
                params.len()
            )));
        }
        Ok(())
    }

    /// Final state on all wires, ancillas included.
    pub fn state(&self, params: &[f64]) -> Result<StateVector> {
        self.check_cap()?;
        self.check_params(params)?;
        let mut psi = StateVector::new(self.num_wires)?;
        for g in &self.gates {
            psi.apply_raw(g.kind, &g.targets, g.param.map_or(0.0, |s| params[s]));
        }
        Ok(psi)
    }

    /// Final state on the site wires; ancillas must have returned to |0⟩.
    pub fn site_state(&self, params: &[f64]) -> Result<StateVector> {
        let psi = self.state(params)?;
        project_ancillas(psi, self.num_sites)
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn energy(&self, params: &[f64], h: &Hamiltonian) -> Result<f64> {
        check_sites(h, self.num_sites)?;
        let psi = self.state(params)?;
        Ok(expectation(h, psi.amplitudes()))
    }

    /// Reverse-mode gradient: `∂E/∂θ_k = Im⟨λ_k|Σ_k|φ_k⟩` with `φ_k` the
    /// state after gate `k` and `λ_k` the back-propagated `H|ψ⟩`.
    pub fn adjoint_gradient(&self, params: &[f64], h: &Hamiltonian) -> Result<(f64, Vec<f64>)> {
        check_sites(h, self.num_sites)?;
        let psi = self.state(params)?;
        let mut phi = psi.into_amplitudes();
        let mut lambda = apply_hamiltonian(h, &phi);
        let energy = inner(&phi, &lambda).re;
        let mut grad = vec![0.0; self.param_count];
        let mut scratch = vec![C::new(0.0, 0.0); phi.len()];
        for g in self.gates.iter().rev() {
            let theta = g.param.map_or(0.0, |s| params[s]);
            if let Some(s) = g.param {
                scratch.copy_from_slice(&phi);
                kernels::apply_generator(&mut scratch, g.kind, &g.targets);
                grad[s] += inner(&lambda, &scratch).im;
            }
            kernels::apply_inverse(&mut phi, g.kind, &g.targets, theta);
            kernels::apply_inverse(&mut lambda, g.kind, &g.targets, theta);
        }
        Ok((energy, grad))
    }
}

fn check_sites(h: &Hamiltonian, n: usize) -> Result<()> {
    if h.num_sites != n {
        return Err(contract(format!(
            "Hamiltonian has {} sites, circuit {n}",
            h.num_sites
        )));
    }
    Ok(())
}

fn project_ancillas(psi: StateVector, num_sites: usize) -> Result<StateVector> {
    if psi.num_qubits() == num_sites {
        return Ok(psi);
    }
    let mut amps = psi.into_amplitudes();
    let keep = 1usize << num_sites;
    let leak: f64 = amps[keep..].iter().map(|a| a.norm_sqr()).sum();
    if leak > ANCILLA_LEAK_TOL {
        return Err(Error::Numerical(format!(
            "ancilla wires still entangled, population {leak:e}"
        )));
    }
    amps.truncate(keep);
    StateVector::from_amplitudes(amps)
}

fn inner(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `H|ψ⟩` on a state whose low qubits are the Hamiltonian's sites.
pub fn apply_hamiltonian(h: &Hamiltonian, amps: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); amps.len()];
    for (c, m) in h.masks() {
        m.apply_add(amps, c, &mut out);
    }
    out
}

/// `⟨ψ|H|ψ⟩`.
pub fn expectation(h: &Hamiltonian, amps: &[C]) -> f64 {
    h.masks()
        .par_iter()
        .map(|(c, m)| c * m.expectation(amps))
        .sum()
}

/// Site-basis state of the unrolled circuit (no collapse).
pub fn wide_circuit_state(arch: &Architecture, params: &[f64]) -> Result<StateVector> {
    arch.check_params(params)?;
    WideCircuit::from_architecture(arch)?.site_state(params)
}

/// Exact expectation of one single-basis Pauli term by evolving the register
/// density matrix through the reuse schedule with the term's Pauli inserted
/// at each of its sites' measurements.
pub fn channel_expectation(arch: &Architecture, params: &[f64], term: &PauliTerm) -> Result<f64> {
    arch.check_params(params)?;
    if arch.width > MAX_DENSITY_QUBITS {
        return Err(Error::Capacity {
            what: "channel register",
            requested: arch.width,
            cap: MAX_DENSITY_QUBITS,
        });
    }
    let mut axis_at = vec![None; arch.num_sites];
    for (&s, &a) in term.sites.iter().zip(&term.axes) {
        if s >= arch.num_sites {
            return Err(contract(format!("term site {s} outside the lattice")));
        }
        axis_at[arch.ordering.position_of(s)] = Some(a);
    }
    let mut rho = DensityMatrix::new(arch.width)?;
    for ev in &arch.schedule {
        match *ev {
            Event::ApplyBlock { block } => {
                for g in &arch.blocks[block].gates {
                    rho.apply_raw(g.kind, &g.targets, g.param.map_or(0.0, |s| params[s]));
                }
            }
            Event::Measure {
                qubit, position, ..
            } => rho.trace_pauli_reset(qubit, axis_at[position]),
        }
    }
    Ok(term.coefficient * rho.trace().re)
}

/// `⟨H⟩` by channel contraction, one term at a time.
pub fn channel_energy(arch: &Architecture, params: &[f64], h: &Hamiltonian) -> Result<f64> {
    check_sites(h, arch.num_sites)?;
    let parts: Result<Vec<f64>> = h
        .terms
        .par_iter()
        .map(|t| channel_expectation(arch, params, t))
        .collect();
    Ok(parts?.iter().sum())
}

/// Exact energy, unrolled when within the wide cap and by channel
/// contraction otherwise.
pub fn exact_energy(arch: &Architecture, params: &[f64], h: &Hamiltonian) -> Result<f64> {
    arch.check_params(params)?;
    let wide = WideCircuit::from_architecture(arch)?;
    if wide.num_wires <= WIDE_CAP {
        wide.energy(params, h)
    } else {
        channel_energy(arch, params, h)
    }
}

pub fn adjoint_gradient(arch: &Architecture, params: &[f64], h: &Hamiltonian) -> Result<GradientEstimate> {
    arch.check_params(params)?;
    let (_, values) = WideCircuit::from_architecture(arch)?.adjoint_gradient(params, h)?;
    Ok(GradientEstimate::exact(values))
}

/// `⟨σ_i^axis σ_j^axis⟩` for all site pairs, indexed by site.
pub fn correlation_matrix(arch: &Architecture, params: &[f64], axis: Basis) -> Result<Vec<Vec<f64>>> {
    arch.check_params(params)?;
    let n = arch.num_sites;
    let wide = WideCircuit::from_architecture(arch)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = if wide.num_wires <= WIDE_CAP {
        let psi = wide.site_state(params)?;
        pairs
            .par_iter()
            .map(|&(i, j)| PauliMask::new([(i, axis), (j, axis)]).expectation(psi.amplitudes()))
            .collect()
    } else {
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let term = PauliTerm::new(1.0, vec![i, j], vec![axis, axis])?;
                channel_expectation(arch, params, &term)
            })
            .collect::<Result<_>>()?
    };
    let mut out = vec![vec![1.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        out[i][j] = v;
        out[j][i] = v;
    }
    Ok(out)
}

/// `|⟨a|b⟩|²` for normalized states.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.num_qubits() != b.num_qubits() {
        return Err(contract(format!(
            "fidelity between {} and {} qubits",
            a.num_qubits(),
            b.num_qubits()
        )));
    }
    Ok(a.inner(b).norm_sqr().min(1.0))
}

fn histogram(samples: &[Vec<u8>]) -> BTreeMap<&[u8], f64> {
    let mut h = BTreeMap::new();
    let w = 1.0 / samples.len() as f64;
    for s in samples {
        *h.entry(s.as_slice()).or_insert(0.0) += w;
    }
    h
}

/// Total-variation distance between two empirical bitstring distributions.
pub fn empirical_tv(a: &[Vec<u8>], b: &[Vec<u8>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(contract("empirical distributions need at least one sample"));
    }
    let (ha, hb) = (histogram(a), histogram(b));
    let mut tv = 0.0;
    for (k, p) in &ha {
        tv += (p - hb.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, q) in &hb {
        if !ha.contains_key(k) {
            tv += q;
        }
    }
    Ok(0.5 * tv)
}

/// Total-variation distance between site-indexed samples and the Born
/// distribution of `psi` with every qubit read in `basis`.
pub fn born_tv(samples: &[Vec<u8>], psi: &StateVector, basis: Basis) -> Result<f64> {
    if samples.is_empty() {
        return Err(contract("empirical distribution needs at least one sample"));
    }
    let n = psi.num_qubits();
    let mut psi = psi.clone();
    if let Some(rot) = basis.rotation() {
        for q in 0..n {
            psi.apply_matrix1(q, &rot)?;
        }
    }
    let mut emp = vec![0.0; 1 << n];
    for s in samples {
        if s.len() != n {
            return Err(contract("sample length differs from the state's qubit count"));
        }
        let idx = s.iter().enumerate().fold(0usize, |acc, (q, &b)| acc | ((b as usize) << q));
        emp[idx] += 1.0 / samples.len() as f64;
    }
    Ok(0.5
        * emp
            .iter()
            .zip(psi.amplitudes())
            .map(|(p, a)| (p - a.norm_sqr()).abs())
            .sum::<f64>())
}

/// Total-Sz sector, stored as twice the eigenvalue (up spin = bit 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SzSector {
    pub twice_sz: i32,
}

impl SzSector {
    pub const ZERO: SzSector = SzSector { twice_sz: 0 };

    fn down_spins(self, n: usize) -> Result<u32> {
        let twice_down = n as i64 - self.twice_sz as i64;
        if twice_down < 0 || twice_down > 2 * n as i64 || twice_down % 2 != 0 {
            return Err(contract(format!("no sector 2Sz = {} on {n} sites", self.twice_sz)));
        }
        Ok((twice_down / 2) as u32)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundSolution {
    pub num_sites: usize,
    pub energy: f64,
    /// Orthonormal basis of the ground space, full `2^N` amplitudes each.
    pub states: Vec<Vec<C>>,
    pub max_residual: f64,
}

impl GroundSolution {
    pub fn energy_per_site(&self) -> f64 {
        self.energy / self.num_sites as f64
    }

    /// Squared norm of the projection of `psi` onto the ground space.
    pub fn fidelity(&self, psi: &StateVector) -> Result<f64> {
        if psi.num_qubits() != self.num_sites {
            return Err(contract(format!(
                "state has {} qubits, ground space {}",
                psi.num_qubits(),
                self.num_sites
            )));
        }
        let a = psi.amplitudes();
        Ok(self
            .states
            .iter()
            .map(|g| inner(g, a).norm_sqr())
            .sum::<f64>()
            .min(1.0))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Relative window for counting a level as degenerate with the minimum.
    pub degeneracy_tol: f64,
    pub max_states: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 400,
            tol: 1e-10,
            degeneracy_tol: 1e-8,
            max_states: 8,
            seed: 0x5eed,
        }
    }
}

/// Computational basis states of a sector and their inverse index.
struct SectorBasis {
    dim_full: usize,
    states: Vec<usize>,
    index: Vec<u32>,
}

impl SectorBasis {
    fn new(n: usize, sector: Option<SzSector>) -> Result<Self> {
        let dim_full = 1usize << n;
        let down = sector.map(|s| s.down_spins(n)).transpose()?;
        let states: Vec<usize> = (0..dim_full)
            .filter(|i| down.is_none_or(|d| i.count_ones() == d))
            .collect();
        let mut index = vec![u32::MAX; dim_full];
        for (k, &i) in states.iter().enumerate() {
            index[i] = k as u32;
        }
        Ok(Self {
            dim_full,
            states,
            index,
        })
    }

    fn dim(&self) -> usize {
        self.states.len()
    }

    /// `P H P v` in sector coordinates.
    fn matvec(&self, terms: &[(C, PauliMask)], v: &[C], out: &mut [C]) {
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            let i = self.states[k];
            let mut acc = C::new(0.0, 0.0);
            for (c, m) in terms {
                let j = i ^ m.x;
                let pos = self.index[j];
                if pos == u32::MAX {
                    continue;
                }
                let sign = if (j & m.z).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
                acc += c * v[pos as usize] * sign;
            }
            *o = acc;
        });
    }

    fn expand(&self, v: &[C]) -> Vec<C> {
        let mut full = vec![C::new(0.0, 0.0); self.dim_full];
        for (k, &i) in self.states.iter().enumerate() {
            full[i] = v[k];
        }
        full
    }
}

/// Coefficients with the `i^ny` phase folded in.
fn phased_terms(h: &Hamiltonian) -> Vec<(C, PauliMask)> {
    h.masks()
        .into_iter()
        .map(|(c, m)| {
            let phase = match m.ny % 4 {
                0 => C::new(1.0, 0.0),
                1 => C::new(0.0, 1.0),
                2 => C::new(-1.0, 0.0),
                _ => C::new(0.0, -1.0),
            };
            (phase * c, m)
        })
        .collect()
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn project_out(w: &mut [C], basis: &[Vec<C>]) {
    for q in basis {
        let ov = inner(q, w);
        w.iter_mut().zip(q).for_each(|(x, y)| *x -= ov * y);
    }
}

/// Lowest eigenpair of `P H P` on the complement of `deflate`.
fn lanczos_lowest(
    sb: &SectorBasis,
    terms: &[(C, PauliMask)],
    deflate: &[Vec<C>],
    opts: &LanczosOptions,
    seed: u64,
) -> Result<(f64, Vec<C>)> {
    let dim = sb.dim();
    let mut rng = RngStream::new(opts.seed, seed).rng();
    let mut q: Vec<C> = (0..dim)
        .map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    project_out(&mut q, deflate);
    let n0 = norm(&q);
    q.iter_mut().for_each(|a| *a /= n0);
    let mut basis: Vec<Vec<C>> = vec![q];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![C::new(0.0, 0.0); dim];
    let max_iter = opts.max_iter.min(dim.saturating_sub(deflate.len()).max(1));
    let mut best = (f64::INFINITY, Vec::new());
    for m in 0..max_iter {
        sb.matvec(terms, &basis[m], &mut w);
        let alpha = inner(&basis[m], &w).re;
        alphas.push(alpha);
        // two passes of full reorthogonalization
        for _ in 0..2 {
            project_out(&mut w, &basis);
            project_out(&mut w, deflate);
        }
        let beta = norm(&w);
        let last = m + 1 == max_iter || beta < 1e-12;
        if m % 8 == 7 || last {
            let (theta, s) = tridiagonal_lowest(&alphas, &betas);
            let resid = beta * s[m].abs();
            best = (theta, s);
            if resid < opts.tol || last {
                break;
            }
        }
        betas.push(beta);
        basis.push(w.iter().map(|a| a / beta).collect());
    }
    let (theta, s) = best;
    let mut v = vec![C::new(0.0, 0.0); dim];
    for (coef, qk) in s.iter().zip(&basis) {
        v.iter_mut().zip(qk).for_each(|(x, y)| *x += y * *coef);
    }
    let nv = norm(&v);
    v.iter_mut().for_each(|a| *a /= nv);
    Ok((theta, v))
}

fn tridiagonal_lowest(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let k = (0..m)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap_or(0);
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}

fn residual(sb: &SectorBasis, terms: &[(C, PauliMask)], e: f64, v: &[C]) -> f64 {
    let mut hv = vec![C::new(0.0, 0.0); v.len()];
    sb.matvec(terms, v, &mut hv);
    hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

/// Ground space by Lanczos with full reorthogonalization; degenerate partners
/// are found by restarting orthogonally to the vectors already accepted.
pub fn lanczos_ground_state(
    h: &Hamiltonian,
    sector: Option<SzSector>,
    opts: &LanczosOptions,
) -> Result<GroundSolution> {
    let n = h.num_sites;
    if n > 24 {
        return Err(Error::Capacity {
            what: "exact diagonalization",
            requested: n,
            cap: 24,
        });
    }
    let sb = SectorBasis::new(n, sector)?;
    let terms = phased_terms(h);
    let mut found: Vec<Vec<C>> = Vec::new();
    let mut e0 = f64::NAN;
    let mut max_residual: f64 = 0.0;
    while found.len() < opts.max_states.min(sb.dim()) {
        let (e, v) = lanczos_lowest(&sb, &terms, &found, opts, found.len() as u64)?;
        let r = residual(&sb, &terms, e, &v);
        if found.is_empty() {
            if r > 1e-8 {
                return Err(Error::Numerical(format!(
                    "Lanczos did not converge: residual {r:e} after {} iterations",
                    opts.max_iter
                )));
            }
            e0 = e;
        } else if e - e0 > opts.degeneracy_tol * e0.abs().max(1.0) || r > 1e-8 {
            break;
        }
        max_residual = max_residual.max(r);
        found.push(v);
    }
    Ok(GroundSolution {
        num_sites: n,
        energy: e0,
        states: found.iter().map(|v| sb.expand(v)).collect(),
        max_residual,
    })
}

/// Ground space by dense diagonalization (small systems only).
pub fn dense_ground_state(h: &Hamiltonian, sector: Option<SzSector>) -> Result<GroundSolution> {
    let n = h.num_sites;
    if n > 12 {
        return Err(Error::Capacity {
            what: "dense diagonalization",
            requested: n,
            cap: 12,
        });
    }
    let sb = SectorBasis::new(n, sector)?;
    let terms = phased_terms(h);
    let dim = sb.dim();
    let mut mat = DMatrix::<C>::zeros(dim, dim);
    let mut col = vec![C::new(0.0, 0.0); dim];
    let mut unit = vec![C::new(0.0, 0.0); dim];
    for j in 0..dim {
        unit[j] = C::new(1.0, 0.0);
        sb.matvec(&terms, &unit, &mut col);
        unit[j] = C::new(0.0, 0.0);
        for i in 0..dim {
            mat[(i, j)] = col[i];
        }
    }
    let eig = SymmetricEigen::new(mat);
    let e0 = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = LanczosOptions::default().degeneracy_tol * e0.abs().max(1.0);
    let mut states = Vec::new();
    let mut max_residual: f64 = 0.0;
    for k in 0..dim {
        if eig.eigenvalues[k] - e0 <= tol {
            let v: Vec<C> = eig.eigenvectors.column(k).iter().copied().collect();
            max_residual = max_residual.max(residual(&sb, &terms, eig.eigenvalues[k], &v));
            states.push(sb.expand(&v));
        }
    }
    Ok(GroundSolution {
        num_sites: n,
        energy: e0,
        states,
        max_residual,
    })
}

/// Dense path up to 8 sites, Lanczos beyond.
pub fn exact_ground_state(h: &Hamiltonian, sector: Option<SzSector>) -> Result<GroundSolution> {
    if h.num_sites <= 8 {
        dense_ground_state(h, sector)
    } else {
        lanczos_ground_state(h, sector, &LanczosOptions::default())
    }
}

/// [`exact_ground_state`] memoized in `dir` under a hash of the operator.
pub fn cached_ground_state(
    h: &Hamiltonian,
    sector: Option<SzSector>,
    dir: &Path,
) -> Result<GroundSolution> {
    let mut hasher = Sha256::new();
    hasher.update(h.to_json()?.as_bytes());
    hasher.update(serde_json::to_vec(&sector)?);
    let key: String = hasher.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect();
    let path = dir.join(format!("ground-{key}.json"));
    if let Ok(sol) = GroundSolution::load(&path) {
        if sol.num_sites == h.num_sites {
            return Ok(sol);
        }
    }
    let sol = exact_ground_state(h, sector)?;
    std::fs::create_dir_all(dir)?;
    sol.save(&path)?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{assemble_qmps, init_params, BlockKind};
    use crate::model::{heisenberg_j1j2, LatticeSpec};

    #[test]
    fn two_site_singlet_energy() {
        let h = heisenberg_j1j2(&LatticeSpec::chain(2, 0.0).unwrap());
        let sol = exact_ground_state(&h, None).unwrap();
        assert!((sol.energy + 0.75).abs() < 1e-12);
        assert_eq!(sol.states.len(), 1);
    }

    #[test]
    fn lanczos_matches_dense() {
        for (lx, ly, j2) in [(2, 3, 0.5), (2, 4, 0.0), (1, 8, 0.3)] {
            let h = heisenberg_j1j2(&LatticeSpec::new(lx, ly, j2).unwrap());
            let dense = dense_ground_state(&h, None).unwrap();
            let lz = lanczos_ground_state(&h, None, &LanczosOptions::default()).unwrap();
            assert!((dense.energy - lz.energy).abs() < 1e-10, "{lx}x{ly}");
            assert_eq!(dense.states.len(), lz.states.len());
            assert!(lz.max_residual < 1e-8);
        }
    }

    #[test]
    fn degenerate_triplet_found() {
        // a single ferromagnetic bond has a threefold degenerate ground space
        let mut h = heisenberg_j1j2(&LatticeSpec::chain(2, 0.0).unwrap());
        h.terms.iter_mut().for_each(|t| t.coefficient = -t.coefficient);
        let dense = dense_ground_state(&h, None).unwrap();
        assert_eq!(dense.states.len(), 3);
        let lz = lanczos_ground_state(&h, None, &LanczosOptions::default()).unwrap();
        assert_eq!(lz.states.len(), 3);
        // orthonormal
        for a in 0..3 {
            for b in 0..3 {
                let ov = inner(&lz.states[a], &lz.states[b]).norm();
                assert!((ov - (a == b) as u8 as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn elision_matches_literal() {
        let h = heisenberg_j1j2(&LatticeSpec::chain(8, 0.2).unwrap());
        for v in [2, 3] {
            let arch = assemble_qmps(8, v, BlockKind::Su2, 2).unwrap();
            let params = init_params(arch.param_count, RngStream::from_seed(v as u64)).unwrap();
            let literal = WideCircuit::unrolled(&arch).unwrap();
            let elided = literal.clone().elide_ancillas();
            assert_eq!(literal.num_wires, 9);
            assert_eq!(elided.num_wires, 8);
            let a = literal.site_state(&params).unwrap();
            let b = elided.site_state(&params).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert!((x - y).norm() < 1e-12);
            }
            let ea = literal.energy(&params, &h).unwrap();
            let eb = elided.energy(&params, &h).unwrap();
            assert!((ea - eb).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_matches_wide_energy() {
        let h = heisenberg_j1j2(&LatticeSpec::new(2, 3, 0.5).unwrap());
        for kind in [BlockKind::General, BlockKind::U1, BlockKind::Su2] {
            let arch = assemble_qmps(6, 2, kind, 2).unwrap();
            let params = init_params(arch.param_count, RngStream::from_seed(11)).unwrap();
            let wide = WideCircuit::from_architecture(&arch).unwrap().energy(&params, &h).unwrap();
            let chan = channel_energy(&arch, &params, &h).unwrap();
            assert!((wide - chan).abs() < 1e-10, "{kind:?}: {wide} vs {chan}");
        }
    }

    #[test]
    fn singlet_product_correlations() {
        let arch = assemble_qmps(4, 2, BlockKind::Su2, 1).unwrap();
        let params = vec![0.0; arch.param_count];
        let zz = correlation_matrix(&arch, &params, Basis::Z).unwrap();
        assert!((zz[0][1] + 1.0).abs() < 1e-12);
        assert!((zz[2][3] + 1.0).abs() < 1e-12);
        assert!(zz[0][2].abs() < 1e-12 && zz[1][3].abs() < 1e-12);
        assert!(zz.iter().enumerate().all(|(i, r)| r[i] == 1.0));
    }

    #[test]
    fn adjoint_matches_finite_difference() {
        let h = heisenberg_j1j2(&LatticeSpec::chain(6, 0.0).unwrap());
        let arch = assemble_qmps(6, 2, BlockKind::General, 1).unwrap();
        let wide = WideCircuit::from_architecture(&arch).unwrap();
        let params = init_params(arch.param_count, RngStream::from_seed(2)).unwrap();
        let (e, g) = wide.adjoint_gradient(&params, &h).unwrap();
        assert!((e - wide.energy(&params, &h).unwrap()).abs() < 1e-12);
        let eps = 1e-5;
        for k in [0, 7, arch.param_count - 1] {
            let mut p = params.clone();
            p[k] += eps;
            let up = wide.energy(&p, &h).unwrap();
            p[k] -= 2.0 * eps;
            let dn = wide.energy(&p, &h).unwrap();
            assert!((g[k] - (up - dn) / (2.0 * eps)).abs() < 1e-7);
        }
        let zero = Hamiltonian::empty(6);
        let (_, g0) = wide.adjoint_gradient(&params, &zero).unwrap();
        assert!(g0.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn fidelity_against_degenerate_space() {
        let mut h = heisenberg_j1j2(&LatticeSpec::chain(2, 0.0).unwrap());
        h.terms.iter_mut().for_each(|t| t.coefficient = -t.coefficient);
        let sol = dense_ground_state(&h, None).unwrap();
        let mut rng = RngStream::from_seed(8).rng();
        let mut amps: Vec<C> = (0..4).map(|_| C::new(rng.gen(), rng.gen())).collect();
        let nrm = norm(&amps);
        amps.iter_mut().for_each(|a| *a /= nrm);
        let psi = StateVector::from_amplitudes(amps.clone()).unwrap();
        // explicit projector onto the triplet: 1 - |singlet⟩⟨singlet|
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet_ov = (amps[1] - amps[2]) * s;
        let want = 1.0 - singlet_ov.norm_sqr();
        assert!((sol.fidelity(&psi).unwrap() - want).abs() < 1e-12);
        assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("qmps-cache-{}", std::process::id()));
        let h = heisenberg_j1j2(&LatticeSpec::new(2, 2, 0.5).unwrap());
        let a = cached_ground_state(&h, Some(SzSector::ZERO), &dir).unwrap();
        let b = cached_ground_state(&h, Some(SzSector::ZERO), &dir).unwrap();
        assert_eq!(a.energy, b.energy);
        std::fs::remove_dir_all(&dir).ok();
    }
}
