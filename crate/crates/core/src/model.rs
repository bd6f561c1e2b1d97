//! Frustrated J1–J2 Heisenberg model on an open square lattice, the zigzag
//! site ordering, and three-basis energy estimation from bitstrings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::estimator::EnergyEstimate;
use crate::simcore::pauli::PauliMask;
use crate::simcore::Basis;

/// `lx` columns by `ly` rows, open boundary. Site `(row, col)` has linear
/// index `row * lx + col`. A chain is `ly = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lx: usize,
    pub ly: usize,
    pub j2: f64,
}

impl LatticeSpec {
    pub fn new(lx: usize, ly: usize, j2: f64) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(contract(format!("lattice {lx}×{ly} is empty")));
        }
        if !j2.is_finite() {
            return Err(contract("J2 must be finite"));
        }
        Ok(Self { lx, ly, j2 })
    }

    pub fn chain(n: usize, j2: f64) -> Result<Self> {
        Self::new(n, 1, j2)
    }

    pub fn num_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.lx + col
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.lx, site % self.lx)
    }

    /// Nearest-neighbour pairs `(i, j)`, `i < j`.
    pub fn nn_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.ly {
            for c in 0..self.lx {
                if c + 1 < self.lx {
                    out.push((self.site(r, c), self.site(r, c + 1)));
                }
                if r + 1 < self.ly {
                    out.push((self.site(r, c), self.site(r + 1, c)));
                }
            }
        }
        out
    }

    /// Both diagonals of every unit square, `i < j`.
    pub fn nnn_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.ly.saturating_sub(1) {
            for c in 0..self.lx.saturating_sub(1) {
                out.push((self.site(r, c), self.site(r + 1, c + 1)));
                out.push((self.site(r, c + 1), self.site(r + 1, c)));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub sites: Vec<usize>,
    pub axes: Vec<Basis>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, sites: Vec<usize>, axes: Vec<Basis>) -> Result<Self> {
        if sites.len() != axes.len() {
            return Err(contract("Pauli term sites/axes length mismatch"));
        }
        if !coefficient.is_finite() {
            return Err(contract("Pauli term coefficient must be finite"));
        }
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(contract(format!("Pauli term sites not distinct: {sites:?}")));
        }
        Ok(Self {
            coefficient,
            sites,
            axes,
        })
    }

    /// Basis in which every factor is diagonal, if the axes agree.
    pub fn common_axis(&self) -> Option<Basis> {
        let first = *self.axes.first()?;
        self.axes.iter().all(|&a| a == first).then_some(first)
    }

    pub fn mask(&self) -> PauliMask {
        PauliMask::new(self.sites.iter().copied().zip(self.axes.iter().copied()))
    }

    /// Product of ±1 outcomes of the measured sites.
    pub fn parity(&self, bits: &[u8]) -> f64 {
        let ones: u32 = self.sites.iter().map(|&s| bits[s] as u32).sum();
        if ones & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    pub num_sites: usize,
    pub terms: Vec<PauliTerm>,
    /// Term indices measured together in each basis.
    pub basis_groups: BTreeMap<Basis, Vec<usize>>,
}

impl Hamiltonian {
    pub fn new(num_sites: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        let mut basis_groups: BTreeMap<Basis, Vec<usize>> = BTreeMap::new();
        for (k, t) in terms.iter().enumerate() {
            if let Some(&s) = t.sites.iter().find(|&&s| s >= num_sites) {
                return Err(contract(format!("term site {s} outside {num_sites} sites")));
            }
            let axis = t.common_axis().ok_or_else(|| {
                contract(format!(
                    "term {k} mixes axes {:?}; only single-basis terms can be grouped",
                    t.axes
                ))
            })?;
            basis_groups.entry(axis).or_default().push(k);
        }
        Ok(Self {
            num_sites,
            terms,
            basis_groups,
        })
    }

    pub fn empty(num_sites: usize) -> Self {
        Self {
            num_sites,
            terms: Vec::new(),
            basis_groups: BTreeMap::new(),
        }
    }

    pub fn group(&self, basis: Basis) -> &[usize] {
        self.basis_groups.get(&basis).map_or(&[], |v| v.as_slice())
    }

    /// Same operator with site `s` renamed to `map[s]`.
    pub fn relabeled(&self, map: &[usize], num_sites: usize) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliTerm {
                coefficient: t.coefficient,
                sites: t.sites.iter().map(|&s| map[s]).collect(),
                axes: t.axes.clone(),
            })
            .collect();
        Self::new(num_sites, terms)
    }

    pub fn masks(&self) -> Vec<(f64, PauliMask)> {
        self.terms.iter().map(|t| (t.coefficient, t.mask())).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            format_version: u32,
            num_sites: usize,
            terms: &'a [PauliTerm],
            basis_groups: &'a BTreeMap<Basis, Vec<usize>>,
        }
        Ok(serde_json::to_string_pretty(&Doc {
            format_version: 1,
            num_sites: self.num_sites,
            terms: &self.terms,
            basis_groups: &self.basis_groups,
        })?)
    }
}

/// `(1/4) Σ_⟨ij⟩ σ_i·σ_j + (J2/4) Σ_⟪ij⟫ σ_i·σ_j` on the open lattice.
/// Zero-coefficient NNN terms are omitted when `J2 = 0`.
pub fn heisenberg_j1j2(lattice: &LatticeSpec) -> Hamiltonian {
    let mut terms = Vec::new();
    let mut push = |pairs: Vec<(usize, usize)>, coeff: f64| {
        for (i, j) in pairs {
            for axis in Basis::ALL {
                terms.push(PauliTerm {
                    coefficient: coeff,
                    sites: vec![i, j],
                    axes: vec![axis, axis],
                });
            }
        }
    };
    push(lattice.nn_pairs(), 0.25);
    if lattice.j2 != 0.0 {
        push(lattice.nnn_pairs(), 0.25 * lattice.j2);
    }
    Hamiltonian::new(lattice.num_sites(), terms).expect("Heisenberg terms are well formed")
}

/// Bijection between lattice sites and 0-based measurement positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SiteOrdering {
    /// `site_at[p]` is the lattice site recorded at position `p`.
    site_at: Vec<usize>,
    position_of: Vec<usize>,
}

impl TryFrom<Vec<usize>> for SiteOrdering {
    type Error = crate::error::Error;

    fn try_from(site_at: Vec<usize>) -> Result<Self> {
        Self::from_sites(site_at)
    }
}

impl From<SiteOrdering> for Vec<usize> {
    fn from(o: SiteOrdering) -> Self {
        o.site_at
    }
}

impl SiteOrdering {
    pub fn from_sites(site_at: Vec<usize>) -> Result<Self> {
        let n = site_at.len();
        let mut position_of = vec![usize::MAX; n];
        for (p, &s) in site_at.iter().enumerate() {
            if s >= n || position_of[s] != usize::MAX {
                return Err(contract(format!("site ordering is not a permutation: {site_at:?}")));
            }
            position_of[s] = p;
        }
        Ok(Self {
            site_at,
            position_of,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sites((0..n).collect()).expect("identity permutation")
    }

    pub fn len(&self) -> usize {
        self.site_at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_at.is_empty()
    }

    pub fn site_at(&self, position: usize) -> usize {
        self.site_at[position]
    }

    pub fn position_of(&self, site: usize) -> usize {
        self.position_of[site]
    }

    pub fn positions(&self) -> &[usize] {
        &self.position_of
    }
}

/// Boustrophedon path: row 0 left→right, row 1 right→left, and so on.
pub fn zigzag_ordering(lx: usize, ly: usize) -> SiteOrdering {
    let mut site_at = Vec::with_capacity(lx * ly);
    for r in 0..ly {
        if r % 2 == 0 {
            site_at.extend((0..lx).map(|c| r * lx + c));
        } else {
            site_at.extend((0..lx).rev().map(|c| r * lx + c));
        }
    }
    SiteOrdering::from_sites(site_at).expect("zigzag is a permutation")
}

/// Bitstrings per basis, each indexed by lattice site.
pub type BasisSamples = BTreeMap<Basis, Vec<Vec<u8>>>;

/// Three-basis energy estimate: each group's per-shot energy is averaged and
/// the group variances are combined as independent.
pub fn energy_from_samples(h: &Hamiltonian, samples: &BasisSamples) -> Result<EnergyEstimate> {
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut shots = 0;
    for (&basis, idx) in &h.basis_groups {
        if idx.is_empty() {
            continue;
        }
        let group = samples
            .get(&basis)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| contract(format!("no samples for basis {basis:?}")))?;
        let n = group.len();
        let per_shot: Vec<f64> = group
            .iter()
            .map(|bits| {
                idx.iter()
                    .map(|&k| h.terms[k].coefficient * h.terms[k].parity(bits))
                    .sum()
            })
            .collect();
        let m = per_shot.iter().sum::<f64>() / n as f64;
        let v = if n > 1 {
            per_shot.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        mean += m;
        var += v / n as f64;
        shots += n;
    }
    Ok(EnergyEstimate {
        mean,
        stderr: var.sqrt(),
        shots,
    })
}
