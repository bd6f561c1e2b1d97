//! Circuit-block builders (general, U(1)- and SU(2)-preserving) and the
//! qubit-reuse architectures assembled from them.
//!
//! Q-MPS register layout: qubit 0 is the physical qubit, qubits `1..=V` are
//! virtual, and qubit `V + 1` is the SU(2) ancilla. Virtual qubit `j` is
//! recorded at position `N - V - 1 + j`; the physical qubit of step `k`
//! (0-based) at position `k`.
//!
//! Q-PEPS register layout: qubits `0..Lx` are the physical row, `Lx..2Lx` the
//! virtual row.

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::model::{zigzag_ordering, LatticeSpec, SiteOrdering};
use crate::rng::RngStream;
use crate::simcore::{GateKind, GateOp};

pub const ARCHITECTURE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    General,
    U1,
    Su2,
    Peps,
    /// Non-parametrized blocks (cluster circuits, hand-built tests).
    Fixed,
}

impl BlockKind {
    /// Parameters per block of register width `V + 1` at depth `d`.
    pub fn params_per_block(self, v: usize, d: usize) -> usize {
        match self {
            BlockKind::General | BlockKind::U1 => 3 * d * (v + 1),
            BlockKind::Su2 => d * (v + 1),
            BlockKind::Peps | BlockKind::Fixed => 0,
        }
    }
}

/// Parity of a block's step counted from 1 ("odd steps" are 1, 3, 5, …).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepParity {
    Odd,
    Even,
}

impl StepParity {
    pub fn of_step(step: usize) -> Self {
        if step.is_multiple_of(2) {
            StepParity::Odd
        } else {
            StepParity::Even
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub parity: StepParity,
    /// Register qubits touched by the block.
    pub width: usize,
    pub depth: usize,
    pub param_slots: Range<usize>,
    pub gates: Vec<GateOp>,
}

impl BlockSpec {
    pub fn param_count(&self) -> usize {
        self.param_slots.len()
    }
}

fn check_slots(slots: &Range<usize>, want: usize) -> Result<()> {
    if slots.len() != want {
        return Err(contract(format!(
            "block needs {want} parameter slots, got range {slots:?}"
        )));
    }
    Ok(())
}

fn check_vd(v: usize, d: usize) -> Result<()> {
    if v == 0 {
        return Err(contract("at least one virtual qubit is required"));
    }
    if d == 0 {
        return Err(contract("block depth must be at least 1"));
    }
    Ok(())
}

/// Ring pairing `(0,1), (1,2), …, (V,0)` over the `V + 1` block qubits.
fn ring(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).map(move |i| (i, (i + 1) % n))
}

/// Singlet `(|01⟩ - |10⟩)/√2` on two fresh qubits.
fn singlet(a: usize, b: usize) -> [GateOp; 3] {
    [
        GateOp::fixed1(GateKind::X, a),
        GateOp::fixed1(GateKind::H, a),
        GateOp::fixed2(GateKind::InvCnot, a, b),
    ]
}

/// Hardware-efficient block: per layer RX·RZ·RX on each qubit, then a CNOT
/// chain `q → q+1`.
pub fn build_general_block(v: usize, d: usize, param_slots: Range<usize>) -> Result<BlockSpec> {
    check_vd(v, d)?;
    check_slots(&param_slots, BlockKind::General.params_per_block(v, d))?;
    let mut slot = param_slots.start;
    let mut gates = Vec::new();
    for _ in 0..d {
        for q in 0..=v {
            for kind in [GateKind::Rx, GateKind::Rz, GateKind::Rx] {
                gates.push(GateOp::param1(kind, q, slot));
                slot += 1;
            }
        }
        for q in 0..v {
            gates.push(GateOp::fixed2(GateKind::Cnot, q, q + 1));
        }
    }
    Ok(BlockSpec {
        kind: BlockKind::General,
        parity: StepParity::Odd,
        width: v + 1,
        depth: d,
        param_slots,
        gates,
    })
}

/// Sz-conserving block: X on the physical qubit for odd steps, then per layer
/// RZ on each qubit, a PSWAP ring, and RZ on each qubit again.
pub fn build_u1_block(
    v: usize,
    d: usize,
    parity: StepParity,
    param_slots: Range<usize>,
) -> Result<BlockSpec> {
    check_vd(v, d)?;
    check_slots(&param_slots, BlockKind::U1.params_per_block(v, d))?;
    let mut gates = Vec::new();
    if parity == StepParity::Odd {
        gates.push(GateOp::fixed1(GateKind::X, 0));
    }
    let mut slot = param_slots.start;
    for _ in 0..d {
        for q in 0..=v {
            gates.push(GateOp::param1(GateKind::Rz, q, slot));
            slot += 1;
        }
        for (a, b) in ring(v + 1) {
            gates.push(GateOp::param2(GateKind::Pswap, a, b, slot));
            slot += 1;
        }
        for q in 0..=v {
            gates.push(GateOp::param1(GateKind::Rz, q, slot));
            slot += 1;
        }
    }
    Ok(BlockSpec {
        kind: BlockKind::U1,
        parity,
        width: v + 1,
        depth: d,
        param_slots,
        gates,
    })
}

/// How an SU(2) block pairs its fresh physical qubit into a singlet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingletRole {
    /// Singlet between the physical qubit and the ancilla.
    WithAncilla,
    /// Swap the ancilla's half of a pending singlet onto the physical qubit.
    FromAncilla,
    /// Singlet directly with the (still fresh) register qubit `q`.
    WithQubit(usize),
}

/// SU(2)-symmetric block for an architecture with an ancilla at register
/// index `V + 1`. Odd steps open a singlet with the ancilla, even steps swap
/// it onto the physical qubit; then `d` layers of a PSWAP ring on the
/// `V + 1` block qubits.
pub fn build_su2_block(
    v: usize,
    d: usize,
    parity: StepParity,
    param_slots: Range<usize>,
) -> Result<BlockSpec> {
    let role = match parity {
        StepParity::Odd => SingletRole::WithAncilla,
        StepParity::Even => SingletRole::FromAncilla,
    };
    build_su2_block_with(v, d, role, param_slots)
}

pub fn build_su2_block_with(
    v: usize,
    d: usize,
    role: SingletRole,
    param_slots: Range<usize>,
) -> Result<BlockSpec> {
    check_vd(v, d)?;
    check_slots(&param_slots, BlockKind::Su2.params_per_block(v, d))?;
    let anc = v + 1;
    let mut gates = Vec::new();
    let parity = match role {
        SingletRole::WithAncilla => {
            gates.extend(singlet(0, anc));
            StepParity::Odd
        }
        SingletRole::FromAncilla => {
            gates.push(GateOp::fixed2(GateKind::Swap, anc, 0));
            StepParity::Even
        }
        SingletRole::WithQubit(q) => {
            if q == 0 || q > v {
                return Err(contract(format!("singlet partner {q} is not a virtual qubit")));
            }
            gates.extend(singlet(0, q));
            StepParity::Odd
        }
    };
    let mut slot = param_slots.start;
    for _ in 0..d {
        for (a, b) in ring(v + 1) {
            gates.push(GateOp::param2(GateKind::Pswap, a, b, slot));
            slot += 1;
        }
    }
    Ok(BlockSpec {
        kind: BlockKind::Su2,
        parity,
        width: v + 2,
        depth: d,
        param_slots,
        gates,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    ApplyBlock {
        block: usize,
    },
    /// Measure register `qubit`, record the bit at 0-based `position`, and
    /// optionally reset the qubit to |0⟩ for reuse.
    Measure {
        qubit: usize,
        position: usize,
        reset: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Family {
    Qmps { block: BlockKind },
    Qpeps,
    Cluster { efficient: bool },
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub format_version: u32,
    pub family: Family,
    pub num_sites: usize,
    /// Physical qubits R.
    pub physical: usize,
    /// Virtual qubits V.
    pub virtual_qubits: usize,
    pub ancilla: bool,
    /// Register width R + V (+1 with an ancilla).
    pub width: usize,
    pub depth: usize,
    pub param_count: usize,
    pub blocks: Vec<BlockSpec>,
    pub schedule: Vec<Event>,
    /// Maps measurement positions to lattice sites.
    pub ordering: SiteOrdering,
}

pub type ParameterVector = Vec<f64>;

impl Architecture {
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        num_sites: usize,
        width: usize,
        blocks: Vec<BlockSpec>,
        schedule: Vec<Event>,
        ordering: SiteOrdering,
    ) -> Result<Self> {
        let param_count = blocks.iter().map(|b| b.param_slots.end).max().unwrap_or(0);
        let arch = Self {
            format_version: ARCHITECTURE_FORMAT_VERSION,
            family: Family::Custom,
            num_sites,
            physical: 1,
            virtual_qubits: width.saturating_sub(1),
            ancilla: false,
            width,
            depth: blocks.iter().map(|b| b.depth).max().unwrap_or(0),
            param_count,
            blocks,
            schedule,
            ordering,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn with_ordering(mut self, ordering: SiteOrdering) -> Result<Self> {
        if ordering.len() != self.num_sites {
            return Err(contract(format!(
                "ordering covers {} sites, architecture has {}",
                ordering.len(),
                self.num_sites
            )));
        }
        self.ordering = ordering;
        Ok(self)
    }

    pub fn ancilla_qubit(&self) -> Option<usize> {
        self.ancilla.then_some(self.width - 1)
    }

    /// Checks register bounds, disjoint parameter slots and the measurement
    /// schedule contract.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != ARCHITECTURE_FORMAT_VERSION {
            return Err(contract(format!(
                "unsupported architecture format version {}",
                self.format_version
            )));
        }
        if self.ordering.len() != self.num_sites {
            return Err(contract("ordering length differs from site count"));
        }
        let mut slot_used = vec![false; self.param_count];
        for (b, block) in self.blocks.iter().enumerate() {
            if block.param_slots.end > self.param_count {
                return Err(contract(format!("block {b} slots exceed parameter count")));
            }
            for g in &block.gates {
                g.check_targets(self.width)?;
                if let Some(s) = g.param {
                    if !block.param_slots.contains(&s) {
                        return Err(contract(format!("block {b} gate uses foreign slot {s}")));
                    }
                    if std::mem::replace(&mut slot_used[s], true) {
                        return Err(contract(format!("parameter slot {s} used twice")));
                    }
                }
            }
        }
        let mut seen = vec![false; self.num_sites];
        let mut consumed = vec![false; self.width];
        for (e, ev) in self.schedule.iter().enumerate() {
            match *ev {
                Event::ApplyBlock { block } => {
                    let b = self
                        .blocks
                        .get(block)
                        .ok_or_else(|| contract(format!("schedule references block {block}")))?;
                    if b.gates.iter().flat_map(|g| &g.targets).any(|&q| consumed[q]) {
                        return Err(contract(format!("block {block} acts on a consumed qubit")));
                    }
                }
                Event::Measure {
                    qubit,
                    position,
                    reset,
                } => {
                    if qubit >= self.width || consumed[qubit] {
                        return Err(contract(format!("invalid measurement of qubit {qubit}")));
                    }
                    if position >= self.num_sites || std::mem::replace(&mut seen[position], true) {
                        return Err(contract(format!("position {position} invalid or repeated")));
                    }
                    if reset && e + 1 == self.schedule.len() {
                        return Err(contract("a reset measurement cannot end the schedule"));
                    }
                    consumed[qubit] = !reset;
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(contract("schedule does not record every position"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let arch: Self = serde_json::from_str(text)?;
        arch.validate()?;
        Ok(arch)
    }

    /// `(block, gate index)` of the gate reading each parameter slot.
    pub fn slot_locations(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(usize::MAX, usize::MAX); self.param_count];
        for (b, block) in self.blocks.iter().enumerate() {
            for (g, gate) in block.gates.iter().enumerate() {
                if let Some(s) = gate.param {
                    out[s] = (b, g);
                }
            }
        }
        out
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count {
            return Err(contract(format!(
                "expected {} parameters, got {}",
                self.param_count,
                params.len()
            )));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(contract(format!("parameter {i} is not finite")));
        }
        Ok(())
    }
}

/// Q-MPS: `N - V` blocks on one physical and `V` virtual qubits (plus an
/// ancilla for SU(2)); the physical qubit is measured and reset after every
/// block but the last, after which all physical and virtual qubits are read.
///
/// U(1) architectures start from the Néel product `|1010…⟩` in measurement
/// order; SU(2) architectures from singlets on positions `(0,1), (2,3), …`
/// (for odd `V` the first physical qubit pairs with virtual qubit 1 instead).
/// Virtual-qubit preparation is emitted at the front of the first block.
pub fn assemble_qmps(n: usize, v: usize, kind: BlockKind, d: usize) -> Result<Architecture> {
    if n <= v {
        return Err(contract(format!("N = {n} must exceed V = {v}")));
    }
    check_vd(v, d)?;
    let steps = n - v;
    let per = kind.params_per_block(v, d);
    let slots = |k: usize| k * per..(k + 1) * per;
    let virt_position = |j: usize| steps - 1 + j;
    let mut blocks = Vec::with_capacity(steps);
    match kind {
        BlockKind::General => {
            for k in 0..steps {
                blocks.push(build_general_block(v, d, slots(k))?);
            }
        }
        BlockKind::U1 => {
            for k in 0..steps {
                let mut b = build_u1_block(v, d, StepParity::of_step(k), slots(k))?;
                if k == 0 {
                    let flips = (1..=v)
                        .filter(|&j| virt_position(j) % 2 == 0)
                        .map(|j| GateOp::fixed1(GateKind::X, j));
                    b.gates.splice(0..0, flips);
                }
                blocks.push(b);
            }
        }
        BlockKind::Su2 => {
            if !n.is_multiple_of(2) {
                return Err(contract(format!("SU(2) singlet product needs even N, got {n}")));
            }
            // odd V: physical step 0 pairs with virtual 1, the rest shift by one
            let shift = v % 2;
            for k in 0..steps {
                let role = if shift == 1 && k == 0 {
                    SingletRole::WithQubit(1)
                } else if (k + shift).is_multiple_of(2) {
                    SingletRole::WithAncilla
                } else {
                    SingletRole::FromAncilla
                };
                let mut b = build_su2_block_with(v, d, role, slots(k))?;
                if k == 0 {
                    let prep: Vec<GateOp> = (1 + shift..=v)
                        .step_by(2)
                        .flat_map(|j| singlet(j, j + 1))
                        .collect();
                    b.gates.splice(0..0, prep);
                }
                blocks.push(b);
            }
        }
        other => return Err(contract(format!("{other:?} blocks do not form a Q-MPS"))),
    }
    let mut schedule = Vec::with_capacity(2 * steps + v);
    for k in 0..steps {
        schedule.push(Event::ApplyBlock { block: k });
        let last = k + 1 == steps;
        schedule.push(Event::Measure {
            qubit: 0,
            position: k,
            reset: !last,
        });
    }
    for j in 1..=v {
        schedule.push(Event::Measure {
            qubit: j,
            position: virt_position(j),
            reset: false,
        });
    }
    let ancilla = kind == BlockKind::Su2;
    let arch = Architecture {
        format_version: ARCHITECTURE_FORMAT_VERSION,
        family: Family::Qmps { block: kind },
        num_sites: n,
        physical: 1,
        virtual_qubits: v,
        ancilla,
        width: v + 1 + ancilla as usize,
        depth: d,
        param_count: per * steps,
        blocks,
        schedule,
        ordering: SiteOrdering::identity(n),
    };
    arch.validate()?;
    Ok(arch)
}

/// Q-MPS over a 2D lattice with the zigzag site ordering.
pub fn assemble_qmps_lattice(
    lx: usize,
    ly: usize,
    v: usize,
    kind: BlockKind,
    d: usize,
) -> Result<Architecture> {
    assemble_qmps(lx * ly, v, kind, d)?.with_ordering(zigzag_ordering(lx, ly))
}

/// SU(2) Q-PEPS on an `lx × ly` lattice with one virtual qubit per physical
/// qubit. Rows are produced one per block: each entangle layer applies PSWAP
/// to (i) every physical/virtual pair, (ii) neighbouring physical qubits and
/// (iii) neighbouring virtual qubits, both with periodic wrap. Each block
/// starts by pairing its fresh physical row into singlets `(2m, 2m+1)`; the
/// first block also pairs the virtual row. `lx` must therefore be even.
pub fn assemble_qpeps(lx: usize, ly: usize, d: usize) -> Result<Architecture> {
    if lx < 2 || ly < 2 {
        return Err(contract(format!("Q-PEPS needs lx, ly ≥ 2, got {lx}×{ly}")));
    }
    if !lx.is_multiple_of(2) {
        return Err(contract(format!("Q-PEPS singlet rows need even lx, got {lx}")));
    }
    if d == 0 {
        return Err(contract("block depth must be at least 1"));
    }
    let per = 3 * lx * d;
    let virt = |c: usize| lx + c;
    let zigzag = zigzag_ordering(lx, ly);
    let mut blocks = Vec::new();
    let mut schedule = Vec::new();
    for r in 0..ly - 1 {
        let mut gates = Vec::new();
        for m in (0..lx).step_by(2) {
            gates.extend(singlet(m, m + 1));
        }
        if r == 0 {
            for m in (0..lx).step_by(2) {
                gates.extend(singlet(virt(m), virt(m + 1)));
            }
        }
        let mut slot = r * per;
        for _ in 0..d {
            for c in 0..lx {
                gates.push(GateOp::param2(GateKind::Pswap, c, virt(c), slot));
                slot += 1;
            }
            for c in 0..lx {
                gates.push(GateOp::param2(GateKind::Pswap, c, (c + 1) % lx, slot));
                slot += 1;
            }
            for c in 0..lx {
                gates.push(GateOp::param2(GateKind::Pswap, virt(c), virt((c + 1) % lx), slot));
                slot += 1;
            }
        }
        blocks.push(BlockSpec {
            kind: BlockKind::Peps,
            parity: StepParity::of_step(r),
            width: 2 * lx,
            depth: d,
            param_slots: r * per..(r + 1) * per,
            gates,
        });
        schedule.push(Event::ApplyBlock { block: r });
        let last = r + 2 == ly;
        for c in 0..lx {
            schedule.push(Event::Measure {
                qubit: c,
                position: zigzag.position_of(r * lx + c),
                reset: !last,
            });
        }
        if last {
            for c in 0..lx {
                schedule.push(Event::Measure {
                    qubit: virt(c),
                    position: zigzag.position_of((r + 1) * lx + c),
                    reset: false,
                });
            }
        }
    }
    let arch = Architecture {
        format_version: ARCHITECTURE_FORMAT_VERSION,
        family: Family::Qpeps,
        num_sites: lx * ly,
        physical: lx,
        virtual_qubits: lx,
        ancilla: false,
        width: 2 * lx,
        depth: d,
        param_count: per * (ly - 1),
        blocks,
        schedule,
        ordering: zigzag,
    };
    arch.validate()?;
    Ok(arch)
}

/// Serializable recipe for an architecture on a lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum AnsatzSpec {
    Qmps {
        block: BlockKind,
        virtual_qubits: usize,
        depth: usize,
    },
    Qpeps {
        depth: usize,
    },
}

impl AnsatzSpec {
    pub fn build(&self, lattice: &LatticeSpec) -> Result<Architecture> {
        match *self {
            AnsatzSpec::Qmps {
                block,
                virtual_qubits,
                depth,
            } => assemble_qmps_lattice(lattice.lx, lattice.ly, virtual_qubits, block, depth),
            AnsatzSpec::Qpeps { depth } => assemble_qpeps(lattice.lx, lattice.ly, depth),
        }
    }

    /// Whether the circuit conserves total Sz (and so Z samples have fixed
    /// Hamming weight).
    pub fn conserves_sz(&self) -> bool {
        !matches!(
            self,
            AnsatzSpec::Qmps {
                block: BlockKind::General,
                ..
            }
        )
    }
}

/// `m` independent uniform draws from `[0, π]`.
pub fn init_params(m: usize, stream: RngStream) -> Result<ParameterVector> {
    if m == 0 {
        return Err(contract("parameter count must be positive"));
    }
    let mut rng = stream.rng();
    Ok((0..m).map(|_| rng.gen::<f64>() * PI).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_block_counts() {
        assert_eq!(build_general_block(4, 5, 0..75).unwrap().param_count(), 75);
        assert_eq!(build_general_block(1, 1, 0..6).unwrap().param_count(), 6);
        assert!(build_general_block(1, 0, 0..0).is_err());
        assert!(build_general_block(2, 1, 0..8).is_err());
        let arch = assemble_qmps(16, 4, BlockKind::General, 5).unwrap();
        assert_eq!(arch.blocks.len(), 12);
        assert_eq!(arch.param_count, 900);
        assert_eq!(arch.width, 5);
    }

    #[test]
    fn u1_block_counts() {
        let b = build_u1_block(4, 1, StepParity::Even, 0..15).unwrap();
        let single = b.gates.iter().filter(|g| g.kind == GateKind::Rz).count();
        let double = b.gates.iter().filter(|g| g.kind == GateKind::Pswap).count();
        assert_eq!((single, double), (10, 5));
        assert_eq!(assemble_qmps(16, 4, BlockKind::U1, 5).unwrap().param_count, 900);
        let odd = build_u1_block(4, 1, StepParity::Odd, 0..15).unwrap();
        assert_eq!(odd.gates[0], GateOp::fixed1(GateKind::X, 0));
    }

    #[test]
    fn su2_counts_and_layout() {
        let arch = assemble_qmps(16, 4, BlockKind::Su2, 5).unwrap();
        assert_eq!(arch.blocks.len(), 12);
        assert_eq!(arch.width, 6);
        assert_eq!(arch.param_count, 300);
        assert_eq!(assemble_qmps(16, 4, BlockKind::Su2, 1).unwrap().param_count, 60);
        assert!(assemble_qmps(15, 4, BlockKind::Su2, 1).is_err());
        // the ancilla is never measured
        let anc = arch.ancilla_qubit().unwrap();
        assert!(arch
            .schedule
            .iter()
            .all(|e| !matches!(e, Event::Measure { qubit, .. } if *qubit == anc)));
    }

    #[test]
    fn degenerate_single_block() {
        let arch = assemble_qmps(5, 4, BlockKind::U1, 2).unwrap();
        assert_eq!(arch.blocks.len(), 1);
        let measures: Vec<_> = arch
            .schedule
            .iter()
            .filter_map(|e| match e {
                Event::Measure { reset, .. } => Some(*reset),
                _ => None,
            })
            .collect();
        assert_eq!(measures, vec![false; 5]);
        assert!(assemble_qmps(4, 4, BlockKind::U1, 1).is_err());
    }

    #[test]
    fn qpeps_counts() {
        let a = assemble_qpeps(4, 4, 5).unwrap();
        assert_eq!((a.param_count, a.width), (180, 8));
        let b = assemble_qpeps(6, 6, 5).unwrap();
        assert_eq!((b.param_count, b.width), (450, 12));
        let mps = assemble_qmps_lattice(4, 4, 4, BlockKind::Su2, 3).unwrap();
        assert_eq!(mps.param_count, 180);
        assert!(assemble_qpeps(1, 4, 5).is_err());
        assert!(assemble_qpeps(3, 4, 5).is_err());
    }

    #[test]
    fn init_params_range_and_seed() {
        let a = init_params(900, RngStream::from_seed(1)).unwrap();
        let b = init_params(900, RngStream::from_seed(1)).unwrap();
        let c = init_params(900, RngStream::from_seed(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&x| (0.0..=PI).contains(&x)));
        assert!(init_params(0, RngStream::from_seed(1)).is_err());
    }

    #[test]
    fn init_params_mean() {
        let v = init_params(100_000, RngStream::from_seed(3)).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - PI / 2.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn json_round_trip() {
        let arch = assemble_qpeps(4, 3, 2).unwrap();
        let text = arch.to_json().unwrap();
        assert!(text.contains("\"format_version\": 1"));
        assert_eq!(Architecture::from_json(&text).unwrap(), arch);
    }

    #[test]
    fn validation_catches_bad_schedules() {
        let mut arch = assemble_qmps(6, 2, BlockKind::U1, 1).unwrap();
        arch.schedule.pop();
        assert!(arch.validate().is_err());
        let mut arch = assemble_qmps(6, 2, BlockKind::U1, 1).unwrap();
        arch.blocks[1].gates[1].param = Some(0);
        assert!(arch.validate().is_err());
    }
}
