//! In-place gate kernels over raw amplitude slices. Qubit `q` is bit `q` of
//! the amplitude index.

use super::gate::{GateKind, Mat2, C};
#[cfg(test)]
use super::gate::Mat4;

#[inline(always)]
fn insert_zero(x: usize, pos: usize) -> usize {
    ((x >> pos) << (pos + 1)) | (x & ((1usize << pos) - 1))
}

#[inline(always)]
fn for_each_pair(len: usize, q: usize, mut f: impl FnMut(usize, usize)) {
    let stride = 1usize << q;
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            f(i, i + stride);
        }
        base += stride << 1;
    }
}

#[inline(always)]
fn for_each_quad(len: usize, a: usize, b: usize, mut f: impl FnMut(usize)) {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    for k in 0..len >> 2 {
        f(insert_zero(insert_zero(k, lo), hi));
    }
}

pub fn mat1(amps: &mut [C], q: usize, m: &Mat2) {
    for_each_pair(amps.len(), q, |i, j| {
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = m[0][0] * a0 + m[0][1] * a1;
        amps[j] = m[1][0] * a0 + m[1][1] * a1;
    });
}

#[cfg(test)]
pub fn mat2(amps: &mut [C], a: usize, b: usize, m: &Mat4) {
    let (ma, mb) = (1usize << a, 1usize << b);
    for_each_quad(amps.len(), a, b, |i| {
        let idx = [i, i | ma, i | mb, i | ma | mb];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (r, &k) in idx.iter().enumerate() {
            amps[k] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
        }
    });
}

pub fn x(amps: &mut [C], q: usize) {
    for_each_pair(amps.len(), q, |i, j| amps.swap(i, j));
}

pub fn h(amps: &mut [C], q: usize) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for_each_pair(amps.len(), q, |i, j| {
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = (a0 + a1) * s;
        amps[j] = (a0 - a1) * s;
    });
}

pub fn rz(amps: &mut [C], q: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let (p0, p1) = (C::new(c, -s), C::new(c, s));
    for_each_pair(amps.len(), q, |i, j| {
        amps[i] *= p0;
        amps[j] *= p1;
    });
}

pub fn rx(amps: &mut [C], q: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    for_each_pair(amps.len(), q, |i, j| {
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = C::new(c * a0.re + s * a1.im, c * a0.im - s * a1.re);
        amps[j] = C::new(c * a1.re + s * a0.im, c * a1.im - s * a0.re);
    });
}

pub fn cnot(amps: &mut [C], control: usize, target: usize) {
    let (mc, mt) = (1usize << control, 1usize << target);
    for_each_quad(amps.len(), control, target, |i| amps.swap(i | mc, i | mc | mt));
}

pub fn inv_cnot(amps: &mut [C], control: usize, target: usize) {
    let mt = 1usize << target;
    for_each_quad(amps.len(), control, target, |i| amps.swap(i, i | mt));
}

pub fn cz(amps: &mut [C], a: usize, b: usize) {
    let m = (1usize << a) | (1usize << b);
    for_each_quad(amps.len(), a, b, |i| amps[i | m] = -amps[i | m]);
}

pub fn swap(amps: &mut [C], a: usize, b: usize) {
    let (ma, mb) = (1usize << a, 1usize << b);
    for_each_quad(amps.len(), a, b, |i| amps.swap(i | ma, i | mb));
}

pub fn pswap(amps: &mut [C], a: usize, b: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let phase = C::new(c, -s);
    let (ma, mb) = (1usize << a, 1usize << b);
    for_each_quad(amps.len(), a, b, |i| {
        amps[i] *= phase;
        amps[i | ma | mb] *= phase;
        let (u, v) = (amps[i | ma], amps[i | mb]);
        // c·u - i s·v
        amps[i | ma] = C::new(c * u.re + s * v.im, c * u.im - s * v.re);
        amps[i | mb] = C::new(c * v.re + s * u.im, c * v.im - s * u.re);
    });
}

/// Applies `kind` with the given angle; `targets` and angle presence are
/// assumed validated by the caller.
pub fn apply(amps: &mut [C], kind: GateKind, targets: &[usize], theta: f64) {
    match kind {
        GateKind::Rx => rx(amps, targets[0], theta),
        GateKind::Rz => rz(amps, targets[0], theta),
        GateKind::X => x(amps, targets[0]),
        GateKind::H => h(amps, targets[0]),
        GateKind::Cnot => cnot(amps, targets[0], targets[1]),
        GateKind::InvCnot => inv_cnot(amps, targets[0], targets[1]),
        GateKind::Cz => cz(amps, targets[0], targets[1]),
        GateKind::Swap => swap(amps, targets[0], targets[1]),
        GateKind::Pswap => pswap(amps, targets[0], targets[1], theta),
    }
}

/// Applies the inverse of `kind(theta)`. Every fixed kind is self-inverse and
/// every parametrized kind satisfies `U(θ)⁻¹ = U(-θ)`.
pub fn apply_inverse(amps: &mut [C], kind: GateKind, targets: &[usize], theta: f64) {
    apply(amps, kind, targets, -theta)
}

/// Applies the entrywise complex conjugate `U*`. For the gate set here
/// `U(θ)* = U(-θ)` and fixed gates are real.
pub fn apply_conj(amps: &mut [C], kind: GateKind, targets: &[usize], theta: f64) {
    apply(amps, kind, targets, -theta)
}

/// Applies the generator Σ of a parametrized gate (σx, σz or SWAP).
pub fn apply_generator(amps: &mut [C], kind: GateKind, targets: &[usize]) {
    match kind {
        GateKind::Rx => x(amps, targets[0]),
        GateKind::Rz => {
            let m = 1usize << targets[0];
            for (i, a) in amps.iter_mut().enumerate() {
                if i & m != 0 {
                    *a = -*a;
                }
            }
        }
        GateKind::Pswap => swap(amps, targets[0], targets[1]),
        other => panic!("{} has no generator", other.name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::gate::{gate_matrix, GateMatrix};

    fn random_amps(n: usize, seed: u64) -> Vec<C> {
        use rand::Rng;
        let mut rng = crate::rng::RngStream::from_seed(seed).rng();
        let mut v: Vec<C> = (0..1 << n)
            .map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        v
    }

    /// Every specialized kernel agrees with the generic matrix kernel.
    #[test]
    fn kernels_match_matrices() {
        let kinds = [
            GateKind::Rx,
            GateKind::Rz,
            GateKind::X,
            GateKind::H,
            GateKind::Cnot,
            GateKind::InvCnot,
            GateKind::Cz,
            GateKind::Swap,
            GateKind::Pswap,
        ];
        for kind in kinds {
            for targets in [[0usize, 2], [3, 1], [2, 3]] {
                let theta = 0.731;
                let t = kind.is_parametrized().then_some(theta);
                let mut fast = random_amps(4, 5);
                let mut slow = fast.clone();
                apply(&mut fast, kind, &targets[..kind.arity()], theta);
                match gate_matrix(kind, t).unwrap() {
                    GateMatrix::One(m) => mat1(&mut slow, targets[0], &m),
                    GateMatrix::Two(m) => mat2(&mut slow, targets[0], targets[1], &m),
                }
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).norm() < 1e-14, "{kind:?} {targets:?}");
                }
                apply_inverse(&mut fast, kind, &targets[..kind.arity()], theta);
                let orig = random_amps(4, 5);
                for (a, b) in fast.iter().zip(&orig) {
                    assert!((a - b).norm() < 1e-14);
                }
            }
        }
    }
}
