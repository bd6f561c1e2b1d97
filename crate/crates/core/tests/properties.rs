//! Randomized invariants of the ansatz families, the simulators and the
//! optimizer.

use proptest::prelude::*;
use qmps::ansatz::{assemble_qmps, assemble_qpeps, Architecture, BlockKind};
use qmps::estimator::{ExactEvaluator, GradientEstimate};
use qmps::model::{heisenberg_j1j2, LatticeSpec};
use qmps::oracle::{channel_energy, correlation_matrix, exact_ground_state, WideCircuit};
use qmps::rng::RngStream;
use qmps::simcore::{run_schedule, Basis};
use qmps::trainer::{adam_step, AdamState};

fn kind() -> impl Strategy<Value = BlockKind> {
    prop_oneof![Just(BlockKind::General), Just(BlockKind::U1), Just(BlockKind::Su2)]
}

fn symmetric_kind() -> impl Strategy<Value = BlockKind> {
    prop_oneof![Just(BlockKind::U1), Just(BlockKind::Su2)]
}

/// Even chain length, virtual qubit count below it, and a depth.
fn shape(max_n: usize, max_v: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    (1..=max_n / 2).prop_flat_map(move |h| {
        let n = 2 * h;
        (Just(n), 1..=max_v.min(n - 1), 1..=2usize)
    })
}

fn params_for(arch: &Architecture, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = RngStream::from_seed(seed).rng();
    (0..arch.param_count).map(|_| rng.gen_range(-4.0..4.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn symmetric_ansatz_samples_have_half_filling(
        k in symmetric_kind(),
        (n, v, d) in shape(8, 3),
        pseed in any::<u64>(),
        sseed in any::<u64>(),
    ) {
        let arch = assemble_qmps(n, v, k, d).unwrap();
        let params = params_for(&arch, pseed);
        let bits = run_schedule(&arch, &params, Basis::Z, RngStream::from_seed(sseed)).unwrap();
        prop_assert_eq!(bits.iter().map(|&b| b as usize).sum::<usize>(), n / 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn qpeps_samples_have_half_filling(
        lx in prop_oneof![Just(2usize), Just(4)],
        ly in 2..=3usize,
        d in 1..=2usize,
        pseed in any::<u64>(),
        sseed in any::<u64>(),
    ) {
        let arch = assemble_qpeps(lx, ly, d).unwrap();
        let params = params_for(&arch, pseed);
        let bits = run_schedule(&arch, &params, Basis::Z, RngStream::from_seed(sseed)).unwrap();
        prop_assert_eq!(bits.iter().map(|&b| b as usize).sum::<usize>(), lx * ly / 2);
    }

    #[test]
    fn parameter_counts(k in kind(), (n, v, d) in shape(12, 4)) {
        let arch = assemble_qmps(n, v, k, d).unwrap();
        prop_assert_eq!(arch.param_count, (n - v) * k.params_per_block(v, d));
        prop_assert_eq!(arch.blocks.len(), n - v);
        let per = match k {
            BlockKind::Su2 => d * (v + 1),
            _ => 3 * d * (v + 1),
        };
        prop_assert_eq!(k.params_per_block(v, d), per);
    }

    #[test]
    fn architecture_json_round_trip(k in kind(), (n, v, d) in shape(8, 3)) {
        let arch = assemble_qmps(n, v, k, d).unwrap();
        let back = Architecture::from_json(&arch.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, arch);
    }

    #[test]
    fn first_adam_step_moves_each_parameter_by_lr(
        grad in prop::collection::vec(-10.0f64..10.0, 1..16),
        lr in 0.001f64..1.0,
    ) {
        let params = vec![0.5; grad.len()];
        let state = AdamState::new(grad.len(), lr);
        let (next, state) = adam_step(&state, &GradientEstimate::exact(grad.clone()), &params).unwrap();
        prop_assert_eq!(state.t, 1);
        for ((p, q), g) in params.iter().zip(&next).zip(&grad) {
            let step = (q - p).abs();
            prop_assert!(step <= lr * (1.0 + 1e-9));
            if g.abs() > 1e-3 {
                prop_assert!((step - lr).abs() < 1e-4 * lr);
                prop_assert!((q - p) * g < 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn su2_correlations_are_isotropic((n, v, d) in shape(8, 3), pseed in any::<u64>()) {
        let arch = assemble_qmps(n, v, BlockKind::Su2, d).unwrap();
        let params = params_for(&arch, pseed);
        let z = correlation_matrix(&arch, &params, Basis::Z).unwrap();
        for axis in [Basis::X, Basis::Y] {
            let c = correlation_matrix(&arch, &params, axis).unwrap();
            for (rz, rc) in z.iter().zip(&c) {
                for (a, b) in rz.iter().zip(rc) {
                    prop_assert!((a - b).abs() < 1e-10, "{axis:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn channel_contraction_equals_wide_circuit(
        k in kind(),
        (n, v, d) in shape(6, 2),
        j2 in 0.0f64..1.0,
        pseed in any::<u64>(),
    ) {
        let arch = assemble_qmps(n, v, k, d).unwrap();
        let h = heisenberg_j1j2(&LatticeSpec::chain(n, j2).unwrap());
        let params = params_for(&arch, pseed);
        let wide = WideCircuit::from_architecture(&arch).unwrap().energy(&params, &h).unwrap();
        let channel = channel_energy(&arch, &params, &h).unwrap();
        prop_assert!((wide - channel).abs() < 1e-10, "{wide} vs {channel}");
    }

    #[test]
    fn energies_respect_variational_bound(
        k in kind(),
        (n, v, d) in shape(8, 3),
        j2 in 0.0f64..1.0,
        pseed in any::<u64>(),
    ) {
        let arch = assemble_qmps(n, v, k, d).unwrap();
        let h = heisenberg_j1j2(&LatticeSpec::chain(n, j2).unwrap());
        let ground = exact_ground_state(&h, None).unwrap().energy;
        let e = ExactEvaluator::new(&arch, &h).unwrap().energy(&params_for(&arch, pseed)).unwrap();
        prop_assert!(e >= ground - 1e-10, "{e} below ground {ground}");
    }
}
