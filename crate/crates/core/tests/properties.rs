use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qhmm_core::channels::{
    apply, choi, choi_distance, kraus_from_unitary, random_channel, steady_state, stinespring_dilate,
    transfer_matrix, validate_cptp, KrausChannel,
};
use qhmm_core::circuits::{mutate, random_gate, Circuit, GateSampler, GateType, MutationType};
use qhmm_core::experiments::pearson;
use qhmm_core::language::{hankel, read_tables_csv, write_tables_csv, DistributionTable};
use qhmm_core::learning::{
    acceptance_probability, ansatz_cost, bandit_update, optimize_parameters, temperature, AdaptiveDistribution,
    ComplexityWeights, HypothesisSpace, Problem,
};
use qhmm_core::linalg::{ComplexMatrix, DensityOperator, C64};
use qhmm_core::optimize::OptimizerKind;
use qhmm_core::qhmm::QhmmKraus;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_density(n: usize, r: &mut ChaCha8Rng) -> DensityOperator {
    let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    DensityOperator::new(m.scale_real(1.0 / tr)).unwrap()
}

fn random_qhmm(n: usize, seed: u64) -> QhmmKraus {
    let mut r = rng(seed);
    let ops = r.random_range(2..=4);
    let m = r.random_range(2..=ops);
    let ch = random_channel(n, ops, m, &mut r).unwrap();
    QhmmKraus::new(ch, random_density(n, &mut r)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_channels_are_cptp(seed in any::<u64>(), n in 1usize..4, ops in 1usize..5) {
        let ch = random_channel(n, ops, 1, &mut rng(seed)).unwrap();
        let rep = validate_cptp(&ch);
        prop_assert!(rep.complete, "{}", rep.max_violation);
        let c = choi(&ch);
        prop_assert!(c.eigenvalues().iter().all(|v| *v > -1e-9));
        prop_assert!(c.output_trace().max_abs_diff(&ComplexMatrix::identity(n)) < 1e-9);
    }

    #[test]
    fn channels_map_densities_to_densities(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let ch = random_channel(n, 3, 1, &mut r).unwrap();
        let rho = random_density(n, &mut r);
        let out = apply(&ch, &rho).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
        prop_assert!(out.matrix().hermitian_deviation() < 1e-10);
    }

    #[test]
    fn steady_state_is_fixed(seed in any::<u64>(), n in 1usize..4) {
        let ch = random_channel(n, 3, 1, &mut rng(seed)).unwrap();
        let ss = steady_state(&ch).unwrap();
        let next = apply(&ch, &ss.state).unwrap();
        prop_assert!(next.matrix().max_abs_diff(ss.state.matrix()) <= 1e-8);
    }

    #[test]
    fn stinespring_round_trip(seed in any::<u64>(), ops in 1usize..5) {
        let ch = random_channel(2, ops, 1, &mut rng(seed)).unwrap();
        let dim_e = ops.next_power_of_two();
        let u = stinespring_dilate(&ch, dim_e, 0).unwrap();
        let back = KrausChannel::from_operators(2, kraus_from_unitary(&u, 2, dim_e, 0).unwrap()).unwrap();
        prop_assert!(choi_distance(&ch, &back) < 1e-8);
    }

    #[test]
    fn distributions_are_normalized(seed in any::<u64>(), t in 0usize..5) {
        let q = random_qhmm(2, seed);
        let d = q.distribution(t).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-10);
        prop_assert!(d.iter().all(|(_, p)| p >= -1e-15));
    }

    #[test]
    fn sequence_marginals_are_consistent(seed in any::<u64>()) {
        let q = random_qhmm(2, seed);
        let m = q.n_symbols();
        for a in 0..m {
            let p = q.sequence_probability(&[a]).unwrap();
            let sum: f64 = (0..m).map(|b| q.sequence_probability(&[a, b]).unwrap()).sum();
            prop_assert!((p - sum).abs() < 1e-12);
        }
    }

    #[test]
    fn hankel_rank_bounded_by_n_squared(seed in any::<u64>()) {
        let q = random_qhmm(2, seed);
        let h = hankel(|s| q.sequence_probability(s).unwrap(), q.n_symbols(), 2, 2).unwrap();
        prop_assert!(h.rank(1e-7) <= 4);
    }

    #[test]
    fn transfer_matrix_preserves_trace(seed in any::<u64>()) {
        let ch = random_channel(2, 3, 1, &mut rng(seed)).unwrap();
        let t = transfer_matrix(&ch);
        // vec(I) is a left eigenvector: columns of the trace functional sum to δ
        for col in 0..4 {
            let s = t[(0, col)] + t[(3, col)];
            let want = if col == 0 || col == 3 { 1.0 } else { 0.0 };
            prop_assert!((s.re - want).abs() < 1e-10 && s.im.abs() < 1e-10);
        }
    }

    #[test]
    fn random_circuits_compile_to_unitaries(seed in any::<u64>(), n in 1usize..4, len in 0usize..12) {
        let mut r = rng(seed);
        let sampler = GateSampler::uniform(n, GateType::ALL.to_vec()).unwrap();
        let gates = (0..len).map(|_| random_gate(&sampler, &mut r)).collect();
        let c = Circuit::new(n, gates).unwrap();
        let u = c.compile().unwrap();
        prop_assert!(u.matrix().isometry_deviation() < 1e-10);
    }

    #[test]
    fn mutations_keep_register(seed in any::<u64>(), len in 1usize..8, pos in 0usize..9, k in 0usize..5) {
        let mut r = rng(seed);
        let sampler = GateSampler::uniform(2, vec![GateType::RY, GateType::CX, GateType::X]).unwrap();
        let c = Circuit::new(2, (0..len).map(|_| random_gate(&sampler, &mut r)).collect()).unwrap();
        let t = MutationType::ALL[k];
        let (m, ok) = mutate(&c, pos, t, &sampler, &mut r);
        prop_assert_eq!(m.n_qubits(), 2);
        if ok {
            let want = match t {
                MutationType::Ins => len + 1,
                MutationType::Dlt => len - 1,
                _ => len,
            };
            prop_assert_eq!(m.len(), want);
            prop_assert!(m.compile().is_ok());
        } else {
            prop_assert_eq!(m, c);
        }
    }

    #[test]
    fn acceptance_is_monotone(f_old in -1.0f64..-0.01, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5, t1 in 0.05f64..1.0, t2 in 0.05f64..1.0) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let (cold, hot) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let p = |d: f64, tau: f64| acceptance_probability(f_old, f_old - d, tau);
        prop_assert!(p(lo, hot) >= p(hi, hot));
        prop_assert!(p(lo, hot) >= p(lo, cold));
        prop_assert!((0.0..=1.0).contains(&p(hi, cold)));
        prop_assert_eq!(acceptance_probability(f_old, f_old, cold), 1.0);
    }

    #[test]
    fn temperature_decreases(t in 0usize..10_000) {
        prop_assert!(temperature(t + 1) < temperature(t));
        prop_assert!(temperature(t) > 0.0 && temperature(t) <= 1.0);
    }

    #[test]
    fn bandit_stays_a_distribution(rewards in prop::collection::vec(0.0f64..10.0, 1..8), gamma in 0.0f64..1.0) {
        let k = rewards.len();
        let mut d = AdaptiveDistribution::uniform((0..k).collect::<Vec<_>>());
        for (i, r) in rewards.iter().enumerate() {
            d.reward(i, *r);
        }
        let u = bandit_update(&d, gamma);
        prop_assert!((u.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(u.probs.iter().all(|p| *p >= gamma / k as f64 - 1e-15));
    }

    #[test]
    fn ansatz_cost_nonnegative(ps in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 1usize..6), 0..20)) {
        let target: Vec<_> = ps.iter().map(|(p, _, l)| (vec![0; *l], *p)).collect();
        let cur: Vec<f64> = ps.iter().map(|(_, q, _)| *q).collect();
        prop_assert!(ansatz_cost(&target, &cur) >= 0.0);
        let same: Vec<f64> = ps.iter().map(|(p, _, _)| *p).collect();
        prop_assert_eq!(ansatz_cost(&target, &same), 0.0);
    }

    #[test]
    fn pearson_in_range(xs in prop::collection::vec(-5.0f64..5.0, 2..40), ys in prop::collection::vec(-5.0f64..5.0, 2..40)) {
        if let Some(r) = pearson(&xs, &ys) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn tables_csv_round_trip(seed in any::<u64>()) {
        let q = random_qhmm(2, seed);
        let tables: Vec<DistributionTable> = (1..=3).map(|t| q.distribution(t).unwrap()).collect();
        let mut buf = Vec::new();
        write_tables_csv(&tables, &mut buf).unwrap();
        let back = read_tables_csv(&buf[..], Some(q.n_symbols())).unwrap();
        prop_assert_eq!(back.len(), 3);
        for (a, b) in tables.iter().zip(&back) {
            prop_assert!(a.iter().all(|(s, p)| (b.get(s) - p).abs() < 1e-15));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lamarckian_step_never_hurts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let space = HypothesisSpace::new(1, 1, 2).unwrap();
        let target: Vec<_> = (1..=3).map(|t| random_qhmm(2, seed ^ 1).distribution(t).unwrap()).collect();
        let target: Vec<_> = target.into_iter().filter(|t| t.alphabet_size() == 2).collect();
        prop_assume!(!target.is_empty());
        let p = Problem::new(space, target, ComplexityWeights::default()).unwrap();
        let sampler = GateSampler::uniform(2, vec![GateType::RY, GateType::CRY, GateType::RX]).unwrap();
        let c = Circuit::new(2, (0..4).map(|_| random_gate(&sampler, &mut r)).collect()).unwrap();
        let before = p.evaluate(c.clone()).unwrap().fitness;
        for k in [OptimizerKind::NelderMead, OptimizerKind::FdGradient, OptimizerKind::Coordinate] {
            let h = optimize_parameters(&c, &p, k, 40).unwrap();
            prop_assert!(h.fitness >= before);
            prop_assert!(h.fitness <= 0.0);
        }
    }
}
