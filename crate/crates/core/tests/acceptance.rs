//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero on failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qhmm_core::channels::{
    amplitude_damping, apply, choi_distance, kraus_from_unitary, monras_channel, random_channel, steady_state,
    stinespring_dilate, validate_cptp, KrausChannel,
};
use qhmm_core::classical::{self, gaussian4, market};
use qhmm_core::experiments::{
    landscape_study, learned_market, planted_recovery, reproduce, Experiment, ReproduceOptions, WalkMode, TABLE2,
};
use qhmm_core::language::{enumerate_sequences, hankel};
use qhmm_core::learning::{acceptance_probability, bandit_update, temperature, AdaptiveDistribution};
use qhmm_core::linalg::{density_basis, stacked_real_rank, ComplexMatrix, DensityOperator, C64};
use qhmm_core::qhmm::{self, quantize_classical, QhmmKraus};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_table2() -> Outcome {
    let q = qhmm::amplitude_damping(PI / 2.0);
    let h = hankel(|s| q.sequence_probability(s).unwrap(), 2, 2, 2).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (row, want) in h.values.iter().zip(TABLE2.iter()) {
        for (v, w) in row.iter().zip(want) {
            worst = worst.max((v - w).abs());
            n += 1;
        }
    }
    check(n == 49 && worst <= 1e-12, format!("{n} entries, max error {worst:.1e}"))
}

fn c2_quantize() -> Outcome {
    let mut worst: f64 = 0.0;
    for h in [market(), gaussian4()] {
        let q = quantize_classical(&h).map_err(|e| e.to_string())?;
        for t in 1..=5 {
            for s in enumerate_sequences(h.n_symbols(), t).unwrap() {
                let a = classical::sequence_probability(&h, &s).unwrap();
                let b = q.sequence_probability(&s).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(worst <= 1e-10, format!("max difference {worst:.1e} over lengths 1..=5"))
}

fn c3_stinespring() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ops = rng.random_range(1..=4);
        let ch = random_channel(2, ops, 1, &mut rng).map_err(|e| e.to_string())?;
        let dim_e = ops.next_power_of_two();
        let u = stinespring_dilate(&ch, dim_e, 0).map_err(|e| e.to_string())?;
        let back = KrausChannel::from_operators(2, kraus_from_unitary(&u, 2, dim_e, 0).unwrap()).unwrap();
        worst = worst.max(choi_distance(&ch, &back));
    }
    check(worst < 1e-8, format!("100 channels, max Choi difference {worst:.1e}"))
}

fn c4_monras() -> Outcome {
    let m = qhmm::monras();
    let singles: Vec<f64> = (0..4).map(|a| m.sequence_probability(&[a]).unwrap()).collect();
    let uniform = singles.iter().all(|p| (p - 0.25).abs() <= 1e-12);
    let rank = hankel(|s| m.sequence_probability(s).unwrap(), 4, 3, 3)
        .unwrap()
        .rank(1e-7);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_rank = 0;
    for _ in 0..50 {
        let ops = rng.random_range(2..=4);
        let syms = rng.random_range(2..=ops);
        let ch = random_channel(2, ops, syms, &mut rng).unwrap();
        let g = ComplexMatrix::from_fn(2, 2, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let p = g.matmul(&g.adjoint());
        let rho = DensityOperator::new(p.scale_real(1.0 / p.trace().re)).unwrap();
        let q = QhmmKraus::new(ch, rho).unwrap();
        let h = hankel(|s| q.sequence_probability(s).unwrap(), syms, 2, 2).unwrap();
        max_rank = max_rank.max(h.rank(1e-7));
    }
    check(
        uniform && rank == 3 && max_rank <= 4,
        format!("P(a) = {singles:?}, Hankel rank {rank}, max rank over 50 random N=2 models {max_rank}"),
    )
}

fn c5_sampling() -> Outcome {
    let q = qhmm::amplitude_damping(PI / 2.0);
    let seqs = q.simulate(2, 100_000, 5).map_err(|e| e.to_string())?;
    let exact = q.distribution(2).unwrap();
    let mut worst: f64 = 0.0;
    for s in enumerate_sequences(2, 2).unwrap() {
        let f = seqs.iter().filter(|x| **x == s).count() as f64 / seqs.len() as f64;
        worst = worst.max((f - exact.get(&s)).abs());
    }
    check(worst < 0.01, format!("1e5 shots, max deviation {worst:.4}"))
}

fn c6_ansatz() -> Outcome {
    let opts = ReproduceOptions::default();
    let monras = reproduce(Experiment::MonrasAnsatz, &opts).map_err(|e| e.to_string())?;
    let mkt = reproduce(Experiment::MarketAnsatz, &opts).map_err(|e| e.to_string())?;
    let limit = Duration::from_secs(300).as_secs_f64();
    check(
        monras.passed && mkt.passed && monras.wall_time_s < limit && mkt.wall_time_s < limit,
        format!(
            "Monras EfficientSU2(RZ,RX) cost {:.2e} ({:.1}s), market RealAmplitudes cost {:.2e} ({:.1}s)",
            monras.checks[0].achieved, monras.wall_time_s, mkt.checks[0].achieved, mkt.wall_time_s
        ),
    )
}

fn c7_evolution() -> Outcome {
    let started = Instant::now();
    let seeds: Vec<u64> = (0..10).collect();
    let runs = planted_recovery(&seeds, 20, 100).map_err(|e| e.to_string())?;
    let recovered = runs.iter().filter(|r| r.recovered).count();
    let planted_time = started.elapsed().as_secs_f64();
    let opts = ReproduceOptions::default();
    let evo = reproduce(Experiment::MarketEvo, &opts).map_err(|e| e.to_string())?;
    check(
        recovered >= 6 && planted_time < 600.0 && evo.passed && evo.wall_time_s < 3600.0,
        format!(
            "planted recovered {recovered}/10 ({planted_time:.1}s); market divergence {:.2e} ({:.1}s)",
            evo.checks[0].achieved, evo.wall_time_s
        ),
    )
}

fn c8_landscape() -> Outcome {
    let (space, optimum) = learned_market(0).map_err(|e| e.to_string())?;
    let study = landscape_study(&space.unitary_spec(), &optimum, 2000, &[0.1], 5, WalkMode::Star, 0)
        .map_err(|e| e.to_string())?;
    let (corr, samples) = &study[0];
    let bound_ok = samples.iter().all(|s| s.bound_excess() <= 1e-9);
    let r = corr.pearson.unwrap_or(f64::NAN);
    check(
        bound_ok && samples.len() == 2000 && r > 0.3,
        format!("2000 samples, bound holds: {bound_ok}, max excess {:.1e}, Pearson r {r:.3}", corr.max_bound_excess),
    )
}

fn c9_properties() -> Outcome {
    let mut fails = Vec::new();
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            fails.push(what.to_string());
        }
    };
    expect(validate_cptp(&monras_channel()).complete, "Monras CPTP");
    expect(validate_cptp(&amplitude_damping(0.5)).complete, "AD CPTP");
    let bad = KrausChannel::from_operators(2, vec![ComplexMatrix::identity(2).scale_real(1.1)]);
    expect(bad.is_err() || !validate_cptp(&bad.unwrap()).complete, "non-CPTP rejected");
    let not_psd = ComplexMatrix::from_real_rows(&[vec![1.5, 0.0], vec![0.0, -0.5]]);
    expect(DensityOperator::new(not_psd).is_err(), "negative eigenvalue rejected");
    let not_unit = ComplexMatrix::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 0.4]]);
    expect(DensityOperator::new(not_unit).is_err(), "trace != 1 rejected");
    for ch in [monras_channel(), amplitude_damping(0.3)] {
        let ss = steady_state(&ch).unwrap();
        let res = apply(&ch, &ss.state).unwrap().matrix().max_abs_diff(ss.state.matrix());
        expect(res <= 1e-8, "steady-state residual");
    }
    for n in [2, 3, 4] {
        let ops: Vec<ComplexMatrix> = density_basis(n).into_iter().map(|d| d.into_matrix()).collect();
        expect(stacked_real_rank(&ops, 1e-9) == n * n, "density basis rank");
    }
    expect(acceptance_probability(-0.2, -0.2, 0.7) == 1.0, "accept equal");
    expect((acceptance_probability(-0.2, -0.3, 1.0) - 0.7408).abs() < 1e-4, "accept example");
    expect(temperature(0) == 1.0, "tau(0)");
    expect((temperature(100) - 0.1778).abs() < 1e-4, "tau(100)");
    let mut d = AdaptiveDistribution::uniform(vec![0, 1]);
    d.reward(0, 3.0);
    d.reward(1, 1.0);
    expect(bandit_update(&d, 0.0).probs == vec![0.75, 0.25], "bandit 3:1");
    expect(bandit_update(&AdaptiveDistribution::uniform(vec![0, 1, 2]), 0.5).probs == vec![1.0 / 3.0; 3], "bandit no reward");
    check(fails.is_empty(), if fails.is_empty() { "all closed-form checks green".into() } else { fails.join(", ") })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, f64); 9] = [
        ("1 amplitude damping Hankel exactness", c1_table2, 1.0),
        ("2 classical to quantum equivalence", c2_quantize, 10.0),
        ("3 Stinespring round trip", c3_stinespring, 30.0),
        ("4 Monras advantage and rank bound", c4_monras, 60.0),
        ("5 sampling consistency", c5_sampling, 30.0),
        ("6 ansatz learning", c6_ansatz, 600.0),
        ("7 evolutionary recovery", c7_evolution, 4200.0),
        ("8 landscape smoothness", c8_landscape, 600.0),
        ("9 property checks", c9_properties, 60.0),
    ];
    let mut failed = 0;
    for (name, f, limit) in criteria {
        let t = Instant::now();
        let out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match out {
            Ok(d) if secs <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {secs:.1}s, limit {limit}s")),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!("{} criterion {name}: {detail} [{secs:.2}s]", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of 9 passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
