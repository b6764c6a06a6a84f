//! Scripted reproductions and the fitness-landscape study.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{efficient_su2, real_amplitudes, Circuit, Entanglement, GateSpec, GateType, RotationPair};
use crate::classical::{self, ClassicalHmm};
use crate::error::{Error, Result};
use crate::language::{divergence_max, hankel, write_tables_csv, DistributionTable};
use crate::learning::{
    evolve, flatten_target, seed_ladder, train_ansatz_restarts, AnsatzProblem, HypothesisSpace, LearningConfig,
};
use crate::optimize::OptimizerKind;
use crate::qhmm::{amplitude_damping, monras, QhmmUnitary, UnitarySpec};

/// One point of a landscape walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSample {
    pub step: usize,
    /// Spectral norm `‖U* − U_t‖`.
    pub op_distance: f64,
    /// `Δ_n` for `n = 1..=max_len`.
    pub per_length: Vec<f64>,
}

impl LandscapeSample {
    /// `Δ_{≤n}`: mean of `Δ_1..Δ_n`.
    pub fn upto(&self, n: usize) -> f64 {
        let n = n.min(self.per_length.len());
        if n == 0 {
            return 0.0;
        }
        self.per_length[..n].iter().sum::<f64>() / n as f64
    }

    pub fn total(&self) -> f64 {
        self.upto(self.per_length.len())
    }

    /// Largest violation of `Δ_{≤n} / 2n ≤ ‖ΔU‖` over `n`; ≤ 0 when the bound holds.
    pub fn bound_excess(&self) -> f64 {
        (1..=self.per_length.len())
            .map(|n| self.upto(n) / (2.0 * n as f64) - self.op_distance)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkMode {
    /// Every sample is one mutation of the optimum.
    #[default]
    Star,
    /// Mutations accumulate along the walk.
    Chain,
}

impl FromStr for WalkMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "star" => Ok(Self::Star),
            "chain" => Ok(Self::Chain),
            _ => Err(Error::Config(format!("unknown walk mode '{s}'"))),
        }
    }
}

/// Sample the landscape around the optimum: each step adds Gaussian noise to
/// one parameter, `σ = frac·|value|` (or `frac·2π` at 0).
pub fn landscape_walk<R: Rng + ?Sized>(
    spec: &UnitarySpec,
    optimum: &Circuit,
    steps: usize,
    frac: f64,
    max_len: usize,
    mode: WalkMode,
    rng: &mut R,
) -> Result<Vec<LandscapeSample>> {
    let start = optimum.values();
    let mut values = start.clone();
    if values.is_empty() {
        return Err(Error::Config("landscape walk needs a parameterized circuit".into()));
    }
    let u_star = optimum.compile()?;
    let model = |c: &Circuit| QhmmUnitary::from_circuit(spec.clone(), c.clone());
    let reference = model(optimum)?.distributions_up_to(max_len)?;
    let mut out = Vec::with_capacity(steps);
    for step in 1..=steps {
        if mode == WalkMode::Star {
            values.copy_from_slice(&start);
        }
        let i = rng.random_range(0..values.len());
        let sigma = if values[i] == 0.0 { frac * TAU } else { frac * values[i].abs() };
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
            values[i] += normal.sample(rng);
        }
        let c = optimum.with_values(&values)?;
        let u = c.compile()?;
        let tables = model(&c)?.distributions_up_to(max_len)?;
        out.push(LandscapeSample {
            step,
            op_distance: (u_star.matrix() - u.matrix()).spectral_norm(),
            per_length: (1..=max_len).map(|t| divergence_max(&reference[t], &tables[t])).collect(),
        });
    }
    Ok(out)
}

/// Pearson correlation with sample covariance; `None` for fewer than two
/// points or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation between `Δ_{≤max}` and the operator distance.
pub fn landscape_correlation(samples: &[LandscapeSample]) -> Result<Option<f64>> {
    if samples.len() < 30 {
        return Err(Error::Config(format!("{} samples, need at least 30", samples.len())));
    }
    let x: Vec<f64> = samples.iter().map(|s| s.total()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.op_distance).collect();
    Ok(pearson(&x, &y))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateCorrelation {
    pub rate: f64,
    pub pearson: Option<f64>,
    pub max_bound_excess: f64,
}

/// One walk per mutation rate, run in parallel.
pub fn landscape_study(
    spec: &UnitarySpec,
    optimum: &Circuit,
    steps: usize,
    rates: &[f64],
    max_len: usize,
    mode: WalkMode,
    seed: u64,
) -> Result<Vec<(RateCorrelation, Vec<LandscapeSample>)>> {
    rates
        .par_iter()
        .enumerate()
        .map(|(k, &rate)| {
            let mut rng = seed_ladder(seed, 0x1a5d, k as u64);
            let samples = landscape_walk(spec, optimum, steps, rate, max_len, mode, &mut rng)?;
            let pearson = if samples.len() >= 30 {
                landscape_correlation(&samples)?
            } else {
                None
            };
            let max_bound_excess = samples
                .iter()
                .map(|s| s.bound_excess())
                .fold(f64::NEG_INFINITY, f64::max);
            Ok((
                RateCorrelation {
                    rate,
                    pearson,
                    max_bound_excess,
                },
                samples,
            ))
        })
        .collect()
}

/// Market model learned with the two-parameter ansatz, as the walk's optimum.
pub fn learned_market(seed: u64) -> Result<(HypothesisSpace, Circuit)> {
    let p = market_ansatz_problem(4)?;
    let (best, _) = train_ansatz_restarts(&p, OptimizerKind::NelderMead, 4, 2000, seed)?;
    Ok((p.space.clone(), p.template.bind(&best.params)?))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean `Δ_n` per length.
    pub mean: Vec<f64>,
}

/// Bin samples by operator distance over `[0, 1]`; empty bins are dropped.
pub fn bin_samples(samples: &[LandscapeSample], width: f64) -> Vec<Bin> {
    let n_bins = (1.0 / width).ceil() as usize;
    let len = samples.first().map_or(0, |s| s.per_length.len());
    let mut bins: Vec<Bin> = (0..n_bins)
        .map(|i| Bin {
            lo: i as f64 * width,
            hi: (i + 1) as f64 * width,
            count: 0,
            mean: vec![0.0; len],
        })
        .collect();
    for s in samples.iter().filter(|s| s.op_distance <= 1.0) {
        let b = &mut bins[((s.op_distance / width) as usize).min(n_bins - 1)];
        b.count += 1;
        for (m, d) in b.mean.iter_mut().zip(&s.per_length) {
            *m += d;
        }
    }
    bins.retain(|b| b.count > 0);
    for b in &mut bins {
        b.mean.iter_mut().for_each(|m| *m /= b.count as f64);
    }
    bins
}

pub fn write_samples_csv<W: std::io::Write>(samples: &[LandscapeSample], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let len = samples.first().map_or(0, |s| s.per_length.len());
    let mut header = vec!["step".to_string(), "op_distance".to_string()];
    header.extend((1..=len).map(|n| format!("delta_{n}")));
    header.push(format!("delta_le_{len}"));
    wtr.write_record(&header).map_err(|e| Error::Parse(e.to_string()))?;
    for s in samples {
        let mut rec = vec![s.step.to_string(), s.op_distance.to_string()];
        rec.extend(s.per_length.iter().map(|d| d.to_string()));
        rec.push(s.total().to_string());
        wtr.write_record(&rec).map_err(|e| Error::Parse(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Table2,
    MonrasAnsatz,
    MarketAnsatz,
    MarketEvo,
    GaussianEvo,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Self::Table2,
        Self::MonrasAnsatz,
        Self::MarketAnsatz,
        Self::MarketEvo,
        Self::GaussianEvo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Table2 => "table2",
            Self::MonrasAnsatz => "monras_ansatz",
            Self::MarketAnsatz => "market_ansatz",
            Self::MarketEvo => "market_evo",
            Self::GaussianEvo => "gaussian_evo",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub threshold: f64,
    pub achieved: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `achieved ≤ threshold`.
    fn at_most(name: impl Into<String>, achieved: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            threshold,
            achieved,
            pass: achieved <= threshold,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip)]
    pub wall_time_s: f64,
    pub details: serde_json::Value,
    /// File name → CSV contents.
    #[serde(skip)]
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub restarts: usize,
    pub ansatz_budget: usize,
    /// Seeds tried by the evolutionary experiments; stops at the first success.
    pub evo_seeds: usize,
    pub mu: usize,
    pub g_max: usize,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 10,
            ansatz_budget: 10_000,
            evo_seeds: 3,
            mu: 100,
            g_max: 400,
        }
    }
}

/// Hankel block of the amplitude-damping process over prefixes and suffixes
/// of length ≤ 2, rows and columns ordered `ε, 0, 1, 00, 01, 10, 11`.
pub const TABLE2: [[f64; 7]; 7] = [
    [1.0, 0.75, 0.25, 0.75, 0.0, 0.125, 0.125],
    [0.75, 0.75, 0.0, 0.75, 0.0, 0.0, 0.0],
    [0.25, 0.125, 0.125, 0.125, 0.0, 0.0625, 0.0625],
    [0.75, 0.75, 0.0, 0.75, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.125, 0.125, 0.0, 0.125, 0.0, 0.0, 0.0],
    [0.125, 0.0625, 0.0625, 0.0625, 0.0, 0.03125, 0.03125],
];

fn tables_csv(tables: &[DistributionTable]) -> Result<String> {
    let mut buf = Vec::new();
    write_tables_csv(tables, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

fn table2(report: &mut ExperimentReport) -> Result<()> {
    let q = amplitude_damping(PI / 2.0);
    let h = hankel(|s| q.sequence_probability(s).unwrap_or(f64::NAN), 2, 2, 2)?;
    let mut worst: f64 = 0.0;
    for (row, want) in h.values.iter().zip(TABLE2.iter()) {
        for (v, w) in row.iter().zip(want) {
            worst = worst.max((v - w).abs());
        }
    }
    report.checks.push(Check::at_most("max |H - table| over 49 entries", worst, 1e-12));
    let mut buf = Vec::new();
    h.write_csv(2, &mut buf)?;
    report
        .artifacts
        .insert("hankel.csv".into(), String::from_utf8(buf).expect("utf-8"));
    let ranks: Vec<usize> = (1..=4)
        .map(|l| hankel(|s| q.sequence_probability(s).unwrap_or(f64::NAN), 2, l, l).map(|h| h.rank(1e-7)))
        .collect::<Result<_>>()?;
    report.details = serde_json::json!({ "rank_by_max_length": ranks });
    Ok(())
}

/// Target of the ansatz experiments: all sequences of lengths `1..=max_len`.
pub fn monras_ansatz_problem(max_len: usize) -> Result<AnsatzProblem> {
    let m = monras();
    let tables = m.distributions_up_to(max_len)?[1..].to_vec();
    let space = HypothesisSpace::new(1, 2, 4)?;
    AnsatzProblem::new(
        efficient_su2(3, 3, Entanglement::Full, RotationPair::RzRx)?,
        space,
        flatten_target(&tables),
    )
}

pub fn market_ansatz_problem(max_len: usize) -> Result<AnsatzProblem> {
    let h = classical::market();
    let tables: Vec<_> = (1..=max_len).map(|t| classical::distribution(&h, t)).collect::<Result<_>>()?;
    AnsatzProblem::new(
        real_amplitudes(2, 1, Entanglement::Full)?,
        HypothesisSpace::new(1, 1, 2)?,
        flatten_target(&tables),
    )
}

fn ansatz(report: &mut ExperimentReport, p: &AnsatzProblem, threshold: f64, opts: &ReproduceOptions) -> Result<()> {
    let (best, runs) = train_ansatz_restarts(p, OptimizerKind::NelderMead, opts.restarts, opts.ansatz_budget, opts.seed)?;
    report
        .checks
        .push(Check::at_most(format!("best cost of {} restarts", runs.len()), best.cost, threshold));
    let mut csv = String::from("restart,iteration,cost\n");
    for r in &runs {
        for (i, c) in r.trace.iter().enumerate() {
            csv.push_str(&format!("{},{},{}\n", r.restart, i, c));
        }
    }
    report.artifacts.insert("training_curve.csv".into(), csv);
    let costs: Vec<f64> = runs.iter().map(|r| r.cost).collect();
    report.details = serde_json::json!({
        "best_params": best.params,
        "best_restart": best.restart,
        "costs": costs,
        "template": p.template,
    });
    Ok(())
}

fn evo(
    report: &mut ExperimentReport,
    h: &ClassicalHmm,
    mut cfg: LearningConfig,
    threshold: f64,
    opts: &ReproduceOptions,
) -> Result<()> {
    let target: Vec<_> = (1..=cfg.n_max).map(|t| classical::distribution(h, t)).collect::<Result<_>>()?;
    let problem = cfg.problem(&target)?;
    cfg.target_divergence = Some(threshold);
    let mut runs = Vec::new();
    let mut best_div = f64::INFINITY;
    for k in 0..opts.evo_seeds.max(1) {
        cfg.seed = opts.seed.wrapping_add(k as u64);
        let r = evolve(&problem, &cfg)?;
        best_div = best_div.min(r.best.divergence);
        let done = r.best.divergence <= threshold;
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf)?;
        report
            .artifacts
            .insert(format!("trace_seed{}.csv", cfg.seed), String::from_utf8(buf).expect("utf-8"));
        if let Ok(t) = problem.hypothesis_tables(&r.best.circuit) {
            report
                .artifacts
                .insert(format!("learned_seed{}.csv", cfg.seed), tables_csv(&t)?);
        }
        runs.push(serde_json::json!({
            "seed": cfg.seed,
            "generations": r.generations.len(),
            "divergence": r.best.divergence,
            "fitness": r.best.fitness,
            "circuit": r.best.circuit,
        }));
        if done {
            break;
        }
    }
    report.artifacts.insert("target.csv".into(), tables_csv(&target)?);
    report.checks.push(Check::at_most(
        format!("best divergence over lengths 1..={}", cfg.n_max),
        best_div,
        threshold,
    ));
    report.details = serde_json::json!({ "runs": runs });
    Ok(())
}

/// Run a named experiment and compare against its acceptance threshold.
pub fn reproduce(exp: Experiment, opts: &ReproduceOptions) -> Result<ExperimentReport> {
    let started = Instant::now();
    let mut report = ExperimentReport {
        name: exp.name().into(),
        checks: Vec::new(),
        passed: false,
        wall_time_s: 0.0,
        details: serde_json::Value::Null,
        artifacts: BTreeMap::new(),
    };
    match exp {
        Experiment::Table2 => table2(&mut report)?,
        Experiment::MonrasAnsatz => ansatz(&mut report, &monras_ansatz_problem(3)?, 1e-3, opts)?,
        Experiment::MarketAnsatz => ansatz(&mut report, &market_ansatz_problem(4)?, 1e-2, opts)?,
        Experiment::MarketEvo => {
            let cfg = LearningConfig {
                mu: opts.mu,
                lambda: opts.mu,
                g_max: opts.g_max,
                n_max: 5,
                ..LearningConfig::default()
            };
            evo(&mut report, &classical::market(), cfg, 0.01, opts)?
        }
        Experiment::GaussianEvo => {
            let mut gate_set = LearningConfig::default().gate_set;
            gate_set.push(GateType::P);
            let cfg = LearningConfig {
                mu: opts.mu,
                lambda: opts.mu,
                g_max: opts.g_max,
                n_max: 4,
                n_emission_qubits: 2,
                gate_set,
                ..LearningConfig::default()
            };
            evo(&mut report, &classical::gaussian4(), cfg, 0.01, opts)?
        }
    }
    report.passed = report.checks.iter().all(|c| c.pass);
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantedRun {
    pub seed: u64,
    pub planted: Circuit,
    pub divergence: f64,
    pub generations: usize,
    pub recovered: bool,
}

/// Evolve against the length-`1..=4` language of a hidden 1–2-gate circuit,
/// once per seed; success means divergence below `1e-3`.
pub fn planted_recovery(seeds: &[u64], mu: usize, g_max: usize) -> Result<Vec<PlantedRun>> {
    let space = HypothesisSpace::new(1, 1, 2)?;
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = seed_ladder(seed, 0x91a7, 0);
            let planted = planted_circuit(1 + (seed % 2) as usize, &mut rng)?;
            let target = space.model(&planted)?.distributions_up_to(4)?[1..].to_vec();
            let cfg = LearningConfig {
                mu,
                lambda: mu,
                g_max,
                n_max: 4,
                seed,
                target_divergence: Some(1e-3),
                ..LearningConfig::default()
            };
            let r = evolve(&cfg.problem(&target)?, &cfg)?;
            Ok(PlantedRun {
                seed,
                planted,
                divergence: r.best.divergence,
                generations: r.generations.len(),
                recovered: r.best.divergence < 1e-3,
            })
        })
        .collect()
}

/// A small hidden circuit whose language the evolutionary search should recover.
pub fn planted_circuit<R: Rng + ?Sized>(gates: usize, rng: &mut R) -> Result<Circuit> {
    let mut c = Circuit::empty(2);
    c.push(GateSpec::new(GateType::CRY, vec![0, 1], vec![rng.random_range(0.3..TAU - 0.3)]))?;
    if gates > 1 {
        c.push(GateSpec::new(GateType::RY, vec![0], vec![rng.random_range(0.3..TAU - 0.3)]))?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_cases() {
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&x, &vec![1.0; 50]), None);
        assert_eq!(pearson(&[1.0], &[2.0]), None);

        let mut rng = seed_ladder(3, 1, 4);
        let a: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        assert!(pearson(&a, &b).unwrap().abs() < 0.2);
    }

    #[test]
    fn walk_edges() {
        let space = HypothesisSpace::new(1, 1, 2).unwrap();
        let c = real_amplitudes(2, 1, Entanglement::Full).unwrap().bind(&[0.4, 1.1, 0.2, 2.0]).unwrap();
        let mut rng = seed_ladder(0, 0, 0);
        assert!(landscape_walk(&space.unitary_spec(), &c, 0, 0.1, 3, WalkMode::Chain, &mut rng).unwrap().is_empty());
        let still = landscape_walk(&space.unitary_spec(), &c, 5, 0.0, 3, WalkMode::Chain, &mut rng).unwrap();
        assert!(still.iter().all(|s| s.op_distance == 0.0 && s.total() == 0.0));
        let moved = landscape_walk(&space.unitary_spec(), &c, 40, 0.1, 3, WalkMode::Chain, &mut rng).unwrap();
        assert!(moved.iter().all(|s| s.bound_excess() <= 1e-9));
        assert!(landscape_correlation(&moved[..10]).is_err());
        assert!(landscape_walk(&space.unitary_spec(), &Circuit::empty(2), 3, 0.1, 3, WalkMode::Star, &mut rng).is_err());
    }

    #[test]
    fn bins() {
        let s = |d: f64, v: f64| LandscapeSample {
            step: 0,
            op_distance: d,
            per_length: vec![v, 2.0 * v],
        };
        let b = bin_samples(&[s(0.01, 1.0), s(0.02, 3.0), s(0.5, 1.0), s(1.5, 9.0)], 0.05);
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].count, 2);
        assert_eq!(b[0].mean, vec![2.0, 4.0]);
    }

    #[test]
    fn table2_reproduces() {
        let r = reproduce(Experiment::Table2, &ReproduceOptions::default()).unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert!(r.artifacts.contains_key("hankel.csv"));
        assert_eq!("market-evo".parse::<Experiment>().unwrap(), Experiment::MarketEvo);
        assert!("nope".parse::<Experiment>().is_err());
    }
}
