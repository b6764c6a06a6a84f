//! Learning QHMMs from target distributions: fitness, Lamarckian parameter
//! fitting, the adaptive evolutionary search and ansatz training.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    mutate, random_gate, Circuit, GateSampler, GateSpec, GateType, MeasuredRegister, MutationType,
};
use crate::classical::pick;
use crate::error::{Error, Result};
use crate::language::{divergence_avg, empirical_estimate, DistributionTable, Sequence};
use crate::linalg::DensityOperator;
use crate::optimize::{self, OptOptions, OptimizerKind};
use crate::qhmm::{QhmmUnitary, ResetMode, UnitarySpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Ground,
    #[default]
    MaximallyMixed,
    /// Half of a maximally entangled pair; on the system alone this is `I/N`.
    MaximallyEntangled,
}

impl InitialState {
    pub fn density(self, n: usize) -> DensityOperator {
        match self {
            InitialState::Ground => DensityOperator::basis(n, 0),
            InitialState::MaximallyMixed | InitialState::MaximallyEntangled => DensityOperator::maximally_mixed(n),
        }
    }
}

/// Register sizes and readout shared by every hypothesis of a search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpace {
    pub n_state_qubits: usize,
    pub n_emission_qubits: usize,
    pub n_symbols: usize,
    pub rho0: InitialState,
    pub measured: MeasuredRegister,
    pub reset: ResetMode,
}

impl HypothesisSpace {
    pub fn new(n_state_qubits: usize, n_emission_qubits: usize, n_symbols: usize) -> Result<Self> {
        let s = Self {
            n_state_qubits,
            n_emission_qubits,
            n_symbols,
            rho0: InitialState::MaximallyMixed,
            measured: MeasuredRegister::Emission,
            reset: ResetMode::Reset,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_state_qubits == 0 || self.n_emission_qubits == 0 {
            return Err(Error::Config("need at least one state and one emission qubit".into()));
        }
        let readout = match self.measured {
            MeasuredRegister::Emission => self.dim_e(),
            MeasuredRegister::System => self.dim_s(),
        };
        if self.n_symbols == 0 || readout < self.n_symbols {
            return Err(Error::Config(format!(
                "{} symbols need at least {} readout outcomes, have {readout}",
                self.n_symbols, self.n_symbols
            )));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_state_qubits + self.n_emission_qubits
    }

    pub fn dim_s(&self) -> usize {
        1 << self.n_state_qubits
    }

    pub fn dim_e(&self) -> usize {
        1 << self.n_emission_qubits
    }

    /// Readout index `e` maps to symbol `e mod m`.
    pub fn unitary_spec(&self) -> UnitarySpec {
        let readout = match self.measured {
            MeasuredRegister::Emission => self.dim_e(),
            MeasuredRegister::System => self.dim_s(),
        };
        UnitarySpec {
            alphabet: (0..self.n_symbols).map(|i| i.to_string()).collect(),
            dim_s: self.dim_s(),
            dim_e: self.dim_e(),
            symbol_map: (0..readout).map(|e| e % self.n_symbols).collect(),
            rho0: self.rho0.density(self.dim_s()),
            e0: 0,
            reset: self.reset,
            measured: self.measured,
        }
    }

    pub fn model(&self, circuit: &Circuit) -> Result<QhmmUnitary> {
        QhmmUnitary::from_circuit(self.unitary_spec(), circuit.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityWeights {
    pub c_q: f64,
    pub c_e: f64,
}

impl Default for ComplexityWeights {
    fn default() -> Self {
        Self { c_q: 0.01, c_e: 0.01 }
    }
}

/// A target language (tables ordered by length) and the space searched for it.
#[derive(Clone, Debug)]
pub struct Problem {
    pub space: HypothesisSpace,
    pub target: Vec<DistributionTable>,
    pub weights: ComplexityWeights,
    /// Estimate hypothesis tables from this many sampled sequences instead
    /// of computing them exactly.
    pub shots: Option<usize>,
    /// Mixed into the per-circuit sampling seed.
    pub sample_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub circuit: Circuit,
    pub fitness: f64,
    pub divergence: f64,
}

impl Problem {
    pub fn new(space: HypothesisSpace, mut target: Vec<DistributionTable>, weights: ComplexityWeights) -> Result<Self> {
        space.validate()?;
        target.retain(|t| t.length() > 0);
        if target.is_empty() {
            return Err(Error::Empty("target has no tables of positive length".into()));
        }
        target.sort_by_key(|t| t.length());
        if let Some(t) = target.iter().find(|t| t.alphabet_size() != space.n_symbols) {
            return Err(Error::Config(format!(
                "target alphabet of {} symbols, space has {}",
                t.alphabet_size(),
                space.n_symbols
            )));
        }
        Ok(Self {
            space,
            target,
            weights,
            shots: None,
            sample_seed: 0,
        })
    }

    /// Switch to sampled tables. Each circuit gets a seed derived from its
    /// gates, so repeated evaluations agree.
    pub fn with_shots(mut self, shots: usize, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Config("fitness_shots must be positive".into()));
        }
        self.shots = Some(shots);
        self.sample_seed = seed;
        Ok(self)
    }

    pub fn max_length(&self) -> usize {
        self.target.last().map_or(0, |t| t.length())
    }

    /// Hypothesis tables at the target's lengths.
    pub fn hypothesis_tables(&self, circuit: &Circuit) -> Result<Vec<DistributionTable>> {
        let model = self.space.model(circuit)?;
        if let Some(shots) = self.shots {
            let mut h = DefaultHasher::new();
            format!("{circuit:?}").hash(&mut h);
            let seed = h.finish() ^ self.sample_seed;
            return self
                .target
                .iter()
                .map(|t| {
                    let seqs = model.simulate(t.length(), shots, seed.wrapping_add(t.length() as u64))?;
                    empirical_estimate(&seqs, self.space.n_symbols, t.length())
                })
                .collect();
        }
        let all = model.distributions_up_to(self.max_length())?;
        Ok(self.target.iter().map(|t| all[t.length()].clone()).collect())
    }

    /// Mean over target lengths of the largest per-sequence difference.
    pub fn divergence(&self, circuit: &Circuit) -> Result<f64> {
        divergence_avg(&self.target, &self.hypothesis_tables(circuit)?)
    }

    /// `c_q · (two-qubit gates) / C(qubits, 2) + c_e · M / N²`.
    pub fn complexity(&self, circuit: &Circuit) -> f64 {
        let nq = self.space.n_qubits();
        let pairs = nq * nq.saturating_sub(1) / 2;
        let cq = if pairs == 0 {
            0.0
        } else {
            circuit.two_qubit_count() as f64 / pairs as f64
        };
        let n = self.space.dim_s() as f64;
        self.weights.c_q * cq + self.weights.c_e * self.space.dim_e() as f64 / (n * n)
    }

    pub fn evaluate(&self, circuit: Circuit) -> Result<Hypothesis> {
        if circuit.n_free() > 0 {
            return Err(Error::UnboundParameter(0));
        }
        let divergence = self.divergence(&circuit)?;
        let fitness = -(divergence + self.complexity(&circuit));
        Ok(Hypothesis {
            circuit,
            fitness,
            divergence,
        })
    }
}

/// `F = −(Δ + C)`; always ≤ 0.
pub fn fitness(circuit: &Circuit, problem: &Problem) -> Result<f64> {
    Ok(problem.evaluate(circuit.clone())?.fitness)
}

/// Fit the circuit's angles and write the best ones back into it.
pub fn optimize_parameters(circuit: &Circuit, problem: &Problem, kind: OptimizerKind, budget: usize) -> Result<Hypothesis> {
    let x0 = circuit.values();
    let start = problem.evaluate(circuit.clone())?;
    if x0.is_empty() || budget <= 1 {
        return Ok(start);
    }
    let objective = |p: &[f64]| -> f64 {
        match circuit.with_values(p).and_then(|c| fitness(&c, problem)) {
            Ok(f) => -f,
            Err(_) => f64::INFINITY,
        }
    };
    let opts = OptOptions {
        budget,
        step: 0.5,
        ..OptOptions::default()
    };
    let r = optimize::run(kind, &objective, &x0, &opts);
    if r.best_value < -start.fitness {
        problem.evaluate(circuit.with_values(&r.best_params)?)
    } else {
        Ok(start)
    }
}

/// `τ(t) = (t^{3/2} + 1)^{−1/4}`.
pub fn temperature(t: usize) -> f64 {
    ((t as f64).powf(1.5) + 1.0).powf(-0.25)
}

/// Probability of keeping a child with fitness `f_new` instead of its parent.
pub fn acceptance_probability(f_old: f64, f_new: f64, tau: f64) -> f64 {
    if f_new >= f_old {
        return 1.0;
    }
    if f_old.abs() < 1e-12 || tau <= 0.0 {
        return 0.0;
    }
    ((0.6 / tau) * (f_old - f_new) / f_old).exp().clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionType {
    Fitness,
    Rank,
    Tournament,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurvivalType {
    Fitness,
    Rank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchType {
    /// Each accepted step continues from the new circuit.
    Depth,
    /// Every step starts from the input circuit.
    Breadth,
}

fn sort_desc(pop: &mut [Hypothesis]) {
    pop.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

fn shifted_fitness(pop: &[Hypothesis], s: f64) -> Vec<f64> {
    let min = pop.iter().map(|h| h.fitness).fold(f64::INFINITY, f64::min);
    pop.iter().map(|h| (h.fitness - min + 1e-9).powf(s)).collect()
}

/// Rank weights `(μ − i)^s` for ranks `i = 1..μ`; the last rank gets 0.
pub fn rank_selection_weights(mu: usize, s: f64) -> Vec<f64> {
    (1..=mu)
        .map(|i| if i == mu { 0.0 } else { ((mu - i) as f64).powf(s) })
        .collect()
}

fn normalize(w: &mut [f64]) {
    let t: f64 = w.iter().sum();
    if t > 0.0 && t.is_finite() {
        w.iter_mut().for_each(|x| *x /= t);
    } else {
        let n = w.len() as f64;
        w.iter_mut().for_each(|x| *x = 1.0 / n);
    }
}

/// Indices (into `pop` sorted best first) of `count` parents, drawn with replacement.
pub fn select_parents<R: Rng + ?Sized>(
    pop: &[Hypothesis],
    count: usize,
    method: SelectionType,
    s: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if pop.is_empty() {
        return Err(Error::Empty("population".into()));
    }
    let mu = pop.len();
    let mut w = match method {
        SelectionType::Rank if mu > 1 => rank_selection_weights(mu, s),
        SelectionType::Rank => vec![1.0],
        SelectionType::Fitness => shifted_fitness(pop, s),
        SelectionType::Tournament => {
            let k = ((4.0 * s).ceil() as usize).max(2);
            return Ok((0..count)
                .map(|_| {
                    (0..k)
                        .map(|_| rng.random_range(0..mu))
                        .min_by(|&a, &b| pop[b].fitness.total_cmp(&pop[a].fitness).then(a.cmp(&b)))
                        .expect("k >= 2")
                })
                .collect());
        }
    };
    normalize(&mut w);
    Ok((0..count).map(|_| pick(w.iter().copied(), rng.random())).collect())
}

/// Survival weights `1/(d_r + 1)` with `d_r = exp(s(r − pool))` for ranks `r = 1..pool`.
pub fn rank_survival_weights(pool: usize, s: f64) -> Vec<f64> {
    (1..=pool)
        .map(|r| 1.0 / ((s * (r as f64 - pool as f64)).exp() + 1.0))
        .collect()
}

/// Draw `mu` distinct survivors; the fittest always survives.
pub fn select_survivors<R: Rng + ?Sized>(
    mut pool: Vec<Hypothesis>,
    mu: usize,
    method: SurvivalType,
    s: f64,
    rng: &mut R,
) -> Result<Vec<Hypothesis>> {
    if pool.len() < mu {
        return Err(Error::Config(format!("pool of {} for {mu} survivors", pool.len())));
    }
    sort_desc(&mut pool);
    let mut w = match method {
        SurvivalType::Rank => rank_survival_weights(pool.len(), s),
        SurvivalType::Fitness => shifted_fitness(&pool, s),
    };
    let mut chosen = vec![false; pool.len()];
    let mut order = Vec::with_capacity(mu);
    if mu > 0 {
        chosen[0] = true;
        order.push(0);
        w[0] = 0.0;
    }
    while order.len() < mu {
        let mut probs = w.clone();
        normalize(&mut probs);
        let i = pick(probs.iter().copied(), rng.random());
        let i = if chosen[i] {
            chosen.iter().position(|c| !c).expect("pool >= mu")
        } else {
            i
        };
        chosen[i] = true;
        order.push(i);
        w[i] = 0.0;
    }
    order.sort_unstable();
    let mut pool: Vec<Option<Hypothesis>> = pool.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|i| pool[i].take().expect("distinct")).collect())
}

/// A categorical distribution adapted by bandit-style reward feedback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveDistribution<T> {
    pub domain: Vec<T>,
    pub probs: Vec<f64>,
    pub rewards: Vec<f64>,
}

impl<T: Clone> AdaptiveDistribution<T> {
    pub fn uniform(domain: Vec<T>) -> Self {
        let k = domain.len();
        Self {
            domain,
            probs: vec![1.0 / k as f64; k],
            rewards: vec![0.0; k],
        }
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick(self.probs.iter().copied(), rng.random())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, T) {
        let i = self.sample_index(rng);
        (i, self.domain[i].clone())
    }

    pub fn reward(&mut self, index: usize, amount: f64) {
        self.rewards[index] += amount.max(0.0);
    }
}

/// `p_i = γ/k + (1 − γ) r_i / Σ r`; uniform when no rewards were collected.
pub fn bandit_update<T: Clone>(d: &AdaptiveDistribution<T>, gamma: f64) -> AdaptiveDistribution<T> {
    let k = d.domain.len() as f64;
    let total: f64 = d.rewards.iter().sum();
    let probs = if total <= 0.0 {
        vec![1.0 / k; d.domain.len()]
    } else {
        d.rewards.iter().map(|r| gamma / k + (1.0 - gamma) * r / total).collect()
    };
    AdaptiveDistribution {
        domain: d.domain.clone(),
        probs,
        rewards: vec![0.0; d.domain.len()],
    }
}

/// Every adaptive distribution the search draws from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distributions {
    pub selection_type: AdaptiveDistribution<SelectionType>,
    pub selection_strength: AdaptiveDistribution<f64>,
    pub survival_type: AdaptiveDistribution<SurvivalType>,
    pub survival_strength: AdaptiveDistribution<f64>,
    pub gates: AdaptiveDistribution<GateType>,
    pub qubits: AdaptiveDistribution<usize>,
    pub local_search_len: AdaptiveDistribution<usize>,
    pub search_type: AdaptiveDistribution<SearchType>,
    pub mutation_rate: AdaptiveDistribution<f64>,
    pub mutation_type: AdaptiveDistribution<MutationType>,
    pub optimizer: AdaptiveDistribution<String>,
}

const STRENGTHS: [f64; 5] = [0.1, 0.2, 0.5, 0.7, 1.0];

impl Distributions {
    pub fn new(gate_set: &[GateType], n_qubits: usize, optimizers: &[String]) -> Self {
        Self {
            selection_type: AdaptiveDistribution::uniform(vec![
                SelectionType::Fitness,
                SelectionType::Rank,
                SelectionType::Tournament,
            ]),
            selection_strength: AdaptiveDistribution::uniform(STRENGTHS.to_vec()),
            survival_type: AdaptiveDistribution::uniform(vec![SurvivalType::Fitness, SurvivalType::Rank]),
            survival_strength: AdaptiveDistribution::uniform(STRENGTHS.to_vec()),
            gates: AdaptiveDistribution::uniform(gate_set.to_vec()),
            qubits: AdaptiveDistribution::uniform((0..n_qubits).collect()),
            local_search_len: AdaptiveDistribution::uniform((1..=10).collect()),
            search_type: AdaptiveDistribution::uniform(vec![SearchType::Depth, SearchType::Breadth]),
            mutation_rate: AdaptiveDistribution::uniform(vec![0.1, 0.2, 0.3, 0.4, 0.5]),
            mutation_type: AdaptiveDistribution::uniform(MutationType::ALL.to_vec()),
            optimizer: AdaptiveDistribution::uniform(optimizers.to_vec()),
        }
    }

    pub fn sampler(&self, n_qubits: usize) -> GateSampler {
        GateSampler {
            n_qubits,
            gates: self.gates.domain.clone(),
            gate_weights: self.gates.probs.clone(),
            qubit_weights: self.qubits.probs.clone(),
        }
    }

    fn update(&mut self, gamma: f64) {
        self.selection_type = bandit_update(&self.selection_type, gamma);
        self.selection_strength = bandit_update(&self.selection_strength, gamma);
        self.survival_type = bandit_update(&self.survival_type, gamma);
        self.survival_strength = bandit_update(&self.survival_strength, gamma);
        self.gates = bandit_update(&self.gates, gamma);
        self.qubits = bandit_update(&self.qubits, gamma);
        self.local_search_len = bandit_update(&self.local_search_len, gamma);
        self.search_type = bandit_update(&self.search_type, gamma);
        self.mutation_rate = bandit_update(&self.mutation_rate, gamma);
        self.mutation_type = bandit_update(&self.mutation_type, gamma);
        self.optimizer = bandit_update(&self.optimizer, gamma);
    }

    fn snapshot(&self) -> serde_json::Value {
        serde_json::json!({
            "selection_type": self.selection_type.probs,
            "selection_strength": self.selection_strength.probs,
            "survival_type": self.survival_type.probs,
            "survival_strength": self.survival_strength.probs,
            "gates": self.gates.probs,
            "qubits": self.qubits.probs,
            "local_search_len": self.local_search_len.probs,
            "search_type": self.search_type.probs,
            "mutation_rate": self.mutation_rate.probs,
            "mutation_type": self.mutation_type.probs,
            "optimizer": self.optimizer.probs,
        })
    }
}

/// Arms drawn while modifying one hypothesis; credited when the child beats its parent.
#[derive(Clone, Debug, Default)]
pub struct ArmUsage {
    gates: Vec<usize>,
    qubits: Vec<usize>,
    local_search_len: Vec<usize>,
    search_type: Vec<usize>,
    mutation_rate: Vec<usize>,
    mutation_type: Vec<usize>,
    optimizer: Vec<usize>,
}

impl ArmUsage {
    fn credit(&self, d: &mut Distributions) {
        for &i in &self.gates {
            d.gates.reward(i, 1.0);
        }
        for &i in &self.qubits {
            d.qubits.reward(i, 1.0);
        }
        for &i in &self.local_search_len {
            d.local_search_len.reward(i, 1.0);
        }
        for &i in &self.search_type {
            d.search_type.reward(i, 1.0);
        }
        for &i in &self.mutation_rate {
            d.mutation_rate.reward(i, 1.0);
        }
        for &i in &self.mutation_type {
            d.mutation_type.reward(i, 1.0);
        }
        for &i in &self.optimizer {
            d.optimizer.reward(i, 1.0);
        }
    }
}

/// Settings for one modification call.
#[derive(Clone, Debug)]
pub struct ModifyOptions {
    pub opt_budget: usize,
    /// Replaces the sampled mutation rate when set.
    pub forced_rate: Option<f64>,
}

/// Result of a modification: the hypothesis kept and how it was produced.
#[derive(Clone, Debug)]
pub struct Modification {
    pub hypothesis: Hypothesis,
    pub usage: ArmUsage,
    pub accepted_inferior: bool,
}

/// Local search around `hyp` with random per-position mutations, parameter
/// re-fitting after every step and temperature-controlled acceptance.
pub fn modify_hypothesis<R: Rng + ?Sized>(
    hyp: &Hypothesis,
    tau: f64,
    dists: &Distributions,
    problem: &Problem,
    opts: &ModifyOptions,
    rng: &mut R,
) -> Result<Modification> {
    let nq = problem.space.n_qubits();
    let sampler = dists.sampler(nq);
    let mut usage = ArmUsage::default();
    let (li, steps) = dists.local_search_len.sample(rng);
    usage.local_search_len.push(li);
    let mut best = hyp.clone();
    let mut current = hyp.clone();
    let mut last: Option<Hypothesis> = None;
    for _ in 0..steps {
        let (si, stype) = dists.search_type.sample(rng);
        let (ri, sampled_rate) = dists.mutation_rate.sample(rng);
        let rate = opts.forced_rate.unwrap_or(sampled_rate);
        let base = match stype {
            SearchType::Depth => &current,
            SearchType::Breadth => hyp,
        };
        let mut circuit = base.circuit.clone();
        let mut changed = false;
        let mut step_usage = ArmUsage::default();
        // descending so that inserts and deletes keep unvisited indices valid;
        // the extra slot at the end only admits insertion
        for pos in (0..=circuit.len()).rev() {
            if rng.random::<f64>() >= rate {
                continue;
            }
            let (mi, mtype) = dists.mutation_type.sample(rng);
            if pos == circuit.len() && mtype != MutationType::Ins {
                continue;
            }
            let (next, ok) = mutate(&circuit, pos, mtype, &sampler, rng);
            if !ok {
                continue;
            }
            changed = true;
            step_usage.mutation_type.push(mi);
            if mtype != MutationType::Dlt {
                let g: &GateSpec = &next.gates()[pos];
                if let Some(gi) = dists.gates.domain.iter().position(|x| *x == g.gate) {
                    step_usage.gates.push(gi);
                }
                step_usage.qubits.extend(g.qubits.iter().copied());
            }
            circuit = next;
        }
        if !changed {
            continue;
        }
        let (oi, label) = dists.optimizer.sample(rng);
        let kind = optimize::lookup(&label)?;
        let cand = optimize_parameters(&circuit, problem, kind, opts.opt_budget)?;
        step_usage.search_type.push(si);
        step_usage.mutation_rate.push(ri);
        step_usage.optimizer.push(oi);
        if cand.fitness > best.fitness {
            usage.gates.extend(step_usage.gates);
            usage.qubits.extend(step_usage.qubits);
            usage.search_type.extend(step_usage.search_type);
            usage.mutation_rate.extend(step_usage.mutation_rate);
            usage.mutation_type.extend(step_usage.mutation_type);
            usage.optimizer.extend(step_usage.optimizer);
            best = cand.clone();
        }
        if stype == SearchType::Depth
            && rng.random::<f64>() < acceptance_probability(current.fitness, cand.fitness, tau)
        {
            current = cand.clone();
        }
        last = Some(cand);
    }
    // final Accept: an inferior last candidate may replace the best one
    if let Some(c) = last {
        if c.fitness < best.fitness && rng.random::<f64>() < acceptance_probability(best.fitness, c.fitness, tau) {
            return Ok(Modification {
                hypothesis: c,
                usage,
                accepted_inferior: true,
            });
        }
    }
    Ok(Modification {
        hypothesis: best,
        usage,
        accepted_inferior: false,
    })
}

fn default_gate_set() -> Vec<GateType> {
    vec![GateType::X, GateType::Y, GateType::RX, GateType::RY, GateType::CX, GateType::CRY]
}

fn default_optimizers() -> Vec<String> {
    ["tnc", "cbla", "bfsg", "gc", "slsqp"].iter().map(|s| s.to_string()).collect()
}

/// Evolutionary search settings; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningConfig {
    pub mu: usize,
    pub lambda: usize,
    pub gate_set: Vec<GateType>,
    pub min_gates: usize,
    pub max_gates: usize,
    pub c_q: f64,
    pub c_e: f64,
    pub gamma: f64,
    pub prog_window: usize,
    pub g_max: usize,
    pub target_fitness: f64,
    /// Also stop once the best divergence falls to this value.
    pub target_divergence: Option<f64>,
    pub seed: u64,
    pub optimizers: Vec<String>,
    pub n_state_qubits: usize,
    pub n_emission_qubits: usize,
    pub rho0: InitialState,
    /// Evaluation budget of each parameter fit.
    pub opt_budget: usize,
    /// Longest target length used in the fitness.
    pub n_max: usize,
    /// Sampled instead of exact hypothesis tables when set.
    pub fitness_shots: Option<usize>,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            mu: 20,
            lambda: 20,
            gate_set: default_gate_set(),
            min_gates: 3,
            max_gates: 20,
            c_q: 0.01,
            c_e: 0.01,
            gamma: 0.1,
            prog_window: 10,
            g_max: 100,
            target_fitness: -0.001,
            target_divergence: None,
            seed: 0,
            optimizers: default_optimizers(),
            n_state_qubits: 1,
            n_emission_qubits: 1,
            rho0: InitialState::MaximallyMixed,
            opt_budget: 60,
            n_max: 7,
            fitness_shots: None,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu < 2 || self.lambda < 1 {
            return Err(Error::Config("need mu >= 2 and lambda >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma = {} outside [0, 1]", self.gamma)));
        }
        if self.min_gates > self.max_gates {
            return Err(Error::Config("min_gates > max_gates".into()));
        }
        if self.gate_set.is_empty() || self.optimizers.is_empty() {
            return Err(Error::Config("empty gate set or optimizer list".into()));
        }
        for o in &self.optimizers {
            optimize::lookup(o)?;
        }
        Ok(())
    }

    pub fn space(&self, n_symbols: usize) -> Result<HypothesisSpace> {
        let mut s = HypothesisSpace::new(self.n_state_qubits, self.n_emission_qubits, n_symbols)?;
        s.rho0 = self.rho0;
        Ok(s)
    }

    /// Problem over the target tables of lengths `1..=n_max`.
    pub fn problem(&self, target: &[DistributionTable]) -> Result<Problem> {
        let m = target
            .first()
            .map(|t| t.alphabet_size())
            .ok_or_else(|| Error::Empty("target".into()))?;
        let tables = target
            .iter()
            .filter(|t| t.length() >= 1 && t.length() <= self.n_max)
            .cloned()
            .collect();
        let problem = Problem::new(
            self.space(m)?,
            tables,
            ComplexityWeights {
                c_q: self.c_q,
                c_e: self.c_e,
            },
        )?;
        match self.fitness_shots {
            Some(n) => problem.with_shots(n, self.seed),
            None => Ok(problem),
        }
    }
}

/// Uniform gate count in `[min_gates, max_gates]`, random gates, then a parameter fit.
pub fn random_hypothesis<R: Rng + ?Sized>(
    problem: &Problem,
    sampler: &GateSampler,
    min_gates: usize,
    max_gates: usize,
    kind: OptimizerKind,
    budget: usize,
    rng: &mut R,
) -> Result<Hypothesis> {
    let n = rng.random_range(min_gates..=max_gates);
    let gates = (0..n).map(|_| random_gate(sampler, rng)).collect();
    let c = Circuit::new(problem.space.n_qubits(), gates)?;
    optimize_parameters(&c, problem, kind, budget)
}

/// Deterministic RNG for stream `(a, b)` of `seed`, independent of scheduling.
pub fn seed_ladder(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&a.to_le_bytes());
    key[16..24].copy_from_slice(&b.to_le_bytes());
    key[24..].copy_from_slice(b"qhmm-evo");
    ChaCha8Rng::from_seed(key)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_divergence: f64,
    pub temperature: f64,
    pub improved_children: usize,
    pub accepted_inferior: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearningReport {
    pub seed: u64,
    pub generations: Vec<GenerationStats>,
    pub distribution_trace: Vec<serde_json::Value>,
    /// Not serialized, so reports of equal runs are byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
    pub best: Hypothesis,
    pub space: HypothesisSpace,
}

impl LearningReport {
    pub fn write_trace_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for g in &self.generations {
            wtr.serialize(g).map_err(|e| Error::Parse(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// The evolutionary search: random initial population, then per generation
/// parent selection, parallel modification, survivor selection and bandit
/// updates, until the target fitness or the generation limit is reached.
pub fn evolve(problem: &Problem, cfg: &LearningConfig) -> Result<LearningReport> {
    cfg.validate()?;
    let started = Instant::now();
    let nq = problem.space.n_qubits();
    let mut dists = Distributions::new(&cfg.gate_set, nq, &cfg.optimizers);
    let modify_opts = ModifyOptions {
        opt_budget: cfg.opt_budget,
        forced_rate: None,
    };

    let sampler = dists.sampler(nq);
    let init: Result<Vec<Hypothesis>> = (0..cfg.mu)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed_ladder(cfg.seed, 0, i as u64);
            let label = &dists.optimizer.domain[dists.optimizer.sample_index(&mut rng)];
            let kind = optimize::lookup(label)?;
            random_hypothesis(problem, &sampler, cfg.min_gates, cfg.max_gates, kind, cfg.opt_budget, &mut rng)
        })
        .collect();
    let mut pop = init?;
    sort_desc(&mut pop);

    let done = |best: &Hypothesis| {
        best.fitness >= cfg.target_fitness || cfg.target_divergence.is_some_and(|d| best.divergence <= d)
    };
    let mut generations = Vec::new();
    let mut distribution_trace = vec![dists.snapshot()];
    let mut t = 0usize;
    let mut last_progress = 0usize;
    let mut best_so_far = pop[0].fitness;
    let mut g = 0;
    while g < cfg.g_max && !done(&pop[0]) {
        g += 1;
        let tau = temperature(t);
        let mut rng = seed_ladder(cfg.seed, g as u64, u64::MAX);
        let (sel_i, sel_t) = dists.selection_type.sample(&mut rng);
        let (sel_si, sel_s) = dists.selection_strength.sample(&mut rng);
        let parents = select_parents(&pop, cfg.lambda, sel_t, sel_s, &mut rng)?;

        let results: Result<Vec<Modification>> = parents
            .par_iter()
            .enumerate()
            .map(|(k, &p)| {
                let mut crng = seed_ladder(cfg.seed, g as u64, k as u64);
                modify_hypothesis(&pop[p], tau, &dists, problem, &modify_opts, &mut crng)
            })
            .collect();
        let results = results?;

        let mut improved = 0;
        let mut accepted_inferior = 0;
        let mut children = Vec::with_capacity(results.len());
        for (m, &p) in results.into_iter().zip(&parents) {
            if m.hypothesis.fitness > pop[p].fitness {
                improved += 1;
                m.usage.credit(&mut dists);
            }
            accepted_inferior += usize::from(m.accepted_inferior);
            children.push(m.hypothesis);
        }
        dists.selection_type.reward(sel_i, improved as f64);
        dists.selection_strength.reward(sel_si, improved as f64);

        let (sur_i, sur_t) = dists.survival_type.sample(&mut rng);
        let (sur_si, sur_s) = dists.survival_strength.sample(&mut rng);
        let mean_before = pop.iter().map(|h| h.fitness).sum::<f64>() / pop.len() as f64;
        let mut pool = std::mem::take(&mut pop);
        pool.extend(children);
        pop = select_survivors(pool, cfg.mu, sur_t, sur_s, &mut rng)?;
        sort_desc(&mut pop);
        let mean = pop.iter().map(|h| h.fitness).sum::<f64>() / pop.len() as f64;
        if mean > mean_before {
            dists.survival_type.reward(sur_i, 1.0);
            dists.survival_strength.reward(sur_si, 1.0);
        }
        dists.update(cfg.gamma);
        distribution_trace.push(dists.snapshot());

        if pop[0].fitness > best_so_far {
            best_so_far = pop[0].fitness;
            last_progress = g;
        }
        // stagnation re-heats the search
        if g - last_progress >= cfg.prog_window {
            t = 0;
            last_progress = g;
        } else {
            t += 1;
        }
        generations.push(GenerationStats {
            generation: g,
            best_fitness: pop[0].fitness,
            mean_fitness: mean,
            best_divergence: pop[0].divergence,
            temperature: tau,
            improved_children: improved,
            accepted_inferior,
        });
    }
    Ok(LearningReport {
        seed: cfg.seed,
        generations,
        distribution_trace,
        wall_time_s: started.elapsed().as_secs_f64(),
        best: pop.swap_remove(0),
        space: problem.space.clone(),
    })
}

/// `Σ_i |s_i| · (p_i − q_i)²` over aligned `(sequence, probability)` lists.
pub fn ansatz_cost(target: &[(Sequence, f64)], current: &[f64]) -> f64 {
    target
        .iter()
        .zip(current)
        .map(|((s, p), q)| s.len() as f64 * (p - q).powi(2))
        .sum()
}

/// Flatten tables into the `(sequence, probability)` list used by [`ansatz_cost`].
pub fn flatten_target(tables: &[DistributionTable]) -> Vec<(Sequence, f64)> {
    let mut out = Vec::new();
    for t in tables {
        for s in crate::language::enumerate_sequences(t.alphabet_size(), t.length()).unwrap_or_default() {
            let p = t.get(&s);
            out.push((s, p));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnsatzResult {
    pub params: Vec<f64>,
    pub cost: f64,
    pub evaluations: usize,
    /// Best cost after each optimizer iteration.
    pub trace: Vec<f64>,
    pub restart: usize,
}

/// Template circuit (free parameters, system qubits first) bound into a space.
#[derive(Clone, Debug)]
pub struct AnsatzProblem {
    pub template: Circuit,
    pub space: HypothesisSpace,
    pub target: Vec<(Sequence, f64)>,
}

impl AnsatzProblem {
    pub fn new(template: Circuit, space: HypothesisSpace, target: Vec<(Sequence, f64)>) -> Result<Self> {
        space.validate()?;
        if template.n_qubits() != space.n_qubits() {
            return Err(Error::Config(format!(
                "{}-qubit template for a {}-qubit space",
                template.n_qubits(),
                space.n_qubits()
            )));
        }
        Ok(Self { template, space, target })
    }

    fn max_len(&self) -> usize {
        self.target.iter().map(|(s, _)| s.len()).max().unwrap_or(0)
    }

    pub fn model(&self, params: &[f64]) -> Result<QhmmUnitary> {
        self.space.model(&self.template.bind(params)?)
    }

    pub fn current(&self, params: &[f64]) -> Result<Vec<f64>> {
        let tables = self.model(params)?.distributions_up_to(self.max_len())?;
        Ok(self.target.iter().map(|(s, _)| tables[s.len()].get(s)).collect())
    }

    pub fn cost(&self, params: &[f64]) -> Result<f64> {
        Ok(ansatz_cost(&self.target, &self.current(params)?))
    }
}

/// Minimize the ansatz cost from `x0`.
pub fn train_ansatz(problem: &AnsatzProblem, kind: OptimizerKind, x0: &[f64], budget: usize) -> Result<AnsatzResult> {
    let n = problem.template.n_free();
    if x0.len() != n {
        return Err(Error::Dimension(format!("{} initial values for {n} parameters", x0.len())));
    }
    let f = |p: &[f64]| problem.cost(p).unwrap_or(f64::INFINITY);
    let opts = OptOptions {
        budget,
        step: 0.5,
        ftol: 1e-14,
        ..OptOptions::default()
    };
    let r = optimize::run(kind, &f, x0, &opts);
    Ok(AnsatzResult {
        params: r.best_params,
        cost: r.best_value,
        evaluations: r.evaluations,
        trace: r.trace,
        restart: 0,
    })
}

/// Best of `restarts` runs from uniform random starts in `[0, 2π)`.
pub fn train_ansatz_restarts(
    problem: &AnsatzProblem,
    kind: OptimizerKind,
    restarts: usize,
    budget: usize,
    seed: u64,
) -> Result<(AnsatzResult, Vec<AnsatzResult>)> {
    let n = problem.template.n_free();
    let runs: Result<Vec<AnsatzResult>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = seed_ladder(seed, u64::MAX, k as u64);
            let x0: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
            let mut r = train_ansatz(problem, kind, &x0, budget)?;
            r.restart = k;
            Ok(r)
        })
        .collect();
    let runs = runs?;
    let best = runs
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .cloned()
        .expect("at least one restart");
    Ok((best, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{real_amplitudes, Entanglement};
    use crate::classical::{distribution, market};

    fn market_target(n: usize) -> Vec<DistributionTable> {
        let h = market();
        (1..=n).map(|t| distribution(&h, t).unwrap()).collect()
    }

    fn one_gate(g: GateType, q: &[usize], p: &[f64]) -> Circuit {
        Circuit::new(2, vec![GateSpec::new(g, q.to_vec(), p.to_vec())]).unwrap()
    }

    #[test]
    fn sampled_fitness_tracks_exact() {
        let cfg = LearningConfig {
            n_max: 3,
            ..Default::default()
        };
        let exact = cfg.problem(&market_target(3)).unwrap();
        let sampled = LearningConfig {
            fitness_shots: Some(20_000),
            ..cfg
        }
        .problem(&market_target(3))
        .unwrap();
        let c = one_gate(GateType::CRY, &[0, 1], &[1.1]);
        let a = exact.divergence(&c).unwrap();
        let b = sampled.divergence(&c).unwrap();
        assert!((a - b).abs() < 0.02, "{a} vs {b}");
        assert_eq!(b, sampled.divergence(&c).unwrap());
        assert!(exact.clone().with_shots(0, 1).is_err());
    }

    #[test]
    fn temperature_values() {
        assert_eq!(temperature(0), 1.0);
        assert!((temperature(1) - 2f64.powf(-0.25)).abs() < 1e-15);
        assert!((temperature(100) - 1001f64.powf(-0.25)).abs() < 1e-15);
        assert!((temperature(100) - 0.1778).abs() < 1e-4);
        assert!((1..50).all(|t| temperature(t) < temperature(t - 1)));
    }

    #[test]
    fn acceptance_values() {
        assert_eq!(acceptance_probability(-0.2, -0.2, 1.0), 1.0);
        assert!((acceptance_probability(-0.2, -0.3, 1.0) - (-0.3f64).exp()).abs() < 1e-12);
        assert!(acceptance_probability(-0.2, -0.3, 1e-6) < 1e-100);
        assert_eq!(acceptance_probability(-0.2, -0.1, 0.5), 1.0);
        assert_eq!(acceptance_probability(0.0, -0.1, 0.5), 0.0);
    }

    #[test]
    fn bandit_values() {
        let mut d = AdaptiveDistribution::uniform(vec!['a', 'b']);
        d.reward(0, 3.0);
        d.reward(1, 1.0);
        assert_eq!(bandit_update(&d, 0.0).probs, vec![0.75, 0.25]);
        assert_eq!(bandit_update(&d, 1.0).probs, vec![0.5, 0.5]);
        let e = bandit_update(&AdaptiveDistribution::uniform(vec![1, 2, 3, 4]), 0.3);
        assert_eq!(e.probs, vec![0.25; 4]);
        assert!(bandit_update(&d, 0.2).rewards.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn rank_weights() {
        let w = rank_selection_weights(2, 1.0);
        assert_eq!(w, vec![1.0, 0.0]);
        let w = rank_selection_weights(5, 0.0);
        assert_eq!(w, vec![1.0, 1.0, 1.0, 1.0, 0.0]);
        let s = rank_survival_weights(10, 0.0);
        assert!(s.iter().all(|x| *x == 0.5));
        let s = rank_survival_weights(10, 1.0);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    fn dummy_pop(fs: &[f64]) -> Vec<Hypothesis> {
        fs.iter()
            .map(|&f| Hypothesis {
                circuit: Circuit::empty(2),
                fitness: f,
                divergence: -f,
            })
            .collect()
    }

    #[test]
    fn parent_selection() {
        let mut rng = seed_ladder(1, 2, 3);
        let pop = dummy_pop(&[-0.1, -0.5]);
        let idx = select_parents(&pop, 100, SelectionType::Rank, 1.0, &mut rng).unwrap();
        assert!(idx.iter().all(|&i| i == 0));
        let idx = select_parents(&pop, 100, SelectionType::Tournament, 0.1, &mut rng).unwrap();
        assert!(idx.iter().filter(|&&i| i == 0).count() > 60);
        assert!(select_parents(&[], 1, SelectionType::Rank, 1.0, &mut rng).is_err());
    }

    #[test]
    fn survivors_keep_best() {
        let mut rng = seed_ladder(4, 5, 6);
        for _ in 0..50 {
            let pool = dummy_pop(&[-0.3, -0.01, -0.6, -0.2, -0.9, -0.4]);
            let s = select_survivors(pool, 3, SurvivalType::Rank, 0.5, &mut rng).unwrap();
            assert_eq!(s.len(), 3);
            assert!(s.iter().any(|h| h.fitness == -0.01));
        }
        assert!(select_survivors(dummy_pop(&[-1.0]), 2, SurvivalType::Rank, 0.5, &mut rng).is_err());
    }

    #[test]
    fn fitness_examples() {
        // RY(pi/2) on the emission qubit emits a fair coin every step
        let c = one_gate(GateType::RY, &[1], &[std::f64::consts::FRAC_PI_2]);
        let space = HypothesisSpace::new(1, 1, 2).unwrap();
        let target: Vec<_> = (1..=3)
            .map(|t| DistributionTable::from_fn(t, 2, |_| 0.5f64.powi(t as i32)).unwrap())
            .collect();
        let p = Problem::new(space.clone(), target.clone(), ComplexityWeights::default()).unwrap();
        let f = fitness(&c, &p).unwrap();
        assert!((f + 0.01 * 2.0 / 4.0).abs() < 1e-12);
        let p0 = Problem::new(space, target, ComplexityWeights { c_q: 0.0, c_e: 0.0 }).unwrap();
        assert!(fitness(&c, &p0).unwrap().abs() < 1e-12);

        let pm = Problem::new(HypothesisSpace::new(1, 1, 2).unwrap(), market_target(3), ComplexityWeights::default()).unwrap();
        assert!(fitness(&one_gate(GateType::X, &[0], &[]), &pm).unwrap() < 0.0);
    }

    #[test]
    fn parameter_fit_improves() {
        let space = HypothesisSpace::new(1, 1, 2).unwrap();
        let target: Vec<_> = (1..=2)
            .map(|t| DistributionTable::from_fn(t, 2, |_| 0.5f64.powi(t as i32)).unwrap())
            .collect();
        let p = Problem::new(space, target, ComplexityWeights::default()).unwrap();
        let c = one_gate(GateType::RY, &[1], &[0.3]);
        let before = fitness(&c, &p).unwrap();
        for (_, k) in optimize::registry() {
            let h = optimize_parameters(&c, &p, k, 200).unwrap();
            assert!(h.fitness >= before - 1e-12);
            assert!(h.divergence < 1e-3, "{k:?} {}", h.divergence);
            assert_eq!(h.circuit.values().len(), 1);
        }
        let h = optimize_parameters(&c, &p, OptimizerKind::NelderMead, 1).unwrap();
        assert_eq!(h.fitness, before);
    }

    #[test]
    fn modification_rules() {
        let p = Problem::new(HypothesisSpace::new(1, 1, 2).unwrap(), market_target(2), ComplexityWeights::default()).unwrap();
        let dists = Distributions::new(&default_gate_set(), 2, &default_optimizers());
        let hyp = p.evaluate(one_gate(GateType::RY, &[1], &[0.4])).unwrap();
        let mut rng = seed_ladder(9, 9, 9);
        let zero = ModifyOptions { opt_budget: 20, forced_rate: Some(0.0) };
        let m = modify_hypothesis(&hyp, 1.0, &dists, &p, &zero, &mut rng).unwrap();
        assert_eq!(m.hypothesis, hyp);

        let mut only_ins = dists.clone();
        only_ins.mutation_type = AdaptiveDistribution::uniform(vec![MutationType::Ins]);
        only_ins.local_search_len = AdaptiveDistribution::uniform(vec![1]);
        let empty = p.evaluate(Circuit::empty(2)).unwrap();
        let all = ModifyOptions { opt_budget: 20, forced_rate: Some(1.0) };
        let m = modify_hypothesis(&empty, 1e-9, &only_ins, &p, &all, &mut rng).unwrap();
        assert!(m.hypothesis.circuit.len() <= 1);
    }

    #[test]
    fn evolve_runs_and_is_reproducible() {
        let cfg = LearningConfig {
            mu: 4,
            lambda: 4,
            g_max: 3,
            max_gates: 4,
            opt_budget: 15,
            n_max: 3,
            seed: 7,
            ..LearningConfig::default()
        };
        let p = cfg.problem(&market_target(3)).unwrap();
        let a = evolve(&p, &cfg).unwrap();
        let b = evolve(&p, &cfg).unwrap();
        assert_eq!(a.best, b.best);
        assert!(a.generations.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
        assert!(a.best.fitness <= 0.0);

        let zero = LearningConfig { g_max: 0, ..cfg };
        let r = evolve(&p, &zero).unwrap();
        assert!(r.generations.is_empty());
    }

    #[test]
    fn ansatz_examples() {
        let t = vec![(vec![0, 1], 0.3)];
        assert_eq!(ansatz_cost(&t, &[0.3]), 0.0);
        assert!((ansatz_cost(&t, &[0.4]) - 0.02).abs() < 1e-15);

        let target = flatten_target(&market_target(2));
        let ap = AnsatzProblem::new(
            real_amplitudes(2, 1, Entanglement::Linear).unwrap(),
            HypothesisSpace::new(1, 1, 2).unwrap(),
            target,
        )
        .unwrap();
        let r = train_ansatz(&ap, OptimizerKind::NelderMead, &[0.1, 0.2], 400).unwrap();
        assert!(r.cost <= r.trace[0]);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));

        let fixed = AnsatzProblem::new(Circuit::empty(2), HypothesisSpace::new(1, 1, 2).unwrap(), vec![(vec![0], 1.0)]).unwrap();
        let r = train_ansatz(&fixed, OptimizerKind::NelderMead, &[], 100).unwrap();
        assert_eq!(r.evaluations, 1);
        assert!(r.cost.abs() < 1e-15);
    }
}
