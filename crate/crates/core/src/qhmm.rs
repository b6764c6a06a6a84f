//! Quantum hidden Markov models in Kraus form and in unitary form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{self, kraus_from_unitary, stinespring_dilate, KrausChannel, KrausGroup};
use crate::circuits::{amplitude_damping_circuit, Circuit, MeasuredRegister};
use crate::classical::{self, observable_operators, pick, ClassicalHmm};
use crate::error::{Error, Result};
use crate::language::{table_size, DistributionTable, Sequence};
use crate::linalg::{eig_hermitian, tensor_product, ComplexMatrix, DensityOperator, UnitaryOperator, C64};

/// Branches whose unnormalized trace falls below this are dropped from exact
/// enumerations.
pub const PRUNE_TOL: f64 = 1e-15;

/// Longest exact table for binary alphabets; larger alphabets are bounded by
/// the table budget.
pub const MAX_TABLE_LENGTH: usize = 12;

/// A QHMM as a symbol-labelled Kraus channel and an initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct QhmmKraus {
    channel: KrausChannel,
    rho0: DensityOperator,
}

impl QhmmKraus {
    pub fn new(channel: KrausChannel, rho0: DensityOperator) -> Result<Self> {
        let rep = channels::validate_cptp(&channel);
        if !rep.complete {
            return Err(Error::NotTracePreserving(rep.max_violation));
        }
        if rho0.dim() != channel.dim() {
            return Err(Error::Dimension(format!(
                "rho0 dim {} vs channel dim {}",
                rho0.dim(),
                channel.dim()
            )));
        }
        Ok(Self { channel, rho0 })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn rho0(&self) -> &DensityOperator {
        &self.rho0
    }

    pub fn alphabet(&self) -> Vec<String> {
        self.channel.alphabet()
    }

    pub fn n_symbols(&self) -> usize {
        self.channel.groups().len()
    }

    pub fn dim(&self) -> usize {
        self.channel.dim()
    }

    pub fn sequence_probability(&self, seq: &[usize]) -> Result<f64> {
        let m = self.n_symbols();
        if let Some(s) = seq.iter().find(|&&s| s >= m) {
            return Err(Error::UnknownSymbol(s.to_string()));
        }
        let mut rho = self.rho0.matrix().clone();
        for &a in seq {
            rho = self.channel.apply_symbol(a, &rho);
        }
        Ok(rho.trace().re.clamp(0.0, 1.0))
    }

    pub fn distribution(&self, t: usize) -> Result<DistributionTable> {
        Ok(self.distributions_up_to(t)?.pop().expect("t+1 tables"))
    }

    /// Tables for lengths `0..=t` from a single branch recursion.
    pub fn distributions_up_to(&self, t: usize) -> Result<Vec<DistributionTable>> {
        let m = self.n_symbols();
        check_length(m, t)?;
        let mut tables: Vec<DistributionTable> = (0..=t).map(|l| DistributionTable::new(l, m)).collect();
        let mut prefix = Vec::with_capacity(t);
        branch_recursion(
            self.rho0.matrix().clone(),
            t,
            m,
            &mut prefix,
            &mut |prefix, p| tables[prefix.len()].insert(prefix.to_vec(), p),
            &|a, rho| self.channel.apply_symbol(a, rho),
        )?;
        Ok(tables)
    }

    /// Fixed point of the symbol-summed channel.
    pub fn steady_state(&self) -> Result<channels::SteadyState> {
        channels::steady_state(&self.channel)
    }
}

fn check_length(m: usize, t: usize) -> Result<()> {
    if m <= 2 && t > MAX_TABLE_LENGTH {
        return Err(Error::TooLarge(format!("t = {t} exceeds {MAX_TABLE_LENGTH}")));
    }
    table_size(m, t).map(|_| ())
}

/// Depth-first walk over all sequences up to length `t`, reusing each
/// unnormalized branch state for its children.
fn branch_recursion(
    rho: ComplexMatrix,
    t: usize,
    m: usize,
    prefix: &mut Sequence,
    record: &mut dyn FnMut(&[usize], f64) -> Result<()>,
    step: &dyn Fn(usize, &ComplexMatrix) -> ComplexMatrix,
) -> Result<()> {
    let p = rho.trace().re.clamp(0.0, 1.0);
    record(prefix, p)?;
    if prefix.len() == t || p < PRUNE_TOL {
        return Ok(());
    }
    for a in 0..m {
        let child = step(a, &rho);
        prefix.push(a);
        branch_recursion(child, t, m, prefix, record, step)?;
        prefix.pop();
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResetMode {
    /// Emission register returned to `|e0⟩` after every step.
    #[default]
    Reset,
    /// Emission register carried to the next step.
    Carry,
}

/// A QHMM as a unitary on `H_S ⊗ H_E` followed by a projective readout.
///
/// With [`MeasuredRegister::Emission`] the symbol map partitions the
/// emission basis `{0..M}`; with [`MeasuredRegister::System`] it partitions
/// the system basis and the emission register is discarded (reset) or kept.
#[derive(Clone, Debug, PartialEq)]
pub struct QhmmUnitary {
    alphabet: Vec<String>,
    dim_s: usize,
    dim_e: usize,
    unitary: UnitaryOperator,
    circuit: Option<Circuit>,
    symbol_map: Vec<usize>,
    rho0: DensityOperator,
    e0: usize,
    reset: ResetMode,
    measured: MeasuredRegister,
}

/// Builder-style inputs for [`QhmmUnitary::new`].
#[derive(Clone, Debug)]
pub struct UnitarySpec {
    pub alphabet: Vec<String>,
    pub dim_s: usize,
    pub dim_e: usize,
    pub symbol_map: Vec<usize>,
    pub rho0: DensityOperator,
    pub e0: usize,
    pub reset: ResetMode,
    pub measured: MeasuredRegister,
}

impl UnitarySpec {
    /// Measure-and-reset the emission register, symbols `"0".."m-1"` with
    /// emission index `e` mapped to symbol `e mod m`.
    pub fn standard(dim_s: usize, dim_e: usize, m: usize, rho0: DensityOperator) -> Self {
        Self {
            alphabet: (0..m).map(|i| i.to_string()).collect(),
            dim_s,
            dim_e,
            symbol_map: (0..dim_e).map(|e| e % m.max(1)).collect(),
            rho0,
            e0: 0,
            reset: ResetMode::Reset,
            measured: MeasuredRegister::Emission,
        }
    }
}

impl QhmmUnitary {
    pub fn new(spec: UnitarySpec, unitary: UnitaryOperator) -> Result<Self> {
        let UnitarySpec {
            alphabet,
            dim_s,
            dim_e,
            symbol_map,
            rho0,
            e0,
            reset,
            measured,
        } = spec;
        let m = alphabet.len();
        if m == 0 {
            return Err(Error::InvalidModel("empty alphabet".into()));
        }
        if unitary.dim() != dim_s * dim_e {
            return Err(Error::Dimension(format!(
                "unitary dim {} != {dim_s}*{dim_e}",
                unitary.dim()
            )));
        }
        if rho0.dim() != dim_s {
            return Err(Error::Dimension(format!("rho0 dim {} != {dim_s}", rho0.dim())));
        }
        if e0 >= dim_e {
            return Err(Error::Dimension(format!("e0 = {e0} >= {dim_e}")));
        }
        let readout = match measured {
            MeasuredRegister::Emission => dim_e,
            MeasuredRegister::System => dim_s,
        };
        if symbol_map.len() != readout {
            return Err(Error::InvalidModel(format!(
                "symbol map has {} entries for a {readout}-outcome readout",
                symbol_map.len()
            )));
        }
        let mut used = vec![false; m];
        for &a in &symbol_map {
            if a >= m {
                return Err(Error::UnknownSymbol(a.to_string()));
            }
            used[a] = true;
        }
        if let Some(a) = used.iter().position(|u| !u) {
            return Err(Error::InvalidModel(format!("symbol '{}' has no outcome class", alphabet[a])));
        }
        Ok(Self {
            alphabet,
            dim_s,
            dim_e,
            unitary,
            circuit: None,
            symbol_map,
            rho0,
            e0,
            reset,
            measured,
        })
    }

    /// Compile `circuit` (system qubits first) and keep it for serialization.
    pub fn from_circuit(spec: UnitarySpec, circuit: Circuit) -> Result<Self> {
        if circuit.dim() != spec.dim_s * spec.dim_e {
            return Err(Error::Dimension(format!(
                "{}-qubit circuit for dims {}x{}",
                circuit.n_qubits(),
                spec.dim_s,
                spec.dim_e
            )));
        }
        let u = circuit.compile()?;
        let mut q = Self::new(spec, u)?;
        q.circuit = Some(circuit);
        Ok(q)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn n_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn unitary(&self) -> &UnitaryOperator {
        &self.unitary
    }

    pub fn circuit(&self) -> Option<&Circuit> {
        self.circuit.as_ref()
    }

    pub fn symbol_map(&self) -> &[usize] {
        &self.symbol_map
    }

    pub fn rho0(&self) -> &DensityOperator {
        &self.rho0
    }

    pub fn e0(&self) -> usize {
        self.e0
    }

    pub fn reset_mode(&self) -> ResetMode {
        self.reset
    }

    pub fn measured(&self) -> MeasuredRegister {
        self.measured
    }

    pub fn spec(&self) -> UnitarySpec {
        UnitarySpec {
            alphabet: self.alphabet.clone(),
            dim_s: self.dim_s,
            dim_e: self.dim_e,
            symbol_map: self.symbol_map.clone(),
            rho0: self.rho0.clone(),
            e0: self.e0,
            reset: self.reset,
            measured: self.measured,
        }
    }

    /// The stationary Kraus family of a resetting model.
    pub fn to_kraus(&self) -> Result<QhmmKraus> {
        if self.reset == ResetMode::Carry {
            return Err(Error::CarriedEmission);
        }
        let ks = kraus_from_unitary(&self.unitary, self.dim_s, self.dim_e, self.e0)?;
        let mut groups: Vec<KrausGroup> = self
            .alphabet
            .iter()
            .map(|a| KrausGroup {
                symbol: a.clone(),
                operators: Vec::new(),
            })
            .collect();
        match self.measured {
            MeasuredRegister::Emission => {
                for (e, k) in ks.into_iter().enumerate() {
                    groups[self.symbol_map[e]].operators.push(k);
                }
            }
            MeasuredRegister::System => {
                for (s, &a) in self.symbol_map.iter().enumerate() {
                    for k in &ks {
                        // |s><s| K
                        let mut pk = ComplexMatrix::zeros(self.dim_s, self.dim_s);
                        for j in 0..self.dim_s {
                            pk[(s, j)] = k[(s, j)];
                        }
                        groups[a].operators.push(pk);
                    }
                }
            }
        }
        QhmmKraus::new(KrausChannel::new(self.dim_s, groups)?, self.rho0.clone())
    }

    /// Dilate a Kraus-form model; operator `k` (in group order) is attached to
    /// emission index `k`, unused indices join the last symbol.
    pub fn from_kraus(q: &QhmmKraus, dim_e: usize) -> Result<Self> {
        let u = stinespring_dilate(q.channel(), dim_e, 0)?;
        let mut symbol_map = Vec::with_capacity(dim_e);
        for (a, g) in q.channel().groups().iter().enumerate() {
            symbol_map.extend(std::iter::repeat_n(a, g.operators.len()));
        }
        let last = q.n_symbols() - 1;
        symbol_map.resize(dim_e, last);
        Self::new(
            UnitarySpec {
                alphabet: q.alphabet(),
                dim_s: q.dim(),
                dim_e,
                symbol_map,
                rho0: q.rho0().clone(),
                e0: 0,
                reset: ResetMode::Reset,
                measured: MeasuredRegister::Emission,
            },
            u,
        )
    }

    fn readout_index(&self, composite: usize) -> usize {
        match self.measured {
            MeasuredRegister::Emission => composite % self.dim_e,
            MeasuredRegister::System => composite / self.dim_e,
        }
    }

    /// One step on the composite state for symbol `a`: evolve, dephase in the
    /// readout basis restricted to the class of `a`, then reset if requested.
    fn composite_step(&self, a: usize, sigma: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim_s * self.dim_e;
        let u = self.unitary.matrix();
        let evolved = u.sandwich(sigma);
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            let ri = self.readout_index(i);
            if self.symbol_map[ri] != a {
                continue;
            }
            for j in 0..d {
                if self.readout_index(j) == ri {
                    out[(i, j)] = evolved[(i, j)];
                }
            }
        }
        if self.reset == ResetMode::Carry {
            return out;
        }
        let m = self.dim_e;
        let mut reset = ComplexMatrix::zeros(d, d);
        for s in 0..self.dim_s {
            for s2 in 0..self.dim_s {
                let v: C64 = (0..m).map(|e| out[(s * m + e, s2 * m + e)]).sum();
                reset[(s * m + self.e0, s2 * m + self.e0)] = v;
            }
        }
        reset
    }

    fn initial_composite(&self) -> ComplexMatrix {
        let mut e = ComplexMatrix::zeros(self.dim_e, self.dim_e);
        e[(self.e0, self.e0)] = C64::new(1.0, 0.0);
        tensor_product(self.rho0.matrix(), &e)
    }

    /// Exact probability computed on the full system ⊗ emission space.
    pub fn sequence_probability(&self, seq: &[usize]) -> Result<f64> {
        if let Some(s) = seq.iter().find(|&&s| s >= self.n_symbols()) {
            return Err(Error::UnknownSymbol(s.to_string()));
        }
        let mut sigma = self.initial_composite();
        for &a in seq {
            sigma = self.composite_step(a, &sigma);
        }
        Ok(sigma.trace().re.clamp(0.0, 1.0))
    }

    pub fn distribution(&self, t: usize) -> Result<DistributionTable> {
        Ok(self.distributions_up_to(t)?.pop().expect("t+1 tables"))
    }

    /// Exact tables for lengths `0..=t`. Resetting models go through their
    /// Kraus form; carrying models recurse on the composite space.
    pub fn distributions_up_to(&self, t: usize) -> Result<Vec<DistributionTable>> {
        if self.reset == ResetMode::Reset {
            return self.to_kraus()?.distributions_up_to(t);
        }
        self.composite_distributions_up_to(t)
    }

    pub fn composite_distributions_up_to(&self, t: usize) -> Result<Vec<DistributionTable>> {
        let m = self.n_symbols();
        check_length(m, t)?;
        let mut tables: Vec<DistributionTable> = (0..=t).map(|l| DistributionTable::new(l, m)).collect();
        let mut prefix = Vec::with_capacity(t);
        branch_recursion(
            self.initial_composite(),
            t,
            m,
            &mut prefix,
            &mut |prefix, p| tables[prefix.len()].insert(prefix.to_vec(), p),
            &|a, s| self.composite_step(a, s),
        )?;
        Ok(tables)
    }

    /// Trajectory sampling of `shots` independent length-`t` runs.
    ///
    /// Each shot draws a pure state from the eigen-ensemble of `rho0`, then
    /// repeats: apply `U`, measure the readout register, record its symbol
    /// and, in reset mode, measure (unrecorded) and reset the emission
    /// register. Shot `k` uses ChaCha stream `k` of `seed`, so results do not
    /// depend on the thread count.
    pub fn simulate(&self, t: usize, shots: usize, seed: u64) -> Result<Vec<Sequence>> {
        let (vals, vecs) = eig_hermitian(self.rho0.matrix())?;
        let weights: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let kets: Vec<Vec<C64>> = (0..self.dim_s).map(|k| vecs.column(k)).collect();
        let out = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(shot as u64);
                let ket = &kets[pick(weights.iter().copied(), rng.random())];
                self.shot(ket, t, &mut rng)
            })
            .collect();
        Ok(out)
    }

    fn shot(&self, ket: &[C64], t: usize, rng: &mut ChaCha8Rng) -> Sequence {
        let m = self.dim_e;
        let d = self.dim_s * m;
        let mut psi = vec![C64::new(0.0, 0.0); d];
        for s in 0..self.dim_s {
            psi[s * m + self.e0] = ket[s];
        }
        let u = self.unitary.matrix();
        let mut next = vec![C64::new(0.0, 0.0); d];
        let mut seq = Vec::with_capacity(t);
        for _ in 0..t {
            for (i, n) in next.iter_mut().enumerate() {
                *n = (0..d).map(|j| u[(i, j)] * psi[j]).sum();
            }
            std::mem::swap(&mut psi, &mut next);
            let readout = match self.measured {
                MeasuredRegister::Emission => collapse(&mut psi, m, |i| i % m, rng),
                MeasuredRegister::System => collapse(&mut psi, self.dim_s, |i| i / m, rng),
            };
            seq.push(self.symbol_map[readout]);
            if self.reset == ResetMode::Reset {
                let e = match self.measured {
                    MeasuredRegister::Emission => readout,
                    MeasuredRegister::System => collapse(&mut psi, m, |i| i % m, rng),
                };
                if e != self.e0 {
                    for s in 0..self.dim_s {
                        psi[s * m + self.e0] = psi[s * m + e];
                        psi[s * m + e] = C64::new(0.0, 0.0);
                    }
                }
            }
        }
        seq
    }
}

/// Projectively measure the register selected by `index_of`, renormalize,
/// and return the outcome.
fn collapse(psi: &mut [C64], outcomes: usize, index_of: impl Fn(usize) -> usize, rng: &mut ChaCha8Rng) -> usize {
    let mut probs = vec![0.0; outcomes];
    for (i, a) in psi.iter().enumerate() {
        probs[index_of(i)] += a.norm_sqr();
    }
    let total: f64 = probs.iter().sum();
    let r = pick(probs.iter().map(|p| p / total), rng.random());
    let norm = probs[r].sqrt();
    for (i, a) in psi.iter_mut().enumerate() {
        if index_of(i) == r {
            *a /= norm;
        } else {
            *a = C64::new(0.0, 0.0);
        }
    }
    r
}

/// Quantum model with the same sequence distribution as `h`: Kraus operators
/// `sqrt(T_a[i][j]) |i⟩⟨j|` for every positive entry and `rho0 = diag(x0)`.
pub fn quantize_classical(h: &ClassicalHmm) -> Result<QhmmKraus> {
    let n = h.n_states();
    let ops = observable_operators(h);
    let groups = h
        .alphabet()
        .iter()
        .zip(&ops.operators)
        .map(|(sym, t)| {
            let mut operators = Vec::new();
            for (i, row) in t.iter().enumerate() {
                for (j, &o) in row.iter().enumerate() {
                    if o > 0.0 {
                        let mut k = ComplexMatrix::zeros(n, n);
                        k[(i, j)] = C64::new(o.sqrt(), 0.0);
                        operators.push(k);
                    }
                }
            }
            KrausGroup {
                symbol: sym.clone(),
                operators,
            }
        })
        .collect();
    QhmmKraus::new(KrausChannel::new(n, groups)?, DensityOperator::diagonal(h.x0())?)
}

/// The one-qubit, four-symbol model whose Kraus operators are the weighted
/// projectors onto `|0⟩, |1⟩, |+⟩, |−⟩`, started from `I/2`.
pub fn monras() -> QhmmKraus {
    QhmmKraus::new(channels::monras_channel(), DensityOperator::maximally_mixed(2)).expect("valid")
}

/// Unitary form of the amplitude-damping circuit: prep `H|0⟩`, system qubit
/// measured, ancilla reset each step.
pub fn amplitude_damping(theta: f64) -> QhmmUnitary {
    let ad = amplitude_damping_circuit(theta);
    let prep = ad.prep.compile().expect("bound");
    let ket = prep.matrix().column(0);
    let spec = UnitarySpec {
        alphabet: vec!["0".into(), "1".into()],
        dim_s: 2,
        dim_e: 2,
        symbol_map: vec![0, 1],
        rho0: DensityOperator::pure(&ket).expect("normalized"),
        e0: 0,
        reset: ResetMode::Reset,
        measured: ad.measured,
    };
    QhmmUnitary::from_circuit(spec, ad.step).expect("valid")
}

/// Any model that assigns probabilities to sequences.
#[derive(Clone, Debug)]
pub enum Model {
    Classical(ClassicalHmm),
    Kraus(QhmmKraus),
    Unitary(QhmmUnitary),
}

impl Model {
    pub fn n_symbols(&self) -> usize {
        match self {
            Model::Classical(h) => h.n_symbols(),
            Model::Kraus(q) => q.n_symbols(),
            Model::Unitary(q) => q.n_symbols(),
        }
    }

    pub fn alphabet(&self) -> Vec<String> {
        match self {
            Model::Classical(h) => h.alphabet().to_vec(),
            Model::Kraus(q) => q.alphabet(),
            Model::Unitary(q) => q.alphabet().to_vec(),
        }
    }

    pub fn sequence_probability(&self, seq: &[usize]) -> Result<f64> {
        match self {
            Model::Classical(h) => classical::sequence_probability(h, seq),
            Model::Kraus(q) => q.sequence_probability(seq),
            Model::Unitary(q) => q.sequence_probability(seq),
        }
    }

    pub fn distribution(&self, t: usize) -> Result<DistributionTable> {
        match self {
            Model::Classical(h) => classical::distribution(h, t),
            Model::Kraus(q) => q.distribution(t),
            Model::Unitary(q) => q.distribution(t),
        }
    }

    /// Sample `shots` sequences of length `t`; Kraus models are dilated first.
    pub fn simulate(&self, t: usize, shots: usize, seed: u64) -> Result<Vec<Sequence>> {
        match self {
            Model::Classical(h) => Ok(classical::sample(h, t, shots, seed)),
            Model::Unitary(q) => q.simulate(t, shots, seed),
            Model::Kraus(q) => {
                let dim_e = q.channel().operator_count().next_power_of_two();
                QhmmUnitary::from_kraus(q, dim_e)?.simulate(t, shots, seed)
            }
        }
    }

    /// Parse a model file, recognizing the form by its keys:
    /// `"A"` classical, `"channel"` Kraus, `"dim_s"` unitary.
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let has = |k: &str| v.get(k).is_some();
        if has("A") {
            Ok(Model::Classical(serde_json::from_value(v)?))
        } else if has("channel") {
            Ok(Model::Kraus(serde_json::from_value(v)?))
        } else if has("dim_s") {
            Ok(Model::Unitary(serde_json::from_value(v)?))
        } else {
            Err(Error::Parse(
                "model JSON needs an \"A\", \"channel\" or \"dim_s\" key".into(),
            ))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(match self {
            Model::Classical(h) => serde_json::to_string_pretty(h)?,
            Model::Kraus(q) => serde_json::to_string_pretty(q)?,
            Model::Unitary(q) => serde_json::to_string_pretty(q)?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct KrausRepr {
    channel: KrausChannel,
    rho0: DensityOperator,
}

impl Serialize for QhmmKraus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KrausRepr {
            channel: self.channel.clone(),
            rho0: self.rho0.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QhmmKraus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = KrausRepr::deserialize(d)?;
        QhmmKraus::new(r.channel, r.rho0).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct UnitaryRepr {
    alphabet: Vec<String>,
    dim_s: usize,
    dim_e: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    circuit: Option<Circuit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unitary: Option<UnitaryOperator>,
    symbol_map: Vec<usize>,
    rho0: DensityOperator,
    #[serde(default)]
    e0: usize,
    #[serde(default)]
    reset: ResetMode,
    #[serde(default)]
    measured: MeasuredRegister,
}

impl Serialize for QhmmUnitary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        UnitaryRepr {
            alphabet: self.alphabet.clone(),
            dim_s: self.dim_s,
            dim_e: self.dim_e,
            circuit: self.circuit.clone(),
            unitary: if self.circuit.is_some() {
                None
            } else {
                Some(self.unitary.clone())
            },
            symbol_map: self.symbol_map.clone(),
            rho0: self.rho0.clone(),
            e0: self.e0,
            reset: self.reset,
            measured: self.measured,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QhmmUnitary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = UnitaryRepr::deserialize(d)?;
        let spec = UnitarySpec {
            alphabet: r.alphabet,
            dim_s: r.dim_s,
            dim_e: r.dim_e,
            symbol_map: r.symbol_map,
            rho0: r.rho0,
            e0: r.e0,
            reset: r.reset,
            measured: r.measured,
        };
        match (r.circuit, r.unitary) {
            (Some(c), _) => QhmmUnitary::from_circuit(spec, c).map_err(D::Error::custom),
            (None, Some(u)) => QhmmUnitary::new(spec, u).map_err(D::Error::custom),
            (None, None) => Err(D::Error::custom("unitary model needs \"circuit\" or \"unitary\"")),
        }
    }
}
