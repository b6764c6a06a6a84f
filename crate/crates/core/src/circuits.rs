//! Gate-list circuits, compilation to unitaries and ansatz templates.
//!
//! Qubit 0 is the most significant bit of the composite basis index and the
//! first gate in the list acts first, so a circuit `[g1, g2]` compiles to
//! `G2 · G1`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classical::pick;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, UnitaryOperator, C64};

/// Largest register a circuit may address (`2^6 = 64` amplitudes).
pub const MAX_QUBITS: usize = 6;

/// Upper end of the angle range used for random gates.
pub const PARAM_RANGE: f64 = 8.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateType {
    X,
    Y,
    Z,
    H,
    P,
    RX,
    RY,
    RZ,
    CX,
    CRY,
    CRZ,
}

impl GateType {
    pub const ALL: [GateType; 11] = [
        GateType::X,
        GateType::Y,
        GateType::Z,
        GateType::H,
        GateType::P,
        GateType::RX,
        GateType::RY,
        GateType::RZ,
        GateType::CX,
        GateType::CRY,
        GateType::CRZ,
    ];

    pub fn n_params(self) -> usize {
        use GateType::*;
        match self {
            X | Y | Z | H | CX => 0,
            P | RX | RY | RZ | CRY | CRZ => 1,
        }
    }

    pub fn n_qubits(self) -> usize {
        use GateType::*;
        match self {
            CX | CRY | CRZ => 2,
            _ => 1,
        }
    }

    /// The 2×2 target-qubit matrix (the controlled part for two-qubit gates).
    fn base_matrix(self, params: &[f64]) -> [[C64; 2]; 2] {
        use GateType::*;
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let half = |k: usize| params[k] / 2.0;
        match self {
            X | CX => [[z, one], [one, z]],
            Y => [[z, -i], [i, z]],
            Z => [[one, z], [z, -one]],
            H => {
                let h = C64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            P => [[one, z], [z, C64::from_polar(1.0, params[0])]],
            RX => {
                let (s, c) = half(0).sin_cos();
                [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
            }
            RY | CRY => {
                let (s, c) = half(0).sin_cos();
                [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
            }
            RZ | CRZ => [
                [C64::from_polar(1.0, -half(0)), z],
                [z, C64::from_polar(1.0, half(0))],
            ],
        }
    }
}

impl fmt::Display for GateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for GateType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        GateType::ALL
            .iter()
            .copied()
            .find(|g| g.to_string() == up)
            .ok_or_else(|| Error::InvalidGate(format!("unknown gate type '{s}'")))
    }
}

/// A gate angle, either fixed or a slot in the circuit's parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Free { free: usize },
}

/// One gate: type, qubits (`[control, data]` for controlled gates) and angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    #[serde(rename = "t")]
    pub gate: GateType,
    #[serde(rename = "q")]
    pub qubits: Vec<usize>,
    #[serde(rename = "p", default)]
    pub params: Vec<Param>,
}

impl GateSpec {
    pub fn new(gate: GateType, qubits: Vec<usize>, params: Vec<f64>) -> Self {
        Self {
            gate,
            qubits,
            params: params.into_iter().map(Param::Value).collect(),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.gate.n_qubits() == 2
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.qubits.len() != self.gate.n_qubits() {
            return Err(Error::InvalidGate(format!(
                "{} acts on {} qubit(s), got {:?}",
                self.gate,
                self.gate.n_qubits(),
                self.qubits
            )));
        }
        if let Some(q) = self.qubits.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::InvalidGate(format!("qubit {q} out of range for {n_qubits} qubits")));
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate(format!("{} control equals target", self.gate)));
        }
        if self.params.len() != self.gate.n_params() {
            return Err(Error::InvalidGate(format!(
                "{} takes {} parameter(s), got {}",
                self.gate,
                self.gate.n_params(),
                self.params.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateSpec>,
}

#[derive(Deserialize)]
struct CircuitRepr {
    n_qubits: usize,
    #[serde(default)]
    gates: Vec<GateSpec>,
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CircuitRepr::deserialize(d)?;
        Circuit::new(r.n_qubits, r.gates).map_err(serde::de::Error::custom)
    }
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<GateSpec>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidGate(format!("{n_qubits} qubits (1..={MAX_QUBITS} supported)")));
        }
        for g in &gates {
            g.validate(n_qubits)?;
        }
        Ok(Self { n_qubits, gates })
    }

    pub fn empty(n_qubits: usize) -> Self {
        Self::new(n_qubits, Vec::new()).expect("qubit count in range")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: GateSpec) -> Result<()> {
        g.validate(self.n_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    /// Gates of `self` followed by those of `other`.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension(format!("{} vs {} qubits", self.n_qubits, other.n_qubits)));
        }
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        Ok(Self { n_qubits: self.n_qubits, gates })
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Number of free parameter slots (one past the largest slot index).
    pub fn n_free(&self) -> usize {
        self.gates
            .iter()
            .flat_map(|g| g.params.iter())
            .filter_map(|p| match p {
                Param::Free { free } => Some(free + 1),
                Param::Value(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Fixed angles in gate order.
    pub fn values(&self) -> Vec<f64> {
        self.gates
            .iter()
            .flat_map(|g| g.params.iter())
            .filter_map(|p| match p {
                Param::Value(v) => Some(*v),
                Param::Free { .. } => None,
            })
            .collect()
    }

    /// Replace the fixed angles, in gate order, by `values`.
    pub fn with_values(&self, values: &[f64]) -> Result<Circuit> {
        let mut it = values.iter();
        let mut out = self.clone();
        for p in out.gates.iter_mut().flat_map(|g| g.params.iter_mut()) {
            if let Param::Value(v) = p {
                *v = *it
                    .next()
                    .ok_or_else(|| Error::Dimension(format!("{} values supplied", values.len())))?;
            }
        }
        if it.next().is_some() {
            return Err(Error::Dimension(format!("{} values supplied, too many", values.len())));
        }
        Ok(out)
    }

    /// Substitute free slots with `params[slot]`.
    pub fn bind(&self, params: &[f64]) -> Result<Circuit> {
        let mut out = self.clone();
        for p in out.gates.iter_mut().flat_map(|g| g.params.iter_mut()) {
            if let Param::Free { free } = *p {
                *p = Param::Value(*params.get(free).ok_or(Error::UnboundParameter(free))?);
            }
        }
        Ok(out)
    }

    pub fn compile(&self) -> Result<UnitaryOperator> {
        self.compile_with(&[])
    }

    /// Compile with free slots read from `params`.
    pub fn compile_with(&self, params: &[f64]) -> Result<UnitaryOperator> {
        let d = self.dim();
        let mut u = ComplexMatrix::identity(d);
        let mut angles = Vec::with_capacity(2);
        for g in &self.gates {
            angles.clear();
            for p in &g.params {
                angles.push(match *p {
                    Param::Value(v) => v,
                    Param::Free { free } => *params.get(free).ok_or(Error::UnboundParameter(free))?,
                });
            }
            self.apply_gate(&mut u, g, &angles);
        }
        Ok(UnitaryOperator::new_unchecked(u))
    }

    /// `u ← G u` in place.
    fn apply_gate(&self, u: &mut ComplexMatrix, g: &GateSpec, angles: &[f64]) {
        let n = self.n_qubits;
        let d = self.dim();
        let m = g.gate.base_matrix(angles);
        let bit = |q: usize| 1usize << (n - 1 - q);
        let (ctrl, target) = match g.qubits.as_slice() {
            [t] => (None, bit(*t)),
            [c, t] => (Some(bit(*c)), bit(*t)),
            _ => unreachable!("validated"),
        };
        let data = u.as_mut_slice();
        for i0 in 0..d {
            if i0 & target != 0 || ctrl.is_some_and(|c| i0 & c == 0) {
                continue;
            }
            let i1 = i0 | target;
            for col in 0..d {
                let a = data[i0 * d + col];
                let b = data[i1 * d + col];
                data[i0 * d + col] = m[0][0] * a + m[0][1] * b;
                data[i1 * d + col] = m[1][0] * a + m[1][1] * b;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    Full,
    Linear,
}

impl FromStr for Entanglement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Self::Full),
            "linear" => Ok(Self::Linear),
            _ => Err(Error::Config(format!("unknown entanglement '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationPair {
    #[serde(rename = "ry_rz")]
    RyRz,
    #[serde(rename = "rz_rx")]
    RzRx,
}

impl FromStr for RotationPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ry_rz" => Ok(Self::RyRz),
            "rz_rx" => Ok(Self::RzRx),
            _ => Err(Error::Config(format!("unknown rotation pair '{s}'"))),
        }
    }
}

fn entangling_pairs(n: usize, ent: Entanglement) -> Vec<(usize, usize)> {
    match ent {
        Entanglement::Full => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Entanglement::Linear => (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
    }
}

fn layered(n_qubits: usize, reps: usize, ent: Entanglement, rotations: &[GateType]) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits, Vec::new())?;
    let mut slot = 0;
    for _ in 0..reps {
        for (a, b) in entangling_pairs(n_qubits, ent) {
            c.gates.push(GateSpec::new(GateType::CX, vec![a, b], vec![]));
        }
        for &rot in rotations {
            for q in 0..n_qubits {
                c.gates.push(GateSpec {
                    gate: rot,
                    qubits: vec![q],
                    params: vec![Param::Free { free: slot }],
                });
                slot += 1;
            }
        }
    }
    Ok(c)
}

/// Per repetition: a CX entangling block, then an RY on every qubit.
pub fn real_amplitudes(n_qubits: usize, reps: usize, ent: Entanglement) -> Result<Circuit> {
    layered(n_qubits, reps, ent, &[GateType::RY])
}

/// Per repetition: a CX entangling block, then two rotation layers.
pub fn efficient_su2(n_qubits: usize, reps: usize, ent: Entanglement, pair: RotationPair) -> Result<Circuit> {
    let rot = match pair {
        RotationPair::RyRz => [GateType::RY, GateType::RZ],
        RotationPair::RzRx => [GateType::RZ, GateType::RX],
    };
    layered(n_qubits, reps, ent, &rot)
}

/// Which register of a two-register circuit is read out each step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasuredRegister {
    #[default]
    Emission,
    System,
}

/// The two-qubit amplitude-damping QHMM circuit.
#[derive(Clone, Debug)]
pub struct AmplitudeDampingCircuit {
    /// Applied once to `|0⟩` on the system qubit.
    pub prep: Circuit,
    /// Applied every step; qubit 0 is the system, qubit 1 the emission ancilla.
    pub step: Circuit,
    pub system_qubits: Vec<usize>,
    pub emission_qubits: Vec<usize>,
    pub measured: MeasuredRegister,
}

/// Step block `CRY(θ)[0→1]; CX[1→0]` with damping probability `sin²(θ/2)`.
/// The system qubit is measured and the ancilla reset after every step.
pub fn amplitude_damping_circuit(theta: f64) -> AmplitudeDampingCircuit {
    let prep = Circuit::new(1, vec![GateSpec::new(GateType::H, vec![0], vec![])]).expect("valid");
    let step = Circuit::new(
        2,
        vec![
            GateSpec::new(GateType::CRY, vec![0, 1], vec![theta]),
            GateSpec::new(GateType::CX, vec![1, 0], vec![]),
        ],
    )
    .expect("valid");
    AmplitudeDampingCircuit {
        prep,
        step,
        system_qubits: vec![0],
        emission_qubits: vec![1],
        measured: MeasuredRegister::System,
    }
}

/// Distributions over gate types and qubits used to draw random gates.
#[derive(Clone, Debug, PartialEq)]
pub struct GateSampler {
    pub n_qubits: usize,
    pub gates: Vec<GateType>,
    pub gate_weights: Vec<f64>,
    pub qubit_weights: Vec<f64>,
}

impl GateSampler {
    pub fn uniform(n_qubits: usize, gates: Vec<GateType>) -> Result<Self> {
        if gates.is_empty() {
            return Err(Error::Config("empty gate set".into()));
        }
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!("{n_qubits} qubits")));
        }
        if n_qubits < 2 && gates.iter().all(|g| g.n_qubits() == 2) {
            return Err(Error::Config("only two-qubit gates on a one-qubit register".into()));
        }
        let k = gates.len();
        Ok(Self {
            n_qubits,
            gates,
            gate_weights: vec![1.0 / k as f64; k],
            qubit_weights: vec![1.0 / n_qubits as f64; n_qubits],
        })
    }

    fn normalized(w: &[f64], keep: impl Fn(usize) -> bool) -> Vec<f64> {
        let masked: Vec<f64> = w.iter().enumerate().map(|(i, &x)| if keep(i) { x.max(0.0) } else { 0.0 }).collect();
        let s: f64 = masked.iter().sum();
        if s > 0.0 {
            masked.iter().map(|x| x / s).collect()
        } else {
            let n = (0..w.len()).filter(|&i| keep(i)).count().max(1) as f64;
            (0..w.len()).map(|i| if keep(i) { 1.0 / n } else { 0.0 }).collect()
        }
    }

    pub fn sample_type<R: Rng + ?Sized>(&self, rng: &mut R) -> GateType {
        let usable = |i: usize| self.n_qubits >= self.gates[i].n_qubits();
        let w = Self::normalized(&self.gate_weights, usable);
        self.gates[pick(w, rng.random())]
    }

    pub fn sample_qubits<R: Rng + ?Sized>(&self, gate: GateType, rng: &mut R) -> Vec<usize> {
        let all = Self::normalized(&self.qubit_weights, |_| true);
        let data = pick(all, rng.random());
        if gate.n_qubits() == 1 {
            return vec![data];
        }
        let others = Self::normalized(&self.qubit_weights, |i| i != data);
        let ctrl = pick(others, rng.random());
        vec![ctrl, data]
    }

    pub fn sample_params<R: Rng + ?Sized>(&self, gate: GateType, rng: &mut R) -> Vec<Param> {
        (0..gate.n_params())
            .map(|_| Param::Value(rng.random::<f64>() * PARAM_RANGE))
            .collect()
    }
}

pub fn random_gate<R: Rng + ?Sized>(sampler: &GateSampler, rng: &mut R) -> GateSpec {
    let gate = sampler.sample_type(rng);
    GateSpec {
        gate,
        qubits: sampler.sample_qubits(gate, rng),
        params: sampler.sample_params(gate, rng),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationType {
    /// Resample the gate type.
    Gte,
    /// Resample the qubits.
    Qbt,
    /// Replace with a fresh random gate.
    Rpl,
    /// Delete the gate.
    Dlt,
    /// Insert a random gate.
    Ins,
}

impl MutationType {
    pub const ALL: [MutationType; 5] = [Self::Gte, Self::Qbt, Self::Rpl, Self::Dlt, Self::Ins];
}

/// Apply one mutation at `pos`. The flag is false when nothing could change
/// (deleting from, or editing, an empty circuit).
pub fn mutate<R: Rng + ?Sized>(
    c: &Circuit,
    pos: usize,
    m_type: MutationType,
    sampler: &GateSampler,
    rng: &mut R,
) -> (Circuit, bool) {
    let mut out = c.clone();
    if m_type == MutationType::Ins {
        let pos = pos.min(out.gates.len());
        out.gates.insert(pos, random_gate(sampler, rng));
        return (out, true);
    }
    if pos >= out.gates.len() {
        return (out, false);
    }
    match m_type {
        MutationType::Gte => {
            let g = &mut out.gates[pos];
            let new = sampler.sample_type(rng);
            if new.n_qubits() != g.gate.n_qubits() {
                g.qubits = sampler.sample_qubits(new, rng);
            }
            if new.n_params() != g.gate.n_params() {
                g.params = sampler.sample_params(new, rng);
            }
            g.gate = new;
        }
        MutationType::Qbt => {
            let g = &mut out.gates[pos];
            g.qubits = sampler.sample_qubits(g.gate, rng);
        }
        MutationType::Rpl => out.gates[pos] = random_gate(sampler, rng),
        MutationType::Dlt => {
            out.gates.remove(pos);
        }
        MutationType::Ins => unreachable!(),
    }
    (out, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::kraus_from_unitary;
    use crate::linalg::r;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(t: GateType, q: &[usize], p: &[f64]) -> GateSpec {
        GateSpec::new(t, q.to_vec(), p.to_vec())
    }

    #[test]
    fn compile_examples() {
        assert_eq!(Circuit::empty(2).compile().unwrap().matrix(), &ComplexMatrix::identity(4));

        let h = Circuit::new(1, vec![g(GateType::H, &[0], &[])]).unwrap().compile().unwrap();
        let s = FRAC_1_SQRT_2;
        assert!(h.matrix().max_abs_diff(&ComplexMatrix::from_real_rows(&[vec![s, s], vec![s, -s]])) < 1e-15);

        // CX control 0 (MSB) target 1: swaps |10> and |11>
        let cx = Circuit::new(2, vec![g(GateType::CX, &[0, 1], &[])]).unwrap().compile().unwrap();
        let mut want = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            want[(i, j)] = r(1.0);
        }
        assert_eq!(cx.matrix(), &want);

        // X on qubit 1 of 2 acts on the least significant bit
        let x1 = Circuit::new(2, vec![g(GateType::X, &[1], &[])]).unwrap().compile().unwrap();
        assert_eq!(x1.matrix()[(1, 0)], r(1.0));
    }

    #[test]
    fn amplitude_damping_step_kraus() {
        let ad = amplitude_damping_circuit(PI / 2.0);
        let u = ad.step.compile().unwrap();
        let k = kraus_from_unitary(&u, 2, 2, 0).unwrap();
        let c = (PI / 4.0).cos();
        assert!(k[0].max_abs_diff(&ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, c]])) < 1e-15);
        assert!(k[1].max_abs_diff(&ComplexMatrix::from_real_rows(&[vec![0.0, c], vec![0.0, 0.0]])) < 1e-15);
        assert_eq!(ad.measured, MeasuredRegister::System);
    }

    #[test]
    fn composition_order() {
        let a = Circuit::new(1, vec![g(GateType::H, &[0], &[])]).unwrap();
        let b = Circuit::new(1, vec![g(GateType::P, &[0], &[0.7])]).unwrap();
        let ab = a.concat(&b).unwrap().compile().unwrap();
        let want = b.compile().unwrap().matrix().matmul(a.compile().unwrap().matrix());
        assert!(ab.matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn ansatz_shapes() {
        let c = real_amplitudes(2, 1, Entanglement::Linear).unwrap();
        assert_eq!(
            c.gates().iter().map(|g| (g.gate, g.qubits.clone())).collect::<Vec<_>>(),
            vec![(GateType::CX, vec![0, 1]), (GateType::RY, vec![0]), (GateType::RY, vec![1])]
        );
        assert_eq!(c.n_free(), 2);

        let c = real_amplitudes(3, 2, Entanglement::Full).unwrap();
        assert_eq!(c.len(), 12);
        assert_eq!(c.n_free(), 6);
        let u = c.compile_with(&[0.0; 6]).unwrap();
        let cx_only = Circuit::new(
            3,
            c.gates().iter().filter(|g| g.gate == GateType::CX).cloned().collect(),
        )
        .unwrap();
        assert!(u.matrix().max_abs_diff(cx_only.compile().unwrap().matrix()) < 1e-15);

        let c = efficient_su2(2, 1, Entanglement::Full, RotationPair::RzRx).unwrap();
        assert_eq!(c.n_free(), 4);
        let c = efficient_su2(2, 1, Entanglement::Full, RotationPair::RyRz).unwrap();
        assert_eq!(c.gates()[1].gate, GateType::RY);
        assert_eq!(c.gates()[3].gate, GateType::RZ);
        assert!(matches!(c.compile(), Err(Error::UnboundParameter(0))));
    }

    #[test]
    fn gate_validation() {
        assert!(Circuit::new(2, vec![g(GateType::CX, &[1, 1], &[])]).is_err());
        assert!(Circuit::new(2, vec![g(GateType::RY, &[2], &[0.1])]).is_err());
        assert!(Circuit::new(2, vec![g(GateType::RY, &[0], &[])]).is_err());
        assert!(Circuit::new(7, vec![]).is_err());
        assert_eq!("cry".parse::<GateType>().unwrap(), GateType::CRY);
        assert!("foo".parse::<GateType>().is_err());
    }

    #[test]
    fn json_format() {
        let c = Circuit::new(
            2,
            vec![
                g(GateType::RY, &[1], &[1.5]),
                GateSpec { gate: GateType::RZ, qubits: vec![0], params: vec![Param::Free { free: 0 }] },
            ],
        )
        .unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(
            s,
            r#"{"n_qubits":2,"gates":[{"t":"RY","q":[1],"p":[1.5]},{"t":"RZ","q":[0],"p":[{"free":0}]}]}"#
        );
        assert_eq!(serde_json::from_str::<Circuit>(&s).unwrap(), c);
        assert!(serde_json::from_str::<Circuit>(r#"{"n_qubits":1,"gates":[{"t":"CX","q":[0,1]}]}"#).is_err());
    }

    #[test]
    fn random_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = GateSampler::uniform(2, vec![GateType::RY]).unwrap();
        for _ in 0..100 {
            let gt = random_gate(&s, &mut rng);
            assert_eq!(gt.gate, GateType::RY);
            assert!(gt.qubits[0] < 2);
            match gt.params[0] {
                Param::Value(v) => assert!((0.0..=PARAM_RANGE).contains(&v)),
                _ => panic!(),
            }
        }
        let s = GateSampler::uniform(3, vec![GateType::CX]).unwrap();
        for _ in 0..100 {
            let gt = random_gate(&s, &mut rng);
            assert_ne!(gt.qubits[0], gt.qubits[1]);
        }
        // a 1-qubit register never yields two-qubit gates
        let s = GateSampler::uniform(1, vec![GateType::CX, GateType::X]).unwrap();
        for _ in 0..50 {
            assert_eq!(random_gate(&s, &mut rng).gate, GateType::X);
        }
    }

    #[test]
    fn mutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = GateSampler::uniform(2, vec![GateType::X, GateType::RY, GateType::CX]).unwrap();
        let one = Circuit::new(2, vec![g(GateType::X, &[0], &[])]).unwrap();
        let (c, ok) = mutate(&one, 0, MutationType::Dlt, &s, &mut rng);
        assert!(ok && c.is_empty());
        let (c2, ok) = mutate(&c, 0, MutationType::Dlt, &s, &mut rng);
        assert!(!ok && c2.is_empty());
        let (c, ok) = mutate(&Circuit::empty(2), 0, MutationType::Ins, &s, &mut rng);
        assert!(ok && c.len() == 1);

        let five = Circuit::new(2, (0..5).map(|_| random_gate(&s, &mut rng)).collect()).unwrap();
        for mt in [MutationType::Gte, MutationType::Qbt, MutationType::Rpl] {
            let (c, _) = mutate(&five, 2, mt, &s, &mut rng);
            assert_eq!(c.len(), 5);
            for i in [0, 1, 3, 4] {
                assert_eq!(c.gates()[i], five.gates()[i]);
            }
            c.gates()[2].validate(2).unwrap();
        }
    }
}
