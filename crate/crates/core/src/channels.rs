//! Quantum channels in operator-sum form with symbol-labelled Kraus groups.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    complete_isometry_to_unitary, eig_hermitian, null_space, numerical_rank, partial_trace_emission,
    tensor_product, ComplexMatrix, DensityOperator, UnitaryOperator, C64,
};

pub const COMPLETENESS_TOL: f64 = 1e-9;

/// One symbol and the Kraus operators that emit it.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausGroup {
    pub symbol: String,
    pub operators: Vec<ComplexMatrix>,
}

/// A quantum operation written as ordered groups of Kraus operators, one
/// group per observable symbol.
///
/// Construction only checks shapes; use [`validate_cptp`] or
/// [`KrausChannel::new_cptp`] when completeness matters.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    groups: Vec<KrausGroup>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CptpReport {
    pub complete: bool,
    pub max_violation: f64,
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub state: DensityOperator,
    /// Dimension of the fixed-point space; `> 1` means the steady state is
    /// not unique and `state` is one representative.
    pub multiplicity: usize,
}

impl SteadyState {
    pub fn degenerate(&self) -> bool {
        self.multiplicity > 1
    }
}

impl KrausChannel {
    pub fn new(dim: usize, groups: Vec<KrausGroup>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidModel("channel without Kraus groups".into()));
        }
        for g in &groups {
            for k in &g.operators {
                if k.rows() != dim || k.cols() != dim {
                    return Err(Error::Dimension(format!(
                        "Kraus operator for '{}' is {}x{}, expected {dim}x{dim}",
                        g.symbol,
                        k.rows(),
                        k.cols()
                    )));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for g in &groups {
            if !seen.insert(g.symbol.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate symbol '{}'", g.symbol)));
            }
        }
        Ok(Self { dim, groups })
    }

    pub fn new_cptp(dim: usize, groups: Vec<KrausGroup>) -> Result<Self> {
        let ch = Self::new(dim, groups)?;
        let rep = validate_cptp(&ch);
        if !rep.complete {
            return Err(Error::NotTracePreserving(rep.max_violation));
        }
        Ok(ch)
    }

    /// One symbol per Kraus operator, labelled `"0"`, `"1"`, ...
    pub fn from_operators(dim: usize, ops: Vec<ComplexMatrix>) -> Result<Self> {
        let groups = ops
            .into_iter()
            .enumerate()
            .map(|(i, k)| KrausGroup {
                symbol: i.to_string(),
                operators: vec![k],
            })
            .collect();
        Self::new(dim, groups)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_operators(dim, vec![ComplexMatrix::identity(dim)]).expect("valid")
    }

    /// Single-symbol unitary channel.
    pub fn unitary(u: &UnitaryOperator) -> Self {
        Self::from_operators(u.dim(), vec![u.matrix().clone()]).expect("valid")
    }

    /// `rho -> I/N` via the `N^2` operators `|i><j| / sqrt(N)`, all emitting one symbol.
    pub fn completely_depolarizing(dim: usize) -> Self {
        let s = 1.0 / (dim as f64).sqrt();
        let mut ops = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut k = ComplexMatrix::zeros(dim, dim);
                k[(i, j)] = C64::new(s, 0.0);
                ops.push(k);
            }
        }
        Self::new(
            dim,
            vec![KrausGroup {
                symbol: "0".into(),
                operators: ops,
            }],
        )
        .expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[KrausGroup] {
        &self.groups
    }

    pub fn alphabet(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.symbol.clone()).collect()
    }

    pub fn symbol_index(&self, symbol: &str) -> Result<usize> {
        self.groups
            .iter()
            .position(|g| g.symbol == symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    pub fn operators(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.groups.iter().flat_map(|g| g.operators.iter())
    }

    pub fn operator_count(&self) -> usize {
        self.groups.iter().map(|g| g.operators.len()).sum()
    }

    /// Unnormalized branch `T_a(rho) = sum_{K in group a} K rho K†`.
    pub fn apply_symbol(&self, symbol: usize, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.groups[symbol].operators {
            out = &out + &k.sandwich(rho);
        }
        out
    }

    /// Same channel with every symbol merged into one group.
    pub fn merged(&self) -> Self {
        Self {
            dim: self.dim,
            groups: vec![KrausGroup {
                symbol: "*".into(),
                operators: self.operators().cloned().collect(),
            }],
        }
    }
}

pub fn validate_cptp(ch: &KrausChannel) -> CptpReport {
    let n = ch.dim();
    let mut sum = ComplexMatrix::zeros(n, n);
    for k in ch.operators() {
        sum = &sum + &k.adjoint().matmul(k);
    }
    let max_violation = sum.max_abs_diff(&ComplexMatrix::identity(n));
    CptpReport {
        complete: max_violation <= COMPLETENESS_TOL,
        max_violation,
    }
}

/// `T(rho) = sum_K K rho K†`.
pub fn apply(ch: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.dim() != ch.dim() {
        return Err(Error::Dimension(format!(
            "state dim {} vs channel dim {}",
            rho.dim(),
            ch.dim()
        )));
    }
    let mut out = ComplexMatrix::zeros(ch.dim(), ch.dim());
    for k in ch.operators() {
        out = &out + &k.sandwich(rho.matrix());
    }
    DensityOperator::new(out.hermitian_part())
}

/// Probability that applying `ch` to `rho` emits `symbol`.
pub fn symbol_probability(ch: &KrausChannel, rho: &DensityOperator, symbol: &str) -> Result<f64> {
    if rho.dim() != ch.dim() {
        return Err(Error::Dimension(format!(
            "state dim {} vs channel dim {}",
            rho.dim(),
            ch.dim()
        )));
    }
    let a = ch.symbol_index(symbol)?;
    let p = ch.apply_symbol(a, rho.matrix()).trace().re;
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian(&self.matrix.hermitian_part())
            .map(|(v, _)| v)
            .unwrap_or_default()
    }

    /// `tr_out J`, which equals `I_N` for trace-preserving channels.
    pub fn output_trace(&self) -> ComplexMatrix {
        partial_trace_emission(&self.matrix, self.dim, self.dim).expect("square N^2")
    }
}

/// `J = sum_{ij} |i><j| (x) T(|i><j|)`.
pub fn choi(ch: &KrausChannel) -> ChoiMatrix {
    let n = ch.dim();
    let mut j = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for k in 0..n {
            let mut e = ComplexMatrix::zeros(n, n);
            e[(i, k)] = C64::new(1.0, 0.0);
            let mut t = ComplexMatrix::zeros(n, n);
            for op in ch.operators() {
                t = &t + &op.sandwich(&e);
            }
            for a in 0..n {
                for b in 0..n {
                    j[(i * n + a, k * n + b)] = t[(a, b)];
                }
            }
        }
    }
    ChoiMatrix { dim: n, matrix: j }
}

/// Number of Choi eigenvalues above `rel_tol * lambda_max`.
pub fn kraus_rank(ch: &KrausChannel, rel_tol: f64) -> usize {
    let vals = choi(ch).eigenvalues();
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    vals.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Rank of the matrix whose rows are the vectorized Kraus operators. Agrees
/// with [`kraus_rank`] but never forms the Choi matrix.
pub fn stacked_kraus_rank(ch: &KrausChannel, rel_tol: f64) -> usize {
    let ops: Vec<&ComplexMatrix> = ch.operators().collect();
    let n2 = ch.dim() * ch.dim();
    let m = ComplexMatrix::from_fn(ops.len(), n2, |i, j| ops[i].as_slice()[j]);
    numerical_rank(&m, rel_tol)
}

/// `K_e[s,s'] = U[s*M + e, s'*M + e0]`.
pub fn kraus_from_unitary(
    u: &UnitaryOperator,
    dim_s: usize,
    dim_e: usize,
    e0: usize,
) -> Result<Vec<ComplexMatrix>> {
    if u.dim() != dim_s * dim_e {
        return Err(Error::Dimension(format!(
            "unitary dim {} != {dim_s}*{dim_e}",
            u.dim()
        )));
    }
    if e0 >= dim_e {
        return Err(Error::Dimension(format!("e0 = {e0} >= {dim_e}")));
    }
    let m = u.matrix();
    Ok((0..dim_e)
        .map(|e| ComplexMatrix::from_fn(dim_s, dim_s, |s, t| m[(s * dim_e + e, t * dim_e + e0)]))
        .collect())
}

/// Unitary dilation of `ch` on `H_S (x) H_E`.
///
/// Kraus operator number `k` (counting through the groups in order) is
/// attached to emission basis state `|k>`, so the isometry is
/// `V|v> = sum_k K_k|v> (x) |k>`; it is then completed to a unitary with
/// input column `s*M + e0`.
pub fn stinespring_dilate(ch: &KrausChannel, dim_e: usize, e0: usize) -> Result<UnitaryOperator> {
    let need = ch.operator_count();
    if dim_e < need {
        return Err(Error::EmissionTooSmall { have: dim_e, need });
    }
    if e0 >= dim_e {
        return Err(Error::Dimension(format!("e0 = {e0} >= {dim_e}")));
    }
    let n = ch.dim();
    let mut v = ComplexMatrix::zeros(n * dim_e, n);
    for (k, op) in ch.operators().enumerate() {
        for s in 0..n {
            for t in 0..n {
                v[(s * dim_e + k, t)] = op[(s, t)];
            }
        }
    }
    complete_isometry_to_unitary(&v, e0)
}

/// Superoperator acting on row-major `vec(rho)`: `sum_K K (x) conj(K)`.
pub fn transfer_matrix(ch: &KrausChannel) -> ComplexMatrix {
    let n = ch.dim();
    let mut t = ComplexMatrix::zeros(n * n, n * n);
    for k in ch.operators() {
        t = &t + &tensor_product(k, &k.conj());
    }
    t
}

/// A fixed point `rho* = T(rho*)` of the channel.
///
/// Computed from the null space of `T - I` on the vectorized operator space.
/// When that space has dimension > 1, the Hermitian (and positive) parts of
/// its basis elements are themselves fixed points; the candidate with the
/// largest trace is normalized and returned.
pub fn steady_state(ch: &KrausChannel) -> Result<SteadyState> {
    let n = ch.dim();
    let mut t = transfer_matrix(ch);
    for i in 0..n * n {
        t[(i, i)] -= C64::new(1.0, 0.0);
    }
    let (basis, smallest) = null_space(&t, 1e-8);
    if smallest > 1e-6 {
        return Err(Error::NoFixedPoint(smallest));
    }
    let basis = if basis.is_empty() {
        null_space(&t, smallest * (1.0 + 1e-9)).0
    } else {
        basis
    };
    let multiplicity = basis.len();

    let mut best: Option<(f64, ComplexMatrix)> = None;
    let mut consider = |m: ComplexMatrix| {
        let tr = m.trace().re;
        if tr.abs() > best.as_ref().map_or(1e-10, |(b, _)| *b) {
            let m = if tr < 0.0 { m.scale_real(-1.0) } else { m };
            best = Some((tr.abs(), m));
        }
    };
    for v in &basis {
        let x = ComplexMatrix::from_vec(n, n, v.clone()).expect("n*n entries");
        // rotate the global phase so the trace is real before Hermitizing
        let tr = x.trace();
        let x = if tr.norm() > 1e-10 {
            x.scale(tr.conj() / tr.norm())
        } else {
            x
        };
        let re = x.hermitian_part();
        let im = (&x - &x.adjoint()).scale(C64::new(0.0, -0.5));
        for h in [re, im] {
            if h.max_abs() < 1e-12 {
                continue;
            }
            consider(h.clone());
            if let Ok((vals, vecs)) = eig_hermitian(&h) {
                for sign in [1.0, -1.0] {
                    let mut part = ComplexMatrix::zeros(n, n);
                    for (k, &lam) in vals.iter().enumerate() {
                        if sign * lam > 0.0 {
                            let col = vecs.column(k);
                            part = &part + &ComplexMatrix::outer(&col, &col).scale_real(sign * lam);
                        }
                    }
                    consider(part);
                }
            }
        }
    }
    let (tr, m) = best.ok_or(Error::NoFixedPoint(smallest))?;
    let rho = m.scale_real(1.0 / tr).hermitian_part();
    Ok(SteadyState {
        state: DensityOperator::new_unchecked(rho),
        multiplicity,
    })
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    dim: usize,
    groups: serde_json::Map<String, serde_json::Value>,
}

impl Serialize for KrausChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut groups = serde_json::Map::new();
        for g in &self.groups {
            groups.insert(
                g.symbol.clone(),
                serde_json::to_value(&g.operators).map_err(serde::ser::Error::custom)?,
            );
        }
        ChannelRepr {
            dim: self.dim,
            groups,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KrausChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ChannelRepr::deserialize(d)?;
        let mut groups = Vec::with_capacity(r.groups.len());
        for (symbol, v) in r.groups {
            let operators: Vec<ComplexMatrix> =
                serde_json::from_value(v).map_err(serde::de::Error::custom)?;
            groups.push(KrausGroup { symbol, operators });
        }
        KrausChannel::new(r.dim, groups).map_err(serde::de::Error::custom)
    }
}

/// Random CPTP channel: Gaussian operators `G_k` normalized by
/// `S^{-1/2}` with `S = Σ G_k†G_k`. Operator `k` is labelled `k mod m`.
pub fn random_channel<R: Rng + ?Sized>(dim: usize, n_ops: usize, n_symbols: usize, rng: &mut R) -> Result<KrausChannel> {
    if dim == 0 || n_ops == 0 || n_symbols == 0 || n_symbols > n_ops {
        return Err(Error::Dimension(format!(
            "random channel with dim {dim}, {n_ops} operators, {n_symbols} symbols"
        )));
    }
    let gs: Vec<ComplexMatrix> = (0..n_ops)
        .map(|_| {
            ComplexMatrix::from_fn(dim, dim, |_, _| {
                C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            })
        })
        .collect();
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for g in &gs {
        sum = &sum + &g.adjoint().matmul(g);
    }
    let (vals, vecs) = eig_hermitian(&sum)?;
    let inv_sqrt = ComplexMatrix::diag(&vals.iter().map(|v| C64::new(1.0 / v.sqrt(), 0.0)).collect::<Vec<_>>());
    let s = vecs.matmul(&inv_sqrt).matmul(&vecs.adjoint());
    let mut groups: Vec<KrausGroup> = (0..n_symbols)
        .map(|a| KrausGroup {
            symbol: a.to_string(),
            operators: Vec::new(),
        })
        .collect();
    for (k, g) in gs.iter().enumerate() {
        groups[k % n_symbols].operators.push(g.matmul(&s));
    }
    KrausChannel::new_cptp(dim, groups)
}

/// The four-outcome qubit channel with Kraus operators
/// `|0><0|, |1><1|, |+><+|, |-><-|`, each scaled by `1/sqrt(2)`.
pub fn monras_channel() -> KrausChannel {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let kets = [[1.0, 0.0], [0.0, 1.0], [s, s], [s, -s]];
    let ops = kets
        .iter()
        .map(|k| {
            let v = [C64::new(k[0], 0.0), C64::new(k[1], 0.0)];
            ComplexMatrix::outer(&v, &v).scale_real(s)
        })
        .collect();
    KrausChannel::from_operators(2, ops).expect("valid")
}

/// Amplitude damping with decay probability `gamma`:
/// `K0 = [[1,0],[0,sqrt(1-gamma)]]`, `K1 = [[0,sqrt(gamma)],[0,0]]`.
pub fn amplitude_damping(gamma: f64) -> KrausChannel {
    let k0 = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, (1.0 - gamma).sqrt()]]);
    let k1 = ComplexMatrix::from_real_rows(&[vec![0.0, gamma.sqrt()], vec![0.0, 0.0]]);
    KrausChannel::from_operators(2, vec![k0, k1]).expect("valid")
}

/// Maximum entrywise difference between the Choi matrices of two channels.
pub fn choi_distance(a: &KrausChannel, b: &KrausChannel) -> f64 {
    choi(a).matrix().max_abs_diff(choi(b).matrix())
}
