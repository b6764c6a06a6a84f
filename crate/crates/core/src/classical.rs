//! Classical hidden Markov models with observable operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::language::{table_size, DistributionTable, Sequence};

const STOCHASTIC_TOL: f64 = 1e-10;

/// Longest sequence length an exact table may be built for.
pub const MAX_TABLE_LENGTH: usize = 12;

/// Hidden Markov model with column-stochastic transitions `a[to][from]` and
/// emissions `b[symbol][state]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalHmm {
    alphabet: Vec<String>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    x0: Vec<f64>,
}

/// `T_a = A · diag(B[a, ·])`, one real `n × n` matrix per symbol, indexed `[to][from]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableOperatorSet {
    pub operators: Vec<Vec<Vec<f64>>>,
}

fn check_stochastic(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {s}")));
    }
    Ok(())
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j]).collect()).collect()
}

impl ClassicalHmm {
    /// Build from per-state rows: `transition_rows[from][to]` and
    /// `emission_rows[state][symbol]`. `x0 = None` selects the steady state.
    pub fn from_rows(
        alphabet: Vec<String>,
        transition_rows: &[Vec<f64>],
        emission_rows: &[Vec<f64>],
        x0: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = transition_rows.len();
        let m = alphabet.len();
        if n == 0 || m == 0 {
            return Err(Error::InvalidModel("empty state space or alphabet".into()));
        }
        for (i, row) in transition_rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!("transition row {i} has {} entries, expected {n}", row.len())));
            }
            check_stochastic(row, &format!("transition row {i}"))?;
        }
        if emission_rows.len() != n {
            return Err(Error::Dimension(format!("{} emission rows for {n} states", emission_rows.len())));
        }
        for (i, row) in emission_rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension(format!("emission row {i} has {} entries, expected {m}", row.len())));
            }
            check_stochastic(row, &format!("emission row {i}"))?;
        }
        let mut h = Self {
            alphabet,
            a: transpose(transition_rows),
            b: transpose(emission_rows),
            x0: vec![1.0 / n as f64; n],
        };
        match x0 {
            Some(x) => {
                if x.len() != n {
                    return Err(Error::Dimension(format!("x0 has {} entries, expected {n}", x.len())));
                }
                check_stochastic(&x, "x0")?;
                h.x0 = x;
            }
            None => h.x0 = steady_state_classical(&h),
        }
        Ok(h)
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Result<Self> {
        if x0.len() != self.n_states() {
            return Err(Error::Dimension(format!("x0 has {} entries", x0.len())));
        }
        check_stochastic(&x0, "x0")?;
        self.x0 = x0;
        Ok(self)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn n_states(&self) -> usize {
        self.a.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.alphabet.len()
    }

    /// Column-stochastic transition matrix, `a()[to][from]`.
    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    /// Emission matrix, `b()[symbol][state]`.
    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// `x ↦ T_a x` without materializing `T_a`.
    fn step(&self, symbol: usize, x: &[f64], out: &mut [f64]) {
        let n = self.n_states();
        for (to, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|from| self.a[to][from] * self.b[symbol][from] * x[from]).sum();
        }
    }

    fn check_symbols(&self, seq: &[usize]) -> Result<()> {
        match seq.iter().find(|&&s| s >= self.n_symbols()) {
            Some(s) => Err(Error::UnknownSymbol(s.to_string())),
            None => Ok(()),
        }
    }
}

pub fn observable_operators(h: &ClassicalHmm) -> ObservableOperatorSet {
    let n = h.n_states();
    let operators = (0..h.n_symbols())
        .map(|s| {
            (0..n)
                .map(|to| (0..n).map(|from| h.a[to][from] * h.b[s][from]).collect())
                .collect()
        })
        .collect();
    ObservableOperatorSet { operators }
}

/// `1ᵀ T_{a_t} ⋯ T_{a_1} x0`.
pub fn sequence_probability(h: &ClassicalHmm, seq: &[usize]) -> Result<f64> {
    h.check_symbols(seq)?;
    let mut x = h.x0.clone();
    let mut next = vec![0.0; x.len()];
    for &s in seq {
        h.step(s, &x, &mut next);
        std::mem::swap(&mut x, &mut next);
    }
    Ok(x.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// Exact table over all `m^t` sequences, built depth first so that each
/// prefix state vector is computed once.
pub fn distribution(h: &ClassicalHmm, t: usize) -> Result<DistributionTable> {
    if t > MAX_TABLE_LENGTH {
        return Err(Error::TooLarge(format!("t = {t} exceeds {MAX_TABLE_LENGTH}")));
    }
    let m = h.n_symbols();
    table_size(m, t)?;
    let mut table = DistributionTable::new(t, m);
    let mut prefix = Vec::with_capacity(t);
    fn rec(h: &ClassicalHmm, x: &[f64], t: usize, prefix: &mut Sequence, table: &mut DistributionTable) -> Result<()> {
        if prefix.len() == t {
            return table.insert(prefix.clone(), x.iter().sum::<f64>().max(0.0));
        }
        let mut next = vec![0.0; x.len()];
        for s in 0..h.n_symbols() {
            h.step(s, x, &mut next);
            prefix.push(s);
            rec(h, &next, t, prefix, table)?;
            prefix.pop();
        }
        Ok(())
    }
    rec(h, &h.x0, t, &mut prefix, &mut table)?;
    Ok(table)
}

/// Stationary distribution `x* = A x*`.
///
/// Returns `x0` when it is already stationary; otherwise the minimum-norm
/// solution of `[A − I; 1ᵀ] x = [0; 1]`.
pub fn steady_state_classical(h: &ClassicalHmm) -> Vec<f64> {
    let n = h.n_states();
    let residual = |x: &[f64]| {
        (0..n)
            .map(|i| ((0..n).map(|j| h.a[i][j] * x[j]).sum::<f64>() - x[i]).abs())
            .fold(0.0, f64::max)
    };
    if residual(&h.x0) <= 1e-12 {
        return h.x0.clone();
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(n + 1, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = h.a[i][j] - if i == j { 1.0 } else { 0.0 };
        }
        m[(n, i)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let svd = m.svd(true, true);
    let x = svd.solve(&rhs, 1e-12).expect("u and v requested");
    let mut x: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

/// Index drawn from `weights` (assumed to sum to ~1) using a uniform `u ∈ [0,1)`.
pub(crate) fn pick(weights: impl IntoIterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}

/// `n_seq` independent length-`t` emissions starting from `x0`.
pub fn sample(h: &ClassicalHmm, t: usize, n_seq: usize, seed: u64) -> Vec<Sequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h.n_states();
    (0..n_seq)
        .map(|_| {
            let mut state = pick(h.x0.iter().copied(), rng.random());
            let mut seq = Vec::with_capacity(t);
            for _ in 0..t {
                let sym = pick(h.b.iter().map(|row| row[state]), rng.random());
                seq.push(sym);
                state = pick((0..n).map(|to| h.a[to][state]), rng.random());
            }
            seq
        })
        .collect()
}

/// Two-symbol, four-state market-regime model.
pub fn market() -> ClassicalHmm {
    ClassicalHmm::from_rows(
        vec!["0".into(), "1".into()],
        &[
            vec![0.5, 0.1, 0.15, 0.25],
            vec![0.1, 0.5, 0.25, 0.15],
            vec![0.25, 0.15, 0.5, 0.1],
            vec![0.15, 0.25, 0.1, 0.5],
        ],
        &[vec![0.8, 0.2], vec![0.2, 0.8], vec![0.4, 0.6], vec![0.6, 0.4]],
        None,
    )
    .expect("valid fixture")
}

/// Four-symbol discretization of a four-component Gaussian mixture HMM.
pub fn gaussian4() -> ClassicalHmm {
    ClassicalHmm::from_rows(
        (0..4).map(|i| i.to_string()).collect(),
        &[
            vec![0.60, 0.25, 0.05, 0.10],
            vec![0.05, 0.15, 0.05, 0.75],
            vec![0.75, 0.05, 0.15, 0.05],
            vec![0.10, 0.05, 0.65, 0.20],
        ],
        &[
            vec![0.00, 0.50, 0.50, 0.00],
            vec![0.01, 0.49, 0.49, 0.01],
            vec![0.13, 0.37, 0.37, 0.13],
            vec![0.22, 0.28, 0.28, 0.22],
        ],
        None,
    )
    .expect("valid fixture")
}

pub fn fixtures() -> Vec<(&'static str, ClassicalHmm)> {
    vec![("market", market()), ("gaussian4", gaussian4())]
}

pub fn fixture(name: &str) -> Option<ClassicalHmm> {
    fixtures().into_iter().find(|(n, _)| *n == name).map(|(_, h)| h)
}

#[derive(Serialize, Deserialize)]
struct HmmRepr {
    alphabet: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
}

impl Serialize for ClassicalHmm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HmmRepr {
            alphabet: self.alphabet.clone(),
            a: transpose(&self.a),
            b: transpose(&self.b),
            x0: Some(self.x0.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassicalHmm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = HmmRepr::deserialize(d)?;
        ClassicalHmm::from_rows(r.alphabet, &r.a, &r.b, r.x0).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle() -> ClassicalHmm {
        ClassicalHmm::from_rows(
            vec!["0".into(), "1".into()],
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            Some(vec![1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn operators() {
        let one = ClassicalHmm::from_rows(vec!["a".into()], &[vec![1.0]], &[vec![1.0]], None).unwrap();
        assert_eq!(observable_operators(&one).operators, vec![vec![vec![1.0]]]);

        let h = market();
        let ops = observable_operators(&h);
        for to in 0..4 {
            assert!((ops.operators[0][to][0] - h.a()[to][0] * 0.8).abs() < 1e-15);
            for from in 0..4 {
                let s: f64 = ops.operators.iter().map(|t| t[to][from]).sum();
                assert!((s - h.a()[to][from]).abs() < 1e-12);
            }
        }

        let ops = observable_operators(&cycle());
        assert_eq!(ops.operators[0], vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(ops.operators[1], vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn sequence_probabilities() {
        let h = cycle();
        assert_eq!(sequence_probability(&h, &[]).unwrap(), 1.0);
        assert_eq!(sequence_probability(&h, &[0, 1, 0, 1]).unwrap(), 1.0);
        assert_eq!(sequence_probability(&h, &[1, 0, 1, 0]).unwrap(), 0.0);
        let h = h.with_x0(vec![0.0, 1.0]).unwrap();
        assert_eq!(sequence_probability(&h, &[1, 0, 1, 0]).unwrap(), 1.0);
        assert!(matches!(sequence_probability(&h, &[2]), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn market_steady_state_is_uniform() {
        let h = market();
        for v in h.x0() {
            assert!((v - 0.25).abs() < 1e-12);
        }
        assert!((sequence_probability(&h, &[0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn steady_state_residuals() {
        for (_, h) in fixtures() {
            let x = steady_state_classical(&h);
            let n = h.n_states();
            for i in 0..n {
                let ax: f64 = (0..n).map(|j| h.a()[i][j] * x[j]).sum();
                assert!((ax - x[i]).abs() < 1e-10);
            }
        }
        let id = ClassicalHmm::from_rows(
            vec!["0".into()],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[vec![1.0], vec![1.0]],
            Some(vec![0.3, 0.7]),
        )
        .unwrap();
        assert_eq!(steady_state_classical(&id), vec![0.3, 0.7]);
    }

    #[test]
    fn distributions_normalize() {
        for (_, h) in fixtures() {
            for t in 0..=6 {
                let d = distribution(&h, t).unwrap();
                assert!((d.total() - 1.0).abs() < 1e-9);
            }
        }
        let d = distribution(&market(), 7).unwrap();
        assert_eq!(d.len(), 128);
        assert!((d.total() - 1.0).abs() < 1e-9);
        assert!(distribution(&market(), 13).is_err());
    }

    #[test]
    fn prefix_consistency() {
        let h = gaussian4();
        let p = sequence_probability(&h, &[2, 1]).unwrap();
        let s: f64 = (0..4).map(|a| sequence_probability(&h, &[2, 1, a]).unwrap()).sum();
        assert!((p - s).abs() < 1e-12);
    }

    #[test]
    fn sampling() {
        let h = cycle();
        let s = sample(&h, 5, 10, 1);
        assert!(s.iter().all(|x| x == &vec![0, 1, 0, 1, 0]));
        assert_eq!(sample(&market(), 4, 20, 9), sample(&market(), 4, 20, 9));

        let h = market();
        let draws = sample(&h, 3, 100_000, 42);
        let emp = crate::language::empirical_estimate(&draws, 2, 3).unwrap();
        let exact = distribution(&h, 3).unwrap();
        assert!(emp.total_variation(&exact) < 0.01);
    }

    #[test]
    fn json_uses_from_rows() {
        let h = market();
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.contains(r#""A":[[0.5,0.1,0.15,0.25]"#));
        let back: ClassicalHmm = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        let no_x0 = r#"{"alphabet":["0"],"A":[[1.0]],"B":[[1.0]]}"#;
        let h: ClassicalHmm = serde_json::from_str(no_x0).unwrap();
        assert_eq!(h.x0(), &[1.0]);
        assert!(serde_json::from_str::<ClassicalHmm>(r#"{"alphabet":["0"],"A":[[0.9]],"B":[[1.0]]}"#).is_err());
    }
}
