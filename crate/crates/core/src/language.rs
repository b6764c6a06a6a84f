//! Symbol sequences, per-length distribution tables, Hankel matrices and
//! divergence measures between stochastic languages.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank_real, singular_values, ComplexMatrix};

/// A finite observation sequence as alphabet indices.
pub type Sequence = Vec<usize>;

/// Largest number of cells a Hankel matrix may have on either axis.
pub const HANKEL_BUDGET: usize = 512;

/// Largest table (`m^t` entries) any enumeration will build.
pub const TABLE_BUDGET: usize = 1 << 24;

/// All `m^t` sequences of length `t`, lexicographic by symbol index.
pub fn enumerate_sequences(m: usize, t: usize) -> Result<Vec<Sequence>> {
    let count = table_size(m, t)?;
    let mut out = Vec::with_capacity(count);
    let mut cur = vec![0usize; t];
    for _ in 0..count {
        out.push(cur.clone());
        for k in (0..t).rev() {
            cur[k] += 1;
            if cur[k] < m {
                break;
            }
            cur[k] = 0;
        }
    }
    Ok(out)
}

pub(crate) fn table_size(m: usize, t: usize) -> Result<usize> {
    if m == 0 {
        return Ok(usize::from(t == 0));
    }
    let mut n: usize = 1;
    for _ in 0..t {
        n = n
            .checked_mul(m)
            .filter(|&n| n <= TABLE_BUDGET)
            .ok_or_else(|| Error::TooLarge(format!("{m}^{t} sequences")))?;
    }
    Ok(n)
}

/// Concatenated digits for alphabets up to 10 symbols, space separated above.
pub fn format_sequence(seq: &[usize], m: usize) -> String {
    if m <= 10 {
        seq.iter().map(|s| char::from(b'0' + *s as u8)).collect()
    } else {
        seq.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
    }
}

pub fn parse_sequence(s: &str, m: usize) -> Result<Sequence> {
    let s = s.trim();
    let seq: Vec<usize> = if s.contains(char::is_whitespace) || m > 10 {
        s.split_whitespace()
            .map(|tok| tok.parse().map_err(|_| Error::Parse(format!("bad symbol '{tok}'"))))
            .collect::<Result<_>>()?
    } else {
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::Parse(format!("bad symbol '{c}'")))
            })
            .collect::<Result<_>>()?
    };
    if let Some(&bad) = seq.iter().find(|&&x| x >= m) {
        return Err(Error::UnknownSymbol(bad.to_string()));
    }
    Ok(seq)
}

/// Probabilities of the length-`t` sequences of a language. Missing keys read as 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionTable {
    length: usize,
    alphabet_size: usize,
    probs: BTreeMap<Sequence, f64>,
}

impl DistributionTable {
    pub fn new(length: usize, alphabet_size: usize) -> Self {
        Self {
            length,
            alphabet_size,
            probs: BTreeMap::new(),
        }
    }

    /// Table from explicit entries; every key must have the table length.
    pub fn from_entries(
        length: usize,
        alphabet_size: usize,
        entries: impl IntoIterator<Item = (Sequence, f64)>,
    ) -> Result<Self> {
        let mut t = Self::new(length, alphabet_size);
        for (seq, p) in entries {
            t.insert(seq, p)?;
        }
        Ok(t)
    }

    /// Evaluate `f` on all `m^t` sequences.
    pub fn from_fn(length: usize, alphabet_size: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let seqs = enumerate_sequences(alphabet_size, length)?;
        let mut t = Self::new(length, alphabet_size);
        for s in seqs {
            let p = f(&s);
            t.probs.insert(s, p);
        }
        Ok(t)
    }

    pub fn insert(&mut self, seq: Sequence, p: f64) -> Result<()> {
        if seq.len() != self.length {
            return Err(Error::Dimension(format!(
                "sequence of length {} in a length-{} table",
                seq.len(),
                self.length
            )));
        }
        if let Some(&bad) = seq.iter().find(|&&x| x >= self.alphabet_size) {
            return Err(Error::UnknownSymbol(bad.to_string()));
        }
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidModel(format!("probability {p} for {seq:?}")));
        }
        self.probs.insert(seq, p);
        Ok(())
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn get(&self, seq: &[usize]) -> f64 {
        self.probs.get(seq).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Sequence, f64)> {
        self.probs.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Distance in total variation, `½ Σ |p − q|`.
    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * union_keys(self, other)
            .map(|k| (self.get(k) - other.get(k)).abs())
            .sum::<f64>()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_tables_csv(std::slice::from_ref(self), w)
    }
}

fn union_keys<'a>(a: &'a DistributionTable, b: &'a DistributionTable) -> impl Iterator<Item = &'a Sequence> {
    a.probs
        .keys()
        .chain(b.probs.keys().filter(move |k| !a.probs.contains_key(*k)))
}

/// Write `sequence,probability` rows for several tables, ordered by length.
pub fn write_tables_csv<W: Write>(tables: &[DistributionTable], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["sequence", "probability"]).map_err(csv_err)?;
    for t in tables {
        for (seq, p) in t.iter() {
            wtr.write_record([format_sequence(seq, t.alphabet_size), format!("{p:.17e}")])
                .map_err(csv_err)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Read `sequence,probability` rows (header optional) and group them by length.
///
/// The alphabet size is taken from `alphabet_size` when given, else from the
/// largest symbol seen.
pub fn read_tables_csv<R: Read>(r: R, alphabet_size: Option<usize>) -> Result<Vec<DistributionTable>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() < 2 {
            return Err(Error::Parse(format!("expected 'sequence,probability', got {rec:?}")));
        }
        if rec[1].eq_ignore_ascii_case("probability") {
            continue;
        }
        let p: f64 = rec[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad probability '{}'", &rec[1])))?;
        rows.push((rec[0].to_string(), p));
    }
    let wide = alphabet_size.unwrap_or(usize::MAX);
    let mut parsed = Vec::with_capacity(rows.len());
    for (s, p) in rows {
        parsed.push((parse_sequence(&s, wide)?, p));
    }
    let m = alphabet_size.unwrap_or_else(|| {
        parsed
            .iter()
            .flat_map(|(s, _)| s.iter().copied())
            .max()
            .map_or(1, |x| x + 1)
    });
    let mut by_len: BTreeMap<usize, DistributionTable> = BTreeMap::new();
    for (seq, p) in parsed {
        by_len
            .entry(seq.len())
            .or_insert_with(|| DistributionTable::new(seq.len(), m))
            .insert(seq, p)?;
    }
    Ok(by_len.into_values().collect())
}

/// Read a raw corpus: one observed sequence per nonempty line.
pub fn read_corpus<R: Read>(mut r: R, alphabet_size: usize) -> Result<Vec<Sequence>> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_sequence(l, alphabet_size))
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Every contiguous window of length `t` of every corpus sequence.
pub fn subsequence_sample(corpus: &[Sequence], t: usize) -> Vec<Sequence> {
    if t == 0 {
        return Vec::new();
    }
    corpus
        .iter()
        .filter(|s| s.len() >= t)
        .flat_map(|s| s.windows(t).map(|w| w.to_vec()))
        .collect()
}

/// Relative frequencies of the windows.
pub fn empirical_estimate(windows: &[Sequence], alphabet_size: usize, t: usize) -> Result<DistributionTable> {
    if windows.is_empty() {
        return Err(Error::Empty("no windows to estimate from".into()));
    }
    let mut counts: BTreeMap<&Sequence, usize> = BTreeMap::new();
    for w in windows {
        *counts.entry(w).or_default() += 1;
    }
    let n = windows.len() as f64;
    DistributionTable::from_entries(
        t,
        alphabet_size,
        counts.into_iter().map(|(k, c)| (k.clone(), c as f64 / n)),
    )
}

/// Prefix × suffix array `H[p, s] = f(ps)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HankelMatrix {
    pub prefixes: Vec<Sequence>,
    pub suffixes: Vec<Sequence>,
    pub values: Vec<Vec<f64>>,
}

/// Sequences of length `0..=max_len` ordered by length, then lexicographically.
pub fn sequences_up_to(m: usize, max_len: usize) -> Result<Vec<Sequence>> {
    let mut out = Vec::new();
    for l in 0..=max_len {
        out.extend(enumerate_sequences(m, l)?);
    }
    Ok(out)
}

pub fn hankel(
    f: impl Fn(&[usize]) -> f64,
    alphabet_size: usize,
    max_prefix_len: usize,
    max_suffix_len: usize,
) -> Result<HankelMatrix> {
    let check = |l: usize| -> Result<Vec<Sequence>> {
        let n: usize = (0..=l).map(|k| table_size(alphabet_size, k)).sum::<Result<usize>>()?;
        if n > HANKEL_BUDGET {
            return Err(Error::TooLarge(format!(
                "{n} Hankel rows/cols exceed the {HANKEL_BUDGET} budget"
            )));
        }
        sequences_up_to(alphabet_size, l)
    };
    let prefixes = check(max_prefix_len)?;
    let suffixes = check(max_suffix_len)?;
    let mut buf = Vec::new();
    let values = prefixes
        .iter()
        .map(|p| {
            suffixes
                .iter()
                .map(|s| {
                    buf.clear();
                    buf.extend_from_slice(p);
                    buf.extend_from_slice(s);
                    f(&buf)
                })
                .collect()
        })
        .collect();
    Ok(HankelMatrix {
        prefixes,
        suffixes,
        values,
    })
}

impl HankelMatrix {
    pub fn rank(&self, rel_tol: f64) -> usize {
        numerical_rank_real(&self.values, rel_tol)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        singular_values(&ComplexMatrix::from_real_rows(&self.values))
    }

    pub fn get(&self, prefix: &[usize], suffix: &[usize]) -> Option<f64> {
        let i = self.prefixes.iter().position(|p| p == prefix)?;
        let j = self.suffixes.iter().position(|s| s == suffix)?;
        Some(self.values[i][j])
    }

    /// CSV with a header row of suffixes and one row per prefix; the empty
    /// sequence is written as `e`.
    pub fn write_csv<W: Write>(&self, alphabet_size: usize, w: W) -> Result<()> {
        let label = |s: &Sequence| {
            if s.is_empty() {
                "e".to_string()
            } else {
                format_sequence(s, alphabet_size)
            }
        };
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec![String::new()];
        header.extend(self.suffixes.iter().map(label));
        wtr.write_record(&header).map_err(csv_err)?;
        for (p, row) in self.prefixes.iter().zip(&self.values) {
            let mut rec = vec![label(p)];
            rec.extend(row.iter().map(|v| format!("{v}")));
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrderEstimate {
    pub rank: usize,
    pub classical_order: usize,
    pub quantum_dim: usize,
}

/// Rank-based model order: the classical order is the rank itself; the
/// quantum dimension is `ceil(sqrt(rank))` rounded up to a power of two.
pub fn order_estimate(h: &HankelMatrix, rel_tol: f64) -> OrderEstimate {
    let rank = h.rank(rel_tol);
    OrderEstimate {
        rank,
        classical_order: rank,
        quantum_dim: quantum_dim_for_rank(rank),
    }
}

pub fn quantum_dim_for_rank(rank: usize) -> usize {
    let mut root = (rank as f64).sqrt().ceil() as usize;
    while root * root < rank {
        root += 1;
    }
    root.max(1).next_power_of_two()
}

pub fn delta(p_l: f64, p_q: f64) -> f64 {
    (p_l - p_q).abs()
}

/// `max_a |P_L(a) − P_Q(a)|` over the union of supports.
pub fn divergence_max(d_l: &DistributionTable, d_q: &DistributionTable) -> f64 {
    union_keys(d_l, d_q)
        .map(|k| delta(d_l.get(k), d_q.get(k)))
        .fold(0.0, f64::max)
}

/// Mean of the per-length maximum divergences; tables are paired by position.
pub fn divergence_avg(target: &[DistributionTable], hyp: &[DistributionTable]) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::Empty("no target tables".into()));
    }
    if target.len() != hyp.len() {
        return Err(Error::Dimension(format!(
            "{} target tables vs {} hypothesis tables",
            target.len(),
            hyp.len()
        )));
    }
    let sum: f64 = target.iter().zip(hyp).map(|(a, b)| divergence_max(a, b)).sum();
    Ok(sum / target.len() as f64)
}

pub const DEFAULT_KL_EPSILON: f64 = 1e-12;

/// `Σ P_L(a) log(P_L(a) / max(P_Q(a), ε))`, natural log; terms with
/// `P_L(a) = 0` contribute nothing.
pub fn kl_divergence(d_l: &DistributionTable, d_q: &DistributionTable, epsilon: f64) -> f64 {
    let kl: f64 = d_l
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(k, p)| p * (p / d_q.get(k).max(epsilon)).ln())
        .sum();
    kl.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(strs: &[&str]) -> Vec<Sequence> {
        strs.iter().map(|s| parse_sequence(s, 2).unwrap()).collect()
    }

    #[test]
    fn enumeration_order() {
        assert_eq!(enumerate_sequences(2, 0).unwrap(), vec![Vec::<usize>::new()]);
        assert_eq!(
            enumerate_sequences(2, 2).unwrap(),
            seqs(&["00", "01", "10", "11"])
        );
        assert_eq!(sequences_up_to(2, 2).unwrap().len(), 7);
        assert!(enumerate_sequences(4, 20).is_err());
    }

    #[test]
    fn sequence_text() {
        assert_eq!(format_sequence(&[0, 1, 1], 2), "011");
        assert_eq!(format_sequence(&[10, 2], 12), "10 2");
        assert_eq!(parse_sequence("10 2", 12).unwrap(), vec![10, 2]);
        assert_eq!(parse_sequence("", 2).unwrap(), Vec::<usize>::new());
        assert!(matches!(parse_sequence("012", 2), Err(Error::UnknownSymbol(_))));
        assert!(parse_sequence("0x", 2).is_err());
    }

    #[test]
    fn windows() {
        let c = seqs(&["0101"]);
        assert_eq!(subsequence_sample(&c, 2), seqs(&["01", "10", "01"]));
        assert!(subsequence_sample(&c, 5).is_empty());
        let c = seqs(&["01", "11", "10"]);
        assert_eq!(subsequence_sample(&c, 2), c);
    }

    #[test]
    fn empirical() {
        let t = empirical_estimate(&seqs(&["01", "10", "01"]), 2, 2).unwrap();
        assert!((t.get(&[0, 1]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.get(&[1, 1]), 0.0);
        assert_eq!(t.total(), 1.0);
        let t = empirical_estimate(&seqs(&["00", "01", "10", "11"]), 2, 2).unwrap();
        assert!(t.iter().all(|(_, p)| p == 0.25));
        assert!(matches!(empirical_estimate(&[], 2, 2), Err(Error::Empty(_))));
    }

    #[test]
    fn hankel_examples() {
        let h = hankel(|s| if s.is_empty() { 1.0 } else { 0.0 }, 2, 2, 2).unwrap();
        assert_eq!(h.values.len(), 7);
        assert_eq!(h.rank(1e-7), 1);
        assert_eq!(order_estimate(&h, 1e-7).quantum_dim, 1);
        assert!(hankel(|_| 0.5, 2, 9, 1).is_err());
        // i.i.d. fair coin: rank 1
        let h = hankel(|s| 0.5f64.powi(s.len() as i32), 2, 3, 3).unwrap();
        assert_eq!(h.rank(1e-7), 1);
        assert_eq!(h.get(&[1], &[0]), Some(0.25));
    }

    #[test]
    fn order_dims() {
        assert_eq!(quantum_dim_for_rank(1), 1);
        assert_eq!(quantum_dim_for_rank(3), 2);
        assert_eq!(quantum_dim_for_rank(4), 2);
        assert_eq!(quantum_dim_for_rank(5), 4);
        assert_eq!(quantum_dim_for_rank(10), 4);
        assert_eq!(quantum_dim_for_rank(17), 8);
    }

    #[test]
    fn divergences() {
        assert_eq!(delta(0.5, 0.5), 0.0);
        assert_eq!(delta(0.75, 0.5), 0.25);
        let a = DistributionTable::from_entries(1, 2, [(vec![0], 1.0)]).unwrap();
        let b = DistributionTable::from_entries(1, 2, [(vec![1], 1.0)]).unwrap();
        assert_eq!(divergence_max(&a, &a), 0.0);
        assert_eq!(divergence_max(&a, &b), 1.0);
        assert_eq!(a.total_variation(&b), 1.0);

        let u = DistributionTable::from_fn(1, 2, |_| 0.5).unwrap();
        assert!((kl_divergence(&a, &u, DEFAULT_KL_EPSILON) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&u, &u, DEFAULT_KL_EPSILON), 0.0);

        let tables: Vec<_> = (1..=5).map(|t| DistributionTable::from_fn(t, 2, |_| 0.5f64.powi(t as i32)).unwrap()).collect();
        let mut off = tables.clone();
        let s0 = vec![0; 3];
        let p = off[2].get(&s0);
        off[2].insert(s0, p + 0.1).unwrap();
        assert!((divergence_avg(&tables, &off).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(divergence_avg(&tables, &tables).unwrap(), 0.0);
        assert!(divergence_avg(&tables, &tables[..2]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t1 = DistributionTable::from_entries(1, 2, [(vec![0], 0.75), (vec![1], 0.25)]).unwrap();
        let t2 = DistributionTable::from_fn(2, 2, |s| if s[0] == 0 { 0.375 } else { 0.125 }).unwrap();
        let mut buf = Vec::new();
        write_tables_csv(&[t1.clone(), t2.clone()], &mut buf).unwrap();
        let back = read_tables_csv(buf.as_slice(), Some(2)).unwrap();
        assert_eq!(back, vec![t1, t2]);

        let back = read_tables_csv("0,0.5\n1,0.5\n".as_bytes(), None).unwrap();
        assert_eq!(back[0].alphabet_size(), 2);
        assert!(read_tables_csv("01\n".as_bytes(), None).is_err());
    }
}
