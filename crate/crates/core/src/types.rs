//! Method of types: sequence types, conditional types, shells and typicality.
//!
//! Shell sizes are exact big integers; probabilities of type classes are
//! handled in the log domain through a log-factorial table.

use num_bigint::BigUint;

use crate::error::{check_size, Error, Result};
use crate::geometry::DistortionMeasure;
use crate::prob::Distribution;

/// Composition of a length-`n` sequence over an alphabet of `alphabet_size`
/// symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequenceType {
    counts: Vec<usize>,
    n: usize,
}

impl SequenceType {
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("type over an empty alphabet".into()));
        }
        let n = counts.iter().sum();
        Ok(SequenceType { counts, n })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// The induced empirical distribution `counts / n`.
    pub fn distribution(&self) -> Result<Distribution> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("empty sequence has no type".into()));
        }
        let n = self.n as f64;
        Distribution::from_probs(self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    /// Number of sequences of this type.
    pub fn class_size(&self) -> BigUint {
        multinomial(self.n, &self.counts)
    }
}

/// The type of `seq`. Symbols must lie in `0..alphabet_size`.
pub fn type_of(seq: &[usize], alphabet_size: usize) -> Result<SequenceType> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument("type of an empty sequence".into()));
    }
    let mut counts = vec![0usize; alphabet_size];
    for &s in seq {
        if s >= alphabet_size {
            return Err(Error::SymbolOutOfRange {
                symbol: s,
                size: alphabet_size,
            });
        }
        counts[s] += 1;
    }
    SequenceType::from_counts(counts)
}

/// Lexicographic iterator over all compositions of `n` into `parts` parts.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<usize>>,
}

impl Compositions {
    pub fn new(n: usize, parts: usize) -> Self {
        if parts == 0 {
            return Compositions { current: None };
        }
        let mut first = vec![0; parts];
        first[0] = n;
        Compositions {
            current: Some(first),
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let c = self.current.as_mut().unwrap();
        let k = c.len();
        // Find the rightmost non-last position holding mass, move one unit
        // right and gather everything after it.
        let pos = (0..k.saturating_sub(1)).rev().find(|&i| c[i] > 0);
        match pos {
            None => self.current = None,
            Some(i) => {
                let tail: usize = c[i + 1..].iter().sum();
                c[i] -= 1;
                for v in c[i + 1..].iter_mut() {
                    *v = 0;
                }
                c[i + 1] = tail + 1;
            }
        }
        Some(out)
    }
}

/// All types of length-`n` sequences over `alphabet_size` symbols.
pub fn enumerate_types(alphabet_size: usize, n: usize) -> Result<Vec<SequenceType>> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength must be at least 1".into()));
    }
    if alphabet_size == 0 {
        return Err(Error::InvalidArgument("alphabet size must be positive".into()));
    }
    Ok(Compositions::new(n, alphabet_size)
        .map(|counts| SequenceType { counts, n })
        .collect())
}

/// Joint composition `counts[x][y]` of `(x^n, y^n)`, viewed as a conditional
/// type given the input type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionalType {
    input: SequenceType,
    output_size: usize,
    counts: Vec<Vec<usize>>,
}

impl ConditionalType {
    pub fn new(input: SequenceType, counts: Vec<Vec<usize>>) -> Result<Self> {
        check_size("conditional type rows", input.alphabet_size(), counts.len())?;
        let output_size = counts.first().map(|r| r.len()).unwrap_or(0);
        if output_size == 0 {
            return Err(Error::InvalidArgument("conditional type over an empty output alphabet".into()));
        }
        for (x, row) in counts.iter().enumerate() {
            check_size("conditional type row", output_size, row.len())?;
            let total: usize = row.iter().sum();
            if total != input.counts()[x] {
                return Err(Error::InvalidArgument(format!(
                    "row {x} sums to {total}, input type has {}",
                    input.counts()[x]
                )));
            }
        }
        Ok(ConditionalType {
            input,
            output_size,
            counts,
        })
    }

    pub fn input(&self) -> &SequenceType {
        &self.input
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    /// The conditional law `W(y|x) = counts[x][y] / counts[x]`; rows of
    /// symbols absent from the input are uniform.
    pub fn channel_rows(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .zip(self.input.counts())
            .map(|(row, &nx)| {
                if nx == 0 {
                    vec![1.0 / self.output_size as f64; self.output_size]
                } else {
                    row.iter().map(|&c| c as f64 / nx as f64).collect()
                }
            })
            .collect()
    }

    /// `e(P, W)` for the joint type, i.e. the per-letter distortion shared by
    /// every pair in the shell.
    pub fn distortion(&self, measure: &DistortionMeasure) -> Result<f64> {
        check_size("distortion rows", measure.rows(), self.counts.len())?;
        check_size("distortion columns", measure.cols(), self.output_size)?;
        let n = self.input.n() as f64;
        let mut total = 0.0;
        for (x, row) in self.counts.iter().enumerate() {
            for (y, &c) in row.iter().enumerate() {
                total += c as f64 * measure.get(x, y);
            }
        }
        Ok(total / n)
    }
}

/// Joint composition of two equal-length sequences.
pub fn conditional_type_of(
    x: &[usize],
    y: &[usize],
    x_size: usize,
    y_size: usize,
) -> Result<ConditionalType> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "sequences of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let input = type_of(x, x_size)?;
    let mut counts = vec![vec![0usize; y_size]; x_size];
    for (&a, &b) in x.iter().zip(y) {
        if b >= y_size {
            return Err(Error::SymbolOutOfRange {
                symbol: b,
                size: y_size,
            });
        }
        counts[a][b] += 1;
    }
    ConditionalType::new(input, counts)
}

/// Lazily enumerates every conditional type compatible with `input`.
pub fn conditional_types(input: &SequenceType, output_size: usize) -> ConditionalTypes {
    let rows: Vec<Compositions> = input
        .counts()
        .iter()
        .map(|&c| Compositions::new(c, output_size))
        .collect();
    ConditionalTypes::new(input.clone(), output_size, rows)
}

/// Odometer over per-row compositions.
#[derive(Debug, Clone)]
pub struct ConditionalTypes {
    input: SequenceType,
    output_size: usize,
    fresh: Vec<Compositions>,
    iters: Vec<Compositions>,
    current: Option<Vec<Vec<usize>>>,
}

impl ConditionalTypes {
    fn new(input: SequenceType, output_size: usize, rows: Vec<Compositions>) -> Self {
        let mut iters = rows.clone();
        let current = if output_size == 0 {
            None
        } else {
            iters.iter_mut().map(|it| it.next()).collect::<Option<Vec<_>>>()
        };
        ConditionalTypes {
            input,
            output_size,
            fresh: rows,
            iters,
            current,
        }
    }
}

impl Iterator for ConditionalTypes {
    type Item = ConditionalType;

    fn next(&mut self) -> Option<ConditionalType> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut advanced = false;
        for row in (0..cur.len()).rev() {
            if let Some(next) = self.iters[row].next() {
                cur[row] = next;
                advanced = true;
                break;
            }
            let mut restart = self.fresh[row].clone();
            cur[row] = restart.next().expect("compositions are never empty");
            self.iters[row] = restart;
        }
        if !advanced {
            self.current = None;
        }
        Some(ConditionalType {
            input: self.input.clone(),
            output_size: self.output_size,
            counts: out,
        })
    }
}

/// `n! / prod(k_i!)` as an exact integer.
pub fn multinomial(n: usize, parts: &[usize]) -> BigUint {
    // Build it as a product of binomials to keep intermediates small.
    let mut result = BigUint::from(1u32);
    let mut remaining = n;
    for &k in parts {
        result *= binomial(remaining, k);
        remaining -= k.min(remaining);
    }
    result
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut num = BigUint::from(1u32);
    for i in 0..k {
        num *= n - i;
        num /= i + 1;
    }
    num
}

/// `|T_W(x^n)|`: number of `y^n` with the given conditional type.
pub fn shell_size(ct: &ConditionalType) -> BigUint {
    ct.counts
        .iter()
        .zip(ct.input.counts())
        .map(|(row, &nx)| multinomial(nx, row))
        .product()
}

/// Table of `ln k!` for `k = 0..=max`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        LogFactorials { table }
    }

    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    pub fn ln_multinomial(&self, n: usize, parts: &[usize]) -> f64 {
        self.table[n] - parts.iter().map(|&k| self.table[k]).sum::<f64>()
    }
}

/// `log2 |T_W(x^n)|` through the log-factorial table.
pub fn log2_shell_size(ct: &ConditionalType, table: &LogFactorials) -> f64 {
    ct.counts
        .iter()
        .zip(ct.input.counts())
        .map(|(row, &nx)| table.ln_multinomial(nx, row))
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Typicality with the closed inequality `|P_{x^n}(a) - P(a)| <= delta` for
/// all `a`, plus the support condition. Comparisons allow `1e-12` of float
/// slack so that exact boundary cases count as typical.
pub fn is_typical(seq: &[usize], p: &Distribution, delta: f64) -> Result<bool> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidArgument("typicality constant must be positive".into()));
    }
    let t = type_of(seq, p.len())?;
    let n = t.n() as f64;
    Ok(t.counts().iter().zip(p.probs()).all(|(&c, &pa)| {
        if pa == 0.0 && c > 0 {
            return false;
        }
        (c as f64 / n - pa).abs() <= delta + 1e-12
    }))
}

/// Upper bound `2|X| 2^{-n 2 delta^2 / (5 ln 2)}` on the probability of the
/// non-typical set.
pub fn atypicality_bound(alphabet_size: usize, n: usize, delta: f64) -> f64 {
    let exponent = n as f64 * 2.0 * delta * delta / (5.0 * std::f64::consts::LN_2);
    2.0 * alphabet_size as f64 * (-exponent).exp2()
}

/// Per-letter average distortion `(1/n) sum e(x_t, y_t)`.
pub fn empirical_distortion(x: &[usize], y: &[usize], measure: &DistortionMeasure) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "sequences of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty sequences".into()));
    }
    let mut total = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        if a >= measure.rows() {
            return Err(Error::SymbolOutOfRange {
                symbol: a,
                size: measure.rows(),
            });
        }
        if b >= measure.cols() {
            return Err(Error::SymbolOutOfRange {
                symbol: b,
                size: measure.cols(),
            });
        }
        total += measure.get(a, b);
    }
    Ok(total / x.len() as f64)
}

/// Empirical conditional entropy `H(P_{u|y})` in bits, computed from the
/// joint composition of the two sequences.
pub fn empirical_conditional_entropy(u: &[usize], y: &[usize], u_size: usize, y_size: usize) -> f64 {
    let mut joint = vec![0u32; u_size * y_size];
    let mut marg = vec![0u32; y_size];
    for (&a, &b) in u.iter().zip(y) {
        joint[a * y_size + b] += 1;
        marg[b] += 1;
    }
    let n = u.len() as f64;
    let mut h = 0.0;
    for a in 0..u_size {
        for b in 0..y_size {
            let c = joint[a * y_size + b];
            if c > 0 {
                h -= c as f64 * (c as f64 / marg[b] as f64).log2();
            }
        }
    }
    h / n
}
