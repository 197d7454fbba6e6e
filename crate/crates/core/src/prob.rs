//! Finite-alphabet probability primitives.
//!
//! Everything here is measured in bits. `0 log 0` and `0 log(0/0)` are
//! resolved to zero by an explicit branch; no epsilon smoothing is applied.

use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};

/// Inputs whose mass is within this distance of one are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// A finite alphabet `{0, .., size - 1}` with a short display label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    label: String,
}

impl Alphabet {
    pub fn new(size: usize, label: impl Into<String>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("alphabet size must be positive".into()));
        }
        Ok(Alphabet {
            size,
            label: label.into(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// `x log2 x` with the convention `0 log 0 = 0`.
#[inline]
pub fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// `x ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

fn normalize_vector(what: &str, values: &mut [f64]) -> std::result::Result<(), String> {
    if values.is_empty() {
        return Err(format!("{what} is empty"));
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(format!("{what} entry {i} is not finite"));
        }
        if v < -RENORMALIZE_TOL {
            return Err(format!("{what} entry {i} is negative ({v})"));
        }
    }
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if (total - 1.0).abs() > RENORMALIZE_TOL {
        return Err(format!("{what} sums to {total}, not 1"));
    }
    for v in values.iter_mut() {
        *v = v.max(0.0) / total;
    }
    Ok(())
}

/// A probability vector over an [`Alphabet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        check_size("distribution", alphabet.size(), probs.len())?;
        let mut probs = probs;
        normalize_vector("distribution", &mut probs).map_err(Error::InvalidDistribution)?;
        Ok(Distribution { alphabet, probs })
    }

    /// Convenience constructor with the alphabet label `"X"`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let alphabet = Alphabet::new(probs.len(), "X")?;
        Distribution::new(alphabet, probs)
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        Distribution {
            alphabet,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(alphabet: Alphabet, symbol: usize) -> Result<Self> {
        if symbol >= alphabet.size() {
            return Err(Error::SymbolOutOfRange {
                symbol,
                size: alphabet.size(),
            });
        }
        let mut probs = vec![0.0; alphabet.size()];
        probs[symbol] = 1.0;
        Ok(Distribution { alphabet, probs })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Distribution, lambda: f64) -> Result<Distribution> {
        check_size("mix", self.len(), other.len())?;
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Distribution::new(self.alphabet.clone(), probs)
    }
}

/// A row-stochastic matrix: one conditional distribution per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    input: Alphabet,
    output: Alphabet,
    data: Vec<f64>,
}

impl Channel {
    pub fn new(input: Alphabet, output: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_size("channel rows", input.size(), rows.len())?;
        let mut data = Vec::with_capacity(input.size() * output.size());
        for (x, mut row) in rows.into_iter().enumerate() {
            check_size("channel row", output.size(), row.len())?;
            normalize_vector(&format!("channel row {x}"), &mut row).map_err(Error::InvalidChannel)?;
            data.extend(row);
        }
        Ok(Channel {
            input,
            output,
            data,
        })
    }

    /// Builds a channel with alphabets labelled `"X"` and `"Y"`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map(|r| r.len()).unwrap_or(0);
        Channel::new(Alphabet::new(nx, "X")?, Alphabet::new(ny, "Y")?, rows)
    }

    pub(crate) fn from_flat(input: Alphabet, output: Alphabet, data: Vec<f64>) -> Result<Self> {
        let ny = output.size();
        let rows = data.chunks(ny).map(|r| r.to_vec()).collect();
        Channel::new(input, output, rows)
    }

    pub fn identity(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Channel {
            input: alphabet.clone(),
            output: alphabet,
            data,
        }
    }

    /// The channel that emits `symbol` regardless of its input.
    pub fn constant_output(input: Alphabet, output: Alphabet, symbol: usize) -> Result<Self> {
        if symbol >= output.size() {
            return Err(Error::SymbolOutOfRange {
                symbol,
                size: output.size(),
            });
        }
        let ny = output.size();
        let mut data = vec![0.0; input.size() * ny];
        for x in 0..input.size() {
            data[x * ny + symbol] = 1.0;
        }
        Ok(Channel {
            input,
            output,
            data,
        })
    }

    /// Deterministic channel `x -> map[x]`.
    pub fn deterministic(input: Alphabet, output: Alphabet, map: &[usize]) -> Result<Self> {
        check_size("deterministic map", input.size(), map.len())?;
        let ny = output.size();
        let mut data = vec![0.0; input.size() * ny];
        for (x, &y) in map.iter().enumerate() {
            if y >= ny {
                return Err(Error::SymbolOutOfRange { symbol: y, size: ny });
            }
            data[x * ny + y] = 1.0;
        }
        Ok(Channel {
            input,
            output,
            data,
        })
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn input_size(&self) -> usize {
        self.input.size()
    }

    pub fn output_size(&self) -> usize {
        self.output.size()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.output.size() + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let ny = self.output.size();
        &self.data[x * ny..(x + 1) * ny]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.output.size())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// Row-major entries.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Output law when the input is distributed as `p`.
    pub fn output_distribution(&self, p: &Distribution) -> Result<Distribution> {
        check_size("channel input", self.input_size(), p.len())?;
        let mut out = vec![0.0; self.output_size()];
        for (x, row) in self.rows().enumerate() {
            for (o, w) in out.iter_mut().zip(row) {
                *o += p.get(x) * w;
            }
        }
        Distribution::new(self.output.clone(), out)
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Channel, lambda: f64) -> Result<Channel> {
        check_size("channel mix inputs", self.input_size(), other.input_size())?;
        check_size("channel mix outputs", self.output_size(), other.output_size())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Channel::from_flat(self.input.clone(), self.output.clone(), data)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Same matrix with the alphabet labels replaced.
    pub fn relabel(&self, input: &str, output: &str) -> Channel {
        Channel {
            input: Alphabet {
                size: self.input.size,
                label: input.into(),
            },
            output: Alphabet {
                size: self.output.size,
                label: output.into(),
            },
            data: self.data.clone(),
        }
    }
}

/// A joint law on a product of alphabets, stored row-major with the last
/// axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    alphabets: Vec<Alphabet>,
    probs: Vec<f64>,
}

impl Joint {
    pub fn new(alphabets: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        if alphabets.is_empty() {
            return Err(Error::ShapeMismatch("joint needs at least one axis".into()));
        }
        let len: usize = alphabets.iter().map(Alphabet::size).product();
        check_size("joint tensor", len, probs.len())?;
        let mut probs = probs;
        normalize_vector("joint", &mut probs).map_err(Error::InvalidDistribution)?;
        Ok(Joint { alphabets, probs })
    }

    /// `P(x) W(y|x)` over `(X, Y)`.
    pub fn from_input_channel(p: &Distribution, w: &Channel) -> Result<Self> {
        check_size("channel input", w.input_size(), p.len())?;
        let ny = w.output_size();
        let mut probs = vec![0.0; p.len() * ny];
        for x in 0..p.len() {
            for y in 0..ny {
                probs[x * ny + y] = p.get(x) * w.get(x, y);
            }
        }
        Joint::new(vec![w.input().clone(), w.output().clone()], probs)
    }

    /// `P(x) V(u|x) W(y|x)` laid out over `(U, X, Y)`.
    pub fn markov_uxy(px: &Distribution, v: &Channel, w: &Channel) -> Result<Self> {
        check_size("test channel input", v.input_size(), px.len())?;
        check_size("side channel input", w.input_size(), px.len())?;
        let (nu, nx, ny) = (v.output_size(), px.len(), w.output_size());
        let mut probs = vec![0.0; nu * nx * ny];
        for u in 0..nu {
            for x in 0..nx {
                let pux = px.get(x) * v.get(x, u);
                for y in 0..ny {
                    probs[(u * nx + x) * ny + y] = pux * w.get(x, y);
                }
            }
        }
        Joint::new(
            vec![v.output().clone(), px.alphabet().clone(), w.output().clone()],
            probs,
        )
    }

    pub fn dims(&self) -> Vec<usize> {
        self.alphabets.iter().map(Alphabet::size).collect()
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal on the listed axes, in the listed order.
    pub fn marginal(&self, keep: &[usize]) -> Result<Joint> {
        let dims = self.dims();
        for &a in keep {
            if a >= dims.len() {
                return Err(Error::ShapeMismatch(format!(
                    "axis {a} out of range for {}-dimensional joint",
                    dims.len()
                )));
            }
        }
        let out_dims: Vec<usize> = keep.iter().map(|&a| dims[a]).collect();
        let mut out = vec![0.0; out_dims.iter().product()];
        let mut index = vec![0usize; dims.len()];
        for &p in &self.probs {
            let mut flat = 0;
            for &a in keep {
                flat = flat * dims[a] + index[a];
            }
            out[flat] += p;
            for axis in (0..dims.len()).rev() {
                index[axis] += 1;
                if index[axis] < dims[axis] {
                    break;
                }
                index[axis] = 0;
            }
        }
        Joint::new(keep.iter().map(|&a| self.alphabets[a].clone()).collect(), out)
    }

    /// Entropy of the whole joint, in bits.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }
}

/// Entropy of a probability vector, in bits.
pub fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().map(|&v| xlog2x(v)).sum::<f64>()
}

/// `H(p)` in bits.
pub fn entropy(p: &Distribution) -> f64 {
    entropy_of(p.probs()).max(0.0)
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -(xlog2x(p) + xlog2x(1.0 - p))
}

/// `I(P, W)`: mutual information between input and output, in bits.
pub fn mutual_information(p: &Distribution, w: &Channel) -> Result<f64> {
    check_size("channel input", w.input_size(), p.len())?;
    let q = w.output_distribution(p)?;
    let mut total = 0.0;
    for x in 0..p.len() {
        let px = p.get(x);
        if px == 0.0 {
            continue;
        }
        for (y, &wyx) in w.row(x).iter().enumerate() {
            if wyx > 0.0 {
                total += px * wyx * (wyx / q.get(y)).log2();
            }
        }
    }
    Ok(total.max(0.0))
}

/// `I(U; X | Y)` for a joint laid out over `(U, X, Y)`.
pub fn conditional_mutual_information(joint: &Joint) -> Result<f64> {
    if joint.alphabets().len() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "conditional mutual information needs a 3-axis joint, got {}",
            joint.alphabets().len()
        )));
    }
    let uy = joint.marginal(&[0, 2])?;
    let xy = joint.marginal(&[1, 2])?;
    let y = joint.marginal(&[2])?;
    // I(U;X|Y) = H(U,Y) + H(X,Y) - H(U,X,Y) - H(Y)
    let value = uy.entropy() + xy.entropy() - joint.entropy() - y.entropy();
    Ok(value.max(0.0))
}

/// `I(A; B)` for a two-axis joint.
pub fn joint_mutual_information(joint: &Joint) -> Result<f64> {
    if joint.alphabets().len() != 2 {
        return Err(Error::ShapeMismatch("expected a 2-axis joint".into()));
    }
    let a = joint.marginal(&[0])?;
    let b = joint.marginal(&[1])?;
    Ok((a.entropy() + b.entropy() - joint.entropy()).max(0.0))
}

/// Unnormalized L1 distance `sum |p - q|`, in `[0, 2]`.
pub fn variational_distance(p: &Joint, q: &Joint) -> Result<f64> {
    if p.dims() != q.dims() {
        return Err(Error::ShapeMismatch(format!(
            "variational distance between shapes {:?} and {:?}",
            p.dims(),
            q.dims()
        )));
    }
    Ok(l1_distance(p.probs(), q.probs()))
}

pub(crate) fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}
