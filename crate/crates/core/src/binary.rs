//! Uniform binary source with Hamming side and reproduction distortions:
//! parametric ground truth for the generic solvers.

use crate::error::{Error, Result};
use crate::geometry::{FunctionAlphabet, TestChannel};
use crate::prob::{binary_entropy, Channel};
use std::sync::Arc;

/// Binary channel with crossover `alpha = W(1|0)` and `beta = W(0|1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryChannelParam {
    pub alpha: f64,
    pub beta: f64,
}

impl BinaryChannelParam {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(BinaryChannelParam { alpha, beta })
    }

    /// Expected Hamming side distortion under a uniform source.
    pub fn side_distortion(&self) -> f64 {
        (self.alpha + self.beta) / 2.0
    }

    pub fn in_class(&self, budget: f64) -> bool {
        self.side_distortion() <= budget + 1e-12
    }

    pub fn channel(&self) -> Channel {
        Channel::from_rows(vec![vec![1.0 - self.alpha, self.alpha], vec![self.beta, 1.0 - self.beta]])
            .expect("valid binary channel")
    }
}

/// Test channel family: with probability `lambda` send the source through a
/// BSC(q) and reproduce it as a constant, otherwise let the decoder output
/// the side information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WZParametric {
    pub lambda: f64,
    pub q: f64,
}

impl WZParametric {
    pub fn new(lambda: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !(0.0..=0.5).contains(&q) {
            return Err(Error::InvalidArgument(format!(
                "lambda = {lambda} must lie in [0, 1] and q = {q} in [0, 1/2]"
            )));
        }
        Ok(WZParametric { lambda, q })
    }

    /// Rate `lambda [h(E * q) - h(q)]` against BSC(E).
    pub fn rate(&self, e: f64) -> f64 {
        self.lambda * (binary_entropy(convolve(e, self.q)) - binary_entropy(self.q))
    }

    /// Distortion `lambda q + (1 - lambda) E` against BSC(E).
    pub fn distortion(&self, e: f64) -> f64 {
        self.lambda * self.q + (1.0 - self.lambda) * e
    }

    /// The family member as a test channel over the binary function alphabet.
    pub fn test_channel(&self, functions: Arc<FunctionAlphabet>) -> Result<TestChannel> {
        if functions.y_size() != 2 || functions.xhat_size() != 2 {
            return Err(Error::Unsupported("parametric test channel needs binary alphabets".into()));
        }
        let (l, q) = (self.lambda, self.q);
        let zero = functions.constant(0);
        let one = functions.constant(1);
        let id = functions.identity().expect("binary identity");
        let mut rows = vec![vec![0.0; functions.len()]; 2];
        rows[0][zero] = l * (1.0 - q);
        rows[0][one] = l * q;
        rows[1][zero] = l * q;
        rows[1][one] = l * (1.0 - q);
        rows[0][id] += 1.0 - l;
        rows[1][id] += 1.0 - l;
        TestChannel::from_rows(rows, functions)
    }
}

/// Binary convolution `a(1 - b) + b(1 - a)`.
pub fn convolve(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b;
    }
    if b == 0.0 {
        return a;
    }
    a * (1.0 - b) + b * (1.0 - a)
}

/// Binary symmetric channel with crossover `p`.
pub fn bsc(p: f64) -> Result<Channel> {
    Ok(BinaryChannelParam::new(p, p)?.channel())
}

fn check_budget(e: f64) -> Result<()> {
    if !(e > 0.0 && e <= 0.5) {
        return Err(Error::InvalidArgument(format!("side distortion budget {e} outside (0, 1/2]")));
    }
    Ok(())
}

/// Rate of the parametric family at the smallest feasible `lambda` for `q`.
fn tight_rate(e: f64, level: f64, q: f64) -> f64 {
    let lambda = ((e - level) / (e - q)).clamp(0.0, 1.0);
    WZParametric { lambda, q }.rate(e)
}

/// Minimum of `lambda [h(E * q) - h(q)]` subject to
/// `lambda q + (1 - lambda) E <= D`, by a dense grid over `q` and golden
/// section refinement. The constraint is tight at the optimum, so only `q`
/// is searched.
pub fn wz_binary_oracle(e: f64, level: f64) -> Result<f64> {
    check_budget(e)?;
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::InvalidArgument(format!("distortion {level} outside [0, 1]")));
    }
    if level >= e {
        return Ok(0.0);
    }
    if level == 0.0 {
        return Ok(binary_entropy(e));
    }
    // Feasible q satisfy q <= D.
    let top = level.min(0.5);
    let steps = ((top / 1e-4).ceil() as usize).max(1000);
    let h = top / steps as f64;
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..=steps {
        let v = tight_rate(e, level, k as f64 * h);
        if v < best.0 {
            best = (v, k);
        }
    }
    let mut a = (best.1.saturating_sub(1)) as f64 * h;
    let mut b = ((best.1 + 1).min(steps)) as f64 * h;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if tight_rate(e, level, c) <= tight_rate(e, level, d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(best.0.min(tight_rate(e, level, 0.5 * (a + b))))
}

/// Time sharing between `1 - h(D)` and the estimation-only point `(E, 0)`:
/// the lower convex envelope of the two evaluated at `D`.
pub fn ra_upper_binary_oracle(e: f64, level: f64) -> Result<f64> {
    check_budget(e)?;
    if level < 0.0 {
        return Err(Error::InvalidArgument(format!("negative distortion {level}")));
    }
    if level >= e {
        return Ok(0.0);
    }
    let curve = |t: f64| 1.0 - binary_entropy(t);
    // Tangency point t: the chord from (t, 1 - h(t)) to (E, 0) has the
    // curve's slope -log2((1 - t)/t).
    let gap = |t: f64| curve(t) - (e - t) * ((1.0 - t) / t).log2();
    let (mut lo, mut hi) = (1e-300, e);
    if gap(hi) <= 0.0 {
        return Ok(curve(level));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = hi;
    if level <= t {
        Ok(curve(level))
    } else {
        Ok(curve(t) * (e - level) / (e - t))
    }
}

/// The two extreme asymmetric channels of `W1(E)`: `alpha = 2E, beta = 0`
/// and `alpha = 0, beta = 2E`.
pub fn fig4_channels(e: f64) -> Result<(Channel, Channel)> {
    if !(0.0..=0.5).contains(&e) {
        return Err(Error::InvalidArgument(format!("side distortion budget {e} outside [0, 1/2]")));
    }
    Ok((
        BinaryChannelParam::new(2.0 * e, 0.0)?.channel(),
        BinaryChannelParam::new(0.0, 2.0 * e)?.channel(),
    ))
}
