//! Hash bin codes over `U^n`, the randomized quantizer and the minimum
//! empirical conditional entropy decoder.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::TestChannel;
use crate::types::empirical_conditional_entropy;

/// Largest `|U|^n` a code will enumerate.
pub const MAX_DOMAIN: u64 = 1 << 24;

/// Index of `u^n` in lexicographic order, first coordinate most significant.
pub fn encode_sequence(u: &[usize], alphabet: usize) -> u64 {
    u.iter().fold(0u64, |k, &s| k * alphabet as u64 + s as u64)
}

pub fn decode_sequence(mut k: u64, alphabet: usize, n: usize) -> Vec<usize> {
    let mut u = vec![0; n];
    for t in (0..n).rev() {
        u[t] = (k % alphabet as u64) as usize;
        k /= alphabet as u64;
    }
    u
}

/// Multiply-add-shift hash `((a k + b) mod 2^64) >> 32`, reduced to
/// `[0, bins)` by a multiply-high.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinHash {
    pub a: u64,
    pub b: u64,
    pub bins: u64,
}

impl BinHash {
    pub fn random<R: Rng + ?Sized>(bins: u64, rng: &mut R) -> Self {
        BinHash {
            a: rng.random::<u64>() | 1,
            b: rng.random::<u64>(),
            bins: bins.max(1),
        }
    }

    #[inline]
    pub fn bin(&self, k: u64) -> u64 {
        let h = self.a.wrapping_mul(k).wrapping_add(self.b) >> 32;
        (h * self.bins) >> 32
    }
}

/// A two-layer binning of `U^n`: `f` indexes the shared randomness and `g`
/// the transmitted message.
#[derive(Debug, Clone)]
pub struct BinCode {
    pub n: usize,
    pub alphabet: usize,
    pub f: BinHash,
    pub g: BinHash,
    /// Members of each `f` bin in increasing order.
    slices: Vec<Vec<u32>>,
}

pub fn domain_size(alphabet: usize, n: usize) -> Result<u64> {
    let mut size: u64 = 1;
    for _ in 0..n {
        size = size.saturating_mul(alphabet as u64);
        if size > MAX_DOMAIN {
            return Err(Error::CapExceeded(format!(
                "|U|^n = {alphabet}^{n} exceeds the enumeration limit {MAX_DOMAIN}"
            )));
        }
    }
    Ok(size)
}

impl BinCode {
    pub fn random<R: Rng + ?Sized>(n: usize, alphabet: usize, bins_f: u64, bins_g: u64, rng: &mut R) -> Result<Self> {
        let size = domain_size(alphabet, n)?;
        let f = BinHash::random(bins_f, rng);
        let g = BinHash::random(bins_g, rng);
        let mut slices = vec![Vec::new(); f.bins as usize];
        for k in 0..size {
            slices[f.bin(k) as usize].push(k as u32);
        }
        Ok(BinCode {
            n,
            alphabet,
            f,
            g,
            slices,
        })
    }

    pub fn bins_f(&self) -> u64 {
        self.f.bins
    }

    pub fn bins_g(&self) -> u64 {
        self.g.bins
    }

    pub fn slice(&self, s: u64) -> &[u32] {
        &self.slices[s as usize]
    }
}

/// `V^n(u^n | x^n)` with early exit on a zero factor.
fn sequence_weight(k: u64, x: &[usize], v: &TestChannel) -> f64 {
    let nu = v.functions().len() as u64;
    let mut rest = k;
    let mut w = 1.0;
    for t in (0..x.len()).rev() {
        let u = (rest % nu) as usize;
        rest /= nu;
        w *= v.get(x[t], u);
        if w == 0.0 {
            return 0.0;
        }
    }
    w
}

/// Result of the quantizer for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub u: u64,
    pub s: u64,
    pub message: u64,
    /// Shared-randomness draws that hit an empty slice.
    pub resamples: usize,
}

pub const MAX_SLICE_ATTEMPTS: usize = 32;

/// Draws the shared index `s` uniformly, samples `U^n` from `V^n(.|x^n)`
/// restricted to the bin `f(u^n) = s`, and returns `g(U^n)`. Slices with
/// no conditional mass trigger a fresh `s`; `None` after
/// [`MAX_SLICE_ATTEMPTS`] draws.
pub fn encode<R: Rng + ?Sized>(x: &[usize], v: &TestChannel, code: &BinCode, rng: &mut R) -> Option<Encoded> {
    let mut weights = Vec::new();
    for attempt in 0..MAX_SLICE_ATTEMPTS {
        let s = rng.random_range(0..code.bins_f());
        let slice = code.slice(s);
        weights.clear();
        weights.extend(slice.iter().map(|&k| sequence_weight(k as u64, x, v)));
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let mut r = rng.random::<f64>() * total;
        let mut chosen = None;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                chosen = Some(i);
                if r < w {
                    break;
                }
                r -= w;
            }
        }
        let u = slice[chosen.expect("positive total")] as u64;
        return Some(Encoded {
            u,
            s,
            message: code.g.bin(u),
            resamples: attempt,
        });
    }
    None
}

/// Among `u^n` with `f(u^n) = s` and `g(u^n) = message`, the sequence of
/// minimum empirical conditional entropy given `y^n`; ties go to the
/// lexicographically first. `None` when the bin intersection is empty.
pub fn decode(y: &[usize], s: u64, message: u64, code: &BinCode, y_size: usize) -> Option<u64> {
    let mut best: Option<(f64, u64)> = None;
    for &k in code.slice(s) {
        let k = k as u64;
        if code.g.bin(k) != message {
            continue;
        }
        let u = decode_sequence(k, code.alphabet, code.n);
        let h = empirical_conditional_entropy(&u, y, code.alphabet, y_size);
        if best.is_none_or(|(bh, _)| h < bh - 1e-12) {
            best = Some((h, k));
        }
    }
    best.map(|(_, k)| k)
}
