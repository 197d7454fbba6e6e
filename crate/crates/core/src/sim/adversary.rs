//! Side-information channels acting on whole blocks.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};
use crate::geometry::side_distortion;
use crate::prob::Channel;
use crate::solvers::RDProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Adversary {
    /// Memoryless channel `W^n`.
    Iid { name: String, channel: Channel },
    /// `lambda W1^n + (1 - lambda) W2^n`: one of the two memoryless channels
    /// is picked per block.
    Compound {
        name: String,
        lambda: f64,
        first: Channel,
        second: Channel,
    },
    /// Realizes the conditional type closest to `channel` exactly, on
    /// uniformly permuted positions.
    FixedType { name: String, channel: Channel },
    /// `inner` acting on the block reordered by `permutation`, or by a fresh
    /// uniform permutation per block when none is given. The random form
    /// makes any inner adversary permutation invariant.
    Permuted {
        name: String,
        permutation: Option<Vec<usize>>,
        inner: Box<Adversary>,
    },
}

impl Adversary {
    pub fn name(&self) -> &str {
        match self {
            Adversary::Iid { name, .. }
            | Adversary::Compound { name, .. }
            | Adversary::FixedType { name, .. }
            | Adversary::Permuted { name, .. } => name,
        }
    }

    /// Expected side distortion under the problem's source.
    pub fn side_distortion(&self, problem: &RDProblem) -> Result<f64> {
        let (px, e) = (problem.px(), problem.side_measure());
        match self {
            Adversary::Iid { channel, .. } | Adversary::FixedType { channel, .. } => side_distortion(px, channel, e),
            Adversary::Compound {
                lambda, first, second, ..
            } => {
                if !(0.0..=1.0).contains(lambda) {
                    return Err(Error::InvalidArgument(format!("compound weight {lambda} outside [0, 1]")));
                }
                Ok(lambda * side_distortion(px, first, e)? + (1.0 - lambda) * side_distortion(px, second, e)?)
            }
            Adversary::Permuted { inner, .. } => inner.side_distortion(problem),
        }
    }

    /// Checks alphabets and the side-distortion budget.
    pub fn validate(&self, problem: &RDProblem) -> Result<()> {
        let channels: Vec<&Channel> = match self {
            Adversary::Iid { channel, .. } | Adversary::FixedType { channel, .. } => vec![channel],
            Adversary::Compound { first, second, .. } => vec![first, second],
            Adversary::Permuted { permutation, inner, .. } => {
                if let Some(p) = permutation {
                    let mut seen = vec![false; p.len()];
                    for &t in p {
                        if t >= p.len() || std::mem::replace(&mut seen[t], true) {
                            return Err(Error::InvalidArgument(format!(
                                "adversary '{}' has an invalid permutation",
                                self.name()
                            )));
                        }
                    }
                }
                return inner.validate(problem);
            }
        };
        for c in channels {
            check_size("adversary inputs", problem.x_size(), c.input_size())?;
            check_size("adversary outputs", problem.y_size(), c.output_size())?;
        }
        let e = self.side_distortion(problem)?;
        if e > problem.budget() + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "adversary '{}' has side distortion {e} above the budget {}",
                self.name(),
                problem.budget()
            )));
        }
        Ok(())
    }

    /// Checks that a fixed permutation fits blocks of length `n`.
    pub fn validate_blocklength(&self, n: usize) -> Result<()> {
        match self {
            Adversary::Permuted { permutation, inner, .. } => {
                if let Some(p) = permutation {
                    check_size("adversary permutation", n, p.len())?;
                }
                inner.validate_blocklength(n)
            }
            _ => Ok(()),
        }
    }

    pub fn transmit<R: Rng + ?Sized>(&self, x: &[usize], rng: &mut R) -> Vec<usize> {
        match self {
            Adversary::Iid { channel, .. } => memoryless(channel, x, rng),
            Adversary::Compound {
                lambda, first, second, ..
            } => {
                let pick = if rng.random::<f64>() < *lambda { first } else { second };
                memoryless(pick, x, rng)
            }
            Adversary::FixedType { channel, .. } => fixed_type(channel, x, rng),
            Adversary::Permuted { permutation, inner, .. } => {
                let sigma = match permutation {
                    Some(p) => p.clone(),
                    None => {
                        let mut p: Vec<usize> = (0..x.len()).collect();
                        p.shuffle(rng);
                        p
                    }
                };
                let moved: Vec<usize> = sigma.iter().map(|&t| x[t]).collect();
                let out = inner.transmit(&moved, rng);
                let mut y = vec![0; x.len()];
                for (k, &t) in sigma.iter().enumerate() {
                    y[t] = out[k];
                }
                y
            }
        }
    }
}

fn sample_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let mut r = rng.random::<f64>();
    for (y, &p) in row.iter().enumerate() {
        if r < p {
            return y;
        }
        r -= p;
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn memoryless<R: Rng + ?Sized>(w: &Channel, x: &[usize], rng: &mut R) -> Vec<usize> {
    x.iter().map(|&s| sample_row(w.row(s), rng)).collect()
}

/// Output counts per input symbol by largest remainder rounding of
/// `n_x W(.|x)`, placed on a uniformly random arrangement of the positions.
fn fixed_type<R: Rng + ?Sized>(w: &Channel, x: &[usize], rng: &mut R) -> Vec<usize> {
    let mut y = vec![0; x.len()];
    for s in 0..w.input_size() {
        let mut positions: Vec<usize> = (0..x.len()).filter(|&t| x[t] == s).collect();
        let m = positions.len();
        if m == 0 {
            continue;
        }
        let target: Vec<f64> = w.row(s).iter().map(|p| p * m as f64).collect();
        let mut counts: Vec<usize> = target.iter().map(|t| t.floor() as usize).collect();
        let mut left = m - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| (target[b] - target[b].floor()).total_cmp(&(target[a] - target[a].floor())));
        for &o in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[o] += 1;
            left -= 1;
        }
        positions.shuffle(rng);
        let mut it = positions.into_iter();
        for (out, &c) in counts.iter().enumerate() {
            for t in it.by_ref().take(c) {
                y[t] = out;
            }
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::{bsc, fig4_channels};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn budget_validation() {
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        let (w1, w2) = fig4_channels(0.25).unwrap();
        let ok = Adversary::Compound {
            name: "mix".into(),
            lambda: 0.5,
            first: w1,
            second: w2,
        };
        assert!(ok.validate(&problem).is_ok());
        let bad = Adversary::Iid {
            name: "noisy".into(),
            channel: bsc(0.3).unwrap(),
        };
        assert!(bad.validate(&problem).is_err());
    }

    #[test]
    fn permuted_wrapper_moves_positions_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        let adv = Adversary::Permuted {
            name: "p".into(),
            permutation: Some(vec![2, 0, 3, 1]),
            inner: Box::new(Adversary::Iid {
                name: "clean".into(),
                channel: bsc(0.0).unwrap(),
            }),
        };
        assert!(adv.validate(&problem).is_ok());
        assert!(adv.validate_blocklength(4).is_ok());
        assert!(adv.validate_blocklength(5).is_err());
        assert_eq!(adv.transmit(&[0, 1, 1, 0], &mut rng), vec![0, 1, 1, 0]);
        let bad = Adversary::Permuted {
            name: "bad".into(),
            permutation: Some(vec![0, 0]),
            inner: Box::new(Adversary::Iid {
                name: "clean".into(),
                channel: bsc(0.0).unwrap(),
            }),
        };
        assert!(bad.validate(&problem).is_err());
    }

    #[test]
    fn fixed_type_realizes_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let adv = Adversary::FixedType {
            name: "t".into(),
            channel: bsc(0.25).unwrap(),
        };
        let x = vec![0, 0, 0, 0, 1, 1, 1, 1];
        for _ in 0..10 {
            let y = adv.transmit(&x, &mut rng);
            let flips = x.iter().zip(&y).filter(|(a, b)| a != b).count();
            assert_eq!(flips, 2);
        }
    }
}
