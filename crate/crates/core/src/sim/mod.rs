//! Small-blocklength simulation of the two-layer random binning code:
//! a shared bin index selects a slice of `U^n`, the encoder quantizes
//! inside the slice and sends a second bin index, and the decoder picks
//! the slice member of least empirical conditional entropy given `Y^n`.

pub mod adversary;
pub mod code;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};
use crate::geometry::{worst_case_distortion, TestChannel};
use crate::prob::{entropy_of, Joint};
use crate::solvers::{max_phi_over_class, RDProblem, SolverSettings};

pub use adversary::Adversary;
pub use code::{decode, encode, BinCode, BinHash};

/// Memory budget for a pool of precomputed codes, in stored indices.
pub const POOL_BUDGET: u64 = 1 << 26;

/// Largest `|X|^n |U|^n` handled by [`measure_uniformity`].
pub const UNIFORMITY_CAP: u64 = 1 << 26;

/// Binning rates in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// `H(U|X) - delta`.
    pub r_f: f64,
    /// `max_W phi(V, W) + 2 delta`.
    pub r_g: f64,
    pub h_u_given_x: f64,
    /// `max_W H(U|Y)`, attained at the same channel as `max_W phi`.
    pub max_h_u_given_y: f64,
}

/// Rates of the two bin layers for test channel `v` and slack `delta`.
pub fn derive_rates(v: &TestChannel, problem: &RDProblem, delta: f64) -> Result<Rates> {
    check_size("test channel inputs", problem.x_size(), v.input_size())?;
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!("slack must be positive, got {delta}")));
    }
    let px = problem.px();
    let h_u_given_x: f64 = (0..px.len()).map(|x| px.get(x) * entropy_of(v.channel().row(x))).sum();
    if h_u_given_x < delta {
        return Err(Error::InvalidArgument(format!(
            "slack {delta} exceeds H(U|X) = {h_u_given_x}; the shared-randomness rate would be negative"
        )));
    }
    let (max_phi, w) = max_phi_over_class(v, problem, &SolverSettings::default())?;
    let joint = Joint::markov_uxy(px, v.channel(), &w)?;
    let h_uy = joint.marginal(&[0, 2])?.entropy();
    let h_y = joint.marginal(&[2])?.entropy();
    let rates = Rates {
        r_f: h_u_given_x - delta,
        r_g: max_phi + 2.0 * delta,
        h_u_given_x,
        max_h_u_given_y: h_uy - h_y,
    };
    let gap = (rates.r_f + rates.r_g) - (rates.max_h_u_given_y + delta);
    if gap.abs() > 1e-6 {
        return Err(Error::Solver(format!("rate sum identity off by {gap}")));
    }
    Ok(rates)
}

/// A code design: blocklength, test channel, slack and the derived rates.
#[derive(Debug, Clone)]
pub struct CodeConfig {
    pub n: usize,
    pub v: TestChannel,
    pub delta: f64,
    pub rates: Rates,
    /// `max_W d(V, W)` over the class; the design distortion `D`.
    pub target_distortion: f64,
    pub pool_size: usize,
}

impl CodeConfig {
    pub fn new(n: usize, v: TestChannel, delta: f64, problem: &RDProblem) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("blocklength must be positive".into()));
        }
        code::domain_size(v.functions().len(), n)?;
        let rates = derive_rates(&v, problem, delta)?;
        let target_distortion = worst_case_distortion(&v, &problem.class(), problem.measure())?.value;
        Ok(CodeConfig {
            n,
            v,
            delta,
            rates,
            target_distortion,
            pool_size: 8,
        })
    }

    pub fn with_pool_size(mut self, pool_size: usize) -> Self {
        self.pool_size = pool_size.max(1);
        self
    }

    /// `floor(2^{n R_f})`, at least one.
    pub fn bins_f(&self) -> u64 {
        (2f64.powf(self.n as f64 * self.rates.r_f).floor() as u64).max(1)
    }

    /// `ceil(2^{n R_g})`.
    pub fn bins_g(&self) -> u64 {
        2f64.powf(self.n as f64 * self.rates.r_g).ceil() as u64
    }
}

/// Statistics for one adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub name: String,
    pub trials: usize,
    pub mean_distortion: f64,
    /// Frequency of `d_n > D + delta`.
    pub exceedance_frequency: f64,
    /// Frequency of a decoded `u^n` different from the encoded one.
    pub decoder_error_rate: f64,
    pub encode_failures: usize,
    pub slice_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub delta: f64,
    pub target_distortion: f64,
    pub rates: Rates,
    pub bins_f: u64,
    pub bins_g: u64,
    pub pool_size: usize,
    pub master_seed: u64,
    pub adversaries: Vec<AdversaryReport>,
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    distortion: f64,
    exceeded: bool,
    decoder_error: bool,
    encode_failed: bool,
    resamples: usize,
}

/// Independent stream for `(master, label, index)`.
fn stream(master: u64, label: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(index);
    rng
}

const POOL_LABEL: u64 = 1;
const SOURCE_LABEL: u64 = 2;
/// Adversary `i` draws from label `CHANNEL_LABEL + i`.
const CHANNEL_LABEL: u64 = 3;

/// Rejects blocklengths whose code pool would not fit the enumeration and
/// memory budgets; cheap enough to call before any solving.
pub fn check_pool_budget(n: usize, alphabet: usize, pool_size: usize) -> Result<()> {
    let size = code::domain_size(alphabet, n)?;
    if size.saturating_mul(pool_size as u64) > POOL_BUDGET {
        return Err(Error::CapExceeded(format!(
            "a pool of {pool_size} codes over {size} sequences exceeds the memory budget"
        )));
    }
    Ok(())
}

fn build_pool(config: &CodeConfig, master_seed: u64) -> Result<Vec<BinCode>> {
    check_pool_budget(config.n, config.v.functions().len(), config.pool_size)?;
    (0..config.pool_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(master_seed, POOL_LABEL, i as u64);
            BinCode::random(config.n, config.v.functions().len(), config.bins_f(), config.bins_g(), &mut rng)
        })
        .collect()
}

fn sample_source<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let mut r = rng.random::<f64>();
            for (x, &p) in probs.iter().enumerate() {
                if r < p {
                    return x;
                }
                r -= p;
            }
            probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        })
        .collect()
}

fn run_trial(
    config: &CodeConfig,
    problem: &RDProblem,
    pool: &[BinCode],
    adversary: &Adversary,
    rng: &mut ChaCha8Rng,
    channel_rng: &mut ChaCha8Rng,
) -> TrialOutcome {
    let n = config.n;
    let fa = config.v.functions();
    let d = problem.measure();
    let x = sample_source(problem.px().probs(), n, rng);
    let y = adversary.transmit(&x, channel_rng);
    // Shared randomness: code, permutation, bin index and quantizer draws.
    let code = &pool[rng.random_range(0..pool.len())];
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let xp: Vec<usize> = perm.iter().map(|&t| x[t]).collect();
    let yp: Vec<usize> = perm.iter().map(|&t| y[t]).collect();
    let threshold = config.target_distortion + config.delta + 1e-12;
    let Some(enc) = encode(&xp, &config.v, code, rng) else {
        return TrialOutcome {
            distortion: d.max_value(),
            exceeded: d.max_value() > threshold,
            decoder_error: false,
            encode_failed: true,
            resamples: code::MAX_SLICE_ATTEMPTS,
        };
    };
    let decoded = decode(&yp, enc.s, enc.message, code, problem.y_size());
    let Some(uhat) = decoded else {
        return TrialOutcome {
            distortion: d.max_value(),
            exceeded: d.max_value() > threshold,
            decoder_error: true,
            encode_failed: false,
            resamples: enc.resamples,
        };
    };
    let u = code::decode_sequence(uhat, fa.len(), n);
    let mut xhat = vec![0; n];
    for t in 0..n {
        xhat[perm[t]] = fa.apply(u[t], yp[t]);
    }
    let distortion = (0..n).map(|t| d.get(x[t], xhat[t])).sum::<f64>() / n as f64;
    TrialOutcome {
        distortion,
        exceeded: distortion > threshold,
        decoder_error: uhat != enc.u,
        encode_failed: false,
        resamples: enc.resamples,
    }
}

/// Runs `trials` blocks against every adversary. Trials run in parallel on
/// per-trial random streams and are reduced in order, so the report only
/// depends on `master_seed`.
pub fn run_experiment(
    config: &CodeConfig,
    problem: &RDProblem,
    adversaries: &[Adversary],
    trials: usize,
    master_seed: u64,
) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    check_size("test channel inputs", problem.x_size(), config.v.input_size())?;
    check_size("function domain", problem.y_size(), config.v.functions().y_size())?;
    for a in adversaries {
        a.validate(problem)?;
        a.validate_blocklength(config.n)?;
    }
    let pool = build_pool(config, master_seed)?;
    let mut reports = Vec::with_capacity(adversaries.len());
    for (ai, adversary) in adversaries.iter().enumerate() {
        let outcomes: Vec<TrialOutcome> = (0..trials)
            .into_par_iter()
            .map(|t| {
                // Source and code randomness are common to all adversaries.
                let mut rng = stream(master_seed, SOURCE_LABEL, t as u64);
                let mut channel_rng = stream(master_seed, CHANNEL_LABEL + ai as u64, t as u64);
                run_trial(config, problem, &pool, adversary, &mut rng, &mut channel_rng)
            })
            .collect();
        let count = outcomes.len() as f64;
        reports.push(AdversaryReport {
            name: adversary.name().to_string(),
            trials,
            mean_distortion: outcomes.iter().map(|o| o.distortion).sum::<f64>() / count,
            exceedance_frequency: outcomes.iter().filter(|o| o.exceeded).count() as f64 / count,
            decoder_error_rate: outcomes.iter().filter(|o| o.decoder_error).count() as f64 / count,
            encode_failures: outcomes.iter().filter(|o| o.encode_failed).count(),
            slice_resamples: outcomes.iter().map(|o| o.resamples).sum(),
        });
    }
    Ok(SimReport {
        n: config.n,
        delta: config.delta,
        target_distortion: config.target_distortion,
        rates: config.rates,
        bins_f: config.bins_f(),
        bins_g: config.bins_g(),
        pool_size: config.pool_size,
        master_seed,
        adversaries: reports,
    })
}

/// Average over `trials` random `f` hashes of the exact variational
/// distance between the joint law of `(S, X^n)` and uniform `S` times
/// `P_X^n`.
pub fn measure_uniformity(config: &CodeConfig, problem: &RDProblem, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let n = config.n;
    let nu = config.v.functions().len();
    let nx = problem.x_size();
    let size_u = code::domain_size(nu, n)?;
    let size_x = code::domain_size(nx, n)?;
    if size_u.saturating_mul(size_x) > UNIFORMITY_CAP {
        return Err(Error::CapExceeded(format!(
            "exact uniformity needs {size_x} x {size_u} terms, above {UNIFORMITY_CAP}"
        )));
    }
    let bins = config.bins_f();
    let px = problem.px().probs();
    let distances: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, POOL_LABEL, t as u64);
            let f = BinHash::random(bins, &mut rng);
            let bin_of: Vec<u32> = (0..size_u).map(|k| f.bin(k) as u32).collect();
            let mut total = 0.0;
            let mut mass = vec![0.0; bins as usize];
            let mut weights = Vec::with_capacity(size_u as usize);
            for kx in 0..size_x {
                let x = code::decode_sequence(kx, nx, n);
                let p: f64 = x.iter().map(|&s| px[s]).product();
                if p == 0.0 {
                    continue;
                }
                // V^n(u^n | x^n) in lexicographic order by prefix expansion.
                weights.clear();
                weights.push(1.0);
                for &xs in &x {
                    let row = config.v.channel().row(xs);
                    let prev = std::mem::take(&mut weights);
                    weights.reserve(prev.len() * nu);
                    for w in prev {
                        weights.extend(row.iter().map(|r| w * r));
                    }
                }
                mass.iter_mut().for_each(|m| *m = 0.0);
                for (k, &w) in weights.iter().enumerate() {
                    mass[bin_of[k] as usize] += w;
                }
                let uniform = 1.0 / bins as f64;
                total += p * mass.iter().map(|m| (m - uniform).abs()).sum::<f64>();
            }
            total
        })
        .collect();
    Ok(distances.iter().sum::<f64>() / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::{bsc, WZParametric};

    fn binary_config(n: usize) -> (CodeConfig, RDProblem) {
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        let v = WZParametric::new(0.5, 0.1)
            .unwrap()
            .test_channel(problem.functions().clone())
            .unwrap();
        (CodeConfig::new(n, v, 0.1, &problem).unwrap(), problem)
    }

    #[test]
    fn rates_satisfy_sum_identity() {
        let (config, _) = binary_config(4);
        let r = config.rates;
        assert!((r.r_f + r.r_g - (r.max_h_u_given_y + 0.1)).abs() < 1e-9);
        // H(U|X) = h(lambda) + lambda h(q) for the parametric family.
        let h = crate::prob::binary_entropy;
        assert!((r.h_u_given_x - (h(0.5) + 0.5 * h(0.1))).abs() < 1e-12);
    }

    #[test]
    fn deterministic_test_channel_is_rejected() {
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        let v = TestChannel::point_mass(2, 2, problem.functions().clone()).unwrap();
        assert!(matches!(derive_rates(&v, &problem, 0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_bin_has_zero_uniformity_distance() {
        let (mut config, problem) = binary_config(3);
        config.rates.r_f = 0.0;
        assert_eq!(config.bins_f(), 1);
        let dist = measure_uniformity(&config, &problem, 3, 1).unwrap();
        assert!(dist.abs() < 1e-12);
    }

    #[test]
    fn noiseless_identity_gives_zero_distortion() {
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        let fa = problem.functions().clone();
        let id = fa.identity().unwrap();
        let v = TestChannel::point_mass(2, id, fa).unwrap();
        // H(U|X) = 0 leaves no room for shared randomness, so the rates are
        // set by hand: one slice and a message layer that is almost surely
        // injective on 4^6 sequences.
        let config = CodeConfig {
            n: 6,
            v,
            delta: 0.1,
            rates: Rates {
                r_f: 0.0,
                r_g: 4.0,
                h_u_given_x: 0.0,
                max_h_u_given_y: 0.0,
            },
            target_distortion: 0.0,
            pool_size: 2,
        };
        let adv = Adversary::Iid {
            name: "clean".into(),
            channel: bsc(0.0).unwrap(),
        };
        let report = run_experiment(&config, &problem, &[adv], 50, 7).unwrap();
        assert_eq!(report.adversaries[0].mean_distortion, 0.0);
        assert_eq!(report.adversaries[0].exceedance_frequency, 0.0);
    }

    #[test]
    fn reports_are_reproducible() {
        let (config, problem) = binary_config(6);
        let adv = vec![Adversary::Iid {
            name: "bsc".into(),
            channel: bsc(0.25).unwrap(),
        }];
        let a = run_experiment(&config, &problem, &adv, 200, 11).unwrap();
        let b = run_experiment(&config, &problem, &adv, 200, 11).unwrap();
        assert_eq!(a, b);
        let c = run_experiment(&config, &problem, &adv, 200, 12).unwrap();
        assert_ne!(a, c);
    }
}
