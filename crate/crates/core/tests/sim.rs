use std::sync::Arc;
use wzrd_core::binary::{bsc, fig4_channels, WZParametric};
use wzrd_core::geometry::{FunctionAlphabet, TestChannel};
use wzrd_core::sim::*;
use wzrd_core::solvers::RDProblem;
use wzrd_verify::{phi_tensor, sampling_slack};

const E: f64 = 0.25;

fn problem() -> RDProblem {
    RDProblem::binary_hamming(E).unwrap()
}

fn parametric(lambda: f64, q: f64) -> TestChannel {
    let fa = Arc::new(FunctionAlphabet::new(2, 2).unwrap());
    WZParametric::new(lambda, q).unwrap().test_channel(fa).unwrap()
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.log2()).sum()
}

/// `H(U|Y)` for a uniform binary source through `v` and `w`.
fn h_u_given_y(v: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
    let nu = v[0].len();
    let mut joint = vec![0.0; nu * 2];
    for x in 0..2 {
        for u in 0..nu {
            for y in 0..2 {
                joint[u * 2 + y] += 0.5 * v[x][u] * w[x][y];
            }
        }
    }
    let py: Vec<f64> = (0..2).map(|y| (0..nu).map(|u| joint[u * 2 + y]).sum()).collect();
    entropy(&joint) - entropy(&py)
}

fn iid(name: &str, w: wzrd_core::prob::Channel) -> Adversary {
    Adversary::Iid { name: name.into(), channel: w }
}

#[test]
fn rates_match_tensor_entropies() {
    for (lambda, q) in [(0.5, 0.1), (0.5, 0.0), (0.8, 0.05)] {
        let v = parametric(lambda, q);
        let rows = v.channel().to_rows();
        let delta = 0.05;
        let rates = derive_rates(&v, &problem(), delta).unwrap();
        let h_u_x = 0.5 * (entropy(&rows[0]) + entropy(&rows[1]));
        assert!((rates.r_f - (h_u_x - delta)).abs() < 1e-12);
        // Grid over the binary class: alpha + beta <= 2E.
        let (mut best_phi, mut best_h) = (0.0f64, 0.0f64);
        let steps = 400;
        for i in 0..=steps {
            for j in 0..=steps {
                let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
                if a + b > 2.0 * E + 1e-12 {
                    continue;
                }
                let w = vec![vec![1.0 - a, a], vec![b, 1.0 - b]];
                best_phi = best_phi.max(phi_tensor(&[0.5, 0.5], &rows, &w));
                best_h = best_h.max(h_u_given_y(&rows, &w));
            }
        }
        let max_phi = rates.r_g - 2.0 * delta;
        assert!(max_phi >= best_phi - 1e-7 && max_phi <= best_phi + 1e-3, "{max_phi} vs grid {best_phi}");
        assert!(rates.max_h_u_given_y >= best_h - 1e-7 && rates.max_h_u_given_y <= best_h + 1e-3);
        assert!((rates.r_f + rates.r_g - (rates.max_h_u_given_y + delta)).abs() < 1e-6);
    }
}

#[test]
fn decoder_ignores_the_channel_behind_identical_outputs() {
    let p = problem();
    let config = CodeConfig::new(6, parametric(0.5, 0.0), 0.1, &p).unwrap();
    // Both adversaries send the source unchanged.
    let a = run_experiment(&config, &p, &[iid("a", bsc(0.0).unwrap())], 300, 5).unwrap();
    let b = run_experiment(
        &config,
        &p,
        &[Adversary::FixedType {
            name: "a".into(),
            channel: bsc(0.0).unwrap(),
        }],
        300,
        5,
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn decoder_errors_shrink_with_slack() {
    let p = problem();
    let v = parametric(0.5, 0.0);
    let trials = 2000;
    let rate = |delta: f64| {
        let config = CodeConfig::new(8, v.clone(), delta, &p).unwrap();
        run_experiment(&config, &p, &[iid("bsc", bsc(E).unwrap())], trials, 21).unwrap().adversaries[0].decoder_error_rate
    };
    let (wide, narrow) = (rate(0.1), rate(0.02));
    assert!(wide < narrow, "decoder error {wide} at slack 0.1, {narrow} at 0.02");
}

#[test]
fn statistics_survive_fixed_permutations() {
    let p = problem();
    let n = 8;
    let config = CodeConfig::new(n, parametric(0.5, 0.0), 0.1, &p).unwrap();
    let (w1, w2) = fig4_channels(E).unwrap();
    let compound = Adversary::Compound {
        name: "compound".into(),
        lambda: 0.5,
        first: w1,
        second: w2,
    };
    let reversed: Vec<usize> = (0..n).rev().collect();
    let shifted: Vec<usize> = (0..n).map(|t| (t + 3) % n).collect();
    let adversaries = vec![
        iid("bsc", bsc(E).unwrap()),
        Adversary::Permuted {
            name: "bsc reversed".into(),
            permutation: Some(reversed),
            inner: Box::new(iid("bsc", bsc(E).unwrap())),
        },
        compound.clone(),
        Adversary::Permuted {
            name: "compound shifted".into(),
            permutation: Some(shifted),
            inner: Box::new(compound.clone()),
        },
        Adversary::Permuted {
            name: "compound symmetrized".into(),
            permutation: None,
            inner: Box::new(compound),
        },
    ];
    let trials = 3000;
    let report = run_experiment(&config, &p, &adversaries, trials, 8).unwrap();
    let r = &report.adversaries;
    for (base, others) in [(0, vec![1]), (2, vec![3, 4])] {
        for k in others {
            let (a, b) = (r[base].exceedance_frequency, r[k].exceedance_frequency);
            assert!((a - b).abs() <= 2.0 * sampling_slack(a, trials), "{}: {a} vs {b}", r[k].name);
            let (a, b) = (r[base].mean_distortion, r[k].mean_distortion);
            // Distortion lies in [0, 1]: its standard error is at most 1/(2 sqrt(trials)).
            assert!((a - b).abs() <= 4.0 / (trials as f64).sqrt(), "{}: {a} vs {b}", r[k].name);
        }
    }
}

#[test]
fn uniformity_distance_is_a_bounded_metric() {
    let p = problem();
    for (lambda, q) in [(0.5, 0.0), (0.5, 0.1), (0.9, 0.3)] {
        for n in [2, 4] {
            let config = CodeConfig::new(n, parametric(lambda, q), 0.05, &p).unwrap();
            for seed in 0..4 {
                let d = measure_uniformity(&config, &p, 16, seed).unwrap();
                assert!((0.0..=2.0).contains(&d), "{d}");
            }
        }
    }
}

#[test]
fn reports_are_bit_identical_for_a_seed() {
    let p = problem();
    let config = CodeConfig::new(6, parametric(0.5, 0.1), 0.1, &p).unwrap();
    let advs = [iid("bsc", bsc(E).unwrap())];
    let a = run_experiment(&config, &p, &advs, 200, 99).unwrap();
    let b = run_experiment(&config, &p, &advs, 200, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.adversaries[0].mean_distortion.to_bits(), b.adversaries[0].mean_distortion.to_bits());
    for r in &a.adversaries {
        for f in [r.exceedance_frequency, r.decoder_error_rate] {
            assert!((0.0..=1.0).contains(&f));
        }
    }
}
