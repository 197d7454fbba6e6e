use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wzrd_core::geometry::DistortionMeasure;
use wzrd_core::prob::Distribution;
use wzrd_core::types::*;
use wzrd_verify::{random_measure, random_simplex, sampling_slack};

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn sample<R: Rng>(p: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let mut r = rng.random::<f64>();
            for (a, &q) in p.iter().enumerate() {
                if r < q {
                    return a;
                }
                r -= q;
            }
            p.len() - 1
        })
        .collect()
}

proptest! {
    #[test]
    fn type_count_is_stars_and_bars(k in 1usize..5, n in 1usize..12) {
        let types = enumerate_types(k, n).unwrap();
        prop_assert_eq!(types.len() as u64, binomial(n + k - 1, k - 1));
        prop_assert!((types.len() as f64) <= ((n + 1) as f64).powi(k as i32));
        for t in &types {
            prop_assert_eq!(t.counts().iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn shells_partition_unity(seed in any::<u64>(), nx in 1usize..4, ny in 1usize..4, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<usize> = (0..n).map(|_| rng.random_range(0..nx)).collect();
        let input = type_of(&x, nx).unwrap();
        let w: Vec<Vec<f64>> = (0..nx).map(|_| random_simplex(ny, &mut rng)).collect();
        let table = LogFactorials::new(n);
        let mut total = 0.0;
        for ct in conditional_types(&input, ny) {
            let mut log_p = log2_shell_size(&ct, &table);
            for (a, row) in ct.counts().iter().enumerate() {
                for (b, &c) in row.iter().enumerate() {
                    if c > 0 {
                        log_p += c as f64 * w[a][b].log2();
                    }
                }
            }
            total += log_p.exp2();
        }
        prop_assert!((total - 1.0).abs() < 1e-9, "total {}", total);
    }

    #[test]
    fn empirical_distortion_matches_joint_type(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DistortionMeasure::new(random_measure(3, 2, &mut rng)).unwrap();
        let x: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let direct = empirical_distortion(&x, &y, &m).unwrap();
        let ct = conditional_type_of(&x, &y, 3, 2).unwrap();
        // e(P, W) from the type and conditional type, summed independently.
        let p = ct.input().distribution().unwrap();
        let rows = ct.channel_rows();
        let mut formula = 0.0;
        for a in 0..3 {
            for b in 0..2 {
                formula += p.get(a) * rows[a][b] * m.get(a, b);
            }
        }
        prop_assert!((direct - formula).abs() < 1e-12);
        prop_assert!((direct - ct.distortion(&m).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn empirical_distortion_examples() {
    let h = DistortionMeasure::hamming(2, 2).unwrap();
    assert_eq!(empirical_distortion(&[0, 1, 1], &[0, 1, 1], &h).unwrap(), 0.0);
    assert_eq!(empirical_distortion(&[0, 1, 1, 0], &[1, 0, 0, 1], &h).unwrap(), 1.0);
    assert!(empirical_distortion(&[0, 1], &[0], &h).is_err());
}

#[test]
fn typicality_examples() {
    let p = Distribution::from_probs(vec![0.25, 0.75]).unwrap();
    assert!(is_typical(&[0, 1, 1, 1], &p, 1e-9).unwrap());
    let q = Distribution::from_probs(vec![0.5, 0.5, 0.0]).unwrap();
    assert!(!is_typical(&[0, 1, 2, 1], &q, 0.9).unwrap());
    // |1/2 - 1/4| = 1/4 exactly.
    assert!(is_typical(&[0, 0, 1, 1], &p, 0.25).unwrap());
    assert!(!is_typical(&[0, 0, 1, 1], &p, 0.2499).unwrap());
}

#[test]
fn atypical_mass_respects_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples = 20_000;
    for _ in 0..6 {
        let k = rng.random_range(2..5);
        let p_vec = random_simplex(k, &mut rng);
        let p = Distribution::from_probs(p_vec.clone()).unwrap();
        for n in [6, 10, 14] {
            for delta in [0.05, 0.15, 0.3] {
                let misses = (0..samples)
                    .filter(|_| !is_typical(&sample(&p_vec, n, &mut rng), &p, delta).unwrap())
                    .count();
                let freq = misses as f64 / samples as f64;
                let bound = atypicality_bound(k, n, delta).min(1.0);
                assert!(freq <= bound + sampling_slack(bound, samples), "n={n} delta={delta}: {freq} > {bound}");
            }
        }
    }
}
