use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use wzrd_core::binary::{bsc, WZParametric};
use wzrd_core::geometry::*;
use wzrd_core::prob::{Alphabet, Channel, Distribution};
use wzrd_verify::*;

fn uniform2() -> Distribution {
    Distribution::uniform(Alphabet::new(2, "X").unwrap())
}

fn binary_class(budget: f64) -> ChannelClassW1 {
    ChannelClassW1::new(uniform2(), DistortionMeasure::hamming(2, 2).unwrap(), budget).unwrap()
}

fn random_rows<R: Rng>(nx: usize, nu: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..nx).map(|_| random_simplex(nu, rng)).collect()
}

fn mix(a: &[Vec<f64>], b: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| t * x + (1.0 - t) * y).collect())
        .collect()
}

struct Setup {
    inst: Instance,
    class: ChannelClassW1,
    d: DistortionMeasure,
    px: Distribution,
    fa: Arc<FunctionAlphabet>,
}

fn setup(seed: u64) -> (Setup, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = Instance::random(3, &mut rng);
    let px = Distribution::from_probs(inst.px.clone()).unwrap();
    let e = DistortionMeasure::new(inst.e.clone()).unwrap();
    let d = DistortionMeasure::new(inst.d.clone()).unwrap();
    let class = ChannelClassW1::new(px.clone(), e, inst.budget).unwrap();
    let fa = Arc::new(FunctionAlphabet::new(inst.e[0].len(), inst.d[0].len()).unwrap());
    (Setup { inst, class, d, px, fa }, rng)
}

#[test]
fn reproduction_distortion_examples() {
    let fa = Arc::new(FunctionAlphabet::new(2, 2).unwrap());
    let h = DistortionMeasure::hamming(2, 2).unwrap();
    let id = TestChannel::point_mass(2, fa.identity().unwrap(), fa.clone()).unwrap();
    let value = reproduction_distortion(&id, &bsc(0.1).unwrap(), &uniform2(), &h).unwrap();
    assert!((value - 0.1).abs() < 1e-15);
    let zero = TestChannel::point_mass(2, fa.constant(0), fa.clone()).unwrap();
    assert_eq!(reproduction_distortion(&zero, &bsc(0.3).unwrap(), &uniform2(), &h).unwrap(), 0.5);
    let consts = TestChannel::from_rows(vec![vec![0.7, 0.0, 0.0, 0.3], vec![0.2, 0.0, 0.0, 0.8]], fa).unwrap();
    let a = reproduction_distortion(&consts, &bsc(0.0).unwrap(), &uniform2(), &h).unwrap();
    for p in [0.1, 0.4, 0.9] {
        let b = reproduction_distortion(&consts, &bsc(p).unwrap(), &uniform2(), &h).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn side_distortion_examples() {
    let h = DistortionMeasure::hamming(2, 2).unwrap();
    assert_eq!(side_distortion(&uniform2(), &bsc(0.0).unwrap(), &h).unwrap(), 0.0);
    assert!((side_distortion(&uniform2(), &bsc(0.37).unwrap(), &h).unwrap() - 0.37).abs() < 1e-15);
}

#[test]
fn worst_case_examples() {
    let fa = Arc::new(FunctionAlphabet::new(2, 2).unwrap());
    let h = DistortionMeasure::hamming(2, 2).unwrap();
    let class = binary_class(0.2);
    let id = TestChannel::point_mass(2, fa.identity().unwrap(), fa.clone()).unwrap();
    assert!((worst_case_distortion(&id, &class, &h).unwrap().value - 0.2).abs() < 1e-12);
    let consts = TestChannel::from_rows(vec![vec![0.6, 0.0, 0.0, 0.4], vec![0.1, 0.0, 0.0, 0.9]], fa).unwrap();
    let wc = worst_case_distortion(&consts, &class, &h).unwrap();
    let fixed = reproduction_distortion(&consts, &bsc(0.05).unwrap(), &uniform2(), &h).unwrap();
    assert!((wc.value - fixed).abs() < 1e-12);
    assert!(class.contains(&wc.channel).unwrap());
}

#[test]
fn membership_examples() {
    let fa = Arc::new(FunctionAlphabet::new(2, 2).unwrap());
    let h = DistortionMeasure::hamming(2, 2).unwrap();
    let class = binary_class(0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let v = TestChannel::from_rows(random_rows(2, 4, &mut rng), fa.clone()).unwrap();
        assert!(is_member_ved(&v, &class, &h, h.max_value()).unwrap());
    }
    for (lambda, q) in [(0.5, 0.1), (0.8, 0.02), (1.0, 0.0)] {
        let p = WZParametric::new(lambda, q).unwrap();
        let v = p.test_channel(fa.clone()).unwrap();
        assert!(is_member_ved(&v, &class, &h, p.distortion(0.25)).unwrap());
        if p.distortion(0.25) > 1e-3 {
            assert!(!is_member_ved(&v, &class, &h, p.distortion(0.25) - 1e-3).unwrap());
        }
    }
    // A constant reproduction has distortion 1/2 whatever the channel.
    let c = TestChannel::point_mass(2, fa.constant(1), fa).unwrap();
    assert!(!is_member_ved(&c, &class, &h, 0.4).unwrap());
}

#[test]
fn vertices_match_independent_enumeration() {
    for seed in 0..20 {
        let (s, _) = setup(seed);
        let got = extreme_points_w1(&s.class).unwrap();
        let want = s.inst.vertices();
        assert_eq!(got.len(), want.len(), "seed {seed}");
        for w in &want {
            assert!(
                got.iter().any(|g| g.to_rows().iter().flatten().zip(w.iter().flatten()).all(|(a, b)| (a - b).abs() < 1e-12)),
                "seed {seed}: missing vertex {w:?}"
            );
        }
    }
    // Inactive budget: every deterministic channel.
    let all = extreme_points_w1(&binary_class(1.0)).unwrap();
    assert_eq!(all.len(), 4);
    let half = extreme_points_w1(&binary_class(0.2)).unwrap();
    let (w1, w2) = wzrd_core::binary::fig4_channels(0.2).unwrap();
    for w in [w1, w2] {
        assert!(half.iter().any(|v| v.max_abs_diff(&w) < 1e-12));
    }
}

#[test]
fn worst_case_matches_vertex_maximum() {
    for seed in 0..30 {
        let (s, mut rng) = setup(100 + seed);
        let maps = s.inst.maps();
        let rows = random_rows(s.inst.px.len(), maps.len(), &mut rng);
        let v = TestChannel::from_rows(rows.clone(), s.fa.clone()).unwrap();
        let best = s
            .inst
            .vertices()
            .iter()
            .map(|w| distortion_sum(&s.inst.px, &rows, w, &maps, &s.inst.d))
            .fold(f64::NEG_INFINITY, f64::max);
        let got = worst_case_distortion(&v, &s.class, &s.d).unwrap();
        assert!((got.value - best).abs() < 1e-12, "seed {seed}: {} vs {best}", got.value);
        assert!(s.class.contains(&got.channel).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn side_distortion_matches_brute_sum(seed in any::<u64>()) {
        let (s, mut rng) = setup(seed);
        let w = random_member(&s.inst.vertices(), &mut rng);
        let mut direct = 0.0;
        for x in 0..w.len() {
            for y in 0..w[0].len() {
                direct += s.inst.px[x] * w[x][y] * s.inst.e[x][y];
            }
        }
        let got = side_distortion(&s.px, &channel(&w), s.class.side_measure()).unwrap();
        prop_assert!((got - direct).abs() < 1e-12);
        prop_assert!(got <= s.inst.budget + 1e-12);
    }

    #[test]
    fn reproduction_distortion_is_bilinear(seed in any::<u64>(), t in 0.0f64..1.0) {
        let (s, mut rng) = setup(seed);
        let nu = s.fa.len();
        let nx = s.inst.px.len();
        let verts = s.inst.vertices();
        let (v1, v2) = (random_rows(nx, nu, &mut rng), random_rows(nx, nu, &mut rng));
        let (w1, w2) = (random_member(&verts, &mut rng), random_member(&verts, &mut rng));
        let rd = |v: &[Vec<f64>], w: &[Vec<f64>]| {
            reproduction_distortion(&test_channel(v, w[0].len(), s.inst.d[0].len()), &channel(w), &s.px, &s.d).unwrap()
        };
        let lhs = rd(&mix(&v1, &v2, t), &w1);
        prop_assert!((lhs - (t * rd(&v1, &w1) + (1.0 - t) * rd(&v2, &w1))).abs() < 1e-10);
        let lhs = rd(&v1, &mix(&w1, &w2, t));
        prop_assert!((lhs - (t * rd(&v1, &w1) + (1.0 - t) * rd(&v1, &w2))).abs() < 1e-10);
        prop_assert!((rd(&v1, &w1) - distortion_sum(&s.inst.px, &v1, &w1, &s.inst.maps(), &s.inst.d)).abs() < 1e-12);
    }

    #[test]
    fn worst_case_is_convex_and_dominant(seed in any::<u64>(), t in 0.0f64..1.0) {
        let (s, mut rng) = setup(seed);
        let nu = s.fa.len();
        let nx = s.inst.px.len();
        let (a, b) = (random_rows(nx, nu, &mut rng), random_rows(nx, nu, &mut rng));
        let wc = |v: &[Vec<f64>]| worst_case_distortion(&TestChannel::from_rows(v.to_vec(), s.fa.clone()).unwrap(), &s.class, &s.d).unwrap().value;
        prop_assert!(wc(&mix(&a, &b, t)) <= t * wc(&a) + (1.0 - t) * wc(&b) + 1e-9);
        let va = TestChannel::from_rows(a.clone(), s.fa.clone()).unwrap();
        let top = wc(&a);
        let verts = s.inst.vertices();
        for _ in 0..10 {
            let w = random_member(&verts, &mut rng);
            let value = reproduction_distortion(&va, &channel(&w), &s.px, &s.d).unwrap();
            prop_assert!(value <= top + 1e-12);
            // V(E, D) is contained in V(W, D) for every member W.
            let level = rng.random_range(0.0..s.d.max_value());
            if is_member_ved(&va, &s.class, &s.d, level).unwrap() {
                prop_assert!(value <= level + 1e-9);
            }
        }
    }
}

#[test]
fn class_hull_of_extreme_pair() {
    let class = binary_class(0.3);
    let (w1, w2) = wzrd_core::binary::fig4_channels(0.3).unwrap();
    for k in 0..=10 {
        let w: Channel = w1.mix(&w2, k as f64 / 10.0).unwrap();
        assert!(class.contains(&w).unwrap());
    }
}
