//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wzrd_cli::commands::cmd_fig4;
use wzrd_core::binary::{bsc, fig4_channels, wz_binary_oracle, WZParametric};
use wzrd_core::geometry::{FunctionAlphabet, TestChannel};
use wzrd_core::prob::Distribution;
use wzrd_core::sim::{measure_uniformity, run_experiment, Adversary, CodeConfig, SimReport};
use wzrd_core::solvers::*;
use wzrd_core::types::{atypicality_bound, enumerate_types, is_typical};
use wzrd_verify::{channel, h2, random_member, random_simplex, sampling_slack, Instance};

const WZ_TOL: f64 = 1e-3;
const MATCHING_TOL: f64 = 2e-3;
const ZERO_DISTORTION_TOL: f64 = 1e-6;
const RA_RD_TOL: f64 = 1e-3;
const RD_CLOSED_FORM_TOL: f64 = 1e-4;
/// Numerical slack allowed on the row-wise ordering of computed bounds.
const ORDER_TOL: f64 = 1e-6;
const FIG4_GAP: f64 = 0.01;
const GAP_TOL: f64 = 1e-4;
const PSEUDO_TOL: f64 = 1e-4;
const SIM_TRIALS: usize = 2000;
const SIM_DELTA: f64 = 0.1;
const EXCEEDANCE_CAP: f64 = 0.2;
const UNIFORMITY_TRIALS: usize = 512;
const TYPICALITY_SAMPLES: usize = 100_000;

type Outcome = (bool, String);

fn settings() -> SolverSettings {
    SolverSettings::default()
}

fn grid(e: f64) -> Vec<f64> {
    (0..=20).map(|k| e * k as f64 / 20.0).collect()
}

fn binary(e: f64) -> RDProblem {
    RDProblem::binary_hamming(e).unwrap()
}

fn wz_oracle_equivalence() -> Outcome {
    let s = settings();
    let cases: Vec<(f64, f64)> = [0.1, 0.25, 0.4].iter().flat_map(|&e| grid(e).into_iter().map(move |d| (e, d))).collect();
    let diffs: Vec<(f64, f64, f64)> = cases
        .par_iter()
        .map(|&(e, d)| {
            let got = wz_rate(&bsc(e).unwrap(), d, &binary(e), &s).unwrap().rate;
            (e, d, (got - wz_binary_oracle(e, d).unwrap()).abs())
        })
        .collect();
    let worst = diffs.iter().cloned().fold((0.0, 0.0, 0.0), |a, b| if b.2 > a.2 { b } else { a });
    (
        worst.2 <= WZ_TOL,
        format!("{} points, max |diff| {:.2e} at E={}, D={:.4} (tol {WZ_TOL:e})", diffs.len(), worst.2, worst.0, worst.1),
    )
}

fn matching_condition() -> Outcome {
    let s = settings();
    let cases: Vec<(f64, f64)> = [0.1, 0.25, 0.4].iter().flat_map(|&e| grid(e).into_iter().map(move |d| (e, d))).collect();
    let rows: Vec<(f64, f64, f64, bool)> = cases
        .par_iter()
        .map(|&(e, d)| {
            let p = binary(e);
            let upper = rm_upper(d, &p, &s).unwrap();
            let lower = rm_lower(d, &p, &s).unwrap();
            let m = check_matching(&upper.saddle, d, &p, &s).unwrap();
            (e, d, upper.rate - lower.rate, m.c1)
        })
        .collect();
    let worst = rows.iter().cloned().fold((0.0, 0.0, f64::NEG_INFINITY, true), |a, b| if b.2 > a.2 { b } else { a });
    let unmatched = rows.iter().filter(|r| !r.3).count();
    (
        worst.2 <= MATCHING_TOL && unmatched == 0,
        format!(
            "max rm_upper - rm_lower {:.2e} at E={}, D={:.4} (tol {MATCHING_TOL:e}); c1 false on {unmatched} of {} points",
            worst.2,
            worst.0,
            worst.1,
            rows.len()
        ),
    )
}

fn zero_distortion_rates() -> Outcome {
    let s = settings();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for e in [0.1, 0.25] {
        let up = ra_upper(0.0, &binary(e), &s).unwrap().rate;
        let lo = ra_lower(0.0, &binary(e), &s).unwrap().value;
        worst = worst.max((up - 1.0).abs()).max((lo - 1.0).abs());
        details.push(format!("E={e}: upper {up:.9}, lower {lo:.9}"));
    }
    (worst <= ZERO_DISTORTION_TOL, format!("{} (tol {ZERO_DISTORTION_TOL:e})", details.join("; ")))
}

fn no_side_information_regime() -> Outcome {
    let s = settings();
    let p = binary(0.5);
    let px = p.px().clone();
    let mut ok = true;
    let mut details = Vec::new();
    for d in [0.05, 0.1, 0.2] {
        let rd = rd_classic(d, &px, p.measure(), &s).unwrap();
        let up = ra_upper(d, &p, &s).unwrap().rate;
        let lo = ra_lower(d, &p, &s).unwrap();
        let closed = 1.0 - h2(d);
        let returns_rd = lo.special == Some(rd) && lo.value == rd.max(lo.wz_bound) && lo.wz_bound <= rd + ORDER_TOL;
        ok &= up - rd <= RA_RD_TOL && returns_rd && (rd - closed).abs() <= RD_CLOSED_FORM_TOL;
        details.push(format!(
            "D={d}: ra_upper-R {:.2e}, ra_lower {:.9} vs R {:.9}, |R-(1-h)| {:.2e}",
            up - rd,
            lo.value,
            rd,
            (rd - closed).abs()
        ));
    }
    (ok, details.join("; "))
}

fn fig4_ordering() -> Outcome {
    let e = 0.25;
    let path = std::env::temp_dir().join(format!("wzrd-acceptance-fig4-{}.csv", std::process::id()));
    if let Err(err) = cmd_fig4(e, &grid(e), &settings(), &path) {
        return (false, format!("cmd_fig4 failed: {err}"));
    }
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (cd, cwz, chb, crm) = (col("level"), col("wz_w1"), col("hb_tilde"), col("rm_lower"));
    let mut ordered = true;
    let mut best_gap = f64::NEG_INFINITY;
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect();
        let (d, wz, hb, rm) = (f[cd], f[cwz], f[chb], f[crm]);
        ordered &= rm >= hb - ORDER_TOL && hb >= wz - ORDER_TOL;
        if d > 0.0 && d <= e / 2.0 {
            best_gap = best_gap.max(rm - hb);
        }
        rows += 1;
    }
    (
        ordered && best_gap >= FIG4_GAP,
        format!("{rows} rows, ordering {}, max R_m - R_HB on (0, E/2] = {best_gap:.4} (need {FIG4_GAP})", if ordered { "holds" } else { "violated" }),
    )
}

fn random_instance_suite() -> Outcome {
    let s = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases: Vec<(Instance, f64, Vec<Vec<f64>>)> = (0..50)
        .map(|_| {
            let inst = Instance::random(3, &mut rng);
            let level = rng.random_range(0.05..0.95) * inst.constant_distortion();
            let w = random_member(&inst.vertices(), &mut rng);
            (inst, level, w)
        })
        .collect();
    let results: Vec<(bool, f64, f64, String)> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (inst, level, w))| {
            let p = inst.problem();
            let lower = rm_lower(*level, &p, &s).unwrap().rate;
            let upper = rm_upper(*level, &p, &s).unwrap();
            let ra = ra_upper(*level, &p, &s).unwrap().rate;
            let ordered = lower <= upper.rate + ORDER_TOL && upper.rate <= ra + ORDER_TOL;
            let pseudo = pseudo_wz_rate(&channel(w), *level, &p, &s).unwrap().rate;
            let oracle = inst.pseudo_oracle(w, *level);
            let miss = (oracle.lower - pseudo).max(pseudo - oracle.upper).max(0.0);
            let note = if ordered {
                String::new()
            } else {
                format!("instance {i}: {lower} <= {} <= {ra} fails", upper.rate)
            };
            (ordered, upper.gap(), miss + (oracle.upper - oracle.lower).max(0.0), note)
        })
        .collect();
    let unordered: Vec<&String> = results.iter().filter(|r| !r.0).map(|r| &r.3).collect();
    let max_gap = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_miss = results.iter().map(|r| r.2).fold(0.0, f64::max);
    (
        unordered.is_empty() && max_gap <= GAP_TOL && max_miss <= PSEUDO_TOL,
        format!(
            "{} instances, ordering violations {}, max minimax gap {max_gap:.2e} (tol {GAP_TOL:e}), max pseudo distance to oracle bracket {max_miss:.2e} (tol {PSEUDO_TOL:e}){}",
            results.len(),
            unordered.len(),
            unordered.first().map(|s| format!("; {s}")).unwrap_or_default()
        ),
    )
}

fn simulation_test_channel() -> TestChannel {
    let fa = Arc::new(FunctionAlphabet::new(2, 2).unwrap());
    WZParametric::new(0.5, 0.0).unwrap().test_channel(fa).unwrap()
}

fn simulation_adversaries(e: f64) -> Vec<Adversary> {
    let (w1, w2) = fig4_channels(e).unwrap();
    vec![
        Adversary::Iid {
            name: "bsc".into(),
            channel: bsc(e).unwrap(),
        },
        Adversary::Iid {
            name: "w1".into(),
            channel: w1.clone(),
        },
        Adversary::Iid {
            name: "w2".into(),
            channel: w2.clone(),
        },
        Adversary::Compound {
            name: "compound".into(),
            lambda: 0.5,
            first: w1,
            second: w2,
        },
    ]
}

fn simulation_properties() -> Outcome {
    let e = 0.25;
    let p = binary(e);
    let v = simulation_test_channel();
    let advs = simulation_adversaries(e);
    let seed = 7;
    let run = |n: usize| -> SimReport {
        let config = CodeConfig::new(n, v.clone(), SIM_DELTA, &p).unwrap();
        run_experiment(&config, &p, &advs, SIM_TRIALS, seed).unwrap()
    };
    let ns = [6, 8, 10];
    let reports: Vec<SimReport> = ns.iter().map(|&n| run(n)).collect();
    let identical = ns.iter().zip(&reports).all(|(&n, r)| run(n) == *r);
    let threshold = reports[0].target_distortion + SIM_DELTA;
    let mut ok = identical;
    let mut details = vec![format!(
        "D={:.4}, threshold D+delta={threshold:.4}, {SIM_TRIALS} trials, repeat seed {}",
        reports[0].target_distortion,
        if identical { "bit-identical" } else { "differs" }
    )];
    for (a, adv) in advs.iter().enumerate() {
        let freq: Vec<f64> = reports.iter().map(|r| r.adversaries[a].exceedance_frequency).collect();
        let mean: Vec<f64> = reports.iter().map(|r| r.adversaries[a].mean_distortion).collect();
        let errors: Vec<f64> = reports.iter().map(|r| r.adversaries[a].decoder_error_rate).collect();
        let monotone = freq.windows(2).all(|w| w[1] <= w[0]);
        let capped = freq[2] <= EXCEEDANCE_CAP;
        ok &= monotone && capped;
        details.push(format!(
            "{}: exceedance {:.4}/{:.4}/{:.4} ({}, n=10 {} {EXCEEDANCE_CAP}), mean distortion {:.4}/{:.4}/{:.4}, decoder errors {:.3}/{:.3}/{:.3}",
            adv.name(),
            freq[0],
            freq[1],
            freq[2],
            if monotone { "nonincreasing" } else { "not monotone" },
            if capped { "<=" } else { ">" },
            mean[0],
            mean[1],
            mean[2],
            errors[0],
            errors[1],
            errors[2]
        ));
    }
    (ok, details.join("; "))
}

fn uniformity_trend() -> Outcome {
    let p = binary(0.25);
    let v = simulation_test_channel();
    let values: Vec<(usize, u64, f64)> = [4, 6, 8]
        .iter()
        .map(|&n| {
            let config = CodeConfig::new(n, v.clone(), SIM_DELTA, &p).unwrap();
            (n, config.bins_f(), measure_uniformity(&config, &p, UNIFORMITY_TRIALS, 3).unwrap())
        })
        .collect();
    let decreasing = values.windows(2).all(|w| w[1].2 < w[0].2);
    let text: Vec<String> = values.iter().map(|(n, b, d)| format!("n={n} ({b} bins): {d:.4}")).collect();
    (decreasing, format!("{UNIFORMITY_TRIALS} hash draws; {}", text.join(", ")))
}

/// Exact `P^n` of the non-typical set by summing multinomial masses over
/// types.
fn exact_atypical_mass(p: &[f64], n: usize, delta: f64) -> f64 {
    let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    enumerate_types(p.len(), n)
        .unwrap()
        .iter()
        .filter(|t| {
            !t.counts()
                .iter()
                .zip(p)
                .all(|(&c, &q)| (c == 0 || q > 0.0) && (c as f64 / n as f64 - q).abs() <= delta + 1e-12)
        })
        .map(|t| {
            let ln = ln_fact(n) + t.counts().iter().zip(p).map(|(&c, &q)| c as f64 * q.ln() - ln_fact(c)).sum::<f64>();
            ln.exp()
        })
        .sum()
}

fn typicality_bound() -> Outcome {
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let sources: Vec<(Vec<f64>, u64)> = (0..10)
        .map(|_| {
            let k = rng.random_range(2..=4);
            (random_simplex(k, &mut rng), rng.random())
        })
        .collect();
    let rows: Vec<(bool, f64, String)> = sources
        .par_iter()
        .flat_map(|(p, seed)| {
            [0.05f64, 0.1, 0.2, 0.3].into_par_iter().map(move |delta| {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed ^ delta.to_bits());
                let dist = Distribution::from_probs(p.clone()).unwrap();
                let mut x = vec![0; n];
                let mut misses = 0;
                for _ in 0..TYPICALITY_SAMPLES {
                    for s in x.iter_mut() {
                        let mut r = rng.random::<f64>();
                        *s = p.len() - 1;
                        for (a, &q) in p.iter().enumerate() {
                            if r < q {
                                *s = a;
                                break;
                            }
                            r -= q;
                        }
                    }
                    misses += usize::from(!is_typical(&x, &dist, delta).unwrap());
                }
                let freq = misses as f64 / TYPICALITY_SAMPLES as f64;
                let bound = atypicality_bound(p.len(), n, delta);
                let exact = exact_atypical_mass(p, n, delta);
                let slack = sampling_slack(exact, TYPICALITY_SAMPLES);
                let ok = freq <= bound + slack && exact <= bound && (freq - exact).abs() <= slack;
                (ok, bound - exact, format!("|X|={} delta={delta}: freq {freq:.4}, exact {exact:.4}, bound {bound:.4}", p.len()))
            })
        })
        .collect();
    let failures: Vec<&String> = rows.iter().filter(|r| !r.0).map(|r| &r.2).collect();
    let tightest = rows.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    (
        failures.is_empty(),
        format!(
            "{} source/delta pairs at n={n}, {TYPICALITY_SAMPLES} samples; {} failures{}; tightest: {}",
            rows.len(),
            failures.len(),
            failures.first().map(|s| format!(" (first: {s})")).unwrap_or_default(),
            tightest.2
        ),
    )
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, wz_oracle_equivalence),
        (2, matching_condition),
        (3, zero_distortion_rates),
        (4, no_side_information_regime),
        (5, fig4_ordering),
        (6, random_instance_suite),
        (7, simulation_properties),
        (8, uniformity_trend),
        (9, typicality_bound),
    ];
    let mut failed = Vec::new();
    for (k, check) in criteria {
        let start = Instant::now();
        let (ok, details) = check();
        println!(
            "criterion {k}: {} ({details}; {:.1} s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !ok {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
