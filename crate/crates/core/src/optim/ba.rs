//! Blahut-Arimoto style alternating minimization for rate-distortion
//! Lagrangians, and lower convex envelopes of the resulting point clouds.

use crate::geometry::{DistortionMeasure, FunctionAlphabet};
use crate::prob::{xlnx, Channel};

/// A point `(D_s, R_s)` on a rate-distortion curve produced at slope `s`.
/// Rates are in bits.
#[derive(Debug, Clone)]
pub struct LagrangePoint {
    pub slope: f64,
    pub distortion: f64,
    pub rate: f64,
    /// Row-major optimizing test channel.
    pub channel: Vec<f64>,
    pub iterations: usize,
}

/// Runs classic Blahut-Arimoto at slope `s` for the source `px` and
/// distortion `d`, stopping when the Lagrangian gap certificate falls below
/// `tol` nats.
pub fn rd_point(px: &[f64], d: &DistortionMeasure, s: f64, max_iter: usize, tol: f64) -> LagrangePoint {
    let nx = px.len();
    let nk = d.cols();
    let mut q = vec![1.0 / nk as f64; nk];
    let mut v = vec![0.0; nx * nk];
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        for x in 0..nx {
            let row = &mut v[x * nk..(x + 1) * nk];
            let mut best = f64::NEG_INFINITY;
            for k in 0..nk {
                row[k] = if q[k] > 0.0 { q[k].ln() - s * d.get(x, k) } else { f64::NEG_INFINITY };
                best = best.max(row[k]);
            }
            let mut total = 0.0;
            for r in row.iter_mut() {
                *r = (*r - best).exp();
                total += *r;
            }
            for r in row.iter_mut() {
                *r /= total;
            }
        }
        let mut next = vec![0.0; nk];
        for x in 0..nx {
            for k in 0..nk {
                next[k] += px[x] * v[x * nk + k];
            }
        }
        // Gap between the primal Lagrangian and the dual bound (Blahut):
        // max_k ln c_k with c_k = sum_x p(x) exp(-s d) / Z_x.
        let mut max_ln_c = f64::NEG_INFINITY;
        // v(k|x) / q(k) = exp(-s d(x, k)) / Z_x with the pre-update q.
        for k in 0..nk {
            if q[k] <= 0.0 {
                continue;
            }
            let c: f64 = (0..nx)
                .filter(|&x| px[x] > 0.0)
                .map(|x| px[x] * v[x * nk + k] / q[k])
                .sum();
            max_ln_c = max_ln_c.max(c.ln());
        }
        q = next;
        if max_ln_c <= tol {
            break;
        }
    }
    let (rate, distortion) = rate_and_distortion(px, &v, &q, |x, k| d.get(x, k));
    LagrangePoint {
        slope: s,
        distortion,
        rate: rate / std::f64::consts::LN_2,
        channel: v,
        iterations,
    }
}

fn rate_and_distortion(px: &[f64], v: &[f64], q: &[f64], cost: impl Fn(usize, usize) -> f64) -> (f64, f64) {
    let nk = q.len();
    let mut rate = 0.0;
    let mut dist = 0.0;
    for (x, &p) in px.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for k in 0..nk {
            let t = v[x * nk + k];
            if t > 0.0 {
                rate += p * t * (t / q[k]).ln();
                dist += p * t * cost(x, k);
            }
        }
    }
    (rate.max(0.0), dist)
}

/// Alternating minimization of `phi(V, W) + s d(V, W)` over `V` with the
/// auxiliary backward channel `r(u|y)`, for a fixed side channel `w`.
/// Stops when successive Lagrangian values differ by less than `tol` nats.
pub fn wz_point(
    px: &[f64],
    w: &Channel,
    fa: &FunctionAlphabet,
    d: &DistortionMeasure,
    s: f64,
    max_iter: usize,
    tol: f64,
) -> LagrangePoint {
    let nx = px.len();
    let nu = fa.len();
    let ny = fa.y_size();
    // c(x, u) = sum_y W(y|x) d(x, u(y))
    let mut cost = vec![0.0; nx * nu];
    for x in 0..nx {
        for u in 0..nu {
            cost[x * nu + u] = (0..ny).map(|y| w.get(x, y) * d.get(x, fa.apply(u, y))).sum();
        }
    }
    let mut v = vec![1.0 / nu as f64; nx * nu];
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    let mut ln_r = vec![0.0; nu * ny];
    for it in 0..max_iter {
        iterations = it + 1;
        // r(u|y) = a(u,y) / b(y)
        for y in 0..ny {
            let b: f64 = (0..nx).map(|x| px[x] * w.get(x, y)).sum();
            for u in 0..nu {
                let a: f64 = (0..nx).map(|x| px[x] * v[x * nu + u] * w.get(x, y)).sum();
                ln_r[u * ny + y] = if a > 0.0 && b > 0.0 { (a / b).ln() } else { f64::NEG_INFINITY };
            }
        }
        for x in 0..nx {
            let row = &mut v[x * nu..(x + 1) * nu];
            let mut best = f64::NEG_INFINITY;
            for u in 0..nu {
                let mut e = -s * cost[x * nu + u];
                for y in 0..ny {
                    let wy = w.get(x, y);
                    if wy > 0.0 {
                        e += wy * ln_r[u * ny + y];
                    }
                }
                row[u] = e;
                best = best.max(e);
            }
            let mut total = 0.0;
            for r in row.iter_mut() {
                *r = if r.is_finite() { (*r - best).exp() } else { 0.0 };
                total += *r;
            }
            for r in row.iter_mut() {
                *r /= total;
            }
        }
        let value = phi_nats(px, &v, w, nu, ny) + s * distortion_of(px, &v, &cost, nu);
        if (prev - value).abs() <= tol {
            break;
        }
        prev = value;
    }
    LagrangePoint {
        slope: s,
        distortion: distortion_of(px, &v, &cost, nu),
        rate: phi_nats(px, &v, w, nu, ny).max(0.0) / std::f64::consts::LN_2,
        channel: v,
        iterations,
    }
}

fn distortion_of(px: &[f64], v: &[f64], cost: &[f64], nu: usize) -> f64 {
    px.iter()
        .enumerate()
        .map(|(x, &p)| p * (0..nu).map(|u| v[x * nu + u] * cost[x * nu + u]).sum::<f64>())
        .sum()
}

fn phi_nats(px: &[f64], v: &[f64], w: &Channel, nu: usize, ny: usize) -> f64 {
    let nx = px.len();
    let mut total = 0.0;
    for x in 0..nx {
        for u in 0..nu {
            total += px[x] * xlnx(v[x * nu + u]);
        }
    }
    for y in 0..ny {
        let b: f64 = (0..nx).map(|x| px[x] * w.get(x, y)).sum();
        total += xlnx(b);
        for u in 0..nu {
            let a: f64 = (0..nx).map(|x| px[x] * v[x * nu + u] * w.get(x, y)).sum();
            total -= xlnx(a);
        }
    }
    total
}

/// Vertices of the lower convex envelope of `points`, sorted by abscissa.
pub fn lower_convex_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.iter().cloned().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if let Some(last) = hull.last() {
            if last.0 == p.0 {
                continue;
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Evaluates a lower envelope by linear interpolation; `None` outside its
/// abscissa range.
pub fn envelope_at(envelope: &[(f64, f64)], x: f64) -> Option<f64> {
    let first = envelope.first()?;
    let last = envelope.last()?;
    if x < first.0 || x > last.0 {
        return None;
    }
    for pair in envelope.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if x <= b.0 {
            let t = if b.0 > a.0 { (x - a.0) / (b.0 - a.0) } else { 0.0 };
            return Some(a.1 + t * (b.1 - a.1));
        }
    }
    Some(last.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    #[test]
    fn binary_rd_points_lie_on_closed_form() {
        let d = DistortionMeasure::hamming(2, 2).unwrap();
        for s in [0.5, 1.0, 2.0, 4.0] {
            let pt = rd_point(&[0.5, 0.5], &d, s, 100_000, 1e-14);
            if pt.distortion < 0.5 - 1e-9 {
                assert!((pt.rate - (1.0 - binary_entropy(pt.distortion))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn envelope_examples() {
        let env = lower_convex_envelope(&[(0.0, 1.0), (0.5, 0.8), (1.0, 0.0), (0.5, 0.2)]);
        assert_eq!(env, vec![(0.0, 1.0), (0.5, 0.2), (1.0, 0.0)]);
        assert_eq!(envelope_at(&env, 0.25), Some(0.6));
        assert_eq!(envelope_at(&env, 2.0), None);
        // Collinear middle points are dropped.
        let env = lower_convex_envelope(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert_eq!(env.len(), 2);
    }

    #[test]
    fn wz_point_trivial_side_information() {
        // Y = X exactly: the identity decoder meets D = 0 at rate 0.
        let fa = FunctionAlphabet::new(2, 2).unwrap();
        let d = DistortionMeasure::hamming(2, 2).unwrap();
        let w = Channel::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let pt = wz_point(&[0.5, 0.5], &w, &fa, &d, 20.0, 10_000, 1e-15);
        assert!(pt.distortion < 1e-6);
        assert!(pt.rate < 1e-6);
    }
}
