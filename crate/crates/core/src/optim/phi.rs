//! The rate functional `phi(V, W) = I(U;X) - I(U;Y)` in nats, with exact
//! first and second derivatives, wrapped as saddle-solver objectives.
//!
//! With `a(u,y) = sum_x P(x) V(u|x) W(y|x)` and `b(y) = sum_x P(x) W(y|x)`,
//! `phi = sum P V ln V - sum a ln a + sum b ln b`. Derivatives are the plain
//! partials in every matrix entry; terms with a vanishing `a` or `b` are
//! dropped since they carry no mass.

use nalgebra::DMatrix;

use super::barrier::SaddleFunction;
use crate::prob::xlnx;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Shape {
    pub nx: usize,
    pub nu: usize,
    pub ny: usize,
}

fn marginals(px: &[f64], v: &[f64], w: &[f64], s: Shape) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; s.nu * s.ny];
    let mut b = vec![0.0; s.ny];
    for x in 0..s.nx {
        let p = px[x];
        if p == 0.0 {
            continue;
        }
        for y in 0..s.ny {
            let pw = p * w[x * s.ny + y];
            if pw == 0.0 {
                continue;
            }
            b[y] += pw;
            for u in 0..s.nu {
                a[u * s.ny + y] += pw * v[x * s.nu + u];
            }
        }
    }
    (a, b)
}

pub(crate) fn phi_value(px: &[f64], v: &[f64], w: &[f64], s: Shape) -> f64 {
    let (a, b) = marginals(px, v, w, s);
    let mut total = 0.0;
    for x in 0..s.nx {
        for u in 0..s.nu {
            total += px[x] * xlnx(v[x * s.nu + u]);
        }
    }
    total - a.iter().map(|&t| xlnx(t)).sum::<f64>() + b.iter().map(|&t| xlnx(t)).sum::<f64>()
}

#[inline]
fn ln1(t: f64) -> f64 {
    t.ln() + 1.0
}

pub(crate) fn phi_grad_v(px: &[f64], v: &[f64], w: &[f64], s: Shape, a: &[f64], g: &mut [f64]) {
    for x in 0..s.nx {
        let p = px[x];
        for u in 0..s.nu {
            let vu = v[x * s.nu + u];
            let mut t = if vu > 0.0 { ln1(vu) } else { 0.0 };
            for y in 0..s.ny {
                let au = a[u * s.ny + y];
                if au > 0.0 {
                    t -= w[x * s.ny + y] * ln1(au);
                }
            }
            g[x * s.nu + u] = p * t;
        }
    }
}

pub(crate) fn phi_grad_w(px: &[f64], v: &[f64], s: Shape, a: &[f64], b: &[f64], g: &mut [f64]) {
    for x in 0..s.nx {
        let p = px[x];
        for y in 0..s.ny {
            let mut t = if b[y] > 0.0 { ln1(b[y]) } else { 0.0 };
            for u in 0..s.nu {
                let au = a[u * s.ny + y];
                let vu = v[x * s.nu + u];
                if au > 0.0 && vu > 0.0 {
                    t -= vu * ln1(au);
                }
            }
            g[x * s.ny + y] = p * t;
        }
    }
}

fn hess_vv(px: &[f64], v: &[f64], w: &[f64], s: Shape, a: &[f64], h: &mut DMatrix<f64>) {
    for u in 0..s.nu {
        for x in 0..s.nx {
            let i = x * s.nu + u;
            let vu = v[i];
            if vu > 0.0 {
                h[(i, i)] += px[x] / vu;
            }
            for x2 in 0..s.nx {
                let j = x2 * s.nu + u;
                let mut t = 0.0;
                for y in 0..s.ny {
                    let au = a[u * s.ny + y];
                    if au > 0.0 {
                        t += w[x * s.ny + y] * w[x2 * s.ny + y] / au;
                    }
                }
                h[(i, j)] -= px[x] * px[x2] * t;
            }
        }
    }
}

fn hess_ww(px: &[f64], v: &[f64], s: Shape, a: &[f64], b: &[f64], h: &mut DMatrix<f64>) {
    for y in 0..s.ny {
        if b[y] <= 0.0 {
            continue;
        }
        for x in 0..s.nx {
            let i = x * s.ny + y;
            for x2 in 0..s.nx {
                let j = x2 * s.ny + y;
                let mut t = 0.0;
                for u in 0..s.nu {
                    let au = a[u * s.ny + y];
                    if au > 0.0 {
                        t += v[x * s.nu + u] * v[x2 * s.nu + u] / au;
                    }
                }
                h[(i, j)] += px[x] * px[x2] * (1.0 / b[y] - t);
            }
        }
    }
}

fn hess_vw(px: &[f64], v: &[f64], w: &[f64], s: Shape, a: &[f64], h: &mut DMatrix<f64>) {
    for x in 0..s.nx {
        for u in 0..s.nu {
            let i = x * s.nu + u;
            for y in 0..s.ny {
                let au = a[u * s.ny + y];
                if au <= 0.0 {
                    continue;
                }
                h[(i, x * s.ny + y)] -= px[x] * ln1(au);
                for x2 in 0..s.nx {
                    h[(i, x2 * s.ny + y)] -= px[x] * w[x * s.ny + y] * px[x2] * v[x2 * s.nu + u] / au;
                }
            }
        }
    }
}

/// `phi(V, W)` minimized over `V` for a fixed `W`.
pub(crate) struct FixedSide<'a> {
    pub px: &'a [f64],
    pub w: Vec<f64>,
    pub shape: Shape,
}

impl SaddleFunction for FixedSide<'_> {
    fn value(&self, x: &[f64], _: &[f64]) -> f64 {
        phi_value(self.px, x, &self.w, self.shape)
    }
    fn gradient(&self, x: &[f64], _: &[f64], gx: &mut [f64], _: &mut [f64]) {
        let (a, _) = marginals(self.px, x, &self.w, self.shape);
        phi_grad_v(self.px, x, &self.w, self.shape, &a, gx);
    }
    fn hessian(&self, x: &[f64], _: &[f64], hxx: &mut DMatrix<f64>, _: &mut DMatrix<f64>, _: &mut DMatrix<f64>) {
        let (a, _) = marginals(self.px, x, &self.w, self.shape);
        hess_vv(self.px, x, &self.w, self.shape, &a, hxx);
    }
}

/// `phi(V, W)` with both arguments free: `x = V`, `y = W`.
pub(crate) struct FreeSide<'a> {
    pub px: &'a [f64],
    pub shape: Shape,
}

impl SaddleFunction for FreeSide<'_> {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        phi_value(self.px, x, y, self.shape)
    }
    fn gradient(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        let (a, b) = marginals(self.px, x, y, self.shape);
        phi_grad_v(self.px, x, y, self.shape, &a, gx);
        phi_grad_w(self.px, x, self.shape, &a, &b, gy);
    }
    fn hessian(&self, x: &[f64], y: &[f64], hxx: &mut DMatrix<f64>, hxy: &mut DMatrix<f64>, hyy: &mut DMatrix<f64>) {
        let (a, b) = marginals(self.px, x, y, self.shape);
        hess_vv(self.px, x, y, self.shape, &a, hxx);
        hess_vw(self.px, x, y, self.shape, &a, hxy);
        hess_ww(self.px, x, self.shape, &a, &b, hyy);
    }
}

/// `phi(V, W)` maximized over `W` for a fixed `V`.
pub(crate) struct FixedTest<'a> {
    pub px: &'a [f64],
    pub v: Vec<f64>,
    pub shape: Shape,
}

impl SaddleFunction for FixedTest<'_> {
    fn value(&self, _: &[f64], y: &[f64]) -> f64 {
        phi_value(self.px, &self.v, y, self.shape)
    }
    fn gradient(&self, _: &[f64], y: &[f64], _: &mut [f64], gy: &mut [f64]) {
        let (a, b) = marginals(self.px, &self.v, y, self.shape);
        phi_grad_w(self.px, &self.v, self.shape, &a, &b, gy);
    }
    fn hessian(&self, _: &[f64], y: &[f64], _: &mut DMatrix<f64>, _: &mut DMatrix<f64>, hyy: &mut DMatrix<f64>) {
        let (a, b) = marginals(self.px, &self.v, y, self.shape);
        hess_ww(self.px, &self.v, self.shape, &a, &b, hyy);
    }
}

/// `theta_1 phi(V, W1) + theta_2 phi(V, W2)`: its saddle value is
/// `min_V max(phi(V, W1), phi(V, W2))`.
pub(crate) struct PairMax<'a> {
    pub px: &'a [f64],
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub shape: Shape,
}

impl SaddleFunction for PairMax<'_> {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        y[0] * phi_value(self.px, x, &self.w1, self.shape) + y[1] * phi_value(self.px, x, &self.w2, self.shape)
    }
    fn gradient(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        let mut g2 = vec![0.0; gx.len()];
        let (a1, _) = marginals(self.px, x, &self.w1, self.shape);
        let (a2, _) = marginals(self.px, x, &self.w2, self.shape);
        phi_grad_v(self.px, x, &self.w1, self.shape, &a1, gx);
        phi_grad_v(self.px, x, &self.w2, self.shape, &a2, &mut g2);
        for (g, h) in gx.iter_mut().zip(&g2) {
            *g = y[0] * *g + y[1] * h;
        }
        gy[0] = phi_value(self.px, x, &self.w1, self.shape);
        gy[1] = phi_value(self.px, x, &self.w2, self.shape);
    }
    fn hessian(&self, x: &[f64], y: &[f64], hxx: &mut DMatrix<f64>, hxy: &mut DMatrix<f64>, _: &mut DMatrix<f64>) {
        let n = x.len();
        let mut h1 = DMatrix::zeros(n, n);
        let mut h2 = DMatrix::zeros(n, n);
        let (a1, _) = marginals(self.px, x, &self.w1, self.shape);
        let (a2, _) = marginals(self.px, x, &self.w2, self.shape);
        hess_vv(self.px, x, &self.w1, self.shape, &a1, &mut h1);
        hess_vv(self.px, x, &self.w2, self.shape, &a2, &mut h2);
        *hxx += h1 * y[0] + h2 * y[1];
        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; n];
        phi_grad_v(self.px, x, &self.w1, self.shape, &a1, &mut g1);
        phi_grad_v(self.px, x, &self.w2, self.shape, &a2, &mut g2);
        for i in 0..n {
            hxy[(i, 0)] += g1[i];
            hxy[(i, 1)] += g2[i];
        }
    }
}

/// Gradient of `phi(V, .)` at `W`, for fixed `V`.
pub(crate) fn grad_w(px: &[f64], v: &[f64], w: &[f64], s: Shape) -> Vec<f64> {
    let (a, b) = marginals(px, v, w, s);
    let mut g = vec![0.0; s.nx * s.ny];
    phi_grad_w(px, v, s, &a, &b, &mut g);
    g
}
