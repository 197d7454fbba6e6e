//! Ellipsoid method for `min f(V)` over row-stochastic `V` with extra linear
//! constraints `<A_k, V> <= b_k`.
//!
//! Each row keeps its first entry implicit (`V(0|x) = 1 - sum`), so the
//! search runs in `nx (nu - 1)` free coordinates. Every feasible center
//! yields the lower bound `f(c) - sqrt(g' P g)` on the optimum, so the
//! result is a certified bracket.

/// Objective value and gradient (over the full `nx x nu` matrix) at `V`.
pub type Objective<'a> = dyn Fn(&[Vec<f64>]) -> (f64, Vec<Vec<f64>>) + 'a;

#[derive(Debug, Clone)]
pub struct Bracket {
    pub upper: f64,
    pub lower: f64,
    pub argmin: Vec<Vec<f64>>,
    pub iterations: usize,
}

pub struct LinearConstraint {
    pub a: Vec<Vec<f64>>,
    pub b: f64,
}

pub fn minimize(
    nx: usize,
    nu: usize,
    f: &Objective<'_>,
    constraints: &[LinearConstraint],
    gap: f64,
    max_iterations: usize,
) -> Bracket {
    let m = nu - 1;
    let n = nx * m;
    let idx = |x: usize, u: usize| x * m + (u - 1);
    let mut c = vec![1.0 / nu as f64; n];
    let mut p = vec![0.0; n * n];
    let r2 = n as f64;
    for i in 0..n {
        p[i * n + i] = r2;
    }
    let expand = |c: &[f64]| -> Vec<Vec<f64>> {
        (0..nx)
            .map(|x| {
                let mut row = vec![0.0; nu];
                let s: f64 = (1..nu).map(|u| c[idx(x, u)]).sum();
                row[0] = 1.0 - s;
                for u in 1..nu {
                    row[u] = c[idx(x, u)];
                }
                row
            })
            .collect()
    };
    // Reduces a full-matrix linear form to free coordinates.
    let reduce = |a: &[Vec<f64>]| -> (Vec<f64>, f64) {
        let mut g = vec![0.0; n];
        let mut offset = 0.0;
        for x in 0..nx {
            offset += a[x][0];
            for u in 1..nu {
                g[idx(x, u)] = a[x][u] - a[x][0];
            }
        }
        (g, offset)
    };
    let mut best = Bracket {
        upper: f64::INFINITY,
        lower: f64::NEG_INFINITY,
        argmin: expand(&c),
        iterations: 0,
    };
    let nf = n as f64;
    let mut pg = vec![0.0; n];
    for it in 0..max_iterations {
        best.iterations = it;
        let v = expand(&c);
        // Most violated constraint, measured in ellipsoid-normalized units.
        let mut cut: Option<(Vec<f64>, f64)> = None;
        let mut worst = 0.0;
        for x in 0..nx {
            for u in 0..nu {
                // Exact zeros count as violated so the objective never sees them.
                if v[x][u] <= 1e-300 {
                    let mut a = vec![vec![0.0; nu]; nx];
                    a[x][u] = -1.0;
                    let (g, _) = reduce(&a);
                    let h = (-v[x][u]).max(0.0);
                    let depth = h / quad(&p, &g, n).sqrt();
                    if cut.is_none() || depth > worst {
                        worst = depth;
                        cut = Some((g, h));
                    }
                }
            }
        }
        for k in constraints {
            let (g, off) = reduce(&k.a);
            let value: f64 = off + g.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
            let h = value - k.b;
            if h > 0.0 {
                let norm = quad(&p, &g, n).sqrt();
                if cut.is_none() || h / norm > worst {
                    worst = h / norm;
                    cut = Some((g, h));
                }
            }
        }
        let (g, h) = match cut {
            Some(cut) => cut,
            None => {
                let (value, grad) = f(&v);
                let (g, _) = reduce(&grad);
                let spread = quad(&p, &g, n).sqrt();
                if value < best.upper {
                    best.upper = value;
                    best.argmin = v;
                }
                best.lower = best.lower.max(value - spread);
                if best.upper - best.lower <= gap {
                    break;
                }
                (g, 0.0)
            }
        };
        let gpg = quad(&p, &g, n);
        if !gpg.is_finite() || gpg <= 0.0 {
            break;
        }
        let norm = gpg.sqrt();
        let alpha = (h / norm).min(0.999);
        for i in 0..n {
            pg[i] = (0..n).map(|j| p[i * n + j] * g[j]).sum::<f64>() / norm;
        }
        let step = (1.0 + nf * alpha) / (nf + 1.0);
        for i in 0..n {
            c[i] -= step * pg[i];
        }
        let scale = nf * nf * (1.0 - alpha * alpha) / (nf * nf - 1.0);
        let shrink = 2.0 * (1.0 + nf * alpha) / ((nf + 1.0) * (1.0 + alpha));
        for i in 0..n {
            for j in i..n {
                let val = scale * (p[i * n + j] - shrink * pg[i] * pg[j]);
                p[i * n + j] = val;
                p[j * n + i] = val;
            }
        }
    }
    best
}

fn quad(p: &[f64], g: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        if g[i] == 0.0 {
            continue;
        }
        let row = &p[i * n..(i + 1) * n];
        total += g[i] * row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
    }
    total
}

/// `phi(V, W)` in bits with its gradient in `V`.
pub fn phi_objective<'a>(px: &'a [f64], w: &'a [Vec<f64>]) -> impl Fn(&[Vec<f64>]) -> (f64, Vec<Vec<f64>>) + 'a {
    move |v: &[Vec<f64>]| {
        let (nx, nu, ny) = (px.len(), v[0].len(), w[0].len());
        let mut a = vec![0.0; nu * ny];
        let mut b = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                b[y] += px[x] * w[x][y];
                for u in 0..nu {
                    a[u * ny + y] += px[x] * v[x][u] * w[x][y];
                }
            }
        }
        let lnq = |u: usize, y: usize| {
            let q = a[u * ny + y] / b[y];
            if q > 0.0 {
                q.ln()
            } else {
                -745.0
            }
        };
        let mut value = 0.0;
        let mut grad = vec![vec![0.0; nu]; nx];
        for x in 0..nx {
            for u in 0..nu {
                let lv = if v[x][u] > 0.0 { v[x][u].ln() } else { -745.0 };
                let mut g = lv;
                for y in 0..ny {
                    g -= w[x][y] * lnq(u, y);
                }
                grad[x][u] = px[x] * g / std::f64::consts::LN_2;
                value += px[x] * v[x][u] * g;
            }
        }
        (value / std::f64::consts::LN_2, grad)
    }
}

/// `I(X;U)` in bits with its gradient in `V`.
pub fn mutual_information_objective<'a>(px: &'a [f64]) -> impl Fn(&[Vec<f64>]) -> (f64, Vec<Vec<f64>>) + 'a {
    move |v: &[Vec<f64>]| {
        let (nx, nu) = (px.len(), v[0].len());
        let mut q = vec![0.0; nu];
        for x in 0..nx {
            for u in 0..nu {
                q[u] += px[x] * v[x][u];
            }
        }
        let mut value = 0.0;
        let mut grad = vec![vec![0.0; nu]; nx];
        for x in 0..nx {
            for u in 0..nu {
                let g = if v[x][u] > 0.0 && q[u] > 0.0 { (v[x][u] / q[u]).ln() } else { -745.0 };
                grad[x][u] = px[x] * g / std::f64::consts::LN_2;
                value += px[x] * v[x][u] * g;
            }
        }
        (value / std::f64::consts::LN_2, grad)
    }
}
