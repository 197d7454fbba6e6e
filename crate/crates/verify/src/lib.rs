//! Reference computations for tests. Nothing here calls the solvers it is
//! used to check: entropies are summed from explicit joint tensors, the
//! channel polytope is enumerated directly and convex programs are solved
//! with a plain ellipsoid method.

use rand::Rng;
use wzrd_core::geometry::{DistortionMeasure, FunctionAlphabet, TestChannel};
use wzrd_core::prob::{Channel, Distribution};
use wzrd_core::solvers::RDProblem;

pub mod ellipsoid;

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// `I(U;X|Y) = H(U,Y) + H(X,Y) - H(Y) - H(U,X,Y)` in bits, from the joint
/// tensor `P(x) V(u|x) W(y|x)`.
pub fn phi_tensor(px: &[f64], v: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
    let (nx, nu, ny) = (px.len(), v[0].len(), w[0].len());
    let mut h_uxy = 0.0;
    let mut uy = vec![0.0; nu * ny];
    let mut xy = vec![0.0; nx * ny];
    let mut y_m = vec![0.0; ny];
    for x in 0..nx {
        for u in 0..nu {
            for y in 0..ny {
                let p = px[x] * v[x][u] * w[x][y];
                h_uxy -= plogp(p);
                uy[u * ny + y] += p;
                xy[x * ny + y] += p;
                y_m[y] += p;
            }
        }
    }
    let h = |t: &[f64]| -t.iter().map(|&p| plogp(p)).sum::<f64>();
    h(&uy) + h(&xy) - h(&y_m) - h_uxy
}

/// `I(X;U)` in bits for input law `px` and channel rows `v`.
pub fn mutual_information(px: &[f64], v: &[Vec<f64>]) -> f64 {
    let nu = v[0].len();
    let mut q = vec![0.0; nu];
    for (x, row) in v.iter().enumerate() {
        for u in 0..nu {
            q[u] += px[x] * row[u];
        }
    }
    let mut total = 0.0;
    for (x, row) in v.iter().enumerate() {
        for u in 0..nu {
            let p = px[x] * row[u];
            if p > 0.0 {
                total += p * (row[u] / q[u]).log2();
            }
        }
    }
    total
}

/// `d(V, W) = sum P(x) V(u|x) W(y|x) d(x, u(y))`, summed term by term.
pub fn distortion_sum(px: &[f64], v: &[Vec<f64>], w: &[Vec<f64>], maps: &[Vec<usize>], d: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for x in 0..px.len() {
        for (u, map) in maps.iter().enumerate() {
            for (y, &xhat) in map.iter().enumerate() {
                total += px[x] * v[x][u] * w[x][y] * d[x][xhat];
            }
        }
    }
    total
}

/// Every map `Y -> Xhat` in the documented function order: `y = 0` is the
/// least significant digit of the index.
pub fn all_maps(ny: usize, nxhat: usize) -> Vec<Vec<usize>> {
    let count = nxhat.pow(ny as u32);
    (0..count)
        .map(|mut k| {
            let mut map = vec![0; ny];
            for y in 0..ny {
                map[y] = k % nxhat;
                k /= nxhat;
            }
            map
        })
        .collect()
}

/// Vertices of `{W row stochastic : sum P(x) W(y|x) e(x,y) <= E}`: feasible
/// deterministic maps and, for each deterministic map on either side of
/// the budget, the point on the edge towards a one-row change where the
/// budget binds.
pub fn class_vertices(px: &[f64], e: &[Vec<f64>], budget: f64) -> Vec<Vec<Vec<f64>>> {
    let (nx, ny) = (px.len(), e[0].len());
    let cost = |map: &[usize]| (0..nx).map(|x| px[x] * e[x][map[x]]).sum::<f64>();
    let to_rows = |map: &[usize]| -> Vec<Vec<f64>> {
        map.iter()
            .map(|&y| {
                let mut r = vec![0.0; ny];
                r[y] = 1.0;
                r
            })
            .collect()
    };
    let maps = all_maps(nx, ny);
    let mut out = Vec::new();
    for map in &maps {
        let c0 = cost(map);
        if c0 <= budget + 1e-12 {
            out.push(to_rows(map));
        }
        for x in 0..nx {
            for y in 0..ny {
                let mut other = map.clone();
                other[x] = y;
                let c1 = cost(&other);
                // Each edge once: from the feasible end to the infeasible one.
                if c0 < budget - 1e-12 && c1 > budget + 1e-12 {
                    let t = (budget - c0) / (c1 - c0);
                    let mut rows = to_rows(map);
                    rows[x][map[x]] = 1.0 - t;
                    rows[x][y] += t;
                    out.push(rows);
                }
            }
        }
    }
    out
}

pub fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|t| *t /= s);
    v
}

/// Nonnegative matrix with at least one zero per row.
pub fn random_measure<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let mut r: Vec<f64> = (0..cols).map(|_| rng.random_range(0.1..1.0)).collect();
            r[rng.random_range(0..cols)] = 0.0;
            r
        })
        .collect()
}

/// A random member of the class as a random convex combination of vertices.
pub fn random_member<R: Rng + ?Sized>(vertices: &[Vec<Vec<f64>>], rng: &mut R) -> Vec<Vec<f64>> {
    let weights = random_simplex(vertices.len(), rng);
    let (nx, ny) = (vertices[0].len(), vertices[0][0].len());
    let mut w = vec![vec![0.0; ny]; nx];
    for (k, vert) in vertices.iter().enumerate() {
        for x in 0..nx {
            for y in 0..ny {
                w[x][y] += weights[k] * vert[x][y];
            }
        }
    }
    w
}

/// Raw data of a random instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub px: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub budget: f64,
}

impl Instance {
    /// Alphabet sizes in `2..=max_size`, source probabilities bounded away
    /// from zero, budget a random fraction of the largest useful one. Every
    /// constant reproduction has positive distortion.
    pub fn random<R: Rng + ?Sized>(max_size: usize, rng: &mut R) -> Self {
        let nx = rng.random_range(2..=max_size);
        let ny = rng.random_range(2..=max_size);
        let nxhat = rng.random_range(2..=max_size);
        let mut px = random_simplex(nx, rng);
        px.iter_mut().for_each(|p| *p = 0.8 * *p + 0.2 / nx as f64);
        let e = random_measure(nx, ny, rng);
        // Rejects reproduction measures where a constant is free everywhere.
        let d = loop {
            let d = random_measure(nx, nxhat, rng);
            let best_constant = (0..nxhat)
                .map(|xh| (0..nx).map(|x| px[x] * d[x][xh]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if best_constant > 0.05 {
                break d;
            }
        };
        let e_top: f64 = (0..nx).map(|x| px[x] * e[x].iter().cloned().fold(0.0, f64::max)).sum();
        let budget = rng.random_range(0.1..0.9) * e_top;
        Instance { px, e, d, budget }
    }

    pub fn problem(&self) -> RDProblem {
        RDProblem::new(
            Distribution::from_probs(self.px.clone()).unwrap(),
            DistortionMeasure::new(self.e.clone()).unwrap(),
            DistortionMeasure::new(self.d.clone()).unwrap(),
            self.budget,
        )
        .unwrap()
    }

    pub fn maps(&self) -> Vec<Vec<usize>> {
        all_maps(self.e[0].len(), self.d[0].len())
    }

    /// Smallest distortion reachable at rate zero: the best constant
    /// reproduction.
    pub fn constant_distortion(&self) -> f64 {
        (0..self.d[0].len())
            .map(|xh| (0..self.px.len()).map(|x| self.px[x] * self.d[x][xh]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn vertices(&self) -> Vec<Vec<Vec<f64>>> {
        class_vertices(&self.px, &self.e, self.budget)
    }
}

pub fn channel(rows: &[Vec<f64>]) -> Channel {
    Channel::from_rows(rows.to_vec()).unwrap()
}

pub fn test_channel(rows: &[Vec<f64>], ny: usize, nxhat: usize) -> TestChannel {
    TestChannel::from_rows(rows.to_vec(), std::sync::Arc::new(FunctionAlphabet::new(ny, nxhat).unwrap())).unwrap()
}

/// Minimum over a `(lambda, q)` grid of `lambda [h(E * q) - h(q)]` subject to
/// `lambda q + (1 - lambda) E <= D`.
pub fn binary_wz_grid(e: f64, level: f64, step: f64) -> f64 {
    let conv = |a: f64, b: f64| a * (1.0 - b) + b * (1.0 - a);
    let steps_l = (1.0 / step).round() as usize;
    let steps_q = (0.5 / step).round() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=steps_l {
        let lambda = i as f64 * step;
        for j in 0..=steps_q {
            let q = j as f64 * step;
            if lambda * q + (1.0 - lambda) * e <= level + 1e-12 {
                best = best.min(lambda * (h2(conv(e, q)) - h2(q)));
            }
        }
    }
    best
}

/// Sample standard error bound used for Monte Carlo comparisons.
pub fn sampling_slack(p: f64, samples: usize) -> f64 {
    4.0 * (p.clamp(1e-4, 1.0) * (1.0 - p).max(0.0) / samples as f64).sqrt() + 1.0 / samples as f64
}

/// Coefficients of `V -> d(V, W)`: `P(x) sum_y W(y|x) d(x, u(y))`.
pub fn distortion_form(px: &[f64], w: &[Vec<f64>], maps: &[Vec<usize>], d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..px.len())
        .map(|x| {
            maps.iter()
                .map(|map| px[x] * map.iter().enumerate().map(|(y, &xh)| w[x][y] * d[x][xh]).sum::<f64>())
                .collect()
        })
        .collect()
}

impl Instance {
    /// `d(V, W_k) <= D` for every vertex `W_k` of the class.
    pub fn robust_constraints(&self, level: f64) -> Vec<ellipsoid::LinearConstraint> {
        let maps = self.maps();
        self.vertices()
            .iter()
            .map(|w| ellipsoid::LinearConstraint {
                a: distortion_form(&self.px, w, &maps, &self.d),
                b: level,
            })
            .collect()
    }

    /// `min phi(V, W)` over `V(W, D)`.
    pub fn wz_oracle(&self, w: &[Vec<f64>], level: f64) -> ellipsoid::Bracket {
        let maps = self.maps();
        let c = vec![ellipsoid::LinearConstraint {
            a: distortion_form(&self.px, w, &maps, &self.d),
            b: level,
        }];
        let f = ellipsoid::phi_objective(&self.px, w);
        ellipsoid::minimize(self.px.len(), maps.len(), &f, &c, 1e-7, 4_000_000)
    }

    /// `min phi(V, W)` over `V(E, D)` written out with every vertex.
    pub fn pseudo_oracle(&self, w: &[Vec<f64>], level: f64) -> ellipsoid::Bracket {
        let f = ellipsoid::phi_objective(&self.px, w);
        ellipsoid::minimize(self.px.len(), self.maps().len(), &f, &self.robust_constraints(level), 1e-7, 4_000_000)
    }

    /// `min I(X;U)` over `V(E, D)` written out with every vertex.
    pub fn ra_oracle(&self, level: f64) -> ellipsoid::Bracket {
        let f = ellipsoid::mutual_information_objective(&self.px);
        ellipsoid::minimize(self.px.len(), self.maps().len(), &f, &self.robust_constraints(level), 1e-7, 4_000_000)
    }
}

/// Ordinary `R(D)` as `min I(X; Xhat)` subject to `E d(X, Xhat) <= D`.
pub fn rd_oracle(px: &[f64], d: &[Vec<f64>], level: f64) -> ellipsoid::Bracket {
    let a: Vec<Vec<f64>> = (0..px.len()).map(|x| d[x].iter().map(|v| px[x] * v).collect()).collect();
    let f = ellipsoid::mutual_information_objective(px);
    ellipsoid::minimize(px.len(), d[0].len(), &f, &[ellipsoid::LinearConstraint { a, b: level }], 1e-8, 1_000_000)
}
