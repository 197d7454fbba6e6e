//! Log-barrier interior-point method for smooth convex-concave saddle
//! problems `min_{x in X} max_{y in Y} F(x, y)` over polytopes.
//!
//! Each polytope is `{z >= 0, sum over each group = 1, A z <= b}`. A linear
//! programming presolve removes coordinates that vanish on the whole set and
//! turns inequalities that are always tight into equalities, so the barrier
//! always starts from a relative-interior point. Newton steps run in a null
//! space basis of the equality constraints; the barrier weight grows
//! geometrically until the duality-gap bound `m / tau` is below tolerance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::lp::{LinearProgram, LpOutcome};
use crate::error::{Error, Result};

/// `{z >= 0, sum_{i in g} z_i = 1 for every group g, a_k . z <= b_k}`.
#[derive(Debug, Clone, Default)]
pub struct Polytope {
    pub dim: usize,
    pub groups: Vec<Vec<usize>>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
}

impl Polytope {
    /// Product of `rows` probability simplices of size `cols`, row-major.
    pub fn simplices(rows: usize, cols: usize) -> Self {
        Polytope {
            dim: rows * cols,
            groups: (0..rows).map(|r| (r * cols..(r + 1) * cols).collect()).collect(),
            a_ub: Vec::new(),
            b_ub: Vec::new(),
        }
    }

    pub fn push_constraint(&mut self, a: Vec<f64>, b: f64) {
        debug_assert_eq!(a.len(), self.dim);
        self.a_ub.push(a);
        self.b_ub.push(b);
    }

    fn lp(&self, objective: Vec<f64>) -> LinearProgram {
        let mut a_eq = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let mut row = vec![0.0; self.dim];
            for &i in g {
                row[i] = 1.0;
            }
            a_eq.push(row);
        }
        LinearProgram {
            objective,
            a_ub: self.a_ub.clone(),
            b_ub: self.b_ub.clone(),
            b_eq: vec![1.0; a_eq.len()],
            a_eq,
        }
    }
}

/// A smooth function, convex in `x` and concave in `y`, defined on the
/// relative interiors of the two polytopes.
pub trait SaddleFunction {
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]);
    fn hessian(
        &self,
        x: &[f64],
        y: &[f64],
        hxx: &mut DMatrix<f64>,
        hxy: &mut DMatrix<f64>,
        hyy: &mut DMatrix<f64>,
    );
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierSettings {
    /// Target bound on the duality gap of the final central point.
    pub gap_tol: f64,
    pub tau0: f64,
    pub growth: f64,
    pub max_newton: usize,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        BarrierSettings {
            gap_tol: 1e-10,
            tau0: 1.0,
            growth: 100.0,
            max_newton: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
    /// Multipliers `1 / (tau s_k)` of the inequality rows; `None` for rows
    /// that are tight on the whole polytope.
    pub x_multipliers: Vec<Option<f64>>,
    pub y_multipliers: Vec<Option<f64>>,
    pub gap_bound: f64,
    pub newton_steps: usize,
}

const ZERO_TOL: f64 = 1e-10;
const INTERIOR_TOL: f64 = 1e-9;

/// A polytope after presolve, in coordinates `free` of the full vector.
#[derive(Debug, Clone)]
struct Prepared {
    dim: usize,
    free: Vec<usize>,
    // (original row index, coefficients on free coordinates, rhs)
    ineq: Vec<(usize, Vec<f64>, f64)>,
    n_rows: usize,
    basis: Basis,
    /// Group members in free coordinates when the groups are the only
    /// equalities; the basis is then re-pivoted as the iterate moves.
    groups: Option<Vec<Vec<usize>>>,
    start: Vec<f64>,
}

impl Prepared {
    fn new(poly: &Polytope) -> Result<Self> {
        let n = poly.dim;
        if n == 0 {
            return Ok(Prepared {
                dim: 0,
                free: Vec::new(),
                ineq: Vec::new(),
                n_rows: 0,
                basis: Basis::Dense(DMatrix::zeros(0, 0)),
                groups: None,
                start: Vec::new(),
            });
        }
        // max t subject to z_i >= t and a_k z + t <= b_k.
        let mut lp = poly.lp(vec![0.0; n + 1]);
        lp.objective[n] = -1.0;
        for row in lp.a_eq.iter_mut() {
            row.push(0.0);
        }
        for (k, row) in lp.a_ub.iter_mut().enumerate() {
            let norm = poly.a_ub[k].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            row.push(norm);
        }
        for i in 0..n {
            let mut row = vec![0.0; n + 1];
            row[i] = -1.0;
            row[n] = 1.0;
            lp.a_ub.push(row);
            lp.b_ub.push(0.0);
        }
        let mut cap = vec![0.0; n + 1];
        cap[n] = 1.0;
        lp.a_ub.push(cap);
        lp.b_ub.push(1.0);
        let (sol, _) = match lp.minimize() {
            LpOutcome::Optimal { x, value } => (x, value),
            LpOutcome::Infeasible => return Err(Error::Infeasible("empty constraint set".into())),
            LpOutcome::Unbounded => return Err(Error::Solver("unbounded presolve program".into())),
        };
        let t = sol[n];
        if t > INTERIOR_TOL {
            let start = sol[..n].to_vec();
            let ineq = (0..poly.a_ub.len())
                .map(|k| (k, poly.a_ub[k].clone(), poly.b_ub[k]))
                .collect();
            let free: Vec<usize> = (0..n).collect();
            let eq = group_rows(poly, &free);
            let rhs = vec![1.0; eq.len()];
            let prepared = Prepared {
                dim: n,
                free,
                ineq,
                n_rows: poly.a_ub.len(),
                basis: elimination_basis(&group_members(&eq, n), n, &start),
                groups: Some(group_members(&eq, n)),
                start: polish(start, &eq, &rhs),
            };
            return prepared.checked();
        }
        Self::full_presolve(poly)
    }

    fn full_presolve(poly: &Polytope) -> Result<Self> {
        let n = poly.dim;
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut is_free = vec![false; n];
        for i in 0..n {
            let mut c = vec![0.0; n];
            c[i] = -1.0;
            let (sol, value) = poly
                .lp(c)
                .minimize()
                .optimal()
                .ok_or_else(|| Error::Solver("presolve program failed".into()))?;
            if -value > ZERO_TOL {
                is_free[i] = true;
                points.push(sol);
            }
        }
        let mut loose = Vec::new();
        let mut tight_rows = Vec::new();
        for (k, row) in poly.a_ub.iter().enumerate() {
            let (sol, value) = poly
                .lp(row.clone())
                .minimize()
                .optimal()
                .ok_or_else(|| Error::Solver("presolve program failed".into()))?;
            if poly.b_ub[k] - value <= ZERO_TOL * (1.0 + poly.b_ub[k].abs()) {
                tight_rows.push(k);
            } else {
                loose.push(k);
                points.push(sol);
            }
        }
        for p in &points {
            for (f, &v) in is_free.iter_mut().zip(p) {
                *f |= v > ZERO_TOL;
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| is_free[i]).collect();
        let mut start_full = vec![0.0; n];
        if points.is_empty() {
            // A single point: any feasible solution.
            let (sol, _) = poly
                .lp(vec![0.0; n])
                .minimize()
                .optimal()
                .ok_or_else(|| Error::Infeasible("empty constraint set".into()))?;
            start_full = sol;
        } else {
            for p in &points {
                for (s, v) in start_full.iter_mut().zip(p) {
                    *s += v / points.len() as f64;
                }
            }
        }
        let start: Vec<f64> = free.iter().map(|&i| start_full[i]).collect();
        let restrict = |row: &[f64]| -> Vec<f64> { free.iter().map(|&i| row[i]).collect() };
        let mut eq = group_rows(poly, &free);
        let mut rhs = vec![1.0; eq.len()];
        for &k in &tight_rows {
            eq.push(restrict(&poly.a_ub[k]));
            rhs.push(poly.b_ub[k]);
        }
        let ineq = loose
            .iter()
            .map(|&k| (k, restrict(&poly.a_ub[k]), poly.b_ub[k]))
            .collect();
        let groups = tight_rows.is_empty().then(|| group_members(&eq, free.len()));
        let basis = match &groups {
            Some(g) => elimination_basis(g, free.len(), &start),
            None => Basis::Dense(null_space(&eq, free.len())),
        };
        Prepared {
            dim: n,
            free,
            ineq,
            n_rows: poly.a_ub.len(),
            basis,
            groups,
            start: polish(start, &eq, &rhs),
        }
        .checked()
    }

    /// Rejects a start that is not strictly interior.
    fn checked(self) -> Result<Self> {
        let interior = self.start.iter().all(|&v| v > 0.0) && self.slacks(&self.start).iter().all(|&s| s > 0.0);
        if !interior {
            return Err(Error::Solver("presolve did not find an interior point".into()));
        }
        Ok(self)
    }

    fn rebasis(&mut self, r: &[f64]) {
        if let Some(g) = &self.groups {
            self.basis = elimination_basis(g, self.free.len(), r);
        }
    }

    fn scatter(&self, r: &[f64], full: &mut [f64]) {
        for v in full.iter_mut() {
            *v = 0.0;
        }
        for (k, &i) in self.free.iter().enumerate() {
            full[i] = r[k];
        }
    }

    fn barrier_terms(&self) -> usize {
        self.free.len() + self.ineq.len()
    }

    fn slacks(&self, r: &[f64]) -> Vec<f64> {
        self.ineq
            .iter()
            .map(|(_, a, b)| b - a.iter().zip(r).map(|(p, q)| p * q).sum::<f64>())
            .collect()
    }

    /// `-sum ln r_i - sum ln s_k`, or `+inf` outside the interior.
    fn barrier_value(&self, r: &[f64]) -> f64 {
        let mut total = 0.0;
        for &v in r {
            if v <= 0.0 {
                return f64::INFINITY;
            }
            total -= v.ln();
        }
        for s in self.slacks(r) {
            if s <= 0.0 {
                return f64::INFINITY;
            }
            total -= s.ln();
        }
        total
    }

    fn add_barrier_derivatives(&self, r: &[f64], sign: f64, g: &mut DVector<f64>, h: &mut DMatrix<f64>) {
        for (i, &v) in r.iter().enumerate() {
            g[i] -= sign / v;
            h[(i, i)] += sign / (v * v);
        }
        for ((_, a, _), s) in self.ineq.iter().zip(self.slacks(r)) {
            for i in 0..a.len() {
                if a[i] == 0.0 {
                    continue;
                }
                g[i] += sign * a[i] / s;
                for j in 0..a.len() {
                    h[(i, j)] += sign * a[i] * a[j] / (s * s);
                }
            }
        }
    }

    /// Largest step in `(0, 1]` keeping a fraction of the distance to the
    /// boundary.
    fn max_step(&self, r: &[f64], d: &[f64]) -> f64 {
        let mut alpha: f64 = 1.0;
        for (&v, &dv) in r.iter().zip(d) {
            if dv < 0.0 {
                alpha = alpha.min(-0.99 * v / dv);
            }
        }
        let s = self.slacks(r);
        for (((_, a, _), sk), _) in self.ineq.iter().zip(s).zip(0..) {
            let ds: f64 = -a.iter().zip(d).map(|(p, q)| p * q).sum::<f64>();
            if ds < 0.0 {
                alpha = alpha.min(-0.99 * sk / ds);
            }
        }
        alpha
    }

    fn multipliers(&self, r: &[f64], tau: f64) -> Vec<Option<f64>> {
        let mut out = vec![None; self.n_rows];
        for ((k, _, _), s) in self.ineq.iter().zip(self.slacks(r)) {
            out[*k] = Some(1.0 / (tau * s));
        }
        out
    }
}

fn group_rows(poly: &Polytope, free: &[usize]) -> Vec<Vec<f64>> {
    let mut pos = vec![usize::MAX; poly.dim];
    for (k, &i) in free.iter().enumerate() {
        pos[i] = k;
    }
    poly.groups
        .iter()
        .map(|g| {
            let mut row = vec![0.0; free.len()];
            for &i in g {
                if pos[i] != usize::MAX {
                    row[pos[i]] = 1.0;
                }
            }
            row
        })
        .collect()
}

/// Least-squares correction of `z` onto `{E z = rhs}`, removing the
/// round-off left by the simplex solutions.
fn polish(mut z: Vec<f64>, eq: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    if eq.is_empty() || z.is_empty() {
        return z;
    }
    let e = DMatrix::from_fn(eq.len(), z.len(), |i, j| eq[i][j]);
    let r = DVector::from_fn(eq.len(), |i, _| rhs[i]) - &e * DVector::from_column_slice(&z);
    if let Ok(pinv) = e.pseudo_inverse(1e-12) {
        let dz = pinv * r;
        for (v, d) in z.iter_mut().zip(dz.iter()) {
            *v += d;
        }
    }
    z
}

/// Null-space basis of the equality rows, as columns.
#[derive(Debug, Clone)]
enum Basis {
    /// Sparse columns `(row, value)`.
    Sparse { rows: usize, cols: Vec<Vec<(usize, f64)>> },
    Dense(DMatrix<f64>),
}

impl Basis {
    fn ncols(&self) -> usize {
        match self {
            Basis::Sparse { cols, .. } => cols.len(),
            Basis::Dense(z) => z.ncols(),
        }
    }

    /// `Z^T g`.
    fn reduce_vec(&self, g: &DVector<f64>) -> DVector<f64> {
        match self {
            Basis::Sparse { cols, .. } => {
                DVector::from_fn(cols.len(), |j, _| cols[j].iter().map(|&(r, v)| v * g[r]).sum())
            }
            Basis::Dense(z) => z.transpose() * g,
        }
    }

    /// `Z d`.
    fn expand(&self, d: &DVector<f64>) -> Vec<f64> {
        match self {
            Basis::Sparse { rows, cols } => {
                let mut out = vec![0.0; *rows];
                for (j, col) in cols.iter().enumerate() {
                    for &(r, v) in col {
                        out[r] += v * d[j];
                    }
                }
                out
            }
            Basis::Dense(z) => (z * d).iter().cloned().collect(),
        }
    }

    /// `Z^T H`.
    fn left(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Basis::Sparse { cols, .. } => DMatrix::from_fn(cols.len(), h.ncols(), |j, c| {
                cols[j].iter().map(|&(r, v)| v * h[(r, c)]).sum()
            }),
            Basis::Dense(z) => z.transpose() * h,
        }
    }

    /// `H Z`.
    fn right(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Basis::Sparse { cols, .. } => DMatrix::from_fn(h.nrows(), cols.len(), |r0, j| {
                cols[j].iter().map(|&(r, v)| h[(r0, r)] * v).sum()
            }),
            Basis::Dense(z) => h * z,
        }
    }
}

/// Basis of `{z : group sums vanish}` for disjoint 0/1 group rows: each
/// column moves mass between a group member and the group's pivot, the
/// member that is largest at `at` (keeps the reduced Hessian well scaled).
fn elimination_basis(groups: &[Vec<usize>], n: usize, at: &[f64]) -> Basis {
    let mut grouped = vec![false; n];
    let mut cols = Vec::new();
    for members in groups {
        let Some(&pivot) = members.iter().max_by(|&&a, &&b| at[a].total_cmp(&at[b])) else {
            continue;
        };
        for &i in members {
            grouped[i] = true;
            if i != pivot {
                cols.push(vec![(i, 1.0), (pivot, -1.0)]);
            }
        }
    }
    for (i, g) in grouped.iter().enumerate() {
        if !g {
            cols.push(vec![(i, 1.0)]);
        }
    }
    Basis::Sparse { rows: n, cols }
}

fn group_members(eq: &[Vec<f64>], n: usize) -> Vec<Vec<usize>> {
    eq.iter().map(|row| (0..n).filter(|&i| row[i] != 0.0).collect()).collect()
}

/// Orthonormal basis of `{z : E z = 0}` as columns.
fn null_space(eq: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if eq.is_empty() {
        return DMatrix::identity(n, n);
    }
    let e = DMatrix::from_fn(eq.len(), n, |i, j| eq[i][j]);
    let ete = e.transpose() * &e;
    let eig = SymmetricEigen::new(ete);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] <= 1e-10 * top.max(1.0))
        .collect();
    DMatrix::from_fn(n, cols.len(), |i, j| eig.eigenvectors[(i, cols[j])])
}

/// Cholesky for the definite pure cases, LU for the saddle system; full
/// pivoting as the last resort.
fn solve_newton(kkt: DMatrix<f64>, rhs: &DVector<f64>, kx: usize, ky: usize) -> Option<DVector<f64>> {
    let definite = if ky == 0 {
        kkt.clone().cholesky().map(|c| c.solve(rhs))
    } else if kx == 0 {
        (-kkt.clone()).cholesky().map(|c| -c.solve(rhs))
    } else {
        kkt.clone().lu().solve(rhs)
    };
    match definite {
        Some(d) if d.iter().all(|v| v.is_finite()) => Some(d),
        _ => kkt.full_piv_lu().solve(rhs),
    }
}

struct State<'a, F: SaddleFunction> {
    f: &'a F,
    px: Prepared,
    py: Prepared,
    xr: Vec<f64>,
    yr: Vec<f64>,
    xf: Vec<f64>,
    yf: Vec<f64>,
}

struct Linearization {
    gx: DVector<f64>,
    gy: DVector<f64>,
    hxx: DMatrix<f64>,
    hxy: DMatrix<f64>,
    hyy: DMatrix<f64>,
}

impl<'a, F: SaddleFunction> State<'a, F> {
    fn full(&mut self) {
        let (xr, yr) = (self.xr.clone(), self.yr.clone());
        self.px.scatter(&xr, &mut self.xf);
        self.py.scatter(&yr, &mut self.yf);
    }

    /// Reduced gradient and Hessian of `tau F + B_x - B_y`.
    fn linearize(&mut self, tau: f64) -> Linearization {
        self.full();
        let (nx, ny) = (self.px.dim, self.py.dim);
        let mut gxf = vec![0.0; nx];
        let mut gyf = vec![0.0; ny];
        self.f.gradient(&self.xf, &self.yf, &mut gxf, &mut gyf);
        let mut hxxf = DMatrix::zeros(nx, nx);
        let mut hxyf = DMatrix::zeros(nx, ny);
        let mut hyyf = DMatrix::zeros(ny, ny);
        self.f.hessian(&self.xf, &self.yf, &mut hxxf, &mut hxyf, &mut hyyf);
        let fx = &self.px.free;
        let fy = &self.py.free;
        let mut gx = DVector::from_fn(fx.len(), |i, _| tau * gxf[fx[i]]);
        let mut gy = DVector::from_fn(fy.len(), |i, _| tau * gyf[fy[i]]);
        let mut hxx = DMatrix::from_fn(fx.len(), fx.len(), |i, j| tau * hxxf[(fx[i], fx[j])]);
        let hxy = DMatrix::from_fn(fx.len(), fy.len(), |i, j| tau * hxyf[(fx[i], fy[j])]);
        let mut hyy = DMatrix::from_fn(fy.len(), fy.len(), |i, j| tau * hyyf[(fy[i], fy[j])]);
        self.px.add_barrier_derivatives(&self.xr, 1.0, &mut gx, &mut hxx);
        self.py.add_barrier_derivatives(&self.yr, -1.0, &mut gy, &mut hyy);
        let zx = &self.px.basis;
        let zy = &self.py.basis;
        Linearization {
            gx: zx.reduce_vec(&gx),
            gy: zy.reduce_vec(&gy),
            hxx: zx.right(&zx.left(&hxx)),
            hxy: zy.right(&zx.left(&hxy)),
            hyy: zy.right(&zy.left(&hyy)),
        }
    }

    fn merit(&mut self, tau: f64) -> f64 {
        self.full();
        let bx = self.px.barrier_value(&self.xr);
        let by = self.py.barrier_value(&self.yr);
        tau * self.f.value(&self.xf, &self.yf) + bx - by
    }

    fn residual(&mut self, tau: f64) -> f64 {
        let lin = self.linearize(tau);
        (lin.gx.norm_squared() + lin.gy.norm_squared()).sqrt()
    }

    /// Newton iterations on the central point for `tau`; returns the
    /// number of steps taken.
    fn center(&mut self, tau: f64, max_newton: usize) -> Result<usize> {
        let kx = self.px.basis.ncols();
        let ky = self.py.basis.ncols();
        let k = kx + ky;
        if k == 0 {
            return Ok(0);
        }
        let mut prev_decrement = f64::INFINITY;
        for step in 0..max_newton {
            let (xr, yr) = (self.xr.clone(), self.yr.clone());
            self.px.rebasis(&xr);
            self.py.rebasis(&yr);
            let lin = self.linearize(tau);
            let mut kkt = DMatrix::zeros(k, k);
            kkt.view_mut((0, 0), (kx, kx)).copy_from(&lin.hxx);
            kkt.view_mut((0, kx), (kx, ky)).copy_from(&lin.hxy);
            kkt.view_mut((kx, 0), (ky, kx)).copy_from(&lin.hxy.transpose());
            kkt.view_mut((kx, kx), (ky, ky)).copy_from(&lin.hyy);
            let mut rhs = DVector::zeros(k);
            rhs.rows_mut(0, kx).copy_from(&(-&lin.gx));
            rhs.rows_mut(kx, ky).copy_from(&(-&lin.gy));
            let d = solve_newton(kkt, &rhs, kx, ky).ok_or_else(|| Error::Solver("singular Newton system".into()))?;
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::Solver("non-finite Newton step".into()));
            }
            let dxi = d.rows(0, kx).into_owned();
            let deta = d.rows(kx, ky).into_owned();
            let decrement = (dxi.transpose() * &lin.hxx * &dxi)[(0, 0)] - (deta.transpose() * &lin.hyy * &deta)[(0, 0)];
            // Converged, or stalled at the rounding floor of a large `tau`.
            if decrement.abs() <= 1e-11 || (decrement.abs() <= 1e-3 && decrement.abs() > 0.25 * prev_decrement) {
                return Ok(step);
            }
            prev_decrement = decrement.abs();
            let dx = self.px.basis.expand(&dxi);
            let dy = self.py.basis.expand(&deta);
            let mut alpha = self.px.max_step(&self.xr, &dx).min(self.py.max_step(&self.yr, &dy));
            let (x0, y0) = (self.xr.clone(), self.yr.clone());
            let saddle = kx > 0 && ky > 0;
            let base = if saddle {
                (lin.gx.norm_squared() + lin.gy.norm_squared()).sqrt()
            } else {
                self.merit(tau)
            };
            // Directional derivative of the merit for the pure cases.
            let slope = if ky == 0 {
                lin.gx.dot(&dxi)
            } else {
                -lin.gy.dot(&deta)
            };
            let mut accepted = false;
            for _ in 0..60 {
                for (i, v) in self.xr.iter_mut().enumerate() {
                    *v = x0[i] + alpha * dx[i];
                }
                for (i, v) in self.yr.iter_mut().enumerate() {
                    *v = y0[i] + alpha * dy[i];
                }
                let ok = if saddle {
                    let r = self.residual(tau);
                    r.is_finite() && r <= (1.0 - 0.01 * alpha) * base
                } else {
                    let m = self.merit(tau);
                    let m = if ky == 0 { m } else { -m };
                    let b = if ky == 0 { base } else { -base };
                    m.is_finite() && m <= b + 0.25 * alpha * slope
                };
                if ok {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // No progress possible at machine precision.
                self.xr = x0;
                self.yr = y0;
                return Ok(step);
            }
        }
        Ok(max_newton)
    }
}

/// Solves `min_x max_y F` over the two polytopes. Either polytope may have
/// dimension zero, giving a plain minimization or maximization.
pub fn solve_saddle<F: SaddleFunction>(
    f: &F,
    x_set: &Polytope,
    y_set: &Polytope,
    settings: &BarrierSettings,
) -> Result<SaddleSolution> {
    let px = Prepared::new(x_set)?;
    let py = Prepared::new(y_set)?;
    let m = (px.barrier_terms() + py.barrier_terms()).max(1) as f64;
    let mut state = State {
        f,
        xr: px.start.clone(),
        yr: py.start.clone(),
        xf: vec![0.0; px.dim],
        yf: vec![0.0; py.dim],
        px,
        py,
    };
    let mut tau = settings.tau0;
    let mut steps = 0;
    loop {
        let (x0, y0) = (state.xr.clone(), state.yr.clone());
        match state.center(tau, settings.max_newton) {
            Ok(k) => steps += k,
            // Past the first centering, keep the last central point when the
            // Newton system degenerates near the boundary.
            Err(_) if tau > settings.tau0 && m / tau <= 1e3 * settings.gap_tol => {
                state.xr = x0;
                state.yr = y0;
                tau /= settings.growth;
                break;
            }
            Err(e) => return Err(e),
        }
        if m / tau <= settings.gap_tol {
            break;
        }
        tau *= settings.growth;
    }
    state.full();
    let value = f.value(&state.xf, &state.yf);
    if !value.is_finite() {
        return Err(Error::Solver("non-finite objective at the solution".into()));
    }
    Ok(SaddleSolution {
        x_multipliers: state.px.multipliers(&state.xr, tau),
        y_multipliers: state.py.multipliers(&state.yr, tau),
        x: state.xf,
        y: state.yf,
        value,
        gap_bound: m / tau,
        newton_steps: steps,
    })
}
