//! Dense two-phase simplex with Bland's rule.
//!
//! Solves `min c^T x` subject to `A_ub x <= b_ub`, `A_eq x = b_eq`, `x >= 0`.
//! Sizes here are tiny (tens of variables), so a full tableau is fine.

const PIVOT_TOL: f64 = 1e-11;
const RATIO_PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Vec<f64>, f64)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

struct Tableau {
    // rows x (cols + 1); last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost . x` over the current feasible basis, restricted to
    /// columns in `allowed`. Returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        let m = self.t.len();
        loop {
            // Reduced costs r_j = c_j - c_B B^{-1} A_j.
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j];
                for i in 0..m {
                    r -= cost[self.basis[i]] * self.t[i][j];
                }
                if r < -PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[i][c];
                if a > RATIO_PIVOT_TOL {
                    let ratio = self.t[i][self.cols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn minimize(&self) -> LpOutcome {
        let n = self.num_vars();
        let n_ub = self.a_ub.len();
        let n_eq = self.a_eq.len();
        let m = n_ub + n_eq;
        // Columns: original, slacks, artificials.
        let cols = n + n_ub + m;
        let mut t = Vec::with_capacity(m);
        for (i, row) in self.a_ub.iter().enumerate() {
            let mut r = vec![0.0; cols + 1];
            r[..n].copy_from_slice(row);
            r[n + i] = 1.0;
            r[cols] = self.b_ub[i];
            t.push(r);
        }
        for (i, row) in self.a_eq.iter().enumerate() {
            let mut r = vec![0.0; cols + 1];
            r[..n].copy_from_slice(row);
            r[cols] = self.b_eq[i];
            t.push(r);
        }
        for (i, r) in t.iter_mut().enumerate() {
            if r[cols] < 0.0 {
                for v in r.iter_mut() {
                    *v = -*v;
                }
            }
            r[n + n_ub + i] = 1.0;
        }
        let mut tab = Tableau {
            t,
            basis: (0..m).map(|i| n + n_ub + i).collect(),
            cols,
        };

        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(n + n_ub) {
            *c = 1.0;
        }
        let all = vec![true; cols];
        tab.optimize(&phase1, &all);
        let infeas: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= n + n_ub)
            .map(|i| tab.t[i][cols])
            .sum();
        let scale = 1.0
            + self.b_ub.iter().chain(&self.b_eq).map(|b| b.abs()).fold(0.0, f64::max);
        if infeas > FEAS_TOL * scale {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificials out of the basis or drop their rows.
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= n + n_ub {
                let col = (0..n + n_ub)
                    .map(|j| (j, tab.t[i][j].abs()))
                    .filter(|&(_, a)| a > 1e-7)
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                match col {
                    Some((j, _)) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(&self.objective);
        let mut allowed = vec![true; cols];
        for a in allowed.iter_mut().skip(n + n_ub) {
            *a = false;
        }
        if !tab.optimize(&cost, &allowed) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.t[i][cols].max(0.0);
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}
