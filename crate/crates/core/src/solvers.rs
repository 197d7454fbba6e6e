//! Rate-distortion computations: the Wyner-Ziv function for a known side
//! channel, its robust (pseudo) counterpart, lower and upper bounds on the
//! universal rate for the maximum- and average-distortion classes, the
//! matching-condition checks, classic `R(D)`, and a two-decoder upper bound.
//!
//! All convex programs go through the barrier saddle solver in
//! [`crate::optim::barrier`]; robust constraints `d(V, W) <= D` for every
//! `W in W1(E)` are generated lazily from [`maximize_linear_over_class`].

use std::f64::consts::LN_2;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_size, Error, Result};
use crate::geometry::{
    expected_gains, extreme_points_w1, is_member_ved, maximize_linear_over_class, ChannelClassW1,
    DistortionMeasure, FunctionAlphabet, TestChannel,
};
use crate::optim::ba::{envelope_at, lower_convex_envelope, rd_point};
use crate::optim::barrier::{solve_saddle, BarrierSettings, Polytope};
use crate::optim::phi::{grad_w, phi_value, FixedSide, FixedTest, FreeSide, PairMax, Shape};
use crate::prob::{entropy, Alphabet, Channel, Distribution};

/// Violation allowed before a new robust cut is added.
const CUT_TOL: f64 = 1e-10;

/// Distortion level used in place of zero when only a limiting bound is
/// available.
pub const LIMIT_EPSILON: f64 = 1e-6;

/// Source, side and reproduction distortions, and the side-distortion
/// budget `E` defining `W1(E)`.
#[derive(Debug, Clone)]
pub struct RDProblem {
    px: Distribution,
    e: DistortionMeasure,
    d: DistortionMeasure,
    budget: f64,
    functions: Arc<FunctionAlphabet>,
}

impl RDProblem {
    pub fn new(px: Distribution, e: DistortionMeasure, d: DistortionMeasure, budget: f64) -> Result<Self> {
        check_size("side distortion rows", px.len(), e.rows())?;
        check_size("reproduction distortion rows", px.len(), d.rows())?;
        if !budget.is_finite() || budget < 0.0 || budget > e.max_value() + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "side distortion budget {budget} outside [0, {}]",
                e.max_value()
            )));
        }
        let functions = Arc::new(FunctionAlphabet::new(e.cols(), d.cols())?);
        Ok(RDProblem {
            px,
            e,
            d,
            budget,
            functions,
        })
    }

    /// Uniform binary source with Hamming side and reproduction distortions.
    pub fn binary_hamming(budget: f64) -> Result<Self> {
        RDProblem::new(
            Distribution::uniform(Alphabet::new(2, "X")?),
            DistortionMeasure::hamming(2, 2)?,
            DistortionMeasure::hamming(2, 2)?,
            budget,
        )
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        RDProblem::new(self.px.clone(), self.e.clone(), self.d.clone(), budget)
    }

    pub fn px(&self) -> &Distribution {
        &self.px
    }

    pub fn side_measure(&self) -> &DistortionMeasure {
        &self.e
    }

    pub fn measure(&self) -> &DistortionMeasure {
        &self.d
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn functions(&self) -> &Arc<FunctionAlphabet> {
        &self.functions
    }

    pub fn x_size(&self) -> usize {
        self.px.len()
    }

    pub fn y_size(&self) -> usize {
        self.e.cols()
    }

    pub fn xhat_size(&self) -> usize {
        self.d.cols()
    }

    pub fn class(&self) -> ChannelClassW1 {
        ChannelClassW1::new(self.px.clone(), self.e.clone(), self.budget).expect("validated at construction")
    }

    fn shape(&self) -> Shape {
        Shape {
            nx: self.x_size(),
            nu: self.functions.len(),
            ny: self.y_size(),
        }
    }

    fn y_alphabet(&self) -> Alphabet {
        Alphabet::new(self.y_size(), "Y").expect("nonempty")
    }

    fn check_side_channel(&self, w: &Channel) -> Result<()> {
        check_size("side channel inputs", self.x_size(), w.input_size())?;
        check_size("side channel outputs", self.y_size(), w.output_size())
    }

    /// `c[x, u] = P(x) sum_y W(y|x) d(x, u(y))`, so that `d(V, W) = c . V`.
    fn cost_row(&self, w: &[f64]) -> Vec<f64> {
        let s = self.shape();
        let mut c = vec![0.0; s.nx * s.nu];
        for x in 0..s.nx {
            let p = self.px.get(x);
            for u in 0..s.nu {
                let mut t = 0.0;
                for y in 0..s.ny {
                    t += w[x * s.ny + y] * self.d.get(x, self.functions.apply(u, y));
                }
                c[x * s.nu + u] = p * t;
            }
        }
        c
    }

    /// Worst-case distortion of the point mass on each function.
    fn pure_worst_cases(&self) -> Vec<f64> {
        let s = self.shape();
        (0..s.nu)
            .map(|u| {
                let mut v = vec![0.0; s.nx * s.nu];
                for x in 0..s.nx {
                    v[x * s.nu + u] = 1.0;
                }
                let g = expected_gains(&v, s.nx, &self.functions, &self.d);
                maximize_linear_over_class(self.px.probs(), &self.e, self.budget, &g).0
            })
            .collect()
    }

    fn side_polytope(&self) -> Polytope {
        let s = self.shape();
        let mut poly = Polytope::simplices(s.nx, s.ny);
        let mut row = vec![0.0; s.nx * s.ny];
        for x in 0..s.nx {
            for y in 0..s.ny {
                row[x * s.ny + y] = self.px.get(x) * self.e.get(x, y);
            }
        }
        poly.push_constraint(row, self.budget);
        poly
    }

    /// Replaces rows of zero-probability inputs by a zero-distortion
    /// constant function and wraps the result.
    fn finish_test_channel(&self, mut v: Vec<f64>) -> Result<TestChannel> {
        let s = self.shape();
        for x in 0..s.nx {
            if self.px.get(x) == 0.0 {
                let xhat = self.d.row(x).iter().position(|&t| t == 0.0).expect("row has a zero");
                let row = &mut v[x * s.nu..(x + 1) * s.nu];
                row.iter_mut().for_each(|t| *t = 0.0);
                row[self.functions.constant(xhat)] = 1.0;
            }
        }
        TestChannel::from_flat(s.nx, v, self.functions.clone())
    }

    fn finish_side_channel(&self, mut w: Vec<f64>) -> Result<Channel> {
        let s = self.shape();
        for x in 0..s.nx {
            if self.px.get(x) == 0.0 {
                let y0 = self.e.row(x).iter().position(|&t| t == 0.0).expect("row has a zero");
                let row = &mut w[x * s.ny..(x + 1) * s.ny];
                row.iter_mut().for_each(|t| *t = 0.0);
                row[y0] = 1.0;
            }
        }
        Channel::from_flat(self.px.alphabet().clone(), self.y_alphabet(), w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Slopes swept by the Blahut-Arimoto based computations.
    pub lagrange_grid: Vec<f64>,
    pub multistart_count: usize,
    pub rng_seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-6,
            max_iterations: 200,
            lagrange_grid: vec![0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 20.0, 40.0],
            multistart_count: 16,
            rng_seed: 0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }

    fn barrier(&self) -> BarrierSettings {
        BarrierSettings {
            gap_tol: (self.tolerance * 1e-4).clamp(1e-12, 1e-8),
            ..BarrierSettings::default()
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if !level.is_finite() || level < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "distortion level must be finite and nonnegative, got {level}"
        )));
    }
    Ok(())
}

fn to_bits(nats: f64) -> f64 {
    nats.max(0.0) / LN_2
}

/// `phi(V, W) = I(U;X) - I(U;Y) = I(U;X|Y)` in bits.
pub fn phi(v: &TestChannel, w: &Channel, px: &Distribution) -> Result<f64> {
    check_size("test channel inputs", px.len(), v.input_size())?;
    check_size("side channel inputs", px.len(), w.input_size())?;
    check_size("side channel outputs", v.functions().y_size(), w.output_size())?;
    let s = Shape {
        nx: px.len(),
        nu: v.functions().len(),
        ny: w.output_size(),
    };
    Ok(to_bits(phi_value(px.probs(), v.as_flat(), w.as_flat(), s)))
}

/// A minimizing test channel with its rate in bits.
#[derive(Debug, Clone)]
pub struct RateSolution {
    pub rate: f64,
    pub test_channel: TestChannel,
}

#[derive(Debug, Clone)]
pub struct WzSolution {
    pub rate: f64,
    pub test_channel: TestChannel,
    /// Multiplier of the distortion constraint in bits per unit distortion;
    /// `None` when the constraint cannot be relaxed (minimal distortion).
    pub multiplier: Option<f64>,
}

/// `R_WZ(D|W) = min { phi(V, W) : d(V, W) <= D }`.
pub fn wz_rate(w: &Channel, level: f64, problem: &RDProblem, settings: &SolverSettings) -> Result<WzSolution> {
    problem.check_side_channel(w)?;
    check_level(level)?;
    settings.validate()?;
    let s = problem.shape();
    let cost = problem.cost_row(w.as_flat());
    // One function for every input: rate zero.
    let mut best = (f64::INFINITY, 0);
    for u in 0..s.nu {
        let total: f64 = (0..s.nx).map(|x| cost[x * s.nu + u]).sum();
        if total < best.0 {
            best = (total, u);
        }
    }
    if best.0 <= level {
        return Ok(WzSolution {
            rate: 0.0,
            test_channel: TestChannel::point_mass(s.nx, best.1, problem.functions.clone())?,
            multiplier: Some(0.0),
        });
    }
    let minimal: f64 = (0..s.nx)
        .map(|x| (0..s.nu).map(|u| cost[x * s.nu + u]).fold(f64::INFINITY, f64::min))
        .sum();
    if level < minimal - 1e-12 {
        return Err(Error::Infeasible(format!(
            "distortion {level} is below the minimum {minimal} achievable with this side channel"
        )));
    }
    let mut poly = Polytope::simplices(s.nx, s.nu);
    poly.push_constraint(cost, level);
    let f = FixedSide {
        px: problem.px.probs(),
        w: w.as_flat().to_vec(),
        shape: s,
    };
    let sol = solve_saddle(&f, &poly, &Polytope::default(), &settings.barrier())?;
    Ok(WzSolution {
        rate: to_bits(sol.value),
        test_channel: problem.finish_test_channel(sol.x)?,
        multiplier: sol.x_multipliers[0].map(|m| m / LN_2),
    })
}

struct RobustSolution {
    value: f64,
    v: Vec<f64>,
    w: Vec<f64>,
    cuts: usize,
}

/// Cutting-plane loop shared by the robust minimizations: solves over
/// `{V : d(V, W_k) <= D for the cuts W_k}` (optionally as a saddle problem
/// against `W in W1(E)`), then adds the worst-case channel of the solution
/// until none is violated.
fn robust_solve(
    problem: &RDProblem,
    level: f64,
    settings: &SolverSettings,
    solve: impl Fn(&Polytope) -> Result<(f64, Vec<f64>, Vec<f64>)>,
) -> Result<RobustSolution> {
    let s = problem.shape();
    let uniform = vec![1.0 / s.nu as f64; s.nx * s.nu];
    let g = expected_gains(&uniform, s.nx, &problem.functions, &problem.d);
    let (_, first) = maximize_linear_over_class(problem.px.probs(), &problem.e, problem.budget, &g);
    let mut cuts = vec![first];
    for _ in 0..settings.max_iterations {
        let mut poly = Polytope::simplices(s.nx, s.nu);
        for c in &cuts {
            poly.push_constraint(problem.cost_row(c), level);
        }
        let (value, v, w) = solve(&poly)?;
        let g = expected_gains(&v, s.nx, &problem.functions, &problem.d);
        let (worst, channel) = maximize_linear_over_class(problem.px.probs(), &problem.e, problem.budget, &g);
        let repeated = cuts
            .iter()
            .any(|c| c.iter().zip(&channel).all(|(a, b)| (a - b).abs() < 1e-12));
        if worst <= level + CUT_TOL || repeated {
            if worst > level + 1e-7 {
                return Err(Error::Solver(format!(
                    "robust constraint violated by {} after convergence",
                    worst - level
                )));
            }
            return Ok(RobustSolution {
                value,
                v,
                w,
                cuts: cuts.len(),
            });
        }
        cuts.push(channel);
    }
    Err(Error::Solver("cutting-plane iteration limit reached".into()))
}

/// Index of a function whose point mass lies in `V(E, D)`, if any.
fn zero_rate_function(problem: &RDProblem, level: f64) -> Option<usize> {
    problem
        .pure_worst_cases()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= level)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(u, _)| u)
}

#[derive(Debug, Clone)]
pub struct PseudoSolution {
    pub rate: f64,
    pub test_channel: TestChannel,
    pub cuts: usize,
}

/// `min { phi(V, W) : V in V(E, D) }` for the problem's budget `E`.
pub fn pseudo_wz_rate(
    w: &Channel,
    level: f64,
    problem: &RDProblem,
    settings: &SolverSettings,
) -> Result<PseudoSolution> {
    problem.check_side_channel(w)?;
    check_level(level)?;
    settings.validate()?;
    let s = problem.shape();
    if let Some(u) = zero_rate_function(problem, level) {
        return Ok(PseudoSolution {
            rate: 0.0,
            test_channel: TestChannel::point_mass(s.nx, u, problem.functions.clone())?,
            cuts: 0,
        });
    }
    let f = FixedSide {
        px: problem.px.probs(),
        w: w.as_flat().to_vec(),
        shape: s,
    };
    let sol = robust_solve(problem, level, settings, |poly| {
        let r = solve_saddle(&f, poly, &Polytope::default(), &settings.barrier())?;
        Ok((r.value, r.x, Vec::new()))
    })?;
    Ok(PseudoSolution {
        rate: to_bits(sol.value),
        test_channel: problem.finish_test_channel(sol.v)?,
        cuts: sol.cuts,
    })
}

/// Upper bound on the average-distortion rate: `min { I(P_X, V) : V in V(E, D) }`.
pub fn ra_upper(level: f64, problem: &RDProblem, settings: &SolverSettings) -> Result<RateSolution> {
    check_level(level)?;
    settings.validate()?;
    let s = problem.shape();
    if let Some(u) = zero_rate_function(problem, level) {
        return Ok(RateSolution {
            rate: 0.0,
            test_channel: TestChannel::point_mass(s.nx, u, problem.functions.clone())?,
        });
    }
    // phi against a side channel with a single output symbol is I(U;X).
    let f = FixedSide {
        px: problem.px.probs(),
        w: vec![1.0; s.nx],
        shape: Shape { ny: 1, ..s },
    };
    let sol = robust_solve(problem, level, settings, |poly| {
        let r = solve_saddle(&f, poly, &Polytope::default(), &settings.barrier())?;
        Ok((r.value, r.x, Vec::new()))
    })?;
    Ok(RateSolution {
        rate: to_bits(sol.value),
        test_channel: problem.finish_test_channel(sol.v)?,
    })
}

/// An approximate saddle point `(V*, W*)` of `phi` over `V(E, D) x W1(E)`.
#[derive(Debug, Clone)]
pub struct Saddle {
    pub test_channel: TestChannel,
    pub side_channel: Channel,
}

#[derive(Debug, Clone)]
pub struct RmUpper {
    pub rate: f64,
    pub saddle: Saddle,
    /// `max_W phi(V*, W)`, an upper estimate of the min-max value.
    pub minmax: f64,
    /// `min_{V in V(E,D)} phi(V, W*)`, a lower estimate of the max-min value.
    pub maxmin: f64,
    pub cuts: usize,
}

impl RmUpper {
    /// Certified width of the bracket around the saddle value.
    pub fn gap(&self) -> f64 {
        self.minmax - self.maxmin
    }
}

/// `max_{W in W1(E)} phi(V, W)` in bits, with the maximizer.
pub fn max_phi_over_class(v: &TestChannel, problem: &RDProblem, settings: &SolverSettings) -> Result<(f64, Channel)> {
    check_size("test channel inputs", problem.x_size(), v.input_size())?;
    let f = FixedTest {
        px: problem.px.probs(),
        v: v.as_flat().to_vec(),
        shape: problem.shape(),
    };
    let sol = solve_saddle(&f, &Polytope::default(), &problem.side_polytope(), &settings.barrier())?;
    Ok((to_bits(sol.value), problem.finish_side_channel(sol.y)?))
}

/// Upper bound on the maximum-distortion rate:
/// `max_{W in W1(E)} min_{V in V(E,D)} phi(V, W)`, computed as a saddle
/// point over `V(E, D) x W1(E)`.
pub fn rm_upper(level: f64, problem: &RDProblem, settings: &SolverSettings) -> Result<RmUpper> {
    check_level(level)?;
    settings.validate()?;
    let s = problem.shape();
    if let Some(u) = zero_rate_function(problem, level) {
        return Ok(RmUpper {
            rate: 0.0,
            saddle: Saddle {
                test_channel: TestChannel::point_mass(s.nx, u, problem.functions.clone())?,
                side_channel: problem.class().zero_distortion_channel(),
            },
            minmax: 0.0,
            maxmin: 0.0,
            cuts: 0,
        });
    }
    let f = FreeSide {
        px: problem.px.probs(),
        shape: s,
    };
    let side = problem.side_polytope();
    let sol = robust_solve(problem, level, settings, |poly| {
        let r = solve_saddle(&f, poly, &side, &settings.barrier())?;
        Ok((r.value, r.x, r.y))
    })?;
    let saddle = Saddle {
        test_channel: problem.finish_test_channel(sol.v)?,
        side_channel: problem.finish_side_channel(sol.w)?,
    };
    let (minmax, _) = max_phi_over_class(&saddle.test_channel, problem, settings)?;
    let maxmin = pseudo_wz_rate(&saddle.side_channel, level, problem, settings)?.rate;
    Ok(RmUpper {
        rate: to_bits(sol.value),
        saddle,
        minmax,
        maxmin,
        cuts: sol.cuts,
    })
}

#[derive(Debug, Clone)]
pub struct MatchingCheck {
    /// The optimal test channel for `W*` is robustly feasible.
    pub c1: bool,
    /// The optimal test channel for `W*` only uses constant functions.
    pub c2: bool,
    pub v_hat: TestChannel,
}

/// Mass on non-constant functions tolerated by the constant-support check.
pub const CONSTANT_SUPPORT_TOL: f64 = 1e-6;

/// Solves `min_{V in V(W*, D)} phi(V, W*)` and tests whether the optimizer
/// lies in `V(E, D)` (c1) or is supported on constant functions (c2, which
/// implies c1).
pub fn check_matching(
    saddle: &Saddle,
    level: f64,
    problem: &RDProblem,
    settings: &SolverSettings,
) -> Result<MatchingCheck> {
    let sol = wz_rate(&saddle.side_channel, level, problem, settings)?;
    let s = problem.shape();
    // Among optimizers prefer the saddle's own test channel.
    let star = &saddle.test_channel;
    let star_distortion: f64 = problem
        .cost_row(saddle.side_channel.as_flat())
        .iter()
        .zip(star.as_flat())
        .map(|(c, v)| c * v)
        .sum();
    let star_optimal = star_distortion <= level + 1e-9
        && phi(star, &saddle.side_channel, &problem.px)? <= sol.rate + settings.tolerance;
    let v_hat = if star_optimal { star.clone() } else { sol.test_channel };
    let outside = (0..s.nx)
        .filter(|&x| problem.px.get(x) > 0.0)
        .map(|x| {
            (0..s.nu)
                .filter(|&u| !problem.functions.is_constant(u))
                .map(|u| v_hat.get(x, u))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let c2 = outside <= CONSTANT_SUPPORT_TOL;
    let c1 = c2 || is_member_ved(&v_hat, &problem.class(), &problem.d, level)?;
    Ok(MatchingCheck { c1, c2, v_hat })
}

#[derive(Debug, Clone)]
pub struct RmLower {
    pub rate: f64,
    pub w_star: Channel,
    /// The value is a limit of bounds at small positive distortion.
    pub limiting: bool,
    pub starts: usize,
    pub evaluations: usize,
}

/// Lower bound on the maximum-distortion rate:
/// `max_{W in W1(E)} R_WZ(D|W)`, found by multistart projected gradient
/// ascent. The objective is not known to be concave, so the result is the
/// best local maximum found.
pub fn rm_lower(level: f64, problem: &RDProblem, settings: &SolverSettings) -> Result<RmLower> {
    rm_lower_with_hints(level, problem, settings, &[], None)
}

/// As [`rm_lower`], with extra starting channels tried first. A known upper
/// bound `ceiling` on the maximum ends the search once a start reaches it
/// within the solver tolerance.
pub fn rm_lower_with_hints(
    level: f64,
    problem: &RDProblem,
    settings: &SolverSettings,
    hints: &[Channel],
    ceiling: Option<f64>,
) -> Result<RmLower> {
    check_level(level)?;
    settings.validate()?;
    for h in hints {
        problem.check_side_channel(h)?;
    }
    let limiting = level == 0.0;
    let eval_level = if limiting { LIMIT_EPSILON } else { level };
    let s = problem.shape();
    let px = problem.px.probs();

    let mut starts: Vec<Vec<f64>> = hints.iter().map(|h| h.as_flat().to_vec()).collect();
    if let Ok(vertices) = extreme_points_w1(&problem.class()) {
        for v in vertices {
            if starts.len() >= settings.multistart_count.max(hints.len()) {
                break;
            }
            starts.push(v.as_flat().to_vec());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.rng_seed);
    while starts.len() < settings.multistart_count.max(1) {
        let mut z = vec![0.0; s.nx * s.ny];
        for t in z.iter_mut() {
            *t = -rng.random::<f64>().max(1e-300).ln();
        }
        for x in 0..s.nx {
            let row = &mut z[x * s.ny..(x + 1) * s.ny];
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|t| *t /= total);
        }
        starts.push(project_onto_class(&z, px, &problem.e, problem.budget));
    }

    let mut evaluations = 0;
    let mut eval = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
        evaluations += 1;
        let ch = problem.finish_side_channel(w.to_vec())?;
        let sol = wz_rate(&ch, eval_level, problem, settings)?;
        let v = sol.test_channel.as_flat();
        let mut g = grad_w(px, v, ch.as_flat(), s);
        let gains = expected_gains(v, s.nx, &problem.functions, &problem.d);
        let nu = sol.multiplier.unwrap_or(0.0);
        for x in 0..s.nx {
            for y in 0..s.ny {
                g[x * s.ny + y] = g[x * s.ny + y] / LN_2 + nu * px[x] * gains[x * s.ny + y];
            }
        }
        Ok((sol.rate, g))
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut tried = 0;
    for start in &starts {
        if let (Some(c), Some((bf, _))) = (ceiling, &best) {
            if *bf >= c - settings.tolerance {
                break;
            }
        }
        tried += 1;
        let mut w = project_onto_class(start, px, &problem.e, problem.budget);
        let (mut f, mut g) = eval(&w)?;
        let mut step = 1.0;
        for _ in 0..settings.max_iterations {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let cand = project_onto_class(&trial, px, &problem.e, problem.budget);
            let moved: f64 = cand.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if moved < 1e-12 {
                break;
            }
            let predicted: f64 = g.iter().zip(cand.iter().zip(&w)).map(|(gi, (c, wi))| gi * (c - wi)).sum();
            let (fc, gc) = eval(&cand)?;
            if fc >= f + 1e-4 * predicted {
                let gain = fc - f;
                w = cand;
                f = fc;
                g = gc;
                step *= 2.0;
                if gain < settings.tolerance * 0.1 {
                    break;
                }
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, w));
        }
    }
    let (mut rate, w) = best.expect("at least one start");
    let w_star = problem.finish_side_channel(w)?;
    if limiting {
        // Secant extrapolation to zero distortion; by convexity of the
        // Wyner-Ziv function in D this does not overshoot the limit.
        let r2 = wz_rate(&w_star, 2.0 * LIMIT_EPSILON, problem, settings)?.rate;
        rate = rate.max(2.0 * rate - r2);
    }
    Ok(RmLower {
        rate,
        w_star,
        limiting,
        starts: tried,
        evaluations,
    })
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(z: &mut [f64]) {
    let mut sorted: Vec<f64> = z.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for v in z.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

/// Euclidean projection onto `W1(E)`: row-wise simplex projection of
/// `z - mu P(x) e(x, .)`, with the multiplier `mu >= 0` found by bisection.
pub(crate) fn project_onto_class(z: &[f64], px: &[f64], e: &DistortionMeasure, budget: f64) -> Vec<f64> {
    let nx = px.len();
    let ny = e.cols();
    let shifted = |mu: f64| -> (Vec<f64>, f64) {
        let mut w = z.to_vec();
        let mut cost = 0.0;
        for x in 0..nx {
            let row = &mut w[x * ny..(x + 1) * ny];
            for (y, t) in row.iter_mut().enumerate() {
                *t -= mu * px[x] * e.get(x, y);
            }
            project_simplex(row);
            cost += px[x] * row.iter().enumerate().map(|(y, t)| t * e.get(x, y)).sum::<f64>();
        }
        (w, cost)
    };
    let (w0, c0) = shifted(0.0);
    if c0 <= budget {
        return w0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while shifted(hi).1 > budget {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shifted(mid).1 > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    shifted(hi).0
}

#[derive(Debug, Clone)]
pub struct RaLower {
    /// `max_W R_WZ(D|W)`.
    pub wz_bound: f64,
    /// `H(X)` at zero distortion with a Hamming-like measure and `E > 0`,
    /// or `R(D)` when `E >= E_*`.
    pub special: Option<f64>,
    pub value: f64,
}

/// Lower bound on the average-distortion rate.
pub fn ra_lower(level: f64, problem: &RDProblem, settings: &SolverSettings) -> Result<RaLower> {
    let wz = rm_lower(level, problem, settings)?.rate;
    ra_lower_from(wz, level, problem, settings)
}

/// As [`ra_lower`], reusing an already computed `max_W R_WZ(D|W)`.
pub fn ra_lower_from(wz_bound: f64, level: f64, problem: &RDProblem, settings: &SolverSettings) -> Result<RaLower> {
    check_level(level)?;
    let special = if level == 0.0 && problem.budget > 0.0 && problem.d.is_hamming_like() {
        Some(entropy(&problem.px))
    } else if problem.budget >= e_star(&problem.px, &problem.e)?.0 {
        Some(rd_classic(level, &problem.px, &problem.d, settings)?)
    } else {
        None
    };
    let value = special.map_or(wz_bound, |s| s.max(wz_bound));
    Ok(RaLower {
        wz_bound,
        special,
        value,
    })
}

/// Ordinary rate-distortion function without side information, by
/// Blahut-Arimoto over a slope sweep refined by bisection and cleaned by a
/// lower convex envelope.
pub fn rd_classic(level: f64, px: &Distribution, d: &DistortionMeasure, settings: &SolverSettings) -> Result<f64> {
    check_size("distortion rows", px.len(), d.rows())?;
    check_level(level)?;
    settings.validate()?;
    let p = px.probs();
    let zero_rate = (0..d.cols())
        .map(|k| (0..px.len()).map(|x| p[x] * d.get(x, k)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if level >= zero_rate {
        return Ok(0.0);
    }
    let tol = (settings.tolerance * 1e-6).max(1e-15);
    let iters = 200_000;
    let mut points = vec![(zero_rate, 0.0)];
    for &s in &settings.lagrange_grid {
        let pt = rd_point(p, d, s, iters, tol);
        points.push((pt.distortion, pt.rate));
    }
    // Bracket the slope whose distortion equals the level.
    let mut hi = 1.0;
    loop {
        let pt = rd_point(p, d, hi, iters, tol);
        points.push((pt.distortion, pt.rate));
        if pt.distortion <= level || hi > 1e6 {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = if lo == 0.0 { hi / 2.0 } else { (lo * hi).sqrt() };
        let pt = rd_point(p, d, mid, iters, tol);
        points.push((pt.distortion, pt.rate));
        if (pt.distortion - level).abs() <= 1e-13 {
            break;
        }
        if pt.distortion > level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let env = lower_convex_envelope(&points);
    let rate = match envelope_at(&env, level) {
        Some(r) => r,
        None => env.first().map(|p| p.1).unwrap_or(0.0),
    };
    Ok(rate.max(0.0))
}

/// `E_* = min_y sum_x P(x) e(x, y)` and the first minimizing symbol.
pub fn e_star(px: &Distribution, e: &DistortionMeasure) -> Result<(f64, usize)> {
    check_size("side distortion rows", px.len(), e.rows())?;
    let mut best = (f64::INFINITY, 0);
    for y in 0..e.cols() {
        let v: f64 = (0..px.len()).map(|x| px.get(x) * e.get(x, y)).sum();
        if v < best.0 {
            best = (v, y);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct HbSolution {
    pub rate: f64,
    pub test_channel: TestChannel,
    pub phi_w1: f64,
    pub phi_w2: f64,
}

/// Upper bound for one encoder serving decoders with side channels `w1`
/// and `w2` at common distortion `D`: a single test channel meeting both
/// distortion constraints, at rate `max(phi(V, w1), phi(V, w2))`.
pub fn hb_tilde(
    level: f64,
    w1: &Channel,
    w2: &Channel,
    problem: &RDProblem,
    settings: &SolverSettings,
) -> Result<HbSolution> {
    problem.check_side_channel(w1)?;
    problem.check_side_channel(w2)?;
    check_level(level)?;
    settings.validate()?;
    let s = problem.shape();
    let c1 = problem.cost_row(w1.as_flat());
    let c2 = problem.cost_row(w2.as_flat());
    for u in 0..s.nu {
        let t1: f64 = (0..s.nx).map(|x| c1[x * s.nu + u]).sum();
        let t2: f64 = (0..s.nx).map(|x| c2[x * s.nu + u]).sum();
        if t1 <= level && t2 <= level {
            return Ok(HbSolution {
                rate: 0.0,
                test_channel: TestChannel::point_mass(s.nx, u, problem.functions.clone())?,
                phi_w1: 0.0,
                phi_w2: 0.0,
            });
        }
    }
    let mut poly = Polytope::simplices(s.nx, s.nu);
    poly.push_constraint(c1, level);
    poly.push_constraint(c2, level);
    let f = PairMax {
        px: problem.px.probs(),
        w1: w1.as_flat().to_vec(),
        w2: w2.as_flat().to_vec(),
        shape: s,
    };
    let sol = solve_saddle(&f, &poly, &Polytope::simplices(1, 2), &settings.barrier())?;
    let v = problem.finish_test_channel(sol.x)?;
    let phi_w1 = phi(&v, w1, &problem.px)?;
    let phi_w2 = phi(&v, w2, &problem.px)?;
    Ok(HbSolution {
        rate: phi_w1.max(phi_w2),
        test_channel: v,
        phi_w1,
        phi_w2,
    })
}

/// All bounds at one distortion level.
#[derive(Debug, Clone)]
pub struct RDBoundReport {
    pub level: f64,
    pub rm_lower: f64,
    pub rm_lower_limiting: bool,
    pub rm_upper: f64,
    pub minimax_gap: f64,
    pub ra_upper: f64,
    pub ra_lower_wz: f64,
    pub ra_lower_special: Option<f64>,
    pub matching_c1: bool,
    pub matching_c2: bool,
    pub saddle: Saddle,
}

impl RDBoundReport {
    /// The average-class lower bound: the largest applicable value.
    pub fn ra_lower(&self) -> f64 {
        self.ra_lower_special.map_or(self.ra_lower_wz, |s| s.max(self.ra_lower_wz))
    }
}

pub fn compute_bounds(level: f64, problem: &RDProblem, settings: &SolverSettings) -> Result<RDBoundReport> {
    let upper = rm_upper(level, problem, settings)?;
    let lower = rm_lower_with_hints(
        level,
        problem,
        settings,
        std::slice::from_ref(&upper.saddle.side_channel),
        Some(upper.rate),
    )?;
    let ra_up = ra_upper(level, problem, settings)?;
    let ra_lo = ra_lower_from(lower.rate, level, problem, settings)?;
    let matching = check_matching(&upper.saddle, level, problem, settings)?;
    Ok(RDBoundReport {
        level,
        rm_lower: lower.rate,
        rm_lower_limiting: lower.limiting,
        rm_upper: upper.rate,
        minimax_gap: upper.gap(),
        ra_upper: ra_up.rate,
        ra_lower_wz: ra_lo.wz_bound,
        ra_lower_special: ra_lo.special,
        matching_c1: matching.c1,
        matching_c2: matching.c2,
        saddle: upper.saddle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{binary_entropy, conditional_mutual_information, mutual_information, Joint};

    fn bsc(p: f64) -> Channel {
        Channel::from_rows(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn phi_examples() {
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        let fa = problem.functions().clone();
        let px = problem.px().clone();
        let c0 = TestChannel::point_mass(2, fa.constant(0), fa.clone()).unwrap();
        assert_eq!(phi(&c0, &bsc(0.2), &px).unwrap(), 0.0);
        // Quantized source, constant side channel: phi = I(U;X).
        let q = TestChannel::from_rows(vec![vec![0.9, 0.0, 0.0, 0.1], vec![0.1, 0.0, 0.0, 0.9]], fa.clone()).unwrap();
        let constant = Channel::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let direct = mutual_information(&px, q.channel()).unwrap();
        assert!((phi(&q, &constant, &px).unwrap() - direct).abs() < 1e-12);
        let joint = Joint::markov_uxy(&px, q.channel(), &bsc(0.2)).unwrap();
        let cmi = conditional_mutual_information(&joint).unwrap();
        assert!((phi(&q, &bsc(0.2), &px).unwrap() - cmi).abs() < 1e-10);
    }

    #[test]
    fn wz_rate_endpoints() {
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        let w = bsc(0.25);
        assert_eq!(wz_rate(&w, 0.3, &problem, &settings()).unwrap().rate, 0.0);
        let r0 = wz_rate(&w, 0.0, &problem, &settings()).unwrap();
        assert!((r0.rate - binary_entropy(0.25)).abs() < 1e-7, "{}", r0.rate);
        assert!(wz_rate(&w, -0.1, &problem, &settings()).is_err());
    }

    #[test]
    fn rd_classic_binary() {
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        let s = settings();
        for d in [0.0, 0.05, 0.11, 0.3] {
            let r = rd_classic(d, problem.px(), problem.measure(), &s).unwrap();
            assert!((r - (1.0 - binary_entropy(d))).abs() < 1e-6, "D={d}: {r}");
        }
        assert_eq!(rd_classic(0.5, problem.px(), problem.measure(), &s).unwrap(), 0.0);
    }

    #[test]
    fn e_star_examples() {
        let problem = RDProblem::binary_hamming(0.25).unwrap();
        assert_eq!(e_star(problem.px(), problem.side_measure()).unwrap(), (0.5, 0));
        let e = DistortionMeasure::new(vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(e_star(problem.px(), &e).unwrap(), (0.0, 2));
    }

    #[test]
    fn projection_lands_in_class() {
        let problem = RDProblem::binary_hamming(0.1).unwrap();
        let z = vec![0.2, 0.9, 0.7, -0.3];
        let w = project_onto_class(&z, problem.px().probs(), problem.side_measure(), 0.1);
        let ch = Channel::from_flat(Alphabet::new(2, "X").unwrap(), Alphabet::new(2, "Y").unwrap(), w).unwrap();
        assert!(problem.class().contains(&ch).unwrap());
    }
}
