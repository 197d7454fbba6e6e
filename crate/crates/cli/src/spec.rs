//! Problem files: TOML with explicit alphabet sizes, checked on load.
//!
//! ```toml
//! [problem]
//! x = 2
//! y = 2
//! xhat = 2
//! px = [0.5, 0.5]
//! e = [[0.0, 1.0], [1.0, 0.0]]
//! d = [[0.0, 1.0], [1.0, 0.0]]
//! budget = 0.25
//!
//! [levels]
//! start = 0.0
//! stop = 0.25
//! points = 11
//!
//! [channels]
//! bsc = [[0.75, 0.25], [0.25, 0.75]]
//! ```
//!
//! `binary_example = E` replaces `[problem]` with the uniform binary
//! Hamming problem at budget `E`, and supplies default levels, channels and
//! simulation settings.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wzrd_core::binary::{bsc, fig4_channels, WZParametric};
use wzrd_core::geometry::{DistortionMeasure, FunctionAlphabet, TestChannel};
use wzrd_core::prob::{Channel, Distribution};
use wzrd_core::sim::Adversary;
use wzrd_core::solvers::{RDProblem, SolverSettings};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl ToString) -> SpecError {
    SpecError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary_example: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Levels>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub channels: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub x: usize,
    pub y: usize,
    pub xhat: usize,
    pub px: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub budget: f64,
}

/// Either explicit `values` or `points` evenly spaced levels on
/// `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Levels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub multistart_count: usize,
    pub rng_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lagrange_grid: Option<Vec<f64>>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        SolverSection {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            multistart_count: s.multistart_count,
            rng_seed: s.rng_seed,
            lagrange_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub blocklengths: Vec<usize>,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    /// Hash draws for the bin uniformity measurement; zero skips it.
    #[serde(default)]
    pub uniformity_trials: usize,
    /// Rows over the function alphabet, `y = 0` least significant digit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_channel: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parametric: Option<Parametric>,
    pub adversaries: Vec<AdversarySpec>,
}

fn default_pool_size() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parametric {
    pub lambda: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum AdversaryKind {
    Iid { channel: String },
    FixedType { channel: String },
    Compound { first: String, second: String, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: AdversaryKind,
    /// Wraps the adversary in a fresh uniform permutation per block.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub symmetrize: bool,
}

/// A validated problem file.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub problem: RDProblem,
    pub levels: Vec<f64>,
    pub settings: SolverSettings,
    pub channels: Vec<(String, Channel)>,
    pub sim: Option<SimPlan>,
    /// Budget of the binary example, when the file is one.
    pub binary_example: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SimPlan {
    pub blocklengths: Vec<usize>,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub pool_size: usize,
    pub uniformity_trials: usize,
    pub test_channel: TestChannel,
    pub adversaries: Vec<Adversary>,
}

impl ProblemSpec {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        toml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem files always serialize")
    }

    /// The uniform binary Hamming problem at budget `e`, with every default
    /// written out.
    pub fn binary(e: f64) -> Self {
        ProblemSpec {
            binary_example: Some(e),
            problem: None,
            levels: None,
            solver: SolverSection::default(),
            channels: BTreeMap::new(),
            sim: None,
        }
    }

    pub fn resolve(&self) -> Result<Resolved, SpecError> {
        let problem = match (self.binary_example, &self.problem) {
            (Some(_), Some(_)) => {
                return Err(invalid("binary_example", "cannot be combined with a [problem] section"));
            }
            (None, None) => return Err(invalid("problem", "missing; give a [problem] section or binary_example")),
            (Some(e), None) => {
                if !(0.0..=0.5).contains(&e) {
                    return Err(invalid("binary_example", format!("budget {e} outside [0, 1/2]")));
                }
                RDProblem::binary_hamming(e).map_err(|err| invalid("binary_example", err))?
            }
            (None, Some(p)) => p.resolve()?,
        };
        let levels = self.resolve_levels()?;
        let settings = self.solver.resolve()?;
        let channels = self.resolve_channels(&problem)?;
        let sim = match &self.sim {
            Some(s) => Some(s.resolve(&problem, &channels)?),
            None => self.binary_example.map(|e| default_sim(&problem, e)).transpose()?,
        };
        Ok(Resolved {
            problem,
            levels,
            settings,
            channels,
            sim,
            binary_example: self.binary_example,
        })
    }

    fn resolve_levels(&self) -> Result<Vec<f64>, SpecError> {
        let Some(l) = &self.levels else {
            return match self.binary_example {
                Some(e) => Ok(even_grid(0.0, e, 21)),
                None => Err(invalid("levels", "missing")),
            };
        };
        let levels = match (&l.values, l.start, l.stop, l.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(k)) => {
                if b < a {
                    return Err(invalid("levels.stop", format!("{b} is below start {a}")));
                }
                even_grid(a, b, k)
            }
            _ => return Err(invalid("levels", "give either values or start, stop and points")),
        };
        for (i, &v) in levels.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("levels[{i}]"), format!("{v} is not a nonnegative number")));
            }
        }
        Ok(levels)
    }

    fn resolve_channels(&self, problem: &RDProblem) -> Result<Vec<(String, Channel)>, SpecError> {
        if self.channels.is_empty() {
            if let Some(e) = self.binary_example {
                let (w1, w2) = fig4_channels(e).map_err(|err| invalid("binary_example", err))?;
                let b = bsc(e).map_err(|err| invalid("binary_example", err))?;
                return Ok(vec![("bsc".into(), b), ("w1".into(), w1), ("w2".into(), w2)]);
            }
        }
        self.channels
            .iter()
            .map(|(name, rows)| {
                let field = format!("channels.{name}");
                let c = channel_rows(&field, rows, problem.x_size(), problem.y_size())?;
                if !problem.class().contains(&c).map_err(|err| invalid(&field, err))? {
                    return Err(invalid(field, format!("side distortion exceeds the budget {}", problem.budget())));
                }
                Ok((name.clone(), c))
            })
            .collect()
    }
}

fn even_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![a],
        k => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    }
}

fn check_matrix(field: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<(), SpecError> {
    if rows.len() != nrows {
        return Err(invalid(field, format!("has {} rows, expected {nrows}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(invalid(format!("{field}[{i}]"), format!("has {} entries, expected {ncols}", r.len())));
        }
    }
    Ok(())
}

fn channel_rows(field: &str, rows: &[Vec<f64>], nx: usize, ny: usize) -> Result<Channel, SpecError> {
    check_matrix(field, rows, nx, ny)?;
    Channel::from_rows(rows.to_vec()).map_err(|err| invalid(field, err))
}

impl ProblemSection {
    fn resolve(&self) -> Result<RDProblem, SpecError> {
        for (name, size) in [("problem.x", self.x), ("problem.y", self.y), ("problem.xhat", self.xhat)] {
            if size == 0 {
                return Err(invalid(name, "alphabet size must be positive"));
            }
        }
        if self.px.len() != self.x {
            return Err(invalid("problem.px", format!("has {} entries, expected {}", self.px.len(), self.x)));
        }
        check_matrix("problem.e", &self.e, self.x, self.y)?;
        check_matrix("problem.d", &self.d, self.x, self.xhat)?;
        let px = Distribution::from_probs(self.px.clone()).map_err(|err| invalid("problem.px", err))?;
        let e = DistortionMeasure::new(self.e.clone()).map_err(|err| invalid("problem.e", err))?;
        let d = DistortionMeasure::new(self.d.clone()).map_err(|err| invalid("problem.d", err))?;
        RDProblem::new(px, e, d, self.budget).map_err(|err| invalid("problem.budget", err))
    }
}

impl SolverSection {
    fn resolve(&self) -> Result<SolverSettings, SpecError> {
        let mut s = SolverSettings {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            multistart_count: self.multistart_count,
            rng_seed: self.rng_seed,
            ..SolverSettings::default()
        };
        if let Some(g) = &self.lagrange_grid {
            s.lagrange_grid = g.clone();
        }
        s.validate().map_err(|err| invalid("solver", err))?;
        Ok(s)
    }
}

impl SimSection {
    fn resolve(&self, problem: &RDProblem, channels: &[(String, Channel)]) -> Result<SimPlan, SpecError> {
        if self.blocklengths.is_empty() || self.blocklengths.contains(&0) {
            return Err(invalid("sim.blocklengths", "must list positive blocklengths"));
        }
        if self.trials == 0 {
            return Err(invalid("sim.trials", "must be positive"));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(invalid("sim.delta", "must be positive"));
        }
        if self.pool_size == 0 {
            return Err(invalid("sim.pool_size", "must be positive"));
        }
        let fa = problem.functions().clone();
        let test_channel = match (&self.test_channel, self.parametric) {
            (Some(rows), None) => {
                check_matrix("sim.test_channel", rows, problem.x_size(), fa.len())?;
                TestChannel::from_rows(rows.clone(), fa).map_err(|err| invalid("sim.test_channel", err))?
            }
            (None, Some(p)) => parametric_channel(problem, p, fa)?,
            _ => return Err(invalid("sim", "give exactly one of test_channel and parametric")),
        };
        let lookup = |field: String, name: &str| {
            channels
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, c)| c.clone())
                .ok_or_else(|| invalid(field, format!("unknown channel '{name}'")))
        };
        let mut adversaries = Vec::with_capacity(self.adversaries.len());
        for (i, a) in self.adversaries.iter().enumerate() {
            let field = |f: &str| format!("sim.adversaries[{i}].{f}");
            let base = match &a.kind {
                AdversaryKind::Iid { channel } => Adversary::Iid {
                    name: a.name.clone(),
                    channel: lookup(field("channel"), channel)?,
                },
                AdversaryKind::FixedType { channel } => Adversary::FixedType {
                    name: a.name.clone(),
                    channel: lookup(field("channel"), channel)?,
                },
                AdversaryKind::Compound { first, second, lambda } => Adversary::Compound {
                    name: a.name.clone(),
                    lambda: *lambda,
                    first: lookup(field("first"), first)?,
                    second: lookup(field("second"), second)?,
                },
            };
            let adv = if a.symmetrize {
                Adversary::Permuted {
                    name: a.name.clone(),
                    permutation: None,
                    inner: Box::new(base),
                }
            } else {
                base
            };
            adv.validate(problem).map_err(|err| invalid(format!("sim.adversaries[{i}]"), err))?;
            adversaries.push(adv);
        }
        Ok(SimPlan {
            blocklengths: self.blocklengths.clone(),
            delta: self.delta,
            trials: self.trials,
            seed: self.seed,
            pool_size: self.pool_size,
            uniformity_trials: self.uniformity_trials,
            test_channel,
            adversaries,
        })
    }
}

fn parametric_channel(problem: &RDProblem, p: Parametric, fa: Arc<FunctionAlphabet>) -> Result<TestChannel, SpecError> {
    if problem.x_size() != 2 || problem.y_size() != 2 || problem.xhat_size() != 2 {
        return Err(invalid("sim.parametric", "needs binary alphabets"));
    }
    WZParametric::new(p.lambda, p.q)
        .and_then(|w| w.test_channel(fa))
        .map_err(|err| invalid("sim.parametric", err))
}

/// Simulation defaults of the binary example: half identity decoding, half
/// lossless description, against the class extremes and their mixture.
pub fn default_sim_section() -> SimSection {
    let iid = |name: &str| AdversarySpec {
        name: name.into(),
        kind: AdversaryKind::Iid { channel: name.into() },
        symmetrize: false,
    };
    SimSection {
        blocklengths: vec![6, 8, 10],
        delta: 0.1,
        trials: 2000,
        seed: 1,
        pool_size: default_pool_size(),
        uniformity_trials: 0,
        test_channel: None,
        parametric: Some(Parametric { lambda: 0.5, q: 0.0 }),
        adversaries: vec![
            iid("bsc"),
            iid("w1"),
            iid("w2"),
            AdversarySpec {
                name: "compound".into(),
                kind: AdversaryKind::Compound {
                    first: "w1".into(),
                    second: "w2".into(),
                    lambda: 0.5,
                },
                symmetrize: false,
            },
        ],
    }
}

fn default_sim(problem: &RDProblem, e: f64) -> Result<SimPlan, SpecError> {
    let (w1, w2) = fig4_channels(e).map_err(|err| invalid("binary_example", err))?;
    let b = bsc(e).map_err(|err| invalid("binary_example", err))?;
    let channels = vec![("bsc".into(), b), ("w1".into(), w1), ("w2".into(), w2)];
    default_sim_section().resolve(problem, &channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GENERIC: &str = r#"
[problem]
x = 2
y = 3
xhat = 2
px = [0.4, 0.6]
e = [[0.0, 0.5, 1.0], [1.0, 0.5, 0.0]]
d = [[0.0, 1.0], [1.0, 0.0]]
budget = 0.3

[levels]
values = [0.0, 0.1]

[channels]
erase = [[0.4, 0.6, 0.0], [0.0, 0.6, 0.4]]
"#;

    #[test]
    fn generic_file_resolves() {
        let r = ProblemSpec::parse(GENERIC).unwrap().resolve().unwrap();
        assert_eq!(r.levels, vec![0.0, 0.1]);
        assert_eq!(r.channels.len(), 1);
        assert!(r.sim.is_none());
        assert_eq!(r.problem.functions().len(), 8);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = GENERIC.replace("e = [[0.0, 0.5, 1.0], [1.0, 0.5, 0.0]]", "e = [[0.0, 0.5], [1.0, 0.5, 0.0]]");
        let err = ProblemSpec::parse(&bad).unwrap().resolve().unwrap_err();
        assert!(err.to_string().starts_with("problem.e[0]"), "{err}");
        let err = ProblemSpec::parse("[problem]\nx = \"two\"").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
        let err = ProblemSpec::parse(&format!("{GENERIC}\nunknown = 1")).unwrap_err();
        assert!(err.to_string().contains("unknown"), "{err}");
    }

    #[test]
    fn binary_example_supplies_defaults() {
        let r = ProblemSpec::binary(0.25).resolve().unwrap();
        assert_eq!(r.levels.len(), 21);
        assert_eq!(r.levels[20], 0.25);
        let names: Vec<&str> = r.channels.iter().map(|c| c.0.as_str()).collect();
        assert_eq!(names, ["bsc", "w1", "w2"]);
        let sim = r.sim.unwrap();
        assert_eq!(sim.adversaries.len(), 4);
        assert_eq!(sim.blocklengths, [6, 8, 10]);
    }

    #[test]
    fn example_and_problem_are_exclusive() {
        let text = format!("binary_example = 0.25\n{GENERIC}");
        assert!(ProblemSpec::parse(&text).unwrap().resolve().is_err());
        assert!(ProblemSpec::binary(0.7).resolve().is_err());
    }
}
