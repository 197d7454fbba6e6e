//! The four subcommands as library functions.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use wzrd_core::binary::fig4_channels;
use wzrd_core::sim::{
    check_pool_budget, measure_uniformity, run_experiment, CodeConfig, SimReport, UNIFORMITY_CAP,
};
use wzrd_core::solvers::{
    check_matching, compute_bounds, hb_tilde, rm_lower_with_hints, rm_upper, wz_rate, RDProblem, SolverSettings,
};

use crate::output::{format_number, write_csv};
use crate::spec::{ProblemSpec, Resolved};
use crate::CliError;

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

fn numbers(values: &[f64]) -> Result<Vec<String>, CliError> {
    values.iter().map(|&v| format_number(v)).collect()
}

/// One row per level: both maximum-class bounds, both average-class bounds,
/// the matching flags and `R_WZ` at every named channel. A level where a
/// solver fails keeps its row with empty values and the error in `status`.
pub fn cmd_bounds(spec: &Resolved, out: &Path) -> Result<(), CliError> {
    let mut header: Vec<String> = [
        "level",
        "rm_lower",
        "rm_upper",
        "ra_upper",
        "ra_lower",
        "minimax_gap",
        "matching_c1",
        "matching_c2",
        "rm_lower_limiting",
        "status",
    ]
    .map(String::from)
    .to_vec();
    header.extend(spec.channels.iter().map(|(n, _)| format!("wz_{n}")));
    let rows: Vec<Result<Vec<String>, CliError>> = spec
        .levels
        .par_iter()
        .map(|&level| {
            let computed = compute_bounds(level, &spec.problem, &spec.settings).and_then(|b| {
                let wz = spec
                    .channels
                    .iter()
                    .map(|(_, w)| wz_rate(w, level, &spec.problem, &spec.settings).map(|s| s.rate))
                    .collect::<wzrd_core::Result<Vec<f64>>>()?;
                Ok((b, wz))
            });
            let mut row = vec![format_number(level)?];
            match computed {
                Ok((b, wz)) => {
                    row.extend(numbers(&[b.rm_lower, b.rm_upper, b.ra_upper, b.ra_lower(), b.minimax_gap])?);
                    row.extend([flag(b.matching_c1), flag(b.matching_c2), flag(b.rm_lower_limiting), "ok".into()]);
                    row.extend(numbers(&wz)?);
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 8));
                    row.push(format!("solver error: {e}"));
                    row.extend(std::iter::repeat_n(String::new(), spec.channels.len()));
                }
            }
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    write_csv(out, &header, &rows)
}

/// `R_WZ(D|W)` for every named channel.
pub fn cmd_wz(spec: &Resolved, out: &Path) -> Result<(), CliError> {
    let mut header = vec!["level".to_string()];
    header.extend(spec.channels.iter().map(|(n, _)| format!("wz_{n}")));
    let rows: Vec<Result<Vec<String>, CliError>> = spec
        .levels
        .par_iter()
        .map(|&level| {
            let mut row = vec![format_number(level)?];
            for (_, w) in &spec.channels {
                row.push(format_number(wz_rate(w, level, &spec.problem, &spec.settings)?.rate)?);
            }
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    write_csv(out, &header, &rows)
}

/// One row of the two-decoder comparison for the binary example.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Row {
    pub level: f64,
    pub wz_w1: f64,
    pub hb_tilde: f64,
    pub rm_lower: f64,
    pub rm_upper: f64,
    pub matching_c1: bool,
}

pub const FIG4_HEADER: [&str; 6] = ["level", "wz_w1", "hb_tilde", "rm_lower", "rm_upper", "matching_c1"];

pub fn fig4_rows(e: f64, levels: &[f64], settings: &SolverSettings) -> Result<Vec<Fig4Row>, CliError> {
    let problem = RDProblem::binary_hamming(e)?;
    let (w1, w2) = fig4_channels(e)?;
    levels
        .par_iter()
        .map(|&level| {
            let upper = rm_upper(level, &problem, settings)?;
            let lower = rm_lower_with_hints(
                level,
                &problem,
                settings,
                std::slice::from_ref(&upper.saddle.side_channel),
                Some(upper.rate),
            )?;
            let matching = check_matching(&upper.saddle, level, &problem, settings)?;
            Ok(Fig4Row {
                level,
                wz_w1: wz_rate(&w1, level, &problem, settings)?.rate,
                hb_tilde: hb_tilde(level, &w1, &w2, &problem, settings)?.rate,
                rm_lower: lower.rate,
                rm_upper: upper.rate,
                matching_c1: matching.c1,
            })
        })
        .collect()
}

pub fn cmd_fig4(e: f64, levels: &[f64], settings: &SolverSettings, out: &Path) -> Result<(), CliError> {
    let rows = fig4_rows(e, levels, settings)?
        .into_iter()
        .map(|r| {
            let mut row = numbers(&[r.level, r.wz_w1, r.hb_tilde, r.rm_lower, r.rm_upper])?;
            row.push(flag(r.matching_c1));
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_csv(out, &FIG4_HEADER.map(String::from), &rows)
}

#[derive(Debug, Serialize)]
pub struct SimRun {
    pub report: SimReport,
    /// Mean variational distance of the shared bin index from uniform.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniformity: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SimOutput<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    /// SHA-256 of the effective problem file in canonical form.
    pub config_sha256: String,
    pub master_seed: u64,
    pub config: &'a ProblemSpec,
    pub runs: Vec<SimRun>,
}

pub fn config_hash(spec: &ProblemSpec) -> String {
    hex::encode(Sha256::digest(spec.to_toml().as_bytes()))
}

/// Runs every blocklength of the simulation plan. `spec` is the effective
/// problem file, echoed into the output with its hash.
pub fn cmd_sim(spec: &ProblemSpec, resolved: &Resolved, out: &Path) -> Result<(), CliError> {
    let plan = resolved.sim.as_ref().ok_or(CliError::Usage("the problem file has no [sim] section".into()))?;
    let nu = plan.test_channel.functions().len();
    let nx = resolved.problem.x_size();
    // Size limits are checked for every blocklength before any work.
    for &n in &plan.blocklengths {
        check_pool_budget(n, nu, plan.pool_size)?;
        if plan.uniformity_trials > 0 {
            let terms = (nx as f64 * nu as f64).powi(n as i32);
            if terms > UNIFORMITY_CAP as f64 {
                return Err(wzrd_core::Error::CapExceeded(format!(
                    "uniformity at n = {n} needs {terms} terms, above {UNIFORMITY_CAP}"
                ))
                .into());
            }
        }
    }
    let mut runs = Vec::with_capacity(plan.blocklengths.len());
    for &n in &plan.blocklengths {
        let config =
            CodeConfig::new(n, plan.test_channel.clone(), plan.delta, &resolved.problem)?.with_pool_size(plan.pool_size);
        let report = run_experiment(&config, &resolved.problem, &plan.adversaries, plan.trials, plan.seed)?;
        let uniformity = match plan.uniformity_trials {
            0 => None,
            t => Some(measure_uniformity(&config, &resolved.problem, t, plan.seed)?),
        };
        runs.push(SimRun { report, uniformity });
    }
    let output = SimOutput {
        tool: "wzrd",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_hash(spec),
        master_seed: plan.seed,
        config: spec,
        runs,
    };
    let text = serde_json::to_string_pretty(&output).map_err(CliError::Json)?;
    std::fs::write(out, text + "\n").map_err(|e| CliError::Io {
        path: out.to_path_buf(),
        source: e,
    })
}
