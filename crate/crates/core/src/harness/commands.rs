//! The command implementations behind the `gaam` binary. Each command writes
//! its artifacts under `out_dir` and returns a JSON summary plus pass/fail.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::attractor::{
    absorbing_entry, fractal_dim_bound, gram_schmidt_delta, lyapunov_trace_check, prop1_decay_check,
    prop1_integral_check, singleton_attractor_check, theorem4_decay_check, AbsorbingSetSpec,
};
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::field::{ForcingField, VectorField};
use crate::grid::SpectralGrid;
use crate::params::ModelParams;
use crate::random::{random_divfree_field, AmplitudeSpectrum};
use crate::stationary::{
    continuation_solve, default_eps_schedule, regularity_gain_diagnostic, smallness_report, PicardOptions,
    StationarySolution, Verdict,
};

use super::checkpoint::{self, Checkpoint};
use super::config::{FieldSpec, RunConfig, SweepCell};
use super::csv::trajectory_csv;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit status for an error that aborted a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BlowUp { .. } | Error::NonFinite { .. } | Error::NonConvergence { .. } => EXIT_NUMERICAL,
        Error::NoEntry { .. } | Error::NotOrthonormal { .. } | Error::RankDeficient { .. } => EXIT_VIOLATION,
        _ => EXIT_USAGE,
    }
}

#[derive(Clone, Debug)]
pub struct CommandOutcome {
    pub passed: bool,
    pub summary: Value,
}

impl CommandOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed { EXIT_PASS } else { EXIT_VIOLATION }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Energy,
    Absorbing,
    Decay,
    Lyapunov,
    Dimension,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "energy" => Suite::Energy,
            "absorbing" => Suite::Absorbing,
            "decay" => Suite::Decay,
            "lyapunov" => Suite::Lyapunov,
            "dimension" => Suite::Dimension,
            _ => return Err(Error::Config(format!("unknown verify suite `{s}`"))),
        })
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Energy => "energy",
            Suite::Absorbing => "absorbing",
            Suite::Decay => "decay",
            Suite::Lyapunov => "lyapunov",
            Suite::Dimension => "dimension",
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

struct Setup {
    params: ModelParams,
    grid: Arc<SpectralGrid>,
    force: ForcingField,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    cfg.validate()?;
    let params = cfg.model;
    let grid = params.build_grid()?;
    let force = ForcingField::new(cfg.force.build(&grid)?)?;
    Ok(Setup { params, grid, force })
}

fn picard_options(cfg: &RunConfig) -> PicardOptions {
    PicardOptions { tol: cfg.tol.picard, max_iter: cfg.tol.max_iter, relaxation: cfg.tol.relaxation, start: None }
}

fn solve_stationary(cfg: &RunConfig, s: &Setup) -> Result<StationarySolution> {
    continuation_solve(&s.force, &s.params, &default_eps_schedule(), &picard_options(cfg))
}

fn initial_data(cfg: &RunConfig, s: &Setup) -> Result<VectorField> {
    match &cfg.init {
        FieldSpec::Stationary => Ok(solve_stationary(cfg, s)?.field),
        spec => spec.build(&s.grid),
    }
}

fn init_spectrum(cfg: &RunConfig) -> AmplitudeSpectrum {
    match cfg.init {
        FieldSpec::Random { amplitude, exponent, .. } => AmplitudeSpectrum { amplitude, exponent },
        _ => AmplitudeSpectrum::default(),
    }
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(&cfg.out_dir)
}

/// Simulate and write `trajectory.csv`, `final.ckpt` and `simulate.json`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutcome> {
    let s = setup(cfg)?;
    let u0 = initial_data(cfg, &s)?;
    let reference = match &cfg.reference {
        Some(p) => Some(FieldSpec::Checkpoint { path: p.clone() }.build(&s.grid)?),
        None => None,
    };
    let rec = simulate(&u0, &s.force, &s.params, &cfg.sim, reference.as_ref())?;
    let out = prepare_out(cfg)?;
    fs::write(out.join("trajectory.csv"), trajectory_csv(&rec))?;
    checkpoint::write(&out.join("final.ckpt"), &Checkpoint::new(s.params, rec.final_time, rec.final_state.clone())?)?;
    let last = rec.samples.last().expect("at least one sample");
    let summary = json!({
        "command": "simulate",
        "final_time": rec.final_time,
        "samples": rec.samples.len(),
        "max_energy_residual": rec.max_energy_residual,
        "final_h_beta_sq": last.h_beta_sq,
        "final_grad_l52": last.grad_l52,
    });
    write_json(&out.join("simulate.json"), &summary)?;
    Ok(CommandOutcome { passed: true, summary })
}

/// Continuation solve plus smallness certificates; writes `stationary.ckpt`
/// and `stationary.json`. On non-convergence the partial path is written
/// before the error is returned.
pub fn cmd_stationary(cfg: &RunConfig) -> Result<CommandOutcome> {
    let s = setup(cfg)?;
    let out = prepare_out(cfg)?;
    let small = smallness_report(&s.force, &s.params, cfg.tol.smallness_c)?;
    let sol = match solve_stationary(cfg, &s) {
        Ok(sol) => sol,
        Err(e) => {
            if let Error::NonConvergence { iterations, last_increment, epsilon, iterate_norms, path } = &e {
                write_json(
                    &out.join("stationary.json"),
                    &json!({
                        "command": "stationary",
                        "converged": false,
                        "iterations": iterations,
                        "last_increment": last_increment,
                        "failed_epsilon": epsilon,
                        "iterate_norms": iterate_norms,
                        "continuation_path": path,
                        "smallness": to_json(&small),
                    }),
                )?;
            }
            return Err(e);
        }
    };
    checkpoint::write(&out.join("stationary.ckpt"), &Checkpoint::new(s.params, 0.0, sol.field.clone())?)?;
    let gain = regularity_gain_diagnostic(&sol.field, &s.force, &s.params);
    let passed = sol.residual_l2 < cfg.tol.picard && sol.energy_ratio <= 1.0 + 1e-9;
    let summary = json!({
        "command": "stationary",
        "converged": true,
        "passed": passed,
        "residual_l2": sol.residual_l2,
        "energy_ratio": sol.energy_ratio,
        "iterations": sol.iterations,
        "continuation_path": sol.continuation_path,
        "smallness": to_json(&small),
        "regularity_gain": to_json(&gain),
    });
    write_json(&out.join("stationary.json"), &summary)?;
    Ok(CommandOutcome { passed, summary })
}

fn lyapunov_summary(cfg: &RunConfig, s: &Setup) -> Result<(bool, Value)> {
    let u0 = initial_data(cfg, s)?;
    let rec = simulate(&u0, &s.force, &s.params, &cfg.sim, None)?;
    let snapshot = rec.final_state;
    let zero = VectorField::zeros(&s.grid);
    let mut passed = true;
    let mut rows = Vec::new();
    for &n in &cfg.verify.family_sizes {
        let members: Vec<VectorField> = (0..n)
            .map(|i| random_divfree_field(cfg.sim.seed.wrapping_add(1000 + i as u64), &AmplitudeSpectrum::default(), &s.grid))
            .collect();
        let family = gram_schmidt_delta(&members, s.params.beta, s.params.delta)?;
        for (label, u) in [("snapshot", &snapshot), ("zero", &zero)] {
            let rep = lyapunov_trace_check(u, &family, &s.params)?;
            passed &= rep.passed;
            rows.push(json!({"n": n, "background": label, "report": to_json(&rep)}));
        }
    }
    Ok((passed, json!({"snapshot_time": rec.final_time, "checks": rows})))
}

fn dimension_summary(s: &Setup) -> Value {
    let b = fractal_dim_bound(&s.force, &s.params);
    let mut v = to_json(&b);
    if !b.hypothesis_satisfied {
        v["warning"] = json!("bound derived for alpha >= 1 and beta >= 2; reported outside that range");
    }
    v
}

/// Run one verification suite; writes `verify_<suite>.json`.
pub fn cmd_verify(cfg: &RunConfig, suite: Suite) -> Result<CommandOutcome> {
    let s = setup(cfg)?;
    let (passed, detail) = match suite {
        Suite::Energy => {
            let u0 = initial_data(cfg, &s)?;
            let rec = simulate(&u0, &s.force, &s.params, &cfg.sim, None)?;
            let decay = prop1_decay_check(&rec, &u0, &s.force, &s.params);
            let window = prop1_integral_check(&rec, &u0, &s.force, &s.params, cfg.verify.window)?;
            (
                decay.passed && window.passed,
                json!({
                    "decay": to_json(&decay),
                    "integral": to_json(&window),
                    "max_energy_residual": rec.max_energy_residual,
                }),
            )
        }
        Suite::Absorbing => {
            let u0 = initial_data(cfg, &s)?;
            let rec = simulate(&u0, &s.force, &s.params, &cfg.sim, None)?;
            let spec = AbsorbingSetSpec::new(&s.force, &s.params);
            match absorbing_entry(&rec, &spec) {
                Ok(entry) => (entry.passed, json!({"spec": to_json(&spec), "entry": to_json(&entry)})),
                Err(e @ Error::NoEntry { .. }) => (false, json!({"spec": to_json(&spec), "error": e.to_string()})),
                Err(e) => return Err(e),
            }
        }
        Suite::Decay => {
            let small = smallness_report(&s.force, &s.params, cfg.tol.smallness_c)?;
            let sol = solve_stationary(cfg, &s)?;
            if small.verdict != Verdict::Asymptotic {
                (false, json!({"smallness": to_json(&small), "error": "smallness verdict is not asymptotic"}))
            } else {
                let u0 = match &cfg.init {
                    FieldSpec::Stationary => sol.field.clone(),
                    spec => spec.build(&s.grid)?,
                };
                let rec = simulate(&u0, &s.force, &s.params, &cfg.sim, Some(&sol.field))?;
                let t4 = theorem4_decay_check(&rec, &s.params)?;
                let single = singleton_attractor_check(
                    &s.force,
                    &s.params,
                    &cfg.sim,
                    cfg.verify.starts,
                    &init_spectrum(cfg),
                    Some(&sol.field),
                    cfg.tol.singleton,
                    Execution::Parallel,
                )?;
                (
                    t4.passed && single.passed,
                    json!({
                        "smallness": to_json(&small),
                        "stationary_residual": sol.residual_l2,
                        "decay": to_json(&t4),
                        "singleton": to_json(&single),
                    }),
                )
            }
        }
        Suite::Lyapunov => lyapunov_summary(cfg, &s)?,
        Suite::Dimension => (true, dimension_summary(&s)),
    };
    let summary = json!({"command": "verify", "suite": suite.name(), "passed": passed, "detail": detail});
    write_json(&prepare_out(cfg)?.join(format!("verify_{}.json", suite.name())), &summary)?;
    Ok(CommandOutcome { passed, summary })
}

/// Dimension bound only, printed and written as `dim_bound.json`.
pub fn cmd_dim_bound(cfg: &RunConfig) -> Result<CommandOutcome> {
    let s = setup(cfg)?;
    let summary = json!({"command": "dim-bound", "bound": dimension_summary(&s)});
    write_json(&prepare_out(cfg)?.join("dim_bound.json"), &summary)?;
    Ok(CommandOutcome { passed: true, summary })
}

/// Trace inequality on a simulated snapshot, written as `lyapunov.json`.
pub fn cmd_lyapunov(cfg: &RunConfig) -> Result<CommandOutcome> {
    let s = setup(cfg)?;
    let (passed, detail) = lyapunov_summary(cfg, &s)?;
    let summary = json!({"command": "lyapunov", "passed": passed, "detail": detail});
    write_json(&prepare_out(cfg)?.join("lyapunov.json"), &summary)?;
    Ok(CommandOutcome { passed, summary })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub cell: SweepCell,
    pub force_norm: f64,
    pub verdict: Option<Verdict>,
    pub stationary_residual: Option<f64>,
    pub singleton_spread: Option<f64>,
    pub dimension_bound: Option<f64>,
    pub status: String,
}

fn run_cell(cfg: &RunConfig, index: usize, cell: SweepCell) -> SweepRow {
    let mut row = SweepRow {
        cell,
        force_norm: f64::NAN,
        verdict: None,
        stationary_residual: None,
        singleton_spread: None,
        dimension_bound: None,
        status: "ok".into(),
    };
    let result = (|| -> Result<()> {
        let params = ModelParams { alpha: cell.alpha, beta: cell.beta, gamma: cell.gamma, nu: cell.nu, delta: cell.delta, ..cfg.model };
        params.validate()?;
        let grid = params.build_grid()?;
        let (seed, exponent) = match cfg.force {
            FieldSpec::Random { seed, exponent, .. } => (seed, exponent),
            _ => (1, -2.0),
        };
        let f = ForcingField::new(random_divfree_field(seed, &AmplitudeSpectrum { amplitude: cell.force_amplitude, exponent }, &grid))?;
        row.force_norm = crate::norms::phase_norm(f.field(), &params);
        let small = smallness_report(&f, &params, cfg.tol.smallness_c)?;
        row.verdict = Some(small.verdict);
        row.dimension_bound = Some(fractal_dim_bound(&f, &params).value);
        let sol = continuation_solve(&f, &params, &default_eps_schedule(), &picard_options(cfg))?;
        row.stationary_residual = Some(sol.residual_l2);
        let single = singleton_attractor_check(
            &f,
            &params,
            &cfg.sim,
            cfg.verify.starts,
            &init_spectrum(cfg),
            Some(&sol.field),
            cfg.tol.singleton,
            Execution::Sequential,
        )?;
        row.singleton_spread = Some(single.max_pairwise);
        let dir = cfg.out_dir.join(format!("cell_{index:03}"));
        fs::create_dir_all(&dir)?;
        checkpoint::write(&dir.join("stationary.ckpt"), &Checkpoint::new(params, 0.0, sol.field)?)?;
        write_json(&dir.join("cell.json"), &to_json(&row))?;
        Ok(())
    })();
    if let Err(e) = result {
        row.status = format!("error: {e}");
    }
    row
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.16e}"))
}

/// Sweep over the configured grid; cells run concurrently and rows come back
/// in cell order. Writes `sweep.csv` and `sweep.json`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    let out = prepare_out(cfg)?;
    let cells = cfg.sweep.cells();
    let rows = exec::map_range(Execution::Parallel, cells.len(), |i| run_cell(cfg, i, cells[i]));
    let mut csv = String::from(
        "alpha,beta,gamma,nu,delta,force_amplitude,force_norm,verdict,stationary_residual,singleton_spread,dimension_bound,status\n",
    );
    for r in &rows {
        let c = &r.cell;
        let verdict = r.verdict.map_or(String::new(), |v| to_json(&v).as_str().unwrap_or_default().to_string());
        csv.push_str(&format!(
            "{},{},{},{},{},{},{:.16e},{},{},{},{},{}\n",
            c.alpha,
            c.beta,
            c.gamma,
            c.nu,
            c.delta,
            c.force_amplitude,
            r.force_norm,
            verdict,
            opt(r.stationary_residual),
            opt(r.singleton_spread),
            opt(r.dimension_bound),
            r.status.replace(',', ";"),
        ));
    }
    fs::write(out.join("sweep.csv"), csv)?;
    let passed = rows.iter().all(|r| r.status == "ok");
    let summary = json!({"command": "sweep", "passed": passed, "cells": to_json(&rows)});
    write_json(&out.join("sweep.json"), &summary)?;
    Ok(CommandOutcome { passed, summary })
}
