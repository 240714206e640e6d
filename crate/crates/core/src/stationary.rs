//! Stationary solutions `νΛ^α U + J^{-β}_δ P div(U⊗U) + γU = f` by Picard
//! iteration, optionally continued from an added `-εΔ` term, and the
//! smallness certificates that decide stability and uniqueness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ForcingField, VectorField};
use crate::nonlinear::NonlinearOperator;
use crate::norms::{sobolev_norm, sobolev_norm_sq, SobolevVariant};
use crate::params::ModelParams;

#[derive(Clone, Debug)]
pub struct StationarySolution {
    pub field: VectorField,
    /// `‖νΛ^α U + N(U) + γU - f‖_{L²}`
    pub residual_l2: f64,
    /// `‖U‖_{H^{(α+β)/2}} / ((b/(ac)) ‖f‖_{H^{β/2}})`, zero when `f = 0`.
    pub energy_ratio: f64,
    pub iterations: usize,
    /// `(ε, residual)` for each completed continuation stage.
    pub continuation_path: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Under-relaxation `ω ∈ (0, 1]`.
    pub relaxation: f64,
    /// Initial iterate; `(J^α_γ)^{-1} f` when absent.
    pub start: Option<VectorField>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 500, relaxation: 1.0, start: None }
    }
}

/// Core iteration for the symbol `λ(k) + ε|k|²`.
fn iterate(f: &ForcingField, params: &ModelParams, epsilon: f64, opts: &PicardOptions, path: &[(f64, f64)]) -> Result<(VectorField, f64, usize)> {
    let grid = f.field().grid();
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::Config(format!("relaxation must lie in (0, 1], got {}", opts.relaxation)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tol must be > 0, got {}", opts.tol)));
    }
    let symbol: Vec<f64> = grid.k2().iter().map(|&k2| params.damped_diffusion_symbol(k2) + epsilon * k2).collect();
    let inverse: Vec<f64> = symbol.iter().map(|s| 1.0 / s).collect();
    let op = NonlinearOperator::new(params, grid, 0.0);
    let s = 0.5 * params.beta;
    let h = SobolevVariant::Inhomogeneous;

    let linear = f.field().map_factors(&inverse);
    let mut u = match &opts.start {
        Some(start) => {
            start.require_divergence_free()?;
            start.check_same_grid(f.field())?;
            start.clone()
        }
        None => linear.clone(),
    };
    let mut last_increment = match &opts.start {
        Some(_) => f64::INFINITY,
        None => sobolev_norm(&linear, s, h),
    };
    let mut norms = vec![sobolev_norm(&u, s, h)];

    for iteration in 1..=opts.max_iter {
        let nu = op.apply(&u)?;
        let forcing = f.field().sub(&nu)?;
        let residual = sobolev_norm(&u.map_factors(&symbol).sub(&forcing)?, 0.0, h);
        if !residual.is_finite() {
            break;
        }
        if residual < opts.tol && last_increment < opts.tol {
            return Ok((u, residual, iteration));
        }
        let target = forcing.map_factors(&inverse);
        let next = if opts.relaxation == 1.0 {
            target
        } else {
            u.scale(1.0 - opts.relaxation).axpy(opts.relaxation, &target)?
        };
        last_increment = sobolev_norm(&next.sub(&u)?, s, h);
        u = next;
        norms.push(sobolev_norm(&u, s, h));
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_increment,
        epsilon,
        iterate_norms: norms,
        path: path.to_vec(),
    })
}

fn finish(u: VectorField, f: &ForcingField, params: &ModelParams, iterations: usize, path: Vec<(f64, f64)>) -> Result<StationarySolution> {
    let residual_l2 = stationary_residual(&u, f, params)?;
    let energy_ratio = energy_ratio(&u, f, params);
    Ok(StationarySolution { field: u, residual_l2, energy_ratio, iterations, continuation_path: path })
}

/// `‖U‖_{H^{(α+β)/2}} / ((b/(ac)) ‖f‖_{H^{β/2}})`.
pub fn energy_ratio(u: &VectorField, f: &ForcingField, params: &ModelParams) -> f64 {
    let dc = params.derived();
    let fnorm = sobolev_norm(f.field(), 0.5 * params.beta, SobolevVariant::Inhomogeneous);
    let unorm = sobolev_norm(u, 0.5 * (params.alpha + params.beta), SobolevVariant::Inhomogeneous);
    if fnorm == 0.0 {
        return if unorm == 0.0 { 0.0 } else { f64::INFINITY };
    }
    unorm / (dc.b / (dc.a * dc.c) * fnorm)
}

/// `‖νΛ^α U + J^{-β}_δ P div(U⊗U) + γU - f‖_{L²}`.
pub fn stationary_residual(u: &VectorField, f: &ForcingField, params: &ModelParams) -> Result<f64> {
    let op = NonlinearOperator::new(params, u.grid(), 0.0);
    let r = u
        .map_symbol(|k2| params.damped_diffusion_symbol(k2))
        .add(&op.apply(u)?)?
        .sub(f.field())?;
    Ok(sobolev_norm(&r, 0.0, SobolevVariant::Inhomogeneous))
}

/// Picard iteration `U ← (J^α_γ)^{-1}[f - N(U)]`. Stops once both the
/// `H^{β/2}` increment and the `L²` residual are below `tol`.
pub fn picard_solve(f: &ForcingField, params: &ModelParams, opts: &PicardOptions) -> Result<StationarySolution> {
    params.validate()?;
    let (u, residual, iterations) = iterate(f, params, 0.0, opts, &[])?;
    finish(u, f, params, iterations, vec![(0.0, residual)])
}

/// `1, 1/2, …, 2^{-20}, 0`.
pub fn default_eps_schedule() -> Vec<f64> {
    (0..=20).map(|i| 0.5f64.powi(i)).chain(std::iter::once(0.0)).collect()
}

/// Solve with the extra symbol `ε|k|²` along `eps_schedule`, warm-starting each
/// stage from the previous one. The schedule must decrease strictly to 0.
pub fn continuation_solve(f: &ForcingField, params: &ModelParams, eps_schedule: &[f64], opts: &PicardOptions) -> Result<StationarySolution> {
    params.validate()?;
    if eps_schedule.last() != Some(&0.0) {
        return Err(Error::Config("eps_schedule must end at 0".into()));
    }
    if eps_schedule.windows(2).any(|w| !(w[0] > w[1])) || eps_schedule.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::Config("eps_schedule must be strictly decreasing and non-negative".into()));
    }
    let mut path = Vec::with_capacity(eps_schedule.len());
    let mut stage_opts = opts.clone();
    let mut total = 0;
    let mut u = None;
    for &eps in eps_schedule {
        if let Some(prev) = u.take() {
            stage_opts.start = Some(prev);
        }
        let (next, residual, iterations) = iterate(f, params, eps, &stage_opts, &path)?;
        total += iterations;
        path.push((eps, residual));
        u = Some(next);
    }
    finish(u.expect("non-empty schedule"), f, params, total, path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Asymptotic,
    OrbitalOnly,
    Neither,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    /// `C b / a^{3/2} ‖f‖_{H^{β/2}}`
    pub lhs: f64,
    /// `2 c^{3/2}`
    pub rhs_orbital: f64,
    /// `c^{3/2}`
    pub rhs_asymptotic: f64,
    #[serde(rename = "C_used")]
    pub c_used: f64,
    pub verdict: Verdict,
    pub ratio_orbital: f64,
    pub ratio_asymptotic: f64,
}

pub fn smallness_report(f: &ForcingField, params: &ModelParams, c_const: f64) -> Result<SmallnessReport> {
    if !(c_const > 0.0 && c_const.is_finite()) {
        return Err(Error::Config(format!("C must be > 0, got {c_const}")));
    }
    let dc = params.derived();
    let fnorm = sobolev_norm(f.field(), 0.5 * params.beta, SobolevVariant::Inhomogeneous);
    let lhs = c_const * dc.b / dc.a.powf(1.5) * fnorm;
    let rhs_asymptotic = dc.c.powf(1.5);
    let rhs_orbital = 2.0 * rhs_asymptotic;
    let verdict = if lhs <= rhs_asymptotic {
        Verdict::Asymptotic
    } else if lhs <= rhs_orbital {
        Verdict::OrbitalOnly
    } else {
        Verdict::Neither
    };
    Ok(SmallnessReport {
        lhs,
        rhs_orbital,
        rhs_asymptotic,
        c_used: c_const,
        verdict,
        ratio_orbital: lhs / rhs_orbital,
        ratio_asymptotic: lhs / rhs_asymptotic,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityGain {
    /// `‖U‖_{H^{α+β/2}} / ‖f‖_{H^{β/2}}`
    pub ratio: f64,
    /// Share of `‖U‖²_{H^{α+β/2}}` carried by modes with `max|n_i| > 2K/3`.
    pub tail_fraction: f64,
}

pub fn regularity_gain_diagnostic(u: &VectorField, f: &ForcingField, params: &ModelParams) -> RegularityGain {
    let s = params.alpha + 0.5 * params.beta;
    let g = u.grid();
    let n = g.num_modes();
    let cutoff = 2.0 * g.max_index() as f64 / 3.0;
    let (mut total, mut tail) = (0.0, 0.0);
    for (i, z) in u.coeffs().iter().enumerate() {
        let m = i % n;
        let w = (1.0 + g.k2()[m]).powf(s) * z.norm_sqr();
        total += w;
        if g.modes()[m][..g.dim()].iter().any(|&c| c.abs() as f64 > cutoff) {
            tail += w;
        }
    }
    let fnorm = sobolev_norm_sq(f.field(), 0.5 * params.beta, SobolevVariant::Inhomogeneous).sqrt();
    let unorm = (total * g.volume()).sqrt();
    RegularityGain {
        ratio: if fnorm == 0.0 { 0.0 } else { unorm / fnorm },
        tail_fraction: if total == 0.0 { 0.0 } else { tail / total },
    }
}
