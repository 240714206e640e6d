//! Time integration: ETD-RK2 with the exact linear propagator, the trajectory
//! record, and the tangent (linearized) dynamics along a stored trajectory.
//!
//! Writing `λ(k) = γ + ν|k|^α` and `F(u) = f - N(u)`, one step of size `h` is
//!
//! ```text
//! a       = e^{-λh} u_n + h φ₁(-λh) F(u_n)
//! u_{n+1} = a + h φ₂(-λh) (F(a) - F(u_n))
//! ```
//!
//! with `φ₁(z) = (e^z - 1)/z` and `φ₂(z) = (e^z - 1 - z)/z²`. The tangent step
//! is the exact derivative of this map, so Taylor remainders of the discrete
//! flow are purely quadratic in the perturbation size.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ForcingField, VectorField};
use crate::grid::SpectralGrid;
use crate::nonlinear::NonlinearOperator;
use crate::norms::{
    delta_inner, lp_gradient_norm, sobolev_norm_sq, strong_distance, weak_distance,
    SobolevVariant,
};
use crate::params::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    /// `0` runs the un-mollified model.
    pub mollifier_epsilon: f64,
    pub nonlinearity_enabled: bool,
    pub seed: u64,
    /// Keep every state and RK stage (needed by [`tangent_simulate`]).
    pub store_states: bool,
    /// Blow-up guard: abort when `‖u‖_{H^{β/2}}` exceeds this multiple of the
    /// larger of the absorbing radius and `‖u₀‖_{H^{β/2}}`.
    pub guard_factor: f64,
    pub start_time: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 1.0,
            record_stride: 1,
            mollifier_epsilon: 0.0,
            nonlinearity_enabled: true,
            seed: 0,
            store_states: false,
            guard_factor: 1e3,
            start_time: 0.0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be > 0, got {}", self.t_end));
        }
        if self.dt >= self.t_end {
            return bad(format!("dt = {} must be below t_end = {}", self.dt, self.t_end));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be >= 1".into());
        }
        if !(self.mollifier_epsilon >= 0.0) {
            return bad(format!("mollifier_epsilon must be >= 0, got {}", self.mollifier_epsilon));
        }
        Ok(())
    }

    /// Number of steps, `round(t_end / dt)`.
    pub fn num_steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        1.0 / 2.0 + z / 6.0 + z * z / 24.0 + z.powi(3) / 120.0 + z.powi(4) / 720.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Precomputed ETD-RK2 factors for one `(params, dt, ε)` combination.
#[derive(Clone, Debug)]
pub struct Integrator {
    grid: Arc<SpectralGrid>,
    dt: f64,
    decay: Vec<f64>,
    h_phi1: Vec<f64>,
    h_phi2: Vec<f64>,
    nonlinear: Option<NonlinearOperator>,
}

impl Integrator {
    pub fn new(params: &ModelParams, grid: &Arc<SpectralGrid>, dt: f64, epsilon: f64, nonlinear: bool) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {dt}")));
        }
        let lambda: Vec<f64> = grid.k2().iter().map(|&k2| params.damped_diffusion_symbol(k2)).collect();
        Ok(Self {
            grid: Arc::clone(grid),
            dt,
            decay: lambda.iter().map(|&l| (-l * dt).exp()).collect(),
            h_phi1: lambda.iter().map(|&l| dt * phi1(-l * dt)).collect(),
            h_phi2: lambda.iter().map(|&l| dt * phi2(-l * dt)).collect(),
            nonlinear: nonlinear.then(|| NonlinearOperator::new(params, grid, epsilon)),
        })
    }

    pub fn from_config(params: &ModelParams, grid: &Arc<SpectralGrid>, cfg: &SimulationConfig) -> Result<Self> {
        Self::new(params, grid, cfg.dt, cfg.mollifier_epsilon, cfg.nonlinearity_enabled)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn rhs(&self, u: &VectorField, f: &ForcingField) -> Result<VectorField> {
        match &self.nonlinear {
            Some(op) => f.field().sub(&op.apply(u)?),
            None => Ok(f.field().clone()),
        }
    }

    /// `F'(u) v = -N'(u) v`.
    fn rhs_derivative(&self, u: &VectorField, v: &VectorField) -> Result<Option<VectorField>> {
        match &self.nonlinear {
            Some(op) => Ok(Some(op.linearized(u, v)?.scale(-1.0))),
            None => Ok(None),
        }
    }

    /// One step, returning the intermediate stage `a` and the new state.
    pub fn step_with_stage(&self, u: &VectorField, f: &ForcingField) -> Result<(VectorField, VectorField)> {
        u.require_divergence_free()?;
        self.grid.check_same(u.grid())?;
        let fu = self.rhs(u, f)?;
        let stage = u.map_factors(&self.decay).add(&fu.map_factors(&self.h_phi1))?;
        if self.nonlinear.is_none() {
            return Ok((stage.clone(), stage));
        }
        let fa = self.rhs(&stage, f)?;
        let next = stage.add(&fa.sub(&fu)?.map_factors(&self.h_phi2))?;
        Ok((stage, next))
    }

    pub fn step(&self, u: &VectorField, f: &ForcingField) -> Result<VectorField> {
        Ok(self.step_with_stage(u, f)?.1)
    }

    /// Derivative of [`Integrator::step`] at `u` (with its stage) applied to `v`.
    pub fn tangent_step(&self, u: &VectorField, stage: &VectorField, v: &VectorField) -> Result<VectorField> {
        v.require_divergence_free()?;
        let dfu = self.rhs_derivative(u, v)?;
        let mut dstage = v.map_factors(&self.decay);
        if let Some(d) = &dfu {
            dstage = dstage.add(&d.map_factors(&self.h_phi1))?;
        }
        let Some(dfu) = dfu else { return Ok(dstage) };
        let dfa = self.rhs_derivative(stage, &dstage)?.expect("nonlinear enabled");
        dstage.add(&dfa.sub(&dfu)?.map_factors(&self.h_phi2))
    }
}

/// One ETD-RK2 step.
pub fn step(state: &VectorField, f: &ForcingField, params: &ModelParams, dt: f64, cfg: &SimulationConfig) -> Result<VectorField> {
    let integ = Integrator::new(params, state.grid(), dt, cfg.mollifier_epsilon, cfg.nonlinearity_enabled)?;
    let next = integ.step(state, f)?;
    if !next.is_finite() {
        return Err(Error::NonFinite { t: cfg.start_time + dt });
    }
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    /// `‖u‖²_{H^{β/2}}`
    pub h_beta_sq: f64,
    /// `‖u‖²_{H^{β/2}_δ}`
    pub h_beta_delta_sq: f64,
    /// `‖u‖²_{H^{(α+β)/2}}`
    pub h_alpha_beta_sq: f64,
    pub energy_residual: f64,
    pub grad_l52: f64,
    pub ref_strong: Option<f64>,
    pub ref_weak: Option<f64>,
    /// `‖u - U‖²_{H^{β/2}_δ}` to the reference field.
    pub ref_delta_sq: Option<f64>,
}

/// States `u_0..=u_n` and RK stages `a_0..a_{n-1}` of a run.
#[derive(Clone, Debug)]
pub struct StoredStates {
    pub states: Vec<VectorField>,
    pub stages: Vec<VectorField>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub params: ModelParams,
    pub config: SimulationConfig,
    pub samples: Vec<Sample>,
    /// Largest `|energy residual|` over every step, recorded or not.
    pub max_energy_residual: f64,
    pub final_state: VectorField,
    pub final_time: f64,
    pub stored: Option<StoredStates>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Energy-balance bookkeeping: `E = ½‖u‖²_δ` and the dissipation-minus-work
/// rate `D = (λu, u)_δ - (f, u)_δ`.
struct EnergyMeter {
    diss_weight: Vec<f64>,
    beta: f64,
    delta: f64,
}

impl EnergyMeter {
    fn new(params: &ModelParams, grid: &SpectralGrid) -> Self {
        let diss_weight = grid
            .k2()
            .iter()
            .map(|&k2| params.bessel_symbol(k2, params.beta) * params.damped_diffusion_symbol(k2))
            .collect();
        Self { diss_weight, beta: params.beta, delta: params.delta }
    }

    fn energy_and_rate(&self, u: &VectorField, f: &ForcingField) -> Result<(f64, f64)> {
        let g = u.grid();
        let n = g.num_modes();
        let diss: f64 = u
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, z)| self.diss_weight[i % n] * z.norm_sqr())
            .sum::<f64>()
            * g.volume();
        let work = delta_inner(f.field(), u, self.beta, self.delta)?;
        let energy = 0.5 * sobolev_norm_sq(u, 0.5 * self.beta, SobolevVariant::DeltaWeighted { delta: self.delta });
        Ok((energy, diss - work))
    }
}

fn sample_of(
    step: usize,
    t: f64,
    u: &VectorField,
    params: &ModelParams,
    residual: f64,
    reference: Option<&VectorField>,
) -> Result<Sample> {
    let s = 0.5 * params.beta;
    let (ref_strong, ref_weak, ref_delta_sq) = match reference {
        Some(r) => {
            let diff = u.sub(r)?;
            (
                Some(strong_distance(u, r, params.beta)?),
                Some(weak_distance(u, r, params.beta)?),
                Some(sobolev_norm_sq(&diff, s, SobolevVariant::DeltaWeighted { delta: params.delta })),
            )
        }
        None => (None, None, None),
    };
    Ok(Sample {
        step,
        t,
        h_beta_sq: sobolev_norm_sq(u, s, SobolevVariant::Inhomogeneous),
        h_beta_delta_sq: sobolev_norm_sq(u, s, SobolevVariant::DeltaWeighted { delta: params.delta }),
        h_alpha_beta_sq: sobolev_norm_sq(u, 0.5 * (params.alpha + params.beta), SobolevVariant::Inhomogeneous),
        energy_residual: residual,
        grad_l52: lp_gradient_norm(u, 2.5),
        ref_strong,
        ref_weak,
        ref_delta_sq,
    })
}

/// Absorbing-ball radius² `(2b²/(a²γ²)) ‖f‖²_{H^{β/2}}`.
pub(crate) fn absorbing_radius_sq(f: &ForcingField, params: &ModelParams) -> f64 {
    let dc = params.derived();
    let fnorm = sobolev_norm_sq(f.field(), 0.5 * params.beta, SobolevVariant::Inhomogeneous);
    2.0 * dc.b * dc.b / (dc.a * dc.a * params.gamma * params.gamma) * fnorm
}

/// Advance `u0` to `t_end`, recording diagnostics every `record_stride` steps
/// (and at the final step).
pub fn simulate(
    u0: &VectorField,
    f: &ForcingField,
    params: &ModelParams,
    cfg: &SimulationConfig,
    reference: Option<&VectorField>,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    u0.require_divergence_free()?;
    u0.check_same_grid(f.field())?;
    if let Some(r) = reference {
        u0.check_same_grid(r)?;
    }
    let grid = u0.grid();
    let integ = Integrator::from_config(params, grid, cfg)?;
    let meter = EnergyMeter::new(params, grid);
    let steps = cfg.num_steps();

    let u0_norm = sobolev_norm_sq(u0, 0.5 * params.beta, SobolevVariant::Inhomogeneous).sqrt();
    let limit = cfg.guard_factor * absorbing_radius_sq(f, params).sqrt().max(u0_norm).max(1e-300);

    let mut samples = vec![sample_of(0, cfg.start_time, u0, params, 0.0, reference)?];
    let mut stored = cfg.store_states.then(|| StoredStates { states: vec![u0.clone()], stages: Vec::with_capacity(steps) });
    let mut u = u0.clone();
    let (mut energy, mut rate) = meter.energy_and_rate(&u, f)?;
    let mut max_residual = 0.0f64;

    for n in 1..=steps {
        let t = cfg.start_time + n as f64 * cfg.dt;
        let (stage, next) = integ.step_with_stage(&u, f)?;
        if !next.is_finite() {
            return Err(Error::NonFinite { t });
        }
        let norm = sobolev_norm_sq(&next, 0.5 * params.beta, SobolevVariant::Inhomogeneous).sqrt();
        if norm > limit {
            return Err(Error::BlowUp { t, norm, limit });
        }
        let (e1, r1) = meter.energy_and_rate(&next, f)?;
        let residual = (e1 - energy) / cfg.dt + 0.5 * (rate + r1);
        max_residual = max_residual.max(residual.abs());
        energy = e1;
        rate = r1;
        u = next;
        if let Some(s) = stored.as_mut() {
            s.stages.push(stage);
            s.states.push(u.clone());
        }
        if n % cfg.record_stride == 0 || n == steps {
            samples.push(sample_of(n, t, &u, params, residual, reference)?);
        }
    }

    Ok(TrajectoryRecord {
        params: *params,
        config: *cfg,
        samples,
        max_energy_residual: max_residual,
        final_time: cfg.start_time + steps as f64 * cfg.dt,
        final_state: u,
        stored,
    })
}

/// Evolve a perturbation `v0` along a stored trajectory with the derivative of
/// the discrete flow.
pub fn tangent_simulate(
    trajectory: &TrajectoryRecord,
    v0: &VectorField,
    params: &ModelParams,
    cfg: &SimulationConfig,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    v0.require_divergence_free()?;
    let stored = trajectory
        .stored
        .as_ref()
        .ok_or_else(|| Error::TrajectoryMismatch("trajectory was recorded without store_states".into()))?;
    let tc = &trajectory.config;
    if tc.dt != cfg.dt
        || tc.mollifier_epsilon != cfg.mollifier_epsilon
        || tc.nonlinearity_enabled != cfg.nonlinearity_enabled
        || trajectory.params != *params
    {
        return Err(Error::TrajectoryMismatch(
            "dt, mollifier, nonlinearity switch and parameters must match the trajectory".into(),
        ));
    }
    let steps = cfg.num_steps();
    if steps > stored.stages.len() {
        return Err(Error::TrajectoryMismatch(format!(
            "tangent run needs {steps} steps, trajectory holds {}",
            stored.stages.len()
        )));
    }
    v0.check_same_grid(&stored.states[0])?;
    let integ = Integrator::from_config(params, v0.grid(), cfg)?;

    let mut samples = vec![sample_of(0, tc.start_time, v0, params, 0.0, None)?];
    let mut v = v0.clone();
    for n in 1..=steps {
        let t = tc.start_time + n as f64 * cfg.dt;
        v = integ.tangent_step(&stored.states[n - 1], &stored.stages[n - 1], &v)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { t });
        }
        if n % cfg.record_stride == 0 || n == steps {
            samples.push(sample_of(n, t, &v, params, 0.0, None)?);
        }
    }
    Ok(TrajectoryRecord {
        params: *params,
        config: *cfg,
        samples,
        max_energy_residual: 0.0,
        final_time: tc.start_time + steps as f64 * cfg.dt,
        final_state: v,
        stored: None,
    })
}

/// Growth of a perturbation between two runs from `u0` and `u0 + w0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PerturbationGrowth {
    /// `sup_t ‖w(t)‖² / ‖w₀‖²` in `H^{β/2}`.
    pub sup_ratio: f64,
    /// `K` with `sup_ratio = exp(K (‖u₀‖² + t_end ‖f‖²))`.
    pub measured_k: f64,
}

pub fn perturbation_growth(
    u0: &VectorField,
    w0: &VectorField,
    f: &ForcingField,
    params: &ModelParams,
    cfg: &SimulationConfig,
) -> Result<PerturbationGrowth> {
    let s = 0.5 * params.beta;
    let perturbed = u0.add(w0)?;
    let mut cfg = *cfg;
    cfg.store_states = true;
    let a = simulate(u0, f, params, &cfg, None)?;
    let b = simulate(&perturbed, f, params, &cfg, None)?;
    let w0_sq = sobolev_norm_sq(w0, s, SobolevVariant::Inhomogeneous);
    let sa = a.stored.as_ref().expect("stored");
    let sb = b.stored.as_ref().expect("stored");
    let sup = sa
        .states
        .iter()
        .zip(&sb.states)
        .map(|(x, y)| sobolev_norm_sq(&y.sub(x).expect("same grid"), s, SobolevVariant::Inhomogeneous))
        .fold(0.0, f64::max)
        / w0_sq;
    let scale = sobolev_norm_sq(u0, s, SobolevVariant::Inhomogeneous)
        + cfg.t_end * sobolev_norm_sq(f.field(), s, SobolevVariant::Inhomogeneous);
    Ok(PerturbationGrowth { sup_ratio: sup, measured_k: sup.ln().max(0.0) / scale.max(1e-300) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_divfree_field, AmplitudeSpectrum};
    use rustfft::num_complex::Complex64;

    fn setup(dim: usize) -> (ModelParams, Arc<SpectralGrid>) {
        let p = ModelParams { dim, modes_per_axis: 8, alpha: 1.5, beta: 1.0, delta: 0.7, gamma: 0.5, nu: 0.8, ..Default::default() };
        let g = p.build_grid().unwrap();
        (p, g)
    }

    #[test]
    fn phi_functions_are_continuous_at_switch() {
        for z in [-1e-5, -1e-2, -0.5] {
            let a = phi1(z * (1.0 - 1e-9));
            let b = phi1(z * (1.0 + 1e-9));
            assert!((a - b).abs() < 1e-9);
            let a = phi2(z * (1.0 - 1e-9));
            let b = phi2(z * (1.0 + 1e-9));
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_flow_is_exact() {
        let (p, g) = setup(3);
        let amp = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let u0 = VectorField::single_mode(&g, [1, 1, 0], &amp).unwrap().certify_divergence_free().unwrap();
        let cfg = SimulationConfig { dt: 0.01, t_end: 2.0, nonlinearity_enabled: false, ..Default::default() };
        let f = ForcingField::zero(&g);
        let rec = simulate(&u0, &f, &p, &cfg, None).unwrap();
        let m = g.mode_index([1, 1, 0]).unwrap();
        let lam = p.damped_diffusion_symbol(g.k2()[m]);
        let exact = (-lam * 2.0).exp();
        assert!((rec.final_state.get(2, m).re - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn zero_stays_zero() {
        let (p, g) = setup(2);
        let z = VectorField::zeros(&g);
        let rec = simulate(&z, &ForcingField::zero(&g), &p, &SimulationConfig::default(), None).unwrap();
        assert!(rec.final_state.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn restart_is_bit_identical() {
        let (p, g) = setup(2);
        let u0 = random_divfree_field(1, &AmplitudeSpectrum { amplitude: 3.0, exponent: -1.0 }, &g);
        let f = ForcingField::new(random_divfree_field(2, &AmplitudeSpectrum::default(), &g)).unwrap();
        let full = SimulationConfig { dt: 0.01, t_end: 0.5, ..Default::default() };
        let first = SimulationConfig { t_end: 0.2, ..full };
        let a = simulate(&u0, &f, &p, &full, None).unwrap();
        let b = simulate(&u0, &f, &p, &first, None).unwrap();
        let second = SimulationConfig { t_end: 0.3, start_time: b.final_time, ..full };
        let c = simulate(&b.final_state, &f, &p, &second, None).unwrap();
        assert_eq!(a.final_state, c.final_state);
    }

    #[test]
    fn blow_up_guard_trips() {
        let (p, g) = setup(2);
        let u0 = random_divfree_field(1, &AmplitudeSpectrum::default(), &g);
        let cfg = SimulationConfig { guard_factor: 1e-3, ..Default::default() };
        let err = simulate(&u0, &ForcingField::zero(&g), &p, &cfg, None).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn tangent_requires_stored_states() {
        let (p, g) = setup(2);
        let u0 = random_divfree_field(1, &AmplitudeSpectrum::default(), &g);
        let cfg = SimulationConfig::default();
        let rec = simulate(&u0, &ForcingField::zero(&g), &p, &cfg, None).unwrap();
        assert!(matches!(tangent_simulate(&rec, &u0, &p, &cfg), Err(Error::TrajectoryMismatch(_))));
        let rec = simulate(&u0, &ForcingField::zero(&g), &p, &SimulationConfig { store_states: true, ..cfg }, None).unwrap();
        let other = SimulationConfig { dt: 0.02, ..cfg };
        assert!(matches!(tangent_simulate(&rec, &u0, &p, &other), Err(Error::TrajectoryMismatch(_))));
        let zero = tangent_simulate(&rec, &VectorField::zeros(&g), &p, &cfg).unwrap();
        assert!(zero.final_state.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(SimulationConfig { dt: 2.0, t_end: 1.0, ..Default::default() }.validate().is_err());
        assert!(SimulationConfig { record_stride: 0, ..Default::default() }.validate().is_err());
        assert!(SimulationConfig::default().validate().is_ok());
    }
}
