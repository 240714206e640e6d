//! Model parameters and the constants derived from them.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;

/// The five PDE parameters plus the periodic box the whole space is replaced by.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Order of the fractional dissipation `(-Δ)^{α/2}`.
    pub alpha: f64,
    /// Order of the Bessel filter `(I - δ²Δ)^{-β/2}`.
    pub beta: f64,
    /// Damping (Ekman) coefficient.
    pub gamma: f64,
    /// Filter length.
    pub delta: f64,
    /// Viscosity.
    pub nu: f64,
    pub dim: usize,
    pub modes_per_axis: usize,
    pub box_length: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 2.0,
            gamma: 1.0,
            delta: 1.0,
            nu: 1.0,
            dim: 3,
            modes_per_axis: 16,
            box_length: 2.0 * PI,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be > 0, got {}", self.delta));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be > 0, got {}", self.nu));
        }
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if self.modes_per_axis < 8 || self.modes_per_axis % 2 != 0 {
            return bad(format!(
                "modes_per_axis must be an even integer >= 8, got {}",
                self.modes_per_axis
            ));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return bad(format!("box_length must be > 0, got {}", self.box_length));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<SpectralGrid>> {
        self.validate()?;
        Ok(Arc::new(SpectralGrid::new(
            self.dim,
            self.modes_per_axis,
            self.box_length,
        )?))
    }

    pub fn derived(&self) -> DerivedConstants {
        DerivedConstants::new(self)
    }

    /// Linear symbol `γ + ν|ξ|^α` of the damped fractional diffusion.
    pub fn damped_diffusion_symbol(&self, k2: f64) -> f64 {
        self.gamma + self.nu * k2.powf(0.5 * self.alpha)
    }

    /// Bessel filter symbol `(1 + δ²|ξ|²)^{exponent/2}`.
    pub fn bessel_symbol(&self, k2: f64, exponent: f64) -> f64 {
        (1.0 + self.delta * self.delta * k2).powf(0.5 * exponent)
    }

    /// `m₁(ξ) = (1+δ²|ξ|²)^{β/2} / (1+|ξ|²)^{β/2}`.
    pub fn m1(&self, k2: f64) -> f64 {
        ((1.0 + self.delta * self.delta * k2) / (1.0 + k2)).powf(0.5 * self.beta)
    }

    /// `m₂(ξ) = (γ + ν|ξ|^α) / (1+|ξ|²)^{α/2}`.
    pub fn m2(&self, k2: f64) -> f64 {
        self.damped_diffusion_symbol(k2) / (1.0 + k2).powf(0.5 * self.alpha)
    }
}

/// Constants a, b, c, d and the extrema m_α, M_α of
/// `h(r) = (1 + r^α) / (1 + r²)^{α/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub a: f64,
    pub b: f64,
    pub m_alpha: f64,
    #[serde(rename = "M_alpha")]
    pub big_m_alpha: f64,
    pub c: f64,
    pub d: f64,
}

impl DerivedConstants {
    pub fn new(params: &ModelParams) -> Self {
        let filter = params.delta.powf(params.beta);
        let (m_alpha, big_m_alpha) = ratio_extrema(params.alpha);
        Self {
            a: filter.min(1.0),
            b: filter.max(1.0),
            m_alpha,
            big_m_alpha,
            c: m_alpha * params.gamma.min(params.nu),
            d: big_m_alpha * params.gamma.max(params.nu),
        }
    }
}

pub(crate) fn ratio_h(alpha: f64, r: f64) -> f64 {
    (1.0 + r.powf(alpha)) / (1.0 + r * r).powf(0.5 * alpha)
}

const SCAN_POINTS: usize = 4096;
const LOG_R_MIN: f64 = -6.0 * std::f64::consts::LN_10;
const LOG_R_MAX: f64 = 6.0 * std::f64::consts::LN_10;

/// Infimum and supremum of `h` over `[0, ∞)`.
///
/// A log-spaced scan over `[1e-6, 1e6]` brackets the interior extrema, which
/// golden-section search then refines in `ln r`. The limits `h(0) = h(∞) = 1`
/// are always candidates.
pub fn ratio_extrema(alpha: f64) -> (f64, f64) {
    let g = |s: f64| ratio_h(alpha, s.exp());
    let step = (LOG_R_MAX - LOG_R_MIN) / (SCAN_POINTS - 1) as f64;
    let samples: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| g(LOG_R_MIN + step * i as f64))
        .collect();
    let (imin, imax) = samples.iter().enumerate().fold((0, 0), |(lo, hi), (i, &v)| {
        (
            if v < samples[lo] { i } else { lo },
            if v > samples[hi] { i } else { hi },
        )
    });
    let bracket = |i: usize| {
        let lo = LOG_R_MIN + step * i.saturating_sub(1) as f64;
        let hi = LOG_R_MIN + step * (i + 1).min(SCAN_POINTS - 1) as f64;
        (lo, hi)
    };
    let (lo, hi) = bracket(imin);
    let min = golden_section(|s| g(s), lo, hi, 1e-12).min(samples[imin]);
    let (lo, hi) = bracket(imax);
    let max = -golden_section(|s| -g(s), lo, hi, 1e-12).min(-samples[imax]);
    (min.min(1.0), max.max(1.0))
}

/// Minimum value of a unimodal `f` on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2).min(f(0.5 * (lo + hi)))
}
