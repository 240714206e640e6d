//! Sobolev norms, the phase-space distances and the `L^p` gradient norm.
//!
//! Every norm is an integral over the periodic box, `‖u‖² = L^dim Σ_k w(k)|û(k)|²`,
//! so that spectral norms and collocation quadrature agree (Parseval).

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::field::VectorField;
use crate::params::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SobolevVariant {
    /// weight `(1 + |k|²)^s`
    Inhomogeneous,
    /// weight `|k|^{2s}` (zero mode dropped for `s > 0`)
    Homogeneous,
    /// weight `(1 + δ²|k|²)^s`
    DeltaWeighted { delta: f64 },
}

impl SobolevVariant {
    pub fn weight(self, s: f64, k2: f64) -> f64 {
        match self {
            SobolevVariant::Inhomogeneous => (1.0 + k2).powf(s),
            SobolevVariant::Homogeneous => {
                if k2 == 0.0 {
                    if s == 0.0 { 1.0 } else { 0.0 }
                } else {
                    k2.powf(s)
                }
            }
            SobolevVariant::DeltaWeighted { delta } => (1.0 + delta * delta * k2).powf(s),
        }
    }
}

/// `L^dim Σ_k w(k) Re(û(k)·conj(v̂(k)))` with a per-mode weight.
pub fn weighted_inner(u: &VectorField, v: &VectorField, weight: impl Fn(f64) -> f64) -> Result<f64> {
    u.check_same_grid(v)?;
    let g = u.grid();
    let n = g.num_modes();
    let weights: Vec<f64> = g.k2().iter().map(|&k2| weight(k2)).collect();
    let sum: f64 = u
        .coeffs()
        .iter()
        .zip(v.coeffs())
        .enumerate()
        .map(|(i, (a, b))| weights[i % n] * (a * b.conj()).re)
        .sum();
    Ok(g.volume() * sum)
}

/// Squared Sobolev norm.
pub fn sobolev_norm_sq(field: &VectorField, s: f64, variant: SobolevVariant) -> f64 {
    let g = field.grid();
    let n = g.num_modes();
    let weights: Vec<f64> = g.k2().iter().map(|&k2| variant.weight(s, k2)).collect();
    let sum: f64 = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, z)| weights[i % n] * z.norm_sqr())
        .sum();
    g.volume() * sum
}

pub fn sobolev_norm(field: &VectorField, s: f64, variant: SobolevVariant) -> f64 {
    sobolev_norm_sq(field, s, variant).sqrt()
}

/// `(u, v)_{H^{β/2}_δ}`.
pub fn delta_inner(u: &VectorField, v: &VectorField, beta: f64, delta: f64) -> Result<f64> {
    weighted_inner(u, v, |k2| (1.0 + delta * delta * k2).powf(0.5 * beta))
}

pub fn l2_inner(u: &VectorField, v: &VectorField) -> Result<f64> {
    weighted_inner(u, v, |_| 1.0)
}

/// `‖u‖_{H^{β/2}}`, the phase-space norm.
pub fn phase_norm(field: &VectorField, params: &ModelParams) -> f64 {
    sobolev_norm(field, 0.5 * params.beta, SobolevVariant::Inhomogeneous)
}

/// `‖u‖_{H^{β/2}_δ}`.
pub fn delta_norm(field: &VectorField, params: &ModelParams) -> f64 {
    sobolev_norm(field, 0.5 * params.beta, SobolevVariant::DeltaWeighted { delta: params.delta })
}

/// `d_s(u, v) = ‖u - v‖_{H^{β/2}}`.
pub fn strong_distance(u: &VectorField, v: &VectorField, beta: f64) -> Result<f64> {
    let diff = u.sub(v)?;
    Ok(sobolev_norm(&diff, 0.5 * beta, SobolevVariant::Inhomogeneous))
}

/// Coordinates of `u` against the fixed orthonormal basis of `H^{β/2}`:
/// unit-normalized cosine and sine parts of each component at each
/// half-spectrum mode, in enumeration order (components, then real/imag;
/// the zero mode contributes only a real part).
pub fn weak_coordinates(u: &VectorField, beta: f64) -> Vec<f64> {
    let g = u.grid();
    let vol = g.volume();
    let mut out = Vec::with_capacity(g.dim() * g.num_modes());
    for &m in g.half_modes() {
        let k2 = g.k2()[m];
        let w = (1.0 + k2).powf(0.5 * beta);
        for c in 0..g.dim() {
            let z = u.get(c, m);
            if k2 == 0.0 {
                out.push(z.re * (w * vol).sqrt());
            } else {
                let s = (2.0 * w * vol).sqrt();
                out.push(z.re * s);
                out.push(z.im * s);
            }
        }
    }
    out
}

/// `d_w(u, v) = Σ_n 2^{-n} |u_n - v_n| / (1 + |u_n - v_n|)`.
pub fn weak_distance(u: &VectorField, v: &VectorField, beta: f64) -> Result<f64> {
    u.check_same_grid(v)?;
    let cu = weak_coordinates(u, beta);
    let cv = weak_coordinates(v, beta);
    let mut weight = 1.0f64;
    let mut sum = 0.0;
    for (a, b) in cu.iter().zip(&cv) {
        if weight == 0.0 {
            break;
        }
        let d = (a - b).abs();
        sum += weight * d / (1.0 + d);
        weight *= 0.5;
    }
    Ok(sum)
}

/// `‖∇⊗u‖_{L^p}` by collocation quadrature (cell weight `(L/N)^dim`) of the
/// Frobenius norm of the velocity gradient.
pub fn lp_gradient_norm(u: &VectorField, p: f64) -> f64 {
    assert!(p >= 1.0, "L^p norm needs p >= 1, got {p}");
    let g = u.grid();
    let dim = g.dim();
    let mut frob_sq = vec![0.0f64; g.num_points()];
    for i in 0..dim {
        let comp = u.component(i);
        for j in 0..dim {
            let deriv: Vec<Complex64> = comp
                .iter()
                .zip(g.wavevectors())
                .map(|(&z, k)| Complex64::new(0.0, k[j]) * z)
                .collect();
            let phys = g.to_physical(&deriv);
            for (acc, v) in frob_sq.iter_mut().zip(phys) {
                *acc += v * v;
            }
        }
    }
    let cell = (g.box_length() / g.modes_per_axis() as f64).powi(dim as i32);
    let integral: f64 = frob_sq.iter().map(|&s| s.powf(0.5 * p)).sum::<f64>() * cell;
    integral.powf(1.0 / p)
}
