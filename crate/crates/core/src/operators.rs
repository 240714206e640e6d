//! Fourier-multiplier operators. All of them are diagonal in the mode basis,
//! so they commute with each other and with the Leray projection.

use rustfft::num_complex::Complex64;

use crate::field::VectorField;
use crate::params::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterDirection {
    /// `J^β_δ = (I - δ²Δ)^{β/2}`
    Forward,
    /// `J^{-β}_δ = (I - δ²Δ)^{-β/2}`
    Inverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffusionMode {
    /// `J^α_γ = γ I + ν(-Δ)^{α/2}`
    Apply,
    /// `(J^α_γ)^{-1}`, total because `γ > 0`.
    Invert,
}

/// `(-Δ)^{order/2}`: multiplier `|k|^order`, with the zero mode sent to zero.
pub fn fractional_laplacian(field: &VectorField, order: f64) -> VectorField {
    field.map_symbol(|k2| if k2 == 0.0 { 0.0 } else { k2.powf(0.5 * order) })
}

pub fn bessel_filter(field: &VectorField, beta: f64, delta: f64, direction: FilterDirection) -> VectorField {
    let sign = match direction {
        FilterDirection::Forward => 1.0,
        FilterDirection::Inverse => -1.0,
    };
    field.map_symbol(|k2| (1.0 + delta * delta * k2).powf(0.5 * sign * beta))
}

/// `(I - Δ)^{s/2}`, the inhomogeneous Bessel potential with unit length.
pub fn bessel_potential(field: &VectorField, s: f64) -> VectorField {
    field.map_symbol(|k2| (1.0 + k2).powf(0.5 * s))
}

pub fn damped_diffusion_apply(field: &VectorField, params: &ModelParams, mode: DiffusionMode) -> VectorField {
    match mode {
        DiffusionMode::Apply => field.map_symbol(|k2| params.damped_diffusion_symbol(k2)),
        DiffusionMode::Invert => field.map_symbol(|k2| 1.0 / params.damped_diffusion_symbol(k2)),
    }
}

/// Linear propagator `e^{-t(γ + ν|k|^α)}`.
pub fn heat_semigroup(field: &VectorField, params: &ModelParams, t: f64) -> VectorField {
    assert!(t >= 0.0, "heat semigroup needs t >= 0, got {t}");
    field.map_symbol(|k2| (-t * params.damped_diffusion_symbol(k2)).exp())
}

/// Gaussian spectral mollifier `e^{-ε²|k|²/2}`; `ε = 0` is the identity.
pub fn mollify(field: &VectorField, epsilon: f64) -> VectorField {
    assert!(epsilon >= 0.0, "mollifier width must be >= 0, got {epsilon}");
    if epsilon == 0.0 {
        return field.clone();
    }
    field.map_symbol(|k2| (-0.5 * epsilon * epsilon * k2).exp())
}

/// Multiplier `D(m₁)`.
pub fn apply_m1(field: &VectorField, params: &ModelParams) -> VectorField {
    field.map_symbol(|k2| params.m1(k2))
}

/// Multiplier `D(m₂)`.
pub fn apply_m2(field: &VectorField, params: &ModelParams) -> VectorField {
    field.map_symbol(|k2| params.m2(k2))
}

/// Leray projection `û(k) ← û(k) - k (k·û(k)) / |k|²`; the zero mode is kept.
pub fn leray_project(field: &VectorField) -> VectorField {
    let g = field.grid();
    let dim = g.dim();
    let n = g.num_modes();
    let mut coeffs = field.coeffs().to_vec();
    for m in 0..n {
        let k2 = g.k2()[m];
        if k2 == 0.0 {
            continue;
        }
        let k = g.wavevector(m);
        let dot: Complex64 = (0..dim).map(|c| coeffs[c * n + m] * k[c]).sum();
        let s = dot / k2;
        for c in 0..dim {
            coeffs[c * n + m] -= s * k[c];
        }
    }
    VectorField::from_coeffs(g, coeffs)
        .expect("same layout")
        .mark_divergence_free()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use crate::random::{random_divfree_field, AmplitudeSpectrum};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn grid() -> Arc<SpectralGrid> {
        Arc::new(SpectralGrid::new(3, 8, 2.0 * PI).unwrap())
    }

    fn max_diff(a: &VectorField, b: &VectorField) -> f64 {
        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn noisy(g: &Arc<SpectralGrid>, seed: u64) -> VectorField {
        // divergent random field, so projection tests are non-trivial
        let mut f = random_divfree_field(seed, &AmplitudeSpectrum::default(), g);
        let n = g.num_modes();
        for (i, z) in f.coeffs_mut().iter_mut().enumerate() {
            *z += Complex64::new(((i * 37) % 11) as f64 * 1e-2, ((i * 53) % 7) as f64 * 1e-2) / (1.0 + (i % n) as f64);
        }
        f.enforce_hermitian();
        f
    }

    #[test]
    fn fractional_laplacian_symbol() {
        let g = grid();
        let f = VectorField::single_mode(&g, [0, 2, 0], &[c(1.0), c(0.0), c(0.0)]).unwrap();
        let m = g.mode_index([0, 2, 0]).unwrap();
        assert!((fractional_laplacian(&f, 1.0).get(0, m) - c(2.0)).norm() < 1e-15);
        assert!((fractional_laplacian(&f, 2.0).get(0, m) - c(4.0)).norm() < 1e-15);
        let z = VectorField::zeros(&g);
        assert_eq!(fractional_laplacian(&z, 0.7), z);
        let mean = VectorField::single_mode(&g, [0, 0, 0], &[c(1.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(fractional_laplacian(&mean, 0.0).get(0, 0), c(0.0));
    }

    #[test]
    fn bessel_filter_symbols_and_inverse() {
        let g = grid();
        let f = VectorField::single_mode(&g, [1, 0, 0], &[c(0.0), c(1.0), c(0.0)]).unwrap();
        let m = g.mode_index([1, 0, 0]).unwrap();
        let inv = bessel_filter(&f, 2.0, 1.0, FilterDirection::Inverse);
        assert!((inv.get(1, m) - c(0.5)).norm() < 1e-15);
        let r = noisy(&g, 3);
        assert_eq!(bessel_filter(&r, 0.0, 0.3, FilterDirection::Forward), r);
        let round = bessel_filter(&bessel_filter(&r, 1.7, 0.4, FilterDirection::Forward), 1.7, 0.4, FilterDirection::Inverse);
        assert!(max_diff(&round, &r) < 1e-13);
    }

    #[test]
    fn leray_projection_examples() {
        let g = grid();
        let m = g.mode_index([1, 0, 0]).unwrap();
        let mut grad = VectorField::zeros(&g);
        grad.set(0, m, c(1.0));
        let p = leray_project(&grad);
        assert!((0..3).all(|i| p.get(i, m).norm() == 0.0));

        let mut sol = VectorField::zeros(&g);
        sol.set(1, m, c(1.0));
        assert_eq!(leray_project(&sol).coeffs(), sol.coeffs());

        let r = noisy(&g, 5);
        let p1 = leray_project(&r);
        let p2 = leray_project(&p1);
        assert!(max_diff(&p1, &p2) < 1e-13);
        assert!(p1.max_divergence() < 1e-12 * p1.coeff_norm());
    }

    #[test]
    fn damped_diffusion_and_heat() {
        let g = grid();
        let p = ModelParams { gamma: 1.0, nu: 1.0, alpha: 2.0, ..Default::default() };
        let f = VectorField::single_mode(&g, [0, 0, 1], &[c(1.0), c(0.0), c(0.0)]).unwrap();
        let m = g.mode_index([0, 0, 1]).unwrap();
        assert!((damped_diffusion_apply(&f, &p, DiffusionMode::Apply).get(0, m) - c(2.0)).norm() < 1e-15);
        let h = heat_semigroup(&f, &p, 2f64.ln());
        assert!((h.get(0, m) - c(0.25)).norm() < 1e-15);
        let r = noisy(&g, 7);
        let p2 = ModelParams { gamma: 0.3, nu: 1.7, alpha: 1.3, ..Default::default() };
        let round = damped_diffusion_apply(&damped_diffusion_apply(&r, &p2, DiffusionMode::Apply), &p2, DiffusionMode::Invert);
        assert!(max_diff(&round, &r) < 1e-13);
        assert_eq!(heat_semigroup(&r, &p2, 0.0), r);
        let two = heat_semigroup(&heat_semigroup(&r, &p2, 0.3), &p2, 0.45);
        let one = heat_semigroup(&r, &p2, 0.75);
        assert!(max_diff(&two, &one) < 1e-13);
        let mean = VectorField::single_mode(&g, [0, 0, 0], &[c(1.0), c(0.0), c(0.0)]).unwrap();
        let inv = damped_diffusion_apply(&mean, &p2, DiffusionMode::Invert);
        assert!((inv.get(0, 0) - c(1.0 / 0.3)).norm() < 1e-14);
    }

    #[test]
    fn mollifier_symbol() {
        let g = grid();
        let r = noisy(&g, 11);
        assert_eq!(mollify(&r, 0.0), r);
        let f = VectorField::single_mode(&g, [1, 1, 0], &[c(0.0), c(0.0), c(1.0)]).unwrap();
        let m = g.mode_index([1, 1, 0]).unwrap();
        let eps = 1.0; // |k|^2 = 2 = 2/eps^2
        assert!((mollify(&f, eps).get(2, m) - c((-1.0f64).exp())).norm() < 1e-15);
    }
}
