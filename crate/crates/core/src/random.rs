//! Reproducible random divergence-free data.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::field::VectorField;
use crate::grid::SpectralGrid;
use crate::operators::leray_project;

/// `|û(k)| = amplitude · (1 + |k|²)^{exponent}` with uniform random phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeSpectrum {
    pub amplitude: f64,
    pub exponent: f64,
}

impl Default for AmplitudeSpectrum {
    fn default() -> Self {
        Self { amplitude: 1.0, exponent: -2.0 }
    }
}

/// Mean-free random field, Hermitian-symmetric and Leray-projected.
pub fn random_divfree_field(seed: u64, spectrum: &AmplitudeSpectrum, grid: &Arc<SpectralGrid>) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = VectorField::zeros(grid);
    for &m in grid.half_modes() {
        let k2 = grid.k2()[m];
        if k2 == 0.0 {
            continue;
        }
        let magnitude = spectrum.amplitude * (1.0 + k2).powf(spectrum.exponent);
        let p = grid.partner(m);
        for c in 0..grid.dim() {
            let phase: f64 = rng.gen_range(0.0..2.0 * PI);
            let z = Complex64::from_polar(magnitude, phase);
            field.set(c, m, z);
            field.set(c, p, z.conj());
        }
    }
    leray_project(&field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_field() {
        let g = Arc::new(SpectralGrid::new(3, 8, 2.0 * PI).unwrap());
        let s = AmplitudeSpectrum::default();
        let a = random_divfree_field(42, &s, &g);
        let b = random_divfree_field(42, &s, &g);
        let c = random_divfree_field(43, &s, &g);
        assert_eq!(a.coeffs(), b.coeffs());
        assert_ne!(a.coeffs(), c.coeffs());
    }

    #[test]
    fn output_is_real_and_solenoidal() {
        let g = Arc::new(SpectralGrid::new(3, 12, 2.0 * PI).unwrap());
        let a = random_divfree_field(1, &AmplitudeSpectrum::default(), &g);
        assert!(a.hermitian_defect() < 1e-16);
        assert!(a.is_divergence_free());
        assert!(a.clone().certify_divergence_free().is_ok());
        assert_eq!(a.get(0, 0).norm(), 0.0);
    }
}
