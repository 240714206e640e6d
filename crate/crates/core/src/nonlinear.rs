//! The filtered transport term `J^{-β}_δ P div(u⊗u)` and its linearization.
//!
//! Products are formed in physical space and transformed back onto the
//! retained modes only. Since the retained set satisfies the two-thirds rule,
//! the truncated quadratic convolution is exact on every retained mode, which
//! is what makes `⟨P div(u⊗u), u⟩ = 0` hold to round-off.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::field::VectorField;
use crate::grid::SpectralGrid;
use crate::operators::leray_project;
use crate::params::ModelParams;

/// `div(S)` for the symmetric tensor `S = (u⊗v + v⊗u)/2`, truncated to the
/// retained modes. Not projected.
pub fn symmetric_product_divergence(u: &VectorField, v: &VectorField) -> Result<VectorField> {
    u.check_same_grid(v)?;
    let g = u.grid();
    let dim = g.dim();
    let n = g.num_modes();
    let pu = u.to_physical();
    let same = std::ptr::eq(u, v) || u.coeffs() == v.coeffs();
    let pv = if same { pu.clone() } else { v.to_physical() };

    let mut out = vec![Complex64::new(0.0, 0.0); dim * n];
    let points = g.num_points();
    let mut prod = vec![0.0f64; points];
    for i in 0..dim {
        for j in i..dim {
            for x in 0..points {
                prod[x] = 0.5 * (pu[i][x] * pv[j][x] + pv[i][x] * pu[j][x]);
            }
            let s = g.to_spectral(&prod);
            // ∂_j S_ij contributes to component i, ∂_i S_ij to component j
            for (m, &z) in s.iter().enumerate() {
                let k = g.wavevector(m);
                out[i * n + m] += Complex64::new(0.0, k[j]) * z;
                if i != j {
                    out[j * n + m] += Complex64::new(0.0, k[i]) * z;
                }
            }
        }
    }
    let mut f = VectorField::from_coeffs(g, out)?;
    f.enforce_hermitian();
    Ok(f)
}

/// Nonlinear operator of a model, optionally mollified.
///
/// With `epsilon > 0` the term becomes `J^{-β}_δ P θ_ε * div((θ_ε * u) ⊗ (θ_ε * u))`
/// with the Gaussian spectral mollifier.
#[derive(Clone, Debug)]
pub struct NonlinearOperator {
    grid: Arc<SpectralGrid>,
    outer: Vec<f64>,
    inner: Option<Vec<f64>>,
}

impl NonlinearOperator {
    pub fn new(params: &ModelParams, grid: &Arc<SpectralGrid>, epsilon: f64) -> Self {
        let mollifier = |k2: f64| (-0.5 * epsilon * epsilon * k2).exp();
        let outer = grid
            .k2()
            .iter()
            .map(|&k2| {
                let filter = params.bessel_symbol(k2, -params.beta);
                if epsilon > 0.0 { filter * mollifier(k2) } else { filter }
            })
            .collect();
        let inner = (epsilon > 0.0).then(|| grid.k2().iter().map(|&k2| mollifier(k2)).collect());
        Self { grid: Arc::clone(grid), outer, inner }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    fn smooth(&self, u: &VectorField) -> VectorField {
        match &self.inner {
            Some(f) => u.map_factors(f),
            None => u.clone(),
        }
    }

    fn finish(&self, div: VectorField) -> VectorField {
        leray_project(&div).map_factors(&self.outer).mark_divergence_free()
    }

    pub fn apply(&self, u: &VectorField) -> Result<VectorField> {
        u.require_divergence_free()?;
        self.grid.check_same(u.grid())?;
        let su = self.smooth(u);
        let div = symmetric_product_divergence(&su, &su)?;
        Ok(self.finish(div))
    }

    /// Derivative at `u` in direction `v`:
    /// `J^{-β}_δ P((v·∇)u + (u·∇)v)` (with mollification when enabled).
    pub fn linearized(&self, u: &VectorField, v: &VectorField) -> Result<VectorField> {
        u.require_divergence_free()?;
        v.require_divergence_free()?;
        self.grid.check_same(u.grid())?;
        let su = self.smooth(u);
        let sv = self.smooth(v);
        let div = symmetric_product_divergence(&su, &sv)?;
        Ok(self.finish(div.scale(2.0)))
    }
}

/// `J^{-β}_δ P div(u⊗u)` for an un-mollified model.
pub fn nonlinear_term(u: &VectorField, params: &ModelParams) -> Result<VectorField> {
    NonlinearOperator::new(params, u.grid(), 0.0).apply(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::norms::{l2_inner, sobolev_norm, SobolevVariant};
    use crate::operators::{bessel_filter, FilterDirection};
    use crate::random::{random_divfree_field, AmplitudeSpectrum};
    use std::f64::consts::PI;

    /// div(u⊗u) by direct convolution over retained mode pairs.
    fn brute_force_divergence(u: &VectorField) -> Vec<Complex64> {
        let g = u.grid();
        let dim = g.dim();
        let n = g.num_modes();
        let mut out = vec![Complex64::new(0.0, 0.0); dim * n];
        let modes = g.modes();
        for p in 0..n {
            for q in 0..n {
                let s = [modes[p][0] + modes[q][0], modes[p][1] + modes[q][1], modes[p][2] + modes[q][2]];
                let Some(kidx) = g.mode_index(s) else { continue };
                let k = g.wavevector(kidx);
                for i in 0..dim {
                    for j in 0..dim {
                        let t = u.get(i, p) * u.get(j, q);
                        out[i * n + kidx] += Complex64::new(0.0, k[j]) * t;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = Arc::new(SpectralGrid::new(3, 8, 2.0 * PI).unwrap());
        let p = ModelParams { modes_per_axis: 8, ..Default::default() };
        let z = nonlinear_term(&VectorField::zeros(&g), &p).unwrap();
        assert!(z.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn matches_direct_convolution() {
        let g = Arc::new(SpectralGrid::new(3, 8, 2.0 * PI).unwrap());
        let u = random_divfree_field(17, &AmplitudeSpectrum { amplitude: 1.0, exponent: -0.5 }, &g);
        let pseudo = symmetric_product_divergence(&u, &u).unwrap();
        let direct = brute_force_divergence(&u);
        let err = pseudo.coeffs().iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "max deviation {err}");
    }

    #[test]
    fn energy_orthogonality() {
        let p = ModelParams { beta: 1.5, delta: 0.4, modes_per_axis: 12, ..Default::default() };
        let g = p.build_grid().unwrap();
        for seed in 0..4 {
            let u = random_divfree_field(seed, &AmplitudeSpectrum { amplitude: 3.0, exponent: -1.0 }, &g);
            let nl = nonlinear_term(&u, &p).unwrap();
            let ju = bessel_filter(&u, p.beta, p.delta, FilterDirection::Forward);
            let ip = l2_inner(&nl, &ju).unwrap();
            let scale = sobolev_norm(&u, 0.0, SobolevVariant::Inhomogeneous).powi(3);
            assert!(ip.abs() < 1e-11 * scale, "{ip} vs {scale}");
            assert!(nl.max_divergence() < 1e-12 * nl.coeff_norm());
        }
    }

    #[test]
    fn requires_certified_input() {
        let g = Arc::new(SpectralGrid::new(2, 8, 2.0 * PI).unwrap());
        let p = ModelParams { dim: 2, modes_per_axis: 8, ..Default::default() };
        let mut u = random_divfree_field(1, &AmplitudeSpectrum::default(), &g);
        u.coeffs_mut();
        assert!(matches!(nonlinear_term(&u, &p), Err(Error::NotDivergenceFree { .. })));
    }

    #[test]
    fn linearization_is_exact_for_quadratic() {
        let p = ModelParams { beta: 0.5, modes_per_axis: 8, ..Default::default() };
        let g = p.build_grid().unwrap();
        let op = NonlinearOperator::new(&p, &g, 0.0);
        let u = random_divfree_field(2, &AmplitudeSpectrum::default(), &g);
        let v = random_divfree_field(3, &AmplitudeSpectrum::default(), &g);
        let h = 0.1;
        let lhs = op.apply(&u.axpy(h, &v).unwrap()).unwrap();
        let rhs = op
            .apply(&u)
            .unwrap()
            .axpy(h, &op.linearized(&u, &v).unwrap())
            .unwrap()
            .axpy(h * h, &op.apply(&v).unwrap())
            .unwrap();
        let err = lhs.sub(&rhs).unwrap().coeff_norm();
        assert!(err < 1e-14 * lhs.coeff_norm().max(1.0));
    }
}
