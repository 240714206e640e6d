//! Real vector fields in spectral representation.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;

/// Relative divergence threshold for the divergence-free certificate.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

/// Velocity-like field: `dim` complex coefficients per retained mode, stored
/// component-major in the grid's mode enumeration order.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
    divergence_free: bool,
}

impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_geometry(&other.grid) && self.coeffs == other.coeffs
    }
}

impl VectorField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.dim() * grid.num_modes()],
            divergence_free: true,
        }
    }

    /// Wrap raw coefficients. The field is not certified divergence-free.
    pub fn from_coeffs(grid: &Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = grid.dim() * grid.num_modes();
        if coeffs.len() != expected {
            return Err(Error::GridMismatch {
                left: format!("{} coefficients", coeffs.len()),
                right: format!("{expected} expected for {}", grid.describe()),
            });
        }
        Ok(Self { grid: Arc::clone(grid), coeffs, divergence_free: false })
    }

    /// Real field `2 Re(a e^{ik·x})`: coefficient `a` at `n`, `conj(a)` at `-n`.
    /// At `n = 0` only the real part of `a` is kept.
    pub fn single_mode(grid: &Arc<SpectralGrid>, n: [i64; 3], amplitude: &[Complex64]) -> Result<Self> {
        let mode = grid
            .mode_index(n)
            .ok_or_else(|| Error::InvalidParams(format!("mode {n:?} is not retained")))?;
        let mut f = Self::zeros(grid);
        f.divergence_free = false;
        let partner = grid.partner(mode);
        for (c, &a) in amplitude.iter().enumerate().take(grid.dim()) {
            if partner == mode {
                f.set(c, mode, Complex64::new(a.re, 0.0));
            } else {
                f.set(c, mode, a);
                f.set(c, partner, a.conj());
            }
        }
        Ok(f)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mutable access drops the divergence-free certificate.
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        self.divergence_free = false;
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.num_modes();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, mode: usize) -> Complex64 {
        self.coeffs[c * self.grid.num_modes() + mode]
    }

    pub fn set(&mut self, c: usize, mode: usize, value: Complex64) {
        self.divergence_free = false;
        let n = self.grid.num_modes();
        self.coeffs[c * n + mode] = value;
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Set the certificate without checking; for operators whose output is
    /// solenoidal by construction.
    pub(crate) fn mark_divergence_free(mut self) -> Self {
        self.divergence_free = true;
        self
    }

    /// `max_k |k·û(k)|`.
    pub fn max_divergence(&self) -> f64 {
        let g = &self.grid;
        (0..g.num_modes())
            .map(|m| {
                let k = g.wavevector(m);
                (0..g.dim())
                    .map(|c| self.get(c, m) * k[c])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Root of the plain coefficient sum, `(Σ |û|²)^{1/2}` (no volume factor).
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Check the divergence invariant and set the certificate if it holds.
    pub fn certify_divergence_free(mut self) -> Result<Self> {
        let div = self.max_divergence();
        let scale = self.coeff_norm();
        if div <= DIVERGENCE_TOLERANCE * scale || div == 0.0 {
            self.divergence_free = true;
            Ok(self)
        } else {
            Err(Error::NotDivergenceFree { max_divergence: div })
        }
    }

    pub fn require_divergence_free(&self) -> Result<()> {
        if self.divergence_free {
            Ok(())
        } else {
            Err(Error::NotDivergenceFree { max_divergence: self.max_divergence() })
        }
    }

    pub fn check_same_grid(&self, other: &VectorField) -> Result<()> {
        self.grid.check_same(&other.grid)
    }

    /// Average each coefficient with the conjugate of its `-k` partner so the
    /// physical field is real.
    pub fn enforce_hermitian(&mut self) {
        let g = Arc::clone(&self.grid);
        let n = g.num_modes();
        for c in 0..g.dim() {
            let comp = &mut self.coeffs[c * n..(c + 1) * n];
            for m in 0..n {
                let p = g.partner(m);
                if p < m {
                    continue;
                }
                if p == m {
                    comp[m] = Complex64::new(comp[m].re, 0.0);
                } else {
                    let avg = 0.5 * (comp[m] + comp[p].conj());
                    comp[m] = avg;
                    comp[p] = avg.conj();
                }
            }
        }
    }

    /// Largest `|û(k) - conj(û(-k))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for c in 0..g.dim() {
            let comp = self.component(c);
            for m in 0..g.num_modes() {
                worst = worst.max((comp[m] - comp[g.partner(m)].conj()).norm());
            }
        }
        worst
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().map(|&z| z * s).collect(),
            divergence_free: self.divergence_free,
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b * s).collect(),
            divergence_free: self.divergence_free && other.divergence_free,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Multiply every mode by a real scalar symbol of `|k|²`.
    pub fn map_symbol(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let g = &self.grid;
        let n = g.num_modes();
        let factors: Vec<f64> = g.k2().iter().map(|&k2| symbol(k2)).collect();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &z)| z * factors[i % n])
            .collect();
        Self { grid: Arc::clone(g), coeffs, divergence_free: self.divergence_free }
    }

    /// Multiply every mode by a precomputed per-mode factor.
    pub fn map_factors(&self, factors: &[f64]) -> Self {
        let n = self.grid.num_modes();
        debug_assert_eq!(factors.len(), n);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &z)| z * factors[i % n])
            .collect();
        Self { grid: Arc::clone(&self.grid), coeffs, divergence_free: self.divergence_free }
    }

    /// Copy onto another grid: shared modes are kept, others zeroed.
    pub fn resample(&self, target: &Arc<SpectralGrid>) -> Result<Self> {
        if target.dim() != self.dim() || target.box_length() != self.grid.box_length() {
            return Err(Error::GridMismatch { left: self.grid.describe(), right: target.describe() });
        }
        let mut out = Self::zeros(target);
        let n_src = self.grid.num_modes();
        let n_dst = target.num_modes();
        for (m, &mode) in self.grid.modes().iter().enumerate() {
            if let Some(t) = target.mode_index(mode) {
                for c in 0..self.dim() {
                    out.coeffs[c * n_dst + t] = self.coeffs[c * n_src + m];
                }
            }
        }
        out.divergence_free = self.divergence_free;
        Ok(out)
    }

    /// Physical values of each component, component-major.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|c| self.grid.to_physical(self.component(c))).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Time-independent divergence-free body force.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingField(VectorField);

impl ForcingField {
    pub fn new(field: VectorField) -> Result<Self> {
        let field = if field.is_divergence_free() { field } else { field.certify_divergence_free()? };
        Ok(Self(field))
    }

    pub fn zero(grid: &Arc<SpectralGrid>) -> Self {
        Self(VectorField::zeros(grid))
    }

    pub fn field(&self) -> &VectorField {
        &self.0
    }

    pub fn into_field(self) -> VectorField {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.coeffs().iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }
}
