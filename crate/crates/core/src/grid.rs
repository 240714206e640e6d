//! Periodic grid geometry, retained-mode enumeration and the transform pair.
//!
//! Fields are stored only on the retained (dealiased) modes: integer
//! wavevectors `n` with `|n_i| <= N/3` on every axis. Physical wavevectors are
//! `k = (2π/L) n`. The enumeration orders modes by ascending `|n|²`, ties broken
//! lexicographically on the signed integer components, and is the order used
//! by coefficient storage, checkpoints and the weak-distance basis.
//!
//! Transforms go through a full `N^dim` complex buffer. The physical field is
//! `u(x) = Σ_k û(k) e^{ik·x}`, so the forward map carries the `1/N^dim` factor.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Full-buffer size above which line transforms are spread over threads.
const PARALLEL_FFT_THRESHOLD: usize = 1 << 15;

pub struct SpectralGrid {
    dim: usize,
    n: usize,
    box_length: f64,
    max_index: i64,
    modes: Vec<[i64; 3]>,
    kvec: Vec<[f64; 3]>,
    k2: Vec<f64>,
    partner: Vec<usize>,
    full_index: Vec<usize>,
    half: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    execution: Execution,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("dim", &self.dim)
            .field("modes_per_axis", &self.n)
            .field("box_length", &self.box_length)
            .field("retained", &self.modes.len())
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, modes_per_axis: usize, box_length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParams(format!("dim must be 2 or 3, got {dim}")));
        }
        if modes_per_axis < 8 || modes_per_axis % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "modes_per_axis must be even and >= 8, got {modes_per_axis}"
            )));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::InvalidParams(format!("box_length must be > 0, got {box_length}")));
        }
        let n = modes_per_axis;
        // largest K with 3K < N, so wrapped sums p + q - N never land on a retained mode
        let max_index = ((n - 1) / 3) as i64;
        let range: Vec<i64> = (-max_index..=max_index).collect();

        let mut modes = Vec::new();
        for &a in &range {
            for &b in &range {
                if dim == 2 {
                    modes.push([a, b, 0]);
                } else {
                    for &c in &range {
                        modes.push([a, b, c]);
                    }
                }
            }
        }
        modes.sort_by_key(|m| (m[0] * m[0] + m[1] * m[1] + m[2] * m[2], *m));

        let scale = 2.0 * PI / box_length;
        let kvec: Vec<[f64; 3]> = modes
            .iter()
            .map(|m| [scale * m[0] as f64, scale * m[1] as f64, scale * m[2] as f64])
            .collect();
        let k2 = kvec.iter().map(|k| k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).collect();

        let lookup = |m: [i64; 3]| -> usize {
            modes
                .binary_search_by_key(&(m[0] * m[0] + m[1] * m[1] + m[2] * m[2], m), |x| {
                    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2], *x)
                })
                .expect("negated mode is retained")
        };
        let partner = modes.iter().map(|m| lookup([-m[0], -m[1], -m[2]])).collect();

        let wrap = |i: i64| i.rem_euclid(n as i64) as usize;
        let full_index = modes
            .iter()
            .map(|m| {
                let mut idx = 0;
                for &c in &m[..dim] {
                    idx = idx * n + wrap(c);
                }
                idx
            })
            .collect();

        let half = (0..modes.len())
            .filter(|&i| {
                let m = modes[i];
                match m.iter().find(|&&c| c != 0) {
                    None => true,
                    Some(&c) => c > 0,
                }
            })
            .collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        Ok(Self {
            dim,
            n,
            box_length,
            max_index,
            modes,
            kvec,
            k2,
            partner,
            full_index,
            half,
            forward,
            inverse,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// `L^dim`, the factor turning coefficient sums into integrals over the box.
    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Largest retained integer index per axis (`⌊N/3⌋`).
    pub fn max_index(&self) -> i64 {
        self.max_index
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    /// Number of collocation points `N^dim`.
    pub fn num_points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn modes(&self) -> &[[i64; 3]] {
        &self.modes
    }

    pub fn wavevector(&self, mode: usize) -> [f64; 3] {
        self.kvec[mode]
    }

    pub fn wavevectors(&self) -> &[[f64; 3]] {
        &self.kvec
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    /// Index of the mode `-k`.
    pub fn partner(&self, mode: usize) -> usize {
        self.partner[mode]
    }

    /// Half-spectrum representatives (`k = 0` and modes whose first nonzero
    /// component is positive), in enumeration order.
    pub fn half_modes(&self) -> &[usize] {
        &self.half
    }

    pub fn mode_index(&self, m: [i64; 3]) -> Option<usize> {
        self.modes
            .binary_search_by_key(&(m[0] * m[0] + m[1] * m[1] + m[2] * m[2], m), |x| {
                (x[0] * x[0] + x[1] * x[1] + x[2] * x[2], *x)
            })
            .ok()
    }

    /// True if `|k_i| <= N/3 · 2π/L` on every axis (two-thirds rule).
    pub fn dealias_retains(&self, m: [i64; 3]) -> bool {
        m[..self.dim].iter().all(|&c| c.abs() <= self.max_index)
    }

    pub fn same_geometry(&self, other: &SpectralGrid) -> bool {
        self.dim == other.dim && self.n == other.n && self.box_length == other.box_length
    }

    pub(crate) fn describe(&self) -> String {
        format!("{}D N={} L={}", self.dim, self.n, self.box_length)
    }

    pub fn check_same(&self, other: &SpectralGrid) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch { left: self.describe(), right: other.describe() })
        }
    }

    /// Physical values of the scalar with retained coefficients `coeffs`.
    pub fn to_physical(&self, coeffs: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.num_modes());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.num_points()];
        for (&idx, &c) in self.full_index.iter().zip(coeffs) {
            buf[idx] = c;
        }
        self.transform(&mut buf, &self.inverse);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Retained Fourier coefficients of the physical scalar `values`. Modes
    /// outside the dealias set are discarded.
    pub fn to_spectral(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.num_points());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        let norm = 1.0 / self.num_points() as f64;
        self.full_index.iter().map(|&i| buf[i] * norm).collect()
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let exec = if buf.len() >= PARALLEL_FFT_THRESHOLD {
            self.execution
        } else {
            Execution::Sequential
        };
        let n = self.n;
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                exec::for_each_chunk_mut(exec, buf, n, |_, line| plan.process(line));
                continue;
            }
            // Gather strided lines into contiguous storage, transform, scatter.
            let block = n * stride;
            let mut lines = vec![Complex64::new(0.0, 0.0); buf.len()];
            {
                let src: &[Complex64] = buf;
                exec::for_each_chunk_mut(exec, &mut lines, n, |line_id, line| {
                    let outer = line_id / stride;
                    let inner = line_id % stride;
                    let base = outer * block + inner;
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = src[base + j * stride];
                    }
                    plan.process(line);
                });
            }
            let lines = &lines;
            exec::for_each_chunk_mut(exec, buf, block, |outer, dst| {
                for inner in 0..stride {
                    let line = &lines[(outer * stride + inner) * n..][..n];
                    for (j, &z) in line.iter().enumerate() {
                        dst[j * stride + inner] = z;
                    }
                }
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_sorted_and_bijective() {
        let g = SpectralGrid::new(3, 16, 2.0 * PI).unwrap();
        assert_eq!(g.max_index(), 5);
        assert_eq!(g.num_modes(), 11usize.pow(3));
        assert_eq!(g.modes()[0], [0, 0, 0]);
        for w in g.modes().windows(2) {
            let n2 = |m: [i64; 3]| m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
            assert!((n2(w[0]), w[0]) < (n2(w[1]), w[1]));
        }
        for i in 0..g.num_modes() {
            assert_eq!(g.mode_index(g.modes()[i]), Some(i));
            assert_eq!(g.partner(g.partner(i)), i);
        }
        let mut idx: Vec<usize> = g.full_index.clone();
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), g.num_modes());
    }

    #[test]
    fn enumeration_is_deterministic() {
        let a = SpectralGrid::new(3, 12, 1.0).unwrap();
        let b = SpectralGrid::new(3, 12, 1.0).unwrap();
        assert_eq!(a.modes(), b.modes());
    }

    #[test]
    fn dealias_mask_is_two_thirds_rule() {
        let g = SpectralGrid::new(2, 16, 2.0 * PI).unwrap();
        assert!(g.dealias_retains([5, -5, 0]));
        assert!(!g.dealias_retains([6, 0, 0]));
        assert!(g.modes().iter().all(|&m| g.dealias_retains(m)));
        // half spectrum holds the zero mode plus one of each ± pair
        assert_eq!(g.half_modes().len(), (g.num_modes() + 1) / 2);
    }

    #[test]
    fn transform_roundtrip_and_single_mode_values() {
        for dim in [2, 3] {
            let g = SpectralGrid::new(dim, 8, 2.0 * PI).unwrap();
            let m = g.mode_index([1, 0, 0]).unwrap();
            let mut c = vec![Complex64::new(0.0, 0.0); g.num_modes()];
            c[m] = Complex64::new(0.5, 0.0);
            c[g.partner(m)] = Complex64::new(0.5, 0.0);
            let phys = g.to_physical(&c);
            // u = cos(x) on an 8-point axis
            let h = 2.0 * PI / 8.0;
            let stride = 8usize.pow(dim as u32 - 1);
            for i in 0..8 {
                assert!((phys[i * stride] - (i as f64 * h).cos()).abs() < 1e-14);
            }
            let back = g.to_spectral(&phys);
            for (x, y) in back.iter().zip(&c) {
                assert!((x - y).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn parallel_and_sequential_transforms_agree() {
        let g = SpectralGrid::new(3, 32, 2.0 * PI).unwrap();
        let seq = SpectralGrid::new(3, 32, 2.0 * PI).unwrap().with_execution(Execution::Sequential);
        let values: Vec<f64> = (0..g.num_points()).map(|i| ((i * 7919) % 113) as f64 - 56.0).collect();
        assert_eq!(g.to_spectral(&values), seq.to_spectral(&values));
    }
}
