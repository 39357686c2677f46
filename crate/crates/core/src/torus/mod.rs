//! Functions on the flat torus `[0,1)^d` and their discrete Fourier calculus.
//!
//! Samples sit at cell centers `x_i = (i + 1/2)/N` on every axis, so all
//! quadratures are equal-weight sums with weight `N^{-d}`. Characters are
//! `e^{2πiξ·x}` and the Laplacian has eigenvalues `-4π²|ξ|²`.

pub mod csv;
mod fft;
mod spectral;

use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

pub use spectral::{
    dealias_pad, heat_propagate, inverse, laplacian, mollify, poly_field, transform, Mollifier,
    SpectralField,
};
pub(crate) use spectral::{poly_spectral, PaddedGrid};

/// Uniform discretization of `𝕋^d`, `d ∈ {1, 2}`, with `N = 2^J` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    /// Smallest admissible number of points per axis.
    pub const MIN_POINTS: usize = 8;

    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return config_err(format!("dimension must be 1 or 2, got {dim}"));
        }
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return config_err(format!(
                "points per axis must be a power of two >= {}, got {n}",
                Self::MIN_POINTS
            ));
        }
        Ok(TorusGrid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of samples `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `N^{-d}` shared by every sample.
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// Cell-center coordinate of index `i` along one axis.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n as f64
    }

    /// Multi-index of a flat (row-major) position. Unused axes are 0.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    /// Physical point of a flat index; the second coordinate is 0 when `d = 1`.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(flat);
        match self.dim {
            1 => [self.center(i), 0.0],
            _ => [self.center(i), self.center(j)],
        }
    }

    /// Signed wavenumber of an FFT-ordered index. The Nyquist index `N/2`
    /// maps to `+N/2`; its stored coefficient stands for the `±N/2` pair.
    pub fn wavenumber(&self, k: usize) -> i64 {
        signed_wavenumber(k, self.n)
    }

    /// Wave vector `ξ` of a flat FFT-ordered index.
    pub fn wave_vector(&self, flat: usize) -> [i64; 2] {
        let [i, j] = self.multi_index(flat);
        match self.dim {
            1 => [self.wavenumber(i), 0],
            _ => [self.wavenumber(i), self.wavenumber(j)],
        }
    }

    /// `|ξ|²` of a flat FFT-ordered index.
    pub fn mode_sq(&self, flat: usize) -> f64 {
        let [a, b] = self.wave_vector(flat);
        (a * a + b * b) as f64
    }

    /// Flat FFT-ordered index of a wave vector, if it is resolved by the grid.
    pub fn index_of(&self, xi: &[i64]) -> Option<usize> {
        if xi.len() != self.dim {
            return None;
        }
        let half = (self.n / 2) as i64;
        let mut flat = 0usize;
        for &x in xi {
            if x < -half || x > half {
                return None;
            }
            flat = flat * self.n + x.rem_euclid(self.n as i64) as usize;
        }
        Some(flat)
    }

    /// Largest `|ξ|` present on the grid.
    pub fn max_wavenumber_norm(&self) -> f64 {
        (self.dim as f64).sqrt() * (self.n / 2) as f64
    }
}

pub(crate) fn signed_wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Real samples of a function on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return config_err(format!(
                "field has {} values but the grid has {} points",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return config_err(format!("non-finite value at index {i}"));
        }
        Ok(Field { grid, values })
    }

    /// Skips the finiteness check; callers detect blow-up themselves.
    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at the cell centers. `f` receives `[x1, x2]`.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `∫_{𝕋^d} f`, which equals the mean since the torus has unit measure.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Subtracts the mean.
    pub fn mean_free(&self) -> Field {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Equal-weight quadrature of `f·g`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub(crate) fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return config_err(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            ));
        }
        Ok(())
    }
}

impl Add for &Field {
    type Output = Field;

    fn add(self, rhs: &Field) -> Field {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Sub for &Field {
    type Output = Field;

    fn sub(self, rhs: &Field) -> Field {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl Mul<f64> for &Field {
    type Output = Field;

    fn mul(self, rhs: f64) -> Field {
        self.map(|v| v * rhs)
    }
}

/// Random real trigonometric polynomial whose Fourier support is the set of
/// wave vectors accepted by `keep`. Coefficients are uniform in `[-1, 1]`
/// (real and imaginary parts); Nyquist modes are never populated.
pub fn random_trig_field<R: Rng + ?Sized>(
    grid: TorusGrid,
    rng: &mut R,
    keep: impl Fn([i64; 2]) -> bool,
) -> Field {
    random_spectrum(grid, rng, keep).to_field()
}

pub(crate) fn random_spectrum<R: Rng + ?Sized>(
    grid: TorusGrid,
    rng: &mut R,
    keep: impl Fn([i64; 2]) -> bool,
) -> SpectralField {
    use rustfft::num_complex::Complex64;

    let n = grid.n() as i64;
    let half = n / 2;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for flat in 0..grid.len() {
        let xi = grid.wave_vector(flat);
        if xi.iter().take(grid.dim()).any(|&x| x == half) || !keep(xi) {
            continue;
        }
        let neg: Vec<i64> = xi[..grid.dim()].iter().map(|&x| -x).collect();
        let partner = grid
            .index_of(&neg)
            .expect("negated wave vector is resolved");
        if partner < flat {
            continue;
        }
        let re = rng.gen_range(-1.0..=1.0);
        if partner == flat {
            coeffs[flat] = Complex64::new(re, 0.0);
        } else {
            let im = rng.gen_range(-1.0..=1.0);
            coeffs[flat] = Complex64::new(re, im);
            coeffs[partner] = Complex64::new(re, -im);
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("sizes match")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(TorusGrid::new(1, 4).is_err());
        assert!(TorusGrid::new(1, 48).is_err());
        assert!(TorusGrid::new(3, 16).is_err());
        assert!(TorusGrid::new(2, 16).is_ok());
    }

    #[test]
    fn wave_vectors_follow_fft_order() {
        let g = TorusGrid::new(1, 8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.index_of(&[-3]), Some(5));
        assert_eq!(g.index_of(&[-4]), Some(4));
        assert_eq!(g.index_of(&[5]), None);
        let g2 = TorusGrid::new(2, 8).unwrap();
        assert_eq!(g2.wave_vector(g2.index_of(&[-1, 2]).unwrap()), [-1, 2]);
    }

    #[test]
    fn field_quadrature_is_equal_weight() {
        let g = TorusGrid::new(1, 16).unwrap();
        let f = Field::from_fn(g, |x| x[0]);
        assert!((f.mean() - 0.5).abs() < 1e-15);
        assert!(Field::new(g, vec![f64::NAN; 16]).is_err());
        assert!(Field::new(g, vec![0.0; 15]).is_err());
    }

    #[test]
    fn random_trig_field_is_real_and_supported() {
        use rand::SeedableRng;
        let g = TorusGrid::new(2, 16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let spec = random_spectrum(g, &mut rng, |xi| xi[0].abs() + xi[1].abs() <= 3);
        for flat in 0..g.len() {
            let xi = g.wave_vector(flat);
            if xi[0].abs() + xi[1].abs() > 3 {
                assert_eq!(spec.coeffs()[flat].norm(), 0.0);
            }
            let neg = g.index_of(&[-xi[0], -xi[1]]).unwrap();
            assert!((spec.coeffs()[neg] - spec.coeffs()[flat].conj()).norm() < 1e-15);
        }
    }
}
