use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::fft::fft_nd;
use super::{signed_wavenumber, Field, TorusGrid};
use crate::error::{config_err, domain_err, Result};
use crate::model::BiPoly;
use crate::FOUR_PI_SQ;

/// Fourier coefficients `c_ξ` of the trigonometric interpolant of a [`Field`],
/// stored in FFT order (index `k` ↦ `ξ = k` for `k ≤ N/2`, `k − N` otherwise).
///
/// `f(x) = Σ_ξ c_ξ e^{2πiξ·x}` holds exactly at the sample points. The entry at a
/// Nyquist index carries the combined `±N/2` pair, so Hermitian symmetry
/// `c_{−ξ} = conj(c_ξ)` holds for every wave vector without a Nyquist component.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return config_err(format!(
                "spectrum has {} coefficients but the grid has {} modes",
                coeffs.len(),
                grid.len()
            ));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of wave vector `ξ` (one entry per axis), if resolved.
    pub fn coeff(&self, xi: &[i64]) -> Option<Complex64> {
        self.grid.index_of(xi).map(|i| self.coeffs[i])
    }

    /// The `ξ = 0` coefficient, i.e. the mean of the physical field.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Multiplies every coefficient by `m(|ξ|²)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(self.grid.mode_sq(i)))
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }

    /// `Σ_ξ w(|ξ|²)|c_ξ|²` in a fixed summation order.
    pub fn weighted_norm_sq(&self, w: impl Fn(f64) -> f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| w(self.grid.mode_sq(i)) * c.norm_sqr())
            .sum()
    }

    /// `Σ_ξ |c_ξ|²`, equal to the grid quadrature of `|f|²`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest Hermitian-symmetry defect over non-Nyquist wave vectors.
    pub fn hermitian_defect(&self) -> f64 {
        let half = (self.grid.n() / 2) as i64;
        let d = self.grid.dim();
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() {
            let xi = self.grid.wave_vector(i);
            if xi[..d].contains(&half) {
                continue;
            }
            let neg: Vec<i64> = xi[..d].iter().map(|&x| -x).collect();
            let j = self.grid.index_of(&neg).expect("resolved");
            worst = worst.max((self.coeffs[j] - self.coeffs[i].conj()).norm());
        }
        worst
    }

    pub fn to_field(&self) -> Field {
        inverse(self)
    }
}

/// Per-axis factor `e^{−iπξ/n}` that accounts for cell-centered sampling.
fn phases(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, -PI * signed_wavenumber(k, n) as f64 / n as f64))
        .collect()
}

fn apply_phases(buf: &mut [Complex64], dim: usize, n: usize, conjugate: bool) {
    let mut ph = phases(n);
    if conjugate {
        ph.iter_mut().for_each(|p| *p = p.conj());
    }
    match dim {
        1 => buf.iter_mut().zip(&ph).for_each(|(c, p)| *c *= p),
        _ => {
            for i in 0..n {
                for j in 0..n {
                    buf[i * n + j] *= ph[i] * ph[j];
                }
            }
        }
    }
}

/// Normalized, phase-corrected coefficients of real samples on an `n^dim` grid.
pub(crate) fn forward_raw(values: &[f64], dim: usize, n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, dim, n, false);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    apply_phases(&mut buf, dim, n, false);
    buf
}

/// Real part of the interpolant sampled at the cell centers of an `n^dim` grid.
pub(crate) fn inverse_raw(coeffs: &[Complex64], dim: usize, n: usize) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    apply_phases(&mut buf, dim, n, true);
    fft_nd(&mut buf, dim, n, true);
    buf.into_iter().map(|c| c.re).collect()
}

pub fn transform(field: &Field) -> SpectralField {
    let g = field.grid();
    SpectralField {
        grid: g,
        coeffs: forward_raw(field.values(), g.dim(), g.n()),
    }
}

pub fn inverse(spec: &SpectralField) -> Field {
    let g = spec.grid;
    Field::from_raw(g, inverse_raw(&spec.coeffs, g.dim(), g.n()))
}

/// One-axis index map between spectra of sizes `from` and `to`:
/// for each destination index, the contributing `(source index, weight)` pairs.
fn axis_map(from: usize, to: usize) -> Vec<Vec<(usize, f64)>> {
    let mut map = vec![Vec::new(); to];
    if from == to {
        for (k, m) in map.iter_mut().enumerate() {
            m.push((k, 1.0));
        }
        return map;
    }
    let wrap = |xi: i64, n: usize| xi.rem_euclid(n as i64) as usize;
    if to > from {
        // Embedding: the source Nyquist pair splits into +from/2 and −from/2.
        let half = (from / 2) as i64;
        for k in 0..from {
            let xi = signed_wavenumber(k, from);
            if xi == half {
                map[wrap(half, to)].push((k, 0.5));
                map[wrap(-half, to)].push((k, -0.5));
            } else {
                map[wrap(xi, to)].push((k, 1.0));
            }
        }
    } else {
        // Truncation: the destination Nyquist entry merges +to/2 and −to/2.
        let half = (to / 2) as i64;
        for (k, m) in map.iter_mut().enumerate() {
            let xi = signed_wavenumber(k, to);
            if xi == half {
                m.push((wrap(half, from), 1.0));
                m.push((wrap(-half, from), -1.0));
            } else {
                m.push((wrap(xi, from), 1.0));
            }
        }
    }
    map
}

/// Zero-pads (`to > from`) or truncates (`to < from`) an FFT-ordered spectrum.
pub(crate) fn resample_spectrum(
    src: &[Complex64],
    dim: usize,
    from: usize,
    to: usize,
) -> Vec<Complex64> {
    let map = axis_map(from, to);
    let zero = Complex64::new(0.0, 0.0);
    match dim {
        1 => map
            .iter()
            .map(|m| m.iter().map(|&(k, w)| src[k] * w).sum())
            .collect(),
        _ => {
            let mut out = vec![zero; to * to];
            for (i, mi) in map.iter().enumerate() {
                for (j, mj) in map.iter().enumerate() {
                    let mut acc = zero;
                    for &(si, wi) in mi {
                        for &(sj, wj) in mj {
                            acc += src[si * from + sj] * (wi * wj);
                        }
                    }
                    out[i * to + j] = acc;
                }
            }
            out
        }
    }
}

/// Zero-padded companion grid used to evaluate nonlinearities without aliasing.
pub(crate) struct PaddedGrid {
    grid: TorusGrid,
    m: usize,
}

impl PaddedGrid {
    pub(crate) fn new(grid: TorusGrid, pad: f64) -> Result<Self> {
        if !(pad.is_finite() && pad >= 1.0) {
            return config_err(format!("padding factor must be >= 1, got {pad}"));
        }
        let target = (pad * grid.n() as f64).ceil() as usize;
        let m = target + target % 2;
        Ok(PaddedGrid { grid, m })
    }

    /// Samples the interpolant of `spec` on the padded grid.
    pub(crate) fn lift(&self, spec: &SpectralField) -> Vec<f64> {
        let d = self.grid.dim();
        let up = resample_spectrum(&spec.coeffs, d, self.grid.n(), self.m);
        inverse_raw(&up, d, self.m)
    }

    /// Transforms padded samples and truncates back to the base grid.
    pub(crate) fn project(&self, values: &[f64]) -> SpectralField {
        let d = self.grid.dim();
        let hat = forward_raw(values, d, self.m);
        SpectralField {
            grid: self.grid,
            coeffs: resample_spectrum(&hat, d, self.m, self.grid.n()),
        }
    }

    /// Applies a Fourier multiplier `m(|ξ|²)` to samples on the padded grid.
    pub(crate) fn filter(&self, values: &[f64], mult: impl Fn(f64) -> f64) -> Vec<f64> {
        let d = self.grid.dim();
        let mut hat = forward_raw(values, d, self.m);
        let m = self.m;
        for (flat, c) in hat.iter_mut().enumerate() {
            let sq = match d {
                1 => (signed_wavenumber(flat, m) as f64).powi(2),
                _ => {
                    let a = signed_wavenumber(flat / m, m) as f64;
                    let b = signed_wavenumber(flat % m, m) as f64;
                    a * a + b * b
                }
            };
            *c *= mult(sq);
        }
        inverse_raw(&hat, d, m)
    }
}

/// Padding factor `⌈(D+1)/2⌉` that makes a degree-`D` polynomial of
/// band-limited inputs alias-free after truncation.
pub fn dealias_pad(degree: u32) -> f64 {
    ((degree as f64 + 1.0) / 2.0).ceil().max(1.0)
}

/// Dealiased `p(u, v)` in spectral form.
pub(crate) fn poly_spectral(
    p: &BiPoly,
    u: &SpectralField,
    v: &SpectralField,
    pad: f64,
) -> Result<SpectralField> {
    if u.grid != v.grid {
        return config_err(format!("grid mismatch: {:?} vs {:?}", u.grid, v.grid));
    }
    let padded = PaddedGrid::new(u.grid, pad)?;
    let up = padded.lift(u);
    let vp = padded.lift(v);
    let w: Vec<f64> = up.iter().zip(&vp).map(|(&a, &b)| p.eval(a, b)).collect();
    Ok(padded.project(&w))
}

/// Pointwise `p(u, v)` evaluated on a grid zero-padded by `pad`, truncated back.
pub fn poly_field(p: &BiPoly, u: &Field, v: &Field, pad: f64) -> Result<Field> {
    u.ensure_same_grid(v)?;
    Ok(inverse(&poly_spectral(
        p,
        &transform(u),
        &transform(v),
        pad,
    )?))
}

/// Spectral Laplacian: multiplication by `−4π²|ξ|²`.
pub fn laplacian(field: &Field) -> Field {
    inverse(&transform(field).apply_multiplier(|k2| -FOUR_PI_SQ * k2))
}

/// Heat semigroup `e^{t m Δ}`: multiplication by `exp(−m·4π²|ξ|²·t)`.
pub fn heat_propagate(field: &Field, t: f64, m: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return domain_err(format!("heat propagation time must be >= 0, got {t}"));
    }
    if !(m > 0.0) {
        return domain_err(format!("diffusivity must be > 0, got {m}"));
    }
    if t == 0.0 {
        return Ok(field.clone());
    }
    Ok(inverse(
        &transform(field).apply_multiplier(|k2| (-m * FOUR_PI_SQ * k2 * t).exp()),
    ))
}

/// Mass-one smoothing kernel realized as the torus heat kernel at time `eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mollifier {
    eta: f64,
}

impl Mollifier {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return domain_err(format!("mollifier width must be > 0, got {eta}"));
        }
        Ok(Mollifier { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Fourier multiplier at `|ξ|²`.
    pub fn multiplier(&self, mode_sq: f64) -> f64 {
        (-self.eta * FOUR_PI_SQ * mode_sq).exp()
    }

    pub fn apply(&self, field: &Field) -> Field {
        inverse(&transform(field).apply_multiplier(|k2| self.multiplier(k2)))
    }
}

/// Convolution with the heat-kernel mollifier of width `eta`.
pub fn mollify(field: &Field, eta: f64) -> Result<Field> {
    Ok(Mollifier::new(eta)?.apply(field))
}
