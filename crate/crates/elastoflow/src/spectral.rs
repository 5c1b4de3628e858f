//! Fourier representation of real scalar and vector fields on the 2D
//! periodic box, with spectral differentiation, Leray projection, sharp
//! Galerkin truncation and 2/3-rule dealiasing.
//!
//! Coefficients are Fourier-series coefficients (forward transform divided
//! by N^2): a real field is `f(x) = sum_k c_k exp(i 2pi k.x / L)` with the
//! Hermitian symmetry `c_{-k} = conj(c_k)`. Under this normalization
//! Parseval reads `sum_x |f(x)|^2 / N^2 = sum_k |c_k|^2`.

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex;

/// Uniform N-by-N grid on the periodic box `[0, L)^2`.
///
/// ```
/// use elastoflow::Grid;
/// let grid = Grid::square(16).unwrap();
/// assert_eq!(grid.points_per_axis(), 16);
/// assert!((grid.box_length() - std::f64::consts::TAU).abs() < 1e-15);
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    /// Grid with `n` points per axis (even, at least 8) on a box of side `length`.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!(
                "points_per_axis must be even and >= 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Grid(format!("box_length must be positive, got {length}")));
        }
        Ok(Self { n, length })
    }

    /// Grid on the default `[0, 2pi)^2` box.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, std::f64::consts::TAU)
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.length
    }

    /// Number of grid points, N^2.
    pub fn num_points(&self) -> usize {
        self.n * self.n
    }

    /// Grid spacing L/N.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Box measure L^2.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Physical coordinate of index i along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Scaling 2pi/L turning integer frequencies into wavenumbers.
    pub fn wavenumber_scale(&self) -> f64 {
        std::f64::consts::TAU / self.length
    }

    /// Largest index usable as a sharp truncation cutoff (N/2 - 1).
    pub fn max_truncation(&self) -> usize {
        self.n / 2 - 1
    }

    /// Largest mode kept by the 2/3 dealiasing rule, floor(N/3).
    pub fn dealias_limit(&self) -> usize {
        self.n / 3
    }
}

/// Real scalar field stored as complex Fourier coefficients with Hermitian
/// symmetry, row-major over FFT bins.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Grid,
    coeff: Vec<Complex<f64>>,
}

impl SpectralField {
    /// Zero field.
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeff: vec![Complex::new(0.0, 0.0); grid.num_points()],
        }
    }

    /// Constant field.
    pub fn constant(grid: Grid, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeff[0] = Complex::new(value, 0.0);
        f
    }

    /// Forward transform of physical row-major samples (length N^2).
    ///
    /// Rejects non-finite input. Round trip with [`SpectralField::physical`]
    /// reproduces the samples to about 1e-13 relative.
    pub fn from_physical(grid: Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::Invalid(format!(
                "expected {} samples, got {}",
                grid.num_points(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sample {} = {} in physical input",
                pos, values[pos]
            )));
        }
        Ok(Self {
            grid,
            coeff: fft::forward(values, grid.points_per_axis()),
        })
    }

    /// Build a field directly from FFT-bin coefficients (length N^2,
    /// row-major). The caller is responsible for Hermitian symmetry.
    pub fn from_coefficients(grid: Grid, coeff: Vec<Complex<f64>>) -> Result<Self> {
        if coeff.len() != grid.num_points() {
            return Err(Error::Invalid(format!(
                "expected {} coefficients, got {}",
                grid.num_points(),
                coeff.len()
            )));
        }
        Ok(Self { grid, coeff })
    }

    /// Sample a closure on the grid and transform.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.points_per_axis();
        let mut values = Vec::with_capacity(n * n);
        for iy in 0..n {
            let y = grid.coord(iy);
            for ix in 0..n {
                values.push(f(grid.coord(ix), y));
            }
        }
        Self {
            grid,
            coeff: fft::forward(&values, n),
        }
    }

    /// Inverse transform to physical row-major samples.
    pub fn physical(&self) -> Vec<f64> {
        fft::inverse(&self.coeff, self.grid.points_per_axis())
    }

    /// Full complex synthesis, keeping the imaginary residue. Used by the
    /// iterative solvers so that pointwise-multiplication operators stay
    /// exactly self-adjoint on the whole coefficient space.
    pub(crate) fn complex_physical(&self) -> Vec<Complex<f64>> {
        fft::inverse_complex(&self.coeff, self.grid.points_per_axis())
    }

    pub(crate) fn from_complex_physical(grid: Grid, values: &[Complex<f64>]) -> Self {
        debug_assert_eq!(values.len(), grid.num_points());
        Self {
            grid,
            coeff: fft::forward_complex(values, grid.points_per_axis()),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coefficients(&self) -> &[Complex<f64>] {
        &self.coeff
    }

    /// Coefficient at integer wavevector (kx, ky), |k_j| <= N/2.
    pub fn mode(&self, kx: i64, ky: i64) -> Complex<f64> {
        self.coeff[self.bin_of(kx, ky)]
    }

    /// Set the coefficient at (kx, ky) and its Hermitian partner at (-kx, -ky).
    pub fn set_mode(&mut self, kx: i64, ky: i64, value: Complex<f64>) {
        let bin = self.bin_of(kx, ky);
        self.coeff[bin] = value;
        let conj_bin = self.bin_of(-kx, -ky);
        if conj_bin != bin {
            self.coeff[conj_bin] = value.conj();
        }
    }

    fn bin_of(&self, kx: i64, ky: i64) -> usize {
        let n = self.grid.points_per_axis() as i64;
        assert!(kx.abs() <= n / 2 && ky.abs() <= n / 2, "mode out of range");
        let bx = kx.rem_euclid(n) as usize;
        let by = ky.rem_euclid(n) as usize;
        by * n as usize + bx
    }

    /// Mean value over the box (the (0,0) coefficient).
    pub fn mean(&self) -> f64 {
        self.coeff[0].re
    }

    /// Apply a multiplier `m(kx, ky)` in place; real multipliers keep the
    /// field real-valued.
    fn multiplier(&self, m: impl Fn(i64, i64) -> Complex<f64>) -> Self {
        let n = self.grid.points_per_axis();
        let mut out = self.clone();
        for by in 0..n {
            let ky = fft::frequency(by, n);
            for bx in 0..n {
                let kx = fft::frequency(bx, n);
                out.coeff[by * n + bx] *= m(kx, ky);
            }
        }
        out
    }

    /// Spectral gradient. The Nyquist frequency is zeroed in odd derivatives
    /// so real fields stay real; solver fields never carry it.
    pub fn gradient(&self) -> VectorField {
        let scale = self.grid.wavenumber_scale();
        let n = self.grid.points_per_axis() as i64;
        let deriv = |k: i64, active: bool| -> Complex<f64> {
            if active && k.abs() * 2 != n {
                Complex::new(0.0, k as f64 * scale)
            } else if active {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(1.0, 0.0)
            }
        };
        VectorField {
            x: self.multiplier(|kx, _| deriv(kx, true)),
            y: self.multiplier(|_, ky| deriv(ky, true)),
        }
    }

    /// Spectral Laplacian, coefficients scaled by `-|k|^2 (2pi/L)^2`.
    pub fn laplacian(&self) -> Self {
        let s2 = self.grid.wavenumber_scale().powi(2);
        self.multiplier(|kx, ky| Complex::new(-((kx * kx + ky * ky) as f64) * s2, 0.0))
    }

    /// Sharp Galerkin truncation to the ball `|k|_inf <= cutoff`.
    pub fn truncate(&self, cutoff: usize) -> Result<Self> {
        if cutoff > self.grid.max_truncation() {
            return Err(Error::CutoffTooLarge {
                index: cutoff,
                max: self.grid.max_truncation(),
            });
        }
        let m = cutoff as i64;
        Ok(self.multiplier(|kx, ky| {
            if kx.abs() <= m && ky.abs() <= m {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        }))
    }

    /// 2/3-rule dealiasing: zero every mode with any `|k_j| > N/3`.
    pub fn dealias(&self) -> Self {
        let n = self.grid.points_per_axis() as i64;
        self.multiplier(|kx, ky| {
            if 3 * kx.abs() > n || 3 * ky.abs() > n {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(1.0, 0.0)
            }
        })
    }

    /// L^2(Omega) inner product, evaluated spectrally via Parseval.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let sum: f64 = self
            .coeff
            .iter()
            .zip(other.coeff.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(self.grid.area() * sum)
    }

    /// Squared L^2 norm.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.area() * self.coeff.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Squared H^1 seminorm `||grad f||_2^2` via the Fourier multiplier.
    pub fn h1_seminorm_sq(&self) -> f64 {
        let n = self.grid.points_per_axis();
        let s2 = self.grid.wavenumber_scale().powi(2);
        let mut sum = 0.0;
        for by in 0..n {
            let ky = fft::frequency(by, n);
            for bx in 0..n {
                let kx = fft::frequency(bx, n);
                sum += ((kx * kx + ky * ky) as f64) * self.coeff[by * n + bx].norm_sqr();
            }
        }
        self.grid.area() * s2 * sum
    }

    /// `<grad f, grad g>` via the Fourier multiplier.
    pub fn gradient_inner_product(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.points_per_axis();
        let s2 = self.grid.wavenumber_scale().powi(2);
        let mut sum = 0.0;
        for by in 0..n {
            let ky = fft::frequency(by, n);
            for bx in 0..n {
                let kx = fft::frequency(bx, n);
                let idx = by * n + bx;
                sum += ((kx * kx + ky * ky) as f64)
                    * (self.coeff[idx] * other.coeff[idx].conj()).re;
            }
        }
        Ok(self.grid.area() * s2 * sum)
    }

    /// Minimum and maximum over the physical grid.
    pub fn min_max(&self) -> (f64, f64) {
        let values = self.physical();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Largest `|f|` over the physical grid.
    pub fn max_abs(&self) -> f64 {
        let (lo, hi) = self.min_max();
        lo.abs().max(hi.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.coeff.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest mode index carrying any coefficient above `tol` in magnitude.
    pub fn active_band(&self, tol: f64) -> usize {
        let n = self.grid.points_per_axis();
        let mut band = 0usize;
        for by in 0..n {
            let ky = fft::frequency(by, n).unsigned_abs() as usize;
            for bx in 0..n {
                let kx = fft::frequency(bx, n).unsigned_abs() as usize;
                if self.coeff[by * n + bx].norm() > tol {
                    band = band.max(kx.max(ky));
                }
            }
        }
        band
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeff {
            *c *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let mut out = self.clone();
        for (a, b) in out.coeff.iter_mut().zip(other.coeff.iter()) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let mut out = self.clone();
        for (a, b) in out.coeff.iter_mut().zip(other.coeff.iter()) {
            *a -= b;
        }
        out
    }

    /// `self + s * other`, the workhorse of the explicit steppers.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let mut out = self.clone();
        for (a, b) in out.coeff.iter_mut().zip(other.coeff.iter()) {
            *a += s * b;
        }
        out
    }
}

/// Pointwise product of two fields, returned in spectral space (not dealiased).
pub fn pointwise_product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let pa = a.physical();
    let pb = b.physical();
    let prod: Vec<f64> = pa.iter().zip(pb.iter()).map(|(x, y)| x * y).collect();
    Ok(SpectralField {
        grid: a.grid,
        coeff: fft::forward(&prod, a.grid.points_per_axis()),
    })
}

/// Transform physical samples without the finiteness check (internal paths
/// where values are produced by the solver itself).
pub fn from_physical_unchecked(grid: Grid, values: &[f64]) -> SpectralField {
    debug_assert_eq!(values.len(), grid.num_points());
    SpectralField {
        grid,
        coeff: fft::forward(values, grid.points_per_axis()),
    }
}

/// Two-component real vector field on one grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub x: SpectralField,
    pub y: SpectralField,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            x: SpectralField::zeros(grid),
            y: SpectralField::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid {
        self.x.grid()
    }

    /// Spectral divergence.
    pub fn divergence(&self) -> SpectralField {
        let gx = self.x.gradient();
        let gy = self.y.gradient();
        gx.x.add(&gy.y)
    }

    /// Leray projection onto divergence-free fields:
    /// `u_j -> u_j - k_j (k.u)/|k|^2`, mean modes untouched.
    pub fn leray_project(&self) -> Self {
        let grid = self.grid();
        let n = grid.points_per_axis();
        let ni = n as i64;
        let mut out = self.clone();
        for by in 0..n {
            let ky_raw = fft::frequency(by, n);
            // Nyquist is treated as zero wavenumber, matching the gradient.
            let ky = if ky_raw.abs() * 2 == ni { 0 } else { ky_raw };
            for bx in 0..n {
                let kx_raw = fft::frequency(bx, n);
                let kx = if kx_raw.abs() * 2 == ni { 0 } else { kx_raw };
                let k2 = (kx * kx + ky * ky) as f64;
                if k2 == 0.0 {
                    continue;
                }
                let idx = by * n + bx;
                let dot = kx as f64 * out.x.coeff[idx] + ky as f64 * out.y.coeff[idx];
                out.x.coeff[idx] -= kx as f64 / k2 * dot;
                out.y.coeff[idx] -= ky as f64 / k2 * dot;
            }
        }
        out
    }

    pub fn truncate(&self, cutoff: usize) -> Result<Self> {
        Ok(Self {
            x: self.x.truncate(cutoff)?,
            y: self.y.truncate(cutoff)?,
        })
    }

    pub fn dealias(&self) -> Self {
        Self {
            x: self.x.dealias(),
            y: self.y.dealias(),
        }
    }

    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        Ok(self.x.inner_product(&other.x)? + self.y.inner_product(&other.y)?)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.x.l2_norm_sq() + self.y.l2_norm_sq()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `||grad v||_2^2`, both components.
    pub fn h1_seminorm_sq(&self) -> f64 {
        self.x.h1_seminorm_sq() + self.y.h1_seminorm_sq()
    }

    /// Largest pointwise |div v| on the physical grid.
    pub fn max_divergence(&self) -> f64 {
        self.divergence().max_abs()
    }

    /// Largest pointwise |grad v| (Frobenius) on the physical grid; scale for
    /// the solenoidal tolerance.
    pub fn max_gradient(&self) -> f64 {
        let gx = self.x.gradient();
        let gy = self.y.gradient();
        let (a, b, c, d) = (
            gx.x.physical(),
            gx.y.physical(),
            gy.x.physical(),
            gy.y.physical(),
        );
        let mut hi: f64 = 0.0;
        for i in 0..a.len() {
            let frob = (a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + d[i] * d[i]).sqrt();
            hi = hi.max(frob);
        }
        hi
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            x: self.x.scale(s),
            y: self.y.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            x: self.x.add(&other.x),
            y: self.y.add(&other.y),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            x: self.x.sub(&other.x),
            y: self.y.sub(&other.y),
        }
    }

    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        Self {
            x: self.x.add_scaled(s, &other.x),
            y: self.y.add_scaled(s, &other.y),
        }
    }
}
