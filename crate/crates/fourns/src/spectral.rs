//! Periodic spectral discretization: grids, fields, Fourier multipliers,
//! Littlewood-Paley projections and Sobolev norms.
//!
//! Conventions used throughout the crate:
//! * a field is sampled at `x_k = k * period / n`, `k = 0..n`;
//! * Fourier-series coefficients `c_j` (index `j` in FFT order, wavenumber
//!   `xi_j = 2 pi j / period`) satisfy `u(x) = sum_j c_j e^{i xi_j x}`;
//! * the line-normalized transform is `u_hat(xi_j) = period / sqrt(2 pi) * c_j`,
//!   so `||u||_{L2}^2 = period * sum_j |c_j|^2 = sum_j |u_hat|^2 * delta_xi`.
//!
//! The unpaired Nyquist mode (`j = -n/2`) is zeroed by every multiplier and
//! projection; the plain FFT round trip keeps it, so transforms stay unitary.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A dyadic number `2^j` with integer exponent, used for Littlewood-Paley
/// shells, modulation scales and bilinear restriction scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dyadic(pub i32);

impl Dyadic {
    pub fn value(self) -> f64 {
        (self.0 as f64).exp2()
    }

    /// The dyadic number closest to `v` from below (`2^floor(log2 v)`).
    pub fn floor_of(v: f64) -> Dyadic {
        Dyadic(v.log2().floor() as i32)
    }

    /// The smallest dyadic number `>= v`.
    pub fn ceil_of(v: f64) -> Dyadic {
        Dyadic(v.log2().ceil() as i32)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Periodic grid with `n` points on `[0, period)` and its FFT plans.
///
/// Grids are immutable; the FFT plans are internally synchronized and the
/// whole struct is shared behind an `Arc` so fields can be used from
/// parallel workers.
pub struct SpectralGrid {
    n: usize,
    period: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.period == other.period
    }
}

impl SpectralGrid {
    pub fn new(n: usize, period: f64) -> Result<Arc<Self>> {
        if !n.is_power_of_two() || n < 16 {
            return Err(Error::Grid(format!(
                "point count must be a power of two >= 16, got {n}"
            )));
        }
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::Grid(format!("period must be positive, got {period}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(SpectralGrid {
            n,
            period,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Wavenumber spacing `2 pi / period`.
    pub fn delta_xi(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Largest representable wavenumber magnitude `pi / dx`.
    pub fn nyquist(&self) -> f64 {
        PI / self.dx()
    }

    /// Signed lattice index of FFT slot `idx` (`-n/2 .. n/2-1`).
    pub fn mode_index(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Wavenumber of FFT slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.mode_index(idx) as f64 * self.delta_xi()
    }

    /// All wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// FFT slot of a signed lattice index, if representable.
    pub fn slot_of_mode(&self, j: i64) -> Option<usize> {
        let half = self.n as i64 / 2;
        if j >= -half && j < half {
            Some(j.rem_euclid(self.n as i64) as usize)
        } else {
            None
        }
    }

    /// Sample positions `x_k`.
    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|k| k as f64 * self.dx()).collect()
    }

    /// True when the dyadic shell `N` fits strictly below the Nyquist wavenumber.
    pub fn shell_resolvable(&self, n: Dyadic) -> bool {
        2.0 * n.value() < self.nyquist()
    }

    /// All resolvable shells with `N >= 1` on this grid.
    pub fn resolvable_shells(&self) -> Vec<Dyadic> {
        (0..)
            .map(Dyadic)
            .take_while(|d| self.shell_resolvable(*d))
            .collect()
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Free-function constructor, convenient for one-liners.
pub fn make_grid(n: usize, period: f64) -> Result<Arc<SpectralGrid>> {
    SpectralGrid::new(n, period)
}

/// A dyadic frequency shell on a concrete grid.
#[derive(Debug, Clone, Copy)]
pub struct DyadicShell {
    pub n: Dyadic,
    pub resolvable: bool,
}

impl DyadicShell {
    pub fn new(grid: &SpectralGrid, n: Dyadic) -> Self {
        DyadicShell {
            n,
            resolvable: grid.shell_resolvable(n),
        }
    }
}

/// The Littlewood-Paley cutoff profile `phi`: even, `phi = 1` on `|r| <= 1`,
/// `phi = 0` on `|r| >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BumpProfile {
    /// `exp(1 - 1/(1 - (|r|-1)^2))` bridge on `1 < |r| < 2` (C-infinity).
    #[default]
    Smooth,
    /// Indicator of `|r| <= 1`; shells become half-open dyadic blocks.
    Sharp,
}

impl BumpProfile {
    pub fn phi(self, r: f64) -> f64 {
        let r = r.abs();
        match self {
            BumpProfile::Smooth => {
                if r <= 1.0 {
                    1.0
                } else if r >= 2.0 {
                    0.0
                } else {
                    let t = r - 1.0;
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            }
            BumpProfile::Sharp => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Shell symbol `psi_N(r) = phi(r/N) - phi(2r/N)`.
    pub fn psi(self, r: f64, n: Dyadic) -> f64 {
        let nv = n.value();
        self.phi(r / nv) - self.phi(2.0 * r / nv)
    }
}

/// Complex samples of a field on a shared grid.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn from_samples(grid: Arc<SpectralGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Grid(format!(
                "sample count {} does not match grid size {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(ComplexField { grid, values })
    }

    /// Build a field from Fourier-series coefficients in FFT order.
    pub fn from_coefficients(grid: Arc<SpectralGrid>, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::Grid(format!(
                "coefficient count {} does not match grid size {}",
                coeffs.len(),
                grid.n()
            )));
        }
        for c in coeffs.iter_mut() {
            *c *= grid.n() as f64;
        }
        grid.fft_inverse(&mut coeffs);
        Ok(ComplexField {
            grid,
            values: coeffs,
        })
    }

    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.n();
        ComplexField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Evaluate `f(x)` on the grid from a closure.
    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let dx = grid.dx();
        let values = (0..grid.n()).map(|k| f(k as f64 * dx)).collect();
        ComplexField { grid, values }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Fourier-series coefficients `c_j` in FFT order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        self.grid.fft_forward(&mut buf);
        let scale = 1.0 / self.grid.n() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }

    pub fn l2_norm(&self) -> f64 {
        let dx = self.grid.dx();
        (dx * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `L^p` norm by periodic trapezoid quadrature (exact weights on a
    /// uniform periodic grid); `p = infinity` is the grid maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.linf_norm();
        }
        let dx = self.grid.dx();
        (dx * self.values.iter().map(|v| v.norm().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    pub fn conj(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.check_same_grid(other)?;
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.check_same_grid(other)?;
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Pointwise product (no dealiasing; callers needing exact polynomial
    /// products go through `nonlinearity::evaluate_nonlinearity`).
    pub fn mul_pointwise(&self, other: &ComplexField) -> Result<ComplexField> {
        self.check_same_grid(other)?;
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::GridMismatch(self.grid.n(), other.grid.n()));
        }
        Ok(())
    }

    /// `|edge sample| / peak` ratio used as a locality diagnostic.
    pub fn boundary_amplitude_ratio(&self) -> f64 {
        let peak = self.linf_norm();
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self.values[self.grid.n() - 1]
            .norm()
            .max(self.values[0].norm());
        edge / peak
    }

    /// Fraction of spectral mass with `|xi|` inside `[lo, hi]`.
    pub fn spectral_mass_fraction(&self, lo: f64, hi: f64) -> f64 {
        let coeffs = self.coefficients();
        let mut inside = 0.0;
        let mut total = 0.0;
        for (idx, c) in coeffs.iter().enumerate() {
            let xi = self.grid.wavenumber(idx).abs();
            let m = c.norm_sqr();
            total += m;
            if xi >= lo && xi <= hi {
                inside += m;
            }
        }
        if total == 0.0 {
            1.0
        } else {
            inside / total
        }
    }
}

/// Symbols accepted by [`fourier_multiplier`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierSymbol {
    /// `(i xi)^k`
    Derivative(u32),
    /// `|xi|^s`, zero mode mapped to 0 (mean-free convention for `s < 0`).
    FracHomogeneous(f64),
    /// `(1 + |xi|)^s`
    FracInhomogeneous(f64),
}

/// Apply a Fourier multiplier. The Nyquist mode is zeroed.
pub fn fourier_multiplier(f: &ComplexField, symbol: MultiplierSymbol) -> Result<ComplexField> {
    match symbol {
        MultiplierSymbol::FracHomogeneous(s) | MultiplierSymbol::FracInhomogeneous(s) => {
            if !s.is_finite() {
                return Err(Error::Parameter(format!("non-finite exponent {s}")));
            }
        }
        MultiplierSymbol::Derivative(_) => {}
    }
    let grid = f.grid().clone();
    let mut coeffs = f.coefficients();
    let nyq_slot = grid.n() / 2;
    for (idx, c) in coeffs.iter_mut().enumerate() {
        if idx == nyq_slot {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let xi = grid.wavenumber(idx);
        *c *= match symbol {
            MultiplierSymbol::Derivative(k) => Complex64::new(0.0, xi).powu(k),
            MultiplierSymbol::FracHomogeneous(s) => {
                if xi == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(xi.abs().powf(s), 0.0)
                }
            }
            MultiplierSymbol::FracInhomogeneous(s) => Complex64::new((1.0 + xi.abs()).powf(s), 0.0),
        };
    }
    ComplexField::from_coefficients(grid, coeffs)
}

/// Spectral derivative `d^k/dx^k`.
pub fn derivative(f: &ComplexField, k: u32) -> ComplexField {
    fourier_multiplier(f, MultiplierSymbol::Derivative(k)).expect("derivative cannot fail")
}

/// Projections accepted by [`lp_project`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Dyadic shell `psi_N(|xi|)`.
    Shell(Dyadic),
    /// Low-pass `phi(|xi|/N)`.
    Low(Dyadic),
    /// High-pass `1 - phi(|xi|/N)`.
    High(Dyadic),
    /// Indicator of `xi >= 0`.
    Plus,
    /// Indicator of `xi <= 0`.
    Minus,
}

/// Littlewood-Paley / sign projection. Unresolvable shells are an explicit
/// error, never a silent truncation.
pub fn lp_project(f: &ComplexField, projection: Projection, bump: BumpProfile) -> Result<ComplexField> {
    let grid = f.grid().clone();
    if let Projection::Shell(n) | Projection::Low(n) | Projection::High(n) = projection {
        if !grid.shell_resolvable(n) {
            return Err(Error::Resolution(format!(
                "shell N={} not resolvable: 2N must stay below the Nyquist wavenumber {:.3}",
                n,
                grid.nyquist()
            )));
        }
    }
    let mut coeffs = f.coefficients();
    let nyq_slot = grid.n() / 2;
    for (idx, c) in coeffs.iter_mut().enumerate() {
        if idx == nyq_slot {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let xi = grid.wavenumber(idx);
        let w = match projection {
            Projection::Shell(n) => bump.psi(xi.abs(), n),
            Projection::Low(n) => bump.phi(xi.abs() / n.value()),
            Projection::High(n) => 1.0 - bump.phi(xi.abs() / n.value()),
            Projection::Plus => {
                if xi >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Projection::Minus => {
                if xi <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        *c *= w;
    }
    ComplexField::from_coefficients(grid, coeffs)
}

/// Sobolev norm: `||<xi>^s u_hat||` (inhomogeneous, `<xi> = 1 + |xi|`) or
/// `|||xi|^s u_hat||` (homogeneous, zero mode dropped), as a quadrature over
/// the wavenumber lattice.
pub fn sobolev_norm(f: &ComplexField, s: f64, homogeneous: bool) -> f64 {
    let grid = f.grid();
    let coeffs = f.coefficients();
    let mut acc = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let xi = grid.wavenumber(idx).abs();
        let w = if homogeneous {
            if xi == 0.0 {
                continue;
            }
            xi.powf(2.0 * s)
        } else {
            (1.0 + xi).powf(2.0 * s)
        };
        acc += w * c.norm_sqr();
    }
    (grid.period() * acc).sqrt()
}
