//! Spectral representation of real 1-periodic functions.
//!
//! A [`PeriodicMap`] carries both truncated Fourier coefficients (modes
//! |p| <= N) and M uniform grid samples, kept consistent through the DFT.
//! Small-divisor division happens on coefficients; compositions and logs
//! happen on the grid.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub const DEFAULT_N: usize = 64;
pub const DEFAULT_M: usize = 256;

/// Relative magnitude below which a Fourier mode is treated as absent.
const MODE_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone)]
pub struct PeriodicMap {
    /// c_p for p = -N..=N, stored at index p + N. c_{-p} = conj(c_p).
    coeffs: Vec<Complex64>,
    /// Samples at x_j = j/M.
    grid: Vec<f64>,
    n: usize,
    m: usize,
    /// Cached nonzero positive modes (p, c_p) for fast point evaluation.
    active: Vec<(i64, Complex64)>,
}

fn fft_forward(data: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(data.len()).process(data);
}

fn fft_inverse(data: &mut [Complex64]) {
    FftPlanner::new().plan_fft_inverse(data.len()).process(data);
}

impl PeriodicMap {
    pub fn zero(n: usize, m: usize) -> Self {
        Self::from_coeffs(&vec![Complex64::ZERO; 2 * n + 1], m)
    }

    pub fn constant(c: f64, n: usize, m: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; 2 * n + 1];
        coeffs[n] = Complex64::new(c, 0.0);
        Self::from_coeffs(&coeffs, m)
    }

    /// Build from coefficients c_p, p = -N..=N (slice of length 2N+1).
    /// Realness is enforced by Hermitian symmetrization.
    pub fn from_coeffs(coeffs: &[Complex64], m: usize) -> Self {
        assert!(coeffs.len() % 2 == 1, "coeffs must cover p = -N..=N");
        let n = coeffs.len() / 2;
        assert!(m >= 4 * n.max(1), "need M >= 4N");
        assert!(m.is_power_of_two(), "grid size must be a power of two");
        let mut c = vec![Complex64::ZERO; 2 * n + 1];
        c[n] = Complex64::new(coeffs[n].re, 0.0);
        for p in 1..=n {
            let avg = 0.5 * (coeffs[n + p] + coeffs[n - p].conj());
            c[n + p] = avg;
            c[n - p] = avg.conj();
        }
        let grid = Self::grid_from_coeffs(&c, n, m);
        let active = Self::collect_active(&c, n);
        PeriodicMap { coeffs: c, grid, n, m, active }
    }

    /// Build from M real samples at x_j = j/M, truncating to degree n.
    /// Assumes the data is (numerically) band-limited to |p| <= n; use
    /// [`fit_from_fn`] when that is not known a priori.
    pub fn from_grid(grid: Vec<f64>, n: usize) -> Self {
        let m = grid.len();
        assert!(m >= 4 * n.max(1) && m.is_power_of_two());
        let mut buf: Vec<Complex64> =
            grid.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&mut buf);
        let scale = 1.0 / m as f64;
        let mut coeffs = vec![Complex64::ZERO; 2 * n + 1];
        coeffs[n] = buf[0] * scale;
        for p in 1..=n {
            coeffs[n + p] = buf[p] * scale;
            coeffs[n - p] = buf[m - p] * scale;
        }
        Self::from_coeffs(&coeffs, m)
    }

    pub fn from_fn(f: impl Fn(f64) -> f64, n: usize, m: usize) -> Self {
        let grid: Vec<f64> = (0..m).map(|j| f(j as f64 / m as f64)).collect();
        Self::from_grid(grid, n)
    }

    /// Least-aliasing fit: sample `f` on a 2M grid, transform, keep modes
    /// |p| <= n. Returns the map and the l1 mass of the dropped tail, which
    /// bounds the sup-norm projection error.
    pub fn fit_from_fn(f: impl Fn(f64) -> f64, n: usize, m: usize) -> (Self, f64) {
        let big = 2 * m;
        let samples: Vec<f64> = (0..big).map(|j| f(j as f64 / big as f64)).collect();
        Self::fit_from_oversampled(&samples, n, m)
    }

    /// As [`fit_from_fn`] but from pre-computed samples on the 2M grid.
    pub fn fit_from_oversampled(samples: &[f64], n: usize, m: usize) -> (Self, f64) {
        let big = 2 * m;
        assert_eq!(samples.len(), big);
        let mut buf: Vec<Complex64> =
            samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&mut buf);
        let scale = 1.0 / big as f64;
        let mut coeffs = vec![Complex64::ZERO; 2 * n + 1];
        coeffs[n] = buf[0] * scale;
        for p in 1..=n {
            coeffs[n + p] = buf[p] * scale;
            coeffs[n - p] = buf[big - p] * scale;
        }
        let mut tail = 0.0;
        for p in (n + 1)..=(big / 2) {
            tail += (buf[p] * scale).norm();
            if p < big / 2 {
                tail += (buf[big - p] * scale).norm();
            }
        }
        (Self::from_coeffs(&coeffs, m), tail)
    }

    fn grid_from_coeffs(coeffs: &[Complex64], n: usize, m: usize) -> Vec<f64> {
        let mut buf = vec![Complex64::ZERO; m];
        buf[0] = coeffs[n];
        for p in 1..=n {
            buf[p] = coeffs[n + p];
            buf[m - p] = coeffs[n - p];
        }
        fft_inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    fn collect_active(coeffs: &[Complex64], n: usize) -> Vec<(i64, Complex64)> {
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let floor = MODE_FLOOR * max;
        (1..=n)
            .filter(|&p| coeffs[n + p].norm() > floor)
            .map(|p| (p as i64, coeffs[n + p]))
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Fourier coefficient c_p (0 outside |p| <= N).
    pub fn coeff(&self, p: i64) -> Complex64 {
        let n = self.n as i64;
        if p.abs() > n {
            Complex64::ZERO
        } else {
            self.coeffs[(p + n) as usize]
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[self.n].re
    }

    /// phi(x) via the cached nonzero modes.
    pub fn eval(&self, x: f64) -> f64 {
        let mut s = self.coeffs[self.n].re;
        for &(p, c) in &self.active {
            let ang = std::f64::consts::TAU * p as f64 * x;
            let (sin, cos) = ang.sin_cos();
            s += 2.0 * (c.re * cos - c.im * sin);
        }
        s
    }

    /// phi'(x).
    pub fn eval_deriv(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for &(p, c) in &self.active {
            let w = std::f64::consts::TAU * p as f64;
            let ang = w * x;
            let (sin, cos) = ang.sin_cos();
            // d/dx 2 Re(c e^{iwx}) = -2w Re(c) sin - 2w Im(c) cos
            s -= 2.0 * w * (c.re * sin + c.im * cos);
        }
        s
    }

    /// (phi(x), phi'(x)) in one pass.
    pub fn eval_both(&self, x: f64) -> (f64, f64) {
        let mut v = self.coeffs[self.n].re;
        let mut d = 0.0;
        for &(p, c) in &self.active {
            let w = std::f64::consts::TAU * p as f64;
            let ang = w * x;
            let (sin, cos) = ang.sin_cos();
            v += 2.0 * (c.re * cos - c.im * sin);
            d -= 2.0 * w * (c.re * sin + c.im * cos);
        }
        (v, d)
    }

    pub fn derivative(&self) -> Self {
        self.spectral_derivative(1)
    }

    pub fn spectral_derivative(&self, order: u32) -> Self {
        let n = self.n as i64;
        let coeffs: Vec<Complex64> = (-n..=n)
            .map(|p| {
                let iw = Complex64::new(0.0, std::f64::consts::TAU * p as f64);
                self.coeff(p) * iw.powu(order)
            })
            .collect();
        Self::from_coeffs(&coeffs, self.m)
    }

    /// Supremum of |d^j phi / dx^j| on the grid refined 4x by zero-padding.
    pub fn sup_deriv(&self, j: u32) -> f64 {
        let fine = 4 * self.m;
        let mut buf = vec![Complex64::ZERO; fine];
        buf[0] = self.coeffs[self.n];
        for p in 1..=self.n {
            let iw = Complex64::new(0.0, std::f64::consts::TAU * p as f64);
            let f = iw.powu(j);
            buf[p] = self.coeffs[self.n + p] * f;
            buf[fine - p] = self.coeffs[self.n - p] * f.conj();
        }
        if j > 0 {
            buf[0] = Complex64::ZERO;
        }
        fft_inverse(&mut buf);
        buf.into_iter().map(|z| z.re.abs()).fold(0.0, f64::max)
    }

    /// The C^k norm: max over j in 0..=k of sup |phi^(j)|.
    pub fn ck_norm(&self, k: u32) -> f64 {
        (0..=k).map(|j| self.sup_deriv(j)).fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_deriv(0)
    }

    /// (S_T phi, R_T phi): modes |p| <= T and |p| > T. Exact partition.
    pub fn smooth_split(&self, t: f64) -> (Self, Self) {
        assert!(t >= 0.0);
        let n = self.n as i64;
        let mut low = vec![Complex64::ZERO; 2 * self.n + 1];
        let mut high = vec![Complex64::ZERO; 2 * self.n + 1];
        for p in -n..=n {
            let idx = (p + n) as usize;
            if (p.abs() as f64) <= t {
                low[idx] = self.coeffs[idx];
            } else {
                high[idx] = self.coeffs[idx];
            }
        }
        (Self::from_coeffs(&low, self.m), Self::from_coeffs(&high, self.m))
    }

    /// phi composed with the rotation r_alpha: x -> phi(x + alpha).
    /// Exact on coefficients.
    pub fn shift(&self, alpha: f64) -> Self {
        let n = self.n as i64;
        let coeffs: Vec<Complex64> = (-n..=n)
            .map(|p| {
                let ang = std::f64::consts::TAU * p as f64 * alpha;
                self.coeff(p) * Complex64::new(0.0, ang).exp()
            })
            .collect();
        Self::from_coeffs(&coeffs, self.m)
    }

    pub fn scale(&self, s: f64) -> Self {
        let coeffs: Vec<Complex64> = self.coeffs.iter().map(|&c| c * s).collect();
        Self::from_coeffs(&coeffs, self.m)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[self.n] += c;
        Self::from_coeffs(&coeffs, self.m)
    }

    fn zip(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let n = self.n.max(other.n) as i64;
        let m = self.m.max(other.m);
        let coeffs: Vec<Complex64> =
            (-n..=n).map(|p| op(self.coeff(p), other.coeff(p))).collect();
        Self::from_coeffs(&coeffs, m)
    }

    /// Re-project to a different resolution. Truncation if n shrinks.
    pub fn with_resolution(&self, n: usize, m: usize) -> Self {
        let ni = n as i64;
        let coeffs: Vec<Complex64> = (-ni..=ni).map(|p| self.coeff(p)).collect();
        Self::from_coeffs(&coeffs, m)
    }

    /// Integral over one period of self * other (Parseval).
    pub fn dot(&self, other: &Self) -> f64 {
        let n = self.n.min(other.n) as i64;
        (-n..=n)
            .map(|p| (self.coeff(p) * other.coeff(p).conj()).re)
            .sum()
    }

    /// Quadrature of self * g evaluated grid-wise (trapezoid = exact mean on
    /// the uniform grid for band-limited integrands).
    pub fn integral(&self) -> f64 {
        self.mean()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency_roundtrip() {
        let f = PeriodicMap::from_fn(
            |x| 0.3 + (std::f64::consts::TAU * x).sin() - 0.2 * (2.0 * std::f64::consts::TAU * x).cos(),
            8,
            64,
        );
        for (j, &g) in f.grid().iter().enumerate() {
            let x = j as f64 / 64.0;
            assert!((f.eval(x) - g).abs() < 1e-12);
        }
    }
}
