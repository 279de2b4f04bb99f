//! 2D FFT helpers on square grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Signed integer wavenumber of FFT bin `i` on an `n`-point axis.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Planned forward and inverse transforms for an `n x n` grid.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        fft.process(data);
        transpose_in_place(data, n);
        fft.process(data);
        transpose_in_place(data, n);
    }

    /// Unnormalized forward transform of a real row-major field.
    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, self.forward.as_ref());
        data
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, self.forward.as_ref());
    }

    /// Normalized inverse transform in place (divides by `n²`).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, self.inverse.as_ref());
        let scale = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Inverse transform returning the real part and the largest imaginary residue.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> (Vec<f64>, f64) {
        let mut data = spectrum.to_vec();
        self.inverse(&mut data);
        let max_imag = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        (data.into_iter().map(|c| c.re).collect(), max_imag)
    }
}

fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let n = 8;
        let fft = Fft2::new(n);
        let values: Vec<f64> = (0..n * n).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let spec = fft.forward_real(&values);
        let (back, imag) = fft.inverse_real(&spec);
        assert!(imag < 1e-12);
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_in_its_bin() {
        let n = 16;
        let fft = Fft2::new(n);
        // cos(2 pi * 3 x / n) along columns (x), constant along rows.
        let values: Vec<f64> = (0..n * n)
            .map(|i| (2.0 * std::f64::consts::PI * 3.0 * (i % n) as f64 / n as f64).cos())
            .collect();
        let spec = fft.forward_real(&values);
        let (r, c) = (0, 3);
        assert!((spec[r * n + c].re - (n * n) as f64 / 2.0).abs() < 1e-9);
        assert_eq!(wavenumber(3, n), 3);
        assert_eq!(wavenumber(n - 3, n), -3);
    }
}
