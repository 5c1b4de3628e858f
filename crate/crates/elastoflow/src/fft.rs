//! Low-level 2D FFT on the periodic grid.
//!
//! Normalization: the forward transform divides by N^2, so stored coefficients
//! are true Fourier-series coefficients and the inverse is plain synthesis,
//! `f(x) = sum_k c_k exp(i k.x)`. A constant field c therefore has c at
//! wavevector (0,0) and nothing else.

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLAN_CACHE: RefCell<HashMap<usize, Plans>> = RefCell::new(HashMap::new());
}

fn with_plans<T>(n: usize, op: impl FnOnce(&Plans) -> T) -> T {
    PLAN_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let plans = cache.entry(n).or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        });
        op(plans)
    })
}

/// In-place 2D transform of a row-major n-by-n buffer; `forward` selects the sign.
fn fft_2d(buf: &mut [Complex<f64>], n: usize, forward: bool) {
    debug_assert_eq!(buf.len(), n * n);
    with_plans(n, |(fw, bw)| {
        let plan = if forward { fw } else { bw };
        // rows
        for row in buf.chunks_exact_mut(n) {
            plan.process(row);
        }
        // columns, through a scratch line
        let mut col = vec![Complex::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = buf[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                buf[i * n + j] = col[i];
            }
        }
    });
}

/// Physical row-major samples -> Fourier coefficients (normalized by 1/N^2).
pub fn forward(values: &[f64], n: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_2d(&mut buf, n, true);
    let scale = 1.0 / (n * n) as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Fourier coefficients -> physical samples (unnormalized synthesis, real part).
pub fn inverse(coeff: &[Complex<f64>], n: usize) -> Vec<f64> {
    let mut buf = coeff.to_vec();
    fft_2d(&mut buf, n, false);
    buf.into_iter().map(|c| c.re).collect()
}

/// Complex-to-complex forward transform, same 1/N^2 normalization. Keeping
/// the imaginary residue makes diagonal physical-space operators exactly
/// self-adjoint on the full coefficient space, which matrix-free CG needs.
pub fn forward_complex(values: &[Complex<f64>], n: usize) -> Vec<Complex<f64>> {
    let mut buf = values.to_vec();
    fft_2d(&mut buf, n, true);
    let scale = 1.0 / (n * n) as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Complex-to-complex synthesis (no normalization, no real-part discard).
pub fn inverse_complex(coeff: &[Complex<f64>], n: usize) -> Vec<Complex<f64>> {
    let mut buf = coeff.to_vec();
    fft_2d(&mut buf, n, false);
    buf
}

/// Signed integer frequency of FFT bin `bin` on an N-point axis.
pub fn frequency(bin: usize, n: usize) -> i64 {
    if bin <= n / 2 {
        bin as i64
    } else {
        bin as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_lands_on_zero_mode() {
        let n = 8;
        let values = vec![3.25; n * n];
        let coeff = forward(&values, n);
        assert!((coeff[0].re - 3.25).abs() < 1e-14);
        assert!(coeff[0].im.abs() < 1e-14);
        for c in &coeff[1..] {
            assert!(c.norm() < 1e-13);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let n = 16;
        let values: Vec<f64> = (0..n * n)
            .map(|i| ((i * 37 + 11) % 101) as f64 / 101.0 - 0.5)
            .collect();
        let back = inverse(&forward(&values, n), n);
        for (a, b) in values.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn frequency_layout_matches_fft_convention() {
        assert_eq!(frequency(0, 8), 0);
        assert_eq!(frequency(3, 8), 3);
        assert_eq!(frequency(4, 8), 4); // Nyquist kept positive
        assert_eq!(frequency(5, 8), -3);
        assert_eq!(frequency(7, 8), -1);
    }
}
