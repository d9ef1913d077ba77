//! Fourier differentiation of periodic samples on a uniform grid.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// `order`-th derivative of the trigonometric interpolant of `values`,
/// sampled on `θ_j = 2πj/M`. The Nyquist mode is dropped for odd orders.
pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let m = values.len();
    if m == 0 || order == 0 {
        return values.to_vec();
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(m);
    let inverse = planner.plan_fft_inverse(m);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut buf);
    for (j, c) in buf.iter_mut().enumerate() {
        let k = if j <= m / 2 { j as i64 } else { j as i64 - m as i64 };
        if m.is_multiple_of(2) && j == m / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        *c *= Complex64::new(0.0, k as f64).powu(order);
    }
    inverse.process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn differentiates_trig_polynomials() {
        let m = 32;
        let theta: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
        let f: Vec<f64> = theta.iter().map(|t| (3.0 * t).sin() + 0.5 * (5.0 * t).cos()).collect();
        let d1 = derivative(&f, 1);
        let d2 = derivative(&f, 2);
        for (j, t) in theta.iter().enumerate() {
            let e1 = 3.0 * (3.0 * t).cos() - 2.5 * (5.0 * t).sin();
            let e2 = -9.0 * (3.0 * t).sin() - 12.5 * (5.0 * t).cos();
            assert!((d1[j] - e1).abs() < 1e-12);
            assert!((d2[j] - e2).abs() < 1e-11);
        }
    }
}
