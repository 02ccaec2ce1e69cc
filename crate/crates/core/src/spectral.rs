use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Real-to-complex transforms along one periodic φ row and the spectral
/// weights λ_k = min(k, n−k)² of the trigonometric derivative.
#[derive(Clone)]
pub struct PhiTransform {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    lambda: Vec<f64>,
}

impl fmt::Debug for PhiTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiTransform").field("n", &self.n).finish()
    }
}

impl PhiTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let lambda = (0..n)
            .map(|k| {
                let w = k.min(n - k) as f64;
                w * w
            })
            .collect();
        PhiTransform {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            lambda,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Unnormalized DFT X_k = Σ_i v_i e^{−2πi ik/n}.
    pub fn forward(&self, row: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = row.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Unnormalized inverse DFT, real part.
    pub fn inverse(&self, spec: &[Complex<f64>]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    pub fn inverse_complex(&self, spec: &mut [Complex<f64>]) {
        self.inverse.process(spec);
    }

    /// Σ_k λ_k |X_k|².
    pub fn weighted_power(&self, spec: &[Complex<f64>]) -> f64 {
        spec.iter().zip(&self.lambda).map(|(c, l)| l * c.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn first_harmonic_has_unit_weight() {
        let n = 16;
        let t = PhiTransform::new(n);
        let row: Vec<f64> = (0..n).map(|i| (TAU * i as f64 / n as f64).cos()).collect();
        let spec = t.forward(&row);
        // derivative mass: ∫ sin² = π = (2π/n²) Σ λ|X|²
        let mass = TAU / (n * n) as f64 * t.weighted_power(&spec);
        assert!((mass - std::f64::consts::PI).abs() < 1e-13);
        let back = t.inverse(&spec);
        for (a, b) in row.iter().zip(&back) {
            assert!((a - b / n as f64).abs() < 1e-14);
        }
        assert_eq!(t.lambda()[n / 2], 64.0);
        assert_eq!(t.lambda()[n - 3], 9.0);
    }
}
