//! FFT-backed application of the unnormalized DFT `W` and its inverse `W⁻¹ = Wᴴ/N`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned forward/inverse transforms of one size.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place `x ← W·x`, with `[W]_{k,n} = e^{-j2πkn/N}`.
    pub fn forward(&self, x: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        self.fwd.process(x);
    }

    /// In place `x ← W⁻¹·x`, with `[W⁻¹]_{k,n} = e^{+j2πkn/N}/N`.
    pub fn inverse(&self, x: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        self.inv.process(x);
        let scale = 1.0 / self.n as f64;
        x.iter_mut().for_each(|v| *v *= scale);
    }
}
