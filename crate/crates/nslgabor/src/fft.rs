//! Thin wrapper around `rustfft` with a per-thread plan cache.
//!
//! Two normalization conventions coexist in this crate and the boundary is
//! kept explicit here:
//!
//! * `fft`/`ifft` are the raw unnormalized transforms (`ifft` carries no
//!   `1/L`), used by the transform layer where scale factors are tracked by
//!   hand.
//! * `fft_unitary`/`ifft_unitary` scale by `1/sqrt(L)` so that the operators
//!   are exactly unitary; the metaplectic layer is built on these.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static CACHE: RefCell<PlanCache> = RefCell::new(PlanCache {
        planner: FftPlanner::new(),
        forward: HashMap::new(),
        inverse: HashMap::new(),
    });
}

struct PlanCache {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn with_plan(len: usize, inverse: bool, buf: &mut [Complex64]) {
    CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let PlanCache { planner, forward, inverse: inv } = &mut *cache;
        let map = if inverse { inv } else { forward };
        let plan = map.entry(len).or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        });
        plan.process(buf);
    });
}

/// Unnormalized DFT: `X(k) = sum_l x(l) exp(-2 pi i k l / L)`.
pub fn fft(buf: &mut [Complex64]) {
    with_plan(buf.len(), false, buf);
}

/// Unnormalized inverse DFT (conjugate kernel, no `1/L` factor).
pub fn ifft(buf: &mut [Complex64]) {
    with_plan(buf.len(), true, buf);
}

/// Unitary DFT (`1/sqrt(L)` scaling).
pub fn fft_unitary(buf: &mut [Complex64]) {
    fft(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// Unitary inverse DFT (`1/sqrt(L)` scaling).
pub fn ifft_unitary(buf: &mut [Complex64]) {
    ifft(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_round_trip() {
        let n = 60;
        let f: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let mut buf = f.clone();
        fft_unitary(&mut buf);
        let norm_in: f64 = f.iter().map(|v| v.norm_sqr()).sum();
        let norm_out: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
        assert!((norm_in - norm_out).abs() < 1e-10);
        ifft_unitary(&mut buf);
        for (x, y) in f.iter().zip(&buf) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
