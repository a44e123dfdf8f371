//! Discrete L² harness for the truncated convolution operator
//! `f -> K_L * f` on a periodic box.
//!
//! The kernel and a Gaussian input are sampled on a uniform grid over
//! `[-1/2, 1/2)^n`, the convolution is done with the FFT, and the output
//! norm is computed twice: once in space from the inverse transform and
//! once in frequency via Parseval. The two must agree to rounding error;
//! their ratio against the input norm is the quantity whose stability in
//! `L` reflects the uniform multiplier bound.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::EstimateError;
use crate::kernel::Kernel;

#[derive(Debug, Clone, Copy)]
pub struct OperatorOptions {
    /// Grid points per axis. The step is `1/grid`, and must satisfy
    /// `step <= 2^{-level}/4` so the innermost retained shell is resolved.
    pub grid: usize,
    /// Width of the Gaussian test input `exp(-|x|^2 / (2 sigma^2))`.
    pub sigma: f64,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        OperatorOptions {
            grid: 4096,
            sigma: 0.055,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorResult {
    pub level: i32,
    pub grid: usize,
    pub step: f64,
    pub l2_in: f64,
    pub l2_out_space: f64,
    pub l2_out_freq: f64,
    /// `h^n * sum(u)`; the kernel grid is exactly odd under index
    /// negation, so this is zero up to FFT rounding.
    pub integral_u: f64,
}

impl OperatorResult {
    pub fn ratio(&self) -> f64 {
        self.l2_out_space / self.l2_in
    }
}

/// Apply the level-`L` truncated operator to a centered Gaussian and
/// report input/output L² norms. Supports one and two variables.
pub fn apply_operator(
    kernel: &Kernel,
    level: i32,
    opts: &OperatorOptions,
) -> Result<OperatorResult, EstimateError> {
    let n = kernel.nvars();
    if n > 2 {
        return Err(EstimateError::UnsupportedDimension { nvars: n, max: 2 });
    }
    let size = opts.grid;
    assert!(size >= 8, "grid too small to mean anything");
    let h = 1.0 / size as f64;
    if level >= kernel.min_level() {
        let required = 2f64.powi(-level) / 4.0;
        if h > required {
            return Err(EstimateError::ResolutionTooCoarse {
                step: h,
                required,
                level,
            });
        }
    }

    let xs: Vec<f64> = (0..size).map(|i| -0.5 + i as f64 * h).collect();
    let trunc = kernel.truncate(level);
    let inv_two_sigma_sq = 1.0 / (2.0 * opts.sigma * opts.sigma);

    let total = size.pow(n as u32);
    let mut fgrid = vec![Complex64::new(0.0, 0.0); total];
    let mut kgrid = vec![Complex64::new(0.0, 0.0); total];
    match n {
        1 => {
            for (i, &x) in xs.iter().enumerate() {
                fgrid[i] = Complex64::new((-x * x * inv_two_sigma_sq).exp(), 0.0);
                kgrid[i] = Complex64::new(trunc.eval(&[x]), 0.0);
            }
        }
        2 => {
            for (r, &x1) in xs.iter().enumerate() {
                let g1 = (-x1 * x1 * inv_two_sigma_sq).exp();
                let row = &mut fgrid[r * size..(r + 1) * size];
                let krow = &mut kgrid[r * size..(r + 1) * size];
                for (c, &x2) in xs.iter().enumerate() {
                    row[c] = Complex64::new(g1 * (-x2 * x2 * inv_two_sigma_sq).exp(), 0.0);
                    krow[c] = Complex64::new(trunc.eval(&[x1, x2]), 0.0);
                }
            }
        }
        _ => unreachable!(),
    }

    let hn = h.powi(n as i32);
    let l2_in = hn.sqrt() * norm_sq(&fgrid).sqrt();

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    transform(&mut fgrid, size, n, &forward);
    transform(&mut kgrid, size, n, &forward);

    // khat := fhat * khat, which is DFT(u) / h^n by the convolution theorem
    for (k, f) in kgrid.iter_mut().zip(fgrid.iter()) {
        *k *= f;
    }
    drop(fgrid);
    let nn = total as f64;
    // discrete Parseval: sum |u_i|^2 = (1/N^n) sum |uhat_k|^2, uhat = h^n F G
    let l2_out_freq = hn.sqrt() * hn * (norm_sq(&kgrid) / nn).sqrt();

    transform(&mut kgrid, size, n, &inverse);
    let scale = hn / nn;
    let mut sum_sq = 0.0;
    let mut sum = 0.0;
    for u in &kgrid {
        let v = u.re * scale;
        sum_sq += v * v;
        sum += v;
    }
    let l2_out_space = hn.sqrt() * sum_sq.sqrt();
    let integral_u = hn * sum;

    Ok(OperatorResult {
        level,
        grid: size,
        step: h,
        l2_in,
        l2_out_space,
        l2_out_freq,
        integral_u,
    })
}

fn norm_sq(data: &[Complex64]) -> f64 {
    data.iter().map(|z| z.norm_sqr()).sum()
}

/// Unnormalized FFT of a flat row-major array along every axis.
fn transform(data: &mut [Complex64], size: usize, n: usize, fft: &Arc<dyn Fft<f64>>) {
    match n {
        1 => fft.process(data),
        2 => {
            for row in data.chunks_exact_mut(size) {
                fft.process(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); size];
            for c in 0..size {
                for r in 0..size {
                    col[r] = data[r * size + c];
                }
                fft.process(&mut col);
                for r in 0..size {
                    data[r * size + c] = col[r];
                }
            }
        }
        _ => unreachable!(),
    }
}
