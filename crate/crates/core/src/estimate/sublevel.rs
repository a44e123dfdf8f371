//! Monte Carlo sublevel-set measures `|{x in [-r,r]^n : |b(x)| < eps}|` and
//! the least-squares fit of the asymptotic model
//!
//! ```text
//! log V(eps) = log c + delta * log eps + (m - 1) * log log(1/eps).
//! ```
//!
//! The ball of the continuous statement is replaced by the box so the
//! closed-form oracles (`4 eps (1 + ln(1/eps))` for `x1 x2`, `pi eps` for
//! `x1^2 + x2^2`) stay exact; the fitted exponent pair is insensitive to
//! that swap.

use rand::Rng;
use serde::Serialize;

use crate::estimate::EstimateError;
use crate::poly::MultiPoly;
use crate::util::{fit3, substream};

/// `count` log-spaced values from `hi` down to `lo`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && lo < hi && count >= 2);
    let ratio = (lo / hi).powf(1.0 / (count - 1) as f64);
    let mut eps = hi;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(eps);
        eps *= ratio;
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SublevelPoint {
    pub eps: f64,
    pub measure: f64,
    pub stderr: f64,
}

/// Plain Monte Carlo estimate with its binomial standard error.
pub fn sublevel_measure(
    b: &MultiPoly,
    radius: f64,
    eps: f64,
    samples: u64,
    seed: u64,
) -> SublevelPoint {
    assert!(radius > 0.0 && eps > 0.0);
    assert!(samples >= 10_000, "error bars meaningless below 1e4 samples");
    let mut rng = substream(seed, &format!("sublevel-{eps:e}"));
    let n = b.nvars();
    let mut x = vec![0.0f64; n];
    let mut hits = 0u64;
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = rng.gen_range(-radius..radius);
        }
        if b.eval(&x).abs() < eps {
            hits += 1;
        }
    }
    let vol = (2.0 * radius).powi(n as i32);
    let p = hits as f64 / samples as f64;
    SublevelPoint {
        eps,
        measure: vol * p,
        stderr: vol * (p * (1.0 - p) / samples as f64).sqrt(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SublevelFit {
    pub points: Vec<SublevelPoint>,
    /// Epsilons where the estimate was exactly zero, excluded from the fit.
    pub dropped: Vec<f64>,
    pub log_c: f64,
    pub delta_hat: f64,
    /// Exponent of the `log log` regressor, the `m - 1` of the model.
    pub log_power_hat: f64,
    pub delta_stderr: f64,
    pub log_power_stderr: f64,
}

/// Measures the grid and fits the three-parameter model by weighted least
/// squares, each point weighted by its reported relative standard error.
///
/// The grid must span at least three decades (otherwise the two log
/// regressors are nearly collinear) and stay below `1/e` so that
/// `log log(1/eps)` is positive. The weighting matters: the deepest points
/// carry few Monte Carlo hits, and unweighted they sling the collinear
/// log coefficients around.
pub fn fit_sublevel_asymptotics(
    b: &MultiPoly,
    radius: f64,
    eps_grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<SublevelFit, EstimateError> {
    let hi = eps_grid.iter().cloned().fold(f64::MIN, f64::max);
    let lo = eps_grid.iter().cloned().fold(f64::MAX, f64::min);
    // 999 not 1e3: a nominal 3-decade grid like 1e-5..1e-2 divides to
    // 999.9999999999999 in floating point
    assert!(hi / lo > 999.0, "grid must span >= 3 decades");
    assert!(hi < 1.0 / std::f64::consts::E, "model needs eps < 1/e");

    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for &eps in eps_grid {
        let p = sublevel_measure(b, radius, eps, samples, seed);
        if p.measure > 0.0 {
            points.push(p);
        } else {
            dropped.push(eps);
        }
    }
    if points.len() < 4 {
        return Err(EstimateError::NotEnoughPoints {
            have: points.len(),
            need: 4,
        });
    }
    let mut rows = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for p in &points {
        // relative stderr is the noise scale of log(measure); the floor
        // keeps an exactly-full box (stderr 0) from getting infinite weight
        let w = 1.0 / (p.stderr / p.measure).max(1e-6);
        rows.push([w, w * p.eps.ln(), w * (1.0 / p.eps).ln().ln()]);
        ys.push(w * p.measure.ln());
    }
    let (c, se) = fit3(&rows, &ys);
    Ok(SublevelFit {
        points,
        dropped,
        log_c: c[0],
        delta_hat: c[1],
        log_power_hat: c[2],
        delta_stderr: se[1],
        log_power_stderr: se[2],
    })
}
