//! Dyadic rectangles and the two shell-integral estimators for
//! `int_R |b|^(-delta0)`: direct Monte Carlo, and the distribution-function
//! identity
//!
//! ```text
//! int_R |b|^(-d) = d * int_0^inf t^(d-1) |{x in R : |b(x)| < 1/t}| dt
//! ```
//!
//! evaluated with an analytic head below `1/sup|b|` (where the inner measure
//! is all of `R`) and panel quadrature in `log t` above it, each quadrature
//! node getting a fresh Monte Carlo batch. Agreement of the two estimators
//! is an internal consistency check, not a tautology: they share no samples.

use num_traits::ToPrimitive;
use rand::Rng;
use serde::Serialize;

use crate::newton::NewtonPolyhedron;
use crate::poly::MultiPoly;
use crate::quad::gauss_legendre;
use crate::util::substream;

/// `{x : 2^(-j_l) < sign_l * x_l < 2^(1-j_l)}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DyadicRect {
    pub j: Vec<i32>,
    pub signs: Vec<i8>,
}

impl DyadicRect {
    pub fn new(j: Vec<i32>, signs: Vec<i8>) -> Self {
        assert_eq!(j.len(), signs.len());
        assert!(signs.iter().all(|&s| s == 1 || s == -1));
        DyadicRect { j, signs }
    }

    pub fn positive(j: &[i32]) -> Self {
        DyadicRect::new(j.to_vec(), vec![1; j.len()])
    }

    pub fn nvars(&self) -> usize {
        self.j.len()
    }

    pub fn volume(&self) -> f64 {
        self.j.iter().map(|&j| 2f64.powi(-j)).product()
    }

    /// Absolute-value interval of axis `l`.
    pub fn side(&self, l: usize) -> (f64, f64) {
        (2f64.powi(-self.j[l]), 2f64.powi(1 - self.j[l]))
    }

    pub fn contained_in_ball(&self, r: f64) -> bool {
        let far: f64 = (0..self.nvars()).map(|l| self.side(l).1.powi(2)).sum();
        far.sqrt() <= r
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.nvars())
            .map(|l| {
                let (lo, hi) = self.side(l);
                self.signs[l] as f64 * rng.gen_range(lo..hi)
            })
            .collect()
    }
}

/// Fraction of the rectangle where `|b| < eps * b*`, `b*` the vertex
/// monomial majorant. Zero when `b` is comparable to `b*` on the rectangle;
/// scales like `eps^(1/p)` when the face zero set crosses it.
pub fn near_zero_fraction(
    b: &MultiPoly,
    np: &NewtonPolyhedron,
    rect: &DyadicRect,
    eps: f64,
    samples: u64,
    seed: u64,
) -> f64 {
    assert!(eps > 0.0 && samples > 0);
    let mut rng = substream(seed, "near-zero");
    let mut hits = 0u64;
    for _ in 0..samples {
        let x = rect.sample(&mut rng);
        if b.eval(&x).abs() < eps * np.monomial_majorant(&x) {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

/// Sampled sup of `|x1...xn| * b*(x)^(-delta0)` over the unit box. The
/// diagonal point `(d,...,d)` of the polyhedron makes this <= 1 exactly;
/// the sampled value should sit near its true sup under resampling.
pub fn majorant_diagonal_sup(np: &NewtonPolyhedron, samples: u64, seed: u64) -> f64 {
    let delta0 = np.critical_exponent().to_f64().unwrap();
    let n = np.nvars();
    let mut rng = substream(seed, "majorant-diagonal");
    let mut sup = 0.0f64;
    let mut x = vec![0.0f64; n];
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = rng.gen_range(-1.0..1.0);
        }
        let prod: f64 = x.iter().map(|t| t.abs()).product();
        let maj = np.monomial_majorant(&x);
        if maj > 0.0 {
            sup = sup.max(prod * maj.powf(-delta0));
        }
    }
    sup
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShellIntegralEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Set when stderr/value > 10%: the estimate needs a bigger budget.
    pub high_variance: bool,
}

fn flag(value: f64, stderr: f64) -> ShellIntegralEstimate {
    ShellIntegralEstimate {
        value,
        stderr,
        high_variance: stderr > 0.1 * value.abs(),
    }
}

/// Direct Monte Carlo: `|R| * mean |b(X)|^(-delta0)`.
pub fn shell_power_integral_mc(
    b: &MultiPoly,
    delta0: f64,
    rect: &DyadicRect,
    samples: u64,
    seed: u64,
) -> ShellIntegralEstimate {
    assert!(samples >= 2);
    let mut rng = substream(seed, "shell-mc");
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x = rect.sample(&mut rng);
        let g = b.eval(&x).abs().powf(-delta0);
        sum += g;
        sum_sq += g * g;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0) / (nf - 1.0);
    let vol = rect.volume();
    flag(vol * mean, vol * var.sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct DistributionOptions {
    pub panels: usize,
    pub nodes: usize,
    /// Monte Carlo batch per quadrature node; batches are independent.
    pub batch: u64,
    pub pilot: u64,
    /// Safety factor widening the pilot's range of `|b|`.
    pub margin: f64,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            panels: 12,
            nodes: 8,
            batch: 4000,
            pilot: 2000,
            margin: 2.0,
        }
    }
}

/// Distribution-function estimator. Overshooting the pilot's `sup|b|` is
/// harmless: the quadrature picks up the constant stretch the head misses.
pub fn shell_power_integral_distribution(
    b: &MultiPoly,
    delta0: f64,
    rect: &DyadicRect,
    opts: &DistributionOptions,
    seed: u64,
) -> ShellIntegralEstimate {
    assert!(delta0 > 0.0 && opts.pilot >= 2 && opts.batch >= 2);
    let mut pilot_rng = substream(seed, "dist-pilot");
    let mut b_max = f64::MIN;
    let mut b_min = f64::MAX;
    for _ in 0..opts.pilot {
        let v = b.eval(&rect.sample(&mut pilot_rng)).abs();
        b_max = b_max.max(v);
        b_min = b_min.min(v);
    }
    assert!(b_min > 0.0, "polynomial vanishes on a sampled point");
    let b_hi = opts.margin * b_max;
    let b_lo = b_min / opts.margin;

    let vol = rect.volume();
    let head = vol * b_hi.powf(-delta0);

    let u_lo = (1.0 / b_hi).ln();
    let u_hi = (1.0 / b_lo).ln();
    let rule = gauss_legendre(opts.nodes);
    let panel_width = (u_hi - u_lo) / opts.panels as f64;
    let mut tail = 0.0;
    let mut var = 0.0;
    for panel in 0..opts.panels {
        let a = u_lo + panel as f64 * panel_width;
        let c = a + 0.5 * panel_width;
        let half = 0.5 * panel_width;
        for (node, (&z, &w)) in rule.0.iter().zip(rule.1.iter()).enumerate() {
            let t = (c + half * z).exp();
            let lambda = 1.0 / t;
            let mut rng = substream(seed, &format!("dist-node-{panel}-{node}"));
            let mut hits = 0u64;
            for _ in 0..opts.batch {
                if b.eval(&rect.sample(&mut rng)).abs() < lambda {
                    hits += 1;
                }
            }
            let p = hits as f64 / opts.batch as f64;
            let weight = w * half * delta0 * t.powf(delta0) * vol;
            tail += weight * p;
            var += weight * weight * p * (1.0 - p) / opts.batch as f64;
        }
    }
    flag(head + tail, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2_SQ: f64 = 0.4804530139182014; // (ln 2)^2

    fn poly(src: &str) -> MultiPoly {
        MultiPoly::parse(src, 0).unwrap()
    }

    #[test]
    fn rect_geometry() {
        let r = DyadicRect::new(vec![2, 3], vec![1, -1]);
        assert_eq!(r.volume(), 2f64.powi(-5));
        assert_eq!(r.side(0), (0.25, 0.5));
        assert!(r.contained_in_ball(0.6));
        assert!(!r.contained_in_ball(0.5));
        let mut rng = substream(0, "t");
        for _ in 0..50 {
            let x = r.sample(&mut rng);
            assert!(x[0] > 0.25 && x[0] < 0.5);
            assert!(x[1] > -0.25 && x[1] < -0.125);
        }
    }

    #[test]
    fn comparable_polynomials_have_no_near_zeros() {
        for src in ["x1*x2", "x1^2+x2^2"] {
            let b = poly(src);
            let np = NewtonPolyhedron::from_poly(&b).unwrap();
            let rect = DyadicRect::positive(&[2, 2]);
            let f = near_zero_fraction(&b, &np, &rect, 0.9, 20_000, 9);
            assert_eq!(f, 0.0, "{src}");
        }
    }

    #[test]
    fn difference_of_squares_fraction_scales_linearly() {
        let b = poly("x1^2-x2^2");
        let np = NewtonPolyhedron::from_poly(&b).unwrap();
        let rect = DyadicRect::positive(&[2, 2]);
        let f1 = near_zero_fraction(&b, &np, &rect, 0.2, 200_000, 9);
        let f2 = near_zero_fraction(&b, &np, &rect, 0.05, 200_000, 9);
        let slope = (f1 / f2).ln() / 4f64.ln();
        assert!((slope - 1.0).abs() < 0.25, "slope {slope}, {f1} {f2}");
    }

    #[test]
    fn product_integral_is_log_two_squared() {
        let b = poly("x1*x2");
        for rect in [
            DyadicRect::positive(&[1, 1]),
            DyadicRect::new(vec![5, 9], vec![-1, 1]),
        ] {
            let mc = shell_power_integral_mc(&b, 1.0, &rect, 40_000, 13);
            assert!((mc.value - LN2_SQ).abs() < 0.01 * LN2_SQ, "{mc:?}");
            assert!(!mc.high_variance);
            let dist = shell_power_integral_distribution(
                &b,
                1.0,
                &rect,
                &DistributionOptions::default(),
                13,
            );
            assert!((dist.value - LN2_SQ).abs() < 0.02 * LN2_SQ, "{dist:?}");
            assert!((dist.value - mc.value).abs() < 0.03 * LN2_SQ);
        }
    }

    #[test]
    fn tiny_budget_trips_the_variance_flag() {
        let b = poly("x1*x2");
        let rect = DyadicRect::positive(&[1, 1]);
        let mc = shell_power_integral_mc(&b, 3.0, &rect, 50, 13);
        assert!(mc.high_variance, "{mc:?}");
    }

    #[test]
    fn diagonal_majorant_bound_holds() {
        for src in ["x1*x2", "x1^2+x2^2", "x1^2+x2^4", "x1^4+x2^4+x3^4"] {
            let b = poly(src);
            let np = NewtonPolyhedron::from_poly(&b).unwrap();
            let s1 = majorant_diagonal_sup(&np, 100_000, 1);
            let s2 = majorant_diagonal_sup(&np, 100_000, 2);
            assert!(s1 <= 1.0 + 1e-12, "{src}: {s1}");
            assert!(s1 > 0.1, "{src}: {s1}");
            assert!((s1 - s2).abs() < 0.1 * s1.max(s2), "{src}: {s1} vs {s2}");
        }
    }

    #[test]
    fn estimators_are_deterministic() {
        let b = poly("x1^2+x2^2");
        let rect = DyadicRect::positive(&[3, 4]);
        let a = shell_power_integral_mc(&b, 1.0, &rect, 5_000, 21);
        let c = shell_power_integral_mc(&b, 1.0, &rect, 5_000, 21);
        assert_eq!(a.value, c.value);
        let opts = DistributionOptions::default();
        let d = shell_power_integral_distribution(&b, 1.0, &rect, &opts, 21);
        let e = shell_power_integral_distribution(&b, 1.0, &rect, &opts, 21);
        assert_eq!(d.value, e.value);
    }
}
