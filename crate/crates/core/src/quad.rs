//! Quadrature: cached Gauss-Legendre rules for smooth integrands and a
//! Filon-Chebyshev rule for oscillatory integrals `int g(y) sin(omega y) dy`
//! whose cost does not grow with `omega`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

/// Nodes (ascending) and weights of the n-point Gauss-Legendre rule on
/// `[-1, 1]`, computed once by Newton iteration and cached.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    assert!(n >= 1);
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(legendre_rule(n)))
        .clone()
}

fn legendre_value(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        if n == 1 {
            x = 0.0;
        }
        for _ in 0..100 {
            let (p, dp) = legendre_value(n, x);
            if n == 1 {
                break;
            }
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let dp = if n == 1 {
            1.0
        } else {
            legendre_value(n, x).1
        };
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// `int_a^b f` by a single n-point Gauss-Legendre rule.
pub fn integrate_gl(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in rule.0.iter().zip(rule.1.iter()) {
        sum += w * f(mid + half * x);
    }
    half * sum
}

/// `int_a^b f` split into equal panels, n Gauss points each.
pub fn integrate_panels(a: f64, b: f64, panels: usize, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    assert!(panels >= 1);
    let mut sum = 0.0;
    for p in 0..panels {
        let pa = a + (b - a) * p as f64 / panels as f64;
        let pb = a + (b - a) * (p + 1) as f64 / panels as f64;
        sum += integrate_gl(pa, pb, n, &mut f);
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
}

/// Tuning for [`trig_integral`]. Defaults are calibrated for smooth
/// envelopes on dyadic shells: below `gl_threshold` radians of total phase a
/// plain Gauss rule is already exact to machine precision, above it the
/// Filon path interpolates the envelope per panel and integrates the
/// oscillation analytically.
#[derive(Debug, Clone, Copy)]
pub struct OscOptions {
    pub panels: usize,
    pub degree: usize,
    pub gl_threshold: f64,
    pub gl_panels: usize,
    pub gl_nodes: usize,
}

impl Default for OscOptions {
    fn default() -> Self {
        OscOptions {
            panels: 24,
            degree: 8,
            gl_threshold: 8.0,
            gl_panels: 3,
            gl_nodes: 20,
        }
    }
}

/// Conversion matrix from values at the `deg+1` Chebyshev extrema points to
/// monomial coefficients (inverse Vandermonde), cached per degree.
fn cheb_to_monomial(deg: usize) -> Arc<Vec<Vec<f64>>> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<Vec<Vec<f64>>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(deg)
        .or_insert_with(|| {
            let nodes = cheb_nodes(deg);
            let v: Vec<Vec<f64>> = nodes
                .iter()
                .map(|&t| (0..=deg).map(|m| t.powi(m as i32)).collect())
                .collect();
            Arc::new(invert_dense(v).expect("Chebyshev Vandermonde is invertible"))
        })
        .clone()
}

fn cheb_nodes(deg: usize) -> Vec<f64> {
    (0..=deg)
        .map(|i| (std::f64::consts::PI * i as f64 / deg as f64).cos())
        .collect()
}

fn invert_dense(m: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a = m;
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[i][j] -= f * a[col][j];
                inv[i][j] -= f * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// Moments `E_m = int_{-1}^{1} t^m e^{i w t} dt` for `m = 0..=deg`. Small
/// `|w|` uses the power series of the exponential (error ~ e^|w| eps from
/// cancellation, negligible below the switch), large `|w|` the
/// integration-by-parts recurrence, whose error factors m/|w| stay
/// harmless there.
fn monomial_moments(w: f64, deg: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); deg + 1];
    if w.abs() <= 4.0 {
        for (m, em) in e.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(0.0, 0.0);
            for k in 0..80 {
                if (m + k) % 2 == 0 {
                    sum += term * (2.0 / (m + k + 1) as f64);
                }
                term *= Complex64::new(0.0, w) / (k + 1) as f64;
                if term.norm_sqr() < 1e-60 {
                    break;
                }
            }
            *em = sum;
        }
    } else {
        let iw = Complex64::new(0.0, w);
        let eip = iw.exp();
        let eim = (-iw).exp();
        e[0] = (eip - eim) / iw;
        for m in 1..=deg {
            let boundary = if m % 2 == 0 { eip - eim } else { eip + eim };
            e[m] = (boundary - m as f64 * e[m - 1]) / iw;
        }
    }
    e
}

/// `int_a^b g(y) sin(omega y) dy` (or cos). `g` must be smooth and
/// nonoscillatory on `[a, b]`; all oscillation goes through the trig factor.
pub fn trig_integral(
    a: f64,
    b: f64,
    omega: f64,
    kind: Trig,
    opts: &OscOptions,
    mut g: impl FnMut(f64) -> f64,
) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    if omega.abs() * (b - a) <= opts.gl_threshold {
        return integrate_panels(a, b, opts.gl_panels, opts.gl_nodes, |y| {
            g(y) * match kind {
                Trig::Sin => (omega * y).sin(),
                Trig::Cos => (omega * y).cos(),
            }
        });
    }
    let deg = opts.degree;
    let conv = cheb_to_monomial(deg);
    let tnodes = cheb_nodes(deg);
    let mut total = 0.0;
    for p in 0..opts.panels {
        let pa = a + (b - a) * p as f64 / opts.panels as f64;
        let pb = a + (b - a) * (p + 1) as f64 / opts.panels as f64;
        let c = 0.5 * (pa + pb);
        let hw = 0.5 * (pb - pa);
        let vals: Vec<f64> = tnodes.iter().map(|&t| g(c + hw * t)).collect();
        let moments = monomial_moments(omega * hw, deg);
        let mut s = Complex64::new(0.0, 0.0);
        for m in 0..=deg {
            let am: f64 = conv[m].iter().zip(&vals).map(|(c, v)| c * v).sum();
            s += am * moments[m];
        }
        let val = Complex64::new(0.0, omega * c).exp() * s;
        total += hw
            * match kind {
                Trig::Sin => val.im,
                Trig::Cos => val.re,
            };
    }
    total
}
