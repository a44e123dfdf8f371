//! Numerical screen for the nondegeneracy hypothesis behind the kernel
//! estimates: on every compact face `F` of the Newton polyhedron, the face
//! polynomial `b_F` must not vanish to order `>= d` (the Newton distance) at
//! any point with all coordinates nonzero.
//!
//! The screen searches for zeros of `b_F` away from the coordinate planes,
//! using multi-start descent on `b_F^2` plus a sign-change bisection
//! fallback, and determines the vanishing order at each witness from exact
//! polynomial derivatives. Face polynomials are quasi-homogeneous, so every
//! zero can be rescaled onto a fixed shell; the search space is the shell
//! with a floor on the coordinate magnitudes.
//!
//! A screen is evidence, not proof: it can miss zeros (reported via the
//! `inconclusive` band) but never invents one, since a witness is only
//! accepted when `|b_F|` actually drops below the zero tolerance.

use num_traits::ToPrimitive;
use rand::Rng;
use serde::Serialize;

use crate::newton::{NewtonError, NewtonPolyhedron};
use crate::poly::MultiPoly;
use crate::util::substream;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HypothesisConfig {
    /// `|b_F| <= zero_tol` accepts a witness zero.
    pub zero_tol: f64,
    /// `|derivative| > deriv_tol` counts as nonvanishing in the order scan.
    pub deriv_tol: f64,
    /// Coordinates are kept at least this large in absolute value.
    pub coord_floor: f64,
    /// Residuals in `(zero_tol, inconclusive_tol]` mean the search could not
    /// decide; more budget might.
    pub inconclusive_tol: f64,
    pub starts: usize,
    pub iters: usize,
    pub bisection_segments: usize,
    pub seed: u64,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        HypothesisConfig {
            zero_tol: 1e-10,
            deriv_tol: 1e-6,
            coord_floor: 1e-3,
            inconclusive_tol: 1e-5,
            starts: 40,
            iters: 80,
            bisection_segments: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FaceZeroRecord {
    /// Index into `compact_faces()` of the polyhedron.
    pub face_index: usize,
    pub dim: usize,
    pub face_poly: String,
    /// Monomial content divided out before the search, if any. A monomial
    /// never vanishes away from the coordinate planes, so it changes neither
    /// the zero set searched nor the vanishing order at a witness.
    pub monomial_factor: Option<String>,
    /// Best zero found away from the coordinate planes, if any.
    pub zero: Option<Vec<f64>>,
    /// Smallest `|b_F|` reached by the search (after reduction).
    pub residual: f64,
    /// Vanishing order at the witness: smallest total derivative order with
    /// a derivative above `deriv_tol`. `None` without a witness.
    pub order: Option<u32>,
    /// True when every derivative up to the scan cap was below tolerance.
    pub order_truncated: bool,
    pub inconclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub newton_distance: f64,
    pub records: Vec<FaceZeroRecord>,
    /// Largest vanishing order over all witnesses (0 when none found).
    pub max_order: u32,
    pub violated: bool,
    pub budget_exhausted: bool,
    pub pass: bool,
}

/// Upper bound on the number of zeros of `t -> (d b / d x_axis)(x)` along
/// any line parallel to the axis: the degree of the derivative in that
/// variable. Zero when `b` does not depend on the axis.
pub fn derivative_line_zero_bound(b: &MultiPoly, axis: usize) -> u32 {
    b.partial_derivative(axis).degree_in(axis)
}

/// Drops the variables in which `p` is constant, keeping `used` axes only.
fn project_to_vars(p: &MultiPoly, used: &[usize]) -> MultiPoly {
    let terms: Vec<_> = p
        .terms()
        .map(|(exps, c)| {
            let proj: Vec<u32> = used.iter().map(|&a| exps[a]).collect();
            (proj, c.clone())
        })
        .collect();
    MultiPoly::from_terms(used.len(), terms).expect("projection keeps all terms")
}

/// Writes `p = x^m q` with `m` the per-axis minimum exponent, so `q` has a
/// term of exponent zero in every axis it uses.
fn split_monomial_content(p: &MultiPoly) -> (Vec<u32>, MultiPoly) {
    let n = p.nvars();
    let mut content = vec![u32::MAX; n];
    for (exps, _) in p.terms() {
        for (c, &e) in content.iter_mut().zip(exps) {
            *c = (*c).min(e);
        }
    }
    let terms: Vec<_> = p
        .terms()
        .map(|(exps, c)| {
            let reduced: Vec<u32> = exps.iter().zip(&content).map(|(&e, &m)| e - m).collect();
            (reduced, c.clone())
        })
        .collect();
    let q = MultiPoly::from_terms(n, terms).expect("reduction keeps the polynomial nonzero");
    (content, q)
}

/// Runs the screen over all compact faces.
pub fn check_face_zero_orders(
    b: &MultiPoly,
    np: &NewtonPolyhedron,
    cfg: &HypothesisConfig,
) -> Result<HypothesisReport, NewtonError> {
    let d = np.newton_distance();
    let d_f64 = d.to_f64().unwrap();
    let scan_cap = d_f64.ceil().max(1.0) as u32;
    let faces = np.compact_faces()?;
    let mut records = Vec::with_capacity(faces.len());
    for (face_index, face) in faces.iter().enumerate() {
        let bf = np.face_polynomial(b, face)?;
        let (content, q) = split_monomial_content(&bf);
        let monomial_factor = content.iter().any(|&m| m > 0).then(|| {
            MultiPoly::from_terms(
                bf.nvars(),
                vec![(content.clone(), num_rational::BigRational::from_integer(1.into()))],
            )
            .expect("monomial content")
            .to_string()
        });
        if q.total_degree() == 0 {
            // fully monomial face: no zeros off the coordinate planes at all
            records.push(FaceZeroRecord {
                face_index,
                dim: face.dim,
                face_poly: bf.to_string(),
                monomial_factor,
                zero: None,
                residual: q.constant_term().map(|c| c.to_f64().unwrap().abs()).unwrap_or(0.0),
                order: None,
                order_truncated: false,
                inconclusive: false,
            });
            continue;
        }
        // combined weight of the active facet normals; strictly positive in
        // every coordinate because the face is compact
        let mut kappa = vec![0.0f64; np.nvars()];
        for &fi in &face.active_facets {
            for (k, w) in kappa.iter_mut().zip(np.facets()[fi].normal_f64()) {
                *k += w;
            }
        }
        debug_assert!(kappa.iter().all(|&k| k > 0.0));
        // Search only over the variables `q` uses: a variable absent from
        // `q` is a free direction, and letting the optimizer move it would
        // absorb the shell normalization while the real variables drift to
        // the coordinate floor.
        let used: Vec<usize> = (0..np.nvars()).filter(|&a| q.degree_in(a) > 0).collect();
        let qc = project_to_vars(&q, &used);
        let kappa_c: Vec<f64> = used.iter().map(|&a| kappa[a]).collect();
        let mut rng = substream(cfg.seed, &format!("hypothesis-face-{face_index}"));
        let (wc, residual) = search_zero(&qc, &kappa_c, cfg, &mut rng);
        let zero_found = residual <= cfg.zero_tol;
        let inconclusive = !zero_found && residual <= cfg.inconclusive_tol;
        let (order, order_truncated) = if zero_found {
            let (k, truncated) = vanishing_order(&qc, &wc, cfg.deriv_tol, scan_cap);
            (Some(k), truncated)
        } else {
            (None, false)
        };
        // report the witness in full coordinates, free directions pinned at 1
        let witness: Vec<f64> = {
            let mut w = vec![1.0; np.nvars()];
            for (slot, &a) in wc.iter().zip(&used) {
                w[a] = *slot;
            }
            w
        };
        records.push(FaceZeroRecord {
            face_index,
            dim: face.dim,
            face_poly: bf.to_string(),
            monomial_factor,
            zero: zero_found.then(|| witness.clone()),
            residual,
            order,
            order_truncated,
            inconclusive,
        });
    }
    let max_order = records.iter().filter_map(|r| r.order).max().unwrap_or(0);
    let violated = records
        .iter()
        .any(|r| r.order.map_or(false, |k| k as f64 >= d_f64) || r.order_truncated);
    let budget_exhausted = records.iter().any(|r| r.inconclusive);
    Ok(HypothesisReport {
        newton_distance: d_f64,
        records,
        max_order,
        violated,
        budget_exhausted,
        pass: !violated && !budget_exhausted,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NonvanishingReport {
    pub min_abs: f64,
    pub argmin: Vec<f64>,
}

/// Smallest `|b|` found on the annulus `radius/2 <= |x| <= radius` with all
/// coordinates at least `coord_floor` in absolute value. A healthy kernel
/// polynomial stays well away from zero there.
pub fn check_nonvanishing(b: &MultiPoly, radius: f64, cfg: &HypothesisConfig) -> NonvanishingReport {
    let n = b.nvars();
    let mut rng = substream(cfg.seed, "nonvanishing");
    let mut best = f64::INFINITY;
    let mut arg = vec![0.0; n];
    let samples = (cfg.starts * 200).max(2000);
    for _ in 0..samples {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let target = rng.gen_range(0.5 * radius..radius);
        for t in x.iter_mut() {
            *t *= target / norm;
            if t.abs() < cfg.coord_floor {
                *t = cfg.coord_floor.copysign(*t);
            }
        }
        let v = b.eval(&x).abs();
        if v < best {
            best = v;
            arg = x;
        }
    }
    NonvanishingReport {
        min_abs: best,
        argmin: arg,
    }
}

/// Multi-start projected descent on `b_F^2`, with a sign-change bisection
/// fallback. Returns the best point and `|b_F|` there.
fn search_zero(
    bf: &MultiPoly,
    kappa: &[f64],
    cfg: &HypothesisConfig,
    rng: &mut impl Rng,
) -> (Vec<f64>, f64) {
    let n = bf.nvars();
    let mut best = vec![1.0; n];
    rescale_to_shell(&mut best, kappa, cfg.coord_floor);
    let mut best_val = bf.eval(&best).abs();

    for _ in 0..cfg.starts {
        let mut z: Vec<f64> = (0..n)
            .map(|_| {
                let mag = rng.gen_range(cfg.coord_floor..1.0);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * mag
            })
            .collect();
        rescale_to_shell(&mut z, kappa, cfg.coord_floor);
        let mut val = bf.eval(&z);
        let mut step = 0.1;
        for _ in 0..cfg.iters {
            let grad = bf.eval_gradient(&z);
            // gradient of b_F^2 is 2 b_F grad b_F
            let g: Vec<f64> = grad.iter().map(|gi| 2.0 * val * gi).collect();
            let gnorm: f64 = g.iter().map(|t| t * t).sum::<f64>().sqrt();
            if gnorm == 0.0 || val.abs() <= 0.1 * cfg.zero_tol {
                break;
            }
            let mut improved = false;
            for _ in 0..30 {
                let mut cand: Vec<f64> = z
                    .iter()
                    .zip(&g)
                    .map(|(&zi, &gi)| zi - step * gi / gnorm)
                    .collect();
                clamp_floor(&mut cand, cfg.coord_floor);
                rescale_to_shell(&mut cand, kappa, cfg.coord_floor);
                let cval = bf.eval(&cand);
                if cval * cval < val * val {
                    z = cand;
                    val = cval;
                    improved = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if val.abs() < best_val {
            best_val = val.abs();
            best = z;
        }
    }

    if best_val > cfg.zero_tol {
        // sign changes caught by bisection along random segments
        for _ in 0..cfg.bisection_segments {
            let a: Vec<f64> = (0..n)
                .map(|_| {
                    let mag = rng.gen_range(cfg.coord_floor..1.0);
                    (if rng.gen_bool(0.5) { 1.0 } else { -1.0 }) * mag
                })
                .collect();
            // same orthant, so the segment stays away from the planes
            let b2: Vec<f64> = a
                .iter()
                .map(|&ai| ai.signum() * rng.gen_range(cfg.coord_floor..1.0))
                .collect();
            let fa = bf.eval(&a);
            let fb = bf.eval(&b2);
            if fa == 0.0 || fb == 0.0 || fa.signum() == fb.signum() {
                continue;
            }
            let (mut lo, mut hi, mut flo) = (a, b2, fa);
            for _ in 0..100 {
                let mid: Vec<f64> = lo.iter().zip(&hi).map(|(&x, &y)| 0.5 * (x + y)).collect();
                let fm = bf.eval(&mid);
                if fm == 0.0 || flo.signum() == fm.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let mut z = lo;
            rescale_to_shell(&mut z, kappa, cfg.coord_floor);
            let v = bf.eval(&z).abs();
            if v < best_val {
                best_val = v;
                best = z;
            }
            if best_val <= cfg.zero_tol {
                break;
            }
        }
    }
    (best, best_val)
}

fn clamp_floor(z: &mut [f64], floor: f64) {
    for t in z.iter_mut() {
        if t.abs() < floor {
            *t = floor.copysign(if *t == 0.0 { 1.0 } else { *t });
        }
    }
}

/// Moves `z` along its quasi-homogeneous scaling family `z_l -> lambda^{kappa_l} z_l`
/// onto the shell `max_l |z_l| = 1` (in log2 coordinates the projection is
/// exact: the shift is `min_l (-log2|z_l|) / kappa_l`).
fn rescale_to_shell(z: &mut [f64], kappa: &[f64], floor: f64) {
    let t = z
        .iter()
        .zip(kappa)
        .map(|(&zl, &kl)| -zl.abs().log2() / kl)
        .fold(f64::INFINITY, f64::min);
    if !t.is_finite() {
        return;
    }
    for (zl, &kl) in z.iter_mut().zip(kappa) {
        *zl *= 2f64.powf(t * kl);
    }
    clamp_floor(z, floor);
}

/// Smallest total order `k` in `1..=cap` with some `|d^gamma b_F(z)| >
/// deriv_tol`; the boolean reports running past the cap (order at least
/// `cap + 1`, automatically a violation).
fn vanishing_order(bf: &MultiPoly, z: &[f64], deriv_tol: f64, cap: u32) -> (u32, bool) {
    let n = bf.nvars();
    for k in 1..=cap {
        let mut found = false;
        for_each_multi_index(n, k, &mut |gamma| {
            if !found && bf.derivative_multi(gamma).eval(z).abs() > deriv_tol {
                found = true;
            }
        });
        if found {
            return (k, false);
        }
    }
    (cap + 1, true)
}

fn for_each_multi_index(n: usize, total: u32, f: &mut impl FnMut(&[u32])) {
    fn rec(gamma: &mut Vec<u32>, pos: usize, left: u32, f: &mut impl FnMut(&[u32])) {
        if pos + 1 == gamma.len() {
            gamma[pos] = left;
            f(gamma);
            return;
        }
        for v in 0..=left {
            gamma[pos] = v;
            rec(gamma, pos + 1, left - v, f);
        }
    }
    let mut gamma = vec![0u32; n];
    rec(&mut gamma, 0, total, f);
}
