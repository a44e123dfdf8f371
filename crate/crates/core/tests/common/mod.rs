//! Oracles used by the integration tests, independent of the library's own
//! geometry code: exact rational Fourier-Motzkin feasibility for membership
//! in `conv(support) + nonnegative orthant`, and an adaptive Simpson rule
//! for cross-checking quadrature results.

// every test target links this module but uses only its own subset
#![allow(dead_code)]

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone)]
struct Ineq {
    c: Vec<BigRational>,
    d: BigRational,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact membership test for `x in conv({alpha_i}) + R_{>=0}^n`.
///
/// Writing `x = sum lambda_i alpha_i + mu` with `lambda` a convex
/// combination and `mu >= 0`, eliminating `mu` leaves
/// `sum lambda_i alpha_i <= x` componentwise. The last lambda is
/// substituted out through `sum lambda = 1` and the rest are eliminated by
/// Fourier-Motzkin over exact rationals.
pub fn in_newton_region(support: &[Vec<u32>], x: &[BigRational]) -> bool {
    let m = support.len();
    assert!(m >= 1 && support.iter().all(|a| a.len() == x.len()));
    let nv = m - 1;
    let last = &support[m - 1];

    let mut sys: Vec<Ineq> = Vec::new();
    for i in 0..nv {
        let mut c = vec![BigRational::zero(); nv];
        c[i] = -BigRational::one();
        sys.push(Ineq {
            c,
            d: BigRational::zero(),
        });
    }
    if nv > 0 {
        sys.push(Ineq {
            c: vec![BigRational::one(); nv],
            d: BigRational::one(),
        });
    }
    for (j, xj) in x.iter().enumerate() {
        let am = BigRational::from(BigInt::from(last[j]));
        let c: Vec<BigRational> = (0..nv)
            .map(|i| BigRational::from(BigInt::from(support[i][j])) - &am)
            .collect();
        sys.push(Ineq {
            c,
            d: xj.clone() - am,
        });
    }

    for v in (0..nv).rev() {
        let mut pos: Vec<Ineq> = Vec::new();
        let mut neg: Vec<Ineq> = Vec::new();
        let mut kept: Vec<Ineq> = Vec::new();
        for q in sys {
            if q.c[v].is_zero() {
                kept.push(q);
            } else if q.c[v].is_positive() {
                pos.push(q);
            } else {
                neg.push(q);
            }
        }
        for p in &pos {
            for q in &neg {
                let cp = p.c[v].clone();
                let cq = -q.c[v].clone();
                let c: Vec<BigRational> = p
                    .c
                    .iter()
                    .zip(&q.c)
                    .map(|(a, b)| a / &cp + b / &cq)
                    .collect();
                let d = &p.d / &cp + &q.d / &cq;
                kept.push(Ineq { c, d });
            }
        }
        // constant rows resolve immediately; the rest dedup after scaling
        // by the leading coefficient so the product growth stays tame
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for q in kept {
            if q.c.iter().all(|ck| ck.is_zero()) {
                if q.d.is_negative() {
                    return false;
                }
                continue;
            }
            let lead = q.c.iter().find(|ck| !ck.is_zero()).unwrap().abs();
            let c: Vec<BigRational> = q.c.iter().map(|ck| ck / &lead).collect();
            let d = &q.d / &lead;
            let key = format!(
                "{}|{}",
                c.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
                d
            );
            if seen.insert(key) {
                next.push(Ineq { c, d });
            }
        }
        sys = next;
    }
    sys.iter().all(|q| !q.d.is_negative())
}

pub fn diagonal(t: &BigRational, n: usize) -> Vec<BigRational> {
    vec![t.clone(); n]
}

pub fn to_rationals(alpha: &[u32]) -> Vec<BigRational> {
    alpha
        .iter()
        .map(|&a| BigRational::from(BigInt::from(a)))
        .collect()
}

fn simpson_slice(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_slice(a, fa, m, fm, flm);
    let right = simpson_slice(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson_slice(a, fa, b, fb, fm);
    simpson_rec(&f, a, b, fa, fb, fm, whole, tol, 28)
}
