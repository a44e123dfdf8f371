//! Small shared helpers: seed derivation, serde adapters, least-squares fits.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a, used to derive independent RNG substreams from a base seed and a
/// stage tag without pulling in a hashing crate.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic substream: same `(seed, tag)` always yields the same stream.
pub(crate) fn substream(seed: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(tag.as_bytes()))
}

/// Serializes `BigRational` as the canonical string `"p"` or `"p/q"`.
pub(crate) mod ratio_serde {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }
}

/// Serializes `Vec<BigInt>` as decimal strings.
pub(crate) mod bigint_vec_serde {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }
}

/// Serializes `BigInt` as a decimal string.
pub(crate) mod bigint_serde {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }
}

/// Ordinary least squares line `y = a + b x`; returns `(intercept, slope)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    (intercept, slope)
}

/// Least squares for `y = c0·g0 + c1·g1 + c2·g2`; returns coefficients and
/// their standard errors from the residual variance.
pub(crate) fn fit3(rows: &[[f64; 3]], ys: &[f64]) -> ([f64; 3], [f64; 3]) {
    assert_eq!(rows.len(), ys.len());
    assert!(rows.len() >= 4, "need more points than parameters");
    // Normal equations A c = b with A = XᵀX.
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (r, &y) in rows.iter().zip(ys) {
        for i in 0..3 {
            b[i] += r[i] * y;
            for j in 0..3 {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    let inv = invert3(&a);
    let mut c = [0.0f64; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i] += inv[i][j] * b[j];
        }
    }
    let mut rss = 0.0;
    for (r, &y) in rows.iter().zip(ys) {
        let fit: f64 = (0..3).map(|i| c[i] * r[i]).sum();
        rss += (y - fit) * (y - fit);
    }
    let dof = (rows.len() - 3).max(1) as f64;
    let sigma2 = rss / dof;
    let se = [
        (sigma2 * inv[0][0]).abs().sqrt(),
        (sigma2 * inv[1][1]).abs().sqrt(),
        (sigma2 * inv[2][2]).abs().sqrt(),
    ];
    (c, se)
}

fn invert3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let m = a;
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    assert!(det.abs() > 1e-300, "singular design matrix");
    let mut inv = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let r0 = (i + 1) % 3;
            let r1 = (i + 2) % 3;
            let c0 = (j + 1) % 3;
            let c1 = (j + 2) % 3;
            // transposed cofactor
            inv[j][i] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}
