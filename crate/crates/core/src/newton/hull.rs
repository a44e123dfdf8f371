//! Exact integer linear algebra for the polyhedral layer: fraction-free
//! determinants, rank, and hyperplane normals through generator subsets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Determinant by the Bareiss fraction-free scheme; all divisions are exact.
pub(crate) fn det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    debug_assert!(m.iter().all(|r| r.len() == n));
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if m[k][k].is_zero() {
            let swap = (k + 1..n).find(|&r| !m[r][k].is_zero());
            match swap {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let d = std::mem::take(&mut m[n - 1][n - 1]);
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// Rank over the rationals (exact, fraction-free elimination).
pub(crate) fn rank(mut rows: Vec<Vec<BigInt>>) -> usize {
    let nr = rows.len();
    if nr == 0 {
        return 0;
    }
    let nc = rows[0].len();
    let mut r = 0;
    for col in 0..nc {
        if r == nr {
            break;
        }
        let Some(p) = (r..nr).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        for i in r + 1..nr {
            if rows[i][col].is_zero() {
                continue;
            }
            let factor = rows[i][col].clone();
            let pivot = rows[r][col].clone();
            for c in col..nc {
                rows[i][c] = &rows[i][c] * &pivot - &rows[r][c] * &factor;
            }
        }
        r += 1;
    }
    r
}

/// Primitive normal of the hyperplane spanned by `d-1` vectors in `Z^d`
/// (generalized cross product via signed maximal minors). `None` when the
/// vectors are linearly dependent.
pub(crate) fn cross_normal(vecs: &[&[BigInt]]) -> Option<Vec<BigInt>> {
    let d = vecs.first().map_or(0, |v| v.len());
    assert!(d >= 1 && vecs.len() == d - 1);
    let mut normal = Vec::with_capacity(d);
    for skip in 0..d {
        let minor: Vec<Vec<BigInt>> = vecs
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != skip)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect();
        let mut m = det(minor);
        if skip % 2 == 1 {
            m = -m;
        }
        normal.push(m);
    }
    if normal.iter().all(|x| x.is_zero()) {
        return None;
    }
    reduce_primitive(&mut normal);
    Some(normal)
}

/// Divides by the gcd of all entries.
pub(crate) fn reduce_primitive(v: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in v.iter() {
        g = g.gcd(x);
    }
    if g > BigInt::one() {
        for x in v.iter_mut() {
            *x = &*x / &g;
        }
    }
}

/// Visits every k-subset of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k as isize - 1;
        while i >= 0 && idx[i as usize] == n - k + i as usize {
            i -= 1;
        }
        if i < 0 {
            return;
        }
        let i = i as usize;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn is_negative(x: &BigInt) -> bool {
    x.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    #[test]
    fn det_matches_hand_values() {
        assert_eq!(det(bi(&[&[2]])), BigInt::from(2));
        assert_eq!(det(bi(&[&[1, 2], &[3, 4]])), BigInt::from(-2));
        assert_eq!(
            det(bi(&[&[2, 0, 1], &[1, 3, 2], &[0, 1, 1]])),
            BigInt::from(3)
        );
        assert_eq!(det(bi(&[&[1, 2], &[2, 4]])), BigInt::zero());
        // zero leading pivot forces a swap
        assert_eq!(det(bi(&[&[0, 1], &[1, 0]])), BigInt::from(-1));
    }

    #[test]
    fn rank_counts_independent_rows() {
        assert_eq!(rank(bi(&[&[1, 2, 3], &[2, 4, 6], &[0, 1, 0]])), 2);
        assert_eq!(rank(bi(&[&[0, 0], &[0, 0]])), 0);
        assert_eq!(rank(bi(&[&[1, 0], &[0, 1]])), 2);
    }

    #[test]
    fn cross_normal_is_orthogonal_and_primitive() {
        let v1: Vec<BigInt> = vec![2.into(), 0.into(), (-2).into()];
        let v2: Vec<BigInt> = vec![0.into(), 4.into(), 4.into()];
        let n = cross_normal(&[&v1, &v2]).unwrap();
        assert_eq!(dot(&n, &v1), BigInt::zero());
        assert_eq!(dot(&n, &v2), BigInt::zero());
        let mut g = BigInt::zero();
        for x in &n {
            g = g.gcd(x);
        }
        assert_eq!(g, BigInt::one());
        let dep: Vec<BigInt> = vec![4.into(), 0.into(), (-4).into()];
        assert!(cross_normal(&[&v1, &dep]).is_none());
    }

    #[test]
    fn combinations_visit_all_subsets() {
        let mut seen = Vec::new();
        combinations(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 3]);
    }
}
