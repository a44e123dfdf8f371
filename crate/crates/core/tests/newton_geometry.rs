//! Cross-checks the facet-based Newton geometry against an exact
//! Fourier-Motzkin membership oracle that never looks at facets.

mod common;

use common::{diagonal, in_newton_region, rat, to_rationals};
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singint::newton::NewtonPolyhedron;
use singint::poly::MultiPoly;

const SUITE: &[&str] = &[
    "x1",
    "x1^3",
    "x1*x2",
    "x1^2*x2^3",
    "x1^2 + x2^2",
    "x1^2 + x2^4",
    "x1^2 + x2^6",
    "x1^3 + x2^3 + x1*x2",
    "x1^2 + 2*x1*x2 + x2^2",
    "x1*x2^2 + x1^2*x2",
    "x1^2 + x1*x2 + x2^3",
    "x1*x2*x3",
    "x1^2 + x2^2 + x3^2",
    "x1^2 + x2^4 + x3^4",
    "x1^2*x2*x3 + x3^5",
    "x1*x2*x3*x4",
    "x1^2 + x2^2 + x3^2 + x4^2",
];

fn polyhedron(src: &str) -> (MultiPoly, NewtonPolyhedron) {
    let p = MultiPoly::parse(src, 0).unwrap();
    let np = NewtonPolyhedron::from_poly(&p).unwrap();
    (p, np)
}

#[test]
fn newton_distance_is_where_the_diagonal_enters() {
    // d is the least t with (t,...,t) in the region, so the oracle must
    // accept the diagonal at d and reject it a hair below
    let shrink = BigRational::one() - rat(1, 1 << 20);
    for src in SUITE {
        let (p, np) = polyhedron(src);
        let supp = p.support();
        let d = np.newton_distance();
        let n = p.nvars();
        assert!(
            in_newton_region(&supp, &diagonal(&d, n)),
            "{src}: diagonal at d={d} not in region"
        );
        let below = &d * &shrink;
        assert!(
            !in_newton_region(&supp, &diagonal(&below, n)),
            "{src}: diagonal below d={d} already in region"
        );
    }
}

#[test]
fn vertices_are_exactly_the_extreme_support_points() {
    for src in SUITE {
        let (p, np) = polyhedron(src);
        let supp = p.support();
        for v in np.vertices() {
            let others: Vec<Vec<u32>> = supp.iter().filter(|a| *a != v).cloned().collect();
            if others.is_empty() {
                continue;
            }
            assert!(
                !in_newton_region(&others, &to_rationals(v)),
                "{src}: vertex {v:?} generated by the other support points"
            );
        }
        // and nothing outside the vertex hull: every support point is a member
        let verts: Vec<Vec<u32>> = np.vertices().to_vec();
        for a in &supp {
            assert!(
                in_newton_region(&verts, &to_rationals(a)),
                "{src}: support point {a:?} outside conv(vertices) + orthant"
            );
        }
    }
}

#[test]
fn random_supports_agree_with_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shrink = BigRational::one() - rat(1, 1 << 20);
    for case in 0..60 {
        let n = rng.gen_range(1..=3usize);
        let terms = rng.gen_range(1..=5usize);
        let mut exps = Vec::new();
        for _ in 0..terms {
            loop {
                let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=6u32)).collect();
                if e.iter().any(|&v| v > 0) {
                    exps.push(e);
                    break;
                }
            }
        }
        let p = MultiPoly::from_terms(n, exps.iter().map(|e| (e.clone(), BigRational::one())))
            .unwrap();
        let np = NewtonPolyhedron::from_poly(&p).unwrap();
        let supp = p.support();
        let d = np.newton_distance();
        assert!(
            in_newton_region(&supp, &diagonal(&d, n)),
            "case {case}: {exps:?} d={d}"
        );
        let below = &d * &shrink;
        assert!(
            !in_newton_region(&supp, &diagonal(&below, n)),
            "case {case}: {exps:?} d={d}"
        );
    }
}
