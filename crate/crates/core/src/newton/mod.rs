//! Newton polyhedra of polynomials vanishing at the origin.
//!
//! For a nonzero polynomial `b` with `b(0) = 0` the Newton polyhedron is
//! `N(b) = conv(supp b) + [0,inf)^n`. Everything here is exact: facet normals
//! are primitive integer vectors, the Newton distance and critical exponent
//! are rationals, and face membership is decided in integer arithmetic.
//!
//! The invariants exposed by [`NewtonPolyhedron::invariants`] govern the
//! small-parameter behaviour of sublevel sets of `b`: the sublevel volume
//! grows like `eps^delta0 * log(1/eps)^(m-1)` where `delta0 = 1/d` is the
//! reciprocal Newton distance and `m` the multiplicity of the central face.

mod hull;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::poly::{Exponents, MultiPoly};

pub(crate) use hull::{combinations, rank};

/// Face enumeration is exponential in the facet count; these caps keep it at
/// desk scale and guarantee the vertex bitsets below fit in a word.
pub const MAX_FACE_VARS: usize = 6;
pub const MAX_FACE_FACETS: usize = 18;
pub const MAX_FACE_VERTICES: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum NewtonError {
    #[error("zero polynomial has no Newton polyhedron")]
    ZeroPolynomial,
    #[error("polynomial must vanish at the origin (drop the constant term)")]
    ConstantTerm,
    #[error("face enumeration is capped at {max} variables, polyhedron has {got}")]
    TooManyVars { got: usize, max: usize },
    #[error("face enumeration is capped at {max} facets, polyhedron has {got}")]
    TooManyFacets { got: usize, max: usize },
    #[error("face enumeration is capped at {max} vertices, polyhedron has {got}")]
    TooManyVertices { got: usize, max: usize },
    #[error("face does not belong to this polyhedron")]
    FaceMismatch,
    #[error("polynomial does not match this polyhedron")]
    PolyMismatch,
}

/// One facet inequality `normal . t >= offset` with a primitive integer
/// normal, `normal >= 0` componentwise and `normal != 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Facet {
    #[serde(with = "crate::util::bigint_vec_serde")]
    pub normal: Vec<BigInt>,
    #[serde(with = "crate::util::bigint_serde")]
    pub offset: BigInt,
}

impl Facet {
    /// `normal . alpha - offset`; nonnegative on the polyhedron, zero exactly
    /// on the facet.
    pub fn slack(&self, alpha: &[u32]) -> BigInt {
        let mut s = -self.offset.clone();
        for (w, &a) in self.normal.iter().zip(alpha) {
            s += w * BigInt::from(a);
        }
        s
    }

    pub fn active_at(&self, alpha: &[u32]) -> bool {
        self.slack(alpha).is_zero()
    }

    pub fn weight_sum(&self) -> BigInt {
        self.normal.iter().sum()
    }

    pub fn normal_f64(&self) -> Vec<f64> {
        self.normal.iter().map(|w| w.to_f64().unwrap()).collect()
    }

    pub fn offset_f64(&self) -> f64 {
        self.offset.to_f64().unwrap()
    }
}

/// A proper face, stored combinatorially. `active_facets` is the full set of
/// facets containing the face, `member_vertices` the vertices on it, `rays`
/// the coordinate axes contained in its recession cone. The face equals
/// `conv(members) + cone(rays)`, so it is compact iff `rays` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Face {
    pub active_facets: Vec<usize>,
    pub member_vertices: Vec<usize>,
    pub rays: Vec<usize>,
    pub dim: usize,
    pub compact: bool,
}

/// The combinatorial data controlling sublevel asymptotics of the polynomial.
#[derive(Debug, Clone, Serialize)]
pub struct NewtonInvariants {
    #[serde(with = "crate::util::ratio_serde")]
    pub newton_distance: BigRational,
    #[serde(with = "crate::util::ratio_serde")]
    pub delta0: BigRational,
    pub multiplicity: usize,
    pub central_face: Face,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NewtonPolyhedron {
    nvars: usize,
    vertices: Vec<Exponents>,
    facets: Vec<Facet>,
}

/// Points of `points` minimal under componentwise `<=`, sorted, deduplicated.
pub fn pareto_minimal(points: &[Exponents]) -> Vec<Exponents> {
    let mut pts: Vec<Exponents> = points.to_vec();
    pts.sort();
    pts.dedup();
    pts.iter()
        .filter(|p| {
            !pts.iter()
                .any(|q| q != *p && q.iter().zip(p.iter()).all(|(a, b)| a <= b))
        })
        .cloned()
        .collect()
}

impl NewtonPolyhedron {
    /// Enumerates facets and vertices exactly. The polyhedron is computed as
    /// the dual of the homogenized cone generated by `(alpha, 1)` for minimal
    /// support points and `(e_i, 0)` for the coordinate rays: every facet
    /// normal is orthogonal to `n` generators, so all candidates arise from
    /// generator subsets via exact cross products.
    pub fn from_poly(p: &MultiPoly) -> Result<Self, NewtonError> {
        if p.is_zero() {
            return Err(NewtonError::ZeroPolynomial);
        }
        if p.constant_term().is_some() {
            return Err(NewtonError::ConstantTerm);
        }
        let n = p.nvars();
        let minimal = pareto_minimal(&p.support());

        let mut gens: Vec<Vec<BigInt>> = Vec::with_capacity(minimal.len() + n);
        for alpha in &minimal {
            let mut g: Vec<BigInt> = alpha.iter().map(|&a| BigInt::from(a)).collect();
            g.push(BigInt::from(1));
            gens.push(g);
        }
        for i in 0..n {
            let mut g = vec![BigInt::zero(); n + 1];
            g[i] = BigInt::from(1);
            gens.push(g);
        }

        let mut normals: BTreeSet<Vec<BigInt>> = BTreeSet::new();
        combinations(gens.len(), n, |subset| {
            let vs: Vec<&[BigInt]> = subset.iter().map(|&i| gens[i].as_slice()).collect();
            let Some(mut nu) = hull::cross_normal(&vs) else {
                return;
            };
            let mut pos = false;
            let mut neg = false;
            for g in &gens {
                let d = hull::dot(&nu, g);
                pos |= d.is_positive();
                neg |= hull::is_negative(&d);
            }
            if pos && neg {
                return;
            }
            if neg {
                for x in nu.iter_mut() {
                    *x = -std::mem::take(x);
                }
            }
            if nu[..n].iter().all(BigInt::is_zero) {
                return;
            }
            let active: Vec<Vec<BigInt>> = gens
                .iter()
                .filter(|g| hull::dot(&nu, g).is_zero())
                .cloned()
                .collect();
            if rank(active) == n {
                normals.insert(nu);
            }
        });

        let mut facets: Vec<Facet> = normals
            .into_iter()
            .map(|nu| Facet {
                offset: -nu[n].clone(),
                normal: nu[..n].to_vec(),
            })
            .collect();
        facets.sort_by(|a, b| (&a.normal, &a.offset).cmp(&(&b.normal, &b.offset)));

        let vertices: Vec<Exponents> = minimal
            .into_iter()
            .filter(|alpha| {
                let active: Vec<Vec<BigInt>> = facets
                    .iter()
                    .filter(|f| f.active_at(alpha))
                    .map(|f| f.normal.clone())
                    .collect();
                rank(active) == n
            })
            .collect();

        debug_assert!(!facets.is_empty() && !vertices.is_empty());
        debug_assert!(vertices
            .iter()
            .all(|v| facets.iter().all(|f| !f.slack(v).is_negative())));
        Ok(NewtonPolyhedron {
            nvars: n,
            vertices,
            facets,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Vertices in lexicographic order; always a subset of the support.
    pub fn vertices(&self) -> &[Exponents] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Newton distance `d = max over facets of offset / (sum of weights)`,
    /// i.e. the coordinate of the diagonal point where `(d, ..., d)` enters
    /// the polyhedron. Positive because the origin is excluded.
    pub fn newton_distance(&self) -> BigRational {
        self.facets
            .iter()
            .map(|f| BigRational::new(f.offset.clone(), f.weight_sum()))
            .max()
            .expect("polyhedron has at least one facet")
    }

    /// Critical integrability exponent `delta0 = 1/d`: the supremum of
    /// exponents `delta` with `|b|^(-delta)` locally integrable at the origin
    /// (for nondegenerate `b`).
    pub fn critical_exponent(&self) -> BigRational {
        self.newton_distance().recip()
    }

    /// The minimal face containing the diagonal point `(d, ..., d)`.
    pub fn central_face(&self) -> Face {
        let d = self.newton_distance();
        let active: Vec<usize> = self
            .facets
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                BigRational::from_integer(f.weight_sum()) * &d
                    == BigRational::from_integer(f.offset.clone())
            })
            .map(|(i, _)| i)
            .collect();
        assert!(!active.is_empty(), "the maximizing facet is always active");
        self.face_from_active(&active)
            .expect("the central face is nonempty")
    }

    /// Codimension of the central face; the exponent of the logarithmic
    /// factor in sublevel asymptotics is `multiplicity - 1`.
    pub fn multiplicity(&self) -> usize {
        self.nvars - self.central_face().dim
    }

    pub fn invariants(&self) -> NewtonInvariants {
        let d = self.newton_distance();
        NewtonInvariants {
            delta0: d.recip(),
            newton_distance: d,
            multiplicity: self.multiplicity(),
            central_face: self.central_face(),
        }
    }

    /// The face cut out by a set of facets, or `None` when the intersection
    /// is empty. `active_facets` of the result is the canonical (maximal)
    /// facet set of the face, independent of the chosen generators.
    fn face_from_active(&self, active: &[usize]) -> Option<Face> {
        let members: Vec<usize> = (0..self.vertices.len())
            .filter(|&v| {
                active
                    .iter()
                    .all(|&f| self.facets[f].active_at(&self.vertices[v]))
            })
            .collect();
        if members.is_empty() {
            return None;
        }
        let rays: Vec<usize> = (0..self.nvars)
            .filter(|&i| active.iter().all(|&f| self.facets[f].normal[i].is_zero()))
            .collect();
        let canon: Vec<usize> = (0..self.facets.len())
            .filter(|&f| {
                members
                    .iter()
                    .all(|&v| self.facets[f].active_at(&self.vertices[v]))
                    && rays.iter().all(|&i| self.facets[f].normal[i].is_zero())
            })
            .collect();
        let v0 = &self.vertices[members[0]];
        let mut span: Vec<Vec<BigInt>> = members[1..]
            .iter()
            .map(|&v| {
                self.vertices[v]
                    .iter()
                    .zip(v0.iter())
                    .map(|(&a, &b)| BigInt::from(a) - BigInt::from(b))
                    .collect()
            })
            .collect();
        for &i in &rays {
            let mut e = vec![BigInt::zero(); self.nvars];
            e[i] = BigInt::from(1);
            span.push(e);
        }
        Some(Face {
            dim: rank(span),
            compact: rays.is_empty(),
            active_facets: canon,
            member_vertices: members,
            rays,
        })
    }

    /// All compact proper faces, sorted by dimension then vertex set. The
    /// 0-dimensional ones are exactly the vertices.
    pub fn compact_faces(&self) -> Result<Vec<Face>, NewtonError> {
        if self.nvars > MAX_FACE_VARS {
            return Err(NewtonError::TooManyVars {
                got: self.nvars,
                max: MAX_FACE_VARS,
            });
        }
        if self.facets.len() > MAX_FACE_FACETS {
            return Err(NewtonError::TooManyFacets {
                got: self.facets.len(),
                max: MAX_FACE_FACETS,
            });
        }
        if self.vertices.len() > MAX_FACE_VERTICES {
            return Err(NewtonError::TooManyVertices {
                got: self.vertices.len(),
                max: MAX_FACE_VERTICES,
            });
        }
        let nf = self.facets.len();
        // Per facet: bitsets of vertices on it and of axes orthogonal to it.
        let vmask: Vec<u64> = self
            .facets
            .iter()
            .map(|f| {
                self.vertices
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| f.active_at(v))
                    .fold(0u64, |m, (i, _)| m | (1 << i))
            })
            .collect();
        let rmask: Vec<u64> = self
            .facets
            .iter()
            .map(|f| {
                (0..self.nvars)
                    .filter(|&i| f.normal[i].is_zero())
                    .fold(0u64, |m, i| m | (1 << i))
            })
            .collect();
        let mut seen: BTreeSet<(u64, u64)> = BTreeSet::new();
        let mut out: Vec<Face> = Vec::new();
        for mask in 1u32..(1u32 << nf) {
            let mut members = u64::MAX;
            let mut rays = u64::MAX;
            for f in 0..nf {
                if mask & (1 << f) != 0 {
                    members &= vmask[f];
                    rays &= rmask[f];
                }
            }
            if members == 0 || rays != 0 || !seen.insert((members, rays)) {
                continue;
            }
            let active: Vec<usize> = (0..nf).filter(|&f| mask & (1 << f) != 0).collect();
            let face = self
                .face_from_active(&active)
                .expect("nonempty vertex bitset");
            debug_assert!(face.compact);
            out.push(face);
        }
        out.sort_by(|a, b| {
            (a.dim, &a.member_vertices).cmp(&(b.dim, &b.member_vertices))
        });
        Ok(out)
    }

    /// Restriction of `p` to a face: the subsum of terms whose exponents lie
    /// on every active facet of the face. Rejects faces that do not belong to
    /// this polyhedron and polynomials whose support does not match it.
    pub fn face_polynomial(&self, p: &MultiPoly, face: &Face) -> Result<MultiPoly, NewtonError> {
        if p.nvars() != self.nvars {
            return Err(NewtonError::PolyMismatch);
        }
        if self
            .vertices
            .iter()
            .any(|v| p.coefficient(v).is_none())
        {
            return Err(NewtonError::PolyMismatch);
        }
        if face.active_facets.is_empty()
            || face.active_facets.iter().any(|&f| f >= self.facets.len())
            || face.member_vertices.iter().any(|&v| v >= self.vertices.len())
            || face.rays.iter().any(|&i| i >= self.nvars)
        {
            return Err(NewtonError::FaceMismatch);
        }
        match self.face_from_active(&face.active_facets) {
            Some(canon) if canon == *face => {}
            _ => return Err(NewtonError::FaceMismatch),
        }
        let terms: Vec<(Exponents, BigRational)> = p
            .terms()
            .filter(|(alpha, _)| {
                face.active_facets
                    .iter()
                    .all(|&f| self.facets[f].active_at(alpha))
            })
            .map(|(alpha, c)| (alpha.clone(), c.clone()))
            .collect();
        if terms.is_empty() {
            return Err(NewtonError::PolyMismatch);
        }
        MultiPoly::from_terms(self.nvars, terms).map_err(|_| NewtonError::PolyMismatch)
    }

    /// The monomial majorant `b*(x) = sum over vertices of |x|^v`. It is
    /// comparable to `sup |b|` on dyadic rectangles and shares the Newton
    /// polyhedron of `b`.
    pub fn monomial_majorant(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        self.vertices
            .iter()
            .map(|v| {
                v.iter()
                    .zip(x)
                    .map(|(&e, &xi)| xi.abs().powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }
}
