//! Validated generator sets and their exact geometry.
//!
//! A [`VectorSet`] is a list of integer vectors that all lie strictly on one
//! side of some hyperplane through the origin and together span the ambient
//! space.  Validation produces three exact certificates that everything else
//! builds on: a rational functional positive on every generator (`alpha`), a
//! triangular basis of the generated lattice, and the facet/ray description
//! of the generated cone.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::exact::{
    self, dot_ii, dot_ir, primitive, primitive_i64, rat_int, Constraint, Rat,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VecSetError {
    #[error("generator list is empty")]
    EmptyInput,
    #[error("need at least two generators, got {0}")]
    TooFewGenerators(usize),
    #[error("generator {index} has length {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("generator {0} is the zero vector")]
    ZeroVector(usize),
    #[error("no half-space contains every generator strictly")]
    NoHalfSpace,
    #[error("generators span a subspace of dimension {rank} < {dim}")]
    NotFullRank { rank: usize, dim: usize },
}

/// Lower-triangular basis of the integer lattice generated by the vectors.
///
/// Row `i` is supported on coordinates `0..=i` and has a positive diagonal
/// entry; off-diagonal entries are reduced below the diagonal above them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBasis {
    rows: Vec<Vec<BigInt>>,
    determinant: BigInt,
}

impl LatticeBasis {
    /// Hermite-style reduction of the row span of `vectors`.  Requires full
    /// rank, which validation guarantees.
    fn from_rows(vectors: &[Vec<i64>], dim: usize) -> Self {
        let mut pool: Vec<Vec<BigInt>> = vectors
            .iter()
            .map(|v| v.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let mut rows: Vec<Option<Vec<BigInt>>> = vec![None; dim];
        for col in (0..dim).rev() {
            loop {
                let nonzero: Vec<usize> = (0..pool.len())
                    .filter(|&i| !pool[i][col].is_zero())
                    .collect();
                match nonzero.len() {
                    0 => panic!("rank deficiency survived validation"),
                    1 => {
                        let mut row = pool.swap_remove(nonzero[0]);
                        if row[col].is_negative() {
                            for x in row.iter_mut() {
                                *x = -x.clone();
                            }
                        }
                        rows[col] = Some(row);
                        break;
                    }
                    _ => {
                        // Bezout combination leaves the gcd in one row and
                        // zero in the other.
                        let (i, j) = (nonzero[0], nonzero[1]);
                        let p = pool[i][col].clone();
                        let q = pool[j][col].clone();
                        let e = p.extended_gcd(&q);
                        let (g, u, v) = (e.gcd, e.x, e.y);
                        let a = pool[i].clone();
                        let b = pool[j].clone();
                        for c in 0..dim {
                            pool[i][c] = &u * &a[c] + &v * &b[c];
                            pool[j][c] = (&q / &g) * &a[c] - (&p / &g) * &b[c];
                        }
                    }
                }
            }
        }
        let mut rows: Vec<Vec<BigInt>> = rows.into_iter().map(|r| r.expect("filled")).collect();
        // Reduce entries under each diagonal into [0, diag).
        for i in 0..dim {
            for j in (0..i).rev() {
                let d = rows[j][j].clone();
                let q = rows[i][j].div_floor(&d);
                if !q.is_zero() {
                    let sub = rows[j].clone();
                    for c in 0..dim {
                        rows[i][c] -= &q * &sub[c];
                    }
                }
            }
        }
        let determinant = rows.iter().enumerate().map(|(i, r)| r[i].clone()).product();
        LatticeBasis { rows, determinant }
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    /// Index of the lattice in the ambient integer lattice.
    pub fn determinant(&self) -> &BigInt {
        &self.determinant
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        self.coordinates(z).is_some()
    }

    /// Integer coordinates of `z` in the basis rows, if `z` is in the lattice.
    pub fn coordinates(&self, z: &[i64]) -> Option<Vec<BigInt>> {
        let dim = self.rows.len();
        assert_eq!(z.len(), dim, "point has wrong dimension");
        let mut rem: Vec<BigInt> = z.iter().map(|&x| BigInt::from(x)).collect();
        let mut coords = vec![BigInt::zero(); dim];
        for col in (0..dim).rev() {
            let d = &self.rows[col][col];
            let (q, r) = rem[col].div_rem(d);
            if !r.is_zero() {
                return None;
            }
            for c in 0..=col {
                rem[c] -= &q * &self.rows[col][c];
            }
            coords[col] = q;
        }
        debug_assert!(rem.iter().all(|x| x.is_zero()));
        Some(coords)
    }
}

/// Facets, extreme rays, and two-dimensional faces of the generated cone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeGeometry {
    extreme_rays: Vec<Vec<i64>>,
    facet_normals: Vec<Vec<i64>>,
    faces2: Vec<Vec<usize>>,
}

impl ConeGeometry {
    /// Primitive generators of the extreme rays, sorted.
    pub fn extreme_rays(&self) -> &[Vec<i64>] {
        &self.extreme_rays
    }

    /// Primitive inward facet normals, sorted.  A point lies in the cone
    /// exactly when every normal pairs nonnegatively with it.
    pub fn facet_normals(&self) -> &[Vec<i64>] {
        &self.facet_normals
    }

    /// Two-dimensional faces, each given as the sorted indices of the
    /// generators lying on it.
    pub fn faces2(&self) -> &[Vec<usize>] {
        &self.faces2
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        self.facet_normals.iter().all(|n| dot_ii(n, z) >= 0)
    }

    /// Strict interior test for an integer point.
    pub fn contains_interior(&self, z: &[i64]) -> bool {
        self.facet_normals.iter().all(|n| dot_ii(n, z) > 0)
    }

    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        self.facet_normals
            .iter()
            .all(|n| n.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum::<f64>() >= -tol)
    }

    pub fn contains_interior_f64(&self, x: &[f64], tol: f64) -> bool {
        self.facet_normals
            .iter()
            .all(|n| n.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum::<f64>() > tol)
    }
}

/// Outcome of solving `<eta, X_j> = 1` for every generator.  The solution is
/// unique when it exists because the generators span the space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoplanarityCertificate {
    Coplanar { eta: Vec<Rat> },
    NotCoplanar,
}

impl CoplanarityCertificate {
    pub fn eta(&self) -> Option<&[Rat]> {
        match self {
            CoplanarityCertificate::Coplanar { eta } => Some(eta),
            CoplanarityCertificate::NotCoplanar => None,
        }
    }
}

/// A validated generator set with its cached geometry.
///
/// Duplicates are kept: they do not change the lattice, cone, or semigroup,
/// but they do change how many walks reach a point.
#[derive(Debug, Clone)]
pub struct VectorSet {
    dim: usize,
    vectors: Vec<Vec<i64>>,
    distinct: Vec<Vec<i64>>,
    alpha: Vec<Rat>,
    alpha_int: Vec<i64>,
    lattice: LatticeBasis,
    cone: ConeGeometry,
    coplanarity: CoplanarityCertificate,
}

impl VectorSet {
    /// Validate `vectors` and compute the cached geometry.
    ///
    /// Checks run in order: shape, zero vectors, the strict half-space
    /// condition (an exact rational witness is produced), then full rank.
    pub fn new(vectors: Vec<Vec<i64>>) -> Result<Self, VecSetError> {
        if vectors.is_empty() {
            return Err(VecSetError::EmptyInput);
        }
        if vectors.len() < 2 {
            return Err(VecSetError::TooFewGenerators(vectors.len()));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(VecSetError::DimensionMismatch { index: 0, expected: 1, found: 0 });
        }
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(VecSetError::DimensionMismatch {
                    index,
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().all(|&x| x == 0) {
                return Err(VecSetError::ZeroVector(index));
            }
        }
        let distinct: Vec<Vec<i64>> = vectors
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        // <X_j, a> >= 1 is feasible exactly when a strict half-space exists.
        let system: Vec<Constraint> = distinct
            .iter()
            .map(|v| {
                Constraint::at_least(v.iter().map(|&x| rat_int(x)).collect(), rat_int(1))
            })
            .collect();
        let alpha = exact::feasible_point(&system, dim).ok_or(VecSetError::NoHalfSpace)?;
        debug_assert!(distinct.iter().all(|v| dot_ir(v, &alpha) >= rat_int(1)));
        let rank = exact::rank_int(&distinct);
        if rank < dim {
            return Err(VecSetError::NotFullRank { rank, dim });
        }
        let alpha_int = exact::scale_to_int(&alpha);
        let lattice = LatticeBasis::from_rows(&distinct, dim);
        let cone = cone_geometry(&vectors, &distinct, dim);
        let coplanarity = coplanarity(&distinct);
        Ok(VectorSet {
            dim,
            vectors,
            distinct,
            alpha,
            alpha_int,
            lattice,
            cone,
            coplanarity,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators, duplicates included.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    /// Deduplicated generators in sorted order.
    pub fn distinct(&self) -> &[Vec<i64>] {
        &self.distinct
    }

    /// Rational functional with `<X_j, alpha> >= 1` for every generator.
    pub fn alpha(&self) -> &[Rat] {
        &self.alpha
    }

    /// `alpha` rescaled to a primitive integer vector; pairs positively with
    /// every generator and grades the semigroup into finite levels.
    pub fn level_form(&self) -> &[i64] {
        &self.alpha_int
    }

    /// Level of a point under [`Self::level_form`].
    pub fn level(&self, z: &[i64]) -> i128 {
        dot_ii(&self.alpha_int, z)
    }

    /// Smallest generator level; every step of a walk climbs at least this.
    pub fn min_step_level(&self) -> i128 {
        self.distinct
            .iter()
            .map(|v| self.level(v))
            .min()
            .expect("nonempty")
    }

    pub fn lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    pub fn cone(&self) -> &ConeGeometry {
        &self.cone
    }

    pub fn coplanarity(&self) -> &CoplanarityCertificate {
        &self.coplanarity
    }

    /// The functional with `<eta, X_j> = 1` for all generators, if one exists.
    pub fn eta(&self) -> Option<&[Rat]> {
        self.coplanarity.eta()
    }

    /// `min_j <X_j, alpha> / |alpha|`: every walk to `z` has at most
    /// `|z| / delta` steps of any one generator.
    pub fn delta(&self) -> f64 {
        let min_pair = self
            .distinct
            .iter()
            .map(|v| dot_ii(&self.alpha_int, v))
            .min()
            .expect("nonempty") as f64;
        let norm = self
            .alpha_int
            .iter()
            .map(|&x| (x as f64) * (x as f64))
            .sum::<f64>()
            .sqrt();
        min_pair / norm
    }

    /// Squared diameter of the fundamental zonotope `{sum c_j X_j : 0 <= c_j < 1}`
    /// over the distinct generators.  Every point of the cone is within this
    /// distance (unsquared) of the semigroup.
    pub fn zonotope_diameter_sq(&self) -> i128 {
        let m = self.distinct.len();
        if m <= 16 {
            // The diameter of a zonotope is attained at a +/-1 sign vector.
            let mut best: i128 = 0;
            for mask in 0u32..(1 << m) {
                let mut p = vec![0i128; self.dim];
                for (j, v) in self.distinct.iter().enumerate() {
                    let sign: i128 = if mask >> j & 1 == 1 { 1 } else { -1 };
                    for (c, &x) in p.iter_mut().zip(v) {
                        *c += sign * x as i128;
                    }
                }
                let norm_sq: i128 = p.iter().map(|&c| c * c).sum();
                best = best.max(norm_sq);
            }
            best
        } else {
            // Fall back to (sum of norms)^2, an upper bound on the diameter.
            let sum: f64 = self
                .distinct
                .iter()
                .map(|v| (dot_ii(v, v) as f64).sqrt())
                .sum();
            (sum * sum).ceil() as i128 + 1
        }
    }

    /// Upper bound on the distance from any cone point to the semigroup.
    pub fn covering_radius(&self) -> f64 {
        (self.zonotope_diameter_sq() as f64).sqrt()
    }
}

fn coplanarity(distinct: &[Vec<i64>]) -> CoplanarityCertificate {
    let a: Vec<Vec<Rat>> = distinct
        .iter()
        .map(|v| v.iter().map(|&x| rat_int(x)).collect())
        .collect();
    let b: Vec<Rat> = vec![rat_int(1); distinct.len()];
    match exact::solve(&a, &b) {
        Some(eta) => CoplanarityCertificate::Coplanar { eta },
        None => CoplanarityCertificate::NotCoplanar,
    }
}

fn cone_geometry(vectors: &[Vec<i64>], distinct: &[Vec<i64>], dim: usize) -> ConeGeometry {
    let dirs: Vec<Vec<i64>> = distinct
        .iter()
        .map(|v| primitive_i64(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect::<Vec<_>>();
    let facet_normals = if dim == 2 {
        planar_facets(&dirs)
    } else {
        dual_extreme_rays(&dirs, dim)
    };
    debug_assert!(vectors
        .iter()
        .all(|v| facet_normals.iter().all(|n| dot_ii(n, v) >= 0)));

    // A direction spans an extreme ray exactly when its active facets cut
    // space down to one dimension.
    let mut extreme_rays: Vec<Vec<i64>> = dirs
        .iter()
        .filter(|d| {
            let active: Vec<Vec<i64>> = facet_normals
                .iter()
                .filter(|n| dot_ii(n, d) == 0)
                .cloned()
                .collect();
            exact::rank_int(&active) == dim - 1
        })
        .cloned()
        .collect();
    extreme_rays.sort();

    let faces2 = two_faces(vectors, &extreme_rays, &facet_normals, dim);
    ConeGeometry { extreme_rays, facet_normals, faces2 }
}

/// Facets in the plane: sort directions by angle (exactly, via cross
/// products) and take inward perpendiculars of the two extremes.
fn planar_facets(dirs: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut sorted = dirs.to_vec();
    // All directions lie in an open half-plane, so the cross product gives a
    // total angular order with no ties after primitive dedup.
    sorted.sort_by(|u, v| {
        let cross = u[0] as i128 * v[1] as i128 - u[1] as i128 * v[0] as i128;
         0i128.cmp(&cross)
    });
    let lo = sorted.first().expect("nonempty").clone();
    let hi = sorted.last().expect("nonempty").clone();
    let mut normals = Vec::new();
    for (ray, other) in [(&lo, &hi), (&hi, &lo)] {
        let mut n = vec![-ray[1], ray[0]];
        if dot_ii(&n, other) < 0 {
            n = vec![ray[1], -ray[0]];
        }
        normals.push(primitive_i64(&n));
    }
    normals.sort();
    normals.dedup();
    normals
}

/// Extreme rays of `{n : <d, n> >= 0 for all d}` by the double description
/// method.  For a full-dimensional primal cone these are exactly the facet
/// normals of the primal.
fn dual_extreme_rays(dirs: &[Vec<i64>], dim: usize) -> Vec<Vec<i64>> {
    let mut lines: Vec<Vec<BigInt>> = (0..dim)
        .map(|i| {
            let mut e = vec![BigInt::zero(); dim];
            e[i] = BigInt::from(1);
            e
        })
        .collect();
    let mut rays: Vec<Vec<BigInt>> = Vec::new();
    let mut processed: Vec<&Vec<i64>> = Vec::new();

    let dot_bi = |a: &Vec<i64>, v: &[BigInt]| -> BigInt {
        a.iter().zip(v).map(|(&c, x)| x * BigInt::from(c)).sum()
    };

    for a in dirs {
        if let Some(idx) = lines.iter().position(|l| !dot_bi(a, l).is_zero()) {
            // Split one line on the constraint: it becomes a ray, everything
            // else is projected into the constraint hyperplane.
            let mut pivot = lines.swap_remove(idx);
            if dot_bi(a, &pivot).is_negative() {
                for x in pivot.iter_mut() {
                    *x = -x.clone();
                }
            }
            let pa = dot_bi(a, &pivot);
            for v in lines.iter_mut().chain(rays.iter_mut()) {
                let va = dot_bi(a, v);
                for (c, p) in v.iter_mut().zip(&pivot) {
                    *c = &pa * &*c - &va * p;
                }
                *v = primitive(v);
            }
            rays.push(primitive(&pivot));
        } else {
            let mut keep: Vec<Vec<BigInt>> = Vec::new();
            let mut pos: Vec<Vec<BigInt>> = Vec::new();
            let mut neg: Vec<Vec<BigInt>> = Vec::new();
            for r in rays.drain(..) {
                let d = dot_bi(a, &r);
                if d.is_zero() {
                    keep.push(r);
                } else if d.is_positive() {
                    pos.push(r);
                } else {
                    neg.push(r);
                }
            }
            // Every positive/negative pair meets the hyperplane in a
            // candidate ray; extremality is restored by the rank prune below.
            for p in &pos {
                for n in &neg {
                    let pa = dot_bi(a, p);
                    let na = dot_bi(a, n);
                    let combo: Vec<BigInt> = p
                        .iter()
                        .zip(n)
                        .map(|(pc, nc)| &pa * nc - &na * pc)
                        .collect();
                    if combo.iter().any(|x| !x.is_zero()) {
                        keep.push(primitive(&combo));
                    }
                }
            }
            keep.extend(pos);
            rays = keep;
        }
        processed.push(a);
        rays = prune_to_extreme(rays, &processed, dim - lines.len());
    }
    assert!(lines.is_empty(), "dual cone of a full-dimensional cone is pointed");
    let mut out: Vec<Vec<i64>> = rays
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|x| i64::try_from(x).expect("facet normal fits i64"))
                .collect()
        })
        .collect::<BTreeSet<Vec<i64>>>()
        .into_iter()
        .collect();
    out.sort();
    out
}

/// Keep rays whose active constraints have rank `effective_dim - 1`; those
/// are exactly the extreme rays of the current intermediate cone.
fn prune_to_extreme(
    rays: Vec<Vec<BigInt>>,
    processed: &[&Vec<i64>],
    effective_dim: usize,
) -> Vec<Vec<BigInt>> {
    let mut seen = BTreeSet::new();
    rays.into_iter()
        .filter(|r| {
            let active: Vec<Vec<i64>> = processed
                .iter()
                .filter(|a| {
                    a.iter()
                        .zip(r)
                        .map(|(&c, x)| x * BigInt::from(c))
                        .sum::<BigInt>()
                        .is_zero()
                })
                .map(|a| (*a).clone())
                .collect();
            exact::rank_int(&active) + 1 == effective_dim
        })
        .filter(|r| seen.insert(r.clone()))
        .collect()
}

fn two_faces(
    vectors: &[Vec<i64>],
    extreme_rays: &[Vec<i64>],
    facet_normals: &[Vec<i64>],
    dim: usize,
) -> Vec<Vec<usize>> {
    if dim < 2 || extreme_rays.len() < 2 {
        return Vec::new();
    }
    let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
    for i in 0..extreme_rays.len() {
        for j in (i + 1)..extreme_rays.len() {
            let common: Vec<&Vec<i64>> = facet_normals
                .iter()
                .filter(|n| {
                    dot_ii(n, &extreme_rays[i]) == 0 && dot_ii(n, &extreme_rays[j]) == 0
                })
                .collect();
            let members: Vec<usize> = (0..vectors.len())
                .filter(|&k| common.iter().all(|n| dot_ii(n, &vectors[k]) == 0))
                .collect();
            let span: Vec<Vec<i64>> = members.iter().map(|&k| vectors[k].clone()).collect();
            if exact::rank_int(&span) == 2 {
                faces.insert(members);
            }
        }
    }
    faces.into_iter().collect()
}
