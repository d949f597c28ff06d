//! Walk counts: how many ordered generator sums reach a point.
//!
//! The count obeys the step recurrence `m(z) = sum_j m(z - X_j)` with
//! `m(0) = 1`, summing over all generators with duplicates included.  The
//! same number is `sum over representations u of |u|! / (u_1! ... u_m!)`,
//! which this module keeps available as an independent route.

use std::collections::HashMap;
use std::sync::RwLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::semigroup::Semigroup;
use crate::vecset::VectorSet;

/// Relative tolerance for distance ties in nearest-member queries.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MultiplicityError {
    #[error("point {0:?} lies outside the cone")]
    OutsideCone(Vec<f64>),
    #[error("point {0:?} has no representations")]
    EmptyRepresentationSet(Vec<i64>),
}

/// All `u` in `N^m` with `sum_j u_j X_j = z`, in lexicographic order.
/// Duplicated generators get independent coordinates.
pub fn representations(set: &VectorSet, z: &[i64]) -> Vec<Vec<u64>> {
    assert_eq!(z.len(), set.dim(), "point has wrong dimension");
    if !set.cone().contains(z) || !set.lattice().contains(z) {
        return Vec::new();
    }
    let m = set.len();
    let mut out = Vec::new();
    let mut u = vec![0u64; m];
    let mut rem: Vec<i64> = z.to_vec();
    dfs_representations(set, 0, &mut rem, &mut u, &mut out);
    out
}

fn dfs_representations(
    set: &VectorSet,
    j: usize,
    rem: &mut Vec<i64>,
    u: &mut Vec<u64>,
    out: &mut Vec<Vec<u64>>,
) {
    if !set.cone().contains(rem) {
        return;
    }
    if j == set.len() {
        if rem.iter().all(|&c| c == 0) {
            out.push(u.clone());
        }
        return;
    }
    let gen = &set.vectors()[j];
    let max_c = (set.level(rem) / set.level(gen)) as i64;
    debug_assert!(max_c >= 0);
    for c in 0..=max_c {
        u[j] = c as u64;
        for (r, g) in rem.iter_mut().zip(gen) {
            *r -= c * g;
        }
        dfs_representations(set, j + 1, rem, u, out);
        for (r, g) in rem.iter_mut().zip(gen) {
            *r += c * g;
        }
    }
    u[j] = 0;
}

/// Walk count via the representation enumeration: each `u` contributes the
/// number of orderings `|u|! / (u_1! ... u_m!)`.
pub fn multiplicity_from_representations(set: &VectorSet, z: &[i64]) -> BigUint {
    let mut total = BigUint::zero();
    for u in representations(set, z) {
        total += orderings(&u);
    }
    total
}

/// Multinomial coefficient `(sum u)! / prod u_j!`.
fn orderings(u: &[u64]) -> BigUint {
    let total: u64 = u.iter().sum();
    let mut num = factorial(total);
    for &c in u {
        num /= factorial(c);
    }
    num
}

fn factorial(n: u64) -> BigUint {
    let mut f = BigUint::one();
    for k in 2..=n {
        f *= BigUint::from(k);
    }
    f
}

/// Natural log of a positive big integer, stable for huge values.
pub fn ln_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log of zero");
    let bits = x.bits();
    if bits <= 512 {
        return x.to_f64().expect("fits f64 range").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit mantissa");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Nearest semigroup member to a real query point.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestMember {
    pub point: Vec<i64>,
    pub distance: f64,
    pub multiplicity: BigUint,
}

/// Memoized walk counts over a coordinate box.
///
/// Queries inside the box share one table across calls; queries outside fall
/// back to per-call scratch space, so they stay correct but do not reuse
/// work.  Size the box to cover the region a caller will sweep.
pub struct MultiplicityTable<'a> {
    semigroup: Semigroup<'a>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    memo: RwLock<HashMap<Vec<i64>, BigUint>>,
}

impl<'a> MultiplicityTable<'a> {
    pub fn new(set: &'a VectorSet, lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), set.dim());
        assert_eq!(hi.len(), set.dim());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b), "box is empty");
        MultiplicityTable {
            semigroup: Semigroup::new(set),
            lo,
            hi,
            memo: RwLock::new(HashMap::new()),
        }
    }

    /// Box `[-radius, radius]^s`.
    pub fn with_radius(set: &'a VectorSet, radius: i64) -> Self {
        let lo = vec![-radius; set.dim()];
        let hi = vec![radius; set.dim()];
        Self::new(set, lo, hi)
    }

    pub fn set(&self) -> &'a VectorSet {
        self.semigroup.set()
    }

    pub fn semigroup(&self) -> &Semigroup<'a> {
        &self.semigroup
    }

    fn in_box(&self, z: &[i64]) -> bool {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(c, (a, b))| a <= c && c <= b)
    }

    /// Walk count of `z`; zero off the semigroup.
    pub fn multiplicity(&self, z: &[i64]) -> BigUint {
        let set = self.semigroup.set();
        assert_eq!(z.len(), set.dim(), "point has wrong dimension");
        if !set.cone().contains(z) || !set.lattice().contains(z) {
            return BigUint::zero();
        }
        if let Some(v) = self.memo.read().expect("lock").get(z) {
            return v.clone();
        }
        let mut memo = self.memo.write().expect("lock");
        let mut scratch: HashMap<Vec<i64>, BigUint> = HashMap::new();
        self.evaluate(z.to_vec(), &mut memo, &mut scratch);
        memo.get(z).or_else(|| scratch.get(z)).expect("evaluated").clone()
    }

    /// Iterative post-order evaluation of the step recurrence.  Levels
    /// decrease strictly along predecessor edges, so the walk terminates.
    fn evaluate(
        &self,
        z: Vec<i64>,
        memo: &mut HashMap<Vec<i64>, BigUint>,
        scratch: &mut HashMap<Vec<i64>, BigUint>,
    ) {
        let set = self.semigroup.set();
        let mut stack = vec![z];
        while let Some(top) = stack.last() {
            if memo.contains_key(top) || scratch.contains_key(top) {
                stack.pop();
                continue;
            }
            if top.iter().all(|&c| c == 0) {
                let z = stack.pop().expect("nonempty");
                self.store(z, BigUint::one(), memo, scratch);
                continue;
            }
            let mut sum = BigUint::zero();
            let mut pending: Vec<Vec<i64>> = Vec::new();
            for gen in set.vectors() {
                let pred: Vec<i64> = top.iter().zip(gen).map(|(a, b)| a - b).collect();
                if !set.cone().contains(&pred) {
                    continue;
                }
                match memo.get(&pred).or_else(|| scratch.get(&pred)) {
                    Some(v) => sum += v,
                    None => pending.push(pred),
                }
            }
            if pending.is_empty() {
                let z = stack.pop().expect("nonempty");
                self.store(z, sum, memo, scratch);
            } else {
                stack.extend(pending);
            }
        }
    }

    fn store(
        &self,
        z: Vec<i64>,
        value: BigUint,
        memo: &mut HashMap<Vec<i64>, BigUint>,
        scratch: &mut HashMap<Vec<i64>, BigUint>,
    ) {
        if self.in_box(&z) {
            memo.insert(z, value);
        } else {
            scratch.insert(z, value);
        }
    }

    /// Nearest member to the real point `x`, with deterministic tie
    /// handling: distances equal within a relative tolerance are ties,
    /// broken by smaller walk count, then lexicographically smaller point.
    pub fn nearest(&self, x: &[f64]) -> Result<NearestMember, MultiplicityError> {
        let set = self.semigroup.set();
        assert_eq!(x.len(), set.dim(), "point has wrong dimension");
        let scale: f64 = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !set.cone().contains_f64(x, TIE_TOLERANCE * scale) {
            return Err(MultiplicityError::OutsideCone(x.to_vec()));
        }
        let mut radius = set.covering_radius() + 1e-6;
        for _ in 0..8 {
            if let Some(best) = self.nearest_within(x, radius) {
                return Ok(best);
            }
            radius *= 2.0;
        }
        unreachable!("no member within {radius} of {x:?}");
    }

    fn nearest_within(&self, x: &[f64], radius: f64) -> Option<NearestMember> {
        let set = self.semigroup.set();
        let dim = set.dim();
        let lo: Vec<i64> = x.iter().map(|v| (v - radius).floor() as i64).collect();
        let hi: Vec<i64> = x.iter().map(|v| (v + radius).ceil() as i64).collect();
        let mut members: Vec<(f64, Vec<i64>)> = Vec::new();
        let mut z = lo.clone();
        'outer: loop {
            if self.semigroup.contains(&z) {
                let d2: f64 = x
                    .iter()
                    .zip(&z)
                    .map(|(a, &b)| (a - b as f64).powi(2))
                    .sum();
                members.push((d2, z.clone()));
            }
            for k in (0..dim).rev() {
                if z[k] < hi[k] {
                    z[k] += 1;
                    continue 'outer;
                }
                z[k] = lo[k];
            }
            break;
        }
        let best = members
            .iter()
            .map(|(d2, _)| *d2)
            .fold(f64::INFINITY, f64::min);
        if !best.is_finite() || best > radius * radius {
            return None;
        }
        let mut tied: Vec<Vec<i64>> = members
            .into_iter()
            .filter(|(d2, _)| (d2 - best).abs() <= TIE_TOLERANCE * (1.0 + best))
            .map(|(_, z)| z)
            .collect();
        tied.sort();
        let counted: Vec<(BigUint, Vec<i64>)> = tied
            .into_iter()
            .map(|z| (self.multiplicity(&z), z))
            .collect();
        let min_count = counted.iter().map(|(c, _)| c.clone()).min().expect("nonempty");
        let point = counted
            .into_iter()
            .filter(|(c, _)| *c == min_count)
            .map(|(_, z)| z)
            .min()
            .expect("nonempty");
        let distance: f64 = x
            .iter()
            .zip(&point)
            .map(|(a, &b)| (a - b as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        Some(NearestMember { point, distance, multiplicity: min_count })
    }

    /// Walk count extended to real points: the count of the nearest member.
    pub fn multiplicity_at(&self, x: &[f64]) -> Result<BigUint, MultiplicityError> {
        Ok(self.nearest(x)?.multiplicity)
    }
}

/// Exact squared Hausdorff distance between the representation sets of two
/// points, as an integer (the distance itself is usually irrational).
pub fn representation_distance_sq(
    set: &VectorSet,
    z: &[i64],
    z_other: &[i64],
) -> Result<u128, MultiplicityError> {
    let a = representations(set, z);
    if a.is_empty() {
        return Err(MultiplicityError::EmptyRepresentationSet(z.to_vec()));
    }
    let b = representations(set, z_other);
    if b.is_empty() {
        return Err(MultiplicityError::EmptyRepresentationSet(z_other.to_vec()));
    }
    let directed = |from: &[Vec<u64>], to: &[Vec<u64>]| -> u128 {
        from.iter()
            .map(|u| {
                to.iter()
                    .map(|v| {
                        u.iter()
                            .zip(v)
                            .map(|(&a, &b)| {
                                let d = a as i128 - b as i128;
                                (d * d) as u128
                            })
                            .sum::<u128>()
                    })
                    .min()
                    .expect("nonempty")
            })
            .max()
            .expect("nonempty")
    };
    Ok(directed(&a, &b).max(directed(&b, &a)))
}

/// Hausdorff distance between representation sets, as a float.
pub fn representation_distance(
    set: &VectorSet,
    z: &[i64],
    z_other: &[i64],
) -> Result<f64, MultiplicityError> {
    Ok((representation_distance_sq(set, z, z_other)? as f64).sqrt())
}
