//! Growth rigidity: when two generator sets grow at the same rates.
//!
//! For hyperplane generator sets the growth function pins down the set up
//! to iteration: equal growth forces equal cones, proportional hyperplane
//! functionals `eta_x = (q/p) eta_y`, and then a permutation pairing between
//! the `q`-fold iteration of one set and the `p`-fold iteration of the
//! other.  Each step here is decidable, and the verdict carries either the
//! pairing or a concrete refutation.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::exact::{self, Rat};
use crate::growth::{self, GrowthError};
use crate::vecset::VectorSet;

/// Default ceiling on the number of index words an iteration may expand.
pub const DEFAULT_ITERATION_CAP: u128 = 1_000_000;
/// Directions sampled when hunting for a refuting growth gap.
pub const REFUTATION_PROBES: usize = 256;
/// Directions sampled to cross-check a delivered verdict.
pub const VERDICT_PROBES: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum RigidityError {
    #[error("generator sets live in different dimensions: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("generators are not on a common hyperplane")]
    NotCoplanar,
    #[error("iteration would expand {base}^{power} index words, over the cap {cap}")]
    IterationTooLarge { base: usize, power: u32, cap: u128 },
    #[error("no refuting direction found after {probes} probes")]
    InconclusiveSampling { probes: usize },
    #[error("transform matrix is singular")]
    SingularTransform,
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

/// The multiset `X^(p)` of all `p`-fold sums of generators, counted with
/// the number of index words reaching each sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IteratedSet {
    order: u32,
    base_len: usize,
    multiset: Vec<(Vec<i64>, u128)>,
}

impl IteratedSet {
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Sorted `(vector, word count)` pairs.
    pub fn multiset(&self) -> &[(Vec<i64>, u128)] {
        &self.multiset
    }

    pub fn total_words(&self) -> u128 {
        self.multiset.iter().map(|(_, c)| c).sum()
    }

    /// Expand counts into a flat generator list.
    pub fn to_vector_list(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for (v, c) in &self.multiset {
            for _ in 0..usize::try_from(*c).expect("count fits usize") {
                out.push(v.clone());
            }
        }
        out
    }
}

/// `p`-fold sums with word counts, under the default expansion cap.
pub fn iterate(set: &VectorSet, p: u32) -> Result<IteratedSet, RigidityError> {
    iterate_with_cap(set, p, DEFAULT_ITERATION_CAP)
}

pub fn iterate_with_cap(
    set: &VectorSet,
    p: u32,
    cap: u128,
) -> Result<IteratedSet, RigidityError> {
    assert!(p >= 1, "iteration order must be positive");
    let m = set.len() as u128;
    let words = m
        .checked_pow(p)
        .filter(|w| *w <= cap)
        .ok_or(RigidityError::IterationTooLarge { base: set.len(), power: p, cap })?;
    let mut current: BTreeMap<Vec<i64>, u128> = BTreeMap::new();
    current.insert(vec![0; set.dim()], 1);
    for _ in 0..p {
        let mut next: BTreeMap<Vec<i64>, u128> = BTreeMap::new();
        for (z, count) in &current {
            for v in set.vectors() {
                let sum: Vec<i64> = z.iter().zip(v).map(|(a, b)| a + b).collect();
                *next.entry(sum).or_insert(0) += count;
            }
        }
        current = next;
    }
    let multiset: Vec<(Vec<i64>, u128)> = current.into_iter().collect();
    let iterated = IteratedSet { order: p, base_len: set.len(), multiset };
    debug_assert_eq!(iterated.total_words(), words);
    Ok(iterated)
}

/// Do two iterations contain the same vectors with the same word counts?
pub fn permutation_equal(a: &IteratedSet, b: &IteratedSet) -> bool {
    a.multiset == b.multiset
}

/// One growth comparison along a probe direction.
#[derive(Debug, Clone)]
pub struct GammaProbe {
    pub theta: Vec<f64>,
    pub left: f64,
    pub right: f64,
}

/// Diagnostics attached to every verdict.
#[derive(Debug, Clone)]
pub struct RigidityNotes {
    pub cones_equal: bool,
    pub functionals_parallel: bool,
    pub probes: Vec<GammaProbe>,
    /// Largest `|left - right|` over the recorded probes.
    pub max_probe_gap: f64,
}

#[derive(Debug, Clone)]
pub enum RigidityWitness {
    /// The common multiset of `left^(q)` and `right^(p)`.
    MultisetPairing { left_power: u32, right_power: u32, multiset: Vec<(Vec<i64>, u128)> },
    /// A vector reached by different word counts.
    MultisetMismatch {
        left_power: u32,
        right_power: u32,
        example: Vec<i64>,
        left_count: u128,
        right_count: u128,
    },
    ConeMismatch { left_rays: Vec<Vec<i64>>, right_rays: Vec<Vec<i64>> },
    /// A direction with a growth gap above the tolerance.
    RefutingDirection { theta: Vec<f64>, left: f64, right: f64 },
}

#[derive(Debug, Clone)]
pub struct RigidityVerdict {
    pub equivalent: bool,
    /// `(q, p)` with `eta_left = (q/p) eta_right`, when both exist and the
    /// cones agree.
    pub scale: Option<(u64, u64)>,
    pub witness: RigidityWitness,
    pub notes: RigidityNotes,
}

/// Decide whether two hyperplane generator sets have identical growth.
pub fn same_growth(
    x: &VectorSet,
    y: &VectorSet,
    tolerance: f64,
) -> Result<RigidityVerdict, RigidityError> {
    same_growth_with_cap(x, y, tolerance, DEFAULT_ITERATION_CAP)
}

/// As [`same_growth`], with an explicit ceiling on iteration words.
pub fn same_growth_with_cap(
    x: &VectorSet,
    y: &VectorSet,
    tolerance: f64,
    cap: u128,
) -> Result<RigidityVerdict, RigidityError> {
    if x.dim() != y.dim() {
        return Err(RigidityError::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    let eta_x = x.eta().ok_or(RigidityError::NotCoplanar)?;
    let eta_y = y.eta().ok_or(RigidityError::NotCoplanar)?;

    // Growth functions share a support exactly when the cones agree.
    if x.cone().extreme_rays() != y.cone().extreme_rays() {
        return Ok(RigidityVerdict {
            equivalent: false,
            scale: None,
            witness: RigidityWitness::ConeMismatch {
                left_rays: x.cone().extreme_rays().to_vec(),
                right_rays: y.cone().extreme_rays().to_vec(),
            },
            notes: RigidityNotes {
                cones_equal: false,
                functionals_parallel: false,
                probes: Vec::new(),
                max_probe_gap: 0.0,
            },
        });
    }

    match proportionality(eta_x, eta_y) {
        Some(c) => {
            debug_assert!(c.is_positive());
            let (q, p) = lowest_terms(&c)?;
            let left = iterate_with_cap(x, q, cap)?;
            let right = iterate_with_cap(y, p, cap)?;
            let equal = permutation_equal(&left, &right);
            let witness = if equal {
                RigidityWitness::MultisetPairing {
                    left_power: q,
                    right_power: p,
                    multiset: left.multiset().to_vec(),
                }
            } else {
                first_mismatch(&left, &right)
            };
            let probes = probe_gamma(x, y, VERDICT_PROBES)?;
            let max_probe_gap = probes
                .iter()
                .map(|p| (p.left - p.right).abs())
                .fold(0.0, f64::max);
            Ok(RigidityVerdict {
                equivalent: equal,
                scale: Some((q as u64, p as u64)),
                witness,
                notes: RigidityNotes {
                    cones_equal: true,
                    functionals_parallel: true,
                    probes,
                    max_probe_gap,
                },
            })
        }
        None => {
            // Proportionality failed, so the growth functions cannot agree
            // everywhere; hunt for a direction that shows it.
            let mut probes = Vec::new();
            for theta in interior_directions(x, REFUTATION_PROBES) {
                let left = growth::gamma_closed(x, &theta)?;
                let right = growth::gamma_closed(y, &theta)?;
                probes.push(GammaProbe { theta: theta.clone(), left, right });
                if (left - right).abs() > tolerance {
                    let max_probe_gap = probes
                        .iter()
                        .map(|p| (p.left - p.right).abs())
                        .fold(0.0, f64::max);
                    return Ok(RigidityVerdict {
                        equivalent: false,
                        scale: None,
                        witness: RigidityWitness::RefutingDirection { theta, left, right },
                        notes: RigidityNotes {
                            cones_equal: true,
                            functionals_parallel: false,
                            probes,
                            max_probe_gap,
                        },
                    });
                }
            }
            Err(RigidityError::InconclusiveSampling { probes: REFUTATION_PROBES })
        }
    }
}

/// `c` with `eta_x = c eta_y`, if it exists.
fn proportionality(eta_x: &[Rat], eta_y: &[Rat]) -> Option<Rat> {
    let pivot = eta_y.iter().position(|v| !v.is_zero())?;
    if eta_x[pivot].is_zero() {
        return None;
    }
    let c = &eta_x[pivot] / &eta_y[pivot];
    for (a, b) in eta_x.iter().zip(eta_y) {
        if *a != b * &c {
            return None;
        }
    }
    Some(c)
}

fn lowest_terms(c: &Rat) -> Result<(u32, u32), RigidityError> {
    let to_u32 = |v: &BigInt| -> Result<u32, RigidityError> {
        u32::try_from(v).map_err(|_| RigidityError::IterationTooLarge {
            base: 0,
            power: u32::MAX,
            cap: DEFAULT_ITERATION_CAP,
        })
    };
    Ok((to_u32(c.numer())?, to_u32(c.denom())?))
}

fn first_mismatch(left: &IteratedSet, right: &IteratedSet) -> RigidityWitness {
    let rc: BTreeMap<&Vec<i64>, u128> =
        right.multiset().iter().map(|(v, c)| (v, *c)).collect();
    for (v, c) in left.multiset() {
        if rc.get(v) != Some(c) {
            return RigidityWitness::MultisetMismatch {
                left_power: left.order(),
                right_power: right.order(),
                example: v.clone(),
                left_count: *c,
                right_count: rc.get(v).copied().unwrap_or(0),
            };
        }
    }
    let lc: BTreeMap<&Vec<i64>, u128> =
        left.multiset().iter().map(|(v, c)| (v, *c)).collect();
    for (v, c) in right.multiset() {
        if lc.get(v).is_none() {
            return RigidityWitness::MultisetMismatch {
                left_power: left.order(),
                right_power: right.order(),
                example: v.clone(),
                left_count: 0,
                right_count: *c,
            };
        }
    }
    unreachable!("multisets differ but no mismatch found");
}

fn probe_gamma(
    x: &VectorSet,
    y: &VectorSet,
    n: usize,
) -> Result<Vec<GammaProbe>, RigidityError> {
    let mut probes = Vec::with_capacity(n);
    for theta in interior_directions(x, n) {
        let left = growth::gamma_closed(x, &theta)?;
        let right = growth::gamma_closed(y, &theta)?;
        probes.push(GammaProbe { theta, left, right });
    }
    Ok(probes)
}

/// Deterministic strictly interior unit directions: positive quasi-random
/// mixtures of the extreme rays.
pub fn interior_directions(set: &VectorSet, n: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let rays = set.cone().extreme_rays();
    let dim = set.dim();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut dir = vec![0.0; dim];
        for (j, ray) in rays.iter().enumerate() {
            let phase = (i + 1) as f64 * (PRIMES[j % PRIMES.len()] as f64).sqrt();
            let weight = 0.2 + (phase - phase.floor());
            for (d, &r) in dir.iter_mut().zip(ray) {
                *d += weight * r as f64;
            }
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        out.push(dir.into_iter().map(|v| v / norm).collect());
    }
    out
}

/// Apply an invertible integer matrix to every generator.
pub fn transform_set(set: &VectorSet, t: &[Vec<i64>]) -> Result<VectorSet, RigidityError> {
    let dim = set.dim();
    assert_eq!(t.len(), dim, "matrix has wrong row count");
    assert!(t.iter().all(|row| row.len() == dim), "matrix has ragged rows");
    if exact::rank_int(t) < dim {
        return Err(RigidityError::SingularTransform);
    }
    let transformed: Vec<Vec<i64>> = set
        .vectors()
        .iter()
        .map(|v| {
            t.iter()
                .map(|row| {
                    let acc = exact::dot_ii(row, v);
                    i64::try_from(acc).expect("transformed coordinate fits i64")
                })
                .collect()
        })
        .collect();
    Ok(VectorSet::new(transformed).expect("invertible image of a valid set is valid"))
}

/// A unimodular shear making the hyperplane functional's last coordinate
/// nonzero, so the last-coordinate gauge becomes available after
/// transforming.  Identity when it already is nonzero.
pub fn normalizing_shear(set: &VectorSet) -> Result<Vec<Vec<i64>>, RigidityError> {
    let eta = set.eta().ok_or(RigidityError::NotCoplanar)?;
    let dim = set.dim();
    let mut t: Vec<Vec<i64>> = (0..dim)
        .map(|i| {
            let mut row = vec![0i64; dim];
            row[i] = 1;
            row
        })
        .collect();
    if !eta[dim - 1].is_zero() {
        return Ok(t);
    }
    let k = eta.iter().position(|v| !v.is_zero()).expect("eta is nonzero");
    // Sending x to x with x_k replaced by x_k - x_last moves eta_k into the
    // last slot of the transformed functional.
    t[k][dim - 1] = -1;
    Ok(t)
}
