//! Membership, saturated cones, and the Frobenius set.
//!
//! The semigroup is the set of all finite sums of generators.  Saturation of
//! a shifted cone reduces to finitely many membership checks: the cone at `g`
//! is saturated exactly when `g + w` is a member for every lattice point `w`
//! of the half-open fundamental zonotope.  The Frobenius set collects the
//! apexes of the maximal saturated cones; it is found by sweeping lattice
//! points of the cone in increasing level order and certifying that a final
//! band of levels contributes nothing new.

use std::collections::HashMap;
use std::sync::RwLock;

use num_traits::Zero;
use thiserror::Error;

use crate::exact::{self, Constraint, Rat};
use crate::vecset::VectorSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemigroupError {
    #[error("point {0:?} is not in the semigroup")]
    NotInSemigroup(Vec<i64>),
    #[error("search region certificate still failing after {rounds} growth rounds")]
    RegionGrowthExceeded { rounds: usize },
}

/// Membership oracle with a shared memo table.
///
/// The table only ever grows and answers are immutable once computed, so the
/// struct is freely shareable across threads.
pub struct Semigroup<'a> {
    set: &'a VectorSet,
    memo: RwLock<HashMap<Vec<i64>, bool>>,
}

impl<'a> Semigroup<'a> {
    pub fn new(set: &'a VectorSet) -> Self {
        Semigroup { set, memo: RwLock::new(HashMap::new()) }
    }

    pub fn set(&self) -> &'a VectorSet {
        self.set
    }

    /// Is `z` a finite sum of generators?
    pub fn contains(&self, z: &[i64]) -> bool {
        if !self.set.cone().contains(z) || !self.set.lattice().contains(z) {
            return false;
        }
        if let Some(&v) = self.memo.read().expect("lock").get(z) {
            return v;
        }
        let mut memo = self.memo.write().expect("lock");
        self.descend(z.to_vec(), &mut memo);
        memo[z]
    }

    /// Iterative depth-first evaluation of the step recurrence
    /// `z in J iff z = 0 or some z - X_j in J`, restricted to the cone.
    /// Levels strictly decrease along edges, so the walk terminates.
    fn descend(&self, z: Vec<i64>, memo: &mut HashMap<Vec<i64>, bool>) {
        let mut stack = vec![z];
        while let Some(top) = stack.last() {
            if memo.contains_key(top) {
                stack.pop();
                continue;
            }
            if top.iter().all(|&c| c == 0) {
                memo.insert(stack.pop().expect("nonempty"), true);
                continue;
            }
            let mut known = Some(false);
            let mut pending: Vec<Vec<i64>> = Vec::new();
            for gen in self.set.distinct() {
                let pred: Vec<i64> = top.iter().zip(gen).map(|(a, b)| a - b).collect();
                if !self.set.cone().contains(&pred) {
                    continue;
                }
                match memo.get(&pred) {
                    Some(true) => {
                        known = Some(true);
                        break;
                    }
                    Some(false) => {}
                    None => {
                        known = None;
                        pending.push(pred);
                    }
                }
            }
            match known {
                Some(v) => {
                    memo.insert(stack.pop().expect("nonempty"), v);
                }
                None => stack.extend(pending),
            }
        }
    }

    /// Finite saturation test: is every lattice point of `g + cone` a member?
    pub fn is_saturated(
        &self,
        ctx: &SaturationContext,
        g: &[i64],
    ) -> Result<bool, SemigroupError> {
        if !self.contains(g) {
            return Err(SemigroupError::NotInSemigroup(g.to_vec()));
        }
        Ok(self.saturated_unchecked(ctx, g))
    }

    fn saturated_unchecked(&self, ctx: &SaturationContext, g: &[i64]) -> bool {
        ctx.omega_star.iter().all(|w| {
            let shifted: Vec<i64> = g.iter().zip(w).map(|(a, b)| a + b).collect();
            self.contains(&shifted)
        })
    }

    /// Apexes of the maximal saturated cones.
    ///
    /// Lattice points of the cone are swept in increasing level order; a
    /// swept point joins the result when it is saturated and no earlier
    /// result lies strictly below it in the cone order.  The sweep stops once
    /// a full band of levels (wide enough that no saturated point can jump
    /// it) contains no new apex and every saturated member in the band is
    /// strictly above some apex already found.  The band width bounds the
    /// level of any indecomposable cone-lattice step, which is what makes
    /// the stopping rule a certificate.
    pub fn frobenius_set(&self, ctx: &SaturationContext) -> Result<FrobeniusSet, SemigroupError> {
        const MAX_ROUNDS: usize = 24;
        const MAX_BOX_POINTS: i128 = 30_000_000;

        let set = self.set;
        let band: i128 = set.distinct().iter().map(|v| set.level(v)).sum();
        let g0_level = set.level(&ctx.anchor);
        let mut cap = g0_level.max(band) + 2 * band;
        for round in 0..MAX_ROUNDS {
            let points = match slab_points(set, cap, MAX_BOX_POINTS) {
                Some(p) => p,
                None => return Err(SemigroupError::RegionGrowthExceeded { rounds: round }),
            };
            let mut apexes: Vec<Vec<i64>> = Vec::new();
            let mut band_members: Vec<Vec<i64>> = Vec::new();
            for z in &points {
                if !self.contains(z) {
                    continue;
                }
                if set.level(z) > cap - band {
                    band_members.push(z.clone());
                }
                if !self.saturated_unchecked(ctx, z) {
                    continue;
                }
                let dominated = apexes.iter().any(|g| {
                    let diff: Vec<i64> = z.iter().zip(g).map(|(a, b)| a - b).collect();
                    diff.iter().any(|&c| c != 0) && set.cone().contains(&diff)
                });
                if !dominated {
                    apexes.push(z.clone());
                }
            }
            let new_apex_in_band = apexes.iter().any(|g| set.level(g) > cap - band);
            let band_covered = band_members.iter().all(|z| {
                !self.saturated_unchecked(ctx, z)
                    || apexes.iter().any(|g| {
                        let diff: Vec<i64> = z.iter().zip(g).map(|(a, b)| a - b).collect();
                        diff.iter().any(|&c| c != 0) && set.cone().contains(&diff)
                    })
            });
            if !new_apex_in_band && band_covered {
                apexes.sort();
                let transcripts = apexes
                    .iter()
                    .map(|g| {
                        ctx.omega_star
                            .iter()
                            .map(|w| g.iter().zip(w).map(|(a, b)| a + b).collect())
                            .collect()
                    })
                    .collect();
                debug_assert!(antichain_in_semigroup(self, &apexes));
                return Ok(FrobeniusSet { apexes, transcripts, levels_swept: cap });
            }
            cap += band;
        }
        Err(SemigroupError::RegionGrowthExceeded { rounds: MAX_ROUNDS })
    }
}

fn antichain_in_semigroup(sg: &Semigroup, apexes: &[Vec<i64>]) -> bool {
    apexes.iter().enumerate().all(|(i, g)| {
        apexes.iter().enumerate().all(|(j, h)| {
            if i == j {
                return true;
            }
            let diff: Vec<i64> = g.iter().zip(h).map(|(a, b)| a - b).collect();
            !sg.contains(&diff)
        })
    })
}

/// Integer points of the cone with level in `[0, cap]`, sorted by level then
/// lexicographically.  `None` when the bounding box would be unreasonably big.
fn slab_points(set: &VectorSet, cap: i128, max_points: i128) -> Option<Vec<Vec<i64>>> {
    let dim = set.dim();
    let mut lo = vec![0i128; dim];
    let mut hi = vec![0i128; dim];
    for ray in set.cone().extreme_rays() {
        let lvl = set.level(ray);
        debug_assert!(lvl > 0);
        for k in 0..dim {
            let num = ray[k] as i128 * cap;
            lo[k] = lo[k].min(num.div_euclid(lvl));
            hi[k] = hi[k].max(num.div_euclid(lvl) + if num.rem_euclid(lvl) != 0 { 1 } else { 0 });
        }
    }
    let mut volume: i128 = 1;
    for k in 0..dim {
        volume = volume.checked_mul(hi[k] - lo[k] + 1)?;
        if volume > max_points {
            return None;
        }
    }
    let mut points = Vec::new();
    let mut z: Vec<i64> = lo.iter().map(|&x| x as i64).collect();
    'outer: loop {
        let level = set.level(&z);
        if (0..=cap).contains(&level)
            && set.cone().contains(&z)
            && set.lattice().contains(&z)
        {
            points.push(z.clone());
        }
        for k in (0..dim).rev() {
            if (z[k] as i128) < hi[k] {
                z[k] += 1;
                continue 'outer;
            }
            z[k] = lo[k] as i64;
        }
        break;
    }
    points.sort_by(|a, b| set.level(a).cmp(&set.level(b)).then_with(|| a.cmp(b)));
    Some(points)
}

/// Finite data that reduces saturation to membership checks.
#[derive(Debug, Clone)]
pub struct SaturationContext {
    omega_star: Vec<Vec<i64>>,
    coefficient: u64,
    anchor: Vec<i64>,
    diameter_sq: i128,
}

impl SaturationContext {
    /// Enumerate the lattice points of the half-open zonotope
    /// `{sum c_j X_j : 0 <= c_j < 1}`, find the largest coordinate any of
    /// them needs in a signed integer representation, and anchor a cone that
    /// is saturated by construction.
    pub fn new(set: &VectorSet) -> Self {
        let dirs = set.distinct();
        let dim = set.dim();
        let mut lo = vec![0i64; dim];
        let mut hi = vec![0i64; dim];
        for v in dirs {
            for k in 0..dim {
                lo[k] += v[k].min(0);
                hi[k] += v[k].max(0);
            }
        }
        let mut omega_star = Vec::new();
        let mut w: Vec<i64> = lo.clone();
        'outer: loop {
            if set.lattice().contains(&w) && zonotope_contains(dirs, &w) {
                omega_star.push(w.clone());
            }
            for k in (0..dim).rev() {
                if w[k] < hi[k] {
                    w[k] += 1;
                    continue 'outer;
                }
                w[k] = lo[k];
            }
            break;
        }
        omega_star.sort();

        let coefficient = omega_star
            .iter()
            .map(|w| min_linf_combination(dirs, w).expect("zonotope lattice point is in the lattice"))
            .max()
            .unwrap_or(0);
        let anchor: Vec<i64> = (0..dim)
            .map(|k| coefficient as i64 * dirs.iter().map(|v| v[k]).sum::<i64>())
            .collect();
        SaturationContext {
            omega_star,
            coefficient,
            anchor,
            diameter_sq: set.zonotope_diameter_sq(),
        }
    }

    /// Lattice points of the half-open fundamental zonotope, sorted.
    pub fn omega_star(&self) -> &[Vec<i64>] {
        &self.omega_star
    }

    /// Largest coordinate needed to represent any zonotope lattice point as
    /// a signed integer combination of generators.
    pub fn coefficient(&self) -> u64 {
        self.coefficient
    }

    /// `coefficient * (sum of distinct generators)`: apex of a cone that is
    /// saturated by construction.
    pub fn anchor(&self) -> &[i64] {
        &self.anchor
    }

    /// Exact square of the covering radius: every cone point is closer than
    /// the zonotope diameter to some member.
    pub fn diameter_sq(&self) -> i128 {
        self.diameter_sq
    }

    pub fn covering_radius(&self) -> f64 {
        (self.diameter_sq as f64).sqrt()
    }
}

/// Is `w` in the half-open zonotope of `dirs`?  Exact rational feasibility
/// of `sum c_j dirs_j = w` with `0 <= c_j < 1`.
fn zonotope_contains(dirs: &[Vec<i64>], w: &[i64]) -> bool {
    let dim = w.len();
    let m = dirs.len();
    let eq_lhs: Vec<Vec<Rat>> = (0..dim)
        .map(|k| dirs.iter().map(|v| exact::rat_int(v[k])).collect())
        .collect();
    let eq_rhs: Vec<Rat> = w.iter().map(|&x| exact::rat_int(x)).collect();
    let mut bounds = Vec::with_capacity(2 * m);
    for j in 0..m {
        let mut e = vec![Rat::zero(); m];
        e[j] = exact::rat_int(1);
        bounds.push(Constraint::at_least(e.clone(), Rat::zero()));
        bounds.push(Constraint::less_than(e, exact::rat_int(1)));
    }
    exact::feasible_with_equalities(&eq_lhs, &eq_rhs, &bounds, m).is_some()
}

/// Smallest `B` such that `w = sum a_j dirs_j` has an integer solution with
/// `|a_j| <= B`, or `None` if nothing is found below a generous cap.
fn min_linf_combination(dirs: &[Vec<i64>], w: &[i64]) -> Option<u64> {
    (0..=2048u64).find(|&b| has_combination_within(dirs, w, b as i64))
}

/// Does `target = sum a_j dirs_j` admit an integer solution with
/// `|a_j| <= bound`?  Depth-first search with coordinate interval pruning.
fn has_combination_within(dirs: &[Vec<i64>], target: &[i64], bound: i64) -> bool {
    let dim = target.len();
    let m = dirs.len();
    // reach[j][k]: max total |contribution| of generators j.. to coordinate k.
    let mut reach = vec![vec![0i128; dim]; m + 1];
    for j in (0..m).rev() {
        for k in 0..dim {
            reach[j][k] = reach[j + 1][k] + (dirs[j][k].unsigned_abs() as i128) * bound as i128;
        }
    }
    fn dfs(
        dirs: &[Vec<i64>],
        reach: &[Vec<i128>],
        rem: &mut Vec<i128>,
        j: usize,
        bound: i64,
    ) -> bool {
        if rem.iter().enumerate().any(|(k, &r)| r.abs() > reach[j][k]) {
            return false;
        }
        if j == dirs.len() {
            return true;
        }
        for a in -bound..=bound {
            for (k, r) in rem.iter_mut().enumerate() {
                *r -= a as i128 * dirs[j][k] as i128;
            }
            if dfs(dirs, reach, rem, j + 1, bound) {
                return true;
            }
            for (k, r) in rem.iter_mut().enumerate() {
                *r += a as i128 * dirs[j][k] as i128;
            }
        }
        false
    }
    let mut rem: Vec<i128> = target.iter().map(|&x| x as i128).collect();
    dfs(dirs, &reach, &mut rem, 0, bound)
}

/// Is `target` an integer combination of `dirs` with coefficients bounded by
/// `max_bound` in absolute value?
#[cfg(test)]
pub(crate) fn has_integer_combination(dirs: &[Vec<i64>], target: &[i64], max_bound: i64) -> bool {
    (0..=max_bound).any(|b| has_combination_within(dirs, target, b))
}

/// Apexes of the maximal saturated cones, each with the list of verified
/// member points that witnesses its saturation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrobeniusSet {
    apexes: Vec<Vec<i64>>,
    transcripts: Vec<Vec<Vec<i64>>>,
    levels_swept: i128,
}

impl FrobeniusSet {
    /// Apexes in lexicographic order.
    pub fn apexes(&self) -> &[Vec<i64>] {
        &self.apexes
    }

    /// For each apex, the points `g + w` over the zonotope lattice points,
    /// all verified members.
    pub fn transcripts(&self) -> &[Vec<Vec<i64>>] {
        &self.transcripts
    }

    /// Highest level swept before the stopping certificate held.
    pub fn levels_swept(&self) -> i128 {
        self.levels_swept
    }
}
