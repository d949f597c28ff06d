//! Exponential growth of walk counts along rays.
//!
//! Along a direction `theta` in the cone, walk counts grow like
//! `exp(gamma(theta) k)`.  When the generators lie on a hyperplane
//! `<eta, x> = 1`, the rate has a closed form through the Gibbs solution
//! with mean `theta / <theta, eta>`; in general it can be estimated from
//! log counts sampled along the ray.

use thiserror::Error;

use crate::exact::rat_to_f64;
use crate::maxent::{self, Gauge, MaxentError};
use crate::multiplicity::{ln_biguint, MultiplicityError, MultiplicityTable};
use crate::vecset::VectorSet;

#[derive(Debug, Error, PartialEq)]
pub enum GrowthError {
    #[error("horizon {k_max} is too small; need at least {minimum}")]
    HorizonTooSmall { k_max: usize, minimum: usize },
    #[error("generators are not on a common hyperplane")]
    NotCoplanar,
    #[error("direction {0:?} lies outside the cone")]
    OutsideCone(Vec<f64>),
    #[error("direction has zero length")]
    ZeroDirection,
    #[error("curve sweep requires a two-dimensional cone")]
    CurveRequiresPlane,
    #[error(transparent)]
    Maxent(#[from] MaxentError),
}

/// Smallest horizon the empirical estimator accepts.
pub const MIN_HORIZON: usize = 8;

/// Expected gap between an empirical rate at horizon `k` and the limit.
pub fn slack(k_max: usize) -> f64 {
    8.0 * (k_max as f64).ln() / k_max as f64 + 0.02
}

/// Closed-form growth rate `<theta, eta> log Z(t*) - <t*, theta>` at the
/// Gibbs solution for mean `theta / <theta, eta>`.
///
/// The same number equals `<theta, eta>` times the entropy of the Gibbs
/// step distribution; both routes are evaluated and must agree.
pub fn gamma_closed(set: &VectorSet, theta: &[f64]) -> Result<f64, GrowthError> {
    let theta = normalized(set, theta)?;
    let eta: Vec<f64> = set
        .eta()
        .ok_or(GrowthError::NotCoplanar)?
        .iter()
        .map(rat_to_f64)
        .collect();
    let pairing: f64 = theta.iter().zip(&eta).map(|(a, b)| a * b).sum();
    debug_assert!(pairing > 0.0, "hyperplane functional is positive on the cone");
    let beta: Vec<f64> = theta.iter().map(|x| x / pairing).collect();
    let sol = maxent::solve_gibbs(set, &beta, Gauge::Standard)?;
    let via_entropy = pairing * sol.entropy;
    let via_partition = pairing * sol.log_z
        - sol.t.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>();
    assert!(
        (via_entropy - via_partition).abs() <= 1e-9 * (1.0 + via_entropy.abs()),
        "growth routes disagree: {via_entropy} vs {via_partition}"
    );
    Ok(via_entropy)
}

/// One sampled point along a ray.
#[derive(Debug, Clone)]
pub struct GrowthSample {
    pub k: usize,
    /// Nearest member to `k * theta`.
    pub point: Vec<i64>,
    pub log_count: f64,
}

#[derive(Debug, Clone)]
pub struct GrowthEstimate {
    pub theta: Vec<f64>,
    pub k_max: usize,
    /// Least-squares slope of log counts over the top half of the horizon.
    pub gamma: f64,
    /// Root-mean-square residual of the fit.
    pub fit_residual: f64,
    pub samples: Vec<GrowthSample>,
}

/// Estimate the growth rate along `theta` from walk counts at the nearest
/// members to `k * theta`, `k = 1..k_max`.  Boundary directions need no
/// special casing: the nearest-member pipeline samples the face behavior.
pub fn gamma_empirical(
    table: &MultiplicityTable,
    theta: &[f64],
    k_max: usize,
) -> Result<GrowthEstimate, GrowthError> {
    let set = table.set();
    let theta = normalized(set, theta)?;
    if k_max < MIN_HORIZON {
        return Err(GrowthError::HorizonTooSmall { k_max, minimum: MIN_HORIZON });
    }
    let mut samples = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let x: Vec<f64> = theta.iter().map(|c| c * k as f64).collect();
        let member = table.nearest(&x).map_err(|e| match e {
            MultiplicityError::OutsideCone(p) => GrowthError::OutsideCone(p),
            other => unreachable!("nearest failed: {other}"),
        })?;
        samples.push(GrowthSample {
            k,
            point: member.point,
            log_count: ln_biguint(&member.multiplicity),
        });
    }
    let tail: Vec<&GrowthSample> = samples.iter().filter(|s| s.k > k_max / 2).collect();
    let n = tail.len() as f64;
    let k_mean = tail.iter().map(|s| s.k as f64).sum::<f64>() / n;
    let b_mean = tail.iter().map(|s| s.log_count).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in &tail {
        let dk = s.k as f64 - k_mean;
        num += dk * (s.log_count - b_mean);
        den += dk * dk;
    }
    let gamma = num / den;
    let intercept = b_mean - gamma * k_mean;
    let fit_residual = (tail
        .iter()
        .map(|s| {
            let r = s.log_count - (intercept + gamma * s.k as f64);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(GrowthEstimate { theta, k_max, gamma, fit_residual, samples })
}

/// Memoization box big enough for every nearest-member query the empirical
/// estimator makes up to `k_max`.
pub fn table_for_horizon(set: &VectorSet, k_max: usize) -> MultiplicityTable<'_> {
    let radius = k_max as i64 + set.covering_radius().ceil() as i64 + 2;
    MultiplicityTable::with_radius(set, radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMode {
    Closed,
    Empirical { k_max: usize },
    Both { k_max: usize },
}

#[derive(Debug, Clone)]
pub struct CurvePoint {
    /// Angle of `theta` in radians.
    pub angle: f64,
    pub theta: Vec<f64>,
    pub closed: Option<f64>,
    pub empirical: Option<f64>,
    /// RMS deviation of the empirical fit, when one was computed.
    pub residual: Option<f64>,
}

/// Growth rates along `resolution` evenly spaced interior directions
/// between the extreme rays of a planar cone.
pub fn gamma_curve(
    set: &VectorSet,
    resolution: usize,
    mode: CurveMode,
) -> Result<Vec<CurvePoint>, GrowthError> {
    if set.dim() != 2 {
        return Err(GrowthError::CurveRequiresPlane);
    }
    assert!(resolution >= 1, "resolution must be positive");
    if matches!(mode, CurveMode::Closed | CurveMode::Both { .. }) && set.eta().is_none() {
        return Err(GrowthError::NotCoplanar);
    }
    let rays = set.cone().extreme_rays();
    debug_assert_eq!(rays.len(), 2);
    let a0 = (rays[0][1] as f64).atan2(rays[0][0] as f64);
    let mut a1 = (rays[1][1] as f64).atan2(rays[1][0] as f64);
    // The cone is salient, so the angular gap is below pi; unwrap the
    // branch cut if the rays straddle it.
    if a1 < a0 && a0 - a1 > std::f64::consts::PI {
        a1 += 2.0 * std::f64::consts::PI;
    } else if a0 < a1 && a1 - a0 > std::f64::consts::PI {
        a1 -= 2.0 * std::f64::consts::PI;
    }
    let (lo, hi) = if a0 <= a1 { (a0, a1) } else { (a1, a0) };
    let table = match mode {
        CurveMode::Empirical { k_max } | CurveMode::Both { k_max } => {
            Some((table_for_horizon(set, k_max), k_max))
        }
        CurveMode::Closed => None,
    };
    let mut out = Vec::with_capacity(resolution);
    for i in 0..resolution {
        let angle = lo + (i as f64 + 0.5) * (hi - lo) / resolution as f64;
        let theta = vec![angle.cos(), angle.sin()];
        let closed = match mode {
            CurveMode::Closed | CurveMode::Both { .. } => Some(gamma_closed(set, &theta)?),
            CurveMode::Empirical { .. } => None,
        };
        let (empirical, residual) = match &table {
            Some((table, k_max)) => {
                let est = gamma_empirical(table, &theta, *k_max)?;
                (Some(est.gamma), Some(est.fit_residual))
            }
            None => (None, None),
        };
        out.push(CurvePoint { angle, theta, closed, empirical, residual });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SubadditiveLimit {
    /// `max_m (b_m - c log 4m) / m`, a certified lower bound for the limit
    /// of a supermultiplicative-up-to-`c` sequence.
    pub lower_bound: f64,
    /// Least-squares slope of the top half of the sequence.
    pub slope: f64,
}

impl SubadditiveLimit {
    pub fn estimate(&self) -> f64 {
        self.slope.max(self.lower_bound)
    }
}

/// Estimate `lim b_m / m` for a sequence with
/// `b_{m+n} >= b_m + b_n - c log 4 min(m,n)`.
pub fn subadditive_limit(b: &[f64], c: f64) -> SubadditiveLimit {
    assert!(b.len() >= 16, "need at least 16 terms");
    assert!(c >= 0.0);
    let lower_bound = b
        .iter()
        .enumerate()
        .map(|(i, &bm)| {
            let m = (i + 1) as f64;
            (bm - c * (4.0 * m).ln()) / m
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let start = b.len() / 2;
    let tail = &b[start..];
    let n = tail.len() as f64;
    let k_mean = (start + 1..=b.len()).map(|k| k as f64).sum::<f64>() / n;
    let b_mean = tail.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (off, &bm) in tail.iter().enumerate() {
        let dk = (start + 1 + off) as f64 - k_mean;
        num += dk * (bm - b_mean);
        den += dk * dk;
    }
    SubadditiveLimit { lower_bound, slope: num / den }
}

fn normalized(set: &VectorSet, theta: &[f64]) -> Result<Vec<f64>, GrowthError> {
    assert_eq!(theta.len(), set.dim(), "direction has wrong dimension");
    let n = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(GrowthError::ZeroDirection);
    }
    let unit: Vec<f64> = theta.iter().map(|x| x / n).collect();
    if !set.cone().contains_f64(&unit, 1e-9) {
        return Err(GrowthError::OutsideCone(unit));
    }
    Ok(unit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> VectorSet {
        VectorSet::new(vec![vec![1, 0], vec![0, 1]]).unwrap()
    }

    fn running_example() -> VectorSet {
        VectorSet::new(vec![vec![3, 0], vec![1, 2], vec![0, 3]]).unwrap()
    }

    #[test]
    fn diagonal_of_the_square_in_closed_form() {
        // Balanced coin flips: rate sqrt(2) ln 2 along the diagonal.
        let set = unit_square();
        let g = gamma_closed(&set, &[1.0, 1.0]).unwrap();
        let expected = 2f64.sqrt() * std::f64::consts::LN_2;
        assert!((g - expected).abs() < 1e-10, "{g} vs {expected}");
    }

    #[test]
    fn empirical_rate_approaches_the_closed_form() {
        let set = unit_square();
        let table = table_for_horizon(&set, 60);
        let est = gamma_empirical(&table, &[1.0, 1.0], 60).unwrap();
        let expected = 2f64.sqrt() * std::f64::consts::LN_2;
        assert!(
            (est.gamma - expected).abs() < 0.05,
            "empirical {} vs {}",
            est.gamma,
            expected
        );
        assert!((est.gamma - expected).abs() < slack(60));
        assert!(est.samples.len() == 60);
    }

    #[test]
    fn growth_peak_sits_at_the_generator_sum_direction() {
        // The entropy-normalized rate gamma / <eta, theta> peaks at
        // theta parallel to the sum of the generators, with value ln m.
        let set = running_example();
        let eta: Vec<f64> = set.eta().unwrap().iter().map(rat_to_f64).collect();
        let theta0 = [4.0, 5.0];
        let norm = (41f64).sqrt();
        let pairing = (theta0[0] * eta[0] + theta0[1] * eta[1]) / norm;
        let g = gamma_closed(&set, &theta0).unwrap();
        assert!((g / pairing - 3f64.ln()).abs() < 1e-8);

        let curve = gamma_curve(&set, 90, CurveMode::Closed).unwrap();
        let best = curve
            .iter()
            .max_by(|a, b| {
                let pa = a.closed.unwrap() / (a.theta[0] * eta[0] + a.theta[1] * eta[1]);
                let pb = b.closed.unwrap() / (b.theta[0] * eta[0] + b.theta[1] * eta[1]);
                pa.partial_cmp(&pb).unwrap()
            })
            .unwrap();
        let step = std::f64::consts::FRAC_PI_2 / 90.0;
        let target = 5f64.atan2(4.0);
        assert!(
            (best.angle - target).abs() <= step,
            "peak at {} but expected near {}",
            best.angle,
            target
        );
    }

    #[test]
    fn one_dimensional_face_has_zero_rate() {
        // Along the x-axis of the running example only multiples of (3,0)
        // appear, one walk each.
        let set = running_example();
        let table = table_for_horizon(&set, 45);
        let est = gamma_empirical(&table, &[1.0, 0.0], 45).unwrap();
        assert!(est.gamma.abs() < 1e-9, "face rate {}", est.gamma);
        for s in &est.samples {
            assert_eq!(s.point[1], 0);
            assert_eq!(s.log_count, 0.0);
        }
        // The closed form rejects the boundary direction.
        assert!(matches!(
            gamma_closed(&set, &[1.0, 0.0]),
            Err(GrowthError::Maxent(MaxentError::BetaNotInterior(_)))
        ));
    }

    #[test]
    fn duplicated_generator_doubles_the_face_rate() {
        // With (1,0) listed twice, axis walks choose between two copies at
        // every step: the face rate is ln 2.
        let set = VectorSet::new(vec![vec![1, 0], vec![1, 0], vec![0, 1]]).unwrap();
        let table = table_for_horizon(&set, 48);
        let est = gamma_empirical(&table, &[1.0, 0.0], 48).unwrap();
        assert!((est.gamma - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn rejected_directions() {
        let set = running_example();
        assert_eq!(
            gamma_closed(&set, &[-1.0, 0.5]).unwrap_err(),
            GrowthError::OutsideCone(normalized_raw(&[-1.0, 0.5]))
        );
        assert_eq!(
            gamma_closed(&set, &[0.0, 0.0]).unwrap_err(),
            GrowthError::ZeroDirection
        );
        let table = table_for_horizon(&set, 16);
        assert_eq!(
            gamma_empirical(&table, &[1.0, 1.0], 4).unwrap_err(),
            GrowthError::HorizonTooSmall { k_max: 4, minimum: MIN_HORIZON }
        );
        let non_coplanar = VectorSet::new(vec![vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(
            gamma_closed(&non_coplanar, &[1.0, 1.0]).unwrap_err(),
            GrowthError::NotCoplanar
        );
    }

    fn normalized_raw(theta: &[f64]) -> Vec<f64> {
        let n = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
        theta.iter().map(|x| x / n).collect()
    }

    #[test]
    fn curve_respects_mode_and_resolution() {
        let set = unit_square();
        let curve = gamma_curve(&set, 9, CurveMode::Both { k_max: 24 }).unwrap();
        assert_eq!(curve.len(), 9);
        for p in &curve {
            let closed = p.closed.unwrap();
            let empirical = p.empirical.unwrap();
            assert!((closed - empirical).abs() < slack(24));
            assert!(p.angle > 0.0 && p.angle < std::f64::consts::FRAC_PI_2);
        }
        // The curve is symmetric for the square.
        let c = &curve;
        for i in 0..4 {
            let a = c[i].closed.unwrap();
            let b = c[8 - i].closed.unwrap();
            assert!((a - b).abs() < 1e-9);
        }
        let three_d =
            VectorSet::new(vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(
            gamma_curve(&three_d, 4, CurveMode::Closed).unwrap_err(),
            GrowthError::CurveRequiresPlane
        );
    }

    #[test]
    fn subadditive_limit_recovers_a_linear_rate() {
        // b_m = 0.7 m - 0.5 ln(4 m): lower bound approaches 0.7 from below.
        let b: Vec<f64> = (1..=64)
            .map(|m| 0.7 * m as f64 - 0.5 * (4.0 * m as f64).ln())
            .collect();
        let est = subadditive_limit(&b, 0.5);
        assert!(est.lower_bound <= 0.7);
        assert!(est.lower_bound > 0.6);
        // The slope inherits the O(log m / m) drift of the sequence.
        assert!((est.slope - 0.7).abs() < 0.02);
        assert!((est.estimate() - 0.7).abs() < 0.02);
    }

    #[test]
    fn pair_growth_matches_characteristic_root() {
        // Counts for generators {2, 3} satisfy m(k) = m(k-2) + m(k-3); the
        // rate is the log of the real root of x^3 = x + 1.  Oracle root by
        // bisection.
        let mut lo = 1.0f64;
        let mut hi = 2.0f64;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid * mid * mid - mid - 1.0 < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rate = lo.ln();
        let set = VectorSet::new(vec![vec![2], vec![3]]).unwrap();
        let table = table_for_horizon(&set, 90);
        let est = gamma_empirical(&table, &[1.0], 90).unwrap();
        assert!((est.gamma - rate).abs() < 0.01, "{} vs {rate}", est.gamma);
    }
}
