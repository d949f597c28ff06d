//! Gibbs step distributions with a prescribed mean.
//!
//! Among all distributions `p` on the generators with mean `sum p_j X_j =
//! beta`, entropy is maximized by a Gibbs distribution `p_j proportional to
//! exp(<t, X_j>)`.  Solving for `t` is a smooth convex problem: the mean of
//! the Gibbs distribution is the gradient of `log Z(t)` and its covariance
//! is the Hessian, so a damped Newton iteration converges fast.
//!
//! When the generators lie on a hyperplane `<eta, x> = 1`, `t` is only
//! determined up to multiples of `eta`; the iteration runs in coordinates on
//! the orthogonal complement and a gauge fixes the representative.

use num_traits::Zero;
use thiserror::Error;

use crate::exact::{self, Constraint, Rat};
use crate::vecset::VectorSet;

/// Minimal vertex weight for a mean to count as interior.
pub const INTERIOR_MARGIN: f64 = 1e-9;
/// Per-coordinate slack on the mean constraint in the interior test.  Must
/// sit between f64 rounding error (so on-hyperplane floats pass) and the
/// deviation the vertex-weight floor forces (so vertices fail).
pub const HYPERPLANE_SLACK: f64 = 1e-12;
/// Relative residual target for the Newton iteration.
pub const NEWTON_TOLERANCE: f64 = 1e-10;
pub const NEWTON_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum MaxentError {
    #[error("mean {0:?} is not interior to the generator hull")]
    BetaNotInterior(Vec<f64>),
    #[error("requested gauge is unavailable for this generator set")]
    GaugeUnavailable,
    #[error("Newton iteration stalled at residual {residual}")]
    NoConvergence { residual: f64 },
}

/// `log Z(t)` with its first two derivatives at `t`.
#[derive(Debug, Clone)]
pub struct PartitionEvaluation {
    pub log_z: f64,
    /// Gibbs weights, one per generator (duplicates listed separately).
    pub probabilities: Vec<f64>,
    /// Mean step `sum p_j X_j`: the gradient of `log Z`.
    pub mean: Vec<f64>,
    /// Step covariance `sum p_j X_j X_j^T - mean mean^T`: the Hessian.
    pub covariance: Vec<Vec<f64>>,
}

/// Evaluate the partition function via a max-shifted log-sum-exp.
pub fn partition_eval(set: &VectorSet, t: &[f64]) -> PartitionEvaluation {
    let dim = set.dim();
    assert_eq!(t.len(), dim, "parameter has wrong dimension");
    let scores: Vec<f64> = set
        .vectors()
        .iter()
        .map(|v| v.iter().zip(t).map(|(&x, &ti)| x as f64 * ti).sum())
        .collect();
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = top + scores.iter().map(|s| (s - top).exp()).sum::<f64>().ln();
    let probabilities: Vec<f64> = scores.iter().map(|s| (s - log_z).exp()).collect();
    let mut mean = vec![0.0; dim];
    for (p, v) in probabilities.iter().zip(set.vectors()) {
        for (mk, &x) in mean.iter_mut().zip(v) {
            *mk += p * x as f64;
        }
    }
    let mut covariance = vec![vec![0.0; dim]; dim];
    for (p, v) in probabilities.iter().zip(set.vectors()) {
        for i in 0..dim {
            for j in 0..dim {
                covariance[i][j] += p * v[i] as f64 * v[j] as f64;
            }
        }
    }
    for i in 0..dim {
        for j in 0..dim {
            covariance[i][j] -= mean[i] * mean[j];
        }
    }
    PartitionEvaluation { log_z, probabilities, mean, covariance }
}

/// Which representative of `t + R eta` to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Shift so that `Z(t) = 1`.
    Standard,
    /// Shift so that the last coordinate of `t` is zero.  Unavailable when
    /// the hyperplane functional has a zero last coordinate.
    LastCoordinateZero,
}

#[derive(Debug, Clone)]
pub struct GibbsSolution {
    pub t: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub log_z: f64,
    /// `log Z - <t, beta>`, the entropy of the step distribution.
    pub entropy: f64,
    /// `None` when the generators are not on a common hyperplane; `t` is
    /// then unique and the requested gauge is irrelevant.
    pub gauge: Option<Gauge>,
    pub iterations: usize,
    pub residual: f64,
}

/// Is `beta` in the (relative) interior of the convex hull of the
/// generators?  Exact rational feasibility of a convex combination whose
/// vertex weights all clear the margin.  The mean constraint gets a
/// coordinate slack scaled by the margin: a float `beta` that should sit on
/// the generator hyperplane misses it by rounding, and an exact equality
/// would wrongly reject it.
pub fn beta_is_interior(set: &VectorSet, beta: &[f64], margin: f64) -> bool {
    let dirs = set.distinct();
    let m = dirs.len();
    let dim = set.dim();
    let eq_lhs = vec![vec![exact::rat_int(1); m]];
    let eq_rhs = vec![exact::rat_int(1)];
    let margin_rat = exact::rat_from_f64(margin);
    let scale = 1.0 + beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
    let slack = exact::rat_from_f64(HYPERPLANE_SLACK * scale);
    let mut bounds: Vec<Constraint> = (0..m)
        .map(|j| {
            let mut e = vec![Rat::zero(); m];
            e[j] = exact::rat_int(1);
            Constraint::at_least(e, margin_rat.clone())
        })
        .collect();
    for k in 0..dim {
        let row: Vec<Rat> = dirs.iter().map(|v| exact::rat_int(v[k])).collect();
        let target = exact::rat_from_f64(beta[k]);
        bounds.push(Constraint::at_least(row.clone(), &target - &slack));
        bounds.push(Constraint::at_most(row, &target + &slack));
    }
    exact::feasible_with_equalities(&eq_lhs, &eq_rhs, &bounds, m).is_some()
}

/// Solve `mean(t) = beta` starting from `t = 0`.
pub fn solve_gibbs(
    set: &VectorSet,
    beta: &[f64],
    gauge: Gauge,
) -> Result<GibbsSolution, MaxentError> {
    solve_gibbs_from(set, beta, gauge, &vec![0.0; set.dim()])
}

/// Solve `mean(t) = beta` from a caller-chosen starting point.  Different
/// starts land on the same gauged answer; exposed so that uniqueness is
/// testable.
pub fn solve_gibbs_from(
    set: &VectorSet,
    beta: &[f64],
    gauge: Gauge,
    start: &[f64],
) -> Result<GibbsSolution, MaxentError> {
    let dim = set.dim();
    assert_eq!(beta.len(), dim, "mean has wrong dimension");
    assert_eq!(start.len(), dim, "start has wrong dimension");
    if !beta_is_interior(set, beta, INTERIOR_MARGIN) {
        return Err(MaxentError::BetaNotInterior(beta.to_vec()));
    }
    let eta = set.eta().map(|e| e.iter().map(exact::rat_to_f64).collect::<Vec<f64>>());
    // Newton coordinates: the whole space, or the hyperplane direction
    // complement when a hyperplane functional exists.
    let basis: Vec<Vec<f64>> = match &eta {
        Some(eta) => orthonormal_complement(eta),
        None => (0..dim)
            .map(|k| {
                let mut e = vec![0.0; dim];
                e[k] = 1.0;
                e
            })
            .collect(),
    };
    let nb = basis.len();
    let beta_norm = norm(beta);
    let tolerance = NEWTON_TOLERANCE * (1.0 + beta_norm);

    let mut tau: Vec<f64> = basis.iter().map(|b| dot(b, start)).collect();
    let mut iterations = 0;
    let mut residual;
    loop {
        let t = expand(&basis, &tau, dim);
        let eval = partition_eval(set, &t);
        let r: Vec<f64> = beta.iter().zip(&eval.mean).map(|(b, a)| b - a).collect();
        residual = norm(&r);
        if residual <= tolerance {
            break;
        }
        if iterations >= NEWTON_MAX_ITERATIONS {
            return Err(MaxentError::NoConvergence { residual });
        }
        // Reduced Newton system (B^T H B) d = B^T r; fall back to the raw
        // gradient when the covariance degenerates numerically (mean pinned
        // near a vertex), and cap the step so far starts cannot fling the
        // iterate into overflow territory.
        let mut reduced = vec![vec![0.0; nb]; nb];
        for i in 0..nb {
            for j in 0..nb {
                let mut acc = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        acc += basis[i][a] * eval.covariance[a][b] * basis[j][b];
                    }
                }
                reduced[i][j] = acc;
            }
        }
        let rhs: Vec<f64> = basis.iter().map(|b| dot(b, &r)).collect();
        let mut direction = solve_dense(reduced, rhs.clone()).unwrap_or_else(|| rhs.clone());
        let dn = norm(&direction);
        if dn > 100.0 {
            for d in direction.iter_mut() {
                *d *= 100.0 / dn;
            }
        }
        // Far from the optimum, Armijo backtracking on the convex objective
        // log Z - <t, beta> guarantees progress.  Once the residual is small
        // the objective decrease per step falls below f64 resolution and
        // Armijo would stall, so inside that basin a plain residual
        // contraction accepts instead.
        let quadratic_basin = residual <= 1e-6 * (1.0 + beta_norm);
        let current = eval.log_z - dot(&t, beta);
        let slope = -dot(&rhs, &direction);
        debug_assert!(slope <= 1e-12, "not a descent direction");
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = tau
                .iter()
                .zip(&direction)
                .map(|(x, d)| x + step * d)
                .collect();
            let t_trial = expand(&basis, &trial, dim);
            let eval_trial = partition_eval(set, &t_trial);
            let objective_trial = eval_trial.log_z - dot(&t_trial, beta);
            let residual_trial = norm(
                &beta
                    .iter()
                    .zip(&eval_trial.mean)
                    .map(|(b, a)| b - a)
                    .collect::<Vec<f64>>(),
            );
            let armijo = objective_trial <= current + 1e-4 * step * slope;
            if armijo || (quadratic_basin && residual_trial < residual) {
                tau = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(MaxentError::NoConvergence { residual });
        }
        iterations += 1;
    }

    let mut t = expand(&basis, &tau, dim);
    let gauge_applied = match &eta {
        None => None,
        Some(eta_f) => {
            match gauge {
                Gauge::Standard => {
                    let shift = partition_eval(set, &t).log_z;
                    for (ti, e) in t.iter_mut().zip(eta_f) {
                        *ti -= shift * e;
                    }
                }
                Gauge::LastCoordinateZero => {
                    let eta_exact = set.eta().expect("hyperplane certified");
                    if eta_exact[dim - 1].is_zero() {
                        return Err(MaxentError::GaugeUnavailable);
                    }
                    let shift = -t[dim - 1] / eta_f[dim - 1];
                    for (ti, e) in t.iter_mut().zip(eta_f) {
                        *ti += shift * e;
                    }
                    t[dim - 1] = 0.0;
                }
            }
            Some(gauge)
        }
    };
    let eval = partition_eval(set, &t);
    let entropy = eval.log_z - dot(&t, beta);
    Ok(GibbsSolution {
        t,
        probabilities: eval.probabilities,
        log_z: eval.log_z,
        entropy,
        gauge: gauge_applied,
        iterations,
        residual,
    })
}

/// Largest achievable entropy of a step distribution with mean `beta`,
/// together with the optimal distribution.
pub fn max_entropy_constrained(
    set: &VectorSet,
    beta: &[f64],
) -> Result<(f64, Vec<f64>), MaxentError> {
    let sol = solve_gibbs(set, beta, Gauge::Standard)?;
    Ok((sol.entropy, sol.probabilities))
}

/// `-sum p log p` over the nonzero weights.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Orthonormal basis of the orthogonal complement of `v`.
fn orthonormal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let dim = v.len();
    let vn = norm(v);
    assert!(vn > 0.0);
    let unit: Vec<f64> = v.iter().map(|x| x / vn).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim - 1);
    for k in 0..dim {
        let mut cand = vec![0.0; dim];
        cand[k] = 1.0;
        let along = dot(&cand, &unit);
        for (c, u) in cand.iter_mut().zip(&unit) {
            *c -= along * u;
        }
        for b in &basis {
            let along = dot(&cand, b);
            for (c, x) in cand.iter_mut().zip(b) {
                *c -= along * x;
            }
        }
        let n = norm(&cand);
        if n > 1e-9 {
            basis.push(cand.into_iter().map(|x| x / n).collect());
        }
    }
    assert_eq!(basis.len(), dim - 1);
    basis
}

fn expand(basis: &[Vec<f64>], tau: &[f64], dim: usize) -> Vec<f64> {
    let mut t = vec![0.0; dim];
    for (c, b) in tau.iter().zip(basis) {
        for (ti, x) in t.iter_mut().zip(b) {
            *ti += c * x;
        }
    }
    t
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite")
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let sub = f * a[col][k];
                a[row][k] -= sub;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}
