//! Exact rational linear algebra used by the integer-geometry layers.
//!
//! Everything here works over `BigRational`, so feasibility answers are exact
//! decisions, not floating-point guesses.  Problem sizes are small (a handful
//! of variables, dozens of constraints), which keeps Gaussian elimination and
//! Fourier-Motzkin elimination comfortably cheap.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) type Rat = BigRational;

#[cfg(test)]
pub(crate) fn rat_zero() -> Rat {
    Rat::zero()
}

pub(crate) fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Exact rational equal to the bit pattern of `x`.  Every finite `f64` is a
/// dyadic rational, so no rounding happens here.
pub(crate) fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

pub(crate) fn rat_to_f64(x: &Rat) -> f64 {
    num_traits::ToPrimitive::to_f64(x).expect("rational within f64 range")
}

pub(crate) fn dot_ii(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(x, y)| *x as i128 * *y as i128).sum()
}

pub(crate) fn dot_ir(a: &[i64], b: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        acc += y * BigInt::from(*x);
    }
    acc
}

pub(crate) fn dot_rr(a: &[Rat], b: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Reduced row echelon form in place; returns pivot column per row.
fn rref(m: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x /= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let sub = &m[r][j] * &f;
                    m[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

pub(crate) fn rank(matrix: &[Vec<Rat>]) -> usize {
    let mut m = matrix.to_vec();
    rref(&mut m).len()
}

pub(crate) fn rank_int(matrix: &[Vec<i64>]) -> usize {
    let m: Vec<Vec<Rat>> = matrix
        .iter()
        .map(|row| row.iter().map(|&x| rat_int(x)).collect())
        .collect();
    rank(&m)
}

/// One solution of `A x = b` (free variables set to zero), or `None` if the
/// system is inconsistent.
pub(crate) fn solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let rows = a.len();
    let cols = if rows == 0 { return Some(Vec::new()) } else { a[0].len() };
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m);
    for (i, row) in m.iter().enumerate() {
        let lead_is_rhs = i < pivots.len() && pivots[i] == cols;
        if lead_is_rhs || (i >= pivots.len() && !row[cols].is_zero()) {
            return None;
        }
    }
    let mut x = vec![Rat::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        if c < cols {
            x[c] = m[i][cols].clone();
        }
    }
    Some(x)
}

/// Basis of the right kernel of `A`.
pub(crate) fn nullspace(a: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m = a.to_vec();
    let pivots = rref(&mut m);
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = -m[i][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// `sum(coeffs . x) >= rhs`, strictly if `strict`.
#[derive(Clone, Debug)]
pub(crate) struct Constraint {
    pub coeffs: Vec<Rat>,
    pub rhs: Rat,
    pub strict: bool,
}

impl Constraint {
    pub fn at_least(coeffs: Vec<Rat>, rhs: Rat) -> Self {
        Constraint { coeffs, rhs, strict: false }
    }

    #[cfg(test)]
    pub fn more_than(coeffs: Vec<Rat>, rhs: Rat) -> Self {
        Constraint { coeffs, rhs, strict: true }
    }

    /// `sum(coeffs . x) <= rhs` rewritten in >= form.
    pub fn at_most(coeffs: Vec<Rat>, rhs: Rat) -> Self {
        Constraint {
            coeffs: coeffs.into_iter().map(|c| -c).collect(),
            rhs: -rhs,
            strict: false,
        }
    }

    pub fn less_than(coeffs: Vec<Rat>, rhs: Rat) -> Self {
        Constraint {
            coeffs: coeffs.into_iter().map(|c| -c).collect(),
            rhs: -rhs,
            strict: true,
        }
    }

    fn normalized(mut self) -> Self {
        // Scale so coefficients are a primitive integer vector (plus rhs);
        // duplicates then compare equal and the weaker of two parallel
        // constraints can be dropped.
        let mut denom_lcm = BigInt::one();
        for c in self.coeffs.iter().chain(std::iter::once(&self.rhs)) {
            denom_lcm = num_integer::lcm(denom_lcm, c.denom().clone());
        }
        let mut ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&denom_lcm / c.denom()))
            .collect();
        let rhs_int = self.rhs.numer() * (&denom_lcm / self.rhs.denom());
        let mut g = BigInt::zero();
        for v in &ints {
            g = num_integer::gcd(g, v.clone());
        }
        if g.is_zero() {
            g = num_integer::gcd(g, rhs_int.clone());
        }
        if !g.is_zero() {
            for v in ints.iter_mut() {
                *v /= &g;
            }
            // The rhs need not stay integral; Rat::new reduces the fraction.
            self.rhs = Rat::new(rhs_int, g);
        } else {
            self.rhs = Rat::from_integer(rhs_int);
        }
        self.coeffs = ints.into_iter().map(Rat::from_integer).collect();
        self
    }
}

const FM_CONSTRAINT_CAP: usize = 200_000;

/// Fourier-Motzkin feasibility over the rationals with strict/non-strict
/// bounds.  Returns a witness point when the system is feasible.
pub(crate) fn feasible_point(constraints: &[Constraint], nvars: usize) -> Option<Vec<Rat>> {
    // Levels[k] holds the system before variable k is eliminated
    // (variables are eliminated from the back).
    let mut levels: Vec<Vec<Constraint>> = Vec::with_capacity(nvars + 1);
    let mut current: Vec<Constraint> = constraints.iter().cloned().map(|c| c.normalized()).collect();
    dedup_parallel(&mut current);
    for var in (0..nvars).rev() {
        levels.push(current.clone());
        let mut next: Vec<Constraint> = Vec::new();
        let mut lower = Vec::new(); // positive coefficient on var
        let mut upper = Vec::new(); // negative coefficient on var
        for c in current.into_iter() {
            if c.coeffs[var].is_zero() {
                next.push(c);
            } else if c.coeffs[var].is_positive() {
                lower.push(c);
            } else {
                upper.push(c);
            }
        }
        for lo in &lower {
            for hi in &upper {
                let a = lo.coeffs[var].clone();
                let b = -hi.coeffs[var].clone();
                let mut coeffs = Vec::with_capacity(nvars);
                for j in 0..nvars {
                    coeffs.push(&lo.coeffs[j] * &b + &hi.coeffs[j] * &a);
                }
                let rhs = &lo.rhs * &b + &hi.rhs * &a;
                let combined = Constraint { coeffs, rhs, strict: lo.strict || hi.strict };
                next.push(combined.normalized());
            }
        }
        dedup_parallel(&mut next);
        assert!(next.len() <= FM_CONSTRAINT_CAP, "constraint blow-up in elimination");
        current = next;
    }
    // Ground level: constraints in zero effective variables.
    for c in &current {
        let ok = if c.strict {
            Rat::zero() > c.rhs
        } else {
            Rat::zero() >= c.rhs
        };
        if !ok {
            return None;
        }
    }
    // Back-substitute, choosing each variable inside its interval.
    let mut x = vec![Rat::zero(); nvars];
    for var in 0..nvars {
        let system = &levels[nvars - 1 - var];
        let mut lo: Option<(Rat, bool)> = None;
        let mut hi: Option<(Rat, bool)> = None;
        for c in system {
            if c.coeffs[var].is_zero() {
                continue;
            }
            // Variables were eliminated from the back, so at this level
            // only variables 0..=var survive and 0..var are already chosen.
            let mut rest = c.rhs.clone();
            for j in 0..var {
                rest -= &c.coeffs[j] * &x[j];
            }
            let bound = rest / &c.coeffs[var];
            if c.coeffs[var].is_positive() {
                if lo.as_ref().map_or(true, |(b, st)| bound > *b || (bound == *b && c.strict && !st)) {
                    lo = Some((bound, c.strict));
                }
            } else if hi.as_ref().map_or(true, |(b, st)| bound < *b || (bound == *b && c.strict && !st)) {
                hi = Some((bound, c.strict));
            }
        }
        x[var] = choose_in_interval(&lo, &hi);
    }
    Some(x)
}

fn choose_in_interval(lo: &Option<(Rat, bool)>, hi: &Option<(Rat, bool)>) -> Rat {
    match (lo, hi) {
        (None, None) => Rat::zero(),
        (Some((l, strict)), None) => {
            if *strict {
                l + Rat::one()
            } else {
                l.clone()
            }
        }
        (None, Some((h, strict))) => {
            if *strict {
                h - Rat::one()
            } else {
                h.clone()
            }
        }
        (Some((l, _)), Some((h, _))) => (l + h) / rat_int(2),
    }
}

fn dedup_parallel(constraints: &mut Vec<Constraint>) {
    use std::collections::HashMap;
    let mut best: HashMap<String, (Rat, bool)> = HashMap::new();
    let mut order = Vec::new();
    for c in constraints.drain(..) {
        let key = c
            .coeffs
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        match best.get_mut(&key) {
            None => {
                order.push((key.clone(), c.coeffs));
                best.insert(key, (c.rhs, c.strict));
            }
            Some((rhs, strict)) => {
                // Keep the tighter of two parallel constraints.
                if c.rhs > *rhs || (c.rhs == *rhs && c.strict && !*strict) {
                    *rhs = c.rhs;
                    *strict = c.strict;
                }
            }
        }
    }
    for (key, coeffs) in order {
        let (rhs, strict) = best.remove(&key).expect("recorded");
        constraints.push(Constraint { coeffs, rhs, strict });
    }
}

/// Feasibility of `eq_lhs . x = eq_rhs` together with `constraints`, by
/// eliminating the equalities and running Fourier-Motzkin on the rest.
pub(crate) fn feasible_with_equalities(
    eq_lhs: &[Vec<Rat>],
    eq_rhs: &[Rat],
    constraints: &[Constraint],
    nvars: usize,
) -> Option<Vec<Rat>> {
    let particular = solve(eq_lhs, eq_rhs)?;
    let kernel = nullspace(eq_lhs);
    let k = kernel.len();
    // Rewrite each constraint in kernel coordinates t, x = particular + K t.
    let mut reduced = Vec::with_capacity(constraints.len());
    for c in constraints {
        let mut coeffs = Vec::with_capacity(k);
        for basis_vec in &kernel {
            coeffs.push(dot_rr(&c.coeffs, basis_vec));
        }
        let rhs = &c.rhs - dot_rr(&c.coeffs, &particular);
        reduced.push(Constraint { coeffs, rhs, strict: c.strict });
    }
    let t = feasible_point(&reduced, k)?;
    let mut x = particular;
    for (ti, basis_vec) in t.iter().zip(&kernel) {
        for (xi, bi) in x.iter_mut().zip(basis_vec) {
            *xi += ti * bi;
        }
    }
    debug_assert!(nvars == x.len());
    Some(x)
}

/// Primitive integer vector pointing the same way: divide by the gcd of the
/// entries.  Zero vectors stay zero.
pub(crate) fn primitive(v: &[BigInt]) -> Vec<BigInt> {
    let mut g = BigInt::zero();
    for x in v {
        g = num_integer::gcd(g, x.clone());
    }
    if g.is_zero() {
        return v.to_vec();
    }
    v.iter().map(|x| x / &g).collect()
}

pub(crate) fn primitive_i64(v: &[i64]) -> Vec<i64> {
    let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    primitive(&big)
        .into_iter()
        .map(|x| i64::try_from(x).expect("primitive vector fits i64"))
        .collect()
}

/// Scale a rational vector to a primitive integer vector with the same
/// direction (used for fast repeated dot products).
pub(crate) fn scale_to_int(v: &[Rat]) -> Vec<i64> {
    let mut denom_lcm = BigInt::one();
    for x in v {
        denom_lcm = num_integer::lcm(denom_lcm, x.denom().clone());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&denom_lcm / x.denom())).collect();
    primitive(&ints)
        .into_iter()
        .map(|x| i64::try_from(x).expect("scaled vector fits i64"))
        .collect()
}
