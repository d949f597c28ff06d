//! End-to-end acceptance checks, one per shipped guarantee.  Each test
//! prints a single pass/fail line (visible with `--nocapture`) so the
//! whole gate can be read at a glance.

use std::panic::{catch_unwind, resume_unwind, UnwindSafe};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use frobnd::growth::{self, CurveMode};
use frobnd::maxent::{self, Gauge};
use frobnd::multiplicity::{
    multiplicity_from_representations, representation_distance_sq, MultiplicityTable,
};
use frobnd::rigidity::{self, RigidityWitness};
use frobnd::semigroup::{SaturationContext, Semigroup};
use frobnd::vecset::VectorSet;

fn criterion<F: FnOnce() + UnwindSafe>(number: usize, name: &str, body: F) {
    let outcome = catch_unwind(body);
    let tag = if outcome.is_ok() { "PASS" } else { "FAIL" };
    println!("acceptance {number:02} {tag} {name}");
    if let Err(payload) = outcome {
        resume_unwind(payload);
    }
}

fn set(vectors: &[&[i64]]) -> VectorSet {
    VectorSet::new(vectors.iter().map(|v| v.to_vec()).collect()).unwrap()
}

fn running_example() -> VectorSet {
    set(&[&[3, 0], &[1, 2], &[0, 3]])
}

fn unit_square() -> VectorSet {
    set(&[&[1, 0], &[0, 1]])
}

fn factorial(n: u64) -> BigUint {
    (1..=n).map(BigUint::from).product::<BigUint>().max(BigUint::from(1u32))
}

#[test]
fn criterion_01_frobenius_sets() {
    criterion(1, "frobenius sets of the worked examples", || {
        let plane = running_example();
        let frob = Semigroup::new(&plane)
            .frobenius_set(&SaturationContext::new(&plane))
            .unwrap();
        assert_eq!(frob.apexes(), &[vec![0, 3], vec![1, 2]]);

        let line = set(&[&[3], &[5]]);
        let frob = Semigroup::new(&line)
            .frobenius_set(&SaturationContext::new(&line))
            .unwrap();
        assert_eq!(frob.apexes(), &[vec![8]]);
    });
}

#[test]
fn criterion_02_membership_characterization() {
    criterion(2, "lattice and semigroup membership on the 20x20 grid", || {
        let plane = running_example();
        let semigroup = Semigroup::new(&plane);
        for a in 0..=20i64 {
            for b in 0..=20i64 {
                let z = [a, b];
                let in_lattice = (a + b) % 3 == 0;
                assert_eq!(plane.lattice().contains(&z), in_lattice, "lattice at {z:?}");
                let in_semigroup = in_lattice && b != 1;
                assert_eq!(semigroup.contains(&z), in_semigroup, "semigroup at {z:?}");
            }
        }
    });
}

#[test]
fn criterion_03_binomial_multiplicities() {
    criterion(3, "exact binomial walk counts up to (30,30)", || {
        let square = unit_square();
        let table = MultiplicityTable::with_radius(&square, 31);
        for a in 0..=30u64 {
            for b in 0..=30u64 {
                let expected =
                    factorial(a + b) / (factorial(a) * factorial(b));
                assert_eq!(
                    table.multiplicity(&[a as i64, b as i64]),
                    expected,
                    "count at ({a},{b})"
                );
            }
        }
    });
}

#[test]
fn criterion_04_recurrence_equals_word_formula() {
    criterion(4, "recurrence vs factorial-sum counts on 50 random sets", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0401);
        for _ in 0..50 {
            let set = random_small_set(&mut rng);
            let dim = set.dim();
            let semigroup = Semigroup::new(&set);
            let table = MultiplicityTable::with_radius(&set, 10);
            let mut point = vec![-10i64; dim];
            loop {
                if semigroup.contains(&point) {
                    assert_eq!(
                        table.multiplicity(&point),
                        multiplicity_from_representations(&set, &point),
                        "disagreement at {point:?} for {:?}",
                        set.vectors()
                    );
                }
                if !advance(&mut point, -10, 10) {
                    break;
                }
            }
        }
    });
}

fn advance(point: &mut [i64], lo: i64, hi: i64) -> bool {
    for slot in point.iter_mut().rev() {
        if *slot < hi {
            *slot += 1;
            return true;
        }
        *slot = lo;
    }
    false
}

fn random_small_set(rng: &mut ChaCha8Rng) -> VectorSet {
    loop {
        let dim = rng.gen_range(1..=3usize);
        let count = rng.gen_range(dim..=4usize);
        let vectors: Vec<Vec<i64>> = (0..count)
            .map(|_| (0..dim).map(|_| rng.gen_range(-4..=4i64)).collect())
            .collect();
        if let Ok(set) = VectorSet::new(vectors) {
            return set;
        }
    }
}

#[test]
fn criterion_05_closed_form_growth_values() {
    criterion(5, "closed-form rates: diagonal value and entropy peak", || {
        let square = unit_square();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let gamma = growth::gamma_closed(&square, &[r, r]).unwrap();
        let expected = std::f64::consts::SQRT_2 * 2f64.ln();
        assert!((gamma - expected).abs() <= 1e-10, "{gamma} vs {expected}");

        // The entropy-per-level ratio peaks at log m, attained where the
        // constraint target is the generator centroid.
        let plane = running_example();
        let eta = [1.0 / 3.0, 1.0 / 3.0];
        let norm = 41f64.sqrt();
        let theta0 = [4.0 / norm, 5.0 / norm];
        let pairing = theta0[0] * eta[0] + theta0[1] * eta[1];
        let peak = growth::gamma_closed(&plane, &theta0).unwrap() / pairing;
        assert!((peak - 3f64.ln()).abs() <= 1e-8, "peak ratio {peak}");

        let curve = growth::gamma_curve(&plane, 90, CurveMode::Closed).unwrap();
        let best = curve
            .iter()
            .max_by(|a, b| {
                let ra = a.closed.unwrap() / (a.theta[0] * eta[0] + a.theta[1] * eta[1]);
                let rb = b.closed.unwrap() / (b.theta[0] * eta[0] + b.theta[1] * eta[1]);
                ra.total_cmp(&rb)
            })
            .unwrap();
        let step = std::f64::consts::FRAC_PI_2 / 90.0;
        assert!(
            (best.angle - 5f64.atan2(4.0)).abs() <= step,
            "grid peak at {} rad",
            best.angle
        );
    });
}

#[test]
fn criterion_06_empirical_matches_closed_form() {
    criterion(6, "empirical rates track closed forms on random sets", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0601);
        let k_max = 150usize;
        let budget = 8.0 * (k_max as f64).ln() / k_max as f64 + 0.02;
        for _ in 0..10 {
            let set = random_coplanar_set(&mut rng);
            let table = growth::table_for_horizon(&set, k_max);
            let rays = set.cone().extreme_rays();
            for _ in 0..5 {
                let w = rng.gen_range(0.15..0.85f64);
                let mut theta = [0.0f64; 2];
                for k in 0..2 {
                    theta[k] = w * rays[0][k] as f64 + (1.0 - w) * rays[1][k] as f64;
                }
                let n = (theta[0] * theta[0] + theta[1] * theta[1]).sqrt();
                theta[0] /= n;
                theta[1] /= n;
                let closed = growth::gamma_closed(&set, &theta).unwrap();
                let empirical = growth::gamma_empirical(&table, &theta, k_max).unwrap();
                assert!(
                    (empirical.gamma - closed).abs() <= budget,
                    "gap {} over budget {budget} for {:?} along {theta:?}",
                    (empirical.gamma - closed).abs(),
                    set.vectors()
                );
            }
        }
    });
}

fn random_coplanar_set(rng: &mut ChaCha8Rng) -> VectorSet {
    loop {
        let level = rng.gen_range(2..=3i64);
        let count = rng.gen_range(2..=4usize);
        let vectors: Vec<Vec<i64>> = (0..count)
            .map(|_| {
                let a = rng.gen_range(-2..=level + 2);
                vec![a, level - a]
            })
            .collect();
        if let Ok(set) = VectorSet::new(vectors) {
            return set;
        }
    }
}

#[test]
fn criterion_07_maxent_solver_guarantees() {
    criterion(7, "partition derivatives, entropy optimality, unit gauge", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0701);
        let plane = running_example();
        let cube = set(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 1, 1]]);
        for sample in 0..20 {
            let target: &VectorSet = if sample % 2 == 0 { &plane } else { &cube };
            let t: Vec<f64> =
                (0..target.dim()).map(|_| rng.gen_range(-1.5..1.5f64)).collect();
            check_derivatives(target, &t);
        }

        // The Gibbs point beats every feasible competitor in entropy.
        let wide = set(&[&[3, 0], &[1, 2], &[2, 1], &[0, 3]]);
        entropy_optimality(&mut rng, &wide, &[1.5, 1.5], &[
            vec![1.0, 1.0, -2.0, 0.0],
            vec![2.0, 0.0, -3.0, 1.0],
        ]);
        let five = set(&[&[4, 0], &[3, 1], &[2, 2], &[1, 3], &[0, 4]]);
        entropy_optimality(&mut rng, &five, &[2.0, 2.0], &[
            vec![1.0, -2.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, -2.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, -2.0, 1.0],
        ]);

        for beta in [[1.2, 1.8], [1.5, 1.5], [0.4, 2.6], [2.2, 0.8]] {
            let solution = maxent::solve_gibbs(&plane, &beta, Gauge::Standard).unwrap();
            let z = maxent::partition_eval(&plane, &solution.t).log_z.exp();
            assert!((z - 1.0).abs() <= 1e-10, "partition value {z} at {beta:?}");
        }
    });
}

fn check_derivatives(set: &VectorSet, t: &[f64]) {
    let dim = set.dim();
    let eval = maxent::partition_eval(set, t);
    let h = 1e-5;
    for i in 0..dim {
        let mut up = t.to_vec();
        up[i] += h;
        let mut down = t.to_vec();
        down[i] -= h;
        let fd =
            (maxent::partition_eval(set, &up).log_z - maxent::partition_eval(set, &down).log_z)
                / (2.0 * h);
        assert!(
            (fd - eval.mean[i]).abs() <= 1e-5 * (1.0 + eval.mean[i].abs()),
            "gradient slot {i}: {fd} vs {}",
            eval.mean[i]
        );
        for j in 0..dim {
            let fd = (maxent::partition_eval(set, &up).mean[j]
                - maxent::partition_eval(set, &down).mean[j])
                / (2.0 * h);
            let analytic = eval.covariance[i][j];
            assert!(
                (fd - analytic).abs() <= 1e-5 * (1.0 + analytic.abs()),
                "hessian slot ({i},{j}): {fd} vs {analytic}"
            );
        }
    }
}

fn entropy_optimality(
    rng: &mut ChaCha8Rng,
    set: &VectorSet,
    beta: &[f64],
    feasible_directions: &[Vec<f64>],
) {
    let (best, p_star) = maxent::max_entropy_constrained(set, beta).unwrap();
    let mut tested = 0usize;
    while tested < 5_000 {
        let coeffs: Vec<f64> = feasible_directions
            .iter()
            .map(|_| rng.gen_range(-0.2..0.2f64))
            .collect();
        if coeffs.iter().map(|c| c * c).sum::<f64>().sqrt() < 1e-3 {
            continue;
        }
        let mut p = p_star.clone();
        for (c, dir) in coeffs.iter().zip(feasible_directions) {
            for (slot, d) in p.iter_mut().zip(dir) {
                *slot += c * d;
            }
        }
        if p.iter().any(|&v| v <= 1e-9) {
            continue;
        }
        let h = maxent::shannon_entropy(&p);
        assert!(h < best, "feasible competitor with entropy {h} >= {best}");
        tested += 1;
    }
}

#[test]
fn criterion_08_one_dimensional_growth() {
    criterion(8, "rate of the 2,3 line matches the cubic root", || {
        let line = set(&[&[2], &[3]]);
        let table = growth::table_for_horizon(&line, 90);
        let estimate = growth::gamma_empirical(&table, &[1.0], 90).unwrap();
        // Largest root of x^3 = x + 1 by bisection, an independent oracle.
        let mut lo = 1.0f64;
        let mut hi = 2.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid * mid - mid - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let target = (0.5 * (lo + hi)).ln();
        assert!(
            (estimate.gamma - target).abs() <= 0.02,
            "{} vs {target}",
            estimate.gamma
        );
    });
}

#[test]
fn criterion_09_rigidity_decisions() {
    criterion(9, "rigidity verdicts and the growth transform law", || {
        let square = unit_square();
        let doubled = rigidity::iterate(&square, 2).unwrap();
        let iterated = VectorSet::new(doubled.to_vector_list()).unwrap();
        let verdict = rigidity::same_growth(&square, &iterated, 1e-8).unwrap();
        assert!(verdict.equivalent);
        match &verdict.witness {
            RigidityWitness::MultisetPairing { multiset, .. } => {
                // Verify the pairing against independently known counts.
                assert_eq!(
                    multiset,
                    &vec![(vec![0, 2], 1), (vec![1, 1], 2), (vec![2, 0], 1)]
                );
            }
            w => panic!("expected pairing, got {w:?}"),
        }

        let perturbed = set(&[&[1, 0], &[0, 2]]);
        let verdict = rigidity::same_growth(&square, &perturbed, 1e-8).unwrap();
        assert!(!verdict.equivalent);
        assert!(matches!(verdict.witness, RigidityWitness::RefutingDirection { .. }));

        let mut rng = ChaCha8Rng::seed_from_u64(0x0901);
        let base = running_example();
        for _ in 0..10 {
            let t = random_unimodular(&mut rng);
            let image = rigidity::transform_set(&base, &t).unwrap();
            for _ in 0..3 {
                let w = rng.gen_range(0.1..0.9f64);
                let theta = normalize(&[w, 1.0 - w]);
                let mapped = normalize(&apply(&t, &theta));
                let scale = norm2(&apply(&t, &theta));
                let left = growth::gamma_closed(&image, &mapped).unwrap() * scale;
                let right = growth::gamma_closed(&base, &theta).unwrap();
                assert!(
                    (left - right).abs() <= 1e-8,
                    "transform law gap {} under {t:?}",
                    (left - right).abs()
                );
            }
        }
    });
}

fn random_unimodular(rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut t = vec![vec![1i64, 0], vec![0, 1]];
    for step in 0..rng.gen_range(1..=3usize) {
        let c = rng.gen_range(-2..=2i64);
        let shear = if step % 2 == 0 {
            vec![vec![1, c], vec![0, 1]]
        } else {
            vec![vec![1, 0], vec![c, 1]]
        };
        t = matmul(&shear, &t);
    }
    t
}

fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn apply(t: &[Vec<i64>], x: &[f64]) -> Vec<f64> {
    t.iter()
        .map(|row| row.iter().zip(x).map(|(&a, b)| a as f64 * b).sum())
        .collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize(x: &[f64]) -> Vec<f64> {
    let n = norm2(x);
    x.iter().map(|v| v / n).collect()
}

#[test]
fn criterion_10_count_variation_properties() {
    criterion(10, "supermultiplicativity, distance and variation bounds", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0a01);
        for vectors in [
            vec![vec![3i64, 0], vec![1, 2], vec![0, 3]],
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![3], vec![5]],
        ] {
            let set = VectorSet::new(vectors).unwrap();
            let table = MultiplicityTable::with_radius(&set, 64);
            for _ in 0..100 {
                let z = random_member(&mut rng, &set, 8);
                let w = random_member(&mut rng, &set, 8);
                let sum: Vec<i64> = z.iter().zip(&w).map(|(a, b)| a + b).collect();
                assert!(
                    table.multiplicity(&sum) >= table.multiplicity(&z) * table.multiplicity(&w),
                    "submultiplicative pair {z:?} {w:?}"
                );
            }
        }

        // Representation-set distances over a constant-width pair window
        // stay bounded as the norm grows: the far-shell maximum is at most
        // twice the near-shell maximum.
        let plane = running_example();
        let near = shell_distance_max(&plane, 10.0, 20.0);
        let far = shell_distance_max(&plane, 40.0, 50.0);
        assert!(near > 0, "near shell produced no pairs");
        assert!(far <= 4 * near, "squared distances {far} vs {near}");

        // Count variation across the same window grows at most
        // logarithmically: the worst log-count jump per log-norm fitted on
        // the near shell caps the far shell within 50 percent headroom.
        let table = MultiplicityTable::with_radius(&plane, 64);
        let near_kappa = shell_variation_max(&plane, &table, 10.0, 20.0);
        let far_kappa = shell_variation_max(&plane, &table, 40.0, 50.0);
        assert!(near_kappa > 0.0);
        assert!(
            far_kappa <= 1.5 * near_kappa,
            "variation ratio grew from {near_kappa} to {far_kappa}"
        );
    });
}

fn random_member(rng: &mut ChaCha8Rng, set: &VectorSet, max_steps: u32) -> Vec<i64> {
    let mut z = vec![0i64; set.dim()];
    for _ in 0..rng.gen_range(0..=max_steps) {
        let pick = rng.gen_range(0..set.len());
        for (slot, v) in z.iter_mut().zip(&set.vectors()[pick]) {
            *slot += v;
        }
    }
    z
}

/// Pairs of members within Euclidean distance 5 whose base norm lies in
/// the given band; returns the maximum squared representation distance.
fn shell_distance_max(set: &VectorSet, lo: f64, hi: f64) -> u128 {
    let semigroup = Semigroup::new(set);
    let mut best = 0u128;
    for_shell_pairs(&semigroup, lo, hi, |z, w| {
        let d = representation_distance_sq(set, z, w).unwrap();
        best = best.max(d);
    });
    best
}

fn shell_variation_max(
    set: &VectorSet,
    table: &MultiplicityTable,
    lo: f64,
    hi: f64,
) -> f64 {
    let semigroup = Semigroup::new(set);
    let mut best = 0.0f64;
    for_shell_pairs(&semigroup, lo, hi, |z, w| {
        let mz = table.multiplicity(z).to_f64().unwrap().ln();
        let mw = table.multiplicity(w).to_f64().unwrap().ln();
        let norm = (z.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt())
            .max(w.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt());
        best = best.max((mz - mw).abs() / (2.0 + norm).ln());
    });
    best
}

fn for_shell_pairs(
    semigroup: &Semigroup,
    lo: f64,
    hi: f64,
    mut visit: impl FnMut(&[i64], &[i64]),
) {
    let bound = hi.ceil() as i64;
    for a in 0..=bound {
        for b in 0..=bound {
            let z = [a, b];
            let r = ((a * a + b * b) as f64).sqrt();
            if r < lo || r > hi || !semigroup.contains(&z) {
                continue;
            }
            for da in -5i64..=5 {
                for db in -5i64..=5 {
                    if (da, db) == (0, 0) || da * da + db * db > 25 {
                        continue;
                    }
                    let w = [a + da, b + db];
                    if w[0] < 0 || w[1] < 0 || !semigroup.contains(&w) {
                        continue;
                    }
                    visit(&z, &w);
                }
            }
        }
    }
}
