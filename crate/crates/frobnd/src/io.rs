//! File formats and canonical payloads for the command-line tools.
//!
//! Inputs are JSON files with an explicit dimension so fixtures stay
//! unambiguous and diffable.  Outputs are canonical: object keys sorted,
//! no whitespace variance, big integers and rationals as decimal strings,
//! reals rounded to 12 significant digits.  Identical inputs and flags
//! therefore produce byte-identical payloads.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exact::Rat;
use crate::growth::{CurveMode, CurvePoint};
use crate::rigidity::{RigidityVerdict, RigidityWitness};
use crate::semigroup::{FrobeniusSet, SaturationContext};
use crate::vecset::{VecSetError, VectorSet};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: vector {index} has {got} coordinates, declared dim is {dim}")]
    DimensionMismatch { path: String, index: usize, got: usize, dim: usize },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: VecSetError,
    },
}

/// On-disk description of a generator set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSetFile {
    pub dim: usize,
    pub vectors: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl VectorSetFile {
    pub fn new(vectors: Vec<Vec<i64>>, label: Option<String>) -> Self {
        let dim = vectors.first().map_or(0, Vec::len);
        VectorSetFile { dim, vectors, label }
    }

    /// Parse and validate a file, returning both the raw description and
    /// the checked set.
    pub fn load(path: &Path) -> Result<(Self, VectorSet), IoError> {
        let display = path.display().to_string();
        let text = fs::read_to_string(path)
            .map_err(|source| IoError::Read { path: display.clone(), source })?;
        let file: VectorSetFile = serde_json::from_str(&text)
            .map_err(|source| IoError::Parse { path: display.clone(), source })?;
        let set = file.to_vector_set(&display)?;
        Ok((file, set))
    }

    pub fn to_vector_set(&self, path: &str) -> Result<VectorSet, IoError> {
        for (index, v) in self.vectors.iter().enumerate() {
            if v.len() != self.dim {
                return Err(IoError::DimensionMismatch {
                    path: path.to_string(),
                    index,
                    got: v.len(),
                    dim: self.dim,
                });
            }
        }
        VectorSet::new(self.vectors.clone())
            .map_err(|source| IoError::Invalid { path: path.to_string(), source })
    }
}

/// Round to 12 significant digits so payloads are byte-stable across
/// platforms and minor numeric drift.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("rounded float reparses")
}

pub fn format_rational(r: &Rat) -> String {
    if r.denom() == &num_bigint::BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serialize with sorted object keys and no extra whitespace.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // Going through Value sorts map keys; the default serde_json map is
    // ordered.
    let v = serde_json::to_value(value).expect("payload serializes");
    serde_json::to_string(&v).expect("value serializes")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub dim: usize,
    pub generators: usize,
    pub distinct_generators: usize,
    /// Index of the generated lattice in the integer lattice, as a decimal
    /// string.
    pub lattice_determinant: String,
    pub coplanar: bool,
    /// Hyperplane functional as rational strings, or null when the
    /// generators span an affine set of full dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<String>>,
    pub extreme_rays: Vec<Vec<i64>>,
    pub facet_normals: Vec<Vec<i64>>,
    /// Smallest distance any single step advances past the separating
    /// hyperplane.
    pub min_step_distance: f64,
    /// Lattice points of the half-open fundamental parallelepiped.
    pub fundamental_domain_points: Vec<Vec<i64>>,
    /// Apex of a cone proven saturated; every lattice point beyond it is
    /// reachable.
    pub saturated_apex: Vec<i64>,
    /// Every cone point has a reachable lattice point within this radius.
    pub covering_radius: f64,
}

impl AnalyzeReport {
    pub fn build(file: &VectorSetFile, set: &VectorSet, context: &SaturationContext) -> Self {
        AnalyzeReport {
            label: file.label.clone(),
            dim: set.dim(),
            generators: set.len(),
            distinct_generators: set.distinct().len(),
            lattice_determinant: set.lattice().determinant().to_string(),
            coplanar: set.eta().is_some(),
            eta: set
                .eta()
                .map(|eta| eta.iter().map(format_rational).collect()),
            extreme_rays: set.cone().extreme_rays().to_vec(),
            facet_normals: set.cone().facet_normals().to_vec(),
            min_step_distance: sig12(set.delta()),
            fundamental_domain_points: context.omega_star().to_vec(),
            saturated_apex: context.anchor().to_vec(),
            covering_radius: sig12(set.covering_radius()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FrobeniusReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Apexes of the maximal saturated cones, sorted lexicographically.
    pub apexes: Vec<Vec<i64>>,
    pub count: usize,
    pub levels_swept: i64,
}

impl FrobeniusReport {
    pub fn build(file: &VectorSetFile, frobenius: &FrobeniusSet) -> Self {
        FrobeniusReport {
            label: file.label.clone(),
            apexes: frobenius.apexes().to_vec(),
            count: frobenius.apexes().len(),
            levels_swept: frobenius.levels_swept() as i64,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MultiplicityReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub point: Vec<i64>,
    pub member: bool,
    /// Exact walk count as a decimal string; "0" off the semigroup.
    pub multiplicity: String,
}

#[derive(Debug, Serialize)]
pub struct RigidityReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right_label: Option<String>,
    pub equivalent: bool,
    /// `[q, p]` with `eta_left = (q/p) eta_right`, when defined.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<[u64; 2]>,
    pub witness: serde_json::Value,
    pub cones_equal: bool,
    pub functionals_parallel: bool,
    pub probes: usize,
    pub max_probe_gap: f64,
}

impl RigidityReport {
    pub fn build(
        left_label: Option<String>,
        right_label: Option<String>,
        verdict: &RigidityVerdict,
    ) -> Self {
        RigidityReport {
            left_label,
            right_label,
            equivalent: verdict.equivalent,
            scale: verdict.scale.map(|(q, p)| [q, p]),
            witness: witness_json(&verdict.witness),
            cones_equal: verdict.notes.cones_equal,
            functionals_parallel: verdict.notes.functionals_parallel,
            probes: verdict.notes.probes.len(),
            max_probe_gap: sig12(verdict.notes.max_probe_gap),
        }
    }
}

fn witness_json(witness: &RigidityWitness) -> serde_json::Value {
    use serde_json::json;
    match witness {
        RigidityWitness::MultisetPairing { left_power, right_power, multiset } => json!({
            "kind": "multiset_pairing",
            "left_power": left_power,
            "right_power": right_power,
            "multiset": multiset
                .iter()
                .map(|(v, c)| json!({"vector": v, "words": c.to_string()}))
                .collect::<Vec<_>>(),
        }),
        RigidityWitness::MultisetMismatch {
            left_power,
            right_power,
            example,
            left_count,
            right_count,
        } => json!({
            "kind": "multiset_mismatch",
            "left_power": left_power,
            "right_power": right_power,
            "example": example,
            "left_words": left_count.to_string(),
            "right_words": right_count.to_string(),
        }),
        RigidityWitness::ConeMismatch { left_rays, right_rays } => json!({
            "kind": "cone_mismatch",
            "left_rays": left_rays,
            "right_rays": right_rays,
        }),
        RigidityWitness::RefutingDirection { theta, left, right } => json!({
            "kind": "refuting_direction",
            "theta": theta.iter().map(|v| sig12(*v)).collect::<Vec<_>>(),
            "left": sig12(*left),
            "right": sig12(*right),
        }),
    }
}

/// CSV for a growth-rate sweep: header, one row per direction, fixed
/// 12-decimal values, LF line endings.
pub fn curve_csv(points: &[CurvePoint], mode: CurveMode) -> String {
    let mut out = String::new();
    let header = match mode {
        CurveMode::Closed => "angle,theta_x,theta_y,gamma",
        CurveMode::Empirical { .. } => "angle,theta_x,theta_y,empirical,residual",
        CurveMode::Both { .. } => "angle,theta_x,theta_y,gamma,empirical,residual",
    };
    out.push_str(header);
    out.push('\n');
    for p in points {
        out.push_str(&format!("{:.12},{:.12},{:.12}", p.angle, p.theta[0], p.theta[1]));
        if let Some(g) = p.closed {
            out.push_str(&format!(",{g:.12}"));
        }
        if let Some(e) = p.empirical {
            out.push_str(&format!(",{e:.12}"));
        }
        if let Some(r) = p.residual {
            out.push_str(&format!(",{r:.12}"));
        }
        out.push('\n');
    }
    out
}

/// Reproducibility record written to stderr: command, input digests, and
/// every tolerance that shaped the run.  Wall time stays out of stdout so
/// payloads remain deterministic.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub output: String,
    pub wall_ms: u64,
    pub tolerances: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunReport {
    pub fn emit(&self) {
        eprintln!("{}", canonical_json(self));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip_is_canonical() {
        let text = r#"{"dim":2,"vectors":[[3,0],[1,2],[0,3]]}"#;
        let file: VectorSetFile = serde_json::from_str(text).unwrap();
        assert_eq!(canonical_json(&file), text);
        let labeled = r#"{"dim":2,"label":"square","vectors":[[1,0],[0,1]]}"#;
        let file: VectorSetFile = serde_json::from_str(labeled).unwrap();
        assert_eq!(canonical_json(&file), labeled);
    }

    #[test]
    fn dimension_mismatch_is_reported_with_index() {
        let file = VectorSetFile { dim: 2, vectors: vec![vec![1, 0], vec![1]], label: None };
        let err = file.to_vector_set("inline").unwrap_err();
        assert!(matches!(err, IoError::DimensionMismatch { index: 1, got: 1, dim: 2, .. }));
    }

    #[test]
    fn significant_digit_rounding_is_stable() {
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(123456789012345.0), 123456789012000.0);
        let x = std::f64::consts::PI;
        assert_eq!(sig12(x), sig12(sig12(x)));
    }

    #[test]
    fn rational_formatting() {
        use num_bigint::BigInt;
        let third = Rat::new(BigInt::from(1), BigInt::from(3));
        assert_eq!(format_rational(&third), "1/3");
        let two = Rat::from_integer(BigInt::from(2));
        assert_eq!(format_rational(&two), "2");
        let neg = Rat::new(BigInt::from(-2), BigInt::from(4));
        assert_eq!(format_rational(&neg), "-1/2");
    }

    #[test]
    fn digest_matches_known_vector() {
        // SHA-256 of the empty string, a standard test vector.
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn csv_shape_per_mode() {
        let point = CurvePoint {
            angle: 0.5,
            theta: vec![0.6, 0.8],
            closed: Some(1.0),
            empirical: Some(0.9),
            residual: Some(0.01),
        };
        let both = curve_csv(std::slice::from_ref(&point), CurveMode::Both { k_max: 10 });
        let mut lines = both.lines();
        assert_eq!(lines.next().unwrap(), "angle,theta_x,theta_y,gamma,empirical,residual");
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 6);
        assert!(row.starts_with("0.500000000000,0.600000000000,0.800000000000,"));
        assert!(both.ends_with('\n') && !both.contains('\r'));
    }
}
