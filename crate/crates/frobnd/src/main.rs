use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use frobnd::growth::{self, CurveMode, GrowthError, MIN_HORIZON};
use frobnd::io::{
    canonical_json, curve_csv, sha256_hex, AnalyzeReport, FrobeniusReport, InputDigest,
    IoError, MultiplicityReport, RigidityReport, RunReport, VectorSetFile,
};
use frobnd::maxent::{MaxentError, INTERIOR_MARGIN, NEWTON_TOLERANCE};
use frobnd::multiplicity::MultiplicityTable;
use frobnd::rigidity::{self, RigidityError, REFUTATION_PROBES, VERDICT_PROBES};
use frobnd::semigroup::{SaturationContext, Semigroup, SemigroupError};

/// Analyze integer vector semigroups: geometry, Frobenius sets, walk
/// counts, growth rates, and growth-rigidity comparisons.
#[derive(Parser)]
#[command(name = "frobnd", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Generator set as JSON: {"dim": 2, "vectors": [[3,0],[1,2],[0,3]]}.
    #[arg(short, long)]
    input: PathBuf,
    /// Write the payload here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a generator file and report its exact geometry.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compute the apexes of the maximal saturated cones.
    Frobenius {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Count the generator walks ending at a lattice point.
    Multiplicity {
        #[command(flatten)]
        common: CommonArgs,
        /// Target point as comma-separated integers, e.g. "10,10".
        #[arg(short = 'z', long)]
        point: String,
    },
    /// Tabulate directional growth rates across the cone as CSV.
    Gamma {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Closed)]
        mode: ModeArg,
        /// Walk-length horizon for empirical rates.
        #[arg(long, default_value_t = 200)]
        kmax: usize,
        /// Number of directions to sweep.
        #[arg(long, default_value_t = 90)]
        points: usize,
    },
    /// Decide whether two generator sets share a growth function.
    Rigidity {
        /// The two generator files to compare (given twice).
        #[arg(short, long, num_args = 1, action = clap::ArgAction::Append, required = true)]
        input: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Growth gap treated as a genuine difference.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        /// Ceiling on the number of index words an iteration may expand.
        #[arg(long, default_value_t = 1_000_000)]
        iteration_cap: u128,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Closed,
    Empirical,
    Both,
}

/// A failed run: exit 2 for bad input or unmet preconditions, 3 for
/// numerical or resource failures.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<SemigroupError> for Failure {
    fn from(e: SemigroupError) -> Self {
        match e {
            SemigroupError::NotInSemigroup(_) => Failure::Usage(e.to_string()),
            SemigroupError::RegionGrowthExceeded { .. } => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<GrowthError> for Failure {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::Maxent(MaxentError::NoConvergence { .. }) => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<RigidityError> for Failure {
    fn from(e: RigidityError) -> Self {
        match e {
            RigidityError::IterationTooLarge { .. }
            | RigidityError::InconclusiveSampling { .. } => Failure::Numerical(e.to_string()),
            RigidityError::Growth(g) => g.into(),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    let started = Instant::now();
    match command {
        Command::Analyze { common } => {
            let (file, set, digest) = load(&common.input)?;
            let context = SaturationContext::new(&set);
            let report = AnalyzeReport::build(&file, &set, &context);
            write_payload(&(canonical_json(&report) + "\n"), &common.output)?;
            run_report("analyze", vec![digest], &common.output, started, json!({}));
            Ok(0)
        }
        Command::Frobenius { common } => {
            let (file, set, digest) = load(&common.input)?;
            let context = SaturationContext::new(&set);
            let semigroup = Semigroup::new(&set);
            let frobenius = semigroup.frobenius_set(&context)?;
            let report = FrobeniusReport::build(&file, &frobenius);
            write_payload(&(canonical_json(&report) + "\n"), &common.output)?;
            run_report(
                "frobenius",
                vec![digest],
                &common.output,
                started,
                json!({"max_growth_rounds": 24}),
            );
            Ok(0)
        }
        Command::Multiplicity { common, point } => {
            let (file, set, digest) = load(&common.input)?;
            let z = parse_point(&point, set.dim())?;
            let semigroup = Semigroup::new(&set);
            let member = semigroup.contains(&z);
            let multiplicity = if member {
                let radius = z.iter().map(|v| v.abs()).max().unwrap_or(0) + 1;
                MultiplicityTable::with_radius(&set, radius)
                    .multiplicity(&z)
                    .to_string()
            } else {
                "0".to_string()
            };
            let report = MultiplicityReport {
                label: file.label.clone(),
                point: z,
                member,
                multiplicity,
            };
            write_payload(&(canonical_json(&report) + "\n"), &common.output)?;
            run_report("multiplicity", vec![digest], &common.output, started, json!({}));
            Ok(0)
        }
        Command::Gamma { common, mode, kmax, points } => {
            let (_, set, digest) = load(&common.input)?;
            let mode = match mode {
                ModeArg::Closed => CurveMode::Closed,
                ModeArg::Empirical => CurveMode::Empirical { k_max: kmax },
                ModeArg::Both => CurveMode::Both { k_max: kmax },
            };
            let curve = growth::gamma_curve(&set, points, mode)?;
            write_payload(&curve_csv(&curve, mode), &common.output)?;
            run_report(
                "gamma",
                vec![digest],
                &common.output,
                started,
                json!({
                    "kmax": kmax,
                    "points": points,
                    "min_horizon": MIN_HORIZON,
                    "newton_tolerance": NEWTON_TOLERANCE,
                    "interior_margin": INTERIOR_MARGIN,
                    "empirical_slack": "8*ln(k)/k + 0.02",
                }),
            );
            Ok(0)
        }
        Command::Rigidity { input, output, tolerance, iteration_cap } => {
            if input.len() != 2 {
                return Err(Failure::Usage(format!(
                    "rigidity compares exactly two inputs, got {}",
                    input.len()
                )));
            }
            let (left_file, left, left_digest) = load(&input[0])?;
            let (right_file, right, right_digest) = load(&input[1])?;
            let verdict =
                rigidity::same_growth_with_cap(&left, &right, tolerance, iteration_cap)?;
            let report =
                RigidityReport::build(left_file.label.clone(), right_file.label.clone(), &verdict);
            write_payload(&(canonical_json(&report) + "\n"), &output)?;
            run_report(
                "rigidity",
                vec![left_digest, right_digest],
                &output,
                started,
                json!({
                    "tolerance": tolerance,
                    "iteration_cap": iteration_cap.to_string(),
                    "refutation_probes": REFUTATION_PROBES,
                    "verdict_probes": VERDICT_PROBES,
                }),
            );
            Ok(if verdict.equivalent { 0 } else { 1 })
        }
    }
}

fn load(path: &PathBuf) -> Result<(VectorSetFile, frobnd::vecset::VectorSet, InputDigest), Failure> {
    let bytes = std::fs::read(path).map_err(|source| {
        Failure::Usage(format!("cannot read {}: {source}", path.display()))
    })?;
    let digest = InputDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) };
    let (file, set) = VectorSetFile::load(path)?;
    Ok((file, set, digest))
}

fn parse_point(text: &str, dim: usize) -> Result<Vec<i64>, Failure> {
    let z: Vec<i64> = text
        .split(',')
        .map(|part| part.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("cannot parse point {text:?}: {e}")))?;
    if z.len() != dim {
        return Err(Failure::Usage(format!(
            "point has {} coordinates, generator set has dim {dim}",
            z.len()
        )));
    }
    Ok(z)
}

fn write_payload(text: &str, output: &Option<PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            Failure::Usage(format!("cannot write {}: {source}", path.display()))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_report(
    command: &str,
    inputs: Vec<InputDigest>,
    output: &Option<PathBuf>,
    started: Instant,
    tolerances: serde_json::Value,
) {
    RunReport {
        command: command.to_string(),
        inputs,
        output: output
            .as_ref()
            .map_or_else(|| "stdout".to_string(), |p| p.display().to_string()),
        wall_ms: started.elapsed().as_millis() as u64,
        tolerances,
    }
    .emit();
}
