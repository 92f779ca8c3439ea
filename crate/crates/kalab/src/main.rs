//! Command-line driver: single evaluations, batch order checks, witness
//! search, limit scans, and the acceptance suite. All emitted artifacts
//! are byte-deterministic under a fixed seed; timings go to stderr only.

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kalab::error::{Error, Result};
use kalab::generate::{derive_seed, generate_pair, random_projection, random_psd, random_spd, PairKind};
use kalab::io::{
    canonical_json, read_matrix_file, scan_to_csv, MatrixJson, TrialRecordJson, VerdictJson,
    WitnessJson,
};
use kalab::matrix::{PsdMatrix, SpdMatrix};
use kalab::means::Connection;
use kalab::order::{case2a_limit_scan, order_determination_check, prop3_limit_scan, witness_search};
use kalab::selftest;

#[derive(Parser)]
#[command(
    name = "kalab",
    version,
    about = "Numerical laboratory for operator connections, means, and norm-based order determination"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a mean on a matrix pair loaded from JSON files.
    Eval {
        /// Mean selector: power:<p>, arithmetic, geometric, harmonic,
        /// or mix:<w>:<left>:<right>.
        #[arg(long)]
        mean: String,
        /// Path to the first matrix (must be positive definite).
        #[arg(long)]
        a: String,
        /// Path to the second matrix (positive semidefinite).
        #[arg(long)]
        b: String,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<String>,
    },
    /// Run order determination over a batch of generated pairs.
    CheckOrder {
        #[arg(long)]
        mean: String,
        /// Matrix dimension, 2 to 256.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, env = "KA_MASTER_SEED", default_value_t = 7)]
        master_seed: u64,
        /// Pair kind: ordered, unordered, congruent-diagonal, or mixed
        /// to cycle through all three.
        #[arg(long, default_value = "mixed")]
        kind: String,
        /// Commuting test elements sampled per trial.
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Search for a norm-separating witness for a pair from JSON files.
    Witness {
        #[arg(long)]
        mean: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Scan the compression norm limit for one seeded instance; emits
    /// CSV with columns s,value,target.
    ScanProp3 {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, env = "KA_MASTER_SEED", default_value_t = 7)]
        master_seed: u64,
        /// Which seeded instance to scan.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Scales run to 2^max_exp.
        #[arg(long, default_value_t = 20)]
        max_exp: i32,
        #[arg(long)]
        out: Option<String>,
    },
    /// Scan the shifted-projection limit for a measure-carrying mean;
    /// emits CSV with columns s,value,target.
    ScanE1 {
        #[arg(long, default_value = "mix:0.5:arithmetic:harmonic")]
        mean: String,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, env = "KA_MASTER_SEED", default_value_t = 7)]
        master_seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Identity shift in the test element s(P + delta I).
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 24)]
        max_exp: i32,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the acceptance suite; one line per criterion.
    Selftest {
        #[arg(long, env = "KA_MASTER_SEED", default_value_t = selftest::DEFAULT_MASTER_SEED)]
        master_seed: u64,
        /// Emit the full report as canonical JSON instead of lines.
        #[arg(long)]
        json: bool,
    },
}

fn emit(text: &str, out: Option<&str>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pow2_grid(max_exp: i32) -> Result<Vec<f64>> {
    if !(3..=60).contains(&max_exp) {
        return Err(Error::InvalidInput(format!("max-exp must lie in [3, 60], got {max_exp}")));
    }
    Ok((0..=max_exp).map(|k| (2.0f64).powi(k)).collect())
}

fn load_pair(a_path: &str, b_path: &str) -> Result<(SpdMatrix, PsdMatrix)> {
    let a = SpdMatrix::try_from_sym(read_matrix_file(a_path)?)?;
    let b = PsdMatrix::try_from_sym(read_matrix_file(b_path)?)?;
    Ok((a, b))
}

fn run_eval(mean: &str, a_path: &str, b_path: &str, out: Option<&str>) -> Result<()> {
    let conn = Connection::parse(mean)?;
    let (a, b) = load_pair(a_path, b_path)?;
    let result = conn.eval(&a, &b)?;
    emit(&canonical_json(&MatrixJson::from_sym(result.as_sym()))?, out)
}

fn run_check_order(
    mean: &str,
    n: usize,
    trials: u64,
    master_seed: u64,
    kind: &str,
    budget: usize,
    out: Option<&str>,
) -> Result<()> {
    if trials < 1 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let conn = Connection::parse(mean)?;
    let cycle = [PairKind::Ordered, PairKind::Unordered, PairKind::CongruentDiagonal];
    let fixed = match kind {
        "mixed" => None,
        other => Some(PairKind::parse(other)?),
    };
    let mut records = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let pair_kind = fixed.unwrap_or(cycle[(trial % 3) as usize]);
        let seed = derive_seed(master_seed, trial);
        let pair = generate_pair(n, seed, pair_kind)?;
        let verdict =
            order_determination_check(&conn, &pair.a, &pair.b, budget, derive_seed(seed, 1))?;
        records.push(TrialRecordJson {
            trial,
            seed,
            kind: pair_kind.name().into(),
            verdict: VerdictJson::from_verdict(&verdict)?,
        });
    }
    emit(&canonical_json(&records)?, out)
}

fn run_witness(mean: &str, a_path: &str, b_path: &str, out: Option<&str>) -> Result<()> {
    let conn = Connection::parse(mean)?;
    let a = SpdMatrix::try_from_sym(read_matrix_file(a_path)?)?;
    let b = SpdMatrix::try_from_sym(read_matrix_file(b_path)?)?;
    let witness = witness_search(&conn, &a, &b)?;
    emit(&canonical_json(&witness.as_ref().map(WitnessJson::from_report))?, out)
}

fn run_scan_prop3(
    n: usize,
    master_seed: u64,
    trial: u64,
    max_exp: i32,
    out: Option<&str>,
) -> Result<()> {
    let grid = pow2_grid(max_exp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, trial));
    let raw = random_psd(n, &mut rng, 0)?;
    let x = PsdMatrix::try_from_sym(raw.as_sym().scale(0.5 / raw.operator_norm()))?;
    let raw_r = random_psd(n, &mut rng, 0)?;
    let r = raw_r.as_sym().scale(0.03 / raw_r.operator_norm());
    let rank = 1 + (trial as usize % (n - 1).max(1));
    let p = random_projection(n, &mut rng, rank.min(n - 1))?;
    let base = x.as_sym().clone();
    let family = move |s: f64| PsdMatrix::try_from_sym(&base + &r.scale(1.0 / s));
    let scan = prop3_limit_scan(family, &x, &p, &grid)?;
    eprintln!(
        "final value {:.9}, target {:.9}, converged: {}",
        scan.extrapolated, scan.target, scan.converged
    );
    emit(&scan_to_csv(&scan), out)
}

fn run_scan_e1(
    mean: &str,
    n: usize,
    master_seed: u64,
    trial: u64,
    delta: f64,
    max_exp: i32,
    out: Option<&str>,
) -> Result<()> {
    let conn = Connection::parse(mean)?;
    if let Some(m) = conn.measure() {
        if m.quadrature() {
            eprintln!(
                "warning: {} carries a quadrature measure whose interior integral is \
                 effectively unbounded; the scan limit may sit beyond reachable scales",
                conn.label()
            );
        }
    }
    let grid = pow2_grid(max_exp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, trial));
    let raw = random_spd(n, &mut rng, 0.2)?;
    let a = raw.scaled(1.0 / raw.operator_norm());
    let rank = 1 + (trial as usize % (n - 1).max(1));
    let p = random_projection(n, &mut rng, rank.min(n - 1))?;
    let scan = case2a_limit_scan(&conn, &a, &p, delta, &grid)?;
    eprintln!(
        "final value {:.9}, target {:.9}, converged: {}",
        scan.extrapolated, scan.target, scan.converged
    );
    emit(&scan_to_csv(&scan), out)
}

fn run_selftest(master_seed: u64, json: bool) -> Result<bool> {
    let started = Instant::now();
    let report = selftest::run(master_seed);
    if json {
        print!("{}", canonical_json(&report)?);
    } else {
        for c in &report.criteria {
            println!("{}", c.format_line());
        }
        let overall = if report.all_passed { "PASS" } else { "FAIL" };
        println!("overall: {overall} (master seed {}, digest {}…)", report.master_seed, &report.hash[..16]);
    }
    eprintln!("selftest wall time: {:.1}s", started.elapsed().as_secs_f64());
    Ok(report.all_passed)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Eval { mean, a, b, out } => {
            run_eval(&mean, &a, &b, out.as_deref())?;
            Ok(true)
        }
        Command::CheckOrder { mean, n, trials, master_seed, kind, budget, out } => {
            run_check_order(&mean, n, trials, master_seed, &kind, budget, out.as_deref())?;
            Ok(true)
        }
        Command::Witness { mean, a, b, out } => {
            run_witness(&mean, &a, &b, out.as_deref())?;
            Ok(true)
        }
        Command::ScanProp3 { n, master_seed, trial, max_exp, out } => {
            run_scan_prop3(n, master_seed, trial, max_exp, out.as_deref())?;
            Ok(true)
        }
        Command::ScanE1 { mean, n, master_seed, trial, delta, max_exp, out } => {
            run_scan_e1(&mean, n, master_seed, trial, delta, max_exp, out.as_deref())?;
            Ok(true)
        }
        Command::Selftest { master_seed, json } => run_selftest(master_seed, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // A completed run that detected an invariant failure (selftest).
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_invariant_violation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
