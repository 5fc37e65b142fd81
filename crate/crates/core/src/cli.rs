//! Command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp};

use crate::data::{write_report_csv, RunReport, ScoreDistribution};
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, DataSource, ExperimentConfig, DEFAULT_EPSILONS};
use crate::fairness::{attention_weights, normalize_relevance, relevance_ranking, RatingScale};
use crate::mpc::{pi_lap, reveal_to_client, TransportMode};
use crate::protocol::SensitivityMode;
use crate::ring::{FixedPointCodec, DEFAULT_FRACTIONAL_BITS};
use crate::solver::{brute_force, build_problem, solve, ScalingMode, BRUTE_FORCE_MAX_N};
use crate::stats::LaplaceAudit;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_INGESTION: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

/// Largest instance size `verify-solver` accepts.
pub const VERIFY_MAX_N: usize = 7;
pub const AUDIT_MIN_SAMPLES: usize = 1000;

#[derive(Parser, Debug)]
#[command(
    name = "pprank",
    version,
    about = "Privacy-preserving fair reranking experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the no-fairness, centralized and private pipelines per (epsilon, seed).
    Run(RunArgs),
    /// Compare the exact solver against brute force on random instances.
    VerifySolver(VerifyArgs),
    /// Draw distributed Laplace noise and test it against Laplace(0, b).
    NoiseAudit(AuditArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    None,
    Literal,
    ArgminPreserving,
}

impl From<ScalingArg> for ScalingMode {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::None => ScalingMode::None,
            ScalingArg::Literal => ScalingMode::Literal,
            ScalingArg::ArgminPreserving => ScalingMode::ArgminPreserving,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DeltaFArg {
    /// From the attention model: max(w_1, 1 - w_n).
    #[value(alias = "eq10")]
    Derived,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Inproc,
    Tcp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthArg {
    Uniform,
    Skewed,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Items per user.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Users L. Defaults to 200 for synthetic data and to the row count of --input.
    #[arg(long)]
    pub users: Option<usize>,
    /// Depth of the quality constraint; defaults to n.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.8, allow_negative_numbers = true)]
    pub theta: f64,
    /// Privacy budget; repeat for a sweep.
    #[arg(long = "epsilon", allow_negative_numbers = true)]
    pub epsilons: Vec<f64>,
    /// Repeat for several seeds.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_FRACTIONAL_BITS)]
    pub fractional_bits: u32,
    #[arg(long, value_enum, default_value_t = ScalingArg::ArgminPreserving)]
    pub scaling: ScalingArg,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub noise: Toggle,
    #[arg(long, value_enum, default_value_t = DeltaFArg::Derived)]
    pub delta_f: DeltaFArg,
    #[arg(long, value_enum, default_value_t = TransportArg::Inproc)]
    pub transport: TransportArg,
    /// Dense relevance CSV, one row per user.
    #[arg(long, conflicts_with = "synth")]
    pub input: Option<PathBuf>,
    /// Synthetic score distribution, used when no --input is given.
    #[arg(long, value_enum)]
    pub synth: Option<SynthArg>,
    #[arg(long, default_value_t = 1.0)]
    pub rating_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub rating_max: f64,
    /// Report CSV path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads across cells (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = VERIFY_MAX_N)]
    pub max_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct AuditArgs {
    /// Laplace scale b.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_FRACTIONAL_BITS)]
    pub fractional_bits: u32,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let source = match (&self.input, self.synth) {
            (Some(path), _) => DataSource::Csv(path.clone()),
            (None, Some(SynthArg::Skewed)) => DataSource::Synthetic(ScoreDistribution::Skewed),
            (None, _) => DataSource::Synthetic(ScoreDistribution::Uniform),
        };
        let users = match (&source, self.users) {
            (DataSource::Synthetic(_), None) => Some(200),
            (_, u) => u,
        };
        let config = ExperimentConfig {
            n: self.n,
            users,
            k: self.k,
            theta: self.theta,
            epsilons: if self.epsilons.is_empty() {
                DEFAULT_EPSILONS.to_vec()
            } else {
                self.epsilons.clone()
            },
            seeds: if self.seeds.is_empty() {
                vec![0]
            } else {
                self.seeds.clone()
            },
            fractional_bits: self.fractional_bits,
            scaling: self.scaling.into(),
            noise_enabled: self.noise == Toggle::On,
            sensitivity: match self.delta_f {
                DeltaFArg::Derived => SensitivityMode::Derived,
                DeltaFArg::One => SensitivityMode::Unit,
            },
            transport: match self.transport {
                TransportArg::Inproc => TransportMode::InProc,
                TransportArg::Tcp => TransportMode::Tcp,
            },
            scale: RatingScale::new(self.rating_min, self.rating_max)?,
            source,
            output: self.output.clone(),
            threads: self.threads,
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Ingestion { .. } | Error::Io { .. } => EXIT_INGESTION,
        _ => EXIT_VALIDATION,
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<u8> {
    let config = args.to_config()?;
    let result = run_experiment(&config)?;
    print_summary(&result.report);
    if let Some(path) = &config.output {
        write_report_csv(&result.report, path)?;
        println!("report written to {}", path.display());
    }
    let violations = result.floor_violations(config.theta);
    for v in &violations {
        eprintln!("NDCG floor violated: {v}");
    }
    Ok(if violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    })
}

pub fn print_summary(report: &RunReport) {
    println!(
        "{:>10} {:>6} {:>12} {:>12} {:>12} {:>9} {:>9} {:>6} {:>10}",
        "epsilon",
        "seed",
        "unfair_none",
        "unfair_cent",
        "unfair_priv",
        "mean_ndcg",
        "min_ndcg",
        "aborts",
        "ms"
    );
    for r in &report.rows {
        println!(
            "{:>10} {:>6} {:>12.4} {:>12.4} {:>12.4} {:>9.4} {:>9.4} {:>6} {:>10.1}",
            r.epsilon,
            r.seed,
            r.unfairness_none,
            r.unfairness_central_fair,
            r.unfairness_private,
            r.mean_ndcg,
            r.min_ndcg,
            r.aborts,
            r.runtime_ms
        );
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifySummary {
    pub trials: usize,
    pub mismatches: Vec<String>,
}

/// Random instance for solver checks: integer ratings so that relevance
/// ties occur, noise on a random scale, and a rotating quality factor.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    theta: f64,
) -> Result<crate::solver::RerankProblem> {
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(1..=5) as f64
            } else {
                rng.random_range(1.0..=5.0)
            }
        })
        .collect();
    let r_hat = normalize_relevance(&raw, RatingScale::default())?;
    let rho = relevance_ranking(&raw);
    let b = [0.01, 0.3, 3.0, 1000.0][rng.random_range(0..4)];
    let exp = Exp::new(1.0 / b).map_err(|e| Error::Parameter(e.to_string()))?;
    let xi: Vec<f64> = (0..n).map(|_| exp.sample(rng) - exp.sample(rng)).collect();
    let k = rng.random_range(1..=n);
    build_problem(&xi, &r_hat, &attention_weights(n)?, theta, k, &rho)
}

pub fn verify_solver(trials: usize, max_n: usize, seed: u64) -> Result<VerifySummary> {
    if max_n == 0 || max_n > VERIFY_MAX_N {
        return Err(Error::Config(format!(
            "max-n must be in 1..={VERIFY_MAX_N}, got {max_n}"
        )));
    }
    const { assert!(VERIFY_MAX_N <= BRUTE_FORCE_MAX_N) };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut summary = VerifySummary {
        trials,
        ..Default::default()
    };
    for t in 0..trials {
        let n = rng.random_range(1..=max_n);
        let theta = [0.0, 0.8, 1.0][t % 3];
        let p = random_instance(&mut rng, n, theta)?;
        let fast = solve(&p)?;
        let slow = brute_force(&p)?;
        let (cf, cs) = (p.objective(fast.order()), p.objective(slow.order()));
        if fast != slow || (cf - cs).abs() > 1e-9 {
            summary.mismatches.push(format!(
                "trial {t} (n={n}, theta={theta}): solver {:?} cost {cf}, brute force {:?} cost {cs}",
                fast.order(),
                slow.order()
            ));
        }
    }
    Ok(summary)
}

pub fn cmd_verify_solver(args: &VerifyArgs) -> Result<u8> {
    let summary = verify_solver(args.trials, args.max_n, args.seed)?;
    for m in &summary.mismatches {
        eprintln!("mismatch: {m}");
    }
    println!(
        "{} trials, {} mismatches: {}",
        summary.trials,
        summary.mismatches.len(),
        if summary.mismatches.is_empty() {
            "PASS"
        } else {
            "FAIL"
        }
    );
    Ok(if summary.mismatches.is_empty() {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    })
}

/// Reconstructed outputs of two-party Laplace noise generation.
pub fn distributed_laplace_samples(
    b: f64,
    samples: usize,
    seed: u64,
    codec: &FixedPointCodec,
) -> Result<Vec<f64>> {
    let mut rng0 = ChaCha20Rng::seed_from_u64(crate::protocol::derive_seed(seed, 0));
    let mut rng1 = ChaCha20Rng::seed_from_u64(crate::protocol::derive_seed(seed, 1));
    let (s0, s1) = pi_lap(b, samples, codec, &mut rng0, &mut rng1)?;
    reveal_to_client(&s0, &s1, codec)
}

pub fn noise_audit(args: &AuditArgs) -> Result<LaplaceAudit> {
    if !(args.b.is_finite() && args.b > 0.0) {
        return Err(Error::Config(format!("b must be positive, got {}", args.b)));
    }
    if args.samples < AUDIT_MIN_SAMPLES {
        return Err(Error::Config(format!(
            "need at least {AUDIT_MIN_SAMPLES} samples, got {}",
            args.samples
        )));
    }
    let codec = FixedPointCodec::new(args.fractional_bits)?;
    let xs = distributed_laplace_samples(args.b, args.samples, args.seed, &codec)?;
    Ok(LaplaceAudit::new(&xs, args.b))
}

pub fn cmd_noise_audit(args: &AuditArgs) -> Result<u8> {
    let audit = noise_audit(args)?;
    let codec = FixedPointCodec::new(args.fractional_bits)?;
    println!("samples            {}", audit.samples);
    println!("mean               {:.6}", audit.mean);
    println!(
        "variance           {:.6} (expected {:.6}, rel. error {:.4})",
        audit.variance,
        audit.expected_variance,
        audit.variance_rel_error()
    );
    println!(
        "ks statistic       {:.6} (critical {:.6} at alpha {})",
        audit.ks_statistic,
        audit.ks_critical,
        LaplaceAudit::ALPHA
    );
    println!(
        "max |sample|       {:.3} (codec limit {:.3e})",
        audit.max_abs,
        codec.limit()
    );
    let pass = audit.ks_passes();
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { EXIT_OK } else { EXIT_INVARIANT })
}

pub fn dispatch(cli: &Cli) -> u8 {
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::VerifySolver(a) => cmd_verify_solver(a),
        Command::NoiseAudit(a) => cmd_noise_audit(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            });
        }
    };
    ExitCode::from(dispatch(&cli))
}
