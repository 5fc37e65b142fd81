//! Sweeps over (epsilon, seed) cells. Each seed gets its own score matrix
//! (unless one is supplied) and its own no-fairness and centralized runs;
//! every cell then runs the private protocol once.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::data::{load_relevance_csv, synth_relevance, ReportRow, RunReport, ScoreDistribution};
use crate::error::{Error, Result};
use crate::fairness::{AttentionModel, RatingScale, RelevanceProfile};
use crate::mpc::TransportMode;
use crate::pipeline::{run_centralized, run_sequence, run_unfair, RunOutcome};
use crate::protocol::{derive_seed, ProtocolConfig, SensitivityMode};
use crate::ring::{FixedPointCodec, DEFAULT_FRACTIONAL_BITS};
use crate::solver::ScalingMode;

pub const DEFAULT_EPSILONS: [f64; 7] = [0.5, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5];

/// Slack allowed below the NDCG floor before a row counts as a violation.
pub const NDCG_SLACK: f64 = 1e-9;

const TAG_SCORES: u64 = 0x5c0e;
const TAG_CELL: u64 = 0xce11;

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic(ScoreDistribution),
    Csv(PathBuf),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub n: usize,
    /// `None` takes the row count of a CSV input.
    pub users: Option<usize>,
    /// `None` means `k = n`.
    pub k: Option<usize>,
    pub theta: f64,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    pub fractional_bits: u32,
    pub scaling: ScalingMode,
    pub noise_enabled: bool,
    pub sensitivity: SensitivityMode,
    pub transport: TransportMode,
    pub scale: RatingScale,
    pub source: DataSource,
    pub output: Option<PathBuf>,
    /// Worker threads for independent cells; 0 picks the machine's count.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 20,
            users: Some(200),
            k: None,
            theta: 0.8,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            seeds: vec![0],
            fractional_bits: DEFAULT_FRACTIONAL_BITS,
            scaling: ScalingMode::default(),
            noise_enabled: true,
            sensitivity: SensitivityMode::default(),
            transport: TransportMode::default(),
            scale: RatingScale::default(),
            source: DataSource::Synthetic(ScoreDistribution::Uniform),
            output: None,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.users == Some(0) {
            return Err(Error::Config("L must be at least 1".into()));
        }
        if let Some(k) = self.k {
            if k == 0 || k > self.n {
                return Err(Error::Config(format!(
                    "k must be in 1..={}, got {k}",
                    self.n
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!(
                "theta must be in [0, 1], got {}",
                self.theta
            )));
        }
        if self.epsilons.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "need at least one epsilon and one seed".into(),
            ));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Config(format!("epsilon must be positive, got {e}")));
        }
        if self.users.is_none() && matches!(self.source, DataSource::Synthetic(_)) {
            return Err(Error::Config("synthetic data needs L".into()));
        }
        FixedPointCodec::new(self.fractional_bits)?;
        Ok(())
    }

    pub fn protocol(&self, users: usize, epsilon: f64) -> Result<ProtocolConfig> {
        let mut c = ProtocolConfig::new(self.n, users, epsilon);
        c.k = self.k.unwrap_or(self.n);
        c.theta = self.theta;
        c.scaling = self.scaling;
        c.noise_enabled = self.noise_enabled;
        c.sensitivity = self.sensitivity;
        c.codec = FixedPointCodec::new(self.fractional_bits)?;
        c.transport = self.transport;
        c.validate()?;
        Ok(c)
    }

    fn worker_count(&self, cells: usize) -> usize {
        let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
        let t = if self.threads == 0 { hw } else { self.threads };
        t.clamp(1, cells.max(1))
    }
}

/// Everything measured for one cell, kept for invariant checks.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub row: ReportRow,
    pub private: RunOutcome,
}

#[derive(Clone, Debug)]
pub struct SeedBaselines {
    pub seed: u64,
    pub none: RunOutcome,
    pub central: RunOutcome,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub report: RunReport,
    pub cells: Vec<CellResult>,
    pub baselines: Vec<SeedBaselines>,
}

impl ExperimentResult {
    /// Rows where a fairness-enabled pipeline dipped below the floor.
    pub fn floor_violations(&self, theta: f64) -> Vec<String> {
        let floor = theta - NDCG_SLACK;
        let mut out = Vec::new();
        for b in &self.baselines {
            if b.central.min_ndcg() < floor {
                out.push(format!(
                    "seed {}: centralized min NDCG {}",
                    b.seed,
                    b.central.min_ndcg()
                ));
            }
        }
        for c in &self.cells {
            if c.private
                .ndcg
                .iter()
                .any(|&x| !(floor..=1.0 + NDCG_SLACK).contains(&x))
            {
                out.push(format!(
                    "epsilon {} seed {}: private min NDCG {}",
                    c.row.epsilon, c.row.seed, c.row.min_ndcg
                ));
            }
        }
        out
    }
}

pub fn load_users(config: &ExperimentConfig, seed: u64) -> Result<Vec<RelevanceProfile>> {
    let matrix = match &config.source {
        DataSource::Csv(path) => {
            let m = load_relevance_csv(path, config.scale)?;
            if m.items() != config.n {
                return Err(Error::Config(format!(
                    "{} has {} items per user, expected n={}",
                    path.display(),
                    m.items(),
                    config.n
                )));
            }
            if let Some(l) = config.users {
                if l != m.users() {
                    return Err(Error::Config(format!(
                        "{} has {} users, expected L={l}",
                        path.display(),
                        m.users()
                    )));
                }
            }
            m
        }
        DataSource::Synthetic(dist) => {
            let users = config.users.expect("validated");
            synth_relevance(
                users,
                config.n,
                derive_seed(seed, TAG_SCORES),
                config.scale,
                *dist,
            )?
        }
    };
    matrix.profiles()
}

/// Seed for the private run of one cell.
pub fn cell_seed(seed: u64, epsilon: f64) -> u64 {
    derive_seed(derive_seed(seed, TAG_CELL), epsilon.to_bits())
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let attention = AttentionModel::geometric(config.n)?;
    let k = config.k.unwrap_or(config.n);

    let mut users_by_seed = Vec::with_capacity(config.seeds.len());
    let mut baselines = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let users = load_users(config, seed)?;
        let none = run_unfair(&users, &attention)?;
        let central = run_centralized(&users, &attention, k, config.theta)?;
        baselines.push(SeedBaselines {
            seed,
            none,
            central,
        });
        users_by_seed.push(users);
    }

    let cells: Vec<(usize, f64)> = config
        .epsilons
        .iter()
        .flat_map(|&e| (0..config.seeds.len()).map(move |s| (s, e)))
        .collect();
    let slots: Vec<Mutex<Option<Result<CellResult>>>> =
        cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..config.worker_count(cells.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(s, epsilon)) = cells.get(i) else {
                    break;
                };
                let res = run_cell(config, &users_by_seed[s], &baselines[s], epsilon);
                *slots[i].lock().expect("slot lock") = Some(res);
            });
        }
    });

    let mut results = Vec::with_capacity(cells.len());
    for slot in slots {
        results.push(
            slot.into_inner()
                .expect("slot lock")
                .expect("every cell ran")?,
        );
    }
    let report = RunReport {
        rows: results.iter().map(|c| c.row.clone()).collect(),
    };
    Ok(ExperimentResult {
        report,
        cells: results,
        baselines,
    })
}

fn run_cell(
    config: &ExperimentConfig,
    users: &[RelevanceProfile],
    base: &SeedBaselines,
    epsilon: f64,
) -> Result<CellResult> {
    let protocol = config.protocol(users.len(), epsilon)?;
    let start = Instant::now();
    let private = run_sequence(users, &protocol, cell_seed(base.seed, epsilon))?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    log::info!(
        "epsilon {epsilon} seed {}: unfairness {:.4}, {} aborts, {runtime_ms:.0} ms",
        base.seed,
        private.unfairness,
        private.aborts
    );
    let row = ReportRow {
        epsilon,
        seed: base.seed,
        unfairness_none: base.none.unfairness,
        unfairness_central_fair: base.central.unfairness,
        unfairness_private: private.unfairness,
        mean_ndcg: private.mean_ndcg(),
        min_ndcg: private.min_ndcg(),
        aborts: private.aborts,
        runtime_ms,
    };
    Ok(CellResult { row, private })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 5,
            users: Some(12),
            epsilons: vec![1.0, 1e5],
            seeds: vec![3, 4],
            ..Default::default()
        }
    }

    #[test]
    fn rows_follow_epsilon_then_seed() {
        let res = run_experiment(&small()).unwrap();
        let keys: Vec<(f64, u64)> = res
            .report
            .rows
            .iter()
            .map(|r| (r.epsilon, r.seed))
            .collect();
        assert_eq!(keys, vec![(1.0, 3), (1.0, 4), (1e5, 3), (1e5, 4)]);
        assert!(res.floor_violations(0.8).is_empty());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut a = small();
        a.threads = 1;
        let mut b = small();
        b.threads = 4;
        let ra = run_experiment(&a).unwrap();
        let rb = run_experiment(&b).unwrap();
        for (x, y) in ra.cells.iter().zip(&rb.cells) {
            assert!(x.private.same_results(&y.private));
        }
    }

    #[test]
    fn validation() {
        let mut c = small();
        c.k = Some(6);
        assert!(c.validate().is_err());
        let mut c = small();
        c.epsilons = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = small();
        c.theta = 1.5;
        assert!(c.validate().is_err());
        let mut c = small();
        c.users = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(1, 1.0), cell_seed(1, 10.0));
        assert_ne!(cell_seed(1, 1.0), cell_seed(2, 1.0));
    }
}
