//! Evaluation harness. Runs the three pipelines over the same users and
//! keeps a plaintext ledger of what each user contributed so that the
//! unfairness and NDCG of the outcome can be measured. Nothing here is fed
//! back into the protocol.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fairness::{ndcg, unfairness, AttentionModel, RelevanceProfile};
use crate::mpc::{reveal_to_client, PartyId};
use crate::protocol::{
    client_seed, initialize, ClientSession, ProtocolConfig, RerankSettings, ServerPair,
};
use crate::solver::{build_problem, solve, Reranking};

#[derive(Clone, Debug)]
pub struct UserRecord {
    pub order: Vec<usize>,
    pub ndcg: f64,
    pub runtime: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    /// Per user, `None` if the user aborted.
    pub orders: Vec<Option<Vec<usize>>>,
    /// NDCG of each completed user.
    pub ndcg: Vec<f64>,
    pub aborts: usize,
    pub attention: Vec<f64>,
    pub relevance: Vec<f64>,
    pub unfairness: f64,
    pub user_runtimes: Vec<Duration>,
    pub noise_draws: u64,
}

impl RunOutcome {
    fn empty(n: usize) -> Self {
        RunOutcome {
            attention: vec![0.0; n],
            relevance: vec![0.0; n],
            ..Default::default()
        }
    }

    fn record(&mut self, profile: &RelevanceProfile, attention: &[f64], rec: UserRecord) {
        for (a, w) in self.attention.iter_mut().zip(attention) {
            *a += w;
        }
        for (r, x) in self.relevance.iter_mut().zip(profile.normalized()) {
            *r += x;
        }
        self.ndcg.push(rec.ndcg);
        self.user_runtimes.push(rec.runtime);
        self.orders.push(Some(rec.order));
    }

    fn close(mut self) -> Result<Self> {
        self.unfairness = unfairness(&self.attention, &self.relevance)?;
        Ok(self)
    }

    pub fn mean_ndcg(&self) -> f64 {
        if self.ndcg.is_empty() {
            return f64::NAN;
        }
        self.ndcg.iter().sum::<f64>() / self.ndcg.len() as f64
    }

    pub fn min_ndcg(&self) -> f64 {
        self.ndcg.iter().copied().fold(f64::NAN, f64::min)
    }

    pub fn total_runtime(&self) -> Duration {
        self.user_runtimes.iter().sum()
    }

    /// Equality on everything except wall-clock timings.
    pub fn same_results(&self, other: &RunOutcome) -> bool {
        self.orders == other.orders
            && self.aborts == other.aborts
            && self.noise_draws == other.noise_draws
            && bits(&self.ndcg) == bits(&other.ndcg)
            && bits(&self.attention) == bits(&other.attention)
            && bits(&self.relevance) == bits(&other.relevance)
            && self.unfairness.to_bits() == other.unfairness.to_bits()
    }
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

fn check_users(users: &[RelevanceProfile], n: usize) -> Result<()> {
    if let Some((l, p)) = users.iter().enumerate().find(|(_, p)| p.len() != n) {
        return Err(Error::Config(format!(
            "user {l} has {} scores, expected n={n}",
            p.len()
        )));
    }
    Ok(())
}

/// Every user keeps their relevance ranking.
pub fn run_unfair(users: &[RelevanceProfile], attention: &AttentionModel) -> Result<RunOutcome> {
    let n = attention.len();
    check_users(users, n)?;
    let mut out = RunOutcome::empty(n);
    for profile in users {
        let start = Instant::now();
        let reranking = Reranking::new(profile.ranking().to_vec())?;
        let w = reranking.attention_by_item(attention.weights());
        let rec = UserRecord {
            ndcg: 1.0,
            order: reranking.into_order(),
            runtime: start.elapsed(),
        };
        out.record(profile, &w, rec);
    }
    out.close()
}

/// A trusted curator sees exact `A - R` and solves each user's problem.
pub fn run_centralized(
    users: &[RelevanceProfile],
    attention: &AttentionModel,
    k: usize,
    theta: f64,
) -> Result<RunOutcome> {
    let n = attention.len();
    check_users(users, n)?;
    let mut out = RunOutcome::empty(n);
    for profile in users {
        let start = Instant::now();
        let xi: Vec<f64> = out
            .attention
            .iter()
            .zip(&out.relevance)
            .map(|(a, r)| a - r)
            .collect();
        let problem = build_problem(
            &xi,
            profile.normalized(),
            attention.weights(),
            theta,
            k,
            profile.ranking(),
        )?;
        let reranking = solve(&problem)?;
        let w = reranking.attention_by_item(attention.weights());
        let rec = UserRecord {
            ndcg: ndcg(profile.ranking(), reranking.order(), profile.normalized())?,
            order: reranking.into_order(),
            runtime: start.elapsed(),
        };
        out.record(profile, &w, rec);
    }
    out.close()
}

/// The private protocol driven one user at a time.
pub struct PrivateRun {
    config: ProtocolConfig,
    attention: AttentionModel,
    servers: ServerPair,
    seed: u64,
    next_user: usize,
    outcome: RunOutcome,
}

impl PrivateRun {
    pub fn new(config: &ProtocolConfig, seed: u64) -> Result<Self> {
        let attention = AttentionModel::geometric(config.n)?;
        let servers = initialize(config, &attention, seed)?;
        Ok(PrivateRun {
            config: config.clone(),
            outcome: RunOutcome::empty(config.n),
            attention,
            servers,
            seed,
            next_user: 0,
        })
    }

    pub fn servers(&self) -> &ServerPair {
        &self.servers
    }

    pub fn outcome(&self) -> &RunOutcome {
        &self.outcome
    }

    /// Noise release, client rerank, and aggregation for the next user.
    /// On failure the user is counted as aborted and the aggregates are
    /// left untouched.
    pub fn serve_user(&mut self, profile: &RelevanceProfile) -> Result<UserRecord> {
        let user = self.next_user;
        if user >= self.config.users {
            return Err(Error::protocol(format!(
                "all {} users have been served",
                self.config.users
            )));
        }
        self.next_user += 1;
        if profile.len() != self.config.n {
            self.outcome.aborts += 1;
            self.outcome.orders.push(None);
            return Err(Error::Config(format!(
                "user {user} has {} scores, expected n={}",
                profile.len(),
                self.config.n
            )));
        }
        match self.session(user, profile) {
            Ok((rec, attention)) => {
                self.outcome.record(profile, &attention, rec.clone());
                Ok(rec)
            }
            Err(e) => {
                log::warn!("user {user} aborted: {e}");
                self.outcome.aborts += 1;
                self.outcome.orders.push(None);
                Err(e)
            }
        }
    }

    fn session(
        &mut self,
        user: usize,
        profile: &RelevanceProfile,
    ) -> Result<(UserRecord, Vec<f64>)> {
        let start = Instant::now();
        let (xi0, xi1) = self.servers.get_unfairness_metric()?;
        let mut client = ClientSession::new(user, profile.clone(), client_seed(self.seed, user));
        let settings = RerankSettings::from(&self.config);
        let out = client.client_rerank(
            (&xi0, &xi1),
            self.attention.weights(),
            &settings,
            &self.config.codec,
        )?;
        self.servers.update_aggregation(&out.uploads)?;
        let runtime = start.elapsed();
        let rec = UserRecord {
            ndcg: ndcg(
                profile.ranking(),
                out.reranking.order(),
                profile.normalized(),
            )?,
            order: out.reranking.into_order(),
            runtime,
        };
        Ok((rec, out.attention))
    }

    pub fn finish(mut self) -> Result<RunOutcome> {
        self.outcome.noise_draws = self.servers.server(PartyId::Zero).noise_draws();
        self.outcome.close()
    }
}

/// Runs every user through the private protocol in order. Aborted users
/// are recorded and skipped.
pub fn run_sequence(
    users: &[RelevanceProfile],
    config: &ProtocolConfig,
    seed: u64,
) -> Result<RunOutcome> {
    if users.len() != config.users {
        return Err(Error::Config(format!(
            "config expects L={} users, got {}",
            config.users,
            users.len()
        )));
    }
    let mut run = PrivateRun::new(config, seed)?;
    for profile in users {
        // Errors are already recorded as aborts.
        let _ = run.serve_user(profile);
    }
    run.finish()
}

/// Test-harness view: what the two servers' aggregates reconstruct to.
pub fn reconstructed_aggregates(
    servers: &ServerPair,
    config: &ProtocolConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s0 = servers.server(PartyId::Zero);
    let s1 = servers.server(PartyId::One);
    Ok((
        reveal_to_client(s0.attention_shares(), s1.attention_shares(), &config.codec)?,
        reveal_to_client(s0.relevance_shares(), s1.relevance_shares(), &config.codec)?,
    ))
}
