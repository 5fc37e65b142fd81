//! The two-server reranking protocol.
//!
//! Servers hold shares of the accumulated attention `A` and relevance `R`.
//! For each user in turn they release a Laplace-perturbed sharing of
//! `A - R`; the user reconstructs it, solves its reranking problem locally,
//! and uploads fresh sharings of its attention vector and normalized
//! relevance, which the servers fold into `A` and `R` by local addition.
//!
//! Nothing in this module ever holds `A`, `R` or `xi` in the clear on the
//! server side.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{sensitivity, AttentionModel, RelevanceProfile};
use crate::mpc::{
    inproc_pair, pi_lap_party, reveal_to_client, share_vec, tcp_pair, NoiseMode, PartyId,
    SharedVector, Transport, TransportMode,
};
use crate::ring::FixedPointCodec;
use crate::solver::{apply_scaling, build_problem, solve, Reranking, ScalingMode};

/// How the servers obtain the sensitivity of one user's contribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensitivityMode {
    /// `max(|w_max - 0|, |w_min - 1|)` from the attention model.
    #[default]
    Derived,
    /// Fixed at 1.
    Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub n: usize,
    pub users: usize,
    pub delta_f: f64,
    /// Laplace scale `delta_f / (epsilon / (n * L))`.
    pub scale: f64,
    pub noise_enabled: bool,
}

impl PrivacyParams {
    pub fn new(
        epsilon: f64,
        n: usize,
        users: usize,
        delta_f: f64,
        noise_enabled: bool,
    ) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if n == 0 || users == 0 {
            return Err(Error::Config(format!(
                "need at least one item and one user, got n={n}, L={users}"
            )));
        }
        if !(delta_f.is_finite() && delta_f > 0.0) {
            return Err(Error::Config(format!(
                "sensitivity must be positive, got {delta_f}"
            )));
        }
        let scale = delta_f / (epsilon / (n as f64 * users as f64));
        Ok(PrivacyParams {
            epsilon,
            n,
            users,
            delta_f,
            scale,
            noise_enabled,
        })
    }

    /// Budget spent on each released scalar, `epsilon / (n * L)`.
    pub fn per_query_epsilon(&self) -> f64 {
        self.epsilon / (self.n as f64 * self.users as f64)
    }

    pub fn noise_mode(&self) -> NoiseMode {
        if self.noise_enabled {
            NoiseMode::Laplace { scale: self.scale }
        } else {
            NoiseMode::Disabled
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub users: usize,
    pub epsilon: f64,
    pub k: usize,
    pub theta: f64,
    pub scaling: ScalingMode,
    pub noise_enabled: bool,
    pub sensitivity: SensitivityMode,
    pub codec: FixedPointCodec,
    pub transport: TransportMode,
}

impl ProtocolConfig {
    pub fn new(n: usize, users: usize, epsilon: f64) -> Self {
        ProtocolConfig {
            n,
            users,
            epsilon,
            k: n,
            theta: 0.8,
            scaling: ScalingMode::default(),
            noise_enabled: true,
            sensitivity: SensitivityMode::default(),
            codec: FixedPointCodec::default(),
            transport: TransportMode::InProc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.users == 0 {
            return Err(Error::Config("n and L must be at least 1".into()));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::Config(format!(
                "k must be in 1..={}, got {}",
                self.n, self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!(
                "theta must be in [0, 1], got {}",
                self.theta
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Mixes `base` with a tag into an independent 64-bit seed (splitmix64).
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One user's contribution as received by one server.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Upload {
    pub attention: SharedVector,
    pub relevance: SharedVector,
}

impl Upload {
    fn check(&self, party: PartyId, n: usize) -> Result<()> {
        for (what, v) in [
            ("attention", &self.attention),
            ("relevance", &self.relevance),
        ] {
            if v.party() != party {
                return Err(Error::protocol(format!(
                    "{what} upload addressed to {:?} delivered to {party:?}",
                    v.party()
                )));
            }
            if v.len() != n {
                return Err(Error::protocol(format!(
                    "{what} upload has {} entries, expected {n}",
                    v.len()
                )));
            }
        }
        Ok(())
    }
}

pub struct ServerState {
    party: PartyId,
    attention: SharedVector,
    relevance: SharedVector,
    privacy: PrivacyParams,
    codec: FixedPointCodec,
    users_served: usize,
    noise_draws: u64,
    rng: ChaCha20Rng,
}

impl ServerState {
    pub fn new(party: PartyId, privacy: PrivacyParams, codec: FixedPointCodec, seed: u64) -> Self {
        ServerState {
            party,
            attention: SharedVector::zeros(party, privacy.n),
            relevance: SharedVector::zeros(party, privacy.n),
            privacy,
            codec,
            users_served: 0,
            noise_draws: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn privacy(&self) -> &PrivacyParams {
        &self.privacy
    }

    pub fn users_served(&self) -> usize {
        self.users_served
    }

    /// Laplace samples this server has helped generate.
    pub fn noise_draws(&self) -> u64 {
        self.noise_draws
    }

    pub fn attention_shares(&self) -> &SharedVector {
        &self.attention
    }

    pub fn relevance_shares(&self) -> &SharedVector {
        &self.relevance
    }

    /// This server's half of a noisy `A - R` release.
    pub fn unfairness_share<T: Transport + ?Sized>(
        &mut self,
        transport: &mut T,
    ) -> Result<SharedVector> {
        let mut xi = self.attention.clone();
        xi.sub_assign_local(&self.relevance)?;
        let noise = pi_lap_party(
            self.party,
            self.privacy.noise_mode(),
            self.privacy.n,
            &self.codec,
            &mut self.rng,
            transport,
        )?;
        self.noise_draws += self.privacy.n as u64;
        xi.add_assign_local(&noise)?;
        Ok(xi)
    }

    fn apply_upload(&mut self, upload: &Upload) -> Result<()> {
        self.attention.add_assign_local(&upload.attention)?;
        self.relevance.add_assign_local(&upload.relevance)?;
        self.users_served += 1;
        Ok(())
    }
}

/// Both servers and the channel between them.
pub struct ServerPair {
    servers: [ServerState; 2],
    links: [Box<dyn Transport>; 2],
}

/// Sets up both servers with sharings of `A = R = 0`.
pub fn initialize(
    config: &ProtocolConfig,
    attention: &AttentionModel,
    seed: u64,
) -> Result<ServerPair> {
    config.validate()?;
    if attention.len() != config.n {
        return Err(Error::Config(format!(
            "attention model has {} positions, config has n={}",
            attention.len(),
            config.n
        )));
    }
    let delta_f = match config.sensitivity {
        SensitivityMode::Derived => sensitivity(attention),
        SensitivityMode::Unit => 1.0,
    };
    let privacy = PrivacyParams::new(
        config.epsilon,
        config.n,
        config.users,
        delta_f,
        config.noise_enabled,
    )?;
    let links: [Box<dyn Transport>; 2] = match config.transport {
        TransportMode::InProc => {
            let (a, b) = inproc_pair();
            [Box::new(a), Box::new(b)]
        }
        TransportMode::Tcp => {
            let (a, b) = tcp_pair()?;
            [Box::new(a), Box::new(b)]
        }
    };
    let servers = PartyId::BOTH.map(|party| {
        ServerState::new(
            party,
            privacy,
            config.codec,
            derive_seed(seed, 0x5e_0000 + party.index() as u64),
        )
    });
    Ok(ServerPair { servers, links })
}

impl ServerPair {
    pub fn privacy(&self) -> &PrivacyParams {
        &self.servers[0].privacy
    }

    pub fn server(&self, party: PartyId) -> &ServerState {
        &self.servers[party.index()]
    }

    /// Both servers run their side concurrently; returns `[[xi]]`.
    pub fn get_unfairness_metric(&mut self) -> Result<(SharedVector, SharedVector)> {
        let [s0, s1] = &mut self.servers;
        let [l0, l1] = &mut self.links;
        std::thread::scope(|scope| {
            let h0 = scope.spawn(|| s0.unfairness_share(l0));
            let h1 = scope.spawn(|| s1.unfairness_share(l1));
            let v0 = h0.join().expect("server 0 panicked");
            let v1 = h1.join().expect("server 1 panicked");
            Ok((v0?, v1?))
        })
    }

    /// Local share additions on both servers. Both uploads are validated
    /// before either server changes state.
    pub fn update_aggregation(&mut self, uploads: &[Upload; 2]) -> Result<()> {
        let n = self.privacy().n;
        let users = self.privacy().users;
        for (server, upload) in self.servers.iter().zip(uploads) {
            upload.check(server.party, n)?;
            if server.users_served >= users {
                return Err(Error::protocol(format!(
                    "server {:?} already served all {users} users",
                    server.party
                )));
            }
        }
        for (server, upload) in self.servers.iter_mut().zip(uploads) {
            server.apply_upload(upload)?;
        }
        Ok(())
    }
}

/// Per-user reranking parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RerankSettings {
    pub k: usize,
    pub theta: f64,
    pub scaling: ScalingMode,
    pub epsilon: f64,
    pub users: usize,
}

impl From<&ProtocolConfig> for RerankSettings {
    fn from(c: &ProtocolConfig) -> Self {
        RerankSettings {
            k: c.k,
            theta: c.theta,
            scaling: c.scaling,
            epsilon: c.epsilon,
            users: c.users,
        }
    }
}

/// Everything one user produces in a session. `uploads` go to the servers;
/// the rest stays on the client.
#[derive(Clone, Debug)]
pub struct ClientOutcome {
    pub reranking: Reranking,
    pub attention: Vec<f64>,
    pub uploads: [Upload; 2],
}

pub struct ClientSession {
    user: usize,
    profile: RelevanceProfile,
    rng: ChaCha20Rng,
    finished: bool,
}

impl ClientSession {
    pub fn new(user: usize, profile: RelevanceProfile, seed: u64) -> Self {
        ClientSession {
            user,
            profile,
            rng: ChaCha20Rng::seed_from_u64(seed),
            finished: false,
        }
    }

    pub fn user(&self) -> usize {
        self.user
    }

    pub fn profile(&self) -> &RelevanceProfile {
        &self.profile
    }

    /// Reconstructs `xi`, solves the reranking problem and shares the
    /// resulting attention and relevance vectors. A session uploads once.
    pub fn client_rerank(
        &mut self,
        xi_shares: (&SharedVector, &SharedVector),
        w_hat: &[f64],
        settings: &RerankSettings,
        codec: &FixedPointCodec,
    ) -> Result<ClientOutcome> {
        if self.finished {
            return Err(Error::protocol(format!(
                "user {} already reranked",
                self.user
            )));
        }
        let xi = reveal_to_client(xi_shares.0, xi_shares.1, codec)?;
        let xi = apply_scaling(&xi, settings.scaling, settings.epsilon, settings.users)?;
        let r_hat = self.profile.normalized();
        let mut problem = build_problem(
            &xi,
            r_hat,
            w_hat,
            settings.theta,
            settings.k,
            self.profile.ranking(),
        )?;
        if settings.scaling == ScalingMode::ArgminPreserving {
            problem.normalize_costs();
        }
        let reranking = solve(&problem)?;
        let attention = reranking.attention_by_item(w_hat);
        let uploads = self.share_uploads(&attention, codec)?;
        self.finished = true;
        Ok(ClientOutcome {
            reranking,
            attention,
            uploads,
        })
    }

    fn share_uploads(&mut self, attention: &[f64], codec: &FixedPointCodec) -> Result<[Upload; 2]> {
        let (a0, a1) = share_vec(&codec.encode_vec(attention)?, &mut self.rng);
        let (r0, r1) = share_vec(&codec.encode_vec(self.profile.normalized())?, &mut self.rng);
        Ok([
            Upload {
                attention: a0,
                relevance: r0,
            },
            Upload {
                attention: a1,
                relevance: r1,
            },
        ])
    }
}

/// Fresh client randomness for user `l` of a run seeded with `seed`.
pub fn client_seed(seed: u64, user: usize) -> u64 {
    derive_seed(seed, 0xc1_0000_0000 + user as u64)
}
