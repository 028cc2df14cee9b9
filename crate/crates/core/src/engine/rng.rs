//! Counter-addressed random streams.
//!
//! Every draw in a simulation comes from a stream identified by the global
//! seed and a path `(replication, round, stage, purpose, lane)`. The seed
//! keys a ChaCha8 generator and the hashed path selects its stream, so a
//! given path always yields the same sequence regardless of thread
//! scheduling or the order in which other streams were consumed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{NoiseFamily, NoiseModel};

/// What a stream is used for. Separating purposes keeps, for example, the
/// feedback draws of a stage aligned between two runs even when one of them
/// also draws noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Initial state and any per-round latent variables.
    Start,
    Feedback,
    CostNoise,
    RewardNoise,
    /// Internal randomization of a policy.
    Policy,
    /// Cohort generation and other one-off scenario setup.
    Setup,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Start => 1,
            Purpose::Feedback => 2,
            Purpose::CostNoise => 3,
            Purpose::RewardNoise => 4,
            Purpose::Policy => 5,
            Purpose::Setup => 6,
        }
    }
}

/// Which trajectory of a replication a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lane {
    Learner,
    Benchmark,
}

/// How learner and benchmark trajectories share randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// Each trajectory draws from its own streams.
    #[default]
    Independent,
    /// Both trajectories read the same per-(round, stage) streams.
    CommonRandomNumbers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub replication: u64,
    pub round: u64,
    pub stage: u64,
    pub purpose: Purpose,
    pub lane: Lane,
}

impl StreamKey {
    fn stream_id(&self) -> u64 {
        let lane = match self.lane {
            Lane::Learner => 0,
            Lane::Benchmark => 1,
        };
        [self.replication, self.round, self.stage, self.purpose.tag(), lane]
            .into_iter()
            .fold(0x6a09_e667_f3bc_c908, |h, v| splitmix64(h ^ splitmix64(v)))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, key: StreamKey) -> Self {
        let mut bytes = [0u8; 32];
        let mut state = seed;
        for chunk in bytes.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(key.stream_id());
        Self { rng }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Draws one noise value of the given law.
    pub fn noise(&mut self, noise: NoiseModel) -> f64 {
        if noise.sigma == 0.0 {
            return 0.0;
        }
        match noise.family {
            NoiseFamily::Gaussian => noise.transform(self.standard_normal(), 0.5),
            NoiseFamily::BoundedUniform => noise.transform(0.0, self.uniform()),
        }
    }

    /// Index drawn from a probability vector by inverse transform of a single
    /// uniform. Zero-probability entries are never returned.
    pub fn categorical(&mut self, probabilities: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, &p) in probabilities.iter().enumerate() {
            acc += p;
            if acc > u {
                return i;
            }
        }
        probabilities
            .iter()
            .rposition(|&p| p > 0.0)
            .expect("distribution has positive mass")
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Stream factory for one round of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundStreams {
    pub seed: u64,
    pub replication: u64,
    pub round: u64,
    pub lane: Lane,
}

impl RoundStreams {
    pub fn new(seed: u64, replication: usize, round: usize, lane: Lane) -> Self {
        Self {
            seed,
            replication: replication as u64,
            round: round as u64,
            lane,
        }
    }

    pub fn stream(&self, stage: usize, purpose: Purpose) -> RngStream {
        RngStream::new(
            self.seed,
            StreamKey {
                replication: self.replication,
                round: self.round,
                stage: stage as u64,
                purpose,
                lane: self.lane,
            },
        )
    }
}
