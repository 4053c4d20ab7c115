use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Effort settings shared by the multi-start optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptBudget {
    /// Random starts on top of the deterministic ones.
    pub n_random: usize,
    /// Iteration cap per start.
    pub max_iter: usize,
    /// Fixed-point tolerance.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptBudget {
    fn default() -> Self {
        Self {
            n_random: 32,
            max_iter: 10_000,
            tol: 1e-12,
            seed: 0,
        }
    }
}

impl OptBudget {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_random_starts(mut self, n_random: usize) -> Self {
        self.n_random = n_random;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Independent generator for one start, so that results do not depend on
/// the order in which starts are scheduled.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
