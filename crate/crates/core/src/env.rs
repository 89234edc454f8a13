//! Episodic environment: one episode visits every receiver height once and
//! the reward for `(height, divergence)` is the coverage percentage.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par::{self, Execution};
use crate::radio_map::CoverageModel;
use crate::scene::{SceneConfig, Spaces};
use crate::{Error, Result};

/// Order in which an episode visits the height states.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpisodeOrder {
    #[default]
    Ascending,
    RandomPermutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvState {
    pub state_idx: usize,
    pub done: bool,
}

/// Write-once table of rewards indexed by `(state, action)`.
#[derive(Debug, Clone)]
pub struct RewardCache {
    n_actions: usize,
    values: Vec<Option<f64>>,
}

impl RewardCache {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_actions, values: vec![None; n_states * n_actions] }
    }

    pub fn get(&self, s: usize, a: usize) -> Option<f64> {
        self.values[s * self.n_actions + a]
    }

    /// Stores `v` unless the entry is already filled; returns the stored value.
    pub fn fill(&mut self, s: usize, a: usize, v: f64) -> f64 {
        *self.values[s * self.n_actions + a].get_or_insert(v)
    }

    pub fn filled(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

#[derive(Debug)]
pub struct VcselEnv {
    model: CoverageModel,
    spaces: Spaces,
    cache: RewardCache,
    caching: bool,
    evaluations: AtomicUsize,
    order: EpisodeOrder,
    rng: ChaCha8Rng,
    sequence: Vec<usize>,
    pos: usize,
    done: bool,
}

impl VcselEnv {
    pub fn new(scene: SceneConfig, spaces: Spaces) -> Result<Self> {
        spaces.validate(scene.room_h)?;
        let model = CoverageModel::new(scene)?;
        let cache = RewardCache::new(spaces.n_states(), spaces.n_actions());
        let sequence = (0..spaces.n_states()).collect();
        Ok(Self {
            model,
            spaces,
            cache,
            caching: true,
            evaluations: AtomicUsize::new(0),
            order: EpisodeOrder::Ascending,
            rng: ChaCha8Rng::seed_from_u64(0),
            sequence,
            pos: 0,
            done: false,
        })
    }

    /// Random orders draw from their own stream seeded here, independent of
    /// the agent's exploration RNG.
    pub fn with_order(mut self, order: EpisodeOrder, seed: u64) -> Self {
        self.order = order;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self
    }

    /// Turns memoization off; every reward is then recomputed.
    pub fn without_cache(mut self) -> Self {
        self.caching = false;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.model = self.model.with_execution(exec);
        self
    }

    pub fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    pub fn model(&self) -> &CoverageModel {
        &self.model
    }

    pub fn n_states(&self) -> usize {
        self.spaces.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.spaces.n_actions()
    }

    /// Number of full coverage computations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn cache(&self) -> &RewardCache {
        &self.cache
    }

    pub fn state(&self) -> EnvState {
        EnvState { state_idx: self.sequence[self.pos], done: self.done }
    }

    pub fn reset(&mut self) -> EnvState {
        if self.order == EpisodeOrder::RandomPermutation {
            self.sequence.sort_unstable();
            self.sequence.shuffle(&mut self.rng);
        }
        self.pos = 0;
        self.done = false;
        self.state()
    }

    fn check_indices(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.n_states() {
            return Err(Error::contract(format!("state {s} out of range 0..{}", self.n_states())));
        }
        if a >= self.n_actions() {
            return Err(Error::contract(format!("action {a} out of range 0..{}", self.n_actions())));
        }
        Ok(())
    }

    fn compute(&self, s: usize, a: usize) -> Result<f64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.model.coverage_pct(self.spaces.heights[s], self.spaces.divergences[a])
    }

    /// Coverage reward for `(s, a)` without moving the episode.
    pub fn reward_oracle(&mut self, s: usize, a: usize) -> Result<f64> {
        self.check_indices(s, a)?;
        if !self.caching {
            return self.compute(s, a);
        }
        match self.cache.get(s, a) {
            Some(v) => Ok(v),
            None => {
                let v = self.compute(s, a)?;
                Ok(self.cache.fill(s, a, v))
            }
        }
    }

    /// Fills every missing cache entry, fanning the work out across
    /// `(state, action)` pairs. Returns how many entries were computed.
    pub fn prewarm(&mut self) -> Result<usize> {
        if !self.caching {
            return Ok(0);
        }
        let n_a = self.n_actions();
        let missing: Vec<(usize, usize)> = (0..self.n_states())
            .flat_map(|s| (0..n_a).map(move |a| (s, a)))
            .filter(|&(s, a)| self.cache.get(s, a).is_none())
            .collect();
        let this = &*self;
        let values = par::map_indices(this.model.execution(), missing.len(), |i| {
            let (s, a) = missing[i];
            this.compute(s, a)
        });
        for (&(s, a), v) in missing.iter().zip(values) {
            self.cache.fill(s, a, v?);
        }
        Ok(missing.len())
    }

    /// Applies divergence `action` at the current height. Transitions do not
    /// depend on the action.
    pub fn step(&mut self, action: usize) -> Result<(EnvState, f64, bool)> {
        if self.done {
            return Err(Error::contract("step called on a finished episode; call reset first"));
        }
        let s = self.sequence[self.pos];
        let reward = self.reward_oracle(s, action)?;
        if self.pos + 1 == self.sequence.len() {
            self.done = true;
        } else {
            self.pos += 1;
        }
        let next = self.state();
        Ok((next, reward, next.done))
    }
}
