//! Tabular Q-learning with exponentially decaying epsilon-greedy exploration.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EpisodeOrder, VcselEnv};
use crate::radio_map::sig6;
use crate::{Error, Result};

/// Window of the reward moving average reported in the training log.
pub const MA_WINDOW: usize = 50;

/// Early stopping: every update of an episode below this magnitude ...
pub const EARLY_STOP_DELTA: f64 = 1e-6;
/// ... for this many consecutive episodes.
pub const EARLY_STOP_PATIENCE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationSchedule {
    pub eps_max: f64,
    pub eps_min: f64,
    pub lambda: f64,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        Self { eps_max: 1.0, eps_min: 0.01, lambda: 0.005 }
    }
}

impl ExplorationSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eps_min)
            || !(0.0..=1.0).contains(&self.eps_max)
            || self.eps_min > self.eps_max
        {
            return Err(Error::config("need 0 <= eps_min <= eps_max <= 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("epsilon decay rate must be positive"));
        }
        Ok(())
    }
}

/// `eps_min + (eps_max - eps_min) * exp(-lambda * n)`.
pub fn epsilon(schedule: &ExplorationSchedule, n_ep: u64) -> f64 {
    schedule.eps_min + (schedule.eps_max - schedule.eps_min) * (-schedule.lambda * n_ep as f64).exp()
}

/// Learning parameters read from the experiment file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub schedule: ExplorationSchedule,
    pub episode_order: EpisodeOrder,
    pub early_stop: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            episodes: 2000,
            schedule: ExplorationSchedule::default(),
            episode_order: EpisodeOrder::Ascending,
            early_stop: false,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.episodes == 0 {
            return Err(Error::config("episodes must be at least 1"));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    q: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize, alpha: f64, gamma: f64) -> Self {
        Self { n_states, n_actions, q: vec![0.0; n_states * n_actions], alpha, gamma }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n_actions + a]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn greedy(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    /// One Bellman backup of `Q(s, a)`; no bootstrap on terminal steps.
    /// Returns the change applied.
    pub fn update(&mut self, s: usize, a: usize, reward: f64, next: usize, done: bool) -> f64 {
        let target = if done {
            reward
        } else {
            let best_next = self.row(next).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            reward + self.gamma * best_next
        };
        let idx = s * self.n_actions + a;
        let delta = self.alpha * (target - self.q[idx]);
        self.q[idx] += delta;
        delta
    }
}

/// Epsilon-greedy choice. A uniform draw is always consumed first so the
/// random stream does not depend on the Q values.
pub fn select_action<R: Rng + ?Sized>(q_row: &[f64], eps: f64, rng: &mut R) -> usize {
    assert!(!q_row.is_empty(), "cannot select from an empty action set");
    if rng.gen::<f64>() < eps {
        rng.gen_range(0..q_row.len())
    } else {
        argmax(q_row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub epsilon: f64,
    pub mean_reward: f64,
    pub ma50: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpisodeRecord>,
    pub early_stopped: bool,
}

impl TrainLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes `episode,epsilon,mean_reward,ma50`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["episode", "epsilon", "mean_reward", "ma50"])?;
        for r in &self.records {
            w.write_record([r.episode.to_string(), sig6(r.epsilon), sig6(r.mean_reward), sig6(r.ma50)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Vec<EpisodeRecord>> {
        let mut rdr = csv::Reader::from_reader(input);
        Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub height_m: f64,
    pub theta_deg: f64,
    pub coverage_pct: f64,
}

/// Chosen action per state, with the coverage that action achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actions: Vec<usize>,
    pub entries: Vec<PolicyEntry>,
}

impl Policy {
    /// Builds a policy from per-state action indices, reading coverage from
    /// the environment's reward table.
    pub fn from_actions(env: &mut VcselEnv, actions: Vec<usize>) -> Result<Self> {
        let mut entries = Vec::with_capacity(actions.len());
        for (s, &a) in actions.iter().enumerate() {
            let coverage_pct = env.reward_oracle(s, a)?;
            entries.push(PolicyEntry {
                height_m: env.spaces().heights[s],
                theta_deg: env.spaces().divergences[a].to_degrees(),
                coverage_pct,
            });
        }
        Ok(Self { actions, entries })
    }

    pub fn greedy(q: &QTable, env: &mut VcselEnv) -> Result<Self> {
        let actions = (0..q.n_states()).map(|s| q.greedy(s)).collect();
        Self::from_actions(env, actions)
    }

    /// Writes `height_m,theta_deg,coverage_pct`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["height_m", "theta_deg", "coverage_pct"])?;
        for e in &self.entries {
            w.write_record([sig6(e.height_m), sig6(e.theta_deg), sig6(e.coverage_pct)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Vec<PolicyEntry>> {
        let mut rdr = csv::Reader::from_reader(input);
        Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub episodes: usize,
    pub seed: u64,
    pub early_stop: bool,
}

/// Runs Q-learning against `env`, mutating `q` in place.
///
/// Episode `n` (1-based) explores with `epsilon(schedule, n)`. Each step draws
/// an epsilon-greedy action, applies it and backs up the observed reward.
pub fn train(
    env: &mut VcselEnv,
    q: &mut QTable,
    schedule: &ExplorationSchedule,
    opts: TrainOptions,
) -> Result<(Policy, TrainLog)> {
    if opts.episodes == 0 {
        return Err(Error::config("episodes must be at least 1"));
    }
    if q.n_states() != env.n_states() || q.n_actions() != env.n_actions() {
        return Err(Error::config("Q-table shape does not match the environment"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut log = TrainLog { records: Vec::with_capacity(opts.episodes), early_stopped: false };
    let mut window_sum = 0.0;
    let mut quiet = 0;

    for n in 1..=opts.episodes as u64 {
        let eps = epsilon(schedule, n);
        let mut state = env.reset();
        let mut total = 0.0;
        let mut steps = 0usize;
        let mut max_delta: f64 = 0.0;
        while !state.done {
            let s = state.state_idx;
            let a = select_action(q.row(s), eps, &mut rng);
            let (next, reward, done) = env.step(a)?;
            max_delta = max_delta.max(q.update(s, a, reward, next.state_idx, done).abs());
            total += reward;
            steps += 1;
            state = next;
        }

        let mean_reward = total / steps as f64;
        window_sum += mean_reward;
        let i = log.records.len();
        if i >= MA_WINDOW {
            window_sum -= log.records[i - MA_WINDOW].mean_reward;
        }
        let ma50 = window_sum / (i + 1).min(MA_WINDOW) as f64;
        log.records.push(EpisodeRecord { episode: n, epsilon: eps, mean_reward, ma50 });

        if opts.early_stop {
            quiet = if max_delta < EARLY_STOP_DELTA { quiet + 1 } else { 0 };
            if quiet >= EARLY_STOP_PATIENCE {
                log.early_stopped = true;
                break;
            }
        }
    }

    let policy = Policy::greedy(q, env)?;
    Ok((policy, log))
}
