//! Exhaustive search over the divergence set, state by state.

use crate::agent::{argmax, Policy};
use crate::env::VcselEnv;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub policy: Policy,
    /// Coverage computations this search triggered. Equals
    /// `n_states * n_actions` on a cold cache and 0 on a warm one.
    pub evaluations: usize,
    /// Reward table `[state][action]` the argmax was taken over.
    pub rewards: Vec<Vec<f64>>,
}

/// Evaluates every `(state, action)` pair through the environment's shared
/// reward cache and keeps the best action per state (lowest index on ties).
pub fn exhaustive_policy(env: &mut VcselEnv) -> Result<ExhaustiveResult> {
    let before = env.evaluations();
    env.prewarm()?;
    let mut rewards = Vec::with_capacity(env.n_states());
    for s in 0..env.n_states() {
        let row = (0..env.n_actions())
            .map(|a| env.reward_oracle(s, a))
            .collect::<Result<Vec<_>>>()?;
        rewards.push(row);
    }
    let actions = rewards.iter().map(|row| argmax(row)).collect();
    let policy = Policy::from_actions(env, actions)?;
    Ok(ExhaustiveResult { policy, evaluations: env.evaluations() - before, rewards })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{SceneConfig, Spaces};

    fn env_with(divergences_deg: &[f64]) -> VcselEnv {
        let scene = SceneConfig { n_tx_side: 3, grid_step: 1.0, ..Default::default() };
        let spaces = Spaces {
            heights: vec![0.5, 1.0, 2.0],
            divergences: divergences_deg.iter().map(|d| d.to_radians()).collect(),
        };
        VcselEnv::new(scene, spaces).unwrap()
    }

    #[test]
    fn picks_the_best_action_per_state() {
        let mut env = env_with(&[3.0, 6.0, 9.0, 14.0]);
        let res = exhaustive_policy(&mut env).unwrap();
        assert_eq!(res.evaluations, 12);
        for (s, row) in res.rewards.iter().enumerate() {
            let a = res.policy.actions[s];
            assert!(row.iter().all(|&r| r <= row[a]));
            assert!(row[..a].iter().all(|&r| r < row[a]));
            assert_eq!(res.policy.entries[s].coverage_pct, row[a]);
        }
    }

    #[test]
    fn warm_cache_costs_nothing() {
        let mut env = env_with(&[3.0, 6.0]);
        let cold = exhaustive_policy(&mut env).unwrap();
        let warm = exhaustive_policy(&mut env).unwrap();
        assert_eq!(warm.evaluations, 0);
        assert_eq!(cold.policy, warm.policy);
    }

    #[test]
    fn single_action_space() {
        let mut env = env_with(&[7.0]);
        let res = exhaustive_policy(&mut env).unwrap();
        assert_eq!(res.policy.actions, vec![0, 0, 0]);
        assert!(res.policy.entries.iter().all(|e| (e.theta_deg - 7.0).abs() < 1e-12));
    }
}
