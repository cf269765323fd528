//! Episodic DQN training over the training days.

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::policy::{rollout, Policy};
use crate::agent::{Checkpoint, DqnLearner, EpsilonSchedule, Transition, TrainConfig};
use crate::data::{daily_ev_demand, HouseholdDay, SLOTS_PER_DAY};
use crate::env::{EnvConfig, Episode};
use crate::error::{Error, Result};
use crate::stats::mean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub epoch: usize,
    pub date: NaiveDate,
    pub total_reward: f64,
    /// Exploration rate at the episode's first step.
    pub epsilon: f64,
    pub mean_loss: Option<f64>,
}

/// Mean greedy reward over the training days after an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyLog {
    pub epoch: usize,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub episodes: Vec<EpisodeLog>,
    pub greedy: Vec<GreedyLog>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_checkpoint: Checkpoint,
    /// Checkpoint with the highest greedy training reward seen at an evaluation point.
    pub best_checkpoint: Checkpoint,
    pub best_greedy_reward: f64,
    pub curve: LearningCurve,
    pub updates: u64,
}

fn greedy_reward(learner: &DqnLearner, env: &EnvConfig, days: &[&HouseholdDay]) -> Result<f64> {
    let policy = Policy::Dqn(learner.online().clone());
    let mut rewards = Vec::with_capacity(days.len());
    for day in days {
        rewards.push(rollout(&policy, env, day)?.total_reward().unwrap_or(0.0));
    }
    Ok(mean(rewards).unwrap_or(0.0))
}

fn snapshot(learner: &DqnLearner, env: &EnvConfig, epochs: usize) -> Checkpoint {
    Checkpoint::new(
        learner.online().clone(),
        learner.config(),
        Some(learner.rng().clone()),
        env.clone(),
        epochs,
    )
}

/// Trains for `config.epochs` passes over `days` in a fresh shuffled order each
/// epoch. Days without EV demand carry no learning signal and are skipped.
pub fn train<'a>(
    days: impl IntoIterator<Item = &'a HouseholdDay>,
    env: &EnvConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut days: Vec<&HouseholdDay> = days.into_iter().filter(|d| daily_ev_demand(d) > 0.0).collect();
    if days.is_empty() {
        return Err(Error::EmptyDataset("training days with EV demand"));
    }
    let mut learner = DqnLearner::new(config.clone())?;
    let total_steps = (config.epochs * days.len() * SLOTS_PER_DAY) as u64;
    let schedule = EpsilonSchedule::from_config(config, total_steps);

    let mut curve = LearningCurve::default();
    let mut best_greedy_reward = greedy_reward(&learner, env, &days)?;
    let mut best_checkpoint = snapshot(&learner, env, 0);
    let mut step: u64 = 0;

    for epoch in 1..=config.epochs {
        days.shuffle(learner.rng_mut());
        for &day in &days {
            let mut episode = Episode::new(env, day);
            let epsilon0 = schedule.at(step);
            let mut total_reward = 0.0;
            let (mut loss_sum, mut n_loss) = (0.0, 0usize);
            while !episode.is_done() {
                let state = episode.features();
                let action = learner.act(&state, schedule.at(step))?;
                let s = episode.step(action)?;
                total_reward += s.reward.total;
                step += 1;
                let transition = Transition {
                    state,
                    action,
                    reward: s.reward.total,
                    next_state: episode.features(),
                    done: s.done,
                };
                if let Some(loss) = learner.observe(transition)? {
                    loss_sum += loss;
                    n_loss += 1;
                }
            }
            curve.episodes.push(EpisodeLog {
                epoch,
                date: day.date(),
                total_reward,
                epsilon: epsilon0,
                mean_loss: (n_loss > 0).then(|| loss_sum / n_loss as f64),
            });
        }

        if epoch % config.eval_every == 0 || epoch == config.epochs {
            let r = greedy_reward(&learner, env, &days)?;
            curve.greedy.push(GreedyLog { epoch, mean_reward: r });
            log::info!("epoch {epoch}: greedy reward {r:.3}, epsilon {:.3}", schedule.at(step));
            if r > best_greedy_reward {
                best_greedy_reward = r;
                best_checkpoint = snapshot(&learner, env, epoch);
            }
        }
    }

    Ok(TrainOutcome {
        final_checkpoint: snapshot(&learner, env, config.epochs),
        best_checkpoint,
        best_greedy_reward,
        curve,
        updates: learner.updates(),
    })
}
