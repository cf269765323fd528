use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Activation, BackwardScratch, ForwardTrace, QNetwork};
use super::replay::{ReplayBuffer, Transition};
use crate::env::{Action, N_FEATURES};
use crate::error::{Error, Result};

/// DQN hyperparameters. An epoch is one episode on every training day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of all environment steps over which epsilon decays exponentially.
    pub epsilon_decay_fraction: f64,
    pub batch_size: usize,
    /// Gradient updates between hard copies into the target network.
    pub target_sync_interval: usize,
    pub buffer_capacity: usize,
    /// Environment steps per gradient update.
    pub train_every: usize,
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    /// Global gradient-norm clip; non-positive disables clipping.
    pub grad_clip: f64,
    /// Epochs between greedy evaluations on the training days (best-checkpoint selection).
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            gamma: 0.99,
            learning_rate: 1e-3,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.6,
            batch_size: 64,
            target_sync_interval: 500,
            buffer_capacity: 50_000,
            train_every: 1,
            hidden_layers: vec![64, 64],
            activation: Activation::Softplus,
            grad_clip: 10.0,
            eval_every: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return fail("epsilon bounds must lie in [0, 1]");
        }
        if !(self.epsilon_decay_fraction > 0.0) {
            return fail("epsilon_decay_fraction must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.target_sync_interval == 0 || self.train_every == 0 || self.eval_every == 0 {
            return fail("batch_size, target_sync_interval, train_every and eval_every must be positive");
        }
        if self.buffer_capacity < self.batch_size {
            return fail("buffer_capacity must be at least batch_size");
        }
        if self.hidden_layers.contains(&0) {
            return fail("hidden layer widths must be positive");
        }
        Ok(())
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![N_FEATURES];
        dims.extend(&self.hidden_layers);
        dims.push(2);
        dims
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Exponential decay from `start` to `end` over `decay_steps`, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn from_config(config: &TrainConfig, total_steps: u64) -> Self {
        Self {
            start: config.epsilon_start,
            end: config.epsilon_end,
            decay_steps: ((total_steps as f64 * config.epsilon_decay_fraction).round() as u64).max(1),
        }
    }

    pub fn at(&self, step: u64) -> f64 {
        let frac = (step as f64 / self.decay_steps as f64).min(1.0);
        if self.start <= 0.0 || self.end <= 0.0 {
            // geometric interpolation is undefined through zero; fall back to linear
            return self.start + frac * (self.end - self.start);
        }
        (self.start * (self.end / self.start).powf(frac)).clamp(0.0, 1.0)
    }
}

/// Greedy action with ties going to idle.
pub fn greedy_action(q: [f64; 2]) -> Action {
    if q[1] > q[0] {
        Action::Charge
    } else {
        Action::Idle
    }
}

/// Epsilon-greedy: a uniformly random action with probability `epsilon`,
/// otherwise the greedy one.
pub fn select_action(net: &QNetwork, features: &[f64], epsilon: f64, rng: &mut impl Rng) -> Result<Action> {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(if rng.random_bool(0.5) { Action::Charge } else { Action::Idle });
    }
    Ok(greedy_action(net.q_values(features)?))
}

/// TD target `r + γ·max_a' Q_target(s', a')`, or `r` on terminal transitions.
pub fn td_target(target: &QNetwork, t: &Transition, gamma: f64, trace: &mut ForwardTrace) -> f64 {
    if t.done || gamma == 0.0 {
        return t.reward;
    }
    target.forward_traced(&t.next_state, trace);
    let out = trace.output();
    t.reward + gamma * out[0].max(out[1])
}

/// Mean squared TD error over the batch, treating targets as constants.
pub fn td_loss(net: &QNetwork, target: &QNetwork, batch: &[Transition], gamma: f64) -> f64 {
    let mut trace = ForwardTrace::default();
    let scale = 1.0 / batch.len() as f64;
    batch.iter().fold(0.0, |loss, t| {
        let y = td_target(target, t, gamma, &mut trace);
        net.forward_traced(&t.state, &mut trace);
        let err = trace.output()[t.action.index()] - y;
        loss + err * err * scale
    })
}

/// Reusable buffers for the TD step.
#[derive(Debug, Clone, Default)]
pub struct TdScratch {
    trace: ForwardTrace,
    target_trace: ForwardTrace,
    backward: BackwardScratch,
    grad: Vec<f64>,
}

impl TdScratch {
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }
}

/// Loss and its analytic gradient w.r.t. `net`'s parameters (left in `scratch`).
pub fn td_loss_and_grad(net: &QNetwork, target: &QNetwork, batch: &[Transition], gamma: f64, scratch: &mut TdScratch) -> f64 {
    assert!(!batch.is_empty(), "empty TD batch");
    scratch.grad.clear();
    scratch.grad.resize(net.param_count(), 0.0);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for t in batch {
        let y = td_target(target, t, gamma, &mut scratch.target_trace);
        net.forward_traced(&t.state, &mut scratch.trace);
        let a = t.action.index();
        let err = scratch.trace.output()[a] - y;
        loss += err * err * scale;
        let mut d_out = [0.0; 2];
        d_out[a] = 2.0 * err * scale;
        net.backward(&t.state, &scratch.trace, &d_out, &mut scratch.grad, &mut scratch.backward);
    }
    loss
}

/// One SGD step on the mean squared TD error with optional global-norm clipping.
/// Returns the loss before the update.
pub fn td_update(
    net: &mut QNetwork,
    target: &QNetwork,
    batch: &[Transition],
    gamma: f64,
    learning_rate: f64,
    grad_clip: f64,
    scratch: &mut TdScratch,
) -> Result<f64> {
    let loss = td_loss_and_grad(net, target, batch, gamma, scratch);
    if !loss.is_finite() {
        return Err(Error::Divergence { step: 0, loss });
    }
    let mut step = learning_rate;
    if grad_clip > 0.0 {
        let norm = scratch.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > grad_clip {
            step *= grad_clip / norm;
        }
    }
    for (p, g) in net.params_mut().iter_mut().zip(&scratch.grad) {
        *p -= step * g;
    }
    if !net.is_finite() {
        return Err(Error::Divergence { step: 0, loss });
    }
    Ok(loss)
}

/// Hard copy of the online parameters into the target network.
pub fn sync_target(net: &QNetwork, target: &mut QNetwork) -> Result<()> {
    target.copy_from(net)
}

/// Online network, target network, replay memory and RNG of one learner.
#[derive(Debug, Clone)]
pub struct DqnLearner {
    config: TrainConfig,
    online: QNetwork,
    target: QNetwork,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    env_steps: u64,
    updates: u64,
    syncs: u64,
    batch: Vec<Transition>,
    scratch: TdScratch,
}

impl DqnLearner {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let online = QNetwork::new(&config.layer_dims(), config.activation, &mut rng)?;
        let target = online.clone();
        Ok(Self {
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            online,
            target,
            rng,
            env_steps: 0,
            updates: 0,
            syncs: 0,
            batch: Vec::new(),
            scratch: TdScratch::default(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn online(&self) -> &QNetwork {
        &self.online
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn act(&mut self, features: &[f64], epsilon: f64) -> Result<Action> {
        select_action(&self.online, features, epsilon, &mut self.rng)
    }

    /// Stores a transition and, every `train_every` environment steps once the
    /// buffer holds a batch, performs one TD update. The target network is
    /// re-synced after every `target_sync_interval`-th update. Returns the loss
    /// of the update, if one happened.
    pub fn observe(&mut self, transition: Transition) -> Result<Option<f64>> {
        self.buffer.push(transition);
        self.env_steps += 1;
        if !self.env_steps.is_multiple_of(self.config.train_every as u64) {
            return Ok(None);
        }
        if !self.buffer.sample_into(self.config.batch_size, &mut self.rng, &mut self.batch) {
            return Ok(None);
        }
        let loss = td_update(
            &mut self.online,
            &self.target,
            &self.batch,
            self.config.gamma,
            self.config.learning_rate,
            self.config.grad_clip,
            &mut self.scratch,
        )
        .map_err(|e| match e {
            Error::Divergence { loss, .. } => Error::Divergence {
                step: self.updates + 1,
                loss,
            },
            other => other,
        })?;
        self.updates += 1;
        if self.updates.is_multiple_of(self.config.target_sync_interval as u64) {
            sync_target(&self.online, &mut self.target)?;
            self.syncs += 1;
        }
        Ok(Some(loss))
    }
}
