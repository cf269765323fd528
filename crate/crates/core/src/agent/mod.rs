//! DQN learner: Q-network, replay memory, epsilon-greedy exploration and the
//! temporal-difference update.

mod checkpoint;
mod dqn;
mod network;
mod replay;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use dqn::{
    greedy_action, select_action, sync_target, td_loss, td_loss_and_grad, td_target, td_update, DqnLearner,
    EpsilonSchedule, TdScratch, TrainConfig,
};
pub use network::{Activation, BackwardScratch, ForwardTrace, QNetwork};
pub use replay::{ReplayBuffer, Transition};
