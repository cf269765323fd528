//! Training loop, baselines, exact oracle, evaluation metrics and reports.

pub mod eval;
pub mod oracle;
pub mod policy;
pub mod report;
pub mod run;
pub mod train;

pub use eval::{evaluate, evaluate_day, DayEvaluation, EvalReport, EvalRow, Evaluation, SolarAccounting};
pub use oracle::{dp_oracle, exhaustive_oracle, replay_reward, OracleSolution, EXHAUSTIVE_LIMIT};
pub use policy::{metered_trajectory, rollout, Policy, Trajectory, TrajectoryRow};
pub use report::{write_learning_curve, write_report, ReportFiles};
pub use run::{read_manifest, write_run, RunConfig, RunManifest, SplitConfig};
pub use train::{train, EpisodeLog, GreedyLog, LearningCurve, TrainOutcome};
