//! Post-training a conditional motion diffusion model with group-relative
//! policy optimization, on a fully synthetic articulated-skeleton domain.
//!
//! The pipeline: a procedural gait generator produces skeleton motion plus the
//! head trajectory it implies; a small MLP denoiser is pretrained to recover
//! motion from noise given head conditioning; a contrastively trained scorer
//! plus exponential joint rewards form a hybrid reward; and a group-relative
//! policy update with smooth noise injection on the conditioning finishes the
//! model. Everything runs on one CPU in f64 and is deterministic from a
//! single master seed.
//!
//! The `examples/` directory is the front door; each file is a runnable tour
//! of one capability:
//!
//! ```text
//! cargo run --release --example generate_dataset
//! cargo run --release --example kinematics_tour
//! cargo run --release --example pretrain_denoiser
//! cargo run --release --example train_scorer
//! cargo run --release --example grpo_post_training
//! cargo run --release --example diversity_ablation
//! cargo run --release --example evaluate_checkpoint
//! ```
//!
//! The same capabilities are scriptable through the thin `egomotion` binary
//! (`gen-data`, `pretrain`, `train-scorer`, `grpo`, `eval`, `diversity-study`).

pub mod diffusion;
pub mod error;
pub mod grpo;
pub mod harness;
pub mod kinematics;
pub mod metrics;
pub mod numerics;
pub mod rewards;
pub mod synthdata;

pub use error::{Error, Result};
