//! Predicting human play in unrepeated normal-form games with iterative
//! behavioral models whose level-0 layer is built from payoff features.
//!
//! The crate is organised bottom-up:
//!
//! - [`game`]: two-player normal-form games, datasets, payoff normalization.
//! - [`features`]: the six level-0 features (binary and real-valued) and
//!   the informativeness / normalized-activation transforms.
//! - [`level0`]: weighted-linear and logit combiners, named presets.
//! - [`behavioral`]: quantal best response, Spike-Poisson QCH, Poisson-CH
//!   and level-k predictors.
//! - [`estimation`]: likelihood, CMA-ES maximum likelihood fitting,
//!   stratified cross-validation and model comparison.
//! - [`posterior`]: random-walk Metropolis sampling and marginal CDFs.
//! - [`selection`]: forward selection over binary features.
//! - [`synth`]: synthetic datasets with known generating parameters.

pub mod behavioral;
pub mod error;
pub mod estimation;
pub mod features;
pub mod game;
pub mod level0;
pub mod posterior;
pub mod seed;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
