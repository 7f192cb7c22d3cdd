use serde::{Deserialize, Serialize};

use super::cmaes;
use super::likelihood::Evaluator;
use super::space::ParamSpace;
use crate::behavioral::{ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::game::Dataset;
use crate::level0::Level0Spec;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Total objective evaluations across all starts.
    pub budget: usize,
    /// Random restarts after the default start.
    pub restarts: usize,
    /// Initial step size in internal coordinates.
    pub sigma0: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            budget: 5000,
            restarts: 4,
            sigma0: 1.0,
        }
    }
}

impl FitOptions {
    pub fn with_budget(budget: usize) -> Self {
        FitOptions {
            budget,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub train_log_likelihood: f64,
    pub evaluations: usize,
    pub restarts_used: usize,
    /// Best log-likelihood found so far, one entry per optimizer generation.
    pub trace: Vec<f64>,
    pub floored_observations: u64,
}

/// Maximum-likelihood fit over `space`, deterministic in `seed`.
///
/// The first start is the space's default point; each restart draws a random
/// point and receives an equal share of the budget still unspent.
pub fn fit(evaluator: &Evaluator, space: &ParamSpace, options: &FitOptions, seed: u64) -> Result<FitResult> {
    if options.budget == 0 {
        return Err(Error::param("budget", "must be at least 1"));
    }
    if space.n_weights != evaluator.n_weights() {
        return Err(Error::LengthMismatch(format!(
            "parameter space has {} weights, level-0 spec has {}",
            space.n_weights,
            evaluator.n_weights()
        )));
    }
    space.validate()?;
    let objective = |x: &[f64]| -> f64 {
        let p = space.decode_clamped(x);
        match evaluator.log_likelihood(&p) {
            Ok(ll) => -ll.value,
            Err(_) => f64::INFINITY,
        }
    };

    let runs = 1 + options.restarts;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluations = 0;
    let mut restarts_used = 0;
    let mut trace = Vec::new();
    for run in 0..runs {
        let mut share = (options.budget - evaluations) / (runs - run);
        if run == 0 {
            // budget = 1 still evaluates the default start
            share = share.max(1);
        }
        if share == 0 {
            continue;
        }
        let mut rng = seed::rng(seed, &[seed::label("fit-start"), run as u64]);
        let x0 = if run == 0 {
            space.default_start()
        } else {
            restarts_used += 1;
            space.random_start(&mut rng)
        };
        let out = cmaes::minimize(objective, &x0, options.sigma0, share, &mut rng);
        evaluations += out.evaluations;
        let prior_best = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        trace.extend(out.trace.iter().map(|f| -f.min(prior_best)));
        if out.best_f < prior_best {
            best = Some((out.best_f, out.best_x));
        }
    }
    let (_, x) = best.expect("at least one evaluation");
    let params = space.decode_clamped(&x);
    let ll = evaluator.log_likelihood(&params)?;
    Ok(FitResult {
        params,
        train_log_likelihood: ll.value,
        evaluations,
        restarts_used,
        trace,
        floored_observations: ll.floored,
    })
}

/// Fit `kind` with all its parameters free (Poisson-CH keeps `ε = 0`).
pub fn fit_mle(dataset: &Dataset, kind: ModelKind, level0: &Level0Spec, budget: usize, seed: u64) -> Result<FitResult> {
    let evaluator = Evaluator::new(dataset, level0)?;
    let space = ParamSpace::new(kind, level0.kinds.len());
    fit(&evaluator, &space, &FitOptions::with_budget(budget), seed)
}
