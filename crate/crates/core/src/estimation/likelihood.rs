use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::behavioral::{ladder, ModelParams};
use crate::error::{Error, Result};
use crate::features::{CombinerForm, FeatureVector};
use crate::game::{Dataset, NormalFormGame, Role};
use crate::level0::{combine, Level0Spec};

/// Predicted probabilities are floored here before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LogLikelihood {
    pub value: f64,
    /// Observations whose predicted probability fell below [`PROB_FLOOR`].
    pub floored: u64,
}

#[derive(Debug)]
struct PreparedGame {
    game: NormalFormGame,
    features: [Vec<FeatureVector>; 2],
    counts: [Vec<u64>; 2],
    observations: u64,
}

/// A dataset with its level-0 features precomputed, ready for repeated
/// likelihood evaluation under varying parameters.
#[derive(Debug, Clone)]
pub struct Evaluator {
    combiner: CombinerForm,
    n_weights: usize,
    games: Vec<Arc<PreparedGame>>,
    sources: Vec<String>,
    ids: Vec<String>,
}

impl Evaluator {
    /// Payoffs must already be in cents (`source_units == 1`) so that `λ`
    /// has fixed units.
    pub fn new(dataset: &Dataset, level0: &Level0Spec) -> Result<Self> {
        if dataset.source_units != 1.0 {
            return Err(Error::Config(format!(
                "dataset {} is not normalized to cents (cents_per_point = {})",
                dataset.name, dataset.source_units
            )));
        }
        level0.validate()?;
        let mut games = Vec::with_capacity(dataset.len());
        for e in &dataset.entries {
            let features = [level0.features(&e.game, Role::Row)?, level0.features(&e.game, Role::Col)?];
            if level0.combiner == CombinerForm::Linear {
                if let Some(x) = features.iter().flatten().flat_map(|f| f.values()).find(|x| **x < 0.0) {
                    return Err(Error::NegativeActivation(*x));
                }
            }
            games.push(Arc::new(PreparedGame {
                game: e.game.clone(),
                features,
                counts: [e.observations.row_counts.clone(), e.observations.col_counts.clone()],
                observations: e.observations.total(),
            }));
        }
        Ok(Evaluator {
            combiner: level0.combiner,
            n_weights: level0.kinds.len(),
            games,
            sources: dataset.entries.iter().map(|e| e.source.clone()).collect(),
            ids: dataset.entries.iter().map(|e| e.game.id().to_string()).collect(),
        })
    }

    /// The evaluator restricted to the games at `indices`.
    pub fn subset(&self, indices: &[usize]) -> Evaluator {
        Evaluator {
            combiner: self.combiner,
            n_weights: self.n_weights,
            games: indices.iter().map(|&i| Arc::clone(&self.games[i])).collect(),
            sources: indices.iter().map(|&i| self.sources[i].clone()).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn n_weights(&self) -> usize {
        self.n_weights
    }

    pub fn game_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn total_observations(&self) -> u64 {
        self.games.iter().map(|g| g.observations).sum()
    }

    pub fn uniform_log_likelihood(&self) -> f64 {
        self.games
            .iter()
            .flat_map(|g| {
                g.counts
                    .iter()
                    .map(|c| -(c.iter().sum::<u64>() as f64) * (c.len() as f64).ln())
            })
            .sum()
    }

    pub fn log_likelihood(&self, params: &ModelParams) -> Result<LogLikelihood> {
        if params.level0_weights.len() != self.n_weights {
            return Err(Error::LengthMismatch(format!(
                "{} level-0 weights for {} features",
                params.level0_weights.len(),
                self.n_weights
            )));
        }
        params.behavior.validate()?;
        let mut total = LogLikelihood::default();
        for g in &self.games {
            if g.observations == 0 {
                continue;
            }
            let l0 = [Role::Row, Role::Col].map(|r| {
                combine(self.combiner, g.game.num_actions(r), &g.features[r.index()], &params.level0_weights)
                    .expect("features checked at construction")
            });
            let pred = ladder(&g.game, &params.behavior, [l0[0].probs(), l0[1].probs()]);
            for (p, counts) in pred.iter().zip(&g.counts) {
                accumulate(&mut total, p, counts);
            }
        }
        Ok(total)
    }
}

fn accumulate(total: &mut LogLikelihood, probs: &[f64], counts: &[u64]) {
    for (&p, &n) in probs.iter().zip(counts) {
        if n == 0 {
            continue;
        }
        if p < PROB_FLOOR {
            total.floored += n;
        }
        total.value += n as f64 * p.max(PROB_FLOOR).ln();
    }
}

/// `Σ count · ln p` over predictions and observed counts.
pub fn log_likelihood_of(probs: &[f64], counts: &[u64]) -> f64 {
    let mut t = LogLikelihood::default();
    accumulate(&mut t, probs, counts);
    t.value
}

/// Log-likelihood of `dataset` under `params` with the level-0 structure of `level0`.
pub fn log_likelihood(dataset: &Dataset, params: &ModelParams, level0: &Level0Spec) -> Result<f64> {
    Ok(Evaluator::new(dataset, level0)?.log_likelihood(params)?.value)
}
