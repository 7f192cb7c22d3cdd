use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::fit::{fit, FitOptions};
use super::likelihood::Evaluator;
use super::space::ParamSpace;
use crate::behavioral::ModelKind;
use crate::error::{Error, Result};
use crate::game::Dataset;
use crate::level0::Level0Spec;
use crate::seed;

/// Which fold each game belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub seed: u64,
    pub n_folds: usize,
    pub fold_of_game: BTreeMap<String, usize>,
    /// Fold sizes within each source dataset.
    pub per_source: BTreeMap<String, Vec<usize>>,
}

impl FoldAssignment {
    /// Fold index of each entry of `dataset`, in entry order.
    pub fn folds_of(&self, ids: &[String]) -> Vec<usize> {
        ids.iter().map(|id| self.fold_of_game[id]).collect()
    }
}

/// Shuffle each source's games and deal them round-robin into folds.
///
/// The dealing position carries over from one source to the next, so overall
/// fold sizes stay balanced as well as per-source ones.
pub fn stratified_folds(dataset: &Dataset, n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    let ids: Vec<String> = dataset.entries.iter().map(|e| e.game.id().to_string()).collect();
    let sources: Vec<String> = dataset.entries.iter().map(|e| e.source.clone()).collect();
    assign_folds(&ids, &sources, n_folds, seed)
}

fn assign_folds(ids: &[String], sources: &[String], n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    if n_folds < 2 {
        return Err(Error::param("folds", format!("need at least 2, got {n_folds}")));
    }
    let mut by_source: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, src) in ids.iter().zip(sources) {
        by_source.entry(src).or_default().push(id);
    }
    let mut fold_of_game = BTreeMap::new();
    let mut per_source = BTreeMap::new();
    let mut next = 0usize;
    for (src, mut games) in by_source {
        let mut rng = seed::rng(seed, &[seed::label("folds"), seed::label(src)]);
        games.shuffle(&mut rng);
        let mut sizes = vec![0; n_folds];
        for id in games {
            fold_of_game.insert(id.to_string(), next);
            sizes[next] += 1;
            next = (next + 1) % n_folds;
        }
        per_source.insert(src.to_string(), sizes);
    }
    Ok(FoldAssignment {
        seed,
        n_folds,
        fold_of_game,
        per_source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub rounds: usize,
    pub folds: usize,
    pub fit: FitOptions,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            rounds: 10,
            folds: 10,
            fit: FitOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub dataset: String,
    pub model: ModelKind,
    pub level0: String,
    pub rounds: usize,
    pub folds: usize,
    pub seed: u64,
    /// Sum of held-out log-likelihoods over all folds, per round.
    pub round_scores: Vec<f64>,
    pub mean: f64,
    /// Student's-t 95% half-width of the mean; absent with a single round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub observations: u64,
    pub uniform_log_likelihood: f64,
    /// `exp((mean − uniform) / observations)`: geometric-mean likelihood
    /// ratio to uniform play, per observation.
    pub likelihood_ratio: f64,
    /// `log10` of the whole-dataset likelihood ratio to uniform.
    pub log10_total_ratio: f64,
    pub floored_observations: u64,
}

impl CvReport {
    pub fn interval(&self) -> Option<(f64, f64)> {
        self.half_width.map(|h| (self.mean - h, self.mean + h))
    }
}

/// Mean of `xs` and its Student's-t 95% half-width (`None` below two samples).
pub fn mean_and_half_width(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    (mean, Some(t * (var / n as f64).sqrt()))
}

/// Repeated k-fold cross-validation: each round draws fresh folds, fits on
/// all but one fold and scores the held-out fold.
pub fn cross_validate(dataset: &Dataset, space: &ParamSpace, level0: &Level0Spec, config: &CvConfig) -> Result<CvReport> {
    if config.rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    let evaluator = Evaluator::new(dataset, level0)?;
    let assignments: Vec<Vec<usize>> = (0..config.rounds)
        .map(|r| {
            let s = seed::derive(config.seed, &[seed::label("cv-round"), r as u64]);
            assign_folds(evaluator.game_ids(), evaluator.sources(), config.folds, s).map(|a| a.folds_of(evaluator.game_ids()))
        })
        .collect::<Result<_>>()?;
    let units: Vec<(usize, usize)> = (0..config.rounds)
        .flat_map(|r| (0..config.folds).map(move |k| (r, k)))
        .collect();
    let scores: Vec<(f64, u64)> = units
        .par_iter()
        .map(|&(r, k)| {
            let folds = &assignments[r];
            let (train, test): (Vec<usize>, Vec<usize>) = (0..folds.len()).partition(|&i| folds[i] != k);
            let test_eval = evaluator.subset(&test);
            if test_eval.total_observations() == 0 {
                return Ok((0.0, 0));
            }
            let fit_seed = seed::derive(config.seed, &[seed::label("cv-fit"), r as u64, k as u64]);
            let fitted = fit(&evaluator.subset(&train), space, &config.fit, fit_seed)?;
            let ll = test_eval.log_likelihood(&fitted.params)?;
            Ok((ll.value, ll.floored))
        })
        .collect::<Result<_>>()?;

    let round_scores: Vec<f64> = scores
        .chunks(config.folds)
        .map(|c| c.iter().map(|s| s.0).sum())
        .collect();
    let floored = scores.iter().map(|s| s.1).sum();
    let (mean, half_width) = mean_and_half_width(&round_scores);
    let n = evaluator.total_observations();
    let uniform = evaluator.uniform_log_likelihood();
    let likelihood_ratio = if n == 0 { 1.0 } else { ((mean - uniform) / n as f64).exp() };
    Ok(CvReport {
        dataset: dataset.name.clone(),
        model: space.kind,
        level0: level0.name.clone(),
        rounds: config.rounds,
        folds: config.folds,
        seed: config.seed,
        round_scores,
        mean,
        half_width,
        observations: n,
        uniform_log_likelihood: uniform,
        likelihood_ratio,
        log10_total_ratio: (mean - uniform) / std::f64::consts::LN_10,
        floored_observations: floored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub model: ModelKind,
    pub level0: String,
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub likelihood_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    /// Indices into the ranking.
    pub better: usize,
    pub worse: usize,
    pub difference: f64,
    /// The two 95% intervals are disjoint.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Best mean first.
    pub ranking: Vec<RankedModel>,
    pub pairs: Vec<PairwiseComparison>,
}

/// Two intervals `mean ± half_width` that do not overlap. Without an
/// interval on either side nothing is significant.
pub fn intervals_disjoint(a: (f64, Option<f64>), b: (f64, Option<f64>)) -> bool {
    match (a.1, b.1) {
        (Some(ha), Some(hb)) => a.0 + ha < b.0 - hb || b.0 + hb < a.0 - ha,
        _ => false,
    }
}

/// Rank reports by mean and flag every pair whose intervals do not overlap.
pub fn compare_models(reports: &[CvReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Config("need at least two reports to compare".into()));
    }
    let first = &reports[0];
    for r in &reports[1..] {
        if r.dataset != first.dataset
            || r.observations != first.observations
            || r.uniform_log_likelihood != first.uniform_log_likelihood
        {
            return Err(Error::Config(format!(
                "reports are on different datasets: {} vs {}",
                first.dataset, r.dataset
            )));
        }
    }
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| reports[b].mean.total_cmp(&reports[a].mean));
    let ranking: Vec<RankedModel> = order
        .iter()
        .map(|&i| {
            let r = &reports[i];
            RankedModel {
                model: r.model,
                level0: r.level0.clone(),
                mean: r.mean,
                half_width: r.half_width,
                likelihood_ratio: r.likelihood_ratio,
            }
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..ranking.len() {
        for j in i + 1..ranking.len() {
            let (a, b) = (&ranking[i], &ranking[j]);
            pairs.push(PairwiseComparison {
                better: i,
                worse: j,
                difference: a.mean - b.mean,
                significant: intervals_disjoint((a.mean, a.half_width), (b.mean, b.half_width)),
            });
        }
    }
    Ok(Comparison { ranking, pairs })
}
