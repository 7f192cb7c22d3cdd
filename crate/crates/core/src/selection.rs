//! Forward selection of level-0 features by held-out validation likelihood.
//!
//! Each round draws stratified folds, reserves fold `r mod k` for testing and
//! the next fold for validation, fits on the rest and scores the validation
//! fold. Test folds are never scored here; they stay available for a final
//! cross-validation of whatever set is chosen.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavioral::ModelKind;
use crate::error::{Error, Result};
use crate::estimation::{fit, mean_and_half_width, stratified_folds, Evaluator, FitOptions, ParamSpace};
use crate::features::{CombinerForm, FeatureKind, Transforms};
use crate::game::Dataset;
use crate::level0::{Level0Spec, Level0Weights};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub candidates: Vec<FeatureKind>,
    pub model: ModelKind,
    pub combiner: CombinerForm,
    pub transforms: Transforms,
    pub rounds: usize,
    pub folds: usize,
    pub fit: FitOptions,
    pub seed: u64,
}

impl SelectionConfig {
    /// All six binary features, linear combination, both transforms.
    pub fn binary(model: ModelKind, seed: u64) -> Self {
        SelectionConfig {
            candidates: FeatureKind::BINARY.to_vec(),
            model,
            combiner: CombinerForm::Linear,
            transforms: Transforms::BOTH,
            rounds: 10,
            folds: 10,
            fit: FitOptions::default(),
            seed,
        }
    }
}

/// Which games one validation score was fitted on and scored on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub round: usize,
    pub test_fold: usize,
    pub validation_fold: usize,
    /// Dataset entry indices.
    pub fit_games: Vec<usize>,
    pub validation_games: Vec<usize>,
    pub test_games: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub kinds: Vec<FeatureKind>,
    /// Feature codes, e.g. `"MNF"`.
    pub label: String,
    pub stage: usize,
    /// Mean over rounds of the validation log-likelihood summed over all
    /// games (each round validates every game once).
    pub score: f64,
    /// Student's-t 95% half-width (0 with a single round).
    pub half_width: f64,
    pub round_scores: Vec<f64>,
    #[serde(skip)]
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub evaluated: Vec<Evaluation>,
    /// Adopted sets, one per stage, strictly growing.
    pub chosen_path: Vec<Vec<FeatureKind>>,
}

impl SelectionTrace {
    pub fn selected(&self) -> &[FeatureKind] {
        self.chosen_path.last().map_or(&[], Vec::as_slice)
    }

    pub fn evaluation(&self, kinds: &[FeatureKind]) -> Option<&Evaluation> {
        let key = canonical(kinds);
        self.evaluated.iter().find(|e| e.kinds == key)
    }

    /// `set,score,half_width` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("set,stage,score,half_width\n");
        for e in &self.evaluated {
            out += &format!("{},{},{},{}\n", e.label, e.stage, e.score, e.half_width);
        }
        out
    }
}

pub fn label(kinds: &[FeatureKind]) -> String {
    kinds.iter().map(|k| k.code()).collect()
}

/// Candidate order is irrelevant to the fitted model; sets are keyed in the
/// canonical `FeatureKind::ALL` order.
fn canonical(kinds: &[FeatureKind]) -> Vec<FeatureKind> {
    FeatureKind::ALL.into_iter().filter(|k| kinds.contains(k)).collect()
}

struct Plan {
    /// Per round, one split per test fold: every game is validated exactly
    /// once per round.
    rounds: Vec<Vec<Provenance>>,
}

fn plan(dataset: &Dataset, config: &SelectionConfig) -> Result<Plan> {
    if config.folds < 3 {
        return Err(Error::param("folds", "selection needs at least 3 (fit, validation, test)"));
    }
    let ids: Vec<&str> = dataset.entries.iter().map(|e| e.game.id()).collect();
    let rounds = (0..config.rounds)
        .map(|r| {
            let s = seed::derive(config.seed, &[seed::label("select-round"), r as u64]);
            let folds = stratified_folds(dataset, config.folds, s)?;
            Ok((0..config.folds)
                .map(|test_fold| {
                    let validation_fold = (test_fold + 1) % config.folds;
                    let mut p = Provenance {
                        round: r,
                        test_fold,
                        validation_fold,
                        fit_games: Vec::new(),
                        validation_games: Vec::new(),
                        test_games: Vec::new(),
                    };
                    for (i, id) in ids.iter().enumerate() {
                        let f = folds.fold_of_game[*id];
                        if f == test_fold {
                            p.test_games.push(i);
                        } else if f == validation_fold {
                            p.validation_games.push(i);
                        } else {
                            p.fit_games.push(i);
                        }
                    }
                    p
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(Plan { rounds })
}

fn evaluate(dataset: &Dataset, config: &SelectionConfig, plan: &Plan, kinds: &[FeatureKind], stage: usize) -> Result<Evaluation> {
    let kinds = canonical(kinds);
    let spec = Level0Spec::new(
        label(&kinds),
        config.combiner,
        kinds.clone(),
        config.transforms,
        Level0Weights::zeros(kinds.len()),
    )?;
    let evaluator = Evaluator::new(dataset, &spec)?;
    let space = ParamSpace::new(config.model, kinds.len());
    let mut round_scores = Vec::with_capacity(plan.rounds.len());
    for splits in &plan.rounds {
        let mut total = 0.0;
        for p in splits {
            let fit_seed = seed::derive(config.seed, &[seed::label("select-fit"), p.round as u64, p.test_fold as u64]);
            let fitted = fit(&evaluator.subset(&p.fit_games), &space, &config.fit, fit_seed)?;
            total += evaluator.subset(&p.validation_games).log_likelihood(&fitted.params)?.value;
        }
        round_scores.push(total);
    }
    let (score, half_width) = mean_and_half_width(&round_scores);
    Ok(Evaluation {
        label: label(&kinds),
        kinds,
        stage,
        score,
        half_width: half_width.unwrap_or(0.0),
        round_scores,
        provenance: plan.rounds.concat(),
    })
}

/// Greedy forward selection.
///
/// Stage 1 scores every one- and two-element subset of the candidates and
/// adopts the best pair. Later stages try every one-feature extension of the
/// current set and adopt the best one if it beats the current score by more
/// than the current half-width; selection stops at the first stage without
/// such an improvement.
pub fn forward_select(dataset: &Dataset, config: &SelectionConfig) -> Result<SelectionTrace> {
    let candidates = canonical(&config.candidates);
    if candidates.len() < 2 {
        return Err(Error::Config("forward selection needs at least two distinct candidates".into()));
    }
    if config.rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    let plan = plan(dataset, config)?;
    let mut cache: BTreeMap<String, usize> = BTreeMap::new();
    let mut evaluated: Vec<Evaluation> = Vec::new();

    let mut run_stage = |sets: Vec<Vec<FeatureKind>>, stage: usize, evaluated: &mut Vec<Evaluation>| -> Result<Vec<usize>> {
        let fresh: Vec<Vec<FeatureKind>> = sets.iter().filter(|s| !cache.contains_key(&label(s))).cloned().collect();
        let results: Vec<Evaluation> = fresh
            .par_iter()
            .map(|s| evaluate(dataset, config, &plan, s, stage))
            .collect::<Result<_>>()?;
        for e in results {
            cache.insert(e.label.clone(), evaluated.len());
            evaluated.push(e);
        }
        Ok(sets.iter().map(|s| cache[&label(s)]).collect())
    };
    let best = |ids: &[usize], evaluated: &[Evaluation]| -> usize {
        // first maximum in canonical order
        *ids.iter()
            .reduce(|a, b| if evaluated[*b].score > evaluated[*a].score { b } else { a })
            .expect("nonempty stage")
    };

    let singles: Vec<Vec<FeatureKind>> = candidates.iter().map(|k| vec![*k]).collect();
    let pairs: Vec<Vec<FeatureKind>> = (0..candidates.len())
        .flat_map(|i| (i + 1..candidates.len()).map(move |j| (i, j)))
        .map(|(i, j)| vec![candidates[i], candidates[j]])
        .collect();
    let n_singles = singles.len();
    let ids = run_stage(singles.into_iter().chain(pairs).collect(), 1, &mut evaluated)?;
    let mut current = best(&ids[n_singles..], &evaluated);

    let improves = |new: usize, old: usize, evaluated: &[Evaluation]| {
        evaluated[new].score > evaluated[old].score + evaluated[old].half_width
    };
    let mut chosen_path = vec![evaluated[current].kinds.clone()];
    let mut stage = 2;
    loop {
        let base = evaluated[current].kinds.clone();
        let supersets: Vec<Vec<FeatureKind>> = candidates
            .iter()
            .filter(|k| !base.contains(k))
            .map(|k| canonical(&[base.as_slice(), &[*k]].concat()))
            .collect();
        if supersets.is_empty() {
            break;
        }
        let ids = run_stage(supersets, stage, &mut evaluated)?;
        let next = best(&ids, &evaluated);
        if !improves(next, current, &evaluated) {
            break;
        }
        chosen_path.push(evaluated[next].kinds.clone());
        current = next;
        stage += 1;
    }
    Ok(SelectionTrace { evaluated, chosen_path })
}
