use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use bgt_l0::behavioral::{predict_both, Behavior, ModelKind, ModelParams};
use bgt_l0::estimation::{cross_validate, fit, Bounds, CvConfig, Evaluator, FitOptions, ParamSpace};
use bgt_l0::features::{feature, CombinerForm, FeatureKind, Transforms};
use bgt_l0::game::{dataset_to_json, load_dataset, normalize_payoffs, parse_game, Dataset, NormalFormGame, Role};
use bgt_l0::level0::{predict_level0, Level0Spec};
use bgt_l0::posterior::{marginal_cdf, mh_sample, McmcConfig, Quantity, TARGET_ACCEPTANCE};
use bgt_l0::selection::{forward_select, SelectionConfig};
use bgt_l0::synth::{generate, GeneratorConfig};
use bgt_l0::Error;

use crate::args::{Command, DataArgs, FitArgs, GameOrData, ModelArgs, SpaceArgs};
use crate::output::{num, OutDir};
use crate::Failure;

pub fn run(cmd: &Command, out: &mut OutDir) -> Result<(), Failure> {
    let seed = cmd.common().seed;
    match cmd {
        Command::Features {
            input,
            level0,
            combiner,
            cents_per_point,
            ..
        } => features(out, input, level0.as_deref(), combiner, *cents_per_point),
        Command::Predict {
            input,
            model,
            params,
            cents_per_point,
            ..
        } => predict(out, input, model, params, *cents_per_point),
        Command::Fit {
            data, model, fit, space, ..
        } => fit_cmd(out, data, model, fit, space, seed),
        Command::Cv {
            data,
            model,
            rounds,
            folds,
            fit,
            space,
            ..
        } => cv(out, data, model, *rounds, *folds, fit, space, seed),
        Command::Posterior {
            data,
            model,
            iterations,
            burn_in,
            thin,
            quantities,
            space,
            ..
        } => {
            let config = McmcConfig {
                iterations: *iterations,
                burn_in: *burn_in,
                thinning: *thin,
                seed,
            };
            posterior(out, data, model, &config, quantities, space)
        }
        Command::Select {
            data,
            model,
            candidates,
            combiner,
            no_informativeness,
            no_normalized_activation,
            rounds,
            folds,
            fit,
            ..
        } => {
            let mut config = SelectionConfig::binary(model.parse()?, seed);
            if !candidates.is_empty() {
                config.candidates = candidates.iter().map(|c| parse_kind(c)).collect::<Result<_, _>>()?;
            }
            config.combiner = combiner.parse()?;
            config.transforms = Transforms {
                informativeness: !no_informativeness,
                normalized_activation: !no_normalized_activation,
            };
            config.rounds = *rounds;
            config.folds = *folds;
            config.fit = fit_options(fit);
            select(out, data, &config)
        }
        Command::Synth {
            model,
            params,
            games,
            obs,
            min_actions,
            max_actions,
            payoff_min,
            payoff_max,
            symmetric_fraction,
            name,
            ..
        } => {
            let level0 = load_level0(&model.level0)?;
            let params = load_params(params, &model.model, &level0)?;
            let mut config = GeneratorConfig::new(params, level0, *games, *obs, seed);
            config.name = name.clone();
            config.source = name.clone();
            config.min_actions = *min_actions;
            config.max_actions = *max_actions;
            config.payoff_min = *payoff_min;
            config.payoff_max = *payoff_max;
            config.symmetric_fraction = *symmetric_fraction;
            let dataset = generate(&config)?;
            out.write_text("dataset.json", &(dataset_to_json(&dataset) + "\n"))?;
            out.write_json("truth.json", &config)?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A preset name or a spec file.
fn load_level0(arg: &str) -> Result<Level0Spec, Error> {
    match arg {
        "uniform" | "linear4" | "linear8" => Level0Spec::preset(arg),
        path => Level0Spec::from_json(&read(Path::new(path))?),
    }
}

/// Datasets in cents; several files are pooled, each keeping its source tag.
fn load_data(data: &DataArgs) -> Result<Dataset, Error> {
    let parts = data.dataset.iter().map(load_dataset).collect::<Result<Vec<_>, _>>()?;
    if parts.len() == 1 {
        return Ok(normalize_payoffs(&parts[0]));
    }
    let name = parts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join("+");
    Dataset::union(name, &parts)
}

fn load_games(input: &GameOrData, cents_per_point: f64) -> Result<Vec<NormalFormGame>, Error> {
    if !(cents_per_point.is_finite() && cents_per_point > 0.0) {
        return Err(Error::param("cents_per_point", "must be positive"));
    }
    match (&input.game, &input.dataset) {
        (Some(g), _) => Ok(vec![parse_game(&read(g)?)?.scaled(cents_per_point)]),
        (None, Some(d)) => Ok(normalize_payoffs(&load_dataset(d)?)
            .entries
            .into_iter()
            .map(|e| e.game)
            .collect()),
        (None, None) => Err(Error::Config("one of --game or --dataset is required".into())),
    }
}

/// Parameter file for `model`; a missing `weights` field takes the level-0
/// spec's own weights.
fn load_params(path: &PathBuf, model: &str, level0: &Level0Spec) -> Result<ModelParams, Error> {
    let kind: ModelKind = model.parse()?;
    let mut v: Value = serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    if let Value::Object(map) = &mut v {
        map.entry("model").or_insert_with(|| json!(kind.name()));
        map.entry("weights").or_insert_with(|| json!(level0.weights.values()));
    }
    let params = ModelParams::from_json(&v.to_string())?;
    if params.kind() != kind {
        return Err(Error::ModelKindMismatch {
            expected: kind.name(),
            got: params.kind().name(),
        });
    }
    if params.level0_weights.len() != level0.kinds.len() {
        return Err(Error::LengthMismatch(format!(
            "{} weights for level-0 spec {} with {} features",
            params.level0_weights.len(),
            level0.name,
            level0.kinds.len()
        )));
    }
    Ok(params)
}

fn fit_options(f: &FitArgs) -> FitOptions {
    FitOptions {
        budget: f.budget,
        restarts: f.restarts,
        ..FitOptions::default()
    }
}

fn build_space(kind: ModelKind, n_weights: usize, args: &SpaceArgs) -> Result<ParamSpace, Error> {
    let mut space = ParamSpace::new(kind, n_weights).with_bounds(Bounds {
        tau_max: args.tau_max,
        lambda_max: args.lambda_max,
    });
    for f in &args.fix {
        let (name, value) = f
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--fix expects NAME=VALUE, got {f:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("--fix {name}: {value:?} is not a number")))?;
        space = space.fix(name.trim(), value)?;
    }
    space.validate()?;
    Ok(space)
}

/// Canonical name or one-letter code.
fn parse_kind(s: &str) -> Result<FeatureKind, Error> {
    let mut chars = s.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if let Some(k) = FeatureKind::ALL.into_iter().find(|k| k.code() == c) {
            return Ok(k);
        }
    }
    s.parse()
}

fn fmt_all(xs: &[f64]) -> anyhow::Result<Vec<String>> {
    xs.iter().map(|&x| num(x)).collect()
}

#[derive(Serialize)]
struct KindValues {
    kind: FeatureKind,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct GameFeatures {
    game: String,
    role: Role,
    actions: Vec<String>,
    raw: Vec<KindValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transformed: Option<Vec<KindValues>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    level0: Option<Vec<f64>>,
}

fn features(
    out: &mut OutDir,
    input: &GameOrData,
    level0: Option<&str>,
    combiner: &str,
    cents_per_point: f64,
) -> Result<(), Failure> {
    let combiner: CombinerForm = combiner.parse()?;
    let games = load_games(input, cents_per_point)?;
    let spec = level0.map(load_level0).transpose()?;

    let mut header = vec!["game", "role", "action"];
    header.extend(FeatureKind::ALL.iter().map(|k| k.name()));
    let mut rows = Vec::new();
    let mut report = Vec::new();
    for game in &games {
        for role in Role::BOTH {
            let raw = FeatureKind::ALL
                .into_iter()
                .map(|k| Ok(KindValues { kind: k, values: feature(k, combiner, game, role)?.0 }))
                .collect::<Result<Vec<_>, Error>>()?;
            for (a, action) in game.actions(role).iter().enumerate() {
                let mut row = vec![game.id().to_string(), role.name().to_string(), action.clone()];
                for kv in &raw {
                    row.push(num(kv.values[a])?);
                }
                rows.push(row);
            }
            let (transformed, l0) = match &spec {
                Some(s) => {
                    let t = s
                        .features(game, role)?
                        .into_iter()
                        .zip(&s.kinds)
                        .map(|(f, &k)| KindValues { kind: k, values: f.0 })
                        .collect();
                    (Some(t), Some(predict_level0(s, game, role)?.into_vec()))
                }
                None => (None, None),
            };
            report.push(GameFeatures {
                game: game.id().to_string(),
                role,
                actions: game.actions(role).to_vec(),
                raw,
                transformed,
                level0: l0,
            });
        }
    }
    out.write_json(
        "features.json",
        &json!({
            "combiner": combiner,
            "level0": spec,
            "games": report,
        }),
    )?;
    out.write_csv("features.csv", &header, &rows)?;
    Ok(())
}

fn predict(
    out: &mut OutDir,
    input: &GameOrData,
    model: &ModelArgs,
    params: &PathBuf,
    cents_per_point: f64,
) -> Result<(), Failure> {
    let level0 = load_level0(&model.level0)?;
    let params = load_params(params, &model.model, &level0)?;
    let games = load_games(input, cents_per_point)?;

    let mut rows = Vec::new();
    let mut report = Vec::new();
    for game in &games {
        let [row, col] = predict_both(game, &params, &level0)?;
        for (role, p) in [(Role::Row, &row), (Role::Col, &col)] {
            for (action, &x) in game.actions(role).iter().zip(p.probs()) {
                rows.push(vec![game.id().to_string(), role.name().to_string(), action.clone(), num(x)?]);
            }
        }
        report.push(json!({
            "game": game.id(),
            "row_actions": game.actions(Role::Row),
            "col_actions": game.actions(Role::Col),
            "row": row.probs(),
            "col": col.probs(),
        }));
    }
    out.write_json(
        "predictions.json",
        &json!({
            "model": params.kind(),
            "level0": level0,
            "params": params,
            "games": report,
        }),
    )?;
    out.write_csv("predictions.csv", &["game", "role", "action", "probability"], &rows)?;
    Ok(())
}

fn fit_cmd(out: &mut OutDir, data: &DataArgs, model: &ModelArgs, f: &FitArgs, s: &SpaceArgs, seed: u64) -> Result<(), Failure> {
    let dataset = load_data(data)?;
    let level0 = load_level0(&model.level0)?;
    let space = build_space(model.model.parse()?, level0.kinds.len(), s)?;
    let options = fit_options(f);
    let evaluator = Evaluator::new(&dataset, &level0)?;
    let result = fit(&evaluator, &space, &options, seed)?;
    let fitted_level0 = level0.with_weights(result.params.level0_weights.clone())?;

    out.write_json(
        "fit.json",
        &json!({
            "dataset": dataset.name,
            "model": space.kind,
            "level0": fitted_level0,
            "space": space,
            "options": options,
            "seed": seed,
            "observations": dataset.total_observations(),
            "uniform_log_likelihood": dataset.uniform_log_likelihood(),
            "result": result,
        }),
    )?;
    let rows = result
        .trace
        .iter()
        .enumerate()
        .map(|(g, &ll)| Ok(vec![g.to_string(), num(ll)?]))
        .collect::<anyhow::Result<Vec<_>>>()?;
    out.write_csv("fit_trace.csv", &["generation", "best_log_likelihood"], &rows)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cv(
    out: &mut OutDir,
    data: &DataArgs,
    model: &ModelArgs,
    rounds: usize,
    folds: usize,
    f: &FitArgs,
    s: &SpaceArgs,
    seed: u64,
) -> Result<(), Failure> {
    let dataset = load_data(data)?;
    let level0 = load_level0(&model.level0)?;
    let space = build_space(model.model.parse()?, level0.kinds.len(), s)?;
    let config = CvConfig {
        rounds,
        folds,
        fit: fit_options(f),
        seed,
    };
    let report = cross_validate(&dataset, &space, &level0, &config)?;
    out.write_json("cv_report.json", &report)?;
    let rows = report
        .round_scores
        .iter()
        .enumerate()
        .map(|(r, &x)| Ok(vec![r.to_string(), num(x)?]))
        .collect::<anyhow::Result<Vec<_>>>()?;
    out.write_csv("cv_rounds.csv", &["round", "log_likelihood"], &rows)?;
    Ok(())
}

/// Every quantity the model defines, level masses first.
fn default_quantities(kind: ModelKind, level0: &Level0Spec) -> Vec<Quantity> {
    let mut q: Vec<Quantity> = (0..4).map(Quantity::Level).collect();
    match kind {
        ModelKind::SpikePoissonQch => q.extend([Quantity::Tau, Quantity::Epsilon, Quantity::Lambda]),
        ModelKind::PoissonCh => q.extend([Quantity::Tau, Quantity::Epsilon]),
        ModelKind::LevelK => q.push(Quantity::Delta),
    }
    if !level0.kinds.is_empty() {
        q.push(Quantity::W0);
        q.extend(level0.kinds.iter().map(|&k| Quantity::Weight(k)));
    }
    q
}

/// Original-space parameters of one sample, in chain-column order.
fn chain_row(p: &ModelParams) -> Vec<f64> {
    let mut v = match &p.behavior {
        Behavior::Qch(s) => vec![s.tau, s.epsilon, s.lambda],
        Behavior::PoissonCh { tau, epsilon } => vec![*tau, *epsilon],
        Behavior::LevelK { population, delta } => {
            let mut v = population.clone();
            v.push(*delta);
            v
        }
    };
    v.extend(p.level0_weights.values());
    v
}

fn chain_header(p: &ModelParams, level0: &Level0Spec) -> Vec<String> {
    let mut h: Vec<String> = match &p.behavior {
        Behavior::Qch(_) => vec!["tau".into(), "epsilon".into(), "lambda".into()],
        Behavior::PoissonCh { .. } => vec!["tau".into(), "epsilon".into()],
        Behavior::LevelK { population, .. } => (0..population.len())
            .map(|l| format!("population_{l}"))
            .chain(["delta".to_string()])
            .collect(),
    };
    h.extend(level0.kinds.iter().map(|k| format!("w_{}", k.name())));
    h
}

#[derive(Serialize)]
struct Marginal {
    quantity: String,
    mean: f64,
    median: f64,
    q025: f64,
    q975: f64,
    file: String,
}

fn posterior(
    out: &mut OutDir,
    data: &DataArgs,
    model: &ModelArgs,
    config: &McmcConfig,
    quantities: &[String],
    s: &SpaceArgs,
) -> Result<(), Failure> {
    let dataset = load_data(data)?;
    let level0 = load_level0(&model.level0)?;
    let kind: ModelKind = model.model.parse()?;
    let space = build_space(kind, level0.kinds.len(), s)?;
    let quantities: Vec<Quantity> = if quantities.is_empty() {
        default_quantities(kind, &level0)
    } else {
        quantities.iter().map(|q| q.parse()).collect::<Result<_, _>>()?
    };
    let evaluator = Evaluator::new(&dataset, &level0)?;
    let chain = mh_sample(&evaluator, &space, &level0, config, None)?;
    if chain.samples.is_empty() {
        return Err(Error::param("iterations", "no samples kept after burn-in").into());
    }

    let header = chain_header(&chain.samples[0], &level0);
    let rows = chain
        .samples
        .iter()
        .map(|p| fmt_all(&chain_row(p)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    out.write_csv("chain.csv", &header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)?;

    let mut marginals = Vec::new();
    for q in quantities {
        let cdf = marginal_cdf(&chain, q)?;
        let name = q.to_string();
        let file = format!("cdf_{}.csv", name.replace(':', "_"));
        let rows = cdf
            .points()
            .into_iter()
            .map(|(x, p)| Ok(vec![num(x)?, num(p)?]))
            .collect::<anyhow::Result<Vec<_>>>()?;
        out.write_csv(&file, &["value", "cumulative_probability"], &rows)?;
        marginals.push(Marginal {
            quantity: name,
            mean: cdf.values().iter().sum::<f64>() / cdf.len() as f64,
            median: cdf.median(),
            q025: cdf.quantile(0.025),
            q975: cdf.quantile(0.975),
            file,
        });
    }

    out.write_json(
        "posterior.json",
        &json!({
            "dataset": dataset.name,
            "model": kind,
            "level0": level0,
            "space": space,
            "config": config,
            "coordinates": space.coordinate_names(),
            "samples": chain.samples.len(),
            "acceptance_rate": chain.acceptance_rate,
            "target_acceptance": TARGET_ACCEPTANCE,
            "accepted": chain.accepted,
            "proposals": chain.proposals,
            "proposal_scales": chain.proposal_scales,
            "marginals": marginals,
        }),
    )?;
    Ok(())
}

fn select(out: &mut OutDir, data: &DataArgs, config: &SelectionConfig) -> Result<(), Failure> {
    let dataset = load_data(data)?;
    let trace = forward_select(&dataset, config)?;
    let selected = trace.selected();
    let mut stages: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &trace.evaluated {
        *stages.entry(e.stage).or_default() += 1;
    }
    out.write_json(
        "selection.json",
        &json!({
            "dataset": dataset.name,
            "config": config,
            "selected": selected,
            "selected_label": bgt_l0::selection::label(selected),
            "evaluations_per_stage": stages,
            "trace": trace,
        }),
    )?;
    let rows = trace
        .evaluated
        .iter()
        .map(|e| Ok(vec![e.label.clone(), e.stage.to_string(), num(e.score)?, num(e.half_width)?]))
        .collect::<anyhow::Result<Vec<_>>>()?;
    out.write_csv("selection.csv", &["set", "stage", "score", "half_width"], &rows)?;
    Ok(())
}
