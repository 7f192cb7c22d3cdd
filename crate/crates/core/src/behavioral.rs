//! Iterative behavioral models.
//!
//! All three models share one ladder: level 0 plays the level-0
//! distribution, and every higher level responds to a belief about the
//! opponent built from lower levels. They differ in the belief (mixture of
//! all lower levels vs. the level directly below), the response (quantal vs.
//! exact best response) and the population distribution over levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{MixedStrategy, NormalFormGame, Role};
use crate::level0::{predict_level0_with, Level0Spec, Level0Weights};

/// Cumulative level mass at which the Poisson tail is cut.
pub const LEVEL_TAIL: f64 = 1e-9;
/// Hard cap on the number of levels.
pub const MAX_LEVEL: usize = 50;
/// Expected-utility tolerance (cents) when collecting tied best responses.
pub const BR_TOLERANCE: f64 = 1e-9;
/// Highest level in the level-k population.
pub const LEVEL_K_MAX: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikePoissonParams {
    pub tau: f64,
    pub epsilon: f64,
    /// Precision in inverse cents.
    pub lambda: f64,
}

fn check_nonneg(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{x} must be finite and nonnegative")))
    }
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{x} outside [0,1]")))
    }
}

impl SpikePoissonParams {
    pub fn new(tau: f64, epsilon: f64, lambda: f64) -> Result<Self> {
        let p = SpikePoissonParams { tau, epsilon, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonneg("tau", self.tau)?;
        check_unit("epsilon", self.epsilon)?;
        check_nonneg("lambda", self.lambda)
    }
}

/// Population weights over levels `0..=L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LevelWeights(Vec<f64>);

impl LevelWeights {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Weight of `level`, zero beyond the truncation point.
    pub fn get(&self, level: usize) -> f64 {
        self.0.get(level).copied().unwrap_or(0.0)
    }

    pub fn max_level(&self) -> usize {
        self.0.len() - 1
    }
}

fn spike_poisson_raw(tau: f64, epsilon: f64, l_max: usize) -> Vec<f64> {
    let mut pmf = (-tau).exp();
    let mut g = Vec::with_capacity(l_max + 1);
    for m in 0..=l_max {
        if m > 0 {
            pmf *= tau / m as f64;
        }
        let spike = if m == 0 { epsilon } else { 0.0 };
        g.push(spike + (1.0 - epsilon) * pmf);
    }
    g
}

/// Spike-Poisson level weights for levels `0..=l_max`, renormalized after truncation.
pub fn level_weights(params: &SpikePoissonParams, l_max: usize) -> LevelWeights {
    spike_poisson_weights(params.tau, params.epsilon, l_max)
}

pub(crate) fn spike_poisson_weights(tau: f64, epsilon: f64, l_max: usize) -> LevelWeights {
    let mut g = spike_poisson_raw(tau, epsilon, l_max);
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|x| *x /= total);
    LevelWeights(g)
}

/// Smallest `L` with untruncated mass on `0..=L` at least `1 − LEVEL_TAIL`,
/// capped at [`MAX_LEVEL`].
pub fn auto_l_max(tau: f64, epsilon: f64) -> usize {
    let mut pmf = (-tau).exp();
    let mut cum = epsilon + (1.0 - epsilon) * pmf;
    let mut m = 0;
    while cum < 1.0 - LEVEL_TAIL && m < MAX_LEVEL {
        m += 1;
        pmf *= tau / m as f64;
        cum += (1.0 - epsilon) * pmf;
    }
    m
}

/// Spike-Poisson weights truncated by [`auto_l_max`].
pub fn auto_level_weights(tau: f64, epsilon: f64) -> LevelWeights {
    spike_poisson_weights(tau, epsilon, auto_l_max(tau, epsilon))
}

fn expected_utilities(game: &NormalFormGame, player: Role, opponent: &[f64], out: &mut [f64]) {
    for (a, u) in out.iter_mut().enumerate() {
        *u = game.expected_utility_unchecked(player, a, opponent);
    }
}

fn qbr_into(game: &NormalFormGame, player: Role, opponent: &[f64], lambda: f64, out: &mut [f64]) {
    expected_utilities(game, player, opponent, out);
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for u in out.iter_mut() {
        *u = (lambda * (*u - max)).exp();
        total += *u;
    }
    out.iter_mut().for_each(|u| *u /= total);
}

fn best_response_into(game: &NormalFormGame, player: Role, opponent: &[f64], out: &mut [f64]) {
    expected_utilities(game, player, opponent, out);
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut ties = 0.0;
    for u in out.iter_mut() {
        *u = if *u >= max - BR_TOLERANCE { 1.0 } else { 0.0 };
        ties += *u;
    }
    out.iter_mut().for_each(|u| *u /= ties);
}

/// Logit quantal best response `s(a) ∝ exp(λ u(a, s_-i))`.
pub fn qbr(game: &NormalFormGame, player: Role, opponent: &MixedStrategy, lambda: f64) -> MixedStrategy {
    let mut out = vec![0.0; game.num_actions(player)];
    qbr_into(game, player, opponent.probs(), lambda, &mut out);
    MixedStrategy::from_vec_unchecked(out)
}

/// Exact best response, uniform over actions tied within [`BR_TOLERANCE`].
pub fn best_response(game: &NormalFormGame, player: Role, opponent: &MixedStrategy) -> MixedStrategy {
    let mut out = vec![0.0; game.num_actions(player)];
    best_response_into(game, player, opponent.probs(), &mut out);
    MixedStrategy::from_vec_unchecked(out)
}

/// `Σ_{ℓ<m} g(ℓ) π_ℓ / Σ_{ℓ<m} g(ℓ)`; uniform when the denominator vanishes.
pub fn truncated_belief(level_predictions: &[MixedStrategy], g: &LevelWeights, m: usize) -> Result<MixedStrategy> {
    if m == 0 || level_predictions.len() < m {
        return Err(Error::param(
            "m",
            format!("need 1 <= m <= {} level predictions, got {m}", level_predictions.len()),
        ));
    }
    let n = level_predictions[0].len();
    let mut acc = vec![0.0; n];
    let mut mass = 0.0;
    for (l, p) in level_predictions[..m].iter().enumerate() {
        let w = g.get(l);
        mass += w;
        acc.iter_mut().zip(p.probs()).for_each(|(a, x)| *a += w * x);
    }
    if mass == 0.0 {
        return Ok(MixedStrategy::uniform(n));
    }
    acc.iter_mut().for_each(|a| *a /= mass);
    Ok(MixedStrategy::from_vec_unchecked(acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "qch")]
    SpikePoissonQch,
    #[serde(rename = "poisson-ch")]
    PoissonCh,
    #[serde(rename = "level-k")]
    LevelK,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::SpikePoissonQch, ModelKind::PoissonCh, ModelKind::LevelK];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SpikePoissonQch => "qch",
            ModelKind::PoissonCh => "poisson-ch",
            ModelKind::LevelK => "level-k",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown {
                what: "model kind",
                name: s.to_string(),
            })
    }
}

/// Model-specific behavioral parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum Behavior {
    #[serde(rename = "qch")]
    Qch(SpikePoissonParams),
    /// Exact best responses; `epsilon` is a level-0 spike, usually 0.
    #[serde(rename = "poisson-ch")]
    PoissonCh { tau: f64, epsilon: f64 },
    /// Categorical population over levels `0..=LEVEL_K_MAX` and a shared error rate.
    #[serde(rename = "level-k")]
    LevelK { population: Vec<f64>, delta: f64 },
}

impl Behavior {
    pub fn kind(&self) -> ModelKind {
        match self {
            Behavior::Qch(_) => ModelKind::SpikePoissonQch,
            Behavior::PoissonCh { .. } => ModelKind::PoissonCh,
            Behavior::LevelK { .. } => ModelKind::LevelK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Behavior::Qch(p) => p.validate(),
            Behavior::PoissonCh { tau, epsilon } => {
                check_nonneg("tau", *tau)?;
                check_unit("epsilon", *epsilon)
            }
            Behavior::LevelK { population, delta } => {
                check_unit("delta", *delta)?;
                if population.len() != LEVEL_K_MAX + 1 {
                    return Err(Error::param(
                        "population",
                        format!("expected {} level weights, got {}", LEVEL_K_MAX + 1, population.len()),
                    ));
                }
                for &p in population {
                    check_unit("population", p)?;
                }
                let total: f64 = population.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::param("population", format!("sums to {total}")));
                }
                Ok(())
            }
        }
    }

    /// Population mass of `level` (truncated and renormalized for the
    /// Poisson families).
    pub fn level_mass(&self, level: usize) -> f64 {
        match self {
            Behavior::Qch(p) => auto_level_weights(p.tau, p.epsilon).get(level),
            Behavior::PoissonCh { tau, epsilon } => auto_level_weights(*tau, *epsilon).get(level),
            Behavior::LevelK { population, .. } => population.get(level).copied().unwrap_or(0.0),
        }
    }
}

/// Behavioral parameters together with the level-0 weights they are fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(flatten)]
    pub behavior: Behavior,
    #[serde(rename = "weights")]
    pub level0_weights: Level0Weights,
}

impl ModelParams {
    pub fn new(behavior: Behavior, level0_weights: Level0Weights) -> Result<Self> {
        behavior.validate()?;
        Ok(ModelParams {
            behavior,
            level0_weights,
        })
    }

    pub fn qch(tau: f64, epsilon: f64, lambda: f64, weights: Level0Weights) -> Result<Self> {
        Self::new(Behavior::Qch(SpikePoissonParams { tau, epsilon, lambda }), weights)
    }

    pub fn kind(&self) -> ModelKind {
        self.behavior.kind()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: ModelParams = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        p.behavior.validate()?;
        Ok(p)
    }
}

/// Both roles' overall predictions given both roles' level-0 distributions.
pub(crate) fn ladder(game: &NormalFormGame, behavior: &Behavior, level0: [&[f64]; 2]) -> [Vec<f64>; 2] {
    let mut out = match behavior {
        Behavior::Qch(p) => hierarchy(game, &auto_level_weights(p.tau, p.epsilon), level0, |g, r, opp, buf| {
            qbr_into(g, r, opp, p.lambda, buf)
        }),
        Behavior::PoissonCh { tau, epsilon } => {
            hierarchy(game, &auto_level_weights(*tau, *epsilon), level0, best_response_into)
        }
        Behavior::LevelK { population, delta } => level_k(game, population, *delta, level0),
    };
    for v in &mut out {
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
    }
    out
}

/// Cognitive-hierarchy ladder: level `m` responds to the normalized mixture
/// of the opponent's levels `0..m`.
fn hierarchy(
    game: &NormalFormGame,
    g: &LevelWeights,
    level0: [&[f64]; 2],
    respond: impl Fn(&NormalFormGame, Role, &[f64], &mut [f64]),
) -> [Vec<f64>; 2] {
    let g0 = g.get(0);
    // running Σ_{ℓ<m} g(ℓ) π_ℓ per role; at the end this is the prediction
    let mut cum = level0.map(|l0| l0.iter().map(|x| g0 * x).collect::<Vec<f64>>());
    let mut mass = g0;
    let mut belief = [Vec::new(), Vec::new()];
    let mut level = [
        vec![0.0; game.num_actions(Role::Row)],
        vec![0.0; game.num_actions(Role::Col)],
    ];
    for m in 1..=g.max_level() {
        let gm = g.get(m);
        for role in Role::BOTH {
            let other = role.opponent().index();
            belief[other].clear();
            if mass > 0.0 {
                belief[other].extend(cum[other].iter().map(|x| x / mass));
            } else {
                let n = cum[other].len();
                belief[other].extend(std::iter::repeat_n(1.0 / n as f64, n));
            }
        }
        for role in Role::BOTH {
            let i = role.index();
            respond(game, role, &belief[role.opponent().index()], &mut level[i]);
        }
        for i in 0..2 {
            cum[i].iter_mut().zip(&level[i]).for_each(|(c, x)| *c += gm * x);
        }
        mass += gm;
    }
    cum
}

/// Level-k: level `m` best responds to the opponent's level `m − 1` rule,
/// then trembles uniformly with probability `delta`.
fn level_k(game: &NormalFormGame, population: &[f64], delta: f64, level0: [&[f64]; 2]) -> [Vec<f64>; 2] {
    let mut rule = level0.map(<[f64]>::to_vec);
    let mut out = [0usize, 1].map(|i| rule[i].iter().map(|x| population[0] * x).collect::<Vec<f64>>());
    let mut next = [rule[0].clone(), rule[1].clone()];
    for &pm in population.iter().skip(1) {
        for role in Role::BOTH {
            best_response_into(game, role, &rule[role.opponent().index()], &mut next[role.index()]);
        }
        std::mem::swap(&mut rule, &mut next);
        for i in 0..2 {
            let uniform = 1.0 / rule[i].len() as f64;
            out[i]
                .iter_mut()
                .zip(&rule[i])
                .for_each(|(o, br)| *o += pm * ((1.0 - delta) * br + delta * uniform));
        }
    }
    out
}

fn level0_pair(game: &NormalFormGame, params: &ModelParams, level0: &Level0Spec) -> Result<[MixedStrategy; 2]> {
    if params.level0_weights.len() != level0.kinds.len() {
        return Err(Error::LengthMismatch(format!(
            "{} level-0 weights for {} features",
            params.level0_weights.len(),
            level0.kinds.len()
        )));
    }
    Ok([
        predict_level0_with(level0, &params.level0_weights, game, Role::Row)?,
        predict_level0_with(level0, &params.level0_weights, game, Role::Col)?,
    ])
}

/// Predictions for both roles under any model kind.
///
/// The level-0 layer uses `level0`'s features, transforms and combiner with
/// `params.level0_weights`.
pub fn predict_both(game: &NormalFormGame, params: &ModelParams, level0: &Level0Spec) -> Result<[MixedStrategy; 2]> {
    params.behavior.validate()?;
    let l0 = level0_pair(game, params, level0)?;
    let [row, col] = ladder(game, &params.behavior, [l0[0].probs(), l0[1].probs()]);
    Ok([MixedStrategy::from_vec_unchecked(row), MixedStrategy::from_vec_unchecked(col)])
}

pub fn predict(game: &NormalFormGame, player: Role, params: &ModelParams, level0: &Level0Spec) -> Result<MixedStrategy> {
    let [row, col] = predict_both(game, params, level0)?;
    Ok(match player {
        Role::Row => row,
        Role::Col => col,
    })
}

fn expect_kind(params: &ModelParams, kind: ModelKind) -> Result<()> {
    if params.kind() == kind {
        Ok(())
    } else {
        Err(Error::ModelKindMismatch {
            expected: kind.name(),
            got: params.kind().name(),
        })
    }
}

/// Spike-Poisson quantal cognitive hierarchy.
pub fn qch_predict(game: &NormalFormGame, player: Role, params: &ModelParams, level0: &Level0Spec) -> Result<MixedStrategy> {
    expect_kind(params, ModelKind::SpikePoissonQch)?;
    predict(game, player, params, level0)
}

/// Poisson cognitive hierarchy with exact best responses.
pub fn poisson_ch_predict(
    game: &NormalFormGame,
    player: Role,
    params: &ModelParams,
    level0: &Level0Spec,
) -> Result<MixedStrategy> {
    expect_kind(params, ModelKind::PoissonCh)?;
    predict(game, player, params, level0)
}

pub fn level_k_predict(game: &NormalFormGame, player: Role, params: &ModelParams, level0: &Level0Spec) -> Result<MixedStrategy> {
    expect_kind(params, ModelKind::LevelK)?;
    predict(game, player, params, level0)
}
