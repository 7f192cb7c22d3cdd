//! Level-0 features: maps from a player's actions to nonnegative scores that
//! a nonstrategic agent might use to pick an action.
//!
//! Six criteria are available, each in a binary form (1 on the set of actions
//! that optimize the criterion) and a real-valued form (the criterion value
//! itself). Criteria that should be minimized (worst-case regret, minimum
//! unfairness) pass through [`inv`] in their real form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{NormalFormGame, Role};

/// Absolute tolerance, in cents, when collecting an argmax/argmin set.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Floor applied before taking reciprocals in the linear form of `inv`.
pub const INV_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    MaxminBinary,
    MinReal,
    MaxmaxBinary,
    MaxReal,
    MinimaxRegretBinary,
    MaxRegretReal,
    FairBinary,
    UnfairReal,
    MaxSymmetricBinary,
    SymmetricReal,
    WelfareBinary,
    WelfareReal,
}

/// The decision criterion behind a pair of binary/real features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Worst-case own payoff (maximized).
    Maxmin,
    /// Best-case own payoff (maximized).
    Maxmax,
    /// Worst-case regret (minimized).
    MinimaxRegret,
    /// Smallest achievable payoff spread between the players (minimized).
    Fairness,
    /// Own payoff when both players choose the same action (maximized).
    MaxSymmetric,
    /// Largest achievable payoff sum (maximized).
    Welfare,
}

impl Criterion {
    pub fn minimized(self) -> bool {
        matches!(self, Criterion::MinimaxRegret | Criterion::Fairness)
    }
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 12] = [
        FeatureKind::MaxminBinary,
        FeatureKind::MinReal,
        FeatureKind::MaxmaxBinary,
        FeatureKind::MaxReal,
        FeatureKind::MinimaxRegretBinary,
        FeatureKind::MaxRegretReal,
        FeatureKind::FairBinary,
        FeatureKind::UnfairReal,
        FeatureKind::MaxSymmetricBinary,
        FeatureKind::SymmetricReal,
        FeatureKind::WelfareBinary,
        FeatureKind::WelfareReal,
    ];

    pub const BINARY: [FeatureKind; 6] = [
        FeatureKind::MaxmaxBinary,
        FeatureKind::MaxminBinary,
        FeatureKind::MinimaxRegretBinary,
        FeatureKind::WelfareBinary,
        FeatureKind::FairBinary,
        FeatureKind::MaxSymmetricBinary,
    ];

    pub fn is_binary(self) -> bool {
        use FeatureKind::*;
        matches!(
            self,
            MaxminBinary | MaxmaxBinary | MinimaxRegretBinary | FairBinary | MaxSymmetricBinary | WelfareBinary
        )
    }

    pub fn criterion(self) -> Criterion {
        use FeatureKind::*;
        match self {
            MaxminBinary | MinReal => Criterion::Maxmin,
            MaxmaxBinary | MaxReal => Criterion::Maxmax,
            MinimaxRegretBinary | MaxRegretReal => Criterion::MinimaxRegret,
            FairBinary | UnfairReal => Criterion::Fairness,
            MaxSymmetricBinary | SymmetricReal => Criterion::MaxSymmetric,
            WelfareBinary | WelfareReal => Criterion::Welfare,
        }
    }

    /// The other variant over the same criterion.
    pub fn counterpart(self) -> FeatureKind {
        use FeatureKind::*;
        match self {
            MaxminBinary => MinReal,
            MinReal => MaxminBinary,
            MaxmaxBinary => MaxReal,
            MaxReal => MaxmaxBinary,
            MinimaxRegretBinary => MaxRegretReal,
            MaxRegretReal => MinimaxRegretBinary,
            FairBinary => UnfairReal,
            UnfairReal => FairBinary,
            MaxSymmetricBinary => SymmetricReal,
            SymmetricReal => MaxSymmetricBinary,
            WelfareBinary => WelfareReal,
            WelfareReal => WelfareBinary,
        }
    }

    pub fn name(self) -> &'static str {
        use FeatureKind::*;
        match self {
            MaxminBinary => "maxmin_binary",
            MinReal => "min_real",
            MaxmaxBinary => "maxmax_binary",
            MaxReal => "max_real",
            MinimaxRegretBinary => "minimax_regret_binary",
            MaxRegretReal => "max_regret_real",
            FairBinary => "fair_binary",
            UnfairReal => "unfair_real",
            MaxSymmetricBinary => "max_symmetric_binary",
            SymmetricReal => "symmetric_real",
            WelfareBinary => "welfare_binary",
            WelfareReal => "welfare_real",
        }
    }

    /// One-letter code used when labelling feature sets: M maxmax, N maxmin,
    /// R regret, W welfare, F fairness, S symmetric. Real variants are lowercase.
    pub fn code(self) -> char {
        let c = match self.criterion() {
            Criterion::Maxmax => 'M',
            Criterion::Maxmin => 'N',
            Criterion::MinimaxRegret => 'R',
            Criterion::Welfare => 'W',
            Criterion::Fairness => 'F',
            Criterion::MaxSymmetric => 'S',
        };
        if self.is_binary() {
            c
        } else {
            c.to_ascii_lowercase()
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown {
                what: "feature kind",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinerForm {
    Linear,
    Logit,
}

impl FromStr for CombinerForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(CombinerForm::Linear),
            "logit" => Ok(CombinerForm::Logit),
            _ => Err(Error::Unknown {
                what: "combiner",
                name: s.to_string(),
            }),
        }
    }
}

/// Which transforms to apply, always in the order informativeness then
/// normalized activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Transforms {
    pub informativeness: bool,
    pub normalized_activation: bool,
}

impl Transforms {
    pub const BOTH: Transforms = Transforms {
        informativeness: true,
        normalized_activation: true,
    };
    pub const NONE: Transforms = Transforms {
        informativeness: false,
        normalized_activation: false,
    };
}

/// Feature values over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `inv` for a quantity to be minimized: reciprocal (floored) for linear
/// combination, negation for logit combination.
pub fn inv(x: f64, combiner: CombinerForm) -> f64 {
    match combiner {
        CombinerForm::Linear => 1.0 / x.max(INV_FLOOR),
        CombinerForm::Logit => -x,
    }
}

/// Regret as a nonnegative loss: `ρ(a, b) = max_a* u(a*, b) − u(a, b)`,
/// indexed `[own action][opponent action]`.
pub fn regret_loss(game: &NormalFormGame, player: Role) -> Vec<Vec<f64>> {
    let n_own = game.num_actions(player);
    let n_other = game.num_actions(player.opponent());
    let best: Vec<f64> = (0..n_other)
        .map(|b| {
            (0..n_own)
                .map(|a| game.own_payoff(player, a, b))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    (0..n_own)
        .map(|a| (0..n_other).map(|b| best[b] - game.own_payoff(player, a, b)).collect())
        .collect()
}

/// Per-action value of a criterion before any `inv` or shift.
///
/// `MaxSymmetric` yields `None` when the game is not symmetric.
pub fn criterion_values(criterion: Criterion, game: &NormalFormGame, player: Role) -> Option<Vec<f64>> {
    let n_own = game.num_actions(player);
    let n_other = game.num_actions(player.opponent());
    let over_opponent = |f: &dyn Fn(usize, usize) -> f64, pick_max: bool| -> Vec<f64> {
        (0..n_own)
            .map(|a| {
                let it = (0..n_other).map(|b| f(a, b));
                if pick_max {
                    it.fold(f64::NEG_INFINITY, f64::max)
                } else {
                    it.fold(f64::INFINITY, f64::min)
                }
            })
            .collect()
    };
    let own = |a: usize, b: usize| game.own_payoff(player, a, b);
    let values = match criterion {
        Criterion::Maxmin => over_opponent(&own, false),
        Criterion::Maxmax => over_opponent(&own, true),
        Criterion::MinimaxRegret => regret_loss(game, player)
            .into_iter()
            .map(|row| row.into_iter().fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        Criterion::Fairness => over_opponent(
            &|a, b| (game.own_payoff(player, a, b) - game.other_payoff(player, a, b)).abs(),
            false,
        ),
        Criterion::Welfare => over_opponent(
            &|a, b| game.own_payoff(player, a, b) + game.other_payoff(player, a, b),
            true,
        ),
        Criterion::MaxSymmetric => {
            if !game.is_symmetric() {
                return None;
            }
            (0..n_own).map(|a| own(a, a)).collect()
        }
    };
    Some(values)
}

fn optimal_set(values: &[f64], minimize: bool) -> Vec<f64> {
    let best = if minimize {
        values.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    values
        .iter()
        .map(|&v| {
            let hit = if minimize {
                v <= best + TIE_TOLERANCE
            } else {
                v >= best - TIE_TOLERANCE
            };
            if hit {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// 0/1 indicator of the actions optimizing the kind's criterion.
pub fn binary_feature(kind: FeatureKind, game: &NormalFormGame, player: Role) -> Result<FeatureVector> {
    if !kind.is_binary() {
        return Err(Error::WrongFeatureVariant(kind.name().into(), "expected a binary feature"));
    }
    let c = kind.criterion();
    Ok(FeatureVector(match criterion_values(c, game, player) {
        Some(v) => optimal_set(&v, c.minimized()),
        None => vec![0.0; game.num_actions(player)],
    }))
}

/// Smallest value the criterion can take anywhere in the game; linear-form
/// payoff features are shifted by it so they are nonnegative.
fn linear_shift(criterion: Criterion, game: &NormalFormGame, player: Role) -> f64 {
    let n_own = game.num_actions(player);
    let n_other = game.num_actions(player.opponent());
    let profiles = (0..n_own).flat_map(|a| (0..n_other).map(move |b| (a, b)));
    match criterion {
        Criterion::Welfare => profiles
            .map(|(a, b)| game.own_payoff(player, a, b) + game.other_payoff(player, a, b))
            .fold(f64::INFINITY, f64::min),
        _ => profiles
            .map(|(a, b)| game.own_payoff(player, a, b))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Real-valued feature for `combiner`.
pub fn real_feature(
    kind: FeatureKind,
    combiner: CombinerForm,
    game: &NormalFormGame,
    player: Role,
) -> Result<FeatureVector> {
    if kind.is_binary() {
        return Err(Error::WrongFeatureVariant(kind.name().into(), "expected a real-valued feature"));
    }
    let c = kind.criterion();
    let Some(raw) = criterion_values(c, game, player) else {
        return Ok(FeatureVector(vec![0.0; game.num_actions(player)]));
    };
    let values = if c.minimized() {
        raw.into_iter().map(|x| inv(x, combiner)).collect()
    } else {
        match combiner {
            CombinerForm::Logit => raw,
            CombinerForm::Linear => {
                let shift = linear_shift(c, game, player);
                raw.into_iter().map(|x| x - shift).collect()
            }
        }
    };
    Ok(FeatureVector(values))
}

/// Either variant; `combiner` only matters for real-valued kinds.
pub fn feature(
    kind: FeatureKind,
    combiner: CombinerForm,
    game: &NormalFormGame,
    player: Role,
) -> Result<FeatureVector> {
    if kind.is_binary() {
        binary_feature(kind, game, player)
    } else {
        real_feature(kind, combiner, game, player)
    }
}

/// Zero a feature that takes the same value on every action.
pub fn informativeness_transform(f: &FeatureVector) -> FeatureVector {
    let v = f.values();
    let informative = v.iter().any(|&x| x != v[0]);
    if informative {
        f.clone()
    } else {
        FeatureVector(vec![0.0; v.len()])
    }
}

/// Rescale a nonnegative feature to sum to one; all-zero stays all-zero.
pub fn normalized_activation_transform(f: &FeatureVector) -> Result<FeatureVector> {
    if let Some(&neg) = f.values().iter().find(|&&x| x < 0.0) {
        return Err(Error::NegativeActivation(neg));
    }
    let total: f64 = f.values().iter().sum();
    if total == 0.0 {
        return Ok(FeatureVector(vec![0.0; f.len()]));
    }
    Ok(FeatureVector(f.values().iter().map(|x| x / total).collect()))
}

/// Compute each kind and push it through the enabled transforms.
pub fn feature_matrix(
    kinds: &[FeatureKind],
    transforms: Transforms,
    combiner: CombinerForm,
    game: &NormalFormGame,
    player: Role,
) -> Result<Vec<FeatureVector>> {
    kinds
        .iter()
        .map(|&k| {
            let mut f = feature(k, combiner, game, player)?;
            if transforms.informativeness {
                f = informativeness_transform(&f);
            }
            if transforms.normalized_activation {
                f = normalized_activation_transform(&f)?;
            }
            Ok(f)
        })
        .collect()
}
