//! Level-0 models: feature sets combined into a distribution over
//! actions by a weighted-linear or logit rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_matrix, CombinerForm, FeatureKind, FeatureVector, Transforms};
use crate::game::{MixedStrategy, NormalFormGame, Role};

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Per-feature weights `w_f ∈ [0,1]` with `Σ w_f ≤ 1`; the remainder is the
/// uniform-noise weight `w_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Level0Weights(Vec<f64>);

impl Level0Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(x) = w.iter().find(|x| !(x.is_finite() && (0.0..=1.0).contains(*x))) {
            return Err(Error::param("level0 weight", format!("{x} outside [0,1]")));
        }
        let total: f64 = w.iter().sum();
        if total > 1.0 + WEIGHT_TOLERANCE {
            return Err(Error::param("level0 weights", format!("sum {total} exceeds 1")));
        }
        Ok(Level0Weights(w))
    }

    pub fn zeros(n: usize) -> Self {
        Level0Weights(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `w_0 = 1 − Σ w_f`, clamped at zero against rounding.
    pub fn w0(&self) -> f64 {
        (1.0 - self.0.iter().sum::<f64>()).max(0.0)
    }
}

impl TryFrom<Vec<f64>> for Level0Weights {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Level0Weights::new(v)
    }
}

impl From<Level0Weights> for Vec<f64> {
    fn from(w: Level0Weights) -> Vec<f64> {
        w.0
    }
}

fn check_lengths(n_actions: usize, features: &[FeatureVector], weights: &Level0Weights) -> Result<()> {
    if n_actions == 0 {
        return Err(Error::LengthMismatch("no actions".into()));
    }
    if features.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} features but {} weights",
            features.len(),
            weights.len()
        )));
    }
    if let Some(f) = features.iter().find(|f| f.len() != n_actions) {
        return Err(Error::LengthMismatch(format!(
            "feature of length {} for {n_actions} actions",
            f.len()
        )));
    }
    Ok(())
}

fn scores(n_actions: usize, features: &[FeatureVector], weights: &Level0Weights) -> Vec<f64> {
    let w0 = weights.w0();
    (0..n_actions)
        .map(|a| {
            w0 + features
                .iter()
                .zip(weights.values())
                .map(|(f, w)| w * f.values()[a])
                .sum::<f64>()
        })
        .collect()
}

/// `π(a) ∝ w_0 + Σ_f w_f f(a)`. Falls back to uniform when every score is zero.
pub fn linear_combine(
    n_actions: usize,
    features: &[FeatureVector],
    weights: &Level0Weights,
) -> Result<MixedStrategy> {
    check_lengths(n_actions, features, weights)?;
    let s = scores(n_actions, features, weights);
    if let Some(x) = s.iter().find(|x| **x < 0.0) {
        return Err(Error::NegativeActivation(*x));
    }
    Ok(MixedStrategy::from_weights(s).unwrap_or_else(|| MixedStrategy::uniform(n_actions)))
}

/// `π(a) ∝ exp(w_0 + Σ_f w_f f(a))`, stabilized by the maximum exponent.
pub fn logit_combine(
    n_actions: usize,
    features: &[FeatureVector],
    weights: &Level0Weights,
) -> Result<MixedStrategy> {
    check_lengths(n_actions, features, weights)?;
    Ok(softmax(&scores(n_actions, features, weights)))
}

pub(crate) fn softmax(x: &[f64]) -> MixedStrategy {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    MixedStrategy::from_weights(e).expect("max term contributes exp(0) = 1")
}

pub fn combine(
    combiner: CombinerForm,
    n_actions: usize,
    features: &[FeatureVector],
    weights: &Level0Weights,
) -> Result<MixedStrategy> {
    match combiner {
        CombinerForm::Linear => linear_combine(n_actions, features, weights),
        CombinerForm::Logit => logit_combine(n_actions, features, weights),
    }
}

/// A complete level-0 model: which features, how they are transformed and
/// combined, and with what weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level0Spec {
    pub name: String,
    pub combiner: CombinerForm,
    pub kinds: Vec<FeatureKind>,
    pub informativeness: bool,
    pub normalized_activation: bool,
    pub weights: Level0Weights,
}

pub const LINEAR4_KINDS: [FeatureKind; 4] = [
    FeatureKind::MaxmaxBinary,
    FeatureKind::MaxminBinary,
    FeatureKind::FairBinary,
    FeatureKind::MaxSymmetricBinary,
];

pub const LINEAR8_KINDS: [FeatureKind; 8] = [
    FeatureKind::MaxmaxBinary,
    FeatureKind::MaxminBinary,
    FeatureKind::FairBinary,
    FeatureKind::MaxSymmetricBinary,
    FeatureKind::MaxReal,
    FeatureKind::MinReal,
    FeatureKind::UnfairReal,
    FeatureKind::SymmetricReal,
];

impl Level0Spec {
    pub fn new(
        name: impl Into<String>,
        combiner: CombinerForm,
        kinds: Vec<FeatureKind>,
        transforms: Transforms,
        weights: Level0Weights,
    ) -> Result<Self> {
        let spec = Level0Spec {
            name: name.into(),
            combiner,
            kinds,
            informativeness: transforms.informativeness,
            normalized_activation: transforms.normalized_activation,
            weights,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.kinds.len() {
            return Err(Error::LengthMismatch(format!(
                "level-0 spec {}: {} kinds but {} weights",
                self.name,
                self.kinds.len(),
                self.weights.len()
            )));
        }
        // Logit-form real features keep their sign (and `inv` negates), so
        // they cannot be normalized as activations.
        if self.combiner == CombinerForm::Logit && self.normalized_activation {
            if let Some(k) = self.kinds.iter().find(|k| !k.is_binary()) {
                return Err(Error::Config(format!(
                    "level-0 spec {}: normalized activation needs nonnegative features, but {k} is signed under the logit combiner",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Uniform randomization.
    pub fn uniform() -> Self {
        Level0Spec {
            name: "uniform".into(),
            combiner: CombinerForm::Linear,
            kinds: Vec::new(),
            informativeness: false,
            normalized_activation: false,
            weights: Level0Weights::zeros(0),
        }
    }

    /// Maxmax, maxmin, fairness and max-symmetric binary features, linear
    /// combination, both transforms. Weights in that order.
    pub fn linear4(weights: Level0Weights) -> Result<Self> {
        Self::new("linear4", CombinerForm::Linear, LINEAR4_KINDS.to_vec(), Transforms::BOTH, weights)
    }

    /// `linear4` plus the real-valued counterparts of its four features.
    pub fn linear8(weights: Level0Weights) -> Result<Self> {
        Self::new("linear8", CombinerForm::Linear, LINEAR8_KINDS.to_vec(), Transforms::BOTH, weights)
    }

    /// Named preset with all-zero weights.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(Self::uniform()),
            "linear4" => Self::linear4(Level0Weights::zeros(4)),
            "linear8" => Self::linear8(Level0Weights::zeros(8)),
            _ => Err(Error::Unknown {
                what: "level-0 preset",
                name: name.to_string(),
            }),
        }
    }

    pub fn transforms(&self) -> Transforms {
        Transforms {
            informativeness: self.informativeness,
            normalized_activation: self.normalized_activation,
        }
    }

    pub fn with_weights(&self, weights: Level0Weights) -> Result<Self> {
        let mut s = self.clone();
        s.weights = weights;
        s.validate()?;
        Ok(s)
    }

    /// Transformed feature values for one role of a game.
    pub fn features(&self, game: &NormalFormGame, player: Role) -> Result<Vec<FeatureVector>> {
        feature_matrix(&self.kinds, self.transforms(), self.combiner, game, player)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Level0Spec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Level-0 distribution for `player` under `spec` (with the spec's own weights).
pub fn predict_level0(spec: &Level0Spec, game: &NormalFormGame, player: Role) -> Result<MixedStrategy> {
    predict_level0_with(spec, &spec.weights, game, player)
}

/// As [`predict_level0`] but with externally supplied weights.
pub fn predict_level0_with(
    spec: &Level0Spec,
    weights: &Level0Weights,
    game: &NormalFormGame,
    player: Role,
) -> Result<MixedStrategy> {
    let features = spec.features(game, player)?;
    combine(spec.combiner, game.num_actions(player), &features, weights)
}
