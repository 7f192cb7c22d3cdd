//! Unconstrained parameterization of each model family.
//!
//! Optimizer and sampler both work on an internal vector in `R^d`:
//! `τ` and `λ` are log-transformed, probabilities (`ε`, `δ`) logit-transformed,
//! and simplex-valued quantities (level-0 weights with their uniform slack
//! `w_0`, the level-k population) use additive log-ratios against a pinned
//! reference component.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::behavioral::{Behavior, ModelKind, ModelParams, SpikePoissonParams, LEVEL_K_MAX};
use crate::error::{Error, Result};
use crate::level0::Level0Weights;

/// Upper edges of the parameter box; lower edges are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub tau_max: f64,
    /// Inverse cents.
    pub lambda_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            tau_max: 10.0,
            lambda_max: 5.0,
        }
    }
}

/// Parameters held constant instead of estimated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Level0Weights>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coord {
    Tau,
    Epsilon,
    Lambda,
    Delta,
    /// additive log-ratio of population level `k` (1..=LEVEL_K_MAX) against level 0
    Population(usize),
    /// additive log-ratio of feature weight `f` against `w_0`
    Weight(usize),
}

/// The free parameters of one model family over a level-0 spec with
/// `n_weights` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub kind: ModelKind,
    pub n_weights: usize,
    pub bounds: Bounds,
    pub fixed: FixedParams,
}

const LOG_FLOOR: f64 = -40.0;

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x) + ln(1 − σ(x))`, the log-derivative of the logistic map.
fn log_sigmoid_jacobian(x: f64) -> f64 {
    -x.abs() - 2.0 * (1.0 + (-x.abs()).exp()).ln()
}

/// Simplex point from log-ratios against a reference component at 0.
/// Returns `(reference, others)`.
fn alr_inverse(z: &[f64]) -> (f64, Vec<f64>) {
    let m = z.iter().copied().fold(0.0, f64::max);
    let reference = (-m).exp();
    let others: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let total = reference + others.iter().sum::<f64>();
    (reference / total, others.into_iter().map(|x| x / total).collect())
}

fn alr(reference: f64, others: &[f64]) -> Vec<f64> {
    let r = reference.max(1e-12);
    others.iter().map(|x| (x.max(1e-12) / r).ln()).collect()
}

/// Log-Jacobian of the additive log-ratio map: `Σ ln p_j` over every
/// simplex component including the reference.
fn alr_log_jacobian(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(0.0, f64::max);
    let log_total = m + ((-m).exp() + z.iter().map(|v| (v - m).exp()).sum::<f64>()).ln();
    z.iter().sum::<f64>() - (z.len() + 1) as f64 * log_total
}

/// Decoded parameter values, before box checks.
struct Raw {
    tau: f64,
    epsilon: f64,
    lambda: f64,
    delta: f64,
    population: Vec<f64>,
    weights: Vec<f64>,
}

impl ParamSpace {
    pub fn new(kind: ModelKind, n_weights: usize) -> Self {
        let fixed = match kind {
            ModelKind::PoissonCh => FixedParams {
                epsilon: Some(0.0),
                ..FixedParams::default()
            },
            _ => FixedParams::default(),
        };
        ParamSpace {
            kind,
            n_weights,
            bounds: Bounds::default(),
            fixed,
        }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_fixed(mut self, fixed: FixedParams) -> Self {
        self.fixed = fixed;
        self
    }

    /// Hold a named scalar (`tau`, `epsilon`, `lambda`, `delta`) at `value`.
    pub fn fix(mut self, name: &str, value: f64) -> Result<Self> {
        let slot = match name {
            "tau" => &mut self.fixed.tau,
            "epsilon" => &mut self.fixed.epsilon,
            "lambda" => &mut self.fixed.lambda,
            "delta" => &mut self.fixed.delta,
            _ => {
                return Err(Error::Unknown {
                    what: "parameter",
                    name: name.to_string(),
                })
            }
        };
        *slot = Some(value);
        self.validate()?;
        Ok(self)
    }

    /// Hold the level-0 weights fixed.
    pub fn fix_weights(mut self, w: Level0Weights) -> Result<Self> {
        self.fixed.weights = Some(w);
        self.validate()?;
        Ok(self)
    }

    /// Free every parameter except those of `keep`.
    pub fn only_free(kind: ModelKind, truth: &ModelParams, free: &[&str]) -> Result<Self> {
        let mut fixed = FixedParams::default();
        match &truth.behavior {
            Behavior::Qch(p) => {
                fixed.tau = Some(p.tau);
                fixed.epsilon = Some(p.epsilon);
                fixed.lambda = Some(p.lambda);
            }
            Behavior::PoissonCh { tau, epsilon } => {
                fixed.tau = Some(*tau);
                fixed.epsilon = Some(*epsilon);
            }
            Behavior::LevelK { population, delta } => {
                fixed.population = Some(population.clone());
                fixed.delta = Some(*delta);
            }
        }
        fixed.weights = Some(truth.level0_weights.clone());
        for name in free {
            match *name {
                "tau" => fixed.tau = None,
                "epsilon" => fixed.epsilon = None,
                "lambda" => fixed.lambda = None,
                "delta" => fixed.delta = None,
                "population" => fixed.population = None,
                "weights" => fixed.weights = None,
                other => {
                    return Err(Error::Unknown {
                        what: "parameter",
                        name: other.to_string(),
                    })
                }
            }
        }
        let space = ParamSpace {
            kind,
            n_weights: truth.level0_weights.len(),
            bounds: Bounds::default(),
            fixed,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        let in_box = |name: &'static str, v: Option<f64>, hi: f64| match v {
            Some(x) if !(0.0..=hi).contains(&x) => Err(Error::param(name, format!("fixed value {x} outside [0, {hi}]"))),
            _ => Ok(()),
        };
        in_box("tau", self.fixed.tau, self.bounds.tau_max)?;
        in_box("lambda", self.fixed.lambda, self.bounds.lambda_max)?;
        in_box("epsilon", self.fixed.epsilon, 1.0)?;
        in_box("delta", self.fixed.delta, 1.0)?;
        if let Some(w) = &self.fixed.weights {
            if w.len() != self.n_weights {
                return Err(Error::LengthMismatch(format!(
                    "{} fixed weights for {} features",
                    w.len(),
                    self.n_weights
                )));
            }
        }
        if let Some(p) = &self.fixed.population {
            Behavior::LevelK {
                population: p.clone(),
                delta: 0.0,
            }
            .validate()?;
        }
        Ok(())
    }

    fn coords(&self) -> Vec<Coord> {
        let mut c = Vec::new();
        let f = &self.fixed;
        match self.kind {
            ModelKind::SpikePoissonQch => {
                if f.tau.is_none() {
                    c.push(Coord::Tau);
                }
                if f.epsilon.is_none() {
                    c.push(Coord::Epsilon);
                }
                if f.lambda.is_none() {
                    c.push(Coord::Lambda);
                }
            }
            ModelKind::PoissonCh => {
                if f.tau.is_none() {
                    c.push(Coord::Tau);
                }
                if f.epsilon.is_none() {
                    c.push(Coord::Epsilon);
                }
            }
            ModelKind::LevelK => {
                if f.population.is_none() {
                    c.extend((1..=LEVEL_K_MAX).map(Coord::Population));
                }
                if f.delta.is_none() {
                    c.push(Coord::Delta);
                }
            }
        }
        if f.weights.is_none() {
            c.extend((0..self.n_weights).map(Coord::Weight));
        }
        c
    }

    /// Number of free internal coordinates.
    pub fn dim(&self) -> usize {
        self.coords().len()
    }

    /// Names of the free coordinates, for reports.
    pub fn coordinate_names(&self) -> Vec<String> {
        self.coords()
            .into_iter()
            .map(|c| match c {
                Coord::Tau => "log_tau".to_string(),
                Coord::Epsilon => "logit_epsilon".to_string(),
                Coord::Lambda => "log_lambda".to_string(),
                Coord::Delta => "logit_delta".to_string(),
                Coord::Population(k) => format!("alr_level{k}"),
                Coord::Weight(f) => format!("alr_w{f}"),
            })
            .collect()
    }

    fn raw(&self, x: &[f64]) -> Raw {
        let coords = self.coords();
        debug_assert_eq!(coords.len(), x.len());
        let f = &self.fixed;
        let mut raw = Raw {
            tau: f.tau.unwrap_or(0.0),
            epsilon: f.epsilon.unwrap_or(0.0),
            lambda: f.lambda.unwrap_or(0.0),
            delta: f.delta.unwrap_or(0.0),
            population: f.population.clone().unwrap_or_default(),
            weights: f.weights.as_ref().map(|w| w.values().to_vec()).unwrap_or_default(),
        };
        let mut pop_z = Vec::new();
        let mut w_z = Vec::new();
        for (c, &v) in coords.iter().zip(x) {
            match c {
                Coord::Tau => raw.tau = v.max(LOG_FLOOR).exp(),
                Coord::Epsilon => raw.epsilon = sigmoid(v),
                Coord::Lambda => raw.lambda = v.max(LOG_FLOOR).exp(),
                Coord::Delta => raw.delta = sigmoid(v),
                Coord::Population(_) => pop_z.push(v),
                Coord::Weight(_) => w_z.push(v),
            }
        }
        if f.population.is_none() && self.kind == ModelKind::LevelK {
            let (p0, rest) = alr_inverse(&pop_z);
            raw.population = std::iter::once(p0).chain(rest).collect();
        }
        if f.weights.is_none() {
            raw.weights = alr_inverse(&w_z).1;
        }
        raw
    }

    fn build(&self, raw: Raw) -> Result<ModelParams> {
        let behavior = match self.kind {
            ModelKind::SpikePoissonQch => Behavior::Qch(SpikePoissonParams {
                tau: raw.tau,
                epsilon: raw.epsilon,
                lambda: raw.lambda,
            }),
            ModelKind::PoissonCh => Behavior::PoissonCh {
                tau: raw.tau,
                epsilon: raw.epsilon,
            },
            ModelKind::LevelK => Behavior::LevelK {
                population: raw.population,
                delta: raw.delta,
            },
        };
        // ALR output can exceed 1 in total by rounding only
        let total: f64 = raw.weights.iter().sum();
        let weights = if total > 1.0 {
            raw.weights.iter().map(|w| w / total).collect()
        } else {
            raw.weights
        };
        ModelParams::new(behavior, Level0Weights::new(weights)?)
    }

    /// Decode for optimization: `τ` and `λ` are clamped into the box.
    pub fn decode_clamped(&self, x: &[f64]) -> ModelParams {
        let mut raw = self.raw(x);
        raw.tau = raw.tau.min(self.bounds.tau_max);
        raw.lambda = raw.lambda.min(self.bounds.lambda_max);
        self.build(raw).expect("clamped decode is always valid")
    }

    /// Decode for sampling: `None` outside the prior box.
    pub fn decode_in_box(&self, x: &[f64]) -> Option<ModelParams> {
        let raw = self.raw(x);
        if raw.tau > self.bounds.tau_max || raw.lambda > self.bounds.lambda_max {
            return None;
        }
        self.build(raw).ok()
    }

    /// `ln |∂θ/∂x|`: converts a density flat in the original parameters into
    /// a density over internal coordinates.
    pub fn log_jacobian(&self, x: &[f64]) -> f64 {
        let coords = self.coords();
        let mut total = 0.0;
        let mut pop_z = Vec::new();
        let mut w_z = Vec::new();
        for (c, &v) in coords.iter().zip(x) {
            match c {
                Coord::Tau | Coord::Lambda => total += v,
                Coord::Epsilon | Coord::Delta => total += log_sigmoid_jacobian(v),
                Coord::Population(_) => pop_z.push(v),
                Coord::Weight(_) => w_z.push(v),
            }
        }
        if !pop_z.is_empty() {
            total += alr_log_jacobian(&pop_z);
        }
        if !w_z.is_empty() {
            total += alr_log_jacobian(&w_z);
        }
        total
    }

    /// Internal coordinates of `params` (free coordinates only).
    pub fn encode(&self, params: &ModelParams) -> Vec<f64> {
        let coords = self.coords();
        let w = params.level0_weights.values();
        let w_z = alr(params.level0_weights.w0(), w);
        let (tau, eps, lam, delta, pop) = match &params.behavior {
            Behavior::Qch(p) => (p.tau, p.epsilon, p.lambda, 0.0, Vec::new()),
            Behavior::PoissonCh { tau, epsilon } => (*tau, *epsilon, 0.0, 0.0, Vec::new()),
            Behavior::LevelK { population, delta } => (0.0, 0.0, 0.0, *delta, population.clone()),
        };
        let pop_z = if pop.is_empty() { Vec::new() } else { alr(pop[0], &pop[1..]) };
        coords
            .iter()
            .map(|c| match *c {
                Coord::Tau => tau.max(1e-17).ln().max(LOG_FLOOR),
                Coord::Lambda => lam.max(1e-17).ln().max(LOG_FLOOR),
                Coord::Epsilon => logit(eps),
                Coord::Delta => logit(delta),
                Coord::Population(k) => pop_z[k - 1],
                Coord::Weight(f) => w_z[f],
            })
            .collect()
    }

    /// Starting point for the first optimizer restart.
    pub fn default_start(&self) -> Vec<f64> {
        let k = self.n_weights.max(1) as f64;
        self.coords()
            .iter()
            .map(|c| match c {
                Coord::Tau => 1.5f64.ln(),
                Coord::Epsilon => logit(0.3),
                Coord::Lambda => 0.1f64.ln(),
                Coord::Delta => logit(0.1),
                Coord::Population(_) => 0.0,
                // w_0 = 1/2, the rest shared equally
                Coord::Weight(_) => (1.0 / k).ln(),
            })
            .collect()
    }

    /// Random starting point spread over the box.
    pub fn random_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut dirichlet = |n: usize| -> Vec<f64> {
            let g: Vec<f64> = (0..=n).map(|_| Exp1.sample(rng)).collect();
            alr(g[0], &g[1..])
        };
        let w_z = dirichlet(self.n_weights);
        let pop_z = dirichlet(LEVEL_K_MAX);
        self.coords()
            .iter()
            .map(|c| match *c {
                Coord::Tau => rng.random_range(0.1f64..self.bounds.tau_max.min(5.0)).ln(),
                Coord::Epsilon => logit(rng.random_range(0.05..0.95)),
                Coord::Lambda => rng.random_range((1e-3f64).ln()..self.bounds.lambda_max.min(1.0).ln()),
                Coord::Delta => logit(rng.random_range(0.01..0.5)),
                Coord::Population(k) => pop_z[k - 1],
                Coord::Weight(f) => w_z[f],
            })
            .collect()
    }

    /// True when `params` lies inside the box (and on the simplices).
    pub fn contains(&self, params: &ModelParams) -> bool {
        if params.behavior.validate().is_err() || params.kind() != self.kind {
            return false;
        }
        let w = params.level0_weights.values();
        if w.len() != self.n_weights {
            return false;
        }
        match &params.behavior {
            Behavior::Qch(p) => p.tau <= self.bounds.tau_max && p.lambda <= self.bounds.lambda_max,
            Behavior::PoissonCh { tau, .. } => *tau <= self.bounds.tau_max,
            Behavior::LevelK { .. } => true,
        }
    }
}
