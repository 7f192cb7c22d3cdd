//! Random-walk Metropolis sampling of the posterior under flat priors, and
//! empirical marginal distributions of derived quantities.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::behavioral::{Behavior, ModelParams};
use crate::error::{Error, Result};
use crate::estimation::{Evaluator, ParamSpace};
use crate::features::FeatureKind;
use crate::level0::Level0Spec;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 100_000,
            burn_in: 20_000,
            thinning: 10,
            seed: 0,
        }
    }
}

/// Target acceptance rate during burn-in adaptation.
pub const TARGET_ACCEPTANCE: f64 = 0.234;
const ADAPT_BATCH: usize = 100;
/// Per-coordinate scales start tracking the chain's spread after this many
/// burn-in iterations.
const ADAPT_WARMUP: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub space: ParamSpace,
    pub level0_kinds: Vec<FeatureKind>,
    pub samples: Vec<ModelParams>,
    /// Acceptance rate over the post-burn-in iterations.
    pub acceptance_rate: f64,
    pub accepted: usize,
    pub proposals: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    /// Frozen per-coordinate proposal standard deviations.
    pub proposal_scales: Vec<f64>,
}

/// Log-posterior in internal coordinates: log-likelihood plus the
/// log-Jacobian that makes the prior flat in the original parameters.
fn log_target(evaluator: &Evaluator, space: &ParamSpace, x: &[f64]) -> f64 {
    match space.decode_in_box(x) {
        None => f64::NEG_INFINITY,
        Some(p) => match evaluator.log_likelihood(&p) {
            Ok(ll) => ll.value + space.log_jacobian(x),
            Err(_) => f64::NEG_INFINITY,
        },
    }
}

/// Metropolis sampling over `space`, started from `start` (internal
/// coordinates) or the space's default point.
///
/// Proposal scales adapt during burn-in only: a global factor steers the
/// batch acceptance rate towards [`TARGET_ACCEPTANCE`], and each coordinate's
/// scale follows the chain's running standard deviation.
pub fn mh_sample(
    evaluator: &Evaluator,
    space: &ParamSpace,
    level0: &Level0Spec,
    config: &McmcConfig,
    start: Option<Vec<f64>>,
) -> Result<PosteriorChain> {
    if config.iterations <= config.burn_in {
        return Err(Error::param("iterations", "must exceed burn-in"));
    }
    if config.thinning == 0 {
        return Err(Error::param("thinning", "must be at least 1"));
    }
    if space.n_weights != level0.kinds.len() || evaluator.n_weights() != level0.kinds.len() {
        return Err(Error::LengthMismatch("parameter space, evaluator and level-0 spec disagree on weights".into()));
    }
    space.validate()?;
    let d = space.dim();
    let mut x = start.unwrap_or_else(|| space.default_start());
    if x.len() != d {
        return Err(Error::LengthMismatch(format!("start has {} coordinates, space has {d}", x.len())));
    }
    let mut lp = log_target(evaluator, space, &x);
    if !lp.is_finite() {
        return Err(Error::param("start", "outside the prior box or of zero likelihood"));
    }
    let mut rng = seed::rng(config.seed, &[seed::label("mh")]);

    let mut global = if d == 0 { 1.0 } else { 2.38 / (d as f64).sqrt() };
    let mut spread = vec![1.0; d];
    let (mut mean, mut m2) = (vec![0.0; d], vec![0.0; d]);
    let mut batch_accepted = 0usize;
    let mut accepted = 0;
    let mut samples = Vec::with_capacity((config.iterations - config.burn_in) / config.thinning + 1);
    let mut proposal = vec![0.0; d];

    for it in 0..config.iterations {
        let burning = it < config.burn_in;
        for i in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            proposal[i] = x[i] + global * spread[i] * z;
        }
        let lq = log_target(evaluator, space, &proposal);
        let u: f64 = rng.random();
        let accept = d > 0 && lq.is_finite() && u.ln() < lq - lp;
        if accept {
            x.copy_from_slice(&proposal);
            lp = lq;
        }
        if burning {
            batch_accepted += accept as usize;
            let n = (it + 1) as f64;
            for i in 0..d {
                let delta = x[i] - mean[i];
                mean[i] += delta / n;
                m2[i] += delta * (x[i] - mean[i]);
            }
            if (it + 1) % ADAPT_BATCH == 0 {
                let rate = batch_accepted as f64 / ADAPT_BATCH as f64;
                let step = (1.0 / ((it + 1) / ADAPT_BATCH) as f64).sqrt().max(0.05);
                global *= (step * (rate - TARGET_ACCEPTANCE) * 4.0).exp();
                batch_accepted = 0;
                if it + 1 >= ADAPT_WARMUP {
                    for i in 0..d {
                        spread[i] = (m2[i] / n).sqrt().clamp(1e-3, 10.0);
                    }
                }
            }
        } else {
            accepted += accept as usize;
            if (it - config.burn_in) % config.thinning == 0 {
                samples.push(space.decode_in_box(&x).expect("chain stays inside the box"));
            }
        }
    }
    let proposals = config.iterations - config.burn_in;
    Ok(PosteriorChain {
        space: space.clone(),
        level0_kinds: level0.kinds.clone(),
        samples,
        acceptance_rate: accepted as f64 / proposals as f64,
        accepted,
        proposals,
        iterations: config.iterations,
        burn_in: config.burn_in,
        thinning: config.thinning,
        seed: config.seed,
        proposal_scales: spread.iter().map(|s| s * global).collect(),
    })
}

/// A scalar read off each posterior sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Mass on level ℓ: the truncated, renormalized level weight.
    Level(usize),
    Tau,
    Epsilon,
    Lambda,
    Delta,
    /// Uniform slack weight `w_0`.
    W0,
    Weight(FeatureKind),
}

impl std::str::FromStr for Quantity {
    type Err = Error;

    /// `g0`…`g3`, `tau`, `epsilon`, `lambda`, `delta`, `w0`, or `w:<feature>`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::Unknown {
            what: "quantity",
            name: s.to_string(),
        };
        Ok(match s {
            "tau" => Quantity::Tau,
            "epsilon" => Quantity::Epsilon,
            "lambda" => Quantity::Lambda,
            "delta" => Quantity::Delta,
            "w0" => Quantity::W0,
            _ => {
                if let Some(f) = s.strip_prefix("w:") {
                    Quantity::Weight(f.parse().map_err(|_| unknown())?)
                } else if let Some(l) = s.strip_prefix('g') {
                    let l: usize = l.parse().map_err(|_| unknown())?;
                    if l > 3 {
                        return Err(unknown());
                    }
                    Quantity::Level(l)
                } else {
                    return Err(unknown());
                }
            }
        })
    }
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantity::Level(l) => write!(f, "g{l}"),
            Quantity::Tau => write!(f, "tau"),
            Quantity::Epsilon => write!(f, "epsilon"),
            Quantity::Lambda => write!(f, "lambda"),
            Quantity::Delta => write!(f, "delta"),
            Quantity::W0 => write!(f, "w0"),
            Quantity::Weight(k) => write!(f, "w:{}", k.name()),
        }
    }
}

fn not_applicable(q: Quantity) -> Error {
    Error::Unknown {
        what: "quantity for this model",
        name: q.to_string(),
    }
}

/// Value of `q` under `params`, whose weights follow `kinds`.
pub fn quantity_value(q: Quantity, params: &ModelParams, kinds: &[FeatureKind]) -> Result<f64> {
    let b = &params.behavior;
    Ok(match (q, b) {
        (Quantity::Level(l), _) => b.level_mass(l),
        (Quantity::Tau, Behavior::Qch(p)) => p.tau,
        (Quantity::Tau, Behavior::PoissonCh { tau, .. }) => *tau,
        (Quantity::Epsilon, Behavior::Qch(p)) => p.epsilon,
        (Quantity::Epsilon, Behavior::PoissonCh { epsilon, .. }) => *epsilon,
        (Quantity::Lambda, Behavior::Qch(p)) => p.lambda,
        (Quantity::Delta, Behavior::LevelK { delta, .. }) => *delta,
        (Quantity::W0, _) => params.level0_weights.w0(),
        (Quantity::Weight(k), _) => {
            let i = kinds.iter().position(|x| *x == k).ok_or_else(|| not_applicable(q))?;
            params.level0_weights.values()[i]
        }
        _ => return Err(not_applicable(q)),
    })
}

/// Sorted sample of a scalar quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("empirical distribution of no samples".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite sample value".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|v| *v <= x) as f64 / self.values.len() as f64
    }

    /// Nearest-rank quantile: the `⌈p·n⌉`-th smallest sample.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.values.len();
        let rank = (p.clamp(0.0, 1.0) * n as f64).ceil() as usize;
        self.values[rank.clamp(1, n) - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// `(value, cumulative probability)` at each sample, ties collapsed to
    /// their highest step.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.values.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = p,
                _ => out.push((v, p)),
            }
        }
        out
    }
}

pub fn marginal_cdf(chain: &PosteriorChain, quantity: Quantity) -> Result<EmpiricalCdf> {
    let values = chain
        .samples
        .iter()
        .map(|s| quantity_value(quantity, s, &chain.level0_kinds))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalCdf::new(values)
}
