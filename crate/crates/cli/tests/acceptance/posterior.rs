//! Posterior sampler against the flat prior and against grid integration.

use bgt_l0::behavioral::{Behavior, ModelKind, ModelParams, SpikePoissonParams};
use bgt_l0::estimation::{Evaluator, ParamSpace};
use bgt_l0::level0::{Level0Spec, Level0Weights, LINEAR4_KINDS};
use bgt_l0::posterior::{marginal_cdf, mh_sample, McmcConfig, Quantity};
use bgt_l0::synth::{generate, GeneratorConfig};

use crate::Outcome;

/// Largest gap between an empirical sample and a reference CDF.
fn ks(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic two-sided Kolmogorov critical value at level 0.01.
fn ks_critical_001(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

fn flat_prior() -> (bool, String) {
    // Observation-free games: the likelihood is constant, so the posterior is
    // the prior — flat on τ ∈ [0, 10], ε ∈ [0, 1], λ ∈ [0, 5] and on the
    // weight simplex (each of its five components is Beta(1, 4)).
    let truth = ModelParams::qch(1.0, 0.5, 0.5, Level0Weights::zeros(4)).unwrap();
    let mut config = GeneratorConfig::new(truth, Level0Spec::preset("linear4").unwrap(), 3, 0, 7);
    config.symmetric_fraction = 0.5;
    let data = generate(&config).unwrap();
    let spec = Level0Spec::preset("linear4").unwrap();
    let evaluator = Evaluator::new(&data, &spec).unwrap();
    let space = ParamSpace::new(ModelKind::SpikePoissonQch, 4);
    let mcmc = McmcConfig {
        iterations: 420_000,
        burn_in: 20_000,
        thinning: 200,
        seed: 71,
    };
    let chain = mh_sample(&evaluator, &space, &spec, &mcmc, None).unwrap();
    let beta14 = |x: f64| 1.0 - (1.0 - x.clamp(0.0, 1.0)).powi(4);
    let mut checks: Vec<(Quantity, Box<dyn Fn(f64) -> f64>)> = vec![
        (Quantity::Tau, Box::new(|x: f64| (x / 10.0).clamp(0.0, 1.0))),
        (Quantity::Epsilon, Box::new(|x: f64| x.clamp(0.0, 1.0))),
        (Quantity::Lambda, Box::new(|x: f64| (x / 5.0).clamp(0.0, 1.0))),
        (Quantity::W0, Box::new(beta14)),
    ];
    for k in LINEAR4_KINDS {
        checks.push((Quantity::Weight(k), Box::new(beta14)));
    }
    let n = chain.samples.len();
    let crit = ks_critical_001(n);
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, cdf) in checks {
        let d = ks(marginal_cdf(&chain, q).unwrap().values(), cdf);
        pass &= d < crit;
        parts.push(format!("{q} {d:.4}"));
    }
    (
        pass,
        format!(
            "flat likelihood, {n} draws, KS critical {crit:.4}: {} (acceptance {:.3})",
            parts.join(", "),
            chain.acceptance_rate
        ),
    )
}

fn lambda_only() -> (bool, String) {
    let w = Level0Weights::new(vec![0.2, 0.1, 0.3, 0.1]).unwrap();
    let truth = ModelParams::qch(1.5, 0.3, 0.15, w.clone()).unwrap();
    let spec = Level0Spec::linear4(w).unwrap();
    let data = generate(&GeneratorConfig::new(truth.clone(), spec.clone(), 8, 12, 72)).unwrap();
    let evaluator = Evaluator::new(&data, &spec).unwrap();
    let space = ParamSpace::only_free(ModelKind::SpikePoissonQch, &truth, &["lambda"]).unwrap();
    let mcmc = McmcConfig {
        iterations: 220_000,
        burn_in: 20_000,
        thinning: 20,
        seed: 72,
    };
    let chain = mh_sample(&evaluator, &space, &spec, &mcmc, None).unwrap();
    let draws: Vec<f64> = marginal_cdf(&chain, Quantity::Lambda).unwrap().values().to_vec();

    // Flat prior on [0, 5]: the posterior density is the likelihood. Midpoint
    // rule on 10^4 cells.
    let cells = 10_000;
    let h = 5.0 / cells as f64;
    let ll: Vec<f64> = (0..cells)
        .map(|i| {
            let lambda = (i as f64 + 0.5) * h;
            let p = ModelParams::new(
                Behavior::Qch(SpikePoissonParams {
                    tau: 1.5,
                    epsilon: 0.3,
                    lambda,
                }),
                truth.level0_weights.clone(),
            )
            .unwrap();
            evaluator.log_likelihood(&p).unwrap().value
        })
        .collect();
    let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mass: Vec<f64> = ll.iter().map(|x| (x - top).exp()).collect();
    let total: f64 = mass.iter().sum();
    let mut cum = Vec::with_capacity(cells + 1);
    cum.push(0.0);
    for m in &mass {
        cum.push(cum.last().unwrap() + m / total);
    }
    // Piecewise-linear CDF through the cell edges.
    let grid_cdf = |x: f64| {
        let t = (x / h).clamp(0.0, cells as f64);
        let i = (t.floor() as usize).min(cells - 1);
        cum[i] + (cum[i + 1] - cum[i]) * (t - i as f64)
    };
    let d = ks(&draws, grid_cdf);
    (d < 0.05, format!("lambda-only, {} draws: KS to grid {d:.4}", draws.len()))
}

pub fn posterior_sanity() -> Outcome {
    let (a, da) = flat_prior();
    let (b, db) = lambda_only();
    Outcome::new(a && b, format!("{da}\n    {db}"))
}
