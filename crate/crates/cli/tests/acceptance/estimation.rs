//! Parameter recovery, the qualitative model ranking on synthetic data, and
//! fold stratification.

use bgt_l0::behavioral::{Behavior, ModelKind, ModelParams};
use bgt_l0::estimation::{
    cross_validate, fit_mle, intervals_disjoint, stratified_folds, CvConfig, CvReport, Evaluator, FitOptions,
    ParamSpace,
};
use bgt_l0::game::{Dataset, DatasetEntry, GameObservations, NormalFormGame};
use bgt_l0::level0::{Level0Spec, Level0Weights};
use bgt_l0::seed;
use bgt_l0::synth::{generate, GeneratorConfig};
use rand::Rng;

use crate::Outcome;

const TRUTH_W4: [f64; 4] = [0.2, 0.1, 0.3, 0.1];

pub fn parameter_recovery() -> Outcome {
    let truth = ModelParams::qch(1.0, 0.4, 0.2, Level0Weights::new(TRUTH_W4.to_vec()).unwrap()).unwrap();
    let level0 = Level0Spec::linear4(truth.level0_weights.clone()).unwrap();
    let mut hits = 0;
    let mut lines = Vec::new();
    for s in 0..10u64 {
        // 20 games × 2 roles × 125 = 5000 observations.
        // Max-symmetric is zero on every asymmetric game, and the linear form
        // is invariant to the scale of the weights, so without symmetric games
        // its weight is not identified.
        let mut config = GeneratorConfig::new(truth.clone(), level0.clone(), 20, 125, 1000 + s);
        config.symmetric_fraction = 0.5;
        let data = generate(&config).unwrap();
        assert_eq!(data.total_observations(), 5000);
        let fitted = fit_mle(&data, ModelKind::SpikePoissonQch, &level0, 5000, s).unwrap();
        // Positive means the optimizer found at least the truth's likelihood.
        let gain = fitted.train_log_likelihood - Evaluator::new(&data, &level0).unwrap().log_likelihood(&truth).unwrap().value;
        let Behavior::Qch(p) = &fitted.params.behavior else { unreachable!() };
        let w = fitted.params.level0_weights.values();
        let ok = (p.tau - 1.0).abs() <= 0.15
            && (p.epsilon - 0.4).abs() <= 0.1
            && (p.lambda - 0.2).abs() <= 0.15
            && w.iter().zip(TRUTH_W4).all(|(a, b)| (a - b).abs() <= 0.15);
        hits += ok as usize;
        lines.push(format!(
            "seed {s}: tau {:.3} eps {:.3} lambda {:.3} w [{}], LL over truth {gain:+.2}{}",
            p.tau,
            p.epsilon,
            p.lambda,
            w.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "),
            if ok { "" } else { " (outside)" }
        ));
    }
    Outcome::new(hits >= 9, format!("{hits}/10 seeds within tolerance\n    {}", lines.join("\n    ")))
}

pub fn model_ranking() -> Outcome {
    // Most of the level-0 signal sits in the real max/min payoff features,
    // which only linear8 can express.
    let w8 = [0.1, 0.05, 0.1, 0.05, 0.25, 0.2, 0.05, 0.02];
    let truth = ModelParams::qch(1.0, 0.5, 0.3, Level0Weights::new(w8.to_vec()).unwrap()).unwrap();
    let truth_spec = Level0Spec::linear8(truth.level0_weights.clone()).unwrap();
    let mut config = GeneratorConfig::new(truth, truth_spec, 60, 200, 6);
    config.symmetric_fraction = 0.5;
    let data = generate(&config).unwrap();

    let cv = CvConfig {
        rounds: 5,
        folds: 10,
        // Level-k with linear8 has 13 free coordinates.
        fit: FitOptions::with_budget(20_000),
        seed: 6,
    };
    let mut pass = true;
    let mut lines = Vec::new();
    for kind in ModelKind::ALL {
        let report = |name: &str| -> CvReport {
            let spec = Level0Spec::preset(name).unwrap();
            cross_validate(&data, &ParamSpace::new(kind, spec.kinds.len()), &spec, &cv).unwrap()
        };
        let (u, l4, l8) = (report("uniform"), report("linear4"), report("linear8"));
        let significant = intervals_disjoint((u.mean, u.half_width), (l4.mean, l4.half_width));
        let ok = l8.mean >= l4.mean && l4.mean > u.mean && significant;
        pass &= ok;
        let show = |r: &CvReport| format!("{:.1} ± {:.1}", r.mean, r.half_width.unwrap_or(f64::NAN));
        lines.push(format!(
            "{}: uniform {}, linear4 {}, linear8 {}; uniform/linear4 significant: {significant}{}",
            kind.name(),
            show(&u),
            show(&l4),
            show(&l8),
            if ok { "" } else { " (ordering violated)" }
        ));
    }
    Outcome::new(pass, lines.join("\n    "))
}

pub fn stratification() -> Outcome {
    let mut violations = 0;
    for s in 0..1000u64 {
        let mut rng = seed::rng(8, &[s]);
        let n_sources = rng.random_range(1..=5);
        let mut entries = Vec::new();
        for src in 0..n_sources {
            for i in 0..rng.random_range(1..=40) {
                let g = NormalFormGame::new(format!("s{src}-{i}"), vec!["a".into()], vec!["x".into(), "y".into()], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]])
                    .unwrap();
                entries.push(DatasetEntry {
                    source: format!("source{src}"),
                    observations: GameObservations::empty(&g),
                    game: g,
                });
            }
        }
        let data = Dataset::new("strat", 1.0, entries).unwrap();
        let folds = rng.random_range(2..=10);
        let a = stratified_folds(&data, folds, s).unwrap();
        for sizes in a.per_source.values() {
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            if hi - lo > 1 {
                violations += 1;
            }
        }
        // The recorded sizes must match the assignment itself.
        for (src, sizes) in &a.per_source {
            for (k, &size) in sizes.iter().enumerate() {
                let actual = data
                    .entries
                    .iter()
                    .filter(|e| &e.source == src && a.fold_of_game[e.game.id()] == k)
                    .count();
                if actual != size {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(violations == 0, format!("{violations} violations over 1000 seeds"))
}
