//! Forward selection recovers a planted level-0 feature set.

use bgt_l0::behavioral::{ModelKind, ModelParams};
use bgt_l0::estimation::FitOptions;
use bgt_l0::level0::{Level0Spec, Level0Weights, LINEAR4_KINDS};
use bgt_l0::selection::{forward_select, label, SelectionConfig};
use bgt_l0::features::FeatureKind;
use bgt_l0::synth::{generate, GeneratorConfig};

use crate::Outcome;

pub fn planted_recovery() -> Outcome {
    // Strong signal: most play is level-0, every planted feature carries
    // weight, and half the games are symmetric so max-symmetric is informative.
    let w = Level0Weights::new(vec![0.2, 0.2, 0.2, 0.2]).unwrap();
    let truth = ModelParams::qch(1.0, 0.6, 0.2, w.clone()).unwrap();
    let spec = Level0Spec::linear4(w).unwrap();
    let planted: Vec<FeatureKind> = FeatureKind::ALL.into_iter().filter(|k| LINEAR4_KINDS.contains(k)).collect();

    let mut hits = 0;
    let mut lines = Vec::new();
    for s in 0..10u64 {
        let mut config = GeneratorConfig::new(truth.clone(), spec.clone(), 40, 300, 100 + s);
        config.symmetric_fraction = 0.5;
        let data = generate(&config).unwrap();
        // Three rounds already validate every game three times; the sets
        // have at most five features, so one 1500-evaluation start converges.
        let config = SelectionConfig {
            rounds: 3,
            fit: FitOptions {
                budget: 1500,
                restarts: 1,
                ..FitOptions::default()
            },
            ..SelectionConfig::binary(ModelKind::SpikePoissonQch, s)
        };
        let trace = forward_select(&data, &config).unwrap();
        let ok = trace.selected() == planted.as_slice();
        hits += ok as usize;
        lines.push(format!("seed {s}: selected {}", label(trace.selected())));
    }
    Outcome::new(
        hits >= 8,
        format!("{hits}/10 seeds selected the planted set {}\n    {}", label(&planted), lines.join("\n    ")),
    )
}
