//! Quantal response, the QCH ladder against a straight-line oracle, and a
//! validity sweep over random inputs.

use bgt_l0::behavioral::{predict_both, qbr, qch_predict, Behavior, ModelParams, SpikePoissonParams};
use bgt_l0::features::{CombinerForm, FeatureKind, Transforms};
use bgt_l0::game::{matching_pennies, MixedStrategy, NormalFormGame, Role};
use bgt_l0::level0::{Level0Spec, Level0Weights, LINEAR4_KINDS};
use bgt_l0::seed;
use rand::Rng;

use crate::features_oracle;
use crate::Outcome;

/// Uniform draw from the `n`-simplex.
fn simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn int_game<R: Rng>(rng: &mut R, rows: usize, cols: usize, hi: i64) -> (Vec<i64>, Vec<i64>) {
    let mut draw = || (0..rows * cols).map(|_| rng.random_range(0..=hi)).collect::<Vec<_>>();
    (draw(), draw())
}

fn to_game(rows: usize, cols: usize, r: &[i64], c: &[i64]) -> NormalFormGame {
    let m = |v: &[i64]| v.chunks(cols).map(|x| x.iter().map(|&p| p as f64).collect()).collect();
    debug_assert_eq!(r.len(), rows * cols);
    NormalFormGame::from_matrices("g", m(r), m(c)).unwrap()
}

pub fn qbr_checks() -> Outcome {
    let mut rng = seed::rng(2, &[]);
    let mut failures = Vec::new();

    // λ = 0: exactly uniform, whatever the game and the belief.
    for _ in 0..1000 {
        let (rows, cols) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let (r, c) = int_game(&mut rng, rows, cols, 100);
        let g = to_game(rows, cols, &r, &c);
        let belief = MixedStrategy::new(simplex(&mut rng, cols)).unwrap();
        let p = qbr(&g, Role::Row, &belief, 0.0);
        if p.probs().iter().any(|&x| x != 1.0 / rows as f64) {
            failures.push(format!("lambda=0 not uniform: {:?}", p.probs()));
            break;
        }
    }

    // λ = ln 3 on utilities (1, 0).
    let g = NormalFormGame::from_matrices("u", vec![vec![1.0], vec![0.0]], vec![vec![0.0], vec![0.0]]).unwrap();
    let p = qbr(&g, Role::Row, &MixedStrategy::pure(1, 0), 3f64.ln());
    let dev = (p[0] - 0.75).abs().max((p[1] - 0.25).abs());
    if dev > 1e-12 {
        failures.push(format!("lambda=ln3 gave {:?} (deviation {dev:e})", p.probs()));
    }

    // λ = 1e4: the strict argmax gets at least 1 − 1e-3 when it leads by a cent or more.
    let mut checked = 0;
    let mut worst: f64 = 1.0;
    let gap_one = NormalFormGame::from_matrices("gap", vec![vec![1.0], vec![0.0], vec![0.0]], vec![vec![0.0]; 3]).unwrap();
    let p = qbr(&gap_one, Role::Row, &MixedStrategy::pure(1, 0), 1e4);
    worst = worst.min(p[0]);
    checked += 1;
    while checked < 10_000 {
        let (rows, cols) = (rng.random_range(2..=5), rng.random_range(1..=5));
        let (r, c) = int_game(&mut rng, rows, cols, 100);
        let g = to_game(rows, cols, &r, &c);
        let belief = if rng.random::<bool>() {
            MixedStrategy::pure(cols, rng.random_range(0..cols))
        } else {
            MixedStrategy::new(simplex(&mut rng, cols)).unwrap()
        };
        let eu: Vec<f64> = (0..rows)
            .map(|a| (0..cols).map(|b| r[a * cols + b] as f64 * belief[b]).sum())
            .collect();
        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by(|&a, &b| eu[b].total_cmp(&eu[a]));
        if eu[order[0]] - eu[order[1]] < 1.0 {
            continue;
        }
        worst = worst.min(qbr(&g, Role::Row, &belief, 1e4)[order[0]]);
        checked += 1;
    }
    if worst < 1.0 - 1e-3 {
        failures.push(format!("lambda=1e4 argmax mass {worst}"));
    }

    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("uniform at 0, ln3 deviation {dev:.1e}, min argmax mass at 1e4 over {checked} cases {worst}")
        } else {
            failures.join("; ")
        },
    )
}

/// Spike-Poisson QCH written out directly: level weights from the Poisson
/// pmf, truncated at the first level where the untruncated mass reaches
/// 1 − 1e-9 (at most 50) and renormalized; level m answers the normalized
/// mixture of the opponent's levels below m with a logit response.
fn qch_oracle(rows: usize, cols: usize, r: &[i64], c: &[i64], tau: f64, eps: f64, lambda: f64, w: &[f64]) -> [Vec<f64>; 2] {
    let factorial = |l: usize| (1..=l).map(|k| k as f64).product::<f64>();
    let raw = |l: usize| (1.0 - eps) * tau.powi(l as i32) * (-tau).exp() / factorial(l) + if l == 0 { eps } else { 0.0 };
    let mut top = 0;
    let mut cum = raw(0);
    while cum < 1.0 - 1e-9 && top < 50 {
        top += 1;
        cum += raw(top);
    }
    let total: f64 = (0..=top).map(raw).sum();
    let g: Vec<f64> = (0..=top).map(|l| raw(l) / total).collect();

    let level0 = |role: Role| -> Vec<f64> {
        let n = if role == Role::Row { rows } else { cols };
        let w0 = 1.0 - w.iter().sum::<f64>();
        let mut score = vec![w0; n];
        for (k, &kind) in LINEAR4_KINDS.iter().enumerate() {
            let mut f = features_oracle::binary(kind, rows, cols, r, c, role);
            if f.iter().all(|&x| x == f[0]) {
                f = vec![0.0; n];
            }
            let s: f64 = f.iter().sum();
            if s > 0.0 {
                f.iter_mut().for_each(|x| *x /= s);
            }
            for a in 0..n {
                score[a] += w[k] * f[a];
            }
        }
        let s: f64 = score.iter().sum();
        if s > 0.0 {
            score.into_iter().map(|x| x / s).collect()
        } else {
            vec![1.0 / n as f64; n]
        }
    };
    let respond = |role: Role, belief: &[f64]| -> Vec<f64> {
        let eu: Vec<f64> = match role {
            Role::Row => (0..rows).map(|a| (0..cols).map(|b| r[a * cols + b] as f64 * belief[b]).sum()).collect(),
            Role::Col => (0..cols).map(|b| (0..rows).map(|a| c[a * cols + b] as f64 * belief[a]).sum()).collect(),
        };
        let m = eu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = eu.iter().map(|u| (lambda * (u - m)).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|x| x / s).collect()
    };

    let mut levels: Vec<[Vec<f64>; 2]> = vec![[level0(Role::Row), level0(Role::Col)]];
    for m in 1..=top {
        let mix = |i: usize| -> Vec<f64> {
            let mass: f64 = g[..m].iter().sum();
            let n = levels[0][i].len();
            (0..n).map(|a| (0..m).map(|l| g[l] * levels[l][i][a]).sum::<f64>() / mass).collect()
        };
        let (row_belief, col_belief) = (mix(1), mix(0));
        levels.push([respond(Role::Row, &row_belief), respond(Role::Col, &col_belief)]);
    }
    [0, 1].map(|i| {
        let n = levels[0][i].len();
        (0..n).map(|a| (0..=top).map(|l| g[l] * levels[l][i][a]).sum()).collect()
    })
}

pub fn ladder_oracle() -> Outcome {
    let mut rng = seed::rng(3, &[]);
    let mut max_dev: f64 = 0.0;
    for _ in 0..100 {
        let (r, c) = int_game(&mut rng, 3, 3, 100);
        let game = to_game(3, 3, &r, &c);
        let tau = rng.random_range(0.0..5.0);
        let eps = rng.random_range(0.0..1.0);
        let lambda = rng.random_range(0.0..1.0);
        let w: Vec<f64> = simplex(&mut rng, 5)[1..].to_vec();
        let params = ModelParams::qch(tau, eps, lambda, Level0Weights::new(w.clone()).unwrap()).unwrap();
        let spec = Level0Spec::preset("linear4").unwrap();
        let want = qch_oracle(3, 3, &r, &c, tau, eps, lambda, &w);
        for role in Role::BOTH {
            let got = qch_predict(&game, role, &params, &spec).unwrap();
            for (x, y) in got.probs().iter().zip(&want[role.index()]) {
                max_dev = max_dev.max((x - y).abs());
            }
        }
    }

    let mp = matching_pennies();
    let mut non_uniform = 0;
    for i in 0..300 {
        let (spec, n) = match i % 3 {
            0 => (Level0Spec::uniform(), 0),
            1 => (Level0Spec::preset("linear4").unwrap(), 4),
            _ => (Level0Spec::preset("linear8").unwrap(), 8),
        };
        let w = simplex(&mut rng, n + 1)[1..].to_vec();
        let params = ModelParams::qch(
            rng.random_range(0.0..10.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..5.0),
            Level0Weights::new(w).unwrap(),
        )
        .unwrap();
        for role in Role::BOTH {
            if qch_predict(&mp, role, &params, &spec).unwrap().probs() != [0.5, 0.5] {
                non_uniform += 1;
            }
        }
    }
    Outcome::new(
        max_dev < 1e-10 && non_uniform == 0,
        format!("max deviation {max_dev:.2e} over 100 games; {non_uniform} non-uniform matching-pennies predictions in 600"),
    )
}

fn random_spec<R: Rng>(rng: &mut R) -> Level0Spec {
    let spec = match rng.random_range(0..4) {
        0 => Level0Spec::uniform(),
        1 => Level0Spec::preset("linear4").unwrap(),
        2 => Level0Spec::preset("linear8").unwrap(),
        _ => loop {
            // Redraw until the combination is a valid spec.
            let kinds: Vec<FeatureKind> = FeatureKind::ALL.into_iter().filter(|_| rng.random::<bool>()).collect();
            let n = kinds.len();
            let combiner = if rng.random::<bool>() { CombinerForm::Linear } else { CombinerForm::Logit };
            let transforms = Transforms {
                informativeness: rng.random(),
                normalized_activation: rng.random(),
            };
            if let Ok(spec) = Level0Spec::new("random", combiner, kinds, transforms, Level0Weights::zeros(n)) {
                break spec;
            }
        },
    };
    let w = simplex(rng, spec.kinds.len() + 1)[1..].to_vec();
    spec.with_weights(Level0Weights::new(w).unwrap()).unwrap()
}

fn random_real_game<R: Rng>(rng: &mut R) -> NormalFormGame {
    let rows = rng.random_range(1..=5);
    let symmetric = rng.random::<f64>() < 0.3;
    let cols = if symmetric { rows } else { rng.random_range(1..=5) };
    let mut draw = || -> Vec<Vec<f64>> {
        (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-100.0..300.0)).collect()).collect()
    };
    if symmetric {
        NormalFormGame::symmetric("s", draw()).unwrap()
    } else {
        let (r, c) = (draw(), draw());
        NormalFormGame::from_matrices("a", r, c).unwrap()
    }
}

pub fn validity_sweep() -> Outcome {
    let mut rng = seed::rng(4, &[]);
    let mut violations = Vec::new();
    for i in 0..10_000 {
        let game = random_real_game(&mut rng);
        let spec = random_spec(&mut rng);
        let behavior = match rng.random_range(0..3) {
            0 => Behavior::Qch(SpikePoissonParams {
                tau: rng.random_range(0.0..10.0),
                epsilon: rng.random_range(0.0..=1.0),
                lambda: if rng.random::<f64>() < 0.1 { 1e3 } else { rng.random_range(0.0..5.0) },
            }),
            1 => Behavior::PoissonCh {
                tau: rng.random_range(0.0..10.0),
                epsilon: rng.random_range(0.0..=1.0),
            },
            _ => Behavior::LevelK {
                population: simplex(&mut rng, 5),
                delta: rng.random_range(0.0..=1.0),
            },
        };
        let params = ModelParams::new(behavior, spec.weights.clone()).unwrap();
        match predict_both(&game, &params, &spec) {
            Ok(pair) => {
                for p in pair {
                    let s: f64 = p.probs().iter().sum();
                    if p.probs().iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                        violations.push(format!("triple {i}: {:?}", p.probs()));
                    }
                }
            }
            Err(e) => violations.push(format!("triple {i}: {e}")),
        }
    }
    Outcome::new(
        violations.is_empty(),
        format!(
            "{} violations in 10000 triples{}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    )
}
