//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything; pass criterion numbers
//! after `--` to run a subset.

mod behavior;
mod determinism;
mod estimation;
mod features_oracle;
mod posterior;
mod selection;

use std::io::Write;
use std::time::{Duration, Instant};

pub struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn feature_oracle() -> Outcome {
    let start = Instant::now();
    let (n2, bad2) = features_oracle::enumerate(2, 2);
    let (n3, bad3) = features_oracle::enumerate(3, 3);
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(300);
    Outcome::new(
        bad2 == 0 && bad3 == 0 && elapsed < limit,
        format!(
            "{n2} 2x2 and {n3} 3x3 games, {} mismatching cells, {:.0}s (limit {}s)",
            bad2 + bad3,
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn timed(limit: Duration, f: fn() -> Outcome) -> impl Fn() -> Outcome {
    move || {
        let start = Instant::now();
        let mut o = f();
        let elapsed = start.elapsed();
        if elapsed >= limit {
            o.pass = false;
        }
        o.detail = format!("{} [{:.0}s, limit {}s]", o.detail, elapsed.as_secs_f64(), limit.as_secs());
        o
    }
}

fn main() {
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "feature oracle equivalence", Box::new(feature_oracle)),
        (2, "quantal best response", Box::new(behavior::qbr_checks)),
        (3, "ladder oracle", Box::new(behavior::ladder_oracle)),
        (4, "distribution validity", Box::new(behavior::validity_sweep)),
        (5, "parameter recovery", Box::new(timed(Duration::from_secs(30 * 60), estimation::parameter_recovery))),
        (6, "model ranking on synthetic data", Box::new(timed(Duration::from_secs(2 * 3600), estimation::model_ranking))),
        (7, "posterior sanity", Box::new(posterior::posterior_sanity)),
        (8, "stratification", Box::new(estimation::stratification)),
        (9, "determinism", Box::new(determinism::determinism)),
        (10, "planted feature recovery", Box::new(timed(Duration::from_secs(3600), selection::planted_recovery))),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, run) in &criteria {
        if !wanted.is_empty() && !wanted.contains(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let line = format!(
            "criterion {n:>2} {}: {name} ({:.1}s) — {}\n",
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(line.as_bytes());
        let _ = out.flush();
        if !outcome.pass {
            failed.push(*n);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
