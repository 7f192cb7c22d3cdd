//! Covariance matrix adaptation evolution strategy, minimizing.
//!
//! Standard (μ/μ_w, λ) settings with rank-one and rank-μ covariance updates
//! and cumulative step-size adaptation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct CmaOutcome {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evaluations: usize,
    /// Best value seen so far, after each generation.
    pub trace: Vec<f64>,
}

/// Stop once the search distribution has collapsed below this in every
/// coordinate.
const TOL_X: f64 = 1e-10;
/// Stop when recent generation bests and the current population span less
/// than this.
const TOL_FUN: f64 = 1e-11;

/// Minimize `f` from `x0` with initial step `sigma0`, using at most `budget`
/// evaluations.
pub fn minimize<R: Rng + ?Sized>(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    sigma0: f64,
    budget: usize,
    rng: &mut R,
) -> CmaOutcome {
    let n = x0.len();
    let mut out = CmaOutcome {
        best_x: x0.to_vec(),
        best_f: f64::INFINITY,
        evaluations: 0,
        trace: Vec::new(),
    };
    if budget == 0 {
        return out;
    }
    out.best_f = f(x0);
    out.evaluations = 1;
    out.trace.push(out.best_f);
    if n == 0 {
        return out;
    }

    let nf = n as f64;
    let lambda = 4 + (3.0 * nf.ln()).floor() as usize;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
    let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = sigma0;
    let mut pc = DVector::zeros(n);
    let mut ps = DVector::zeros(n);
    let mut cov = DMatrix::identity(n, n);
    let mut basis = DMatrix::identity(n, n);
    let mut scale = DVector::from_element(n, 1.0);
    let mut inv_sqrt = DMatrix::identity(n, n);
    let mut history: Vec<f64> = Vec::new();
    let history_len = 10 + (30.0 * nf / lambda as f64).ceil() as usize;
    let mut generation = 0usize;

    while out.evaluations < budget {
        let count = lambda.min(budget - out.evaluations);
        let mut pop: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(count);
        for _ in 0..count {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y: DVector<f64> = &basis * scale.component_mul(&z);
            let x: DVector<f64> = &mean + sigma * &y;
            let fx = f(x.as_slice());
            out.evaluations += 1;
            let fx = if fx.is_nan() { f64::INFINITY } else { fx };
            if fx < out.best_f {
                out.best_f = fx;
                out.best_x = x.as_slice().to_vec();
            }
            pop.push((fx, x, y));
        }
        out.trace.push(out.best_f);
        if count < lambda {
            break;
        }
        pop.sort_by(|a, b| a.0.total_cmp(&b.0));
        generation += 1;

        let old_mean = mean.clone();
        let mut y_w = DVector::zeros(n);
        for (w, (_, _, y)) in weights.iter().zip(&pop) {
            y_w += *w * y;
        }
        mean = &old_mean + sigma * &y_w;

        ps = (1.0 - cs) * &ps + (cs * (2.0 - cs) * mueff).sqrt() * (&inv_sqrt * &y_w);
        let ps_norm = ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - cs).powi(2 * generation as i32)).sqrt() / chi_n < 1.4 + 2.0 / (nf + 1.0);
        let hsig_f = if hsig { 1.0 } else { 0.0 };
        pc = (1.0 - cc) * &pc + hsig_f * (cc * (2.0 - cc) * mueff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, (_, _, y)) in weights.iter().zip(&pop) {
            rank_mu += *w * y * y.transpose();
        }
        let delta_h = (1.0 - hsig_f) * cc * (2.0 - cc);
        cov = (1.0 - c1 - cmu) * &cov + c1 * (&pc * pc.transpose() + delta_h * &cov) + cmu * rank_mu;
        sigma *= ((cs / damps) * (ps_norm / chi_n - 1.0)).exp();
        if !sigma.is_finite() || sigma <= 0.0 {
            break;
        }

        // symmetrize, then refresh B, D and C^{-1/2}
        cov = (&cov + cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(cov.clone());
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            break;
        }
        basis = eig.eigenvectors;
        scale = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
        inv_sqrt = &basis * DMatrix::from_diagonal(&scale.map(|d| 1.0 / d)) * basis.transpose();

        history.push(pop[0].0);
        if history.len() > history_len {
            history.remove(0);
        }
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            hi - lo
        };
        let pop_span = span(&mut pop.iter().map(|p| p.0));
        let hist_span = span(&mut history.iter().copied());
        if history.len() == history_len && hist_span.max(pop_span) < TOL_FUN {
            break;
        }
        let max_sd = (0..n).map(|i| cov[(i, i)].sqrt()).fold(0.0, f64::max) * sigma;
        if max_sd < TOL_X {
            break;
        }
    }
    out
}
