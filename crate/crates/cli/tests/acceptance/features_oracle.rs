//! Exhaustive feature check against an integer brute-force oracle.

use bgt_l0::features::{feature, CombinerForm, FeatureKind};
use bgt_l0::game::{NormalFormGame, Role};
use rayon::prelude::*;

const INV_FLOOR: f64 = 1e-6;

/// Payoffs of one game, row-major, as small integers.
struct IntGame<'a> {
    rows: usize,
    cols: usize,
    r: &'a [i64],
    c: &'a [i64],
}

impl IntGame<'_> {
    /// (own, other) payoff when `role` plays `a` against `b`.
    fn pay(&self, role: Role, a: usize, b: usize) -> (i64, i64) {
        match role {
            Role::Row => (self.r[a * self.cols + b], self.c[a * self.cols + b]),
            Role::Col => (self.c[b * self.cols + a], self.r[b * self.cols + a]),
        }
    }

    fn sizes(&self, role: Role) -> (usize, usize) {
        match role {
            Role::Row => (self.rows, self.cols),
            Role::Col => (self.cols, self.rows),
        }
    }

    fn symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.r[i * self.cols + j] == self.c[j * self.cols + i]))
    }
}

/// Per-action criterion values straight from the definitions, by
/// enumerating every profile. `None` for max-symmetric on asymmetric games.
fn criterion(kind: FeatureKind, g: &IntGame, role: Role) -> Option<(Vec<i64>, bool)> {
    use FeatureKind::*;
    let (n, m) = g.sizes(role);
    let over = |f: &dyn Fn(usize, usize) -> i64, max: bool| -> Vec<i64> {
        (0..n)
            .map(|a| {
                let mut best = f(a, 0);
                for b in 1..m {
                    let v = f(a, b);
                    if (max && v > best) || (!max && v < best) {
                        best = v;
                    }
                }
                best
            })
            .collect()
    };
    let v = match kind {
        MaxminBinary | MinReal => (over(&|a, b| g.pay(role, a, b).0, false), false),
        MaxmaxBinary | MaxReal => (over(&|a, b| g.pay(role, a, b).0, true), false),
        MinimaxRegretBinary | MaxRegretReal => {
            let regret = |a: usize, b: usize| {
                let best = (0..n).map(|x| g.pay(role, x, b).0).max().unwrap();
                best - g.pay(role, a, b).0
            };
            (over(&regret, true), true)
        }
        FairBinary | UnfairReal => (
            over(
                &|a, b| {
                    let (u, v) = g.pay(role, a, b);
                    (u - v).abs()
                },
                false,
            ),
            true,
        ),
        WelfareBinary | WelfareReal => (
            over(
                &|a, b| {
                    let (u, v) = g.pay(role, a, b);
                    u + v
                },
                true,
            ),
            false,
        ),
        MaxSymmetricBinary | SymmetricReal => {
            if !g.symmetric() {
                return None;
            }
            ((0..n).map(|a| g.pay(role, a, a).0).collect(), false)
        }
    };
    Some(v)
}

/// Expected feature values given the kind's criterion values.
fn oracle(kind: FeatureKind, combiner: CombinerForm, crit: &Option<(Vec<i64>, bool)>, g: &IntGame, role: Role) -> Vec<f64> {
    let (n, m) = g.sizes(role);
    let Some((values, minimized)) = crit else {
        return vec![0.0; n];
    };
    let minimized = *minimized;
    if kind.is_binary() {
        let target = if minimized { *values.iter().min().unwrap() } else { *values.iter().max().unwrap() };
        return values.iter().map(|&v| if v == target { 1.0 } else { 0.0 }).collect();
    }
    match (minimized, combiner) {
        (true, CombinerForm::Linear) => values
            .iter()
            .map(|&v| if v == 0 { 1.0 / INV_FLOOR } else { 1.0 / v as f64 })
            .collect(),
        (true, CombinerForm::Logit) => values.iter().map(|&v| -(v as f64)).collect(),
        (false, CombinerForm::Logit) => values.iter().map(|&v| v as f64).collect(),
        (false, CombinerForm::Linear) => {
            let welfare = matches!(kind, FeatureKind::WelfareReal);
            let mut shift = i64::MAX;
            for a in 0..n {
                for b in 0..m {
                    let (u, v) = g.pay(role, a, b);
                    shift = shift.min(if welfare { u + v } else { u });
                }
            }
            values.iter().map(|&v| (v - shift) as f64).collect()
        }
    }
}

fn agree(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

/// Decode game number `index` of the `3^(2·rows·cols)` games into payoff digits.
fn decode(mut index: u64, digits: &mut [i64]) {
    for d in digits.iter_mut() {
        *d = (index % 3) as i64;
        index /= 3;
    }
}

/// Number of (game, role, variant, combiner) cells that disagree in games
/// `range` of the `rows × cols` enumeration.
fn mismatches(rows: usize, cols: usize, range: std::ops::Range<u64>) -> u64 {
    let cells = rows * cols;
    let row_names: Vec<String> = (0..rows).map(|i| format!("R{i}")).collect();
    let col_names: Vec<String> = (0..cols).map(|j| format!("C{j}")).collect();
    let mut digits = vec![0i64; 2 * cells];
    let mut bad = 0;
    for index in range {
        decode(index, &mut digits);
        let (r, c) = digits.split_at(cells);
        let to_matrix = |v: &[i64]| -> Vec<Vec<f64>> { v.chunks(cols).map(|row| row.iter().map(|&x| x as f64).collect()).collect() };
        let game = NormalFormGame::new("", row_names.clone(), col_names.clone(), to_matrix(r), to_matrix(c)).expect("valid game");
        let ig = IntGame { rows, cols, r, c };
        for role in Role::BOTH {
            for binary in FeatureKind::BINARY {
                let crit = criterion(binary, &ig, role);
                let real = binary.counterpart();
                for (kind, comb) in [
                    (binary, CombinerForm::Linear),
                    (real, CombinerForm::Linear),
                    (real, CombinerForm::Logit),
                ] {
                    let got = feature(kind, comb, &game, role).expect("feature computes");
                    if !agree(got.values(), &oracle(kind, comb, &crit, &ig, role)) {
                        bad += 1;
                    }
                }
            }
        }
    }
    bad
}

/// Every game of the given shape with payoffs in {0,1,2}; returns
/// (games checked, mismatching cells).
pub fn enumerate(rows: usize, cols: usize) -> (u64, u64) {
    let total = 3u64.pow(2 * (rows * cols) as u32);
    let chunk = 1 << 16;
    let bad = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|k| mismatches(rows, cols, k * chunk..((k + 1) * chunk).min(total)))
        .sum();
    (total, bad)
}

/// Oracle value of a binary feature for an integer-payoff game.
pub fn binary(kind: FeatureKind, rows: usize, cols: usize, r: &[i64], c: &[i64], role: Role) -> Vec<f64> {
    let g = IntGame { rows, cols, r, c };
    oracle(kind, CombinerForm::Linear, &criterion(kind, &g, role), &g, role)
}
