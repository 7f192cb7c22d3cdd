//! Two-player normal-form games, observation data and datasets.
//!
//! Payoff matrices are always indexed `[row action][col action]` for both
//! players. Datasets are read in source units (payoff points) and must be
//! passed through [`normalize_payoffs`] before fitting, so that precision
//! parameters are expressed in inverse expected cents.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`MixedStrategy`].
pub const PROB_TOLERANCE: f64 = 1e-9;

/// One of the two player positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Row,
    Col,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Row, Role::Col];

    pub fn opponent(self) -> Role {
        match self {
            Role::Row => Role::Col,
            Role::Col => Role::Row,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Role::Row => 0,
            Role::Col => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Row => "row",
            Role::Col => "col",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A finite two-player simultaneous-move game.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    id: String,
    row_actions: Vec<String>,
    col_actions: Vec<String>,
    // row-major, rows = row actions
    row_payoffs: Vec<f64>,
    col_payoffs: Vec<f64>,
}

fn flatten(
    id: &str,
    field: &'static str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>> {
    if m.len() != rows {
        return Err(Error::game(
            id,
            field,
            format!("expected {rows} rows, found {}", m.len()),
        ));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::game(
                id,
                field,
                format!("row {r}: expected {cols} columns, found {}", row.len()),
            ));
        }
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::game(id, field, format!("entry [{r}][{c}] is not finite")));
            }
            out.push(v);
        }
    }
    Ok(out)
}

impl NormalFormGame {
    pub fn new(
        id: impl Into<String>,
        row_actions: Vec<String>,
        col_actions: Vec<String>,
        row_payoffs: Vec<Vec<f64>>,
        col_payoffs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let id = id.into();
        if row_actions.is_empty() {
            return Err(Error::game(&id, "row_actions", "at least one action required"));
        }
        if col_actions.is_empty() {
            return Err(Error::game(&id, "col_actions", "at least one action required"));
        }
        let (r, c) = (row_actions.len(), col_actions.len());
        let row_payoffs = flatten(&id, "row_payoffs", &row_payoffs, r, c)?;
        let col_payoffs = flatten(&id, "col_payoffs", &col_payoffs, r, c)?;
        Ok(NormalFormGame {
            id,
            row_actions,
            col_actions,
            row_payoffs,
            col_payoffs,
        })
    }

    /// Build a game with generated action labels (`R0, R1, ..` / `C0, C1, ..`).
    pub fn from_matrices(
        id: impl Into<String>,
        row_payoffs: Vec<Vec<f64>>,
        col_payoffs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let rows = row_payoffs.len();
        let cols = row_payoffs.first().map_or(0, Vec::len);
        let row_actions = (0..rows).map(|i| format!("R{i}")).collect();
        let col_actions = (0..cols).map(|j| format!("C{j}")).collect();
        Self::new(id, row_actions, col_actions, row_payoffs, col_payoffs)
    }

    /// A symmetric game: the column player's matrix is the transpose of `payoffs`.
    pub fn symmetric(id: impl Into<String>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        let n = payoffs.len();
        let transposed = (0..n)
            .map(|i| (0..n).map(|j| payoffs.get(j).and_then(|r| r.get(i)).copied().unwrap_or(f64::NAN)).collect())
            .collect();
        Self::from_matrices(id, payoffs, transposed)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn actions(&self, role: Role) -> &[String] {
        match role {
            Role::Row => &self.row_actions,
            Role::Col => &self.col_actions,
        }
    }

    pub fn num_actions(&self, role: Role) -> usize {
        self.actions(role).len()
    }

    /// Payoff to `player` at the profile (row action, col action).
    #[inline]
    pub fn payoff(&self, player: Role, row: usize, col: usize) -> f64 {
        let k = row * self.col_actions.len() + col;
        match player {
            Role::Row => self.row_payoffs[k],
            Role::Col => self.col_payoffs[k],
        }
    }

    /// Payoff to `player` when it plays `own` and its opponent plays `other`.
    #[inline]
    pub fn own_payoff(&self, player: Role, own: usize, other: usize) -> f64 {
        match player {
            Role::Row => self.payoff(Role::Row, own, other),
            Role::Col => self.payoff(Role::Col, other, own),
        }
    }

    /// Payoff to the opponent of `player` when `player` plays `own` and the opponent `other`.
    #[inline]
    pub fn other_payoff(&self, player: Role, own: usize, other: usize) -> f64 {
        match player {
            Role::Row => self.payoff(Role::Col, own, other),
            Role::Col => self.payoff(Role::Row, other, own),
        }
    }

    /// Payoff matrix of `player` as nested rows, `[row action][col action]`.
    pub fn payoff_matrix(&self, player: Role) -> Vec<Vec<f64>> {
        let cols = self.col_actions.len();
        let flat = match player {
            Role::Row => &self.row_payoffs,
            Role::Col => &self.col_payoffs,
        };
        flat.chunks(cols).map(<[f64]>::to_vec).collect()
    }

    /// Multiply every payoff by `factor`.
    pub fn scaled(&self, factor: f64) -> NormalFormGame {
        let mut g = self.clone();
        g.row_payoffs.iter_mut().for_each(|v| *v *= factor);
        g.col_payoffs.iter_mut().for_each(|v| *v *= factor);
        g
    }

    /// Expected utility of `action` for `player` against the opponent's mixed strategy.
    pub fn expected_utility(
        &self,
        player: Role,
        action: usize,
        opponent: &MixedStrategy,
    ) -> Result<f64> {
        let own_n = self.num_actions(player);
        let other_n = self.num_actions(player.opponent());
        if action >= own_n {
            return Err(Error::IndexOutOfRange {
                what: "actions",
                index: action,
                len: own_n,
            });
        }
        if opponent.len() != other_n {
            return Err(Error::LengthMismatch(format!(
                "opponent strategy has {} entries, opponent has {} actions",
                opponent.len(),
                other_n
            )));
        }
        Ok(self.expected_utility_unchecked(player, action, opponent.probs()))
    }

    #[inline]
    pub(crate) fn expected_utility_unchecked(&self, player: Role, action: usize, opponent: &[f64]) -> f64 {
        opponent
            .iter()
            .enumerate()
            .map(|(b, &p)| p * self.own_payoff(player, action, b))
            .sum()
    }

    /// True iff both players have the same number of actions and the column
    /// player's matrix is exactly the transpose of the row player's.
    pub fn is_symmetric(&self) -> bool {
        let n = self.row_actions.len();
        n == self.col_actions.len()
            && (0..n).all(|i| (0..n).all(|j| self.payoff(Role::Row, i, j) == self.payoff(Role::Col, j, i)))
    }

    /// The same game with action orders permuted; `row_perm[k]` is the old
    /// index of the new k-th row action.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> NormalFormGame {
        let pick = |m: Role| -> Vec<Vec<f64>> {
            row_perm
                .iter()
                .map(|&r| col_perm.iter().map(|&c| self.payoff(m, r, c)).collect())
                .collect()
        };
        NormalFormGame {
            id: self.id.clone(),
            row_actions: row_perm.iter().map(|&r| self.row_actions[r].clone()).collect(),
            col_actions: col_perm.iter().map(|&c| self.col_actions[c].clone()).collect(),
            row_payoffs: pick(Role::Row).concat(),
            col_payoffs: pick(Role::Col).concat(),
        }
    }
}

/// A probability distribution over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidStrategy(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidStrategy(format!("entries sum to {total}")));
        }
        Ok(MixedStrategy(probs))
    }

    /// Wrap a vector already known to be a distribution.
    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        MixedStrategy(probs)
    }

    /// Normalize nonnegative weights; `None` when the total is not positive.
    pub(crate) fn from_weights(mut w: Vec<f64>) -> Option<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= total);
        Some(MixedStrategy(w))
    }

    pub fn uniform(n: usize) -> Self {
        MixedStrategy(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, action: usize) -> Self {
        let mut v = vec![0.0; n];
        v[action] = 1.0;
        MixedStrategy(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for MixedStrategy {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Counts of observed action choices in one game, per role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameObservations {
    pub game_id: String,
    pub row_counts: Vec<u64>,
    pub col_counts: Vec<u64>,
}

impl GameObservations {
    pub fn empty(game: &NormalFormGame) -> Self {
        GameObservations {
            game_id: game.id().to_string(),
            row_counts: vec![0; game.num_actions(Role::Row)],
            col_counts: vec![0; game.num_actions(Role::Col)],
        }
    }

    pub fn counts(&self, role: Role) -> &[u64] {
        match role {
            Role::Row => &self.row_counts,
            Role::Col => &self.col_counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.row_counts.iter().chain(&self.col_counts).sum()
    }

    fn validate(&self, game: &NormalFormGame) -> Result<()> {
        if self.game_id != game.id() {
            return Err(Error::game(
                game.id(),
                "game_id",
                format!("observations reference {}", self.game_id),
            ));
        }
        for (role, field) in [(Role::Row, "row_counts"), (Role::Col, "col_counts")] {
            let (have, want) = (self.counts(role).len(), game.num_actions(role));
            if have != want {
                return Err(Error::game(
                    game.id(),
                    field,
                    format!("dimension mismatch: {have} entries for {want} actions"),
                ));
            }
        }
        Ok(())
    }
}

/// One game of a dataset together with its observations and source study.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub source: String,
    pub game: NormalFormGame,
    pub observations: GameObservations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Expected cents per payoff point; 1 once normalized.
    pub source_units: f64,
    pub entries: Vec<DatasetEntry>,
    pub metadata: Option<serde_json::Value>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, source_units: f64, entries: Vec<DatasetEntry>) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            source_units,
            entries,
            metadata: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.source_units > 0.0 && self.source_units.is_finite()) {
            return Err(Error::Config(format!(
                "dataset {}: cents_per_point must be positive, got {}",
                self.name, self.source_units
            )));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.game.id()) {
                return Err(Error::DuplicateGameId(e.game.id().to_string()));
            }
            e.observations.validate(&e.game)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_observations(&self) -> u64 {
        self.entries.iter().map(|e| e.observations.total()).sum()
    }

    /// Log-likelihood of the uniform prediction, `Σ n_g ln(1/k_g)`.
    pub fn uniform_log_likelihood(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| {
                Role::BOTH.into_iter().map(move |r| {
                    let n: u64 = e.observations.counts(r).iter().sum();
                    -(n as f64) * (e.game.num_actions(r) as f64).ln()
                })
            })
            .sum()
    }

    /// The sub-dataset of entries whose index satisfies `keep`.
    pub fn subset(&self, mut keep: impl FnMut(usize, &DatasetEntry) -> bool) -> Dataset {
        Dataset {
            name: self.name.clone(),
            source_units: self.source_units,
            entries: self
                .entries
                .iter()
                .enumerate()
                .filter(|(i, e)| keep(*i, e))
                .map(|(_, e)| e.clone())
                .collect(),
            metadata: None,
        }
    }

    /// Union of normalized datasets; each entry keeps its source tag.
    pub fn union(name: impl Into<String>, parts: &[Dataset]) -> Result<Dataset> {
        let mut entries = Vec::new();
        for p in parts {
            entries.extend(normalize_payoffs(p).entries);
        }
        Dataset::new(name, 1.0, entries)
    }
}

/// Rescale payoffs into expected cents; the result has `source_units == 1`.
pub fn normalize_payoffs(dataset: &Dataset) -> Dataset {
    let factor = dataset.source_units;
    Dataset {
        name: dataset.name.clone(),
        source_units: 1.0,
        entries: dataset
            .entries
            .iter()
            .map(|e| DatasetEntry {
                source: e.source.clone(),
                game: e.game.scaled(factor),
                observations: e.observations.clone(),
            })
            .collect(),
        metadata: dataset.metadata.clone(),
    }
}

// ---- file schema ----

#[derive(Debug, Serialize, Deserialize)]
struct GameRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    row_actions: Vec<String>,
    col_actions: Vec<String>,
    row_payoffs: Vec<Vec<f64>>,
    col_payoffs: Vec<Vec<f64>>,
    #[serde(default)]
    row_counts: Option<Vec<i64>>,
    #[serde(default)]
    col_counts: Option<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRecord {
    name: String,
    cents_per_point: f64,
    games: Vec<GameRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

fn counts(id: &str, field: &'static str, v: Option<Vec<i64>>, n: usize) -> Result<Vec<u64>> {
    match v {
        None => Ok(vec![0; n]),
        Some(v) => v
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                u64::try_from(c).map_err(|_| Error::game(id, field, format!("entry {i} is negative ({c})")))
            })
            .collect(),
    }
}

impl GameRecord {
    fn into_entry(self, dataset_name: &str) -> Result<DatasetEntry> {
        let game = NormalFormGame::new(
            self.id.clone(),
            self.row_actions,
            self.col_actions,
            self.row_payoffs,
            self.col_payoffs,
        )?;
        let observations = GameObservations {
            game_id: self.id.clone(),
            row_counts: counts(&self.id, "row_counts", self.row_counts, game.num_actions(Role::Row))?,
            col_counts: counts(&self.id, "col_counts", self.col_counts, game.num_actions(Role::Col))?,
        };
        observations.validate(&game)?;
        Ok(DatasetEntry {
            source: self.source.unwrap_or_else(|| dataset_name.to_string()),
            game,
            observations,
        })
    }

    fn from_entry(e: &DatasetEntry, dataset_name: &str) -> Self {
        GameRecord {
            id: e.game.id().to_string(),
            source: (e.source != dataset_name).then(|| e.source.clone()),
            row_actions: e.game.actions(Role::Row).to_vec(),
            col_actions: e.game.actions(Role::Col).to_vec(),
            row_payoffs: e.game.payoff_matrix(Role::Row),
            col_payoffs: e.game.payoff_matrix(Role::Col),
            row_counts: Some(e.observations.row_counts.iter().map(|&c| c as i64).collect()),
            col_counts: Some(e.observations.col_counts.iter().map(|&c| c as i64).collect()),
        }
    }
}

/// Parse a dataset document. Payoffs stay in source units.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let rec: DatasetRecord = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let entries = rec
        .games
        .into_iter()
        .map(|g| g.into_entry(&rec.name))
        .collect::<Result<Vec<_>>>()?;
    let mut ds = Dataset::new(rec.name, rec.cents_per_point, entries)?;
    ds.metadata = rec.metadata;
    Ok(ds)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text)
}

pub fn dataset_to_json(dataset: &Dataset) -> String {
    let rec = DatasetRecord {
        name: dataset.name.clone(),
        cents_per_point: dataset.source_units,
        games: dataset
            .entries
            .iter()
            .map(|e| GameRecord::from_entry(e, &dataset.name))
            .collect(),
        metadata: dataset.metadata.clone(),
    };
    serde_json::to_string_pretty(&rec).expect("dataset serializes")
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dataset_to_json(dataset)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a single game document (the per-game object of the dataset schema;
/// counts optional).
pub fn parse_game(text: &str) -> Result<NormalFormGame> {
    let rec: GameRecord = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(rec.into_entry("")?.game)
}

pub fn game_to_json(game: &NormalFormGame) -> String {
    let entry = DatasetEntry {
        source: String::new(),
        game: game.clone(),
        observations: GameObservations::empty(game),
    };
    let mut rec = GameRecord::from_entry(&entry, "");
    rec.row_counts = None;
    rec.col_counts = None;
    serde_json::to_string_pretty(&rec).expect("game serializes")
}

/// The prisoner's dilemma used throughout the tests: row payoffs
/// `[[3,0],[5,1]]` (actions C, D), column payoffs the transpose.
pub fn prisoners_dilemma() -> NormalFormGame {
    NormalFormGame::new(
        "pd",
        vec!["C".into(), "D".into()],
        vec!["C".into(), "D".into()],
        vec![vec![3.0, 0.0], vec![5.0, 1.0]],
        vec![vec![3.0, 5.0], vec![0.0, 1.0]],
    )
    .expect("valid game")
}

/// Matching pennies: row wins on a match, column on a mismatch.
pub fn matching_pennies() -> NormalFormGame {
    NormalFormGame::from_matrices(
        "pennies",
        vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
        vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
    )
    .expect("valid game")
}
