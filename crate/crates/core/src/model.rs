//! Primitive network data: arrival rates, pool capacities and per-capacity
//! service rates, plus the activity structure derived from them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Absolute tolerance used for every zero/sign classification in the crate.
pub const TOL: f64 = 1e-9;

/// Index of a customer class (0-based; displayed as `index + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassId(pub usize);

/// Index of a service pool (0-based; displayed as `I + index + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StationId(pub usize);

/// A class-station pair.
pub type Edge = (ClassId, StationId);

/// Vertex of the bipartite class/station graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Vertex {
    Class(ClassId),
    Station(StationId),
}

impl Vertex {
    /// Conventional label: classes are `1..=I`, stations `I+1..=I+J`.
    pub fn label(self, classes: usize) -> usize {
        match self {
            Vertex::Class(ClassId(i)) => i + 1,
            Vertex::Station(StationId(j)) => classes + j + 1,
        }
    }
}

/// Raw model data exactly as it appears in a model file.
///
/// ```json
/// {"classes": 2, "stations": 3, "lambda": [8, 4], "nu": [1, 1, 1],
///  "mu": [[3, 10, 1], [1, 4, 2]]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawModel {
    pub classes: usize,
    pub stations: usize,
    pub lambda: Vec<f64>,
    pub nu: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
}

/// A validated static fluid model `(lambda, nu, mu)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "RawModel")]
pub struct NetworkModel {
    lambda: Vec<f64>,
    nu: Vec<f64>,
    mu: Vec<Vec<f64>>,
}

impl From<NetworkModel> for RawModel {
    fn from(m: NetworkModel) -> Self {
        RawModel {
            classes: m.classes(),
            stations: m.stations(),
            lambda: m.lambda,
            nu: m.nu,
            mu: m.mu,
        }
    }
}

impl<'de> Deserialize<'de> for NetworkModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawModel::deserialize(d)?;
        validate_model(raw).map_err(serde::de::Error::custom)
    }
}

/// Checks dimensions and signs and returns a [`NetworkModel`].
pub fn validate_model(raw: RawModel) -> Result<NetworkModel, ModelError> {
    let RawModel {
        classes,
        stations,
        lambda,
        nu,
        mu,
    } = raw;
    if classes == 0 || stations == 0 {
        return Err(ModelError::DimensionMismatch(format!(
            "need at least one class and one station, got I={classes}, J={stations}"
        )));
    }
    if lambda.len() != classes {
        return Err(ModelError::DimensionMismatch(format!(
            "lambda has {} entries, expected {classes}",
            lambda.len()
        )));
    }
    if nu.len() != stations {
        return Err(ModelError::DimensionMismatch(format!(
            "nu has {} entries, expected {stations}",
            nu.len()
        )));
    }
    if mu.len() != classes {
        return Err(ModelError::DimensionMismatch(format!(
            "mu has {} rows, expected {classes}",
            mu.len()
        )));
    }
    if let Some((i, row)) = mu.iter().enumerate().find(|(_, r)| r.len() != stations) {
        return Err(ModelError::DimensionMismatch(format!(
            "mu row {} has {} entries, expected {stations}",
            i + 1,
            row.len()
        )));
    }
    for (i, &l) in lambda.iter().enumerate() {
        if !(l > 0.0 && l.is_finite()) {
            return Err(ModelError::NonPositiveRate(format!("lambda[{}] = {l}", i + 1)));
        }
    }
    for (j, &v) in nu.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ModelError::NonPositiveRate(format!("nu[{}] = {v}", j + 1)));
        }
    }
    for (i, row) in mu.iter().enumerate() {
        for (j, &m) in row.iter().enumerate() {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(ModelError::NegativeServiceRate(format!(
                    "mu[{}][{}] = {m}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(NetworkModel { lambda, nu, mu })
}

impl NetworkModel {
    /// Convenience constructor that validates its input.
    pub fn new(lambda: Vec<f64>, nu: Vec<f64>, mu: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        validate_model(RawModel {
            classes: lambda.len(),
            stations: nu.len(),
            lambda,
            nu,
            mu,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let raw: RawModel = serde_json::from_str(text).map_err(|e| ModelError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        validate_model(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawModel::from(self.clone())).expect("model serializes")
    }

    pub fn classes(&self) -> usize {
        self.lambda.len()
    }

    pub fn stations(&self) -> usize {
        self.nu.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn mu(&self) -> &[Vec<f64>] {
        &self.mu
    }

    pub fn rate(&self, (ClassId(i), StationId(j)): Edge) -> f64 {
        self.mu[i][j]
    }

    pub fn is_activity(&self, edge: Edge) -> bool {
        self.rate(edge) > 0.0
    }

    pub fn total_arrival_rate(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// All `(class, station)` pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = Edge> + '_ {
        let stations = self.stations();
        (0..self.classes())
            .flat_map(move |i| (0..stations).map(move |j| (ClassId(i), StationId(j))))
    }

    /// Applies a relabeling: class `i` becomes `class_perm[i]`, station `j`
    /// becomes `station_perm[j]`.
    pub fn permuted(&self, class_perm: &[usize], station_perm: &[usize]) -> NetworkModel {
        let (ni, nj) = (self.classes(), self.stations());
        let mut lambda = vec![0.0; ni];
        let mut nu = vec![0.0; nj];
        let mut mu = vec![vec![0.0; nj]; ni];
        for i in 0..ni {
            lambda[class_perm[i]] = self.lambda[i];
            for j in 0..nj {
                mu[class_perm[i]][station_perm[j]] = self.mu[i][j];
            }
        }
        for j in 0..nj {
            nu[station_perm[j]] = self.nu[j];
        }
        NetworkModel { lambda, nu, mu }
    }
}

impl fmt::Display for NetworkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "I = {}, J = {}", self.classes(), self.stations())?;
        writeln!(f, "lambda = {:?}", self.lambda)?;
        writeln!(f, "nu     = {:?}", self.nu)?;
        for (i, row) in self.mu.iter().enumerate() {
            writeln!(f, "mu[{}]  = {:?}", i + 1, row)?;
        }
        Ok(())
    }
}

/// The activities `E_a`: pairs with a strictly positive service rate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActivitySet {
    pub edges: BTreeSet<Edge>,
}

impl ActivitySet {
    pub fn contains(&self, edge: Edge) -> bool {
        self.edges.contains(&edge)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }
}

pub fn activity_set(model: &NetworkModel) -> ActivitySet {
    ActivitySet {
        edges: model.pairs().filter(|&e| model.is_activity(e)).collect(),
    }
}

/// `mubar[i][j] = mu[i][j] * nu[j]`: the service rate at full allocation of
/// pool `j` to class `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveRates {
    pub mubar: Vec<Vec<f64>>,
}

pub fn effective_rates(model: &NetworkModel) -> EffectiveRates {
    EffectiveRates {
        mubar: model
            .mu()
            .iter()
            .map(|row| row.iter().zip(model.nu()).map(|(m, v)| m * v).collect())
            .collect(),
    }
}
