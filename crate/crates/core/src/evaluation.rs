//! Leave-the-latest-out evaluation, hit-rate and parameter sweeps.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{split_leave_latest, Dataset, ProbeSet, TrainSet};
use crate::decay::{DecayError, DecayFunction, DecaySpec, Family, DEFAULT_LOGISTIC_B};
use crate::recommender::{top_n, RecommendError, ScoreBuffer};
use crate::similarity::SimilarityModel;
use crate::temporal::geometric_points;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no evaluable users (every user has fewer than two ratings)")]
    NoEvaluableUsers,
    #[error("hit-rate over an empty user set is undefined")]
    EmptyFlags,
    #[error("search depth must be >= 1")]
    ZeroDepth,
    #[error("no search depths requested")]
    NoDepths,
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("grid axis {0}: {1}")]
    BadAxis(String, String),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Decay(#[from] DecayError),
}

/// Hit-rate with the per-user `1/N` factor:
/// `H@N = (1/|U|) sum_u h_u / N`, computed as `hits / (|U| N)`.
pub fn hit_rate(flags: &[bool], n: usize) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroDepth);
    }
    if flags.is_empty() {
        return Err(EvalError::EmptyFlags);
    }
    let hits = flags.iter().filter(|&&h| h).count();
    Ok(hit_rate_from_counts(hits, flags.len(), n))
}

fn hit_rate_from_counts(hits: usize, users: usize, n: usize) -> f64 {
    hits as f64 / (users as f64 * n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthResult {
    pub n: usize,
    pub hits: usize,
    pub hit_rate: f64,
    /// `hits / |U|`, the hit-rate without the `1/N` factor.
    pub normalized_hit_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub decay: String,
    pub evaluated_users: usize,
    pub depths: Vec<DepthResult>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl EvalReport {
    pub fn at(&self, n: usize) -> Option<&DepthResult> {
        self.depths.iter().find(|d| d.n == n)
    }

    pub fn hit_rate_at(&self, n: usize) -> Option<f64> {
        self.at(n).map(|d| d.hit_rate)
    }
}

/// A prepared leave-the-latest-out split plus the similarity model built
/// from its training part. Shared read-only across evaluations.
#[derive(Debug, Clone)]
pub struct Evaluator {
    train: TrainSet,
    probes: ProbeSet,
    model: SimilarityModel,
}

impl Evaluator {
    pub fn new(dataset: &Dataset) -> Result<Self, EvalError> {
        let (train, probes) = split_leave_latest(dataset);
        let model = SimilarityModel::build(&train);
        Self::from_parts(train, probes, model)
    }

    /// Uses an already built (e.g. cached) model for `train`.
    pub fn from_parts(train: TrainSet, probes: ProbeSet, model: SimilarityModel) -> Result<Self, EvalError> {
        if probes.is_empty() {
            return Err(EvalError::NoEvaluableUsers);
        }
        Ok(Evaluator { train, probes, model })
    }

    pub fn train(&self) -> &TrainSet {
        &self.train
    }

    pub fn probes(&self) -> &ProbeSet {
        &self.probes
    }

    pub fn model(&self) -> &SimilarityModel {
        &self.model
    }

    /// Zero-based rank of each user's probe within the top `max_depth`
    /// recommendations, `None` on a miss. Ordered like the probe set.
    pub fn probe_ranks<D: DecayFunction + ?Sized>(
        &self,
        decay: &D,
        max_depth: usize,
    ) -> Result<Vec<Option<usize>>, EvalError> {
        let n_items = self.model.n_items();
        self.probes
            .probes
            .par_iter()
            .map_init(
                || ScoreBuffer::new(n_items),
                |buf, probe| {
                    let scores = buf.score(&self.train, &self.model, probe.user, probe.timestamp, decay)?;
                    let list = top_n(&scores, max_depth);
                    Ok(list.iter().position(|r| r.item == probe.item))
                },
            )
            .collect()
    }

    /// Scores every evaluated user once at their probe time and reports
    /// `H@N` for each requested depth.
    pub fn evaluate<D: DecayFunction + ?Sized>(
        &self,
        decay: &D,
        label: &str,
        depths: &[usize],
    ) -> Result<EvalReport, EvalError> {
        let started = Instant::now();
        if depths.is_empty() {
            return Err(EvalError::NoDepths);
        }
        if depths.contains(&0) {
            return Err(EvalError::ZeroDepth);
        }
        let max_depth = *depths.iter().max().expect("nonempty");
        let ranks = self.probe_ranks(decay, max_depth)?;
        let users = ranks.len();
        let depths = depths
            .iter()
            .map(|&n| {
                let hits = ranks.iter().filter(|r| r.is_some_and(|pos| pos < n)).count();
                DepthResult {
                    n,
                    hits,
                    hit_rate: hit_rate_from_counts(hits, users, n),
                    normalized_hit_rate: hits as f64 / users as f64,
                }
            })
            .collect();
        Ok(EvalReport { decay: label.to_string(), evaluated_users: users, depths, wall_time: started.elapsed() })
    }

    pub fn evaluate_spec(&self, spec: &DecaySpec, depths: &[usize]) -> Result<EvalReport, EvalError> {
        self.evaluate(spec, &spec.to_string(), depths)
    }
}

/// Convenience: split, build and evaluate in one call.
pub fn evaluate(dataset: &Dataset, spec: &DecaySpec, depths: &[usize]) -> Result<EvalReport, EvalError> {
    Evaluator::new(dataset)?.evaluate_spec(spec, depths)
}

/// Default sweep ranges per parameter key.
pub fn default_range(key: &str) -> Option<(f64, f64)> {
    Some(match key {
        "Ks" | "Kl" => (0.1, 1.0),
        "Ts" => (1e2, 1e5),
        "Tl" => (5e5, 5e7),
        "Tw" => (1e2, 1e8),
        "Tg" | "Te" => (1.0, 1e8),
        "Ko" => (0.1, 2.0),
        _ => return None,
    })
}

pub const DEFAULT_GRID_POINTS: usize = 10;

/// Cartesian grid of parameter values for one decay family. Axes follow
/// [`Family::keys`]; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    family: Family,
    axes: Vec<Vec<f64>>,
}

impl ParamGrid {
    /// Geometric grid over the default range of every swept key. Logistic
    /// `b` stays at its fixed default.
    pub fn default_for(family: Family, points: usize) -> Self {
        let axes = family
            .keys()
            .iter()
            .map(|&key| match default_range(key) {
                Some((lo, hi)) => geometric_points(lo, hi, points),
                None => vec![DEFAULT_LOGISTIC_B],
            })
            .collect();
        ParamGrid { family, axes }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn axis(&self, key: &str) -> Option<&[f64]> {
        let pos = self.family.keys().iter().position(|k| *k == key)?;
        Some(&self.axes[pos])
    }

    pub fn set_axis(&mut self, key: &str, values: Vec<f64>) -> Result<(), EvalError> {
        let pos = self
            .family
            .keys()
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| EvalError::BadAxis(key.to_string(), format!("not a parameter of {}", self.family)))?;
        if values.is_empty() {
            return Err(EvalError::BadAxis(key.to_string(), "no values".into()));
        }
        self.axes[pos] = values;
        Ok(())
    }

    /// Applies an override such as `Ts=100:1e5:10` (geometric, inclusive)
    /// or `Ks=0.6` (single value).
    pub fn apply_override(&mut self, text: &str) -> Result<(), EvalError> {
        let (key, spec) = text
            .split_once('=')
            .ok_or_else(|| EvalError::BadAxis(text.to_string(), "expected key=lo:hi:n or key=value".into()))?;
        let key = key.trim();
        let bad = |why: &str| EvalError::BadAxis(key.to_string(), format!("{why}: {spec:?}"));
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        let values = match parts.as_slice() {
            [v] => vec![v.parse::<f64>().map_err(|_| bad("bad value"))?],
            [lo, hi, n] => {
                let lo = lo.parse::<f64>().map_err(|_| bad("bad lower bound"))?;
                let hi = hi.parse::<f64>().map_err(|_| bad("bad upper bound"))?;
                let n = n.parse::<usize>().map_err(|_| bad("bad point count"))?;
                if !(lo > 0.0 && hi >= lo) || n == 0 {
                    return Err(bad("need 0 < lo <= hi and n >= 1"));
                }
                geometric_points(lo, hi, n)
            }
            _ => return Err(bad("expected lo:hi:n or a single value")),
        };
        self.set_axis(key, values)
    }

    /// Every valid grid point in enumeration order. Combinations violating a
    /// spec invariant (e.g. `Ts > Tl`) are skipped.
    pub fn points(&self) -> Vec<DecaySpec> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(self.axes.len());
        self.enumerate(0, &mut current, &mut out);
        out
    }

    fn enumerate(&self, depth: usize, current: &mut Vec<f64>, out: &mut Vec<DecaySpec>) {
        if depth == self.axes.len() {
            if let Ok(spec) = DecaySpec::from_params(self.family, current) {
                out.push(spec);
            }
            return;
        }
        for &v in &self.axes[depth] {
            current.push(v);
            self.enumerate(depth + 1, current, out);
            current.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub spec: DecaySpec,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub objective: usize,
    pub rows: Vec<SweepRow>,
    pub best: usize,
}

impl SweepResult {
    pub fn best_row(&self) -> &SweepRow {
        &self.rows[self.best]
    }
}

/// Evaluates every grid point and picks the one with the highest
/// `H@objective`; earlier grid points win ties.
pub fn grid_sweep(
    evaluator: &Evaluator,
    grid: &ParamGrid,
    objective: usize,
    depths: &[usize],
) -> Result<SweepResult, EvalError> {
    let points = grid.points();
    if points.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let mut depths = depths.to_vec();
    if !depths.contains(&objective) {
        depths.push(objective);
    }
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|spec| Ok(SweepRow { spec: *spec, report: evaluator.evaluate_spec(spec, &depths)? }))
        .collect::<Result<_, EvalError>>()?;
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (idx, row) in rows.iter().enumerate() {
        let value = row.report.hit_rate_at(objective).expect("objective depth evaluated");
        if value > best_value {
            best = idx;
            best_value = value;
        }
    }
    Ok(SweepResult { objective, rows, best })
}
