//! Time-weighted item-based scoring and top-N selection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::TrainSet;
use crate::decay::{DecayError, DecayFunction};
use crate::similarity::SimilarityModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecommendError {
    #[error("unknown user index {0}")]
    UnknownUser(u32),
    #[error("user {0} has an empty training profile")]
    EmptyProfile(u32),
    #[error("query time {t_now} precedes a rating of user {user} at {rated_at}")]
    QueryBeforeRating { user: u32, t_now: i64, rated_at: i64 },
    #[error("similarity model covers {model} items, training set {train}")]
    ModelMismatch { model: usize, train: usize },
    #[error(transparent)]
    Decay(#[from] DecayError),
}

/// Prediction scores `f_j` for one user at one query time. Only candidates
/// with a strictly positive score are stored, sorted by item index; profile
/// items are never candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub user: u32,
    pub t_now: i64,
    scores: Vec<(u32, f64)>,
}

impl ScoreVector {
    pub fn new(user: u32, t_now: i64, mut scores: Vec<(u32, f64)>) -> Self {
        scores.retain(|&(_, f)| f > 0.0);
        scores.sort_unstable_by_key(|e| e.0);
        scores.dedup_by_key(|e| e.0);
        ScoreVector { user, t_now, scores }
    }

    pub fn get(&self, item: u32) -> f64 {
        match self.scores.binary_search_by_key(&item, |e| e.0) {
            Ok(pos) => self.scores[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Reusable dense scratch space for scoring many users against one model.
#[derive(Debug, Clone)]
pub struct ScoreBuffer {
    acc: Vec<f64>,
    reached: Vec<bool>,
    in_profile: Vec<bool>,
    touched: Vec<u32>,
}

impl ScoreBuffer {
    pub fn new(n_items: usize) -> Self {
        ScoreBuffer {
            acc: vec![0.0; n_items],
            reached: vec![false; n_items],
            in_profile: vec![false; n_items],
            touched: Vec::new(),
        }
    }

    /// `f_j = sum_i w(t_now - t_i) s_ij` over the user's training profile.
    pub fn score<D: DecayFunction + ?Sized>(
        &mut self,
        train: &TrainSet,
        model: &SimilarityModel,
        user: u32,
        t_now: i64,
        decay: &D,
    ) -> Result<ScoreVector, RecommendError> {
        if model.n_items() != train.n_items() {
            return Err(RecommendError::ModelMismatch { model: model.n_items(), train: train.n_items() });
        }
        if self.acc.len() != model.n_items() {
            *self = ScoreBuffer::new(model.n_items());
        }
        let profile = train.profile(user).ok_or(RecommendError::UnknownUser(user))?;
        if profile.is_empty() {
            return Err(RecommendError::EmptyProfile(user));
        }
        let mut weights = Vec::with_capacity(profile.len());
        for r in profile {
            if r.timestamp > t_now {
                return Err(RecommendError::QueryBeforeRating { user, t_now, rated_at: r.timestamp });
            }
            weights.push(decay.weight(t_now - r.timestamp)?);
        }

        for r in profile {
            self.in_profile[r.item as usize] = true;
        }
        let rows = model.rows();
        for (r, &w) in profile.iter().zip(&weights) {
            for &(j, s) in &rows[r.item as usize] {
                let ju = j as usize;
                if self.in_profile[ju] {
                    continue;
                }
                if !self.reached[ju] {
                    self.reached[ju] = true;
                    self.touched.push(j);
                }
                self.acc[ju] += w * s;
            }
        }
        self.touched.sort_unstable();
        let mut scores = Vec::with_capacity(self.touched.len());
        for &j in &self.touched {
            let ju = j as usize;
            let f = self.acc[ju];
            if f > 0.0 {
                scores.push((j, f));
            }
            self.acc[ju] = 0.0;
            self.reached[ju] = false;
        }
        self.touched.clear();
        for r in profile {
            self.in_profile[r.item as usize] = false;
        }
        Ok(ScoreVector { user, t_now, scores })
    }
}

/// Scores every reachable candidate for `user` at time `t_now`.
pub fn score_items<D: DecayFunction + ?Sized>(
    train: &TrainSet,
    model: &SimilarityModel,
    user: u32,
    t_now: i64,
    decay: &D,
) -> Result<ScoreVector, RecommendError> {
    ScoreBuffer::new(model.n_items()).score(train, model, user, t_now, decay)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recommendation {
    pub item: u32,
    pub score: f64,
}

/// Ranked recommendations: scores non-increasing, ties by ascending item.
pub type RecommendationList = Vec<Recommendation>;

/// Ranking key: larger is better.
#[derive(Debug, Clone, Copy)]
struct Ranked(u32, f64);

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.1.total_cmp(&other.1).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

/// The `n` best candidates, selected with a bounded min-heap.
pub fn top_n(scores: &ScoreVector, n: usize) -> RecommendationList {
    if n == 0 {
        return Vec::new();
    }
    let mut heap: BinaryHeap<std::cmp::Reverse<Ranked>> = BinaryHeap::with_capacity(n + 1);
    for &(item, score) in &scores.scores {
        let cand = Ranked(item, score);
        if heap.len() < n {
            heap.push(std::cmp::Reverse(cand));
        } else if let Some(worst) = heap.peek() {
            if cand > worst.0 {
                heap.pop();
                heap.push(std::cmp::Reverse(cand));
            }
        }
    }
    let mut out: Vec<Ranked> = heap.into_iter().map(|r| r.0).collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    out.into_iter().map(|Ranked(item, score)| Recommendation { item, score }).collect()
}
