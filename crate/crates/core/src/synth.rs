//! Seeded synthetic event logs with planted short-term and long-term
//! temporal structure.
//!
//! Items are grouped into topics, and each topic into small clusters. Every
//! user acts in sessions: a session focuses on one cluster (short-term,
//! bursty structure) drawn mostly from the user's current long-term topic,
//! and that topic occasionally switches between sessions (long-term drift).
//! The last event of each user belongs to the user's last session, so it is
//! drawn from the most recent mixture.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, LogNormal};
use thiserror::Error;

use crate::dataset::{RatingEvent, RatingLog};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("infeasible config: {0}")]
    Infeasible(String),
}

/// First timestamp of generated logs (2004-01-01T00:00:00Z).
pub const EPOCH_START: i64 = 1_072_915_200;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    /// Target total number of events (distinct user-item pairs).
    pub events: usize,
    pub topics: usize,
    pub cluster_size: usize,
    /// Window over which users start their activity, seconds.
    pub span_seconds: f64,
    /// Mean gap between sessions of one user, seconds.
    pub session_gap_mean: f64,
    /// Mean gap between events inside a session, seconds.
    pub intra_session_gap_mean: f64,
    /// Mean number of events per session.
    pub session_len_mean: f64,
    /// Long-term topic switching rate per second. Zero disables drift.
    pub drift_rate: f64,
    /// Probability that an event comes from the session's cluster. Zero
    /// disables bursts.
    pub burst_focus: f64,
    /// Probability that a non-burst event (and a session's cluster) comes
    /// from the user's current topic rather than the whole catalog.
    pub topic_focus: f64,
    /// Zipf exponent of global item popularity.
    pub popularity_skew: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 500,
            items: 1000,
            events: 50_000,
            topics: 20,
            cluster_size: 10,
            span_seconds: 365.0 * 86_400.0,
            session_gap_mean: 3.0 * 86_400.0,
            intra_session_gap_mean: 120.0,
            session_len_mean: 5.0,
            drift_rate: 1.0 / (30.0 * 86_400.0),
            burst_focus: 0.7,
            topic_focus: 0.8,
            popularity_skew: 0.8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Default sizes with no temporal structure at any scale: no topic drift
    /// and no session bursts.
    pub fn stationary() -> Self {
        SynthConfig { drift_rate: 0.0, burst_focus: 0.0, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.users == 0 || self.items == 0 || self.events == 0 {
            return bad("users, items and events must be positive".into());
        }
        if self.topics == 0 || self.cluster_size == 0 {
            return bad("topics and cluster_size must be positive".into());
        }
        if self.topics * self.cluster_size > self.items {
            return bad(format!(
                "{} topics of at least one {}-item cluster need more than {} items",
                self.topics, self.cluster_size, self.items
            ));
        }
        for (name, p) in [("burst_focus", self.burst_focus), ("topic_focus", self.topic_focus)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, v) in [
            ("span_seconds", self.span_seconds),
            ("session_gap_mean", self.session_gap_mean),
            ("intra_session_gap_mean", self.intra_session_gap_mean),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.session_len_mean >= 1.0 && self.session_len_mean.is_finite()) {
            return bad(format!("session_len_mean must be >= 1, got {}", self.session_len_mean));
        }
        if !(self.drift_rate >= 0.0 && self.drift_rate.is_finite()) {
            return bad(format!("drift_rate must be >= 0, got {}", self.drift_rate));
        }
        if !(self.popularity_skew >= 0.0 && self.popularity_skew.is_finite()) {
            return bad(format!("popularity_skew must be >= 0, got {}", self.popularity_skew));
        }
        if self.events > self.users.saturating_mul(self.items) {
            return Err(SynthError::Infeasible(format!(
                "{} distinct events requested but only {} users x {} items exist",
                self.events, self.users, self.items
            )));
        }
        Ok(())
    }
}

struct Catalog {
    /// topic -> clusters -> items
    clusters: Vec<Vec<Vec<u32>>>,
    topic_items: Vec<Vec<u32>>,
    popularity: WeightedIndex<f64>,
}

impl Catalog {
    fn new(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut order: Vec<u32> = (0..cfg.items as u32).collect();
        order.shuffle(rng);
        let mut topic_items = vec![Vec::new(); cfg.topics];
        for (pos, &item) in order.iter().enumerate() {
            topic_items[pos % cfg.topics].push(item);
        }
        let clusters =
            topic_items.iter().map(|items| items.chunks(cfg.cluster_size).map(<[u32]>::to_vec).collect()).collect();
        let mut ranks: Vec<usize> = (0..cfg.items).collect();
        ranks.shuffle(rng);
        let weights: Vec<f64> = ranks.iter().map(|&r| (r as f64 + 1.0).powf(-cfg.popularity_skew)).collect();
        let popularity = WeightedIndex::new(weights).expect("positive weights");
        Catalog { clusters, topic_items, popularity }
    }
}

/// Splits `total` events over users: every user gets at least two, the rest
/// follows log-normal activity levels, capped at the catalog size.
fn allocate_events(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let floor = 2.min(cfg.items).min(cfg.events / cfg.users);
    let mut counts = vec![floor; cfg.users];
    let mut remaining = cfg.events - floor * cfg.users;
    let activity = LogNormal::new(0.0, 0.5).expect("valid log-normal");
    let weights: Vec<f64> = (0..cfg.users).map(|_| activity.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    for (c, w) in counts.iter_mut().zip(&weights) {
        let share = ((w / total) * remaining as f64).floor() as usize;
        let take = share.min(cfg.items - *c);
        *c += take;
    }
    remaining = cfg.events - counts.iter().sum::<usize>();
    // Hand out the rounding remainder one by one to users with capacity.
    let mut u = 0;
    while remaining > 0 {
        if counts[u] < cfg.items {
            counts[u] += 1;
            remaining -= 1;
        }
        u = (u + 1) % cfg.users;
    }
    counts
}

/// Draws an item not yet in `seen`, retrying a few times before falling back
/// to the first unseen item from a random offset.
fn draw_distinct(
    rng: &mut ChaCha8Rng,
    seen: &HashSet<u32>,
    n_items: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> u32,
) -> u32 {
    for _ in 0..32 {
        let item = draw(rng);
        if !seen.contains(&item) {
            return item;
        }
    }
    let start = rng.random_range(0..n_items);
    (0..n_items)
        .map(|k| ((start + k) % n_items) as u32)
        .find(|i| !seen.contains(i))
        .expect("per-user event count is capped at the catalog size")
}

/// Generates a log according to `cfg`. Identical configs yield identical
/// logs.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<RatingLog, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let catalog = Catalog::new(cfg, &mut rng);
    let counts = allocate_events(cfg, &mut rng);

    let session_gap = Exp::new(1.0 / cfg.session_gap_mean).expect("positive rate");
    let event_gap = Exp::new(1.0 / cfg.intra_session_gap_mean).expect("positive rate");
    let extra_len = Exp::new(1.0 / (cfg.session_len_mean - 1.0).max(1e-9)).expect("positive rate");

    let mut events = Vec::with_capacity(cfg.events);
    for (user, &count) in counts.iter().enumerate() {
        let user_name = format!("u{user:05}");
        let mut seen: HashSet<u32> = HashSet::with_capacity(count);
        let mut t = rng.random_range(0.0..cfg.span_seconds);
        let mut topic = rng.random_range(0..cfg.topics);
        let mut first_session = true;
        while seen.len() < count {
            if !first_session {
                let gap: f64 = session_gap.sample(&mut rng);
                if cfg.drift_rate > 0.0 && rng.random_bool(1.0 - (-gap * cfg.drift_rate).exp()) && cfg.topics > 1 {
                    let shift = rng.random_range(1..cfg.topics);
                    topic = (topic + shift) % cfg.topics;
                }
                t += gap;
            }
            first_session = false;
            let cluster_topic = if rng.random_bool(cfg.topic_focus) { topic } else { rng.random_range(0..cfg.topics) };
            let clusters = &catalog.clusters[cluster_topic];
            let cluster = &clusters[rng.random_range(0..clusters.len())];
            let len = 1 + extra_len.sample(&mut rng).round() as usize;
            for k in 0..len {
                if seen.len() == count {
                    break;
                }
                if k > 0 {
                    t += event_gap.sample(&mut rng).max(1.0);
                }
                let item = draw_distinct(&mut rng, &seen, cfg.items, |rng| {
                    if rng.random_bool(cfg.burst_focus) {
                        cluster[rng.random_range(0..cluster.len())]
                    } else if rng.random_bool(cfg.topic_focus) {
                        let items = &catalog.topic_items[topic];
                        items[rng.random_range(0..items.len())]
                    } else {
                        catalog.popularity.sample(rng) as u32
                    }
                });
                seen.insert(item);
                events.push(RatingEvent::new(user_name.clone(), format!("i{item:05}"), EPOCH_START + t as i64));
            }
        }
    }
    events.sort_by(|a, b| (a.timestamp, &a.user, &a.item).cmp(&(b.timestamp, &b.user, &b.item)));
    Ok(RatingLog::new(events))
}
