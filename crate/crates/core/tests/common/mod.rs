//! Independent dense reference implementations and random instance
//! generators shared by the integration suites.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use timecf::dataset::{Dataset, Rating, RatingEvent, RatingLog, TrainSet};
use timecf::decay::DecayFunction;

/// Binary user x item matrix with timestamps.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n_users: usize,
    pub n_items: usize,
    /// `rated[u][i] = Some(timestamp)`
    pub rated: Vec<Vec<Option<i64>>>,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, max_users: usize, max_items: usize, density: f64) -> Self {
        let n_users = rng.random_range(2..=max_users);
        let n_items = rng.random_range(2..=max_items);
        let rated = (0..n_users)
            .map(|_| {
                (0..n_items).map(|_| rng.random_bool(density).then(|| rng.random_range(0..1_000_000i64))).collect()
            })
            .collect();
        Instance { n_users, n_items, rated }
    }

    pub fn train_set(&self) -> TrainSet {
        TrainSet::from_profiles(
            self.n_items,
            self.rated
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter_map(|(i, t)| t.map(|t| Rating { timestamp: t, item: i as u32 }))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn latest(&self, u: usize) -> i64 {
        self.rated[u].iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn r(&self, u: usize, i: usize) -> f64 {
        if self.rated[u][i].is_some() {
            1.0
        } else {
            0.0
        }
    }
}

/// Cosine on dense binary vectors, two explicit loops.
pub fn dense_cosine(inst: &Instance) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; inst.n_items]; inst.n_items];
    for i in 0..inst.n_items {
        for j in 0..inst.n_items {
            if i == j {
                continue;
            }
            let (mut dot, mut ni, mut nj) = (0.0, 0.0, 0.0);
            for u in 0..inst.n_users {
                dot += inst.r(u, i) * inst.r(u, j);
                ni += inst.r(u, i) * inst.r(u, i);
                nj += inst.r(u, j) * inst.r(u, j);
            }
            if ni > 0.0 && nj > 0.0 {
                s[i][j] = dot / (ni.sqrt() * nj.sqrt());
            }
        }
    }
    s
}

/// Binary cosine with the `c / sqrt(n_i n_j)` rounding, from a dense count
/// matrix. Used where ties must break identically to the sparse model.
pub fn dense_binary_cosine(profiles: &[Vec<u32>], n_items: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0u32; n_items]; n_items];
    let mut n = vec![0u32; n_items];
    for p in profiles {
        for &i in p {
            n[i as usize] += 1;
            for &j in p {
                if i != j {
                    c[i as usize][j as usize] += 1;
                }
            }
        }
    }
    let mut s = vec![vec![0.0; n_items]; n_items];
    for i in 0..n_items {
        for j in 0..n_items {
            if c[i][j] > 0 {
                s[i][j] = c[i][j] as f64 / (n[i] as f64 * n[j] as f64).sqrt();
            }
        }
    }
    s
}

/// Signal-to-noise ratio by an explicit loop over the whole catalog. `None` when the
/// denominator is zero.
pub fn dense_ssnr(s: &[Vec<f64>], i: usize, probe: usize) -> Option<f64> {
    let num = s[i][probe] * s[i][probe];
    let mut den = 0.0;
    for (j, row_val) in s[i].iter().enumerate() {
        if j != probe && j != i {
            den += row_val * row_val;
        }
    }
    (den > 0.0).then_some(num / den)
}

/// Decayed scores by a dense loop over profile x catalog; profile items score 0.
pub fn dense_scores<D: DecayFunction>(s: &[Vec<f64>], profile: &[Rating], t_now: i64, decay: &D) -> Vec<f64> {
    let n_items = s.len();
    let mut f = vec![0.0; n_items];
    let in_profile: Vec<bool> = (0..n_items).map(|j| profile.iter().any(|r| r.item as usize == j)).collect();
    for j in 0..n_items {
        if in_profile[j] {
            continue;
        }
        for r in profile {
            f[j] += decay.weight(t_now - r.timestamp).unwrap() * s[r.item as usize][j];
        }
    }
    f
}

/// Full sort by (score desc, index asc) of positive scores, truncated.
pub fn full_sort_top(f: &[f64], n: usize) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..f.len() as u32).filter(|&j| f[j as usize] > 0.0).collect();
    idx.sort_by(|&a, &b| f[b as usize].partial_cmp(&f[a as usize]).unwrap().then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// Classic item-based CF without any weighting: `f_j = sum_i s_ij`.
pub fn ibcf_reference(s_of: impl Fn(u32, u32) -> f64, n_items: usize, profile: &[Rating], n: usize) -> Vec<u32> {
    let mut f = vec![0.0; n_items];
    for (j, fj) in f.iter_mut().enumerate() {
        if profile.iter().any(|r| r.item as usize == j) {
            continue;
        }
        for r in profile {
            *fj += s_of(r.item, j as u32);
        }
    }
    full_sort_top(&f, n)
}

/// Result of the brute-force leave-the-latest-out pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteEval {
    pub users: usize,
    pub hits: Vec<usize>,
    pub hit_rates: Vec<f64>,
}

/// Split by direct scan for the latest `(timestamp, item)`, dense similarity,
/// dense scoring, full sort, and hit-rate as a literal average of `h / N`.
pub fn brute_evaluate<D: DecayFunction>(dataset: &Dataset, decay: &D, depths: &[usize]) -> BruteEval {
    let n_items = dataset.n_items();
    let mut train_profiles = Vec::new();
    let mut probes = Vec::new();
    for u in 0..dataset.n_users() as u32 {
        let profile = dataset.profile(u);
        if profile.len() < 2 {
            train_profiles.push(Vec::new());
            continue;
        }
        let latest = *profile.iter().max_by_key(|r| (r.timestamp, r.item)).unwrap();
        probes.push((u, latest));
        train_profiles.push(profile.iter().copied().filter(|r| *r != latest).collect::<Vec<_>>());
    }
    let item_lists: Vec<Vec<u32>> = train_profiles.iter().map(|p| p.iter().map(|r| r.item).collect()).collect();
    let s = dense_binary_cosine(&item_lists, n_items);
    let max_n = *depths.iter().max().unwrap();
    let mut hits = vec![0usize; depths.len()];
    let mut sums = vec![0.0; depths.len()];
    for (u, probe) in &probes {
        let f = dense_scores(&s, &train_profiles[*u as usize], probe.timestamp, decay);
        let top = full_sort_top(&f, max_n);
        let pos = top.iter().position(|&j| j == probe.item);
        for (k, &n) in depths.iter().enumerate() {
            if pos.is_some_and(|p| p < n) {
                hits[k] += 1;
                sums[k] += 1.0 / n as f64;
            }
        }
    }
    let users = probes.len();
    BruteEval { users, hits, hit_rates: sums.iter().map(|s| s / users as f64).collect() }
}

/// Random raw log with string ids, possibly containing duplicates.
pub fn random_log(rng: &mut ChaCha8Rng, max_events: usize, users: usize, items: usize) -> RatingLog {
    let n = rng.random_range(0..=max_events);
    RatingLog::new(
        (0..n)
            .map(|_| {
                RatingEvent::new(
                    format!("u{}", rng.random_range(0..users)),
                    format!("i{}", rng.random_range(0..items)),
                    rng.random_range(0..100i64),
                )
            })
            .collect(),
    )
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
