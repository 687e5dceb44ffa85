//! Rating-impact analysis: per-rating SSNR against the probe item, log-binned
//! SSNR-vs-age curves, and the three-phase power-law trend fit.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{ProbeSet, TrainSet};
use crate::decay::{DecayError, DecaySpec};
use crate::recommender::ScoreVector;
use crate::similarity::{SimilarityError, SimilarityModel};

/// Default log-bin ratio: ten bins per decade.
pub const DEFAULT_BIN_RATIO: f64 = 1.258_925_411_794_167_2; // 10^0.1
pub const DEFAULT_AGE_MIN: f64 = 1.0;

#[derive(Debug, Error)]
pub enum TemporalError {
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error("rated item and probe item are both {0}")]
    SameItem(u32),
    #[error("bin ratio must be > 1, got {0}")]
    BadRatio(f64),
    #[error("minimum age must be >= 1, got {0}")]
    BadAgeMin(f64),
    #[error("trend fit failed: {0}")]
    Fit(String),
    #[error(transparent)]
    Decay(#[from] DecayError),
}

/// Outcome of a signal-to-noise ratio where the denominator may vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Finite(f64),
    /// Zero noise with a positive signal.
    DegenerateInfinite,
    /// Zero noise and zero signal. For SSNR this is an isolated item.
    Undefined,
}

impl Snr {
    pub fn finite(self) -> Option<f64> {
        match self {
            Snr::Finite(v) => Some(v),
            _ => None,
        }
    }
}

fn ratio(signal_sq: f64, noise_sq: f64) -> Snr {
    if noise_sq > 0.0 {
        Snr::Finite(signal_sq / noise_sq)
    } else if signal_sq > 0.0 {
        Snr::DegenerateInfinite
    } else {
        Snr::Undefined
    }
}

/// `s_{i,p}^2 / sum_{j != p, j != i} s_ij^2` for rated item `i` and probe `p`.
///
/// The denominator comes from the cached squared row sum. When the
/// subtraction would cancel most of the cached sum it is recomputed directly
/// from the row.
pub fn compute_ssnr(model: &SimilarityModel, item: u32, probe: u32) -> Result<Snr, TemporalError> {
    if item == probe {
        return Err(TemporalError::SameItem(item));
    }
    let row = model.row(item)?;
    model.row(probe)?;
    let signal = row.get(probe);
    let signal_sq = signal * signal;
    let cached = model.squared_row_sum(item)?;
    let mut noise_sq = cached - signal_sq;
    if noise_sq < 1e-3 * cached {
        noise_sq = row.iter().filter(|&(j, _)| j != probe).map(|(_, s)| s * s).sum();
    }
    Ok(ratio(signal_sq, noise_sq))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SsnrSample {
    pub user: u32,
    pub item: u32,
    pub age: i64,
    pub ssnr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SsnrCollection {
    pub samples: Vec<SsnrSample>,
    pub degenerate_infinite: usize,
    pub isolated: usize,
}

impl SsnrCollection {
    pub fn excluded(&self) -> usize {
        self.degenerate_infinite + self.isolated
    }
}

/// One `(age, SSNR)` pair per training rating of every evaluated user,
/// measured against that user's probe. Degenerate ratios are tallied, not
/// emitted.
pub fn collect_ssnr_ages(
    train: &TrainSet,
    probes: &ProbeSet,
    model: &SimilarityModel,
) -> Result<SsnrCollection, TemporalError> {
    let per_user: Vec<Result<SsnrCollection, TemporalError>> = probes
        .probes
        .par_iter()
        .map(|probe| {
            let mut out = SsnrCollection::default();
            for r in train.profile(probe.user).unwrap_or(&[]) {
                match compute_ssnr(model, r.item, probe.item)? {
                    Snr::Finite(ssnr) => out.samples.push(SsnrSample {
                        user: probe.user,
                        item: r.item,
                        age: probe.timestamp - r.timestamp,
                        ssnr,
                    }),
                    Snr::DegenerateInfinite => out.degenerate_infinite += 1,
                    Snr::Undefined => out.isolated += 1,
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = SsnrCollection::default();
    for part in per_user {
        let part = part?;
        all.samples.extend(part.samples);
        all.degenerate_infinite += part.degenerate_infinite;
        all.isolated += part.isolated;
    }
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub age_lo: f64,
    pub age_hi: f64,
    pub mean_ssnr: f64,
    pub count: usize,
}

impl Bin {
    /// Geometric centre of the bin, used as its abscissa in log-log fits.
    pub fn center(&self) -> f64 {
        (self.age_lo * self.age_hi).sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BinnedCurve {
    pub bins: Vec<Bin>,
}

impl BinnedCurve {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Lower edge of bin `k`.
pub fn bin_edge(age_min: f64, ratio: f64, k: i32) -> f64 {
    age_min * ratio.powi(k)
}

/// Index of the bin holding `age`; ages below `age_min` land in bin 0.
pub fn bin_index(age: f64, ratio: f64, age_min: f64) -> i32 {
    if age < age_min {
        return 0;
    }
    let mut k = ((age / age_min).ln() / ratio.ln()).floor() as i32;
    while k > 0 && age < bin_edge(age_min, ratio, k) {
        k -= 1;
    }
    while age >= bin_edge(age_min, ratio, k + 1) {
        k += 1;
    }
    k
}

/// Groups samples into geometric age bins `[age_min r^k, age_min r^(k+1))`
/// and averages SSNR per bin. Empty bins are omitted.
pub fn log_bin_average(samples: &[SsnrSample], ratio: f64, age_min: f64) -> Result<BinnedCurve, TemporalError> {
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(TemporalError::BadRatio(ratio));
    }
    if !(age_min >= 1.0 && age_min.is_finite()) {
        return Err(TemporalError::BadAgeMin(age_min));
    }
    let mut sums: std::collections::BTreeMap<i32, (f64, usize)> = std::collections::BTreeMap::new();
    for s in samples {
        let k = bin_index(s.age as f64, ratio, age_min);
        let slot = sums.entry(k).or_insert((0.0, 0));
        slot.0 += s.ssnr;
        slot.1 += 1;
    }
    let bins = sums
        .into_iter()
        .map(|(k, (sum, count))| Bin {
            age_lo: bin_edge(age_min, ratio, k),
            age_hi: bin_edge(age_min, ratio, k + 1),
            mean_ssnr: sum / count as f64,
            count,
        })
        .collect();
    Ok(BinnedCurve { bins })
}

/// Candidate breakpoints for the trend fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointGrid {
    pub short: Vec<f64>,
    pub long: Vec<f64>,
}

/// `n` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| if k == n - 1 { hi } else { lo * (hi / lo).powf(k as f64 / (n - 1) as f64) }).collect(),
    }
}

impl Default for BreakpointGrid {
    /// Short breakpoints over `[1e2, 1e5]`, long over `[5e5, 5e7]`, 20 each.
    fn default() -> Self {
        BreakpointGrid { short: geometric_points(1e2, 1e5, 20), long: geometric_points(5e5, 5e7, 20) }
    }
}

/// Three-phase trend: `c (t/T_s)^(-K_s)` below `T_s`, `c` up to `T_l`,
/// `c (t/T_l)^(-K_l)` beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendFit {
    pub t_short: f64,
    pub t_long: f64,
    pub k_short: f64,
    pub k_long: f64,
    pub plateau: f64,
    /// Sum of squared residuals of `log10(ssnr)` over all fitted bins.
    pub residual: f64,
}

impl TrendFit {
    /// The trend with its plateau scaled to 1, as a decay function.
    pub fn to_decay(&self) -> Result<DecaySpec, DecayError> {
        DecaySpec::piecewise(self.t_short, self.t_long, self.k_short, self.k_long)
    }

    /// Trend value at age `t` (plateau level included).
    pub fn value(&self, t: f64) -> f64 {
        let shape = if t < self.t_short {
            (t / self.t_short).powf(-self.k_short)
        } else if t < self.t_long {
            1.0
        } else {
            (t / self.t_long).powf(-self.k_long)
        };
        self.plateau * shape
    }
}

/// Least-squares decay exponent of a power law anchored at `(anchor, level)`
/// in log space, clamped at zero when the fitted slope rises.
fn anchored_exponent(points: &[(f64, f64)], anchor: f64, level: f64) -> f64 {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        let dx = x - anchor;
        sxy += dx * (y - level);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return 0.0;
    }
    (-sxy / sxx).max(0.0)
}

/// Grid search over `(T_s, T_l)` for the three-phase trend.
///
/// For each candidate pair the plateau level is the mean `log10` SSNR of
/// the bins whose centre lies in `[T_s, T_l)`, and each decay exponent is the
/// least-squares slope of the outer segment through the breakpoint at the
/// plateau level. Every segment needs at least two bins. Bins with zero mean
/// SSNR are ignored. The lowest total residual wins; ties go to the smaller
/// `T_s`, then the smaller `T_l`.
pub fn fit_piecewise_trend(curve: &BinnedCurve, grid: &BreakpointGrid) -> Result<TrendFit, TemporalError> {
    let points: Vec<(f64, f64)> = curve
        .bins
        .iter()
        .filter(|b| b.mean_ssnr > 0.0 && b.mean_ssnr.is_finite())
        .map(|b| (b.center().log10(), b.mean_ssnr.log10()))
        .collect();
    if points.len() < 4 {
        return Err(TemporalError::Fit(format!("need at least 4 bins with positive SSNR, have {}", points.len())));
    }
    let mut short_grid = grid.short.clone();
    let mut long_grid = grid.long.clone();
    short_grid.sort_by(f64::total_cmp);
    long_grid.sort_by(f64::total_cmp);

    let mut best: Option<TrendFit> = None;
    let mut candidates = 0usize;
    for &t_s in &short_grid {
        for &t_l in &long_grid {
            if !(t_s > 0.0 && t_s <= t_l) {
                continue;
            }
            let (xs, xl) = (t_s.log10(), t_l.log10());
            let short: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 < xs).collect();
            let plateau: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= xs && p.0 < xl).collect();
            let long: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= xl).collect();
            if short.len() < 2 || plateau.len() < 2 || long.len() < 2 {
                continue;
            }
            candidates += 1;
            let level = plateau.iter().map(|p| p.1).sum::<f64>() / plateau.len() as f64;
            let k_s = anchored_exponent(&short, xs, level);
            let k_l = anchored_exponent(&long, xl, level);
            let residual = short.iter().map(|&(x, y)| (level - k_s * (x - xs) - y).powi(2)).sum::<f64>()
                + plateau.iter().map(|&(_, y)| (level - y).powi(2)).sum::<f64>()
                + long.iter().map(|&(x, y)| (level - k_l * (x - xl) - y).powi(2)).sum::<f64>();
            if best.is_none_or(|b| residual < b.residual) {
                best = Some(TrendFit {
                    t_short: t_s,
                    t_long: t_l,
                    k_short: k_s,
                    k_long: k_l,
                    plateau: 10f64.powf(level),
                    residual,
                });
            }
        }
    }
    best.ok_or_else(|| {
        let span = (
            10f64.powf(points.first().map_or(0.0, |p| p.0)),
            10f64.powf(points.last().map_or(0.0, |p| p.0)),
        );
        TemporalError::Fit(format!(
            "no breakpoint pair leaves >= 2 bins in every segment ({} bins spanning ages {:.3e}..{:.3e}, {} grid pairs tried, {} valid)",
            points.len(),
            span.0,
            span.1,
            short_grid.len() * long_grid.len(),
            candidates
        ))
    })
}

/// `f_p^2 / sum_{k != p} f_k^2` over a score vector. A probe missing from the
/// candidates scores zero.
pub fn compute_fsnr(scores: &ScoreVector, probe: u32) -> Snr {
    let signal = scores.get(probe);
    let noise_sq: f64 = scores.entries().iter().filter(|e| e.0 != probe).map(|e| e.1 * e.1).sum();
    ratio(signal * signal, noise_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Rating;

    /// Model with hand-picked symmetric entries, injected through the cache
    /// format.
    fn model_from_rows(n_items: usize, rows: &[(u32, u32, f64)]) -> SimilarityModel {
        let mut dense = vec![Vec::new(); n_items];
        for &(i, j, s) in rows {
            dense[i as usize].push((j, s));
            dense[j as usize].push((i, s));
        }
        for r in &mut dense {
            r.sort_by_key(|e| e.0);
        }
        let mut buf = Vec::new();
        buf.extend_from_slice(b"TCFSIM\0\0");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&0u64.to_le_bytes());
        buf.extend_from_slice(&(n_items as u64).to_le_bytes());
        for (i, row) in dense.iter().enumerate() {
            buf.extend_from_slice(&(i as u32).to_le_bytes());
            buf.extend_from_slice(&1u32.to_le_bytes());
            buf.extend_from_slice(&(row.len() as u32).to_le_bytes());
            for &(j, s) in row {
                buf.extend_from_slice(&j.to_le_bytes());
                buf.extend_from_slice(&s.to_le_bytes());
            }
        }
        SimilarityModel::read_cache(buf.as_slice(), 0).unwrap()
    }

    #[test]
    fn ssnr_hand_value() {
        // row of item 0: {probe 1: 0.6, 2: 0.3, 3: 0.3}
        let m = model_from_rows(4, &[(0, 1, 0.6), (0, 2, 0.3), (0, 3, 0.3)]);
        let v = compute_ssnr(&m, 0, 1).unwrap().finite().unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn ssnr_zero_signal() {
        let m = model_from_rows(4, &[(0, 2, 0.3), (0, 3, 0.3)]);
        assert_eq!(compute_ssnr(&m, 0, 1).unwrap(), Snr::Finite(0.0));
    }

    #[test]
    fn ssnr_relative_similarity_beats_raw_similarity() {
        // item 0 -> probe 1 at 0.8, five other neighbours at 0.95
        // item 7 -> probe 1 at 0.2, five other neighbours at 0.05
        let mut rows = vec![(0, 1, 0.8), (7, 1, 0.2)];
        for j in 2..7 {
            rows.push((0, j, 0.95));
        }
        for j in 8..13 {
            rows.push((7, j, 0.05));
        }
        let m = model_from_rows(13, &rows);
        let strong_raw = compute_ssnr(&m, 0, 1).unwrap().finite().unwrap();
        let strong_relative = compute_ssnr(&m, 7, 1).unwrap().finite().unwrap();
        assert!((strong_relative - 0.04 / (5.0 * 0.0025)).abs() < 1e-12);
        assert!((strong_raw - 0.64 / (5.0 * 0.9025)).abs() < 1e-12);
        assert!((strong_raw - 0.141828254848).abs() < 1e-12);
        assert!(strong_relative > strong_raw);
    }

    #[test]
    fn ssnr_degenerate_cases() {
        let m = model_from_rows(3, &[(0, 1, 0.5)]);
        assert_eq!(compute_ssnr(&m, 0, 1).unwrap(), Snr::DegenerateInfinite);
        assert_eq!(compute_ssnr(&m, 2, 1).unwrap(), Snr::Undefined);
        assert!(matches!(compute_ssnr(&m, 1, 1), Err(TemporalError::SameItem(1))));
        assert!(compute_ssnr(&m, 0, 9).is_err());
    }

    #[test]
    fn ssnr_cancellation_guard() {
        let m = model_from_rows(3, &[(0, 1, 1.0), (0, 2, 1e-7)]);
        let v = compute_ssnr(&m, 0, 1).unwrap().finite().unwrap();
        assert!((v / 1e14 - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn collect_counts_per_user() {
        // user 0: train {0, 1}, probe 2; user 1 and 2 supply co-ratings.
        let train = TrainSet::from_profiles(
            4,
            vec![
                vec![Rating { timestamp: 10, item: 0 }, Rating { timestamp: 20, item: 1 }],
                vec![Rating { timestamp: 0, item: 0 }, Rating { timestamp: 0, item: 2 }],
                vec![
                    Rating { timestamp: 0, item: 1 },
                    Rating { timestamp: 0, item: 2 },
                    Rating { timestamp: 0, item: 3 },
                ],
            ],
        );
        let probes =
            ProbeSet { probes: vec![crate::dataset::Probe { user: 0, item: 2, timestamp: 50 }], excluded: vec![] };
        let m = SimilarityModel::build(&train);
        let c = collect_ssnr_ages(&train, &probes, &m).unwrap();
        assert_eq!(c.samples.len() + c.excluded(), 2);
        let ages: Vec<i64> = c.samples.iter().map(|s| s.age).collect();
        assert_eq!(ages, vec![40, 30]);
    }

    #[test]
    fn collect_isolated_items() {
        let train = TrainSet::from_profiles(
            3,
            vec![vec![Rating { timestamp: 0, item: 0 }, Rating { timestamp: 1, item: 1 }], vec![]],
        );
        // probe 2 shares no users with the profile: zero signal, nonzero noise
        let probes =
            ProbeSet { probes: vec![crate::dataset::Probe { user: 0, item: 2, timestamp: 5 }], excluded: vec![1] };
        let m = SimilarityModel::build(&train);
        let c = collect_ssnr_ages(&train, &probes, &m).unwrap();
        assert_eq!(c.samples.len(), 2);
        assert!(c.samples.iter().all(|s| s.ssnr == 0.0));

        let lonely = TrainSet::from_profiles(
            4,
            vec![vec![Rating { timestamp: 0, item: 0 }], vec![Rating { timestamp: 0, item: 1 }]],
        );
        let probes =
            ProbeSet { probes: vec![crate::dataset::Probe { user: 0, item: 3, timestamp: 5 }], excluded: vec![] };
        let m = SimilarityModel::build(&lonely);
        let c = collect_ssnr_ages(&lonely, &probes, &m).unwrap();
        assert_eq!((c.samples.len(), c.isolated, c.degenerate_infinite), (0, 1, 0));
    }

    fn sample(age: i64, ssnr: f64) -> SsnrSample {
        SsnrSample { user: 0, item: 0, age, ssnr }
    }

    #[test]
    fn binning_basics() {
        let c = log_bin_average(&[sample(100, 0.5)], DEFAULT_BIN_RATIO, 1.0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!((c.bins[0].mean_ssnr, c.bins[0].count), (0.5, 1));
        assert!(c.bins[0].age_lo <= 100.0 && 100.0 < c.bins[0].age_hi);

        let c = log_bin_average(&[sample(110, 0.2), sample(112, 0.4)], DEFAULT_BIN_RATIO, 1.0).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.bins[0].mean_ssnr - 0.3).abs() < 1e-15);

        let c = log_bin_average(&[sample(0, 1.0), sample(1, 3.0)], 10.0, 1.0).unwrap();
        assert_eq!(c.bins.len(), 1);
        assert_eq!((c.bins[0].age_lo, c.bins[0].age_hi, c.bins[0].mean_ssnr), (1.0, 10.0, 2.0));

        assert!(log_bin_average(&[], 10.0, 1.0).unwrap().is_empty());
        assert!(log_bin_average(&[], 1.0, 1.0).is_err());
        assert!(log_bin_average(&[], 2.0, 0.5).is_err());
    }

    #[test]
    fn bin_edges_are_half_open() {
        assert_eq!(bin_index(10.0, 10.0, 1.0), 1);
        assert_eq!(bin_index(9.999, 10.0, 1.0), 0);
        assert_eq!(bin_index(1000.0, 10.0, 1.0), 3);
        for k in 0..90 {
            let edge = bin_edge(1.0, DEFAULT_BIN_RATIO, k);
            assert_eq!(bin_index(edge, DEFAULT_BIN_RATIO, 1.0), k);
        }
    }

    #[test]
    fn fsnr_values() {
        let f = ScoreVector::new(0, 0, vec![(0, 1.0), (1, 1.0), (2, 1.0)]);
        assert_eq!(compute_fsnr(&f, 0), Snr::Finite(0.5));
        let f = ScoreVector::new(0, 0, vec![(1, 1.0), (2, 3.0)]);
        assert_eq!(compute_fsnr(&f, 0), Snr::Finite(0.0));
        let f = ScoreVector::new(0, 0, vec![(0, 2.0)]);
        assert_eq!(compute_fsnr(&f, 0), Snr::DegenerateInfinite);
        let f = ScoreVector::new(0, 0, vec![]);
        assert_eq!(compute_fsnr(&f, 0), Snr::Undefined);
        let a = ScoreVector::new(0, 0, vec![(0, 0.7), (1, 0.1), (2, 0.4), (3, 0.2)]);
        let b = ScoreVector::new(0, 0, vec![(0, 0.7), (1, 0.4), (2, 0.2), (3, 0.1)]);
        assert_eq!(compute_fsnr(&a, 0), compute_fsnr(&b, 0));
    }

    fn curve_from(f: impl Fn(f64) -> f64, ratio: f64, decades: i32) -> BinnedCurve {
        let per_decade = (10f64.ln() / ratio.ln()).round() as i32;
        BinnedCurve {
            bins: (0..decades * per_decade)
                .map(|k| {
                    let (lo, hi) = (bin_edge(1.0, ratio, k), bin_edge(1.0, ratio, k + 1));
                    Bin { age_lo: lo, age_hi: hi, mean_ssnr: f((lo * hi).sqrt()), count: 1 }
                })
                .collect(),
        }
    }

    #[test]
    fn flat_curve_has_no_decay() {
        let c = curve_from(|_| 0.25, DEFAULT_BIN_RATIO, 9);
        let fit = fit_piecewise_trend(&c, &BreakpointGrid::default()).unwrap();
        assert_eq!((fit.k_short, fit.k_long), (0.0, 0.0));
        assert!((fit.plateau - 0.25).abs() < 1e-12);
        assert!(fit.residual < 1e-20);
        // ties resolve to the smallest breakpoints
        assert_eq!(fit.t_short, 100.0);
        assert_eq!(fit.t_long, 5e5);
    }

    #[test]
    fn fit_rejects_short_curves() {
        let c = curve_from(|_| 1.0, DEFAULT_BIN_RATIO, 1);
        assert!(matches!(fit_piecewise_trend(&c, &BreakpointGrid::default()), Err(TemporalError::Fit(_))));
        let c = BinnedCurve { bins: vec![] };
        assert!(fit_piecewise_trend(&c, &BreakpointGrid::default()).is_err());
    }

    #[test]
    fn rising_segments_clamp_to_zero() {
        let c = curve_from(|t| if t < 1e3 { t / 1e3 } else { 1.0 }, DEFAULT_BIN_RATIO, 9);
        let grid = BreakpointGrid { short: vec![1e3], long: vec![1e7] };
        let fit = fit_piecewise_trend(&c, &grid).unwrap();
        assert_eq!(fit.k_short, 0.0);
        assert!(fit.residual > 0.0);
    }

    #[test]
    fn geometric_points_hit_endpoints() {
        let p = geometric_points(100.0, 1e5, 4);
        assert_eq!(p.len(), 4);
        assert_eq!(p[0], 100.0);
        assert_eq!(p[3], 1e5);
        assert!((p[1] - 1000.0).abs() < 1e-9);
        assert_eq!(geometric_points(3.0, 9.0, 1), vec![3.0]);
        assert!(geometric_points(3.0, 9.0, 0).is_empty());
    }
}
