//! Phase-space reconstruction by coordinate delays.
//!
//! The delay `τ` is the first local minimum of the histogram mutual
//! information `I(τ)`; the dimension `m` is the smallest one whose false
//! nearest neighbor fraction drops below a threshold. Multivariate series
//! are embedded channel by channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sq_dist;
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub m: usize,
    pub tau: usize,
}

impl EmbeddingParams {
    pub fn new(m: usize, tau: usize) -> Result<Self> {
        if m < 1 || tau < 1 {
            return Err(Error::InvalidParameter(format!(
                "embedding needs m >= 1 and tau >= 1, got m={m}, tau={tau}"
            )));
        }
        Ok(Self { m, tau })
    }

    /// Samples spanned by one embedded point.
    pub fn span(&self) -> usize {
        (self.m - 1) * self.tau + 1
    }

    pub fn points_for(&self, len: usize) -> usize {
        len.saturating_sub(self.span() - 1)
    }
}

/// Delay-embedded points, oldest coordinate first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrajectory {
    pub points: Vec<Vec<f64>>,
    pub source_len: usize,
}

impl PhaseTrajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// `u_i = (z_{i−(m−1)τ}, …, z_{i−τ}, z_i)` for every index with a full
/// history.
pub fn delay_embed(series: &[f64], params: EmbeddingParams) -> Result<PhaseTrajectory> {
    let EmbeddingParams { m, tau } = EmbeddingParams::new(params.m, params.tau)?;
    let span = params.span();
    if series.len() < span {
        return Err(Error::TooShort {
            needed: span,
            got: series.len(),
        });
    }
    let count = series.len() - (span - 1);
    let points = (0..count)
        .map(|j| (0..m).map(|k| series[j + k * tau]).collect())
        .collect();
    Ok(PhaseTrajectory {
        points,
        source_len: series.len(),
    })
}

/// Embeds every channel of a multivariate series independently.
pub fn delay_embed_channels(series: &TimeSeries, params: &[EmbeddingParams]) -> Result<Vec<PhaseTrajectory>> {
    if params.len() != series.n_channels() {
        return Err(Error::DimensionMismatch {
            expected: series.n_channels(),
            got: params.len(),
        });
    }
    series
        .channels()
        .par_iter()
        .zip(params)
        .map(|(c, p)| delay_embed(c, *p))
        .collect()
}

/// Non-overlapping groups of `p` consecutive points flattened to `m·p`
/// vectors. The leading `len mod p` points are dropped so the most recent
/// point always ends the last patch.
pub fn patch(traj: &PhaseTrajectory, p: usize) -> Result<Vec<Vec<f64>>> {
    if p < 1 {
        return Err(Error::InvalidParameter("patch length must be at least 1".into()));
    }
    let skip = traj.len() % p;
    Ok(traj.points[skip..]
        .chunks_exact(p)
        .map(|chunk| chunk.concat())
        .collect())
}

/// Equal-width histogram bin count used when none is given.
pub fn default_bins(len: usize) -> usize {
    ((len as f64 / 5.0).sqrt().floor() as usize).clamp(8, 64)
}

fn check_nonconstant(series: &[f64]) -> Result<(f64, f64)> {
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if series.is_empty() || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::DegenerateSeries("series is constant or non-finite".into()));
    }
    Ok((lo, hi))
}

/// Linear binning: each value splits its unit mass between the two nearest
/// bin centers in proportion to proximity.
fn bin_weights(series: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<(usize, f64)> {
    let width = (hi - lo) / bins as f64;
    let top = (bins - 1) as f64;
    series
        .iter()
        .map(|&v| {
            let u = ((v - lo) / width - 0.5).clamp(0.0, top);
            let k = (u.floor() as usize).min(bins - 2);
            (k, u - k as f64)
        })
        .collect()
}

fn mi_from_bins(pos: &[(usize, f64)], bins: usize, tau: usize) -> f64 {
    let n = pos.len() - tau;
    let mut joint = vec![0.0; bins * bins];
    let mut px = vec![0.0; bins];
    let mut py = vec![0.0; bins];
    for t in 0..n {
        let (a, fa) = pos[t];
        let (b, fb) = pos[t + tau];
        let wa = [(a, 1.0 - fa), (a + 1, fa)];
        let wb = [(b, 1.0 - fb), (b + 1, fb)];
        for &(i, wi) in &wa {
            px[i] += wi;
            for &(j, wj) in &wb {
                joint[i * bins + j] += wi * wj;
            }
        }
        for &(j, wj) in &wb {
            py[j] += wj;
        }
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for a in 0..bins {
        for b in 0..bins {
            let c = joint[a * bins + b];
            if c > 0.0 {
                mi += c / nf * (c * nf / (px[a] * py[b])).ln();
            }
        }
    }
    mi
}

/// Mutual information between `z_t` and `z_{t+τ}` for `τ = 0..=max_tau`,
/// in nats, from a linearly binned equal-width histogram.
pub fn mutual_information_curve(series: &[f64], max_tau: usize, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidParameter("need at least 2 histogram bins".into()));
    }
    if series.len() <= max_tau + 1 {
        return Err(Error::TooShort {
            needed: max_tau + 2,
            got: series.len(),
        });
    }
    let (lo, hi) = check_nonconstant(series)?;
    let pos = bin_weights(series, bins, lo, hi);
    Ok((0..=max_tau).map(|tau| mi_from_bins(&pos, bins, tau)).collect())
}

/// Position of the first strict local minimum of `curve[1..]`, or the
/// argmin over `1..` when the curve has none.
pub fn first_local_minimum(curve: &[f64]) -> usize {
    let max_tau = curve.len() - 1;
    for tau in 1..max_tau {
        if curve[tau] < curve[tau - 1] && curve[tau] < curve[tau + 1] {
            return tau;
        }
    }
    (1..=max_tau)
        .min_by(|&a, &b| curve[a].total_cmp(&curve[b]))
        .unwrap_or(1)
}

/// Delay at the first local minimum of the mutual information.
pub fn mutual_information_delay(series: &[f64], max_tau: usize, bins: Option<usize>) -> Result<usize> {
    if max_tau < 1 {
        return Err(Error::InvalidParameter("max_tau must be at least 1".into()));
    }
    check_nonconstant(series)?;
    if series.len() < 4 * max_tau {
        return Err(Error::TooShort {
            needed: 4 * max_tau,
            got: series.len(),
        });
    }
    let bins = bins.unwrap_or_else(|| default_bins(series.len()));
    let curve = mutual_information_curve(series, max_tau, bins)?;
    Ok(first_local_minimum(&curve))
}

/// Tuning of the false-nearest-neighbor test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FnnOptions {
    /// Distance-ratio tolerance on the added coordinate.
    pub r_tol: f64,
    /// Attractor-size tolerance relative to the series standard deviation.
    pub a_tol: f64,
    /// Neighbors closer in time than this are ignored; `None` uses `τ`.
    pub theiler: Option<usize>,
    /// Cap on reference points (evenly spaced); `None` uses all of them.
    pub max_refs: Option<usize>,
}

impl Default for FnnOptions {
    fn default() -> Self {
        Self {
            r_tol: 10.0,
            a_tol: 2.0,
            theiler: None,
            max_refs: Some(2000),
        }
    }
}

fn std_dev(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    (series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// False nearest neighbor fraction for one embedding dimension.
///
/// A neighbor found in `m` dimensions is false when adding coordinate
/// `m + 1` stretches the pair by more than `r_tol` times their distance, or
/// leaves them further apart than `a_tol` attractor sizes.
pub fn fnn_fraction(series: &[f64], m: usize, tau: usize, opts: &FnnOptions) -> f64 {
    // points must carry an (m+1)-th coordinate
    let span = m * tau + 1;
    if series.len() < span + 1 {
        return 1.0;
    }
    let count = series.len() - m * tau;
    let theiler = opts.theiler.unwrap_or(tau);
    let attractor = std_dev(series);
    let point = |j: usize| -> Vec<f64> { (0..m).map(|k| series[j + k * tau]).collect() };
    let points: Vec<Vec<f64>> = (0..count).map(point).collect();
    let refs: Vec<usize> = match opts.max_refs {
        Some(cap) if cap < count => (0..cap).map(|r| r * count / cap).collect(),
        _ => (0..count).collect(),
    };
    let results: Vec<Option<bool>> = refs
        .par_iter()
        .map(|&i| {
            let mut best = f64::INFINITY;
            let mut best_j = usize::MAX;
            for (j, q) in points.iter().enumerate() {
                if i.abs_diff(j) <= theiler {
                    continue;
                }
                let d = sq_dist(&points[i], q);
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
            if best_j == usize::MAX {
                return None;
            }
            let extra = (series[i + m * tau] - series[best_j + m * tau]).abs();
            let rm = best.sqrt();
            let r_next = (best + extra * extra).sqrt();
            let ratio_false = if rm > 0.0 { extra / rm > opts.r_tol } else { extra > 0.0 };
            let size_false = r_next / attractor > opts.a_tol;
            Some(ratio_false || size_false)
        })
        .collect();
    let (false_count, total) = results
        .iter()
        .flatten()
        .fold((0usize, 0usize), |(f, t), &b| (f + b as usize, t + 1));
    if total == 0 {
        1.0
    } else {
        false_count as f64 / total as f64
    }
}

/// FNN fractions for `m = 1..=max_m`.
pub fn fnn_curve(series: &[f64], tau: usize, max_m: usize, opts: &FnnOptions) -> Result<Vec<f64>> {
    if tau < 1 || max_m < 1 {
        return Err(Error::InvalidParameter("tau and max_m must be at least 1".into()));
    }
    let needed = (max_m - 1) * tau + 2;
    if series.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: series.len(),
        });
    }
    Ok((1..=max_m).map(|m| fnn_fraction(series, m, tau, opts)).collect())
}

fn first_below(curve: &[f64], threshold: f64) -> usize {
    curve
        .iter()
        .position(|&f| f < threshold)
        .map_or(curve.len(), |i| i + 1)
}

/// Smallest `m ≤ max_m` whose FNN fraction is below `threshold`, else
/// `max_m`.
pub fn false_nearest_neighbors(series: &[f64], tau: usize, max_m: usize, threshold: f64) -> Result<usize> {
    false_nearest_neighbors_with(series, tau, max_m, threshold, &FnnOptions::default())
}

pub fn false_nearest_neighbors_with(
    series: &[f64],
    tau: usize,
    max_m: usize,
    threshold: f64,
    opts: &FnnOptions,
) -> Result<usize> {
    let curve = fnn_curve(series, tau, max_m, opts)?;
    Ok(first_below(&curve, threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub max_tau: usize,
    pub bins: Option<usize>,
    pub max_m: usize,
    pub fnn_threshold: f64,
    pub fnn: FnnOptions,
    /// Number of contiguous segments evaluated; the modal `m` and median `τ`
    /// are reported.
    pub repeats: usize,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            max_tau: 64,
            bins: None,
            max_m: 10,
            fnn_threshold: 0.01,
            fnn: FnnOptions::default(),
            repeats: 1,
        }
    }
}

/// Selected parameters plus the curves they were read from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub m: usize,
    pub tau: usize,
    pub mi_curve: Vec<f64>,
    pub fnn_fraction_curve: Vec<f64>,
}

impl EmbeddingReport {
    pub fn params(&self) -> EmbeddingParams {
        EmbeddingParams { m: self.m, tau: self.tau }
    }
}

fn select_once(series: &[f64], opts: &SelectionOptions) -> Result<EmbeddingReport> {
    check_nonconstant(series)?;
    let max_tau = opts.max_tau.min(series.len() / 4).max(1);
    let bins = opts.bins.unwrap_or_else(|| default_bins(series.len()));
    let tau = mutual_information_delay(series, max_tau, Some(bins))?;
    let mi_curve = mutual_information_curve(series, max_tau, bins)?;
    // never ask for more dimensions than the series can hold
    let max_m = opts.max_m.min((series.len().saturating_sub(2)) / tau + 1).max(1);
    let fnn_fraction_curve = fnn_curve(series, tau, max_m, &opts.fnn)?;
    let m = first_below(&fnn_fraction_curve, opts.fnn_threshold);
    Ok(EmbeddingReport {
        m,
        tau,
        mi_curve,
        fnn_fraction_curve,
    })
}

/// Mutual-information delay followed by false nearest neighbors.
pub fn select_embedding(series: &[f64]) -> Result<EmbeddingParams> {
    Ok(select_embedding_report(series, &SelectionOptions::default())?.params())
}

pub fn select_embedding_report(series: &[f64], opts: &SelectionOptions) -> Result<EmbeddingReport> {
    check_nonconstant(series)?;
    let repeats = opts.repeats.max(1);
    if repeats == 1 {
        return select_once(series, opts);
    }
    let seg = series.len() / repeats;
    let reports: Vec<EmbeddingReport> = (0..repeats)
        .map(|r| select_once(&series[r * seg..(r + 1) * seg], opts))
        .collect::<Result<_>>()?;
    let mut taus: Vec<usize> = reports.iter().map(|r| r.tau).collect();
    taus.sort_unstable();
    let tau = taus[(taus.len() - 1) / 2];
    let mut counts = std::collections::BTreeMap::new();
    for r in &reports {
        *counts.entry(r.m).or_insert(0usize) += 1;
    }
    // ties resolve to the smallest m
    let m = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&m, _)| m)
        .unwrap_or(1);
    let full = select_once(series, opts)?;
    Ok(EmbeddingReport { m, tau, ..full })
}

/// Per-channel delays with one shared dimension: the largest per-channel
/// FNN result.
pub fn select_embedding_channels(series: &TimeSeries, opts: &SelectionOptions) -> Result<Vec<EmbeddingReport>> {
    let mut reports: Vec<EmbeddingReport> = series
        .channels()
        .iter()
        .map(|c| select_embedding_report(c, opts))
        .collect::<Result<_>>()?;
    let m = reports.iter().map(|r| r.m).max().unwrap_or(1);
    for r in &mut reports {
        r.m = m;
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_small_examples() {
        let z = [1.0, 2.0, 3.0, 4.0, 5.0];
        let t = delay_embed(&z, EmbeddingParams::new(2, 1).unwrap()).unwrap();
        assert_eq!(
            t.points,
            vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0], vec![4.0, 5.0]]
        );
        let t = delay_embed(&z, EmbeddingParams::new(3, 2).unwrap()).unwrap();
        assert_eq!(t.points, vec![vec![1.0, 3.0, 5.0]]);
        let t = delay_embed(&z, EmbeddingParams::new(1, 4).unwrap()).unwrap();
        assert_eq!(t.points.concat(), z.to_vec());
    }

    #[test]
    fn embed_too_short() {
        let err = delay_embed(&[1.0, 2.0], EmbeddingParams::new(3, 1).unwrap()).unwrap_err();
        assert_eq!(err, Error::TooShort { needed: 3, got: 2 });
        assert!(EmbeddingParams::new(0, 1).is_err());
    }

    #[test]
    fn patch_shapes() {
        let traj = PhaseTrajectory {
            points: (0..8).map(|i| vec![i as f64, -(i as f64)]).collect(),
            source_len: 8,
        };
        let p = patch(&traj, 2).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p[0], vec![0.0, -0.0, 1.0, -1.0]);
        assert_eq!(patch(&traj, 1).unwrap(), traj.points);

        let traj9 = PhaseTrajectory {
            points: (0..9).map(|i| vec![i as f64]).collect(),
            source_len: 9,
        };
        let p = patch(&traj9, 4).unwrap();
        assert_eq!(p, vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]]);
        assert!(patch(&traj9, 10).unwrap().is_empty());
    }

    #[test]
    fn constant_series_is_degenerate() {
        let z = vec![3.0; 400];
        assert!(matches!(mutual_information_delay(&z, 20, None), Err(Error::DegenerateSeries(_))));
        assert!(matches!(select_embedding(&z), Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn mi_delay_requires_length() {
        let z: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        assert!(matches!(mutual_information_delay(&z, 10, None), Err(Error::TooShort { .. })));
    }

    #[test]
    fn fnn_too_short() {
        let z: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let err = false_nearest_neighbors(&z, 3, 5, 0.01).unwrap_err();
        assert_eq!(err, Error::TooShort { needed: 14, got: 10 });
    }

    #[test]
    fn bins_clamped() {
        assert_eq!(default_bins(10), 8);
        assert_eq!(default_bins(2000), 20);
        assert_eq!(default_bins(1_000_000), 64);
    }

    #[test]
    fn first_local_minimum_fallback_is_argmin() {
        assert_eq!(first_local_minimum(&[5.0, 4.0, 3.0, 2.0, 1.0]), 4);
        assert_eq!(first_local_minimum(&[5.0, 4.0, 4.5, 2.0, 3.0]), 1);
    }
}
