//! Maximal Lyapunov exponent by nearest-neighbor divergence (Rosenstein).
//!
//! Each embedded point is paired with its nearest neighbor outside a
//! Theiler window, the log distance between the two orbits is followed
//! for `horizon` steps, and the averaged curve is fit by a straight line.
//! The slope is reported per sample step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ols_line, sq_dist};
use crate::psr::{delay_embed, EmbeddingParams};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub mle: f64,
    /// Mean log separation at horizons `0 … horizon`.
    pub divergence_curve: Vec<f64>,
    /// Inclusive horizon range used for the slope.
    pub fit_range: (usize, usize),
}

impl LyapunovEstimate {
    /// Exponent per unit of time for sampling interval `dt`.
    pub fn per_time_unit(&self, dt: f64) -> f64 {
        self.mle / dt
    }
}

pub fn default_theiler(params: EmbeddingParams) -> usize {
    params.tau * params.m
}

pub fn default_fit_range(horizon: usize) -> (usize, usize) {
    (1, (horizon / 2).max(2))
}

pub fn estimate_mle(
    series: &[f64],
    params: EmbeddingParams,
    horizon: usize,
    theiler: Option<usize>,
    fit_range: Option<(usize, usize)>,
) -> Result<LyapunovEstimate> {
    let params = EmbeddingParams::new(params.m, params.tau)?;
    if horizon < 2 {
        return Err(Error::InvalidParameter("horizon must be at least 2".into()));
    }
    let theiler = theiler.unwrap_or_else(|| default_theiler(params));
    let needed = (params.m - 1) * params.tau + horizon + theiler + 2;
    if series.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: series.len(),
        });
    }
    let fit_range = fit_range.unwrap_or_else(|| default_fit_range(horizon));
    if fit_range.0 >= fit_range.1 || fit_range.1 > horizon {
        return Err(Error::InvalidParameter(format!(
            "fit range {fit_range:?} must satisfy start < end <= {horizon}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    let first = series[0];
    if series.iter().all(|&v| v == first) {
        return Err(Error::DegenerateSeries("constant series has no divergence".into()));
    }

    let points = delay_embed(series, params)?.points;
    let refs = points.len() - horizon;
    let partial = (0..refs)
        .into_par_iter()
        .fold(
            || (vec![0.0; horizon + 1], vec![0usize; horizon + 1]),
            |(mut sum, mut count), i| {
                let mut best = (usize::MAX, f64::INFINITY);
                for j in 0..refs {
                    if i.abs_diff(j) <= theiler {
                        continue;
                    }
                    let d = sq_dist(&points[i], &points[j]);
                    if d > 0.0 && d < best.1 {
                        best = (j, d);
                    }
                }
                if best.0 != usize::MAX {
                    let j = best.0;
                    for k in 0..=horizon {
                        let d = sq_dist(&points[i + k], &points[j + k]);
                        if d > 0.0 {
                            sum[k] += 0.5 * d.ln();
                            count[k] += 1;
                        }
                    }
                }
                (sum, count)
            },
        )
        .reduce(
            || (vec![0.0; horizon + 1], vec![0usize; horizon + 1]),
            |(mut s1, mut c1), (s2, c2)| {
                s1.iter_mut().zip(s2).for_each(|(a, b)| *a += b);
                c1.iter_mut().zip(c2).for_each(|(a, b)| *a += b);
                (s1, c1)
            },
        );
    let (sum, count) = partial;
    if count.iter().any(|&c| c == 0) {
        return Err(Error::DegenerateSeries(
            "no neighbor pairs with positive separation".into(),
        ));
    }
    let curve: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let xs: Vec<f64> = (fit_range.0..=fit_range.1).map(|k| k as f64).collect();
    let (slope, _) = ols_line(&xs, &curve[fit_range.0..=fit_range.1]);
    Ok(LyapunovEstimate {
        mle: slope,
        divergence_curve: curve,
        fit_range,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleTable {
    pub per_channel: Vec<LyapunovEstimate>,
    pub mean_mle: f64,
}

impl MleTable {
    pub fn mle_per_channel(&self) -> Vec<f64> {
        self.per_channel.iter().map(|e| e.mle).collect()
    }
}

/// Channel-wise [`estimate_mle`] and the arithmetic mean of the exponents.
pub fn mle_table(
    dataset: &TimeSeries,
    params: &[EmbeddingParams],
    horizon: usize,
    theiler: Option<usize>,
    fit_range: Option<(usize, usize)>,
) -> Result<MleTable> {
    if params.len() != dataset.n_channels() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n_channels(),
            got: params.len(),
        });
    }
    if dataset.n_channels() == 0 {
        return Err(Error::EmptyInput);
    }
    let per_channel = dataset
        .channels()
        .iter()
        .zip(params)
        .map(|(c, p)| estimate_mle(c, *p, horizon, theiler, fit_range))
        .collect::<Result<Vec<_>>>()?;
    let mean_mle = per_channel.iter().map(|e| e.mle).sum::<f64>() / per_channel.len() as f64;
    Ok(MleTable { per_channel, mean_mle })
}
