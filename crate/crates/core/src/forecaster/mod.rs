//! End-to-end forecasting pipeline.
//!
//! Each channel is handled on its own: a window is normalized, delay
//! embedded and cut into patches, the patches drive the polynomial
//! projection scan, the scan states are split into a multiwavelet pyramid,
//! every scale is evolved one step, and the finest reconstructed scale is
//! read out linearly into `H` future samples. Every learned map is a ridge
//! regression.

mod config;
mod model;

use serde::{Deserialize, Serialize};

pub use config::{EmbeddingChoice, ForecasterConfig};
pub use model::{
    fit, fit_embedding_to_window, instance_stats, ChannelLayout, ChannelModel, FittedForecaster, ForecastResult,
    ScaleEvolution,
};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub per_channel_mse: Vec<f64>,
    pub per_channel_mae: Vec<f64>,
}

/// Mean squared and absolute error over every horizon step and channel.
pub fn evaluate(predictions: &TimeSeries, truth: &TimeSeries) -> Result<Metrics> {
    if predictions.n_channels() != truth.n_channels() || predictions.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "predictions {}x{} vs truth {}x{}",
            predictions.len(),
            predictions.n_channels(),
            truth.len(),
            truth.n_channels()
        )));
    }
    if predictions.is_empty() || predictions.n_channels() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut per_channel_mse = Vec::with_capacity(truth.n_channels());
    let mut per_channel_mae = Vec::with_capacity(truth.n_channels());
    for (p, t) in predictions.channels().iter().zip(truth.channels()) {
        let n = p.len() as f64;
        per_channel_mse.push(p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n);
        per_channel_mae.push(p.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>() / n);
    }
    let c = per_channel_mse.len() as f64;
    Ok(Metrics {
        mse: per_channel_mse.iter().sum::<f64>() / c,
        mae: per_channel_mae.iter().sum::<f64>() / c,
        per_channel_mse,
        per_channel_mae,
    })
}

/// `z̃ = (1 − α) z + α z̄`.
pub fn teacher_force_modulate(z_pred: &[f64], z_true: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside [0, 1]")));
    }
    if z_pred.len() != z_true.len() {
        return Err(Error::DimensionMismatch {
            expected: z_pred.len(),
            got: z_true.len(),
        });
    }
    Ok(z_pred.iter().zip(z_true).map(|(p, t)| (1.0 - alpha) * p + alpha * t).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutResult {
    /// `horizon_total` forecast rows.
    pub predictions: TimeSeries,
    /// Window fed to the model at each step, one entry per rollout window.
    pub inputs: Vec<TimeSeries>,
}

/// Autoregressive forecast over `horizon_total` samples. After each window
/// the forecast is blended with `truth` (when given) before it becomes
/// context for the next window.
pub fn rollout(
    model: &FittedForecaster,
    context: &TimeSeries,
    horizon_total: usize,
    truth: Option<&TimeSeries>,
    alpha: f64,
) -> Result<RolloutResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside [0, 1]")));
    }
    if let Some(t) = truth {
        if t.len() < horizon_total || t.n_channels() != context.n_channels() {
            return Err(Error::ShapeMismatch(format!(
                "truth {}x{} for a {}-step rollout over {} channels",
                t.len(),
                t.n_channels(),
                horizon_total,
                context.n_channels()
            )));
        }
    }
    let (w, h) = (model.window(), model.horizon());
    if context.len() < w {
        return Err(Error::WindowTooShort {
            needed: w,
            got: context.len(),
        });
    }
    let mut ctx: Vec<Vec<f64>> = context
        .channels()
        .iter()
        .map(|c| c[c.len() - w..].to_vec())
        .collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(horizon_total); ctx.len()];
    let mut inputs = Vec::new();
    let mut done = 0;
    while done < horizon_total {
        let input = TimeSeries::from_channels(ctx.iter().map(|c| c[c.len() - w..].to_vec()).collect())?;
        let pred = model.predict(&input)?.predictions;
        inputs.push(input);
        let take = h.min(horizon_total - done);
        for (c, series) in ctx.iter_mut().enumerate() {
            let p = &pred.channel(c)[..take];
            out[c].extend_from_slice(p);
            let next = match truth {
                Some(t) => teacher_force_modulate(p, &t.channel(c)[done..done + take], alpha)?,
                None => p.to_vec(),
            };
            series.extend(next);
        }
        done += take;
    }
    Ok(RolloutResult {
        predictions: TimeSeries::from_channels(out)?,
        inputs,
    })
}

/// Forecasts for every window `[s, s+W)` with `s + W + H ≤ len`, stepping
/// by `stride`, paired with the realized continuation.
pub fn backtest(model: &FittedForecaster, series: &TimeSeries, stride: usize) -> Result<(Metrics, usize)> {
    let (w, h) = (model.window(), model.horizon());
    if series.len() < w + h {
        return Err(Error::TooShort {
            needed: w + h,
            got: series.len(),
        });
    }
    if stride < 1 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    use rayon::prelude::*;
    let starts: Vec<usize> = (0..=series.len() - w - h).step_by(stride).collect();
    let per_channel = (0..series.n_channels())
        .map(|c| {
            let z = series.channel(c);
            starts
                .par_iter()
                .map(|&s| {
                    let p = model.predict_channel(c, &z[s..s + w])?;
                    let t = &z[s + w..s + w + h];
                    let se: f64 = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
                    let ae: f64 = p.iter().zip(t).map(|(a, b)| (a - b).abs()).sum();
                    Ok((se, ae))
                })
                .collect::<Result<Vec<(f64, f64)>>>()
                .map(|errs| errs.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1)))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = (starts.len() * h) as f64;
    let per_channel_mse: Vec<f64> = per_channel.iter().map(|(se, _)| se / n).collect();
    let per_channel_mae: Vec<f64> = per_channel.iter().map(|(_, ae)| ae / n).collect();
    let c = per_channel.len() as f64;
    Ok((
        Metrics {
            mse: per_channel_mse.iter().sum::<f64>() / c,
            mae: per_channel_mae.iter().sum::<f64>() / c,
            per_channel_mse,
            per_channel_mae,
        },
        starts.len(),
    ))
}
