//! Naive forecasting baselines scored on the same windows as
//! [`attraos_core::forecaster::backtest`].

use attraos_core::TimeSeries;

/// Window starts `s` with `s + window + horizon ≤ len`, every `stride`.
pub fn window_starts(len: usize, window: usize, horizon: usize, stride: usize) -> Vec<usize> {
    if len < window + horizon {
        return Vec::new();
    }
    (0..=len - window - horizon).step_by(stride.max(1)).collect()
}

/// Mean squared error of a per-window forecast rule, averaged over
/// windows, horizon steps and channels.
fn score<F>(series: &TimeSeries, window: usize, horizon: usize, stride: usize, forecast: F) -> f64
where
    F: Fn(usize, &[f64]) -> f64,
{
    let starts = window_starts(series.len(), window, horizon, stride);
    let mut total = 0.0;
    for (c, x) in series.channels().iter().enumerate() {
        for &s in &starts {
            let guess = forecast(c, &x[s..s + window]);
            total += x[s + window..s + window + horizon].iter().map(|v| (v - guess).powi(2)).sum::<f64>();
        }
    }
    total / (starts.len() * horizon * series.n_channels()) as f64
}

/// Repeats the last observed value across the horizon.
pub fn persistence_mse(series: &TimeSeries, window: usize, horizon: usize, stride: usize) -> f64 {
    score(series, window, horizon, stride, |_, w| w[w.len() - 1])
}

/// Predicts a fixed level per channel, typically the training mean.
pub fn constant_mse(series: &TimeSeries, levels: &[f64], window: usize, horizon: usize, stride: usize) -> f64 {
    score(series, window, horizon, stride, |c, _| levels[c])
}

pub fn channel_means(series: &TimeSeries) -> Vec<f64> {
    series
        .channels()
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_examples() {
        let s = TimeSeries::univariate(vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(window_starts(5, 2, 1, 1), vec![0, 1, 2]);
        assert_eq!(window_starts(5, 2, 1, 2), vec![0, 2]);
        assert!(window_starts(2, 2, 1, 1).is_empty());
        assert_eq!(persistence_mse(&s, 2, 1, 1), 1.0);
        assert_eq!(persistence_mse(&s, 2, 2, 1), 2.5);
        assert_eq!(constant_mse(&s, &[2.0], 2, 1, 1), 5.0 / 3.0);
        assert_eq!(channel_means(&s), vec![2.0]);
    }
}
