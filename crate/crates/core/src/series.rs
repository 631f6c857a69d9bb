use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multivariate, uniformly sampled observations stored channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    channels: Vec<Vec<f64>>,
}

impl TimeSeries {
    /// Builds a series from per-channel columns of equal length.
    pub fn from_channels(channels: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = channels.first() {
            let len = first.len();
            if let Some(bad) = channels.iter().find(|c| c.len() != len) {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    got: bad.len(),
                });
            }
        }
        Ok(Self { channels })
    }

    /// Builds a series from time-major rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let mut channels = vec![Vec::with_capacity(rows.len()); width];
        for row in rows {
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    got: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                channels[c].push(*v);
            }
        }
        Ok(Self { channels })
    }

    pub fn univariate(values: Vec<f64>) -> Self {
        Self {
            channels: vec![values],
        }
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.channels.iter().map(|c| c[i]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i)).collect()
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            channels: self.channels.iter().map(|c| c[start..end].to_vec()).collect(),
        }
    }
}
