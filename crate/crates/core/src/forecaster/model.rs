use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EmbeddingChoice, ForecasterConfig};
use crate::error::{Error, Result};
use crate::evolution::spectral::{max_modes, SpectralFitter};
use crate::evolution::{apply_spectral_evolution, kmeans_partition, DirectModel, EvolutionStrategy, HopfieldEvolution, SpectralEvolutionModel};
use crate::linalg::RidgeAccumulator;
use crate::multiwavelet::{build_filters, decompose, reconstruct, Pyramid, WaveletFilters};
use crate::polyproj::{discretize, DiscretizedSsm, LegendreBasis, SsmParams};
use crate::psr::{select_embedding_report, EmbeddingParams, SelectionOptions};
use crate::rng::derive_seed;
use crate::series::TimeSeries;

/// Shapes of one channel's representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelLayout {
    pub embedding: EmbeddingParams,
    /// `L' = ⌊(W − (m−1)τ) / p⌋`.
    pub n_patches: usize,
    /// Next power of two at or above `n_patches`.
    pub padded_len: usize,
    /// Patch vector length `D = m·p`.
    pub patch_dim: usize,
}

impl ChannelLayout {
    pub fn new(embedding: EmbeddingParams, window: usize, patch_len: usize) -> Result<Self> {
        let span = (embedding.m - 1) * embedding.tau;
        let points = window.checked_sub(span).filter(|&n| n >= patch_len).ok_or(Error::WindowTooShort {
            needed: span + patch_len,
            got: window,
        })?;
        let n_patches = points / patch_len;
        Ok(Self {
            embedding,
            n_patches,
            padded_len: n_patches.next_power_of_two(),
            patch_dim: embedding.m * patch_len,
        })
    }

    pub fn pad(&self) -> usize {
        self.padded_len - self.n_patches
    }

    /// Length of the flattened readout input, `L'·D`.
    pub fn feature_len(&self) -> usize {
        self.n_patches * self.patch_dim
    }

    pub fn max_levels(&self) -> usize {
        self.padded_len.trailing_zeros() as usize
    }
}

/// Per-scale evolution state, scales ordered finest detail first and the
/// coarse sequence last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleEvolution {
    Frequency(Vec<SpectralEvolutionModel>),
    Direct(Vec<DirectModel>),
    Hopfield(Vec<HopfieldEvolution>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub layout: ChannelLayout,
    /// Mean and standard deviation of the channel's training data.
    pub train_mean: f64,
    pub train_std: f64,
    pub evolution: ScaleEvolution,
    /// `W_h`: `L'·D × H`.
    pub readout: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedForecaster {
    pub config: ForecasterConfig,
    pub ssm: DiscretizedSsm,
    pub filters: WaveletFilters,
    pub channels: Vec<ChannelModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    /// `H` rows, one column per channel.
    pub predictions: TimeSeries,
}

/// Window mean and standard deviation, with `σ := 1` for a flat window.
pub fn instance_stats(window: &[f64]) -> (f64, f64) {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 0.0 { std } else { 1.0 })
}

fn normalized(values: &[f64], mean: f64, std: f64) -> Vec<f64> {
    values.iter().map(|v| (v - mean) / std).collect()
}

/// Fixed pieces shared by every channel.
struct Stage<'a> {
    config: &'a ForecasterConfig,
    ssm: &'a DiscretizedSsm,
    filters: &'a WaveletFilters,
    right_end: Vec<f64>,
}

impl<'a> Stage<'a> {
    fn new(config: &'a ForecasterConfig, ssm: &'a DiscretizedSsm, filters: &'a WaveletFilters) -> Self {
        Self {
            config,
            ssm,
            filters,
            right_end: LegendreBasis::new(config.poly_order).right_endpoint(),
        }
    }

    /// Embedded patches `u_ℓ ∈ R^D`, oldest first.
    fn patches(&self, layout: &ChannelLayout, window: &[f64]) -> Vec<Vec<f64>> {
        let EmbeddingParams { m, tau } = layout.embedding;
        let p = self.config.patch_len;
        let points = window.len() - (m - 1) * tau;
        let skip = points - layout.n_patches * p;
        (0..layout.n_patches)
            .map(|l| {
                let mut u = Vec::with_capacity(m * p);
                for k in 0..p {
                    let j = skip + l * p + k;
                    u.extend((0..m).map(|i| window[j + i * tau]));
                }
                u
            })
            .collect()
    }

    /// Scan states over the patches, left-padded with the earliest state.
    fn representation(&self, layout: &ChannelLayout, window: &[f64]) -> Vec<DMatrix<f64>> {
        let n = self.config.poly_order;
        let b = &self.ssm.b_bar;
        let mut state = DMatrix::zeros(layout.patch_dim, n);
        let mut states = Vec::with_capacity(layout.padded_len);
        for u in self.patches(layout, window) {
            let bu = DMatrix::from_fn(u.len(), n, |d, k| b[k] * u[d]);
            state = self.ssm.a_bar.apply(&state) + bu;
            states.push(state.clone());
        }
        let first = states[0].clone();
        let mut padded = vec![first; layout.pad()];
        padded.extend(states);
        padded
    }

    fn pyramid(&self, layout: &ChannelLayout, window: &[f64]) -> Result<Pyramid> {
        decompose(&self.representation(layout, window), self.filters, self.config.levels)
    }

    fn evolve(&self, evolution: &ScaleEvolution, mut pyramid: Pyramid) -> Result<Pyramid> {
        for (s, seq) in pyramid.scales_mut().into_iter().enumerate() {
            match evolution {
                ScaleEvolution::Frequency(models) => *seq = apply_spectral_evolution(seq, &models[s])?,
                ScaleEvolution::Direct(models) => rowwise(seq, |r| models[s].apply(r)),
                ScaleEvolution::Hopfield(models) => rowwise(seq, |r| models[s].apply(r)),
            }
        }
        Ok(pyramid)
    }

    /// Finest-scale reconstruction without the padded positions, each
    /// block contracted with `φ(1)` and flattened position-major.
    fn features(&self, layout: &ChannelLayout, evolved: &Pyramid) -> Result<Vec<f64>> {
        let fine = reconstruct(evolved, self.filters)?;
        let mut out = Vec::with_capacity(layout.feature_len());
        for block in &fine[layout.pad()..] {
            for d in 0..block.nrows() {
                out.push((0..block.ncols()).map(|k| block[(d, k)] * self.right_end[k]).sum());
            }
        }
        Ok(out)
    }

    fn channel_features(&self, model: &ChannelModel, window_norm: &[f64]) -> Result<Vec<f64>> {
        let pyr = self.pyramid(&model.layout, window_norm)?;
        let evolved = self.evolve(&model.evolution, pyr)?;
        self.features(&model.layout, &evolved)
    }

    fn predict_window(&self, model: &ChannelModel, window: &[f64]) -> Result<Vec<f64>> {
        let (mean, std) = instance_stats(window);
        let f = self.channel_features(model, &normalized(window, mean, std))?;
        let w = &model.readout;
        Ok((0..w.ncols())
            .map(|h| {
                let y: f64 = f.iter().enumerate().map(|(i, v)| v * w[(i, h)]).sum();
                y * std + mean
            })
            .collect())
    }
}

fn rowwise<F: Fn(&[f64]) -> Vec<f64>>(seq: &mut [DMatrix<f64>], f: F) {
    for block in seq.iter_mut() {
        for d in 0..block.nrows() {
            let row: Vec<f64> = block.row(d).iter().copied().collect();
            for (k, v) in f(&row).into_iter().enumerate() {
                block[(d, k)] = v;
            }
        }
    }
}

/// Scale `s` block `i` covers fine positions starting at `i·2^{s+1}` for
/// details and `i·2^{levels}` for the coarse sequence.
fn touches_padding(scale: usize, levels: usize, index: usize, pad: usize) -> bool {
    let span = if scale < levels { 1 << (scale + 1) } else { 1 << levels };
    index * span < pad
}

/// Shrinks an automatically selected embedding until the window holds at
/// least two patches.
pub fn fit_embedding_to_window(params: EmbeddingParams, window: usize, patch_len: usize) -> EmbeddingParams {
    let room = window.saturating_sub(2 * patch_len);
    let mut m = params.m.max(1);
    while m > 1 && m - 1 > room {
        m -= 1;
    }
    let tau = if m == 1 { params.tau } else { params.tau.min(room / (m - 1)).max(1) };
    EmbeddingParams { m, tau }
}

/// Training example `(current window, window H ahead, target)` normalized
/// by the current window's statistics.
struct Example {
    current: Vec<f64>,
    ahead: Vec<f64>,
    target: Vec<f64>,
}

fn example(series: &[f64], start: usize, w: usize, h: usize) -> Example {
    let (mean, std) = instance_stats(&series[start..start + w]);
    Example {
        current: normalized(&series[start..start + w], mean, std),
        ahead: normalized(&series[start + h..start + h + w], mean, std),
        target: normalized(&series[start + w..start + w + h], mean, std),
    }
}

fn scale_lengths(layout: &ChannelLayout, levels: usize) -> Vec<usize> {
    let p = layout.padded_len;
    (0..levels).map(|s| p >> (s + 1)).chain(std::iter::once(p >> levels)).collect()
}

/// Windows handled by one sequential accumulator before the ordered merge.
const FOLD_CHUNK: usize = 64;

/// Folds training windows in fixed chunks and merges the chunk results in
/// order, so the floating-point result does not depend on thread count.
fn fold_windows<A, I, F, M>(starts: &[usize], init: I, step: F, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, usize) -> Result<()> + Sync,
    M: Fn(&mut A, A),
{
    let parts = starts
        .par_chunks(FOLD_CHUNK)
        .map(|chunk| {
            let mut acc = init();
            for &s in chunk {
                step(&mut acc, s)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<A>>>()?;
    let mut parts = parts.into_iter();
    let mut total = parts.next().unwrap_or_else(&init);
    for p in parts {
        merge(&mut total, p);
    }
    Ok(total)
}

fn fit_channel(stage: &Stage, series: &[f64]) -> Result<ChannelModel> {
    let cfg = stage.config;
    let needed = 2 * cfg.example_span();
    if series.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    let embedding = match cfg.embedding {
        EmbeddingChoice::Fixed(p) => p,
        EmbeddingChoice::Auto => fit_embedding_to_window(
            select_embedding_report(series, &SelectionOptions::default())?.params(),
            cfg.window,
            cfg.patch_len,
        ),
    };
    let layout = ChannelLayout::new(embedding, cfg.window, cfg.patch_len)?;
    if cfg.levels > layout.max_levels() {
        return Err(Error::InvalidParameter(format!(
            "{} levels exceed log2 of the padded patch count {}",
            cfg.levels, layout.padded_len
        )));
    }
    let (train_mean, train_std) = instance_stats(series);
    let (w, h) = (cfg.window, cfg.horizon);
    let starts: Vec<usize> = (0..=series.len() - w - h).step_by(cfg.stride).collect();

    let evolution = match cfg.evolution_strategy {
        EvolutionStrategy::Frequency => fit_frequency(stage, &layout, series, &starts)?,
        EvolutionStrategy::Direct | EvolutionStrategy::Hopfield => fit_local(stage, &layout, series, &starts)?,
    };

    let mut partial = ChannelModel {
        layout,
        train_mean,
        train_std,
        evolution,
        readout: DMatrix::zeros(0, 0),
    };
    let flen = layout.feature_len();
    let acc = fold_windows(
        &starts,
        || RidgeAccumulator::new(flen, h),
        |acc, s| {
            let ex = example(series, s, w, h);
            acc.add(&stage.channel_features(&partial, &ex.current)?, &ex.target);
            Ok(())
        },
        |a, b| a.merge(b),
    );
    let mut acc = acc?;
    let per_sample = cfg.readout_lambda * acc.count() as f64;
    partial.readout = acc.solve(per_sample)?;
    Ok(partial)
}

fn fit_frequency(stage: &Stage, layout: &ChannelLayout, series: &[f64], starts: &[usize]) -> Result<ScaleEvolution> {
    let cfg = stage.config;
    let (w, h, n) = (cfg.window, cfg.horizon, cfg.poly_order);
    let lengths = scale_lengths(layout, cfg.levels);
    let new_fitters = || -> Result<Vec<SpectralFitter>> {
        lengths
            .iter()
            .map(|&len| {
                let modes = cfg.m_modes.map_or(max_modes(len), |m| m.min(max_modes(len)));
                SpectralFitter::new(modes, len, n)
            })
            .collect()
    };
    let template = new_fitters()?;
    let fitters = fold_windows(
        starts,
        || template.clone(),
        |fitters, s| {
            let ex = example(series, s, w, h);
            let cur = stage.pyramid(layout, &ex.current)?;
            let next = stage.pyramid(layout, &ex.ahead)?;
            for ((f, a), b) in fitters.iter_mut().zip(cur.scales()).zip(next.scales()) {
                f.add_pair(a, b)?;
            }
            Ok(())
        },
        |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
    )?;
    let models = fitters
        .iter()
        .map(|f| f.finish(cfg.ridge_lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaleEvolution::Frequency(models))
}

/// Rows of unpadded blocks at every scale, as `(scale, row)` pairs.
fn scale_rows<'p>(pyr: &'p Pyramid, levels: usize, pad: usize) -> impl Iterator<Item = (usize, usize, Vec<f64>)> + 'p {
    pyr.scales().into_iter().enumerate().flat_map(move |(s, seq)| {
        seq.iter()
            .enumerate()
            .filter(move |(i, _)| !touches_padding(s, levels, *i, pad))
            .flat_map(move |(i, block)| (0..block.nrows()).map(move |d| (s, i * block.nrows() + d, block.row(d).iter().copied().collect())))
    })
}

fn fit_local(stage: &Stage, layout: &ChannelLayout, series: &[f64], starts: &[usize]) -> Result<ScaleEvolution> {
    let cfg = stage.config;
    let (w, h, n) = (cfg.window, cfg.horizon, cfg.poly_order);
    let levels = cfg.levels;
    let n_scales = levels + 1;
    let pad = layout.pad();

    let rows_per_window = layout.padded_len * layout.patch_dim;
    let step = (starts.len() * rows_per_window).div_ceil(cfg.kmeans_sample.max(1)).max(1);
    let mut samples: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_scales];
    for &s in starts.iter().step_by(step) {
        let ex = example(series, s, w, h);
        for (scale, _, row) in scale_rows(&stage.pyramid(layout, &ex.current)?, levels, pad) {
            samples[scale].push(row);
        }
    }
    let partitions = samples
        .iter()
        .enumerate()
        .map(|(s, pts)| {
            if pts.is_empty() {
                return Ok(None);
            }
            let k = cfg.n_clusters.min(pts.len());
            kmeans_partition(pts, k, derive_seed(cfg.seed, s as u64), cfg.kmeans_max_iters).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    let centroids: Vec<Vec<Vec<f64>>> = partitions
        .iter()
        .map(|p| p.as_ref().map_or_else(Vec::new, |p| p.centroids.clone()))
        .collect();

    #[derive(Clone)]
    struct LocalAcc {
        ridge: Vec<Vec<RidgeAccumulator>>,
        succ_sum: Vec<Vec<Vec<f64>>>,
        succ_count: Vec<Vec<usize>>,
    }
    let template = LocalAcc {
        ridge: centroids.iter().map(|c| vec![RidgeAccumulator::new(n, n); c.len()]).collect(),
        succ_sum: centroids.iter().map(|c| vec![vec![0.0; n]; c.len()]).collect(),
        succ_count: centroids.iter().map(|c| vec![0; c.len()]).collect(),
    };
    let nearest = |scale: usize, x: &[f64]| -> usize {
        let mut best = (0, f64::INFINITY);
        for (c, centroid) in centroids[scale].iter().enumerate() {
            let d = crate::linalg::sq_dist(centroid, x);
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    };
    let strategy = cfg.evolution_strategy;
    let acc = fold_windows(
        starts,
        || template.clone(),
        |acc, s| {
            let ex = example(series, s, w, h);
            let cur = stage.pyramid(layout, &ex.current)?;
            let next = stage.pyramid(layout, &ex.ahead)?;
            for ((scale, _, x), (_, _, y)) in scale_rows(&cur, levels, pad).zip(scale_rows(&next, levels, pad)) {
                let c = nearest(scale, &x);
                match strategy {
                    EvolutionStrategy::Direct => acc.ridge[scale][c].add(&x, &y),
                    _ => {
                        acc.succ_sum[scale][c].iter_mut().zip(&y).for_each(|(a, b)| *a += b);
                        acc.succ_count[scale][c] += 1;
                    }
                }
            }
            Ok(())
        },
        |a, b| {
            for (sa, sb) in a.ridge.iter_mut().zip(b.ridge) {
                for (x, y) in sa.iter_mut().zip(sb) {
                    x.merge(y);
                }
            }
            for (sa, sb) in a.succ_sum.iter_mut().zip(&b.succ_sum) {
                for (x, y) in sa.iter_mut().zip(sb) {
                    x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
                }
            }
            for (sa, sb) in a.succ_count.iter_mut().zip(&b.succ_count) {
                sa.iter_mut().zip(sb).for_each(|(p, q)| *p += q);
            }
        },
    )?;

    match strategy {
        EvolutionStrategy::Direct => {
            let mut models = Vec::with_capacity(n_scales);
            for (scale, accs) in acc.ridge.into_iter().enumerate() {
                let operators = accs
                    .into_iter()
                    .map(|mut a| {
                        if a.count() == 0 {
                            Ok(DMatrix::identity(n, n))
                        } else {
                            a.solve(cfg.ridge_lambda).map(|beta| beta.transpose())
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (centroids, operators) = if centroids[scale].is_empty() {
                    (vec![vec![0.0; n]], vec![DMatrix::identity(n, n)])
                } else {
                    (centroids[scale].clone(), operators)
                };
                models.push(DirectModel {
                    centroids,
                    operators,
                    ridge_lambda: cfg.ridge_lambda,
                });
            }
            Ok(ScaleEvolution::Direct(models))
        }
        _ => {
            let models = (0..n_scales)
                .map(|scale| {
                    let keys = centroids[scale].clone();
                    let values = keys
                        .iter()
                        .enumerate()
                        .map(|(c, key)| {
                            let count = acc.succ_count[scale][c];
                            if count == 0 {
                                key.clone()
                            } else {
                                acc.succ_sum[scale][c].iter().map(|v| v / count as f64).collect()
                            }
                        })
                        .collect();
                    HopfieldEvolution {
                        keys,
                        values,
                        beta: cfg.hopfield_beta,
                    }
                })
                .collect();
            Ok(ScaleEvolution::Hopfield(models))
        }
    }
}

/// Fits one independent model per channel.
pub fn fit(config: &ForecasterConfig, train: &TimeSeries) -> Result<FittedForecaster> {
    config.validate()?;
    if train.n_channels() == 0 {
        return Err(Error::EmptyInput);
    }
    let ssm = discretize(&SsmParams::new(config.ssm_variant, config.poly_order, config.delta())?);
    let filters = build_filters(config.poly_order)?;
    let stage = Stage::new(config, &ssm, &filters);
    let channels = train
        .channels()
        .par_iter()
        .map(|c| fit_channel(&stage, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedForecaster {
        config: config.clone(),
        ssm,
        filters,
        channels,
    })
}

impl FittedForecaster {
    fn stage(&self) -> Stage<'_> {
        Stage::new(&self.config, &self.ssm, &self.filters)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn window(&self) -> usize {
        self.config.window
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    /// Readout input for an already normalized window of channel `c`.
    pub fn features(&self, c: usize, window_norm: &[f64]) -> Result<Vec<f64>> {
        if window_norm.len() != self.config.window {
            return Err(Error::WindowTooShort {
                needed: self.config.window,
                got: window_norm.len(),
            });
        }
        self.stage().channel_features(&self.channels[c], window_norm)
    }

    /// Scan states of channel `c` before padding and decomposition.
    pub fn representation(&self, c: usize, window_norm: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let layout = &self.channels[c].layout;
        Ok(self.stage().representation(layout, window_norm)[layout.pad()..].to_vec())
    }

    /// `H` forecasts for one channel from exactly `W` samples.
    pub fn predict_channel(&self, c: usize, window: &[f64]) -> Result<Vec<f64>> {
        if window.len() != self.config.window {
            return Err(Error::WindowTooShort {
                needed: self.config.window,
                got: window.len(),
            });
        }
        self.stage().predict_window(&self.channels[c], window)
    }

    /// Forecasts from the last `W` samples of `context`.
    pub fn predict(&self, context: &TimeSeries) -> Result<ForecastResult> {
        let w = self.config.window;
        if context.n_channels() != self.n_channels() {
            return Err(Error::DimensionMismatch {
                expected: self.n_channels(),
                got: context.n_channels(),
            });
        }
        if context.len() < w {
            return Err(Error::WindowTooShort {
                needed: w,
                got: context.len(),
            });
        }
        let stage = self.stage();
        let start = context.len() - w;
        let channels = self
            .channels
            .iter()
            .zip(context.channels())
            .map(|(m, c)| stage.predict_window(m, &c[start..]))
            .collect::<Result<Vec<_>>>()?;
        Ok(ForecastResult {
            predictions: TimeSeries::from_channels(channels)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        model.config.validate()?;
        for ch in &model.channels {
            if ch.readout.nrows() != ch.layout.feature_len() || ch.readout.ncols() != model.config.horizon {
                return Err(Error::ShapeMismatch("readout does not match the channel layout".into()));
            }
            if ch.readout.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step: 0 });
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psr::{delay_embed, patch};

    #[test]
    fn layout_arithmetic() {
        let l = ChannelLayout::new(EmbeddingParams { m: 3, tau: 2 }, 96, 8).unwrap();
        assert_eq!(l.n_patches, 11);
        assert_eq!(l.padded_len, 16);
        assert_eq!(l.patch_dim, 24);
        assert_eq!(l.feature_len(), 264);
        assert!(ChannelLayout::new(EmbeddingParams { m: 5, tau: 30 }, 96, 8).is_err());
    }

    #[test]
    fn inline_patching_matches_psr() {
        let cfg = ForecasterConfig::default();
        let ssm = discretize(&SsmParams::new(cfg.ssm_variant, cfg.poly_order, cfg.delta()).unwrap());
        let filters = build_filters(cfg.poly_order).unwrap();
        let stage = Stage::new(&cfg, &ssm, &filters);
        let window: Vec<f64> = (0..96).map(|i| (i as f64 * 0.3).sin() * i as f64).collect();
        let emb = EmbeddingParams { m: 3, tau: 5 };
        let layout = ChannelLayout::new(emb, 96, 8).unwrap();
        let expect = patch(&delay_embed(&window, emb).unwrap(), 8).unwrap();
        assert_eq!(stage.patches(&layout, &window), expect);
    }

    #[test]
    fn padding_coverage() {
        assert!(touches_padding(0, 2, 0, 1));
        assert!(!touches_padding(0, 2, 1, 2));
        assert!(touches_padding(2, 2, 0, 1));
        assert!(!touches_padding(2, 2, 0, 0));
    }

    #[test]
    fn embedding_shrinks_to_fit() {
        let p = fit_embedding_to_window(EmbeddingParams { m: 4, tau: 40 }, 96, 8);
        assert_eq!(p, EmbeddingParams { m: 4, tau: 26 });
        assert!(ChannelLayout::new(p, 96, 8).unwrap().n_patches >= 2);
    }

    #[test]
    fn instance_stats_flat_window() {
        assert_eq!(instance_stats(&[3.0; 5]), (3.0, 1.0));
    }
}
