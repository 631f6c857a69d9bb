//! Frequency-enhanced evolution.
//!
//! Transform convention: `X_k = Σ_t x_t e^{−2πikt/L}` and
//! `x_t = (1/L) Σ_k X_k e^{2πikt/L}`, so a lone DC value `c` inverts to the
//! constant `c/L`. Only the `M` lowest frequencies are kept; the inverse
//! completes the spectrum by conjugate symmetry.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::ComplexOperatorAccumulator;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

pub fn max_modes(seq_len: usize) -> usize {
    seq_len / 2 + 1
}

fn check_sequence(x: &[DMatrix<f64>]) -> Result<(usize, usize)> {
    let first = x.first().ok_or(Error::EmptyInput)?;
    let shape = first.shape();
    if let Some(b) = x.iter().find(|b| b.shape() != shape) {
        return Err(Error::ShapeMismatch(format!(
            "block {:?} in a sequence of {:?}",
            b.shape(),
            shape
        )));
    }
    Ok(shape)
}

/// Lowest `m_modes` DFT coefficients along the sequence axis, one block
/// per mode with the same shape as the input blocks.
pub fn fft_modes(x: &[DMatrix<f64>], m_modes: usize) -> Result<Vec<DMatrix<Complex64>>> {
    let (rows, cols) = check_sequence(x)?;
    let len = x.len();
    if m_modes > max_modes(len) {
        return Err(Error::TooManyModes {
            requested: m_modes,
            max: max_modes(len),
        });
    }
    let fft = plan(len, false);
    let mut out = vec![DMatrix::zeros(rows, cols); m_modes];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for r in 0..rows {
        for c in 0..cols {
            for (t, b) in x.iter().enumerate() {
                buf[t] = Complex64::new(b[(r, c)], 0.0);
            }
            fft.process(&mut buf);
            for (k, block) in out.iter_mut().enumerate() {
                block[(r, c)] = buf[k];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`fft_modes`] after zero-filling the discarded modes.
pub fn ifft_modes(spectrum: &[DMatrix<Complex64>], seq_len: usize) -> Result<Vec<DMatrix<f64>>> {
    if spectrum.len() > max_modes(seq_len) {
        return Err(Error::TooManyModes {
            requested: spectrum.len(),
            max: max_modes(seq_len),
        });
    }
    if seq_len == 0 {
        return Err(Error::EmptyInput);
    }
    let (rows, cols) = spectrum.first().map_or((0, 0), |b| b.shape());
    let ifft = plan(seq_len, true);
    let mut out = vec![DMatrix::zeros(rows, cols); seq_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); seq_len];
    let scale = 1.0 / seq_len as f64;
    for r in 0..rows {
        for c in 0..cols {
            buf.fill(Complex64::new(0.0, 0.0));
            for (k, block) in spectrum.iter().enumerate() {
                let v = block[(r, c)];
                buf[k] = v;
                let mirror = seq_len - k;
                if k > 0 && mirror != k {
                    buf[mirror] = v.conj();
                }
            }
            ifft.process(&mut buf);
            for (t, block) in out.iter_mut().enumerate() {
                block[(r, c)] = buf[t].re * scale;
            }
        }
    }
    Ok(out)
}

/// One complex `N × N` operator per retained mode, shared by every row of
/// the blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct SpectralEvolutionModel {
    pub m_modes: usize,
    pub seq_len: usize,
    pub ridge_lambda: f64,
    pub mode_ops: Vec<DMatrix<Complex64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    m_modes: usize,
    seq_len: usize,
    ridge_lambda: f64,
    mode_ops: Vec<Vec<Vec<[f64; 2]>>>,
}

impl From<SpectralEvolutionModel> for ModelRepr {
    fn from(m: SpectralEvolutionModel) -> Self {
        let mode_ops = m
            .mode_ops
            .iter()
            .map(|w| {
                (0..w.nrows())
                    .map(|i| w.row(i).iter().map(|z| [z.re, z.im]).collect())
                    .collect()
            })
            .collect();
        Self {
            m_modes: m.m_modes,
            seq_len: m.seq_len,
            ridge_lambda: m.ridge_lambda,
            mode_ops,
        }
    }
}

impl TryFrom<ModelRepr> for SpectralEvolutionModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let mode_ops = r
            .mode_ops
            .iter()
            .map(|rows| {
                let n = rows.len();
                if rows.iter().any(|row| row.len() != n) {
                    return Err(Error::ShapeMismatch("mode operator is not square".into()));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = Self {
            m_modes: r.m_modes,
            seq_len: r.seq_len,
            ridge_lambda: r.ridge_lambda,
            mode_ops,
        };
        model.validate()?;
        Ok(model)
    }
}

impl SpectralEvolutionModel {
    /// All operators equal to the identity.
    pub fn identity(m_modes: usize, seq_len: usize, dim: usize) -> Result<Self> {
        let model = Self {
            m_modes,
            seq_len,
            ridge_lambda: 0.0,
            mode_ops: vec![DMatrix::identity(dim, dim); m_modes],
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_modes > max_modes(self.seq_len) {
            return Err(Error::TooManyModes {
                requested: self.m_modes,
                max: max_modes(self.seq_len),
            });
        }
        if self.mode_ops.len() != self.m_modes {
            return Err(Error::ShapeMismatch(format!(
                "{} operators for {} modes",
                self.mode_ops.len(),
                self.m_modes
            )));
        }
        if self.mode_ops.iter().flat_map(|w| w.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(())
    }

    /// Regularized training objective `Σ‖W a − b‖² + λ‖W‖²` for one mode.
    pub fn mode_objective(w: &DMatrix<Complex64>, pairs: &[(Vec<Complex64>, Vec<Complex64>)], lambda: f64) -> f64 {
        let mut total = lambda * w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        for (a, b) in pairs {
            for i in 0..w.nrows() {
                let pred: Complex64 = (0..w.ncols()).map(|j| w[(i, j)] * a[j]).sum();
                total += (pred - b[i]).norm_sqr();
            }
        }
        total
    }
}

/// Streaming ridge fit of per-mode operators from pairs of sequences.
#[derive(Debug, Clone)]
pub struct SpectralFitter {
    m_modes: usize,
    seq_len: usize,
    accs: Vec<ComplexOperatorAccumulator>,
}

impl SpectralFitter {
    pub fn new(m_modes: usize, seq_len: usize, dim: usize) -> Result<Self> {
        if m_modes > max_modes(seq_len) {
            return Err(Error::TooManyModes {
                requested: m_modes,
                max: max_modes(seq_len),
            });
        }
        Ok(Self {
            m_modes,
            seq_len,
            accs: vec![ComplexOperatorAccumulator::new(dim); m_modes],
        })
    }

    /// Adds one (current, next) pair of sequences; every row of every
    /// mode block is a training sample for that mode.
    pub fn add_pair(&mut self, current: &[DMatrix<f64>], next: &[DMatrix<f64>]) -> Result<()> {
        if current.len() != self.seq_len || next.len() != self.seq_len {
            return Err(Error::ShapeMismatch(format!(
                "pair lengths {}/{} vs fitted length {}",
                current.len(),
                next.len(),
                self.seq_len
            )));
        }
        let a = fft_modes(current, self.m_modes)?;
        let b = fft_modes(next, self.m_modes)?;
        for ((acc, ak), bk) in self.accs.iter_mut().zip(&a).zip(&b) {
            if ak.ncols() != acc.dim() || bk.shape() != ak.shape() {
                return Err(Error::ShapeMismatch("block width differs from operator size".into()));
            }
            for r in 0..ak.nrows() {
                let av: Vec<Complex64> = ak.row(r).iter().copied().collect();
                let bv: Vec<Complex64> = bk.row(r).iter().copied().collect();
                acc.add(&av, &bv);
            }
        }
        Ok(())
    }

    /// Adds pairs already in the frequency domain for mode `k`.
    pub fn add_mode_sample(&mut self, k: usize, a: &[Complex64], b: &[Complex64]) {
        self.accs[k].add(a, b);
    }

    pub fn merge(&mut self, other: &SpectralFitter) {
        for (a, b) in self.accs.iter_mut().zip(&other.accs) {
            a.merge(b);
        }
    }

    pub fn finish(&self, ridge_lambda: f64) -> Result<SpectralEvolutionModel> {
        let mode_ops = self
            .accs
            .iter()
            .map(|acc| acc.solve(ridge_lambda))
            .collect::<Result<Vec<_>>>()?;
        let model = SpectralEvolutionModel {
            m_modes: self.m_modes,
            seq_len: self.seq_len,
            ridge_lambda,
            mode_ops,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Fits operators on `(current, next)` sequence pairs.
pub fn fit_spectral_operators(
    pairs: &[(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)],
    m_modes: usize,
    ridge_lambda: f64,
) -> Result<SpectralEvolutionModel> {
    let (first, _) = pairs.first().ok_or(Error::EmptyInput)?;
    let (_, dim) = check_sequence(first)?;
    let mut fitter = SpectralFitter::new(m_modes, first.len(), dim)?;
    for (cur, next) in pairs {
        fitter.add_pair(cur, next)?;
    }
    fitter.finish(ridge_lambda)
}

/// `ifft(W_k · fft(x)_k)`.
pub fn apply_spectral_evolution(x: &[DMatrix<f64>], model: &SpectralEvolutionModel) -> Result<Vec<DMatrix<f64>>> {
    if x.len() != model.seq_len {
        return Err(Error::ShapeMismatch(format!(
            "sequence length {} vs model length {}",
            x.len(),
            model.seq_len
        )));
    }
    let spectrum = fft_modes(x, model.m_modes)?;
    let evolved: Vec<DMatrix<Complex64>> = spectrum
        .iter()
        .zip(&model.mode_ops)
        .map(|(s, w)| {
            if s.ncols() != w.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "block width {} vs operator size {}",
                    s.ncols(),
                    w.nrows()
                )));
            }
            Ok(s * w.transpose())
        })
        .collect::<Result<_>>()?;
    if evolved.is_empty() {
        let (r, c) = x[0].shape();
        return Ok(vec![DMatrix::zeros(r, c); x.len()]);
    }
    ifft_modes(&evolved, model.seq_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_seq(v: &[f64]) -> Vec<DMatrix<f64>> {
        v.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect()
    }

    #[test]
    fn constant_sequence_is_dc_only() {
        let s = fft_modes(&scalar_seq(&[2.0; 8]), 5).unwrap();
        assert!((s[0][(0, 0)].re - 16.0).abs() < 1e-12);
        assert!(s[1..].iter().all(|b| b[(0, 0)].norm() < 1e-12));
    }

    #[test]
    fn pure_tone_lands_in_its_mode() {
        let l = 16;
        let x: Vec<f64> = (0..l)
            .map(|t| (2.0 * std::f64::consts::PI * 2.0 * t as f64 / l as f64).cos())
            .collect();
        let s = fft_modes(&scalar_seq(&x), 9).unwrap();
        for (k, b) in s.iter().enumerate() {
            let expect = if k == 2 { l as f64 / 2.0 } else { 0.0 };
            assert!((b[(0, 0)].norm() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn too_many_modes_rejected() {
        assert_eq!(
            fft_modes(&scalar_seq(&[1.0; 6]), 5).unwrap_err(),
            Error::TooManyModes { requested: 5, max: 4 }
        );
    }

    #[test]
    fn dc_mode_inverts_to_scaled_constant() {
        let spec = vec![DMatrix::from_element(1, 1, Complex64::new(6.0, 0.0))];
        let x = ifft_modes(&spec, 3).unwrap();
        assert!(x.iter().all(|b| (b[(0, 0)] - 2.0).abs() < 1e-15));
    }

    #[test]
    fn full_roundtrip_odd_and_even() {
        for l in [5usize, 8] {
            let x: Vec<f64> = (0..l).map(|t| (t as f64 * 1.3).sin() + 0.1 * t as f64).collect();
            let seq = scalar_seq(&x);
            let back = ifft_modes(&fft_modes(&seq, max_modes(l)).unwrap(), l).unwrap();
            for (a, b) in seq.iter().zip(&back) {
                assert!((a[(0, 0)] - b[(0, 0)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_pairs_fit_slope_two() {
        let mut fitter = SpectralFitter::new(1, 1, 1).unwrap();
        fitter.add_mode_sample(0, &[Complex64::new(1.0, 0.0)], &[Complex64::new(2.0, 0.0)]);
        fitter.add_mode_sample(0, &[Complex64::new(2.0, 0.0)], &[Complex64::new(4.0, 0.0)]);
        let m = fitter.finish(0.0).unwrap();
        assert!((m.mode_ops[0][(0, 0)] - Complex64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_operators_give_zero() {
        let x = scalar_seq(&[1.0, -2.0, 3.0, 0.5]);
        let model = SpectralEvolutionModel {
            m_modes: 3,
            seq_len: 4,
            ridge_lambda: 0.0,
            mode_ops: vec![DMatrix::zeros(1, 1); 3],
        };
        assert!(apply_spectral_evolution(&x, &model).unwrap().iter().all(|b| b[(0, 0)] == 0.0));
    }

    #[test]
    fn model_json_roundtrip() {
        let mut m = SpectralEvolutionModel::identity(2, 4, 2).unwrap();
        m.mode_ops[1][(0, 1)] = Complex64::new(0.25, -1.5);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("[0.25,-1.5]"));
        assert_eq!(serde_json::from_str::<SpectralEvolutionModel>(&s).unwrap(), m);
        let bad = r#"{"m_modes":4,"seq_len":4,"ridge_lambda":0,"mode_ops":[]}"#;
        assert!(serde_json::from_str::<SpectralEvolutionModel>(bad).is_err());
    }
}
