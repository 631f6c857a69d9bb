//! Orthogonal Legendre multiwavelet filter bank.
//!
//! A coefficient sequence holds one `K × N` block per position: `K`
//! independent rows of `N` Legendre coefficients each. Filters act on the
//! coefficient axis, so a block `x` maps to `x · Hᵀ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyproj::LegendreBasis;

/// Analysis blocks `h1, h2, g1, g2` and their synthesis transposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletFilters {
    pub order: usize,
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    pub h1d: DMatrix<f64>,
    pub h2d: DMatrix<f64>,
    pub g1d: DMatrix<f64>,
    pub g2d: DMatrix<f64>,
}

impl WaveletFilters {
    /// The `2N × 2N` matrix `[[h1, h2], [g1, g2]]`.
    pub fn analysis_matrix(&self) -> DMatrix<f64> {
        let n = self.order;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.h1);
        m.view_mut((0, n), (n, n)).copy_from(&self.h2);
        m.view_mut((n, 0), (n, n)).copy_from(&self.g1);
        m.view_mut((n, n), (n, n)).copy_from(&self.g2);
        m
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
        };
        serde_json::json!({
            "order": self.order,
            "h1": rows(&self.h1),
            "h2": rows(&self.h2),
            "g1": rows(&self.g1),
            "g2": rows(&self.g2),
            "h1d": rows(&self.h1d),
            "h2d": rows(&self.h2d),
            "g1d": rows(&self.g1d),
            "g2d": rows(&self.g2d),
        })
    }
}

pub fn build_filters(order: usize) -> Result<WaveletFilters> {
    if order < 1 {
        return Err(Error::InvalidParameter("filter order must be at least 1".into()));
    }
    let n = order;
    let basis = LegendreBasis::new(n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut h1 = DMatrix::zeros(n, n);
    let mut h2 = DMatrix::zeros(n, n);
    for (&t, &w) in basis.nodes().iter().zip(basis.weights()) {
        let fine = basis.eval_all(t);
        let left = basis.eval_all(0.5 * t);
        let right = basis.eval_all(0.5 * (t + 1.0));
        for i in 0..n {
            for j in 0..n {
                h1[(i, j)] += inv_sqrt2 * w * left[i] * fine[j];
                h2[(i, j)] += inv_sqrt2 * w * right[i] * fine[j];
            }
        }
    }

    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| h1.row(i).iter().chain(h2.row(i).iter()).copied().collect())
        .collect();
    let mut detail = Vec::with_capacity(n);
    // Candidates `e_k − e_{N+k}` first, then `e_k + e_{N+k}`; at N = 1 the
    // first one is already the Haar detail and stays exactly antisymmetric.
    for c in 0..2 * n {
        if detail.len() == n {
            break;
        }
        let (k, sign) = if c < n { (c, -1.0) } else { (c - n, 1.0) };
        let mut v = vec![0.0; 2 * n];
        v[k] = 1.0;
        v[n + k] = sign;
        // Two passes of modified Gram–Schmidt keep the basis orthogonal to
        // machine precision.
        for _ in 0..2 {
            for r in &rows {
                let proj: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(r).for_each(|(vi, ri)| *vi -= proj * ri);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if let Some(&lead) = v.iter().find(|x| x.abs() > 1e-12) {
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        rows.push(v.clone());
        detail.push(v);
    }
    let g1 = DMatrix::from_fn(n, n, |i, j| detail[i][j]);
    let g2 = DMatrix::from_fn(n, n, |i, j| detail[i][n + j]);
    Ok(WaveletFilters {
        order: n,
        h1d: h1.transpose(),
        h2d: h2.transpose(),
        g1d: g1.transpose(),
        g2d: g2.transpose(),
        h1,
        h2,
        g1,
        g2,
    })
}

fn check_blocks(x: &[DMatrix<f64>], order: usize) -> Result<()> {
    if let Some(first) = x.first() {
        for b in x {
            if b.ncols() != order || b.nrows() != first.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "block {}x{} in a sequence of {}x{}",
                    b.nrows(),
                    b.ncols(),
                    first.nrows(),
                    order
                )));
            }
        }
    }
    Ok(())
}

/// One analysis step: pairs `(x_{2i}, x_{2i+1})` go to
/// `(coarse_i, detail_i)`.
pub fn up_project(x: &[DMatrix<f64>], filters: &WaveletFilters) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    if x.len() % 2 == 1 {
        return Err(Error::OddLength(x.len()));
    }
    check_blocks(x, filters.order)?;
    let (h1t, h2t) = (filters.h1.transpose(), filters.h2.transpose());
    let (g1t, g2t) = (filters.g1.transpose(), filters.g2.transpose());
    let mut coarse = Vec::with_capacity(x.len() / 2);
    let mut detail = Vec::with_capacity(x.len() / 2);
    for pair in x.chunks_exact(2) {
        coarse.push(&pair[0] * &h1t + &pair[1] * &h2t);
        detail.push(&pair[0] * &g1t + &pair[1] * &g2t);
    }
    Ok((coarse, detail))
}

/// Synthesis step inverting [`up_project`].
pub fn down_project(coarse: &[DMatrix<f64>], detail: &[DMatrix<f64>], filters: &WaveletFilters) -> Result<Vec<DMatrix<f64>>> {
    if coarse.len() != detail.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coarse blocks vs {} detail blocks",
            coarse.len(),
            detail.len()
        )));
    }
    check_blocks(coarse, filters.order)?;
    check_blocks(detail, filters.order)?;
    let (h1dt, h2dt) = (filters.h1d.transpose(), filters.h2d.transpose());
    let (g1dt, g2dt) = (filters.g1d.transpose(), filters.g2d.transpose());
    let mut fine = Vec::with_capacity(2 * coarse.len());
    for (c, s) in coarse.iter().zip(detail) {
        fine.push(c * &h1dt + s * &g1dt);
        fine.push(c * &h2dt + s * &g2dt);
    }
    Ok(fine)
}

/// Detail sequences from finest to coarsest plus the final coarse
/// sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pyramid {
    pub details: Vec<Vec<DMatrix<f64>>>,
    pub coarse: Vec<DMatrix<f64>>,
    pub levels: usize,
}

impl Pyramid {
    /// Number of blocks stored across all scales.
    pub fn block_count(&self) -> usize {
        self.coarse.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn energy(&self) -> f64 {
        let sq = |s: &[DMatrix<f64>]| s.iter().map(|b| b.norm_squared()).sum::<f64>();
        sq(&self.coarse) + self.details.iter().map(|d| sq(d)).sum::<f64>()
    }

    /// Every sequence in the pyramid, details first, coarse last.
    pub fn scales(&self) -> Vec<&[DMatrix<f64>]> {
        self.details.iter().map(Vec::as_slice).chain(std::iter::once(self.coarse.as_slice())).collect()
    }

    pub fn scales_mut(&mut self) -> Vec<&mut Vec<DMatrix<f64>>> {
        self.details.iter_mut().chain(std::iter::once(&mut self.coarse)).collect()
    }
}

pub fn decompose(x: &[DMatrix<f64>], filters: &WaveletFilters, levels: usize) -> Result<Pyramid> {
    let len = x.len();
    if len == 0 {
        return Err(Error::EmptyInput);
    }
    if !len.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("sequence length {len} is not a power of two")));
    }
    let max_levels = len.trailing_zeros() as usize;
    if levels > max_levels {
        return Err(Error::InvalidParameter(format!(
            "{levels} levels exceed log2({len}) = {max_levels}"
        )));
    }
    check_blocks(x, filters.order)?;
    let mut coarse = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (c, d) = up_project(&coarse, filters)?;
        coarse = c;
        details.push(d);
    }
    Ok(Pyramid { details, coarse, levels })
}

pub fn reconstruct(pyramid: &Pyramid, filters: &WaveletFilters) -> Result<Vec<DMatrix<f64>>> {
    if pyramid.details.len() != pyramid.levels {
        return Err(Error::ShapeMismatch(format!(
            "pyramid claims {} levels but stores {}",
            pyramid.levels,
            pyramid.details.len()
        )));
    }
    let mut x = pyramid.coarse.clone();
    for d in pyramid.details.iter().rev() {
        x = down_project(&x, d, filters)?;
    }
    Ok(x)
}

/// Wraps scalar-per-position data as `1 × N` blocks.
pub fn blocks_from_rows(rows: &[Vec<f64>]) -> Vec<DMatrix<f64>> {
    rows.iter().map(|r| DMatrix::from_row_slice(1, r.len(), r)).collect()
}

pub fn rows_from_blocks(blocks: &[DMatrix<f64>]) -> Vec<Vec<f64>> {
    blocks.iter().map(|b| b.iter().copied().collect()).collect()
}
