//! Ridge regression in closed form.
//!
//! All fitted maps in the crate solve regularized normal equations
//! `(G + λI) β = C` where `G = XᴴX` and `C = XᴴY`, accumulated sample by
//! sample so large design matrices never have to be materialized.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ROW_BUFFER: usize = 256;

/// Relative pivot threshold below which an unregularized Gram matrix is
/// reported singular.
const SINGULAR_RTOL: f64 = 1e-13;

/// Solves `(gram + λI) X = rhs` for Hermitian positive (semi)definite `gram`.
pub fn solve_regularized<T>(gram: &DMatrix<T>, rhs: &DMatrix<T>, lambda: f64) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let k = gram.nrows();
    if gram.ncols() != k || rhs.nrows() != k {
        return Err(Error::ShapeMismatch(format!(
            "gram {}x{} vs rhs {}x{}",
            gram.nrows(),
            gram.ncols(),
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("ridge lambda {lambda}")));
    }
    let mut m = gram.clone();
    for i in 0..k {
        m[(i, i)] += T::from_real(lambda);
    }
    let max_diag = (0..k).map(|i| m[(i, i)].real()).fold(0.0_f64, f64::max);
    let chol = m.cholesky().ok_or(Error::SingularSystem)?;
    if lambda == 0.0 {
        let l = chol.l_dirty();
        let min_pivot = (0..k).map(|i| l[(i, i)].real().powi(2)).fold(f64::INFINITY, f64::min);
        if k > 0 && min_pivot <= SINGULAR_RTOL * max_diag {
            return Err(Error::SingularSystem);
        }
    }
    Ok(chol.solve(rhs))
}

/// Streaming accumulator for a real multi-output ridge regression
/// `y ≈ βᵀ x`.
#[derive(Debug, Clone)]
pub struct RidgeAccumulator {
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    xbuf: Vec<f64>,
    ybuf: Vec<f64>,
    buffered: usize,
    count: usize,
}

impl RidgeAccumulator {
    pub fn new(inputs: usize, outputs: usize) -> Self {
        Self {
            gram: DMatrix::zeros(inputs, inputs),
            cross: DMatrix::zeros(inputs, outputs),
            xbuf: Vec::with_capacity(ROW_BUFFER * inputs),
            ybuf: Vec::with_capacity(ROW_BUFFER * outputs),
            buffered: 0,
            count: 0,
        }
    }

    pub fn inputs(&self) -> usize {
        self.gram.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.cross.ncols()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, x: &[f64], y: &[f64]) {
        debug_assert_eq!(x.len(), self.inputs());
        debug_assert_eq!(y.len(), self.outputs());
        self.xbuf.extend_from_slice(x);
        self.ybuf.extend_from_slice(y);
        self.buffered += 1;
        self.count += 1;
        if self.buffered == ROW_BUFFER {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.buffered == 0 {
            return;
        }
        // Row-major buffers read as column-major give Xᵀ directly.
        let xt = DMatrix::from_column_slice(self.inputs(), self.buffered, &self.xbuf);
        let yt = DMatrix::from_column_slice(self.outputs(), self.buffered, &self.ybuf);
        self.gram.gemm(1.0, &xt, &xt.transpose(), 1.0);
        self.cross.gemm(1.0, &xt, &yt.transpose(), 1.0);
        self.xbuf.clear();
        self.ybuf.clear();
        self.buffered = 0;
    }

    pub fn merge(&mut self, mut other: RidgeAccumulator) {
        self.flush();
        other.flush();
        self.gram += other.gram;
        self.cross += other.cross;
        self.count += other.count;
    }

    /// Gram and cross-moment matrices accumulated so far.
    pub fn moments(&mut self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        self.flush();
        (&self.gram, &self.cross)
    }

    /// Coefficients β (inputs × outputs).
    pub fn solve(&mut self, lambda: f64) -> Result<DMatrix<f64>> {
        if self.count == 0 {
            return Err(Error::EmptyInput);
        }
        self.flush();
        solve_regularized(&self.gram, &self.cross, lambda)
    }
}

/// Accumulator for a complex square operator `W` minimizing
/// `Σ‖W a − b‖² + λ‖W‖²_F`.
#[derive(Debug, Clone)]
pub struct ComplexOperatorAccumulator {
    gram: DMatrix<Complex64>,
    cross: DMatrix<Complex64>,
    count: usize,
}

impl ComplexOperatorAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            cross: DMatrix::zeros(dim, dim),
            count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds the training pair `(a, b)`.
    pub fn add(&mut self, a: &[Complex64], b: &[Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let ai = a[i];
            for j in 0..n {
                let aj_conj = a[j].conj();
                self.gram[(i, j)] += ai * aj_conj;
                self.cross[(i, j)] += b[i] * aj_conj;
            }
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &ComplexOperatorAccumulator) {
        self.gram += &other.gram;
        self.cross += &other.cross;
        self.count += other.count;
    }

    /// `W = C (G + λI)⁻¹`, obtained from the Hermitian system
    /// `(G + λI) Wᴴ = Cᴴ`.
    pub fn solve(&self, lambda: f64) -> Result<DMatrix<Complex64>> {
        if self.count == 0 {
            return Err(Error::EmptyInput);
        }
        let wh = solve_regularized(&self.gram, &self.cross.adjoint(), lambda)?;
        Ok(wh.adjoint())
    }
}

/// Ordinary least-squares slope and intercept of `y` against `x`.
pub fn ols_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_ridge_matches_hand_normal_equations() {
        let mut acc = RidgeAccumulator::new(1, 1);
        acc.add(&[1.0], &[2.0]);
        acc.add(&[2.0], &[4.0]);
        let beta = acc.solve(0.0).unwrap();
        assert!((beta[(0, 0)] - 2.0).abs() < 1e-14);
        let beta = acc.solve(1.0).unwrap();
        assert!((beta[(0, 0)] - 10.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn buffered_accumulation_matches_direct_gram() {
        let rows: Vec<Vec<f64>> = (0..600)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos(), 1.0])
            .collect();
        let mut acc = RidgeAccumulator::new(3, 1);
        let mut gram = DMatrix::<f64>::zeros(3, 3);
        for r in &rows {
            acc.add(r, &[r[0] - 2.0 * r[1]]);
            for i in 0..3 {
                for j in 0..3 {
                    gram[(i, j)] += r[i] * r[j];
                }
            }
        }
        let (g, _) = acc.moments();
        assert!((g - &gram).abs().max() < 1e-9);
        let beta = acc.solve(0.0).unwrap();
        assert!((beta[(0, 0)] - 1.0).abs() < 1e-10);
        assert!((beta[(1, 0)] + 2.0).abs() < 1e-10);
        assert!(beta[(2, 0)].abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_unregularized_is_singular() {
        let mut acc = RidgeAccumulator::new(2, 1);
        acc.add(&[1.0, 2.0], &[1.0]);
        acc.add(&[2.0, 4.0], &[2.0]);
        assert_eq!(acc.solve(0.0).unwrap_err(), Error::SingularSystem);
        assert!(acc.solve(1e-3).is_ok());
    }

    #[test]
    fn complex_operator_recovers_identity() {
        let mut acc = ComplexOperatorAccumulator::new(2);
        let samples = [
            [Complex64::new(1.0, 0.5), Complex64::new(-0.3, 2.0)],
            [Complex64::new(0.2, -1.0), Complex64::new(1.5, 0.1)],
            [Complex64::new(-0.7, 0.4), Complex64::new(0.0, -0.9)],
        ];
        for s in &samples {
            acc.add(s, s);
        }
        let w = acc.solve(1e-12).unwrap();
        let id = DMatrix::<Complex64>::identity(2, 2);
        assert!((w - id).iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn ols_line_exact_on_linear_data() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, c) = ols_line(&x, &y);
        assert!((s - 2.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
    }
}
