//! Legendre polynomial projection and the state space parameterizations
//! built on it.
//!
//! The window is mapped to `s ∈ [0, 1]` and carries the orthonormal basis
//! `φ_n(s) = √(2n+1) P_n(2s − 1)`. [`SsmParams`] holds the continuous
//! `(A, B, Δ)` triple; [`discretize`] applies zero-order hold to `A` and
//! forward Euler to `B`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan::{ScanInput, Transition};

/// Canonical Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre_eval(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `P_0(x) … P_{n_max}(x)`.
pub fn legendre_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(x);
    }
    for k in 1..n_max {
        let kf = k as f64;
        out.push(((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0));
    }
    out
}

/// `P_n(x)` and `P_n'(x)`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let p = legendre_all(n, x);
    let pn = p[n];
    let dp = if n == 0 {
        0.0
    } else if (1.0 - x * x).abs() < 1e-300 {
        let s = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 - 1) };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (p[n - 1] - x * pn) / (1.0 - x * x)
    };
    (pn, dp)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, ascending.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(k, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(k, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    (nodes, weights)
}

/// Orthonormal shifted Legendre basis on `[0, 1]` with a Gauss rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreBasis {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LegendreBasis {
    /// `N`-term basis with the `N`-point rule, exact for degree `≤ 2N − 1`.
    pub fn new(order: usize) -> Self {
        Self::with_quadrature(order, order)
    }

    pub fn with_quadrature(order: usize, points: usize) -> Self {
        let (x, w) = gauss_legendre(points.max(1));
        Self {
            order,
            nodes: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
            weights: w.iter().map(|v| 0.5 * v).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Quadrature nodes on `[0, 1]`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `φ_0(s) … φ_{N−1}(s)`.
    pub fn eval_all(&self, s: f64) -> Vec<f64> {
        if self.order == 0 {
            return Vec::new();
        }
        legendre_all(self.order - 1, 2.0 * s - 1.0)
            .into_iter()
            .enumerate()
            .map(|(n, p)| (2.0 * n as f64 + 1.0).sqrt() * p)
            .collect()
    }

    pub fn phi(&self, n: usize, s: f64) -> f64 {
        (2.0 * n as f64 + 1.0).sqrt() * legendre_eval(n, 2.0 * s - 1.0)
    }

    /// `⟨f, φ_n⟩` by quadrature.
    pub fn project_fn<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let values: Vec<f64> = self.nodes.iter().map(|&s| f(s)).collect();
        self.project_at_nodes(&values)
    }

    /// Projection of values sampled at the quadrature nodes.
    pub fn project_at_nodes(&self, values: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.order];
        for ((&s, &w), &v) in self.nodes.iter().zip(&self.weights).zip(values) {
            for (cn, phi) in c.iter_mut().zip(self.eval_all(s)) {
                *cn += w * v * phi;
            }
        }
        c
    }

    /// Projection of uniformly spaced samples, each taken as constant over
    /// its cell `[k/K, (k+1)/K]`; cell integrals of `φ_n` are exact.
    pub fn project_samples(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        let k = samples.len() as f64;
        let mut c = vec![0.0; self.order];
        for (i, &u) in samples.iter().enumerate() {
            let lo = i as f64 / k;
            let hi = (i + 1) as f64 / k;
            let (a, b) = (self.antiderivatives(lo), self.antiderivatives(hi));
            for n in 0..self.order {
                c[n] += u * (b[n] - a[n]);
            }
        }
        Ok(c)
    }

    /// `∫_0^s φ_n` up to a constant, from `∫P_n = (P_{n+1} − P_{n−1})/(2n+1)`.
    fn antiderivatives(&self, s: f64) -> Vec<f64> {
        let x = 2.0 * s - 1.0;
        let p = legendre_all(self.order, x);
        (0..self.order)
            .map(|n| {
                let integral_p = if n == 0 { x } else { (p[n + 1] - p[n - 1]) / (2 * n + 1) as f64 };
                0.5 * (2.0 * n as f64 + 1.0).sqrt() * integral_p
            })
            .collect()
    }

    /// `g(s) = Σ c_n φ_n(s)`.
    pub fn eval(&self, coeffs: &[f64], s: f64) -> f64 {
        self.eval_all(s).iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    /// `g` on the cell midpoints `(k + ½)/K`, `k = 0 … K−1`.
    pub fn reconstruct(&self, coeffs: &[f64], num_points: usize) -> Vec<f64> {
        (0..num_points)
            .map(|k| self.eval(coeffs, (k as f64 + 0.5) / num_points as f64))
            .collect()
    }

    /// `φ_n(1) = √(2n+1)`: reading the approximation at the window's
    /// right end.
    pub fn right_endpoint(&self) -> Vec<f64> {
        (0..self.order).map(|n| (2.0 * n as f64 + 1.0).sqrt()).collect()
    }
}

/// Projection of `samples` onto the first `order` basis functions.
pub fn project_window(samples: &[f64], basis: &LegendreBasis) -> Result<Vec<f64>> {
    basis.project_samples(samples)
}

pub fn reconstruct_window(coeffs: &[f64], basis: &LegendreBasis, num_points: usize) -> Vec<f64> {
    basis.reconstruct(coeffs, num_points)
}

/// L2 distance on `[0, 1]` between `f` and its best piecewise polynomial
/// approximation of degree `< order` on `2^r` equal pieces.
pub fn piecewise_l2_error<F: Fn(f64) -> f64>(f: F, order: usize, r: u32, quad_points: usize) -> f64 {
    let basis = LegendreBasis::with_quadrature(order, quad_points);
    let pieces = 1usize << r;
    let h = 1.0 / pieces as f64;
    let mut err2 = 0.0;
    for l in 0..pieces {
        let local = |s: f64| f(h * (l as f64 + s));
        let c = basis.project_fn(local);
        for (&s, &w) in basis.nodes().iter().zip(basis.weights()) {
            let e = local(s) - basis.eval(&c, s);
            err2 += h * w * e * e;
        }
    }
    err2.sqrt()
}

/// Upper bound `2^{−rN} · 2/(4^N N!) · sup|f^{(N)}|` on
/// [`piecewise_l2_error`].
pub fn approximation_bound(order: usize, r: u32, sup_derivative: f64) -> f64 {
    let factorial: f64 = (1..=order).map(|k| k as f64).product();
    2f64.powi(-(r as i32) * order as i32) * 2.0 / (4f64.powi(order as i32) * factorial) * sup_derivative
}

/// Tabulated normal form and the transition it approximates.
#[derive(Debug, Clone, PartialEq)]
pub struct HippoLegt {
    /// `A^{(N)}` by the three-case formula: `−√(2n+1)√(2k+1)` when
    /// `n < k` with `k` odd or `n > k` with `n` odd, zero otherwise.
    pub normal: DMatrix<f64>,
    /// `N × 2` factor `P` whose columns are `√(2n+1)` restricted to even
    /// and to odd `n`.
    pub low_rank: DMatrix<f64>,
    /// Translated-Legendre transition
    /// `A_nk = −√(2n+1)√(2k+1)·(1 if n ≥ k else (−1)^{n−k})`.
    pub a: DMatrix<f64>,
    /// `B_n = √(2n+1)`.
    pub b: Vec<f64>,
}

impl HippoLegt {
    /// `A + PPᵀ`, the exact normal (skew-symmetric) part of `A`.
    pub fn exact_normal(&self) -> DMatrix<f64> {
        &self.a + &self.low_rank * self.low_rank.transpose()
    }
}

fn sqrt_odd(n: usize) -> f64 {
    (2.0 * n as f64 + 1.0).sqrt()
}

pub fn build_hippo_legt(order: usize) -> HippoLegt {
    let normal = DMatrix::from_fn(order, order, |n, k| {
        let on = (n < k && k % 2 == 1) || (n > k && n % 2 == 1);
        if on {
            -sqrt_odd(n) * sqrt_odd(k)
        } else {
            0.0
        }
    });
    let low_rank = DMatrix::from_fn(order, 2, |n, col| if n % 2 == col { sqrt_odd(n) } else { 0.0 });
    let a = DMatrix::from_fn(order, order, |n, k| {
        let sign = if n >= k || (k - n) % 2 == 0 { 1.0 } else { -1.0 };
        -sqrt_odd(n) * sqrt_odd(k) * sign
    });
    HippoLegt {
        normal,
        low_rank,
        a,
        b: (0..order).map(sqrt_odd).collect(),
    }
}

/// `diag{−1, −2, …, −N}`.
pub fn build_hippo_legs_diag(order: usize) -> Vec<f64> {
    (1..=order).map(|k| -(k as f64)).collect()
}

/// `diag{−1, …, −1}`.
pub fn build_diag_neg1(order: usize) -> Vec<f64> {
    vec![-1.0; order]
}

/// The same diagonal repeated for each of `d` channels.
pub fn broadcast(diag: &[f64], d: usize) -> Vec<Vec<f64>> {
    vec![diag.to_vec(); d]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsmVariant {
    LegtFull,
    LegsDiag,
    DiagNeg1,
}

/// Continuous parameters of `x' = Ax + Bu` with step `Δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SsmParamsRepr")]
pub struct SsmParams {
    pub variant: SsmVariant,
    pub n: usize,
    pub delta: f64,
    pub a: Transition,
    pub b: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SsmParamsRepr {
    variant: SsmVariant,
    n: usize,
    delta: f64,
    a: Option<Transition>,
    b: Option<Vec<f64>>,
}

impl TryFrom<SsmParamsRepr> for SsmParams {
    type Error = Error;

    fn try_from(r: SsmParamsRepr) -> Result<Self> {
        let mut p = SsmParams::new(r.variant, r.n, r.delta)?;
        if let Some(a) = r.a {
            p.a = a;
        }
        if let Some(b) = r.b {
            p.b = b;
        }
        p.validate()?;
        Ok(p)
    }
}

impl SsmParams {
    pub fn new(variant: SsmVariant, n: usize, delta: f64) -> Result<Self> {
        let (a, b) = match variant {
            SsmVariant::LegtFull => {
                let legt = build_hippo_legt(n);
                (Transition::Dense(legt.a), legt.b)
            }
            SsmVariant::LegsDiag => (Transition::Diagonal(build_hippo_legs_diag(n)), (0..n).map(sqrt_odd).collect()),
            SsmVariant::DiagNeg1 => (Transition::Diagonal(build_diag_neg1(n)), (0..n).map(sqrt_odd).collect()),
        };
        let p = Self { variant, n, delta, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("polynomial order must be at least 1".into()));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {}", self.delta)));
        }
        if self.a.dim().is_some_and(|k| k != self.n) || self.b.len() != self.n {
            return Err(Error::ShapeMismatch(format!("A/B do not match order {}", self.n)));
        }
        if self.variant == SsmVariant::DiagNeg1 {
            if let Transition::Diagonal(d) = &self.a {
                if d.iter().any(|&v| v != -1.0) {
                    return Err(Error::InvalidParameter("diag_neg1 requires every entry to be -1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let p = Self { delta, ..self.clone() };
        p.validate()?;
        Ok(p)
    }
}

/// Per-step transition and input map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSsm {
    pub a_bar: Transition,
    pub b_bar: Vec<f64>,
}

/// `Ā = exp(ΔA)` (zero-order hold), `B̄ = ΔB` (forward Euler).
pub fn discretize(params: &SsmParams) -> DiscretizedSsm {
    let dt = params.delta;
    let a_bar = match &params.a {
        Transition::Identity => Transition::Diagonal(vec![dt.exp(); params.n]),
        Transition::Diagonal(d) => Transition::Diagonal(d.iter().map(|v| (dt * v).exp()).collect()),
        Transition::Dense(m) => Transition::Dense((m * dt).exp()),
    };
    DiscretizedSsm {
        a_bar,
        b_bar: params.b.iter().map(|v| dt * v).collect(),
    }
}

/// Exact zero-order-hold input map `A⁻¹(exp(ΔA) − I)B`.
pub fn zoh_exact_input(params: &SsmParams) -> Result<Vec<f64>> {
    let dt = params.delta;
    match &params.a {
        Transition::Identity => Ok(params.b.iter().map(|b| (dt.exp() - 1.0) * b).collect()),
        Transition::Diagonal(d) => Ok(d
            .iter()
            .zip(&params.b)
            .map(|(&a, &b)| if a == 0.0 { dt * b } else { (dt * a).exp_m1() / a * b })
            .collect()),
        Transition::Dense(m) => {
            let n = params.n;
            let rhs = ((m * dt).exp() - DMatrix::identity(n, n)) * DVector::from_column_slice(&params.b);
            let x = m.clone().lu().solve(&rhs).ok_or(Error::SingularSystem)?;
            Ok(x.as_slice().to_vec())
        }
    }
}

/// `softplus(raw)` clamped to `[1e-4, 10]`.
pub fn softplus_delta(raw: f64) -> f64 {
    let sp = if raw > 30.0 { raw } else { raw.exp().ln_1p() };
    sp.clamp(1e-4, 10.0)
}

/// Per-step discretizations for externally supplied step sizes and,
/// optionally, per-step input maps `B_t`.
pub fn discretize_sequence(params: &SsmParams, deltas: &[f64], b_seq: Option<&[Vec<f64>]>) -> Result<Vec<DiscretizedSsm>> {
    if let Some(bs) = b_seq {
        if bs.len() != deltas.len() {
            return Err(Error::ShapeMismatch(format!("{} B_t for {} steps", bs.len(), deltas.len())));
        }
    }
    deltas
        .iter()
        .enumerate()
        .map(|(t, &dt)| {
            let mut p = params.with_delta(dt)?;
            if let Some(bs) = b_seq {
                if bs[t].len() != params.n {
                    return Err(Error::ShapeMismatch(format!("B_t of length {}", bs[t].len())));
                }
                p.b = bs[t].clone();
            }
            Ok(discretize(&p))
        })
        .collect()
}

/// Scan input for patch vectors `u_ℓ ∈ R^D`: `(B̄u)_ℓ[d, n] = B̄_ℓ[n]·u_ℓ[d]`.
pub fn scan_input(steps: &[DiscretizedSsm], inputs: &[Vec<f64>]) -> Result<ScanInput> {
    let step_for = |i: usize| if steps.len() == 1 { &steps[0] } else { &steps[i] };
    if steps.is_empty() || (steps.len() != 1 && steps.len() != inputs.len()) {
        return Err(Error::ShapeMismatch(format!(
            "{} discretizations for {} inputs",
            steps.len(),
            inputs.len()
        )));
    }
    let a_seq = (0..inputs.len()).map(|i| step_for(i).a_bar.clone()).collect();
    let bu_seq = inputs
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let b = &step_for(i).b_bar;
            DMatrix::from_fn(u.len(), b.len(), |d, n| b[n] * u[d])
        })
        .collect();
    ScanInput::new(a_seq, bu_seq)
}
