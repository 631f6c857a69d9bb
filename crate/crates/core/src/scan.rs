//! Linear recurrences `x_k = Ā_k x_{k−1} + (B̄u)_k` evaluated sequentially or
//! with a work-efficient tree scan.
//!
//! Every step is a [`ScanElement`] `(a, b)`; the operator
//! `q_i • q_j = (a_j ⊙ a_i, a_j ⊗ b_i + b_j)` is associative, so any
//! bracketing gives the same prefix values. The tree scan follows a fixed
//! schedule: a pairwise up-sweep fills the even positions, then a down-sweep
//! fills the odd ones, starting with `r_1 = (I, 0) • c_1`. The gated variant
//! [`hierarchical_scan`] is schedule dependent and uses the same schedule.
//!
//! States are `D × N` matrices (one row per input channel, one column per
//! polynomial coefficient); transitions act on the `N` axis.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::component_rng;

/// Per-step transition acting on the coefficient axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TransitionRepr", try_from = "TransitionRepr")]
pub enum Transition {
    Identity,
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TransitionRepr {
    Identity(Option<()>),
    Diagonal(Vec<f64>),
    Dense(Vec<Vec<f64>>),
}

impl From<Transition> for TransitionRepr {
    fn from(t: Transition) -> Self {
        match t {
            Transition::Identity => TransitionRepr::Identity(None),
            Transition::Diagonal(d) => TransitionRepr::Diagonal(d),
            Transition::Dense(m) => TransitionRepr::Dense(
                (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
            ),
        }
    }
}

impl TryFrom<TransitionRepr> for Transition {
    type Error = String;

    fn try_from(r: TransitionRepr) -> std::result::Result<Self, String> {
        match r {
            TransitionRepr::Identity(_) => Ok(Transition::Identity),
            TransitionRepr::Diagonal(d) => Ok(Transition::Diagonal(d)),
            TransitionRepr::Dense(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(format!("dense transition must be square, got {n} ragged rows"));
                }
                Ok(Transition::Dense(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
            }
        }
    }
}

impl Transition {
    /// Coefficient dimension, `None` for the shape-agnostic identity.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Transition::Identity => None,
            Transition::Diagonal(d) => Some(d.len()),
            Transition::Dense(m) => Some(m.nrows()),
        }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        match self {
            Transition::Identity => DMatrix::identity(n, n),
            Transition::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Transition::Dense(m) => m.clone(),
        }
    }

    /// `self ⊙ earlier`: the transition of applying `earlier` then `self`.
    pub fn after(&self, earlier: &Transition) -> Transition {
        match (self, earlier) {
            (Transition::Identity, t) | (t, Transition::Identity) => t.clone(),
            (Transition::Diagonal(a), Transition::Diagonal(b)) => {
                Transition::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            (Transition::Dense(a), Transition::Dense(b)) => Transition::Dense(a * b),
            (Transition::Dense(a), Transition::Diagonal(d)) => {
                let mut m = a.clone();
                for (j, s) in d.iter().enumerate() {
                    m.column_mut(j).scale_mut(*s);
                }
                Transition::Dense(m)
            }
            (Transition::Diagonal(d), Transition::Dense(b)) => {
                let mut m = b.clone();
                for (i, s) in d.iter().enumerate() {
                    m.row_mut(i).scale_mut(*s);
                }
                Transition::Dense(m)
            }
        }
    }

    /// Applies the transition to every row of a `D × N` state.
    pub fn apply(&self, state: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Transition::Identity => state.clone(),
            Transition::Diagonal(d) => {
                let mut out = state.clone();
                for (j, s) in d.iter().enumerate() {
                    out.column_mut(j).scale_mut(*s);
                }
                out
            }
            Transition::Dense(m) => state * m.transpose(),
        }
    }
}

/// One `(a, b)` pair of the scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanElement {
    pub a: Transition,
    pub b: DMatrix<f64>,
}

impl ScanElement {
    pub fn identity(d: usize, n: usize) -> Self {
        Self {
            a: Transition::Identity,
            b: DMatrix::zeros(d, n),
        }
    }
}

fn check_compatible(qi: &ScanElement, qj: &ScanElement) -> Result<()> {
    if qi.b.shape() != qj.b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "state shapes {:?} and {:?}",
            qi.b.shape(),
            qj.b.shape()
        )));
    }
    let n = qi.b.ncols();
    for a in [&qi.a, &qj.a] {
        if let Some(k) = a.dim() {
            if k != n {
                return Err(Error::ShapeMismatch(format!("transition of size {k} for {n} coefficients")));
            }
        }
    }
    Ok(())
}

fn compose_unchecked(qi: &ScanElement, qj: &ScanElement, gate: Option<&[f64]>) -> ScanElement {
    let mut b = qj.a.apply(&qi.b) + &qj.b;
    if let Some(h) = gate {
        for (j, s) in h.iter().enumerate() {
            b.column_mut(j).scale_mut(*s);
        }
    }
    ScanElement { a: qj.a.after(&qi.a), b }
}

/// `q_i • q_j = (a_j ⊙ a_i, a_j ⊗ b_i + b_j)`.
pub fn operator_compose(qi: &ScanElement, qj: &ScanElement) -> Result<ScanElement> {
    check_compatible(qi, qj)?;
    Ok(compose_unchecked(qi, qj, None))
}

/// Gated operator `(a_j ⊙ a_i, H ⊙ (a_j ⊗ b_i + b_j))` with `H` acting
/// elementwise on the coefficient axis.
pub fn operator_compose_gated(qi: &ScanElement, qj: &ScanElement, gate: &[f64]) -> Result<ScanElement> {
    check_compatible(qi, qj)?;
    if gate.len() != qi.b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "gate of length {} for {} coefficients",
            gate.len(),
            qi.b.ncols()
        )));
    }
    Ok(compose_unchecked(qi, qj, Some(gate)))
}

/// Transitions and inputs of one recurrence over `L` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanInput {
    a_seq: Vec<Transition>,
    bu_seq: Vec<DMatrix<f64>>,
}

impl ScanInput {
    pub fn new(a_seq: Vec<Transition>, bu_seq: Vec<DMatrix<f64>>) -> Result<Self> {
        if a_seq.len() != bu_seq.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} transitions for {} inputs",
                a_seq.len(),
                bu_seq.len()
            )));
        }
        if let Some(first) = bu_seq.first() {
            let shape = first.shape();
            for (a, bu) in a_seq.iter().zip(&bu_seq) {
                if bu.shape() != shape {
                    return Err(Error::ShapeMismatch(format!("input shape {:?} vs {:?}", bu.shape(), shape)));
                }
                if let Some(k) = a.dim() {
                    if k != shape.1 {
                        return Err(Error::ShapeMismatch(format!(
                            "transition of size {k} for {} coefficients",
                            shape.1
                        )));
                    }
                }
            }
        }
        Ok(Self { a_seq, bu_seq })
    }

    /// Scalar recurrence (`D = N = 1`).
    pub fn scalar(a: &[f64], bu: &[f64]) -> Result<Self> {
        Self::new(
            a.iter().map(|&v| Transition::Diagonal(vec![v])).collect(),
            bu.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
        )
    }

    /// Random diagonal transitions in `(0, 1)` and standard-uniform inputs.
    pub fn random_diagonal(len: usize, n: usize, d: usize, seed: u64) -> Self {
        let mut rng = component_rng(seed, 0x5ca7);
        let a_seq = (0..len)
            .map(|_| Transition::Diagonal((0..n).map(|_| rng.random_range(0.0..1.0)).collect()))
            .collect();
        let bu_seq = (0..len)
            .map(|_| DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        Self { a_seq, bu_seq }
    }

    pub fn len(&self) -> usize {
        self.a_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_seq.is_empty()
    }

    /// `(D, N)` of the states.
    pub fn state_shape(&self) -> (usize, usize) {
        self.bu_seq.first().map_or((0, 0), |b| b.shape())
    }

    pub fn a_seq(&self) -> &[Transition] {
        &self.a_seq
    }

    pub fn bu_seq(&self) -> &[DMatrix<f64>] {
        &self.bu_seq
    }

    fn elements(&self) -> Vec<ScanElement> {
        self.a_seq
            .iter()
            .zip(&self.bu_seq)
            .map(|(a, b)| ScanElement {
                a: a.clone(),
                b: b.clone(),
            })
            .collect()
    }
}

/// `x_k = a_k ⊗ x_{k−1} + bu_k` from `x_0 = 0`; returns `x_1 … x_L`.
pub fn sequential_scan(input: &ScanInput) -> Vec<DMatrix<f64>> {
    let (d, n) = input.state_shape();
    let mut x = DMatrix::zeros(d, n);
    input
        .a_seq
        .iter()
        .zip(&input.bu_seq)
        .map(|(a, bu)| {
            x = a.apply(&x) + bu;
            x.clone()
        })
        .collect()
}

/// `T[target] ← T[left] • T[target]` on 1-based positions; `left == 0` is
/// the identity element `(I, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    pub target: usize,
    pub left: usize,
}

/// Tree schedule for `len` elements, grouped by level. Compositions within
/// one level touch disjoint targets and may run concurrently.
///
/// The tree is built for the next power of two and compositions whose
/// target lies past `len` are dropped; they never feed a position `≤ len`.
pub fn tree_schedule(len: usize) -> Vec<Vec<Composition>> {
    if len == 0 {
        return Vec::new();
    }
    let depth = len.next_power_of_two().trailing_zeros() as usize;
    let mut levels = Vec::new();
    for k in 0..depth {
        let stride = 1usize << (k + 1);
        let ops: Vec<Composition> = (stride..=len)
            .step_by(stride)
            .map(|target| Composition {
                target,
                left: target - stride / 2,
            })
            .collect();
        if !ops.is_empty() {
            levels.push(ops);
        }
    }
    for k in (1..depth.saturating_sub(1)).rev() {
        let stride = 1usize << (k + 1);
        let half = stride / 2;
        let ops: Vec<Composition> = (stride + half..=len)
            .step_by(stride)
            .map(|target| Composition { target, left: target - half })
            .collect();
        if !ops.is_empty() {
            levels.push(ops);
        }
    }
    let mut last = vec![Composition { target: 1, left: 0 }];
    last.extend((3..=len).step_by(2).map(|target| Composition { target, left: target - 1 }));
    levels.push(last);
    levels
}

const PARALLEL_LEVEL_MIN: usize = 64;

fn run_schedule<F>(elements: Vec<ScanElement>, schedule: &[Vec<Composition>], compose: F) -> Vec<ScanElement>
where
    F: Fn(&ScanElement, &ScanElement, usize) -> ScanElement + Sync,
{
    let (d, n) = elements.first().map_or((0, 0), |e| e.b.shape());
    let origin = ScanElement::identity(d, n);
    let mut tree = elements;
    for level in schedule {
        let updates: Vec<(usize, ScanElement)> = {
            let tree_ref = &tree;
            let op = |c: &Composition| {
                let left = if c.left == 0 { &origin } else { &tree_ref[c.left - 1] };
                (c.target, compose(left, &tree_ref[c.target - 1], c.left))
            };
            if level.len() >= PARALLEL_LEVEL_MIN {
                level.par_iter().map(op).collect()
            } else {
                level.iter().map(op).collect()
            }
        };
        for (target, e) in updates {
            tree[target - 1] = e;
        }
    }
    tree
}

/// Result of a tree scan with its bookkeeping.
#[derive(Debug, Clone)]
pub struct TreeScanOutput {
    pub states: Vec<DMatrix<f64>>,
    pub compositions: usize,
}

/// Tree (Blelloch-style) evaluation of the recurrence; equal to
/// [`sequential_scan`] up to rounding.
pub fn blelloch_scan(input: &ScanInput) -> Vec<DMatrix<f64>> {
    blelloch_scan_counted(input).states
}

pub fn blelloch_scan_counted(input: &ScanInput) -> TreeScanOutput {
    let schedule = tree_schedule(input.len());
    let compositions = schedule.iter().map(Vec::len).sum();
    let tree = run_schedule(input.elements(), &schedule, |l, r, _| compose_unchecked(l, r, None));
    TreeScanOutput {
        states: tree.into_iter().map(|e| e.b).collect(),
        compositions,
    }
}

/// Scale label of position `i` in the tree.
pub fn scale_of(i: usize) -> usize {
    if i == 0 {
        0
    } else if i % 2 == 1 {
        scale_of(i - 1) + 1
    } else if i.is_power_of_two() {
        i.trailing_zeros() as usize
    } else {
        1
    }
}

#[derive(Debug, Clone)]
pub struct HierarchicalOutput {
    /// `x_1 … x_L`.
    pub states: Vec<DMatrix<f64>>,
    /// `scale_of(i)` for `i = 1 … L`.
    pub scales: Vec<usize>,
}

/// Tree scan with the gated operator: each composition whose left operand
/// ends at position `i` multiplies its accumulated input by `H_i`
/// (`h_seq[i]`, `i = 0 … L−1`), exactly once.
pub fn hierarchical_scan(input: &ScanInput, h_seq: &[Vec<f64>]) -> Result<HierarchicalOutput> {
    let len = input.len();
    if h_seq.len() != len {
        return Err(Error::ShapeMismatch(format!("{} gates for {} steps", h_seq.len(), len)));
    }
    let n = input.state_shape().1;
    if let Some(bad) = h_seq.iter().find(|h| h.len() != n) {
        return Err(Error::ShapeMismatch(format!("gate of length {} for {n} coefficients", bad.len())));
    }
    let schedule = tree_schedule(len);
    let tree = run_schedule(input.elements(), &schedule, |l, r, left| {
        compose_unchecked(l, r, Some(&h_seq[left]))
    });
    Ok(HierarchicalOutput {
        states: tree.into_iter().map(|e| e.b).collect(),
        scales: (1..=len).map(scale_of).collect(),
    })
}
