//! Loss oracles: the logistic loss with exact gradient, Hessian, and
//! quadratic-upper-bound second-order information; a ridge-regularized
//! logistic variant for the strongly convex solvers; and the generic oracle
//! interface with declared regularity constants.

use crate::error::{Error, Result};
use crate::numkit::{axpy, dot, norm, SymMatrix};
use serde::{Deserialize, Serialize};

/// Euclidean Hessian-Lipschitz constant adopted for the logistic loss.
/// Configuration default; override per oracle when a tighter constant is
/// available for a specific instance.
pub const DEFAULT_LOGISTIC_L2: f64 = 0.1;

// ---------------------------------------------------------------------------
// Data types
// ---------------------------------------------------------------------------

/// One labelled example: a feature vector in the unit ball and a ±1 label.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Example {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if y != 1.0 && y != -1.0 {
            return Err(Error::InvalidInput(format!("label must be ±1, got {y}")));
        }
        let nx = norm(&x);
        if nx > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "feature norm {nx} exceeds the unit ball"
            )));
        }
        Ok(Example { x, y })
    }
}

/// Immutable dataset with flat feature storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    pub fn from_examples(examples: Vec<Example>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::InvalidInput("dataset must be non-empty".into()));
        }
        let d = examples[0].x.len();
        let n = examples.len();
        let mut xs = Vec::with_capacity(n * d);
        let mut ys = Vec::with_capacity(n);
        for e in examples {
            if e.x.len() != d {
                return Err(Error::InvalidInput(
                    "all examples must share one dimension".into(),
                ));
            }
            xs.extend_from_slice(&e.x);
            ys.push(e.y);
        }
        Ok(Dataset { xs, ys, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn feature_vectors(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.x(i).to_vec()).collect()
    }
}

/// Regularity constants of a loss: Lipschitz (L0), smoothness (L1),
/// Hessian-Lipschitz (L2), and strong convexity (0 when merely convex).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRegularity {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub mu: f64,
}

/// Which second-order information a solver should query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoiKind {
    Hessian,
    Qu,
}

/// Value / gradient / second-order-information provider over a fixed
/// dataset, with declared regularity constants.
pub trait LossOracle {
    fn dim(&self) -> usize;
    fn n(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    fn gradient(&self, w: &[f64]) -> Vec<f64>;
    fn soi(&self, w: &[f64]) -> SymMatrix;
    fn regularity(&self) -> LossRegularity;
    fn soi_kind(&self) -> SoiKind;
}

// ---------------------------------------------------------------------------
// Stable scalar kernels
// ---------------------------------------------------------------------------

/// log(1 + eᵗ) without overflow for |t| up to ~700.
#[inline]
pub fn log1p_exp(t: f64) -> f64 {
    if t <= 0.0 {
        t.exp().ln_1p()
    } else {
        t + (-t).exp().ln_1p()
    }
}

/// σ(-t) = 1/(1 + eᵗ), stable on both tails.
#[inline]
fn sigmoid_neg(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// Hessian curvature 1/(e^{-s/2} + e^{s/2})² = σ(s)σ(-s).
#[inline]
fn hessian_coeff(s: f64) -> f64 {
    let e = (-s.abs()).exp();
    let denom = 1.0 + e;
    e / (denom * denom)
}

/// QU curvature tanh(s/2)/(2s), extended continuously through s = 0 by its
/// series 1/4 - s²/48 + … .
#[inline]
pub fn qu_coeff(s: f64) -> f64 {
    if s.abs() < 1e-4 {
        0.25 - s * s / 48.0
    } else {
        (0.5 * s).tanh() / (2.0 * s)
    }
}

// ---------------------------------------------------------------------------
// Logistic loss over a dataset (averages, never sums)
// ---------------------------------------------------------------------------

/// ℓ(w, S) = (1/n) Σ log(1 + exp(-yᵢ⟨w,xᵢ⟩)).
pub fn logistic_value(w: &[f64], data: &Dataset) -> f64 {
    let mut acc = 0.0;
    for i in 0..data.n() {
        acc += log1p_exp(-data.y(i) * dot(w, data.x(i)));
    }
    acc / data.n() as f64
}

/// ∇ℓ(w, S) = (1/n) Σ -yᵢxᵢ σ(-yᵢ⟨w,xᵢ⟩); norm never exceeds 1.
pub fn logistic_gradient(w: &[f64], data: &Dataset) -> Vec<f64> {
    let mut g = vec![0.0; data.dim()];
    let inv_n = 1.0 / data.n() as f64;
    for i in 0..data.n() {
        let x = data.x(i);
        let y = data.y(i);
        let c = -y * sigmoid_neg(y * dot(w, x)) * inv_n;
        axpy(&mut g, c, x);
    }
    g
}

/// ∇²ℓ(w, S) = (1/n) Σ xᵢxᵢᵀ σ(sᵢ)σ(-sᵢ); PSD with λ_max ≤ 1/4.
pub fn logistic_hessian(w: &[f64], data: &Dataset) -> SymMatrix {
    soi_matrix(w, data, SoiKind::Hessian)
}

/// H_qu(w, S) = (1/n) Σ xᵢxᵢᵀ tanh(sᵢ/2)/(2sᵢ); PSD with λ_max ≤ 1/4 and
/// a global quadratic upper bound on the logistic loss.
pub fn logistic_qu_soi(w: &[f64], data: &Dataset) -> SymMatrix {
    soi_matrix(w, data, SoiKind::Qu)
}

pub fn soi_matrix(w: &[f64], data: &Dataset, kind: SoiKind) -> SymMatrix {
    let mut h = SymMatrix::zeros(data.dim());
    let inv_n = 1.0 / data.n() as f64;
    for i in 0..data.n() {
        let x = data.x(i);
        let s = dot(w, x);
        let c = match kind {
            SoiKind::Hessian => hessian_coeff(s),
            SoiKind::Qu => qu_coeff(s),
        };
        h.add_scaled_outer(x, c * inv_n);
    }
    h
}

/// Per-example SOI coefficient, exposed for sensitivity experiments.
pub fn soi_coeff(w: &[f64], x: &[f64], kind: SoiKind) -> f64 {
    let s = dot(w, x);
    match kind {
        SoiKind::Hessian => hessian_coeff(s),
        SoiKind::Qu => qu_coeff(s),
    }
}

/// Per-example gradient coefficient: ∇f(w,(x,y)) = c·x with
/// c = -y σ(-y⟨w,x⟩).
pub fn example_gradient_coeff(w: &[f64], x: &[f64], y: f64) -> f64 {
    -y * sigmoid_neg(y * dot(w, x))
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Plain logistic loss oracle (convex, 1-Lipschitz, 1/4-smooth).
#[derive(Debug, Clone)]
pub struct LogisticOracle<'a> {
    data: &'a Dataset,
    kind: SoiKind,
    l2: f64,
}

impl<'a> LogisticOracle<'a> {
    pub fn new(data: &'a Dataset, kind: SoiKind) -> Self {
        LogisticOracle {
            data,
            kind,
            l2: DEFAULT_LOGISTIC_L2,
        }
    }

    pub fn with_l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }
}

impl LossOracle for LogisticOracle<'_> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn n(&self) -> usize {
        self.data.n()
    }

    fn value(&self, w: &[f64]) -> f64 {
        logistic_value(w, self.data)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        logistic_gradient(w, self.data)
    }

    fn soi(&self, w: &[f64]) -> SymMatrix {
        soi_matrix(w, self.data, self.kind)
    }

    fn regularity(&self) -> LossRegularity {
        LossRegularity {
            l0: 1.0,
            l1: 0.25,
            l2: self.l2,
            mu: 0.0,
        }
    }

    fn soi_kind(&self) -> SoiKind {
        self.kind
    }
}

/// Logistic loss plus (μ/2)‖w‖²: the strongly convex instance for the cubic
/// method. On a ball of diameter D the regularity is
/// L0 = 1 + μD, L1 = 1/4 + μ, L2 unchanged, strong convexity μ.
#[derive(Debug, Clone)]
pub struct RidgeLogisticOracle<'a> {
    data: &'a Dataset,
    mu: f64,
    diameter: f64,
    l2: f64,
}

pub fn ridge_logistic_oracle(
    data: &Dataset,
    mu: f64,
    diameter: f64,
) -> Result<RidgeLogisticOracle<'_>> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput("mu must be positive".into()));
    }
    if !(diameter > 0.0) {
        return Err(Error::InvalidInput("diameter must be positive".into()));
    }
    Ok(RidgeLogisticOracle {
        data,
        mu,
        diameter,
        l2: DEFAULT_LOGISTIC_L2,
    })
}

impl RidgeLogisticOracle<'_> {
    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl LossOracle for RidgeLogisticOracle<'_> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn n(&self) -> usize {
        self.data.n()
    }

    fn value(&self, w: &[f64]) -> f64 {
        logistic_value(w, self.data) + 0.5 * self.mu * dot(w, w)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = logistic_gradient(w, self.data);
        axpy(&mut g, self.mu, w);
        g
    }

    fn soi(&self, w: &[f64]) -> SymMatrix {
        let mut h = logistic_hessian(w, self.data);
        h.add_diag(self.mu);
        h
    }

    fn regularity(&self) -> LossRegularity {
        LossRegularity {
            l0: 1.0 + self.mu * self.diameter,
            l1: 0.25 + self.mu,
            l2: self.l2,
            mu: self.mu,
        }
    }

    fn soi_kind(&self) -> SoiKind {
        SoiKind::Hessian
    }
}
