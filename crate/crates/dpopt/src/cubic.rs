//! Optimal machinery for strongly convex losses: the cubic model φ_M, the
//! DP subproblem solver (projected noisy gradient descent with weighted
//! averaging), the outer meta loop, the DP accelerated Nesterov method for
//! merely convex losses, and the contraction sequence used by the
//! convergence analysis.

use crate::error::{Error, Result};
use crate::losses::{LossOracle, LossRegularity};
use crate::numkit::{
    axpy, dot, norm, project_ball, scale, sub, GaussianStream, NoiseRole, RandomSource, SymMatrix,
};
use crate::trace::{IterationRecord, RunTrace};
use std::time::Instant;

/// Closed Euclidean ball feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl FeasibleBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput("ball radius must be positive".into()));
        }
        Ok(FeasibleBall { center, radius })
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        project_ball(w, &self.center, self.radius)
    }
}

/// Second-order model with cubic regularization, anchored at `anchor`:
/// φ_M(v) = value + ⟨g, v−w⟩ + ½(v−w)ᵀH(v−w) + (M/6)‖v−w‖³.
#[derive(Debug, Clone)]
pub struct CubicModel {
    pub anchor: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
    pub m: f64,
}

impl CubicModel {
    pub fn from_oracle(oracle: &dyn LossOracle, w: &[f64], m: f64) -> Self {
        CubicModel {
            anchor: w.to_vec(),
            value: oracle.value(w),
            gradient: oracle.gradient(w),
            hessian: oracle.soi(w),
            m,
        }
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }
}

pub fn phi_value(model: &CubicModel, v: &[f64]) -> f64 {
    let diff = sub(v, &model.anchor);
    let r = norm(&diff);
    model.value
        + dot(&model.gradient, &diff)
        + 0.5 * model.hessian.quad_form(&diff)
        + model.m / 6.0 * r * r * r
}

/// ∇φ_M(v) = g + H(v−w) + (M/2)‖v−w‖(v−w).
pub fn phi_gradient(model: &CubicModel, v: &[f64]) -> Vec<f64> {
    let diff = sub(v, &model.anchor);
    let r = norm(&diff);
    let mut g = model.gradient.clone();
    let hv = model.hessian.matvec(&diff);
    axpy(&mut g, 1.0, &hv);
    axpy(&mut g, model.m / 2.0 * r, &diff);
    g
}

// ---------------------------------------------------------------------------
// DP subproblem solver
// ---------------------------------------------------------------------------

/// Hard cap on the inner iteration count.
pub const DP_SOLVER_STEP_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, Default)]
pub struct DpSolverOptions {
    /// σ forced to zero (diagnostics; flagged non-private by callers).
    pub noiseless: bool,
    /// Overrides the derived inner step count N.
    pub inner_steps_override: Option<usize>,
}

/// Projected noisy gradient descent on φ_M over the ball, with stepsizes
/// 2/(μ(i+2)) and averaging weights 2(i+1)/(N(N+1)) over the first N
/// iterates (the weights sum to one). The step count is
/// N = 2L²ρ̃/(μdΔ²) with L = L0 + L1·D + (M/2)D² and Δ = (L0 + L1·D)/n,
/// and each noisy gradient uses σ² = NΔ²/(2ρ̃), so the output is
/// ρ̃-zCDP. Returns the averaged point and N.
pub fn dp_solver(
    model: &CubicModel,
    rho_tilde: f64,
    ball: &FeasibleBall,
    reg: &LossRegularity,
    n: usize,
    stream: &mut GaussianStream,
    opts: DpSolverOptions,
) -> Result<(Vec<f64>, usize)> {
    if !(rho_tilde > 0.0) {
        return Err(Error::InvalidInput("rho_tilde must be positive".into()));
    }
    if !(reg.mu > 0.0) {
        return Err(Error::UnsupportedInstance(
            "dp_solver needs a strongly convex model (mu > 0)".into(),
        ));
    }
    let d = model.dim() as f64;
    let diam = ball.diameter();
    let lipschitz = reg.l0 + reg.l1 * diam + model.m / 2.0 * diam * diam;
    let sensitivity = (reg.l0 + reg.l1 * diam) / n as f64;

    let n_steps = match opts.inner_steps_override {
        Some(k) => k.max(1),
        None => {
            let raw = 2.0 * lipschitz * lipschitz * rho_tilde
                / (reg.mu * d * sensitivity * sensitivity);
            let raw = raw.ceil().max(1.0);
            if raw > DP_SOLVER_STEP_CAP as f64 {
                log::warn!(
                    "dp_solver step count {raw:.3e} exceeds the cap {DP_SOLVER_STEP_CAP}; capping"
                );
                DP_SOLVER_STEP_CAP
            } else {
                raw as usize
            }
        }
    };
    let sigma = if opts.noiseless {
        0.0
    } else {
        (n_steps as f64 * sensitivity * sensitivity / (2.0 * rho_tilde)).sqrt()
    };

    let dim = model.dim();
    let mut theta = model.anchor.clone();
    let mut averaged = vec![0.0; dim];
    let weight_scale = 2.0 / (n_steps as f64 * (n_steps as f64 + 1.0));
    let mut diff = vec![0.0; dim];
    let mut hdiff = vec![0.0; dim];
    for i in 0..n_steps {
        axpy(&mut averaged, (i + 1) as f64 * weight_scale, &theta);

        for k in 0..dim {
            diff[k] = theta[k] - model.anchor[k];
        }
        let r = norm(&diff);
        model.hessian.matvec_into(&diff, &mut hdiff);
        let eta = 2.0 / (reg.mu * (i as f64 + 2.0));
        let cubic_coeff = model.m / 2.0 * r;
        if sigma > 0.0 {
            for k in 0..dim {
                let grad_k =
                    model.gradient[k] + hdiff[k] + cubic_coeff * diff[k] + sigma * stream.normal();
                theta[k] -= eta * grad_k;
            }
        } else {
            for k in 0..dim {
                theta[k] -= eta * (model.gradient[k] + hdiff[k] + cubic_coeff * diff[k]);
            }
        }
        // project back onto the ball in place
        for k in 0..dim {
            diff[k] = theta[k] - ball.center[k];
        }
        let dist = norm(&diff);
        if dist > ball.radius {
            let s = ball.radius / dist;
            for k in 0..dim {
                theta[k] = ball.center[k] + s * diff[k];
            }
        }
    }
    Ok((averaged, n_steps))
}

// ---------------------------------------------------------------------------
// Meta algorithm
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CubicConfig {
    /// Cubic regularizer; defaults to the oracle's L2 (tightest valid
    /// upper bound).
    pub m: Option<f64>,
    /// Outer iterations.
    pub t: usize,
    /// Total zCDP budget, split evenly across outer iterations.
    pub rho: f64,
    pub ball: FeasibleBall,
    pub seed: u64,
    pub noiseless: bool,
    pub inner_steps_override: Option<usize>,
}

/// Outer loop: each iteration builds φ_M at the current iterate and hands it
/// to the subproblem solver with budget ρ/T.
pub fn cubic_meta_run(oracle: &dyn LossOracle, cfg: &CubicConfig) -> Result<RunTrace> {
    let reg = oracle.regularity();
    if !(reg.mu > 0.0) {
        return Err(Error::UnsupportedInstance(
            "cubic meta needs strong convexity; use nesterov_dp_run for merely convex losses"
                .into(),
        ));
    }
    if cfg.t < 1 {
        return Err(Error::InvalidInput(
            "need at least one outer iteration".into(),
        ));
    }
    let m = cfg.m.unwrap_or(reg.l2);
    let rho_tilde = cfg.rho / cfg.t as f64;
    let mut stream = RandomSource::new(cfg.seed).stream(NoiseRole::InnerSolver);
    let opts = DpSolverOptions {
        noiseless: cfg.noiseless,
        inner_steps_override: cfg.inner_steps_override,
    };

    let mut trace = RunTrace::new("cubic-newton", !cfg.noiseless);
    let mut w = cfg.ball.center.clone();
    let mut algo_ms = 0.0;
    push_oracle_record(&mut trace, 0, &w, oracle, 0.0, algo_ms, None);
    for t in 0..cfg.t {
        let tick = Instant::now();
        let model = CubicModel::from_oracle(oracle, &w, m);
        let (next, inner) = dp_solver(
            &model,
            rho_tilde,
            &cfg.ball,
            &reg,
            oracle.n(),
            &mut stream,
            opts,
        )?;
        algo_ms += tick.elapsed().as_secs_f64() * 1e3;
        w = next;
        trace.ledger.record("cubic-subproblem", rho_tilde);
        let rho_spent = trace.ledger.total();
        push_oracle_record(&mut trace, t + 1, &w, oracle, rho_spent, algo_ms, Some(inner));
    }
    Ok(trace)
}

fn push_oracle_record(
    trace: &mut RunTrace,
    t: usize,
    w: &[f64],
    oracle: &dyn LossOracle,
    rho_spent: f64,
    wall_ms: f64,
    inner_steps: Option<usize>,
) {
    trace.records.push(IterationRecord {
        t,
        iterate: w.to_vec(),
        loss: oracle.value(w),
        grad_norm: norm(&oracle.gradient(w)),
        rho_spent,
        wall_ms,
        inner_steps,
    });
}

// ---------------------------------------------------------------------------
// DP accelerated Nesterov
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
pub struct NesterovOptions {
    pub t_override: Option<usize>,
    pub noiseless: bool,
}

/// Number of iterations from the dimension-aware balance
/// T = (D²ρn²/(dL0²))^{1/4}.
pub fn nesterov_iterations(diameter: f64, rho: f64, n: usize, d: usize, l0: f64) -> usize {
    let nf = n as f64;
    let t = (diameter * diameter * rho * nf * nf / (d as f64 * l0 * l0)).powf(0.25);
    (t.ceil() as usize).max(1)
}

/// DP accelerated Nesterov for convex, L0-Lipschitz, L1-smooth losses on a
/// ball. Momentum sequence: α_t = 2/(t+1), γ_t = 4γ/(t(t+1)) with γ = 2L1;
/// the noisy gradient at the midpoint uses σ² = L0²T/(2ρn²); the prox step
/// projects w_{t-1} − (α_t/γ_t)G_t back onto the ball.
pub fn nesterov_dp_run(
    oracle: &dyn LossOracle,
    ball: &FeasibleBall,
    rho: f64,
    seed: u64,
    opts: NesterovOptions,
) -> Result<RunTrace> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("rho must be positive".into()));
    }
    let reg = oracle.regularity();
    let n = oracle.n();
    let d = oracle.dim();
    let t_total = opts
        .t_override
        .unwrap_or_else(|| nesterov_iterations(ball.diameter(), rho, n, d, reg.l0));
    let sigma = if opts.noiseless {
        0.0
    } else {
        reg.l0 * (t_total as f64 / (2.0 * rho)).sqrt() / n as f64
    };
    let gamma = 2.0 * reg.l1;
    let rho_per_iter = rho / t_total as f64;

    let mut stream = RandomSource::new(seed).stream(NoiseRole::Gradient);
    let mut trace = RunTrace::new("nesterov-dp", !opts.noiseless);

    let mut w_prev = ball.center.clone();
    let mut w_ag = ball.center.clone();
    let mut algo_ms = 0.0;
    push_oracle_record(&mut trace, 0, &w_ag, oracle, 0.0, algo_ms, None);
    for t in 1..=t_total {
        let tick = Instant::now();
        let tf = t as f64;
        let alpha = 2.0 / (tf + 1.0);
        let gamma_t = 4.0 * gamma / (tf * (tf + 1.0));

        // midpoint between the aggregate and the previous prox iterate
        let mut w_md = scale(&w_ag, 1.0 - alpha);
        axpy(&mut w_md, alpha, &w_prev);

        let mut g = oracle.gradient(&w_md);
        if sigma > 0.0 {
            for gk in g.iter_mut() {
                *gk += sigma * stream.normal();
            }
        }

        let mut w_next = w_prev.clone();
        axpy(&mut w_next, -alpha / gamma_t, &g);
        let w_t = ball.project(&w_next);

        let mut next_ag = scale(&w_ag, 1.0 - alpha);
        axpy(&mut next_ag, alpha, &w_t);
        w_ag = next_ag;
        w_prev = w_t;
        algo_ms += tick.elapsed().as_secs_f64() * 1e3;

        trace.ledger.record("gradient", rho_per_iter);
        let rho_spent = trace.ledger.total();
        push_oracle_record(&mut trace, t, &w_ag, oracle, rho_spent, algo_ms, None);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Contraction sequence
// ---------------------------------------------------------------------------

/// Simulates a_{k+1} = β₀ + ½ a_k^{3/2} from a₀ and returns
/// [a₀, a₁, …, a_T]. Doubly-logarithmic decay toward O(β₀).
pub fn phase2_recursion_check(beta0: f64, a0: f64, t: usize) -> Result<Vec<f64>> {
    if !(beta0 > 0.0) {
        return Err(Error::InvalidInput("beta0 must be positive".into()));
    }
    if a0 > 16.0 / 9.0 + 1e-12 {
        return Err(Error::InvalidInput("a0 must be at most 16/9".into()));
    }
    let mut seq = Vec::with_capacity(t + 1);
    let mut a = a0;
    seq.push(a);
    for _ in 0..t {
        a = beta0 + 0.5 * a.powf(1.5);
        seq.push(a);
    }
    Ok(seq)
}
