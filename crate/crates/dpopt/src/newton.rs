//! Double-noise Newton for DP logistic regression: the four variants
//! (Hessian/QU second-order information × clip/add modification), the
//! adaptive λ₀ schedule, the Poisson-minibatch variant, and local
//! convergence-coefficient diagnostics.

use crate::error::{Error, Result};
use crate::losses::{
    logistic_gradient, logistic_hessian, logistic_value, soi_matrix, Dataset, SoiKind,
};
use crate::numkit::{axpy, eig_sym, norm, GaussianStream, NoiseRole, RandomSource};
use crate::privacy::{
    approx_dp_to_zcdp, gaussian_sigma, sgm_noise_multiplier, split_budget, ApproxDpBudget,
    BudgetShares, ZcdpBudget,
};
use crate::spectra::{
    adaptive_lambda0, private_trace, psi_modify, sensitivity_logistic, sensitivity_minibatch,
    ModKind, SpectralModifier,
};
use crate::trace::{IterationRecord, RunTrace};
use std::time::Instant;

/// Spectral floor policy: a fixed λ₀, or the private adaptive rule with
/// coefficient β recomputed from a noisy trace every iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda0Policy {
    Fixed(f64),
    Adaptive { beta: f64 },
}

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    pub soi: SoiKind,
    pub modifier: ModKind,
    pub policy: Lambda0Policy,
    pub budget: ZcdpBudget,
    pub w0: Vec<f64>,
    pub seed: u64,
    /// Disables all noise draws' effect (σ = 0). Diagnostics only; the
    /// resulting trace is flagged non-private.
    pub noiseless: bool,
}

impl NewtonConfig {
    fn validate(&self, n: usize) -> Result<()> {
        match self.policy {
            Lambda0Policy::Fixed(lambda0) => {
                if self.budget.gamma != 0.0 {
                    return Err(Error::InvalidInput(
                        "fixed λ0 runs must use γ = 0 (no trace budget)".into(),
                    ));
                }
                // fail fast if the regime precondition cannot hold
                let m = SpectralModifier::new(self.modifier, lambda0)?;
                sensitivity_logistic(n, &m)?;
            }
            Lambda0Policy::Adaptive { beta } => {
                if !(beta > 0.0) {
                    return Err(Error::InvalidInput("adaptive β must be positive".into()));
                }
                if self.budget.gamma <= 0.0 {
                    return Err(Error::InvalidInput(
                        "adaptive λ0 needs a trace slice: γ must be > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn algorithm_name(&self) -> String {
        let soi = match self.soi {
            SoiKind::Hessian => "hess",
            SoiKind::Qu => "qu",
        };
        let m = match self.modifier {
            ModKind::Clip => "clip",
            ModKind::Add => "add",
        };
        format!("{soi}-{m}")
    }
}

/// The per-role noise streams of one run.
pub struct NewtonStreams {
    pub gradient: GaussianStream,
    pub trace: GaussianStream,
    pub direction: GaussianStream,
}

impl NewtonStreams {
    pub fn from_seed(seed: u64) -> Self {
        let src = RandomSource::new(seed);
        NewtonStreams {
            gradient: src.stream(NoiseRole::Gradient),
            trace: src.stream(NoiseRole::Trace),
            direction: src.stream(NoiseRole::Direction),
        }
    }
}

/// Everything one update did, for replay and noise-scale checks.
#[derive(Debug, Clone)]
pub struct StepDetail {
    pub lambda0: f64,
    pub sigma1: f64,
    /// Direction noise scale per unit ‖g̃‖.
    pub sigma2: f64,
    pub trace_estimate: Option<f64>,
    pub g_tilde: Vec<f64>,
    pub direction: Vec<f64>,
}

/// One double-noise Newton update. Order of operations: gradient noise,
/// private trace (adaptive only), λ₀ rule, σ₂ from λ₀, direction noise.
pub fn dn_newton_step(
    w: &[f64],
    data: &Dataset,
    cfg: &NewtonConfig,
    shares: &BudgetShares,
    streams: &mut NewtonStreams,
) -> Result<(Vec<f64>, StepDetail)> {
    let n = data.n();
    let d = data.dim();

    // (1) noisy gradient
    let sigma1 = if cfg.noiseless {
        0.0
    } else {
        gaussian_sigma(1.0 / n as f64, shares.gradient)?
    };
    let xi1 = streams.gradient.normal_vec(d);
    let mut g_tilde = logistic_gradient(w, data);
    axpy(&mut g_tilde, sigma1, &xi1);

    let h = soi_matrix(w, data, cfg.soi);

    // (2)-(3) λ₀, via the private trace when adaptive
    let (lambda0, trace_estimate) = match cfg.policy {
        Lambda0Policy::Fixed(l) => (l, None),
        Lambda0Policy::Adaptive { beta } => {
            let rho_trace = if cfg.noiseless {
                f64::INFINITY
            } else {
                shares.trace
            };
            let est = private_trace(&h, n, rho_trace, &mut streams.trace)?;
            let b = &cfg.budget;
            let l = adaptive_lambda0(est, n, b.t, b.rho, b.theta, b.gamma, beta);
            (l, Some(est))
        }
    };

    // (4) direction sensitivity and noise scale
    let modifier = SpectralModifier::new(cfg.modifier, lambda0)?;
    let sens = sensitivity_logistic(n, &modifier)?;
    let sigma2 = if cfg.noiseless {
        0.0
    } else {
        gaussian_sigma(sens.value, shares.direction)?
    };

    // (5) preconditioned step plus direction noise scaled by ‖g̃‖
    let soi = psi_modify(eig_sym(&h)?, &modifier)?;
    let direction = soi.apply_inverse(&g_tilde);
    let xi2 = streams.direction.normal_vec(d);
    let mut next = w.to_vec();
    axpy(&mut next, -1.0, &direction);
    axpy(&mut next, norm(&g_tilde) * sigma2, &xi2);

    Ok((
        next,
        StepDetail {
            lambda0,
            sigma1,
            sigma2,
            trace_estimate,
            g_tilde,
            direction,
        },
    ))
}

/// Runs T double-noise Newton iterations; the ledger totals the configured
/// ρ exactly (gradient + trace + direction shares per iteration).
pub fn dn_newton_run(data: &Dataset, cfg: &NewtonConfig) -> Result<RunTrace> {
    let n = data.n();
    if cfg.w0.len() != data.dim() {
        return Err(Error::InvalidInput("w0 dimension mismatch".into()));
    }
    cfg.validate(n)?;
    let shares = split_budget(&cfg.budget);
    let mut streams = NewtonStreams::from_seed(cfg.seed);

    let mut trace = RunTrace::new(&cfg.algorithm_name(), !cfg.noiseless);
    let mut w = cfg.w0.clone();
    let adaptive = matches!(cfg.policy, Lambda0Policy::Adaptive { .. });

    // wall time accumulates solver work only, not trace bookkeeping
    let mut algo_ms = 0.0;
    push_record(&mut trace, 0, &w, data, 0.0, algo_ms, None);
    for t in 0..cfg.budget.t {
        let tick = Instant::now();
        let (next, _detail) = dn_newton_step(&w, data, cfg, &shares, &mut streams)?;
        algo_ms += tick.elapsed().as_secs_f64() * 1e3;
        w = next;
        trace.ledger.record("gradient", shares.gradient);
        if adaptive {
            trace.ledger.record("trace", shares.trace);
        }
        trace.ledger.record("direction", shares.direction);
        let rho_spent = trace.ledger.total();
        push_record(&mut trace, t + 1, &w, data, rho_spent, algo_ms, None);
    }
    Ok(trace)
}

fn push_record(
    trace: &mut RunTrace,
    t: usize,
    w: &[f64],
    data: &Dataset,
    rho_spent: f64,
    wall_ms: f64,
    inner_steps: Option<usize>,
) {
    trace.records.push(IterationRecord {
        t,
        iterate: w.to_vec(),
        loss: logistic_value(w, data),
        grad_norm: norm(&logistic_gradient(w, data)),
        rho_spent,
        wall_ms,
        inner_steps,
    });
}

// ---------------------------------------------------------------------------
// Minibatch variant
// ---------------------------------------------------------------------------

/// Poisson subsample: each index independently with probability p.
pub fn poisson_subsample(n: usize, p: f64, stream: &mut GaussianStream) -> Vec<usize> {
    (0..n).filter(|_| stream.uniform() < p).collect()
}

/// Minibatch double-noise Newton under an (ε, δ) target: per-iteration
/// Poisson subsampling for gradient and SOI independently, noise multipliers
/// from the subsampled-Gaussian accountant at ((1−θ)ε, (1−θ)δ) and
/// (θε, θδ). Requires a fixed λ₀. An empty subsample contributes a zero
/// gradient / zero SOI (then Ψ-modified).
pub fn dn_newton_minibatch_run(
    data: &Dataset,
    cfg: &NewtonConfig,
    p_g: f64,
    p_h: f64,
    target: &ApproxDpBudget,
) -> Result<RunTrace> {
    let n = data.n();
    let d = data.dim();
    if cfg.w0.len() != d {
        return Err(Error::InvalidInput("w0 dimension mismatch".into()));
    }
    if !(p_g > 0.0 && p_g <= 1.0 && p_h > 0.0 && p_h <= 1.0) {
        return Err(Error::InvalidInput("sampling rates must be in (0, 1]".into()));
    }
    let lambda0 = match cfg.policy {
        Lambda0Policy::Fixed(l) => l,
        Lambda0Policy::Adaptive { .. } => {
            return Err(Error::UnsupportedInstance(
                "the minibatch variant uses a fixed λ0".into(),
            ))
        }
    };
    let theta = cfg.budget.theta;
    let t_total = cfg.budget.t;
    let modifier = SpectralModifier::new(cfg.modifier, lambda0)?;
    let sens = sensitivity_minibatch(n, p_h, &modifier)?;

    let grad_target = ApproxDpBudget::new((1.0 - theta) * target.epsilon, (1.0 - theta) * target.delta)?;
    let dir_target = ApproxDpBudget::new(theta * target.epsilon, theta * target.delta)?;
    let sigma1_mult = sgm_noise_multiplier(&grad_target, p_g, t_total)?;
    let sigma2_mult = sgm_noise_multiplier(&dir_target, p_h, t_total)?;
    let sigma2 = sens.value * sigma2_mult;

    // zCDP-equivalent bookkeeping of the two SGM families
    let rho_grad = approx_dp_to_zcdp(&grad_target) / t_total as f64;
    let rho_dir = approx_dp_to_zcdp(&dir_target) / t_total as f64;

    let src = RandomSource::new(cfg.seed);
    let mut grad_stream = src.stream(NoiseRole::Gradient);
    let mut dir_stream = src.stream(NoiseRole::Direction);
    let mut sub_stream = src.stream(NoiseRole::Subsampling);

    let mut trace = RunTrace::new(&format!("{}-minibatch", cfg.algorithm_name()), !cfg.noiseless);
    let mut w = cfg.w0.clone();
    let mut algo_ms = 0.0;
    push_record(&mut trace, 0, &w, data, 0.0, algo_ms, None);

    let inv_npg = 1.0 / (n as f64 * p_g);
    let inv_nph = 1.0 / (n as f64 * p_h);
    for t in 0..t_total {
        let tick = Instant::now();
        let idx_g = poisson_subsample(n, p_g, &mut sub_stream);
        let idx_h = poisson_subsample(n, p_h, &mut sub_stream);

        let mut g = vec![0.0; d];
        for &i in &idx_g {
            let x = data.x(i);
            let c = crate::losses::example_gradient_coeff(&w, x, data.y(i));
            axpy(&mut g, c, x);
        }
        for v in &mut g {
            *v *= inv_npg;
        }

        let mut h = crate::numkit::SymMatrix::zeros(d);
        for &j in &idx_h {
            let x = data.x(j);
            let c = crate::losses::soi_coeff(&w, x, cfg.soi);
            h.add_scaled_outer(x, c * inv_nph);
        }

        let xi1 = grad_stream.normal_vec(d);
        let noise_scale = if cfg.noiseless { 0.0 } else { sigma1_mult * inv_npg };
        axpy(&mut g, noise_scale, &xi1);

        let soi = psi_modify(eig_sym(&h)?, &modifier)?;
        let direction = soi.apply_inverse(&g);
        let xi2 = dir_stream.normal_vec(d);
        let dir_scale = if cfg.noiseless { 0.0 } else { norm(&g) * sigma2 };
        axpy(&mut w, -1.0, &direction);
        axpy(&mut w, dir_scale, &xi2);
        algo_ms += tick.elapsed().as_secs_f64() * 1e3;

        trace.ledger.record("gradient(sgm)", rho_grad);
        trace.ledger.record("direction(sgm)", rho_dir);
        let rho_spent = trace.ledger.total();
        push_record(&mut trace, t + 1, &w, data, rho_spent, algo_ms, None);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Convergence-coefficient diagnostics
// ---------------------------------------------------------------------------

/// Coefficients of the local composite-convergence recursion, computed at an
/// iterate. The Δ term drops the unstated absolute constant (set to 1), so
/// these are exact up to constants.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceCoefficients {
    pub nu1: f64,
    pub nu2: f64,
    pub delta: f64,
    pub lambda_tilde_min: f64,
}

const EIGENVALUE_ZERO_TOL: f64 = 1e-10;

/// Diagnostics: ν₁ = 1 − λ̃/λ₀ + √rank/((4nλ₀² − λ₀)√(2ρθ)),
/// ν₂ = 0.05/λ̃, Δ = rank/(ρ(1−θ)n²λ̃²), where λ̃ is min{λ_min, λ₀} for
/// clip and λ_min + λ₀ for add, λ_min being the smallest nonzero eigenvalue
/// of the Hessian at `w` and ρ the per-iteration budget.
pub fn local_convergence_coefficients(
    data: &Dataset,
    w: &[f64],
    cfg: &NewtonConfig,
    rank: usize,
) -> Result<ConvergenceCoefficients> {
    let n = data.n() as f64;
    let h = logistic_hessian(w, data);
    let eig = eig_sym(&h)?;
    let lambda_min = eig
        .values
        .iter()
        .copied()
        .find(|&l| l > EIGENVALUE_ZERO_TOL)
        .ok_or_else(|| {
            Error::DegenerateInstance("all Hessian eigenvalues are zero at this iterate".into())
        })?;

    let lambda0 = match cfg.policy {
        Lambda0Policy::Fixed(l) => l,
        Lambda0Policy::Adaptive { beta } => {
            let b = &cfg.budget;
            adaptive_lambda0(h.trace(), data.n(), b.t, b.rho, b.theta, b.gamma, beta)
        }
    };
    let lambda_tilde = match cfg.modifier {
        ModKind::Clip => lambda_min.min(lambda0),
        ModKind::Add => lambda_min + lambda0,
    };

    let rho_iter = cfg.budget.rho / cfg.budget.t as f64;
    let theta = cfg.budget.theta;
    let denom = 4.0 * n * lambda0 * lambda0 - lambda0;
    if denom <= 0.0 {
        return Err(Error::Precondition(format!(
            "4nλ0² − λ0 must be positive (λ0 = {lambda0}, n = {n})"
        )));
    }
    let nu1 = 1.0 - lambda_tilde / lambda0
        + (rank as f64).sqrt() / (denom * (2.0 * rho_iter * theta).sqrt());
    let nu2 = 0.05 / lambda_tilde;
    let delta = rank as f64 / (rho_iter * (1.0 - theta) * n * n * lambda_tilde * lambda_tilde);
    Ok(ConvergenceCoefficients {
        nu1,
        nu2,
        delta,
        lambda_tilde_min: lambda_tilde,
    })
}
