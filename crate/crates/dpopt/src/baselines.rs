//! First-order and prior-work comparators: DP-GD, DP-SGD, DP-GD-Oracle
//! (non-private exact line search), and the damped private Newton baseline.

use crate::error::{Error, Result};
use crate::losses::{example_gradient_coeff, logistic_gradient, logistic_hessian, Dataset, LossOracle};
use crate::newton::poisson_subsample;
use crate::numkit::{axpy, dot, eig_sym, norm, NoiseRole, RandomSource, SymMatrix};
use crate::privacy::{approx_dp_to_zcdp, sgm_noise_multiplier, ApproxDpBudget};
use crate::trace::{IterationRecord, RunTrace};
use std::time::Instant;

#[derive(Debug, Clone)]
pub enum BaselineBudget {
    Zcdp(f64),
    ApproxDp(ApproxDpBudget),
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub t: usize,
    pub budget: BaselineBudget,
    /// Stepsize; defaults to the inverse smoothness 1/L1 (4 for logistic).
    pub stepsize: Option<f64>,
    /// Poisson sampling rate for DP-SGD.
    pub batch_rate: f64,
    pub w0: Vec<f64>,
    pub seed: u64,
    pub noiseless: bool,
}

impl BaselineConfig {
    pub fn new(t: usize, budget: BaselineBudget, w0: Vec<f64>, seed: u64) -> Self {
        BaselineConfig {
            t,
            budget,
            stepsize: None,
            batch_rate: 0.02,
            w0,
            seed,
            noiseless: false,
        }
    }

    fn zcdp(&self) -> Result<f64> {
        match &self.budget {
            BaselineBudget::Zcdp(rho) if *rho > 0.0 => Ok(*rho),
            BaselineBudget::Zcdp(_) => Err(Error::InvalidInput("rho must be positive".into())),
            BaselineBudget::ApproxDp(_) => Err(Error::InvalidInput(
                "this baseline takes a zCDP budget".into(),
            )),
        }
    }

    fn approx_dp(&self) -> Result<ApproxDpBudget> {
        match &self.budget {
            BaselineBudget::ApproxDp(b) => Ok(*b),
            BaselineBudget::Zcdp(_) => Err(Error::InvalidInput(
                "DP-SGD takes an (ε, δ) budget for the subsampled accountant".into(),
            )),
        }
    }
}

/// Per-iteration DP-GD noise scale σ = L0 √T / (n √(2ρ)).
pub fn dpgd_sigma(l0: f64, n: usize, t: usize, rho: f64) -> f64 {
    l0 * (t as f64).sqrt() / (n as f64 * (2.0 * rho).sqrt())
}

/// DP gradient descent: w ← w − η(∇ℓ(w) + ξ) with η = 1/L1 and Gaussian ξ.
pub fn dpgd_run(oracle: &dyn LossOracle, cfg: &BaselineConfig) -> Result<RunTrace> {
    let rho = cfg.zcdp()?;
    let reg = oracle.regularity();
    let eta = cfg.stepsize.unwrap_or(1.0 / reg.l1);
    let sigma = if cfg.noiseless || cfg.t == 0 {
        0.0
    } else {
        dpgd_sigma(reg.l0, oracle.n(), cfg.t, rho)
    };
    let mut stream = RandomSource::new(cfg.seed).stream(NoiseRole::Gradient);

    let mut trace = RunTrace::new("dp-gd", !cfg.noiseless);
    let mut w = cfg.w0.clone();
    let mut algo_ms = 0.0;
    push_record(&mut trace, 0, &w, oracle, 0.0, algo_ms);
    for t in 0..cfg.t {
        let tick = Instant::now();
        let mut g = oracle.gradient(&w);
        let xi = stream.normal_vec(w.len());
        axpy(&mut g, sigma, &xi);
        axpy(&mut w, -eta, &g);
        algo_ms += tick.elapsed().as_secs_f64() * 1e3;
        trace.ledger.record("gradient", rho / cfg.t as f64);
        let spent = trace.ledger.total();
        push_record(&mut trace, t + 1, &w, oracle, spent, algo_ms);
    }
    Ok(trace)
}

/// DP stochastic gradient descent with Poisson subsampling at rate p and a
/// noise multiplier from the subsampled-Gaussian accountant.
pub fn dpsgd_run(data: &Dataset, cfg: &BaselineConfig) -> Result<RunTrace> {
    let target = cfg.approx_dp()?;
    let p = cfg.batch_rate;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidInput("batch rate must be in (0, 1]".into()));
    }
    if cfg.t == 0 {
        return Err(Error::InvalidInput("DP-SGD needs T >= 1".into()));
    }
    let eta = cfg.stepsize.unwrap_or(4.0);
    let sigma_mult = sgm_noise_multiplier(&target, p, cfg.t)?;
    let rho_equiv = approx_dp_to_zcdp(&target);

    let src = RandomSource::new(cfg.seed);
    let mut grad_stream = src.stream(NoiseRole::Gradient);
    let mut sub_stream = src.stream(NoiseRole::Subsampling);

    let n = data.n();
    let d = data.dim();
    let inv_np = 1.0 / (n as f64 * p);
    let oracle = crate::losses::LogisticOracle::new(data, crate::losses::SoiKind::Hessian);

    let mut trace = RunTrace::new("dp-sgd", !cfg.noiseless);
    let mut w = cfg.w0.clone();
    let mut algo_ms = 0.0;
    push_record(&mut trace, 0, &w, &oracle, 0.0, algo_ms);
    for t in 0..cfg.t {
        let tick = Instant::now();
        let idx = poisson_subsample(n, p, &mut sub_stream);
        let mut g = vec![0.0; d];
        for &i in &idx {
            let x = data.x(i);
            axpy(&mut g, example_gradient_coeff(&w, x, data.y(i)), x);
        }
        for v in &mut g {
            *v *= inv_np;
        }
        let xi = grad_stream.normal_vec(d);
        let scale = if cfg.noiseless { 0.0 } else { sigma_mult * inv_np };
        axpy(&mut g, scale, &xi);
        axpy(&mut w, -eta, &g);
        algo_ms += tick.elapsed().as_secs_f64() * 1e3;
        trace.ledger.record("gradient(sgm)", rho_equiv / cfg.t as f64);
        let spent = trace.ledger.total();
        push_record(&mut trace, t + 1, &w, &oracle, spent, algo_ms);
    }
    Ok(trace)
}

/// DP-GD with the stepsize chosen by exact minimization of the loss along
/// the noisy gradient ray. The line search consults the true loss, so this
/// variant is NOT differentially private; it is a diagnostic baseline.
pub fn dpgd_oracle_run(oracle: &dyn LossOracle, cfg: &BaselineConfig) -> Result<RunTrace> {
    let rho = cfg.zcdp()?;
    let reg = oracle.regularity();
    let sigma = if cfg.noiseless || cfg.t == 0 {
        0.0
    } else {
        dpgd_sigma(reg.l0, oracle.n(), cfg.t, rho)
    };
    let mut stream = RandomSource::new(cfg.seed).stream(NoiseRole::Gradient);

    let mut trace = RunTrace::new("dp-gd-oracle", false);
    let mut w = cfg.w0.clone();
    let mut algo_ms = 0.0;
    push_record(&mut trace, 0, &w, oracle, 0.0, algo_ms);
    for t in 0..cfg.t {
        let tick = Instant::now();
        let mut g = oracle.gradient(&w);
        let xi = stream.normal_vec(w.len());
        axpy(&mut g, sigma, &xi);
        if norm(&g) > 0.0 {
            let eta = exact_line_search(oracle, &w, &g, 2.0 / reg.l1);
            axpy(&mut w, -eta, &g);
        }
        algo_ms += tick.elapsed().as_secs_f64() * 1e3;
        trace.ledger.record("gradient", rho / cfg.t as f64);
        let spent = trace.ledger.total();
        push_record(&mut trace, t + 1, &w, oracle, spent, algo_ms);
    }
    Ok(trace)
}

const LINE_SEARCH_TOL: f64 = 1e-10;
const LINE_SEARCH_MAX_ETA: f64 = 1e8;

/// argmin_{η ≥ 0} ℓ(w − η g): bracket by doubling until the directional
/// derivative turns positive, golden-section to the absolute tolerance,
/// then a derivative-sign bisection polish (value comparisons alone bottom
/// out near √machine-ε). Valid because the restriction of a convex function
/// to a ray is unimodal.
pub fn exact_line_search(oracle: &dyn LossOracle, w: &[f64], g: &[f64], eta_start: f64) -> f64 {
    let point = |eta: f64| {
        let mut p = w.to_vec();
        axpy(&mut p, -eta, g);
        p
    };
    let derivative = |eta: f64| -dot(&oracle.gradient(&point(eta)), g);

    let mut hi = eta_start.max(1.0);
    while derivative(hi) <= 0.0 && hi < LINE_SEARCH_MAX_ETA {
        hi *= 2.0;
    }

    let value = |eta: f64| oracle.value(&point(eta));
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = 0.0;
    let mut b = hi;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = value(x1);
    let mut f2 = value(x2);
    while b - a > LINE_SEARCH_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = value(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = value(x2);
        }
    }
    let eta = 0.5 * (a + b);

    // derivative polish on a window around the golden-section result
    let window = 1e-4 * (1.0 + eta);
    let mut lo = (eta - window).max(0.0);
    let mut up = eta + window;
    if derivative(lo) < 0.0 && derivative(up) > 0.0 {
        for _ in 0..80 {
            let mid = 0.5 * (lo + up);
            if derivative(mid) < 0.0 {
                lo = mid;
            } else {
                up = mid;
            }
        }
        0.5 * (lo + up)
    } else {
        eta
    }
}

/// log(1+β)/β, extended by its limit 1 at β = 0.
pub fn damped_stepsize(beta: f64) -> f64 {
    if beta < 1e-12 {
        1.0
    } else {
        beta.ln_1p() / beta
    }
}

const PSEUDO_INVERSE_CUTOFF: f64 = 1e-8;

fn pseudo_inverse_apply(h: &SymMatrix, v: &[f64]) -> Result<Vec<f64>> {
    let eig = eig_sym(h)?;
    let coeffs = eig.to_eigenbasis(v);
    let scaled: Vec<f64> = coeffs
        .iter()
        .zip(&eig.values)
        .map(|(c, l)| {
            if l.abs() > PSEUDO_INVERSE_CUTOFF {
                c / l
            } else {
                0.0
            }
        })
        .collect();
    Ok(eig.from_eigenbasis(&scaled))
}

/// Damped Newton with Gaussian noise added directly to the Hessian and the
/// gradient. The stepsize η = log(1+β)/β uses β = ‖∇²ℓ⁻¹∇ℓ‖ computed from
/// the NON-noisy quantities, which makes this baseline non-private. Each
/// iteration splits its budget share evenly between the two perturbations;
/// the Hessian noise is a symmetric matrix with i.i.d. Gaussian upper
/// triangle scaled for Frobenius sensitivity 1/(4n).
pub fn damped_newton_run(data: &Dataset, cfg: &BaselineConfig) -> Result<RunTrace> {
    let rho = cfg.zcdp()?;
    let n = data.n();
    let d = data.dim();
    let rho_half = rho / (2.0 * cfg.t.max(1) as f64);
    let (sigma_g, sigma_h) = if cfg.noiseless || cfg.t == 0 {
        (0.0, 0.0)
    } else {
        (
            crate::privacy::gaussian_sigma(1.0 / n as f64, rho_half)?,
            crate::privacy::gaussian_sigma(1.0 / (4.0 * n as f64), rho_half)?,
        )
    };
    let src = RandomSource::new(cfg.seed);
    let mut grad_stream = src.stream(NoiseRole::Gradient);
    let mut hess_stream = src.stream(NoiseRole::HessianPerturb);
    let oracle = crate::losses::LogisticOracle::new(data, crate::losses::SoiKind::Hessian);

    let mut trace = RunTrace::new("damped-newton", false);
    let mut w = cfg.w0.clone();
    let mut algo_ms = 0.0;
    push_record(&mut trace, 0, &w, &oracle, 0.0, algo_ms);
    for t in 0..cfg.t {
        let tick = Instant::now();
        let g = logistic_gradient(&w, data);
        let h = logistic_hessian(&w, data);

        let beta = norm(&pseudo_inverse_apply(&h, &g)?);
        let eta = damped_stepsize(beta);

        let mut g_tilde = g;
        let xi = grad_stream.normal_vec(d);
        axpy(&mut g_tilde, sigma_g, &xi);
        let mut h_noisy = h;
        for i in 0..d {
            for j in 0..=i {
                h_noisy.add_entry(i, j, sigma_h * hess_stream.normal());
            }
        }

        let step = pseudo_inverse_apply(&h_noisy, &g_tilde)?;
        axpy(&mut w, -eta, &step);
        algo_ms += tick.elapsed().as_secs_f64() * 1e3;
        trace.ledger.record("gradient", rho_half);
        trace.ledger.record("hessian", rho_half);
        let spent = trace.ledger.total();
        push_record(&mut trace, t + 1, &w, &oracle, spent, algo_ms);
    }
    Ok(trace)
}

fn push_record(
    trace: &mut RunTrace,
    t: usize,
    w: &[f64],
    oracle: &dyn LossOracle,
    rho_spent: f64,
    wall_ms: f64,
) {
    trace.records.push(IterationRecord {
        t,
        iterate: w.to_vec(),
        loss: oracle.value(w),
        grad_norm: norm(&oracle.gradient(w)),
        rho_spent,
        wall_ms,
        inner_steps: None,
    });
}
