//! Local convergence-coefficient diagnostics along a run: the contraction
//! factor, the quadratic coefficient, and the privacy noise floor from the
//! composite convergence recursion, plus the raw contraction sequence.

use dpopt::cubic::phase2_recursion_check;
use dpopt::datasets::{planted_weight, synthetic_generate};
use dpopt::losses::SoiKind;
use dpopt::newton::{dn_newton_run, local_convergence_coefficients, Lambda0Policy, NewtonConfig};
use dpopt::numkit::{span_projector, DEFAULT_SPAN_TOL};
use dpopt::privacy::ZcdpBudget;
use dpopt::spectra::ModKind;

fn main() -> dpopt::Result<()> {
    let (n, d) = (3000, 12);
    let data = synthetic_generate(n, d, &planted_weight(d, 1.5, 17), 18)?;
    let rank = span_projector(&data.feature_vectors(), DEFAULT_SPAN_TOL)?.rank();
    let cfg = NewtonConfig {
        soi: SoiKind::Hessian,
        modifier: ModKind::Clip,
        policy: Lambda0Policy::Fixed(0.02),
        budget: ZcdpBudget::new(1.0, 0.3, 0.0, 6)?,
        w0: vec![0.0; d],
        seed: 19,
        noiseless: false,
    };
    let trace = dn_newton_run(&data, &cfg)?;
    println!("feature rank = {rank}");
    for r in &trace.records {
        let c = local_convergence_coefficients(&data, &r.iterate, &cfg, rank)?;
        println!(
            "t = {}  loss = {:.6}  nu1 = {:+.4}  nu2 = {:.2}  Delta = {:.2e}  lambda~ = {:.4}",
            r.t, r.loss, c.nu1, c.nu2, c.delta, c.lambda_tilde_min
        );
    }

    println!("\ncontraction sequence a_(k+1) = b0 + a_k^1.5/2 from a0 = 16/9, b0 = 1e-8:");
    let seq = phase2_recursion_check(1e-8, 16.0 / 9.0, 10)?;
    let formatted: Vec<String> = seq.iter().map(|a| format!("{a:.2e}")).collect();
    println!("{}", formatted.join(" -> "));
    Ok(())
}
