//! Double-noise Newton on a synthetic logistic task: runs all four variants
//! (Hessian/QU x clip/add) with the adaptive spectral floor and prints the
//! excess-loss trajectory of each.

use dpopt::bench::reference_optimum;
use dpopt::datasets::{planted_weight, synthetic_generate};
use dpopt::losses::SoiKind;
use dpopt::newton::{dn_newton_run, Lambda0Policy, NewtonConfig};
use dpopt::privacy::{approx_dp_to_zcdp, ApproxDpBudget, ZcdpBudget};
use dpopt::spectra::ModKind;

fn main() -> dpopt::Result<()> {
    let (n, d) = (5000, 30);
    let w_star = planted_weight(d, 2.0, 7);
    let data = synthetic_generate(n, d, &w_star, 8)?;
    let reference = reference_optimum(&data, 1e-10)?;
    println!("n = {n}, d = {d}, loss* = {:.6}", reference.loss);

    // (eps, delta) = (1, n^-2) converted to zCDP
    let delta = 1.0 / (n as f64 * n as f64);
    let rho = approx_dp_to_zcdp(&ApproxDpBudget::new(1.0, delta)?);
    println!("rho = {rho:.5} (from eps = 1, delta = n^-2)\n");

    for (soi, modifier, label) in [
        (SoiKind::Hessian, ModKind::Clip, "hess-clip"),
        (SoiKind::Hessian, ModKind::Add, "hess-add"),
        (SoiKind::Qu, ModKind::Clip, "qu-clip"),
        (SoiKind::Qu, ModKind::Add, "qu-add"),
    ] {
        let cfg = NewtonConfig {
            soi,
            modifier,
            policy: Lambda0Policy::Adaptive { beta: 1.0 },
            budget: ZcdpBudget::new(rho, 0.3, 0.1, 8)?,
            w0: vec![0.0; d],
            seed: 42,
            noiseless: false,
        };
        let trace = dn_newton_run(&data, &cfg)?;
        let excesses: Vec<String> = trace
            .records
            .iter()
            .map(|r| format!("{:.2e}", r.loss - reference.loss))
            .collect();
        println!(
            "{label:9}  excess per iteration: {}  (ledger rho = {:.5})",
            excesses.join(" "),
            trace.ledger.total()
        );
    }
    Ok(())
}
