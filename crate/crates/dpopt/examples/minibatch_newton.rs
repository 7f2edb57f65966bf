//! Poisson-minibatch double-noise Newton under an (eps, delta) target,
//! compared against DP-SGD at its default 2% batch rate.

use dpopt::baselines::{dpsgd_run, BaselineBudget, BaselineConfig};
use dpopt::bench::reference_optimum;
use dpopt::datasets::{planted_weight, synthetic_generate};
use dpopt::losses::SoiKind;
use dpopt::newton::{dn_newton_minibatch_run, Lambda0Policy, NewtonConfig};
use dpopt::privacy::{ApproxDpBudget, ZcdpBudget};
use dpopt::spectra::ModKind;

fn main() -> dpopt::Result<()> {
    let (n, d) = (8000, 25);
    let data = synthetic_generate(n, d, &planted_weight(d, 2.0, 9), 10)?;
    let reference = reference_optimum(&data, 1e-10)?;
    let delta = 1.0 / (n as f64 * n as f64);
    let target = ApproxDpBudget::new(1.0, delta)?;

    // adding operator works best in the minibatch regime
    let cfg = NewtonConfig {
        soi: SoiKind::Hessian,
        modifier: ModKind::Add,
        policy: Lambda0Policy::Fixed(0.02),
        budget: ZcdpBudget::new(1.0, 0.3, 0.0, 6)?, // rho field unused for SGM accounting
        w0: vec![0.0; d],
        seed: 11,
        noiseless: false,
    };
    let newton = dn_newton_minibatch_run(&data, &cfg, 0.2, 0.2, &target)?;

    let mut sgd_cfg = BaselineConfig::new(400, BaselineBudget::ApproxDp(target), vec![0.0; d], 12);
    sgd_cfg.batch_rate = 0.02;
    let sgd = dpsgd_run(&data, &sgd_cfg)?;

    println!("target: (eps, delta) = (1, n^-2)");
    for trace in [&newton, &sgd] {
        println!(
            "{:<26} excess = {:.3e}   wall = {:.1} ms",
            trace.algorithm,
            trace.final_loss() - reference.loss,
            trace.total_wall_ms(),
        );
    }
    Ok(())
}
