//! First-order baselines side by side: DP-GD, DP-SGD, the non-private
//! DP-GD-Oracle line search, and the damped Newton comparator.

use dpopt::baselines::{
    damped_newton_run, dpgd_oracle_run, dpgd_run, dpsgd_run, BaselineBudget, BaselineConfig,
};
use dpopt::bench::reference_optimum;
use dpopt::datasets::{planted_weight, synthetic_generate};
use dpopt::losses::{LogisticOracle, SoiKind};
use dpopt::privacy::{approx_dp_to_zcdp, ApproxDpBudget};

fn main() -> dpopt::Result<()> {
    let (n, d) = (5000, 20);
    let data = synthetic_generate(n, d, &planted_weight(d, 2.0, 1), 2)?;
    let reference = reference_optimum(&data, 1e-10)?;
    let oracle = LogisticOracle::new(&data, SoiKind::Hessian);

    let delta = 1.0 / (n as f64 * n as f64);
    let target = ApproxDpBudget::new(1.0, delta)?;
    let rho = approx_dp_to_zcdp(&target);
    let w0 = vec![0.0; d];

    let gd = dpgd_run(
        &oracle,
        &BaselineConfig::new(200, BaselineBudget::Zcdp(rho), w0.clone(), 3),
    )?;
    let mut sgd_cfg = BaselineConfig::new(400, BaselineBudget::ApproxDp(target), w0.clone(), 4);
    sgd_cfg.batch_rate = 0.02;
    let sgd = dpsgd_run(&data, &sgd_cfg)?;
    let oracle_ls = dpgd_oracle_run(
        &oracle,
        &BaselineConfig::new(50, BaselineBudget::Zcdp(rho), w0.clone(), 5),
    )?;
    let damped = damped_newton_run(
        &data,
        &BaselineConfig::new(8, BaselineBudget::Zcdp(rho), w0, 6),
    )?;

    println!("{:<14} {:>10} {:>12} {:>9}", "algorithm", "excess", "wall (ms)", "private");
    for trace in [&gd, &sgd, &oracle_ls, &damped] {
        println!(
            "{:<14} {:>10.3e} {:>12.2} {:>9}",
            trace.algorithm,
            trace.final_loss() - reference.loss,
            trace.total_wall_ms(),
            trace.private,
        );
    }
    Ok(())
}
