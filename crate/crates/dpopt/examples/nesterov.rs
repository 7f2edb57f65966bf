//! DP accelerated Nesterov on the (merely convex) logistic loss over a ball.

use dpopt::cubic::{nesterov_dp_run, FeasibleBall, NesterovOptions};
use dpopt::datasets::{planted_weight, synthetic_generate};
use dpopt::losses::{LogisticOracle, SoiKind};

fn main() -> dpopt::Result<()> {
    let (n, d) = (4000, 20);
    let w_star = planted_weight(d, 1.5, 5);
    let data = synthetic_generate(n, d, &w_star, 6)?;
    let oracle = LogisticOracle::new(&data, SoiKind::Hessian);
    let ball = FeasibleBall::new(vec![0.0; d], 3.0)?;

    for rho in [0.01, 0.1, 1.0] {
        let trace = nesterov_dp_run(&oracle, &ball, rho, 21, NesterovOptions::default())?;
        println!(
            "rho = {rho:<5}  T = {:<4}  final loss = {:.6}  grad = {:.3e}",
            trace.records.len() - 1,
            trace.final_loss(),
            trace.records.last().unwrap().grad_norm,
        );
    }
    Ok(())
}
