//! Cubic-regularized DP Newton on a ridge-logistic objective: doubly
//! exponential convergence once close, with each subproblem solved privately
//! by projected noisy gradient descent.

use dpopt::cubic::{cubic_meta_run, CubicConfig, FeasibleBall};
use dpopt::datasets::{planted_weight, synthetic_generate};
use dpopt::losses::ridge_logistic_oracle;

fn main() -> dpopt::Result<()> {
    let (n, d, mu) = (2000, 10, 0.1);
    let w_star = planted_weight(d, 1.5, 3);
    let data = synthetic_generate(n, d, &w_star, 4)?;
    let radius = 3.0;
    let oracle = ridge_logistic_oracle(&data, mu, 2.0 * radius)?;

    for rho in [0.1, 1.0] {
        let cfg = CubicConfig {
            m: None, // defaults to L2
            t: 6,
            rho,
            ball: FeasibleBall::new(vec![0.0; d], radius)?,
            seed: 11,
            noiseless: false,
            inner_steps_override: None,
        };
        let trace = cubic_meta_run(&oracle, &cfg)?;
        println!("rho = {rho}");
        for r in &trace.records {
            println!(
                "  t = {}  loss = {:.8}  grad = {:.2e}  inner steps = {}",
                r.t,
                r.loss,
                r.grad_norm,
                r.inner_steps.map_or("-".into(), |n| n.to_string()),
            );
        }
    }
    Ok(())
}
