//! Privacy accounting: (eps, delta) <-> zCDP conversions, Gaussian
//! calibration, budget splitting, the subsampled-Gaussian noise multiplier,
//! and the ledger's JSON report.

use dpopt::privacy::{
    approx_dp_to_zcdp, gaussian_sigma, sgm_noise_multiplier, sgm_noise_multiplier_with,
    split_budget, zcdp_to_approx_dp_epsilon, AccountantMode, ApproxDpBudget, PrivacyLedger,
    ZcdpBudget,
};

fn main() -> dpopt::Result<()> {
    println!("eps -> rho (delta = 1e-6):");
    for eps in [0.01, 0.1, 1.0, 10.0] {
        let rho = approx_dp_to_zcdp(&ApproxDpBudget::new(eps, 1e-6)?);
        let reported = zcdp_to_approx_dp_epsilon(rho, 1e-6);
        println!("  eps = {eps:<6} rho = {rho:<12.6} reported eps = {reported:.4}");
    }

    let budget = ZcdpBudget::new(1.0, 0.3, 0.1, 10)?;
    let shares = split_budget(&budget);
    println!(
        "\nper-iteration shares at rho=1, theta=0.3, gamma=0.1, T=10: \
         gradient {:.4}, trace {:.4}, direction {:.4}",
        shares.gradient, shares.trace, shares.direction
    );
    println!(
        "gradient sigma at sensitivity 1/n (n=1000): {:.6}",
        gaussian_sigma(1e-3, shares.gradient)?
    );

    println!("\nsubsampled Gaussian noise multipliers for (1, 1e-6):");
    for (p, steps) in [(1.0, 1), (0.02, 100), (0.02, 400)] {
        let sigma = sgm_noise_multiplier(&ApproxDpBudget::new(1.0, 1e-6)?, p, steps)?;
        let plain = sgm_noise_multiplier_with(
            &ApproxDpBudget::new(1.0, 1e-6)?,
            p,
            steps,
            AccountantMode::ZcdpNoAmplification,
        )?;
        println!("  p = {p:<5} steps = {steps:<4} sigma = {sigma:<9.4} (no-amplification fallback: {plain:.4})");
    }

    let mut ledger = PrivacyLedger::new();
    for _ in 0..10 {
        ledger.record("gradient", shares.gradient);
        ledger.record("trace", shares.trace);
        ledger.record("direction", shares.direction);
    }
    println!(
        "\nledger JSON:\n{}",
        serde_json::to_string_pretty(&ledger.to_json(1e-6)).unwrap()
    );
    Ok(())
}
