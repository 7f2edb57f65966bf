//! The eigenvalue modification operator and its sensitivity bounds: clip
//! vs add, the general-loss variant with the Kato factor, the minibatch
//! scaling, and the adaptive floor rule.

use dpopt::datasets::{planted_weight, synthetic_generate};
use dpopt::losses::logistic_hessian;
use dpopt::numkit::{eig_sym, NoiseRole, RandomSource};
use dpopt::spectra::{
    adaptive_lambda0, kato_factor, private_trace, psi_apply, sensitivity_general,
    sensitivity_logistic, sensitivity_minibatch, ModKind, SpectralModifier,
};

fn main() -> dpopt::Result<()> {
    let (n, d) = (1000, 8);
    let data = synthetic_generate(n, d, &planted_weight(d, 1.0, 13), 14)?;
    let w = vec![0.1; d];
    let h = logistic_hessian(&w, &data);
    let eig = eig_sym(&h)?;
    println!("Hessian spectrum: {:?}", eig.values);

    let lambda0 = 0.05;
    for kind in [ModKind::Clip, ModKind::Add] {
        let m = SpectralModifier::new(kind, lambda0)?;
        let modified = psi_apply(&h, &m)?;
        let spec = eig_sym(&modified)?;
        println!(
            "{kind:?}: min eigenvalue {:.4} -> {:.4}; logistic bound {:.6}",
            eig.min_value(),
            spec.min_value(),
            sensitivity_logistic(n, &m)?.value,
        );
    }

    let m = SpectralModifier::add(lambda0)?;
    println!(
        "general-loss add bound (L1 = 1/4): {:.6}",
        sensitivity_general(n, &m, 0.25)?.value
    );
    let mc = SpectralModifier::clip(lambda0)?;
    println!(
        "general-loss clip bound: {:.6} (Kato factor {:.4})",
        sensitivity_general(n, &mc, 0.25)?.value,
        kato_factor(n, lambda0, 0.25),
    );
    println!(
        "minibatch add bound at p_H = 0.1: {:.6}",
        sensitivity_minibatch(n, 0.1, &m)?.value
    );

    let mut stream = RandomSource::new(15).stream(NoiseRole::Trace);
    let noisy_trace = private_trace(&h, n, 0.003, &mut stream)?;
    let floor = adaptive_lambda0(noisy_trace, n, 10, 1.0, 0.3, 0.1, 1.0);
    println!("private trace = {noisy_trace:.5} -> adaptive lambda0 = {floor:.5}");
    Ok(())
}
