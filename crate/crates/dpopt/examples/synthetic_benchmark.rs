//! A small end-to-end privacy-utility sweep on synthetic data, with the
//! same outputs as `bench run`: results.csv, timings.csv, meta.json, and
//! the two reports.

use dpopt::bench::{
    load_dataset, privacy_utility_report, run_sweep, runtime_ratio_report, write_outputs,
    AlgorithmSpec, DatasetSpec, ExperimentSpec, NewtonParams,
};
use dpopt::privacy::AccountantMode;

fn main() -> dpopt::Result<()> {
    let spec = ExperimentSpec {
        dataset: DatasetSpec::Synthetic {
            n: 2000,
            d: 20,
            w_star_norm: 2.0,
            seed: 1,
        },
        algorithms: vec![
            AlgorithmSpec::HessClip(NewtonParams {
                lambda0: None,
                beta: 1.0,
            }),
            AlgorithmSpec::DpGd { stepsize: None },
        ],
        epsilons: vec![0.1, 1.0],
        delta: None, // n^-2
        t_grid_second_order: vec![2, 3, 5, 8],
        t_grid_first_order: vec![50, 100, 200, 400],
        seeds: 5,
        master_seed: 7,
        theta: 0.3,
        gamma: 0.1,
        accountant: AccountantMode::RdpSampled,
        write_traces: false,
    };
    let data = load_dataset(&spec.dataset)?;
    let output = run_sweep(&spec, &data)?;

    let out_dir = std::env::temp_dir().join("dpopt_synthetic_benchmark");
    write_outputs(&out_dir, &spec, &output)?;
    println!("outputs in {}\n", out_dir.display());

    println!("privacy-utility:\n{}", privacy_utility_report(&output.rows));
    let (ratio, notes) = runtime_ratio_report(&output.rows, "dp-gd", "hess-clip");
    println!("runtime ratio:\n{ratio}");
    for n in notes {
        println!("note: {n}");
    }
    Ok(())
}
