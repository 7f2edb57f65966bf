//! Benchmark CLI: run privacy-utility sweeps from a JSON spec, compute
//! reference optima for datasets, and render reports from sweep outputs.

use clap::{Parser, Subcommand, ValueEnum};
use dpopt::bench::{
    load_dataset, read_rows, reference_optimum, run_sweep, runtime_ratio_report,
    privacy_utility_report, write_outputs, DatasetSpec, ExperimentSpec, LabelMapSpec,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bench", about = "DP convex optimization benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a JSON experiment spec.
    Run {
        /// Path to the experiment spec (JSON mirroring ExperimentSpec).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for results.csv, timings.csv, traces/, meta.json.
        #[arg(long)]
        out: PathBuf,
        /// Skip per-cell trace files.
        #[arg(long)]
        no_traces: bool,
    },
    /// Compute and cache the reference optimum of a LIBSVM dataset.
    Reference {
        /// Path to a LIBSVM-format file.
        #[arg(long)]
        data: PathBuf,
        /// Gradient-norm tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Label mapping for the raw labels.
        #[arg(long, value_enum, default_value_t = LabelMapArg::PlusMinusOne)]
        label_map: LabelMapArg,
        /// Where to write the reference JSON (default: alongside the data).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a report from a sweep output directory.
    Report {
        /// Directory produced by `bench run`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: ReportKind,
        /// Baseline algorithm for runtime ratios.
        #[arg(long, default_value = "dp-gd")]
        baseline: String,
        /// Target algorithm for runtime ratios.
        #[arg(long, default_value = "hess-clip")]
        target: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    PrivacyUtility,
    RuntimeRatio,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelMapArg {
    ZeroOne,
    PlusMinusOne,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { spec, out, no_traces } => {
            let text = std::fs::read_to_string(&spec)?;
            let mut spec: ExperimentSpec = serde_json::from_str(&text)?;
            if no_traces {
                spec.write_traces = false;
            }
            let data = load_dataset(&spec.dataset)?;
            eprintln!(
                "dataset: n = {}, d = {}; delta = {:.3e}",
                data.n(),
                data.dim(),
                spec.delta_for(data.n())
            );
            let output = run_sweep(&spec, &data)?;
            if !output.failures.is_empty() {
                eprintln!("{} cell(s) failed:", output.failures.len());
                for f in &output.failures {
                    eprintln!("  {f}");
                }
            }
            write_outputs(&out, &spec, &output)?;
            eprintln!("wrote {} rows to {}", output.rows.len(), out.display());
            Ok(())
        }
        Command::Reference {
            data,
            tol,
            label_map,
            out,
        } => {
            let map = match label_map {
                LabelMapArg::ZeroOne => LabelMapSpec::ZeroOne,
                LabelMapArg::PlusMinusOne => LabelMapSpec::PlusMinusOne,
            };
            let dataset = load_dataset(&DatasetSpec::Libsvm {
                path: data.display().to_string(),
                label_map: map,
            })?;
            let reference = reference_optimum(&dataset, tol)?;
            let out_path = out.unwrap_or_else(|| data.with_extension("reference.json"));
            std::fs::write(&out_path, serde_json::to_string_pretty(&reference)?)?;
            eprintln!(
                "loss* = {:.12e} (grad norm {:.3e}, {} iterations) -> {}",
                reference.loss,
                reference.grad_norm,
                reference.iterations,
                out_path.display()
            );
            Ok(())
        }
        Command::Report {
            input,
            kind,
            baseline,
            target,
        } => {
            let rows = read_rows(&input)?;
            match kind {
                ReportKind::PrivacyUtility => {
                    let csv = privacy_utility_report(&rows);
                    std::fs::write(input.join("privacy_utility.csv"), &csv)?;
                    print!("{csv}");
                }
                ReportKind::RuntimeRatio => {
                    let (csv, notes) = runtime_ratio_report(&rows, &baseline, &target);
                    std::fs::write(input.join("runtime_ratio.csv"), &csv)?;
                    print!("{csv}");
                    for note in notes {
                        eprintln!("note: {note}");
                    }
                }
            }
            Ok(())
        }
    }
}
