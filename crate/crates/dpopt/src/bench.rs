//! Experiment harness: reference-optimum computation, privacy-utility
//! sweeps over ε with non-private T-grid tuning, multi-seed aggregation,
//! and deterministic CSV/JSON emission.
//!
//! Wall times are inherently non-reproducible, so they go to a separate
//! `timings.csv`; `results.csv` contains only deterministic columns and is
//! byte-identical across re-runs of the same spec and seeds.

use crate::baselines::{dpgd_oracle_run, dpgd_run, dpsgd_run, damped_newton_run, BaselineBudget, BaselineConfig};
use crate::error::{Error, Result};
use crate::losses::{
    logistic_gradient, logistic_qu_soi, logistic_value, Dataset, LogisticOracle, SoiKind,
};
use crate::newton::{dn_newton_minibatch_run, dn_newton_run, Lambda0Policy, NewtonConfig};
use crate::numkit::{axpy, derive_seed, eig_sym, norm};
use crate::privacy::{approx_dp_to_zcdp, AccountantMode, ApproxDpBudget, ZcdpBudget};
use crate::spectra::ModKind;
use crate::trace::RunTrace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const DEFAULT_THETA: f64 = 0.3;
pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_SEEDS: u64 = 15;

pub fn default_epsilons() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0]
}

/// Second-order methods need far fewer iterations than first-order ones.
pub fn default_second_order_grid() -> Vec<usize> {
    vec![1, 2, 3, 5, 8, 12, 20]
}

pub fn default_first_order_grid() -> Vec<usize> {
    vec![25, 50, 100, 200, 400, 800, 1600]
}

fn default_seeds() -> u64 {
    DEFAULT_SEEDS
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_true() -> bool {
    true
}

// ---------------------------------------------------------------------------
// Spec types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// δ; omitted means the n⁻² rule.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_second_order_grid")]
    pub t_grid_second_order: Vec<usize>,
    #[serde(default = "default_first_order_grid")]
    pub t_grid_first_order: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub accountant: AccountantMode,
    #[serde(default = "default_true")]
    pub write_traces: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() || self.epsilons.is_empty() {
            return Err(Error::InvalidInput("algorithm and ε grids must be non-empty".into()));
        }
        if self.t_grid_second_order.is_empty() || self.t_grid_first_order.is_empty() {
            return Err(Error::InvalidInput("T grids must be non-empty".into()));
        }
        if self.seeds < 1 {
            return Err(Error::InvalidInput("need at least one seed".into()));
        }
        Ok(())
    }

    pub fn delta_for(&self, n: usize) -> f64 {
        self.delta.unwrap_or_else(|| {
            let nf = n as f64;
            1.0 / (nf * nf)
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Synthetic {
        n: usize,
        d: usize,
        w_star_norm: f64,
        seed: u64,
    },
    Libsvm {
        path: String,
        label_map: LabelMapSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LabelMapSpec {
    ZeroOne,
    PlusMinusOne,
    PositiveVsRest { positive: Vec<f64> },
    Explicit { positive: Vec<f64>, negative: Vec<f64> },
}

impl LabelMapSpec {
    fn to_label_map(&self) -> crate::datasets::LabelMap {
        match self {
            LabelMapSpec::ZeroOne => crate::datasets::LabelMap::zero_one(),
            LabelMapSpec::PlusMinusOne => crate::datasets::LabelMap::plus_minus_one(),
            LabelMapSpec::PositiveVsRest { positive } => {
                crate::datasets::LabelMap::positive_vs_rest(positive.clone())
            }
            LabelMapSpec::Explicit { positive, negative } => crate::datasets::LabelMap::Explicit {
                positive: positive.clone(),
                negative: negative.clone(),
            },
        }
    }
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    match spec {
        DatasetSpec::Synthetic {
            n,
            d,
            w_star_norm,
            seed,
        } => {
            let w_star = crate::datasets::planted_weight(*d, *w_star_norm, *seed);
            crate::datasets::synthetic_generate(*n, *d, &w_star, seed.wrapping_add(1))
        }
        DatasetSpec::Libsvm { path, label_map } => {
            let text = std::fs::read_to_string(path)?;
            let records = crate::datasets::parse_libsvm(&text)?;
            crate::datasets::normalize_dataset(&records, &label_map.to_label_map())
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    HessClip(NewtonParams),
    HessAdd(NewtonParams),
    QuClip(NewtonParams),
    QuAdd(NewtonParams),
    NewtonMinibatch {
        soi: SoiKind,
        modifier: ModKind,
        lambda0: f64,
        p_g: f64,
        p_h: f64,
    },
    DpGd {
        #[serde(default)]
        stepsize: Option<f64>,
    },
    DpSgd {
        #[serde(default = "default_batch_rate")]
        batch_rate: f64,
        #[serde(default)]
        stepsize: Option<f64>,
    },
    DpGdOracle,
    DampedNewton,
}

fn default_batch_rate() -> f64 {
    0.02
}

/// λ₀ policy for a double-noise Newton entry: a fixed floor when `lambda0`
/// is given, otherwise the adaptive rule with coefficient β.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonParams {
    #[serde(default)]
    pub lambda0: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

impl AlgorithmSpec {
    pub fn name(&self) -> String {
        match self {
            AlgorithmSpec::HessClip(_) => "hess-clip".into(),
            AlgorithmSpec::HessAdd(_) => "hess-add".into(),
            AlgorithmSpec::QuClip(_) => "qu-clip".into(),
            AlgorithmSpec::QuAdd(_) => "qu-add".into(),
            AlgorithmSpec::NewtonMinibatch { soi, modifier, .. } => {
                let s = match soi {
                    SoiKind::Hessian => "hess",
                    SoiKind::Qu => "qu",
                };
                let m = match modifier {
                    ModKind::Clip => "clip",
                    ModKind::Add => "add",
                };
                format!("newton-minibatch-{s}-{m}")
            }
            AlgorithmSpec::DpGd { .. } => "dp-gd".into(),
            AlgorithmSpec::DpSgd { .. } => "dp-sgd".into(),
            AlgorithmSpec::DpGdOracle => "dp-gd-oracle".into(),
            AlgorithmSpec::DampedNewton => "damped-newton".into(),
        }
    }

    pub fn is_second_order(&self) -> bool {
        matches!(
            self,
            AlgorithmSpec::HessClip(_)
                | AlgorithmSpec::HessAdd(_)
                | AlgorithmSpec::QuClip(_)
                | AlgorithmSpec::QuAdd(_)
                | AlgorithmSpec::NewtonMinibatch { .. }
                | AlgorithmSpec::DampedNewton
        )
    }
}

// ---------------------------------------------------------------------------
// Reference optimum
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reference {
    pub w: Vec<f64>,
    pub loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

const REFERENCE_MAX_ITERS: usize = 10_000;

/// min_w ℓ(w, S) by non-private damped Newton on the QU majorant with a
/// 1e-12 ridge on the SOI for invertibility.
pub fn reference_optimum(data: &Dataset, tol: f64) -> Result<Reference> {
    reference_optimum_from(data, &vec![0.0; data.dim()], tol)
}

pub fn reference_optimum_from(data: &Dataset, w0: &[f64], tol: f64) -> Result<Reference> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let mut w = w0.to_vec();
    for it in 0..REFERENCE_MAX_ITERS {
        let g = logistic_gradient(&w, data);
        let gn = norm(&g);
        if gn <= tol {
            return Ok(Reference {
                loss: logistic_value(&w, data),
                grad_norm: gn,
                iterations: it,
                w,
            });
        }
        let mut h = logistic_qu_soi(&w, data);
        h.add_diag(1e-12);
        let eig = eig_sym(&h)?;
        let coeffs = eig.to_eigenbasis(&g);
        let scaled: Vec<f64> = coeffs.iter().zip(&eig.values).map(|(c, l)| c / l).collect();
        let step = eig.from_eigenbasis(&scaled);
        let eta = crate::baselines::damped_stepsize(norm(&step));
        axpy(&mut w, -eta, &step);
    }
    Err(Error::NonConvergence {
        iterations: REFERENCE_MAX_ITERS,
        context: "reference optimum".into(),
    })
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

/// One sweep cell result. `excess_loss`, `rho_spent`, and `private` are
/// deterministic given the spec; `wall_ms` is not and is emitted separately.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub epsilon: f64,
    pub t: usize,
    pub seed: u64,
    pub excess_loss: f64,
    pub wall_ms: f64,
    pub rho_spent: f64,
    pub private: bool,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<(String, String)>,
    pub failures: Vec<String>,
    pub reference: Reference,
}

fn run_cell(
    algo: &AlgorithmSpec,
    data: &Dataset,
    spec: &ExperimentSpec,
    epsilon: f64,
    delta: f64,
    t: usize,
    seed_index: u64,
) -> Result<RunTrace> {
    let name = algo.name();
    let seed = derive_seed(
        spec.master_seed,
        &[
            derive_seed(0, &[name.len() as u64, fnv_str(&name)]),
            epsilon.to_bits(),
            t as u64,
            seed_index,
        ],
    );
    let d = data.dim();
    let w0 = vec![0.0; d];
    let budget = ApproxDpBudget::new(epsilon, delta)?;
    let rho = approx_dp_to_zcdp(&budget);

    match algo {
        AlgorithmSpec::HessClip(p)
        | AlgorithmSpec::HessAdd(p)
        | AlgorithmSpec::QuClip(p)
        | AlgorithmSpec::QuAdd(p) => {
            let (soi, modifier) = match algo {
                AlgorithmSpec::HessClip(_) => (SoiKind::Hessian, ModKind::Clip),
                AlgorithmSpec::HessAdd(_) => (SoiKind::Hessian, ModKind::Add),
                AlgorithmSpec::QuClip(_) => (SoiKind::Qu, ModKind::Clip),
                _ => (SoiKind::Qu, ModKind::Add),
            };
            let (policy, gamma) = match p.lambda0 {
                Some(l) => (Lambda0Policy::Fixed(l), 0.0),
                None => (Lambda0Policy::Adaptive { beta: p.beta }, spec.gamma),
            };
            let cfg = NewtonConfig {
                soi,
                modifier,
                policy,
                budget: ZcdpBudget::new(rho, spec.theta, gamma, t)?,
                w0,
                seed,
                noiseless: false,
            };
            dn_newton_run(data, &cfg)
        }
        AlgorithmSpec::NewtonMinibatch {
            soi,
            modifier,
            lambda0,
            p_g,
            p_h,
        } => {
            let cfg = NewtonConfig {
                soi: *soi,
                modifier: *modifier,
                policy: Lambda0Policy::Fixed(*lambda0),
                budget: ZcdpBudget::new(rho, spec.theta, 0.0, t)?,
                w0,
                seed,
                noiseless: false,
            };
            dn_newton_minibatch_run(data, &cfg, *p_g, *p_h, &budget)
        }
        AlgorithmSpec::DpGd { stepsize } => {
            let mut cfg = BaselineConfig::new(t, BaselineBudget::Zcdp(rho), w0, seed);
            cfg.stepsize = *stepsize;
            let oracle = LogisticOracle::new(data, SoiKind::Hessian);
            dpgd_run(&oracle, &cfg)
        }
        AlgorithmSpec::DpSgd {
            batch_rate,
            stepsize,
        } => {
            let mut cfg = BaselineConfig::new(t, BaselineBudget::ApproxDp(budget), w0, seed);
            cfg.batch_rate = *batch_rate;
            cfg.stepsize = *stepsize;
            dpsgd_run(data, &cfg)
        }
        AlgorithmSpec::DpGdOracle => {
            let cfg = BaselineConfig::new(t, BaselineBudget::Zcdp(rho), w0, seed);
            let oracle = LogisticOracle::new(data, SoiKind::Hessian);
            dpgd_oracle_run(&oracle, &cfg)
        }
        AlgorithmSpec::DampedNewton => {
            let cfg = BaselineConfig::new(t, BaselineBudget::Zcdp(rho), w0, seed);
            damped_newton_run(data, &cfg)
        }
    }
}

fn fnv_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Runs every (algorithm, ε, T, seed) cell of the spec in a worker pool.
/// Each cell owns its ledger and noise streams; failures are recorded and
/// the sweep continues. Rows are merged in (algorithm, ε, T, seed) order so
/// the output is deterministic.
pub fn run_sweep(spec: &ExperimentSpec, data: &Dataset) -> Result<SweepOutput> {
    spec.validate()?;
    let reference = reference_optimum(data, 1e-10)?;
    run_sweep_with_reference(spec, data, reference)
}

pub fn run_sweep_with_reference(
    spec: &ExperimentSpec,
    data: &Dataset,
    reference: Reference,
) -> Result<SweepOutput> {
    let delta = spec.delta_for(data.n());

    let mut cells = Vec::new();
    for algo in &spec.algorithms {
        let grid = if algo.is_second_order() {
            &spec.t_grid_second_order
        } else {
            &spec.t_grid_first_order
        };
        for &epsilon in &spec.epsilons {
            for &t in grid {
                for seed_index in 0..spec.seeds {
                    cells.push((algo.clone(), epsilon, t, seed_index));
                }
            }
        }
    }

    let outcomes: Vec<std::result::Result<(ResultRow, Option<(String, String)>), String>> = cells
        .par_iter()
        .map(|(algo, epsilon, t, seed_index)| {
            match run_cell(algo, data, spec, *epsilon, delta, *t, *seed_index) {
                Ok(trace) => {
                    let row = ResultRow {
                        algorithm: algo.name(),
                        epsilon: *epsilon,
                        t: *t,
                        seed: *seed_index,
                        excess_loss: trace.final_loss() - reference.loss,
                        wall_ms: trace.total_wall_ms(),
                        rho_spent: trace.ledger.total(),
                        private: trace.private,
                    };
                    let trace_entry = if spec.write_traces {
                        let file = format!(
                            "{}_eps{}_T{}_seed{}.csv",
                            algo.name(),
                            epsilon,
                            t,
                            seed_index
                        );
                        Some((file, trace.to_csv(Some(reference.loss))))
                    } else {
                        None
                    };
                    Ok((row, trace_entry))
                }
                Err(e) => Err(format!(
                    "{} eps={} T={} seed={}: {}",
                    algo.name(),
                    epsilon,
                    t,
                    seed_index,
                    e
                )),
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((row, trace)) => {
                rows.push(row);
                if let Some(t) = trace {
                    traces.push(t);
                }
            }
            Err(msg) => failures.push(msg),
        }
    }
    rows.sort_by(|a, b| {
        (&a.algorithm, a.epsilon.to_bits(), a.t, a.seed).cmp(&(
            &b.algorithm,
            b.epsilon.to_bits(),
            b.t,
            b.seed,
        ))
    });
    traces.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(SweepOutput {
        rows,
        traces,
        failures,
        reference,
    })
}

// ---------------------------------------------------------------------------
// Aggregation and reports
// ---------------------------------------------------------------------------

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Per-(algorithm, ε) summary: the grid T minimizing the median-over-seeds
/// excess loss, and the medians at that T.
#[derive(Debug, Clone, Serialize)]
pub struct AlgoEpsSummary {
    pub algorithm: String,
    pub epsilon: f64,
    pub best_t: usize,
    pub median_excess: f64,
    pub median_wall_ms: f64,
    pub private: bool,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<AlgoEpsSummary> {
    let mut groups: BTreeMap<(String, u64, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.algorithm.clone(), r.epsilon.to_bits(), r.t))
            .or_default()
            .push(r);
    }
    let mut per_algo_eps: BTreeMap<(String, u64), (usize, f64, f64, bool)> = BTreeMap::new();
    for ((algo, eps_bits, t), group) in groups {
        let mut excesses: Vec<f64> = group.iter().map(|r| r.excess_loss).collect();
        let med = median(&mut excesses);
        let mut walls: Vec<f64> = group.iter().map(|r| r.wall_ms).collect();
        let wall_med = median(&mut walls);
        let private = group.iter().all(|r| r.private);
        per_algo_eps
            .entry((algo, eps_bits))
            .and_modify(|best| {
                if med < best.1 {
                    *best = (t, med, wall_med, private);
                }
            })
            .or_insert((t, med, wall_med, private));
    }
    per_algo_eps
        .into_iter()
        .map(
            |((algorithm, eps_bits), (best_t, median_excess, median_wall_ms, private))| {
                AlgoEpsSummary {
                    algorithm,
                    epsilon: f64::from_bits(eps_bits),
                    best_t,
                    median_excess,
                    median_wall_ms,
                    private,
                }
            },
        )
        .collect()
}

/// CSV: per (algorithm, ε), the best grid T and its median excess loss.
pub fn privacy_utility_report(rows: &[ResultRow]) -> String {
    let mut out = String::from("algorithm,epsilon,best_t,median_excess,private\n");
    for s in summarize(rows) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.algorithm, s.epsilon, s.best_t, s.median_excess, s.private
        ));
    }
    out
}

/// Wall-time ratio baseline/target at each algorithm's best-T configuration,
/// per ε. Missing pairs are skipped with a note.
pub fn runtime_ratio_report(
    rows: &[ResultRow],
    baseline: &str,
    target: &str,
) -> (String, Vec<String>) {
    let summaries = summarize(rows);
    let find = |algo: &str, eps_bits: u64| {
        summaries
            .iter()
            .find(|s| s.algorithm == algo && s.epsilon.to_bits() == eps_bits)
    };
    let mut eps_list: Vec<u64> = summaries.iter().map(|s| s.epsilon.to_bits()).collect();
    eps_list.sort_by(|a, b| f64::from_bits(*a).partial_cmp(&f64::from_bits(*b)).unwrap());
    eps_list.dedup();

    let mut out = String::from("epsilon,baseline,baseline_t,target,target_t,wall_ratio\n");
    let mut notes = Vec::new();
    for eps_bits in eps_list {
        let eps = f64::from_bits(eps_bits);
        match (find(baseline, eps_bits), find(target, eps_bits)) {
            (Some(b), Some(t)) => {
                let ratio = b.median_wall_ms / t.median_wall_ms;
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    eps, baseline, b.best_t, target, t.best_t, ratio
                ));
            }
            _ => notes.push(format!(
                "epsilon {eps}: missing {baseline} or {target}; row omitted"
            )),
        }
    }
    (out, notes)
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

/// Deterministic columns only; see the module docs.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("algorithm,epsilon,t,seed,excess_loss,rho_spent,private\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.algorithm, r.epsilon, r.t, r.seed, r.excess_loss, r.rho_spent, r.private
        ));
    }
    out
}

pub fn timings_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("algorithm,epsilon,t,seed,wall_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.algorithm, r.epsilon, r.t, r.seed, r.wall_ms
        ));
    }
    out
}

/// Writes results.csv, timings.csv, traces/<cell>.csv, and meta.json.
pub fn write_outputs(out_dir: &Path, spec: &ExperimentSpec, output: &SweepOutput) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("results.csv"), results_csv(&output.rows))?;
    std::fs::write(out_dir.join("timings.csv"), timings_csv(&output.rows))?;
    if !output.traces.is_empty() {
        let trace_dir = out_dir.join("traces");
        std::fs::create_dir_all(&trace_dir)?;
        for (file, csv) in &output.traces {
            std::fs::write(trace_dir.join(file), csv)?;
        }
    }
    let meta = serde_json::json!({
        "tool": format!("dpopt {}", env!("CARGO_PKG_VERSION")),
        "spec": spec,
        "accountant": spec.accountant,
        "delta_rule": if spec.delta.is_none() { "n^-2" } else { "fixed" },
        "reference_loss": output.reference.loss,
        "reference_grad_norm": output.reference.grad_norm,
        "failures": output.failures,
        "non_private_algorithms": ["dp-gd-oracle", "damped-newton"],
    });
    std::fs::write(
        out_dir.join("meta.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(())
}

/// Reads rows back from results.csv + timings.csv (for `bench report`).
pub fn read_rows(out_dir: &Path) -> Result<Vec<ResultRow>> {
    let results = std::fs::read_to_string(out_dir.join("results.csv"))?;
    let timings = std::fs::read_to_string(out_dir.join("timings.csv"))?;
    let mut walls: BTreeMap<(String, u64, usize, u64), f64> = BTreeMap::new();
    for (i, line) in timings.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Parse {
                line: i + 1,
                message: "timings.csv: expected 5 columns".into(),
            });
        }
        let eps: f64 = parts[1].parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: "bad epsilon".into(),
        })?;
        walls.insert(
            (
                parts[0].to_string(),
                eps.to_bits(),
                parts[2].parse().unwrap_or(0),
                parts[3].parse().unwrap_or(0),
            ),
            parts[4].parse().unwrap_or(f64::NAN),
        );
    }
    let mut rows = Vec::new();
    for (i, line) in results.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::Parse {
                line: i + 1,
                message: "results.csv: expected 7 columns".into(),
            });
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad {what}"),
            })
        };
        let epsilon = parse_f(parts[1], "epsilon")?;
        let t: usize = parts[2].parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: "bad t".into(),
        })?;
        let seed: u64 = parts[3].parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: "bad seed".into(),
        })?;
        let wall_ms = walls
            .get(&(parts[0].to_string(), epsilon.to_bits(), t, seed))
            .copied()
            .unwrap_or(f64::NAN);
        rows.push(ResultRow {
            algorithm: parts[0].to_string(),
            epsilon,
            t,
            seed,
            excess_loss: parse_f(parts[4], "excess_loss")?,
            wall_ms,
            rho_spent: parse_f(parts[5], "rho_spent")?,
            private: parts[6] == "true",
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(algorithms: Vec<AlgorithmSpec>) -> ExperimentSpec {
        ExperimentSpec {
            dataset: DatasetSpec::Synthetic {
                n: 400,
                d: 6,
                w_star_norm: 1.5,
                seed: 5,
            },
            algorithms,
            epsilons: vec![1.0],
            delta: None,
            t_grid_second_order: vec![2, 3],
            t_grid_first_order: vec![10, 20],
            seeds: 3,
            master_seed: 9,
            theta: DEFAULT_THETA,
            gamma: DEFAULT_GAMMA,
            accountant: AccountantMode::RdpSampled,
            write_traces: false,
        }
    }

    #[test]
    fn reference_optimum_properties() {
        let data = load_dataset(&DatasetSpec::Synthetic {
            n: 2000,
            d: 20,
            w_star_norm: 1.5,
            seed: 3,
        })
        .unwrap();
        let r = reference_optimum(&data, 1e-10).unwrap();
        assert!(r.grad_norm <= 1e-10);
        // below the loss at zero
        assert!(r.loss <= 2.0f64.ln());
        // restarting from the optimum returns immediately
        let again = reference_optimum_from(&data, &r.w, 1e-10).unwrap();
        assert_eq!(again.iterations, 0);
        assert_eq!(again.loss, r.loss);
    }

    #[test]
    fn one_cell_sweep_emits_seed_rows() {
        let spec = ExperimentSpec {
            t_grid_second_order: vec![3],
            ..tiny_spec(vec![AlgorithmSpec::HessClip(NewtonParams {
                lambda0: None,
                beta: 1.0,
            })])
        };
        let data = load_dataset(&spec.dataset).unwrap();
        let out = run_sweep(&spec, &data).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert_eq!(out.rows.len(), 3);
        for r in &out.rows {
            assert_eq!(r.epsilon, 1.0);
            assert_eq!(r.t, 3);
            assert!(r.excess_loss >= -1e-9);
            // ledger matches the converted budget
            let rho = approx_dp_to_zcdp(&ApproxDpBudget::new(1.0, spec.delta_for(400)).unwrap());
            assert!((r.rho_spent - rho).abs() < 1e-9);
        }
    }

    #[test]
    fn best_t_selection_is_argmin_of_median() {
        let rows = vec![
            ResultRow {
                algorithm: "a".into(),
                epsilon: 1.0,
                t: 1,
                seed: 0,
                excess_loss: 0.5,
                wall_ms: 1.0,
                rho_spent: 0.1,
                private: true,
            },
            ResultRow {
                algorithm: "a".into(),
                epsilon: 1.0,
                t: 1,
                seed: 1,
                excess_loss: 0.7,
                wall_ms: 1.0,
                rho_spent: 0.1,
                private: true,
            },
            ResultRow {
                algorithm: "a".into(),
                epsilon: 1.0,
                t: 2,
                seed: 0,
                excess_loss: 0.4,
                wall_ms: 2.0,
                rho_spent: 0.1,
                private: true,
            },
            ResultRow {
                algorithm: "a".into(),
                epsilon: 1.0,
                t: 2,
                seed: 1,
                excess_loss: 0.3,
                wall_ms: 2.0,
                rho_spent: 0.1,
                private: true,
            },
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].best_t, 2);
        assert!((s[0].median_excess - 0.35).abs() < 1e-12);
    }

    #[test]
    fn runtime_ratio_self_is_one() {
        let rows = vec![
            ResultRow {
                algorithm: "a".into(),
                epsilon: 1.0,
                t: 1,
                seed: 0,
                excess_loss: 0.5,
                wall_ms: 3.0,
                rho_spent: 0.1,
                private: true,
            },
        ];
        let (csv, notes) = runtime_ratio_report(&rows, "a", "a");
        assert!(notes.is_empty());
        let line = csv.lines().nth(1).unwrap();
        assert!(line.ends_with(",1"));
    }

    #[test]
    fn runtime_ratio_missing_pair_noted() {
        let rows = vec![ResultRow {
            algorithm: "a".into(),
            epsilon: 1.0,
            t: 1,
            seed: 0,
            excess_loss: 0.5,
            wall_ms: 3.0,
            rho_spent: 0.1,
            private: true,
        }];
        let (csv, notes) = runtime_ratio_report(&rows, "a", "b");
        assert_eq!(csv.lines().count(), 1); // header only
        assert_eq!(notes.len(), 1);
    }

    #[test]
    fn default_epsilon_grid_matches_reporting_columns() {
        assert_eq!(default_epsilons(), vec![0.01, 0.1, 1.0, 10.0]);
    }

    #[test]
    fn delta_rule_defaults_to_inverse_n_squared() {
        let spec = tiny_spec(vec![AlgorithmSpec::DpGd { stepsize: None }]);
        assert!((spec.delta_for(400) - 1.0 / 160_000.0).abs() < 1e-18);
        let fixed = ExperimentSpec {
            delta: Some(1e-5),
            ..spec
        };
        assert_eq!(fixed.delta_for(400), 1e-5);
    }

    #[test]
    fn sweep_results_reproducible_and_files_round_trip() {
        let spec = tiny_spec(vec![
            AlgorithmSpec::DpGd { stepsize: None },
            AlgorithmSpec::HessClip(NewtonParams {
                lambda0: None,
                beta: 1.0,
            }),
        ]);
        let data = load_dataset(&spec.dataset).unwrap();
        let a = run_sweep(&spec, &data).unwrap();
        let b = run_sweep(&spec, &data).unwrap();
        assert_eq!(results_csv(&a.rows), results_csv(&b.rows));

        let dir = std::env::temp_dir().join(format!("dpopt_bench_test_{}", std::process::id()));
        write_outputs(&dir, &spec, &a).unwrap();
        let rows = read_rows(&dir).unwrap();
        assert_eq!(rows.len(), a.rows.len());
        for (x, y) in rows.iter().zip(&a.rows) {
            assert_eq!(x.algorithm, y.algorithm);
            assert_eq!(x.excess_loss, y.excess_loss);
            assert_eq!(x.wall_ms, y.wall_ms);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = tiny_spec(vec![
            AlgorithmSpec::QuAdd(NewtonParams {
                lambda0: Some(0.05),
                beta: 1.0,
            }),
            AlgorithmSpec::DpSgd {
                batch_rate: 0.02,
                stepsize: None,
            },
            AlgorithmSpec::NewtonMinibatch {
                soi: SoiKind::Hessian,
                modifier: ModKind::Add,
                lambda0: 0.05,
                p_g: 0.1,
                p_h: 0.2,
            },
        ]);
        let json = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.algorithms.len(), 3);
        assert_eq!(back.algorithms[0].name(), "qu-add");
        assert_eq!(back.algorithms[2].name(), "newton-minibatch-hess-add");
    }
}
