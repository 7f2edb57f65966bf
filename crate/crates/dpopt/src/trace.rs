//! Per-iteration run records shared by every solver, plus CSV emission.

use crate::privacy::PrivacyLedger;

/// One row of a solver trajectory. `rho_spent` and `wall_ms` are cumulative
/// from the start of the run.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub t: usize,
    pub iterate: Vec<f64>,
    pub loss: f64,
    pub grad_norm: f64,
    pub rho_spent: f64,
    pub wall_ms: f64,
    /// Inner solver steps for this outer iteration (cubic method only).
    pub inner_steps: Option<usize>,
}

/// Trajectory of a solver run: T+1 records (including t = 0), the privacy
/// ledger, and whether the output is actually private (line-search and
/// damped-Newton baselines are not).
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: String,
    pub records: Vec<IterationRecord>,
    pub ledger: PrivacyLedger,
    pub private: bool,
}

impl RunTrace {
    pub fn new(algorithm: &str, private: bool) -> Self {
        RunTrace {
            algorithm: algorithm.to_string(),
            records: Vec::new(),
            ledger: PrivacyLedger::new(),
            private,
        }
    }

    pub fn final_iterate(&self) -> &[f64] {
        &self
            .records
            .last()
            .expect("trace has at least the t=0 record")
            .iterate
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().expect("non-empty trace").loss
    }

    pub fn total_wall_ms(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.wall_ms)
    }

    /// CSV with columns t, loss, excess_loss (when a reference loss is
    /// given), grad_norm, wall_ms, rho_spent, and inner_steps when any
    /// record carries it.
    pub fn to_csv(&self, reference_loss: Option<f64>) -> String {
        let with_inner = self.records.iter().any(|r| r.inner_steps.is_some());
        let mut out = String::new();
        out.push_str("t,loss");
        if reference_loss.is_some() {
            out.push_str(",excess_loss");
        }
        out.push_str(",grad_norm,wall_ms,rho_spent");
        if with_inner {
            out.push_str(",inner_steps");
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{}", r.t, r.loss));
            if let Some(reference) = reference_loss {
                out.push_str(&format!(",{}", r.loss - reference));
            }
            out.push_str(&format!(",{},{},{}", r.grad_norm, r.wall_ms, r.rho_spent));
            if with_inner {
                match r.inner_steps {
                    Some(n) => out.push_str(&format!(",{n}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}
