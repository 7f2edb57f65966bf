//! Data ingestion and generation: LIBSVM-format parsing and serialization,
//! unit-ball normalization with label mapping to ±1, and the synthetic
//! unit-sphere generator.

use crate::error::{Error, Result};
use crate::losses::{Dataset, Example};
use crate::numkit::{dot, norm, GaussianStream, NoiseRole, RandomSource};

/// One sparse record: a raw label and (1-based index, value) pairs with
/// strictly increasing indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub label: f64,
    pub features: Vec<(usize, f64)>,
}

/// Parses LIBSVM text: one record per line, `label idx:val idx:val …`,
/// 1-based strictly increasing indices. Empty lines and lines starting with
/// `#` are skipped. Errors carry the 1-based line number.
pub fn parse_libsvm(text: &str) -> Result<Vec<RawRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a first token");
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: line_num,
            message: format!("bad label {label_tok:?}"),
        })?;
        let mut features = Vec::new();
        let mut prev_index = 0usize;
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_num,
                message: format!("expected index:value, got {tok:?}"),
            })?;
            let index: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: line_num,
                message: format!("bad feature index {idx_s:?}"),
            })?;
            let value: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: line_num,
                message: format!("bad feature value {val_s:?}"),
            })?;
            if index == 0 {
                return Err(Error::Parse {
                    line: line_num,
                    message: "feature indices are 1-based".into(),
                });
            }
            if index <= prev_index {
                return Err(Error::Parse {
                    line: line_num,
                    message: format!("feature indices must increase: {prev_index} then {index}"),
                });
            }
            prev_index = index;
            features.push((index, value));
        }
        records.push(RawRecord { label, features });
    }
    Ok(records)
}

/// Inverse of `parse_libsvm`; float formatting is shortest-round-trip, so
/// parse ∘ serialize ∘ parse is the identity on records.
pub fn serialize_libsvm(records: &[RawRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!("{}", r.label));
        for (i, v) in &r.features {
            out.push_str(&format!(" {i}:{v}"));
        }
        out.push('\n');
    }
    out
}

/// Raw-label → ±1 mapping.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelMap {
    /// Both classes listed explicitly; anything else is an error.
    Explicit {
        positive: Vec<f64>,
        negative: Vec<f64>,
    },
    /// Listed labels are +1, every other label is −1 (multiclass
    /// binarization, e.g. one class vs rest).
    PositiveVsRest { positive: Vec<f64> },
}

impl LabelMap {
    pub fn zero_one() -> Self {
        LabelMap::Explicit {
            positive: vec![1.0],
            negative: vec![0.0],
        }
    }

    pub fn plus_minus_one() -> Self {
        LabelMap::Explicit {
            positive: vec![1.0],
            negative: vec![-1.0],
        }
    }

    pub fn positive_vs_rest(positive: Vec<f64>) -> Self {
        LabelMap::PositiveVsRest { positive }
    }

    pub fn map(&self, raw: f64) -> Result<f64> {
        match self {
            LabelMap::Explicit { positive, negative } => {
                if positive.contains(&raw) {
                    Ok(1.0)
                } else if negative.contains(&raw) {
                    Ok(-1.0)
                } else {
                    Err(Error::InvalidInput(format!("unmapped label {raw}")))
                }
            }
            LabelMap::PositiveVsRest { positive } => {
                Ok(if positive.contains(&raw) { 1.0 } else { -1.0 })
            }
        }
    }
}

/// Densifies records, maps labels to ±1, and applies one dataset-wide scale
/// 1/max(1, max‖x‖) so every feature vector lands in the unit ball while
/// relative geometry is preserved. The dimension is the largest index seen.
pub fn normalize_dataset(records: &[RawRecord], map: &LabelMap) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records".into()));
    }
    let d = records
        .iter()
        .flat_map(|r| r.features.iter().map(|(i, _)| *i))
        .max()
        .ok_or_else(|| Error::InvalidInput("no features in any record".into()))?;

    let mut dense: Vec<Vec<f64>> = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut max_norm = 0.0f64;
    for r in records {
        let mut x = vec![0.0; d];
        for &(i, v) in &r.features {
            x[i - 1] = v;
        }
        max_norm = max_norm.max(norm(&x));
        labels.push(map.map(r.label)?);
        dense.push(x);
    }
    let scale = 1.0 / max_norm.max(1.0);
    let examples = dense
        .into_iter()
        .zip(labels)
        .map(|(x, y)| Example::new(x.iter().map(|v| v * scale).collect(), y))
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_examples(examples)
}

/// Bernoulli label from the logistic link: +1 with probability
/// 1/(1 + exp(−⟨x, w*⟩)).
pub fn bernoulli_label(x: &[f64], w_star: &[f64], stream: &mut GaussianStream) -> f64 {
    let p = 1.0 / (1.0 + (-dot(x, w_star)).exp());
    if stream.uniform() < p {
        1.0
    } else {
        -1.0
    }
}

/// n i.i.d. features uniform on the unit sphere (a normalized Gaussian
/// vector), labels from the logistic link at w*. Deterministic per seed.
pub fn synthetic_generate(n: usize, d: usize, w_star: &[f64], seed: u64) -> Result<Dataset> {
    if n < 1 || d < 1 {
        return Err(Error::InvalidInput("n and d must be at least 1".into()));
    }
    if w_star.len() != d {
        return Err(Error::InvalidInput("w_star dimension mismatch".into()));
    }
    let mut stream = RandomSource::new(seed).stream(NoiseRole::DataGen);
    let examples = (0..n)
        .map(|_| {
            let mut x = stream.normal_vec(d);
            let mut s = norm(&x);
            while s < 1e-12 {
                x = stream.normal_vec(d);
                s = norm(&x);
            }
            for v in &mut x {
                *v /= s;
            }
            let y = bernoulli_label(&x, w_star, &mut stream);
            Example::new(x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_examples(examples)
}

/// w* of a given norm in a seed-determined direction; the conventional
/// planted weight for the synthetic benchmark.
pub fn planted_weight(d: usize, w_star_norm: f64, seed: u64) -> Vec<f64> {
    let mut stream = RandomSource::new(seed).stream(NoiseRole::DataGen);
    let mut v = stream.normal_vec(d);
    let s = norm(&v).max(1e-12);
    for c in &mut v {
        *c *= w_star_norm / s;
    }
    v
}
