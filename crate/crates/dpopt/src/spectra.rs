//! The eigenvalue modification operator Ψ (clip/add), closed-form
//! sensitivity bounds for the private Newton direction, privatized trace
//! estimation, and the adaptive λ₀ rule.

use crate::error::{Error, Result};
use crate::numkit::{eig_sym, EigenDecomposition, GaussianStream, SymMatrix};
use crate::privacy::gaussian_sigma;
use serde::{Deserialize, Serialize};

/// Eigenvalues this far below zero are treated as zero; anything lower is a
/// not-PSD error.
const PSD_TOLERANCE: f64 = 1e-6;
/// Clip ties: eigenvalues within this distance of λ₀ count as λ₀.
const CLIP_TIE_TOLERANCE: f64 = 1e-12;

/// Eigenvalue modification: clip eigenvalues up to a floor λ₀, or add λ₀·I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralModifier {
    pub kind: ModKind,
    pub lambda0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModKind {
    Clip,
    Add,
}

impl SpectralModifier {
    pub fn new(kind: ModKind, lambda0: f64) -> Result<Self> {
        if !(lambda0 > 0.0) || !lambda0.is_finite() {
            return Err(Error::InvalidInput("lambda0 must be positive".into()));
        }
        Ok(SpectralModifier { kind, lambda0 })
    }

    pub fn clip(lambda0: f64) -> Result<Self> {
        Self::new(ModKind::Clip, lambda0)
    }

    pub fn add(lambda0: f64) -> Result<Self> {
        Self::new(ModKind::Add, lambda0)
    }
}

/// Ψ(H) held in factored form: the eigenvectors of H with the modified
/// eigenvalues. The inverse shares the eigenvectors, so Ψ(H)⁻¹g is applied
/// by reciprocating the modified spectrum, never by dense inversion.
#[derive(Debug, Clone)]
pub struct ModifiedSoi {
    eig: EigenDecomposition,
    modified: Vec<f64>,
}

impl ModifiedSoi {
    pub fn modified_values(&self) -> &[f64] {
        &self.modified
    }

    pub fn eig(&self) -> &EigenDecomposition {
        &self.eig
    }

    /// Ψ(H)⁻¹ v.
    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        let coeffs = self.eig.to_eigenbasis(v);
        let scaled: Vec<f64> = coeffs
            .iter()
            .zip(&self.modified)
            .map(|(c, l)| c / l)
            .collect();
        self.eig.from_eigenbasis(&scaled)
    }

    pub fn to_matrix(&self) -> SymMatrix {
        self.eig.reconstruct_with(&self.modified)
    }
}

/// Modifies an eigendecomposition of a PSD matrix per the operator.
pub fn psi_modify(eig: EigenDecomposition, m: &SpectralModifier) -> Result<ModifiedSoi> {
    let min = eig.min_value();
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let modified = eig
        .values
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            match m.kind {
                ModKind::Clip => {
                    if (l - m.lambda0).abs() <= CLIP_TIE_TOLERANCE {
                        m.lambda0
                    } else {
                        l.max(m.lambda0)
                    }
                }
                ModKind::Add => l + m.lambda0,
            }
        })
        .collect();
    Ok(ModifiedSoi { eig, modified })
}

/// Ψ applied to a PSD matrix, returned densely.
pub fn psi_apply(h: &SymMatrix, m: &SpectralModifier) -> Result<SymMatrix> {
    Ok(psi_modify(eig_sym(h)?, m)?.to_matrix())
}

// ---------------------------------------------------------------------------
// Sensitivity bounds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityRegime {
    LogisticAdd,
    LogisticClip,
    GeneralAdd,
    GeneralClip,
    MinibatchAdd,
    MinibatchClip,
}

/// ℓ₂ bound on the change of Ψ(H)⁻¹ between neighbouring datasets; the
/// direction sensitivity is this value times ‖g̃‖.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityBound {
    pub value: f64,
    pub regime: SensitivityRegime,
}

/// Logistic loss: add → 1/(4nλ₀² + λ₀); clip → 1/(4nλ₀² − λ₀), requiring
/// n > 1/(4λ₀).
pub fn sensitivity_logistic(n: usize, m: &SpectralModifier) -> Result<SensitivityBound> {
    let nf = n as f64;
    let l = m.lambda0;
    match m.kind {
        ModKind::Add => Ok(SensitivityBound {
            value: 1.0 / (4.0 * nf * l * l + l),
            regime: SensitivityRegime::LogisticAdd,
        }),
        ModKind::Clip => {
            if nf <= 1.0 / (4.0 * l) {
                return Err(Error::Precondition(format!(
                    "clip requires n > 1/(4λ0): n = {n}, 1/(4λ0) = {}",
                    1.0 / (4.0 * l)
                )));
            }
            Ok(SensitivityBound {
                value: 1.0 / (4.0 * nf * l * l - l),
                regime: SensitivityRegime::LogisticClip,
            })
        }
    }
}

/// The Kato factor K = 2/π + 1/2 + (1/π) log((n(L₁−λ₀) + L₁)/L₁) for the
/// clip operator on general smooth losses.
pub fn kato_factor(n: usize, lambda0: f64, l1: f64) -> f64 {
    let nf = n as f64;
    2.0 / std::f64::consts::PI
        + 0.5
        + ((nf * (l1 - lambda0) + l1) / l1).ln() / std::f64::consts::PI
}

/// General convex, L₁-smooth loss: add → L₁/(nλ₀² − λ₀L₁) under nλ₀ > L₁;
/// clip → L₁K/(nλ₀² − λ₀L₁K) under 2λ₀ ≤ L₁ and nλ₀ > L₁K.
pub fn sensitivity_general(n: usize, m: &SpectralModifier, l1: f64) -> Result<SensitivityBound> {
    let nf = n as f64;
    let l = m.lambda0;
    match m.kind {
        ModKind::Add => {
            if nf * l <= l1 {
                return Err(Error::Precondition(format!(
                    "add requires n·λ0 > L1: n·λ0 = {}, L1 = {l1}",
                    nf * l
                )));
            }
            Ok(SensitivityBound {
                value: l1 / (nf * l * l - l * l1),
                regime: SensitivityRegime::GeneralAdd,
            })
        }
        ModKind::Clip => {
            if 2.0 * l > l1 {
                return Err(Error::Precondition(format!(
                    "clip requires 2λ0 ≤ L1: λ0 = {l}, L1 = {l1}"
                )));
            }
            let k = kato_factor(n, l, l1);
            if nf * l <= l1 * k {
                return Err(Error::Precondition(format!(
                    "clip requires n·λ0 > L1·K: n·λ0 = {}, L1·K = {}",
                    nf * l,
                    l1 * k
                )));
            }
            Ok(SensitivityBound {
                value: l1 * k / (nf * l * l - l * l1 * k),
                regime: SensitivityRegime::GeneralClip,
            })
        }
    }
}

/// Minibatch logistic: the full-batch bounds with n replaced by n·p_H.
pub fn sensitivity_minibatch(
    n: usize,
    p_h: f64,
    m: &SpectralModifier,
) -> Result<SensitivityBound> {
    if !(p_h > 0.0 && p_h <= 1.0) {
        return Err(Error::InvalidInput("p_H must be in (0, 1]".into()));
    }
    let eff = n as f64 * p_h;
    let l = m.lambda0;
    match m.kind {
        ModKind::Add => Ok(SensitivityBound {
            value: 1.0 / (4.0 * eff * l * l + l),
            regime: SensitivityRegime::MinibatchAdd,
        }),
        ModKind::Clip => {
            if eff <= 1.0 / (4.0 * l) {
                return Err(Error::Precondition(format!(
                    "clip requires n·p_H > 1/(4λ0): n·p_H = {eff}, 1/(4λ0) = {}",
                    1.0 / (4.0 * l)
                )));
            }
            Ok(SensitivityBound {
                value: 1.0 / (4.0 * eff * l * l - l),
                regime: SensitivityRegime::MinibatchClip,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Private trace and adaptive λ₀
// ---------------------------------------------------------------------------

/// max{trace(H) + N(0, σ²), 0} with σ calibrated for the trace sensitivity
/// 1/(4n) at the given budget. A scalar Gaussian draw; the clamp is applied
/// after noising. Passing ρ = ∞ disables the noise.
pub fn private_trace(
    h: &SymMatrix,
    n: usize,
    rho_trace: f64,
    stream: &mut GaussianStream,
) -> Result<f64> {
    if !(rho_trace > 0.0) {
        return Err(Error::InvalidInput("rho_trace must be positive".into()));
    }
    let sigma = if rho_trace.is_infinite() {
        0.0
    } else {
        gaussian_sigma(1.0 / (4.0 * n as f64), rho_trace)?
    };
    let xi = stream.normal();
    Ok((h.trace() + sigma * xi).max(0.0))
}

/// λ₀ rule: max{β (trace · T / (n²(1−γ)ρθ))^{1/3}, 1/n}. The 1/n floor
/// keeps the clip sensitivity denominator positive (4n(1/n)² − 1/n = 3/n).
pub fn adaptive_lambda0(
    trace_est: f64,
    n: usize,
    t: usize,
    rho: f64,
    theta: f64,
    gamma: f64,
    beta: f64,
) -> f64 {
    let nf = n as f64;
    let scaled = beta * (trace_est * t as f64 / (nf * nf * (1.0 - gamma) * rho * theta)).cbrt();
    scaled.max(1.0 / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{soi_coeff, soi_matrix, Dataset, Example, SoiKind};
    use crate::numkit::{norm, scale, sub, NoiseRole, RandomSource};

    fn psd_random(
        d: usize,
        terms: usize,
        stream: &mut crate::numkit::GaussianStream,
    ) -> SymMatrix {
        let mut m = SymMatrix::zeros(d);
        for _ in 0..terms {
            let v = stream.normal_vec(d);
            m.add_scaled_outer(&v, stream.uniform() * 0.5);
        }
        m
    }

    #[test]
    fn clip_diagonal_example() {
        let h = SymMatrix::from_diag(&[0.0, 0.3]);
        let out = psi_apply(&h, &SpectralModifier::clip(0.2).unwrap()).unwrap();
        let expect = SymMatrix::from_diag(&[0.2, 0.3]);
        assert!(out.sub_matrix(&expect).frob_norm() < 1e-12);
    }

    #[test]
    fn add_on_zero_matrix() {
        let h = SymMatrix::zeros(3);
        let out = psi_apply(&h, &SpectralModifier::add(0.2).unwrap()).unwrap();
        let mut expect = SymMatrix::zeros(3);
        expect.add_diag(0.2);
        assert!(out.sub_matrix(&expect).frob_norm() < 1e-12);
    }

    #[test]
    fn clip_is_noop_above_floor() {
        let mut stream = RandomSource::new(1).stream(NoiseRole::DataGen);
        let mut h = psd_random(5, 8, &mut stream);
        h.add_diag(0.5); // all eigenvalues > 0.5
        let out = psi_apply(&h, &SpectralModifier::clip(0.1).unwrap()).unwrap();
        assert!(out.sub_matrix(&h).frob_norm() <= 1e-10);
    }

    #[test]
    fn psi_rejects_indefinite() {
        let h = SymMatrix::from_diag(&[-0.5, 1.0]);
        assert!(matches!(
            psi_apply(&h, &SpectralModifier::clip(0.1).unwrap()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn modified_inverse_matches_dense_expectation() {
        let mut stream = RandomSource::new(2).stream(NoiseRole::DataGen);
        let h = psd_random(4, 6, &mut stream);
        let m = SpectralModifier::add(0.3).unwrap();
        let soi = psi_modify(eig_sym(&h).unwrap(), &m).unwrap();
        let g = stream.normal_vec(4);
        let x = soi.apply_inverse(&g);
        // Ψ(H)·x should reproduce g
        let back = soi.to_matrix().matvec(&x);
        assert!(norm(&sub(&back, &g)) < 1e-10);
        // floor respected
        assert!(soi.modified_values().iter().all(|&l| l >= 0.3 - 1e-10));
    }

    #[test]
    fn sensitivity_logistic_hand_values() {
        let add = sensitivity_logistic(1000, &SpectralModifier::add(0.05).unwrap()).unwrap();
        assert!((add.value - 1.0 / 10.05).abs() < 1e-12);
        let clip = sensitivity_logistic(1000, &SpectralModifier::clip(0.05).unwrap()).unwrap();
        assert!((clip.value - 1.0 / 9.95).abs() < 1e-12);
        assert!(add.value <= clip.value);
        // clip precondition
        assert!(matches!(
            sensitivity_logistic(4, &SpectralModifier::clip(0.05).unwrap()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sensitivity_general_hand_values() {
        let add = sensitivity_general(1000, &SpectralModifier::add(0.05).unwrap(), 0.25).unwrap();
        assert!((add.value - 0.25 / 2.4875).abs() < 1e-9);

        let k = kato_factor(1000, 0.05, 0.25);
        let expect_k = 2.0 / std::f64::consts::PI
            + 0.5
            + ((1000.0 * 0.2 + 0.25) / 0.25f64).ln() / std::f64::consts::PI;
        assert!((k - expect_k).abs() < 1e-12);
        let clip = sensitivity_general(1000, &SpectralModifier::clip(0.05).unwrap(), 0.25).unwrap();
        let expect = 0.25 * k / (1000.0 * 0.0025 - 0.05 * 0.25 * k);
        assert!((clip.value - expect).abs() < 1e-12);

        // conditions named in errors
        assert!(sensitivity_general(10, &SpectralModifier::add(0.01).unwrap(), 0.25).is_err());
        assert!(sensitivity_general(1000, &SpectralModifier::clip(0.2).unwrap(), 0.25).is_err());
    }

    #[test]
    fn sensitivity_general_vanishes_with_n() {
        let m = SpectralModifier::add(0.05).unwrap();
        let b1 = sensitivity_general(1_000, &m, 0.25).unwrap().value;
        let b2 = sensitivity_general(1_000_000, &m, 0.25).unwrap().value;
        assert!(b2 < b1 / 100.0);
    }

    #[test]
    fn sensitivity_minibatch_hand_values() {
        let m_add = SpectralModifier::add(0.1).unwrap();
        let add = sensitivity_minibatch(1000, 0.1, &m_add).unwrap();
        assert!((add.value - 1.0 / 4.1).abs() < 1e-12);
        let m_clip = SpectralModifier::clip(0.1).unwrap();
        let clip = sensitivity_minibatch(1000, 0.1, &m_clip).unwrap();
        assert!((clip.value - 1.0 / 3.9).abs() < 1e-12);

        // p_H = 1 reduces to the full-batch bound
        let full = sensitivity_logistic(1000, &m_add).unwrap();
        let mb = sensitivity_minibatch(1000, 1.0, &m_add).unwrap();
        assert_eq!(full.value, mb.value);
    }

    #[test]
    fn private_trace_behaviour() {
        let h = SymMatrix::from_diag(&[0.1, 0.2, 0.3]);
        let src = RandomSource::new(3);
        // rho → ∞ disables the noise
        let mut s = src.stream(NoiseRole::Trace);
        let t = private_trace(&h, 1000, f64::INFINITY, &mut s).unwrap();
        assert!((t - 0.6).abs() < 1e-15);

        // clamp at zero when the draw is negative on a zero matrix
        let z = SymMatrix::zeros(3);
        let mut s2 = src.stream(NoiseRole::Trace);
        for _ in 0..64 {
            let v = private_trace(&z, 10, 1e-6, &mut s2).unwrap();
            assert!(v >= 0.0);
        }

        // σ hand value: n=1000, ρ=0.003 → σ = 0.00025/√0.006
        let sigma = gaussian_sigma(1.0 / 4000.0, 0.003).unwrap();
        assert!((sigma - 0.0032275).abs() < 1e-7);
        // the noised trace reproduces trace + σξ for the captured draw
        let mut s3 = src.stream(NoiseRole::Trace);
        let xi = src.stream(NoiseRole::Trace).normal();
        let got = private_trace(&h, 1000, 0.003, &mut s3).unwrap();
        assert!((got - (0.6 + sigma * xi).max(0.0)).abs() < 1e-15);
    }

    #[test]
    fn adaptive_lambda0_examples() {
        // zero trace hits the 1/n floor
        assert_eq!(adaptive_lambda0(0.0, 1000, 10, 1.0, 0.3, 0.1, 1.0), 1e-3);
        // hand value (0.5·10/(10⁶·0.9·0.3))^⅓ = 0.026456684…
        let v = adaptive_lambda0(0.5, 1000, 10, 1.0, 0.3, 0.1, 1.0);
        assert!((v - 0.026456684199469997).abs() < 1e-12, "got {v}");
        // homogeneity in β above the floor
        let v2 = adaptive_lambda0(0.5, 1000, 10, 1.0, 0.3, 0.1, 2.0);
        assert!((v2 - 2.0 * v).abs() < 1e-12);
        // monotone in the trace estimate
        let lo = adaptive_lambda0(0.1, 1000, 10, 1.0, 0.3, 0.1, 1.0);
        let hi = adaptive_lambda0(0.9, 1000, 10, 1.0, 0.3, 0.1, 1.0);
        assert!(hi >= lo);
    }

    #[test]
    fn clip_is_frobenius_projection() {
        // No feasible perturbation beats Ψ_clip(A) by more than 1e-9.
        let mut stream = RandomSource::new(5).stream(NoiseRole::DataGen);
        let lambda0 = 0.4;
        let m = SpectralModifier::clip(lambda0).unwrap();
        for _ in 0..5 {
            let a = psd_random(5, 8, &mut stream);
            let proj = psi_apply(&a, &m).unwrap();
            let best = proj.sub_matrix(&a).frob_norm();
            for _ in 0..500 {
                // random feasible candidate: clip a perturbed symmetric matrix
                let mut cand = proj.clone();
                for i in 0..5 {
                    for j in 0..=i {
                        cand.add_entry(i, j, 0.2 * stream.normal());
                    }
                }
                let feasible = match psi_apply(&cand, &m) {
                    Ok(f) => f,
                    Err(_) => continue,
                };
                assert!(feasible.sub_matrix(&a).frob_norm() >= best - 1e-9);
            }
        }
    }

    #[test]
    fn clip_nonexpansive() {
        let mut stream = RandomSource::new(6).stream(NoiseRole::DataGen);
        let m = SpectralModifier::clip(0.3).unwrap();
        for _ in 0..200 {
            let a = psd_random(6, 8, &mut stream);
            let b = psd_random(6, 8, &mut stream);
            let pa = psi_apply(&a, &m).unwrap();
            let pb = psi_apply(&b, &m).unwrap();
            assert!(pa.sub_matrix(&pb).frob_norm() <= a.sub_matrix(&b).frob_norm() + 1e-10);
        }
    }

    #[test]
    fn inverse_continuity_lemma() {
        let mut stream = RandomSource::new(7).stream(NoiseRole::DataGen);
        for _ in 0..200 {
            let mut a = psd_random(5, 8, &mut stream);
            a.add_diag(0.5 + stream.uniform());
            let mut e = SymMatrix::zeros(5);
            for i in 0..5 {
                for j in 0..=i {
                    e.set(i, j, 0.02 * stream.normal());
                }
            }
            let b = a.add_matrix(&e);
            let inv = |m: &SymMatrix| {
                let eig = eig_sym(m).unwrap();
                let inv_vals: Vec<f64> = eig.values.iter().map(|l| 1.0 / l).collect();
                eig.reconstruct_with(&inv_vals)
            };
            let a_inv = inv(&a);
            let diff = a.sub_matrix(&b).operator_norm();
            let a_inv_norm = a_inv.operator_norm();
            if diff * a_inv_norm >= 1.0 {
                continue;
            }
            let lhs = a_inv.sub_matrix(&inv(&b)).operator_norm();
            let rhs = diff * a_inv_norm * a_inv_norm / (1.0 - diff * a_inv_norm);
            assert!(lhs <= rhs + 1e-9, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn kato_operator_bound() {
        let mut stream = RandomSource::new(8).stream(NoiseRole::DataGen);
        for _ in 0..200 {
            let a = psd_random(5, 8, &mut stream);
            let b = psd_random(5, 2, &mut stream);
            let b_norm = b.operator_norm();
            if b_norm < 1e-12 {
                continue;
            }
            let lambda0 = 0.1 + 0.4 * stream.uniform();
            let m = SpectralModifier::clip(lambda0).unwrap();
            let lhs = psi_apply(&a.add_matrix(&b), &m)
                .unwrap()
                .sub_matrix(&psi_apply(&a, &m).unwrap())
                .operator_norm();
            let mut a_shift = a.clone();
            a_shift.add_diag(-lambda0);
            let k = 2.0 / std::f64::consts::PI
                + 0.5
                + ((a_shift.operator_norm() + b_norm) / b_norm).ln() / std::f64::consts::PI;
            assert!(lhs <= b_norm * k + 1e-9);
        }
    }

    #[test]
    fn empirical_sensitivity_within_bound() {
        // small version of the neighbouring-dataset experiment; the full
        // 500-trial run is in the acceptance suite
        let mut stream = RandomSource::new(9).stream(NoiseRole::DataGen);
        for trial in 0..60usize {
            let n = 50 + (trial * 3) % 150;
            let d = 2 + trial % 7;
            let examples: Vec<Example> = (0..n)
                .map(|_| {
                    let v = stream.normal_vec(d);
                    let x = scale(&v, (0.2 + 0.8 * stream.uniform()) / norm(&v).max(1e-12));
                    Example::new(x, if stream.uniform() < 0.5 { -1.0 } else { 1.0 }).unwrap()
                })
                .collect();
            let data = Dataset::from_examples(examples).unwrap();
            let w = stream.normal_vec(d);
            let g = stream.normal_vec(d);
            let lambda0 = 1.0 / (2.0 * n as f64) + 0.5 * stream.uniform();

            for kind in [SoiKind::Hessian, SoiKind::Qu] {
                let h = soi_matrix(&w, &data, kind);
                // one added example, scaled into H by 1/n
                let v = stream.normal_vec(d);
                let x_new = scale(&v, (0.2 + 0.8 * stream.uniform()) / norm(&v).max(1e-12));
                let coeff = soi_coeff(&w, &x_new, kind);
                let mut h_prime = h.clone();
                h_prime.add_scaled_outer(&x_new, coeff / n as f64);

                for mk in [ModKind::Clip, ModKind::Add] {
                    let m = SpectralModifier::new(mk, lambda0).unwrap();
                    let bound = sensitivity_logistic(n, &m).unwrap().value;
                    let d1 = psi_modify(eig_sym(&h).unwrap(), &m)
                        .unwrap()
                        .apply_inverse(&g);
                    let d2 = psi_modify(eig_sym(&h_prime).unwrap(), &m)
                        .unwrap()
                        .apply_inverse(&g);
                    let change = norm(&sub(&d1, &d2));
                    assert!(
                        change <= bound * norm(&g) + 1e-12,
                        "regime {mk:?} change {change} bound {}",
                        bound * norm(&g)
                    );
                }
            }
        }
    }
}
