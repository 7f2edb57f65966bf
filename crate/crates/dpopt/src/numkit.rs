//! Deterministic numerical kernels: symmetric eigendecomposition, Euclidean
//! ball projection, span projectors for the V-seminorm, and seedable
//! Gaussian streams shared by all stochastic modules.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

/// `a += c * b` in place.
pub fn axpy(a: &mut [f64], c: f64, b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += c * y;
    }
}

// ---------------------------------------------------------------------------
// Symmetric matrices
// ---------------------------------------------------------------------------

/// Dense symmetric matrix with packed lower-triangle storage, so symmetry
/// holds exactly by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    /// Row-major packed lower triangle: entry (i, j) with j <= i lives at
    /// i*(i+1)/2 + j.
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be >= 1");
        SymMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * (i + 1) / 2 + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(i: usize, j: usize) -> usize {
        if j <= i {
            i * (i + 1) / 2 + j
        } else {
            j * (j + 1) / 2 + i
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[Self::idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[Self::idx(i, j)] = v;
    }

    #[inline]
    pub fn add_entry(&mut self, i: usize, j: usize, v: f64) {
        self.data[Self::idx(i, j)] += v;
    }

    /// Accumulates `c * x xᵀ`. Hot path for Hessian assembly.
    pub fn add_scaled_outer(&mut self, x: &[f64], c: f64) {
        debug_assert_eq!(x.len(), self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            let cxi = c * x[i];
            let row = &mut self.data[k..k + i + 1];
            for (j, entry) in row.iter_mut().enumerate() {
                *entry += cxi * x[j];
            }
            k += i + 1;
        }
    }

    pub fn add_diag(&mut self, c: f64) {
        for i in 0..self.dim {
            self.data[i * (i + 1) / 2 + i] += c;
        }
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn add_matrix(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        SymMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn sub_matrix(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        SymMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * (i + 1) / 2 + i]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.data[i * (i + 1) / 2 + j];
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.matvec_into(v, &mut out);
        out
    }

    /// `out = A v` without allocating.
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        let mut k = 0;
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..i {
                let a = self.data[k + j];
                acc += a * v[j];
                out[j] += a * v[i];
            }
            acc += self.data[k + i] * v[i];
            out[i] += acc;
            k += i + 1;
        }
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.matvec(v))
    }

    /// Full dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = self.data[i * (i + 1) / 2 + j];
                out[i * d + j] = v;
                out[j * d + i] = v;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Operator (spectral) norm, via eigendecomposition.
    pub fn operator_norm(&self) -> f64 {
        let eig = eig_sym(self).expect("operator_norm: eigendecomposition failed");
        eig.values
            .iter()
            .map(|l| l.abs())
            .fold(0.0f64, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and an
/// orthonormal set of eigenvectors (column `i` pairs with `values[i]`).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub dim: usize,
    pub values: Vec<f64>,
    /// Column-major: eigenvector i occupies vectors[i*dim..(i+1)*dim].
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Coordinates of `v` in the eigenbasis, i.e. Uᵀv.
    pub fn to_eigenbasis(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.vector(i), v)).collect()
    }

    /// Σ cᵢ uᵢ for coefficients c in the eigenbasis.
    pub fn from_eigenbasis(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            axpy(&mut out, c[i], self.vector(i));
        }
        out
    }

    /// Rebuilds Σ λᵢ uᵢuᵢᵀ (with optionally remapped eigenvalues).
    pub fn reconstruct_with(&self, values: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.dim);
        for i in 0..self.dim {
            m.add_scaled_outer(self.vector(i), values[i]);
        }
        m
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(&self.values)
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.dim - 1]
    }
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Symmetric eigendecomposition by cyclic Jacobi rotations; converges when
/// the off-diagonal Frobenius mass falls below 1e-12 relative to the input
/// scale. Eigenvalues are returned in ascending order.
pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(Error::InvalidInput(
            "eig_sym: matrix has non-finite entries".into(),
        ));
    }
    let d = m.dim;
    let mut a = m.to_dense();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale = m.frob_norm().max(1.0);
    let tol = JACOBI_TOL * scale;

    if d > 1 {
        let mut converged = false;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            let mut off2 = 0.0;
            for i in 0..d {
                for j in (i + 1)..d {
                    let x = a[i * d + j];
                    off2 += 2.0 * x * x;
                }
            }
            if off2.sqrt() <= tol {
                converged = true;
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p * d + q];
                    if apq.abs() <= tol / (d as f64) {
                        continue;
                    }
                    let app = a[p * d + p];
                    let aqq = a[q * d + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (theta * theta + 1.0).sqrt())
                    } else {
                        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;

                    for k in 0..d {
                        let akp = a[k * d + p];
                        let akq = a[k * d + q];
                        a[k * d + p] = c * akp - s * akq;
                        a[k * d + q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p * d + k];
                        let aqk = a[q * d + k];
                        a[p * d + k] = c * apk - s * aqk;
                        a[q * d + k] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let vkp = v[k * d + p];
                        let vkq = v[k * d + q];
                        v[k * d + p] = c * vkp - s * vkq;
                        v[k * d + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        if !converged {
            // One final check: accept if the residual is still small in
            // absolute terms, otherwise report.
            let mut off2 = 0.0;
            for i in 0..d {
                for j in (i + 1)..d {
                    let x = a[i * d + j];
                    off2 += 2.0 * x * x;
                }
            }
            if off2.sqrt() > tol * 100.0 {
                return Err(Error::NonConvergence {
                    iterations: JACOBI_MAX_SWEEPS,
                    context: format!("Jacobi off-diagonal mass {:.3e}", off2.sqrt()),
                });
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        a[i * d + i]
            .partial_cmp(&a[j * d + j])
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * d + i]).collect();
    let mut vectors = vec![0.0; d * d];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..d {
            vectors[col * d + k] = v[k * d + src];
        }
    }
    Ok(EigenDecomposition {
        dim: d,
        values,
        vectors,
    })
}

// ---------------------------------------------------------------------------
// Euclidean ball projection
// ---------------------------------------------------------------------------

/// Projects `w` onto the closed ball of the given center and radius. Points
/// already inside are returned unchanged.
pub fn project_ball(w: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "radius must be positive");
    let diff = sub(w, center);
    let dist = norm(&diff);
    if dist <= radius {
        w.to_vec()
    } else {
        let mut out = center.to_vec();
        axpy(&mut out, radius / dist, &diff);
        out
    }
}

// ---------------------------------------------------------------------------
// Span projector and V-seminorm
// ---------------------------------------------------------------------------

/// Orthogonal projector onto span{x₁,…,xₙ}, stored as an orthonormal basis.
/// The induced seminorm ‖u‖_V = √(uᵀVu) with V = QQᵀ.
#[derive(Debug, Clone)]
pub struct SpanProjector {
    dim: usize,
    /// Flat orthonormal basis, basis[i*dim..(i+1)*dim] is the i-th vector.
    basis: Vec<f64>,
    rank: usize,
}

impl SpanProjector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basis_vector(&self, i: usize) -> &[f64] {
        &self.basis[i * self.dim..(i + 1) * self.dim]
    }

    /// V u = Σ ⟨qᵢ,u⟩ qᵢ.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in 0..self.rank {
            let q = self.basis_vector(i);
            axpy(&mut out, dot(q, u), q);
        }
        out
    }

    /// Dense V = QQᵀ.
    pub fn matrix(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.dim);
        for i in 0..self.rank {
            m.add_scaled_outer(self.basis_vector(i), 1.0);
        }
        m
    }

    /// Operator norm of the restriction of a symmetric matrix to the span,
    /// i.e. the spectral norm of QᵀMQ. This equals ‖M‖_V for matrices whose
    /// range and row space lie in the span (the case for logistic Hessians).
    pub fn restricted_operator_norm(&self, m: &SymMatrix) -> f64 {
        if self.rank == 0 {
            return 0.0;
        }
        let r = self.rank;
        let mut projected = SymMatrix::zeros(r);
        let images: Vec<Vec<f64>> = (0..r).map(|i| m.matvec(self.basis_vector(i))).collect();
        for i in 0..r {
            for j in 0..=i {
                projected.set(i, j, dot(self.basis_vector(i), &images[j]));
            }
        }
        projected.operator_norm()
    }
}

/// Builds the span projector by modified Gram–Schmidt with a second
/// re-orthogonalization pass. A vector is rejected when its residual norm
/// falls to `tol` times its original norm.
pub fn span_projector(xs: &[Vec<f64>], tol: f64) -> Result<SpanProjector> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput("span_projector: tol must be > 0".into()));
    }
    let dim = match xs.first() {
        Some(x) => x.len(),
        None => {
            return Err(Error::InvalidInput(
                "span_projector: need at least one vector".into(),
            ))
        }
    };
    let mut basis: Vec<f64> = Vec::new();
    let mut rank = 0usize;
    for x in xs {
        if x.len() != dim {
            return Err(Error::InvalidInput(
                "span_projector: inconsistent dimensions".into(),
            ));
        }
        let original = norm(x);
        if original == 0.0 {
            continue;
        }
        let mut v = x.clone();
        for _pass in 0..2 {
            for i in 0..rank {
                let q = &basis[i * dim..(i + 1) * dim];
                let coeff = dot(q, &v);
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= coeff * qk;
                }
            }
        }
        let residual = norm(&v);
        if residual > tol * original {
            let inv = 1.0 / residual;
            basis.extend(v.iter().map(|c| c * inv));
            rank += 1;
            if rank == dim {
                break;
            }
        }
    }
    Ok(SpanProjector { dim, basis, rank })
}

pub const DEFAULT_SPAN_TOL: f64 = 1e-8;

/// ‖u‖_V = √(uᵀVu) = ‖Qᵀu‖.
pub fn v_norm(p: &SpanProjector, u: &[f64]) -> f64 {
    assert_eq!(u.len(), p.dim());
    let mut s = 0.0;
    for i in 0..p.rank() {
        let c = dot(p.basis_vector(i), u);
        s += c * c;
    }
    s.sqrt()
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// Noise roles; each gets its own PRNG stream so toggling or reordering one
/// noise source does not shift the draws of the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseRole {
    Gradient,
    Direction,
    Trace,
    Subsampling,
    HessianPerturb,
    DataGen,
    InnerSolver,
}

impl NoiseRole {
    fn stream_id(self) -> u64 {
        match self {
            NoiseRole::Gradient => 1,
            NoiseRole::Direction => 2,
            NoiseRole::Trace => 3,
            NoiseRole::Subsampling => 4,
            NoiseRole::HessianPerturb => 5,
            NoiseRole::DataGen => 6,
            NoiseRole::InnerSolver => 7,
        }
    }
}

/// Seed for a family of per-role streams. One `RandomSource` per solver run;
/// concurrent runs use independently derived seeds.
#[derive(Debug, Clone, Copy)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, role: NoiseRole) -> GaussianStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(role.stream_id());
        GaussianStream { rng }
    }
}

/// Deterministic Gaussian/uniform generator over a counter-based PRNG.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn normal_vec(&mut self, d: usize) -> Vec<f64> {
        (0..d).map(|_| self.normal()).collect()
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }
}

/// Derives a child seed from a master seed and a list of components
/// (FNV-1a over the little-endian bytes). Used to give each sweep cell an
/// independent, reproducible stream family.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut h = FNV_OFFSET;
    for chunk in std::iter::once(master).chain(parts.iter().copied()) {
        for b in chunk.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_sym(d: usize, stream: &mut GaussianStream) -> SymMatrix {
        let mut m = SymMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                m.set(i, j, stream.normal());
            }
        }
        m
    }

    #[test]
    fn eig_identity() {
        let eig = eig_sym(&SymMatrix::identity(3)).unwrap();
        for v in &eig.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        // basis orthonormal
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(eig.vector(i), eig.vector(j)) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eig_diagonal_sorted_ascending() {
        let m = SymMatrix::from_diag(&[2.0, -1.0]);
        let eig = eig_sym(&m).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
        // eigenvector of -1 is e2, of 2 is e1
        assert!(eig.vector(0)[1].abs() > 0.999);
        assert!(eig.vector(1)[0].abs() > 0.999);
    }

    #[test]
    fn eig_random_reconstruction() {
        let mut stream = RandomSource::new(7).stream(NoiseRole::DataGen);
        let m = random_sym(6, &mut stream);
        let eig = eig_sym(&m).unwrap();
        let rebuilt = eig.reconstruct();
        let err = rebuilt.sub_matrix(&m).frob_norm();
        assert!(err <= 1e-10 * (1.0 + m.frob_norm()), "err {err}");
    }

    #[test]
    fn eig_rejects_non_finite() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 1, f64::NAN);
        assert!(matches!(eig_sym(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eig_eigenpair_residuals() {
        // ‖Au − λu‖ ≤ 1e-8 (1 + ‖A‖_F) across random sizes
        let src = RandomSource::new(41);
        let mut stream = src.stream(NoiseRole::DataGen);
        for d in [2usize, 5, 11, 20] {
            let m = random_sym(d, &mut stream);
            let eig = eig_sym(&m).unwrap();
            for i in 0..d {
                let u = eig.vector(i);
                let mut r = m.matvec(u);
                axpy(&mut r, -eig.values[i], u);
                assert!(norm(&r) <= 1e-8 * (1.0 + m.frob_norm()));
            }
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let mut stream = RandomSource::new(3).stream(NoiseRole::DataGen);
        let m = random_sym(5, &mut stream);
        let dense = m.to_dense();
        let v = stream.normal_vec(5);
        let got = m.matvec(&v);
        for i in 0..5 {
            let want: f64 = (0..5).map(|j| dense[i * 5 + j] * v[j]).sum();
            assert!((got[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn project_ball_examples() {
        let p = project_ball(&[3.0, 0.0], &[0.0, 0.0], 1.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);

        let q = project_ball(&[0.2, 0.1], &[0.0, 0.0], 1.0);
        assert_eq!(q, vec![0.2, 0.1]);

        let r = project_ball(&[3.0, 4.0], &[1.0, 1.0], 1.0);
        let s = 13.0f64.sqrt();
        assert!((r[0] - (1.0 + 2.0 / s)).abs() < 1e-12);
        assert!((r[1] - (1.0 + 3.0 / s)).abs() < 1e-12);
    }

    #[test]
    fn span_projector_axis_aligned() {
        let e1 = vec![1.0, 0.0, 0.0];
        let e2 = vec![0.0, 1.0, 0.0];
        let p = span_projector(&[e1, e2], DEFAULT_SPAN_TOL).unwrap();
        assert_eq!(p.rank(), 2);
        assert!(v_norm(&p, &[0.0, 0.0, 1.0]) < 1e-12);
    }

    #[test]
    fn span_projector_collinear() {
        let p = span_projector(&[vec![1.0, 0.0], vec![2.0, 0.0]], DEFAULT_SPAN_TOL).unwrap();
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn span_projector_zero_inputs_rank_zero() {
        let p = span_projector(&[vec![0.0, 0.0]], DEFAULT_SPAN_TOL).unwrap();
        assert_eq!(p.rank(), 0);
        assert_eq!(v_norm(&p, &[1.0, 2.0]), 0.0);
    }

    /// Independent rank oracle: Gaussian elimination with partial pivoting.
    fn rank_by_elimination(xs: &[Vec<f64>], tol: f64) -> usize {
        let rows = xs.len();
        let cols = xs[0].len();
        let mut a: Vec<Vec<f64>> = xs.to_vec();
        let mut rank = 0;
        for c in 0..cols {
            let mut piv = rank;
            for r in rank..rows {
                if a[r][c].abs() > a[piv][c].abs() {
                    piv = r;
                }
            }
            if rank >= rows || a[piv][c].abs() < tol {
                continue;
            }
            a.swap(rank, piv);
            for r in (rank + 1)..rows {
                let f = a[r][c] / a[rank][c];
                for k in c..cols {
                    a[r][k] -= f * a[rank][k];
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn span_projector_full_rank_random() {
        let mut stream = RandomSource::new(11).stream(NoiseRole::DataGen);
        let xs: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let v = stream.normal_vec(10);
                scale(&v, 1.0 / norm(&v))
            })
            .collect();
        let p = span_projector(&xs, DEFAULT_SPAN_TOL).unwrap();
        assert_eq!(p.rank(), 10);
        assert_eq!(rank_by_elimination(&xs, 1e-10), 10);
        // every input is reproduced by the projector
        for x in &xs {
            let px = p.project(x);
            assert!(norm(&sub(&px, x)) <= DEFAULT_SPAN_TOL);
        }
        // V idempotent
        let v = p.matrix();
        let vd = v.to_dense();
        let mut v2 = SymMatrix::zeros(10);
        for i in 0..10 {
            for j in 0..=i {
                let s: f64 = (0..10).map(|k| vd[i * 10 + k] * vd[k * 10 + j]).sum();
                v2.set(i, j, s);
            }
        }
        assert!(v2.sub_matrix(&v).frob_norm() <= 1e-8);
    }

    #[test]
    fn v_norm_split() {
        let p = span_projector(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 1e-8).unwrap();
        // u in span
        assert!((v_norm(&p, &[0.3, -0.4, 0.0]) - 0.5).abs() < 1e-12);
        // u orthogonal
        assert!(v_norm(&p, &[0.0, 0.0, 2.0]) < 1e-12);
        // mixed: a in span + b orthogonal -> ‖a‖
        assert!((v_norm(&p, &[3.0, 4.0, 7.0]) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn random_source_deterministic() {
        let a = RandomSource::new(99);
        let b = RandomSource::new(99);
        let mut s1 = a.stream(NoiseRole::Gradient);
        let mut s2 = b.stream(NoiseRole::Gradient);
        for _ in 0..10_000 {
            assert_eq!(s1.normal().to_bits(), s2.normal().to_bits());
        }
    }

    #[test]
    fn random_source_streams_independent_of_each_other() {
        let src = RandomSource::new(5);
        let g1: Vec<f64> = src.stream(NoiseRole::Gradient).normal_vec(16);
        // consuming the direction stream does not change gradient draws
        let _ = src.stream(NoiseRole::Direction).normal_vec(1000);
        let g2: Vec<f64> = src.stream(NoiseRole::Gradient).normal_vec(16);
        assert_eq!(g1, g2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn project_ball_nonexpansive(
            a in prop::collection::vec(-10.0f64..10.0, 4),
            b in prop::collection::vec(-10.0f64..10.0, 4),
            radius in 0.1f64..5.0,
        ) {
            let pa = project_ball(&a, &[0.0; 4], radius);
            let pb = project_ball(&b, &[0.0; 4], radius);
            prop_assert!(norm(&sub(&pa, &pb)) <= norm(&sub(&a, &b)) + 1e-12);
        }

        #[test]
        fn v_norm_is_a_seminorm(
            seed in 0u64..1000,
            alpha in -3.0f64..3.0,
        ) {
            let src = RandomSource::new(seed);
            let mut stream = src.stream(NoiseRole::DataGen);
            let xs: Vec<Vec<f64>> = (0..3).map(|_| stream.normal_vec(6)).collect();
            let p = span_projector(&xs, DEFAULT_SPAN_TOL).unwrap();
            let u = stream.normal_vec(6);
            let w = stream.normal_vec(6);
            // absolute homogeneity
            let lhs = v_norm(&p, &scale(&u, alpha));
            prop_assert!((lhs - alpha.abs() * v_norm(&p, &u)).abs() < 1e-9);
            // triangle inequality
            prop_assert!(v_norm(&p, &add(&u, &w)) <= v_norm(&p, &u) + v_norm(&p, &w) + 1e-9);
            // dominated by the Euclidean norm
            prop_assert!(v_norm(&p, &u) <= norm(&u) + 1e-9);
        }
    }
}
