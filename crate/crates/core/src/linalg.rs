//! Dense complex linear algebra for small systems.
//!
//! Everything here is sized for desk-scale verification (dimensions up to a
//! few dozen): row-major dense storage, O(n³) algorithms, no blocking.
//!
//! Basis labels exposed by higher layers are 1-based; all indices in this
//! module are 0-based. A joint basis ket `|k⟩|l⟩` of a bipartite space with
//! factor dimensions `(n_first, n_second)` lives at flat index
//! `k * n_second + l`.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

/// Relative tolerance for structural checks (unitarity, hermiticity).
pub const STRUCTURAL_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_OFF_TOL: f64 = 1e-14;

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(
                format!("{} entries for {rows}x{cols}", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(shape_err(format!("rows of length {cols}"), format!("row of length {}", bad.len())));
        }
        Self::new(rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn column_vector(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Entrywise complex conjugate in the computational basis (no transpose).
    pub fn conjugate(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(shape_err(
                format!("{} rows on the right factor", self.cols),
                format!("{} rows", other.rows),
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(shape_err(format!("vector of length {}", self.cols), format!("length {}", v.len())));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `⟨v|M|v⟩` without normalizing `v`.
    pub fn quadratic_form(&self, v: &[Complex64]) -> Result<Complex64> {
        let mv = self.apply(v)?;
        Ok(inner(v, &mv))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(shape_err(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance; `f64::INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).map_or(f64::INFINITY, |d| d.max_abs())
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.sub(other).map_or(f64::INFINITY, |d| d.frobenius_norm())
    }

    /// `max |M - M†|` over entries; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |U†U - I|` over entries; infinite for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let gram = self.adjoint().matmul(self).expect("square");
        gram.max_abs_diff(&Self::identity(self.rows))
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + adj[(i, j)]) * 0.5)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

/// Kronecker product of two vectors.
pub fn tensor_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// `⟨a|b⟩`, antilinear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff_vec(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Eigenvalues sorted ascending, with the matching eigenvectors as the
/// columns of a unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<Complex64> {
        self.eigenvectors.column(i)
    }

    /// `V · diag(λ) · V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = self.dimension();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input is symmetrized to `(A + A†)/2` first. Sweeps continue until the
/// off-diagonal Frobenius mass drops to `1e-14 · ‖A‖_F`, for at most 100 sweeps.
pub fn hermitian_eigendecomposition(a: &ComplexMatrix) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(shape_err("square matrix", format!("{}x{}", a.rows, a.cols)));
    }
    let defect = a.hermiticity_defect();
    if defect > STRUCTURAL_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let n = a.rows;
    let mut m = a.hermitian_part();
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);
    let target = JACOBI_REL_OFF_TOL * m.frobenius_norm();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > target {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Annihilates `m[p][q]` with `G = diag(1, e^{-iφ}) · R(θ)` acting on columns
/// `p, q`, where `φ = arg m[p][q]`: `m ← G† m G`, `v ← v G`.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let b = m[(p, q)];
    let r = b.norm();
    if r == 0.0 {
        return;
    }
    let phase = (b / r).conj();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau.abs() > 1e150 {
        0.5 / tau
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let t = if tau == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = phase * (-s);
    let g_qq = phase * c;

    let n = m.rows;
    for k in 0..n {
        let (akp, akq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = akp * g_pp + akq * g_qp;
        m[(k, q)] = akp * g_pq + akq * g_qq;
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
    for k in 0..n {
        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        m[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
}

/// Standard complex Gaussian: real and imaginary parts independent with variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed `n × n` unitary.
///
/// Columns of a complex Ginibre matrix are orthonormalized by Gram–Schmidt
/// (two passes); the triangular factor's diagonal is then the positive column
/// norm, which fixes the phase ambiguity of the QR factorization.
pub fn haar_random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension {
            dimension: 0,
            reason: "unitary dimension must be at least 1",
        });
    }
    loop {
        let ginibre: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..n).map(|_| complex_gaussian(rng)).collect())
            .collect();
        if let Some(cols) = orthonormalize(ginibre) {
            return Ok(ComplexMatrix::from_fn(n, n, |i, j| cols[j][i]));
        }
    }
}

/// Two-pass classical Gram–Schmidt; `None` if the columns are numerically dependent.
fn orthonormalize(mut cols: Vec<Vec<Complex64>>) -> Option<Vec<Vec<Complex64>>> {
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let col = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let proj = inner(q, col);
                for (c, qi) in col.iter_mut().zip(q) {
                    *c -= proj * qi;
                }
            }
        }
        let nrm = norm(col);
        if nrm < 1e-8 {
            return None;
        }
        for c in col.iter_mut() {
            *c /= nrm;
        }
    }
    Some(cols)
}

/// Uniformly distributed unit vector (normalized complex Gaussian).
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let nrm = norm(&v);
        if nrm > 1e-8 {
            return v.into_iter().map(|z| z / nrm).collect();
        }
    }
}

// Serialized as row-major nested arrays; each entry is `[re, im]` or a bare real.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            let row: Vec<[f64; 2]> = self.row(i).iter().map(|z| [z.re, z.im]).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EntryRepr {
    Real(f64),
    Complex([f64; 2]),
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<EntryRepr>> = Vec::deserialize(deserializer)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|e| match e {
                        EntryRepr::Real(x) => Complex64::new(x, 0.0),
                        EntryRepr::Complex([re, im]) => Complex64::new(re, im),
                    })
                    .collect()
            })
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha20Rng) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
        g.hermitian_part()
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor_product(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_of_basis_vectors() {
        let e1 = ComplexMatrix::column_vector(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let out = tensor_product(&e1, &e1);
        assert_eq!(out.rows(), 4);
        assert_eq!(out.cols(), 1);
        assert_eq!(out.column(0), vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn tensor_block_structure() {
        let a = ComplexMatrix::from_real_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = ComplexMatrix::from_fn(3, 3, |i, j| c((i * 3 + j) as f64, 1.0));
        let out = tensor_product(&a, &b);
        assert_eq!((out.rows(), out.cols()), (6, 6));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(out[(i, j)], b[(i, j)] * 2.0);
                assert_eq!(out[(i, j + 3)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn conjugate_cases() {
        let real = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(real.conjugate(), real);
        let ii = ComplexMatrix::identity(3).scale(c(0.0, 1.0));
        assert_eq!(ii.conjugate(), ComplexMatrix::identity(3).scale(c(0.0, -1.0)));
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let u = haar_random_unitary(4, &mut rng).unwrap();
        assert_eq!(u.conjugate().conjugate(), u);
        assert!(u.conjugate().unitarity_defect() <= 1e-12);
    }

    #[test]
    fn haar_unitarity_and_unitarity_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for n in 1..=8 {
            let u = haar_random_unitary(n, &mut rng).unwrap();
            assert!(u.unitarity_defect() <= 1e-12, "n={n}");
            // Σ_n U_kn (U_ln)* = δ_kl, i.e. U U† = I row-wise.
            for k in 0..n {
                for l in 0..n {
                    let s: Complex64 = (0..n).map(|m| u[(k, m)] * u[(l, m)].conj()).sum();
                    let delta = if k == l { 1.0 } else { 0.0 };
                    assert!((s - delta).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn haar_dimension_one_is_a_phase() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let u = haar_random_unitary(1, &mut rng).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn haar_zero_dimension_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        assert!(matches!(
            haar_random_unitary(0, &mut rng),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn haar_second_moment() {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| haar_random_unitary(4, &mut rng).unwrap()[(0, 0)].norm_sqr())
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        let se = (var / samples.len() as f64).sqrt();
        assert!((mean - 0.25).abs() <= 5.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn eigen_diagonal() {
        let s = hermitian_eigendecomposition(&ComplexMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigen_pauli_x() {
        let x = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = hermitian_eigendecomposition(&x).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() <= 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn eigen_random_residual() {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        for n in [1, 2, 3, 6, 12] {
            let a = random_hermitian(n, &mut rng);
            let s = hermitian_eigendecomposition(&a).unwrap();
            // Residual oracle: direct VΛV† reconstruction.
            let resid = a.frobenius_distance(&s.reconstruct());
            assert!(resid <= 1e-10 * a.frobenius_norm().max(1.0), "n={n} resid={resid}");
            assert!(s.eigenvectors.unitarity_defect() <= 1e-10);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigen_projector_has_binary_spectrum() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let u = haar_random_unitary(5, &mut rng).unwrap();
        let d = ComplexMatrix::from_diagonal(&[1.0, 0.0, 1.0, 0.0, 0.0]);
        let p = &(&u * &d) * &u.adjoint();
        let s = hermitian_eigendecomposition(&p).unwrap();
        for ev in s.eigenvalues {
            assert!(ev.abs() <= 1e-10 || (ev - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn eigen_rejects_bad_input() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eigendecomposition(&rect), Err(Error::ShapeMismatch { .. })));
        let skew = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(hermitian_eigendecomposition(&skew), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigen_degenerate_and_zero() {
        let z = ComplexMatrix::zeros(3, 3);
        assert_eq!(hermitian_eigendecomposition(&z).unwrap().eigenvalues, vec![0.0; 3]);
        let i4 = ComplexMatrix::identity(4).scale(c(2.5, 0.0));
        let s = hermitian_eigendecomposition(&i4).unwrap();
        assert!(s.eigenvalues.iter().all(|&x| (x - 2.5).abs() < 1e-15));
    }

    #[test]
    fn new_rejects_non_finite() {
        let err = ComplexMatrix::new(1, 2, vec![c(0.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn serde_accepts_real_and_complex_entries() {
        let m: ComplexMatrix = serde_json::from_str("[[1, [0, 2]], [[0, -2], 3.5]]").unwrap();
        assert_eq!(m[(0, 1)], c(0.0, 2.0));
        assert_eq!(m[(1, 0)], c(0.0, -2.0));
        assert_eq!(m[(1, 1)], c(3.5, 0.0));
        let back: ComplexMatrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>("[[1, 2], [3]]").is_err());
    }
}
