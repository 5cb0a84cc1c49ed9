//! Dense operator algebra on the composite space qubit ⊗ photon ⊗ phonon.
//!
//! Subsystems are ordered (qubit, photon, phonon) and flattened row-major: the
//! product state |q, n_a, n_b⟩ sits at index `(q * N_a + n_a) * N_b + n_b`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const QUBIT_LEVELS: usize = 3;
pub const QUBIT_SLOT: usize = 0;
pub const PHOTON_SLOT: usize = 1;
pub const PHONON_SLOT: usize = 2;

/// Tolerance on `max|M - M†|` used when an operation requires a Hermitian input.
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDimension(
                "space needs at least one subsystem".into(),
            ));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(format!(
                "subsystem dimension {d} < 2 in {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    /// qubit ⊗ photon ⊗ phonon with the given Fock truncations.
    pub fn tripartite(n_a: usize, n_b: usize) -> Result<Self> {
        Self::new(vec![QUBIT_LEVELS, n_a, n_b])
    }

    /// photon ⊗ phonon, the space of the effective two-mode model.
    pub fn modes(n_a: usize, n_b: usize) -> Result<Self> {
        Self::new(vec![n_a, n_b])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn flat_index(&self, occupation: &[usize]) -> Result<usize> {
        if occupation.len() != self.dims.len() || occupation.iter().zip(&self.dims).any(|(&n, &d)| n >= d) {
            return Err(Error::InvalidOccupation {
                occupation: occupation.to_vec(),
                dims: self.dims.clone(),
            });
        }
        Ok(occupation
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&n, &d)| acc * d + n))
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for (slot, &d) in self.dims.iter().enumerate().rev() {
            occ[slot] = index % d;
            index /= d;
        }
        occ
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join("x"))
    }
}

/// Dense complex matrix, optionally tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<C64>,
    space: Option<HilbertSpace>,
}

impl ComplexMatrix {
    pub fn from_dmatrix(data: DMatrix<C64>) -> Self {
        Self { data, space: None }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_dmatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dmatrix(DMatrix::identity(n, n))
    }

    /// Row-major construction.
    pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_dmatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn column(entries: &[C64]) -> Self {
        Self::from_dmatrix(DMatrix::from_column_slice(entries.len(), 1, entries))
    }

    /// Tag with a space; fails unless the matrix is square with side `total_dim`.
    pub fn with_space(mut self, space: HilbertSpace) -> Result<Self> {
        let d = space.total_dim();
        if self.rows() != d || self.cols() != d {
            return Err(Error::InvalidDimension(format!(
                "{}x{} matrix cannot act on space {space} of dimension {d}",
                self.rows(),
                self.cols()
            )));
        }
        self.space = Some(space);
        Ok(self)
    }

    pub fn space(&self) -> Option<&HilbertSpace> {
        self.space.as_ref()
    }

    pub fn untagged(mut self) -> Self {
        self.space = None;
        self
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[(row, col)] = value;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn dagger(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            space: self.space.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
            space: self.space.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.map(|z| z.conj()),
            space: self.space.clone(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: &self.data * s,
            space: self.space.clone(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    /// Kronecker product `self ⊗ other`; the result is untagged.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_dmatrix(self.data.kronecker(&other.data))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self * other + other * self
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm_one(&self) -> f64 {
        self.data
            .column_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|M - M†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// `(M + M†) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self {
            data: (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0),
            space: self.space.clone(),
        }
    }

    /// `|v⟩⟨w|` for column vectors.
    pub fn outer(v: &Self, w: &Self) -> Self {
        Self::from_dmatrix(&v.data * w.data.adjoint())
    }

    /// Euclidean norm of the entries viewed as one vector.
    pub fn vector_norm(&self) -> f64 {
        self.frobenius_norm()
    }

    /// Column-stacking vectorisation.
    pub fn vectorize(&self) -> Self {
        let n = self.rows() * self.cols();
        Self::from_dmatrix(DMatrix::from_column_slice(n, 1, self.data.as_slice()))
    }

    /// Inverse of [`vectorize`](Self::vectorize) for a `d×d` matrix.
    pub fn unvectorize(v: &Self, d: usize) -> Result<Self> {
        if v.cols() != 1 || v.rows() != d * d {
            return Err(Error::InvalidDimension(format!(
                "cannot reshape {}x{} into {d}x{d}",
                v.rows(),
                v.cols()
            )));
        }
        Ok(Self::from_dmatrix(DMatrix::from_column_slice(
            d,
            d,
            v.data.as_slice(),
        )))
    }
}

fn merged_space(a: &ComplexMatrix, b: &ComplexMatrix) -> Option<HilbertSpace> {
    match (&a.space, &b.space) {
        (Some(x), Some(y)) if x == y => Some(x.clone()),
        (Some(x), None) | (None, Some(x)) if a.is_square() && b.is_square() && a.rows() == b.rows() => {
            Some(x.clone())
        }
        _ => None,
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data + &rhs.data,
            space: merged_space(self, rhs),
        }
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self + &rhs
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.data += &rhs.data;
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data - &rhs.data,
            space: merged_space(self, rhs),
        }
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self - &rhs
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data * &rhs.data,
            space: merged_space(self, rhs),
        }
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix {
            data: -&self.data,
            space: self.space.clone(),
        }
    }
}

/// Bosonic lowering operator truncated to `n` Fock levels.
pub fn annihilation(n: usize) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("Fock truncation {n} < 2")));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// `a†a` on `n` Fock levels, built as the exact diagonal `(0, 1, …, n−1)`.
pub fn number(n: usize) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("Fock truncation {n} < 2")));
    }
    let diag: Vec<f64> = (0..n).map(|k| k as f64).collect();
    Ok(ComplexMatrix::from_real_diagonal(&diag))
}

fn check_levels(l: usize, k: usize) -> Result<()> {
    if l >= k || k >= QUBIT_LEVELS {
        return Err(Error::InvalidLevel { l, k });
    }
    Ok(())
}

/// Qubit lowering operator `σ_{l,k} = |l⟩⟨k|`, `l < k`.
pub fn qubit_transition(l: usize, k: usize) -> Result<ComplexMatrix> {
    check_levels(l, k)?;
    let mut m = ComplexMatrix::zeros(QUBIT_LEVELS, QUBIT_LEVELS);
    m.set(l, k, C64::new(1.0, 0.0));
    Ok(m)
}

/// `σᶻ_{l,k} = |k⟩⟨k| - |l⟩⟨l|`, `l < k`.
pub fn qubit_z(l: usize, k: usize) -> Result<ComplexMatrix> {
    check_levels(l, k)?;
    let mut diag = [0.0; QUBIT_LEVELS];
    diag[k] = 1.0;
    diag[l] = -1.0;
    Ok(ComplexMatrix::from_real_diagonal(&diag))
}

/// Qubit projector `|k⟩⟨k|`.
pub fn qubit_projector(k: usize) -> Result<ComplexMatrix> {
    if k >= QUBIT_LEVELS {
        return Err(Error::InvalidLevel { l: k, k });
    }
    let mut m = ComplexMatrix::zeros(QUBIT_LEVELS, QUBIT_LEVELS);
    m.set(k, k, C64::new(1.0, 0.0));
    Ok(m)
}

/// Lift a single-subsystem operator to the full space by identity padding.
pub fn embed(op: &ComplexMatrix, slot: usize, space: &HilbertSpace) -> Result<ComplexMatrix> {
    let dims = space.dims();
    if slot >= dims.len() {
        return Err(Error::InvalidDimension(format!(
            "slot {slot} out of range for space {space}"
        )));
    }
    if op.rows() != dims[slot] || op.cols() != dims[slot] {
        return Err(Error::InvalidDimension(format!(
            "{}x{} operator does not fit slot {slot} of dimension {}",
            op.rows(),
            op.cols(),
            dims[slot]
        )));
    }
    let left: usize = dims[..slot].iter().product();
    let right: usize = dims[slot + 1..].iter().product();
    let lifted = ComplexMatrix::identity(left)
        .kron(&op.clone().untagged())
        .kron(&ComplexMatrix::identity(right));
    lifted.with_space(space.clone())
}

/// Column vector for the product state `|occupation⟩`.
pub fn basis_state(space: &HilbertSpace, occupation: &[usize]) -> Result<ComplexMatrix> {
    let idx = space.flat_index(occupation)?;
    let mut v = ComplexMatrix::zeros(space.total_dim(), 1);
    v.set(idx, 0, C64::new(1.0, 0.0));
    Ok(v)
}

/// Density matrix `|occupation⟩⟨occupation|`, tagged with `space`.
pub fn basis_density(space: &HilbertSpace, occupation: &[usize]) -> Result<ComplexMatrix> {
    let v = basis_state(space, occupation)?;
    ComplexMatrix::outer(&v, &v).with_space(space.clone())
}

/// Reduced state on the `keep` slots (returned in ascending slot order).
///
/// Keeping nothing yields the 1×1 matrix `[Tr ρ]`.
pub fn partial_trace(rho: &ComplexMatrix, keep: &[usize], space: &HilbertSpace) -> Result<ComplexMatrix> {
    let tagged = rho.space().ok_or(Error::MissingSpace)?;
    if tagged != space {
        return Err(Error::InvalidDimension(format!(
            "rho tagged with {tagged}, asked to trace over {space}"
        )));
    }
    let n_sub = space.num_subsystems();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&s| s >= n_sub) {
        return Err(Error::InvalidDimension(format!(
            "keep slots {keep:?} out of range for {space}"
        )));
    }
    let dims = space.dims();
    let kept_dims: Vec<usize> = keep.iter().map(|&s| dims[s]).collect();
    let kept_dim: usize = kept_dims.iter().product();

    let kept_index = |occ: &[usize]| -> usize {
        keep.iter()
            .zip(&kept_dims)
            .fold(0, |acc, (&s, &d)| acc * d + occ[s])
    };
    let traced_match =
        |a: &[usize], b: &[usize]| -> bool { (0..n_sub).all(|s| keep.contains(&s) || a[s] == b[s]) };

    let d = space.total_dim();
    let occs: Vec<Vec<usize>> = (0..d).map(|i| space.occupation(i)).collect();
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for i in 0..d {
        for j in 0..d {
            if traced_match(&occs[i], &occs[j]) {
                let (r, c) = (kept_index(&occs[i]), kept_index(&occs[j]));
                let v = out.get(r, c) + rho.get(i, j);
                out.set(r, c, v);
            }
        }
    }
    if keep.is_empty() {
        return Ok(out);
    }
    out.with_space(HilbertSpace::new(kept_dims)?)
}

/// `Tr(op·ρ)` for Hermitian `op`; errors if the imaginary part exceeds 1e-10.
pub fn expectation(op: &ComplexMatrix, rho: &ComplexMatrix) -> Result<f64> {
    if op.cols() != rho.rows() || op.rows() != rho.cols() {
        return Err(Error::InvalidDimension(format!(
            "expectation of {}x{} operator in {}x{} state",
            op.rows(),
            op.cols(),
            rho.rows(),
            rho.cols()
        )));
    }
    // Tr(AB) = Σ_ij A_ij B_ji without forming the product.
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..op.rows() {
        for j in 0..op.cols() {
            tr += op.get(i, j) * rho.get(j, i);
        }
    }
    if tr.im.abs() > 1e-10 {
        return Err(Error::HermiticityViolation(format!(
            "expectation has imaginary part {:e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidDimension("eigenvalues of non-square matrix".into()));
    }
    let scale = m.max_abs().max(1.0);
    let residual = m.hermiticity_residual();
    if residual > HERMITICITY_TOL * scale {
        return Err(Error::HermiticityViolation(format!("max|M - M†| = {residual:e}")));
    }
    // nalgebra's complex Hermitian solver returns NaN on some block-sparse
    // density matrices; the real symmetric embedding [[Re, -Im], [Im, Re]] is
    // robust and carries every eigenvalue of H exactly twice.
    let h = m.hermitian_part().into_dmatrix();
    let n = h.nrows();
    let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut vals: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(vals.into_iter().step_by(2).collect())
}

pub fn min_eigenvalue_hermitian(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues_hermitian(m)?[0])
}

// Degree-13 Padé coefficients b_0..b_13 (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a [13/13] Padé kernel.
pub fn matrix_exponential(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::InvalidDimension("exponential of non-square matrix".into()));
    }
    let n = m.rows();
    let a = m.as_dmatrix();
    let norm = m.norm_one();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * C64::new(2f64.powi(-squarings), 0.0);

    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| C64::new(PADE13[i], 0.0);

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (u_inner + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let v_inner = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = v_inner + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidDimension("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    let mut out = ComplexMatrix::from_dmatrix(r);
    out.space = m.space.clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn space322() -> HilbertSpace {
        HilbertSpace::tripartite(2, 2).unwrap()
    }

    #[test]
    fn space_rejects_small_dims() {
        assert!(HilbertSpace::new(vec![3, 1]).is_err());
        assert!(HilbertSpace::new(vec![]).is_err());
        assert_eq!(space322().total_dim(), 12);
    }

    #[test]
    fn annihilation_small_cases() {
        let a2 = annihilation(2).unwrap();
        assert_eq!(
            a2,
            ComplexMatrix::from_rows(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)])
        );

        let a3 = annihilation(3).unwrap();
        assert_eq!(a3.get(0, 1), c(1.0));
        assert_eq!(a3.get(1, 2), c(2f64.sqrt()));
        let nonzero = a3.as_dmatrix().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);

        let n = &a3.dagger() * &a3;
        assert!((&n - &number(3).unwrap()).max_abs() < 1e-15);
        assert_eq!(
            number(3).unwrap(),
            ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 2.0])
        );
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn truncated_commutator_is_identity_below_cutoff() {
        for n in 2..7 {
            let a = annihilation(n).unwrap();
            let comm = a.commutator(&a.dagger());
            for i in 0..n {
                for j in 0..n {
                    let expected = if i != j {
                        0.0
                    } else if i == n - 1 {
                        1.0 - n as f64
                    } else {
                        1.0
                    };
                    assert!((comm.get(i, j) - c(expected)).norm() < 1e-14, "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn qubit_operators() {
        let s02 = qubit_transition(0, 2).unwrap();
        assert_eq!(s02.get(0, 2), c(1.0));
        assert_eq!(s02.max_abs(), 1.0);
        assert_eq!(s02.frobenius_norm(), 1.0);
        assert_eq!(qubit_transition(1, 2).unwrap().get(1, 2), c(1.0));
        assert_eq!(qubit_transition(0, 1).unwrap().dagger().get(1, 0), c(1.0));

        assert_eq!(
            qubit_z(0, 1).unwrap(),
            ComplexMatrix::from_real_diagonal(&[-1.0, 1.0, 0.0])
        );
        assert_eq!(
            qubit_z(0, 2).unwrap(),
            ComplexMatrix::from_real_diagonal(&[-1.0, 0.0, 1.0])
        );
        for (l, k) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(qubit_z(l, k).unwrap().trace(), c(0.0));
        }

        for (l, k) in [(1, 0), (2, 2), (0, 3)] {
            assert!(matches!(qubit_transition(l, k), Err(Error::InvalidLevel { .. })));
            assert!(matches!(qubit_z(l, k), Err(Error::InvalidLevel { .. })));
        }
    }

    #[test]
    fn embed_cases() {
        let s = space322();
        let id = embed(&ComplexMatrix::identity(3), 0, &s).unwrap();
        assert_eq!(id.clone().untagged(), ComplexMatrix::identity(12));
        assert_eq!(id.space(), Some(&s));

        let a = embed(&annihilation(2).unwrap(), PHOTON_SLOT, &s).unwrap();
        let v = basis_state(&s, &[0, 1, 0]).unwrap();
        let lowered = &a * &v;
        assert_eq!(lowered, basis_state(&s, &[0, 0, 0]).unwrap());

        let b = embed(&annihilation(2).unwrap(), PHONON_SLOT, &s).unwrap();
        let ad = a.dagger();
        assert_eq!(&ad * &b, &b * &ad);

        assert!(embed(&annihilation(3).unwrap(), 1, &s).is_err());
        assert!(embed(&ComplexMatrix::identity(3), 3, &s).is_err());
    }

    #[test]
    fn basis_state_flattening() {
        let s = space322();
        let v = basis_state(&s, &[0, 1, 0]).unwrap();
        assert_eq!(v.get(2, 0), c(1.0));
        assert_eq!(v.vector_norm(), 1.0);
        for idx in 0..12 {
            let occ = s.occupation(idx);
            assert_eq!(s.flat_index(&occ).unwrap(), idx);
            let occ_expected = [idx / 4, (idx / 2) % 2, idx % 2];
            assert_eq!(occ, occ_expected);
        }
        let rho = basis_density(&s, &[2, 1, 1]).unwrap();
        assert_eq!(rho.trace(), c(1.0));
        assert!(matches!(
            basis_state(&s, &[3, 0, 0]),
            Err(Error::InvalidOccupation { .. })
        ));
        assert!(matches!(
            basis_state(&s, &[0, 0]),
            Err(Error::InvalidOccupation { .. })
        ));
    }

    #[test]
    fn partial_trace_cases() {
        let s = space322();
        let rho = basis_density(&s, &[0, 1, 0]).unwrap();

        let all = partial_trace(&rho, &[], &s).unwrap();
        assert_eq!((all.rows(), all.cols()), (1, 1));
        assert!((all.get(0, 0) - c(1.0)).norm() < 1e-12);

        let photon = partial_trace(&rho, &[PHOTON_SLOT], &s).unwrap();
        assert_eq!(photon.untagged(), ComplexMatrix::from_real_diagonal(&[0.0, 1.0]));

        // product state factorisation
        let rq = ComplexMatrix::from_real_diagonal(&[0.5, 0.3, 0.2]);
        let ra = ComplexMatrix::from_rows(2, 2, &[c(0.6), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.4)]);
        let rb = ComplexMatrix::from_rows(2, 2, &[c(0.9), C64::new(0.0, 0.05), C64::new(0.0, -0.05), c(0.1)]);
        let full = rq.kron(&ra).kron(&rb).with_space(s.clone()).unwrap();
        let modes = partial_trace(&full, &[1, 2], &s).unwrap();
        let expected = ra.kron(&rb);
        assert!((&modes.untagged() - &expected).max_abs() < 1e-15);
        let q = partial_trace(&full, &[0], &s).unwrap();
        assert!((&q.untagged() - &rq).max_abs() < 1e-15);

        assert!(matches!(
            partial_trace(&rho.untagged(), &[0], &s),
            Err(Error::MissingSpace)
        ));
    }

    #[test]
    fn expectation_cases() {
        let s = space322();
        let rho = basis_density(&s, &[0, 1, 0]).unwrap();
        let id = ComplexMatrix::identity(12);
        assert!((expectation(&id, &rho).unwrap() - 1.0).abs() < 1e-15);

        let n = embed(&number(2).unwrap(), PHOTON_SLOT, &s).unwrap();
        assert_eq!(expectation(&n, &rho).unwrap(), 1.0);

        let z = embed(&qubit_z(0, 1).unwrap(), QUBIT_SLOT, &s).unwrap();
        assert_eq!(expectation(&z, &rho).unwrap(), -1.0);

        let mut skew = ComplexMatrix::zeros(12, 12);
        skew.set(2, 2, C64::new(0.0, 1.0));
        assert!(matches!(
            expectation(&skew, &rho),
            Err(Error::HermiticityViolation(_))
        ));
    }

    #[test]
    fn eigenvalue_cases() {
        let m = ComplexMatrix::from_real_diagonal(&[0.7, 0.3]);
        assert!((min_eigenvalue_hermitian(&m).unwrap() - 0.3).abs() < 1e-14);
        assert!((min_eigenvalue_hermitian(&ComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);

        // σ_y-like: eigenvalues ±1
        let y = ComplexMatrix::from_rows(2, 2, &[c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)]);
        let vals = eigenvalues_hermitian(&y).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);

        // complex spectrum: [[2, 1-i], [1+i, 3]] has eigenvalues 1 and 4
        let m = ComplexMatrix::from_rows(2, 2, &[c(2.0), C64::new(1.0, -1.0), C64::new(1.0, 1.0), c(3.0)]);
        let vals = eigenvalues_hermitian(&m).unwrap();
        assert_eq!(vals.len(), 2);
        assert!((vals[0] - 1.0).abs() < 1e-13 && (vals[1] - 4.0).abs() < 1e-13);

        let bad = ComplexMatrix::from_rows(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(
            min_eigenvalue_hermitian(&bad),
            Err(Error::HermiticityViolation(_))
        ));
    }

    #[test]
    fn exponential_cases() {
        let z = matrix_exponential(&ComplexMatrix::zeros(4, 4)).unwrap();
        assert_eq!(z, ComplexMatrix::identity(4));

        let d = [0.5, -1.0, 2.0, 3.5];
        let e = matrix_exponential(&ComplexMatrix::from_real_diagonal(&d)).unwrap();
        for (i, &x) in d.iter().enumerate() {
            assert!((e.get(i, i) - c(x.exp())).norm() <= 1e-13 * x.exp());
        }

        let x = ComplexMatrix::from_rows(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        for theta in [0.1, 1.0, 7.3, 250.0] {
            let u = matrix_exponential(&x.scale(C64::new(0.0, theta))).unwrap();
            let expected =
                ComplexMatrix::identity(2).scale_real(theta.cos()) + x.scale(C64::new(0.0, theta.sin()));
            assert!(
                (&u - &expected).max_abs() < 1e-10 * theta.max(1.0),
                "theta={theta}"
            );
        }
    }

    #[test]
    fn exponential_inverse_composition() {
        let a = ComplexMatrix::from_fn(6, 6, |i, j| {
            C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0)
        })
        .scale_real(0.5);
        let prod = &matrix_exponential(&a).unwrap() * &matrix_exponential(&(-&a)).unwrap();
        assert!((&prod - &ComplexMatrix::identity(6)).max_abs() < 1e-9);
    }
}
