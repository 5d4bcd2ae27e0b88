//! Dense helpers shared by the matrix modules.
//!
//! Matrices are stored as nalgebra `DMatrix`; the cubic kernels (products,
//! inverses, SVD, symmetric eigenproblems) run on faer. Kernel results are
//! flushed to zero far below round-off so subnormals never reach later
//! products.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn to_faer<T: Copy + nalgebra::Scalar>(m: &DMatrix<T>) -> Mat<T>
where
    T: faer::traits::ComplexField,
{
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Relative magnitude below which kernel outputs are stored as zero.
const TINY: f64 = 1e-150;

trait Flush: Copy {
    fn magnitude(self) -> f64;
    fn zero() -> Self;
}

impl Flush for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn zero() -> Self {
        0.0
    }
}

impl Flush for Complex64 {
    fn magnitude(self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn zero() -> Self {
        ZERO
    }
}

fn from_faer<T: Flush + nalgebra::Scalar>(m: MatRef<'_, T>) -> DMatrix<T> {
    let mut top: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            top = top.max(m[(i, j)].magnitude());
        }
    }
    let floor = TINY * top;
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        if z.magnitude() < floor {
            T::zero()
        } else {
            z
        }
    })
}

/// `a · b`
pub fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "dimension mismatch in product");
    if a.is_empty() || b.is_empty() {
        return a * b;
    }
    let p = to_faer(a) * to_faer(b);
    from_faer(p.as_ref())
}

/// `a · b · c`
pub fn mul3(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> CMatrix {
    mul(&mul(a, b), c)
}

/// Inverse by LU with partial pivoting; `None` when the result is not finite.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    assert_eq!(m.nrows(), m.ncols(), "inverse of a non-square matrix");
    let inv = to_faer(m).partial_piv_lu().inverse();
    let inv = from_faer(inv.as_ref());
    inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(inv)
}

/// `m = U · diag(s) · V†` with `s` nonincreasing.
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Option<Svd> {
    let f = to_faer(m).svd().ok()?;
    Some(Svd {
        u: from_faer(f.U()),
        s: f.S().column_vector().iter().map(|z| z.re).collect(),
        v: from_faer(f.V()),
    })
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match to_faer(m).singular_values() {
        Ok(s) => s.into_iter().fold(0.0, f64::max),
        Err(_) => m.clone().singular_values().iter().cloned().fold(0.0, f64::max),
    }
}

/// Eigenpairs of a real symmetric matrix, eigenvalues nondecreasing.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let e = to_faer(m).self_adjoint_eigen(Side::Lower).ok()?;
    let vals = e.S().column_vector().iter().copied().collect();
    Some((vals, from_faer(e.U())))
}

/// Eigenpairs of a Hermitian matrix, eigenvalues nondecreasing.
pub fn hermitian_eigen(m: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    let e = to_faer(m).self_adjoint_eigen(Side::Lower).ok()?;
    let vals = e.S().column_vector().iter().map(|z| z.re).collect();
    Some((vals, from_faer(e.U())))
}

/// `diag(left) · m · diag(right)` for real diagonal factors.
pub fn scale_rows_cols(m: &CMatrix, left: &[f64], right: &[f64]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (left[i] * right[j]))
}

pub fn add_identity(mut m: CMatrix) -> CMatrix {
    for i in 0..m.nrows().min(m.ncols()) {
        m[(i, i)] += ONE;
    }
    m
}

/// `‖U†U − I‖_max`
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let g = mul(&u.adjoint(), u);
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn symmetry_defect(m: &CMatrix) -> f64 {
    (m - m.transpose()).norm()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}
