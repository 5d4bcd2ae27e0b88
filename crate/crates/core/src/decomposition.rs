//! Autonne-Takagi factorization and the Bloch-Messiah decomposition of a
//! multimode Bogoliubov map into independent single-mode squeezers.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::FrequencyGrid;
use crate::linalg::{hermitian_eigen, mul, svd, symmetric_eigen, CMatrix};
use crate::system::{BogoliubovBlocks, ScatteringMatrix};

/// Neighbouring singular values of `B` closer than this, relative to their
/// size, form one degenerate group.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// Squeezing amplitudes below this are reported as exactly zero.
pub const XI_FLOOR: f64 = 1e-12;

/// Default gate on the symplectic and reconstruction residuals.
pub const DEFAULT_GATE: f64 = 1e-6;

/// `sym = U · diag(values) · Uᵀ` with `values` real, nonnegative, descending.
#[derive(Debug, Clone)]
pub struct Takagi {
    pub u: CMatrix,
    pub values: Vec<f64>,
}

impl Takagi {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.u.nrows();
        let scaled = CMatrix::from_fn(n, n, |i, k| self.u[(i, k)] * self.values[k]);
        mul(&scaled, &self.u.transpose())
    }
}

/// Takagi factorization of a complex symmetric matrix.
///
/// Uses the real symmetric embedding `[[Re, Im], [Im, −Re]]`, whose
/// eigenpairs `(σ, (p; q))` with `σ > 0` give con-eigenvectors `p + iq`
/// satisfying `sym · conj(u) = σ u`. Null directions are completed by an
/// orthonormal complement.
pub fn takagi(sym: &CMatrix) -> Result<Takagi> {
    let n = sym.nrows();
    if sym.ncols() != n {
        return Err(invalid("takagi expects a square matrix"));
    }
    let scale = sym.norm();
    let defect = (sym - sym.transpose()).norm();
    if defect > 1e-10 * scale {
        return Err(invalid(format!(
            "takagi expects a symmetric matrix (defect {defect:.3e} vs norm {scale:.3e})"
        )));
    }
    if n == 0 {
        return Ok(Takagi { u: CMatrix::zeros(0, 0), values: vec![] });
    }
    if scale == 0.0 {
        return Ok(Takagi { u: CMatrix::identity(n, n), values: vec![0.0; n] });
    }
    let sym = (sym + sym.transpose()) * Complex64::new(0.5, 0.0);

    let embed = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        let z = sym[(ii, jj)];
        match (bi, bj) {
            (0, 0) => z.re,
            (1, 1) => -z.re,
            _ => z.im,
        }
    });
    let (eigenvalues, eigenvectors) =
        symmetric_eigen(&embed).ok_or_else(|| invalid("symmetric eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));

    let top = eigenvalues[order[0]].abs().max(f64::MIN_POSITIVE);
    let cutoff = top * 1e-13 * (2 * n) as f64;
    let mut columns: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for &idx in order.iter().take(n) {
        let lambda = eigenvalues[idx];
        if lambda <= cutoff {
            break;
        }
        let v = eigenvectors.column(idx);
        columns.push(nalgebra::DVector::from_fn(n, |i, _| Complex64::new(v[i], v[n + i])));
        values.push(lambda);
    }
    complete_orthonormal(&mut columns, n)?;
    values.resize(n, 0.0);

    let mut u = CMatrix::from_columns(&columns);
    for k in 0..n {
        fix_column_phase_takagi(&mut u, k);
    }
    Ok(Takagi { u, values })
}

/// Extends orthonormal columns to a basis of ℂⁿ with the dominant
/// eigenvectors of the complementary projector.
fn complete_orthonormal(columns: &mut Vec<nalgebra::DVector<Complex64>>, n: usize) -> Result<()> {
    let k = columns.len();
    if k >= n {
        return Ok(());
    }
    let mut proj = CMatrix::identity(n, n);
    if k > 0 {
        let c = CMatrix::from_columns(columns);
        proj -= mul(&c, &c.adjoint());
    }
    let proj = (&proj + proj.adjoint()) * Complex64::new(0.5, 0.0);
    let (_, vecs) =
        hermitian_eigen(&proj).ok_or_else(|| invalid("projector eigensolver did not converge"))?;
    // eigenvalues ascend, the complement sits at the top
    for idx in (k..n).rev() {
        columns.push(vecs.column(idx).into_owned());
    }
    Ok(())
}

/// Takagi vectors are defined up to a sign; make the largest entry have
/// positive real part.
fn fix_column_phase_takagi(u: &mut CMatrix, k: usize) {
    let (imax, _) = u
        .column(k)
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    if u[(imax, k)].re < 0.0 {
        let mut col = u.column_mut(k);
        col.neg_mut();
    }
}

/// Unit-normalized spectral mode, `step · Σ |f|² = 1`.
#[derive(Debug, Clone)]
pub struct ModeShape {
    grid: FrequencyGrid,
    amplitude: Vec<Complex64>,
}

impl ModeShape {
    /// Rejects profiles that are not normalized to `1e-8`.
    pub fn new(grid: FrequencyGrid, amplitude: Vec<Complex64>) -> Result<Self> {
        if amplitude.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "mode has {} samples for a {}-point grid",
                amplitude.len(),
                grid.n_points()
            )));
        }
        let norm = grid.step() * amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(invalid(format!("mode is not unit-normalized (step·Σ|f|² = {norm})")));
        }
        Ok(ModeShape { grid, amplitude })
    }

    /// Rescales an arbitrary nonzero profile to unit norm.
    pub fn normalized(grid: FrequencyGrid, amplitude: Vec<Complex64>) -> Result<Self> {
        let norm = (grid.step() * amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>()).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("cannot normalize a zero or non-finite profile"));
        }
        let amplitude = amplitude.into_iter().map(|a| a / norm).collect();
        Self::new(grid, amplitude)
    }

    /// From a unit vector of discrete mode coefficients (`Σ|c|² = 1`).
    pub fn from_unit_vector(grid: FrequencyGrid, coeffs: &[Complex64]) -> Result<Self> {
        let s = grid.step().sqrt();
        Self::normalized(grid, coeffs.iter().map(|c| c / s).collect())
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    /// Coefficients on the unit-commutator discrete modes, `√step · f`.
    pub fn unit_vector(&self) -> Vec<Complex64> {
        let s = self.grid.step().sqrt();
        self.amplitude.iter().map(|a| a * s).collect()
    }

    pub fn norm(&self) -> f64 {
        self.grid.step() * self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// Intensity-weighted mean detuning.
    pub fn center(&self) -> f64 {
        let pts = self.grid.points();
        self.grid.step()
            * pts
                .iter()
                .zip(&self.amplitude)
                .map(|(nu, a)| nu * a.norm_sqr())
                .sum::<f64>()
    }
}

/// Output of [`bloch_messiah`]: `A = P ch Q†`, `B = P e^{iθ} sh Qᵀ`.
#[derive(Debug, Clone)]
pub struct SqueezingDecomposition {
    pub xi: Vec<f64>,
    pub theta: Vec<f64>,
    pub q_unitary: CMatrix,
    pub p_unitary: CMatrix,
    pub reconstruction_residual: f64,
}

impl SqueezingDecomposition {
    pub fn n(&self) -> usize {
        self.xi.len()
    }

    /// Reassembles the Bogoliubov blocks from the factors.
    pub fn reconstruct(&self) -> BogoliubovBlocks {
        let n = self.n();
        let p = &self.p_unitary;
        let q = &self.q_unitary;
        let pc = CMatrix::from_fn(n, n, |i, k| p[(i, k)] * self.xi[k].cosh());
        let ps = CMatrix::from_fn(n, n, |i, k| {
            p[(i, k)] * Complex64::from_polar(self.xi[k].sinh(), self.theta[k])
        });
        BogoliubovBlocks {
            a: mul(&pc, &q.adjoint()),
            b: mul(&ps, &q.transpose()),
        }
    }

    /// True when every squeezing amplitude is zero (passive map).
    pub fn is_passive(&self) -> bool {
        self.xi.iter().all(|&x| x == 0.0)
    }
}

/// Minimum |Σ q_i²| for the squared-sum phase gauge.
const SQUARE_GAUGE_FLOOR: f64 = 1e-3;

/// A degenerate group needs a Takagi rotation only if `C` is visibly
/// non-diagonal there.
fn needs_rotation(c: &CMatrix, start: usize, m: usize, top: f64) -> bool {
    let floor = 1e-13 * top.max(1.0);
    (start..start + m).any(|i| (start..start + m).any(|j| i != j && c[(i, j)].norm() > floor))
}

/// Bloch-Messiah decomposition of a gated scattering core.
pub fn bloch_messiah(core: &ScatteringMatrix, gate: f64) -> Result<SqueezingDecomposition> {
    let residual = core.symplectic_residual();
    if !(residual <= gate) {
        return Err(Error::DecompositionUnreliable { residual, gate });
    }
    bloch_messiah_blocks(core.core(), core.detunings(), gate)
}

/// Bloch-Messiah decomposition of raw blocks. `labels` (one per basis mode,
/// e.g. detunings) break ties between equal squeezing amplitudes.
pub fn bloch_messiah_blocks(
    blocks: &BogoliubovBlocks,
    labels: &[f64],
    gate: f64,
) -> Result<SqueezingDecomposition> {
    let n = blocks.n();
    if labels.len() != n || blocks.b.nrows() != n || blocks.b.ncols() != n {
        return Err(invalid("block and label dimensions disagree"));
    }
    // Left singular vectors of B are the output modes and resolve even tiny
    // squeezing; the input modes follow from A = P ch Q†.
    let f = svd(&blocks.b).ok_or_else(|| invalid("SVD did not converge"))?;
    let sh = f.s;
    let mut p = f.u;
    let inv_ch: Vec<f64> = sh.iter().map(|s| 1.0 / s.hypot(1.0)).collect();
    let mut q = mul(&blocks.a.adjoint(), &p);
    for k in 0..n {
        q.column_mut(k).scale_mut(inv_ch[k]);
    }

    // Within degenerate groups the SVD leaves a common unitary free; fix it by
    // Takagi-diagonalizing the corresponding block of C = P† B Q*.
    let c = mul(&mul(&p.adjoint(), &blocks.b), &q.map(|z| z.conj()));
    let top = sh.first().copied().unwrap_or(0.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sh[end - 1] - sh[end] <= DEGENERACY_TOLERANCE * sh[end - 1] {
            end += 1;
        }
        let m = end - start;
        if m > 1 && needs_rotation(&c, start, m, top) {
            let sub = c.view((start, start), (m, m)).into_owned();
            let sub = (&sub + sub.transpose()) * Complex64::new(0.5, 0.0);
            let tk = takagi(&sub)?;
            let pg = mul(&p.columns(start, m).into_owned(), &tk.u);
            let qg = mul(&q.columns(start, m).into_owned(), &tk.u);
            p.columns_mut(start, m).copy_from(&pg);
            q.columns_mut(start, m).copy_from(&qg);
        }
        start = end;
    }

    // Gauge: Σ q_i² real positive when it is well defined, else the largest
    // entry real. The first rule ignores the ties that symmetric spectra
    // create between mirror-image entries.
    for k in 0..n {
        let square: Complex64 = q.column(k).iter().map(|z| z * z).sum();
        let (imax, _) = q
            .column(k)
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
        let mut phase = if square.norm() > SQUARE_GAUGE_FLOOR {
            Complex64::from_polar(1.0, -0.5 * square.arg())
        } else {
            Complex64::from_polar(1.0, -q[(imax, k)].arg())
        };
        if (q[(imax, k)] * phase).re < 0.0 {
            phase = -phase;
        }
        for i in 0..n {
            q[(i, k)] *= phase;
            p[(i, k)] *= phase;
        }
    }

    let c = mul(&mul(&p.adjoint(), &blocks.b), &q.map(|z| z.conj()));
    let mut xi = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    // Magnitudes from the singular values, phases from the rotated diagonal.
    for k in 0..n {
        let ckk = c[(k, k)];
        let x = sh[k].asinh();
        if x < XI_FLOOR {
            xi.push(0.0);
            theta.push(0.0);
        } else {
            xi.push(x);
            theta.push(ckk.arg().rem_euclid(TAU));
        }
    }

    // Order: ξ descending; runs of equal ξ by ascending mode center.
    let centers: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|i| labels[i] * q[(i, k)].norm_sqr()).sum())
        .collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xi[b].total_cmp(&xi[a]));
    let mut s = 0;
    while s < n {
        let mut e = s + 1;
        while e < n && xi[idx[e - 1]] - xi[idx[e]] <= DEGENERACY_TOLERANCE * xi[idx[e - 1]] {
            e += 1;
        }
        idx[s..e].sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
        s = e;
    }

    let dec = SqueezingDecomposition {
        xi: idx.iter().map(|&k| xi[k]).collect(),
        theta: idx.iter().map(|&k| theta[k]).collect(),
        q_unitary: CMatrix::from_fn(n, n, |i, k| q[(i, idx[k])]),
        p_unitary: CMatrix::from_fn(n, n, |i, k| p[(i, idx[k])]),
        reconstruction_residual: 0.0,
    };
    let rebuilt = dec.reconstruct();
    let num = ((&rebuilt.a - &blocks.a).norm_squared() + (&rebuilt.b - &blocks.b).norm_squared()).sqrt();
    let den = (blocks.a.norm_squared() + blocks.b.norm_squared()).sqrt();
    let residual = num / den.max(f64::MIN_POSITIVE);
    if !(residual <= gate) {
        return Err(Error::DecompositionUnreliable { residual, gate });
    }
    Ok(SqueezingDecomposition {
        reconstruction_residual: residual,
        ..dec
    })
}

/// The k-th input (column of Q) and output (column of P) characteristic modes.
pub fn characteristic_modes(
    dec: &SqueezingDecomposition,
    k: usize,
    grid: &FrequencyGrid,
) -> Result<(ModeShape, ModeShape)> {
    let n = dec.n();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, len: n });
    }
    if grid.n_points() != n {
        return Err(Error::GridMismatch(format!(
            "decomposition has {n} modes, grid has {} points",
            grid.n_points()
        )));
    }
    let qk: Vec<Complex64> = dec.q_unitary.column(k).iter().cloned().collect();
    let pk: Vec<Complex64> = dec.p_unitary.column(k).iter().cloned().collect();
    Ok((
        ModeShape::from_unit_vector(*grid, &qk)?,
        ModeShape::from_unit_vector(*grid, &pk)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::linalg::unitarity_defect;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn takagi_of_diagonal() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0)]));
        let t = takagi(&m).unwrap();
        assert!((t.values[0] - 3.0).abs() < 1e-14 && (t.values[1] - 1.0).abs() < 1e-14);
        assert!((t.u.map(|z| z.norm()) - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
        assert!((t.reconstruct() - m).camax() < 1e-14);
    }

    #[test]
    fn takagi_of_swap_kernel_is_degenerate() {
        let cc = 0.7;
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, c(cc, 0.0), c(cc, 0.0), ZERO]);
        let t = takagi(&m).unwrap();
        assert!((t.values[0] - cc).abs() < 1e-14 && (t.values[1] - cc).abs() < 1e-14);
        assert!((t.reconstruct() - &m).camax() < 1e-14);
        assert!(unitarity_defect(&t.u) < 1e-14);
    }

    #[test]
    fn takagi_handles_rank_deficiency() {
        let u = nalgebra::DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), ZERO]);
        let m = &u * u.transpose() * c(0.0, 2.0);
        let t = takagi(&m).unwrap();
        assert!((t.values[0] - 2.0).abs() < 1e-13);
        assert!(t.values[1].abs() < 1e-13 && t.values[2].abs() < 1e-13);
        assert!(unitarity_defect(&t.u) < 1e-13);
        assert!((t.reconstruct() - m).camax() < 1e-13);
    }

    #[test]
    fn takagi_rejects_nonsymmetric() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(takagi(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn passive_blocks_have_zero_squeezing() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.0, 1.0),
            c(-1.0, 0.0),
            c(0.6, 0.8),
        ]));
        let blocks = BogoliubovBlocks { a, b: CMatrix::zeros(3, 3) };
        let dec = bloch_messiah_blocks(&blocks, &[-1.0, 0.0, 1.0], 1e-9).unwrap();
        assert!(dec.is_passive());
        assert!(dec.reconstruction_residual < 1e-14);
        // identity up to phase, ordered by center
        for k in 0..3 {
            assert!((dec.q_unitary[(k, k)] - ONE).norm() < 1e-14);
        }
    }

    #[test]
    fn decoupled_squeezers_are_recovered_in_order() {
        let (x1, x2): (f64, f64) = (0.2, 0.5);
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(x1.cosh(), 0.0),
            c(x2.cosh(), 0.0),
        ]));
        let b = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::from_polar(x1.sinh(), 0.3),
            Complex64::from_polar(x2.sinh(), 2.0),
        ]));
        let dec = bloch_messiah_blocks(&BogoliubovBlocks { a, b }, &[0.0, 1.0], 1e-9).unwrap();
        assert!((dec.xi[0] - 0.5).abs() < 1e-14);
        assert!((dec.xi[1] - 0.2).abs() < 1e-14);
        assert!((dec.theta[0] - 2.0).abs() < 1e-13);
        assert!((dec.theta[1] - 0.3).abs() < 1e-13);
    }

    #[test]
    fn unreliable_input_is_flagged() {
        let a = CMatrix::from_element(1, 1, c(2.0, 0.0));
        let b = CMatrix::from_element(1, 1, c(0.1, 0.0));
        let err = bloch_messiah_blocks(&BogoliubovBlocks { a, b }, &[0.0], 1e-6).unwrap_err();
        assert!(matches!(err, Error::DecompositionUnreliable { .. }));
    }

    #[test]
    fn mode_shape_normalization() {
        let g = FrequencyGrid::new(2.0, 4).unwrap();
        assert!(ModeShape::new(g, vec![ONE; 4]).is_err());
        let m = ModeShape::normalized(g, vec![ONE; 4]).unwrap();
        assert!((m.norm() - 1.0).abs() < 1e-12);
        assert!(m.center().abs() < 1e-15);
    }
}
