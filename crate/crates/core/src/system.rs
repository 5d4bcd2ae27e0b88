//! Frequency-domain generator `[[D, E], [E*, D*]]` and the input-output
//! scattering it induces.
//!
//! Operators act on the doubled vector `(a, a†)`. `D` is diagonal with
//! `D_jj = iν_j − γ_j/2`; `E_jk = κ·ε(ν_j + ν_k)·step` is the midpoint
//! collocation of the parametric kernel, so `E` is complex symmetric.
//! Per-mode decay rates are allowed so the same machinery serves the
//! signal/idler system.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{CavityParams, FrequencyGrid, PumpField, PumpKind};
use crate::linalg::{
    add_identity, inverse, mul, scale_rows_cols, spectral_norm, CMatrix, ZERO,
};

/// Reciprocal-condition floor below which the generator counts as singular.
const SINGULAR_CONDITION: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct BlockMatrix {
    detunings: Vec<f64>,
    intrinsic: Vec<f64>,
    coupling: Vec<f64>,
    e: CMatrix,
}

impl BlockMatrix {
    /// `e` must be symmetric to `1e-12` relative; it is symmetrized exactly.
    pub fn from_parts(
        detunings: Vec<f64>,
        intrinsic: Vec<f64>,
        coupling: Vec<f64>,
        e: CMatrix,
    ) -> Result<Self> {
        let n = detunings.len();
        if n == 0 || intrinsic.len() != n || coupling.len() != n {
            return Err(invalid("detuning and rate vectors must be non-empty and equal length"));
        }
        if e.nrows() != n || e.ncols() != n {
            return Err(invalid(format!("E must be {n}x{n}, got {}x{}", e.nrows(), e.ncols())));
        }
        if intrinsic.iter().any(|g| !(*g >= 0.0)) || coupling.iter().any(|g| !(*g > 0.0)) {
            return Err(invalid("rates must satisfy gamma_i >= 0 and gamma_c > 0"));
        }
        let asym = (&e - e.transpose()).norm();
        if asym > 1e-12 * e.norm().max(f64::MIN_POSITIVE) && asym > 0.0 {
            return Err(invalid(format!("E is not symmetric (defect {asym:.3e})")));
        }
        let e = (&e + e.transpose()) * Complex64::new(0.5, 0.0);
        Ok(BlockMatrix {
            detunings,
            intrinsic,
            coupling,
            e,
        })
    }

    /// All modes share one set of cavity rates.
    pub fn uniform(detunings: Vec<f64>, params: &CavityParams, e: CMatrix) -> Result<Self> {
        let n = detunings.len();
        Self::from_parts(
            detunings,
            vec![params.gamma_i(); n],
            vec![params.gamma_c(); n],
            e,
        )
    }

    pub fn n(&self) -> usize {
        self.detunings.len()
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn intrinsic(&self) -> &[f64] {
        &self.intrinsic
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn decay(&self, j: usize) -> f64 {
        self.intrinsic[j] + self.coupling[j]
    }

    pub fn d(&self, j: usize) -> Complex64 {
        Complex64::new(-self.decay(j) / 2.0, self.detunings[j])
    }

    pub fn e(&self) -> &CMatrix {
        &self.e
    }

    /// Same detunings and rates with `E` multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> BlockMatrix {
        BlockMatrix {
            e: &self.e * c,
            ..self.clone()
        }
    }

    /// The full `2n × 2n` matrix.
    pub fn assemble(&self) -> CMatrix {
        let n = self.n();
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            m[(j, j)] = self.d(j);
            m[(n + j, n + j)] = self.d(j).conj();
        }
        let ec = self.e.map(|z| z.conj());
        m.view_mut((0, n), (n, n)).copy_from(&self.e);
        m.view_mut((n, 0), (n, n)).copy_from(&ec);
        m
    }

    /// `min_j γ_j/2 − ‖E‖₂`. Positive margin bounds every eigenvalue of the
    /// generator strictly inside the left half plane.
    pub fn stability_margin(&self) -> f64 {
        let min_half = (0..self.n()).map(|j| self.decay(j) / 2.0).fold(f64::INFINITY, f64::min);
        min_half - spectral_norm(&self.e)
    }
}

/// Samples the intracavity pump at every detuning sum of `grid`.
pub fn build_generator(
    pump: &PumpField,
    params: &CavityParams,
    grid: &FrequencyGrid,
) -> Result<BlockMatrix> {
    if pump.kind() != PumpKind::Intracavity {
        return Err(invalid("build_generator expects an intracavity pump field"));
    }
    let e = coupling_kernel(pump, params.kappa(), grid)?;
    BlockMatrix::uniform(grid.points(), params, e)
}

/// `κ·step·ε(ν_j + ν_k)`
pub fn coupling_kernel(pump: &PumpField, kappa: f64, grid: &FrequencyGrid) -> Result<CMatrix> {
    let n = grid.n_points();
    let weight = kappa * grid.step();
    let sums: Vec<Complex64> = if pump.grid().same_as(&grid.pump_grid()) {
        pump.amplitude().to_vec()
    } else {
        (0..2 * n - 1)
            .map(|s| pump.value_at(grid.point(0) * 2.0 + s as f64 * grid.step()))
            .collect::<Result<_>>()?
    };
    Ok(CMatrix::from_fn(n, n, |j, k| sums[j + k] * weight))
}

/// A Bogoliubov map `[[A, B], [B*, A*]]` acting on `(a, a†)`.
#[derive(Debug, Clone)]
pub struct BogoliubovBlocks {
    pub a: CMatrix,
    pub b: CMatrix,
}

impl BogoliubovBlocks {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn assemble(&self) -> CMatrix {
        let n = self.n();
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((0, n), (n, n)).copy_from(&self.b);
        m.view_mut((n, 0), (n, n)).copy_from(&self.b.map(|z| z.conj()));
        m.view_mut((n, n), (n, n)).copy_from(&self.a.map(|z| z.conj()));
        m
    }

    /// Largest absolute entry difference against `other`, relative to the
    /// largest entry of `self`.
    pub fn relative_difference(&self, other: &BogoliubovBlocks) -> f64 {
        let scale = self.a.camax().max(self.b.camax()).max(f64::MIN_POSITIVE);
        (&self.a - &other.a).camax().max((&self.b - &other.b).camax()) / scale
    }
}

/// `max(‖AA† − BB† − I‖_F, ‖ABᵀ − BAᵀ‖_F) / ‖A‖₂²`
pub fn bogoliubov_residual(blocks: &BogoliubovBlocks) -> f64 {
    let a = &blocks.a;
    let b = &blocks.b;
    let norm_part = add_identity(-(mul(a, &a.adjoint()) - mul(b, &b.adjoint())));
    let abt = mul(a, &b.transpose());
    let sym_part = &abt - abt.transpose();
    let scale = spectral_norm(a).powi(2).max(f64::MIN_POSITIVE);
    norm_part.norm().max(sym_part.norm()) / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    /// Bus waveguide (`a_in` / `a_out`).
    Bus,
    /// Virtual waveguide modeling intrinsic loss (`a⁽ⁱ⁾` / `a⁽ᵉ⁾`).
    Loss,
}

/// Input-output relations of the cavity. Holds the upper blocks of
/// `M⁻¹ = [[X, Y], [Y*, X*]]` and the lossless core `I + √Γ M⁻¹ √Γ`.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    detunings: Vec<f64>,
    intrinsic: Vec<f64>,
    coupling: Vec<f64>,
    inv_x: CMatrix,
    inv_y: CMatrix,
    core: BogoliubovBlocks,
    residual: f64,
}

impl ScatteringMatrix {
    pub fn n(&self) -> usize {
        self.detunings.len()
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn core(&self) -> &BogoliubovBlocks {
        &self.core
    }

    pub fn symplectic_residual(&self) -> f64 {
        self.residual
    }

    /// Upper blocks of `M⁻¹`.
    pub fn inverse_blocks(&self) -> (&CMatrix, &CMatrix) {
        (&self.inv_x, &self.inv_y)
    }

    fn sqrt_rates(&self, port: Port) -> Vec<f64> {
        let src = match port {
            Port::Bus => &self.coupling,
            Port::Loss => &self.intrinsic,
        };
        src.iter().map(|g| g.sqrt()).collect()
    }

    /// Block of the direct form: `δ·I + √γ_out M⁻¹ √γ_in`.
    pub fn io_block(&self, output: Port, input: Port) -> BogoliubovBlocks {
        let left = self.sqrt_rates(output);
        let right = self.sqrt_rates(input);
        let mut a = scale_rows_cols(&self.inv_x, &left, &right);
        if output == input {
            a = add_identity(a);
        }
        let b = scale_rows_cols(&self.inv_y, &left, &right);
        BogoliubovBlocks { a, b }
    }

    /// The same block obtained by sandwiching the core between the two loss
    /// beamsplitters of reflectivity `γ_c/γ`.
    pub fn factorized_io_block(&self, output: Port, input: Port) -> BogoliubovBlocks {
        let n = self.n();
        let r: Vec<f64> = (0..n)
            .map(|j| (self.coupling[j] / (self.coupling[j] + self.intrinsic[j])).sqrt())
            .collect();
        let s: Vec<f64> = (0..n)
            .map(|j| (self.intrinsic[j] / (self.coupling[j] + self.intrinsic[j])).sqrt())
            .collect();
        // left = [[R, -S], [S, R]], right = [[R, S], [-S, R]]
        let (lo, ro) = match output {
            Port::Bus => (&r, &s),
            Port::Loss => (&s, &r),
        };
        let (li, ri) = match input {
            Port::Bus => (&r, &s),
            Port::Loss => (&s, &r),
        };
        let a_core = scale_rows_cols(&self.core.a, lo, li);
        let b = scale_rows_cols(&self.core.b, lo, li);
        let sign = match (output, input) {
            (Port::Bus, Port::Bus) | (Port::Loss, Port::Loss) => 1.0,
            (Port::Bus, Port::Loss) | (Port::Loss, Port::Bus) => -1.0,
        };
        let mut a = a_core;
        for j in 0..n {
            a[(j, j)] += Complex64::new(sign * ro[j] * ri[j], 0.0);
        }
        BogoliubovBlocks { a, b }
    }
}

/// Core scattering via the Schur complement of the diagonal block `D`.
pub fn core_scattering(m: &BlockMatrix) -> Result<ScatteringMatrix> {
    let n = m.n();
    let d: Vec<Complex64> = (0..n).map(|j| m.d(j)).collect();
    let e = m.e();
    // S = D* − E* D⁻¹ E
    let d_inv_e = CMatrix::from_fn(n, n, |j, k| e[(j, k)] / d[j]);
    let mut schur = -mul(&e.map(|z| z.conj()), &d_inv_e);
    for j in 0..n {
        schur[(j, j)] += d[j].conj();
    }
    let s_norm = schur.norm();
    let s_inv = inverse(&schur)
        .ok_or_else(|| Error::AtOrAboveThreshold("Schur complement is singular".into()))?;
    check_conditioning(s_norm * s_inv.norm(), &s_inv)?;
    // M⁻¹ = [[X, Y], [Y*, X*]] with X* = S⁻¹ and Y = −D⁻¹ E S⁻¹
    let inv_x = s_inv.map(|z| z.conj());
    let inv_y = -mul(&d_inv_e, &s_inv);
    Ok(finish(m, inv_x, inv_y))
}

/// Same map from a dense LU inverse of the assembled `2n × 2n` generator.
pub fn core_scattering_dense(m: &BlockMatrix) -> Result<ScatteringMatrix> {
    let n = m.n();
    let full = m.assemble();
    let full_norm = full.norm();
    let inv = inverse(&full)
        .ok_or_else(|| Error::AtOrAboveThreshold("generator is singular".into()))?;
    check_conditioning(full_norm * inv.norm(), &inv)?;
    let inv_x = inv.view((0, 0), (n, n)).into_owned();
    let inv_y = inv.view((0, n), (n, n)).into_owned();
    Ok(finish(m, inv_x, inv_y))
}

fn check_conditioning(cond: f64, inv: &CMatrix) -> Result<()> {
    if !cond.is_finite() || cond > SINGULAR_CONDITION || inv.iter().any(|z| !z.re.is_finite()) {
        return Err(Error::AtOrAboveThreshold(format!(
            "condition estimate {cond:.3e}"
        )));
    }
    Ok(())
}

fn finish(m: &BlockMatrix, inv_x: CMatrix, inv_y: CMatrix) -> ScatteringMatrix {
    let n = m.n();
    let root: Vec<f64> = (0..n).map(|j| m.decay(j).sqrt()).collect();
    let core = BogoliubovBlocks {
        a: add_identity(scale_rows_cols(&inv_x, &root, &root)),
        b: scale_rows_cols(&inv_y, &root, &root),
    };
    let residual = bogoliubov_residual(&core);
    ScatteringMatrix {
        detunings: m.detunings().to_vec(),
        intrinsic: m.intrinsic().to_vec(),
        coupling: m.coupling().to_vec(),
        inv_x,
        inv_y,
        core,
        residual,
    }
}

/// Convenience: diagonal-only generator (no pump).
pub fn passive_generator(grid: &FrequencyGrid, params: &CavityParams) -> BlockMatrix {
    let n = grid.n_points();
    BlockMatrix::uniform(grid.points(), params, DMatrix::from_element(n, n, ZERO))
        .expect("zero kernel is symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_pump_input, intracavity_pump};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_mode(g: Complex64, params: &CavityParams) -> BlockMatrix {
        BlockMatrix::uniform(vec![0.0], params, CMatrix::from_element(1, 1, g)).unwrap()
    }

    fn default_generator(n: usize, fraction: f64) -> BlockMatrix {
        let params = CavityParams::default();
        let grid = FrequencyGrid::new(64.0, n).unwrap();
        let input = gaussian_pump_input(4.0, c(1.0, 0.0), &grid.pump_grid()).unwrap();
        let pump = intracavity_pump(&input, &params).unwrap();
        let m = build_generator(&pump, &params, &grid).unwrap();
        let lambda0 = spectral_norm(m.e());
        m.scaled(c(fraction.sqrt() * 0.5 / lambda0, 0.0))
    }

    #[test]
    fn zero_kappa_is_block_diagonal_all_pass() {
        let params = CavityParams::default();
        let grid = FrequencyGrid::new(8.0, 16).unwrap();
        let m = passive_generator(&grid, &params);
        let full = m.assemble();
        assert!(full.view((0, 16), (16, 16)).camax() == 0.0);
        let s = core_scattering(&m).unwrap();
        assert!(s.symplectic_residual() < 1e-12);
        assert!(s.core().b.camax() == 0.0);
        for (j, nu) in grid.points().iter().enumerate() {
            let a = s.core().a[(j, j)];
            assert!((a.norm() - 1.0).abs() < 1e-14);
            let expected = c(0.5, *nu) / c(-0.5, *nu);
            assert!((a - expected).norm() < 1e-14);
        }
        let one = single_mode(c(0.0, 0.0), &params);
        let s = core_scattering(&one).unwrap();
        assert!((s.core().a[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_mode_reduction() {
        let params = CavityParams::default();
        let g = c(0.2, 0.1);
        let m = single_mode(g, &params).assemble();
        assert_eq!(m[(0, 0)], c(-0.5, 0.0));
        assert_eq!(m[(0, 1)], g);
        assert_eq!(m[(1, 0)], g.conj());
        assert_eq!(m[(1, 1)], c(-0.5, 0.0));
    }

    #[test]
    fn single_mode_core_matches_hand_inversion() {
        // M⁻¹ = [[−γ/2, −g], [−g*, −γ/2]] / (γ²/4 − |g|²)
        let params = CavityParams::default();
        let g = c(0.3, -0.2);
        let s = core_scattering(&single_mode(g, &params)).unwrap();
        let det = 0.25 - g.norm_sqr();
        let a = 1.0 - 0.5 / det;
        let b = -g / det;
        assert!((s.core().a[(0, 0)] - c(a, 0.0)).norm() < 1e-14);
        assert!((s.core().b[(0, 0)] - b).norm() < 1e-14);
        let xi_closed = ((0.5 + g.norm()) / (0.5 - g.norm())).ln();
        assert!((s.core().a[(0, 0)].norm() - xi_closed.cosh()).abs() < 1e-13);
        assert!((s.core().b[(0, 0)].norm() - xi_closed.sinh()).abs() < 1e-13);
        assert!(s.symplectic_residual() < 1e-12);
    }

    #[test]
    fn kernel_is_hankel_and_symmetric() {
        let m = default_generator(24, 0.5);
        let e = m.e();
        for j in 0..24 {
            for k in 0..24 {
                assert_eq!(e[(j, k)], e[(k, j)]);
                if j + 1 < 24 && k > 0 {
                    assert_eq!(e[(j + 1, k - 1)], e[(j, k)]);
                }
            }
        }
        let full = m.assemble();
        let n = 24;
        for j in 0..n {
            for k in 0..n {
                assert_eq!(full[(n + j, n + k)], full[(j, k)].conj());
                assert_eq!(full[(n + j, k)], full[(j, n + k)].conj());
            }
        }
    }

    #[test]
    fn zero_kappa_kernel_vanishes() {
        let params = CavityParams::default();
        let grid = FrequencyGrid::new(8.0, 8).unwrap();
        let input = gaussian_pump_input(4.0, c(1.0, 0.0), &grid.pump_grid()).unwrap();
        let pump = intracavity_pump(&input, &params).unwrap();
        let e = coupling_kernel(&pump, 0.0, &grid).unwrap();
        assert_eq!(e.camax(), 0.0);
    }

    #[test]
    fn narrow_pump_grid_is_a_coverage_error() {
        let params = CavityParams::default();
        let grid = FrequencyGrid::new(8.0, 8).unwrap();
        let input = gaussian_pump_input(4.0, c(1.0, 0.0), &grid).unwrap();
        let pump = intracavity_pump(&input, &params).unwrap();
        assert!(matches!(
            build_generator(&pump, &params, &grid),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn schur_and_dense_inverses_agree() {
        let m = default_generator(32, 0.9);
        let a = core_scattering(&m).unwrap();
        let b = core_scattering_dense(&m).unwrap();
        assert!(a.core().relative_difference(b.core()) < 1e-12);
    }

    #[test]
    fn direct_and_factorized_forms_agree() {
        let m = default_generator(48, 0.99);
        let s = core_scattering(&m).unwrap();
        for out in [Port::Bus, Port::Loss] {
            for inp in [Port::Bus, Port::Loss] {
                let d = s.io_block(out, inp);
                let f = s.factorized_io_block(out, inp);
                assert!(d.relative_difference(&f) < 1e-10, "{out:?}<-{inp:?}");
            }
        }
    }

    #[test]
    fn stability_margin_bounds_spectrum() {
        let m = default_generator(12, 0.9);
        assert!(m.stability_margin() > 0.0);
        let full = m.assemble();
        let schur = nalgebra::Schur::new(full);
        let (_, t) = schur.unpack();
        for i in 0..t.nrows() {
            assert!(t[(i, i)].re < 0.0);
        }
    }

    #[test]
    fn singular_generator_is_rejected() {
        let params = CavityParams::new(0.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        let m = single_mode(c(0.5, 0.0), &params);
        assert!(matches!(core_scattering(&m), Err(Error::AtOrAboveThreshold(_))));
        assert!(matches!(core_scattering_dense(&m), Err(Error::AtOrAboveThreshold(_))));
    }
}
