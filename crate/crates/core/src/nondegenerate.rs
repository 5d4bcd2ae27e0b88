//! Non-degenerate (signal/idler) down-conversion.
//!
//! Signal `a₁` and idler `a₂` live on the same detuning grid relative to
//! their own carriers. The pump couples `a₁` to `a₂†` and `a₂` to `a₁†`, so
//! the joint generator over `(a₁, a₂, a₁†, a₂†)` is the degenerate one with
//! the off-diagonal coupling `[[0, E], [E, 0]]`. Everything downstream
//! (scattering, Bloch-Messiah, observables) is reused as is.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::grid::{CavityParams, FrequencyGrid, PumpField, PumpKind};
use crate::linalg::CMatrix;
use crate::system::{coupling_kernel, BlockMatrix};
use crate::threshold::max_gain;

/// Generator of the signal/idler system, `4n × 4n` when assembled.
#[derive(Debug, Clone)]
pub struct JointBlockMatrix {
    n: usize,
    inner: BlockMatrix,
}

impl JointBlockMatrix {
    /// Per-band grid size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The `2n`-mode generator with the signal sector first.
    pub fn as_block_matrix(&self) -> &BlockMatrix {
        &self.inner
    }

    /// The `n × n` kernel coupling the two bands.
    pub fn cross_coupling(&self) -> CMatrix {
        self.inner.e().view((0, self.n), (self.n, self.n)).into_owned()
    }

    pub fn assemble(&self) -> CMatrix {
        self.inner.assemble()
    }

    pub fn scaled(&self, c: Complex64) -> JointBlockMatrix {
        JointBlockMatrix {
            n: self.n,
            inner: self.inner.scaled(c),
        }
    }
}

/// Places `E = κ·step·ε(ν_j + ν_k)` between the signal and idler sectors.
pub fn build_joint_generator(
    pump: &PumpField,
    signal: &CavityParams,
    idler: &CavityParams,
    grid: &FrequencyGrid,
) -> Result<JointBlockMatrix> {
    if pump.kind() != PumpKind::Intracavity {
        return Err(invalid("build_joint_generator expects an intracavity pump field"));
    }
    if signal.kappa() != idler.kappa() {
        return Err(invalid(format!(
            "signal and idler must share kappa, got {} and {}",
            signal.kappa(),
            idler.kappa()
        )));
    }
    let e = coupling_kernel(pump, signal.kappa(), grid)?;
    joint_from_kernel(&e, &grid.points(), signal, idler)
}

/// Joint generator from a precomputed cross kernel over `detunings`.
pub fn joint_from_kernel(
    e: &CMatrix,
    detunings: &[f64],
    signal: &CavityParams,
    idler: &CavityParams,
) -> Result<JointBlockMatrix> {
    let n = detunings.len();
    if e.nrows() != n || e.ncols() != n {
        return Err(invalid(format!("kernel must be {n}x{n}")));
    }
    let mut big = CMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, n), (n, n)).copy_from(e);
    big.view_mut((n, 0), (n, n)).copy_from(&e.transpose());
    let detunings = detunings.iter().chain(detunings).copied().collect();
    let rates = |a: f64, b: f64| -> Vec<f64> {
        std::iter::repeat(a).take(n).chain(std::iter::repeat(b).take(n)).collect()
    };
    let inner = BlockMatrix::from_parts(
        detunings,
        rates(signal.gamma_i(), idler.gamma_i()),
        rates(signal.gamma_c(), idler.gamma_c()),
        big,
    )?;
    Ok(JointBlockMatrix { n, inner })
}

/// Largest gain of the joint coupling; equals that of `E` itself.
pub fn joint_max_gain(m: &JointBlockMatrix) -> f64 {
    max_gain(m.as_block_matrix().e())
}

/// Fraction of a joint mode vector living in the signal and idler sectors.
pub fn sector_weights(column: &[Complex64]) -> Result<(f64, f64)> {
    if column.is_empty() || column.len() % 2 != 0 {
        return Err(invalid("joint mode vector must have even, nonzero length"));
    }
    let n = column.len() / 2;
    let w1: f64 = column[..n].iter().map(|z| z.norm_sqr()).sum();
    let w2: f64 = column[n..].iter().map(|z| z.norm_sqr()).sum();
    let total = w1 + w2;
    if !(total > 0.0) {
        return Err(invalid("joint mode vector is zero"));
    }
    Ok((w1 / total, w2 / total))
}
