//! End-to-end solve for one operating point: Gaussian pump at a fraction of
//! its threshold power, scattering core, Bloch-Messiah decomposition.

use num_complex::Complex64;

use crate::decomposition::{
    bloch_messiah, characteristic_modes, ModeShape, SqueezingDecomposition, DEFAULT_GATE,
};
use crate::error::{invalid, Result};
use crate::grid::{gaussian_pump_input, intracavity_pump, CavityParams, FrequencyGrid};
use crate::nondegenerate::{joint_from_kernel, JointBlockMatrix};
use crate::observables::{output_moments, squeeze_report, GaussianMoments, SqueezeReport};
use crate::system::{core_scattering, coupling_kernel, BlockMatrix, ScatteringMatrix};
use crate::threshold::max_gain;

pub const DEFAULT_POINTS: usize = 512;
/// Signal grid span in units of the signal linewidth.
pub const SPAN_FACTOR: f64 = 64.0;

/// Signal grid span for squeezing runs.
///
/// The squeezed modes are confined by the signal cavity, so the span scales
/// with `γ` alone; with the default point count the step stays at `γ/8`.
pub fn default_span(_delta: f64, params: &CavityParams) -> f64 {
    SPAN_FACTOR * params.gamma()
}

pub fn default_grid(delta: f64, params: &CavityParams, n_points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(default_span(delta, params), n_points)
}

/// One operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub params: CavityParams,
    /// Amplitude FWHM of the input pump spectrum.
    pub delta: f64,
    /// `P_cav / P_th`, in `[0, 1)`.
    pub power_fraction: f64,
    pub grid: FrequencyGrid,
    /// Symplectic-residual gate for the decomposition.
    pub gate: f64,
}

impl Scenario {
    pub fn new(params: CavityParams, delta: f64, power_fraction: f64, grid: FrequencyGrid) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("pump bandwidth must be positive, got {delta}")));
        }
        if !(0.0..1.0).contains(&power_fraction) {
            return Err(invalid(format!(
                "power fraction must lie in [0, 1) to stay below threshold, got {power_fraction}"
            )));
        }
        Ok(Scenario {
            params,
            delta,
            power_fraction,
            grid,
            gate: DEFAULT_GATE,
        })
    }

    /// Scenario on the default grid.
    pub fn with_defaults(params: CavityParams, delta: f64, power_fraction: f64) -> Result<Self> {
        let grid = default_grid(delta, &params, DEFAULT_POINTS)?;
        Self::new(params, delta, power_fraction, grid)
    }

    pub fn with_grid(self, grid: FrequencyGrid) -> Self {
        Scenario { grid, ..self }
    }

    /// Coupling kernel at the requested power, with the threshold gain of
    /// the unit probe.
    pub fn kernel(&self) -> Result<(nalgebra::DMatrix<Complex64>, f64)> {
        let input = gaussian_pump_input(self.delta, Complex64::new(1.0, 0.0), &self.grid.pump_grid())?;
        let pump = intracavity_pump(&input, &self.params)?;
        let probe = coupling_kernel(&pump, self.params.kappa(), &self.grid)?;
        let lambda0 = max_gain(&probe);
        if !(lambda0 > 0.0) {
            return Err(invalid("pump produces no parametric gain on this grid"));
        }
        let scale = self.params.gamma() / 2.0 / lambda0 * self.power_fraction.sqrt();
        Ok((probe * Complex64::new(scale, 0.0), lambda0))
    }

    pub fn generator(&self) -> Result<BlockMatrix> {
        let (e, _) = self.kernel()?;
        BlockMatrix::uniform(self.grid.points(), &self.params, e)
    }

    /// Signal/idler generator with identical bands.
    pub fn joint_generator(&self) -> Result<JointBlockMatrix> {
        let (e, _) = self.kernel()?;
        joint_from_kernel(&e, &self.grid.points(), &self.params, &self.params)
    }

    pub fn solve(&self) -> Result<Solution> {
        let generator = self.generator()?;
        let scattering = core_scattering(&generator)?;
        let decomposition = bloch_messiah(&scattering, self.gate)?;
        Ok(Solution {
            scenario: *self,
            scattering,
            decomposition,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub scenario: Scenario,
    pub scattering: ScatteringMatrix,
    pub decomposition: SqueezingDecomposition,
}

impl Solution {
    pub fn grid(&self) -> &FrequencyGrid {
        &self.scenario.grid
    }

    pub fn report(&self) -> Result<SqueezeReport> {
        squeeze_report(&self.decomposition, &self.scenario.params, &self.scenario.grid)
    }

    pub fn moments(&self) -> GaussianMoments {
        output_moments(&self.scattering)
    }

    /// `(input, output)` shapes of the k-th characteristic mode.
    pub fn modes(&self, k: usize) -> Result<(ModeShape, ModeShape)> {
        characteristic_modes(&self.decomposition, k, &self.scenario.grid)
    }
}
