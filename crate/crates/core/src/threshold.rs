//! Parametric oscillation threshold from the intracavity gain criterion
//! `λ₀ = γ/2`, where `λ₀` is the largest Takagi value of the coupling kernel.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{
    gaussian_pump_input, intracavity_pump, temporal_profile_oversampled, CavityParams,
    FrequencyGrid, PumpField,
};
use crate::linalg::{spectral_norm, CMatrix};
use crate::system::coupling_kernel;

/// Time-domain oversampling used when locating the pulse peak.
const PEAK_OVERSAMPLING: usize = 8;

/// Grid span for threshold runs in units of the widest rate involved.
pub const THRESHOLD_SPAN_FACTOR: f64 = 16.0;

/// `16 · max(δ, γ_p, γ)`: the kernel must hold the whole input pump spectrum.
pub fn threshold_span(delta: f64, params: &CavityParams) -> f64 {
    THRESHOLD_SPAN_FACTOR * delta.max(params.gamma_p()).max(params.gamma())
}

pub fn threshold_grid(delta: f64, params: &CavityParams, n_points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(threshold_span(delta, params), n_points)
}

/// How the intracavity power of a pulse is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerDefinition {
    /// `max_t |ε(t)|²`
    #[default]
    TemporalPeak,
    /// `step/(2π) · Σ|ε(μ)|² · γ`, pulse energy times the signal decay rate.
    PulseEnergy,
}

impl FromStr for PowerDefinition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "peak" | "temporal_peak" | "temporal-peak" => Ok(PowerDefinition::TemporalPeak),
            "energy" | "pulse_energy" | "pulse-energy" => Ok(PowerDefinition::PulseEnergy),
            other => Err(Error::UnknownPowerDefinition(other.to_string())),
        }
    }
}

impl fmt::Display for PowerDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerDefinition::TemporalPeak => "peak",
            PowerDefinition::PulseEnergy => "energy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Largest Takagi value of `E` at the probe amplitude.
    pub lambda0: f64,
    /// Factor bringing the probe pump to threshold, `(γ/2)/λ₀`.
    pub amplitude_scale: f64,
    /// `P_th / P_th,CW` under the temporal-peak definition.
    pub p_ratio: f64,
}

/// Largest Takagi value of a complex symmetric matrix (its spectral norm).
pub fn max_gain(e: &CMatrix) -> f64 {
    spectral_norm(e)
}

fn probe_pump(
    pump_peak: Complex64,
    delta: f64,
    params: &CavityParams,
    grid: &FrequencyGrid,
) -> Result<PumpField> {
    let input = gaussian_pump_input(delta, pump_peak, &grid.pump_grid())?;
    intracavity_pump(&input, params)
}

/// Scales a Gaussian probe pump to threshold.
pub fn threshold_amplitude(
    pump_peak: Complex64,
    delta: f64,
    params: &CavityParams,
    grid: &FrequencyGrid,
) -> Result<ThresholdResult> {
    if pump_peak.norm() == 0.0 || !pump_peak.norm().is_finite() {
        return Err(invalid("probe pump amplitude must be nonzero and finite"));
    }
    let pump = probe_pump(pump_peak, delta, params, grid)?;
    let e = coupling_kernel(&pump, params.kappa(), grid)?;
    let lambda0 = max_gain(&e);
    if !(lambda0 > 0.0) {
        return Err(invalid("probe pump produces no parametric gain on this grid"));
    }
    let amplitude_scale = params.gamma() / 2.0 / lambda0;
    let at_threshold = pump.scaled(Complex64::new(amplitude_scale, 0.0));
    let p_ratio = power_ratio_of(&at_threshold, params, PowerDefinition::TemporalPeak);
    Ok(ThresholdResult {
        lambda0,
        amplitude_scale,
        p_ratio,
    })
}

/// Power of an at-threshold intracavity field relative to the CW threshold
/// measured the same way on the same grid.
fn power_ratio_of(at_threshold: &PumpField, params: &CavityParams, def: PowerDefinition) -> f64 {
    let cw_field = params.gamma() / (2.0 * params.kappa());
    match def {
        PowerDefinition::TemporalPeak => {
            let peak = temporal_profile_oversampled(at_threshold, PEAK_OVERSAMPLING).peak_power;
            peak / (cw_field / (2.0 * PI)).powi(2)
        }
        PowerDefinition::PulseEnergy => {
            // A CW field on the grid is a single sample of height field/step.
            let step = at_threshold.grid().step();
            let cw = step / (2.0 * PI) * (cw_field / step).powi(2) * params.gamma();
            at_threshold.spectral_energy() / (2.0 * PI) * params.gamma() / cw
        }
    }
}

/// `P_th(δ) / P_th,CW`; `delta = 0` is the CW reference itself.
pub fn threshold_power_ratio(
    delta: f64,
    params: &CavityParams,
    grid: &FrequencyGrid,
    power_def: PowerDefinition,
) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(invalid(format!("pump bandwidth must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(1.0);
    }
    let pump = probe_pump(Complex64::new(1.0, 0.0), delta, params, grid)?;
    let e = coupling_kernel(&pump, params.kappa(), grid)?;
    let lambda0 = max_gain(&e);
    if !(lambda0 > 0.0) {
        return Err(invalid("probe pump produces no parametric gain on this grid"));
    }
    let at_threshold = pump.scaled(Complex64::new(params.gamma() / 2.0 / lambda0, 0.0));
    Ok(power_ratio_of(&at_threshold, params, power_def))
}
