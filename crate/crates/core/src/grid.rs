//! Frequency discretization, cavity parameters and pump fields.
//!
//! All rates are in units of the total signal decay rate, and every spectrum
//! is indexed by detuning from its carrier: `ν = ω − ω₀` for the signal band
//! and `μ = ω − 2ω₀` for the pump.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};

/// Uniform midpoint grid centered on zero detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    n_points: usize,
    span: f64,
}

impl FrequencyGrid {
    pub fn new(span: f64, n_points: usize) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(invalid(format!("grid span must be positive, got {span}")));
        }
        if n_points < 2 {
            return Err(invalid(format!("grid needs at least 2 points, got {n_points}")));
        }
        Ok(FrequencyGrid { n_points, span })
    }

    /// Pump grid with the same step whose points are exactly the pairwise sums
    /// `ν_j + ν_k` of this grid (2n − 1 points).
    pub fn pump_grid(&self) -> FrequencyGrid {
        let n = 2 * self.n_points - 1;
        FrequencyGrid {
            n_points: n,
            span: self.step() * n as f64,
        }
    }

    /// Same span, twice the points.
    pub fn refined(&self) -> FrequencyGrid {
        FrequencyGrid {
            n_points: 2 * self.n_points,
            span: self.span,
        }
    }

    /// Same step, twice the span and points.
    pub fn doubled(&self) -> FrequencyGrid {
        FrequencyGrid {
            n_points: 2 * self.n_points,
            span: 2.0 * self.span,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn step(&self) -> f64 {
        self.span / self.n_points as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        (j as f64 - (self.n_points as f64 - 1.0) / 2.0) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    pub fn first(&self) -> f64 {
        self.point(0)
    }

    pub fn last(&self) -> f64 {
        self.point(self.n_points - 1)
    }

    pub fn same_as(&self, other: &FrequencyGrid) -> bool {
        self.n_points == other.n_points
            && (self.span - other.span).abs() <= 1e-12 * self.span.abs().max(other.span.abs())
    }
}

/// Signal and pump cavity rates. `gamma = gamma_i + gamma_c` sets the unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    gamma_i: f64,
    gamma_c: f64,
    gamma_p: f64,
    gamma_pc: f64,
    kappa: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams {
            gamma_i: 0.125,
            gamma_c: 0.875,
            gamma_p: 2.0,
            gamma_pc: 1.0,
            kappa: 1.0,
        }
    }
}

impl CavityParams {
    pub fn new(gamma_i: f64, gamma_c: f64, gamma_p: f64, gamma_pc: f64, kappa: f64) -> Result<Self> {
        let finite = [gamma_i, gamma_c, gamma_p, gamma_pc, kappa]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("cavity rates must be finite"));
        }
        if gamma_i < 0.0 {
            return Err(invalid(format!("gamma_i must be >= 0, got {gamma_i}")));
        }
        if gamma_c <= 0.0 {
            return Err(invalid(format!("gamma_c must be > 0, got {gamma_c}")));
        }
        if gamma_p <= 0.0 {
            return Err(invalid(format!("gamma_p must be > 0, got {gamma_p}")));
        }
        if !(gamma_pc > 0.0 && gamma_pc <= gamma_p) {
            return Err(invalid(format!(
                "gamma_pc must lie in (0, gamma_p = {gamma_p}], got {gamma_pc}"
            )));
        }
        if kappa <= 0.0 {
            return Err(invalid(format!("kappa must be > 0, got {kappa}")));
        }
        Ok(CavityParams {
            gamma_i,
            gamma_c,
            gamma_p,
            gamma_pc,
            kappa,
        })
    }

    pub fn gamma_i(&self) -> f64 {
        self.gamma_i
    }

    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
    }

    /// Total signal decay rate.
    pub fn gamma(&self) -> f64 {
        self.gamma_i + self.gamma_c
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    pub fn gamma_pc(&self) -> f64 {
        self.gamma_pc
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn with_kappa(self, kappa: f64) -> Result<Self> {
        Self::new(self.gamma_i, self.gamma_c, self.gamma_p, self.gamma_pc, kappa)
    }

    pub fn with_gamma_p(self, gamma_p: f64) -> Result<Self> {
        let ratio = self.gamma_pc / self.gamma_p;
        Self::new(self.gamma_i, self.gamma_c, gamma_p, gamma_p * ratio, self.kappa)
    }

    /// Keeps the total decay fixed and moves `gamma_i` out of it.
    pub fn with_intrinsic_loss(self, gamma_i: f64) -> Result<Self> {
        let gamma = self.gamma();
        Self::new(gamma_i, gamma - gamma_i, self.gamma_p, self.gamma_pc, self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpKind {
    Input,
    Intracavity,
}

/// Complex spectral amplitude of the pump on a detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpField {
    grid: FrequencyGrid,
    amplitude: Vec<Complex64>,
    kind: PumpKind,
}

impl PumpField {
    pub fn new(grid: FrequencyGrid, amplitude: Vec<Complex64>, kind: PumpKind) -> Result<Self> {
        if amplitude.len() != grid.n_points() {
            return Err(invalid(format!(
                "pump amplitude has {} entries for a {}-point grid",
                amplitude.len(),
                grid.n_points()
            )));
        }
        if amplitude.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(invalid("pump amplitude contains non-finite entries"));
        }
        Ok(PumpField {
            grid,
            amplitude,
            kind,
        })
    }

    /// A single nonzero sample at μ = 0, the discrete stand-in for a CW pump.
    /// `field` is the CW field amplitude, so the sample carries `field / step`.
    pub fn continuous_wave(grid: FrequencyGrid, field: Complex64, kind: PumpKind) -> Result<Self> {
        let n = grid.n_points();
        if n % 2 == 0 {
            return Err(invalid("a CW pump needs an odd grid with a point at zero detuning"));
        }
        let mut amplitude = vec![Complex64::new(0.0, 0.0); n];
        amplitude[n / 2] = field / grid.step();
        Self::new(grid, amplitude, kind)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn kind(&self) -> PumpKind {
        self.kind
    }

    pub fn scaled(&self, c: Complex64) -> PumpField {
        PumpField {
            grid: self.grid,
            amplitude: self.amplitude.iter().map(|a| a * c).collect(),
            kind: self.kind,
        }
    }

    /// Amplitude at detuning `mu`; exact on grid points, linear in between.
    pub fn value_at(&self, mu: f64) -> Result<Complex64> {
        let step = self.grid.step();
        let pos = (mu - self.grid.first()) / step;
        let last = (self.grid.n_points() - 1) as f64;
        let slack = 1e-9;
        if pos < -slack || pos > last + slack {
            return Err(Error::Coverage {
                required: mu,
                min: self.grid.first(),
                max: self.grid.last(),
            });
        }
        let nearest = pos.round();
        if (pos - nearest).abs() <= slack {
            return Ok(self.amplitude[nearest.clamp(0.0, last) as usize]);
        }
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        Ok(self.amplitude[lo] * (1.0 - frac) + self.amplitude[lo + 1] * frac)
    }

    /// `step · Σ |ε|²`
    pub fn spectral_energy(&self) -> f64 {
        self.grid.step() * self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }
}

/// Exponent below which Gaussian tails are stored as exact zeros; keeps
/// subnormal numbers out of the dense kernels.
const GAUSSIAN_TAIL_CUTOFF: f64 = 300.0;

/// Gaussian input spectrum `peak · exp(−4 ln2 · μ² / δ²)`; `delta` is the
/// amplitude FWHM.
pub fn gaussian_pump_input(delta: f64, peak: Complex64, grid: &FrequencyGrid) -> Result<PumpField> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid(format!("pump bandwidth must be positive, got {delta}")));
    }
    let amplitude = grid
        .points()
        .into_iter()
        .map(|mu| {
            let x = 4.0 * LN_2 * mu * mu / (delta * delta);
            if x > GAUSSIAN_TAIL_CUTOFF {
                Complex64::new(0.0, 0.0)
            } else {
                peak * (-x).exp()
            }
        })
        .collect();
    PumpField::new(*grid, amplitude, PumpKind::Input)
}

/// Single-pole pump cavity response applied to an input spectrum.
pub fn intracavity_pump(input: &PumpField, params: &CavityParams) -> Result<PumpField> {
    if input.kind() != PumpKind::Input {
        return Err(invalid("intracavity_pump expects an input pump field"));
    }
    let coupling = params.gamma_pc().sqrt();
    let half = params.gamma_p() / 2.0;
    let amplitude = input
        .grid
        .points()
        .into_iter()
        .zip(&input.amplitude)
        .map(|(mu, e)| e * coupling / Complex64::new(half, -mu))
        .collect();
    PumpField::new(input.grid, amplitude, PumpKind::Intracavity)
}

/// Time samples over one period `2π/step` of the periodized field.
#[derive(Debug, Clone)]
pub struct TemporalProfile {
    pub times: Vec<f64>,
    pub samples: Vec<Complex64>,
    pub time_step: f64,
    pub peak_power: f64,
}

/// Inverse transform with quadrature weight `step/(2π)`:
/// `x(t) = step/(2π) · Σ_j ε(μ_j) e^{−iμ_j t}`.
pub fn temporal_profile(field: &PumpField) -> TemporalProfile {
    temporal_profile_oversampled(field, 1)
}

/// As [`temporal_profile`] but sampled `factor` times finer in time
/// (zero padding in frequency).
pub fn temporal_profile_oversampled(field: &PumpField, factor: usize) -> TemporalProfile {
    let n = field.grid.n_points();
    let big_n = n * factor.max(1);
    let step = field.grid.step();
    let dt = 2.0 * PI / (big_n as f64 * step);
    let center = (n as f64 - 1.0) / 2.0;

    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); big_n];
    for (j, a) in field.amplitude.iter().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        buf[j] = a * sign;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(big_n).process(&mut buf);

    let weight = step / (2.0 * PI);
    let global = Complex64::from_polar(weight, -PI * center);
    let half = (big_n / 2) as f64;
    let mut times = Vec::with_capacity(big_n);
    let mut samples = Vec::with_capacity(big_n);
    let mut peak_power: f64 = 0.0;
    for (l, x) in buf.into_iter().enumerate() {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * center * l as f64 / big_n as f64);
        let v = global * phase * x;
        peak_power = peak_power.max(v.norm_sqr());
        times.push((l as f64 - half) * dt);
        samples.push(v);
    }
    TemporalProfile {
        times,
        samples,
        time_step: dt,
        peak_power,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn midpoint_grids() {
        let g = FrequencyGrid::new(4.0, 4).unwrap();
        assert_eq!(g.points(), vec![-1.5, -0.5, 0.5, 1.5]);
        let g = FrequencyGrid::new(2.0, 2).unwrap();
        assert_eq!(g.points(), vec![-0.5, 0.5]);
        let g = FrequencyGrid::new(128.0, 1024).unwrap();
        assert_eq!(g.step(), 0.125);
        assert_eq!(g.first(), -63.9375);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(FrequencyGrid::new(0.0, 8).is_err());
        assert!(FrequencyGrid::new(-1.0, 8).is_err());
        assert!(FrequencyGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn pump_grid_hits_every_pair_sum() {
        let g = FrequencyGrid::new(3.0, 6).unwrap();
        let p = g.pump_grid();
        assert_eq!(p.n_points(), 11);
        for j in 0..6 {
            for k in 0..6 {
                let s = g.point(j) + g.point(k);
                assert!((p.point(j + k) - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cavity_params_validation() {
        assert!(CavityParams::new(-0.1, 1.0, 2.0, 1.0, 1.0).is_err());
        assert!(CavityParams::new(0.0, 0.0, 2.0, 1.0, 1.0).is_err());
        assert!(CavityParams::new(0.0, 1.0, 2.0, 2.5, 1.0).is_err());
        assert!(CavityParams::new(0.0, 1.0, 2.0, 1.0, 0.0).is_err());
        let p = CavityParams::default();
        assert_eq!(p.gamma(), 1.0);
    }

    #[test]
    fn gaussian_pump_values() {
        let g = FrequencyGrid::new(4.0, 4).unwrap();
        assert!(gaussian_pump_input(0.0, c(1.0), &g).is_err());
        let delta = 2.0;
        // points ±0.5, ±1.5; evaluate exactly at μ = δ/2 = 1 using a grid that contains it
        let g = FrequencyGrid::new(3.0, 3).unwrap();
        let peak = Complex64::new(0.3, -0.4);
        let p = gaussian_pump_input(delta, peak, &g).unwrap();
        assert!((p.amplitude()[1] - peak).norm() < 1e-15);
        assert!((p.amplitude()[2] - peak / 2.0).norm() < 1e-15);
        let wide = gaussian_pump_input(1e9, peak, &g).unwrap();
        assert!((wide.amplitude()[0] - peak).norm() < 1e-12);
    }

    #[test]
    fn intracavity_lorentzian() {
        let params = CavityParams::new(0.0, 1.0, 2.0, 1.5, 1.0).unwrap();
        let g = FrequencyGrid::new(3.0, 3).unwrap(); // -1, 0, 1 and γ_p/2 = 1
        let flat = PumpField::new(g, vec![c(2.0); 3], PumpKind::Input).unwrap();
        let e = intracavity_pump(&flat, &params).unwrap();
        let e0 = e.amplitude()[1];
        assert!((e0 - c(2.0 * 1.5f64.sqrt() / 1.0)).norm() < 1e-14);
        assert!((e.amplitude()[2].norm_sqr() - e0.norm_sqr() / 2.0).abs() < 1e-12);
        assert!(intracavity_pump(&e, &params).is_err());

        let far = FrequencyGrid::new(3e8, 3).unwrap();
        let flat = PumpField::new(far, vec![c(1.0); 3], PumpKind::Input).unwrap();
        let e = intracavity_pump(&flat, &params).unwrap();
        assert!(e.amplitude()[0].norm() < 1e-7);
    }

    #[test]
    fn intracavity_is_linear_and_symmetric() {
        let params = CavityParams::default();
        let g = FrequencyGrid::new(20.0, 41).unwrap();
        let input = gaussian_pump_input(3.0, c(1.0), &g).unwrap();
        let s = Complex64::new(0.7, -1.3);
        let a = intracavity_pump(&input, &params).unwrap().scaled(s);
        let b = intracavity_pump(&input.scaled(s), &params).unwrap();
        for (x, y) in a.amplitude().iter().zip(b.amplitude()) {
            assert!((x - y).norm() <= 1e-15 * x.norm().max(1.0));
        }
        let real = intracavity_pump(&input, &params).unwrap();
        let n = g.n_points();
        for j in 0..n {
            let (l, r) = (b.amplitude()[j], b.amplitude()[n - 1 - j]);
            assert!((l.norm() - r.norm()).abs() < 1e-14);
            let (l, r) = (real.amplitude()[j], real.amplitude()[n - 1 - j]);
            assert!((l - r.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn value_at_interpolates_and_checks_coverage() {
        let g = FrequencyGrid::new(4.0, 4).unwrap();
        let f = PumpField::new(g, vec![c(0.0), c(1.0), c(3.0), c(5.0)], PumpKind::Input).unwrap();
        assert_eq!(f.value_at(0.5).unwrap(), c(3.0));
        assert!((f.value_at(0.0).unwrap() - c(2.0)).norm() < 1e-14);
        assert!(matches!(f.value_at(1.6), Err(Error::Coverage { .. })));
    }

    #[test]
    fn cw_profile_is_flat() {
        let g = FrequencyGrid::new(1.0, 9).unwrap();
        let f = PumpField::continuous_wave(g, c(2.0), PumpKind::Intracavity).unwrap();
        let prof = temporal_profile(&f);
        let expected = (2.0 / (2.0 * PI)).powi(2);
        for s in &prof.samples {
            assert!((s.norm_sqr() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn two_tone_beat_has_full_contrast() {
        let g = FrequencyGrid::new(9.0, 9).unwrap();
        let mut amp = vec![c(0.0); 9];
        amp[2] = c(1.0);
        amp[6] = c(1.0);
        let f = PumpField::new(g, amp, PumpKind::Input).unwrap();
        let mu0 = g.point(6);
        let prof = temporal_profile_oversampled(&f, 16);
        let w = g.step() / (2.0 * PI);
        for (t, s) in prof.times.iter().zip(&prof.samples) {
            let expected = (2.0 * w * (mu0 * t).cos()).powi(2);
            assert!((s.norm_sqr() - expected).abs() < 1e-12);
        }
        let min = prof.samples.iter().map(|s| s.norm_sqr()).fold(f64::INFINITY, f64::min);
        assert!(min < 1e-3 * prof.peak_power);
    }

    #[test]
    fn gaussian_time_width_matches_closed_form() {
        // |x(t)| ∝ exp(−δ² t² / (16 ln 2)); amplitude FWHM is 8 ln2 / δ.
        let delta = 2.0;
        let g = FrequencyGrid::new(40.0, 400).unwrap();
        let f = gaussian_pump_input(delta, c(1.0), &g).unwrap();
        let prof = temporal_profile_oversampled(&f, 4);
        let amp: Vec<f64> = prof.samples.iter().map(|s| s.norm()).collect();
        let peak = amp.iter().cloned().fold(0.0, f64::max);
        let ipk = amp.iter().position(|&a| a == peak).unwrap();
        let mut r = ipk;
        while amp[r + 1] > peak / 2.0 {
            r += 1;
        }
        let frac = (amp[r] - peak / 2.0) / (amp[r] - amp[r + 1]);
        let t_half = prof.times[r] + frac * prof.time_step - prof.times[ipk];
        let expected = 8.0 * LN_2 / delta;
        assert!((2.0 * t_half - expected).abs() < 1e-3 * expected);
        // closed-form peak: step/(2π)·Σ ≈ (1/2π)·∫ exp(...) dμ = δ √(π / (4 ln2)) / (2π)
        let closed = delta * (PI / (4.0 * LN_2)).sqrt() / (2.0 * PI);
        assert!((peak - closed).abs() < 1e-10);
    }
}
