//! Squeezing levels, effective mode number, output second moments and
//! homodyne detection with an arbitrary local-oscillator mode.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::decomposition::{characteristic_modes, ModeShape, SqueezingDecomposition};
use crate::error::{invalid, Error, Result};
use crate::grid::{CavityParams, FrequencyGrid};
use crate::linalg::{mul, CMatrix};
use crate::system::{Port, ScatteringMatrix};

/// Vacuum quadrature variance.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Minimum quadrature variance of a characteristic mode after the loss
/// beamsplitter: `½(γ_i/γ + (γ_c/γ) e^{−2ξ})`.
pub fn squeezed_variance(xi: f64, params: &CavityParams) -> f64 {
    let g = params.gamma();
    0.5 * (params.gamma_i() / g + params.gamma_c() / g * (-2.0 * xi).exp())
}

/// `(Σ sinh²ξ)² / Σ sinh⁴ξ`
pub fn effective_mode_number(xi: &[f64]) -> Result<f64> {
    let (s2, s4) = xi.iter().fold((0.0, 0.0), |(a, b), x| {
        let s = x.sinh().powi(2);
        (a + s, b + s * s)
    });
    if s4 == 0.0 {
        return Err(Error::UndefinedModeNumber);
    }
    Ok(s2 * s2 / s4)
}

/// Shot-noise-relative squeezing, positive for variance below vacuum.
pub fn squeezing_db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(invalid(format!("variance must be positive, got {variance}")));
    }
    Ok(-10.0 * (variance / VACUUM_VARIANCE).log10())
}

/// Second moments of the output bus field under vacuum at every input.
#[derive(Debug, Clone)]
pub struct GaussianMoments {
    /// `⟨a_j a_k⟩`
    pub m_aa: CMatrix,
    /// `⟨a_j† a_k⟩`
    pub m_ada: CMatrix,
}

impl GaussianMoments {
    pub fn n(&self) -> usize {
        self.m_aa.nrows()
    }

    /// Mean photon number summed over all modes.
    pub fn total_photons(&self) -> f64 {
        self.m_ada.trace().re
    }
}

/// Propagates vacuum through `a_out = A a_in + B a_in† + C a⁽ⁱ⁾ + D a⁽ⁱ⁾†`.
pub fn output_moments(s: &ScatteringMatrix) -> GaussianMoments {
    let bus = s.io_block(Port::Bus, Port::Bus);
    let loss = s.io_block(Port::Bus, Port::Loss);
    let m_aa = mul(&bus.a, &bus.b.transpose()) + mul(&loss.a, &loss.b.transpose());
    let m_ada = mul(&bus.b.map(|z| z.conj()), &bus.b.transpose())
        + mul(&loss.b.map(|z| z.conj()), &loss.b.transpose());
    GaussianMoments { m_aa, m_ada }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homodyne {
    /// Variance at the requested phase.
    pub variance: f64,
    /// Phase minimizing the variance.
    pub min_phase: f64,
    pub min_variance: f64,
    /// `⟨a_f† a_f⟩`
    pub photons: f64,
    /// `⟨a_f a_f⟩`
    pub pair_amplitude: Complex64,
}

/// Quadrature `X(φ) = (a_f e^{−iφ} + a_f† e^{iφ})/√2` of the mode
/// `a_f = step · Σ lo_j* a_j`.
pub fn homodyne_variance(m: &GaussianMoments, lo: &ModeShape, phase: f64) -> Result<Homodyne> {
    if lo.grid().n_points() != m.n() {
        return Err(Error::GridMismatch(format!(
            "LO has {} samples, moments cover {} modes",
            lo.grid().n_points(),
            m.n()
        )));
    }
    let norm = lo.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(invalid(format!("LO is not unit-normalized (step·Σ|f|² = {norm})")));
    }
    let c = lo.unit_vector();
    let n = c.len();
    let mut photons = Complex64::new(0.0, 0.0);
    let mut pair = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let mut row_ada = Complex64::new(0.0, 0.0);
        let mut row_aa = Complex64::new(0.0, 0.0);
        for k in 0..n {
            row_ada += m.m_ada[(j, k)] * c[k].conj();
            row_aa += m.m_aa[(j, k)] * c[k].conj();
        }
        photons += c[j] * row_ada;
        pair += c[j].conj() * row_aa;
    }
    let photons = photons.re;
    let variance = VACUUM_VARIANCE + photons + (Complex64::from_polar(1.0, -2.0 * phase) * pair).re;
    let min_phase = ((pair.arg() + PI) / 2.0).rem_euclid(PI);
    Ok(Homodyne {
        variance,
        min_phase,
        min_variance: VACUUM_VARIANCE + photons - pair.norm(),
        photons,
        pair_amplitude: pair,
    })
}

/// Intensity FWHM of `|f(ν)|²`, linearly interpolated between samples.
pub fn mode_fwhm(mode: &ModeShape) -> Result<f64> {
    let pts = mode.grid().points();
    let power: Vec<f64> = mode.amplitude().iter().map(|a| a.norm_sqr()).collect();
    let peak = power.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(invalid("mode profile is identically zero"));
    }
    let half = peak / 2.0;
    let mut crossings = Vec::new();
    for j in 0..power.len() - 1 {
        let (a, b) = (power[j] - half, power[j + 1] - half);
        if (a < 0.0) != (b < 0.0) {
            let frac = a / (a - b);
            crossings.push(pts[j] + frac * (pts[j + 1] - pts[j]));
        }
    }
    match crossings.as_slice() {
        [lo, hi] => Ok(hi - lo),
        _ => Err(Error::AmbiguousFwhm { crossings }),
    }
}

/// Per-mode summary of a decomposed operating point.
#[derive(Debug, Clone)]
pub struct SqueezeReport {
    pub variances: Vec<f64>,
    pub db: Vec<f64>,
    /// NaN when no mode is squeezed.
    pub k: f64,
    pub below_pair_generation: bool,
    /// Intensity FWHM of the first input characteristic mode.
    pub fwhm1: Option<f64>,
}

pub fn squeeze_report(
    dec: &SqueezingDecomposition,
    params: &CavityParams,
    grid: &FrequencyGrid,
) -> Result<SqueezeReport> {
    let variances: Vec<f64> = dec.xi.iter().map(|&x| squeezed_variance(x, params)).collect();
    let db = variances.iter().map(|&v| squeezing_db(v)).collect::<Result<Vec<_>>>()?;
    let (k, below) = match effective_mode_number(&dec.xi) {
        Ok(k) => (k, false),
        Err(Error::UndefinedModeNumber) => (f64::NAN, true),
        Err(e) => return Err(e),
    };
    let fwhm1 = if below {
        None
    } else {
        let (input, _) = characteristic_modes(dec, 0, grid)?;
        mode_fwhm(&input).ok()
    };
    Ok(SqueezeReport {
        variances,
        db,
        k,
        below_pair_generation: below,
        fwhm1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{core_scattering, passive_generator, BlockMatrix};
    use std::f64::consts::LN_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn variance_formula() {
        let p = CavityParams::default();
        assert!((squeezed_variance(0.0, &p) - 0.5).abs() < 1e-15);
        let lossless = CavityParams::new(0.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert!((squeezed_variance(1.0, &lossless) - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((squeezed_variance(1.0, &lossless) - 0.0676676).abs() < 1e-7);
        assert!((squeezed_variance(60.0, &p) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn decibels() {
        assert_eq!(squeezing_db(0.5).unwrap(), 0.0);
        assert!((squeezing_db(0.05).unwrap() - 10.0).abs() < 1e-12);
        assert!((squeezing_db(0.0625).unwrap() - 9.0309).abs() < 1e-4);
        assert!(squeezing_db(0.0).is_err());
        assert!(squeezing_db(-1.0).is_err());
    }

    #[test]
    fn mode_number_cases() {
        assert!((effective_mode_number(&[0.7, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((effective_mode_number(&[0.3, 0.3]).unwrap() - 2.0).abs() < 1e-14);
        // direct arithmetic
        let (a, b) = (0.8f64.sinh().powi(2), 0.4f64.sinh().powi(2));
        assert!((a - 0.7887322).abs() < 1e-7 && (b - 0.1687175).abs() < 1e-7);
        let k = effective_mode_number(&[0.8, 0.4]).unwrap();
        assert!((k - (a + b).powi(2) / (a * a + b * b)).abs() < 1e-14);
        assert!((k - 1.409100).abs() < 1e-6);
        assert_eq!(effective_mode_number(&[0.0, 0.0]), Err(Error::UndefinedModeNumber));
    }

    #[test]
    fn passive_cavity_outputs_vacuum() {
        let params = CavityParams::default();
        let grid = FrequencyGrid::new(8.0, 16).unwrap();
        let s = core_scattering(&passive_generator(&grid, &params)).unwrap();
        let m = output_moments(&s);
        assert!(m.m_aa.camax() < 1e-15 && m.m_ada.camax() < 1e-15);
        let lo = ModeShape::normalized(grid, vec![c(1.0, 0.5); 16]).unwrap();
        for phi in [0.0, 0.4, 1.3] {
            let h = homodyne_variance(&m, &lo, phi).unwrap();
            assert!((h.variance - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn single_mode_photon_number_matches_closed_form() {
        // Lossy single mode: ⟨a†a⟩ = |B_bus|² + |B_loss|² with B = −√γ_out g √γ_in / det
        let params = CavityParams::default();
        let g = c(0.2, 0.1);
        let m = BlockMatrix::uniform(vec![0.0], &params, CMatrix::from_element(1, 1, g)).unwrap();
        let s = core_scattering(&m).unwrap();
        let mom = output_moments(&s);
        let det = 0.25 - g.norm_sqr();
        let (gc, gi) = (params.gamma_c(), params.gamma_i());
        let expected = g.norm_sqr() / (det * det) * (gc * gc + gc * gi);
        assert!((mom.m_ada[(0, 0)].re - expected).abs() < 1e-14);
    }

    #[test]
    fn unnormalized_lo_is_rejected() {
        let grid = FrequencyGrid::new(2.0, 2).unwrap();
        let m = GaussianMoments { m_aa: CMatrix::zeros(2, 2), m_ada: CMatrix::zeros(2, 2) };
        let bad = ModeShape::normalized(grid, vec![c(1.0, 0.0); 2]).unwrap();
        // sneak an unnormalized profile past the constructor check
        let raw: Vec<Complex64> = bad.amplitude().iter().map(|a| a * 2.0).collect();
        assert!(ModeShape::new(grid, raw).is_err());
        let wrong = GaussianMoments { m_aa: CMatrix::zeros(3, 3), m_ada: CMatrix::zeros(3, 3) };
        assert!(matches!(homodyne_variance(&wrong, &bad, 0.0), Err(Error::GridMismatch(_))));
        assert!(homodyne_variance(&m, &bad, 0.0).is_ok());
    }

    #[test]
    fn fwhm_of_gaussian_and_lorentzian() {
        let grid = FrequencyGrid::new(40.0, 4001).unwrap();
        let delta = 3.0;
        let gauss: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|nu| c((-4.0 * LN_2 * nu * nu / (delta * delta)).exp(), 0.0))
            .collect();
        let m = ModeShape::normalized(grid, gauss).unwrap();
        assert!((mode_fwhm(&m).unwrap() - delta / 2f64.sqrt()).abs() < 1e-4);

        // amplitude 1/(ν² + (γ/2)²): intensity FWHM γ·√(√2 − 1)
        let gamma = 1.0;
        let lor: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|nu| c(1.0 / (nu * nu + gamma * gamma / 4.0), 0.0))
            .collect();
        let m = ModeShape::normalized(grid, lor).unwrap();
        let expected = gamma * (2f64.sqrt() - 1.0).sqrt();
        assert!((mode_fwhm(&m).unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn fwhm_flags_multiple_peaks() {
        let grid = FrequencyGrid::new(20.0, 201).unwrap();
        let two: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|nu| c((-(nu - 4.0).powi(2)).exp() + (-(nu + 4.0).powi(2)).exp(), 0.0))
            .collect();
        let m = ModeShape::normalized(grid, two).unwrap();
        match mode_fwhm(&m) {
            Err(Error::AmbiguousFwhm { crossings }) => assert_eq!(crossings.len(), 4),
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }
}
