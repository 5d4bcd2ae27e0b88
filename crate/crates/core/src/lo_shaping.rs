//! Local-oscillator shaping with a single Lorentzian filter cavity.
//!
//! The LO is a Gaussian pulse passed through the drop port of a filter with
//! linewidth `γ_f`. Its overlap with the first output characteristic mode is
//! maximized over `γ_f` and a free time delay.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::decomposition::ModeShape;
use crate::error::{invalid, Error, Result};
use crate::grid::FrequencyGrid;
use crate::observables::{homodyne_variance, squeezing_db, GaussianMoments};

/// Search bracket for the filter linewidth, in units of γ.
pub const FILTER_BRACKET: (f64, f64) = (1e-2, 1e3);
/// Relative tolerance on the optimal linewidth.
pub const FILTER_TOLERANCE: f64 = 1e-4;

const COARSE_FILTER_POINTS: usize = 41;
const DELAY_OVERSAMPLING: usize = 8;

/// Bandwidth of the unfiltered LO relative to the pump bandwidth `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoBandwidth {
    /// `δ/√2`: the pump is the second harmonic of the LO pulse.
    #[default]
    Fundamental,
    /// `δ`
    Pump,
}

impl LoBandwidth {
    pub fn delta_lo(self, delta: f64) -> f64 {
        match self {
            LoBandwidth::Fundamental => delta / std::f64::consts::SQRT_2,
            LoBandwidth::Pump => delta,
        }
    }
}

impl std::str::FromStr for LoBandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fundamental" => Ok(LoBandwidth::Fundamental),
            "pump" => Ok(LoBandwidth::Pump),
            other => Err(invalid(format!("unknown LO bandwidth rule '{other}' (expected fundamental or pump)"))),
        }
    }
}

impl std::fmt::Display for LoBandwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LoBandwidth::Fundamental => "fundamental",
            LoBandwidth::Pump => "pump",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoConfig {
    /// Amplitude FWHM of the unfiltered Gaussian LO.
    pub delta_lo: f64,
    /// Filter linewidth; `f64::INFINITY` disables the filter.
    pub gamma_f: f64,
    pub delay: f64,
}

impl LoConfig {
    pub fn new(delta_lo: f64, gamma_f: f64, delay: f64) -> Result<Self> {
        if !(delta_lo > 0.0 && delta_lo.is_finite()) {
            return Err(invalid(format!("LO bandwidth must be positive, got {delta_lo}")));
        }
        if !(gamma_f > 0.0) {
            return Err(invalid(format!("filter linewidth must be positive, got {gamma_f}")));
        }
        if !delay.is_finite() {
            return Err(invalid("LO delay must be finite"));
        }
        Ok(LoConfig { delta_lo, gamma_f, delay })
    }

    /// Unfiltered LO.
    pub fn unfiltered(delta_lo: f64) -> Result<Self> {
        Self::new(delta_lo, f64::INFINITY, 0.0)
    }

    pub fn with_filter(self, gamma_f: f64) -> Result<Self> {
        Self::new(self.delta_lo, gamma_f, self.delay)
    }
}

/// `L(ν) ∝ exp(−4ln2 ν²/δ_lo²) · (γ_f/2)/(−iν + γ_f/2) · e^{iν·delay}`
pub fn filtered_lo(cfg: &LoConfig, grid: &FrequencyGrid) -> Result<ModeShape> {
    let amp = grid
        .points()
        .into_iter()
        .map(|nu| {
            let g = (-4.0 * LN_2 * nu * nu / (cfg.delta_lo * cfg.delta_lo)).exp();
            let filter = if cfg.gamma_f.is_finite() {
                let half = cfg.gamma_f / 2.0;
                Complex64::new(half, 0.0) / Complex64::new(half, -nu)
            } else {
                Complex64::new(1.0, 0.0)
            };
            Complex64::from_polar(g, nu * cfg.delay) * filter
        })
        .collect();
    ModeShape::normalized(*grid, amp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    /// `|step · Σ a* b e^{iντ}|²`
    pub value: f64,
    pub delay: f64,
}

fn overlap_at(g: &[Complex64], pts: &[f64], tau: f64) -> f64 {
    g.iter()
        .zip(pts)
        .map(|(x, nu)| x * Complex64::from_polar(1.0, nu * tau))
        .sum::<Complex64>()
        .norm_sqr()
}

/// Mode overlap, optionally maximized over a relative time delay.
pub fn overlap(a: &ModeShape, b: &ModeShape, optimize_delay: bool) -> Result<Overlap> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch("overlap needs both modes on one grid".into()));
    }
    let grid = a.grid();
    let step = grid.step();
    let pts = grid.points();
    let g: Vec<Complex64> = a
        .amplitude()
        .iter()
        .zip(b.amplitude())
        .map(|(x, y)| x.conj() * y * step)
        .collect();
    let direct = overlap_at(&g, &pts, 0.0);
    if !optimize_delay {
        return Ok(Overlap { value: direct.min(1.0), delay: 0.0 });
    }

    // Coarse scan: Σ g_j e^{iν_j τ} on τ_l = l·dτ via a zero-padded FFT.
    let n = g.len();
    let big = n * DELAY_OVERSAMPLING;
    let mut buf = vec![Complex64::new(0.0, 0.0); big];
    buf[..n].copy_from_slice(&g);
    FftPlanner::new().plan_fft_inverse(big).process(&mut buf);
    let dtau = 2.0 * PI / (big as f64 * step);
    let (best_l, _) = buf
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (l, z)| if z.norm_sqr() > acc.1 { (l, z.norm_sqr()) } else { acc });
    let wrap = |l: usize| if l >= big / 2 { l as f64 - big as f64 } else { l as f64 };
    let tau0 = wrap(best_l) * dtau;

    let f = |tau: f64| overlap_at(&g, &pts, tau);
    let (tau, value) = golden_max(f, tau0 - dtau, tau0 + dtau, 1e-12 * (1.0 + tau0.abs()).max(dtau));
    let (tau, value) = if direct >= value { (0.0, direct) } else { (tau, value) };
    Ok(Overlap { value: value.min(1.0), delay: tau })
}

/// Golden-section search for a maximum of a unimodal function on `[lo, hi]`.
fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptimum {
    pub gamma_f: f64,
    pub overlap: f64,
    pub delay: f64,
    /// The optimum sits on the edge of the search bracket.
    pub at_boundary: bool,
}

/// Maximizes the delay-optimized overlap over `γ_f` (log-spaced bracket).
pub fn optimize_filter(template: &LoConfig, target: &ModeShape) -> Result<FilterOptimum> {
    let grid = *target.grid();
    let objective = |log_gf: f64| -> Result<Overlap> {
        let lo = filtered_lo(&template.with_filter(log_gf.exp())?, &grid)?;
        overlap(&lo, target, true)
    };
    let (a, b) = (FILTER_BRACKET.0.ln(), FILTER_BRACKET.1.ln());
    let h = (b - a) / (COARSE_FILTER_POINTS - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..COARSE_FILTER_POINTS {
        let v = objective(a + h * i as f64)?.value;
        if v > best.1 {
            best = (i, v);
        }
    }
    let lo = (a + h * best.0 as f64 - h).max(a);
    let hi = (a + h * best.0 as f64 + h).min(b);

    let mut failure = None;
    let (x, _) = golden_max(
        |x| match objective(x) {
            Ok(o) => o.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        FILTER_TOLERANCE,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let x = if best.0 == 0 || best.0 == COARSE_FILTER_POINTS - 1 {
        let edge = a + h * best.0 as f64;
        // flat within round-off: prefer the bracket edge
        if objective(edge)?.value >= objective(x)?.value - 1e-12 { edge } else { x }
    } else {
        x
    };
    let at_boundary = (x - a).abs() <= 2.0 * FILTER_TOLERANCE || (b - x).abs() <= 2.0 * FILTER_TOLERANCE;
    let o = objective(x)?;
    Ok(FilterOptimum {
        gamma_f: x.exp(),
        overlap: o.value,
        delay: o.delay,
        at_boundary,
    })
}

/// Squeezing (dB) seen by homodyne detection with `lo` at its optimal phase.
pub fn measured_squeezing(m: &GaussianMoments, lo: &ModeShape) -> Result<f64> {
    let h = homodyne_variance(m, lo, 0.0)?;
    squeezing_db(h.min_variance)
}
