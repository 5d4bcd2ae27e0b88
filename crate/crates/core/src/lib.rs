//! Pulsed squeezed-vacuum generation by parametric down-conversion in a
//! ring cavity driven by a pulsed pump.
//!
//! The pipeline discretizes the signal band, builds the frequency-domain
//! generator of the intracavity dynamics, forms the input-output scattering
//! map and factors it into independent squeezers (Bloch-Messiah). On top of
//! that sit the threshold analysis, squeezing observables, local-oscillator
//! shaping and the signal/idler generalization.

pub mod decomposition;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod lo_shaping;
pub mod nondegenerate;
pub mod observables;
pub mod pipeline;
pub mod sweep;
pub mod system;
pub mod threshold;

pub use error::{Error, Result};
