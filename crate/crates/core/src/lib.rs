//! CHSH tests with observables of arbitrary spectrum.
//!
//! Three layers:
//!
//! - [`povm`]: the finite-dimensional measurement model. Any Hermitian
//!   observable with spectrum in [-1, 1] defines a binary POVM
//!   E_pm = (1 pm A)/2, giving binary statistics (and a CHSH combination)
//!   without dichotomization.
//! - [`modular`]: the continuous-variable engine in modular coordinates:
//!   pointwise Bell blocks with eigenvalues pm 2 sqrt 2, wrapped-Gaussian
//!   wavepackets, quadrature Bell expectations, violation curves and
//!   threshold searches, plus expectations over wrapped position densities.
//! - [`photonics`]: the optical dictionary: grating synthesis, parameter
//!   maps onto modular wavepackets, Mach-Zehnder count probabilities,
//!   coincidence tables, and finite-shot sampling.
//!
//! ```
//! use chsh_core::modular::{bell_expectation, ModularFrame, ModularWavepacket};
//!
//! // near-delta packets at the origin reach the quantum maximum 2 sqrt 2
//! let frame = ModularFrame::default();
//! let packet = ModularWavepacket::from_fractions(0.0, 0.0, 1e-4, 1e-4, &frame)?;
//! let bell = bell_expectation(&packet, &packet, &frame, 64)?;
//! assert!((bell.value - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-3);
//! # Ok::<(), chsh_core::CoreError>(())
//! ```

pub mod error;
pub mod linalg;
pub mod modular;
pub mod photonics;
pub mod povm;
pub mod sampling;

pub use error::{CoreError, Result};
