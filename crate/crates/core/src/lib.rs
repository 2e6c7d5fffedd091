//! Monte Carlo simulation of satellite-to-ground quantum key distribution
//! encoded in the orbital angular momentum (OAM) of light.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`optics`] synthesizes Laguerre-Gaussian modes on a square grid.
//! 2. [`turbulence`] characterizes the slant path (Hufnagel-Valley profile,
//!    Rytov variance, Fried parameter), cuts it into slabs and draws
//!    modified von Karman phase screens.
//! 3. [`propagation`] pushes every mode through the same stack of screens
//!    with split-step angular-spectrum propagation.
//! 4. [`quantum`] and [`conjugation`] turn the received fields into
//!    crosstalk matrices, post-selected bipartite states, error rates and
//!    secret-key rates, with or without a Procrustean conjugate filter.
//!
//! [`harness`] ties these together into resumable, seeded campaigns.

pub mod conjugation;
pub mod dump;
pub mod error;
pub mod fft;
pub mod harness;
pub mod optics;
pub mod propagation;
pub mod quadrature;
pub mod quantum;
pub mod seeding;
pub mod turbulence;

pub use error::{Error, Result};
pub use num_complex::Complex64;
