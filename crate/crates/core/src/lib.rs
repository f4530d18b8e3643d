//! Spectral toolkit for the Kawahara equation
//!
//! ```text
//! u_t + u_xxxxx + α u_xxx + u u_x = 0,   x ∈ 𝕋 = ℝ/2πℤ,  α ∈ {−1, 0, 1}
//! ```
//!
//! The crate is organised around the rational/irrational time dichotomy of
//! the linear flow and the smoothing of the nonlinear Duhamel part:
//!
//! * [`spectral`]: Fourier states, grid functions, transforms, norms and
//!   convolutions.
//! * [`linear`]: exact propagation under `e^{Lt}`, rational-time translate
//!   decompositions and time classification.
//! * [`solver`]: integrating-factor RK4 time stepping, trajectories and
//!   conserved quantities.
//! * [`normal_form`]: the differentiation-by-parts operators `B`, `ρ`, `σ`,
//!   `R` and a numerical verifier of the Fourier-side representation.
//! * [`analysis`]: Littlewood–Paley blocks, Besov norms, decay slopes,
//!   box-counting dimension and a discrete Bourgain-norm diagnostic.
//! * [`data`], [`config`], [`experiment`]: initial data, flat-file
//!   configuration, and the dichotomy experiment with its reports.

pub mod analysis;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod linear;
pub mod normal_form;
pub mod phase;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use linear::{RationalTime, TimeClass, TranslateDecomposition};
pub use solver::{Scheme, SolverConfig, Trajectory};
pub use spectral::{DispersionSymbol, FourierState, RealGridFunction};
