//! Rigorous convergence radii for Mayer series of the planar Yukawa gas.
//!
//! The crate computes the convergence machinery around the scale-decomposed
//! Yukawa interaction in two dimensions: Lambert-W pressure/density
//! majorants and their convergence radii, regularized coefficient flows with
//! collapse diagnostics, a brute-force Ursell-function oracle at small
//! particle number, and a charge-configuration optimizer extracting improved
//! stability constants.
//!
//! Modules
//! - [`special`]: Lambert W and the interaction kernels g, h.
//! - [`scale`]: scale function κ, stability rate Ḃ, interaction norm Γ.
//! - [`majorant`]: τ variants, thresholds β_k, radii, closed-form majorants.
//! - [`flow`]: coefficient ODE systems, dominance checks, collapse scans.
//! - [`ursell`]: connected-graph sums, sequence algebra, the flow oracle.
//! - [`stability`]: scaled-energy minimization and the δ_n constants.

pub mod charges;
pub mod error;
pub mod exec;
pub mod flow;
pub mod majorant;
pub mod quadrature;
pub mod scale;
pub mod special;
pub mod stability;
pub mod ursell;

pub use error::{Error, Result};
pub use quadrature::QuadratureSpec;
