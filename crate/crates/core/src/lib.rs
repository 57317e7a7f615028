//! Goldstein–Taylor systems on the torus: fields, entropies, decay rates,
//! modal analysis, time integration and the auxiliary eigenvalue problems
//! behind the improved rates.

pub mod entropy;
pub mod fit;
pub mod init;
pub mod modal;
pub mod poincare;
pub mod rates;
pub mod solver;
pub mod telegrapher;
pub mod torus;

pub use entropy::{entropy2, entropy3, equivalence_bounds, EntropyParams, Variant};
pub use rates::{RateReport, RateSource, RelaxationProfile};
pub use torus::{ComplexGridFunction, FourierCoeffs, GridError, GridFunction};
