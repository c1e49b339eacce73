//! Radial Caffarelli-Kohn-Nirenberg extremals: closed forms, weighted
//! quadrature, the linearized spectrum and stability remainder estimates.

pub mod cli;
pub mod closed_forms;
pub mod error;
pub mod params;
pub mod profile;
pub mod quadrature;
pub mod spectrum;
pub mod stability;

pub use closed_forms::{EigenfunctionW, ExtremalProfile, SharpConstant};
pub use error::{Error, Result};
pub use params::{CknParams, DerivedExponents};
pub use profile::{RadialFunction, RadialSamples};
pub use quadrature::{QuadratureResult, RadialGrid};
pub use spectrum::{full_spectrum, spectral_gap, SpectrumOptions, SpectrumTable};
pub use stability::{deficit, project_to_manifold, quotient_scan, Family, ScanReport};
