//! Numerical laboratory for Paley-Wiener spaces `PW_Ω(H_a) = χ_[0,Ω](H_a) L²`
//! of uniformly elliptic operators `H_a = -∑ ∂_j a_jk ∂_k` on a periodic box.
//!
//! The pipeline is: [`symbol`] (the coefficient field `a(x)`) →
//! [`operator`] (flux-form discretization) → [`spectral`] (eigenpairs,
//! spectral projection, reproducing kernel, heat kernel) → [`geometry`]
//! (measures, Beurling densities, averaged traces) and [`analysis`]
//! (frame/Riesz bounds, localization, limit kernels). [`constcoef`] holds
//! the closed-form constant-coefficient references used as oracles.

pub mod analysis;
pub mod constcoef;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod operator;
pub mod sparse;
pub mod special;
pub mod spectral;
pub mod symbol;

pub use analysis::{FrameReport, RieszReport};
pub use constcoef::Ellipsoid;
pub use error::{Error, Result};
pub use geometry::{DensityCurve, PointSet, WeightField, WeightKind};
pub use grid::{GridShift, GridSpec};
pub use operator::DiscreteOperator;
pub use spectral::{KernelMatrix, SpectralData};
pub use symbol::{Coeff, OscillationReport, SymbolField, SymbolRecipe};
