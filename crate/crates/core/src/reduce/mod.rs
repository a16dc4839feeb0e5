//! Unsupervised dimension reduction fitted on training rows only.

pub mod bspline;
pub mod fpca;
pub mod pca;

pub use bspline::BSplineBasis;
pub use fpca::{fpca_fit, FpcaConfig, FpcaModel};
pub use pca::{pca_fit, Components, PcaModel};
