//! Gaussian optimal transport on feature statistics.
//!
//! - [`linalg`]: symmetric PSD matrices and their spectral functions.
//! - [`gaussian`]: sample statistics, closed-form transport maps, McCann interpolation.
//! - [`frechet`]: weighted means of covariances under four metrics.
//! - [`pipeline`]: single and mixed style transfer over a feature codec.
//! - [`io`]: tensor, statistics, image and manifest files.

pub mod error;
pub mod frechet;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod pipeline;

pub use error::{Error, Result};
pub use frechet::{frechet_mean, FrechetSpec, MeanReport, Metric};
pub use gaussian::{GaussianStats, MapKind, SampleMatrix, TransportMap};
pub use linalg::SpdMatrix;
