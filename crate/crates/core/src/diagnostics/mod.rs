//! Loss-distribution overlap, two-sample KS, selection quality and
//! feature-geometry measurements.

mod geometry;
mod ks;
mod overlap;
mod selection;

pub use geometry::{feature_geometry, FeatureGeometry, GEOMETRY_CAP};
pub use ks::{kolmogorov_q, ks_statistic, ks_two_sample, KsResult};
pub use overlap::{histogram_overlap, loss_overlap, OverlapReport, DEFAULT_BINS};
pub use selection::{selection_quality, SelectionQuality};
