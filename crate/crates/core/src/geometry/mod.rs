//! Point-to-hull projection, hull-to-hull distance estimates and a 2-D PCA
//! view of solution clouds.

mod hausdorff;
mod hull;
mod pca;
pub mod qp;
mod simplex;

pub use hausdorff::{
    directed_hull_distance, directed_hull_distance_with, distances_to_hull, hausdorff_estimate, max_with_index,
    HausdorffEstimate,
};
pub use hull::{dedup_representatives, dist_to_hull, dist_to_hull_with, Hull, HullProjection, DEDUP_TOL};
pub use pca::{pca_project_2d, principal_axes};
pub use qp::QpMethod;
pub use simplex::project_to_simplex;
