//! Global registration of LiDAR submaps against 2D wall models.
//!
//! A submap is segmented into planes, its walls are projected to a bird's-eye
//! raster and reduced to line segments and corners, and corner triplets are
//! hashed into triangle descriptors. Matching descriptors against a floor
//! database vote for SE(2) poses; the best clusters are re-scored against an
//! occupancy field built from the model.

pub mod config;
pub mod descriptor;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod ingest;
pub mod lines;
pub mod pipeline;
pub mod planes;
pub mod verify;
pub mod voting;

pub use config::{PipelineConfig, VotingMode};
pub use error::{Error, Result};
pub use geometry::{LineSegment2, Point2, Point3, Se2Pose};
pub use ingest::{Submap, WallModel};
pub use pipeline::{register, FloorIndex, Registration};
