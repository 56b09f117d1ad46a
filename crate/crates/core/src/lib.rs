//! Motion-guided detection frontend for aerial video.
//!
//! The crate estimates inter-frame homographies from ORB matches, extracts a
//! binary motion mask by dual-interval compensated differencing, and turns
//! that mask into soft attention over a feature pyramid.

pub mod attention;
mod brief_pairs;
pub mod error;
pub mod features;
pub mod geometry;
pub mod io;
pub mod motion;
pub mod pipeline;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Homography, Point, PointMatch, RansacParams};
pub use motion::{MotionMask, MotionParams};
pub use pipeline::{Mode, Pipeline, PipelineConfig};
pub use raster::{BinaryMask, Frame};
