//! Convert offline handwriting skeletons into approximate online pen
//! trajectories.
//!
//! The pipeline runs binarize → thin → vectorize → resample → order, and the
//! result can be rendered back to a skeleton raster for round-trip checks.
//! A small retrieval-metric layer scores writer-identification rankings.

pub mod error;
pub mod geom;
pub mod pipeline;
pub mod raster;
pub mod render;
pub mod resample;
pub mod retrieval;
pub mod sequence;
pub mod skeleton;
pub mod synth;
pub mod thinning;

pub use error::{Error, Result};
pub use geom::Point;
pub use raster::{BinarizeMethod, BinaryImage, GrayImage};
pub use render::{chamfer, render_online, Chamfer};
pub use resample::{
    constant_velocity_resample, max_accel_resample, presample_constant, reachability,
    ReachMatrix, ResampleParams, SampledStroke,
};
pub use retrieval::{leave_one_out_eval, RetrievalProblem, RetrievalReport};
pub use sequence::{from_deltas, order_strokes, to_deltas, DeltaSequence, OnlineSequence};
pub use skeleton::{vectorize, PixelGraph, Stroke, StrokeSet};
pub use thinning::thin;
