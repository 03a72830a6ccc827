//! End-to-end runs over a single image.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geom::Point;
use crate::raster::{binarize, BinarizeMethod, BinaryImage, GrayImage};
use crate::render::{chamfer, render_online, Chamfer};
use crate::resample::{constant_velocity_resample, max_accel_resample, ResampleParams, SampledStroke};
use crate::sequence::{order_strokes, OnlineSequence};
use crate::skeleton::{vectorize, StrokeSet};
use crate::thinning::try_thin;

/// How geometric strokes become time-sampled strokes. Samples are snapped
/// to the [`SNAP`](crate::geom::SNAP) grid so delta encodings replay exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resampler {
    MaxAccel(ResampleParams),
    /// Fixed arc-length step.
    ConstVel(f64),
    /// Keep the skeleton vertices as samples.
    None,
}

impl Resampler {
    pub fn apply(&self, points: &[Point]) -> Result<SampledStroke> {
        let mut stroke = match self {
            Resampler::MaxAccel(p) => max_accel_resample(points, p),
            Resampler::ConstVel(speed) => constant_velocity_resample(points, *speed)?,
            Resampler::None => SampledStroke::new(points.to_vec()),
        };
        for p in &mut stroke.samples {
            *p = p.snap();
        }
        Ok(stroke)
    }
}

/// Resamples each stroke in parallel; output order follows input order.
pub fn resample_strokes(strokes: &StrokeSet, resampler: &Resampler) -> Result<Vec<SampledStroke>> {
    strokes
        .strokes
        .par_iter()
        .map(|s| resampler.apply(&s.points))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub binary: BinaryImage,
    pub skeleton: BinaryImage,
    pub strokes: StrokeSet,
    pub sequence: OnlineSequence,
}

pub fn run(img: &GrayImage, binarizer: BinarizeMethod, resampler: &Resampler) -> Result<PipelineOutput> {
    run_binary(binarize(img, binarizer), resampler)
}

pub fn run_binary(binary: BinaryImage, resampler: &Resampler) -> Result<PipelineOutput> {
    let skeleton = try_thin(&binary)?;
    let strokes = vectorize(&skeleton)?;
    let sequence = order_strokes(resample_strokes(&strokes, resampler)?)?;
    Ok(PipelineOutput {
        binary,
        skeleton,
        strokes,
        sequence,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Roundtrip {
    pub chamfer: Chamfer,
    pub strokes: usize,
    pub samples: usize,
    pub fallback_strokes: usize,
}

/// Thins, vectorizes and resamples a binary image, renders the sequence
/// back and compares it with the skeleton.
pub fn roundtrip_binary(binary: BinaryImage, resampler: &Resampler) -> Result<(PipelineOutput, Roundtrip)> {
    let out = run_binary(binary, resampler)?;
    let rendered = render_online(&out.sequence, out.skeleton.width(), out.skeleton.height())?;
    let report = Roundtrip {
        chamfer: chamfer(&out.skeleton, &rendered)?,
        strokes: out.sequence.strokes.len(),
        samples: out.sequence.sample_count(),
        fallback_strokes: out.sequence.strokes.iter().filter(|s| s.fallback).count(),
    };
    Ok((out, report))
}
