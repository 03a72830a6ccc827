//! Temporal resampling of geometric strokes.
//!
//! [`max_accel_resample`] picks a subsequence of densely pre-sampled stroke
//! points that traverses the stroke in as few time steps as possible while
//! no step changes the velocity by `max_accel` or more, starting and ending
//! at rest. Points may only be skipped when everything skipped stays within
//! `reach_threshold` of the straight line that replaces it, so the pen slows
//! down in curves and speeds up on straight runs.
//!
//! Positions are in pixels and velocities are displacements per step, so
//! `max_accel` is a pixel-valued bound on the per-step velocity change.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{arc_length, Point};

/// Tuning for [`max_accel_resample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleParams {
    pub max_accel: f64,
    pub presample_spacing: f64,
    pub reach_threshold: f64,
}

impl ResampleParams {
    /// Spacing defaults to a third of `max_accel` and the reach threshold to
    /// three pre-sample spacings, i.e. `max_accel` itself.
    pub fn from_accel(max_accel: f64) -> Result<Self> {
        Self::new(max_accel, None, None)
    }

    pub fn new(max_accel: f64, spacing: Option<f64>, reach: Option<f64>) -> Result<Self> {
        positive("max_accel", max_accel)?;
        let presample_spacing = match spacing {
            Some(s) => positive("presample_spacing", s)?,
            None => max_accel / 3.0,
        };
        let reach_threshold = match (reach, spacing) {
            (Some(t), _) => positive("reach_threshold", t)?,
            (None, Some(s)) => 3.0 * s,
            // 3 · (a / 3) is not always a in floating point.
            (None, None) => max_accel,
        };
        Ok(ResampleParams {
            max_accel,
            presample_spacing,
            reach_threshold,
        })
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParam(format!("{name} must be positive and finite, got {v}")))
    }
}

/// A stroke with one sample per time step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampledStroke {
    pub samples: Vec<Point>,
    /// Set when no trajectory met the terminal rest condition and the
    /// pre-sampled points were emitted instead.
    #[serde(default)]
    pub fallback: bool,
}

impl SampledStroke {
    pub fn new(samples: Vec<Point>) -> Self {
        SampledStroke {
            samples,
            fallback: false,
        }
    }

    /// Per-step velocities `s[k] - s[k-1]`, with the implicit rest velocity
    /// before the first sample and after the last one.
    pub fn velocities(&self) -> Vec<Point> {
        let mut v = Vec::with_capacity(self.samples.len() + 1);
        v.push(Point::ZERO);
        v.extend(self.samples.windows(2).map(|w| w[1] - w[0]));
        v.push(Point::ZERO);
        v
    }

    /// Largest velocity change between consecutive steps, rest states
    /// included.
    pub fn peak_accel(&self) -> f64 {
        self.velocities()
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    pub fn mean(&self) -> Point {
        let n = self.samples.len() as f64;
        let sum = self.samples.iter().fold(Point::ZERO, |acc, &p| acc + p);
        Point::new(sum.x / n, sum.y / n)
    }
}

/// Samples `points` at the given ascending arc-length offsets.
fn sample_at(points: &[Point], offsets: impl IntoIterator<Item = f64>) -> Vec<Point> {
    let mut out = Vec::new();
    let mut seg = 0usize;
    let mut seg_start = 0.0;
    let mut seg_len = points[0].distance(points[1]);
    for s in offsets {
        while s > seg_start + seg_len && seg + 2 < points.len() {
            seg_start += seg_len;
            seg += 1;
            seg_len = points[seg].distance(points[seg + 1]);
        }
        let t = if seg_len > 0.0 {
            ((s - seg_start) / seg_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(points[seg].lerp(points[seg + 1], t));
    }
    out
}

/// Resamples a polyline at `n = ceil(L / spacing)` equal arc-length
/// intervals of `L / n`. Endpoints are kept bit-exact.
pub fn presample_constant(points: &[Point], spacing: f64) -> Vec<Point> {
    let length = arc_length(points);
    if points.len() < 2 || length == 0.0 {
        return points.first().copied().into_iter().collect();
    }
    // Absorb rounding in L so an exact multiple does not gain an interval.
    let n = ((length / spacing) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let step = length / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(points[0]);
    out.extend(sample_at(points, (1..n).map(|k| k as f64 * step)));
    out.push(*points.last().unwrap());
    out
}

/// Arc-length resampling at a fixed interval `speed`; the final endpoint is
/// always kept, so the last gap may be shorter.
pub fn constant_velocity_resample(points: &[Point], speed: f64) -> Result<SampledStroke> {
    positive("speed", speed)?;
    let length = arc_length(points);
    if points.len() < 2 || length == 0.0 {
        return Ok(SampledStroke::new(points.first().copied().into_iter().collect()));
    }
    let n = ((length / speed) * (1.0 - 1e-12)).ceil() as usize;
    let mut samples = vec![points[0]];
    samples.extend(sample_at(points, (1..n).map(|k| k as f64 * speed)));
    samples.push(*points.last().unwrap());
    Ok(SampledStroke::new(samples))
}

/// Pairwise forward reachability over pre-sampled points.
///
/// `(i, k)` with `i < k` is reachable when every point `i..=k` lies closer
/// than the threshold to the infinite line through points `i` and `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachMatrix {
    n: usize,
    cells: Vec<bool>,
}

impl ReachMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, from: usize, to: usize) -> bool {
        self.cells[from * self.n + to]
    }
}

pub fn reachability(points: &[Point], threshold: f64) -> ReachMatrix {
    let n = points.len();
    let mut cells = vec![false; n * n];
    for i in 0..n {
        for k in i + 1..n {
            let (a, b) = (points[i], points[k]);
            cells[i * n + k] = points[i + 1..k]
                .iter()
                .all(|p| p.line_distance(a, b) < threshold);
        }
    }
    ReachMatrix { n, cells }
}

#[derive(Debug, Clone, Copy)]
struct State {
    /// Pre-sampled index this state was entered from.
    source: usize,
    velocity: Point,
    steps: u32,
    /// Index into the source node's state list.
    parent: usize,
}

/// Minimum-step traversal of `points` under the acceleration bound.
///
/// The stroke is pre-sampled at `presample_spacing`, then searched over
/// (position, incoming velocity) states. A state at point `k` entered from
/// point `j` carries velocity `p[k] - p[j]`; it extends a state at `j` with
/// velocity `u` iff `(j, k)` is reachable and `|(p[k] - p[j]) - u| < a`.
/// The search starts at rest on the first point, and the last step must be
/// able to halt: `|v_last| < a`. Edges only go forward, so the states are
/// relaxed point by point in stroke order with unit step cost. Ties pick the
/// predecessor state with the smallest source index.
pub fn max_accel_resample(points: &[Point], params: &ResampleParams) -> SampledStroke {
    let pre = presample_constant(points, params.presample_spacing);
    if pre.len() <= 1 {
        return SampledStroke::new(pre);
    }
    let reach = reachability(&pre, params.reach_threshold);
    let a = params.max_accel;
    let n = pre.len();

    let mut states: Vec<Vec<State>> = vec![Vec::new(); n];
    states[0].push(State {
        source: usize::MAX,
        velocity: Point::ZERO,
        steps: 0,
        parent: usize::MAX,
    });
    for k in 1..n {
        let mut here = Vec::new();
        for j in 0..k {
            if !reach.get(j, k) || states[j].is_empty() {
                continue;
            }
            let velocity = pre[k] - pre[j];
            let best = states[j]
                .iter()
                .enumerate()
                .filter(|(_, s)| (velocity - s.velocity).norm() < a)
                .min_by_key(|(_, s)| s.steps);
            if let Some((parent, prev)) = best {
                here.push(State {
                    source: j,
                    velocity,
                    steps: prev.steps + 1,
                    parent,
                });
            }
        }
        states[k] = here;
    }

    let terminal = states[n - 1]
        .iter()
        .enumerate()
        .filter(|(_, s)| s.velocity.norm() < a)
        .min_by_key(|(_, s)| s.steps);
    let Some((mut idx, _)) = terminal else {
        return SampledStroke {
            samples: pre,
            fallback: true,
        };
    };

    let mut node = n - 1;
    let mut path = vec![pre[node]];
    while node != 0 {
        let s = states[node][idx];
        node = s.source;
        idx = s.parent;
        path.push(pre[node]);
    }
    path.reverse();
    SampledStroke::new(path)
}
