use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// A 2D position or displacement in pixel units. `y` grows downward.
///
/// Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Grid step used by [`Point::snap`].
pub const SNAP: f64 = 1.0 / (1u64 << 20) as f64;

impl Point {
    pub const ZERO: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Rounds to the nearest multiple of [`SNAP`]. Within ±2^32 px, sums and
    /// differences of snapped values are exact in `f64`.
    pub fn snap(self) -> Point {
        let q = |v: f64| (v / SNAP).round() * SNAP;
        Point::new(q(self.x), q(self.y))
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    /// Distance from `self` to the infinite line through `a` and `b`.
    /// Falls back to the distance to `a` when the two coincide.
    pub fn line_distance(self, a: Point, b: Point) -> f64 {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return self.distance(a);
        }
        let r = self - a;
        (d.x * r.y - d.y * r.x).abs() / len
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Total arc length of a polyline.
pub fn arc_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}
