//! Synthetic glyph bitmaps with known stroke structure.
//!
//! Every glyph comes as a 1-pixel skeleton drawn from straight segments,
//! together with an inked version (the skeleton dilated by a disk) and the
//! structure vectorizing the skeleton must produce.

use crate::geom::Point;
use crate::raster::BinaryImage;
use crate::render::draw_polyline;

type Polyline = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub strokes: usize,
    /// Strokes whose first and last points coincide (cut loops).
    pub closed: usize,
    /// Start of the cut loop, when there is exactly one.
    pub loop_start: Option<Point>,
    /// A position every stroke passes through.
    pub shared: Option<Point>,
}

#[derive(Debug, Clone)]
pub struct Glyph {
    pub name: String,
    pub skeleton: BinaryImage,
    pub thick: BinaryImage,
    pub expected: Expected,
}

const MARGIN: f64 = 6.0;

fn pt(x: f64, y: f64) -> Point {
    Point::new(x + MARGIN, y + MARGIN)
}

fn canvas_for(polylines: &[Vec<Point>]) -> BinaryImage {
    let (mut w, mut h) = (1.0f64, 1.0f64);
    for p in polylines.iter().flatten() {
        w = w.max(p.x);
        h = h.max(p.y);
    }
    BinaryImage::blank((w + MARGIN + 1.0) as u32, (h + MARGIN + 1.0) as u32).expect("positive size")
}

pub fn draw(polylines: &[Vec<Point>]) -> BinaryImage {
    let mut img = canvas_for(polylines);
    for line in polylines {
        draw_polyline(&mut img, line);
    }
    img
}

/// Sets every pixel within `radius` of a foreground pixel.
pub fn dilate(img: &BinaryImage, radius: f64) -> BinaryImage {
    let mut out = img.clone();
    let r = radius.floor() as i64;
    for (x, y) in img.iter_foreground() {
        for dy in -r..=r {
            for dx in -r..=r {
                if ((dx * dx + dy * dy) as f64) <= radius * radius {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && nx < img.width() as i64 && ny < img.height() as i64 {
                        out.set(nx as u32, ny as u32, true);
                    }
                }
            }
        }
    }
    out
}

fn glyph(name: String, lines: Vec<Vec<Point>>, expected: Expected, pen: f64) -> Glyph {
    let skeleton = draw(&lines);
    let thick = dilate(&skeleton, pen);
    Glyph {
        name,
        skeleton,
        thick,
        expected,
    }
}

fn open(strokes: usize) -> Expected {
    Expected {
        strokes,
        closed: 0,
        loop_start: None,
        shared: None,
    }
}

/// Octagonal ring with diagonal sides of `d` and straight sides of `s`
/// pixels; no three of its pixels are mutually adjacent.
fn octagon(ox: f64, oy: f64, d: f64, s: f64) -> Vec<Point> {
    let v = [
        (d, 0.0),
        (d + s, 0.0),
        (2.0 * d + s, d),
        (2.0 * d + s, d + s),
        (d + s, 2.0 * d + s),
        (d, 2.0 * d + s),
        (0.0, d + s),
        (0.0, d),
        (d, 0.0),
    ];
    v.iter().map(|&(x, y)| pt(ox + x, oy + y)).collect()
}

/// Thirty skeleton glyphs: straight and sloped bars, rings, plus signs,
/// crosses, L shapes and e-like loops with a tail.
pub fn glyph_suite() -> Vec<Glyph> {
    let mut out = Vec::new();
    let pen = 2.0;

    for len in [8.0, 15.0, 24.0] {
        out.push(glyph(format!("hbar-{len}"), vec![vec![pt(0.0, 0.0), pt(len, 0.0)]], open(1), pen));
    }
    for len in [10.0, 19.0] {
        out.push(glyph(format!("vbar-{len}"), vec![vec![pt(0.0, 0.0), pt(0.0, len)]], open(1), pen));
    }
    for len in [9.0, 16.0] {
        out.push(glyph(format!("diag-{len}"), vec![vec![pt(0.0, len), pt(len, 0.0)]], open(1), pen));
    }
    for (dx, dy) in [(20.0, 7.0), (6.0, 17.0)] {
        out.push(glyph(format!("slope-{dx}x{dy}"), vec![vec![pt(0.0, 0.0), pt(dx, dy)]], open(1), pen));
    }

    for (d, s) in [(1.0, 1.0), (3.0, 4.0), (5.0, 6.0), (7.0, 3.0), (4.0, 12.0)] {
        let ring = octagon(0.0, 0.0, d, s);
        let start = ring[0];
        out.push(glyph(
            format!("ring-{d}-{s}"),
            vec![ring],
            Expected {
                strokes: 1,
                closed: 1,
                loop_start: Some(start),
                shared: None,
            },
            if d + s > 4.0 { pen } else { 1.0 },
        ));
    }

    for arm in [2.0, 4.0, 7.0, 11.0] {
        let c = pt(arm, arm);
        out.push(glyph(
            format!("plus-{arm}"),
            vec![
                vec![pt(0.0, arm), pt(2.0 * arm, arm)],
                vec![pt(arm, 0.0), pt(arm, 2.0 * arm)],
            ],
            Expected {
                shared: Some(c),
                ..open(4)
            },
            pen,
        ));
    }

    for arm in [2.0, 5.0, 8.0, 12.0] {
        let c = pt(arm, arm);
        out.push(glyph(
            format!("x-{arm}"),
            vec![
                vec![pt(0.0, 0.0), pt(2.0 * arm, 2.0 * arm)],
                vec![pt(0.0, 2.0 * arm), pt(2.0 * arm, 0.0)],
            ],
            Expected {
                shared: Some(c),
                ..open(4)
            },
            pen,
        ));
    }

    for (i, (w, h)) in [(6.0, 9.0), (12.0, 12.0), (9.0, 18.0), (15.0, 8.0)].into_iter().enumerate() {
        // Corner at each of the four image corners in turn.
        let corner = match i {
            0 => [pt(0.0, 0.0), pt(0.0, h), pt(w, h)],
            1 => [pt(0.0, h), pt(w, h), pt(w, 0.0)],
            2 => [pt(0.0, 0.0), pt(w, 0.0), pt(w, h)],
            _ => [pt(w, 0.0), pt(0.0, 0.0), pt(0.0, h)],
        };
        out.push(glyph(format!("L-{i}"), vec![corner.to_vec()], open(1), pen));
    }

    for (d, s, tail) in [(2.0, 3.0, 4.0), (3.0, 5.0, 6.0), (4.0, 6.0, 9.0), (6.0, 4.0, 7.0)] {
        // The tail leaves the lower-right vertex diagonally, so the junction
        // pixel has degree three and no triangle forms around it.
        let ring = octagon(0.0, 0.0, d, s);
        let joint = ring[3];
        let tail_end = Point::new(joint.x + tail, joint.y + tail);
        out.push(glyph(
            format!("e-loop-{d}-{s}"),
            vec![ring, vec![joint, tail_end]],
            Expected {
                strokes: 2,
                closed: 1,
                loop_start: Some(joint),
                shared: Some(joint),
            },
            pen,
        ));
    }
    out
}

/// Smooth and cornered shapes beyond the structural suite: waves, spirals,
/// arcs and letter-like polylines. Each is returned as an inked bitmap.
pub fn curve_corpus() -> Vec<(String, BinaryImage)> {
    let mut out = Vec::new();
    let sample = |n: usize, f: &dyn Fn(f64) -> (f64, f64)| -> Vec<Point> {
        (0..=n).map(|i| {
            let (x, y) = f(i as f64 / n as f64);
            pt(x, y)
        })
        .collect()
    };
    let tau = std::f64::consts::TAU;

    for (i, (amp, periods)) in [(6.0, 1.0), (9.0, 1.5), (5.0, 2.5), (12.0, 1.0)].into_iter().enumerate() {
        let line = sample(120, &|t| (60.0 * t, amp + amp * (tau * periods * t).sin()));
        out.push((format!("wave-{i}"), dilate(&draw(&[line]), 2.0)));
    }
    for (i, turns) in [1.5, 2.2].into_iter().enumerate() {
        let line = sample(300, &|t| {
            let r = 4.0 + 16.0 * t;
            let a = tau * turns * t;
            (22.0 + r * a.cos(), 22.0 + r * a.sin())
        });
        out.push((format!("spiral-{i}"), dilate(&draw(&[line]), 1.5)));
    }
    for (i, sweep) in [0.5, 0.75, 0.9].into_iter().enumerate() {
        let line = sample(100, &|t| {
            let a = tau * sweep * t;
            (20.0 + 18.0 * a.cos(), 20.0 + 18.0 * a.sin())
        });
        out.push((format!("arc-{i}"), dilate(&draw(&[line]), 2.0)));
    }
    let letters: Vec<(&str, Vec<Polyline>)> = vec![
        ("N", vec![vec![(0.0, 30.0), (0.0, 0.0), (18.0, 30.0), (18.0, 0.0)]]),
        ("Z", vec![vec![(0.0, 0.0), (20.0, 0.0), (0.0, 28.0), (20.0, 28.0)]]),
        ("W", vec![vec![(0.0, 0.0), (8.0, 28.0), (16.0, 8.0), (24.0, 28.0), (32.0, 0.0)]]),
        ("A", vec![vec![(0.0, 30.0), (12.0, 0.0), (24.0, 30.0)], vec![(5.0, 18.0), (19.0, 18.0)]]),
        ("H", vec![vec![(0.0, 0.0), (0.0, 28.0)], vec![(18.0, 0.0), (18.0, 28.0)], vec![(0.0, 14.0), (18.0, 14.0)]]),
        ("K", vec![vec![(0.0, 0.0), (0.0, 28.0)], vec![(18.0, 0.0), (0.0, 14.0), (18.0, 28.0)]]),
        ("E", vec![vec![(20.0, 0.0), (0.0, 0.0), (0.0, 28.0), (20.0, 28.0)], vec![(0.0, 14.0), (14.0, 14.0)]]),
        ("M", vec![vec![(0.0, 28.0), (0.0, 0.0), (12.0, 16.0), (24.0, 0.0), (24.0, 28.0)]]),
        ("V", vec![vec![(0.0, 0.0), (10.0, 28.0), (20.0, 0.0)]]),
        ("Y", vec![vec![(0.0, 0.0), (10.0, 14.0), (20.0, 0.0)], vec![(10.0, 14.0), (10.0, 30.0)]]),
        ("hash", vec![vec![(6.0, 0.0), (6.0, 26.0)], vec![(16.0, 0.0), (16.0, 26.0)], vec![(0.0, 8.0), (22.0, 8.0)], vec![(0.0, 18.0), (22.0, 18.0)]]),
    ];
    for (name, lines) in letters {
        let lines: Vec<Vec<Point>> = lines
            .into_iter()
            .map(|l| l.into_iter().map(|(x, y)| pt(x, y)).collect())
            .collect();
        out.push((format!("letter-{name}"), dilate(&draw(&lines), 2.0)));
    }
    out
}

/// Standard 8-connected component count.
pub fn component_count(img: &BinaryImage) -> usize {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut seen = vec![false; (w * h) as usize];
    let mut count = 0;
    for (x, y) in img.iter_foreground() {
        let start = (y as i64 * w + x as i64) as usize;
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![(x as i64, y as i64)];
        while let Some((cx, cy)) = stack.pop() {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if img.get_signed(nx, ny) && !seen[(ny * w + nx) as usize] {
                        seen[(ny * w + nx) as usize] = true;
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    count
}
