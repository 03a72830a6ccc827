//! Rasterize online sequences back to skeleton bitmaps and compare bitmaps
//! by chamfer distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::raster::BinaryImage;
use crate::sequence::OnlineSequence;

/// Coordinates beyond this magnitude are clamped before rasterizing; the
/// canvas can never be that large, so clamping only shortens off-canvas
/// parts of a segment.
const COORD_LIMIT: f64 = 1e12;

fn to_pixel(p: Point) -> Option<(i64, i64)> {
    if !p.x.is_finite() || !p.y.is_finite() {
        return None;
    }
    let c = |v: f64| v.round().clamp(-COORD_LIMIT, COORD_LIMIT) as i64;
    Some((c(p.x), c(p.y)))
}

/// Visits the pixels of the Bresenham line from `a` to `b` (inclusive) that
/// fall inside `[0, width) × [0, height)`.
///
/// Pixel `i` along the major axis sits at the minor offset
/// `round(i · d_minor / d_major)` with halves rounded away from the start,
/// which is the sequence classic Bresenham produces. Only the steps whose
/// major coordinate lies on the canvas are visited.
pub fn for_each_line_pixel(
    a: (i64, i64),
    b: (i64, i64),
    width: u32,
    height: u32,
    mut visit: impl FnMut(u32, u32),
) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let x_major = dx.abs() >= dy.abs();
    let (major0, minor0, dmaj, dmin, maj_len) = if x_major {
        (a.0, a.1, dx, dy, width as i64)
    } else {
        (a.1, a.0, dy, dx, height as i64)
    };
    let steps = dmaj.abs();
    let smaj = dmaj.signum();
    let smin = dmin.signum();

    // Range of i where major0 + smaj * i is in [0, maj_len).
    let (lo, hi) = if smaj >= 0 {
        (-major0, maj_len - 1 - major0)
    } else {
        (major0 - (maj_len - 1), major0)
    };
    let first = lo.max(0);
    let last = hi.min(steps);
    if steps == 0 {
        if first <= 0 && last >= 0 {
            emit(major0, minor0, x_major, width, height, &mut visit);
        }
        return;
    }
    let (adm, admin) = (steps as i128, dmin.abs() as i128);
    for i in first..=last {
        let off = ((2 * i as i128 * admin + adm) / (2 * adm)) as i64;
        emit(
            major0 + smaj * i,
            minor0 + smin * off,
            x_major,
            width,
            height,
            &mut visit,
        );
    }
}

fn emit(major: i64, minor: i64, x_major: bool, w: u32, h: u32, visit: &mut impl FnMut(u32, u32)) {
    let (x, y) = if x_major { (major, minor) } else { (minor, major) };
    if x >= 0 && y >= 0 && x < w as i64 && y < h as i64 {
        visit(x as u32, y as u32);
    }
}

/// Draws a 1-pixel segment; endpoints are rounded to the nearest pixel.
pub fn draw_segment(img: &mut BinaryImage, a: Point, b: Point) {
    let (Some(pa), Some(pb)) = (to_pixel(a), to_pixel(b)) else {
        return;
    };
    let (w, h) = (img.width(), img.height());
    for_each_line_pixel(pa, pb, w, h, |x, y| img.set(x, y, true));
}

pub fn draw_polyline(img: &mut BinaryImage, points: &[Point]) {
    match points {
        [] => {}
        [p] => draw_segment(img, *p, *p),
        _ => {
            for w in points.windows(2) {
                draw_segment(img, w[0], w[1]);
            }
        }
    }
}

/// Renders each stroke as connected Bresenham segments. No ink is laid
/// across pen lifts; off-canvas parts are clipped.
pub fn render_online(seq: &OnlineSequence, width: u32, height: u32) -> Result<BinaryImage> {
    let mut img = BinaryImage::blank(width, height)?;
    for stroke in &seq.strokes {
        draw_polyline(&mut img, &stroke.samples);
    }
    Ok(img)
}

/// Symmetric chamfer statistics between two bitmaps, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chamfer {
    pub mean_ab: f64,
    pub mean_ba: f64,
    pub max_ab: f64,
    pub max_ba: f64,
}

pub fn chamfer(a: &BinaryImage, b: &BinaryImage) -> Result<Chamfer> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    if a.count() == 0 || b.count() == 0 {
        return Err(Error::EmptyForeground);
    }
    let (mean_ab, max_ab) = directed(a, &squared_distance_transform(b));
    let (mean_ba, max_ba) = directed(b, &squared_distance_transform(a));
    Ok(Chamfer {
        mean_ab,
        mean_ba,
        max_ab,
        max_ba,
    })
}

fn directed(from: &BinaryImage, sq_dt: &[f64]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut n = 0usize;
    for (i, _) in from.foreground().iter().enumerate().filter(|(_, &f)| f) {
        let d = sq_dt[i].sqrt();
        sum += d;
        max = max.max(d);
        n += 1;
    }
    (sum / n as f64, max)
}

/// Exact squared Euclidean distance to the nearest foreground pixel, by the
/// separable lower-envelope transform of Felzenszwalb and Huttenlocher.
pub fn squared_distance_transform(img: &BinaryImage) -> Vec<f64> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut grid: Vec<f64> = img
        .foreground()
        .iter()
        .map(|&f| if f { 0.0 } else { f64::INFINITY })
        .collect();

    let mut column = vec![0.0; h];
    let mut out = vec![0.0; w.max(h)];
    for x in 0..w {
        for y in 0..h {
            column[y] = grid[y * w + x];
        }
        edt_1d(&column, &mut out[..h]);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    let mut row = vec![0.0; w];
    for y in 0..h {
        row.copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&row, &mut out[..w]);
        grid[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let mut started = false;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        let qf = q as f64;
        let intersect = |k: usize| {
            let p = v[k] as f64;
            ((f[q] + qf * qf) - (f[v[k]] + p * p)) / (2.0 * qf - 2.0 * p)
        };
        // z[0] is -inf, so the scan stops at k = 0 at the latest.
        let mut s = intersect(k);
        while s <= z[k] {
            k -= 1;
            s = intersect(k);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    if !started {
        d.iter_mut().for_each(|x| *x = f64::INFINITY);
        return;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let dq = qf - v[k] as f64;
        *out = dq * dq + f[v[k]];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resample::SampledStroke;

    fn seq(strokes: Vec<Vec<(f64, f64)>>) -> OnlineSequence {
        OnlineSequence {
            strokes: strokes
                .into_iter()
                .map(|s| SampledStroke {
                    samples: s.into_iter().map(|(x, y)| Point::new(x, y)).collect(),
                    fallback: false,
                })
                .collect(),
        }
    }

    fn pixels(img: &BinaryImage) -> Vec<(u32, u32)> {
        img.iter_foreground().collect()
    }

    #[test]
    fn empty_sequence_is_blank() {
        let img = render_online(&OnlineSequence::default(), 4, 3).unwrap();
        assert_eq!(img.count(), 0);
    }

    #[test]
    fn horizontal_run() {
        let img = render_online(&seq(vec![vec![(0.0, 0.0), (4.0, 0.0)]]), 6, 2).unwrap();
        assert_eq!(pixels(&img), vec![(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)]);
    }

    #[test]
    fn pen_lift_leaves_gap() {
        let img = render_online(
            &seq(vec![vec![(0.0, 0.0), (2.0, 0.0)], vec![(6.0, 0.0), (8.0, 0.0)]]),
            10,
            1,
        )
        .unwrap();
        for x in 3..6 {
            assert!(!img.get(x, 0));
        }
        assert_eq!(img.count(), 6);
    }

    #[test]
    fn single_sample_stroke_draws_a_dot() {
        let img = render_online(&seq(vec![vec![(1.4, 0.6)]]), 3, 3).unwrap();
        assert_eq!(pixels(&img), vec![(1, 1)]);
    }

    #[test]
    fn matches_classic_bresenham() {
        // Error-accumulating Bresenham, stepping the minor axis on ties.
        fn classic(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
            let (dx, dy) = ((x1 - x0).abs(), (y1 - y0).abs());
            let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
            let (major, minor) = (dx.max(dy), dx.min(dy));
            let mut err = 2 * minor - major;
            let (mut x, mut y) = (x0, y0);
            let mut out = vec![];
            for _ in 0..=major {
                out.push((x, y));
                if err >= 0 {
                    if dx >= dy { y += sy } else { x += sx }
                    err -= 2 * major;
                }
                err += 2 * minor;
                if dx >= dy { x += sx } else { y += sy }
            }
            out
        }
        for (x0, y0, x1, y1) in [
            (0, 0, 7, 3),
            (2, 9, 11, 1),
            (5, 5, 0, 0),
            (3, 0, 5, 10),
            (8, 2, 1, 6),
            (0, 0, 4, 2),
            (6, 6, 6, 1),
        ] {
            let mut got = vec![];
            for_each_line_pixel((x0, y0), (x1, y1), 20, 20, |x, y| got.push((x as i64, y as i64)));
            assert_eq!(got, classic(x0, y0, x1, y1), "({x0},{y0})->({x1},{y1})");
        }
    }

    #[test]
    fn clipping_never_panics() {
        let mut img = BinaryImage::blank(5, 5).unwrap();
        draw_segment(&mut img, Point::new(-1e300, 2.0), Point::new(1e300, 2.0));
        draw_segment(&mut img, Point::new(f64::NAN, 0.0), Point::new(1.0, 1.0));
        draw_segment(&mut img, Point::new(-50.0, -50.0), Point::new(-10.0, -3.0));
        assert_eq!(pixels(&img), (0..5).map(|x| (x, 2)).collect::<Vec<_>>());
    }

    #[test]
    fn clipped_segment_keeps_on_canvas_pixels() {
        let mut full = BinaryImage::blank(40, 40).unwrap();
        draw_segment(&mut full, Point::new(3.0, 5.0), Point::new(37.0, 21.0));
        let mut clipped = BinaryImage::blank(20, 20).unwrap();
        draw_segment(&mut clipped, Point::new(3.0, 5.0), Point::new(37.0, 21.0));
        for (x, y) in clipped.iter_foreground() {
            assert!(full.get(x, y));
        }
        let inside = full.iter_foreground().filter(|&(x, y)| x < 20 && y < 20).count();
        assert_eq!(inside, clipped.count());
    }

    fn brute_chamfer(a: &BinaryImage, b: &BinaryImage) -> (f64, f64) {
        let pb: Vec<_> = b.iter_foreground().collect();
        let ds: Vec<f64> = a
            .iter_foreground()
            .map(|(x, y)| {
                pb.iter()
                    .map(|&(u, v)| ((x as f64 - u as f64).powi(2) + (y as f64 - v as f64).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        (ds.iter().sum::<f64>() / ds.len() as f64, ds.iter().cloned().fold(0.0, f64::max))
    }

    #[test]
    fn chamfer_identical_is_zero() {
        let img = BinaryImage::from_ascii("#..#\n.##.\n").unwrap();
        let c = chamfer(&img, &img).unwrap();
        assert_eq!((c.mean_ab, c.mean_ba, c.max_ab, c.max_ba), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn chamfer_unit_shift() {
        // A vertical line against its copy one pixel to the right.
        let a = BinaryImage::from_ascii(".#..\n.#..\n.#..\n").unwrap();
        let b = BinaryImage::from_ascii("..#.\n..#.\n..#.\n").unwrap();
        let c = chamfer(&a, &b).unwrap();
        assert_eq!((c.mean_ab, c.mean_ba, c.max_ab, c.max_ba), (1.0, 1.0, 1.0, 1.0));
        // Overlapping pixels count zero: 4 of 5 pixels sit one away.
        let a = BinaryImage::from_ascii("#.#.....\n..##....\n.#......\n").unwrap();
        let b = BinaryImage::from_ascii(".#.#....\n...##...\n..#.....\n").unwrap();
        assert_eq!(chamfer(&a, &b).unwrap().mean_ab, 0.8);
    }

    #[test]
    fn chamfer_single_points() {
        let mut a = BinaryImage::blank(6, 6).unwrap();
        let mut b = a.clone();
        a.set(0, 0, true);
        b.set(3, 4, true);
        let c = chamfer(&a, &b).unwrap();
        assert_eq!((c.mean_ab, c.mean_ba, c.max_ab, c.max_ba), (5.0, 5.0, 5.0, 5.0));
    }

    #[test]
    fn chamfer_errors() {
        let a = BinaryImage::from_ascii("#.\n..\n").unwrap();
        let blank = BinaryImage::blank(2, 2).unwrap();
        assert!(matches!(chamfer(&a, &blank), Err(Error::EmptyForeground)));
        let other = BinaryImage::from_ascii("#..\n...\n").unwrap();
        assert!(matches!(chamfer(&a, &other), Err(Error::DimensionMismatch(..))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sparse_image(w: u32, h: u32) -> impl Strategy<Value = BinaryImage> {
            proptest::collection::vec(prop::bool::weighted(0.08), (w * h) as usize)
                .prop_map(move |fg| BinaryImage::new(w, h, fg).unwrap())
        }

        proptest! {
            #[test]
            fn distance_transform_matches_brute_force(
                (a, b) in (1u32..20, 1u32..20).prop_flat_map(|(w, h)| (sparse_image(w, h), sparse_image(w, h)))
            ) {
                prop_assume!(a.count() > 0 && b.count() > 0);
                let c = chamfer(&a, &b).unwrap();
                let (mean_ab, max_ab) = brute_chamfer(&a, &b);
                let (mean_ba, max_ba) = brute_chamfer(&b, &a);
                prop_assert!((c.mean_ab - mean_ab).abs() < 1e-9);
                prop_assert!((c.mean_ba - mean_ba).abs() < 1e-9);
                prop_assert!((c.max_ab - max_ab).abs() < 1e-9);
                prop_assert!((c.max_ba - max_ba).abs() < 1e-9);
            }

            #[test]
            fn render_is_clipping_safe(
                pts in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..6),
                w in 1u32..30, h in 1u32..30,
            ) {
                let s = seq(vec![pts]);
                let a = render_online(&s, w, h).unwrap();
                let b = render_online(&s, w, h).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
