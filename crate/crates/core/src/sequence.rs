//! Stroke ordering and the online-sequence interchange formats.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::resample::SampledStroke;

/// Time-ordered strokes; the pen lifts between consecutive strokes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OnlineSequence {
    pub strokes: Vec<SampledStroke>,
}

impl OnlineSequence {
    pub fn sample_count(&self) -> usize {
        self.strokes.iter().map(|s| s.samples.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sequence serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let seq: OnlineSequence =
            serde_json::from_str(s).map_err(|e| Error::format("online sequence JSON", e.to_string()))?;
        if seq.strokes.iter().any(|s| s.samples.is_empty()) {
            return Err(Error::format("online sequence JSON", "empty stroke"));
        }
        Ok(seq)
    }
}

/// A stroke whose ends coincide came from cutting a loop; its start point
/// is the cut and must not move.
fn is_closed(samples: &[Point]) -> bool {
    samples.len() > 1 && samples.first() == samples.last()
}

/// Reverses the stroke if its last sample is further left (or, at equal x,
/// higher up) than its first.
fn orient(stroke: &mut SampledStroke) {
    let s = &stroke.samples;
    if s.len() < 2 || is_closed(s) {
        return;
    }
    let (first, last) = (s[0], s[s.len() - 1]);
    let flip = match last.x.total_cmp(&first.x) {
        Ordering::Less => true,
        Ordering::Equal => last.y < first.y,
        Ordering::Greater => false,
    };
    if flip {
        stroke.samples.reverse();
    }
}

/// Sorts strokes left to right by mean x, then mean y, then original
/// position, and orients each to start at its left-most end.
pub fn order_strokes(strokes: Vec<SampledStroke>) -> Result<OnlineSequence> {
    if let Some(i) = strokes.iter().position(|s| s.samples.is_empty()) {
        return Err(Error::Contract(format!("stroke {i} has no samples")));
    }
    let mut keyed: Vec<(Point, SampledStroke)> = strokes
        .into_iter()
        .map(|mut s| {
            orient(&mut s);
            (s.mean(), s)
        })
        .collect();
    // sort_by is stable, so equal means keep their input order.
    keyed.sort_by(|(a, _), (b, _)| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    Ok(OnlineSequence {
        strokes: keyed.into_iter().map(|(_, s)| s).collect(),
    })
}

/// Relative pen movements; `lift` is set on the last sample of every stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub dx: f64,
    pub dy: f64,
    pub lift: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaSequence {
    /// The first delta is relative to this point.
    pub origin: Point,
    pub deltas: Vec<Delta>,
}

/// Picks `d` with `base + d == target` in floating point when such a `d`
/// exists near the plain difference. For coordinates on the [`SNAP`] grid
/// the plain difference is already exact. Off-grid targets that no single
/// `d` reaches end up within an ulp, and the replay cursor absorbs the
/// error instead of accumulating it.
///
/// [`SNAP`]: crate::geom::SNAP
fn exact_step(base: f64, target: f64) -> f64 {
    let d = target - base;
    if base + d == target {
        return d;
    }
    let (mut up, mut down) = (d, d);
    for _ in 0..64 {
        up = up.next_up();
        if base + up == target {
            return up;
        }
        down = down.next_down();
        if base + down == target {
            return down;
        }
    }
    d
}

/// Encodes against the first sample as origin, so the first delta is zero.
pub fn to_deltas(seq: &OnlineSequence) -> DeltaSequence {
    let origin = seq
        .strokes
        .first()
        .and_then(|s| s.samples.first())
        .copied()
        .unwrap_or_default();
    to_deltas_from(seq, origin)
}

pub fn to_deltas_from(seq: &OnlineSequence, origin: Point) -> DeltaSequence {
    let mut cursor = origin;
    let mut deltas = Vec::with_capacity(seq.sample_count());
    for stroke in &seq.strokes {
        let last = stroke.samples.len().saturating_sub(1);
        for (i, p) in stroke.samples.iter().enumerate() {
            let dx = exact_step(cursor.x, p.x);
            let dy = exact_step(cursor.y, p.y);
            cursor = Point::new(cursor.x + dx, cursor.y + dy);
            deltas.push(Delta {
                dx,
                dy,
                lift: i == last,
            });
        }
    }
    DeltaSequence { origin, deltas }
}

/// Replays running sums from `origin`, starting a new stroke after every
/// lift. Samples after the final lift form a trailing stroke.
pub fn from_deltas(d: &DeltaSequence) -> OnlineSequence {
    let mut strokes = Vec::new();
    let mut current = Vec::new();
    let mut cursor = d.origin;
    for delta in &d.deltas {
        cursor = Point::new(cursor.x + delta.dx, cursor.y + delta.dy);
        current.push(cursor);
        if delta.lift {
            strokes.push(SampledStroke::new(std::mem::take(&mut current)));
        }
    }
    if !current.is_empty() {
        strokes.push(SampledStroke::new(current));
    }
    OnlineSequence { strokes }
}

/// Writes `dx,dy,lift` rows under a header. Values use the shortest decimal
/// form that parses back to the same `f64`.
pub fn write_deltas_csv(d: &DeltaSequence, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "dx,dy,lift")?;
    for delta in &d.deltas {
        writeln!(out, "{},{},{}", delta.dx, delta.dy, delta.lift as u8)?;
    }
    Ok(())
}

/// Parses the CSV written by [`write_deltas_csv`]; the origin is left at
/// zero for the caller to set.
pub fn read_deltas_csv(input: impl BufRead) -> Result<DeltaSequence> {
    let bad = |line: usize, msg: &str| Error::format("delta CSV", format!("line {line}: {msg}"));
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == "dx,dy,lift" => {}
        _ => return Err(bad(1, "expected header `dx,dy,lift`")),
    }
    let mut deltas = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| bad(i + 1, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [dx, dy, lift] = fields[..] else {
            return Err(bad(i + 1, "expected three fields"));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
        let lift = match lift {
            "0" => false,
            "1" => true,
            _ => return Err(bad(i + 1, "lift must be 0 or 1")),
        };
        deltas.push(Delta {
            dx: num(dx)?,
            dy: num(dy)?,
            lift,
        });
    }
    Ok(DeltaSequence {
        origin: Point::ZERO,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stroke(v: &[(f64, f64)]) -> SampledStroke {
        SampledStroke::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    fn mean_x(seq: &OnlineSequence) -> Vec<f64> {
        seq.strokes.iter().map(|s| s.mean().x).collect()
    }

    #[test]
    fn orders_by_mean_x() {
        let seq = order_strokes(vec![
            stroke(&[(5.0, 0.0)]),
            stroke(&[(2.0, 0.0)]),
            stroke(&[(9.0, 0.0)]),
        ])
        .unwrap();
        assert_eq!(mean_x(&seq), vec![2.0, 5.0, 9.0]);
    }

    #[test]
    fn single_stroke_keeps_order() {
        let s = stroke(&[(1.0, 1.0), (2.0, 3.0)]);
        let seq = order_strokes(vec![s.clone()]).unwrap();
        assert_eq!(seq.strokes, vec![s]);
    }

    #[test]
    fn equal_mean_x_breaks_tie_on_y() {
        let seq = order_strokes(vec![stroke(&[(4.0, 7.0)]), stroke(&[(4.0, 3.0)])]).unwrap();
        assert_eq!(seq.strokes[0].samples[0].y, 3.0);
    }

    #[test]
    fn full_ties_keep_input_order() {
        let a = SampledStroke { samples: vec![Point::new(1.0, 1.0)], fallback: true };
        let b = SampledStroke { samples: vec![Point::new(1.0, 1.0)], fallback: false };
        let seq = order_strokes(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(seq.strokes, vec![a, b]);
    }

    #[test]
    fn orients_left_to_right_then_top_down() {
        let seq = order_strokes(vec![
            stroke(&[(9.0, 0.0), (5.0, 1.0), (1.0, 0.0)]),
            stroke(&[(20.0, 8.0), (21.0, 4.0), (20.0, 2.0)]),
        ])
        .unwrap();
        assert_eq!(seq.strokes[0].samples[0], Point::new(1.0, 0.0));
        assert_eq!(seq.strokes[1].samples[0], Point::new(20.0, 2.0));
    }

    #[test]
    fn closed_strokes_keep_their_start() {
        let ring = stroke(&[(5.0, 0.0), (9.0, 4.0), (5.0, 8.0), (1.0, 4.0), (5.0, 0.0)]);
        let seq = order_strokes(vec![ring.clone()]).unwrap();
        assert_eq!(seq.strokes[0], ring);
    }

    #[test]
    fn empty_stroke_is_contract_violation() {
        let err = order_strokes(vec![stroke(&[(1.0, 1.0)]), SampledStroke::default()]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn deltas_by_hand() {
        let seq = OnlineSequence { strokes: vec![stroke(&[(0.0, 0.0), (1.0, 0.0), (1.0, 2.0)])] };
        let d = to_deltas(&seq);
        assert_eq!(d.origin, Point::ZERO);
        let triplets: Vec<(f64, f64, bool)> = d.deltas.iter().map(|t| (t.dx, t.dy, t.lift)).collect();
        assert_eq!(triplets, vec![(0.0, 0.0, false), (1.0, 0.0, false), (0.0, 2.0, true)]);
        assert_eq!(from_deltas(&d), seq);
    }

    #[test]
    fn empty_sequence_has_no_deltas() {
        let d = to_deltas(&OnlineSequence::default());
        assert!(d.deltas.is_empty());
        assert_eq!(from_deltas(&d), OnlineSequence::default());
    }

    #[test]
    fn exact_step_nudges_when_subtraction_rounds() {
        // -4.0 - 0.645 rounds so that adding it back misses -4.0.
        assert_ne!(0.645 + (-4.0 - 0.645), -4.0);
        for (base, target) in [(0.645, -4.0), (0.1, 0.3), (0.0, 5e-324), (-2.5, 7.125)] {
            assert_eq!(base + exact_step(base, target), target, "{base} -> {target}");
        }
    }

    #[test]
    fn off_grid_targets_stay_within_an_ulp() {
        // No single f64 d gives 0.7 + d == 0.1: sums near 0.1 built from
        // 0.7 land on a grid coarser than 0.1's ulp.
        let d = exact_step(0.7, 0.1);
        let got: f64 = 0.7 + d;
        assert!((got - 0.1).abs() <= 0.1f64.next_up() - 0.1 + f64::EPSILON * 0.7);
    }

    #[test]
    fn csv_round_trip() {
        let seq = OnlineSequence {
            strokes: vec![stroke(&[(0.125, 0.75), (1.3, 2.9)]), stroke(&[(7.25, -1.0)])].into_iter()
                .map(|s| SampledStroke::new(s.samples.iter().map(|p| p.snap()).collect()))
                .collect(),
        };
        let d = to_deltas_from(&seq, Point::ZERO);
        let mut buf = Vec::new();
        write_deltas_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dx,dy,lift\n"));
        assert_eq!(text.lines().filter(|l| l.ends_with(",1")).count(), 2);
        let back = read_deltas_csv(&buf[..]).unwrap();
        assert_eq!(back, d);
        assert_eq!(from_deltas(&back), seq);
    }

    #[test]
    fn csv_requires_header() {
        assert!(read_deltas_csv(&b"1,2,0\n"[..]).is_err());
        assert!(read_deltas_csv(&b"dx,dy,lift\n1,2,3\n"[..]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sequence() -> impl Strategy<Value = OnlineSequence> {
            proptest::collection::vec(
                proptest::collection::vec((-500.0f64..500.0, -500.0f64..500.0), 1..12),
                0..6,
            )
            .prop_map(|strokes| OnlineSequence {
                strokes: strokes.iter().map(|s| stroke(s)).collect(),
            })
        }

        /// Pipeline output lives on the snap grid.
        fn snapped_sequence() -> impl Strategy<Value = OnlineSequence> {
            sequence().prop_map(|seq| OnlineSequence {
                strokes: seq
                    .strokes
                    .iter()
                    .map(|s| SampledStroke::new(s.samples.iter().map(|p| p.snap()).collect()))
                    .collect(),
            })
        }

        fn sorted_positions(seq: &OnlineSequence) -> Vec<(u64, u64)> {
            let mut v: Vec<_> = seq
                .strokes
                .iter()
                .flat_map(|s| s.samples.iter().map(|p| (p.x.to_bits(), p.y.to_bits())))
                .collect();
            v.sort();
            v
        }

        proptest! {
            #[test]
            fn delta_round_trip_is_exact(seq in snapped_sequence()) {
                prop_assert_eq!(from_deltas(&to_deltas(&seq)), seq.clone());
                prop_assert_eq!(from_deltas(&to_deltas_from(&seq, Point::ZERO)), seq.clone());
                let d = to_deltas(&seq);
                prop_assert_eq!(d.deltas.iter().filter(|t| t.lift).count(), seq.strokes.len());
            }

            #[test]
            fn off_grid_round_trip_within_an_ulp(seq in sequence()) {
                let back = from_deltas(&to_deltas(&seq));
                prop_assert_eq!(back.strokes.len(), seq.strokes.len());
                for (a, b) in back.strokes.iter().zip(&seq.strokes) {
                    prop_assert_eq!(a.samples.len(), b.samples.len());
                    for (p, q) in a.samples.iter().zip(&b.samples) {
                        // Replay cursors stay below 1000 in magnitude.
                        let tol = 1000.0 * f64::EPSILON;
                        prop_assert!((p.x - q.x).abs() <= tol && (p.y - q.y).abs() <= tol);
                    }
                }
            }

            #[test]
            fn ordering_permutes_and_is_idempotent(seq in sequence()) {
                let once = order_strokes(seq.strokes.clone()).unwrap();
                prop_assert_eq!(sorted_positions(&once), sorted_positions(&seq));
                let xs = mean_x(&once);
                prop_assert!(xs.windows(2).all(|w| w[0] <= w[1]));
                let twice = order_strokes(once.strokes.clone()).unwrap();
                prop_assert_eq!(twice, once);
            }
        }
    }
}
