//! Leave-one-out ranking metrics for writer retrieval.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Read};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalProblem {
    dist: Vec<Vec<f64>>,
    labels: Vec<String>,
    query_mask: Vec<bool>,
    db_mask: Vec<bool>,
}

impl RetrievalProblem {
    /// Every sample is both a query and a database item.
    pub fn new(dist: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        Self::with_masks(dist, labels, vec![true; n], vec![true; n])
    }

    pub fn with_masks(
        dist: Vec<Vec<f64>>,
        labels: Vec<String>,
        query_mask: Vec<bool>,
        db_mask: Vec<bool>,
    ) -> Result<Self> {
        let n = labels.len();
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return bad(format!("distance matrix must be {n}x{n} to match the labels"));
        }
        if query_mask.len() != n || db_mask.len() != n {
            return bad(format!("query and database masks must have {n} entries"));
        }
        for (i, row) in dist.iter().enumerate() {
            if row[i].abs() > SYMMETRY_TOLERANCE {
                return bad(format!("dist[{i}][{i}] = {} is not zero", row[i]));
            }
            for (j, &a) in row.iter().enumerate() {
                let b = dist[j][i];
                if !a.is_finite() || a < 0.0 {
                    return bad(format!("dist[{i}][{j}] = {a} is not a finite non-negative value"));
                }
                if (a - b).abs() > SYMMETRY_TOLERANCE * a.abs().max(b.abs()).max(1.0) {
                    return bad(format!("dist[{i}][{j}] = {a} differs from dist[{j}][{i}] = {b}"));
                }
            }
        }
        Ok(RetrievalProblem {
            dist,
            labels,
            query_mask,
            db_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Database items for `query`, nearest first; ties go to the lower
    /// index. The query itself and excluded items are left out.
    pub fn ranking(&self, query: usize, excluded: &HashSet<(usize, usize)>) -> Vec<usize> {
        let mut items: Vec<usize> = (0..self.len())
            .filter(|&j| self.db_mask[j] && j != query && !excluded.contains(&(query, j)))
            .collect();
        let row = &self.dist[query];
        items.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        items
    }
}

fn two_decimals<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((v * 100.0).round() / 100.0)
}

fn two_decimals_map<S: Serializer>(m: &BTreeMap<usize, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &((v * 100.0).round() / 100.0))?;
    }
    map.end()
}

/// Metrics in percent. Serialized rounded to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalReport {
    #[serde(serialize_with = "two_decimals")]
    pub map: f64,
    #[serde(serialize_with = "two_decimals")]
    pub accuracy: f64,
    #[serde(serialize_with = "two_decimals_map")]
    pub soft: BTreeMap<usize, f64>,
    /// Queries left without any relevant database item.
    pub skipped: usize,
    #[serde(skip)]
    pub evaluated: usize,
}

/// Average precision over a ranked relevance list.
fn average_precision(relevant: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, &rel) in relevant.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    sum / hits as f64
}

/// Evaluates every query against the database minus itself and the
/// `(query, item)` pairs in `exclusions`. Relevant items share the query's
/// label. Queries with no relevant item left are counted as skipped.
pub fn leave_one_out_eval(
    problem: &RetrievalProblem,
    exclusions: &[(usize, usize)],
    soft_ks: &[usize],
) -> Result<RetrievalReport> {
    if soft_ks.contains(&0) {
        return Err(Error::InvalidParam("soft-K ranks start at 1".into()));
    }
    let excluded: HashSet<(usize, usize)> = exclusions.iter().copied().collect();
    let mut ap_sum = 0.0;
    let mut top1 = 0usize;
    let mut soft_hits = vec![0usize; soft_ks.len()];
    let mut evaluated = 0usize;
    let mut skipped = 0usize;

    for q in (0..problem.len()).filter(|&q| problem.query_mask[q]) {
        let relevant: Vec<bool> = problem
            .ranking(q, &excluded)
            .into_iter()
            .map(|j| problem.labels[j] == problem.labels[q])
            .collect();
        let Some(first_hit) = relevant.iter().position(|&r| r) else {
            skipped += 1;
            continue;
        };
        evaluated += 1;
        ap_sum += average_precision(&relevant);
        if first_hit == 0 {
            top1 += 1;
        }
        for (hits, &k) in soft_hits.iter_mut().zip(soft_ks) {
            if first_hit < k {
                *hits += 1;
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::InvalidParam(format!(
            "no query has a relevant database item ({skipped} skipped)"
        )));
    }
    let pct = |x: f64| 100.0 * x / evaluated as f64;
    Ok(RetrievalReport {
        map: pct(ap_sum),
        accuracy: pct(top1 as f64),
        soft: soft_ks
            .iter()
            .zip(&soft_hits)
            .map(|(&k, &h)| (k, pct(h as f64)))
            .collect(),
        skipped,
        evaluated,
    })
}

/// Header-free square matrix of decimal numbers.
pub fn read_distance_csv(input: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format("distance CSV", e.to_string()))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::format("distance CSV", format!("row {}: bad number {f:?}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// One identity per non-empty line.
pub fn read_labels(input: impl BufRead) -> Result<Vec<String>> {
    let mut labels = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::format("labels", e.to_string()))?;
        let line = line.trim();
        if !line.is_empty() {
            labels.push(line.to_string());
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Symmetric matrix from points on a line.
    fn line_dist(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect()
    }

    #[test]
    fn perfect_ranking_is_100() {
        // Writer pairs sit next to each other, pairs far apart.
        let xs = [0.0, 1.0, 10.0, 11.0, 20.0, 21.0];
        let p = RetrievalProblem::new(line_dist(&xs), labels(&["a", "a", "b", "b", "c", "c"])).unwrap();
        let r = leave_one_out_eval(&p, &[], &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(r.map, 100.0);
        assert_eq!(r.accuracy, 100.0);
        assert!(r.soft.values().all(|&v| v == 100.0));
        assert_eq!(r.skipped, 0);
    }

    /// Three queries whose only relevant item ranks 1st, 2nd and 4th.
    pub(crate) fn three_query_problem() -> RetrievalProblem {
        // Items: q0 q1 q2 | r0 r1 r2 | n0 n1 n2 (distractors, own labels).
        let l = labels(&["A", "B", "C", "A", "B", "C", "x", "y", "z"]);
        let n = l.len();
        let mut d = vec![vec![100.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        let mut set = |i: usize, j: usize, v: f64| {
            d[i][j] = v;
            d[j][i] = v;
        };
        // q0: r0 first.
        set(0, 3, 1.0);
        // q1: n0, then r1.
        set(1, 6, 1.0);
        set(1, 4, 2.0);
        // q2: n0, n1, n2, then r2.
        set(2, 6, 1.0);
        set(2, 7, 2.0);
        set(2, 8, 3.0);
        set(2, 5, 4.0);
        let mut queries = vec![false; n];
        queries[..3].fill(true);
        RetrievalProblem::with_masks(d, l, queries, vec![true; n]).unwrap()
    }

    #[test]
    fn ranks_one_two_four() {
        let r = leave_one_out_eval(&three_query_problem(), &[], &[1, 2, 3, 4]).unwrap();
        assert!((r.map - (1.0 + 0.5 + 0.25) / 3.0 * 100.0).abs() < 1e-9);
        assert!((r.map - 58.33).abs() < 0.01);
        assert!((r.accuracy - 33.33).abs() < 0.01);
        assert!((r.soft[&2] - 66.67).abs() < 0.01);
        assert_eq!(r.soft[&1], r.accuracy);
        assert_eq!(r.soft[&4], 100.0);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"map":58.33,"accuracy":33.33,"soft":{"1":33.33,"2":66.67,"3":66.67,"4":100.0},"skipped":0}"#
        );
    }

    #[test]
    fn excluded_relevant_item_skips_query() {
        let p = three_query_problem();
        let r = leave_one_out_eval(&p, &[(2, 5)], &[2]).unwrap();
        assert_eq!(r.skipped, 1);
        assert_eq!(r.evaluated, 2);
        assert!((r.map - 75.0).abs() < 1e-9);
        assert_eq!(r.accuracy, 50.0);
    }

    #[test]
    fn multi_relevant_average_precision() {
        // Relevant at ranks 1 and 3: (1/1 + 2/3) / 2.
        assert!((average_precision(&[true, false, true]) - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn ties_resolved_by_index() {
        let d = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let p = RetrievalProblem::new(d, labels(&["a", "b", "a"])).unwrap();
        assert_eq!(p.ranking(0, &HashSet::new()), vec![1, 2]);
        let r = leave_one_out_eval(&p, &[], &[1]).unwrap();
        // Query 0 ranks 1 before 2, so its match is second; query 2 ranks
        // 0 first. "b" has no match.
        assert_eq!(r.skipped, 1);
        assert_eq!(r.map, 75.0);
        assert_eq!(r.accuracy, 50.0);
    }

    #[test]
    fn rejects_malformed_problems() {
        assert!(RetrievalProblem::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]], labels(&["a", "b"])).is_err());
        assert!(RetrievalProblem::new(vec![vec![1.0]], labels(&["a"])).is_err());
        assert!(RetrievalProblem::new(vec![vec![0.0, -1.0], vec![-1.0, 0.0]], labels(&["a", "b"])).is_err());
        assert!(RetrievalProblem::new(vec![vec![0.0]], labels(&["a", "b"])).is_err());
        let p = RetrievalProblem::new(vec![vec![0.0]], labels(&["a"])).unwrap();
        assert!(leave_one_out_eval(&p, &[], &[1]).is_err());
        assert!(leave_one_out_eval(&three_query_problem(), &[], &[0]).is_err());
    }

    #[test]
    fn reads_csv_and_labels() {
        let d = read_distance_csv(&b"0, 1.5\n1.5,0\n"[..]).unwrap();
        assert_eq!(d, vec![vec![0.0, 1.5], vec![1.5, 0.0]]);
        assert!(read_distance_csv(&b"0,x\n"[..]).is_err());
        assert_eq!(read_labels(&b"w1\n\nw2\n"[..]).unwrap(), labels(&["w1", "w2"]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn problem() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
            (3usize..12).prop_flat_map(|n| {
                (
                    proptest::collection::vec(0.0f64..100.0, n),
                    proptest::collection::vec(0u8..3, n),
                )
            })
        }

        fn build(xs: &[f64], ls: &[u8]) -> RetrievalProblem {
            let l = ls.iter().map(|v| v.to_string()).collect();
            RetrievalProblem::new(line_dist(xs), l).unwrap()
        }

        proptest! {
            #[test]
            fn soft_k_monotone((xs, ls) in problem()) {
                let p = build(&xs, &ls);
                if let Ok(r) = leave_one_out_eval(&p, &[], &[1, 2, 3, 4, 5]) {
                    let v: Vec<f64> = r.soft.values().copied().collect();
                    prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
                    prop_assert_eq!(r.soft[&1], r.accuracy);
                }
            }

            #[test]
            fn invariant_under_monotone_transform((xs, ls) in problem()) {
                let a = build(&xs, &ls);
                let d: Vec<Vec<f64>> = line_dist(&xs).iter()
                    .map(|row| row.iter().map(|v| (v * 3.0).powi(3) + v.sqrt()).collect())
                    .collect();
                let b = RetrievalProblem::new(d, a.labels.clone()).unwrap();
                let (ra, rb) = (leave_one_out_eval(&a, &[], &[2]), leave_one_out_eval(&b, &[], &[2]));
                match (ra, rb) {
                    (Ok(ra), Ok(rb)) => prop_assert_eq!(ra, rb),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false),
                }
            }

            #[test]
            fn invariant_under_sample_permutation((xs, ls) in problem(), seed in any::<u64>()) {
                // Distinct distances keep index tie-breaking out of play.
                let xs: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x + i as f64 * 1e-3).collect();
                let mut order: Vec<usize> = (0..xs.len()).collect();
                let mut s = seed;
                for i in (1..order.len()).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                    order.swap(i, (s >> 33) as usize % (i + 1));
                }
                let pxs: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
                let pls: Vec<u8> = order.iter().map(|&i| ls[i]).collect();
                let (ra, rb) = (
                    leave_one_out_eval(&build(&xs, &ls), &[], &[2, 3]),
                    leave_one_out_eval(&build(&pxs, &pls), &[], &[2, 3]),
                );
                match (ra, rb) {
                    (Ok(ra), Ok(rb)) => {
                        prop_assert!((ra.map - rb.map).abs() < 1e-9);
                        prop_assert!((ra.accuracy - rb.accuracy).abs() < 1e-9);
                        prop_assert_eq!(ra.skipped, rb.skipped);
                    }
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false),
                }
            }
        }
    }
}
