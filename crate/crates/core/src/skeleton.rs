//! Skeleton bitmap → acyclic, junction-free strokes.
//!
//! Foreground pixels become graph nodes joined to their 8-neighbours.
//! Triangle clusters (thick spots of the skeleton) are collapsed, junction
//! nodes are split into one copy per incident edge, every remaining loop is
//! cut at its top-most node, and each resulting path is walked into a
//! [`Stroke`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::raster::BinaryImage;

/// Undirected graph over positioned nodes. Adjacency lists are kept sorted
/// and free of duplicates and self-loops.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PixelGraph {
    nodes: Vec<Point>,
    adj: Vec<Vec<usize>>,
}

impl PixelGraph {
    pub fn new(nodes: Vec<Point>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = PixelGraph {
            adj: vec![Vec::new(); nodes.len()],
            nodes,
        };
        for (u, v) in edges {
            if u >= g.len() || v >= g.len() {
                return Err(Error::Contract(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::Contract(format!("self-loop at node {u}")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn neighbours(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Each edge once, as `(low, high)`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    fn push_node(&mut self, p: Point) -> usize {
        self.nodes.push(p);
        self.adj.push(Vec::new());
        self.nodes.len() - 1
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        if let Err(i) = self.adj[u].binary_search(&v) {
            self.adj[u].insert(i, v);
        }
        if let Err(i) = self.adj[v].binary_search(&u) {
            self.adj[v].insert(i, u);
        }
    }

    fn remove_edge(&mut self, u: usize, v: usize) {
        if let Ok(i) = self.adj[u].binary_search(&v) {
            self.adj[u].remove(i);
        }
        if let Ok(i) = self.adj[v].binary_search(&u) {
            self.adj[v].remove(i);
        }
    }

    /// Connected components, each sorted ascending, ordered by their
    /// smallest node index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// True when every component is a simple path or a single node.
    pub fn is_path_forest(&self) -> bool {
        self.max_degree() <= 2
            && self
                .components()
                .iter()
                .all(|c| c.len() == 1 || c.iter().any(|&u| self.degree(u) == 1))
    }
}

/// Ordered polyline in pixel coordinates; serialized as `[[x, y], ...]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stroke {
    pub points: Vec<Point>,
}

impl Stroke {
    pub fn new(points: Vec<Point>) -> Self {
        Stroke { points }
    }

    /// Ends coincide: the stroke was a loop cut open at its first point.
    pub fn is_closed(&self) -> bool {
        self.points.len() > 1 && self.points.first() == self.points.last()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StrokeSet {
    pub strokes: Vec<Stroke>,
}

impl StrokeSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stroke set serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let set: StrokeSet =
            serde_json::from_str(s).map_err(|e| Error::format("stroke set JSON", e.to_string()))?;
        if set.strokes.iter().any(|s| s.points.is_empty()) {
            return Err(Error::format("stroke set JSON", "empty stroke"));
        }
        Ok(set)
    }
}

/// One node per foreground pixel (row-major), one edge per 8-adjacent pair.
pub fn build_graph(img: &BinaryImage) -> PixelGraph {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut index = vec![usize::MAX; w * h];
    let mut nodes = Vec::new();
    for (x, y) in img.iter_foreground() {
        index[y as usize * w + x as usize] = nodes.len();
        nodes.push(Point::new(x as f64, y as f64));
    }
    let mut g = PixelGraph {
        adj: vec![Vec::new(); nodes.len()],
        nodes,
    };
    // Forward half of the neighbourhood: E, SW, S, SE.
    const FORWARD: [(i64, i64); 4] = [(1, 0), (-1, 1), (0, 1), (1, 1)];
    for (x, y) in img.iter_foreground() {
        let u = index[y as usize * w + x as usize];
        for (dx, dy) in FORWARD {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if img.get_signed(nx, ny) {
                g.add_edge(u, index[ny as usize * w + nx as usize]);
            }
        }
    }
    g
}

fn triangles(g: &PixelGraph) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for u in 0..g.len() {
        for &v in g.neighbours(u).iter().filter(|&&v| v > u) {
            for &w in g.neighbours(v).iter().filter(|&&w| w > v) {
                if g.has_edge(u, w) {
                    out.push([u, v, w]);
                }
            }
        }
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Groups of triangles connected through shared edges, ordered by their
/// first triangle (triangles are enumerated lexicographically).
fn triangle_clusters(tris: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..tris.len()).collect();
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, &[a, b, c]) in tris.iter().enumerate() {
        for e in [(a, b), (a, c), (b, c)] {
            match owner.get(&e) {
                Some(&o) => {
                    let (ra, rb) = (find(&mut parent, o), find(&mut parent, t));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
                None => {
                    owner.insert(e, t);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for t in 0..tris.len() {
        let r = find(&mut parent, t);
        groups.entry(r).or_default().push(t);
    }
    groups.into_values().collect()
}

/// Interior nodes of a cluster and the edges of its triangles.
type Centre = (Vec<usize>, BTreeSet<(usize, usize)>);

/// Collapses triangle clusters.
///
/// Triangles sharing an edge form a cluster. A cluster node whose
/// neighbours all lie inside the cluster is interior; a cluster's interior
/// nodes are replaced by one node at their mean position that inherits all
/// their outside edges. Edges of the cluster's triangles that join two
/// nodes now both linked to the merged node are dropped, so the cluster
/// becomes a star around the merged node. Clusters without interior nodes
/// are left as they are.
pub fn collapse_clusters(g: &PixelGraph) -> PixelGraph {
    let tris = triangles(g);
    if tris.is_empty() {
        return g.clone();
    }

    const KEEP: usize = usize::MAX;
    // Per node: the cluster (by order) it merges into, or KEEP.
    let mut merged_into = vec![KEEP; g.len()];
    let mut centres: Vec<Centre> = Vec::new();
    for cluster in triangle_clusters(&tris) {
        let members: BTreeSet<usize> = cluster.iter().flat_map(|&t| tris[t]).collect();
        let interior: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&u| merged_into[u] == KEEP)
            .filter(|&u| g.neighbours(u).iter().all(|v| members.contains(v)))
            .collect();
        if interior.is_empty() {
            continue;
        }
        let id = centres.len();
        for &u in &interior {
            merged_into[u] = id;
        }
        let tri_edges = cluster
            .iter()
            .flat_map(|&t| {
                let [a, b, c] = tris[t];
                [(a, b), (a, c), (b, c)]
            })
            .collect();
        centres.push((interior, tri_edges));
    }
    if centres.is_empty() {
        return g.clone();
    }

    let mut out = PixelGraph::default();
    let mut remap = vec![usize::MAX; g.len()];
    for u in 0..g.len() {
        if merged_into[u] == KEEP {
            remap[u] = out.push_node(g.nodes[u]);
        }
    }
    let mut centre_index = Vec::with_capacity(centres.len());
    for (interior, _) in &centres {
        let n = interior.len() as f64;
        let sum = interior.iter().fold(Point::ZERO, |acc, &u| acc + g.nodes[u]);
        centre_index.push(out.push_node(Point::new(sum.x / n, sum.y / n)));
    }
    let target = |u: usize| match merged_into[u] {
        KEEP => remap[u],
        c => centre_index[c],
    };

    // Kept nodes linked to each merged node.
    let mut spokes: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); centres.len()];
    for (u, v) in g.edges() {
        match (merged_into[u], merged_into[v]) {
            (KEEP, KEEP) => {}
            (KEEP, c) => {
                spokes[c].insert(u);
            }
            (c, KEEP) => {
                spokes[c].insert(v);
            }
            _ => {}
        }
    }

    for (u, v) in g.edges() {
        let (tu, tv) = (target(u), target(v));
        if tu == tv {
            continue;
        }
        if merged_into[u] == KEEP && merged_into[v] == KEEP {
            let redundant = centres.iter().zip(&spokes).any(|((_, tri_edges), spoke)| {
                tri_edges.contains(&(u, v)) && spoke.contains(&u) && spoke.contains(&v)
            });
            if redundant {
                continue;
            }
        }
        out.add_edge(tu, tv);
    }
    out
}

/// Replaces every node of degree above two by one copy per incident edge.
/// The first copy reuses the node's index; further copies are appended.
pub fn split_junctions(g: &PixelGraph) -> PixelGraph {
    let mut out = PixelGraph {
        nodes: g.nodes.clone(),
        adj: vec![Vec::new(); g.len()],
    };
    // copies[u][k] = index standing in for u on its edge to neighbours(u)[k].
    let mut copies: Vec<Vec<usize>> = Vec::with_capacity(g.len());
    for u in 0..g.len() {
        let deg = g.degree(u);
        if deg <= 2 {
            copies.push(vec![u; deg]);
        } else {
            let mut c = vec![u];
            for _ in 1..deg {
                c.push(out.push_node(g.nodes[u]));
            }
            copies.push(c);
        }
    }
    let slot = |u: usize, v: usize| {
        let k = g.neighbours(u).binary_search(&v).expect("edge is symmetric");
        copies[u][k]
    };
    for (u, v) in g.edges() {
        out.add_edge(slot(u, v), slot(v, u));
    }
    out
}

/// Opens every pure cycle at its top-most node (smallest y, then x, then
/// index). The cut node keeps its edge to the neighbour further left
/// (smaller x, then smaller y), and a copy of it takes the other edge, so
/// the walk starts at the top heading left.
pub fn split_cycles(g: &PixelGraph) -> Result<PixelGraph> {
    if g.max_degree() > 2 {
        return Err(Error::Contract(
            "cycle splitting needs maximum degree 2; split junctions first".into(),
        ));
    }
    let mut out = g.clone();
    for comp in g.components() {
        if comp.len() < 3 || comp.iter().any(|&u| g.degree(u) != 2) {
            continue;
        }
        let top = *comp
            .iter()
            .min_by(|&&a, &&b| {
                let (pa, pb) = (g.nodes[a], g.nodes[b]);
                pa.y.total_cmp(&pb.y).then(pa.x.total_cmp(&pb.x)).then(a.cmp(&b))
            })
            .expect("component is non-empty");
        let [n1, n2] = [g.neighbours(top)[0], g.neighbours(top)[1]];
        let (p1, p2) = (g.nodes[n1], g.nodes[n2]);
        let keep_first = p1.x.total_cmp(&p2.x).then(p1.y.total_cmp(&p2.y)).then(n1.cmp(&n2)).is_le();
        let cut = if keep_first { n2 } else { n1 };
        out.remove_edge(top, cut);
        let copy = out.push_node(g.nodes[top]);
        out.add_edge(copy, cut);
    }
    Ok(out)
}

/// Walks every component of a path forest into a stroke, starting from its
/// lowest-indexed end. Consecutive duplicate positions are dropped.
pub fn extract_strokes(g: &PixelGraph) -> Result<StrokeSet> {
    if let Some(u) = (0..g.len()).find(|&u| g.degree(u) > 2) {
        return Err(Error::Contract(format!(
            "node {u} has degree {}; junctions must be split before extraction",
            g.degree(u)
        )));
    }
    let mut strokes = Vec::new();
    for comp in g.components() {
        let start = *comp
            .iter()
            .find(|&&u| g.degree(u) <= 1)
            .ok_or_else(|| Error::Contract(format!("component at node {} is a cycle", comp[0])))?;
        let mut points = vec![g.nodes[start]];
        let (mut prev, mut cur) = (usize::MAX, start);
        while let Some(&next) = g.neighbours(cur).iter().find(|&&v| v != prev) {
            if points.last() != Some(&g.nodes[next]) {
                points.push(g.nodes[next]);
            }
            prev = cur;
            cur = next;
        }
        strokes.push(Stroke::new(points));
    }
    Ok(StrokeSet { strokes })
}

/// Full bitmap-to-strokes conversion.
pub fn vectorize(img: &BinaryImage) -> Result<StrokeSet> {
    let g = build_graph(img);
    let g = collapse_clusters(&g);
    let g = split_junctions(&g);
    let g = split_cycles(&g)?;
    extract_strokes(&g)
}
