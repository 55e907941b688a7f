//! Road graph with constant-speed travel times.
//!
//! Nodes carry planar coordinates in meters and an external integer label
//! (the id used in files). Internally nodes are addressed by a dense
//! [`NodeId`]. Shortest path lengths are cached per origin row; rows are
//! filled eagerly for small graphs and lazily otherwise, and the cache is
//! safe to read from several rollouts at once.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default vehicle speed, 36 km/h.
pub const DEFAULT_SPEED_MPS: f64 = 10.0;

/// Graphs up to this many nodes get a fully precomputed all-pairs table.
pub const DEFAULT_ALL_PAIRS_THRESHOLD: usize = 2_000;

/// Dense index of a node inside a [`RoadNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// External id as written in network and demand files.
    pub label: u32,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
}

#[derive(Debug)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    speed_mps: f64,
    by_label: HashMap<u32, NodeId>,
    // adjacency in CSR form
    offsets: Vec<usize>,
    targets: Vec<(u32, f64)>,
    rows: Vec<OnceLock<Box<[f64]>>>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>, speed_mps: f64) -> Result<Self> {
        Self::with_threshold(nodes, edges, speed_mps, DEFAULT_ALL_PAIRS_THRESHOLD)
    }

    /// Builds a network, validating every invariant. When the node count is
    /// at most `all_pairs_threshold` the full distance table is computed up
    /// front.
    pub fn with_threshold(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        speed_mps: f64,
        all_pairs_threshold: usize,
    ) -> Result<Self> {
        if !(speed_mps.is_finite() && speed_mps > 0.0) {
            return Err(Error::input(format!("speed must be positive, got {speed_mps}")));
        }
        if nodes.is_empty() {
            return Err(Error::input("network has no nodes"));
        }
        let mut by_label = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if by_label.insert(n.label, NodeId(i as u32)).is_some() {
                return Err(Error::input(format!("duplicate node id {}", n.label)));
            }
        }
        let n = nodes.len();
        for e in &edges {
            if e.from.index() >= n || e.to.index() >= n {
                return Err(Error::input(format!(
                    "edge {}->{} references a missing node",
                    e.from.0, e.to.0
                )));
            }
            if !(e.length_m.is_finite() && e.length_m > 0.0) {
                return Err(Error::input(format!(
                    "edge {}->{} has non-positive length {}",
                    nodes[e.from.index()].label,
                    nodes[e.to.index()].label,
                    e.length_m
                )));
            }
        }

        let mut degree = vec![0usize; n + 1];
        for e in &edges {
            degree[e.from.index() + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut targets = vec![(0u32, 0.0f64); edges.len()];
        for e in &edges {
            let slot = &mut fill[e.from.index()];
            targets[*slot] = (e.to.0, e.length_m);
            *slot += 1;
        }

        let net = RoadNetwork {
            nodes,
            edges,
            speed_mps,
            by_label,
            offsets,
            targets,
            rows: (0..n).map(|_| OnceLock::new()).collect(),
        };
        if let Some((from, to)) = net.disconnected_pair() {
            return Err(Error::Unreachable {
                from: net.nodes[from.index()].label,
                to: net.nodes[to.index()].label,
            });
        }
        if n <= all_pairs_threshold {
            for origin in 0..n {
                net.row(NodeId(origin as u32));
            }
        }
        Ok(net)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_mps
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn node_by_label(&self, label: u32) -> Option<NodeId> {
        self.by_label.get(&label).copied()
    }

    pub fn label(&self, node: NodeId) -> u32 {
        self.nodes[node.index()].label
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.nodes.len()
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::input(format!("unknown node index {}", node.0)))
        }
    }

    /// Shortest path length in meters.
    pub fn path_length(&self, origin: NodeId, destination: NodeId) -> Result<f64> {
        self.check(origin)?;
        self.check(destination)?;
        let d = self.row(origin)[destination.index()];
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Unreachable {
                from: self.label(origin),
                to: self.label(destination),
            })
        }
    }

    /// Shortest travel time in seconds at the network's constant speed.
    pub fn shortest_travel_time(&self, origin: NodeId, destination: NodeId) -> Result<f64> {
        Ok(self.path_length(origin, destination)? / self.speed_mps)
    }

    /// Path length for nodes already known to be valid.
    ///
    /// Panics on an out-of-range node.
    #[inline]
    pub fn length_unchecked(&self, origin: NodeId, destination: NodeId) -> f64 {
        self.row(origin)[destination.index()]
    }

    /// Travel time rounded up to whole seconds, for the event clock.
    /// Requires valid nodes.
    #[inline]
    pub fn travel_secs(&self, origin: NodeId, destination: NodeId) -> u32 {
        (self.length_unchecked(origin, destination) / self.speed_mps).ceil() as u32
    }

    fn row(&self, origin: NodeId) -> &[f64] {
        self.rows[origin.index()].get_or_init(|| self.dijkstra(origin))
    }

    fn neighbors(&self, node: usize) -> &[(u32, f64)] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    fn dijkstra(&self, origin: NodeId) -> Box<[f64]> {
        #[derive(PartialEq)]
        struct Entry(f64, u32);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                // min-heap on distance
                other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
            }
        }

        let mut dist = vec![f64::INFINITY; self.nodes.len()].into_boxed_slice();
        let mut heap = BinaryHeap::new();
        dist[origin.index()] = 0.0;
        heap.push(Entry(0.0, origin.0));
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u as usize] {
                continue;
            }
            for &(v, len) in self.neighbors(u as usize) {
                let nd = d + len;
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
        dist
    }

    fn disconnected_pair(&self) -> Option<(NodeId, NodeId)> {
        let n = self.nodes.len();
        let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); n];
        for e in &self.edges {
            reverse[e.to.index()].push(e.from.0);
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0u32];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                let next: Vec<u32> = if forward {
                    self.neighbors(u as usize).iter().map(|&(v, _)| v).collect()
                } else {
                    reverse[u as usize].clone()
                };
                for v in next {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        stack.push(v);
                    }
                }
            }
            seen
        };
        if let Some(i) = reach(true).iter().position(|s| !s) {
            return Some((NodeId(0), NodeId(i as u32)));
        }
        if let Some(i) = reach(false).iter().position(|s| !s) {
            return Some((NodeId(i as u32), NodeId(0)));
        }
        None
    }
}

/// Bidirectional `rows x cols` lattice with uniform edge length.
///
/// Node labels run row-major from 0; node `r * cols + c` sits at
/// `(c * edge_length, r * edge_length)`.
pub fn generate_grid(rows: usize, cols: usize, edge_length_m: f64, speed_mps: f64) -> Result<RoadNetwork> {
    if rows < 2 || cols < 2 {
        return Err(Error::input(format!(
            "grid needs at least 2 rows and 2 columns, got {rows}x{cols}"
        )));
    }
    if !(edge_length_m.is_finite() && edge_length_m > 0.0) {
        return Err(Error::input(format!("edge length must be positive, got {edge_length_m}")));
    }
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(Node {
                label: (r * cols + c) as u32,
                x_m: c as f64 * edge_length_m,
                y_m: r as f64 * edge_length_m,
            });
        }
    }
    let id = |r: usize, c: usize| NodeId((r * cols + c) as u32);
    let mut edges = Vec::with_capacity(2 * (rows * (cols - 1) + cols * (rows - 1)));
    let mut link = |a: NodeId, b: NodeId| {
        edges.push(Edge { from: a, to: b, length_m: edge_length_m });
        edges.push(Edge { from: b, to: a, length_m: edge_length_m });
    };
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                link(id(r, c), id(r, c + 1));
            }
            if r + 1 < rows {
                link(id(r, c), id(r + 1, c));
            }
        }
    }
    RoadNetwork::new(nodes, edges, speed_mps)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Nodes,
    Edges,
}

/// Parses a network file. See the README for the format.
pub fn load_network(path: impl AsRef<Path>) -> Result<RoadNetwork> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_network(&text, path)
}

/// Parses network text; `origin` is only used in diagnostics.
pub fn parse_network(text: &str, origin: &Path) -> Result<RoadNetwork> {
    let fail = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut speed = None;
    let mut directed = false;
    let mut section = Section::Header;
    let mut columns: Option<Vec<String>> = None;
    let mut nodes: Vec<Node> = Vec::new();
    let mut raw_edges: Vec<(usize, u32, u32, f64)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[nodes]" => Section::Nodes,
                "[edges]" => Section::Edges,
                other => return Err(fail(lineno, format!("unknown section {other}"))),
            };
            columns = None;
            continue;
        }
        match section {
            Section::Header => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| fail(lineno, format!("expected `key = value`, got `{line}`")))?;
                let value = value.trim();
                match key.trim() {
                    "speed_mps" => {
                        speed = Some(value.parse::<f64>().map_err(|e| {
                            fail(lineno, format!("bad speed_mps `{value}`: {e}"))
                        })?)
                    }
                    "directed" => {
                        directed = value.parse::<bool>().map_err(|e| {
                            fail(lineno, format!("bad directed flag `{value}`: {e}"))
                        })?
                    }
                    other => return Err(fail(lineno, format!("unknown header key `{other}`"))),
                }
            }
            Section::Nodes | Section::Edges => {
                let fields: Vec<&str> = line.split(',').map(str::trim).collect();
                let Some(cols) = &columns else {
                    let expected: &[&str] = if section == Section::Nodes {
                        &["id", "x_m", "y_m"]
                    } else {
                        &["from_id", "to_id", "length_m"]
                    };
                    let mut sorted = fields.clone();
                    sorted.sort_unstable();
                    let mut want = expected.to_vec();
                    want.sort_unstable();
                    if sorted != want {
                        return Err(fail(
                            lineno,
                            format!("expected columns {expected:?}, got {fields:?}"),
                        ));
                    }
                    columns = Some(fields.iter().map(|s| s.to_string()).collect());
                    continue;
                };
                if fields.len() != cols.len() {
                    return Err(fail(
                        lineno,
                        format!("expected {} fields, got {}", cols.len(), fields.len()),
                    ));
                }
                let get = |name: &str| -> &str {
                    let at = cols.iter().position(|c| c == name).expect("column checked");
                    fields[at]
                };
                let num = |name: &str| -> Result<f64> {
                    get(name)
                        .parse::<f64>()
                        .map_err(|e| fail(lineno, format!("bad {name} `{}`: {e}", get(name))))
                };
                let int = |name: &str| -> Result<u32> {
                    get(name)
                        .parse::<u32>()
                        .map_err(|e| fail(lineno, format!("bad {name} `{}`: {e}", get(name))))
                };
                if section == Section::Nodes {
                    nodes.push(Node { label: int("id")?, x_m: num("x_m")?, y_m: num("y_m")? });
                } else {
                    raw_edges.push((lineno, int("from_id")?, int("to_id")?, num("length_m")?));
                }
            }
        }
    }

    let speed = speed.ok_or_else(|| fail(1, "missing header key speed_mps".into()))?;
    let mut by_label = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if by_label.insert(n.label, NodeId(i as u32)).is_some() {
            return Err(fail(0, format!("duplicate node id {}", n.label)));
        }
    }
    let mut edges = Vec::with_capacity(raw_edges.len() * if directed { 1 } else { 2 });
    for (lineno, from, to, length_m) in raw_edges {
        let resolve = |label: u32| {
            by_label.get(&label).copied().ok_or_else(|| {
                fail(lineno, format!("edge {from}->{to} references unknown node {label}"))
            })
        };
        let (a, b) = (resolve(from)?, resolve(to)?);
        if !(length_m.is_finite() && length_m > 0.0) {
            return Err(fail(lineno, format!("edge {from}->{to} has non-positive length {length_m}")));
        }
        edges.push(Edge { from: a, to: b, length_m });
        if !directed {
            edges.push(Edge { from: b, to: a, length_m });
        }
    }
    RoadNetwork::new(nodes, edges, speed)
}

/// Serializes a network in the file format, one row per directed edge.
pub fn format_network(net: &RoadNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "speed_mps = {}", net.speed_mps());
    let _ = writeln!(out, "directed = true");
    let _ = writeln!(out, "\n[nodes]\nid,x_m,y_m");
    for n in net.nodes() {
        let _ = writeln!(out, "{},{},{}", n.label, n.x_m, n.y_m);
    }
    let _ = writeln!(out, "\n[edges]\nfrom_id,to_id,length_m");
    for e in net.edges() {
        let _ = writeln!(out, "{},{},{}", net.label(e.from), net.label(e.to), e.length_m);
    }
    out
}

pub fn save_network(net: &RoadNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_network(net)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(lengths: &[f64]) -> RoadNetwork {
        let nodes = (0..=lengths.len())
            .map(|i| Node { label: i as u32, x_m: 0.0, y_m: 0.0 })
            .collect();
        let mut edges = Vec::new();
        for (i, &l) in lengths.iter().enumerate() {
            let (a, b) = (NodeId(i as u32), NodeId(i as u32 + 1));
            edges.push(Edge { from: a, to: b, length_m: l });
            edges.push(Edge { from: b, to: a, length_m: l });
        }
        RoadNetwork::new(nodes, edges, DEFAULT_SPEED_MPS).unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let g = generate_grid(3, 3, 100.0, 10.0).unwrap();
        for n in g.node_ids() {
            assert_eq!(g.shortest_travel_time(n, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn one_kilometer_at_36_kmh() {
        let net = line(&[1000.0]);
        assert_eq!(net.shortest_travel_time(NodeId(0), NodeId(1)).unwrap(), 100.0);
    }

    #[test]
    fn grid_corner_to_corner() {
        let g = generate_grid(3, 3, 100.0, 10.0).unwrap();
        assert_eq!(g.shortest_travel_time(NodeId(0), NodeId(8)).unwrap(), 40.0);
    }

    #[test]
    fn grid_edge_counts() {
        let g = generate_grid(2, 2, 100.0, 10.0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 8));
        let g = generate_grid(3, 3, 100.0, 10.0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (9, 24));
        let g = generate_grid(4, 6, 100.0, 10.0).unwrap();
        assert_eq!(g.edge_count(), 2 * (4 * 5 + 6 * 3));
    }

    #[test]
    fn grid_rejects_degenerate_shapes() {
        assert!(matches!(generate_grid(1, 5, 100.0, 10.0), Err(Error::Input(_))));
        assert!(matches!(generate_grid(3, 3, 0.0, 10.0), Err(Error::Input(_))));
        assert!(matches!(generate_grid(3, 3, 100.0, -1.0), Err(Error::Input(_))));
    }

    #[test]
    fn unknown_node_is_input_error() {
        let g = generate_grid(2, 2, 100.0, 10.0).unwrap();
        assert!(matches!(g.shortest_travel_time(NodeId(0), NodeId(9)), Err(Error::Input(_))));
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let nodes = (0..3).map(|i| Node { label: i, x_m: 0.0, y_m: 0.0 }).collect();
        let edges = vec![
            Edge { from: NodeId(0), to: NodeId(1), length_m: 1.0 },
            Edge { from: NodeId(1), to: NodeId(0), length_m: 1.0 },
            Edge { from: NodeId(1), to: NodeId(2), length_m: 1.0 },
        ];
        // 2 cannot get back
        assert!(matches!(
            RoadNetwork::new(nodes, edges, 10.0),
            Err(Error::Unreachable { from: 2, to: 0 })
        ));
    }

    #[test]
    fn directed_edges_are_asymmetric() {
        let nodes = (0..3).map(|i| Node { label: i, x_m: 0.0, y_m: 0.0 }).collect();
        let e = |a, b, l| Edge { from: NodeId(a), to: NodeId(b), length_m: l };
        let net = RoadNetwork::new(nodes, vec![e(0, 1, 10.0), e(1, 2, 10.0), e(2, 0, 50.0)], 1.0).unwrap();
        assert_eq!(net.shortest_travel_time(NodeId(0), NodeId(2)).unwrap(), 20.0);
        assert_eq!(net.shortest_travel_time(NodeId(2), NodeId(0)).unwrap(), 50.0);
    }

    #[test]
    fn lazy_rows_match_eager_table() {
        let g = generate_grid(4, 5, 70.0, 7.0).unwrap();
        let lazy = RoadNetwork::with_threshold(g.nodes().to_vec(), g.edges().to_vec(), 7.0, 0).unwrap();
        for a in g.node_ids() {
            for b in g.node_ids() {
                assert_eq!(g.path_length(a, b).unwrap(), lazy.path_length(a, b).unwrap());
            }
        }
    }

    #[test]
    fn parse_two_node_file() {
        let text = "speed_mps = 10\n[nodes]\nid,x_m,y_m\n7,0,0\n9,100,0\n[edges]\nfrom_id,to_id,length_m\n7,9,100\n9,7,100\n";
        let net = parse_network(text, Path::new("two.net")).unwrap();
        assert_eq!(net.node_count(), 2);
        let (a, b) = (net.node_by_label(7).unwrap(), net.node_by_label(9).unwrap());
        assert_eq!(net.shortest_travel_time(a, b).unwrap(), 10.0);
    }

    #[test]
    fn parse_accepts_reordered_columns() {
        let text = "speed_mps=2\n[nodes]\ny_m,id,x_m\n0,1,0\n0,2,5\n[edges]\nlength_m,to_id,from_id\n4,2,1\n";
        let net = parse_network(text, Path::new("x")).unwrap();
        assert_eq!(net.shortest_travel_time(NodeId(1), NodeId(0)).unwrap(), 2.0);
    }

    #[test]
    fn parse_rejects_dangling_edge_with_line_number() {
        let text = "speed_mps = 10\n[nodes]\nid,x_m,y_m\n0,0,0\n1,1,0\n[edges]\nfrom_id,to_id,length_m\n0,1,1\n1,5,1\n";
        let err = parse_network(text, Path::new("bad.net")).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 9);
                assert!(message.contains("1->5"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_malformed_rows() {
        let short = "speed_mps = 10\n[nodes]\nid,x_m,y_m\n0,0\n";
        assert!(matches!(parse_network(short, Path::new("x")), Err(Error::Parse { line: 4, .. })));
        let bad_num = "speed_mps = 10\n[nodes]\nid,x_m,y_m\n0,zero,0\n";
        assert!(matches!(parse_network(bad_num, Path::new("x")), Err(Error::Parse { line: 4, .. })));
        let no_speed = "[nodes]\nid,x_m,y_m\n0,0,0\n";
        assert!(matches!(parse_network(no_speed, Path::new("x")), Err(Error::Parse { .. })));
        let bad_cols = "speed_mps = 1\n[nodes]\nid,x,y\n";
        assert!(matches!(parse_network(bad_cols, Path::new("x")), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn parse_rejects_disconnected() {
        let text = "speed_mps = 10\n[nodes]\nid,x_m,y_m\n0,0,0\n1,1,0\n2,2,0\n[edges]\nfrom_id,to_id,length_m\n0,1,1\n";
        assert!(matches!(parse_network(text, Path::new("x")), Err(Error::Unreachable { .. })));
    }
}
