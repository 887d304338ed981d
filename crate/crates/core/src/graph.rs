//! Patrol environment: a strongly connected digraph with timed edges and a
//! designated priority node subset, plus exact all-pairs shortest paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{seconds_to_ticks, Error, Result, Ticks};

/// Dense node identifier, contiguous from 0 to |V|-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for NodeId {
    fn from(value: u32) -> Self {
        NodeId(value)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Optional planar position of a node, in meters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: Option<f64>,
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub to: NodeId,
    /// Meters.
    pub length: f64,
    /// Travel time, derived from `length / speed`.
    pub ticks: Ticks,
}

/// Directed edge as supplied by a caller, before travel times are derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: u32,
    pub to: u32,
    pub length: f64,
}

impl EdgeSpec {
    pub fn new(from: u32, to: u32, length: f64) -> Self {
        EdgeSpec { from, to, length }
    }
}

#[derive(Debug, Clone)]
pub struct PatrolGraph {
    positions: Vec<Position>,
    // Out-edges of each node, sorted by target id.
    adjacency: Vec<Vec<Edge>>,
    edge_count: usize,
    priority: Vec<NodeId>,
    is_priority: Vec<bool>,
    speed: f64,
}

impl PatrolGraph {
    /// Builds and validates a graph. Travel times are `length / speed`
    /// rounded half-up to whole microseconds.
    pub fn new(positions: Vec<Position>, edges: &[EdgeSpec], priority: &[u32], speed: f64) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::Validation("graph has no nodes".into()));
        }
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::Validation(format!("speed must be positive, got {speed}")));
        }

        let mut adjacency: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for e in edges {
            if e.from as usize >= n || e.to as usize >= n {
                return Err(Error::Validation(format!(
                    "edge {}->{} references a node outside 0..{n}",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::Validation(format!("self-loop on node {}", e.from)));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::Validation(format!(
                    "edge {}->{} has nonpositive length {}",
                    e.from, e.to, e.length
                )));
            }
            let ticks = seconds_to_ticks(e.length / speed);
            if ticks == 0 {
                return Err(Error::Validation(format!(
                    "edge {}->{} is shorter than one microsecond of travel",
                    e.from, e.to
                )));
            }
            adjacency[e.from as usize].push(Edge {
                to: NodeId(e.to),
                length: e.length,
                ticks,
            });
        }
        for (u, out) in adjacency.iter_mut().enumerate() {
            out.sort_by_key(|e| e.to);
            if let Some(w) = out.windows(2).find(|w| w[0].to == w[1].to) {
                return Err(Error::Validation(format!("duplicate edge {u}->{}", w[0].to)));
            }
        }

        let mut is_priority = vec![false; n];
        for &p in priority {
            let idx = p as usize;
            if idx >= n {
                return Err(Error::Validation(format!("priority node {p} is out of range 0..{n}")));
            }
            if is_priority[idx] {
                return Err(Error::Validation(format!("priority node {p} listed twice")));
            }
            is_priority[idx] = true;
        }
        if priority.is_empty() {
            return Err(Error::Validation("priority set is empty".into()));
        }
        if priority.len() == n {
            return Err(Error::Validation(
                "priority set covers every node; at least one non-priority node is required".into(),
            ));
        }

        let succ: Vec<Vec<usize>> = adjacency
            .iter()
            .map(|out| out.iter().map(|e| e.to.index()).collect())
            .collect();
        if !is_strongly_connected(&succ) {
            return Err(Error::Validation("graph is not strongly connected".into()));
        }

        let mut priority: Vec<NodeId> = priority.iter().copied().map(NodeId).collect();
        priority.sort();

        Ok(PatrolGraph {
            positions,
            edge_count: edges.len(),
            adjacency,
            priority,
            is_priority,
            speed,
        })
    }

    /// A `rows` x `cols` 4-connected grid. Node ids are row-major, and every
    /// undirected adjacency becomes two directed edges of `edge_length`.
    pub fn grid(rows: usize, cols: usize, edge_length: f64, priority: &[u32], speed: f64) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 rows and 2 columns, got {rows}x{cols}"
            )));
        }
        let id = |r: usize, c: usize| (r * cols + c) as u32;
        let mut positions = Vec::with_capacity(rows * cols);
        let mut edges = Vec::with_capacity(2 * (rows * (cols - 1) + cols * (rows - 1)));
        for r in 0..rows {
            for c in 0..cols {
                positions.push(Position {
                    x: Some(c as f64 * edge_length),
                    y: Some(r as f64 * edge_length),
                });
                if c + 1 < cols {
                    edges.push(EdgeSpec::new(id(r, c), id(r, c + 1), edge_length));
                    edges.push(EdgeSpec::new(id(r, c + 1), id(r, c), edge_length));
                }
                if r + 1 < rows {
                    edges.push(EdgeSpec::new(id(r, c), id(r + 1, c), edge_length));
                    edges.push(EdgeSpec::new(id(r + 1, c), id(r, c), edge_length));
                }
            }
        }
        Self::new(positions, &edges, priority, speed)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.adjacency.len() as u32).map(NodeId)
    }

    pub fn position(&self, node: NodeId) -> Position {
        self.positions[node.index()]
    }

    /// Out-edges of `node`, sorted by target id.
    pub fn out_edges(&self, node: NodeId) -> &[Edge] {
        &self.adjacency[node.index()]
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&Edge> {
        let out = self.adjacency.get(from.index())?;
        out.binary_search_by_key(&to, |e| e.to).ok().map(|i| &out[i])
    }

    pub fn travel_ticks(&self, from: NodeId, to: NodeId) -> Option<Ticks> {
        self.edge(from, to).map(|e| e.ticks)
    }

    pub fn max_out_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Priority nodes in ascending id order.
    pub fn priority(&self) -> &[NodeId] {
        &self.priority
    }

    pub fn is_priority(&self, node: NodeId) -> bool {
        self.is_priority.get(node.index()).copied().unwrap_or(false)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.adjacency.len()
    }

    /// Position of `node` within [`Self::priority`].
    pub fn priority_index(&self, node: NodeId) -> Option<usize> {
        self.priority.binary_search(&node).ok()
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// The same topology with a different priority set.
    pub fn with_priority(&self, priority: &[u32]) -> Result<Self> {
        let edges: Vec<EdgeSpec> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, out)| out.iter().map(move |e| EdgeSpec::new(u as u32, e.to.0, e.length)))
            .collect();
        Self::new(self.positions.clone(), &edges, priority, self.speed)
    }

    /// Hex SHA-256 over the node count, timed edges and priority set. Two
    /// graphs with the same hash produce identical walk libraries.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.node_count() as u64).to_le_bytes());
        for (u, out) in self.adjacency.iter().enumerate() {
            for e in out {
                hasher.update((u as u32).to_le_bytes());
                hasher.update(e.to.0.to_le_bytes());
                hasher.update(e.ticks.to_le_bytes());
            }
        }
        hasher.update(b"priority");
        for p in &self.priority {
            hasher.update(p.0.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// Picks `count` well-spread priority nodes: starts at node 0 and
    /// repeatedly adds the node farthest (by travel time) from those already
    /// chosen, smaller id on ties.
    pub fn spread_nodes(&self, paths: &ShortestPathTable, count: usize) -> Vec<u32> {
        let n = self.node_count();
        let count = count.min(n);
        let mut chosen: Vec<usize> = Vec::with_capacity(count);
        let mut nearest = vec![Ticks::MAX; n];
        let mut next = 0usize;
        while chosen.len() < count {
            chosen.push(next);
            for (v, slot) in nearest.iter_mut().enumerate() {
                let d = paths
                    .dist(NodeId(next as u32), NodeId(v as u32))
                    .min(paths.dist(NodeId(v as u32), NodeId(next as u32)));
                *slot = (*slot).min(d);
            }
            match (0..n)
                .filter(|v| !chosen.contains(v))
                .max_by(|&a, &b| nearest[a].cmp(&nearest[b]).then(b.cmp(&a)))
            {
                Some(v) => next = v,
                None => break,
            }
        }
        let mut out: Vec<u32> = chosen.into_iter().map(|v| v as u32).collect();
        out.sort_unstable();
        out
    }
}

/// Forward and reverse reachability from node 0 both cover every node.
pub fn is_strongly_connected(successors: &[Vec<usize>]) -> bool {
    let n = successors.len();
    if n == 0 {
        return false;
    }
    let mut predecessors = vec![Vec::new(); n];
    for (u, out) in successors.iter().enumerate() {
        for &v in out {
            predecessors[v].push(u);
        }
    }
    reaches_all(successors) && reaches_all(&predecessors)
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == adj.len()
}

// ---------------------------------------------------------------------------
// Graph documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub edge_length: f64,
}

/// On-disk graph description. Either `nodes` + `edges`, or `grid`; both
/// forms carry `priority`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<NodeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<EdgeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub priority: Vec<u32>,
}

impl GraphDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn build(&self, speed: f64) -> Result<PatrolGraph> {
        match (&self.grid, &self.nodes, &self.edges) {
            (Some(grid), None, None) => {
                PatrolGraph::grid(grid.rows, grid.cols, grid.edge_length, &self.priority, speed)
            }
            (None, Some(nodes), Some(edges)) => {
                let mut positions = vec![None; nodes.len()];
                for node in nodes {
                    match positions.get_mut(node.id as usize) {
                        Some(slot @ None) => *slot = Some(Position { x: node.x, y: node.y }),
                        Some(Some(_)) => return Err(Error::Validation(format!("node id {} listed twice", node.id))),
                        None => {
                            return Err(Error::Validation(format!(
                                "node id {} is not in the dense range 0..{}",
                                node.id,
                                nodes.len()
                            )))
                        }
                    }
                }
                let positions = positions.into_iter().map(Option::unwrap_or_default).collect();
                PatrolGraph::new(positions, edges, &self.priority, speed)
            }
            _ => Err(Error::Parse(
                "graph document needs either `nodes` and `edges`, or `grid`".into(),
            )),
        }
    }
}

/// Parses and validates a graph document.
pub fn load_graph(text: &str, speed: f64) -> Result<PatrolGraph> {
    GraphDocument::parse(text)?.build(speed)
}

// ---------------------------------------------------------------------------
// Shortest paths
// ---------------------------------------------------------------------------

/// Exact all-pairs travel times with next-hop reconstruction.
///
/// Among equal-time paths the one whose next node has the smallest id is
/// chosen, recursively, so every reconstructed path is the lexicographically
/// smallest shortest path.
#[derive(Debug, Clone)]
pub struct ShortestPathTable {
    n: usize,
    dist: Vec<Ticks>,
    next_hop: Vec<NodeId>,
}

impl ShortestPathTable {
    pub fn dist(&self, from: NodeId, to: NodeId) -> Ticks {
        self.dist[from.index() * self.n + to.index()]
    }

    /// Node following `from` on the chosen path to `to`; `from` itself when
    /// `from == to`.
    pub fn next_hop(&self, from: NodeId, to: NodeId) -> NodeId {
        self.next_hop[from.index() * self.n + to.index()]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Node sequence from `from` to `to`, both inclusive.
    pub fn path(&self, from: NodeId, to: NodeId) -> Vec<NodeId> {
        let mut out = vec![from];
        self.extend_path(&mut out, from, to);
        out
    }

    /// Appends the path `from -> to` to `out`, excluding `from`.
    pub fn extend_path(&self, out: &mut Vec<NodeId>, from: NodeId, to: NodeId) {
        let mut at = from;
        while at != to {
            at = self.next_hop(at, to);
            out.push(at);
        }
    }
}

pub fn all_pairs_shortest_paths(graph: &PatrolGraph) -> ShortestPathTable {
    let n = graph.node_count();
    let mut dist = vec![Ticks::MAX; n * n];
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0;
        heap.push(Reverse((0, s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > row[u] {
                continue;
            }
            for e in graph.out_edges(NodeId(u as u32)) {
                let nd = d + e.ticks;
                let v = e.to.index();
                if nd < row[v] {
                    row[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
    }

    let mut next_hop = vec![NodeId(0); n * n];
    for u in 0..n {
        let out = graph.out_edges(NodeId(u as u32));
        for v in 0..n {
            next_hop[u * n + v] = if u == v {
                NodeId(u as u32)
            } else {
                // Out-edges are sorted by id, so the first tight edge is the
                // smallest next node.
                out.iter()
                    .find(|e| e.ticks + dist[e.to.index() * n + v] == dist[u * n + v])
                    .map(|e| e.to)
                    .expect("strongly connected graph has a tight edge toward every target")
            };
        }
    }

    ShortestPathTable { n, dist, next_hop }
}
