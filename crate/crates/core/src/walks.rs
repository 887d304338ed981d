//! Offline Rabbit Walk generation.
//!
//! A Rabbit Walk from priority node `s` to priority node `t` has three hops:
//!
//! 1. an exploratory walk of exactly `H` edges starting at `s` that never
//!    traverses the same road segment twice (in either direction);
//! 2. the shortest path from the end of hop 1 to an intermediate node `via`
//!    that does not appear in hop 1;
//! 3. the shortest path from `via` to `t`.
//!
//! With `H = 0` hop 1 is the single node `s`, so walks degenerate to two
//! shortest-path hops.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, PatrolGraph, ShortestPathTable};
use crate::{Error, Result, Ticks};

/// Bytes charged per stored node when estimating library memory.
pub const BYTES_PER_NODE: u64 = std::mem::size_of::<NodeId>() as u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RabbitWalk {
    pub nodes: Vec<NodeId>,
    /// Index of the last node of hop 1 (equals `H`).
    pub hop1_end: usize,
    /// Index of `via`, the last node of hop 2.
    pub via_index: usize,
    pub source: NodeId,
    pub target: NodeId,
    pub via: NodeId,
    pub duration: Ticks,
}

impl RabbitWalk {
    pub fn hop_boundaries(&self) -> (usize, usize) {
        (self.hop1_end, self.via_index)
    }

    pub fn first_hop(&self) -> &[NodeId] {
        &self.nodes[..=self.hop1_end]
    }

    pub fn second_hop(&self) -> &[NodeId] {
        &self.nodes[self.hop1_end..=self.via_index]
    }

    pub fn third_hop(&self) -> &[NodeId] {
        &self.nodes[self.via_index..]
    }

    /// Edge count.
    pub fn len(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() < 2
    }

    /// Deterministic order used both for library storage and for breaking
    /// reward ties: shorter first, then lexicographically smaller.
    pub fn order_key(&self) -> (Ticks, &[NodeId]) {
        (self.duration, &self.nodes)
    }
}

fn uses_segment(walk: &[NodeId], a: NodeId, b: NodeId) -> bool {
    walk.windows(2)
        .any(|p| (p[0] == a && p[1] == b) || (p[0] == b && p[1] == a))
}

/// All walks of exactly `hops` edges starting at `source` that never reuse
/// a road segment, in lexicographic order.
pub fn generate_first_hops(graph: &PatrolGraph, source: NodeId, hops: usize) -> Vec<Vec<NodeId>> {
    let mut level = vec![vec![source]];
    for _ in 0..hops {
        let mut next = Vec::with_capacity(level.len() * graph.max_out_degree().max(1));
        for walk in &level {
            let last = *walk.last().expect("walks are never empty");
            for edge in graph.out_edges(last) {
                if !uses_segment(walk, last, edge.to) {
                    let mut extended = Vec::with_capacity(walk.len() + 1);
                    extended.extend_from_slice(walk);
                    extended.push(edge.to);
                    next.push(extended);
                }
            }
        }
        level = next;
    }
    level
}

fn path_ticks(graph: &PatrolGraph, nodes: &[NodeId]) -> Ticks {
    nodes
        .windows(2)
        .map(|p| graph.travel_ticks(p[0], p[1]).expect("path follows graph edges"))
        .sum()
}

/// Every Rabbit Walk from `source`, bucketed by target in the order of
/// [`PatrolGraph::priority`]. Each bucket holds unique node sequences sorted
/// by [`RabbitWalk::order_key`]; when two constructions give the same
/// sequence, the first one built is kept.
pub fn generate_rabbit_walks(
    graph: &PatrolGraph,
    paths: &ShortestPathTable,
    source: NodeId,
    hops: usize,
) -> Vec<Vec<RabbitWalk>> {
    let priority = graph.priority();
    let mut buckets: Vec<Vec<(usize, RabbitWalk)>> = vec![Vec::new(); priority.len()];
    let mut order = 0usize;
    let mut in_first_hop = vec![false; graph.node_count()];

    for first in generate_first_hops(graph, source, hops) {
        for &n in &first {
            in_first_hop[n.index()] = true;
        }
        let last = *first.last().expect("first hop is never empty");
        let first_ticks = path_ticks(graph, &first);

        for via in graph.nodes().filter(|v| !in_first_hop[v.index()]) {
            let mut prefix = first.clone();
            paths.extend_path(&mut prefix, last, via);
            let via_index = prefix.len() - 1;
            let prefix_ticks = first_ticks + paths.dist(last, via);

            for (slot, &target) in priority.iter().enumerate() {
                let mut nodes = Vec::with_capacity(prefix.len() + 8);
                nodes.extend_from_slice(&prefix);
                paths.extend_path(&mut nodes, via, target);
                buckets[slot].push((
                    order,
                    RabbitWalk {
                        nodes,
                        hop1_end: hops,
                        via_index,
                        source,
                        target,
                        via,
                        duration: prefix_ticks + paths.dist(via, target),
                    },
                ));
                order += 1;
            }
        }

        for &n in &first {
            in_first_hop[n.index()] = false;
        }
    }

    buckets
        .into_iter()
        .map(|mut bucket| {
            bucket.sort_by(|(oa, a), (ob, b)| a.order_key().cmp(&b.order_key()).then(oa.cmp(ob)));
            bucket.dedup_by(|later, earlier| later.1.nodes == earlier.1.nodes);
            bucket.into_iter().map(|(_, w)| w).collect()
        })
        .collect()
}

/// Upper bound on walks per source: `d^H * (|V| - H + 1) * |S|`, with `d`
/// the maximum out-degree. Saturates instead of overflowing.
pub fn walk_count_bound(graph: &PatrolGraph, hops: usize, targets: usize) -> u128 {
    let d = graph.max_out_degree() as u128;
    let first = u32::try_from(hops)
        .ok()
        .and_then(|h| d.checked_pow(h))
        .unwrap_or(u128::MAX);
    let via = (graph.node_count() + 1).saturating_sub(hops) as u128;
    first.saturating_mul(via).saturating_mul(targets as u128)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub source: NodeId,
    pub walks: usize,
    pub estimated_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryStats {
    pub hops: usize,
    pub per_source: Vec<SourceStats>,
    pub total_walks: usize,
    /// Sum over stored walks of node count times [`BYTES_PER_NODE`].
    pub estimated_bytes: u64,
}

/// The walk sets for every (source, target) pair of priority nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkLibrary {
    hops: usize,
    graph_hash: String,
    priority: Vec<NodeId>,
    // buckets[source slot][target slot]
    buckets: Vec<Vec<Vec<RabbitWalk>>>,
    stats: LibraryStats,
}

fn estimated_bytes(walks: &[Vec<RabbitWalk>]) -> u64 {
    walks
        .iter()
        .flatten()
        .map(|w| w.nodes.len() as u64 * BYTES_PER_NODE)
        .sum()
}

/// Builds the full library, one source per rayon task. `mem_cap` bounds the
/// estimated resident bytes; exceeding it yields [`Error::ResourceLimit`].
pub fn build_walk_library(
    graph: &PatrolGraph,
    paths: &ShortestPathTable,
    hops: usize,
    mem_cap: Option<u64>,
) -> Result<WalkLibrary> {
    if hops > graph.node_count() {
        log::warn!(
            "H={hops} exceeds the node count {}; the walk library may be very large",
            graph.node_count()
        );
    }
    let used = AtomicU64::new(0);
    let buckets = graph
        .priority()
        .par_iter()
        .map(|&source| {
            let walks = generate_rabbit_walks(graph, paths, source, hops);
            let bytes = estimated_bytes(&walks);
            let total = used.fetch_add(bytes, Ordering::Relaxed) + bytes;
            match mem_cap {
                Some(cap) if total > cap => Err(Error::ResourceLimit {
                    hops,
                    estimated_bytes: total,
                    cap_bytes: cap,
                }),
                _ => Ok(walks),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let per_source: Vec<SourceStats> = graph
        .priority()
        .iter()
        .zip(&buckets)
        .map(|(&source, walks)| SourceStats {
            source,
            walks: walks.iter().map(Vec::len).sum(),
            estimated_bytes: estimated_bytes(walks),
        })
        .collect();
    let stats = LibraryStats {
        hops,
        total_walks: per_source.iter().map(|s| s.walks).sum(),
        estimated_bytes: per_source.iter().map(|s| s.estimated_bytes).sum(),
        per_source,
    };

    Ok(WalkLibrary {
        hops,
        graph_hash: graph.content_hash(),
        priority: graph.priority().to_vec(),
        buckets,
        stats,
    })
}

impl WalkLibrary {
    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn graph_hash(&self) -> &str {
        &self.graph_hash
    }

    pub fn priority(&self) -> &[NodeId] {
        &self.priority
    }

    pub fn stats(&self) -> &LibraryStats {
        &self.stats
    }

    pub fn total_walks(&self) -> usize {
        self.stats.total_walks
    }

    fn slot(&self, node: NodeId) -> Option<usize> {
        self.priority.binary_search(&node).ok()
    }

    /// The set `W_s^t`; empty if either node is not a priority node.
    pub fn walks(&self, source: NodeId, target: NodeId) -> &[RabbitWalk] {
        match (self.slot(source), self.slot(target)) {
            (Some(s), Some(t)) => &self.buckets[s][t],
            _ => &[],
        }
    }

    /// Every walk from `source`, grouped by target in priority order.
    pub fn walks_from(&self, source: NodeId) -> impl Iterator<Item = &RabbitWalk> + '_ {
        self.slot(source)
            .map(|s| self.buckets[s].as_slice())
            .unwrap_or(&[])
            .iter()
            .flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RabbitWalk> + '_ {
        self.buckets.iter().flatten().flatten()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// Cache file name for a (graph, H) pair.
    pub fn cache_path(dir: &Path, graph: &PatrolGraph, hops: usize) -> PathBuf {
        dir.join(format!("walks-{}-h{hops}.json", &graph.content_hash()[..16]))
    }

    /// Loads the library from `dir` when a matching cache file exists,
    /// otherwise builds it and writes the cache.
    pub fn load_or_build(
        dir: &Path,
        graph: &PatrolGraph,
        paths: &ShortestPathTable,
        hops: usize,
        mem_cap: Option<u64>,
    ) -> Result<Self> {
        let path = Self::cache_path(dir, graph, hops);
        if path.exists() {
            match Self::load(&path) {
                Ok(lib) if lib.graph_hash == graph.content_hash() && lib.hops == hops => {
                    if let Some(cap) = mem_cap {
                        if lib.stats.estimated_bytes > cap {
                            return Err(Error::ResourceLimit {
                                hops,
                                estimated_bytes: lib.stats.estimated_bytes,
                                cap_bytes: cap,
                            });
                        }
                    }
                    return Ok(lib);
                }
                Ok(_) => log::warn!("{} does not match this graph; rebuilding", path.display()),
                Err(e) => log::warn!("ignoring unreadable walk cache: {e}"),
            }
        }
        let lib = build_walk_library(graph, paths, hops, mem_cap)?;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        lib.save(&path)?;
        Ok(lib)
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    SourceNotPriority(NodeId),
    TargetNotPriority(NodeId),
    EndpointMismatch,
    BadBoundaries,
    FirstHopLength { expected: usize, actual: usize },
    PairRule { a: NodeId, b: NodeId },
    MissingEdge { from: NodeId, to: NodeId },
    ViaMismatch,
    ViaInFirstHop(NodeId),
    SecondHopNotShortest,
    ThirdHopNotShortest,
    DurationMismatch { stored: Ticks, actual: Ticks },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty walk"),
            Violation::SourceNotPriority(n) => write!(f, "source {n} is not a priority node"),
            Violation::TargetNotPriority(n) => write!(f, "target {n} is not a priority node"),
            Violation::EndpointMismatch => write!(f, "endpoints do not match source/target"),
            Violation::BadBoundaries => write!(f, "hop boundaries out of range"),
            Violation::FirstHopLength { expected, actual } => {
                write!(f, "first hop has {actual} edges, expected {expected}")
            }
            Violation::PairRule { a, b } => write!(f, "pair rule: segment {a}-{b} repeated in first hop"),
            Violation::MissingEdge { from, to } => write!(f, "missing edge {from}->{to}"),
            Violation::ViaMismatch => write!(f, "via does not match the hop boundary"),
            Violation::ViaInFirstHop(n) => write!(f, "via {n} appears in the first hop"),
            Violation::SecondHopNotShortest => write!(f, "second hop is not a shortest path"),
            Violation::ThirdHopNotShortest => write!(f, "third hop is not a shortest path"),
            Violation::DurationMismatch { stored, actual } => {
                write!(f, "duration {stored} does not match edge sum {actual}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkReport {
    pub violations: Vec<Violation>,
}

impl WalkReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural property of a Rabbit Walk built with depth `hops`.
pub fn validate_walk(graph: &PatrolGraph, paths: &ShortestPathTable, hops: usize, walk: &RabbitWalk) -> WalkReport {
    let mut violations = Vec::new();
    let nodes = &walk.nodes;
    if nodes.is_empty() {
        return WalkReport {
            violations: vec![Violation::Empty],
        };
    }
    if nodes.iter().any(|n| !graph.contains(*n)) {
        return WalkReport {
            violations: vec![Violation::BadBoundaries],
        };
    }

    if !graph.is_priority(walk.source) {
        violations.push(Violation::SourceNotPriority(walk.source));
    }
    if !graph.is_priority(walk.target) {
        violations.push(Violation::TargetNotPriority(walk.target));
    }
    if nodes[0] != walk.source || nodes[nodes.len() - 1] != walk.target {
        violations.push(Violation::EndpointMismatch);
    }

    let mut actual = 0;
    let mut edges_ok = true;
    for p in nodes.windows(2) {
        match graph.travel_ticks(p[0], p[1]) {
            Some(t) => actual += t,
            None => {
                edges_ok = false;
                violations.push(Violation::MissingEdge { from: p[0], to: p[1] });
            }
        }
    }
    if edges_ok && actual != walk.duration {
        violations.push(Violation::DurationMismatch {
            stored: walk.duration,
            actual,
        });
    }

    if walk.hop1_end > walk.via_index || walk.via_index >= nodes.len() {
        violations.push(Violation::BadBoundaries);
        return WalkReport { violations };
    }
    if walk.hop1_end != hops {
        violations.push(Violation::FirstHopLength {
            expected: hops,
            actual: walk.hop1_end,
        });
    }
    let first = walk.first_hop();
    for i in 1..first.len() {
        let (a, b) = (first[i - 1], first[i]);
        if uses_segment(&first[..i], a, b) {
            violations.push(Violation::PairRule { a, b });
        }
    }
    if nodes[walk.via_index] != walk.via {
        violations.push(Violation::ViaMismatch);
    }
    if first.contains(&walk.via) {
        violations.push(Violation::ViaInFirstHop(walk.via));
    }
    if edges_ok {
        let second = walk.second_hop();
        if path_ticks(graph, second) != paths.dist(second[0], walk.via) {
            violations.push(Violation::SecondHopNotShortest);
        }
        let third = walk.third_hop();
        if path_ticks(graph, third) != paths.dist(walk.via, third[third.len() - 1]) {
            violations.push(Violation::ThirdHopNotShortest);
        }
    }
    WalkReport { violations }
}
