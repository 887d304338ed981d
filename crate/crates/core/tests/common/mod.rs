//! Independent reference implementations used as test oracles. Nothing here
//! calls into the code paths it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rabbit_patrol::graph::{EdgeSpec, NodeId, PatrolGraph, Position};
use rabbit_patrol::Ticks;

pub type Seq = Vec<u32>;

/// Random strongly connected digraph: a Hamiltonian cycle over a shuffled
/// node order plus random chords. Small integer lengths at speed 1 make
/// equal-time paths common.
pub fn random_strong_graph(rng: &mut ChaCha8Rng, n: usize, chord_p: f64) -> PatrolGraph {
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let mut edges: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for i in 0..n {
        let (a, b) = (order[i], order[(i + 1) % n]);
        edges.insert((a, b), rng.gen_range(1..=4) as f64);
    }
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            if a != b && rng.gen_bool(chord_p) {
                edges.entry((a, b)).or_insert(rng.gen_range(1..=4) as f64);
            }
        }
    }
    let specs: Vec<EdgeSpec> = edges.iter().map(|(&(a, b), &l)| EdgeSpec::new(a, b, l)).collect();
    let k = rng.gen_range(1..n);
    let mut nodes: Vec<u32> = (0..n as u32).collect();
    nodes.shuffle(rng);
    PatrolGraph::new(vec![Position::default(); n], &specs, &nodes[..k], 1.0).unwrap()
}

pub fn edge_ticks(g: &PatrolGraph) -> BTreeMap<(u32, u32), Ticks> {
    g.nodes()
        .flat_map(|u| g.out_edges(u).iter().map(move |e| ((u.0, e.to.0), e.ticks)))
        .collect()
}

/// Bellman-Ford style relaxation over the full edge list until fixpoint.
pub fn bellman_ford_all_pairs(g: &PatrolGraph) -> Vec<Vec<Ticks>> {
    let n = g.node_count();
    let edges = edge_ticks(g);
    let mut dist = vec![vec![Ticks::MAX; n]; n];
    for (s, row) in dist.iter_mut().enumerate() {
        row[s] = 0;
        loop {
            let mut changed = false;
            for (&(a, b), &t) in &edges {
                let (a, b) = (a as usize, b as usize);
                if row[a] != Ticks::MAX && row[a] + t < row[b] {
                    row[b] = row[a] + t;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    dist
}

/// Lexicographically smallest among all shortest paths, found by
/// enumerating every simple path whose prefix stays on a shortest route.
pub struct PathOracle {
    dist: Vec<Vec<Ticks>>,
    succ: Vec<Vec<(u32, Ticks)>>,
}

impl PathOracle {
    pub fn new(g: &PatrolGraph) -> Self {
        let mut succ = vec![Vec::new(); g.node_count()];
        for ((a, b), t) in edge_ticks(g) {
            succ[a as usize].push((b, t));
        }
        PathOracle {
            dist: bellman_ford_all_pairs(g),
            succ,
        }
    }

    pub fn dist(&self, u: u32, v: u32) -> Ticks {
        self.dist[u as usize][v as usize]
    }

    pub fn all_shortest(&self, u: u32, v: u32) -> Vec<Seq> {
        let mut out = Vec::new();
        let mut path = vec![u];
        self.dfs(u, v, 0, &mut path, &mut out);
        out
    }

    fn dfs(&self, at: u32, v: u32, spent: Ticks, path: &mut Seq, out: &mut Vec<Seq>) {
        if at == v {
            out.push(path.clone());
            return;
        }
        for &(next, t) in &self.succ[at as usize] {
            if path.contains(&next) {
                continue;
            }
            if spent + t + self.dist(next, v) == self.dist(path[0], v) {
                path.push(next);
                self.dfs(next, v, spent + t, path, out);
                path.pop();
            }
        }
    }

    pub fn lexmin_path(&self, u: u32, v: u32) -> Seq {
        self.all_shortest(u, v).into_iter().min().expect("strongly connected")
    }
}

/// Depth-first enumeration of all `hops`-edge walks from `source` that never
/// reuse an undirected segment.
pub fn brute_first_hops(g: &PatrolGraph, source: u32, hops: usize) -> Vec<Seq> {
    fn rec(g: &PatrolGraph, walk: &mut Seq, used: &mut HashSet<(u32, u32)>, left: usize, out: &mut Vec<Seq>) {
        if left == 0 {
            out.push(walk.clone());
            return;
        }
        let last = *walk.last().unwrap();
        for e in g.out_edges(NodeId(last)) {
            let key = (last.min(e.to.0), last.max(e.to.0));
            if used.insert(key) {
                walk.push(e.to.0);
                rec(g, walk, used, left - 1, out);
                walk.pop();
                used.remove(&key);
            }
        }
    }
    let mut out = Vec::new();
    rec(g, &mut vec![source], &mut HashSet::new(), hops, &mut out);
    out
}

/// Brute-force library: for every first hop, every intermediate node not on
/// it and every target, the concatenated node sequence.
pub fn brute_library(g: &PatrolGraph, hops: usize) -> BTreeMap<(u32, u32), BTreeSet<Seq>> {
    let oracle = PathOracle::new(g);
    let priority: Vec<u32> = g.priority().iter().map(|p| p.0).collect();
    let mut out: BTreeMap<(u32, u32), BTreeSet<Seq>> = BTreeMap::new();
    for &s in &priority {
        for &t in &priority {
            out.insert((s, t), BTreeSet::new());
        }
        for first in brute_first_hops(g, s, hops) {
            let last = *first.last().unwrap();
            for via in 0..g.node_count() as u32 {
                if first.contains(&via) {
                    continue;
                }
                let mut prefix = first.clone();
                prefix.extend_from_slice(&oracle.lexmin_path(last, via)[1..]);
                for &t in &priority {
                    let mut seq = prefix.clone();
                    seq.extend_from_slice(&oracle.lexmin_path(via, t)[1..]);
                    out.get_mut(&(s, t)).unwrap().insert(seq);
                }
            }
        }
    }
    out
}

/// Gaps between consecutive visits of each node, including `[0, first]` and
/// `[last, horizon]`, reduced to their maximum.
pub fn rescan_max_gaps(node_count: usize, visits: &[(Ticks, u32)], horizon: Ticks) -> Vec<Ticks> {
    let mut times: Vec<Vec<Ticks>> = vec![vec![0]; node_count];
    for &(t, n) in visits {
        times[n as usize].push(t);
    }
    times
        .into_iter()
        .map(|mut ts| {
            ts.push(horizon);
            ts.windows(2).map(|w| w[1] - w[0]).max().unwrap()
        })
        .collect()
}

/// Plain depth-first reachability from every node.
pub fn brute_strongly_connected(succ: &[Vec<usize>]) -> bool {
    let n = succ.len();
    (0..n).all(|s| {
        let mut seen = vec![false; n];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &v in &succ[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.iter().all(|&b| b)
    })
}
