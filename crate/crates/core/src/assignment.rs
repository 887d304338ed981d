//! Online walk assignment: pick target priority nodes according to a policy
//! variant, then choose the candidate walk with the largest idleness sum.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, PatrolGraph};
use crate::walks::{walk_count_bound, RabbitWalk, WalkLibrary};
use crate::{Error, Result, Ticks};

/// Dense agent identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-node last-visit times plus the largest inter-visit gap seen so far.
/// Every node counts as visited at time zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdlenessTable {
    last_visit: Vec<Ticks>,
    max_gap: Vec<Ticks>,
    clock: Ticks,
}

impl IdlenessTable {
    pub fn new(node_count: usize) -> Self {
        IdlenessTable {
            last_visit: vec![0; node_count],
            max_gap: vec![0; node_count],
            clock: 0,
        }
    }

    /// Instantaneous idleness `t - last_visit`.
    pub fn idleness(&self, node: NodeId, t: Ticks) -> Ticks {
        t.saturating_sub(self.last_visit[node.index()])
    }

    pub fn last_visit(&self, node: NodeId) -> Ticks {
        self.last_visit[node.index()]
    }

    pub fn clock(&self) -> Ticks {
        self.clock
    }

    pub fn node_count(&self) -> usize {
        self.last_visit.len()
    }

    /// Records a visit and folds the closed gap into the running maximum.
    pub fn record_visit(&mut self, node: NodeId, t: Ticks) {
        let i = node.index();
        debug_assert!(t >= self.last_visit[i], "visit at {t} precedes last visit");
        let gap = t.saturating_sub(self.last_visit[i]);
        self.max_gap[i] = self.max_gap[i].max(gap);
        self.last_visit[i] = self.last_visit[i].max(t);
        self.clock = self.clock.max(t);
    }

    /// Folds the open gap `[last_visit, horizon]` of every node.
    pub fn finalize(&mut self, horizon: Ticks) {
        for (gap, &last) in self.max_gap.iter_mut().zip(&self.last_visit) {
            *gap = (*gap).max(horizon.saturating_sub(last));
        }
        self.clock = self.clock.max(horizon);
    }

    /// Largest gap per node observed so far (or over the run once finalized).
    pub fn max_gaps(&self) -> &[Ticks] {
        &self.max_gap
    }

    /// Overrides the last-visit time of a node. Intended for constructing
    /// test and benchmark states.
    pub fn set_last_visit(&mut self, node: NodeId, t: Ticks) {
        self.last_visit[node.index()] = t;
        self.clock = self.clock.max(t);
    }
}

/// Reward of a walk: the sum of the instantaneous idleness of its distinct
/// nodes at time `t`.
pub fn reward(walk: &RabbitWalk, idleness: &IdlenessTable, t: Ticks) -> Ticks {
    let mut nodes = walk.nodes.clone();
    nodes.sort_unstable();
    nodes.dedup();
    nodes.iter().map(|&n| idleness.idleness(n, t)).sum()
}

// Marks nodes seen within the current walk without clearing between walks.
struct DistinctScratch {
    stamp: Vec<u32>,
    current: u32,
}

impl DistinctScratch {
    fn new(n: usize) -> Self {
        DistinctScratch {
            stamp: vec![0; n],
            current: 0,
        }
    }

    fn reward(&mut self, walk: &RabbitWalk, idleness: &IdlenessTable, t: Ticks) -> Ticks {
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamp.fill(0);
            self.current = 1;
        }
        let mut sum = 0;
        for &n in &walk.nodes {
            let slot = &mut self.stamp[n.index()];
            if *slot != self.current {
                *slot = self.current;
                sum += idleness.idleness(n, t);
            }
        }
        sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Every priority node is a candidate target.
    Exhaustive,
    /// `N` targets drawn uniformly without replacement.
    Sampled,
    /// One target drawn uniformly.
    Random,
    /// The target assigned least often so far.
    Greedy,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Exhaustive, Variant::Sampled, Variant::Random, Variant::Greedy];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Exhaustive => "exhaustive",
            Variant::Sampled => "sampled",
            Variant::Random => "random",
            Variant::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

/// Mutable policy state shared by every agent of a run.
#[derive(Debug, Clone)]
pub struct PolicyState {
    variant: Variant,
    sample_n: usize,
    priority: Vec<NodeId>,
    counters: Vec<u64>,
    rng: ChaCha8Rng,
}

impl PolicyState {
    /// `sample_n` is required for [`Variant::Sampled`] and must lie in
    /// `1..=|S|`; other variants ignore it.
    pub fn new(variant: Variant, priority: &[NodeId], sample_n: Option<usize>, seed: u64) -> Result<Self> {
        let sample_n = match (variant, sample_n) {
            (Variant::Sampled, None) => {
                return Err(Error::Config("the sampled variant requires a sample size N".into()))
            }
            (Variant::Sampled, Some(n)) if n == 0 || n > priority.len() => {
                return Err(Error::Config(format!(
                    "sample size N={n} must be between 1 and |S|={}",
                    priority.len()
                )))
            }
            (Variant::Sampled, Some(n)) => n,
            _ => 1,
        };
        Ok(PolicyState {
            variant,
            sample_n,
            priority: priority.to_vec(),
            counters: vec![0; priority.len()],
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn sample_n(&self) -> usize {
        self.sample_n
    }

    /// Greedy assignment counts, aligned with the priority list.
    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    pub fn priority(&self) -> &[NodeId] {
        &self.priority
    }

    /// Largest candidate count this variant may search.
    pub fn search_bound(&self, graph: &PatrolGraph, hops: usize) -> u128 {
        let targets = match self.variant {
            Variant::Exhaustive => self.priority.len(),
            Variant::Sampled => self.sample_n,
            Variant::Random | Variant::Greedy => 1,
        };
        walk_count_bound(graph, hops, targets)
    }

    // Target slots chosen for one assignment. Does not touch the counters.
    fn choose_targets(&mut self) -> Vec<usize> {
        let k = self.priority.len();
        match self.variant {
            Variant::Exhaustive => (0..k).collect(),
            Variant::Sampled => {
                let mut slots = index::sample(&mut self.rng, k, self.sample_n).into_vec();
                slots.sort_unstable();
                slots
            }
            Variant::Random => vec![self.rng.gen_range(0..k)],
            Variant::Greedy => {
                let slot = (0..k)
                    .min_by_key(|&i| (self.counters[i], i))
                    .expect("priority set is non-empty");
                vec![slot]
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidates<'a> {
    pub walks: Vec<&'a RabbitWalk>,
    pub targets: Vec<NodeId>,
}

impl Candidates<'_> {
    pub fn searched(&self) -> usize {
        self.walks.len()
    }
}

/// Builds the candidate subset for one decision. Greedy increments the
/// chosen target's counter once, and only when candidates exist.
pub fn candidate_set<'a>(library: &'a WalkLibrary, source: NodeId, policy: &mut PolicyState) -> Result<Candidates<'a>> {
    let slots = policy.choose_targets();
    let targets: Vec<NodeId> = slots.iter().map(|&i| policy.priority[i]).collect();
    let walks: Vec<&RabbitWalk> = targets.iter().flat_map(|&t| library.walks(source, t)).collect();
    if walks.is_empty() {
        return Err(Error::EmptyCandidates {
            source_node: source,
            targets,
        });
    }
    if policy.variant == Variant::Greedy {
        policy.counters[slots[0]] += 1;
    }
    Ok(Candidates { walks, targets })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub agent: AgentId,
    pub walk: RabbitWalk,
    pub reward: Ticks,
    pub decided_at: Ticks,
    pub candidates_searched: usize,
}

/// Index of the reward-maximizing walk; ties go to the shorter walk, then
/// the lexicographically smaller node sequence.
fn best_candidate(walks: &[&RabbitWalk], idleness: &IdlenessTable, t: Ticks) -> (usize, Ticks) {
    let mut scratch = DistinctScratch::new(idleness.node_count());
    let mut best = 0;
    let mut best_reward = scratch.reward(walks[0], idleness, t);
    for (i, w) in walks.iter().enumerate().skip(1) {
        let r = scratch.reward(w, idleness, t);
        if r > best_reward || (r == best_reward && w.order_key() < walks[best].order_key()) {
            best = i;
            best_reward = r;
        }
    }
    (best, best_reward)
}

/// Picks the next walk for `agent` standing on priority node `source`.
pub fn assign_walk(
    library: &WalkLibrary,
    source: NodeId,
    idleness: &IdlenessTable,
    t: Ticks,
    policy: &mut PolicyState,
    agent: AgentId,
) -> Result<Assignment> {
    let candidates = candidate_set(library, source, policy)?;
    let (best, reward) = best_candidate(&candidates.walks, idleness, t);
    Ok(Assignment {
        agent,
        walk: candidates.walks[best].clone(),
        reward,
        decided_at: t,
        candidates_searched: candidates.searched(),
    })
}
