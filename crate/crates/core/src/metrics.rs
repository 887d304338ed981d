//! Run-level idleness metrics and box-plot summaries across runs.

use serde::{Deserialize, Serialize};

use crate::graph::PatrolGraph;
use crate::sim::{EventKind, LogRecord};
use crate::{ticks_to_seconds, Error, Result, Ticks};

/// Maximum idleness per node over a run, derived from the visit log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub horizon: Ticks,
    /// Largest gap per node, including the stretch before the first visit
    /// and the one after the last visit up to the horizon.
    pub per_node_max: Vec<Ticks>,
    pub visit_counts: Vec<u64>,
    pub priority_max: Ticks,
    pub graph_max: Ticks,
}

impl RunMetrics {
    /// Seconds.
    pub fn priority_max_idleness(&self) -> f64 {
        ticks_to_seconds(self.priority_max)
    }

    /// Seconds.
    pub fn graph_max_idleness(&self) -> f64 {
        ticks_to_seconds(self.graph_max)
    }

    /// Graph maximum over priority maximum; `None` when the priority maximum
    /// is zero.
    pub fn idleness_ratio(&self) -> Option<f64> {
        (self.priority_max > 0).then(|| self.graph_max as f64 / self.priority_max as f64)
    }

    pub fn unvisited_nodes(&self) -> usize {
        self.visit_counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Scans the arrival records of a visit log. Every node counts as visited
/// at time zero; arrival records must be in non-decreasing time order.
pub fn compute_metrics(graph: &PatrolGraph, log: &[LogRecord], horizon: Ticks) -> RunMetrics {
    let n = graph.node_count();
    let mut last = vec![0; n];
    let mut per_node_max = vec![0; n];
    let mut visit_counts = vec![0; n];
    for r in log.iter().filter(|r| r.kind == EventKind::Arrival) {
        let i = r.node.index();
        per_node_max[i] = per_node_max[i].max(r.time - last[i]);
        last[i] = r.time;
        visit_counts[i] += 1;
    }
    for (max, &l) in per_node_max.iter_mut().zip(&last) {
        *max = (*max).max(horizon.saturating_sub(l));
    }
    let priority_max = graph
        .priority()
        .iter()
        .map(|p| per_node_max[p.index()])
        .max()
        .unwrap_or(0);
    let graph_max = per_node_max.iter().copied().max().unwrap_or(0);
    RunMetrics {
        horizon,
        per_node_max,
        visit_counts,
        priority_max,
        graph_max,
    }
}

/// Five-number summary plus mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

// Linear interpolation between closest ranks on sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn aggregate(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        count: sorted.len(),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::AgentId;
    use crate::graph::NodeId;

    fn arrival(time: Ticks, node: u32) -> LogRecord {
        LogRecord {
            time,
            agent: AgentId(0),
            node: NodeId(node),
            walk_id: 0,
            kind: EventKind::Arrival,
        }
    }

    #[test]
    fn hand_traced_gaps() {
        let g = PatrolGraph::grid(2, 2, 1.0, &[0], 1.0).unwrap();
        let log = [arrival(0, 0), arrival(3, 0), arrival(10, 0)];
        let m = compute_metrics(&g, &log, 12);
        assert_eq!(m.per_node_max[0], 7);
        // never visited: the whole horizon
        assert_eq!(m.per_node_max[3], 12);
        assert_eq!(m.visit_counts, vec![3, 0, 0, 0]);
        assert_eq!(m.unvisited_nodes(), 3);
        assert_eq!(m.priority_max, 7);
        assert_eq!(m.graph_max, 12);
    }

    #[test]
    fn assignment_rows_are_ignored() {
        let g = PatrolGraph::grid(2, 2, 1.0, &[0], 1.0).unwrap();
        let mut a = arrival(5, 1);
        a.kind = EventKind::Assignment;
        let m = compute_metrics(&g, &[a], 6);
        assert_eq!(m.per_node_max[1], 6);
    }

    #[test]
    fn ratio() {
        let m = RunMetrics {
            horizon: 100,
            per_node_max: vec![],
            visit_counts: vec![],
            priority_max: 10_000_000,
            graph_max: 80_000_000,
        };
        assert_eq!(m.idleness_ratio(), Some(8.0));
        assert_eq!(m.graph_max_idleness(), 80.0);
        let zero = RunMetrics { priority_max: 0, ..m };
        assert_eq!(zero.idleness_ratio(), None);
    }

    #[test]
    fn summaries() {
        let s = aggregate(&[3.0, 1.0, 5.0, 2.0, 4.0]).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max, s.mean),
            (1.0, 2.0, 3.0, 4.0, 5.0, 3.0)
        );
        let s = aggregate(&[7.5]).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max, s.mean),
            (7.5, 7.5, 7.5, 7.5, 7.5, 7.5)
        );
        assert_eq!(aggregate(&[1.0, 2.0, 3.0]).unwrap().count, 3);
        assert!(matches!(aggregate(&[]), Err(Error::EmptyGroup)));
        assert_eq!(aggregate(&[1.0, 2.0]).unwrap().median, 1.5);
    }
}
