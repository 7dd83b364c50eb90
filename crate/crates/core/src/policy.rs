//! Scheduling policies for the simulator.

use crate::fluid::FluidSolution;
use crate::model::{ClassId, NetworkModel, StationId};
use crate::paths::{PathSign, SimplePath};
use crate::sim::{SystemInstance, SystemState};

/// A scheduling rule: given the current state, return the in-service matrix
/// to use until the next event.
pub trait Policy: Sync {
    fn name(&self) -> &str;

    fn assign(&self, state: &SystemState, sys: &SystemInstance) -> Vec<Vec<i64>>;

    /// True for stand-ins that carry no guarantee.
    fn is_heuristic(&self) -> bool {
        false
    }
}

/// Serves nobody.
#[derive(Debug, Clone, Copy, Default)]
pub struct Idle;

impl Policy for Idle {
    fn name(&self) -> &str {
        "idle"
    }

    fn assign(&self, state: &SystemState, _sys: &SystemInstance) -> Vec<Vec<i64>> {
        vec![vec![0; state.psi.first().map_or(0, Vec::len)]; state.psi.len()]
    }
}

/// Work-conserving over the basic activities. Customers already in service
/// stay where they are; waiting customers are placed on idle servers
/// activity by activity in decreasing service rate.
#[derive(Debug, Clone)]
pub struct GreedyBasic {
    order: Vec<(usize, usize)>,
}

impl GreedyBasic {
    pub fn new(model: &NetworkModel, sol: &FluidSolution) -> Self {
        let mut order: Vec<(usize, usize)> = sol
            .basic_edges
            .iter()
            .map(|&(ClassId(i), StationId(j))| (i, j))
            .collect();
        // stable sort keeps row-major order among equal rates
        order.sort_by(|a, b| model.mu()[b.0][b.1].total_cmp(&model.mu()[a.0][a.1]));
        Self { order }
    }

    /// Fill order, zero-based `(class, station)` pairs.
    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }

    fn fill(&self, psi: &mut [Vec<i64>], state: &SystemState, sys: &SystemInstance) {
        let mut queue: Vec<i64> = (0..psi.len())
            .map(|i| state.x[i] - psi[i].iter().sum::<i64>())
            .collect();
        let mut idle: Vec<i64> = (0..sys.stations())
            .map(|j| sys.servers[j] - psi.iter().map(|r| r[j]).sum::<i64>())
            .collect();
        for &(i, j) in &self.order {
            let k = queue[i].min(idle[j]);
            if k > 0 {
                psi[i][j] += k;
                queue[i] -= k;
                idle[j] -= k;
            }
        }
    }
}

impl Policy for GreedyBasic {
    fn name(&self) -> &str {
        "greedy-basic"
    }

    fn assign(&self, state: &SystemState, sys: &SystemInstance) -> Vec<Vec<i64>> {
        let mut psi = state.psi.clone();
        self.fill(&mut psi, state, sys);
        psi
    }
}

/// Greedy baseline that, whenever `e . X >= e . N`, moves up to
/// `ceil(sqrt(n))` customers against the orientation of the most negative
/// simple path. That move raises the total service rate by the path's
/// absolute weight per customer shifted and keeps every row and column sum
/// within bounds. A heuristic, not an exact null-controlling construction.
#[derive(Debug, Clone)]
pub struct NegativePathPump {
    greedy: GreedyBasic,
    path: SimplePath,
    /// Zero-based `(class, station, sign)`.
    moves: Vec<(usize, usize, i8)>,
}

impl NegativePathPump {
    /// `None` when no simple path has negative weight.
    pub fn new(model: &NetworkModel, sol: &FluidSolution, paths: &[SimplePath]) -> Option<Self> {
        let path = paths
            .iter()
            .filter(|p| p.sign_class == PathSign::Negative)
            .min_by(|a, b| a.weight.total_cmp(&b.weight))?
            .clone();
        let moves = path
            .signed_edges
            .iter()
            .map(|e| (e.edge.0 .0, e.edge.1 .0, e.sign))
            .collect();
        Some(Self {
            greedy: GreedyBasic::new(model, sol),
            path,
            moves,
        })
    }

    pub fn path(&self) -> &SimplePath {
        &self.path
    }
}

impl Policy for NegativePathPump {
    fn name(&self) -> &str {
        "negative-path"
    }

    fn is_heuristic(&self) -> bool {
        true
    }

    fn assign(&self, state: &SystemState, sys: &SystemInstance) -> Vec<Vec<i64>> {
        let mut psi = self.greedy.assign(state, sys);
        if state.at_or_above_capacity(sys) {
            let cap = (sys.n as f64).sqrt().ceil() as i64;
            let room = self
                .moves
                .iter()
                .filter(|m| m.2 > 0)
                .map(|&(i, j, _)| psi[i][j])
                .min()
                .unwrap_or(0);
            let shift = cap.min(room);
            for &(i, j, s) in &self.moves {
                psi[i][j] -= shift * s as i64;
            }
        }
        psi
    }
}
