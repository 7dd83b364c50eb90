//! Simple paths of the basic-activity tree.
//!
//! For every class/station pair `(i, j)` that is not a basic activity there is
//! exactly one tree path `i = i_0, j_0, i_1, ..., i_k, j_k = j`. It is a
//! *closed* simple path when `(i, j)` is an activity and *open* otherwise.
//! Edges are directed `j_k -> i_k -> j_{k-1} -> ... -> j_0 -> i_0`, and the
//! closing edge of a closed path runs `i_0 -> j_k`. An edge directed from its
//! station to its class carries sign `+1`, the reverse carries `-1`.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::PathError;
use crate::fluid::{component_count, FluidSolution};
use crate::model::{ClassId, Edge, NetworkModel, StationId, Vertex, TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathSign {
    Negative,
    Zero,
    Positive,
}

impl PathSign {
    pub fn of(weight: f64) -> Self {
        Self::with_tol(weight, TOL)
    }

    pub fn with_tol(weight: f64, tol: f64) -> Self {
        if weight.abs() <= tol {
            PathSign::Zero
        } else if weight < 0.0 {
            PathSign::Negative
        } else {
            PathSign::Positive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dependence {
    ClassDependent,
    PoolDependent,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignedEdge {
    pub edge: Edge,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplePath {
    pub kind: PathKind,
    pub class_leaf: ClassId,
    pub station_leaf: StationId,
    /// `i_0, j_0, i_1, ..., i_k, j_k`.
    pub vertices: Vec<Vertex>,
    /// Basic edges in vertex order, then the closing edge for closed paths.
    pub signed_edges: Vec<SignedEdge>,
    /// `m[i] = sum_j s(p, i, j) mu_ij`; zero for classes off the path.
    pub m: Vec<f64>,
    pub weight: f64,
    pub sign_class: PathSign,
    pub dependence: Dependence,
}

impl SimplePath {
    /// `k` in `i_0, j_0, ..., i_k, j_k`.
    pub fn length(&self) -> usize {
        self.vertices.len() / 2 - 1
    }

    pub fn leaves(&self) -> Edge {
        (self.class_leaf, self.station_leaf)
    }

    pub fn sign_of(&self, edge: Edge) -> Option<i8> {
        self.signed_edges.iter().find(|e| e.edge == edge).map(|e| e.sign)
    }

    pub fn is_zero(&self) -> bool {
        self.sign_class == PathSign::Zero
    }

    /// Vertex labels in the `1..=I` / `I+1..=I+J` convention.
    pub fn labels(&self, classes: usize) -> Vec<usize> {
        self.vertices.iter().map(|v| v.label(classes)).collect()
    }
}

/// Adjacency view of the basic activities.
pub struct BasicTree {
    classes: usize,
    stations: usize,
    adj: Vec<Vec<usize>>,
}

impl BasicTree {
    fn index(&self, v: Vertex) -> usize {
        match v {
            Vertex::Class(ClassId(i)) => i,
            Vertex::Station(StationId(j)) => self.classes + j,
        }
    }

    fn vertex(&self, idx: usize) -> Vertex {
        if idx < self.classes {
            Vertex::Class(ClassId(idx))
        } else {
            Vertex::Station(StationId(idx - self.classes))
        }
    }

    fn build(classes: usize, stations: usize, edges: &BTreeSet<Edge>) -> Self {
        let mut adj = vec![Vec::new(); classes + stations];
        for &(ClassId(i), StationId(j)) in edges {
            adj[i].push(classes + j);
            adj[classes + j].push(i);
        }
        Self {
            classes,
            stations,
            adj,
        }
    }

    /// Fails with [`PathError::NotATree`] unless `edges` span all `I + J`
    /// vertices without cycles.
    pub fn new(classes: usize, stations: usize, edges: &BTreeSet<Edge>) -> Result<Self, PathError> {
        if edges.len() + 1 != classes + stations || component_count(classes, stations, edges) != 1 {
            return Err(PathError::NotATree);
        }
        Ok(Self::build(classes, stations, edges))
    }

    /// Unique vertex sequence from `from` to `to` (inclusive), or `None` if
    /// they lie in different components.
    pub fn path(&self, from: Vertex, to: Vertex) -> Option<Vec<Vertex>> {
        let (s, t) = (self.index(from), self.index(to));
        let mut parent = vec![usize::MAX; self.classes + self.stations];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            if v == t {
                break;
            }
            for &w in &self.adj[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if parent[t] == usize::MAX {
            return None;
        }
        let mut out = vec![self.vertex(t)];
        let mut v = t;
        while v != s {
            v = parent[v];
            out.push(self.vertex(v));
        }
        out.reverse();
        Some(out)
    }
}

/// Signs for the basic edges along `vertices = i_0, j_0, ..., i_k, j_k`,
/// followed by the closing edge `(i_0, j_k)` with sign `-1` when `closed`.
pub fn assign_signs(vertices: &[Vertex], closed: bool) -> Vec<SignedEdge> {
    let mut out: Vec<SignedEdge> = vertices
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            // i_l followed by j_l: traversed j_l -> i_l.
            (Vertex::Class(c), Vertex::Station(s)) => SignedEdge { edge: (c, s), sign: 1 },
            // j_l followed by i_{l+1}: traversed i_{l+1} -> j_l.
            (Vertex::Station(s), Vertex::Class(c)) => SignedEdge { edge: (c, s), sign: -1 },
            _ => panic!("vertex sequence must alternate between classes and stations"),
        })
        .collect();
    if closed {
        if let (Some(Vertex::Class(c)), Some(Vertex::Station(s))) = (vertices.first(), vertices.last()) {
            out.push(SignedEdge {
                edge: (*c, *s),
                sign: -1,
            });
        }
    }
    out
}

/// `(m, weight)` for a signed edge list.
pub fn path_weights(signed_edges: &[SignedEdge], model: &NetworkModel) -> (Vec<f64>, f64) {
    let mut m = vec![0.0; model.classes()];
    for e in signed_edges {
        m[e.edge.0 .0] += f64::from(e.sign) * model.rate(e.edge);
    }
    let weight = m.iter().sum();
    (m, weight)
}

pub fn classify_dependence(signed_edges: &[SignedEdge], model: &NetworkModel) -> Dependence {
    let mut per_class = vec![0.0; model.classes()];
    let mut per_station = vec![0.0; model.stations()];
    for e in signed_edges {
        let v = f64::from(e.sign) * model.rate(e.edge);
        per_class[e.edge.0 .0] += v;
        per_station[e.edge.1 .0] += v;
    }
    if per_class.iter().all(|v| v.abs() <= TOL) {
        Dependence::ClassDependent
    } else if per_station.iter().all(|v| v.abs() <= TOL) {
        Dependence::PoolDependent
    } else {
        Dependence::Neither
    }
}

fn build_path(model: &NetworkModel, vertices: Vec<Vertex>, closed: bool) -> SimplePath {
    let signed_edges = assign_signs(&vertices, closed);
    let (m, weight) = path_weights(&signed_edges, model);
    let dependence = classify_dependence(&signed_edges, model);
    let (Some(&Vertex::Class(class_leaf)), Some(&Vertex::Station(station_leaf))) =
        (vertices.first(), vertices.last())
    else {
        unreachable!("paths run from a class to a station");
    };
    SimplePath {
        kind: if closed { PathKind::Closed } else { PathKind::Open },
        class_leaf,
        station_leaf,
        vertices,
        signed_edges,
        m,
        weight,
        sign_class: PathSign::of(weight),
        dependence,
    }
}

/// One simple path per non-basic class/station pair, in row-major pair
/// order.
pub fn enumerate_simple_paths(
    model: &NetworkModel,
    sol: &FluidSolution,
) -> Result<Vec<SimplePath>, PathError> {
    let tree = BasicTree::new(model.classes(), model.stations(), &sol.basic_edges)?;
    Ok(model
        .pairs()
        .filter(|e| !sol.is_basic(*e))
        .map(|(c, s)| {
            let vertices = tree
                .path(Vertex::Class(c), Vertex::Station(s))
                .expect("spanning tree connects every pair");
            build_path(model, vertices, model.is_activity((c, s)))
        })
        .collect())
}

/// Weight of the cycle closed by one non-forest basic edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleWeight {
    pub closing_edge: Edge,
    pub vertices: Vec<Vertex>,
    pub weight: f64,
}

/// For a basic graph that is not a tree: the signed weight of every
/// fundamental cycle of a spanning forest (built from the basic edges in
/// order), using the same sign rule as closed simple paths. A throughput
/// optimal model can only have zero-weight cycles.
pub fn fundamental_cycle_weights(model: &NetworkModel, sol: &FluidSolution) -> Vec<CycleWeight> {
    let (ni, nj) = (model.classes(), model.stations());
    let mut root: Vec<usize> = (0..ni + nj).collect();
    fn find(root: &mut [usize], mut v: usize) -> usize {
        while root[v] != v {
            root[v] = root[root[v]];
            v = root[v];
        }
        v
    }
    let mut forest = BTreeSet::new();
    let mut closing = Vec::new();
    for &(c, s) in &sol.basic_edges {
        let (a, b) = (find(&mut root, c.0), find(&mut root, ni + s.0));
        if a == b {
            closing.push((c, s));
        } else {
            root[a] = b;
            forest.insert((c, s));
        }
    }
    let tree = BasicTree::build(ni, nj, &forest);
    closing
        .into_iter()
        .map(|(c, s)| {
            let vertices = tree
                .path(Vertex::Class(c), Vertex::Station(s))
                .expect("closing edge joins one component");
            let (_, weight) = path_weights(&assign_signs(&vertices, true), model);
            CycleWeight {
                closing_edge: (c, s),
                vertices,
                weight,
            }
        })
        .collect()
}
