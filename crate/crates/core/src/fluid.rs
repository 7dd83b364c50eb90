//! The static allocation problem: choose fractions `xi[i][j]` of each pool's
//! capacity so that every class is fully served while the maximal pool load
//! `rho` is minimized.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::FluidError;
use crate::linprog::{optimal_range, solve_lp, LinearProgram, LpStatus};
use crate::model::{
    activity_set, effective_rates, ClassId, Edge, NetworkModel, StationId, Vertex, TOL,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidSolution {
    /// `xi_star[i][j]`: fraction of pool `j` devoted to class `i`.
    pub xi_star: Vec<Vec<f64>>,
    pub rho_star: f64,
    /// `psi_star[i][j] = xi_star[i][j] * nu[j]`.
    pub psi_star: Vec<Vec<f64>>,
    /// `x_star[i] = sum_j psi_star[i][j]`.
    pub x_star: Vec<f64>,
    /// Activities with `xi_star > TOL`.
    pub basic_edges: BTreeSet<Edge>,
}

impl FluidSolution {
    pub(crate) fn from_allocation(model: &NetworkModel, xi_star: Vec<Vec<f64>>, rho_star: f64) -> Self {
        let psi_star: Vec<Vec<f64>> = xi_star
            .iter()
            .map(|row| row.iter().zip(model.nu()).map(|(x, v)| x * v).collect())
            .collect();
        let x_star = psi_star.iter().map(|row| row.iter().sum()).collect();
        let basic_edges = model
            .pairs()
            .filter(|&(ClassId(i), StationId(j))| xi_star[i][j] > TOL)
            .collect();
        Self {
            xi_star,
            rho_star,
            psi_star,
            x_star,
            basic_edges,
        }
    }

    pub fn is_basic(&self, edge: Edge) -> bool {
        self.basic_edges.contains(&edge)
    }

    pub fn psi(&self, (ClassId(i), StationId(j)): Edge) -> f64 {
        self.psi_star[i][j]
    }

    /// `sum_ij mu_ij psi*_ij`, the fluid throughput at the static allocation.
    pub fn throughput(&self, model: &NetworkModel) -> f64 {
        model.pairs().map(|e| model.rate(e) * self.psi(e)).sum()
    }
}

/// The allocation LP over `(xi_ij for every activity, rho)`, variables ordered
/// row-major over the activities with `rho` last.
pub(crate) struct AllocationLp {
    pub lp: LinearProgram,
    pub vars: Vec<Edge>,
}

pub(crate) fn allocation_lp(model: &NetworkModel) -> AllocationLp {
    let vars: Vec<Edge> = activity_set(model).iter().collect();
    let rates = effective_rates(model);
    let n = vars.len() + 1;
    let mut objective = vec![0.0; n];
    objective[n - 1] = 1.0;
    let mut lp = LinearProgram::new(n, objective);
    for i in 0..model.classes() {
        let coeffs = (0..n)
            .map(|k| match vars.get(k) {
                Some(&(ClassId(ci), StationId(j))) if ci == i => rates.mubar[i][j],
                _ => 0.0,
            })
            .collect();
        lp = lp.eq(coeffs, model.lambda()[i]);
    }
    for j in 0..model.stations() {
        let mut coeffs: Vec<f64> = vars
            .iter()
            .map(|&(_, StationId(sj))| if sj == j { 1.0 } else { 0.0 })
            .collect();
        coeffs.push(-1.0);
        lp = lp.ub(coeffs, 0.0);
    }
    AllocationLp { lp, vars }
}

pub fn solve_static_allocation(model: &NetworkModel) -> Result<FluidSolution, FluidError> {
    let AllocationLp { lp, vars } = allocation_lp(model);
    let res = solve_lp(&lp)?;
    if res.status != LpStatus::Optimal {
        return Err(FluidError::InfeasibleModel);
    }
    let mut xi = vec![vec![0.0; model.stations()]; model.classes()];
    for (k, &(ClassId(i), StationId(j))) in vars.iter().enumerate() {
        xi[i][j] = res.x[k];
    }
    Ok(FluidSolution::from_allocation(model, xi, res.value))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub critically_loaded: bool,
    pub unique: bool,
    pub is_tree: bool,
    pub violations: Vec<String>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.critically_loaded && self.unique && self.is_tree
    }
}

/// Number of connected components of the graph on all `I + J` vertices
/// spanned by `edges`.
pub(crate) fn component_count(classes: usize, stations: usize, edges: &BTreeSet<Edge>) -> usize {
    let idx = |v: Vertex| match v {
        Vertex::Class(ClassId(i)) => i,
        Vertex::Station(StationId(j)) => classes + j,
    };
    let mut adj = vec![Vec::new(); classes + stations];
    for &(c, s) in edges {
        let (a, b) = (idx(Vertex::Class(c)), idx(Vertex::Station(s)));
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; classes + stations];
    let mut components = 0;
    for start in 0..seen.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    components
}

pub fn check_assumptions(model: &NetworkModel, sol: &FluidSolution) -> AssumptionReport {
    let mut violations = Vec::new();

    let col_sums: Vec<f64> = (0..model.stations())
        .map(|j| sol.xi_star.iter().map(|row| row[j]).sum())
        .collect();
    let mut critically_loaded = (sol.rho_star - 1.0).abs() <= TOL;
    if !critically_loaded {
        violations.push(format!("rho* = {} differs from 1", sol.rho_star));
    }
    for (j, s) in col_sums.iter().enumerate() {
        if (s - 1.0).abs() > TOL {
            critically_loaded = false;
            violations.push(format!(
                "station {} allocation sums to {s}, not 1",
                model.classes() + j + 1
            ));
        }
    }

    let AllocationLp { lp, vars } = allocation_lp(model);
    let mut unique = true;
    for (k, &(ClassId(i), StationId(j))) in vars.iter().enumerate() {
        match optimal_range(&lp, k, sol.rho_star) {
            Ok((lo, hi)) if hi - lo <= 2.0 * TOL => {}
            Ok((lo, hi)) => {
                unique = false;
                violations.push(format!(
                    "optimum not unique: xi[{}][{}] ranges over [{lo}, {hi}]",
                    i + 1,
                    model.classes() + j + 1
                ));
            }
            Err(e) => {
                unique = false;
                violations.push(format!("uniqueness probe failed: {e}"));
            }
        }
    }

    let expected = model.classes() + model.stations() - 1;
    let components = component_count(model.classes(), model.stations(), &sol.basic_edges);
    let mut is_tree = true;
    if components > 1 {
        is_tree = false;
        violations.push(format!("basic activity graph is disconnected ({components} components)"));
    }
    if sol.basic_edges.len() != expected {
        is_tree = false;
        violations.push(format!(
            "basic activity graph has {} edges, a spanning tree needs {expected}",
            sol.basic_edges.len()
        ));
    }

    AssumptionReport {
        critically_loaded,
        unique,
        is_tree,
        violations,
    }
}

/// How service rates are drawn by the instance generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RateFamily {
    /// Independent uniform rates in `[0.5, 10]`.
    #[default]
    Uniform,
    /// `mu_ij = a_i + b_j`: every closed simple path has weight zero.
    Additive,
    /// `mu_ij = a_i`.
    ClassDependent,
    /// `mu_ij = b_j`.
    PoolDependent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub classes: usize,
    pub stations: usize,
    pub rates: RateFamily,
    /// Probability that a non-tree pair becomes an activity.
    pub extra_activity_prob: f64,
    pub max_attempts: usize,
}

impl GeneratorConfig {
    pub fn new(classes: usize, stations: usize) -> Self {
        Self {
            classes,
            stations,
            rates: RateFamily::Uniform,
            extra_activity_prob: 0.5,
            max_attempts: 100,
        }
    }

    pub fn with_rates(mut self, rates: RateFamily) -> Self {
        self.rates = rates;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub model: NetworkModel,
    pub solution: FluidSolution,
    /// The allocation the instance was built around.
    pub planted_xi: Vec<Vec<f64>>,
    /// Seed of the accepted draw (`seed + retries`).
    pub seed: u64,
}

/// Draws a critically loaded instance whose unique static allocation is a
/// planted spanning tree. Deterministic in `seed`.
pub fn generate_critical_instance(
    seed: u64,
    classes: usize,
    stations: usize,
) -> Result<(NetworkModel, FluidSolution), FluidError> {
    generate_instance(seed, &GeneratorConfig::new(classes, stations)).map(|g| (g.model, g.solution))
}

pub fn generate_instance(seed: u64, cfg: &GeneratorConfig) -> Result<GeneratedInstance, FluidError> {
    if cfg.classes == 0 || cfg.stations == 0 {
        return Err(FluidError::InvalidParameters(
            "need at least one class and one station".into(),
        ));
    }
    for attempt in 0..cfg.max_attempts {
        let s = seed.wrapping_add(attempt as u64);
        let (model, planted_xi) = draw_planted(s, cfg)?;
        let Ok(solution) = solve_static_allocation(&model) else {
            continue;
        };
        let report = check_assumptions(&model, &solution);
        let matches = solution
            .xi_star
            .iter()
            .flatten()
            .zip(planted_xi.iter().flatten())
            .all(|(a, b)| (a - b).abs() <= 1e-6);
        if report.all_hold() && matches {
            return Ok(GeneratedInstance {
                model,
                solution,
                planted_xi,
                seed: s,
            });
        }
    }
    Err(FluidError::GenerationFailed {
        attempts: cfg.max_attempts,
    })
}

/// Uniform spanning tree of the complete bipartite graph (Aldous-Broder walk).
fn random_spanning_tree<R: Rng>(rng: &mut R, classes: usize, stations: usize) -> BTreeSet<Edge> {
    let total = classes + stations;
    let mut visited = vec![false; total];
    let mut current = rng.random_range(0..total);
    visited[current] = true;
    let mut remaining = total - 1;
    let mut tree = BTreeSet::new();
    while remaining > 0 {
        let next = if current < classes {
            classes + rng.random_range(0..stations)
        } else {
            rng.random_range(0..classes)
        };
        if !visited[next] {
            visited[next] = true;
            remaining -= 1;
            let (c, s) = if current < classes { (current, next) } else { (next, current) };
            tree.insert((ClassId(c), StationId(s - classes)));
        }
        current = next;
    }
    tree
}

fn draw_planted(seed: u64, cfg: &GeneratorConfig) -> Result<(NetworkModel, Vec<Vec<f64>>), FluidError> {
    let (ni, nj) = (cfg.classes, cfg.stations);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_spanning_tree(&mut rng, ni, nj);

    let mut xi = vec![vec![0.0; nj]; ni];
    for j in 0..nj {
        let members: Vec<usize> = tree
            .iter()
            .filter(|(_, s)| s.0 == j)
            .map(|(c, _)| c.0)
            .collect();
        let weights: Vec<f64> = members.iter().map(|_| Exp1.sample(&mut rng)).collect::<Vec<f64>>();
        let total: f64 = weights.iter().sum();
        for (&i, w) in members.iter().zip(&weights) {
            xi[i][j] = w / total;
        }
    }

    let class_part: Vec<f64> = (0..ni).map(|_| rng.random_range(0.5..10.0)).collect();
    let pool_part: Vec<f64> = (0..nj).map(|_| rng.random_range(0.5..10.0)).collect();
    let additive_a: Vec<f64> = (0..ni).map(|_| rng.random_range(0.25..5.0)).collect();
    let additive_b: Vec<f64> = (0..nj).map(|_| rng.random_range(0.25..5.0)).collect();
    let rate = |i: usize, j: usize, rng: &mut ChaCha8Rng| match cfg.rates {
        RateFamily::Uniform => rng.random_range(0.5..10.0),
        RateFamily::Additive => additive_a[i] + additive_b[j],
        RateFamily::ClassDependent => class_part[i],
        RateFamily::PoolDependent => pool_part[j],
    };

    let mut mu = vec![vec![0.0; nj]; ni];
    for i in 0..ni {
        for j in 0..nj {
            let on_tree = tree.contains(&(ClassId(i), StationId(j)));
            if on_tree || rng.random_bool(cfg.extra_activity_prob) {
                mu[i][j] = rate(i, j, &mut rng);
            }
        }
    }
    let nu: Vec<f64> = (0..nj).map(|_| rng.random_range(0.5..2.0)).collect();
    let lambda: Vec<f64> = (0..ni)
        .map(|i| (0..nj).map(|j| mu[i][j] * nu[j] * xi[i][j]).sum())
        .collect();
    let model = NetworkModel::new(lambda, nu, mu)?;
    Ok((model, xi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(mu21: f64) -> NetworkModel {
        NetworkModel::new(
            vec![8.0, 4.0],
            vec![1.0, 1.0, 1.0],
            vec![vec![3.0, 10.0, 1.0], vec![mu21, 4.0, 2.0]],
        )
        .unwrap()
    }

    #[test]
    fn case_a_allocation() {
        let sol = solve_static_allocation(&case(1.0)).unwrap();
        let expected = [[1.0, 0.5, 0.0], [0.0, 0.5, 1.0]];
        for i in 0..2 {
            for j in 0..3 {
                assert!((sol.xi_star[i][j] - expected[i][j]).abs() < 1e-9);
            }
        }
        assert!((sol.rho_star - 1.0).abs() < 1e-9);
        assert!((sol.x_star[0] - 1.5).abs() < 1e-9 && (sol.x_star[1] - 1.5).abs() < 1e-9);
        let basic: Vec<(usize, usize)> = sol
            .basic_edges
            .iter()
            .map(|&(c, s)| (c.0 + 1, s.0 + 3))
            .collect();
        assert_eq!(basic, vec![(1, 3), (1, 4), (2, 4), (2, 5)]);

        let report = check_assumptions(&case(1.0), &sol);
        assert!(report.all_hold(), "{:?}", report.violations);
    }

    #[test]
    fn minimal_model_is_forced() {
        let m = NetworkModel::new(vec![2.0], vec![1.0], vec![vec![2.0]]).unwrap();
        let sol = solve_static_allocation(&m).unwrap();
        assert!((sol.xi_star[0][0] - 1.0).abs() < 1e-12);
        assert!((sol.rho_star - 1.0).abs() < 1e-12);
        assert_eq!(sol.x_star, vec![1.0]);
        assert!(check_assumptions(&m, &sol).is_tree);
    }

    #[test]
    fn unservable_class_is_infeasible() {
        let m = NetworkModel::new(vec![1.0, 1.0], vec![1.0], vec![vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(solve_static_allocation(&m), Err(FluidError::InfeasibleModel));
    }

    #[test]
    fn block_diagonal_model_is_disconnected() {
        let m = NetworkModel::new(
            vec![1.0, 2.0],
            vec![1.0, 1.0],
            vec![vec![1.0, 0.0], vec![0.0, 2.0]],
        )
        .unwrap();
        let sol = solve_static_allocation(&m).unwrap();
        let report = check_assumptions(&m, &sol);
        assert!(!report.is_tree);
        assert!(report.violations.iter().any(|v| v.contains("disconnected")));
    }

    #[test]
    fn undercritical_model_is_flagged() {
        let m = NetworkModel::new(vec![1.0], vec![1.0], vec![vec![2.0]]).unwrap();
        let sol = solve_static_allocation(&m).unwrap();
        assert!((sol.rho_star - 0.5).abs() < 1e-12);
        assert!(!check_assumptions(&m, &sol).critically_loaded);
    }

    #[test]
    fn cycle_in_optimum_is_not_unique() {
        // Class-dependent rates with every pair active: any transport plan
        // with the right margins is optimal.
        let m = NetworkModel::new(
            vec![2.0, 1.0],
            vec![1.0, 1.0],
            vec![vec![2.0, 2.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let sol = solve_static_allocation(&m).unwrap();
        let report = check_assumptions(&m, &sol);
        assert!(report.critically_loaded);
        assert!(!report.unique);
    }

    #[test]
    fn spanning_trees_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (i, j) in [(1, 1), (1, 4), (3, 3), (4, 2)] {
            let t = random_spanning_tree(&mut rng, i, j);
            assert_eq!(t.len(), i + j - 1);
            assert_eq!(component_count(i, j, &t), 1);
        }
    }

    #[test]
    fn generator_examples() {
        let g = generate_instance(1, &GeneratorConfig::new(2, 2)).unwrap();
        for (a, b) in g.solution.xi_star.iter().flatten().zip(g.planted_xi.iter().flatten()) {
            assert!((a - b).abs() <= 1e-6);
        }
        let (_, sol) = generate_critical_instance(7, 2, 3).unwrap();
        assert!((sol.rho_star - 1.0).abs() <= TOL);
        let (_, sol) = generate_critical_instance(0, 1, 1).unwrap();
        assert_eq!(sol.basic_edges.len(), 1);
        assert!((sol.xi_star[0][0] - 1.0).abs() < 1e-12);
        assert!(generate_critical_instance(0, 0, 2).is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_instance(11, &GeneratorConfig::new(3, 2)).unwrap();
        let b = generate_instance(11, &GeneratorConfig::new(3, 2)).unwrap();
        assert_eq!(a, b);
    }
}
