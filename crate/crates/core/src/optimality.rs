//! Throughput optimality and the null-controllability verdict.
//!
//! A static fluid model is throughput optimal when no allocation `psi` in
//! `X(x*, nu)` (nonnegative, row sums at most `x*`, column sums at most `nu`)
//! serves fluid faster than it arrives. On a tree solution this is equivalent
//! to every simple path having nonnegative weight, and the two routes are
//! computed independently here: [`throughput_verdict_lp`] by linear
//! programming and [`throughput_verdict_paths`] from path weights.

use serde::Serialize;
use thiserror::Error;

use crate::error::LpError;
use crate::fluid::{AssumptionReport, FluidSolution};
use crate::linprog::{solve_lp, LinearProgram, LpStatus};
use crate::model::{activity_set, ClassId, Edge, NetworkModel, StationId, TOL};
use crate::paths::{Dependence, PathSign, SimplePath};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimalityError {
    #[error("path with leaves ({0}, {1}) is not a zero path")]
    NotAZeroPath(usize, usize),
    #[error("the allocation family needs a path through exactly two classes and two stations")]
    UnsupportedPath,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// `X(x_bar, nu_bar)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationPolytope {
    pub x_bar: Vec<f64>,
    pub nu_bar: Vec<f64>,
}

impl AllocationPolytope {
    pub fn new(x_bar: Vec<f64>, nu_bar: Vec<f64>) -> Self {
        Self { x_bar, nu_bar }
    }

    /// Membership with every constraint family checked to within `tol`.
    pub fn contains(&self, psi: &[Vec<f64>], tol: f64) -> bool {
        let nonneg = psi.iter().flatten().all(|&v| v >= -tol);
        let rows = psi
            .iter()
            .zip(&self.x_bar)
            .all(|(row, x)| row.iter().sum::<f64>() <= x + tol);
        let cols = self
            .nu_bar
            .iter()
            .enumerate()
            .all(|(j, nu)| psi.iter().map(|row| row[j]).sum::<f64>() <= nu + tol);
        nonneg && rows && cols
    }
}

/// `sum_ij mu_ij psi_ij`.
pub fn throughput(model: &NetworkModel, psi: &[Vec<f64>]) -> f64 {
    model
        .mu()
        .iter()
        .zip(psi)
        .flat_map(|(mr, pr)| mr.iter().zip(pr).map(|(m, p)| m * p))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputMax {
    pub value: f64,
    pub psi: Vec<Vec<f64>>,
}

/// Maximum of `sum mu_ij psi_ij` over `X(x_bar, nu_bar)`.
pub fn max_throughput(
    x_bar: &[f64],
    nu_bar: &[f64],
    model: &NetworkModel,
) -> Result<ThroughputMax, LpError> {
    let vars: Vec<Edge> = activity_set(model).iter().collect();
    let objective = vars.iter().map(|&e| -model.rate(e)).collect();
    let mut lp = LinearProgram::new(vars.len(), objective);
    for (i, &x) in x_bar.iter().enumerate() {
        let coeffs = vars.iter().map(|(c, _)| if c.0 == i { 1.0 } else { 0.0 }).collect();
        lp = lp.ub(coeffs, x);
    }
    for (j, &nu) in nu_bar.iter().enumerate() {
        let coeffs = vars.iter().map(|(_, s)| if s.0 == j { 1.0 } else { 0.0 }).collect();
        lp = lp.ub(coeffs, nu);
    }
    let res = solve_lp(&lp)?;
    if res.status != LpStatus::Optimal {
        // psi = 0 is always feasible and the region is bounded.
        return Err(LpError::NumericalFailure { iterations: 0 });
    }
    let mut psi = vec![vec![0.0; model.stations()]; model.classes()];
    for (k, &(ClassId(i), StationId(j))) in vars.iter().enumerate() {
        psi[i][j] = res.x[k];
    }
    Ok(ThroughputMax {
        value: throughput(model, &psi),
        psi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictMethod {
    Lp,
    Paths,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputVerdict {
    pub method: VerdictMethod,
    pub optimal: bool,
    /// Only for the LP route.
    pub max_throughput: Option<f64>,
    pub arrival_total: f64,
    /// Maximizing allocation, attached when sub-optimal (LP route).
    pub witness_allocation: Option<Vec<Vec<f64>>>,
    /// Most negative path, attached when sub-optimal (path route).
    pub witness_path: Option<SimplePath>,
}

pub fn throughput_verdict_lp(
    model: &NetworkModel,
    sol: &FluidSolution,
) -> Result<ThroughputVerdict, LpError> {
    let best = max_throughput(&sol.x_star, model.nu(), model)?;
    let arrival_total = model.total_arrival_rate();
    let optimal = best.value <= arrival_total + TOL;
    Ok(ThroughputVerdict {
        method: VerdictMethod::Lp,
        optimal,
        max_throughput: Some(best.value),
        arrival_total,
        witness_allocation: (!optimal).then_some(best.psi),
        witness_path: None,
    })
}

pub fn throughput_verdict_paths(paths: &[SimplePath], model: &NetworkModel) -> ThroughputVerdict {
    let worst = paths
        .iter()
        .filter(|p| p.sign_class == PathSign::Negative)
        .min_by(|a, b| a.weight.total_cmp(&b.weight));
    ThroughputVerdict {
        method: VerdictMethod::Paths,
        optimal: worst.is_none(),
        max_throughput: None,
        arrival_total: model.total_arrival_rate(),
        witness_allocation: None,
        witness_path: worst.cloned(),
    }
}

/// Result of substituting a candidate allocation into the optimality
/// predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub feasible: bool,
    pub throughput: f64,
    pub arrival_total: f64,
    /// Feasible and strictly faster than arrivals: proves sub-optimality.
    pub proves_suboptimal: bool,
}

pub fn check_certificate(model: &NetworkModel, sol: &FluidSolution, psi: &[Vec<f64>]) -> CertificateCheck {
    let feasible = AllocationPolytope::new(sol.x_star.clone(), model.nu().to_vec()).contains(psi, TOL);
    let value = throughput(model, psi);
    let arrival_total = model.total_arrival_rate();
    CertificateCheck {
        feasible,
        throughput: value,
        arrival_total,
        proves_suboptimal: feasible && value > arrival_total + TOL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub kappa: f64,
    pub perturbed_max: f64,
    pub satisfied: bool,
}

/// Whether shifting the masses along a zero path can raise throughput above
/// the static allocation's.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationCheck {
    pub path: SimplePath,
    /// Largest grid step.
    pub kappa: f64,
    /// `x* + m_p * kappa`.
    pub perturbed_x: Vec<f64>,
    pub perturbed_max: f64,
    /// `sum mu_ij psi*_ij`.
    pub baseline: f64,
    /// `perturbed_max <= baseline + TOL` at every grid step.
    pub satisfied: bool,
    /// `perturbed_max < baseline - TOL` at the largest step.
    pub strict: bool,
    /// `m_p = 0`: the perturbation is the identity and the check is vacuous.
    pub degenerate: bool,
    /// All grid steps agree on `satisfied`.
    pub grid_consistent: bool,
    pub grid: Vec<GridPoint>,
}

/// Relative steps of the shrinking grid.
pub const KAPPA_GRID: [f64; 3] = [1.0, 0.5, 0.25];

/// Step size for a path: `1e-3 * min_basic psi* / max(1, |m_p|_inf)`.
pub fn kappa_for(sol: &FluidSolution, path: &SimplePath) -> f64 {
    let min_basic = sol
        .basic_edges
        .iter()
        .map(|&e| sol.psi(e))
        .fold(f64::INFINITY, f64::min);
    let m_inf = path.m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    1e-3 * min_basic / m_inf.max(1.0)
}

fn shifted(x: &[f64], m: &[f64], step: f64) -> Vec<f64> {
    x.iter().zip(m).map(|(x, m)| x + m * step).collect()
}

pub fn zero_path_check(
    model: &NetworkModel,
    sol: &FluidSolution,
    path: &SimplePath,
) -> Result<PerturbationCheck, OptimalityError> {
    if !path.is_zero() {
        return Err(OptimalityError::NotAZeroPath(
            path.class_leaf.0 + 1,
            model.classes() + path.station_leaf.0 + 1,
        ));
    }
    let baseline = sol.throughput(model);
    let kappa = kappa_for(sol, path);
    let degenerate = path.m.iter().all(|v| v.abs() <= TOL);
    if degenerate {
        return Ok(PerturbationCheck {
            path: path.clone(),
            kappa,
            perturbed_x: sol.x_star.clone(),
            perturbed_max: baseline,
            baseline,
            satisfied: true,
            strict: false,
            degenerate,
            grid_consistent: true,
            grid: Vec::new(),
        });
    }
    let mut grid = Vec::with_capacity(KAPPA_GRID.len());
    for scale in KAPPA_GRID {
        let k = kappa * scale;
        let best = max_throughput(&shifted(&sol.x_star, &path.m, k), model.nu(), model)?;
        grid.push(GridPoint {
            kappa: k,
            perturbed_max: best.value,
            satisfied: best.value <= baseline + TOL,
        });
    }
    let perturbed_max = grid[0].perturbed_max;
    Ok(PerturbationCheck {
        path: path.clone(),
        kappa,
        perturbed_x: shifted(&sol.x_star, &path.m, kappa),
        perturbed_max,
        baseline,
        satisfied: grid.iter().all(|g| g.satisfied),
        strict: perturbed_max < baseline - TOL,
        degenerate,
        grid_consistent: grid.iter().all(|g| g.satisfied == grid[0].satisfied),
        grid,
    })
}

/// All zero paths shifted at once, each by `kappa / |zero paths|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedCheck {
    pub kappa: f64,
    pub perturbed_x: Vec<f64>,
    pub perturbed_max: f64,
    pub baseline: f64,
    pub satisfied: bool,
    pub strict: bool,
}

pub fn combined_zero_path_check(
    model: &NetworkModel,
    sol: &FluidSolution,
    zero_paths: &[&SimplePath],
) -> Result<Option<CombinedCheck>, LpError> {
    if zero_paths.is_empty() {
        return Ok(None);
    }
    let kappa = zero_paths
        .iter()
        .map(|p| kappa_for(sol, p))
        .fold(f64::INFINITY, f64::min);
    let each = kappa / zero_paths.len() as f64;
    let mut x = sol.x_star.clone();
    for p in zero_paths {
        x = shifted(&x, &p.m, each);
    }
    let baseline = sol.throughput(model);
    let best = max_throughput(&x, model.nu(), model)?;
    Ok(Some(CombinedCheck {
        kappa,
        perturbed_x: x,
        perturbed_max: best.value,
        baseline,
        satisfied: best.value <= baseline + TOL,
        strict: best.value < baseline - TOL,
    }))
}

/// The one-parameter family of allocations in `X(x* + m_p M, nu)` obtained by
/// rotating mass around a four-vertex zero path with leaves `(i_0, j_1)` and
/// interior `j_0, i_1`:
///
/// ```text
/// psi(i_1, j_1) = psi* - gamma
/// psi(i_1, j_0) = psi* + delta + gamma
/// psi(i_0, j_1) = gamma
/// psi(i_0, j_0) = psi* - delta - gamma
/// ```
///
/// with `delta = M * m_{i_1}`. Every other entry stays at `psi*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaFamily {
    pub step: f64,
    pub delta: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub x: Vec<f64>,
    base: Vec<Vec<f64>>,
    i0: usize,
    i1: usize,
    j0: usize,
    j1: usize,
}

impl GammaFamily {
    pub fn allocation(&self, gamma: f64) -> Vec<Vec<f64>> {
        let mut psi = self.base.clone();
        psi[self.i1][self.j1] -= gamma;
        psi[self.i1][self.j0] += self.delta + gamma;
        psi[self.i0][self.j1] = gamma;
        psi[self.i0][self.j0] -= self.delta + gamma;
        psi
    }

    /// Closed form of the family's throughput, which does not involve gamma.
    pub fn constant_throughput(&self, model: &NetworkModel) -> f64 {
        let mut psi = self.base.clone();
        psi[self.i1][self.j0] += self.delta;
        psi[self.i0][self.j0] -= self.delta;
        throughput(model, &psi)
    }

    pub fn polytope(&self, model: &NetworkModel) -> AllocationPolytope {
        AllocationPolytope::new(self.x.clone(), model.nu().to_vec())
    }
}

pub fn gamma_family(
    model: &NetworkModel,
    sol: &FluidSolution,
    path: &SimplePath,
    step: f64,
) -> Result<GammaFamily, OptimalityError> {
    if !path.is_zero() {
        return Err(OptimalityError::NotAZeroPath(
            path.class_leaf.0 + 1,
            model.classes() + path.station_leaf.0 + 1,
        ));
    }
    let [i0, j0, i1, j1] = path.vertices[..] else {
        return Err(OptimalityError::UnsupportedPath);
    };
    use crate::model::Vertex::{Class, Station};
    let (Class(i0), Station(j0), Class(i1), Station(j1)) = (i0, j0, i1, j1) else {
        return Err(OptimalityError::UnsupportedPath);
    };
    let (i0, j0, i1, j1) = (i0.0, j0.0, i1.0, j1.0);
    let psi = &sol.psi_star;
    let delta = step * path.m[i1];
    Ok(GammaFamily {
        step,
        delta,
        gamma_min: (-(psi[i1][j0] + delta)).max(0.0),
        gamma_max: psi[i1][j1].min(psi[i0][j0] - delta),
        x: shifted(&sol.x_star, &path.m, step),
        base: psi.clone(),
        i0,
        i1,
        j0,
        j1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NcStatus {
    NcPossible,
    NcImpossible,
    Unknown,
}

/// Which result the verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NcBasis {
    /// Throughput sub-optimal: null controlling policies exist by earlier
    /// results on such networks (not re-derived here).
    ThroughputSubOptimal,
    /// Throughput optimal without zero paths.
    NoZeroPaths,
    /// Throughput optimal; every zero path is class- or pool-dependent or
    /// strictly loses throughput under its mass shift.
    ZeroPathsResolved,
    /// Throughput optimal with two classes or two stations.
    TwoClassesOrStations,
    /// Throughput optimal with a zero path that none of the criteria settle.
    UnresolvedZeroPath,
    /// The static solution is not critically loaded or not a tree.
    AssumptionsViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroPathEvidence {
    /// Index into the path list.
    pub path_index: usize,
    pub dependence: Dependence,
    pub check: PerturbationCheck,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NcVerdict {
    pub status: NcStatus,
    pub basis: NcBasis,
    pub per_path_evidence: Vec<ZeroPathEvidence>,
    pub combined_check: Option<CombinedCheck>,
    /// Assumption findings and other qualifications of the verdict.
    pub caveats: Vec<String>,
}

/// Decides null controllability from the assumption report, the path list
/// and the (LP) throughput verdict.
///
/// Non-uniqueness of the static optimum is reported as a caveat rather than
/// forcing `Unknown`; a missing tree or a load other than critical does force
/// `Unknown`.
pub fn nc_verdict(
    model: &NetworkModel,
    sol: &FluidSolution,
    report: &AssumptionReport,
    paths: &[SimplePath],
    throughput: &ThroughputVerdict,
) -> Result<NcVerdict, OptimalityError> {
    let mut caveats = Vec::new();
    if !report.critically_loaded || !report.is_tree {
        return Ok(NcVerdict {
            status: NcStatus::Unknown,
            basis: NcBasis::AssumptionsViolated,
            per_path_evidence: Vec::new(),
            combined_check: None,
            caveats: report.violations.clone(),
        });
    }
    if !report.unique {
        caveats.push("static optimum is not unique; analysis uses the solver's vertex".into());
        caveats.extend(report.violations.iter().cloned());
    }
    if !throughput.optimal {
        return Ok(NcVerdict {
            status: NcStatus::NcPossible,
            basis: NcBasis::ThroughputSubOptimal,
            per_path_evidence: Vec::new(),
            combined_check: None,
            caveats,
        });
    }

    let zero: Vec<(usize, &SimplePath)> = paths.iter().enumerate().filter(|(_, p)| p.is_zero()).collect();
    let mut evidence = Vec::with_capacity(zero.len());
    for &(path_index, p) in &zero {
        let check = zero_path_check(model, sol, p)?;
        let dependent = p.dependence != Dependence::Neither;
        if !check.grid_consistent {
            caveats.push(format!(
                "perturbation grid disagrees for the path with leaves {:?}",
                p.labels(model.classes())
            ));
        }
        evidence.push(ZeroPathEvidence {
            path_index,
            dependence: p.dependence,
            resolved: dependent || (check.strict && check.grid_consistent),
            check,
        });
    }
    let refs: Vec<&SimplePath> = zero.iter().map(|(_, p)| *p).collect();
    let combined_check = combined_zero_path_check(model, sol, &refs)?;

    let (status, basis) = if zero.is_empty() {
        (NcStatus::NcImpossible, NcBasis::NoZeroPaths)
    } else if evidence.iter().all(|e| e.resolved) {
        (NcStatus::NcImpossible, NcBasis::ZeroPathsResolved)
    } else if model.classes() == 2 || model.stations() == 2 {
        (NcStatus::NcImpossible, NcBasis::TwoClassesOrStations)
    } else {
        (NcStatus::Unknown, NcBasis::UnresolvedZeroPath)
    };
    Ok(NcVerdict {
        status,
        basis,
        per_path_evidence: evidence,
        combined_check,
        caveats,
    })
}

/// Number of simple paths a spanning tree on `I + J` vertices induces.
pub fn expected_path_count(classes: usize, stations: usize) -> usize {
    classes * stations + 1 - classes - stations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::{check_assumptions, solve_static_allocation};
    use crate::paths::enumerate_simple_paths;

    fn model(mu21: f64) -> NetworkModel {
        NetworkModel::new(
            vec![8.0, 4.0],
            vec![1.0, 1.0, 1.0],
            vec![vec![3.0, 10.0, 1.0], vec![mu21, 4.0, 2.0]],
        )
        .unwrap()
    }

    #[test]
    fn case_a_and_b_maxima() {
        let best = max_throughput(&[1.5, 1.5], &[1.0, 1.0, 1.0], &model(1.0)).unwrap();
        assert!((best.value - 14.0).abs() < 1e-9);
        let best = max_throughput(&[1.5, 1.5], &[1.0, 1.0, 1.0], &model(0.0)).unwrap();
        assert!((best.value - 13.5).abs() < 1e-9);
        let best = max_throughput(&[0.0, 0.0], &[1.0, 1.0, 1.0], &model(1.0)).unwrap();
        assert_eq!(best.value, 0.0);
        assert!(best.psi.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn lp_and_path_verdicts_on_case_a() {
        let m = model(1.0);
        let sol = solve_static_allocation(&m).unwrap();
        let lp = throughput_verdict_lp(&m, &sol).unwrap();
        assert!(!lp.optimal);
        let witness = lp.witness_allocation.as_ref().unwrap();
        assert!(check_certificate(&m, &sol, witness).proves_suboptimal);
        let paths = enumerate_simple_paths(&m, &sol).unwrap();
        let pv = throughput_verdict_paths(&paths, &m);
        assert!(!pv.optimal);
        assert_eq!(pv.witness_path.unwrap().weight, -4.0);
    }

    #[test]
    fn perturbed_static_allocation_is_a_certificate() {
        let m = model(1.0);
        let sol = solve_static_allocation(&m).unwrap();
        let beta = 0.1;
        let xi_hat = [[1.0 - beta, 0.5 + beta, 0.0], [beta, 0.5 - beta, 1.0]];
        let psi: Vec<Vec<f64>> = xi_hat
            .iter()
            .map(|r| r.iter().zip(m.nu()).map(|(x, v)| x * v).collect())
            .collect();
        let cert = check_certificate(&m, &sol, &psi);
        assert!(cert.feasible);
        assert!((cert.throughput - 12.4).abs() < 1e-12);
        assert!(cert.proves_suboptimal);
    }

    #[test]
    fn minimal_model_is_optimal_and_uncontrollable() {
        let m = NetworkModel::new(vec![2.0], vec![1.0], vec![vec![2.0]]).unwrap();
        let sol = solve_static_allocation(&m).unwrap();
        let lp = throughput_verdict_lp(&m, &sol).unwrap();
        assert!(lp.optimal);
        assert!((lp.max_throughput.unwrap() - 2.0).abs() < 1e-12);
        let report = check_assumptions(&m, &sol);
        let paths = enumerate_simple_paths(&m, &sol).unwrap();
        let v = nc_verdict(&m, &sol, &report, &paths, &lp).unwrap();
        assert_eq!((v.status, v.basis), (NcStatus::NcImpossible, NcBasis::NoZeroPaths));
    }

    #[test]
    fn non_zero_path_is_rejected_by_the_check() {
        let m = model(1.0);
        let sol = solve_static_allocation(&m).unwrap();
        let paths = enumerate_simple_paths(&m, &sol).unwrap();
        assert!(matches!(
            zero_path_check(&m, &sol, &paths[0]),
            Err(OptimalityError::NotAZeroPath(..))
        ));
    }

    #[test]
    fn polytope_membership() {
        let poly = AllocationPolytope::new(vec![1.0, 1.0], vec![1.0]);
        assert!(poly.contains(&[vec![0.5], vec![0.5]], TOL));
        assert!(!poly.contains(&[vec![0.6], vec![0.5]], TOL));
        assert!(!poly.contains(&[vec![-0.1], vec![0.5]], TOL));
        assert!(!AllocationPolytope::new(vec![0.1, 1.0], vec![1.0]).contains(&[vec![0.5], vec![0.0]], TOL));
    }

    #[test]
    fn path_count_formula() {
        assert_eq!(expected_path_count(2, 3), 2);
        assert_eq!(expected_path_count(1, 5), 0);
        assert_eq!(expected_path_count(3, 3), 4);
    }
}
