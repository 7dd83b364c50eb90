//! End-to-end analysis of one model, packaged for printing and JSON output.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::error::{FluidError, LpError};
use crate::fluid::{check_assumptions, solve_static_allocation, AssumptionReport, FluidSolution};
use crate::model::{NetworkModel, TOL};
use crate::optimality::{
    expected_path_count, nc_verdict, throughput_verdict_lp, throughput_verdict_paths, NcBasis, NcStatus,
    NcVerdict, OptimalityError, PerturbationCheck, ThroughputVerdict, KAPPA_GRID,
};
use crate::paths::{enumerate_simple_paths, Dependence, PathKind, PathSign, SimplePath};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("static allocation: {0}")]
    Fluid(#[from] FluidError),
    #[error("throughput: {0}")]
    Lp(#[from] LpError),
    #[error("null-controllability: {0}")]
    Optimality(#[from] OptimalityError),
}

/// One simple path with 1-based vertex labels (classes `1..=I`, stations
/// `I+1..=I+J`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRow {
    pub kind: PathKind,
    pub vertices: Vec<usize>,
    /// `(class label, station label, sign)`.
    pub signs: Vec<(usize, usize, i8)>,
    pub m: Vec<f64>,
    pub weight: f64,
    pub sign: PathSign,
    pub dependence: Dependence,
}

impl PathRow {
    fn new(p: &SimplePath, classes: usize) -> Self {
        Self {
            kind: p.kind,
            vertices: p.labels(classes),
            signs: p
                .signed_edges
                .iter()
                .map(|e| (e.edge.0 .0 + 1, classes + e.edge.1 .0 + 1, e.sign))
                .collect(),
            m: p.m.clone(),
            weight: p.weight,
            sign: p.sign_class,
            dependence: p.dependence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tol: f64,
    pub kappa_grid: Vec<f64>,
    pub model: NetworkModel,
    pub solution: FluidSolution,
    pub assumptions: AssumptionReport,
    pub expected_path_count: usize,
    pub paths: Vec<PathRow>,
    pub throughput_lp: ThroughputVerdict,
    /// Absent when the basic activities do not form a tree.
    pub throughput_paths: Option<ThroughputVerdict>,
    pub verdicts_agree: Option<bool>,
    pub perturbation_checks: Vec<PerturbationCheck>,
    pub nc: NcVerdict,
    /// Internal inconsistencies; empty on a healthy run.
    pub defects: Vec<String>,
    pub summary: String,
}

impl AnalysisReport {
    pub fn throughput_optimal(&self) -> bool {
        self.throughput_lp.optimal
    }
}

/// Runs the full pipeline. `tol` decides which path weights count as zero
/// and how much the maximal throughput may exceed the arrival rate before
/// the model is declared sub-optimal; solver internals keep the default.
pub fn analyze(model: &NetworkModel, tol: f64) -> Result<AnalysisReport, AnalysisError> {
    let solution = solve_static_allocation(model)?;
    let assumptions = check_assumptions(model, &solution);
    let mut paths = enumerate_simple_paths(model, &solution).ok();
    if let Some(ps) = paths.as_mut() {
        for p in ps.iter_mut() {
            p.sign_class = PathSign::with_tol(p.weight, tol);
        }
    }

    let mut throughput_lp = throughput_verdict_lp(model, &solution)?;
    if let Some(best) = throughput_lp.max_throughput {
        throughput_lp.optimal = best <= throughput_lp.arrival_total + tol;
    }
    let throughput_paths = paths.as_deref().map(|ps| throughput_verdict_paths(ps, model));
    let verdicts_agree = throughput_paths.as_ref().map(|v| v.optimal == throughput_lp.optimal);

    let mut defects = Vec::new();
    if assumptions.all_hold() && verdicts_agree == Some(false) {
        defects.push("LP and path-based throughput verdicts disagree although the assumptions hold".into());
    }
    let nc = nc_verdict(model, &solution, &assumptions, paths.as_deref().unwrap_or(&[]), &throughput_lp)?;
    let perturbation_checks = nc.per_path_evidence.iter().map(|e| e.check.clone()).collect();
    let paths = paths.unwrap_or_default();
    let summary = summarize(&throughput_lp, &paths, &nc);

    Ok(AnalysisReport {
        tol,
        kappa_grid: KAPPA_GRID.to_vec(),
        model: model.clone(),
        expected_path_count: expected_path_count(model.classes(), model.stations()),
        paths: paths.iter().map(|p| PathRow::new(p, model.classes())).collect(),
        solution,
        assumptions,
        throughput_lp,
        throughput_paths,
        verdicts_agree,
        perturbation_checks,
        nc,
        defects,
        summary,
    })
}

/// Analysis at the default tolerance.
pub fn analyze_default(model: &NetworkModel) -> Result<AnalysisReport, AnalysisError> {
    analyze(model, TOL)
}

fn summarize(tp: &ThroughputVerdict, paths: &[SimplePath], nc: &NcVerdict) -> String {
    let mut parts = vec![if tp.optimal { "throughput optimal" } else { "throughput sub-optimal" }.to_string()];
    if paths.is_empty() {
        parts.push("no simple paths".into());
    }
    let basis = match nc.basis {
        NcBasis::ThroughputSubOptimal => "",
        NcBasis::NoZeroPaths => " (no zero paths)",
        NcBasis::ZeroPathsResolved => " (zero paths resolved)",
        NcBasis::TwoClassesOrStations => " (two classes or stations)",
        NcBasis::UnresolvedZeroPath => " (unresolved zero path)",
        NcBasis::AssumptionsViolated => " (assumptions violated)",
    };
    let status = match nc.status {
        NcStatus::NcPossible => "NC possible",
        NcStatus::NcImpossible => "NC impossible",
        NcStatus::Unknown => "NC unknown",
    };
    parts.push(format!("{status}{basis}"));
    parts.join("; ")
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", items.join(", "))
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.solution;
        writeln!(f, "classes {}  stations {}  tol {:e}", self.model.classes(), self.model.stations(), self.tol)?;
        writeln!(f, "rho* = {:.6}", s.rho_star)?;
        writeln!(f, "xi*:")?;
        for row in &s.xi_star {
            writeln!(f, "  {}", fmt_vec(row))?;
        }
        writeln!(f, "x* = {}", fmt_vec(&s.x_star))?;
        let a = &self.assumptions;
        writeln!(
            f,
            "assumptions: critically loaded {}, unique {}, tree {}",
            a.critically_loaded, a.unique, a.is_tree
        )?;
        for v in &a.violations {
            writeln!(f, "  ! {v}")?;
        }
        writeln!(f, "simple paths ({}, expected {}):", self.paths.len(), self.expected_path_count)?;
        for p in &self.paths {
            writeln!(
                f,
                "  {:<6} {:?}  m = {}  weight {:+.6}  {:?}  {:?}",
                format!("{:?}", p.kind).to_lowercase(),
                p.vertices,
                fmt_vec(&p.m),
                p.weight,
                p.sign,
                p.dependence
            )?;
        }
        if let Some(v) = self.throughput_lp.max_throughput {
            writeln!(f, "max throughput {:.6} vs arrivals {:.6}", v, self.throughput_lp.arrival_total)?;
        }
        if let Some(agree) = self.verdicts_agree {
            writeln!(f, "LP and path verdicts agree: {agree}")?;
        }
        for c in &self.perturbation_checks {
            writeln!(
                f,
                "zero path {:?}: perturbed max {:.9} baseline {:.9} satisfied {} strict {}",
                c.path.labels(self.model.classes()),
                c.perturbed_max,
                c.baseline,
                c.satisfied,
                c.strict
            )?;
        }
        for c in &self.nc.caveats {
            writeln!(f, "  note: {c}")?;
        }
        for d in &self.defects {
            writeln!(f, "  DEFECT: {d}")?;
        }
        write!(f, "verdict: {}", self.summary)
    }
}
