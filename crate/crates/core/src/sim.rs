//! Discrete-event simulation of the `n`-th system in the many-server scaling.
//!
//! Arrivals are Poisson with rate `n * lambda_i`; each class-`i` customer in
//! service at pool `j` completes at rate `mu_ij`, so activity `(i, j)` emits
//! completions at the aggregate rate `mu_ij * Psi_ij`. Between events every
//! rate is constant, so the next event is drawn from the total rate and the
//! policy is consulted after each event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::SimError;
use crate::fluid::FluidSolution;
use crate::model::NetworkModel;
use crate::policy::Policy;
use crate::stats::{mean, quantile};

/// Parameters of the `n`-th system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemInstance {
    pub n: u64,
    /// `n * lambda_i`.
    pub lambda_n: Vec<f64>,
    /// `round(n * nu_j)`, ties up.
    pub servers: Vec<i64>,
    pub mu: Vec<Vec<f64>>,
    /// `round(n * x*_i)`.
    pub x0: Vec<i64>,
    /// `round(n * psi*_ij)`, clipped to the initial head counts and servers.
    pub psi0: Vec<Vec<i64>>,
    pub x_star: Vec<f64>,
    pub psi_star: Vec<Vec<f64>>,
    pub nu: Vec<f64>,
}

impl SystemInstance {
    pub fn classes(&self) -> usize {
        self.lambda_n.len()
    }

    pub fn stations(&self) -> usize {
        self.servers.len()
    }

    pub fn is_activity(&self, i: usize, j: usize) -> bool {
        self.mu[i][j] > 0.0
    }

    pub fn total_servers(&self) -> i64 {
        self.servers.iter().sum()
    }

    /// Checks the constraints every assignment must satisfy: nonnegative,
    /// zero off the activities, within the head counts and the server counts.
    pub fn check_assignment(&self, x: &[i64], psi: &[Vec<i64>]) -> Result<(), String> {
        if psi.len() != self.classes() || psi.iter().any(|r| r.len() != self.stations()) {
            return Err("assignment has the wrong shape".into());
        }
        for (i, row) in psi.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < 0 {
                    return Err(format!("Psi[{}][{}] = {v} is negative", i + 1, j + 1));
                }
                if v > 0 && !self.is_activity(i, j) {
                    return Err(format!("Psi[{}][{}] = {v} on a non-activity", i + 1, j + 1));
                }
            }
            let busy: i64 = row.iter().sum();
            if busy > x[i] {
                return Err(format!("class {} has {busy} in service but {} present", i + 1, x[i]));
            }
        }
        for j in 0..self.stations() {
            let busy: i64 = psi.iter().map(|r| r[j]).sum();
            if busy > self.servers[j] {
                return Err(format!(
                    "pool {} has {busy} busy servers out of {}",
                    j + 1,
                    self.servers[j]
                ));
            }
        }
        Ok(())
    }
}

fn round_half_up(v: f64) -> i64 {
    // Absorbs representation error so that e.g. 0.95 * 10 rounds to 10.
    (v + 0.5 + 1e-9).floor() as i64
}

/// Builds the `n`-th system and asserts the second-order scaling bounds
///
/// ```text
/// |lambda^n / n - lambda| + |mu^n - mu| + |X^n(0) / n - x*| <= c / sqrt(n),  c = I + J + 1
/// |N^n / n - nu|                                              <= 1 / (2 sqrt(n))
/// ```
///
/// in the max norm.
pub fn build_system(model: &NetworkModel, sol: &FluidSolution, n: u64) -> Result<SystemInstance, SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameters("scale n must be at least 1".into()));
    }
    let nf = n as f64;
    let (ni, nj) = (model.classes(), model.stations());
    let lambda_n: Vec<f64> = model.lambda().iter().map(|l| nf * l).collect();
    let servers: Vec<i64> = model.nu().iter().map(|v| round_half_up(nf * v)).collect();
    let x0: Vec<i64> = sol.x_star.iter().map(|x| round_half_up(nf * x)).collect();

    let max_dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    let lam_dev = max_dev(&lambda_n.iter().map(|l| l / nf).collect::<Vec<_>>(), model.lambda());
    let x_dev = max_dev(&x0.iter().map(|&x| x as f64 / nf).collect::<Vec<_>>(), &sol.x_star);
    let n_dev = max_dev(&servers.iter().map(|&s| s as f64 / nf).collect::<Vec<_>>(), model.nu());
    let c = (ni + nj + 1) as f64;
    let root = nf.sqrt();
    if lam_dev + x_dev > c / root + 1e-12 {
        return Err(SimError::ScalingViolation {
            n,
            detail: format!("rate/initial deviation {} exceeds {}", lam_dev + x_dev, c / root),
        });
    }
    if n_dev > 0.5 / root + 1e-12 {
        return Err(SimError::ScalingViolation {
            n,
            detail: format!("server deviation {n_dev} exceeds {}", 0.5 / root),
        });
    }

    let mut psi0: Vec<Vec<i64>> = (0..ni)
        .map(|i| {
            (0..nj)
                .map(|j| if model.mu()[i][j] > 0.0 { round_half_up(nf * sol.psi_star[i][j]) } else { 0 })
                .collect()
        })
        .collect();
    clip_to(&mut psi0, &x0, &servers);

    Ok(SystemInstance {
        n,
        lambda_n,
        servers,
        mu: model.mu().to_vec(),
        x0,
        psi0,
        x_star: sol.x_star.clone(),
        psi_star: sol.psi_star.clone(),
        nu: model.nu().to_vec(),
    })
}

/// Lowers the largest entries until row sums fit `x` and column sums fit
/// `servers`.
fn clip_to(psi: &mut [Vec<i64>], x: &[i64], servers: &[i64]) {
    for (i, row) in psi.iter_mut().enumerate() {
        while row.iter().sum::<i64>() > x[i] {
            let j = (0..row.len()).max_by_key(|&j| (row[j], std::cmp::Reverse(j))).unwrap();
            row[j] -= 1;
        }
    }
    for j in 0..servers.len() {
        while psi.iter().map(|r| r[j]).sum::<i64>() > servers[j] {
            let i = (0..psi.len()).max_by_key(|&i| (psi[i][j], std::cmp::Reverse(i))).unwrap();
            psi[i][j] -= 1;
        }
    }
}

/// Head counts and the current assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemState {
    pub t: f64,
    /// Class-`i` customers in the system.
    pub x: Vec<i64>,
    /// Class-`i` customers in service at pool `j`.
    pub psi: Vec<Vec<i64>>,
}

impl SystemState {
    /// Waiting class-`i` customers.
    pub fn queue(&self, i: usize) -> i64 {
        self.x[i] - self.psi[i].iter().sum::<i64>()
    }

    /// Idle servers at pool `j`.
    pub fn idle(&self, j: usize, sys: &SystemInstance) -> i64 {
        sys.servers[j] - self.psi.iter().map(|r| r[j]).sum::<i64>()
    }

    pub fn total_customers(&self) -> i64 {
        self.x.iter().sum()
    }

    /// `e . X >= e . N`: every server could be busy and nobody need wait
    /// only if the counts match exactly.
    pub fn at_or_above_capacity(&self, sys: &SystemInstance) -> bool {
        self.total_customers() >= sys.total_servers()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    /// Occupancy is accumulated over `[warmup, horizon]`.
    pub warmup: f64,
    /// Trajectory sampling step; `None` records no samples.
    pub sample_interval: Option<f64>,
}

impl SimConfig {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            warmup: 0.0,
            sample_interval: Some(horizon / 100.0),
        }
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_sampling(mut self, step: Option<f64>) -> Self {
        self.sample_interval = step;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<i64>,
    pub psi: Vec<Vec<i64>>,
    pub occupancy_running: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub n: u64,
    pub rep: u64,
    pub seed: u64,
    pub horizon: f64,
    pub warmup: f64,
    /// Time in `[warmup, horizon]` with `e . X >= e . N`.
    pub queue_occupancy: f64,
    pub samples: Vec<Sample>,
    pub arrivals: Vec<u64>,
    pub completions: Vec<Vec<u64>>,
    pub events: u64,
    /// Number of states (initial plus one per event) that passed the
    /// assignment and nonnegativity checks.
    pub states_checked: u64,
    pub initial_x: Vec<i64>,
    pub final_x: Vec<i64>,
}

impl SimResult {
    /// `X_i(T) = X_i(0) + A_i(T) - sum_j S_ij(T)` for every class.
    pub fn counting_identity_holds(&self) -> bool {
        (0..self.final_x.len()).all(|i| {
            let done: u64 = self.completions[i].iter().sum();
            self.final_x[i] == self.initial_x[i] + self.arrivals[i] as i64 - done as i64
        })
    }
}

fn apply_policy(
    policy: &dyn Policy,
    sys: &SystemInstance,
    state: &mut SystemState,
    event: u64,
) -> Result<(), SimError> {
    let psi = policy.assign(state, sys);
    sys.check_assignment(&state.x, &psi)
        .map_err(|detail| SimError::PolicyViolation {
            policy: policy.name().to_string(),
            event,
            detail,
        })?;
    state.psi = psi;
    Ok(())
}

/// Runs one replication. Deterministic in `seed`.
pub fn simulate(
    sys: &SystemInstance,
    policy: &dyn Policy,
    cfg: &SimConfig,
    seed: u64,
) -> Result<SimResult, SimError> {
    simulate_replication(sys, policy, cfg, seed, 0)
}

fn simulate_replication(
    sys: &SystemInstance,
    policy: &dyn Policy,
    cfg: &SimConfig,
    seed: u64,
    rep: u64,
) -> Result<SimResult, SimError> {
    if cfg.horizon.is_nan() || cfg.horizon <= 0.0 || cfg.warmup < 0.0 || cfg.warmup > cfg.horizon {
        return Err(SimError::InvalidParameters(format!(
            "need 0 <= warmup <= horizon and horizon > 0, got warmup {} horizon {}",
            cfg.warmup, cfg.horizon
        )));
    }
    if let Some(step) = cfg.sample_interval {
        if step.is_nan() || step <= 0.0 {
            return Err(SimError::InvalidParameters("sample interval must be positive".into()));
        }
    }
    let (ni, nj) = (sys.classes(), sys.stations());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SystemState {
        t: 0.0,
        x: sys.x0.clone(),
        psi: sys.psi0.clone(),
    };
    sys.check_assignment(&state.x, &state.psi)
        .map_err(|detail| SimError::PolicyViolation {
            policy: "initial assignment".into(),
            event: 0,
            detail,
        })?;
    apply_policy(policy, sys, &mut state, 0)?;

    let mut arrivals = vec![0u64; ni];
    let mut completions = vec![vec![0u64; nj]; ni];
    let mut events = 0u64;
    let mut states_checked = 1u64;
    let mut occupancy = 0.0;
    let mut samples = Vec::new();
    let mut next_sample = cfg.sample_interval.map(|_| 0.0);
    let mut rates = Vec::with_capacity(ni + ni * nj);

    loop {
        rates.clear();
        rates.extend_from_slice(&sys.lambda_n);
        for i in 0..ni {
            for j in 0..nj {
                rates.push(sys.mu[i][j] * state.psi[i][j] as f64);
            }
        }
        let total: f64 = rates.iter().sum();
        let t_next = if total > 0.0 {
            state.t + Exp::new(total).expect("positive rate").sample(&mut rng)
        } else {
            f64::INFINITY
        };
        let end = t_next.min(cfg.horizon);
        let above = state.at_or_above_capacity(sys);

        while let Some(ts) = next_sample {
            if ts > end || (ts == end && end < cfg.horizon) {
                break;
            }
            let running = occupancy + if above { (ts - state.t.max(cfg.warmup)).max(0.0) } else { 0.0 };
            samples.push(Sample {
                t: ts,
                x: state.x.clone(),
                psi: state.psi.clone(),
                occupancy_running: running,
            });
            let step = cfg.sample_interval.expect("sampling enabled");
            let k = (ts / step).round() + 1.0;
            // trim accumulated representation error from the grid times
            let t = (k * step * 1e12).round() / 1e12;
            next_sample = Some(t).filter(|&t| t <= cfg.horizon + 1e-12 * cfg.horizon);
        }
        if above {
            occupancy += (end - state.t.max(cfg.warmup)).max(0.0);
        }
        if t_next >= cfg.horizon {
            state.t = cfg.horizon;
            break;
        }
        state.t = t_next;

        // Pick the event in proportion to its rate.
        let mut u = rng.random::<f64>() * total;
        let mut k = rates.len() - 1;
        for (idx, &r) in rates.iter().enumerate() {
            if u < r {
                k = idx;
                break;
            }
            u -= r;
        }
        // Guard against landing on a zero-rate slot through rounding.
        while rates[k] == 0.0 {
            k -= 1;
        }
        if k < ni {
            state.x[k] += 1;
            arrivals[k] += 1;
        } else {
            let (i, j) = ((k - ni) / nj, (k - ni) % nj);
            state.x[i] -= 1;
            state.psi[i][j] -= 1;
            completions[i][j] += 1;
        }
        events += 1;
        apply_policy(policy, sys, &mut state, events)?;
        states_checked += 1;
    }

    Ok(SimResult {
        n: sys.n,
        rep,
        seed,
        horizon: cfg.horizon,
        warmup: cfg.warmup,
        queue_occupancy: occupancy,
        samples,
        arrivals,
        completions,
        events,
        states_checked,
        initial_x: sys.x0.clone(),
        final_x: state.x,
    })
}

/// Diffusion-scaled view of one sample:
/// `X^ = (X - n x*) / sqrt(n)`, `Psi^ = (Psi - n psi*) / sqrt(n)`,
/// `N^ = (N - n nu) / sqrt(n)`, and the queue and idleness
/// `Y^ = X^ - sum_j Psi^`, `Z^ = N^ - sum_i Psi^`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledSample {
    pub t: f64,
    pub x_hat: Vec<f64>,
    pub psi_hat: Vec<Vec<f64>>,
    pub n_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub z_hat: Vec<f64>,
}

pub fn scale_result(res: &SimResult, sys: &SystemInstance) -> Vec<ScaledSample> {
    let nf = sys.n as f64;
    let root = nf.sqrt();
    let n_hat: Vec<f64> = sys
        .servers
        .iter()
        .zip(&sys.nu)
        .map(|(&s, v)| (s as f64 - nf * v) / root)
        .collect();
    res.samples
        .iter()
        .map(|s| {
            let x_hat: Vec<f64> = s
                .x
                .iter()
                .zip(&sys.x_star)
                .map(|(&x, xs)| (x as f64 - nf * xs) / root)
                .collect();
            let psi_hat: Vec<Vec<f64>> = s
                .psi
                .iter()
                .zip(&sys.psi_star)
                .map(|(row, srow)| {
                    row.iter()
                        .zip(srow)
                        .map(|(&p, ps)| (p as f64 - nf * ps) / root)
                        .collect()
                })
                .collect();
            let y_hat = x_hat
                .iter()
                .zip(&psi_hat)
                .map(|(x, row)| x - row.iter().sum::<f64>())
                .collect();
            let z_hat = n_hat
                .iter()
                .enumerate()
                .map(|(j, nh)| nh - psi_hat.iter().map(|r| r[j]).sum::<f64>())
                .collect();
            ScaledSample {
                t: s.t,
                x_hat,
                psi_hat,
                n_hat: n_hat.clone(),
                y_hat,
                z_hat,
            }
        })
        .collect()
}

/// Seed of replication `rep` at scale `n`.
pub fn derive_seed(seed: u64, n: u64, rep: u64) -> u64 {
    // splitmix64 finalizer over the (n, rep) pair
    let mut z = n
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(rep)
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    seed ^ (z ^ (z >> 31))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub n: u64,
    pub reps: usize,
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub occupancies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub policy: String,
    pub heuristic_policy: bool,
    pub horizon: f64,
    pub seed: u64,
    pub rows: Vec<ExperimentRow>,
    #[serde(skip)]
    pub results: Vec<SimResult>,
}

impl Experiment {
    pub fn medians(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.median).collect()
    }
}

/// Runs `reps` replications at every scale in `n_list` (ascending). Results
/// are ordered by `(n, rep)` whatever the execution order.
pub fn run_nc_experiment(
    model: &NetworkModel,
    sol: &FluidSolution,
    policy: &dyn Policy,
    n_list: &[u64],
    cfg: &SimConfig,
    reps: usize,
    seed: u64,
) -> Result<Experiment, SimError> {
    if reps == 0 {
        return Err(SimError::InvalidParameters("need at least one replication".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::InvalidParameters("n list must be strictly ascending".into()));
    }
    let systems = n_list
        .iter()
        .map(|&n| build_system(model, sol, n))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, u64)> = (0..systems.len())
        .flat_map(|s| (0..reps as u64).map(move |r| (s, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(s, rep)| {
            let sys = &systems[s];
            simulate_replication(sys, policy, cfg, derive_seed(seed, sys.n, rep), rep)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rows = results
        .chunks(reps)
        .zip(n_list)
        .map(|(chunk, &n)| {
            let occupancies: Vec<f64> = chunk.iter().map(|r| r.queue_occupancy).collect();
            ExperimentRow {
                n,
                reps,
                mean: mean(&occupancies),
                median: quantile(&occupancies, 0.5),
                q10: quantile(&occupancies, 0.1),
                q90: quantile(&occupancies, 0.9),
                occupancies,
            }
        })
        .collect();
    Ok(Experiment {
        policy: policy.name().to_string(),
        heuristic_policy: policy.is_heuristic(),
        horizon: cfg.horizon,
        seed,
        rows,
        results,
    })
}

/// Header and rows of the trajectory CSV:
/// `n, rep, t, X_1..X_I, Psi_1_1..Psi_I_J (row-major), occupancy_running`.
pub fn write_trajectories_csv<W: std::io::Write>(
    out: W,
    results: &[SimResult],
    classes: usize,
    stations: usize,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string(), "rep".into(), "t".into()];
    header.extend((1..=classes).map(|i| format!("X_{i}")));
    for i in 1..=classes {
        header.extend((1..=stations).map(|j| format!("Psi_{i}_{j}")));
    }
    header.push("occupancy_running".into());
    w.write_record(&header)?;
    for r in results {
        for s in &r.samples {
            let mut rec = vec![r.n.to_string(), r.rep.to_string(), s.t.to_string()];
            rec.extend(s.x.iter().map(|v| v.to_string()));
            rec.extend(s.psi.iter().flatten().map(|v| v.to_string()));
            rec.push(s.occupancy_running.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
