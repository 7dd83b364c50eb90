#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use qnet::model::NetworkModel;
use qnet::policy::Policy;
use qnet::sim::{SystemInstance, SystemState};

pub fn case_a() -> NetworkModel {
    NetworkModel::new(vec![8.0, 4.0], vec![1.0; 3], vec![vec![3.0, 10.0, 1.0], vec![1.0, 4.0, 2.0]]).unwrap()
}

pub fn case_b() -> NetworkModel {
    NetworkModel::new(vec![8.0, 4.0], vec![1.0; 3], vec![vec![3.0, 10.0, 1.0], vec![0.0, 4.0, 2.0]]).unwrap()
}

/// Rates depend on the class only; every closed path is class-dependent.
pub fn class_dependent_2x2() -> NetworkModel {
    NetworkModel::new(vec![1.5, 1.0], vec![1.0, 1.0], vec![vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap()
}

/// Rates depend on the pool only.
pub fn pool_dependent_2x2() -> NetworkModel {
    NetworkModel::new(vec![2.5, 0.5], vec![1.0, 1.0], vec![vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap()
}

/// Additive rates `a_i + b_j` with a unique tree optimum; its only path is a
/// zero path that is neither class- nor pool-dependent.
pub fn additive_2x2() -> NetworkModel {
    NetworkModel::new(vec![5.0, 1.5], vec![1.0, 1.0], vec![vec![2.0, 4.0], vec![3.0, 5.0]]).unwrap()
}

/// Throughput optimal 3x3 model with a zero path that no criterion settles.
pub fn unresolved_3x3() -> NetworkModel {
    NetworkModel::new(
        vec![8.0, 1.0, 1.0],
        vec![1.0; 3],
        vec![vec![4.0, 0.0, 5.0], vec![3.0, 2.0, 4.0], vec![2.0, 1.0, 0.0]],
    )
    .unwrap()
}

/// Throughput of `psi`, written out independently of the library.
pub fn service_rate(model: &NetworkModel, psi: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for i in 0..model.classes() {
        for j in 0..model.stations() {
            total += model.mu()[i][j] * psi[i][j];
        }
    }
    total
}

/// Wraps a policy and re-checks every state it sees and every assignment it
/// returns: nonnegative counts, no service off the activities, in-service
/// counts within head counts and server counts.
pub struct Audited<'a> {
    pub inner: &'a dyn Policy,
    pub checks: AtomicU64,
    pub failures: Mutex<Vec<String>>,
}

impl<'a> Audited<'a> {
    pub fn new(inner: &'a dyn Policy) -> Self {
        Self {
            inner,
            checks: AtomicU64::new(0),
            failures: Mutex::new(Vec::new()),
        }
    }

    pub fn checks(&self) -> u64 {
        self.checks.load(Ordering::Relaxed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.failures.lock().unwrap().clone()
    }

    fn audit(&self, x: &[i64], psi: &[Vec<i64>], sys: &SystemInstance, what: &str) {
        let mut bad = Vec::new();
        for (i, &xi) in x.iter().enumerate() {
            if xi < 0 {
                bad.push(format!("{what}: X_{} = {xi}", i + 1));
            }
            let busy: i64 = psi[i].iter().sum();
            if xi - busy < 0 {
                bad.push(format!("{what}: queue of class {} negative", i + 1));
            }
            for (j, &p) in psi[i].iter().enumerate() {
                if p < 0 || (p > 0 && sys.mu[i][j] <= 0.0) {
                    bad.push(format!("{what}: Psi[{i}][{j}] = {p}"));
                }
            }
        }
        for j in 0..sys.servers.len() {
            let busy: i64 = psi.iter().map(|r| r[j]).sum();
            if sys.servers[j] - busy < 0 {
                bad.push(format!("{what}: idle count of pool {} negative", j + 1));
            }
        }
        self.checks.fetch_add(1, Ordering::Relaxed);
        if !bad.is_empty() {
            self.failures.lock().unwrap().extend(bad);
        }
    }
}

impl Policy for Audited<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn is_heuristic(&self) -> bool {
        self.inner.is_heuristic()
    }

    fn assign(&self, state: &SystemState, sys: &SystemInstance) -> Vec<Vec<i64>> {
        self.audit(&state.x, &state.psi, sys, "state");
        let psi = self.inner.assign(state, sys);
        self.audit(&state.x, &psi, sys, "assignment");
        psi
    }
}

/// Erlang-C from the textbook closed form
/// `C = (a^N / N!) (N / (N - a)) / (sum_{k<N} a^k / k! + (a^N / N!) N / (N - a))`,
/// with terms accumulated in log space.
pub fn erlang_c_closed_form(servers: u32, load: f64) -> f64 {
    let n = servers as f64;
    if load >= n {
        return 1.0;
    }
    let log_term = |k: u32| k as f64 * load.ln() - (1..=k).map(|v| (v as f64).ln()).sum::<f64>();
    let top = (log_term(servers) + (n / (n - load)).ln()).exp();
    let bottom: f64 = (0..servers).map(|k| log_term(k).exp()).sum::<f64>() + top;
    top / bottom
}
