//! Reduced problems `min_y f(A y + p)` and the multistart simplex solver.

pub mod nelder_mead;

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Objective;
use crate::rng::RngState;
use crate::stats::{wilson95, Interval};

/// Default accuracy `λ` used when measuring solver success.
pub const DEFAULT_LAMBDA: f64 = 1e-6;

/// `y ↦ f(A y + p)`, counting every call to `f`.
#[derive(Debug)]
pub struct ReducedProblem {
    objective: Objective,
    a: DMatrix<f64>,
    p: DVector<f64>,
    evals: AtomicU64,
}

impl ReducedProblem {
    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn anchor(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Full-space evaluations so far.
    pub fn evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn embed(&self, y: &[f64]) -> DVector<f64> {
        let mut x = self.p.clone();
        for (j, yj) in y.iter().enumerate() {
            x.axpy(*yj, &self.a.column(j), 1.0);
        }
        x
    }

    /// `f(A y + p)`, or `+∞` without evaluating `f` when `A y + p ∉ X`.
    pub fn evaluate(&self, y: &[f64]) -> f64 {
        let x = self.embed(y);
        if !self.objective.feasible().contains(x.as_slice()) {
            return f64::INFINITY;
        }
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.objective.evaluate(x.as_slice())
    }
}

pub fn make_reduced(objective: &Objective, a: DMatrix<f64>, p: DVector<f64>) -> Result<ReducedProblem> {
    if a.nrows() != objective.dim() || p.len() != objective.dim() {
        return Err(Error::dim(format!(
            "A is {}x{}, p has length {}, objective lives in R^{}",
            a.nrows(),
            a.ncols(),
            p.len(),
            objective.dim()
        )));
    }
    if a.ncols() == 0 {
        return Err(Error::dim("A has no columns"));
    }
    if !objective.feasible().contains(p.as_slice()) {
        return Err(Error::Precondition("anchor p is not feasible".into()));
    }
    Ok(ReducedProblem {
        objective: objective.clone(),
        a,
        p,
        evals: AtomicU64::new(0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// One descent from `y = 0`.
    Local,
    /// `min(100, 2d)` starts.
    CheapMultistart,
    /// `min(200, 10d)` starts.
    ExpensiveMultistart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub kind: SolverKind,
    /// Random starts are uniform in `[−w, w]^d`.
    pub start_half_width: f64,
    /// Per-start iteration cap is `iter_factor · d`.
    pub iter_factor: usize,
    pub tolerance: f64,
    pub initial_edge: f64,
    /// Evaluation budget per solve, split evenly over the starts.
    pub max_evals: Option<u64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self::new(SolverKind::ExpensiveMultistart)
    }
}

impl SolverSpec {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind,
            start_half_width: 1.0,
            iter_factor: 500,
            tolerance: 1e-8,
            initial_edge: 0.1,
            max_evals: None,
        }
    }

    pub fn local() -> Self {
        Self::new(SolverKind::Local)
    }

    pub fn cheap() -> Self {
        Self::new(SolverKind::CheapMultistart)
    }

    pub fn expensive() -> Self {
        Self::new(SolverKind::ExpensiveMultistart)
    }

    pub fn n_starts(&self, d: usize) -> usize {
        match self.kind {
            SolverKind::Local => 1,
            SolverKind::CheapMultistart => (2 * d).clamp(1, 100),
            SolverKind::ExpensiveMultistart => (10 * d).clamp(1, 200),
        }
    }

    pub fn is_global(&self) -> bool {
        self.kind != SolverKind::Local
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub y_best: Vec<f64>,
    pub f_best: f64,
    pub x_best: Vec<f64>,
    pub evals: u64,
    pub starts_used: usize,
    /// `f(p)`, the value at `y = 0`.
    pub f_anchor: f64,
    /// Index of the start that produced `y_best`; 0 is `y = 0`.
    pub best_start: usize,
    pub truncated: bool,
}

/// Start `i` of a multistart run; `i = 0` is the origin.
pub fn start_point(i: usize, d: usize, half_width: f64, rng: &RngState) -> Vec<f64> {
    if i == 0 {
        return vec![0.0; d];
    }
    let mut gen = rng.substream(i as u64).generator();
    (0..d).map(|_| gen.random_range(-half_width..=half_width)).collect()
}

/// Runs the configured number of descents and keeps the best, ties broken
/// by start index. Starts run in parallel; the result does not depend on
/// scheduling.
pub fn solve(rp: &ReducedProblem, spec: &SolverSpec, rng: &RngState) -> SolverOutcome {
    let d = rp.dim();
    let n = spec.n_starts(d);
    let before = rp.evals();
    let per_start = spec.max_evals.map(|m| (m / n as u64).max(1));
    let opts = nelder_mead::Options {
        initial_edge: spec.initial_edge,
        f_tol: spec.tolerance,
        x_tol: spec.tolerance,
        max_iter: spec.iter_factor * d,
        max_evals: per_start,
    };
    let runs: Vec<nelder_mead::Outcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let y0 = start_point(i, d, spec.start_half_width, rng);
            nelder_mead::minimize(|y: &[f64]| rp.evaluate(y), &y0, &opts)
        })
        .collect();
    let (best_start, best) = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.f.total_cmp(&b.f).then(i.cmp(j)))
        .expect("at least one start");
    SolverOutcome {
        y_best: best.x.clone(),
        f_best: best.f,
        x_best: rp.embed(&best.x).as_slice().to_vec(),
        evals: rp.evals() - before,
        starts_used: n,
        f_anchor: runs[0].f_start,
        best_start,
        truncated: runs.iter().any(|r| r.truncated),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub rho_hat: f64,
    pub interval: Interval,
    pub successes: u64,
    pub trials: u64,
}

/// Fraction of trials in which the solver gets within `lambda` of the known
/// reduced minimum. `make` builds trial `t`'s instance and its minimum.
pub fn measure_solver_success<F>(
    make: F,
    spec: &SolverSpec,
    trials: u64,
    lambda: f64,
    rng: &RngState,
) -> Result<SuccessEstimate>
where
    F: Fn(&RngState) -> Result<(ReducedProblem, f64)> + Sync,
{
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial = rng.substream(t);
            let (rp, f_min) = make(&trial.labeled("instance"))?;
            let out = solve(&rp, spec, &trial.labeled("solver"));
            Ok(u64::from(out.f_best <= f_min + lambda))
        })
        .collect::<Result<Vec<u64>>>()?;
    let successes: u64 = hits.iter().sum();
    Ok(SuccessEstimate {
        rho_hat: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        interval: wilson95(successes, trials),
        successes,
        trials,
    })
}
