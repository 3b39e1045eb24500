//! The X-REGO driver: repeated random embeddings with anchor updates,
//! an optional increasing-dimension schedule, and the stopping rules used
//! to estimate the effective dimension.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::gen_gaussian;
use crate::problems::Objective;
use crate::rng::RngState;
use crate::subsolve::{make_reduced, solve, SolverSpec};

/// Default tolerance of both stopping rules.
pub const DEFAULT_GAMMA: f64 = 1e-5;

/// Default success threshold against a known `f*`.
pub const DEFAULT_EPS: f64 = 1e-3;

/// How the anchor `p^k` is chosen after embedding `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PStrategy {
    /// `p^k = p̄`. Without an explicit anchor, `p̄` is drawn once per run,
    /// uniformly in `[−1, 1]^D`.
    Fixed {
        #[serde(default)]
        anchor: Option<Vec<f64>>,
    },
    /// `p^k = x_opt^k`, from a uniform `p⁰`.
    AdaptiveBest,
    /// As `Fixed` until stagnation, then a fresh uniform anchor every time.
    FixedThenResample {
        #[serde(default)]
        anchor: Option<Vec<f64>>,
    },
    /// As `AdaptiveBest` until stagnation; afterwards keep `x^k` when it moved
    /// the value by more than `gamma_res`, otherwise resample uniformly.
    AdaptiveThenResample {
        #[serde(default = "default_gamma")]
        gamma_res: f64,
    },
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

impl PStrategy {
    fn fixed_anchor(&self) -> Option<&Vec<f64>> {
        match self {
            PStrategy::Fixed { anchor } | PStrategy::FixedThenResample { anchor } => anchor.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DimensionSchedule {
    Constant { d: usize },
    /// `d^1 = d_lb`, `d^{k+1} = d^k + 1`, capped at `D − 1`.
    Increasing { d_lb: usize },
}

impl DimensionSchedule {
    fn validate(&self, dim: usize) -> Result<()> {
        let d = match self {
            DimensionSchedule::Constant { d } => *d,
            DimensionSchedule::Increasing { d_lb } => *d_lb,
        };
        if d == 0 || d > dim {
            return Err(Error::dim(format!("subspace dimension {d} outside 1..={dim}")));
        }
        Ok(())
    }

    /// `d^k` for embedding `k ≥ 1` in ambient dimension `dim`.
    pub fn dim_at(&self, k: usize, dim: usize) -> usize {
        match *self {
            DimensionSchedule::Constant { d } => d,
            DimensionSchedule::Increasing { d_lb } => {
                let cap = dim.saturating_sub(1).max(d_lb).max(1);
                (d_lb + k - 1).min(cap)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopConfig {
    pub gamma: f64,
    /// `None`: stop at stagnation. `Some(n)`: keep going after stagnation
    /// until the best value improved by at most `gamma` over `n` embeddings.
    pub n_stop: Option<usize>,
    /// Defaults to `D`.
    pub max_embeddings: Option<usize>,
    /// Stop once the cumulative evaluation count reaches this.
    pub max_evals: Option<u64>,
    /// Success threshold against a known `f*`.
    pub eps: f64,
    /// Stop as soon as `f_opt ≤ f* + eps`. Off by default.
    pub stop_on_target: bool,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            n_stop: None,
            max_embeddings: None,
            max_evals: None,
            eps: DEFAULT_EPS,
            stop_on_target: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub k: usize,
    pub d: usize,
    pub p: Vec<f64>,
    /// `f(x^k)`.
    pub f_x: f64,
    /// `f(x_opt^k)`.
    pub f_opt: f64,
    pub evals: u64,
    pub cumulative_evals: u64,
    pub stagnation: bool,
    pub resampled: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Stagnation,
    LocalStop,
    MaxEmbeddings,
    MaxEvals,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XregoResult {
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
    pub d_e_est: Option<usize>,
    pub k_f: Option<usize>,
    pub embeddings: usize,
    pub total_evals: u64,
    pub trace: Vec<RunRecord>,
    pub success: Option<bool>,
    pub stop_reason: StopReason,
}

/// Smallest `k ≥ 2` (1-based) with `|f(x^k) − f(x^{k−1})| ≤ γ`.
pub fn check_stagnation(values: &[f64], gamma: f64) -> Option<usize> {
    values
        .windows(2)
        .position(|w| (w[1] - w[0]).abs() <= gamma)
        .map(|i| i + 2)
}

/// `f(x_opt^{k−n+1}) − f(x_opt^k) ≤ γ` over the last `n_stop` best values.
pub fn check_local_stop(bests: &[f64], n_stop: usize, gamma: f64) -> bool {
    if n_stop == 0 || bests.len() < n_stop {
        return false;
    }
    let last = bests.len() - 1;
    bests[last + 1 - n_stop] - bests[last] <= gamma
}

/// What `next_p` needs to know about the run so far.
#[derive(Debug, Clone)]
pub struct AnchorState<'a> {
    pub k: usize,
    pub k_f: Option<usize>,
    pub x_opt: &'a [f64],
    pub x_k: &'a [f64],
    pub f_x_k: f64,
    pub p_prev: &'a [f64],
    pub f_p_prev: f64,
    pub fixed: &'a [f64],
    pub resample_rng: RngState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorChoice {
    pub p: Vec<f64>,
    pub resampled: bool,
    pub clamped: bool,
}

fn uniform_box(dim: usize, rng: &RngState) -> Vec<f64> {
    let mut gen = rng.generator();
    (0..dim).map(|_| gen.random_range(-1.0..=1.0)).collect()
}

/// The anchor `p^k` for the next embedding.
pub fn next_p(strategy: &PStrategy, state: &AnchorState<'_>) -> AnchorChoice {
    let after_kf = state.k_f.is_some_and(|kf| state.k >= kf);
    let resample = || AnchorChoice {
        p: uniform_box(state.p_prev.len(), &state.resample_rng),
        resampled: true,
        clamped: false,
    };
    let keep = |p: &[f64]| AnchorChoice {
        p: p.to_vec(),
        resampled: false,
        clamped: false,
    };
    match strategy {
        PStrategy::Fixed { .. } => keep(state.fixed),
        PStrategy::AdaptiveBest => keep(state.x_opt),
        PStrategy::FixedThenResample { .. } => {
            if after_kf {
                resample()
            } else {
                keep(state.fixed)
            }
        }
        PStrategy::AdaptiveThenResample { gamma_res } => {
            if !after_kf {
                keep(state.x_opt)
            } else if (state.f_x_k - state.f_p_prev).abs() > *gamma_res {
                keep(state.x_k)
            } else {
                resample()
            }
        }
    }
}

/// Runs X-REGO on `objective`. Reproducible given `rng`.
pub fn run_xrego(
    objective: &Objective,
    strategy: &PStrategy,
    schedule: &DimensionSchedule,
    spec: &SolverSpec,
    stop: &StopConfig,
    rng: &RngState,
) -> Result<XregoResult> {
    let dim = objective.dim();
    schedule.validate(dim)?;
    let feasible = objective.feasible();

    let fixed: Vec<f64> = match strategy.fixed_anchor() {
        Some(a) if a.len() != dim => {
            return Err(Error::dim(format!("fixed anchor has length {}, expected {dim}", a.len())))
        }
        Some(a) => a.clone(),
        // Also p⁰ for the adaptive strategies: the origin can sit unfairly
        // close to the minimizer of a generated problem.
        None => uniform_box(dim, &rng.labeled("anchor")),
    };
    let mut p = fixed.clone();
    if feasible.clamp(&mut p) {
        log::warn!("initial anchor clamped into the feasible set");
    }

    let max_embeddings = stop.max_embeddings.unwrap_or(dim).max(1);
    let target = objective.meta.f_star;

    let mut x_opt = p.clone();
    let mut f_opt = f64::INFINITY;
    let mut trace: Vec<RunRecord> = Vec::new();
    let mut k_f: Option<usize> = None;
    let mut d_e_est: Option<usize> = None;
    let mut total_evals = 0u64;
    let mut resampled = false;

    let stop_reason = loop {
        let k = trace.len() + 1;
        let d = match (schedule, d_e_est) {
            (DimensionSchedule::Increasing { .. }, Some(est)) => est.max(1),
            _ => schedule.dim_at(k, dim),
        };
        let a = gen_gaussian(&rng.labeled("matrix").substream(k as u64), dim, d)?.into_inner();
        let rp = make_reduced(objective, a, DVector::from_column_slice(&p))?;
        let out = solve(&rp, spec, &rng.labeled("solver").substream(k as u64));
        let f_x = if out.f_best.is_nan() { f64::INFINITY } else { out.f_best };
        total_evals += out.evals;
        if f_x <= f_opt {
            f_opt = f_x;
            x_opt.clone_from(&out.x_best);
        }

        let values: Vec<f64> = trace.iter().map(|r| r.f_x).chain([f_x]).collect();
        let stagnated_now = k_f.is_none() && check_stagnation(&values, stop.gamma) == Some(k);
        if stagnated_now {
            k_f = Some(k);
            d_e_est = match schedule {
                DimensionSchedule::Increasing { .. } => Some(trace[k - 2].d),
                DimensionSchedule::Constant { .. } => None,
            };
        }
        trace.push(RunRecord {
            k,
            d,
            p: p.clone(),
            f_x,
            f_opt,
            evals: out.evals,
            cumulative_evals: total_evals,
            stagnation: stagnated_now,
            resampled,
            truncated: out.truncated,
        });

        if stop.stop_on_target && target.is_some_and(|fs| f_opt <= fs + stop.eps) {
            break StopReason::Target;
        }
        if let Some(kf) = k_f {
            match stop.n_stop {
                None => break StopReason::Stagnation,
                Some(n) => {
                    let bests: Vec<f64> = trace.iter().map(|r| r.f_opt).collect();
                    if k > kf && check_local_stop(&bests, n, stop.gamma) {
                        break StopReason::LocalStop;
                    }
                }
            }
        }
        if k >= max_embeddings {
            break StopReason::MaxEmbeddings;
        }
        if stop.max_evals.is_some_and(|m| total_evals >= m) {
            break StopReason::MaxEvals;
        }

        let choice = next_p(
            strategy,
            &AnchorState {
                k,
                k_f,
                x_opt: &x_opt,
                x_k: &out.x_best,
                f_x_k: f_x,
                p_prev: &p,
                f_p_prev: out.f_anchor,
                fixed: &fixed,
                resample_rng: rng.labeled("resample").substream(k as u64),
            },
        );
        let mut next = choice.p;
        if feasible.clamp(&mut next) {
            log::debug!("anchor clamped into the feasible set at k = {k}");
        }
        resampled = choice.resampled;
        p = next;
    };

    Ok(XregoResult {
        success: target.map(|fs| f_opt <= fs + stop.eps),
        x_opt,
        f_opt,
        d_e_est,
        k_f,
        embeddings: trace.len(),
        total_evals,
        trace,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::FeasibleSet;

    #[test]
    fn stagnation_examples() {
        assert_eq!(check_stagnation(&[5.0, 5.0], 1e-5), Some(2));
        assert_eq!(check_stagnation(&[5.0, 4.0, 4.0000099], 1e-5), Some(3));
        assert_eq!(check_stagnation(&[5.0, 4.0, 3.0, 2.0], 1e-5), None);
        assert_eq!(check_stagnation(&[5.0], 1e-5), None);
        assert_eq!(check_stagnation(&[1.0, 1.0 + 2e-5], 1e-5), None);
    }

    #[test]
    fn local_stop_examples() {
        assert!(check_local_stop(&[3.0, 3.0, 3.0], 3, 1e-5));
        assert!(!check_local_stop(&[3.0, 3.0, 2.0], 3, 1e-5));
        assert!(check_local_stop(&[9.0, 2.000010, 2.000004, 2.000001], 3, 1e-5));
        assert!(!check_local_stop(&[3.0, 3.0], 3, 1e-5));
    }

    #[test]
    fn schedule_dims() {
        let inc = DimensionSchedule::Increasing { d_lb: 1 };
        assert_eq!(inc.dim_at(1, 10), 1);
        assert_eq!(inc.dim_at(4, 10), 4);
        assert_eq!(inc.dim_at(40, 10), 9);
        assert_eq!(DimensionSchedule::Constant { d: 3 }.dim_at(7, 10), 3);
        assert!(DimensionSchedule::Constant { d: 11 }.validate(10).is_err());
    }

    fn state<'a>(k: usize, k_f: Option<usize>, x_opt: &'a [f64], x_k: &'a [f64], f_x_k: f64, f_p_prev: f64, fixed: &'a [f64]) -> AnchorState<'a> {
        AnchorState {
            k,
            k_f,
            x_opt,
            x_k,
            f_x_k,
            p_prev: fixed,
            f_p_prev,
            fixed,
            resample_rng: RngState::from_seed(1),
        }
    }

    #[test]
    fn anchor_rules() {
        let fixed = [0.5, -0.5];
        let best = [0.1, 0.2];
        let xk = [0.3, 0.3];
        let s = state(3, None, &best, &xk, 1.0, 2.0, &fixed);
        assert_eq!(next_p(&PStrategy::Fixed { anchor: None }, &s).p, fixed);
        assert_eq!(next_p(&PStrategy::AdaptiveBest, &s).p, best);
        assert_eq!(next_p(&PStrategy::FixedThenResample { anchor: None }, &s).p, fixed);

        let after = state(3, Some(2), &best, &xk, 1.0, 1.0 + 1e-6, &fixed);
        let la = PStrategy::AdaptiveThenResample { gamma_res: 1e-5 };
        let c = next_p(&la, &after);
        assert!(c.resampled && c.p.iter().all(|v| v.abs() <= 1.0));
        let moved = state(3, Some(2), &best, &xk, 1.0, 2.0, &fixed);
        assert_eq!(next_p(&la, &moved).p, xk);
        let ln = next_p(&PStrategy::FixedThenResample { anchor: None }, &after);
        assert!(ln.resampled);
    }

    #[test]
    fn constant_objective_stagnates_immediately() {
        let obj = Objective::new("c", 8, FeasibleSet::Whole, |_: &[f64]| 4.25);
        let res = run_xrego(
            &obj,
            &PStrategy::AdaptiveBest,
            &DimensionSchedule::Increasing { d_lb: 1 },
            &SolverSpec::expensive(),
            &StopConfig::default(),
            &RngState::from_seed(0),
        )
        .unwrap();
        assert_eq!(res.k_f, Some(2));
        assert_eq!(res.d_e_est, Some(1));
        assert_eq!(res.f_opt, 4.25);
        assert_eq!(res.stop_reason, StopReason::Stagnation);
        assert_eq!(res.success, None);
    }

    #[test]
    fn rank_one_quadratic() {
        let q: Vec<f64> = (0..50).map(|i| ((i as f64) * 0.7).sin()).collect();
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let q: Vec<f64> = q.iter().map(|v| v / norm).collect();
        let obj = Objective::new("rank1", 50, FeasibleSet::Whole, move |x: &[f64]| {
            let s: f64 = x.iter().zip(&q).map(|(a, b)| a * b).sum();
            (s - 0.3).powi(2)
        })
        .with_f_star(0.0);
        let res = run_xrego(
            &obj,
            &PStrategy::AdaptiveBest,
            &DimensionSchedule::Increasing { d_lb: 1 },
            &SolverSpec::expensive(),
            &StopConfig::default(),
            &RngState::from_seed(17),
        )
        .unwrap();
        assert!(res.trace[0].f_x <= 1e-6, "first embedding reached {}", res.trace[0].f_x);
        assert_eq!(res.d_e_est, Some(1));
        assert_eq!(res.success, Some(true));
        let bests: Vec<f64> = res.trace.iter().map(|r| r.f_opt).collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn reproducible() {
        let obj = Objective::new("wavy", 12, FeasibleSet::Whole, |x: &[f64]| {
            x.iter().take(3).map(|v| v * v - 0.5 * (4.0 * v).cos()).sum()
        });
        let go = || {
            run_xrego(
                &obj,
                &PStrategy::AdaptiveThenResample { gamma_res: 1e-5 },
                &DimensionSchedule::Increasing { d_lb: 1 },
                &SolverSpec::local(),
                &StopConfig {
                    n_stop: Some(3),
                    max_embeddings: Some(12),
                    ..StopConfig::default()
                },
                &RngState::new(5, 1),
            )
            .unwrap()
        };
        let a = serde_json::to_string(&go()).unwrap();
        let b = serde_json::to_string(&go()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eval_wall_and_embedding_cap() {
        let obj = Objective::new("tilt", 6, FeasibleSet::Whole, |x: &[f64]| x.iter().sum::<f64>());
        let capped = run_xrego(
            &obj,
            &PStrategy::AdaptiveBest,
            &DimensionSchedule::Constant { d: 1 },
            &SolverSpec {
                iter_factor: 5,
                ..SolverSpec::local()
            },
            &StopConfig {
                max_embeddings: Some(4),
                ..StopConfig::default()
            },
            &RngState::from_seed(2),
        )
        .unwrap();
        assert_eq!(capped.embeddings, 4);
        assert_eq!(capped.stop_reason, StopReason::MaxEmbeddings);

        let walled = run_xrego(
            &obj,
            &PStrategy::AdaptiveBest,
            &DimensionSchedule::Constant { d: 1 },
            &SolverSpec::local(),
            &StopConfig {
                max_evals: Some(1),
                ..StopConfig::default()
            },
            &RngState::from_seed(2),
        )
        .unwrap();
        assert_eq!(walled.embeddings, 1);
        assert_eq!(walled.stop_reason, StopReason::MaxEvals);
    }
}
