//! Monte-Carlo estimates of embedding success probabilities, for checking
//! the analytic bounds.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{crofton_tail, tau_led, tau_pointwise, CircularCone};
use crate::error::{Error, Result};
use crate::geometry::{affine_subspace_distance, gen_gaussian, gen_haar_frame, orthonormality_defect};
use crate::rng::RngState;
use crate::stats::{wilson95, Interval};

pub const MIN_TRIALS: u64 = 100;

/// Ascent starts per trial in the cone-ray test.
pub const CONE_RAY_STARTS: usize = 50;

/// Trials whose best ratio lands this close to `cos α` are inconclusive.
pub const CONE_RAY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub dim: usize,
    pub d: usize,
    /// `ε / L`.
    pub radius: f64,
    pub anchor: Vec<f64>,
    pub target: Vec<f64>,
    pub seed: RngState,
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::Precondition(format!("need at least {MIN_TRIALS} trials")));
        }
        if !(self.radius > 0.0) {
            return Err(Error::domain("radius must be positive"));
        }
        if self.d == 0 || self.d > self.dim {
            return Err(Error::dim(format!("need 1 <= d <= D, got d={}, D={}", self.d, self.dim)));
        }
        if self.anchor.len() != self.dim || self.target.len() != self.dim {
            return Err(Error::dim("anchor and target must have length D"));
        }
        Ok(())
    }

    fn distance(&self) -> f64 {
        self.anchor
            .iter()
            .zip(&self.target)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    /// The Wilson upper end lies below the lower bound.
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub wilson95: Interval,
    pub trials: u64,
    pub hits: u64,
    /// Trials the hit test could not decide; not counted as hits.
    pub inconclusive: u64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl McEstimate {
    fn new(hits: u64, inconclusive: u64, trials: u64, bound: f64) -> Self {
        let wilson = wilson95(hits, trials);
        Self {
            p_hat: hits as f64 / trials as f64,
            wilson95: wilson,
            trials,
            hits,
            inconclusive,
            bound,
            verdict: if wilson.hi < bound {
                Verdict::Violation
            } else {
                Verdict::Consistent
            },
        }
    }
}

fn count_hits(trials: u64, f: impl Fn(u64) -> Result<bool> + Sync) -> Result<u64> {
    (0..trials)
        .into_par_iter()
        .map(|t| f(t).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `P[p + range(A)` meets `B(x*, radius)]` for Gaussian `A`, against `τ(r_p, d, D)`.
pub fn estimate_hit_probability(cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let p = DVector::from_column_slice(&cfg.anchor);
    let q = DVector::from_column_slice(&cfg.target);
    let hits = count_hits(cfg.trials, |t| {
        let a = gen_gaussian(&cfg.seed.substream(t), cfg.dim, cfg.d)?;
        Ok(affine_subspace_distance(a.matrix(), &p, &q)?.distance <= cfg.radius)
    })?;
    let bound = if cfg.d >= cfg.dim {
        1.0
    } else {
        tau_pointwise(cfg.radius, 1.0, cfg.distance(), cfg.d, cfg.dim)?.tau
    };
    Ok(McEstimate::new(hits, 0, cfg.trials, bound))
}

/// Same event seen through the effective subspace: hit iff
/// `Uᵀp + range(UA)` meets `B(U x*, radius)`, against `τ(r_eff, d, d_e)`.
/// `basis` is `d_e × D` with orthonormal rows.
pub fn estimate_led_hit_probability(cfg: &McConfig, basis: &DMatrix<f64>) -> Result<McEstimate> {
    cfg.validate()?;
    if basis.ncols() != cfg.dim {
        return Err(Error::dim("basis must have D columns"));
    }
    if orthonormality_defect(&basis.transpose()) > 1e-10 {
        return Err(Error::Precondition("basis rows are not orthonormal".into()));
    }
    let de = basis.nrows();
    let up = basis * DVector::from_column_slice(&cfg.anchor);
    let uq = basis * DVector::from_column_slice(&cfg.target);
    let hits = count_hits(cfg.trials, |t| {
        let a = gen_gaussian(&cfg.seed.substream(t), cfg.dim, cfg.d)?;
        let b = basis * a.matrix();
        Ok(affine_subspace_distance(&b, &up, &uq)?.distance <= cfg.radius)
    })?;
    let projected = (&uq - &up).norm();
    let bound = tau_led(cfg.radius, 1.0, projected, cfg.d, de, Some(cfg.dim))?.tau;
    Ok(McEstimate::new(hits, 0, cfg.trials, bound))
}

/// `max_{‖y‖=1} (Ay)₁ / ‖Ay‖` in closed form: the norm of the projection of
/// `e₁` onto `range(A)`.
pub fn max_first_coordinate_ratio(a: &DMatrix<f64>) -> f64 {
    let q = a.clone().qr().q();
    q.row(0).norm()
}

/// The same maximum by multistart projected-gradient ascent over the unit
/// sphere of `ℝ^d`.
pub fn ascend_first_coordinate_ratio(a: &DMatrix<f64>, starts: usize, rng: &RngState) -> f64 {
    let d = a.ncols();
    let a1 = a.row(0).transpose();
    let ratio = |y: &DVector<f64>| {
        let ay = a * y;
        ay[0] / ay.norm()
    };
    let mut best = f64::NEG_INFINITY;
    for s in 0..starts {
        let g = gen_gaussian(&rng.substream(s as u64), d, 1).expect("d >= 1").into_inner();
        let mut y: DVector<f64> = g.column(0).into_owned();
        y /= y.norm();
        let mut val = ratio(&y);
        let mut step = 1.0;
        for _ in 0..500 {
            let ay = a * &y;
            let n = ay.norm();
            let grad = &a1 / n - a.transpose() * &ay * (ay[0] / (n * n * n));
            let tangent = &grad - &y * grad.dot(&y);
            let tn = tangent.norm();
            if tn < 1e-13 {
                break;
            }
            let mut improved = false;
            while step > 1e-14 {
                let mut cand = &y + &tangent * (step / tn);
                cand /= cand.norm();
                let v = ratio(&cand);
                if v > val {
                    y = cand;
                    val = v;
                    step *= 2.0;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.max(val);
    }
    best
}

/// `P[range(A)` contains a nonzero ray in `Circ_D(α)]`, compared with the
/// Crofton tail (an equality, so the interval should contain it).
pub fn estimate_cone_ray_probability(dim: usize, d: usize, alpha: f64, trials: u64, seed: &RngState) -> Result<McEstimate> {
    let cone = CircularCone::new(dim, alpha)?;
    if !(alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain("cone-ray test needs alpha < pi/2"));
    }
    if d == 0 || d >= dim {
        return Err(Error::dim(format!("need 1 <= d < D, got d={d}, D={dim}")));
    }
    if trials < MIN_TRIALS {
        return Err(Error::Precondition(format!("need at least {MIN_TRIALS} trials")));
    }
    let cos_a = alpha.cos();
    // 0 = miss, 1 = hit, 2 = inconclusive
    let outcomes: Vec<u8> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial = seed.substream(t);
            let a = gen_gaussian(&trial, dim, d)?.into_inner();
            let m = if d == 1 {
                let col = a.column(0);
                col[0].abs() / col.norm()
            } else {
                ascend_first_coordinate_ratio(&a, CONE_RAY_STARTS, &trial.labeled("ascent"))
            };
            Ok(if (m - cos_a).abs() <= CONE_RAY_BAND {
                2
            } else {
                u8::from(m > cos_a)
            })
        })
        .collect::<Result<_>>()?;
    let hits = outcomes.iter().filter(|&&o| o == 1).count() as u64;
    let inconclusive = outcomes.iter().filter(|&&o| o == 2).count() as u64;
    Ok(McEstimate::new(hits, inconclusive, trials, crofton_tail(dim, d, &cone)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub dim: usize,
    pub d: usize,
    pub r: f64,
    pub estimate: McEstimate,
}

pub fn default_grid() -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for dim in [3, 5, 10, 20] {
        for d in [1, 2, 3] {
            for r in [0.2, 0.5, 0.8] {
                out.push((dim, d, r));
            }
        }
    }
    out
}

/// Hit-probability estimates on a grid of `(D, d, r)`, with `‖x* − p‖ = 1/r`
/// and unit radius. Each point uses its own labeled substream.
pub fn bound_consistency_grid(grid: &[(usize, usize, f64)], trials: u64, seed: &RngState) -> Result<Vec<GridPoint>> {
    grid.iter()
        .map(|&(dim, d, r)| {
            let mut target = vec![0.0; dim];
            target[0] = 1.0 / r;
            let cfg = McConfig {
                trials,
                dim,
                d,
                radius: 1.0,
                anchor: vec![0.0; dim],
                target,
                seed: seed.labeled(&format!("grid-{dim}-{d}-{r}")),
            };
            Ok(GridPoint {
                dim,
                d,
                r,
                estimate: estimate_hit_probability(&cfg)?,
            })
        })
        .collect()
}

/// A `d_e × D` basis with orthonormal rows, for LED experiments.
pub fn random_effective_basis(dim: usize, de: usize, rng: &RngState) -> Result<DMatrix<f64>> {
    Ok(gen_haar_frame(rng, dim, de)?.transpose())
}
