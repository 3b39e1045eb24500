//! Success-probability bounds for random embeddings.
//!
//! Conic intrinsic volumes of circular cones, the Crofton intersection
//! probability, the embedding lower bound `τ(r, d, D)` and its variants,
//! the uniform-sampling bound, and the number of embeddings needed for a
//! target success probability.
//!
//! Products of gamma functions and powers are evaluated as logarithms; the
//! linear value is only materialized when `log₁₀ τ > −300`.

use std::f64::consts::{E, FRAC_PI_2, LN_10, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_binomial, ln_gamma, ln_sin_power_integral};

/// Half-angles at or above `π/2 − HALF_SPACE_EPS` are treated as the half-space.
pub const HALF_SPACE_EPS: f64 = 1e-9;

/// Smallest `log₁₀` for which a linear value is materialized.
pub const LOG10_FLOOR: f64 = -300.0;

/// `Circ_D(α) = { x : x₁ ≥ ‖x‖ cos α }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularCone {
    dim: usize,
    half_angle: f64,
}

impl CircularCone {
    pub fn new(dim: usize, half_angle: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::dim(format!("circular cone needs D >= 2, got {dim}")));
        }
        if !(half_angle > 0.0 && half_angle <= FRAC_PI_2) {
            return Err(Error::domain(format!(
                "half-angle must lie in (0, pi/2], got {half_angle}"
            )));
        }
        Ok(Self { dim, half_angle })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    fn is_half_space(&self) -> bool {
        self.half_angle >= FRAC_PI_2 - HALF_SPACE_EPS
    }

    /// `ln v_k` of this cone.
    pub fn ln_intrinsic_volume(&self, k: usize) -> Result<f64> {
        let dim = self.dim;
        if k > dim {
            return Err(Error::dim(format!("intrinsic volume index {k} exceeds D = {dim}")));
        }
        if self.is_half_space() {
            return Ok(if k + 1 >= dim { -LN_2 } else { f64::NEG_INFINITY });
        }
        let n = dim as f64;
        let alpha = self.half_angle;
        let half_top = (n - 2.0) / 2.0;
        let ln_v = if k == dim {
            ((n - 1.0) / 2.0).ln()
                + ln_binomial(half_top, (n - 1.0) / 2.0)
                + ln_sin_power_integral(n - 2.0, alpha)
        } else if k == 0 {
            ((n - 1.0) / 2.0).ln()
                + ln_binomial(half_top, -0.5)
                + ln_sin_power_integral(n - 2.0, FRAC_PI_2 - alpha)
        } else {
            let kf = k as f64;
            let sin_term = if k == 1 { 0.0 } else { (kf - 1.0) * alpha.sin().ln() };
            let cos_term = if k + 1 == dim { 0.0 } else { (n - kf - 1.0) * alpha.cos().ln() };
            -LN_2 + ln_binomial(half_top, (kf - 1.0) / 2.0) + sin_term + cos_term
        };
        Ok(ln_v)
    }

    pub fn intrinsic_volumes(&self) -> IntrinsicVolumes {
        let ln_values: Vec<f64> = (0..=self.dim)
            .map(|k| self.ln_intrinsic_volume(k).expect("k <= D"))
            .collect();
        let values = ln_values.iter().map(|l| l.exp()).collect();
        IntrinsicVolumes { values, ln_values }
    }
}

/// `v_0 … v_D` of a cone, with a log-space mirror.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicVolumes {
    pub values: Vec<f64>,
    pub ln_values: Vec<f64>,
}

impl IntrinsicVolumes {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `(Σ_{k even} v_k, Σ_{k odd} v_k)`.
    pub fn parity_sums(&self) -> (f64, f64) {
        self.values.iter().enumerate().fold((0.0, 0.0), |(e, o), (k, v)| {
            if k % 2 == 0 {
                (e + v, o)
            } else {
                (e, o + v)
            }
        })
    }
}

/// `v_k(Circ_D(α))` as `(value, ln value)`.
pub fn circ_intrinsic_volume(dim: usize, alpha: f64, k: usize) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha <= FRAC_PI_2) {
        return Err(Error::domain(format!(
            "circular cone half-angle must lie in (0, pi/2), got {alpha}"
        )));
    }
    let ln_v = CircularCone::new(dim, alpha)?.ln_intrinsic_volume(k)?;
    Ok((ln_v.exp(), ln_v))
}

/// `v_k(L_d)` of a `d`-dimensional linear subspace of `ℝ^D`.
pub fn subspace_intrinsic_volume(dim: usize, d: usize, k: usize) -> Result<f64> {
    if d > dim || k > dim {
        return Err(Error::dim(format!("need d, k <= D (D={dim}, d={d}, k={k})")));
    }
    Ok(if k == d { 1.0 } else { 0.0 })
}

/// Probability that a uniformly rotated `d`-subspace meets the cone
/// nontrivially: `2 (v_{D−d+1} + v_{D−d+3} + …)`.
pub fn crofton_tail(dim: usize, d: usize, cone: &CircularCone) -> Result<f64> {
    if cone.dim() != dim {
        return Err(Error::dim(format!("cone lives in R^{} not R^{dim}", cone.dim())));
    }
    if d == 0 || d >= dim {
        return Err(Error::dim(format!("crofton needs 1 <= d < D, got d={d}, D={dim}")));
    }
    let mut terms = ((dim - d + 1)..=dim)
        .step_by(2)
        .map(|k| cone.ln_intrinsic_volume(k).map(f64::exp))
        .collect::<Result<Vec<_>>>()?;
    terms.sort_by(|a, b| b.total_cmp(a));
    Ok((2.0 * terms.iter().sum::<f64>()).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `τ(r, d, D)` evaluated directly.
    Direct,
    /// `r_p = ε / (L ‖x* − p‖)`.
    Pointwise,
    /// `r_min = ε / (L R_max)`.
    Uniform,
    /// Effective-space bound `τ(r_eff, d, d_e)`.
    Led,
    /// Uniform sampling on `[−1, 1]^D`.
    UniformSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundFlag {
    /// The anchor lies inside the ball of ε-minimizers; success is certain.
    AnchorInsideBall,
    /// `r` rounded to 1 and was pulled back below it.
    RadiusClamped,
    /// `ε/L > 1`: the ball is not contained in the box, the bound may be vacuous.
    BallExceedsBox,
    /// `d ≥ d_e`: the embedding captures the effective subspace almost surely.
    SubspaceCoversEffective,
}

/// Inputs echoed back with each bound. Unused fields stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub r: Option<f64>,
    pub d: Option<usize>,
    pub ambient_dim: Option<usize>,
    pub effective_dim: Option<usize>,
    pub eps: Option<f64>,
    pub lipschitz: Option<f64>,
    pub distance: Option<f64>,
    pub r_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub tau: f64,
    pub log10_tau: f64,
    pub kind: BoundKind,
    pub inputs: BoundInputs,
    pub flags: Vec<BoundFlag>,
}

impl BoundReport {
    fn from_ln(ln_tau: f64, kind: BoundKind, inputs: BoundInputs, flags: Vec<BoundFlag>) -> Self {
        let ln_tau = ln_tau.min(0.0);
        let log10_tau = ln_tau / LN_10;
        let tau = if log10_tau > LOG10_FLOOR { ln_tau.exp() } else { 0.0 };
        Self {
            tau,
            log10_tau,
            kind,
            inputs,
            flags,
        }
    }

    fn certain(kind: BoundKind, inputs: BoundInputs, flag: BoundFlag) -> Self {
        Self {
            tau: 1.0,
            log10_tau: 0.0,
            kind,
            inputs,
            flags: vec![flag],
        }
    }
}

fn check_tau_args(r: f64, d: usize, dim: usize) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("tau needs 0 < r < 1, got r={r}")));
    }
    if d == 0 || d >= dim {
        return Err(Error::dim(format!("tau needs 1 <= d < D, got d={d}, D={dim}")));
    }
    Ok(())
}

/// `ln τ(r, d, D)`; arguments must already be validated.
fn ln_tau_unchecked(r: f64, d: usize, dim: usize) -> f64 {
    let n = dim as f64;
    let top = (n - 2.0) / 2.0;
    if d == 1 {
        (n - 1.0).ln() + ln_binomial(top, (n - 1.0) / 2.0) + ln_sin_power_integral(n - 2.0, r.asin())
    } else {
        let k = d as f64;
        let ln_one_minus_r2 = (-r * r).ln_1p();
        let shape = if d == 2 { 0.0 } else { (k - 2.0) / 2.0 * ln_one_minus_r2 };
        ln_binomial(top, (n - k) / 2.0) + (n - k) * r.ln() + shape
    }
}

/// The embedding success lower bound `τ(r, d, D)` for `0 < r < 1`, `1 ≤ d < D`.
pub fn tau(r: f64, d: usize, dim: usize) -> Result<BoundReport> {
    check_tau_args(r, d, dim)?;
    let inputs = BoundInputs {
        r: Some(r),
        d: Some(d),
        ambient_dim: Some(dim),
        ..Default::default()
    };
    Ok(BoundReport::from_ln(ln_tau_unchecked(r, d, dim), BoundKind::Direct, inputs, Vec::new()))
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Shared path for the distance-based bounds: returns `τ = 1` when the
/// anchor sits in the ball, clamps `r` just below 1 otherwise.
fn tau_from_distance(
    eps: f64,
    lipschitz: f64,
    distance: f64,
    d: usize,
    dim: usize,
    kind: BoundKind,
    mut inputs: BoundInputs,
) -> Result<BoundReport> {
    check_positive("epsilon", eps)?;
    check_positive("lipschitz constant", lipschitz)?;
    if !(distance >= 0.0) {
        return Err(Error::domain(format!("distance must be non-negative, got {distance}")));
    }
    if d == 0 || d >= dim {
        return Err(Error::dim(format!("need 1 <= d < D, got d={d}, D={dim}")));
    }
    let radius = eps / lipschitz;
    if distance <= radius {
        inputs.r = Some(1.0);
        return Ok(BoundReport::certain(kind, inputs, BoundFlag::AnchorInsideBall));
    }
    let mut r = radius / distance;
    let mut flags = Vec::new();
    if r >= 1.0 {
        r = 1.0 - f64::EPSILON / 2.0;
        flags.push(BoundFlag::RadiusClamped);
    }
    inputs.r = Some(r);
    Ok(BoundReport::from_ln(ln_tau_unchecked(r, d, dim), kind, inputs, flags))
}

/// `τ(r_p, d, D)` with `r_p = ε / (L ‖x* − p‖)`.
pub fn tau_pointwise(eps: f64, lipschitz: f64, distance: f64, d: usize, dim: usize) -> Result<BoundReport> {
    let inputs = BoundInputs {
        d: Some(d),
        ambient_dim: Some(dim),
        eps: Some(eps),
        lipschitz: Some(lipschitz),
        distance: Some(distance),
        ..Default::default()
    };
    tau_from_distance(eps, lipschitz, distance, d, dim, BoundKind::Pointwise, inputs)
}

/// `τ(r_min, d, D)` with `r_min = ε / (L R_max)`.
pub fn tau_uniform(eps: f64, lipschitz: f64, r_max: f64, d: usize, dim: usize) -> Result<BoundReport> {
    let inputs = BoundInputs {
        d: Some(d),
        ambient_dim: Some(dim),
        eps: Some(eps),
        lipschitz: Some(lipschitz),
        r_max: Some(r_max),
        ..Default::default()
    };
    tau_from_distance(eps, lipschitz, r_max, d, dim, BoundKind::Uniform, inputs)
}

/// `log₁₀` of the leading term `D^{(d−2)/2} r^{D−d}`. Order of magnitude
/// only: the constants hidden in the asymptotic relation are dropped.
pub fn tau_asymptotic(r: f64, d: usize, dim: usize) -> Result<f64> {
    check_tau_args(r, d, dim)?;
    let n = dim as f64;
    let k = d as f64;
    Ok((k - 2.0) / 2.0 * n.log10() + (n - k) * r.log10())
}

/// Uniform-sampling lower bound on `[−1, 1]^D`: ball volume over box volume.
pub fn tau_us(eps: f64, lipschitz: f64, dim: usize) -> Result<BoundReport> {
    check_positive("epsilon", eps)?;
    check_positive("lipschitz constant", lipschitz)?;
    if dim == 0 {
        return Err(Error::dim("tau_us needs D >= 1"));
    }
    let n = dim as f64;
    let radius = eps / lipschitz;
    let ln_tau = n / 2.0 * PI.ln() - n * LN_2 - ln_gamma(n / 2.0 + 1.0) + n * radius.ln();
    let flags = if radius > 1.0 { vec![BoundFlag::BallExceedsBox] } else { Vec::new() };
    let inputs = BoundInputs {
        ambient_dim: Some(dim),
        eps: Some(eps),
        lipschitz: Some(lipschitz),
        ..Default::default()
    };
    Ok(BoundReport::from_ln(ln_tau, BoundKind::UniformSampling, inputs, flags))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    EmbeddingFavored,
    UniformFavored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    /// `Δ₀ = √(2D / (π e))`.
    pub delta0: f64,
    pub distance: f64,
    /// `log₁₀(τ(r_p, d, D) / τ_us)`.
    pub log10_ratio: f64,
    pub regime: Regime,
}

/// `Δ₀ = √(2D / (π e))`.
pub fn crossover_distance(dim: usize) -> f64 {
    (2.0 * dim as f64 / (PI * E)).sqrt()
}

/// Compares the embedding bound at distance `distance` with uniform sampling.
pub fn crossover(eps: f64, lipschitz: f64, distance: f64, d: usize, dim: usize) -> Result<CrossoverReport> {
    let embed = tau_pointwise(eps, lipschitz, distance, d, dim)?;
    let us = tau_us(eps, lipschitz, dim)?;
    let log10_ratio = embed.log10_tau - us.log10_tau;
    Ok(CrossoverReport {
        delta0: crossover_distance(dim),
        distance,
        log10_ratio,
        regime: if log10_ratio > 0.0 {
            Regime::EmbeddingFavored
        } else {
            Regime::UniformFavored
        },
    })
}

/// Effective-space bound for objectives with effective dimension `d_e`.
///
/// `distance` is either `‖Uᵀ(x* − p)‖` (pointwise) or `R_max` (uniform).
/// The ambient dimension is only echoed; it never enters the value.
pub fn tau_led(
    eps: f64,
    lipschitz: f64,
    distance: f64,
    d: usize,
    effective_dim: usize,
    ambient_dim: Option<usize>,
) -> Result<BoundReport> {
    if d == 0 || effective_dim == 0 {
        return Err(Error::dim("tau_led needs d >= 1 and d_e >= 1"));
    }
    let inputs = BoundInputs {
        d: Some(d),
        ambient_dim,
        effective_dim: Some(effective_dim),
        eps: Some(eps),
        lipschitz: Some(lipschitz),
        distance: Some(distance),
        ..Default::default()
    };
    if d >= effective_dim {
        check_positive("epsilon", eps)?;
        check_positive("lipschitz constant", lipschitz)?;
        return Ok(BoundReport::certain(BoundKind::Led, inputs, BoundFlag::SubspaceCoversEffective));
    }
    tau_from_distance(eps, lipschitz, distance, d, effective_dim, BoundKind::Led, inputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceParams {
    pub xi: f64,
    pub tau_lb: f64,
    pub rho_lb: f64,
    pub k_xi: u64,
}

/// `K_ξ = ⌈|ln(1 − ξ)| / (τ_lb ρ_lb)⌉` (natural logarithm).
pub fn k_xi(xi: f64, tau_lb: f64, rho_lb: f64) -> Result<ConvergenceParams> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::domain(format!("xi must lie in (0, 1), got {xi}")));
    }
    for (name, v) in [("tau_lb", tau_lb), ("rho_lb", rho_lb)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::domain(format!("{name} must lie in (0, 1], got {v}")));
        }
    }
    let product = tau_lb * rho_lb;
    if product <= 0.0 {
        return Err(Error::domain("tau_lb * rho_lb underflows to zero"));
    }
    let quotient = (-xi).ln_1p().abs() / product;
    // ξ is usually given as a decimal, so 1 − ξ carries rounding noise; snap
    // quotients that sit on an integer to within that noise.
    let nearest = quotient.round();
    let k = if (quotient - nearest).abs() <= 1e-12 * quotient.max(1.0) {
        nearest
    } else {
        quotient.ceil()
    };
    Ok(ConvergenceParams {
        xi,
        tau_lb,
        rho_lb,
        k_xi: (k as u64).max(1),
    })
}

/// Lower bound on `P[f(x_opt^k) ≤ f* + ε]` after `k` embeddings.
///
/// `1 − (1 − τρ)^k`, raised to at least `rho_at_kmax` once `k ≥ k_max`
/// (the first embedding whose dimension reaches `d_e`).
pub fn success_curve(
    k: u64,
    tau_lb: f64,
    rho_lb: f64,
    k_max: Option<u64>,
    rho_at_kmax: Option<f64>,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("success_curve needs k >= 1"));
    }
    let p = (tau_lb * rho_lb).clamp(0.0, 1.0);
    let base = -((k as f64) * (-p).ln_1p()).exp_m1();
    Ok(match (k_max, rho_at_kmax) {
        (Some(km), Some(rho)) if k >= km => base.max(rho),
        _ => base,
    })
}
