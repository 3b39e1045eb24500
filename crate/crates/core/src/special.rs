//! Log-gamma, log-beta and the regularized incomplete beta function.
//!
//! Everything returns natural logarithms so that products of gamma
//! functions and high powers can be combined without overflow.

use std::f64::consts::{LN_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs a positive argument, got {x}");
    if x < 0.5 {
        // Reflection; only hit for arguments in (0, 1/2).
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    if x >= 15.0 {
        // Stirling series with four correction terms.
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Logarithm of the generalized binomial coefficient
/// `Γ(i+1) / (Γ(j+1) Γ(i−j+1))`. All three gamma arguments must be positive.
pub fn ln_binomial(i: f64, j: f64) -> f64 {
    debug_assert!(i + 1.0 > 0.0 && j + 1.0 > 0.0 && i - j + 1.0 > 0.0);
    ln_gamma(i + 1.0) - ln_gamma(j + 1.0) - ln_gamma(i - j + 1.0)
}

const CF_EPS: f64 = 1e-15;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 20_000;

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return h;
        }
    }
    log::warn!("incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})");
    h
}

/// `ln I_x(a, b)`, the log of the regularized incomplete beta function.
/// Returns `-inf` at `x = 0`.
pub fn ln_beta_inc_reg(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front + beta_cf(x, a, b).ln() - a.ln()
    } else {
        // I_x(a,b) = 1 − I_{1−x}(b,a)
        let ln_front_swapped = b * (-x).ln_1p() + a * x.ln() - ln_beta(b, a);
        let tail = (ln_front_swapped + beta_cf(1.0 - x, b, a).ln() - b.ln()).exp();
        (-tail).ln_1p()
    }
}

/// `ln ∫₀^θ sinⁿ(x) dx` for `θ ∈ [0, π/2]` and `n ≥ 0`, through
/// `∫₀^θ sinⁿ = ½ B(sin²θ; (n+1)/2, 1/2)`.
pub fn ln_sin_power_integral(n: f64, theta: f64) -> f64 {
    debug_assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-15).contains(&theta));
    if theta <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let a = 0.5 * (n + 1.0);
    let b = 0.5;
    let s = theta.sin();
    let x = (s * s).min(1.0);
    // Same switch point as ln_beta_inc_reg; in the swapped branch cos²θ is
    // used directly since 1 − sin²θ loses digits near π/2.
    let lnreg = if x >= (a + 1.0) / (a + b + 2.0) {
        let c = theta.cos();
        let one_minus_x = c * c;
        let ln_front = b * one_minus_x.ln() + a * x.ln() - ln_beta(b, a);
        let tail = (ln_front + beta_cf(one_minus_x, b, a).ln() - b.ln()).exp();
        (-tail).ln_1p()
    } else {
        ln_beta_inc_reg(x, a, b)
    };
    -LN_2 + ln_beta(a, b) + lnreg
}
