//! Nelder–Mead simplex descent with the standard coefficients.

use serde::{Deserialize, Serialize};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Options {
    /// Edge length of the initial axis-aligned simplex.
    pub initial_edge: f64,
    /// Converged once `max f − min f` over the simplex is below `f_tol`
    /// and every vertex is within `x_tol` of the best one.
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iter: usize,
    /// Evaluation budget for this run; `None` for unlimited.
    pub max_evals: Option<u64>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            initial_edge: 0.1,
            f_tol: 1e-8,
            x_tol: 1e-8,
            max_iter: 1000,
            max_evals: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    /// Value at the starting point.
    pub f_start: f64,
    pub iterations: usize,
    pub evals: u64,
    pub converged: bool,
    pub truncated: bool,
}

struct Counted<F> {
    f: F,
    evals: u64,
    budget: u64,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.budget {
            return None;
        }
        self.evals += 1;
        let v = (self.f)(x);
        Some(if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Minimizes `f` from `x0`. `f` may return `+∞` (barrier); NaN is read as `+∞`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &Options) -> Outcome {
    let n = x0.len();
    let mut fun = Counted {
        f,
        evals: 0,
        budget: opts.max_evals.unwrap_or(u64::MAX),
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);

    let truncated = |f_start: f64, simplex: &[Vec<f64>], values: &[f64], iterations, evals| {
        let best = (0..values.len())
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .expect("at least one vertex");
        Outcome {
            x: simplex[best].clone(),
            f: values[best],
            f_start,
            iterations,
            evals,
            converged: false,
            truncated: true,
        }
    };

    let f_start = match fun.call(x0) {
        Some(v) => {
            simplex.push(x0.to_vec());
            values.push(v);
            v
        }
        None => {
            return Outcome {
                x: x0.to_vec(),
                f: f64::INFINITY,
                f_start: f64::INFINITY,
                iterations: 0,
                evals: 0,
                converged: false,
                truncated: true,
            }
        }
    };
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_edge;
        match fun.call(&v) {
            Some(fv) => {
                simplex.push(v);
                values.push(fv);
            }
            None => return truncated(f_start, &simplex, &values, 0, fun.evals),
        }
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut iterations = 0;
    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n.saturating_sub(1)];

        let spread = values[worst] - values[best];
        let size = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        // Both tests must hold: a simplex straddling a symmetric minimum has
        // zero spread long before it is small.
        if spread < opts.f_tol && size < opts.x_tol {
            return Outcome {
                x: simplex[best].clone(),
                f: values[best],
                f_start,
                iterations,
                evals: fun.evals,
                converged: true,
                truncated: false,
            };
        }
        if iterations >= opts.max_iter {
            return Outcome {
                x: simplex[best].clone(),
                f: values[best],
                f_start,
                iterations,
                evals: fun.evals,
                converged: false,
                truncated: false,
            };
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let along = |coef: f64, out: &mut Vec<f64>, simplex: &[Vec<f64>]| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(&simplex[worst]) {
                *o = c + coef * (c - w);
            }
        };

        along(REFLECT, &mut trial, &simplex);
        let Some(fr) = fun.call(&trial) else {
            return truncated(f_start, &simplex, &values, iterations, fun.evals);
        };
        if fr < values[best] {
            let reflected = trial.clone();
            along(EXPAND, &mut trial, &simplex);
            let Some(fe) = fun.call(&trial) else {
                simplex[worst] = reflected;
                values[worst] = fr;
                return truncated(f_start, &simplex, &values, iterations, fun.evals);
            };
            if fe < fr {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        let outside = fr < values[worst];
        let coef = if outside { CONTRACT * REFLECT } else { -CONTRACT };
        along(coef, &mut trial, &simplex);
        let Some(fc) = fun.call(&trial) else {
            return truncated(f_start, &simplex, &values, iterations, fun.evals);
        };
        let accept = if outside { fc <= fr } else { fc < values[worst] };
        if accept {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for (v, a) in simplex[i].iter_mut().zip(&anchor) {
                *v = a + SHRINK * (*v - a);
            }
            match fun.call(&simplex[i]) {
                Some(v) => values[i] = v,
                None => {
                    values[i] = f64::INFINITY;
                    return truncated(f_start, &simplex, &values, iterations, fun.evals);
                }
            }
        }
    }
}
