//! Performance profiles over evaluation counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::median;

use super::record::CellRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub algorithm: String,
    /// `N_A / N*` per kept problem, ascending; `∞` for unsolved.
    #[serde(skip)]
    pub ratios: Vec<f64>,
    /// `π_A` at each grid point of the report.
    pub pi: Vec<f64>,
    /// Fraction of kept problems solved at all.
    pub solved: f64,
}

impl ProfileCurve {
    /// `π_A(α)`: share of problems with ratio at most `α`.
    pub fn at(&self, alpha: f64) -> f64 {
        if self.ratios.is_empty() {
            return 0.0;
        }
        // Unsolved problems never count, even at α = ∞.
        let n = self.ratios.iter().filter(|&&r| r.is_finite() && r <= alpha).count();
        n as f64 / self.ratios.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub alphas: Vec<f64>,
    pub curves: Vec<ProfileCurve>,
    /// Problems (`slug@D`) counted in the denominator.
    pub problems: Vec<String>,
    /// Problems no algorithm solved.
    pub excluded: Vec<String>,
}

/// Builds the profile. Per problem and algorithm the cost is the median
/// `N_f` over seeds, with unsolved seeds counted as `∞`. Problems that every
/// algorithm failed are dropped with a warning. When `alphas` is `None` the
/// grid is `1` plus every finite ratio.
pub fn performance_profile(records: &[CellRecord], alphas: Option<&[f64]>) -> Result<ProfileReport> {
    let mut costs: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut algorithms = BTreeSet::new();
    for r in records {
        let problem = format!("{}@{}", r.key.problem, r.key.dim);
        let n = r.n_f.map_or(f64::INFINITY, |n| n as f64);
        costs.entry(problem).or_default().entry(r.key.algorithm.clone()).or_default().push(n);
        algorithms.insert(r.key.algorithm.clone());
    }
    if algorithms.is_empty() {
        return Err(Error::Precondition("no records to profile".into()));
    }

    let mut problems = Vec::new();
    let mut excluded = Vec::new();
    let mut ratios: BTreeMap<&String, Vec<f64>> = algorithms.iter().map(|a| (a, Vec::new())).collect();
    for (problem, by_algo) in &costs {
        let med: BTreeMap<&String, f64> = algorithms
            .iter()
            .map(|a| (a, by_algo.get(a).and_then(|v| median(v)).unwrap_or(f64::INFINITY)))
            .collect();
        let best = med.values().copied().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            log::warn!("excluding {problem} from the profile: no algorithm solved it");
            excluded.push(problem.clone());
            continue;
        }
        problems.push(problem.clone());
        for (a, m) in med {
            // N* = 0 only if the start already met the target.
            let ratio = if m == best { 1.0 } else { m / best.max(1.0) };
            ratios.get_mut(a).expect("known algorithm").push(ratio);
        }
    }

    let grid: Vec<f64> = match alphas {
        Some(a) => a.to_vec(),
        None => {
            let mut g: Vec<f64> = ratios.values().flatten().copied().filter(|r| r.is_finite()).collect();
            g.push(1.0);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        }
    };

    let curves = ratios
        .into_iter()
        .map(|(a, mut rs)| {
            rs.sort_by(f64::total_cmp);
            let solved = if rs.is_empty() {
                0.0
            } else {
                rs.iter().filter(|r| r.is_finite()).count() as f64 / rs.len() as f64
            };
            let mut curve = ProfileCurve { algorithm: a.clone(), ratios: rs, pi: Vec::new(), solved };
            curve.pi = grid.iter().map(|&x| curve.at(x)).collect();
            curve
        })
        .collect();
    Ok(ProfileReport { alphas: grid, curves, problems, excluded })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ProfileReport {
    /// One row per `α`, one column per algorithm.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha");
        for c in &self.curves {
            out.push(',');
            out.push_str(&csv_field(&c.algorithm));
        }
        out.push('\n');
        for (i, a) in self.alphas.iter().enumerate() {
            let _ = write!(out, "{a}");
            for c in &self.curves {
                let _ = write!(out, ",{}", c.pi[i]);
            }
            out.push('\n');
        }
        out
    }

    /// Step plot with a log2 `α` axis.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const M: f64 = 50.0;
        const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
        let max_alpha = self.alphas.iter().copied().filter(|a| a.is_finite()).fold(2.0, f64::max);
        let xmax = max_alpha.log2() * 1.05;
        let sx = |a: f64| M + (a.max(1.0).log2() / xmax) * (W - 2.0 * M);
        let sy = |p: f64| H - M - p * (H - 2.0 * M);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<path d="M{M} {} V{} H{}" stroke="black" fill="none"/>"#,
            M,
            H - M,
            W - M
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log2(alpha)</text>"#, W / 2.0, H - 12.0);
        let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">fraction of problems</text>"#, H / 2.0, H / 2.0);
        for (i, c) in self.curves.iter().enumerate() {
            let colour = COLOURS[i % COLOURS.len()];
            let mut d = format!("M{:.2} {:.2}", sx(1.0), sy(c.at(1.0)));
            let mut prev = c.at(1.0);
            for &r in c.ratios.iter().filter(|r| r.is_finite() && **r > 1.0) {
                let p = c.at(r);
                let _ = write!(d, " H{:.2} V{:.2}", sx(r), sy(p));
                prev = p;
            }
            let _ = write!(d, " H{:.2}", sx(max_alpha));
            let _ = writeln!(s, r#"<path d="{d}" stroke="{colour}" stroke-width="2" fill="none"/>"#);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{colour}">{} ({:.2})</text>"#,
                W - M - 150.0,
                M + 16.0 * i as f64,
                xml_escape(&c.algorithm),
                prev
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
