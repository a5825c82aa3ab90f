//! Oscillation diagnostics and mesh-ratio advisories.
//!
//! The oscillation index of a time level is computed on the mesh vertices inside
//! a window around the strike (P2 midpoints are skipped: their error differs
//! systematically from the vertex error, which alternates the second differences
//! without any oscillation). With second differences `d_i` of the vertex values,
//!
//! ```text
//! index = sum over i with d_i * d_{i+1} < 0 of min(|d_i|, |d_{i+1}|)
//!         / sum over i of |d_i|
//! ```
//!
//! i.e. the share of the curvature that alternates in sign, a number in `[0, 1]`
//! unchanged by adding a constant to the solution or scaling it. A convex
//! profile scores zero.
//!
//! The reported index is the maximum over the later part of the run (by default
//! `τ ≥ τ_final/2`, the half closest to `t = 0`). Early levels carry a decaying
//! alternation left by the payoff kink even in stable runs; an instability
//! persists or grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh1D;
use crate::model::MarketParams;
use crate::timestepper::{SchemeConfig, SolutionHistory};

pub const DEFAULT_OSCILLATION_THRESHOLD: f64 = 0.01;
pub const DEFAULT_WINDOW_HALF_WIDTH: f64 = 1.0;
pub const DEFAULT_SCORED_FROM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub d_tau: f64,
    pub threshold: f64,
    /// Window centre in x, normally ln K.
    pub center: f64,
    pub half_width: f64,
    /// Levels with `τ ≥ scored_from · τ_last` enter the maximum.
    pub scored_from: f64,
}

impl StabilityConfig {
    pub fn for_run(scheme: &SchemeConfig, params: &MarketParams) -> Self {
        Self {
            d_tau: scheme.d_tau,
            threshold: DEFAULT_OSCILLATION_THRESHOLD,
            center: params.log_strike(),
            half_width: DEFAULT_WINDOW_HALF_WIDTH,
            scored_from: DEFAULT_SCORED_FROM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub ratio_tau_h: f64,
    pub ratio_tau_h2: f64,
    pub oscillation_index: f64,
    pub threshold: f64,
    pub flagged: bool,
    /// Level where the maximum was attained.
    pub worst_level: usize,
    /// First level that enters the maximum.
    pub first_scored_level: usize,
    pub per_level_index: Vec<f64>,
}

/// Oscillation index of values sampled at increasing coordinates `nodes`.
pub fn level_index(nodes: &[f64], values: &[f64], lo: f64, hi: f64) -> f64 {
    let window: Vec<f64> = nodes
        .iter()
        .zip(values)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(_, u)| *u)
        .collect();
    let d: Vec<f64> = window.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let total: f64 = d.iter().map(|x| x.abs()).sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let alternating: f64 = d
        .windows(2)
        .filter(|p| p[0] * p[1] < 0.0)
        .map(|p| p[0].abs().min(p[1].abs()))
        .sum();
    alternating / total
}

pub fn analyze(history: &SolutionHistory, mesh: &Mesh1D, cfg: &StabilityConfig) -> Result<StabilityReport> {
    if history.is_empty() {
        return Err(Error::InvalidArgument("empty solution history".into()));
    }
    let h = mesh.max_element_size();
    let (lo, hi) = (cfg.center - cfg.half_width, cfg.center + cfg.half_width);
    let stride = mesh.order().nodes_per_element() - 1;
    let vertices = mesh.element_edges();
    let per_level_index: Vec<f64> = (0..history.len())
        .map(|l| {
            let u: Vec<f64> = history.full_state(l).into_iter().step_by(stride).collect();
            level_index(vertices, &u, lo, hi)
        })
        .collect();
    let tau_last = history.tau_levels[history.len() - 1];
    let first_scored_level = history
        .tau_levels
        .iter()
        .position(|&t| t >= cfg.scored_from * tau_last)
        .unwrap_or(history.len() - 1);
    let (worst_level, oscillation_index) = per_level_index
        .iter()
        .copied()
        .enumerate()
        .skip(first_scored_level)
        .fold((first_scored_level, 0.0), |best, (l, e)| if e > best.1 { (l, e) } else { best });
    Ok(StabilityReport {
        ratio_tau_h: cfg.d_tau / h,
        ratio_tau_h2: cfg.d_tau / (h * h),
        oscillation_index,
        threshold: cfg.threshold,
        flagged: oscillation_index > cfg.threshold,
        worst_level,
        first_scored_level,
        per_level_index,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RatioAdvisory {
    Ok { ratio_tau_h: f64, ratio_tau_h2: f64, notes: Vec<String> },
    Warn { ratio_tau_h: f64, ratio_tau_h2: f64, warnings: Vec<String>, notes: Vec<String> },
}

impl RatioAdvisory {
    pub fn is_ok(&self) -> bool {
        matches!(self, RatioAdvisory::Ok { .. })
    }

    pub fn ratios(&self) -> (f64, f64) {
        match self {
            RatioAdvisory::Ok { ratio_tau_h, ratio_tau_h2, .. }
            | RatioAdvisory::Warn { ratio_tau_h, ratio_tau_h2, .. } => (*ratio_tau_h, *ratio_tau_h2),
        }
    }

    pub fn notes(&self) -> &[String] {
        match self {
            RatioAdvisory::Ok { notes, .. } | RatioAdvisory::Warn { notes, .. } => notes,
        }
    }

    pub fn warnings(&self) -> &[String] {
        match self {
            RatioAdvisory::Ok { .. } => &[],
            RatioAdvisory::Warn { warnings, .. } => warnings,
        }
    }
}

pub fn ratio_check(h: f64, d_tau: f64) -> Result<RatioAdvisory> {
    if !(h > 0.0 && h.is_finite()) || !(d_tau > 0.0 && d_tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("h = {h} and d_tau = {d_tau} must be positive")));
    }
    let r1 = d_tau / h;
    let r2 = d_tau / (h * h);
    let mut warnings = Vec::new();
    let mut notes = Vec::new();
    if r1 >= 1.0 {
        warnings.push(format!("d_tau/h = {r1} >= 1"));
    }
    if r2 >= 1.0 {
        warnings.push(format!("d_tau/h^2 = {r2} >= 1"));
    }
    if r2 > 0.5 {
        notes.push(format!("d_tau/h^2 = {r2} is near the regime where oscillations were observed"));
    }
    Ok(if warnings.is_empty() {
        RatioAdvisory::Ok { ratio_tau_h: r1, ratio_tau_h2: r2, notes }
    } else {
        RatioAdvisory::Warn { ratio_tau_h: r1, ratio_tau_h2: r2, warnings, notes }
    })
}
