//! Refinement studies against the closed-form oracles.
//!
//! Levels share the half-width `R` and halve the element size, so every vertex
//! of one level is a vertex of the next and `ln K` stays on the mesh. The error
//! of a level is the largest nodal difference from the reference price over
//! `S ∈ [K/2, 2K]` at `t = 0`.

use serde::{Deserialize, Serialize};

use crate::assembly::GlobalSystem;
use crate::error::{Error, Result};
use crate::mesh::{aligned_layout, ElementOrder, Mesh1D};
use crate::model::{MarketParams, PriceCurve};
use crate::oracles::{bs_call_adjusted, bs_call_closed_form};
use crate::timestepper::{price_curve_at, run, MassVariant, SchemeConfig, DEFAULT_RANNACHER_STEPS};

/// How the time step follows the element size across levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "ratio", rename_all = "snake_case")]
pub enum RatioRule {
    /// `Δτ = c·h²`
    Parabolic(f64),
    /// `Δτ = c·h`
    Hyperbolic(f64),
}

impl RatioRule {
    pub fn d_tau(self, h: f64) -> f64 {
        match self {
            RatioRule::Parabolic(c) => c * h * h,
            RatioRule::Hyperbolic(c) => c * h,
        }
    }
}

/// Reference price the levels are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Black–Scholes with the market volatility.
    ClosedForm,
    /// Black–Scholes with `σ√(1 + Le)`.
    AdjustedVolatility,
}

impl Reference {
    pub fn price(self, spot: f64, params: &MarketParams, leland: f64, tte: f64) -> f64 {
        match self {
            Reference::ClosedForm => bs_call_closed_form(spot, params.strike, params.rate, params.sigma, tte),
            Reference::AdjustedVolatility => {
                bs_call_adjusted(spot, params.strike, params.rate, params.sigma, leland, tte)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyLevel {
    pub h: f64,
    pub d_tau: f64,
    pub n_elements: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub order: ElementOrder,
    pub reference: Reference,
    pub levels: Vec<StudyLevel>,
    /// `log2(e_l / e_{l+1})` for consecutive levels.
    pub observed_orders: Vec<f64>,
}

impl RefinementStudy {
    pub fn finest_order(&self) -> Option<f64> {
        self.observed_orders.last().copied()
    }

    /// Header plus one row per level; the order column is empty on the first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,d_tau,n_elements,error,observed_order\n");
        for (i, l) in self.levels.iter().enumerate() {
            let order = if i == 0 { String::new() } else { format!("{:.15e}", self.observed_orders[i - 1]) };
            out.push_str(&format!("{:.15e},{:.15e},{},{:.15e},{}\n", l.h, l.d_tau, l.n_elements, l.error, order));
        }
        out
    }
}

/// Largest `|a − b|` over samples of `a` with spot in `[lo, hi]`, comparing
/// against `b` at the same spot (samples are matched within a relative 1e-9).
pub fn max_curve_difference(a: &PriceCurve, b: &PriceCurve, lo: f64, hi: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut any = false;
    for (s, va) in a.window(lo, hi) {
        let vb = b
            .samples
            .iter()
            .find(|(sb, _)| (sb - s).abs() <= 1e-9 * s.abs().max(1.0))
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::InvalidArgument(format!("no matching sample at S = {s}")))?;
        worst = worst.max((va - vb).abs());
        any = true;
    }
    if !any {
        return Err(Error::InvalidArgument(format!("no samples in [{lo}, {hi}]")));
    }
    Ok(worst)
}

/// Largest nodal difference from `reference` over `S ∈ [lo, hi]`.
pub fn max_error_vs(curve: &PriceCurve, params: &MarketParams, reference: Reference, lo: f64, hi: f64) -> Result<f64> {
    let leland = params.leland_number()?;
    let tte = params.maturity - curve.t;
    let mut worst = 0.0f64;
    let mut any = false;
    for (s, v) in curve.window(lo, hi) {
        worst = worst.max((v - reference.price(s, params, leland, tte)).abs());
        any = true;
    }
    if !any {
        return Err(Error::InvalidArgument(format!("no samples in [{lo}, {hi}]")));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub order: ElementOrder,
    pub level_count: usize,
    pub base_h: f64,
    pub ratio_rule: RatioRule,
    pub reference: Reference,
    pub variant: MassVariant,
    pub n_rannacher: usize,
}

impl StudyConfig {
    pub fn new(order: ElementOrder, level_count: usize, base_h: f64, ratio_rule: RatioRule) -> Self {
        Self {
            order,
            level_count,
            base_h,
            ratio_rule,
            reference: Reference::AdjustedVolatility,
            variant: MassVariant::Version1,
            n_rannacher: DEFAULT_RANNACHER_STEPS,
        }
    }
}

/// Runs the levels and fits orders; levels are independent and may run in any order.
pub fn study(params: &MarketParams, cfg: &StudyConfig) -> Result<RefinementStudy> {
    if cfg.level_count < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 levels, got {}", cfg.level_count)));
    }
    params.validate()?;
    let leland = params.leland_number()?;
    let log_k = params.log_strike();
    let (half_width, n0) = aligned_layout(log_k, cfg.base_h, log_k + 2.0)?;
    let (lo, hi) = (0.5 * params.strike, 2.0 * params.strike);

    let mut levels = Vec::with_capacity(cfg.level_count);
    for l in 0..cfg.level_count {
        let n = n0 << l;
        let mesh = Mesh1D::build_uniform(half_width, n, cfg.order)?;
        let h = mesh.max_element_size();
        let d_tau = cfg.ratio_rule.d_tau(h);
        let sys = GlobalSystem::assemble_for(&mesh, params)?;
        let scheme = SchemeConfig { theta: 0.5, d_tau, n_rannacher: cfg.n_rannacher, variant: cfg.variant, leland };
        let history = run(&sys, &mesh, params, &scheme)?;
        let curve = price_curve_at(&history, 0.0, params)?;
        let error = max_error_vs(&curve, params, cfg.reference, lo, hi)?;
        levels.push(StudyLevel { h, d_tau, n_elements: n, error });
    }
    let observed_orders = levels.windows(2).map(|w| (w[0].error / w[1].error).log2()).collect();
    Ok(RefinementStudy { order: cfg.order, reference: cfg.reference, levels, observed_orders })
}
