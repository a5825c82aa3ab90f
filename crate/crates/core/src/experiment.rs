//! Named experiment presets, flat key=value configuration and the run driver
//! that writes price curves, oracle comparisons and the stability report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{GlobalSystem, VRows};
use crate::error::{Error, Result};
use crate::mesh::{ElementOrder, Mesh1D};
use crate::model::{MarketParams, PriceCurve};
use crate::oracles::{bs_call_adjusted, bs_call_closed_form, fdm_solve, FdmConfig};
use crate::stability::{analyze, ratio_check, RatioAdvisory, StabilityConfig, StabilityReport, DEFAULT_OSCILLATION_THRESHOLD};
use crate::timestepper::{price_curve_at, run, MassVariant, SchemeConfig, SolutionHistory, DEFAULT_RANNACHER_STEPS};

/// Mesh, time step and scheme options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub order: ElementOrder,
    /// Target element size; adjusted so that `ln K` is a vertex unless
    /// `n_elements` is given.
    pub h: f64,
    /// Defaults to `ln K + 2`.
    pub half_width: Option<f64>,
    /// Uniform mesh with exactly this many elements on `[−R, R]`.
    pub n_elements: Option<usize>,
    pub d_tau: f64,
    pub theta: f64,
    pub n_rannacher: usize,
    pub variant: MassVariant,
    pub v_rows: VRows,
}

impl Discretization {
    pub fn new(order: ElementOrder, h: f64, d_tau: f64) -> Self {
        Self {
            order,
            h,
            half_width: None,
            n_elements: None,
            d_tau,
            theta: 0.5,
            n_rannacher: DEFAULT_RANNACHER_STEPS,
            variant: MassVariant::Version1,
            v_rows: VRows::Interior,
        }
    }

    pub fn build_mesh(&self, params: &MarketParams) -> Result<Mesh1D> {
        let log_k = params.log_strike();
        let half_width = self.half_width.unwrap_or(log_k + 2.0);
        match self.n_elements {
            Some(n) => Mesh1D::build_uniform(half_width, n, self.order),
            None => Mesh1D::build_aligned(log_k, self.h, half_width, self.order),
        }
    }

    pub fn scheme(&self, leland: f64) -> SchemeConfig {
        SchemeConfig { theta: self.theta, d_tau: self.d_tau, n_rannacher: self.n_rannacher, variant: self.variant, leland }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputOptions {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
    /// Physical times at which curves are written; empty means `t = 0`.
    pub sample_times: Vec<f64>,
    /// Also run the finite-difference and closed-form oracles.
    pub oracles: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), csv: true, json: true, sample_times: vec![], oracles: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub market: MarketParams,
    pub numerics: Discretization,
    pub outputs: OutputOptions,
    pub threshold: f64,
    pub preset: Option<String>,
}

impl RunConfig {
    pub fn new(market: MarketParams, numerics: Discretization) -> Self {
        Self { market, numerics, outputs: OutputOptions::default(), threshold: DEFAULT_OSCILLATION_THRESHOLD, preset: None }
    }

    pub fn sample_times(&self) -> Vec<f64> {
        if self.outputs.sample_times.is_empty() {
            vec![0.0]
        } else {
            self.outputs.sample_times.clone()
        }
    }

    /// Sets one configuration key. `preset` replaces everything except the
    /// output options.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        let m = &mut self.market;
        let d = &mut self.numerics;
        match key {
            "preset" => {
                let outputs = self.outputs.clone();
                *self = preset(value)?;
                self.outputs = outputs;
            }
            "rate" | "r" => m.rate = parse(key, value)?,
            "sigma" => m.sigma = parse(key, value)?,
            "maturity" | "T" => m.maturity = parse(key, value)?,
            "strike" | "K" => m.strike = parse(key, value)?,
            "cost" | "c" => m.cost = parse(key, value)?,
            "dt_hedge" => m.dt_hedge = parse(key, value)?,
            "order" => d.order = value.parse()?,
            "h" => d.h = parse(key, value)?,
            "half_width" | "R" => d.half_width = optional(key, value)?,
            "n_elements" | "n" => d.n_elements = optional(key, value)?,
            "d_tau" => d.d_tau = parse(key, value)?,
            "theta" => d.theta = parse(key, value)?,
            "n_rannacher" => d.n_rannacher = parse(key, value)?,
            "variant" => d.variant = value.parse()?,
            "v_rows" => d.v_rows = value.parse()?,
            "threshold" => self.threshold = parse(key, value)?,
            "times" => {
                self.outputs.sample_times = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse("times", s))
                    .collect::<Result<_>>()?
            }
            "oracles" => self.outputs.oracles = on_off(key, value)?,
            "csv" => self.outputs.csv = on_off(key, value)?,
            "json" => self.outputs.json = on_off(key, value)?,
            "out" => self.outputs.dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{assignment}`")))?;
        self.set(k, v)
    }

    /// Applies a flat config file: one `key = value` per line, `#` comments.
    /// A `preset` line is applied first wherever it appears.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let is_preset = |l: &str| l.split('=').next().map(str::trim) == Some("preset");
        for (n, line) in lines.iter().filter(|(_, l)| is_preset(l)).chain(lines.iter().filter(|(_, l)| !is_preset(l))) {
            self.apply_assignment(line).map_err(|e| Error::Config(format!("line {n}: {e}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        let leland = self.market.leland_number()?;
        self.numerics.scheme(leland).validate()?;
        if !(self.numerics.h > 0.0) || !self.numerics.h.is_finite() {
            return Err(Error::Config(format!("h must be positive, got {}", self.numerics.h)));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::Config(format!("threshold must be nonnegative, got {}", self.threshold)));
        }
        for &t in &self.sample_times() {
            if !(0.0..=self.market.maturity).contains(&t) {
                return Err(Error::OutOfRange { t, maturity: self.market.maturity });
            }
        }
        self.numerics.build_mesh(&self.market)?;
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        preset("le04-coarse").expect("built-in preset")
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value {
        "" | "auto" | "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn on_off(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` expects on or off, got `{value}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub cost: f64,
    pub order: ElementOrder,
    pub variant: MassVariant,
    pub h: f64,
    pub d_tau: f64,
    pub provenance: &'static str,
}

impl Preset {
    pub fn config(&self) -> RunConfig {
        let mut numerics = Discretization::new(self.order, self.h, self.d_tau);
        numerics.variant = self.variant;
        let mut cfg = RunConfig::new(MarketParams::reference(self.cost), numerics);
        cfg.preset = Some(self.name.to_string());
        cfg
    }
}

const fn p(
    name: &'static str,
    cost: f64,
    order: ElementOrder,
    variant: MassVariant,
    h: f64,
    d_tau: f64,
    provenance: &'static str,
) -> Preset {
    Preset { name, cost, order, variant, h, d_tau, provenance }
}

use ElementOrder::{P1, P2};
use MassVariant::{Version1 as V1, Version2 as V2};

/// Market data r = 0.1, σ = 0.2, T = 1, K = 100, δt = 0.01 throughout.
pub const PRESETS: &[Preset] = &[
    p("linear-p1", 0.0, P1, V1, 0.05, 0.00025, "no costs, closed-form reference"),
    p("linear-p2", 0.0, P2, V1, 0.05, 0.00025, "no costs, closed-form reference"),
    p("le04-coarse", 0.01, P1, V1, 0.1, 0.001, "coarse grid"),
    p("le04-fine", 0.01, P1, V1, 0.0125, 0.000125, "fine grid"),
    p("le04-p2-coarse", 0.01, P2, V1, 0.1, 0.001, "coarse grid, P2 version 1"),
    p("le04-p2-fine", 0.01, P2, V1, 0.0125, 0.000125, "fine grid, P2 version 1"),
    p("le04-p2v2-coarse", 0.01, P2, V2, 0.1, 0.001, "coarse grid, P2 version 2"),
    p("le04-p2v2-fine", 0.01, P2, V2, 0.0125, 0.000125, "fine grid, P2 version 2"),
    p("le08-coarse", 0.02, P1, V1, 0.1, 0.001, "coarse grid"),
    p("le08-fine", 0.02, P1, V1, 0.0125, 0.000125, "fine grid"),
    p("le08-p2-coarse", 0.02, P2, V1, 0.1, 0.001, "coarse grid, P2 version 1"),
    p("le08-p2-fine", 0.02, P2, V1, 0.0125, 0.000125, "fine grid, P2 version 1"),
    p("le08-p2v2-coarse", 0.02, P2, V2, 0.1, 0.001, "coarse grid, P2 version 2"),
    p("le08-p2v2-fine", 0.02, P2, V2, 0.0125, 0.000125, "fine grid, P2 version 2"),
    p("le12-p1-coarse", 0.03, P1, V1, 0.1, 0.001, "coarse grid"),
    p("le12-p1-unstable", 0.03, P1, V1, 0.0125, 0.000125, "fine grid: oscillates near t = 0"),
    p("le12-p1-stable", 0.03, P1, V1, 0.05, 0.00025, "coarse grid"),
    p("le12-p1-stable-fine", 0.03, P1, V1, 0.025, 0.0000625, "fine grid"),
    p("le12-p2-coarse", 0.03, P2, V1, 0.1, 0.001, "coarse grid"),
    p("le12-p2-unstable", 0.03, P2, V1, 0.0125, 0.000125, "fine grid: spurious oscillation"),
    p("le12-p2-stable", 0.03, P2, V1, 0.05, 0.00025, "coarse grid"),
    p("le12-p2-stable-fine", 0.03, P2, V1, 0.025, 0.0000625, "fine grid"),
];

pub fn list_presets() -> &'static [Preset] {
    PRESETS
}

pub fn preset(name: &str) -> Result<RunConfig> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(Preset::config)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}` (see --list-presets)")))
}

/// Aligned text table of every preset.
pub fn preset_table() -> String {
    let mut out = format!(
        "{:<22}{:>6}{:>6}{:>5}{:>10}{:>12}{:>9}{:>9}  {}\n",
        "name", "c", "Le", "el", "h", "d_tau", "dt/h", "dt/h^2", "provenance"
    );
    for p in PRESETS {
        let le = MarketParams::reference(p.cost).leland_number().unwrap_or(f64::NAN);
        let el = match (p.order, p.variant) {
            (P1, _) => "P1",
            (P2, V1) => "P2",
            (P2, V2) => "P2v2",
        };
        let _ = writeln!(
            out,
            "{:<22}{:>6}{:>6.2}{:>5}{:>10}{:>12}{:>9.4}{:>9.2}  {}",
            p.name,
            p.cost,
            le,
            el,
            p.h,
            p.d_tau,
            p.d_tau / p.h,
            p.d_tau / (p.h * p.h),
            p.provenance
        );
    }
    out
}

/// Everything computed for one configuration, before anything is written.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: RunConfig,
    pub leland: f64,
    pub mesh: Mesh1D,
    pub fem: SolutionHistory,
    pub fdm: Option<SolutionHistory>,
    pub curves: Vec<CurveTable>,
    pub stability: StabilityReport,
    pub advisory: RatioAdvisory,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub fem_seconds: f64,
    pub fdm_seconds: f64,
    pub total_seconds: f64,
}

/// Price curves of every source at one physical time, on the FEM nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub t: f64,
    pub spots: Vec<f64>,
    pub fem: Vec<f64>,
    pub fdm: Option<Vec<f64>>,
    pub bs_linear: Option<Vec<f64>>,
    pub bs_adjusted: Option<Vec<f64>>,
}

/// 15 significant digits, scientific.
pub fn format_value(x: f64) -> String {
    format!("{x:.14e}")
}

impl CurveTable {
    fn columns(&self, with_adjusted: bool) -> Vec<(&'static str, &[f64])> {
        let mut cols: Vec<(&'static str, &[f64])> = vec![("S", &self.spots), ("V_fem", &self.fem)];
        if let Some(v) = &self.fdm {
            cols.push(("V_fdm", v));
        }
        if let Some(v) = &self.bs_linear {
            cols.push(("V_bs_linear", v));
        }
        if with_adjusted {
            if let Some(v) = &self.bs_adjusted {
                cols.push(("V_bs_adjusted", v));
            }
        }
        cols
    }

    /// `S, V_fem[, V_fdm, V_bs_linear]`.
    pub fn curve_csv(&self) -> String {
        write_columns(&self.columns(false))
    }

    /// All sources plus the FEM-minus-oracle differences per node.
    pub fn comparison_csv(&self) -> String {
        let diff = |o: &Option<Vec<f64>>| -> Option<Vec<f64>> {
            o.as_ref().map(|v| self.fem.iter().zip(v).map(|(a, b)| a - b).collect())
        };
        let (d_fdm, d_lin, d_adj) = (diff(&self.fdm), diff(&self.bs_linear), diff(&self.bs_adjusted));
        let mut cols = self.columns(true);
        for (name, d) in [("fem_minus_fdm", &d_fdm), ("fem_minus_bs_linear", &d_lin), ("fem_minus_bs_adjusted", &d_adj)] {
            if let Some(d) = d {
                cols.push((name, d));
            }
        }
        write_columns(&cols)
    }
}

fn write_columns(cols: &[(&str, &[f64])]) -> String {
    let mut out = cols.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(",");
    out.push('\n');
    for i in 0..cols[0].1.len() {
        let row: Vec<String> = cols.iter().map(|(_, c)| format_value(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a CSV written by this module into its header and columns.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Io("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Io(format!("row {}: expected {} fields, got {}", n + 2, header.len(), fields.len())));
        }
        for (c, f) in cols.iter_mut().zip(fields) {
            c.push(f.parse().map_err(|_| Error::Io(format!("row {}: bad number `{f}`", n + 2)))?);
        }
    }
    Ok((header, cols))
}

/// File-name form of a sample time: `0`, `0.5`, `0.25`.
pub fn time_label(t: f64) -> String {
    format!("{t}")
}

/// Runs the FEM, the optional oracles and the stability analysis.
pub fn compute_experiment(cfg: &RunConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let params = cfg.market;
    let leland = params.leland_number()?;
    let mesh = cfg.numerics.build_mesh(&params)?;
    let scheme = cfg.numerics.scheme(leland);

    let sys = GlobalSystem::assemble_for(&mesh, &params)?.with_v_rows(cfg.numerics.v_rows);
    let fem = run(&sys, &mesh, &params, &scheme)?;
    let fem_seconds = start.elapsed().as_secs_f64();

    let (fdm, fdm_seconds) = if cfg.outputs.oracles {
        let t = Instant::now();
        let fdm_cfg = FdmConfig {
            n_space: mesh.n_nodes(),
            d_tau: scheme.d_tau,
            theta: scheme.theta,
            n_rannacher: scheme.n_rannacher,
        };
        (Some(fdm_solve(&params, mesh.half_width(), &fdm_cfg)?), t.elapsed().as_secs_f64())
    } else {
        (None, 0.0)
    };

    let mut curves = Vec::new();
    for t in cfg.sample_times() {
        let fem_curve = price_curve_at(&fem, t, &params)?;
        let spots: Vec<f64> = fem_curve.spots().collect();
        let fdm_values = fdm.as_ref().map(|h| price_curve_at(h, t, &params).map(|c| c.values().collect())).transpose()?;
        let tte = params.maturity - t;
        let oracle = |f: &dyn Fn(f64) -> f64| -> Option<Vec<f64>> {
            cfg.outputs.oracles.then(|| spots.iter().map(|&s| f(s)).collect())
        };
        let bs_linear = oracle(&|s| bs_call_closed_form(s, params.strike, params.rate, params.sigma, tte));
        let bs_adjusted = oracle(&|s| bs_call_adjusted(s, params.strike, params.rate, params.sigma, leland, tte));
        curves.push(CurveTable { t, fem: fem_curve.values().collect(), spots, fdm: fdm_values, bs_linear, bs_adjusted });
    }

    let mut stab_cfg = StabilityConfig::for_run(&scheme, &params);
    stab_cfg.threshold = cfg.threshold;
    let stability = analyze(&fem, &mesh, &stab_cfg)?;
    let advisory = ratio_check(mesh.max_element_size(), scheme.d_tau)?;
    let timing = Timing { fem_seconds, fdm_seconds, total_seconds: start.elapsed().as_secs_f64() };
    Ok(ExperimentResult { config: cfg.clone(), leland, mesh, fem, fdm, curves, stability, advisory, timing })
}

impl ExperimentResult {
    pub fn curve(&self, t: f64) -> Option<PriceCurve> {
        self.curves
            .iter()
            .find(|c| c.t == t)
            .map(|c| PriceCurve { t, samples: c.spots.iter().copied().zip(c.fem.iter().copied()).collect() })
    }

    pub fn report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "leland_number": self.leland,
            "mesh": {
                "order": self.mesh.order(),
                "h": self.mesh.max_element_size(),
                "half_width": self.mesh.half_width(),
                "n_elements": self.mesh.n_elements(),
                "n_nodes": self.mesh.n_nodes(),
            },
            "ratios": { "d_tau_over_h": self.stability.ratio_tau_h, "d_tau_over_h2": self.stability.ratio_tau_h2 },
            "advisory": self.advisory,
            "oscillation_index": self.stability.oscillation_index,
            "threshold": self.stability.threshold,
            "flagged": self.stability.flagged,
            "stability": self.stability,
            "timing": self.timing,
            "aborted": null,
        })
    }

    /// Writes the enabled artifacts; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> Result<()> {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        if self.config.outputs.csv {
            for c in &self.curves {
                put(format!("curve_t{}.csv", time_label(c.t)), c.curve_csv())?;
                if self.config.outputs.oracles {
                    put(format!("comparison_t{}.csv", time_label(c.t)), c.comparison_csv())?;
                }
            }
        }
        if self.config.outputs.json {
            let body = serde_json::to_string_pretty(&self.report_json()).map_err(|e| Error::Io(e.to_string()))?;
            put("stability.json".into(), body + "\n")?;
        }
        Ok(written)
    }
}

/// Computes and writes one experiment. On failure a `stability.json` with the
/// config and the error is still written when JSON output is enabled.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentResult> {
    match compute_experiment(cfg) {
        Ok(result) => {
            result.write(&cfg.outputs.dir)?;
            Ok(result)
        }
        Err(err) => {
            if cfg.outputs.json && !matches!(err, Error::Config(_) | Error::OutOfRange { .. }) {
                std::fs::create_dir_all(&cfg.outputs.dir)?;
                let body = serde_json::json!({ "config": cfg, "aborted": err.to_string() });
                let text = serde_json::to_string_pretty(&body).map_err(|e| Error::Io(e.to_string()))?;
                std::fs::write(cfg.outputs.dir.join("stability.json"), text + "\n")?;
            }
            Err(err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds_and_validates() {
        for p in PRESETS {
            let cfg = preset(p.name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(cfg.preset.as_deref(), Some(p.name));
        }
    }

    #[test]
    fn preset_names_are_unique() {
        let mut names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), PRESETS.len());
    }

    #[test]
    fn listed_examples_present() {
        let le08 = PRESETS.iter().find(|p| p.name == "le08-coarse").unwrap();
        assert_eq!(le08.cost, 0.02);
        let fine = PRESETS.iter().find(|p| p.name == "le12-p1-stable-fine").unwrap();
        assert_eq!((fine.h, fine.d_tau), (0.025, 0.0000625));
        assert!(preset_table().lines().count() > PRESETS.len());
    }

    #[test]
    fn unknown_preset_and_key_rejected() {
        assert!(preset("nope").is_err());
        let mut cfg = RunConfig::default();
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("h", "abc").is_err());
        assert!(cfg.apply_assignment("h").is_err());
        assert!(cfg.set("oracles", "maybe").is_err());
    }

    #[test]
    fn text_config_with_preset_and_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# comment\nh = 0.2   # trailing\npreset = le12-p1-stable\n\ntimes = 0, 0.5\n").unwrap();
        assert_eq!(cfg.preset.as_deref(), Some("le12-p1-stable"));
        assert_eq!(cfg.numerics.h, 0.2);
        assert_eq!(cfg.market.cost, 0.03);
        assert_eq!(cfg.sample_times(), vec![0.0, 0.5]);
        let err = cfg.apply_text("h = 1\nwhat = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn empty_times_default_to_zero() {
        let cfg = RunConfig::default();
        assert!(cfg.outputs.sample_times.is_empty());
        assert_eq!(cfg.sample_times(), vec![0.0]);
    }

    #[test]
    fn validation_catches_bad_numerics() {
        let mut cfg = RunConfig::default();
        cfg.set("times", "2").unwrap();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.set("theta", "1.5").unwrap();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.set("h", "-1").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn explicit_element_count_gives_uniform_mesh() {
        let mut cfg = RunConfig::default();
        cfg.set("n_elements", "40").unwrap();
        cfg.set("R", "6").unwrap();
        let mesh = cfg.numerics.build_mesh(&cfg.market).unwrap();
        assert_eq!(mesh.n_elements(), 40);
        assert_eq!(mesh.half_width(), 6.0);
    }

    #[test]
    fn csv_round_trip_at_printed_precision() {
        let table = CurveTable {
            t: 0.0,
            spots: vec![1.0e-3, 100.0, 7.389_056_098_930_65e2],
            fem: vec![0.0, 13.269_676_584_660_893, 638.9],
            fdm: Some(vec![1e-300, 13.2, -0.5]),
            bs_linear: Some(vec![0.0, 13.269_676_584_660_893, 647.9]),
            bs_adjusted: None,
        };
        let (header, cols) = read_csv(&table.curve_csv()).unwrap();
        assert_eq!(header, ["S", "V_fem", "V_fdm", "V_bs_linear"]);
        for (orig, back) in [&table.spots, &table.fem].into_iter().zip(&cols) {
            for (a, b) in orig.iter().zip(back) {
                assert!((a - b).abs() <= 1e-14 * a.abs(), "{a} vs {b}");
            }
        }
        let (h2, _) = read_csv(&table.comparison_csv()).unwrap();
        assert_eq!(h2, ["S", "V_fem", "V_fdm", "V_bs_linear", "fem_minus_fdm", "fem_minus_bs_linear"]);
    }

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(format_value(13.269_676_584_660_893), "1.32696765846609e1");
        assert_eq!(time_label(0.0), "0");
        assert_eq!(time_label(0.5), "0.5");
    }
}
