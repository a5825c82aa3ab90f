//! θ-scheme time integration of the semi-discrete system with a lagged `|v|`.
//!
//! With `A = M − θΔτ(K − P)` each step solves
//!
//! ```text
//! A uⁿ⁺¹ = M uⁿ + (1−θ)Δτ Fⁿ + θΔτ·Le·M̄|vⁿ| − b_Mⁿ⁺¹ + b_Mⁿ + θΔτ(b_Kⁿ⁺¹ − b_Pⁿ⁺¹)
//! ```
//!
//! i.e. the implicit nonlinear term uses `|vⁿ⁺¹| ≈ |vⁿ|`. The first θ-step can be
//! replaced by `n_rannacher` backward-Euler substeps of size `Δτ/n_rannacher`.

use serde::{Deserialize, Serialize};

use crate::assembly::{BandedLu, BandedMatrix, GlobalSystem};
use crate::error::{Error, Result};
use crate::mesh::Mesh1D;
use crate::model::{from_transformed, initial_profile, MarketParams, PriceCurve};

/// Which matrix multiplies the nodal `|v|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MassVariant {
    /// The split-basis abs-mass matrix `M̄`.
    Version1,
    /// `M̄` replaced by the mass matrix `M`.
    Version2,
}

impl std::str::FromStr for MassVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "v1" | "version1" => Ok(MassVariant::Version1),
            "2" | "v2" | "version2" => Ok(MassVariant::Version2),
            other => Err(Error::Config(format!("unknown mass variant '{other}'"))),
        }
    }
}

pub const DEFAULT_RANNACHER_STEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub theta: f64,
    pub d_tau: f64,
    pub n_rannacher: usize,
    pub variant: MassVariant,
    pub leland: f64,
}

impl SchemeConfig {
    /// Crank–Nicolson with the default Rannacher startup.
    pub fn crank_nicolson(d_tau: f64, leland: f64) -> Self {
        SchemeConfig {
            theta: 0.5,
            d_tau,
            n_rannacher: DEFAULT_RANNACHER_STEPS,
            variant: MassVariant::Version1,
            leland,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.d_tau > 0.0) || !self.d_tau.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {}", self.d_tau)));
        }
        if !(self.leland >= 0.0) || !self.leland.is_finite() {
            return Err(Error::Config(format!("Leland number must be nonnegative, got {}", self.leland)));
        }
        Ok(())
    }
}

fn abs_mass_for(sys: &GlobalSystem, variant: MassVariant) -> &BandedMatrix {
    match variant {
        MassVariant::Version1 => &sys.full.abs_mass,
        MassVariant::Version2 => &sys.full.mass,
    }
}

fn system_matrix(sys: &GlobalSystem, theta: f64, d_tau: f64) -> Result<BandedMatrix> {
    let c = theta * d_tau;
    BandedMatrix::linear_combination(&[
        (1.0, &sys.interior.mass),
        (-c, &sys.interior.stiffness),
        (c, &sys.interior.convection),
    ])
}

/// Right-hand side of the linearized θ-step.
fn step_rhs(
    sys: &GlobalSystem,
    u_n: &[f64],
    leland: f64,
    variant: MassVariant,
    theta: f64,
    d_tau: f64,
) -> Result<Vec<f64>> {
    let abs_mass = abs_mass_for(sys, variant);
    let v = sys.compute_v(u_n)?;
    let f = sys.forcing(&v, leland, abs_mass)?;
    let abs_v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let mbar_abs_v = abs_mass.apply(&abs_v)?;
    let mu = sys.interior.mass.apply(u_n)?;

    // boundary data are τ-independent, so both levels share one set of vectors
    let b_now = &sys.boundary;
    let b_next = &sys.boundary;

    Ok((0..u_n.len())
        .map(|i| {
            mu[i] + (1.0 - theta) * d_tau * f[i] + theta * d_tau * leland * mbar_abs_v[i + 1]
                - b_next.b_mass[i]
                + b_now.b_mass[i]
                + theta * d_tau * (b_next.b_stiffness[i] - b_next.b_convection[i])
        })
        .collect())
}

/// One linearized θ-step from `u_n` (interior values).
pub fn step(
    sys: &GlobalSystem,
    u_n: &[f64],
    cfg: &SchemeConfig,
    theta: f64,
    d_tau: f64,
) -> Result<Vec<f64>> {
    if !(d_tau > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {d_tau}")));
    }
    let rhs = step_rhs(sys, u_n, cfg.leland, cfg.variant, theta, d_tau)?;
    system_matrix(sys, theta, d_tau)?.solve(&rhs)
}

/// Reuses the factorization of `A` across steps of equal size.
struct Stepper<'a> {
    sys: &'a GlobalSystem,
    cfg: SchemeConfig,
    cached: Option<(f64, f64, BandedLu)>,
}

impl<'a> Stepper<'a> {
    fn advance(&mut self, u_n: &[f64], theta: f64, d_tau: f64) -> Result<Vec<f64>> {
        let stale = match &self.cached {
            Some((t, d, _)) => *t != theta || *d != d_tau,
            None => true,
        };
        if stale {
            let lu = system_matrix(self.sys, theta, d_tau)?.factorize()?;
            self.cached = Some((theta, d_tau, lu));
        }
        let rhs = step_rhs(self.sys, u_n, self.cfg.leland, self.cfg.variant, theta, d_tau)?;
        let (_, _, lu) = self.cached.as_ref().expect("factorization cached above");
        lu.solve(&rhs)
    }
}

/// Nodal values per transformed time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionHistory {
    pub tau_levels: Vec<f64>,
    /// Interior nodal values, one vector per level.
    pub states: Vec<Vec<f64>>,
    pub mesh: Mesh1D,
    pub boundary_u: [f64; 2],
}

impl SolutionHistory {
    pub fn len(&self) -> usize {
        self.tau_levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_levels.is_empty()
    }

    /// Level `i` with boundary values attached.
    pub fn full_state(&self, level: usize) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.states[level].len() + 2);
        u.push(self.boundary_u[0]);
        u.extend_from_slice(&self.states[level]);
        u.push(self.boundary_u[1]);
        u
    }

    /// All-node values at `tau`, linearly interpolated between stored levels.
    pub fn full_state_at_tau(&self, tau: f64) -> Result<Vec<f64>> {
        let last = *self.tau_levels.last().ok_or_else(|| Error::InvalidArgument("empty history".into()))?;
        let slack = 1e-12 * last.max(1e-300);
        if tau < -slack || tau > last + slack {
            return Err(Error::InvalidArgument(format!("tau {tau} outside [0, {last}]")));
        }
        let idx = self.tau_levels.partition_point(|&t| t < tau);
        if idx == 0 {
            return Ok(self.full_state(0));
        }
        if idx >= self.tau_levels.len() {
            return Ok(self.full_state(self.tau_levels.len() - 1));
        }
        let (t0, t1) = (self.tau_levels[idx - 1], self.tau_levels[idx]);
        let w = (tau - t0) / (t1 - t0);
        let (a, b) = (self.full_state(idx - 1), self.full_state(idx));
        Ok(a.iter().zip(&b).map(|(x, y)| (1.0 - w) * x + w * y).collect())
    }
}

/// Integrates from the payoff at `τ = 0` to `τ_final = σ²T/2`.
pub fn run(sys: &GlobalSystem, mesh: &Mesh1D, params: &MarketParams, cfg: &SchemeConfig) -> Result<SolutionHistory> {
    cfg.validate()?;
    if sys.n_nodes() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch { expected: mesh.n_nodes(), got: sys.n_nodes() });
    }
    let tau_final = params.transform().tau_final;
    if tau_final / cfg.d_tau < 1.0 - 1e-9 {
        return Err(Error::Config(format!(
            "time step {} exceeds the horizon {tau_final}",
            cfg.d_tau
        )));
    }
    let n_steps = ((tau_final / cfg.d_tau) - 1e-9).ceil() as usize;

    let nodes = mesh.nodes();
    let u0: Vec<f64> =
        nodes[1..nodes.len() - 1].iter().map(|&x| initial_profile(x, params.strike)).collect();

    let mut history = SolutionHistory {
        tau_levels: vec![0.0],
        states: vec![u0],
        mesh: mesh.clone(),
        boundary_u: sys.boundary_u,
    };
    let mut stepper = Stepper { sys, cfg: *cfg, cached: None };
    let push = |history: &mut SolutionHistory, tau: f64, u: Vec<f64>| -> Result<()> {
        if let Some(node) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { level: history.len(), tau, node: node + 1 });
        }
        history.tau_levels.push(tau);
        history.states.push(u);
        Ok(())
    };

    let mut start = 0;
    if cfg.n_rannacher > 0 {
        let first = cfg.d_tau.min(tau_final);
        let sub = first / cfg.n_rannacher as f64;
        for s in 1..=cfg.n_rannacher {
            let u = stepper.advance(history.states.last().unwrap(), 1.0, sub)?;
            let tau = if s == cfg.n_rannacher { first } else { s as f64 * sub };
            push(&mut history, tau, u)?;
        }
        start = 1;
    }
    for n in start..n_steps {
        let tau_n = n as f64 * cfg.d_tau;
        let (d_tau, tau) = if n + 1 == n_steps {
            (tau_final - tau_n, tau_final)
        } else {
            (cfg.d_tau, (n + 1) as f64 * cfg.d_tau)
        };
        let u = stepper.advance(history.states.last().unwrap(), cfg.theta, d_tau)?;
        push(&mut history, tau, u)?;
    }
    Ok(history)
}

/// `(S, V)` on every node at physical time `t`.
pub fn price_curve_at(history: &SolutionHistory, t: f64, params: &MarketParams) -> Result<PriceCurve> {
    if !(0.0..=params.maturity).contains(&t) {
        return Err(Error::OutOfRange { t, maturity: params.maturity });
    }
    let tau = 0.5 * params.sigma * params.sigma * (params.maturity - t);
    let u = history.full_state_at_tau(tau)?;
    let samples = history
        .mesh
        .nodes()
        .iter()
        .zip(&u)
        .map(|(&x, &u)| {
            let (s, _, v) = from_transformed(x, tau, u, params);
            (s, v)
        })
        .collect();
    Ok(PriceCurve { t, samples })
}
