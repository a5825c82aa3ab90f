//! Market parameters, the Leland number and the log-price change of variables.
//!
//! The price `V(S, t)` of a European call under Leland's model solves
//!
//! ```text
//! V_t + ½σ²S²(1 + Le·sign(V_SS))V_SS + rSV_S − rV = 0,   V(S, T) = max(S − K, 0)
//! ```
//!
//! With `τ = ½σ²(T − t)`, `x = ln S + kτ` and `u = e^{kτ}V` the derivatives become
//!
//! ```text
//! V_t  = ½σ² e^{−kτ}(ku − ku_x − u_τ)
//! SV_S = e^{−kτ} u_x
//! S²V_SS = e^{−kτ}(u_xx − u_x)
//! ```
//!
//! Substituting and dividing by `½σ²e^{−kτ}` leaves
//! `u_τ = (1 + Le·sign)(u_xx − u_x) + (k − 2r/σ²)(u − u_x)`, so the drift constant is
//! fixed at `k = 2r/σ²`; that is the only choice which removes the `u` and `u_x`
//! terms and gives the constant-coefficient form
//!
//! ```text
//! u_τ = u_xx − u_x + Le·|u_xx − u_x|
//! ```
//!
//! The far-field data are `u = 0` at the left end and `u = e^x − K` at the right end,
//! undiscounted. The textbook far field would be `e^x − K·e^{kτ}`; at the default
//! truncation the difference never reaches the money region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Financial inputs of a single European call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Risk-free rate per year.
    pub rate: f64,
    /// Volatility per square-root year.
    pub sigma: f64,
    /// Expiration time in years.
    pub maturity: f64,
    /// Strike price.
    pub strike: f64,
    /// Round-trip transaction cost per currency unit.
    pub cost: f64,
    /// Rehedging interval in years.
    pub dt_hedge: f64,
}

impl MarketParams {
    pub fn new(rate: f64, sigma: f64, maturity: f64, strike: f64, cost: f64, dt_hedge: f64) -> Result<Self> {
        let p = MarketParams { rate, sigma, maturity, strike, cost, dt_hedge };
        p.validate()?;
        Ok(p)
    }

    /// The parameter set used throughout the numerical experiments:
    /// `r = 0.1, σ = 0.2, T = 1, K = 100, δt = 0.01` with round-trip cost `cost`.
    pub fn reference(cost: f64) -> Self {
        MarketParams { rate: 0.1, sigma: 0.2, maturity: 1.0, strike: 100.0, cost, dt_hedge: 0.01 }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.sigma > 0.0, "sigma must be positive"),
            (self.maturity > 0.0, "maturity must be positive"),
            (self.strike > 0.0, "strike must be positive"),
            (self.dt_hedge > 0.0, "rehedging interval must be positive"),
            (self.cost >= 0.0, "transaction cost must be nonnegative"),
            (self.rate >= 0.0, "rate must be nonnegative"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Domain(msg.to_string()));
            }
        }
        let le = self.leland_number()?;
        if !le.is_finite() {
            return Err(Error::Domain("Leland number is not finite".into()));
        }
        Ok(())
    }

    pub fn leland_number(&self) -> Result<f64> {
        leland_number(self.cost, self.sigma, self.dt_hedge)
    }

    pub fn transform(&self) -> TransformConstants {
        TransformConstants {
            k: 2.0 * self.rate / (self.sigma * self.sigma),
            tau_final: 0.5 * self.sigma * self.sigma * self.maturity,
        }
    }

    pub fn log_strike(&self) -> f64 {
        self.strike.ln()
    }
}

/// Constants of the change of variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformConstants {
    /// Dimensionless drift constant `2r/σ²`.
    pub k: f64,
    /// Transformed horizon `σ²T/2`.
    pub tau_final: f64,
}

/// `Le = sqrt(2/π)·c/(σ·sqrt(δt))`.
pub fn leland_number(cost: f64, sigma: f64, dt_hedge: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(dt_hedge > 0.0) {
        return Err(Error::Domain(format!("rehedging interval must be positive, got {dt_hedge}")));
    }
    Ok((2.0 / std::f64::consts::PI).sqrt() * cost / (sigma * dt_hedge.sqrt()))
}

/// Maps `(S, t)` to `(x, τ)`.
pub fn to_transformed(spot: f64, t: f64, p: &MarketParams) -> Result<(f64, f64)> {
    if !(spot > 0.0) {
        return Err(Error::Domain(format!("asset price must be positive, got {spot}")));
    }
    if !(0.0..=p.maturity).contains(&t) {
        return Err(Error::OutOfRange { t, maturity: p.maturity });
    }
    let tc = p.transform();
    let tau = 0.5 * p.sigma * p.sigma * (p.maturity - t);
    Ok((spot.ln() + tc.k * tau, tau))
}

/// Maps a transformed sample `(x, τ, u)` back to `(S, t, V)`.
pub fn from_transformed(x: f64, tau: f64, u: f64, p: &MarketParams) -> (f64, f64, f64) {
    let k = p.transform().k;
    let spot = (x - k * tau).exp();
    let t = p.maturity - 2.0 * tau / (p.sigma * p.sigma);
    let value = (-k * tau).exp() * u;
    (spot, t, value)
}

/// Transformed payoff `max(e^x − K, 0)`.
pub fn initial_profile(x: f64, strike: f64) -> f64 {
    (x.exp() - strike).max(0.0)
}

/// Dirichlet data `(u(−R), u(R)) = (0, e^R − K)`, independent of τ.
pub fn boundary_values(_tau: f64, half_width: f64, strike: f64) -> Result<(f64, f64)> {
    if !(half_width > strike.ln()) {
        return Err(Error::Config(format!(
            "domain half-width {half_width} must exceed ln K = {}",
            strike.ln()
        )));
    }
    Ok((0.0, half_width.exp() - strike))
}

/// Option values at one physical time, ordered by asset price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceCurve {
    pub t: f64,
    /// `(S, V)` pairs with strictly increasing `S`.
    pub samples: Vec<(f64, f64)>,
}

impl PriceCurve {
    pub fn spots(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    /// Samples with `S` inside `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().copied().filter(move |(s, _)| *s >= lo && *s <= hi)
    }

    /// Piecewise-linear interpolation in `S`; `None` outside the sampled range.
    pub fn value_at(&self, spot: f64) -> Option<f64> {
        let idx = self.samples.partition_point(|(s, _)| *s < spot);
        if idx == self.samples.len() {
            return None;
        }
        let (s1, v1) = self.samples[idx];
        if s1 == spot {
            return Some(v1);
        }
        if idx == 0 {
            return None;
        }
        let (s0, v0) = self.samples[idx - 1];
        let w = (spot - s0) / (s1 - s0);
        Some(v0 + w * (v1 - v0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn leland_number_reference_costs() {
        let le04 = leland_number(0.01, 0.2, 0.01).unwrap();
        assert_relative_eq!(le04, 0.398_942_280_401_432_6, max_relative = 1e-14);
        assert_eq!(leland_number(0.0, 0.2, 0.01).unwrap(), 0.0);
        let le12 = leland_number(0.03, 0.2, 0.01).unwrap();
        assert_relative_eq!(le12, 1.196_826_841_204_297_7, max_relative = 1e-14);
    }

    #[test]
    fn leland_number_rejects_bad_inputs() {
        assert!(matches!(leland_number(0.01, 0.0, 0.01), Err(Error::Domain(_))));
        assert!(matches!(leland_number(0.01, 0.2, 0.0), Err(Error::Domain(_))));
        assert!(MarketParams::new(0.1, 0.2, 1.0, 100.0, -0.01, 0.01).is_err());
    }

    #[test]
    fn transform_at_maturity() {
        let p = MarketParams::reference(0.0);
        let (x, tau) = to_transformed(p.strike, p.maturity, &p).unwrap();
        assert_eq!(tau, 0.0);
        assert_eq!(x, p.strike.ln());
    }

    #[test]
    fn transform_one_year_out() {
        let p = MarketParams::reference(0.0);
        let (x, tau) = to_transformed(100.0, 0.0, &p).unwrap();
        assert_relative_eq!(tau, 0.02, max_relative = 1e-15);
        assert_relative_eq!(x, 100f64.ln() + 0.1, max_relative = 1e-15);
        assert!(to_transformed(0.0, 0.0, &p).is_err());
        assert!(to_transformed(-1.0, 0.0, &p).is_err());
    }

    #[test]
    fn inverse_transform_examples() {
        let p = MarketParams::reference(0.0);
        let (s, t, v) = from_transformed(1.3, 0.0, 7.0, &p);
        assert_eq!((s, t, v), (1.3f64.exp(), 1.0, 7.0));

        let (s, t, v) = from_transformed(100f64.ln() + 0.1, 0.02, 0.0, &p);
        assert_relative_eq!(s, 100.0, max_relative = 1e-14);
        assert!(t.abs() < 1e-14);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn payoff_profile() {
        assert!(initial_profile(100f64.ln(), 100.0) < 1e-12);
        assert_relative_eq!(initial_profile(150f64.ln(), 100.0), 50.0, max_relative = 1e-13);
        assert_eq!(initial_profile(-50.0, 100.0), 0.0);
        assert_eq!(initial_profile(f64::NEG_INFINITY, 100.0), 0.0);
    }

    #[test]
    fn dirichlet_data() {
        let (l, r) = boundary_values(0.013, 6.0, 100.0).unwrap();
        assert_eq!(l, 0.0);
        assert_relative_eq!(r, 303.428_793_492_735_1, max_relative = 1e-13);
        assert_eq!(boundary_values(0.0, 6.0, 100.0), boundary_values(0.02, 6.0, 100.0));
        assert!(matches!(boundary_values(0.0, 4.0, 100.0), Err(Error::Config(_))));
    }

    #[test]
    fn curve_interpolation() {
        let c = PriceCurve { t: 0.0, samples: vec![(1.0, 0.0), (2.0, 1.0), (4.0, 5.0)] };
        assert_eq!(c.value_at(3.0), Some(3.0));
        assert_eq!(c.value_at(1.0), Some(0.0));
        assert_eq!(c.value_at(0.5), None);
        assert_eq!(c.value_at(4.5), None);
    }

    proptest! {
        #[test]
        fn leland_number_is_homogeneous_in_cost(c in 0.0f64..0.1, lambda in 0.0f64..20.0) {
            let base = leland_number(c, 0.2, 0.01).unwrap();
            let scaled = leland_number(lambda * c, 0.2, 0.01).unwrap();
            prop_assert!((scaled - lambda * base).abs() <= 1e-14 * scaled.abs().max(1e-300));
        }

        #[test]
        fn transform_round_trip(spot in 1e-3f64..1e4, t in 0.0f64..=1.0,
                                r in 0.0f64..0.2, sigma in 0.05f64..0.8) {
            let p = MarketParams::new(r, sigma, 1.0, 100.0, 0.01, 0.01).unwrap();
            let (x, tau) = to_transformed(spot, t, &p).unwrap();
            let (s2, t2, _) = from_transformed(x, tau, 0.0, &p);
            prop_assert!((s2 - spot).abs() <= 1e-12 * spot);
            prop_assert!((t2 - t).abs() <= 1e-12 * t.max(1.0));
        }

        #[test]
        fn payoff_is_monotone_and_nonnegative(a in -10.0f64..10.0, d in 0.0f64..3.0) {
            let lo = initial_profile(a, 100.0);
            let hi = initial_profile(a + d, 100.0);
            prop_assert!(lo >= 0.0);
            prop_assert!(hi >= lo);
        }
    }
}
