//! Reference solutions: the closed-form Black–Scholes call, its adjusted-volatility
//! variant, and a finite-difference solver for the transformed equation.

use serde::{Deserialize, Serialize};

use crate::assembly::BandedMatrix;
use crate::error::{Error, Result};
use crate::mesh::{ElementOrder, Mesh1D};
use crate::model::{boundary_values, initial_profile, MarketParams};
use crate::timestepper::{SolutionHistory, DEFAULT_RANNACHER_STEPS};

/// Standard normal distribution function.
///
/// Hart's double-precision rational approximation (as popularised by G. West),
/// absolute error of order 1e-14 over the real line.
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs();
    let tail = if z > 37.0 {
        0.0
    } else {
        let e = (-0.5 * z * z).exp();
        if z < 7.071_067_811_865_47 {
            let num = horner(
                z,
                &[
                    3.526_249_659_989_11e-2,
                    0.700_383_064_443_688,
                    6.373_962_203_531_65,
                    33.912_866_078_383,
                    112.079_291_497_871,
                    221.213_596_169_931,
                    220.206_867_912_376,
                ],
            );
            let den = horner(
                z,
                &[
                    8.838_834_764_831_84e-2,
                    1.755_667_163_182_64,
                    16.064_177_579_207,
                    86.780_732_202_946_1,
                    296.564_248_779_674,
                    637.333_633_378_831,
                    793.826_512_519_948,
                    440.413_735_824_752,
                ],
            );
            e * num / den
        } else {
            let cf = z + 1.0 / (z + 2.0 / (z + 3.0 / (z + 4.0 / (z + 0.65))));
            e / cf / 2.506_628_274_631
        }
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Polynomial with coefficients from the highest degree down.
fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x + c)
}

/// European call under constant-coefficient Black–Scholes.
pub fn bs_call_closed_form(spot: f64, strike: f64, rate: f64, sigma: f64, time_to_expiry: f64) -> f64 {
    if spot <= 0.0 {
        return 0.0;
    }
    if time_to_expiry <= 0.0 {
        return (spot - strike).max(0.0);
    }
    let sd = sigma * time_to_expiry.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * time_to_expiry) / sd;
    let d2 = d1 - sd;
    spot * norm_cdf(d1) - strike * (-rate * time_to_expiry).exp() * norm_cdf(d2)
}

/// The closed form with `σ̃ = σ·sqrt(1 + Le)`, exact for Leland's model while the
/// price stays convex in `S`.
pub fn bs_call_adjusted(
    spot: f64,
    strike: f64,
    rate: f64,
    sigma: f64,
    leland: f64,
    time_to_expiry: f64,
) -> f64 {
    bs_call_closed_form(spot, strike, rate, sigma * (1.0 + leland).sqrt(), time_to_expiry)
}

/// Central-difference grid and time-stepping controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdmConfig {
    /// Grid points on `[−R, R]`, end points included.
    pub n_space: usize,
    pub d_tau: f64,
    pub theta: f64,
    pub n_rannacher: usize,
}

impl FdmConfig {
    pub fn new(n_space: usize, d_tau: f64, theta: f64) -> Self {
        FdmConfig { n_space, d_tau, theta, n_rannacher: DEFAULT_RANNACHER_STEPS }
    }

    /// Grid whose spacing is `mesh`'s vertex spacing.
    pub fn matching(mesh: &Mesh1D, d_tau: f64, theta: f64) -> Self {
        Self::new(mesh.n_elements() + 1, d_tau, theta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_space < 3 {
            return Err(Error::Config(format!("need at least 3 grid points, got {}", self.n_space)));
        }
        if !(self.d_tau > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.d_tau)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        Ok(())
    }
}

/// Solves `u_τ = u_xx − u_x + Le|u_xx − u_x|` with central differences, the
/// nonlinear term lagged by one level and the θ-scheme on the linear part.
pub fn fdm_solve(params: &MarketParams, half_width: f64, fdm: &FdmConfig) -> Result<SolutionHistory> {
    fdm.validate()?;
    params.validate()?;
    let leland = params.leland_number()?;
    let mesh = Mesh1D::build_uniform(half_width, fdm.n_space - 1, ElementOrder::P1)?;
    let (left, right) = boundary_values(0.0, half_width, params.strike)?;
    let h = 2.0 * half_width / (fdm.n_space - 1) as f64;
    let n = fdm.n_space - 2;

    // L u_i = (u_{i+1} − 2u_i + u_{i−1})/h² − (u_{i+1} − u_{i−1})/(2h)
    let lower = 1.0 / (h * h) + 0.5 / h;
    let diag = -2.0 / (h * h);
    let upper = 1.0 / (h * h) - 0.5 / h;
    let apply_l = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let um = if i == 0 { left } else { u[i - 1] };
                let up = if i + 1 == n { right } else { u[i + 1] };
                lower * um + diag * u[i] + upper * up
            })
            .collect()
    };
    let step = |u: &[f64], theta: f64, dt: f64| -> Result<Vec<f64>> {
        let lu = apply_l(u);
        let mut a = BandedMatrix::zeros(n, 1);
        for i in 0..n {
            a.set(i, i, 1.0 - theta * dt * diag);
            if i > 0 {
                a.set(i, i - 1, -theta * dt * lower);
            }
            if i + 1 < n {
                a.set(i, i + 1, -theta * dt * upper);
            }
        }
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| u[i] + (1.0 - theta) * dt * lu[i] + dt * leland * lu[i].abs())
            .collect();
        rhs[0] += theta * dt * lower * left;
        rhs[n - 1] += theta * dt * upper * right;
        a.solve(&rhs)
    };

    let tau_final = params.transform().tau_final;
    let n_steps = ((tau_final / fdm.d_tau) - 1e-9).ceil().max(1.0) as usize;
    let nodes = mesh.nodes();
    let u0: Vec<f64> = nodes[1..nodes.len() - 1].iter().map(|&x| initial_profile(x, params.strike)).collect();
    let mut history = SolutionHistory { tau_levels: vec![0.0], states: vec![u0], mesh: mesh.clone(), boundary_u: [left, right] };

    let mut levels: Vec<(f64, f64, f64)> = Vec::new(); // (theta, dt, tau)
    let first = fdm.d_tau.min(tau_final);
    let mut start = 0;
    if fdm.n_rannacher > 0 {
        let sub = first / fdm.n_rannacher as f64;
        for s in 1..=fdm.n_rannacher {
            let tau = if s == fdm.n_rannacher { first } else { s as f64 * sub };
            levels.push((1.0, sub, tau));
        }
        start = 1;
    }
    for k in start..n_steps {
        let tau_k = k as f64 * fdm.d_tau;
        if k + 1 == n_steps {
            levels.push((fdm.theta, tau_final - tau_k, tau_final));
        } else {
            levels.push((fdm.theta, fdm.d_tau, (k + 1) as f64 * fdm.d_tau));
        }
    }
    for (theta, dt, tau) in levels {
        let u = step(history.states.last().unwrap(), theta, dt)?;
        if let Some(node) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { level: history.len(), tau, node: node + 1 });
        }
        history.tau_levels.push(tau);
        history.states.push(u);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timestepper::price_curve_at;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn norm_cdf_matches_high_precision_values() {
        // 40-digit evaluations of ½erfc(−x/√2)
        let table = [
            (-38.0, 2.885_428_360_068_784_3e-316),
            (-20.0, 2.753_624_118_606_233_7e-89),
            (-8.0, 6.220_960_574_271_784_1e-16),
            (-7.5, 3.190_891_672_910_896_2e-14),
            (-5.0, 2.866_515_718_791_939_1e-7),
            (-3.2292, 6.206_852_368_944_874_4e-4),
            (-2.8182, 2.414_685_880_103_488_0e-3),
            (-1.0, 0.158_655_253_931_457_05),
            (-0.407, 0.342_003_994_097_300_55),
            (0.0, 0.5),
            (0.3, 0.617_911_422_188_952_63),
            (1.5, 0.933_192_798_731_141_93),
            (2.8182, 0.997_585_314_119_896_51),
            (6.0, 0.999_999_999_013_412_35),
            (7.2, 0.999_999_999_999_698_94),
            (9.0, 1.0),
        ];
        for (x, want) in table {
            let got = norm_cdf(x);
            assert!((got - want).abs() <= 1e-15, "x = {x}: {got:e} vs {want:e}");
            // absolute accuracy is the contract; relative drifts to ~1e-8 in the far tail
            if want < 1e-3 && x > -37.0 {
                assert!((got - want).abs() <= 1e-7 * want, "x = {x}: relative");
            }
        }
    }

    #[test]
    fn norm_cdf_agrees_with_statrs() {
        // statrs is only good to about 1e-11 here, so this is a coarse cross-check
        let n = Normal::new(0.0, 1.0).unwrap();
        let mut x = -40.0;
        while x <= 40.0 {
            let d = (norm_cdf(x) - n.cdf(x)).abs();
            assert!(d < 1e-10, "x = {x}: {d:e}");
            x += 0.0137;
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(bs_call_closed_form(0.0, 100.0, 0.1, 0.2, 1.0), 0.0);
        assert_eq!(bs_call_closed_form(130.0, 100.0, 0.1, 0.2, 0.0), 30.0);
        // d1 = 0.6, d2 = 0.4: 100·N(0.6) − 100e^{−0.1}·N(0.4)
        let v = bs_call_closed_form(100.0, 100.0, 0.1, 0.2, 1.0);
        assert!((v - 13.269_676_584_660_893).abs() < 1e-10, "{v}");
        assert!((v - 13.2697).abs() < 1e-4);
    }

    #[test]
    fn adjusted_volatility_is_monotone() {
        for s in [80.0, 95.0, 100.0, 110.0, 130.0] {
            let base = bs_call_adjusted(s, 100.0, 0.1, 0.2, 0.0, 1.0);
            assert_eq!(base, bs_call_closed_form(s, 100.0, 0.1, 0.2, 1.0));
            let a = bs_call_adjusted(s, 100.0, 0.1, 0.2, 0.4, 1.0);
            let b = bs_call_adjusted(s, 100.0, 0.1, 0.2, 0.8, 1.0);
            assert!(a > base);
            assert!(b >= a);
        }
    }

    #[test]
    fn closed_form_shape() {
        let spots: Vec<f64> = (1..400).map(|i| i as f64 * 0.75).collect();
        let v: Vec<f64> = spots.iter().map(|&s| bs_call_closed_form(s, 100.0, 0.1, 0.2, 1.0)).collect();
        for w in v.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in v.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
        }
        for s in [60.0, 100.0, 150.0] {
            let mut prev = 0.0;
            for sig in [0.05, 0.1, 0.2, 0.4] {
                let c = bs_call_closed_form(s, 100.0, 0.1, sig, 1.0);
                assert!(c >= prev);
                prev = c;
            }
            let mut prev = 0.0;
            for t in [0.0, 0.1, 0.5, 1.0, 2.0] {
                let c = bs_call_closed_form(s, 100.0, 0.1, 0.2, t);
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn fdm_config_validation() {
        let p = MarketParams::reference(0.0);
        assert!(fdm_solve(&p, 6.6, &FdmConfig::new(2, 0.001, 0.5)).is_err());
        assert!(fdm_solve(&p, 6.6, &FdmConfig::new(100, 0.0, 0.5)).is_err());
    }

    #[test]
    fn fdm_linear_case_matches_closed_form() {
        let p = MarketParams::reference(0.0);
        let lk = p.log_strike();
        let mesh = Mesh1D::build_aligned(lk, 0.025, lk + 2.0, ElementOrder::P1).unwrap();
        let fdm = FdmConfig::matching(&mesh, 0.0000625, 0.5);
        let h = fdm_solve(&p, mesh.half_width(), &fdm).unwrap();
        let curve = price_curve_at(&h, 0.0, &p).unwrap();
        let err = curve
            .window(50.0, 200.0)
            .map(|(s, v)| (v - bs_call_closed_form(s, 100.0, 0.1, 0.2, 1.0)).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.25, "max error {err}");
    }
}
