// SPDX-License-Identifier: Apache-2.0

//! Regularly varying initial densities with exponent `-(1+eta)`, `eta` in `(0, 1)`.

use std::f64::consts::E;

use crate::error::{domain, Result};
use crate::oracle::quadrature::{integrate_adaptive, QuadratureSpec};

/// A density on `[x_m, inf)` whose tail is regularly varying with exponent
/// `-(1 + eta)`.
pub trait InitialDensity: Send + Sync + std::fmt::Debug {
    fn eta(&self) -> f64;

    /// Left end of the support.
    fn x_m(&self) -> f64;

    fn density(&self, x: f64) -> f64;

    /// `P(X > x)`.
    fn tail_mass(&self, x: f64) -> f64;

    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.tail_mass(x)
    }

    /// Inverse-CDF draw from a uniform in `[0, 1)`.
    fn sample(&self, uniform: f64) -> Result<f64>;

    /// `u^{1-gamma} int_u^inf x^gamma f / int_0^u x f`, which tends to
    /// `(1 - eta) / (eta - gamma)` as `u -> inf`.
    fn truncated_moment_ratio(&self, u: f64, gamma: f64) -> Result<f64>;
}

fn check_eta(eta: f64, x_m: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return domain(format!("eta must lie in (0, 1), got {eta}"));
    }
    check_x_m(x_m)
}

fn check_x_m(x_m: f64) -> Result<()> {
    if !(x_m > 0.0 && x_m.is_finite()) {
        return domain(format!("x_m must be positive, got {x_m}"));
    }
    Ok(())
}

fn check_uniform(u: f64) -> Result<()> {
    if !(0.0..1.0).contains(&u) {
        return domain(format!("uniform must lie in [0, 1), got {u}"));
    }
    Ok(())
}

fn check_ratio_args(x_m: f64, eta: f64, u: f64, gamma: f64) -> Result<()> {
    if !(u > x_m) {
        return domain(format!("u must exceed x_m = {x_m}, got {u}"));
    }
    if !(eta < 1.0) {
        return domain(format!("moment ratio needs eta < 1, got {eta}"));
    }
    if !(gamma > 0.0 && gamma < eta) {
        return domain(format!("gamma must lie in (0, eta = {eta}), got {gamma}"));
    }
    Ok(())
}

/// Pareto density `eta x_m^eta x^{-(1+eta)}` on `[x_m, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoDensity {
    eta: f64,
    x_m: f64,
}

impl ParetoDensity {
    pub fn new(eta: f64, x_m: f64) -> Result<Self> {
        check_eta(eta, x_m)?;
        Ok(Self { eta, x_m })
    }

    /// Any tail index `eta > 0`. For `eta >= 1` the initial law has a
    /// finite mean and falls outside the heavy-tailed regime.
    pub fn exploratory(eta: f64, x_m: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return domain(format!("eta must be positive, got {eta}"));
        }
        check_x_m(x_m)?;
        Ok(Self { eta, x_m })
    }
}

impl InitialDensity for ParetoDensity {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn x_m(&self) -> f64 {
        self.x_m
    }

    fn density(&self, x: f64) -> f64 {
        if x < self.x_m {
            return 0.0;
        }
        self.eta / self.x_m * (self.x_m / x).powf(1.0 + self.eta)
    }

    fn tail_mass(&self, x: f64) -> f64 {
        if x <= self.x_m {
            return 1.0;
        }
        (self.x_m / x).powf(self.eta)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.x_m {
            return 0.0;
        }
        -(self.eta * (self.x_m / x).ln()).exp_m1()
    }

    fn sample(&self, uniform: f64) -> Result<f64> {
        check_uniform(uniform)?;
        Ok(self.x_m * (1.0 - uniform).powf(-1.0 / self.eta))
    }

    fn truncated_moment_ratio(&self, u: f64, gamma: f64) -> Result<f64> {
        check_ratio_args(self.x_m, self.eta, u, gamma)?;
        let eta = self.eta;
        // closed form: (1-eta)/(eta-gamma) / (1 - (x_m/u)^{1-eta})
        let shortfall = -((1.0 - eta) * (self.x_m / u).ln()).exp_m1();
        Ok((1.0 - eta) / (eta - gamma) / shortfall)
    }
}

/// `f(x) = ln(e + x) x^{-(1+eta)} / Z` on `[x_m, inf)`: Pareto with a
/// logarithmic slowly varying factor. Tail integrals reduce to
///
/// ```text
/// int_x^inf ln(e+t) t^{-1-eta} dt
///     = x^{-eta} (ln x / eta + 1/eta^2 + (1/eta) int_0^1 ln(1 + e w^{1/eta} / x) dw),
/// ```
///
/// whose remaining integrand is smooth on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogParetoDensity {
    eta: f64,
    x_m: f64,
    norm: f64,
}

fn quad_spec(tol: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: tol,
        ..Default::default()
    }
}

/// `int_x^inf ln(e+t) t^{-1-eta} dt`.
fn log_pareto_tail(eta: f64, x: f64) -> Result<f64> {
    let corr = integrate_adaptive(
        |w: f64| (E * w.powf(1.0 / eta) / x).ln_1p(),
        0.0,
        1.0,
        &quad_spec(1e-14),
    )?
    .value;
    Ok(x.powf(-eta) * (x.ln() / eta + 1.0 / (eta * eta) + corr / eta))
}

impl LogParetoDensity {
    pub fn new(eta: f64, x_m: f64) -> Result<Self> {
        check_eta(eta, x_m)?;
        let norm = log_pareto_tail(eta, x_m)?;
        Ok(Self { eta, x_m, norm })
    }

    /// Normalizing constant `Z`.
    pub fn norm(&self) -> f64 {
        self.norm
    }
}

impl InitialDensity for LogParetoDensity {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn x_m(&self) -> f64 {
        self.x_m
    }

    fn density(&self, x: f64) -> f64 {
        if x < self.x_m {
            return 0.0;
        }
        (E + x).ln() * x.powf(-1.0 - self.eta) / self.norm
    }

    fn tail_mass(&self, x: f64) -> f64 {
        if x <= self.x_m {
            return 1.0;
        }
        log_pareto_tail(self.eta, x)
            .map(|t| t / self.norm)
            .unwrap_or(f64::NAN)
    }

    fn sample(&self, uniform: f64) -> Result<f64> {
        check_uniform(uniform)?;
        if uniform == 0.0 {
            return Ok(self.x_m);
        }
        let target = 1.0 - uniform;
        // Newton on s = ln x, safeguarded by a bracket
        let (mut lo, mut hi) = (self.x_m.ln(), f64::INFINITY);
        let mut s = (self.x_m * target.powf(-1.0 / self.eta)).ln().max(lo);
        for _ in 0..100 {
            let x = s.exp();
            let resid = log_pareto_tail(self.eta, x)? / self.norm - target;
            if resid > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let slope = -self.density(x) * x;
            let mut next = s - resid / slope;
            if !(next > lo && next < hi) {
                next = if hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    lo + 1.0
                };
            }
            if (next - s).abs() < 1e-14 * s.abs().max(1.0) {
                return Ok(next.exp());
            }
            s = next;
        }
        Ok(s.exp())
    }

    fn truncated_moment_ratio(&self, u: f64, gamma: f64) -> Result<f64> {
        check_ratio_args(self.x_m, self.eta, u, gamma)?;
        let eta = self.eta;
        // int_u^inf x^gamma ln(e+x) x^{-1-eta} dx: same tail with eta - gamma
        let upper = log_pareto_tail(eta - gamma, u)?;
        // int_{x_m}^u ln(e+x) x^{-eta} dx =
        //   [x^{1-eta}(ln x/(1-eta) - 1/(1-eta)^2)] + int ln(1 + e/x) x^{-eta} dx
        let k = 1.0 - eta;
        let prim = |x: f64| x.powf(k) * (x.ln() / k - 1.0 / (k * k));
        let scale = u.powf(k) * u.ln().max(1.0);
        let corr = integrate_adaptive(
            |s: f64| (k * s).exp() * (E * (-s).exp()).ln_1p(),
            self.x_m.ln(),
            u.ln(),
            &quad_spec(1e-10 * scale),
        )?
        .value;
        let lower = prim(u) - prim(self.x_m) + corr;
        Ok(u.powf(1.0 - gamma) * upper / lower)
    }
}
