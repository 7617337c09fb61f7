// SPDX-License-Identifier: Apache-2.0

//! Closed-form transition machinery for the Ornstein-Uhlenbeck process
//! `dX = dB - a X dt` killed at zero.
//!
//! Everything here reduces to Brownian motion through the time changes
//! `h(t) = (1 - e^{-2at}) / 2a` and `g(t) = (e^{2at} - 1) / 2a`: the law of
//! `X_t` started at `x` is the law of `B_{h(t)}` started at `e^{-at} x`, and
//! the event `{T_0 > t}` has the probability of a Brownian motion started at
//! `e^{-at} x` avoiding zero up to time `h(t)`.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Drift rate of the Ornstein-Uhlenbeck process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUParams {
    a: f64,
}

impl OUParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return domain(format!("drift rate must be positive and finite, got {a}"));
        }
        Ok(Self { a })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Bottom of the spectrum of the killed generator. The minimal
    /// quasi-stationary distribution has this decay rate.
    #[inline]
    pub fn minimal_qsd_rate(&self) -> f64 {
        self.a
    }
}

/// Variance functions of the Brownian representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeChange {
    /// `(1 - e^{-2at}) / 2a`, the variance of `X_t` given `X_0`.
    pub h: f64,
    /// `(e^{2at} - 1) / 2a`, the Brownian clock of `e^{at} X_t`.
    pub g: f64,
}

pub fn time_change(params: OUParams, t: f64) -> Result<TimeChange> {
    if !t.is_finite() || t < 0.0 {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    let two_a = 2.0 * params.a;
    Ok(TimeChange {
        h: -(-two_a * t).exp_m1() / two_a,
        g: (two_a * t).exp_m1() / two_a,
    })
}

fn positive_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return domain(format!("time must be positive and finite, got {t}"));
    }
    Ok(())
}

#[inline]
fn gaussian(z: f64, var: f64) -> f64 {
    (-z * z / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Free transition density `p(t, x, y)`: Gaussian in `y` with mean
/// `e^{-at} x` and variance `h(t)`.
pub fn transition_density(params: OUParams, t: f64, x: f64, y: f64) -> Result<f64> {
    positive_time(t)?;
    let h = time_change(params, t)?.h;
    let mean = (-params.a * t).exp() * x;
    Ok(gaussian(y - mean, h))
}

/// Density of the killed process, `q(t, x, y) = p(t, x, y) - p(t, x, -y)`.
///
/// Returns 0 when `x` or `y` is exactly zero (the continuous extension).
pub fn absorbed_density(params: OUParams, t: f64, x: f64, y: f64) -> Result<f64> {
    positive_time(t)?;
    if !(x >= 0.0 && y >= 0.0) || !x.is_finite() || !y.is_finite() {
        return domain(format!(
            "absorbed density needs x, y >= 0, got x={x}, y={y}"
        ));
    }
    if x == 0.0 || y == 0.0 {
        return Ok(0.0);
    }
    let h = time_change(params, t)?.h;
    let m = (-params.a * t).exp() * x;
    Ok(absorbed_gaussian(m, y, h))
}

/// `phi_h(y - m) - phi_h(y + m) = phi_h(y - m) (1 - e^{-2my/h})` for
/// `m, y > 0`; the factor form never exceeds `phi_h(y - m)`.
#[inline]
pub(crate) fn absorbed_gaussian(m: f64, y: f64, h: f64) -> f64 {
    gaussian(y - m, h) * -(-2.0 * m * y / h).exp_m1()
}

/// `P_x(T_0^B > t) = erf(x / sqrt(2t))` for Brownian motion started at `x >= 0`.
pub fn brownian_survival(x: f64, t: f64) -> Result<f64> {
    positive_time(t)?;
    if !(x >= 0.0) {
        return domain(format!("starting point must be nonnegative, got {x}"));
    }
    Ok(libm::erf(x / (2.0 * t).sqrt()))
}

/// Complement of [`brownian_survival`], accurate when survival is close to 1.
pub(crate) fn brownian_absorption(x: f64, t: f64) -> f64 {
    libm::erfc(x / (2.0 * t).sqrt())
}

/// `P_x(T_0^X > t) = P_{e^{-at} x}(T_0^B > h(t))`.
pub fn ou_survival(params: OUParams, x: f64, t: f64) -> Result<f64> {
    positive_time(t)?;
    let h = time_change(params, t)?.h;
    brownian_survival((-params.a * t).exp() * x, h)
}
