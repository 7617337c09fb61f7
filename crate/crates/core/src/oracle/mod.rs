// SPDX-License-Identifier: Apache-2.0

//! Deterministic quadrature oracles for the killed process started from a
//! heavy-tailed density.
//!
//! Integrals against the initial density run in the variable `s = ln x`,
//! where the Pareto weight `f(x) x` is smooth and slowly varying. Every
//! truncation of an infinite range is either closed by an exact tail mass
//! (where the integrand tends to `f`) or bounded by tail mass times the
//! supremum of a Gaussian factor.

pub mod quadrature;

use std::f64::consts::SQRT_2;

use crate::eigen::Eigenfunction;
use crate::error::{domain, Result};
use crate::heavytail::InitialDensity;
use crate::kernels::{absorbed_gaussian, brownian_absorption, time_change, OUParams};
use quadrature::{integrate_breaks, Quadrature, QuadratureSpec};

/// Gaussian truncation radius in standard deviations.
const GAUSS_CUT: f64 = 10.0;
/// `erfc` argument beyond which survival is treated as certain (erfc < 1e-29).
const ERFC_CUT: f64 = 8.0;

fn positive_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time must be positive and finite, got {t}"));
    }
    Ok(())
}

/// `int_{x_lo}^{x_hi} g(x) dx` computed as `int g(e^s) e^s ds`, split at the
/// given interior points (clipped to the range).
fn integrate_log<G: Fn(f64) -> f64>(
    g: G,
    x_lo: f64,
    x_hi: f64,
    interior: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    if x_hi <= x_lo {
        return Ok(Quadrature {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let (s_lo, s_hi) = (x_lo.ln(), x_hi.ln());
    let mut breaks = vec![s_lo];
    let mut inner: Vec<f64> = interior
        .iter()
        .filter(|&&x| x > x_lo && x < x_hi)
        .map(|x| x.ln())
        .collect();
    inner.sort_by(f64::total_cmp);
    breaks.extend(inner);
    breaks.push(s_hi);
    integrate_breaks(
        |s| {
            let x = s.exp();
            g(x) * x
        },
        &breaks,
        spec,
    )
}

/// `P_f(T_0 > t) = int f(x) P_x(T_0 > t) dx`.
pub fn survival_oracle(
    params: OUParams,
    f: &dyn InitialDensity,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    positive_time(t)?;
    let h = time_change(params, t)?.h;
    let decay = (-params.a() * t).exp();
    // argument of erf is x / scale
    let scale = (2.0 * h).sqrt() / decay;
    let x_cut = ERFC_CUT * scale;
    let x_m = f.x_m();
    if x_cut <= x_m {
        return Ok(1.0);
    }
    let interior: Vec<f64> = [0.01, 0.1, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|k| k * scale)
        .collect();
    let head = integrate_log(
        |x| f.density(x) * (1.0 - brownian_absorption(decay * x, h)),
        x_m,
        x_cut,
        &interior,
        spec,
    )?;
    Ok(head.value + f.tail_mass(x_cut))
}

/// Conditioned density of `X_t` given `T_0 > t` on a grid, with the mass
/// beyond the last grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDensityTable {
    pub t: f64,
    pub y: Vec<f64>,
    pub density: Vec<f64>,
    /// `P(X_t > y_last | T_0 > t)`.
    pub tail_mass: f64,
    /// `P_f(T_0 > t)`.
    pub survival: f64,
}

impl ConditionalDensityTable {
    /// Trapezoid mass over `[0, y_last]` (density 0 at the origin) plus the
    /// exact tail beyond the grid.
    pub fn trapezoid_mass(&self) -> f64 {
        let mut mass = 0.5 * self.y[0] * self.density[0];
        for i in 1..self.y.len() {
            mass += 0.5 * (self.y[i] - self.y[i - 1]) * (self.density[i] + self.density[i - 1]);
        }
        mass + self.tail_mass
    }
}

fn gaussian_breaks(center: f64, sigma: f64, growth: f64) -> Vec<f64> {
    [-GAUSS_CUT, -3.0, 0.0, 3.0]
        .iter()
        .map(|k| (center + k * sigma) * growth)
        .filter(|&x| x > 0.0)
        .collect()
}

/// `int f(x) q(t, x, y) dx` for one `y > 0`.
fn joint_density(
    f: &dyn InitialDensity,
    decay: f64,
    h: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let sigma = h.sqrt();
    let growth = 1.0 / decay;
    let x_hi = (y + GAUSS_CUT * sigma) * growth;
    let interior = gaussian_breaks(y, sigma, growth);
    Ok(integrate_log(
        |x| f.density(x) * absorbed_gaussian(decay * x, y, h),
        f.x_m(),
        x_hi,
        &interior,
        spec,
    )?
    .value)
}

/// `P_f(X_t > y, T_0 > t)`.
fn joint_tail(
    f: &dyn InitialDensity,
    decay: f64,
    h: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let sigma = h.sqrt();
    let growth = 1.0 / decay;
    let x_hi = (y + GAUSS_CUT * sigma) * growth;
    let x_m = f.x_m();
    if x_hi <= x_m {
        return Ok(1.0);
    }
    let interior = gaussian_breaks(y, sigma, growth);
    let r = sigma * SQRT_2;
    let head = integrate_log(
        |x| {
            let m = decay * x;
            // P(N(m, h) > y) - P(N(-m, h) > y)
            let above = 0.5 * (libm::erfc((y - m) / r) - libm::erfc((y + m) / r));
            f.density(x) * above
        },
        x_m,
        x_hi,
        &interior,
        spec,
    )?;
    Ok(head.value + f.tail_mass(x_hi))
}

/// Density of the law of `X_t` given `T_0 > t`, started from `f`, on the
/// positive ascending grid `y_grid`.
pub fn conditional_density_oracle(
    params: OUParams,
    f: &dyn InitialDensity,
    t: f64,
    y_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<ConditionalDensityTable> {
    positive_time(t)?;
    if y_grid.is_empty() {
        return domain("empty y grid");
    }
    if y_grid[0] <= 0.0 || y_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("y grid must be positive and strictly ascending");
    }
    let h = time_change(params, t)?.h;
    let decay = (-params.a() * t).exp();
    let survival = survival_oracle(params, f, t, spec)?;
    let density = y_grid
        .iter()
        .map(|&y| joint_density(f, decay, h, y, spec).map(|v| v / survival))
        .collect::<Result<Vec<_>>>()?;
    let last = *y_grid.last().expect("nonempty grid");
    let tail_mass = joint_tail(f, decay, h, last, spec)? / survival;
    Ok(ConditionalDensityTable {
        t,
        y: y_grid.to_vec(),
        density,
        tail_mass,
        survival,
    })
}

/// `E_f(X_t^gamma | T_0 > t)` by quadrature, for `gamma` in `(0, eta)`.
pub fn conditional_moment_oracle(
    params: OUParams,
    f: &dyn InitialDensity,
    t: f64,
    gamma: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    positive_time(t)?;
    let eta = f.eta();
    if !(gamma > 0.0 && gamma < eta) {
        return domain(format!("gamma must lie in (0, eta = {eta}), got {gamma}"));
    }
    let h = time_change(params, t)?.h;
    let sigma = h.sqrt();
    let decay = (-params.a() * t).exp();
    let inner_spec = spec.with_tol(spec.abs_tol * 1e-2);
    let inner = |m: f64| -> f64 {
        let lo = (m - GAUSS_CUT * sigma).max(0.0);
        let hi = m + GAUSS_CUT * sigma;
        let mut breaks = vec![lo];
        if m > lo {
            breaks.push(m);
        }
        breaks.push(hi);
        integrate_breaks(
            |y| y.powf(gamma) * absorbed_gaussian(m, y, h),
            &breaks,
            &inner_spec,
        )
        .map(|q| q.value)
        .unwrap_or(f64::NAN)
    };
    // integrand decays like x^{gamma - eta} in the log variable
    let growth = 1.0 / decay;
    let s_extra = 40.0 / (eta - gamma);
    let x_hi = growth * sigma * s_extra.exp();
    let interior: Vec<f64> = [0.1, 1.0, 4.0].iter().map(|k| k * sigma * growth).collect();
    let num = integrate_log(
        |x| f.density(x) * inner(decay * x),
        f.x_m(),
        x_hi,
        &interior,
        spec,
    )?;
    if !num.value.is_finite() {
        return domain("conditional moment integrand failed to converge");
    }
    let survival = survival_oracle(params, f, t, spec)?;
    Ok(num.value / survival)
}

/// `Lambda(s, y) / (phi(y) e^{-lambda s})` at each grid point, where
/// `Lambda(s, y) = int q(s, x, y) phi_lambda(x) dx`.
pub fn eigen_relation_ratios(
    params: OUParams,
    lambda: f64,
    s: f64,
    y_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    positive_time(s)?;
    let eig = Eigenfunction::new(params, lambda, 1e-14)?;
    let h = time_change(params, s)?.h;
    let sigma = h.sqrt();
    let decay = (-params.a() * s).exp();
    let growth = 1.0 / decay;
    y_grid
        .iter()
        .map(|&y| {
            if !(y > 0.0) {
                return domain(format!("grid points must be positive, got {y}"));
            }
            let x_hi = (y + GAUSS_CUT * sigma) * growth;
            let mut breaks = vec![0.0];
            breaks.extend(gaussian_breaks(y, sigma, growth));
            breaks.push(x_hi);
            let lambda_sy = integrate_breaks(
                |x| {
                    if x > 0.0 {
                        absorbed_gaussian(decay * x, y, h) * eig.phi(x)
                    } else {
                        0.0
                    }
                },
                &breaks,
                spec,
            )?
            .value;
            Ok(lambda_sy / (eig.phi(y) * (-lambda * s).exp()))
        })
        .collect()
}

/// `max_y |Lambda(s, y) / phi(y) - e^{-lambda s}| / e^{-lambda s}`.
pub fn eigen_relation_residual(
    params: OUParams,
    lambda: f64,
    s: f64,
    y_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(eigen_relation_ratios(params, lambda, s, y_grid, spec)?
        .into_iter()
        .map(|r| (r - 1.0).abs())
        .fold(0.0, f64::max))
}

/// The two integrals of the boundary-layer ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLayer {
    /// `int_0^{ln(u)/c} f(x) P_{cx/u}(T^B > t) dx`
    pub inner: f64,
    /// `int_{ln(u)/c}^inf f(x) P_{cx/u}(T^B > t) dx`
    pub outer: f64,
}

impl BoundaryLayer {
    pub fn ratio(&self) -> f64 {
        self.inner / self.outer
    }
}

pub fn boundary_layer_terms(
    f: &dyn InitialDensity,
    u: f64,
    c: f64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<BoundaryLayer> {
    if !(u > std::f64::consts::E) {
        return domain(format!("u must exceed e, got {u}"));
    }
    if !(c > 0.0) {
        return domain(format!("c must be positive, got {c}"));
    }
    positive_time(t)?;
    let split = (u.ln() / c).max(f.x_m());
    let shrink = c / u;
    let scale = (2.0 * t).sqrt() / shrink;
    let integrand = |x: f64| f.density(x) * (1.0 - brownian_absorption(shrink * x, t));
    let interior: Vec<f64> = [0.1, 1.0, 3.0].iter().map(|k| k * scale).collect();
    let inner = integrate_log(integrand, f.x_m(), split, &interior, spec)?.value;
    let x_cut = (ERFC_CUT * scale).max(split);
    let outer = integrate_log(integrand, split, x_cut, &interior, spec)?.value + f.tail_mass(x_cut);
    Ok(BoundaryLayer { inner, outer })
}

pub fn boundary_layer_ratio(
    f: &dyn InitialDensity,
    u: f64,
    c: f64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(boundary_layer_terms(f, u, c, t, spec)?.ratio())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::build_qsd;
    use crate::heavytail::ParetoDensity;
    use crate::kernels::{brownian_survival, ou_survival};
    use approx::assert_relative_eq;

    fn tight() -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: 1e-12,
            ..Default::default()
        }
    }

    fn setup() -> (OUParams, ParetoDensity) {
        (
            OUParams::new(1.0).unwrap(),
            ParetoDensity::new(0.5, 1.0).unwrap(),
        )
    }

    #[test]
    fn survival_reference_values() {
        // mpmath quad of f(x) erf(e^{-t} x / sqrt(2 h(t)))
        let (par, f) = setup();
        let refs = [
            (1.0, 0.844736899255934384),
            (6.0, 0.0990441855539125678),
            (8.0, 0.0370866854313518894),
            (10.0, 0.0137314534544898175),
        ];
        for &(t, want) in &refs {
            let got = survival_oracle(par, &f, t, &tight()).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn survival_short_time_and_monotone() {
        let (par, f) = setup();
        assert_relative_eq!(
            survival_oracle(par, &f, 1e-4, &tight()).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        let mut last = 1.0;
        for i in 1..=24 {
            let s = survival_oracle(par, &f, 0.5 * i as f64, &tight()).unwrap();
            assert!(s < last);
            last = s;
        }
        assert!(survival_oracle(par, &f, 0.0, &tight()).is_err());
    }

    #[test]
    fn local_decay_slopes_approach_target() {
        let (par, f) = setup();
        let ln_s: Vec<f64> = (6..=14)
            .map(|t| survival_oracle(par, &f, t as f64, &tight()).unwrap().ln())
            .collect();
        let slopes: Vec<f64> = ln_s.windows(2).map(|w| w[0] - w[1]).collect();
        for w in slopes.windows(2) {
            assert!((w[1] - 0.5).abs() <= (w[0] - 0.5).abs() + 1e-3);
        }
        assert!((slopes.last().unwrap() - 0.5).abs() < 5e-3);
    }

    #[test]
    fn conditional_density_mass_and_origin() {
        let (par, f) = setup();
        let grid: Vec<f64> = (1..=8000).map(|i| i as f64 * 0.0025).collect();
        let table = conditional_density_oracle(par, &f, 3.0, &grid, &tight()).unwrap();
        assert!(
            (table.trapezoid_mass() - 1.0).abs() < 1e-6,
            "{}",
            table.trapezoid_mass()
        );
        let near_zero = conditional_density_oracle(par, &f, 3.0, &[1e-9], &tight()).unwrap();
        assert!(near_zero.density[0] < 1e-8);
    }

    #[test]
    fn survival_dominates_left_endpoint() {
        // one-point initial law approximated by a very steep Pareto near x_m
        let par = OUParams::new(1.0).unwrap();
        let f = ParetoDensity::new(0.999, 1.0).unwrap();
        let table = conditional_density_oracle(par, &f, 1.0, &[0.5, 1.0], &tight()).unwrap();
        assert!(table.density.iter().all(|&d| d > 0.0));
        assert!(
            survival_oracle(par, &f, 1.0, &tight()).unwrap() > ou_survival(par, 1.0, 1.0).unwrap()
        );
    }

    #[test]
    fn conditional_density_converges_to_qsd() {
        let (par, f) = setup();
        let nu = build_qsd(par, 0.5).unwrap();
        let grid: Vec<f64> = (1..=80).map(|i| i as f64 * 0.05).collect();
        let dist = |t: f64| {
            let table = conditional_density_oracle(par, &f, t, &grid, &tight()).unwrap();
            grid.iter()
                .zip(&table.density)
                .map(|(&y, &d)| (d - nu.density(y)).abs())
                .fold(0.0, f64::max)
        };
        let d4 = dist(4.0);
        let d8 = dist(8.0);
        assert!(d8 < d4, "d4={d4} d8={d8}");
    }

    #[test]
    fn eigen_relation_holds() {
        let par = OUParams::new(1.0).unwrap();
        for &lambda in &[1.0, 0.5] {
            let r = eigen_relation_residual(par, lambda, 1.0, &[0.5, 1.0, 2.0], &tight()).unwrap();
            assert!(r < 1e-6, "lambda {lambda}: {r}");
        }
        let r = eigen_relation_residual(par, 0.5, 1e-3, &[0.5, 1.0], &tight()).unwrap();
        assert!(r < 1e-6);
        assert!(eigen_relation_residual(par, 1.5, 1.0, &[1.0], &tight()).is_err());
    }

    #[test]
    fn boundary_layer_shrinks() {
        let (_, f) = setup();
        let r3 = boundary_layer_ratio(&f, 1e3, 1.0, 0.5, &tight()).unwrap();
        let r6 = boundary_layer_ratio(&f, 1e6, 1.0, 0.5, &tight()).unwrap();
        // mpmath references
        assert_relative_eq!(r3, 0.0297682238513736835, max_relative = 1e-6);
        assert_relative_eq!(r6, 0.00150181867375237408, max_relative = 1e-6);
        let terms = boundary_layer_terms(&f, 1e6, 1.0, 0.5, &tight()).unwrap();
        let u: f64 = 1e6;
        assert!(terms.inner <= brownian_survival(u.ln() / u, 0.5).unwrap());
        assert!(boundary_layer_ratio(&f, 2.0, 1.0, 0.5, &tight()).is_err());
    }
}
