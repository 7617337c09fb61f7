// SPDX-License-Identifier: Apache-2.0

//! Invariant suite behind `ouqsd verify`.

use ouqsd_core::{
    brownian_survival, build_qsd, eigen_relation_residual, first_sign_change,
    spectral_coefficients, Eigenfunction, InitialDensity, OUParams, ParetoDensity, QuadratureSpec,
    Result,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn eigen_relation(tol: f64, spec: &QuadratureSpec) -> Result<Check> {
    let par = OUParams::new(1.0)?;
    let mut worst: f64 = 0.0;
    for &lambda in &[0.3, 0.5, 1.0] {
        for &s in &[0.5, 1.0, 2.0] {
            worst = worst.max(eigen_relation_residual(
                par,
                lambda,
                s,
                &[0.5, 1.0, 2.0],
                spec,
            )?);
        }
    }
    Ok(check(
        "eigen_relation",
        worst <= tol,
        format!("max relative residual {worst:.3e} (tol {tol:.1e})"),
    ))
}

fn ground_state_closed_form() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for &a in &[0.5, 1.0, 2.0] {
        let nu = build_qsd(OUParams::new(a)?, a)?;
        for i in 0..=600 {
            let y = i as f64 * 0.01;
            worst = worst.max((nu.density(y) - 2.0 * a * y * (-a * y * y).exp()).abs());
        }
    }
    Ok(check(
        "ground_state_density",
        worst <= 1e-8,
        format!("sup error {worst:.3e}"),
    ))
}

fn sign_dichotomy() -> Result<Check> {
    let par = OUParams::new(1.0)?;
    let mut ok = true;
    let mut zeros = Vec::new();
    for &lambda in &[0.25, 0.5, 1.0, 1.2, 1.5, 2.5] {
        let series = spectral_coefficients(par, lambda, 1e-14, 10.0)?;
        let z = first_sign_change(&series, 10.0)?;
        ok &= z.is_some() == (lambda > 1.0);
        if let Some(z) = z {
            zeros.push(format!("{lambda}:{z:.10}"));
        }
    }
    Ok(check(
        "sign_dichotomy",
        ok,
        format!("zeros {}", zeros.join(" ")),
    ))
}

fn moment_ratio_limits() -> Result<Check> {
    let mut worst: f64 = 0.0;
    // the gap closes like u^{eta-1}, so the eta = 0.8 case needs a larger u
    for &(eta, gamma, u) in &[(0.5, 0.25, 1e8), (0.8, 0.4, 1e16)] {
        let r = ParetoDensity::new(eta, 1.0)?.truncated_moment_ratio(u, gamma)?;
        worst = worst.max((r - (1.0 - eta) / (eta - gamma)).abs());
    }
    Ok(check(
        "moment_ratio_limit",
        worst <= 1e-3,
        format!("max deviation {worst:.3e}"),
    ))
}

fn survival_ratio_bound() -> Result<Check> {
    let mut ok = true;
    for &x in &[0.1, 1.0, 5.0] {
        for &(b, c) in &[(0.1, 0.2), (0.4, 0.5), (0.4, 5.0)] {
            let r = brownian_survival(x, b)? / brownian_survival(x, c)?;
            ok &= (1.0..=(c / b).powf(1.5)).contains(&r);
        }
    }
    Ok(check("survival_ratio_bound", ok, "9 triples".into()))
}

fn generator_residual() -> Result<Check> {
    let par = OUParams::new(1.0)?;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for &lambda in &[0.3, 0.6, 1.0] {
        let eig = Eigenfunction::new(par, lambda, 1e-14)?;
        for &u in &[0.5, 1.0, 2.0] {
            let (m, c, p) = (eig.phi(u - h), eig.phi(u), eig.phi(u + h));
            let r = 0.5 * (p - 2.0 * c + m) / (h * h)
                + ((u + h) * p - (u - h) * m) / (2.0 * h)
                + lambda * c;
            worst = worst.max(r.abs());
        }
    }
    Ok(check(
        "generator_residual",
        worst <= 1e-5,
        format!("max residual {worst:.3e}"),
    ))
}

fn normalization() -> Result<Check> {
    let par = OUParams::new(1.0)?;
    let mut worst: f64 = 0.0;
    for &lambda in &[0.3, 0.6, 1.0] {
        worst = worst.max(build_qsd(par, lambda)?.normalization_defect());
    }
    Ok(check(
        "qsd_normalization",
        worst <= 1e-8,
        format!("max defect {worst:.3e}"),
    ))
}

pub fn run_all(tol: f64, quad_tol: f64) -> Result<Vec<Check>> {
    let spec = QuadratureSpec::default().with_tol(quad_tol.min(1e-3 * tol));
    Ok(vec![
        eigen_relation(tol, &spec)?,
        ground_state_closed_form()?,
        sign_dichotomy()?,
        moment_ratio_limits()?,
        survival_ratio_bound()?,
        generator_residual()?,
        normalization()?,
    ])
}
