// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use ouqsd_core::{
    build_qsd_with, conditional_density_oracle, conditional_ecdf, decay_rate, decay_rate_with_se,
    dkw_epsilon, ks_distance, simulate_ensemble, survival_oracle, OUParams, ParetoDensity,
    QuadratureSpec, SimConfig, SurvivalEnsemble,
};

use crate::config::RunConfig;
use crate::csv::CsvWriter;
use crate::CliError;

fn params(cfg: &RunConfig) -> Result<OUParams, CliError> {
    Ok(OUParams::new(cfg.a)?)
}

fn initial(cfg: &RunConfig) -> Result<ParetoDensity, CliError> {
    if cfg.exploratory() {
        eprintln!(
            "note: eta = {} >= 1 is exploratory, no acceptance target",
            cfg.eta
        );
        return Ok(ParetoDensity::exploratory(cfg.eta, cfg.x_m)?);
    }
    Ok(ParetoDensity::new(cfg.eta, cfg.x_m)?)
}

fn quad_spec(cfg: &RunConfig) -> QuadratureSpec {
    QuadratureSpec::default().with_tol(cfg.quad_tol)
}

/// `i * step` for `i = first..=round(end / step)`; computed per index so
/// the grid does not drift.
fn grid(first: usize, end: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::Config(format!(
            "grid step must be positive, got {step}"
        )));
    }
    let n = (end / step).round() as usize;
    Ok((first..=n).map(|i| i as f64 * step).collect())
}

fn ensemble(cfg: &RunConfig) -> Result<SurvivalEnsemble, CliError> {
    let mut sim = SimConfig::new(
        params(cfg)?,
        initial(cfg)?,
        cfg.checkpoints.clone(),
        cfg.n_paths,
        cfg.seed,
    )?;
    if let Some(dg) = cfg.dg_step {
        sim = sim.with_dg_step(dg)?;
    }
    Ok(simulate_ensemble(&sim)?)
}

pub fn qsd(cfg: &RunConfig, du: f64, out: &Path) -> Result<(), CliError> {
    let nu = build_qsd_with(params(cfg)?, cfg.lambda, cfg.series_tol, cfg.quad_tol)?;
    let mut w = CsvWriter::create(out, cfg.seed, "y,density,cdf")?;
    for y in grid(0, cfg.u_max, du)? {
        w.row(&[y, nu.density(y), ouqsd_core::Cdf::cdf(&nu, y)])?;
    }
    w.finish()?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let par = params(cfg)?;
    let f = initial(cfg)?;
    let ens = ensemble(cfg)?;
    let spec = quad_spec(cfg);
    let mut w = CsvWriter::create(out, cfg.seed, "t,p_mc,se_mc,p_oracle")?;
    for (i, &t) in ens.checkpoints.iter().enumerate() {
        let oracle = survival_oracle(par, &f, t, &spec)?;
        w.row(&[t, ens.survival_fraction(i), ens.standard_error(i), oracle])?;
    }
    w.finish()?;
    Ok(())
}

pub fn converge(cfg: &RunConfig, du: f64, out: &Path) -> Result<(), CliError> {
    let par = params(cfg)?;
    let f = initial(cfg)?;
    let nu = build_qsd_with(par, cfg.lambda, cfg.series_tol, cfg.quad_tol)?;
    let ens = ensemble(cfg)?;
    let spec = quad_spec(cfg);
    let ys = grid(1, cfg.u_max, du)?;
    let mut w = CsvWriter::create(out, cfg.seed, "t,y,ecdf,oracle_density,qsd_density")?;
    println!("t,survivors,ks_to_qsd,dkw_95");
    for (i, &t) in ens.checkpoints.iter().enumerate() {
        let ecdf = conditional_ecdf(&ens, i)?;
        let table = conditional_density_oracle(par, &f, t, &ys, &spec)?;
        for (j, &y) in ys.iter().enumerate() {
            w.row(&[t, y, ecdf.eval(y), table.density[j], nu.density(y)])?;
        }
        println!(
            "{t},{},{:.6},{:.6}",
            ecdf.len(),
            ks_distance(&ecdf, &nu),
            dkw_epsilon(ecdf.len(), 0.05)
        );
    }
    w.finish()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DecaySource {
    Oracle,
    Mc,
}

/// Every adjacent checkpoint pair, then the full span.
fn windows(ts: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = ts.windows(2).map(|w| (w[0], w[1])).collect();
    if ts.len() > 2 {
        out.push((ts[0], ts[ts.len() - 1]));
    }
    out
}

pub fn decay(cfg: &RunConfig, source: DecaySource, out: &Path) -> Result<(), CliError> {
    if cfg.checkpoints.len() < 2 {
        return Err(CliError::Config(
            "decay needs at least two checkpoints".into(),
        ));
    }
    let par = params(cfg)?;
    let f = initial(cfg)?;
    let target = if cfg.exploratory() {
        f64::NAN
    } else {
        cfg.a * cfg.eta
    };
    let (curve, ens) = match source {
        DecaySource::Oracle => {
            let spec = quad_spec(cfg);
            let curve = cfg
                .checkpoints
                .iter()
                .map(|&t| Ok((t, survival_oracle(par, &f, t, &spec)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            (curve, None)
        }
        DecaySource::Mc => {
            let ens = ensemble(cfg)?;
            (ens.survival_curve(), Some(ens))
        }
    };
    let mut w = CsvWriter::create(out, cfg.seed, "t_lo,t_hi,lambda_hat,target")?;
    for (lo, hi) in windows(&cfg.checkpoints) {
        w.row(&[lo, hi, decay_rate(&curve, (lo, hi))?, target])?;
    }
    w.finish()?;
    if let Some(ens) = ens {
        let span = (
            cfg.checkpoints[0],
            cfg.checkpoints[cfg.checkpoints.len() - 1],
        );
        let (rate, se) = decay_rate_with_se(&ens, span)?;
        println!(
            "lambda_hat={rate:.6} se={se:.6} window=[{},{}]",
            span.0, span.1
        );
    }
    Ok(())
}
