// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo for the killed process with no time-discretization bias.
//!
//! With `g(t) = (e^{2at} - 1) / 2a`, the process `X_t = e^{-at} (X_0 + W_{g(t)})`
//! is an Ornstein-Uhlenbeck process and it hits zero exactly when
//! `X_0 + W` does. Paths therefore run as Brownian motions on a grid in
//! `g`-time. Between grid points `w1, w2 > 0` the probability that the
//! bridge touched zero is `exp(-2 w1 w2 / dg)`, so killing is exact for any
//! step size.
//!
//! Each path draws from its own ChaCha stream (`seed`, stream = path index),
//! so the ensemble does not depend on how paths are scheduled.

mod stats;

pub use stats::{
    conditional_ecdf, conditional_moment, decay_rate, decay_rate_with_se, dkw_epsilon, ks_distance,
    Ecdf,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heavytail::{InitialDensity, LogParetoDensity, ParetoDensity};
use crate::kernels::{time_change, OUParams};

/// Paths per parallel work item. Fixed, so chunking never affects output.
const CHUNK: usize = 4096;
const MAX_GRID_POINTS: usize = 50_000_000;
/// Default cap on the number of `g`-steps to the last checkpoint.
const DEFAULT_MAX_STEPS: f64 = 4096.0;

/// Law of `X_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Pareto(ParetoDensity),
    LogPareto(LogParetoDensity),
    /// Deterministic start; used to validate killing against closed forms.
    PointMass(f64),
}

impl InitialLaw {
    fn sample(&self, uniform: f64) -> Result<f64> {
        match self {
            InitialLaw::Pareto(f) => f.sample(uniform),
            InitialLaw::LogPareto(f) => f.sample(uniform),
            InitialLaw::PointMass(x) => Ok(*x),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::PointMass(x) if !(*x > 0.0 && x.is_finite()) => Err(Error::Config(
                format!("point-mass start must be positive, got {x}"),
            )),
            _ => Ok(()),
        }
    }
}

impl From<ParetoDensity> for InitialLaw {
    fn from(f: ParetoDensity) -> Self {
        InitialLaw::Pareto(f)
    }
}

impl From<LogParetoDensity> for InitialLaw {
    fn from(f: LogParetoDensity) -> Self {
        InitialLaw::LogPareto(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: OUParams,
    pub init: InitialLaw,
    pub checkpoints: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Step in transformed time `g`.
    pub dg_step: f64,
}

impl SimConfig {
    /// Config with the default `g`-step for these checkpoints.
    pub fn new(
        params: OUParams,
        init: impl Into<InitialLaw>,
        checkpoints: Vec<f64>,
        n_paths: usize,
        seed: u64,
    ) -> Result<Self> {
        let dg_step = default_dg_step(params, &checkpoints)?;
        let config = Self {
            params,
            init: init.into(),
            checkpoints,
            n_paths,
            seed,
            dg_step,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_dg_step(mut self, dg_step: f64) -> Result<Self> {
        self.dg_step = dg_step;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        validate_checkpoints(&self.checkpoints)?;
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if !(self.dg_step > 0.0 && self.dg_step.is_finite()) {
            return Err(Error::Config(format!(
                "dg_step must be positive, got {}",
                self.dg_step
            )));
        }
        self.init.validate()
    }
}

fn validate_checkpoints(checkpoints: &[f64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Config("at least one checkpoint is required".into()));
    }
    if checkpoints.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Config(format!(
            "checkpoints must be positive: {checkpoints:?}"
        )));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "checkpoints must ascend strictly: {checkpoints:?}"
        )));
    }
    Ok(())
}

/// `max(0.01 min(1, g(t_1)), g(t_last) / 4096)`: the killing is exact at
/// any step, so the step only trades RNG cost.
pub fn default_dg_step(params: OUParams, checkpoints: &[f64]) -> Result<f64> {
    validate_checkpoints(checkpoints)?;
    let g_first = checkpoint_g(params, checkpoints[0])?;
    let g_last = checkpoint_g(params, *checkpoints.last().expect("nonempty"))?;
    Ok((0.01 * g_first.min(1.0)).max(g_last / DEFAULT_MAX_STEPS))
}

fn checkpoint_g(params: OUParams, t: f64) -> Result<f64> {
    let g = time_change(params, t)?.g;
    if !g.is_finite() {
        return Err(Error::Config(format!(
            "g({t}) overflows for a = {}",
            params.a()
        )));
    }
    Ok(g)
}

/// Survivor positions at each checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalEnsemble {
    pub checkpoints: Vec<f64>,
    /// `survivors[i]` holds `X_{t_i}` for every path alive at `t_i`, in path order.
    pub survivors: Vec<Vec<f64>>,
    pub n_paths: usize,
    pub seed: u64,
}

impl SurvivalEnsemble {
    pub fn survivor_count(&self, index: usize) -> usize {
        self.survivors[index].len()
    }

    /// Fraction of paths alive at checkpoint `index`.
    pub fn survival_fraction(&self, index: usize) -> f64 {
        self.survivor_count(index) as f64 / self.n_paths as f64
    }

    /// Binomial standard error of [`Self::survival_fraction`].
    pub fn standard_error(&self, index: usize) -> f64 {
        let p = self.survival_fraction(index);
        (p * (1.0 - p) / self.n_paths as f64).sqrt()
    }

    /// `(t, P(T > t))` at every checkpoint.
    pub fn survival_curve(&self) -> Vec<(f64, f64)> {
        (0..self.checkpoints.len())
            .map(|i| (self.checkpoints[i], self.survival_fraction(i)))
            .collect()
    }
}

struct Grid {
    /// step lengths in `g`-time
    dg: Vec<f64>,
    sqrt_dg: Vec<f64>,
    /// checkpoint index reached at the end of each step, if any
    hit: Vec<Option<usize>>,
    /// `e^{-a t_i}` per checkpoint
    shrink: Vec<f64>,
}

fn build_grid(config: &SimConfig) -> Result<Grid> {
    let g_marks: Vec<f64> = config
        .checkpoints
        .iter()
        .map(|&t| checkpoint_g(config.params, t))
        .collect::<Result<_>>()?;
    let g_end = *g_marks.last().expect("validated nonempty");
    let n_uniform = (g_end / config.dg_step).floor();
    if n_uniform + g_marks.len() as f64 > MAX_GRID_POINTS as f64 {
        return Err(Error::Config(format!(
            "dg_step {} gives {} grid points (max {MAX_GRID_POINTS})",
            config.dg_step, n_uniform
        )));
    }
    let mut dg = Vec::new();
    let mut hit = Vec::new();
    let mut prev = 0.0;
    let mut k = 1usize;
    for (i, &mark) in g_marks.iter().enumerate() {
        loop {
            let next = config.dg_step * k as f64;
            // merge grid points that would leave a sliver before a checkpoint
            if next >= mark * (1.0 - 1e-12) {
                break;
            }
            dg.push(next - prev);
            hit.push(None);
            prev = next;
            k += 1;
        }
        if mark > prev {
            dg.push(mark - prev);
            hit.push(Some(i));
            prev = mark;
        } else if let Some(last) = hit.last_mut() {
            *last = Some(i);
        }
    }
    let sqrt_dg = dg.iter().map(|d| d.sqrt()).collect();
    let shrink = config
        .checkpoints
        .iter()
        .map(|&t| (-config.params.a() * t).exp())
        .collect();
    Ok(Grid {
        dg,
        sqrt_dg,
        hit,
        shrink,
    })
}

/// Runs one path; pushes its value at each checkpoint it survives.
fn run_path(config: &SimConfig, grid: &Grid, path: u64, out: &mut [Vec<f64>]) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(path);
    let x0 = config.init.sample(rng.random::<f64>())?;
    let mut w = x0;
    for step in 0..grid.dg.len() {
        let z: f64 = rng.sample(StandardNormal);
        let next = w + grid.sqrt_dg[step] * z;
        if next <= 0.0 {
            return Ok(());
        }
        let exponent = 2.0 * w * next / grid.dg[step];
        // exp(-745) underflows; skip the draw when the bridge cannot touch zero
        if exponent < 745.0 && rng.random::<f64>() < (-exponent).exp() {
            return Ok(());
        }
        w = next;
        if let Some(i) = grid.hit[step] {
            out[i].push(grid.shrink[i] * w);
        }
    }
    Ok(())
}

/// Simulates `config.n_paths` independent killed paths.
///
/// Parallel over the current rayon pool; output is identical for any
/// number of worker threads.
pub fn simulate_ensemble(config: &SimConfig) -> Result<SurvivalEnsemble> {
    config.validate()?;
    let grid = build_grid(config)?;
    let n_check = config.checkpoints.len();
    let n_chunks = config.n_paths.div_ceil(CHUNK);
    let chunks: Vec<Vec<Vec<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut out = vec![Vec::new(); n_check];
            let start = c * CHUNK;
            let end = (start + CHUNK).min(config.n_paths);
            for path in start..end {
                run_path(config, &grid, path as u64, &mut out)?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut survivors = vec![Vec::new(); n_check];
    for chunk in chunks {
        for (dst, src) in survivors.iter_mut().zip(chunk) {
            dst.extend(src);
        }
    }
    Ok(SurvivalEnsemble {
        checkpoints: config.checkpoints.clone(),
        survivors,
        n_paths: config.n_paths,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ou_survival;

    fn par(a: f64) -> OUParams {
        OUParams::new(a).unwrap()
    }

    #[test]
    fn config_validation() {
        let f = ParetoDensity::new(0.5, 1.0).unwrap();
        assert!(SimConfig::new(par(1.0), f, vec![], 10, 1).is_err());
        assert!(SimConfig::new(par(1.0), f, vec![2.0, 1.0], 10, 1).is_err());
        assert!(SimConfig::new(par(1.0), f, vec![0.0], 10, 1).is_err());
        assert!(SimConfig::new(par(1.0), f, vec![1.0], 0, 1).is_err());
        assert!(SimConfig::new(par(1.0), f, vec![400.0], 10, 1).is_err());
        let c = SimConfig::new(par(1.0), f, vec![1.0], 10, 1).unwrap();
        assert!(c.clone().with_dg_step(0.0).is_err());
        assert!(c
            .with_dg_step(1e-9)
            .and_then(|c| simulate_ensemble(&c))
            .is_err());
        assert!(SimConfig::new(par(1.0), InitialLaw::PointMass(-1.0), vec![1.0], 10, 1).is_err());
    }

    #[test]
    fn grid_hits_checkpoints_exactly() {
        let f = ParetoDensity::new(0.5, 1.0).unwrap();
        let c = SimConfig::new(par(1.0), f, vec![0.5, 1.0, 2.0], 1, 0)
            .unwrap()
            .with_dg_step(0.3)
            .unwrap();
        let grid = build_grid(&c).unwrap();
        let mut g = 0.0;
        for (d, h) in grid.dg.iter().zip(&grid.hit) {
            g += d;
            if let Some(i) = h {
                let want = time_change(c.params, c.checkpoints[*i]).unwrap().g;
                assert!((g - want).abs() < 1e-12 * want);
            }
        }
        assert_eq!(grid.hit.iter().flatten().count(), 3);
    }

    #[test]
    fn single_path_is_reproducible() {
        let f = ParetoDensity::new(0.5, 1.0).unwrap();
        let c = SimConfig::new(par(1.0), f, vec![1.0], 1, 7).unwrap();
        let a = simulate_ensemble(&c).unwrap();
        let b = simulate_ensemble(&c).unwrap();
        assert_eq!(a, b);
        assert!(a.survivor_count(0) <= 1);
    }

    #[test]
    fn survivors_positive_and_nested() {
        let f = ParetoDensity::new(0.5, 1.0).unwrap();
        let c = SimConfig::new(par(1.0), f, vec![0.5, 1.0, 2.0], 20_000, 3).unwrap();
        let e = simulate_ensemble(&c).unwrap();
        for i in 0..3 {
            assert!(e.survivors[i].iter().all(|&v| v > 0.0));
        }
        assert!(e.survivor_count(0) >= e.survivor_count(1));
        assert!(e.survivor_count(1) >= e.survivor_count(2));
    }

    #[test]
    fn point_mass_survival_small_sample() {
        let c =
            SimConfig::new(par(1.0), InitialLaw::PointMass(1.0), vec![1.0], 100_000, 11).unwrap();
        let e = simulate_ensemble(&c).unwrap();
        let want = ou_survival(par(1.0), 1.0, 1.0).unwrap();
        assert!((e.survival_fraction(0) - want).abs() < 4.0 * e.standard_error(0));
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let f = ParetoDensity::new(0.3, 1.0).unwrap();
        let c = SimConfig::new(par(2.0), f, vec![1.0, 2.0], 10_000, 99).unwrap();
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| simulate_ensemble(&c).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
