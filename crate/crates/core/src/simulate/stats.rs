// SPDX-License-Identifier: Apache-2.0

//! Diagnostics on survivor samples.

use crate::error::{domain, Error, Result};
use crate::Cdf;

use super::SurvivalEnsemble;

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("ECDF of an empty sample");
        }
        if values.iter().any(|v| v.is_nan()) {
            return domain("ECDF sample contains NaN");
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `<= y`.
    pub fn eval(&self, y: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= y) as f64 / self.sorted.len() as f64
    }
}

impl Cdf for Ecdf {
    fn cdf(&self, y: f64) -> f64 {
        self.eval(y)
    }
}

/// Empirical law of `X_t` given survival at checkpoint `index`.
pub fn conditional_ecdf(ensemble: &SurvivalEnsemble, index: usize) -> Result<Ecdf> {
    let values = &ensemble.survivors[index];
    if values.is_empty() {
        return Err(Error::EmptyConditioning(index));
    }
    Ecdf::new(values.clone())
}

/// Kolmogorov-Smirnov distance `sup_y |ECDF(y) - F(y)|`, checked on both
/// sides of every jump.
pub fn ks_distance(ecdf: &Ecdf, dist: &impl Cdf) -> f64 {
    let n = ecdf.len() as f64;
    let v = ecdf.values();
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let f = dist.cdf(v[i]);
        d = d
            .max((j as f64 / n - f).abs())
            .max((f - i as f64 / n).abs());
        i = j;
    }
    d
}

/// Sample mean of `X_t^gamma` over survivors, `gamma` in `(0, 1]`.
pub fn conditional_moment(ensemble: &SurvivalEnsemble, index: usize, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("gamma must lie in (0, 1], got {gamma}"));
    }
    let values = &ensemble.survivors[index];
    if values.is_empty() {
        return Err(Error::EmptyConditioning(index));
    }
    Ok(values.iter().map(|v| v.powf(gamma)).sum::<f64>() / values.len() as f64)
}

fn window_points(curve: &[(f64, f64)], window: (f64, f64)) -> Result<Vec<(usize, f64, f64)>> {
    let (lo, hi) = window;
    let pts: Vec<_> = curve
        .iter()
        .enumerate()
        .filter(|(_, &(t, p))| t >= lo && t <= hi && p > 0.0)
        .map(|(i, &(t, p))| (i, t, p))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable points in window [{lo}, {hi}]",
            pts.len()
        )));
    }
    Ok(pts)
}

fn slope_weights(times: &[f64]) -> Vec<f64> {
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let sxx: f64 = times.iter().map(|t| (t - mean).powi(2)).sum();
    times.iter().map(|t| (t - mean) / sxx).collect()
}

/// Least-squares slope of `-ln P(T > t)` against `t` over the window.
pub fn decay_rate(curve: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let pts = window_points(curve, window)?;
    let times: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let w = slope_weights(&times);
    Ok(pts.iter().zip(&w).map(|(p, w)| -w * p.2.ln()).sum())
}

/// [`decay_rate`] on a Monte Carlo survival curve, with its delta-method
/// standard error. Survival events are nested, so for `t_i <= t_j`
/// `Cov(ln P_i, ln P_j) = (1 - P_i) / (n P_i)`.
pub fn decay_rate_with_se(ensemble: &SurvivalEnsemble, window: (f64, f64)) -> Result<(f64, f64)> {
    let curve = ensemble.survival_curve();
    let pts = window_points(&curve, window)?;
    let times: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let w = slope_weights(&times);
    let rate = pts.iter().zip(&w).map(|(p, w)| -w * p.2.ln()).sum();
    let n = ensemble.n_paths as f64;
    let mut var = 0.0;
    for (i, pi) in pts.iter().enumerate() {
        for (j, pj) in pts.iter().enumerate() {
            let earlier = if pi.1 <= pj.1 { pi.2 } else { pj.2 };
            var += w[i] * w[j] * (1.0 - earlier) / (n * earlier);
        }
    }
    Ok((rate, var.sqrt()))
}

/// Dvoretzky-Kiefer-Wolfowitz radius: `P(sup |ECDF - F| > eps) <= alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ensemble(values: Vec<f64>, n: usize) -> SurvivalEnsemble {
        SurvivalEnsemble {
            checkpoints: vec![1.0],
            survivors: vec![values],
            n_paths: n,
            seed: 0,
        }
    }

    struct Uniform01;
    impl Cdf for Uniform01 {
        fn cdf(&self, y: f64) -> f64 {
            y.clamp(0.0, 1.0)
        }
    }

    #[test]
    fn ecdf_counts() {
        let e = Ecdf::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.eval(2.0), 2.0 / 3.0);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(3.0), 1.0);
        let single = Ecdf::new(vec![4.0]).unwrap();
        assert_eq!(single.eval(3.999), 0.0);
        assert_eq!(single.eval(4.0), 1.0);
        assert!(Ecdf::new(vec![]).is_err());
    }

    #[test]
    fn empty_conditioning() {
        let e = ensemble(vec![], 10);
        assert!(matches!(
            conditional_ecdf(&e, 0),
            Err(Error::EmptyConditioning(0))
        ));
        assert!(matches!(
            conditional_moment(&e, 0, 0.5),
            Err(Error::EmptyConditioning(0))
        ));
    }

    #[test]
    fn moments() {
        assert_eq!(
            conditional_moment(&ensemble(vec![1.0; 3], 3), 0, 0.5).unwrap(),
            1.0
        );
        assert_eq!(
            conditional_moment(&ensemble(vec![1.0, 4.0], 2), 0, 0.5).unwrap(),
            1.5
        );
        assert!(conditional_moment(&ensemble(vec![1.0], 2), 0, 1.5).is_err());
    }

    #[test]
    fn ks_point_mass_and_identity() {
        let e = Ecdf::new(vec![0.5]).unwrap();
        assert!((ks_distance(&e, &Uniform01) - 0.5).abs() < 1e-15);
        let e = Ecdf::new(vec![0.25, 0.75]).unwrap();
        assert!((ks_distance(&e, &Uniform01) - 0.25).abs() < 1e-15);
        let ties = Ecdf::new(vec![0.5, 0.5, 0.5, 0.9]).unwrap();
        assert!((ks_distance(&ties, &Uniform01) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decay_rate_exact_exponential() {
        let curve: Vec<(f64, f64)> = (5..=10)
            .map(|t| (t as f64, (-0.5 * t as f64).exp()))
            .collect();
        assert!((decay_rate(&curve, (5.0, 10.0)).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(
            decay_rate(&curve, (5.5, 6.5)),
            Err(Error::InsufficientData(_))
        ));
        let with_zero = vec![(1.0, 0.5), (2.0, 0.0)];
        assert!(decay_rate(&with_zero, (0.0, 3.0)).is_err());
    }

    #[test]
    fn dkw_radius() {
        assert!((dkw_epsilon(1_000_000, 0.01) - 0.001_627_5).abs() < 1e-6);
    }
}
