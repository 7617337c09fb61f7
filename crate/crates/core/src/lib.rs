// SPDX-License-Identifier: Apache-2.0

//! Quasi-stationary distributions of the Ornstein-Uhlenbeck process
//! `dX = dB - a X dt` killed at zero, and their domain of attraction for
//! heavy-tailed starts.
//!
//! - [`kernels`]: transition and killed densities, survival probabilities.
//! - [`eigen`]: eigenfunction series, the laws `nu_lambda`, the sign
//!   dichotomy at `lambda = a`.
//! - [`heavytail`]: regularly varying initial densities.
//! - [`simulate`]: exact-killing Monte Carlo and its diagnostics.
//! - [`oracle`]: quadrature references for the simulated quantities.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod eigen;
pub mod error;
pub mod heavytail;
pub mod kernels;
pub mod oracle;
pub mod simulate;

pub use eigen::{
    build_qsd, build_qsd_with, first_sign_change, phi_eval, phi_mass, spectral_coefficients,
    Eigenfunction, QsdDistribution, SpectralSeries, DEFAULT_SERIES_TOL, DEFAULT_U_MAX,
};
pub use error::{Error, Result};
pub use heavytail::{InitialDensity, LogParetoDensity, ParetoDensity};
pub use kernels::{
    absorbed_density, brownian_survival, ou_survival, time_change, transition_density, OUParams,
    TimeChange,
};
pub use oracle::quadrature::{integrate_adaptive, integrate_breaks, Quadrature, QuadratureSpec};
pub use oracle::{
    boundary_layer_ratio, boundary_layer_terms, conditional_density_oracle,
    conditional_moment_oracle, eigen_relation_ratios, eigen_relation_residual, survival_oracle,
    BoundaryLayer, ConditionalDensityTable,
};
pub use simulate::{
    conditional_ecdf, conditional_moment, decay_rate, decay_rate_with_se, default_dg_step,
    dkw_epsilon, ks_distance, simulate_ensemble, Ecdf, InitialLaw, SimConfig, SurvivalEnsemble,
};

/// A cumulative distribution function on the real line.
pub trait Cdf {
    fn cdf(&self, y: f64) -> f64;
}
