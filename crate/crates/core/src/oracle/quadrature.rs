// SPDX-License-Identifier: Apache-2.0

//! Adaptive Simpson quadrature with Richardson error control.

use crate::error::{domain, Error, Result};

/// Tolerance and truncation settings for the quadrature oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Upper truncation point for integrals over `[0, inf)` whose tail is
    /// bounded analytically by the caller.
    pub domain_cut: f64,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, max_depth: u32, domain_cut: f64) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol.is_finite()) {
            return domain(format!("abs_tol must be positive, got {abs_tol}"));
        }
        if max_depth < 10 {
            return domain(format!("max_depth must be at least 10, got {max_depth}"));
        }
        if !(domain_cut > 0.0) {
            return domain(format!("domain_cut must be positive, got {domain_cut}"));
        }
        Ok(Self {
            abs_tol,
            max_depth,
            domain_cut,
        })
    }

    pub fn with_tol(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_depth: 50,
            domain_cut: 50.0,
        }
    }
}

/// Integral estimate with its accumulated Richardson error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_bound: f64,
}

impl std::ops::Add for Quadrature {
    type Output = Quadrature;
    fn add(self, rhs: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + rhs.value,
            error_bound: self.error_bound + rhs.error_bound,
        }
    }
}

struct Accumulator {
    value: f64,
    error: f64,
    failed: bool,
    non_finite: bool,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    p: Panel,
    tol: f64,
    depth: u32,
    max_depth: u32,
    acc: &mut Accumulator,
) {
    let Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
    } = p;
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        acc.non_finite = true;
        return;
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // roundoff floor: no point asking for more than a few ulps of the panel
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol.max(floor) || lm <= a || rm >= b {
        acc.value += left + right + delta / 15.0;
        acc.error += delta.abs() / 15.0;
        return;
    }
    if depth >= max_depth {
        acc.value += left + right + delta / 15.0;
        acc.error += delta.abs() / 15.0;
        acc.failed = true;
        return;
    }
    simpson(
        f,
        Panel {
            a,
            b: m,
            fa,
            fm: flm,
            fb: fm,
            whole: left,
        },
        0.5 * tol,
        depth + 1,
        max_depth,
        acc,
    );
    simpson(
        f,
        Panel {
            a: m,
            b,
            fa: fm,
            fm: frm,
            fb,
            whole: right,
        },
        0.5 * tol,
        depth + 1,
        max_depth,
        acc,
    );
}

/// Integrates `f` over `[lo, hi]` to absolute tolerance `spec.abs_tol`.
///
/// On failure to converge within `spec.max_depth` bisections the best
/// estimate is returned inside [`Error::Accuracy`].
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    integrate_breaks(f, &[lo, hi], spec)
}

/// Like [`integrate_adaptive`], with the range pre-split at `breaks`
/// (ascending, first and last are the limits). The tolerance is shared
/// between pieces in proportion to their width.
pub fn integrate_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    if breaks.len() < 2 {
        return domain("need at least two integration limits");
    }
    if breaks.iter().any(|b| !b.is_finite()) {
        return domain("integration limits must be finite");
    }
    if breaks.windows(2).any(|w| w[1] < w[0]) {
        return domain(format!("integration limits must ascend: {breaks:?}"));
    }
    let lo = breaks[0];
    let hi = breaks[breaks.len() - 1];
    let mut acc = Accumulator {
        value: 0.0,
        error: 0.0,
        failed: false,
        non_finite: false,
    };
    if hi == lo {
        return Ok(Quadrature {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let width = hi - lo;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b == a {
            continue;
        }
        // four starting panels per piece so narrow features are not skipped
        let n = 4;
        let h = (b - a) / n as f64;
        let tol = spec.abs_tol * (b - a) / width / n as f64;
        for i in 0..n {
            let pa = a + h * i as f64;
            let pb = if i + 1 == n {
                b
            } else {
                a + h * (i + 1) as f64
            };
            let pm = 0.5 * (pa + pb);
            let (fa, fm, fb) = (f(pa), f(pm), f(pb));
            if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
                return domain(format!("integrand not finite on [{pa}, {pb}]"));
            }
            let whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(
                &f,
                Panel {
                    a: pa,
                    b: pb,
                    fa,
                    fm,
                    fb,
                    whole,
                },
                tol,
                0,
                spec.max_depth,
                &mut acc,
            );
            if acc.non_finite {
                return domain(format!("integrand not finite inside [{pa}, {pb}]"));
            }
        }
    }
    if acc.failed {
        return Err(Error::Accuracy {
            estimate: acc.value,
            error_bound: acc.error,
        });
    }
    Ok(Quadrature {
        value: acc.value,
        error_bound: acc.error,
    })
}
