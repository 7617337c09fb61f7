// SPDX-License-Identifier: Apache-2.0

use ouqsd_core::{
    absorbed_density, brownian_survival, integrate_adaptive, ou_survival, transition_density,
    OUParams, QuadratureSpec,
};
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::new(1e-12, 60, 50.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn survival_ratio_bounds(x in 1e-4f64..20.0, b in 1e-3f64..10.0, r in 1e-6f64..100.0) {
        let c = b * (1.0 + r);
        let ratio = brownian_survival(x, b).unwrap() / brownian_survival(x, c).unwrap();
        prop_assert!(ratio >= 1.0);
        prop_assert!(ratio <= (c / b).powf(1.5));
    }
}

proptest! {
    #[test]
    fn killed_below_free(a in 0.05f64..5.0, t in 0.01f64..8.0, x in 0.0f64..10.0, y in 0.0f64..10.0) {
        let par = OUParams::new(a).unwrap();
        let q = absorbed_density(par, t, x, y).unwrap();
        let p = transition_density(par, t, x, y).unwrap();
        prop_assert!(q >= 0.0);
        prop_assert!(q <= p * (1.0 + 1e-14));
    }
}

#[test]
fn killed_below_free_regression() {
    let par = OUParams::new(1.2421207101705554).unwrap();
    let (t, x, y) = (1.3716794811478388, 8.200451019812151, 7.33598791199777);
    assert!(absorbed_density(par, t, x, y).unwrap() <= transition_density(par, t, x, y).unwrap());
}

#[test]
fn killed_density_integrates_to_survival() {
    for &a in &[0.5, 1.0, 2.0] {
        let par = OUParams::new(a).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            for &x in &[0.5, 1.0, 2.0] {
                let mass = integrate_adaptive(
                    |y| absorbed_density(par, t, x, y).unwrap(),
                    0.0,
                    20.0,
                    &spec(),
                )
                .unwrap()
                .value;
                let s = ou_survival(par, x, t).unwrap();
                assert!((mass - s).abs() < 1e-10, "a={a} t={t} x={x}: {mass} vs {s}");
            }
        }
    }
}

#[test]
fn chapman_kolmogorov() {
    let par = OUParams::new(1.0).unwrap();
    for &(s, t) in &[(0.3, 0.7), (1.0, 1.0), (0.5, 2.0)] {
        for &x in &[0.5, 1.5] {
            for &y in &[0.3, 1.0, 2.0] {
                let composed = integrate_adaptive(
                    |z| {
                        absorbed_density(par, s, x, z).unwrap()
                            * absorbed_density(par, t, z, y).unwrap()
                    },
                    0.0,
                    15.0,
                    &spec(),
                )
                .unwrap()
                .value;
                let direct = absorbed_density(par, s + t, x, y).unwrap();
                assert!((composed - direct).abs() < 1e-6, "s={s} t={t} x={x} y={y}");
                let free = integrate_adaptive(
                    |z| {
                        transition_density(par, s, x, z).unwrap()
                            * transition_density(par, t, z, y).unwrap()
                    },
                    -15.0,
                    15.0,
                    &spec(),
                )
                .unwrap()
                .value;
                assert!((free - transition_density(par, s + t, x, y).unwrap()).abs() < 1e-6);
            }
        }
    }
}
