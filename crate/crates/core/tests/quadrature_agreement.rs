use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use polywind::analytic::{
    f_integral_with, fg_identity_residual_with, g_integral_with, neg_moment_a_with,
    proposition_variances_with, QuadratureSpec, Scheme,
};

const AGREEMENT: f64 = 1e-8;

fn agree(name: &str, x: f64, a: f64, b: f64) {
    let scale = a.abs().max(b.abs()).max(1e-300);
    assert!(
        (a - b).abs() <= AGREEMENT * scale.max(1.0),
        "{name}({x}): gauss-kronrod {a} vs tanh-sinh {b}"
    );
}

#[test]
fn f_by_both_schemes() {
    let spec = QuadratureSpec::default();
    for c in [0.1, 0.5, FRAC_PI_2, 2.0, PI, TAU, 2.0 * TAU, 30.0] {
        agree(
            "F",
            c,
            f_integral_with(c, &spec, Scheme::GaussKronrod).unwrap(),
            f_integral_with(c, &spec, Scheme::TanhSinh).unwrap(),
        );
    }
}

#[test]
fn g_by_both_schemes() {
    let spec = QuadratureSpec::default();
    for c in [0.2, FRAC_PI_4, 1.0, PI, TAU, 20.0] {
        agree(
            "G",
            c,
            g_integral_with(c, &spec, Scheme::GaussKronrod).unwrap(),
            g_integral_with(c, &spec, Scheme::TanhSinh).unwrap(),
        );
    }
}

#[test]
fn negative_moment_by_both_schemes() {
    let spec = QuadratureSpec::default();
    for t in [1e-4, 1e-2, 0.5, 1.0, 3.0, 25.0] {
        agree(
            "E[1/A]",
            t,
            neg_moment_a_with(t, &spec, Scheme::GaussKronrod).unwrap(),
            neg_moment_a_with(t, &spec, Scheme::TanhSinh).unwrap(),
        );
    }
}

#[test]
fn variances_by_both_schemes() {
    let spec = QuadratureSpec::default();
    let a = proposition_variances_with(&spec, Scheme::GaussKronrod).unwrap();
    let b = proposition_variances_with(&spec, Scheme::TanhSinh).unwrap();
    agree("v1", 0.0, a.v1, b.v1);
    agree("v2", 0.0, a.v2, b.v2);
    assert!((b.v1 - b.v1_closed).abs() < 1e-10);
    assert!((b.v2 - b.v2_closed).abs() < 1e-10);
}

#[test]
fn fg_identity_by_both_schemes() {
    let spec = QuadratureSpec::default();
    for scheme in [Scheme::GaussKronrod, Scheme::TanhSinh] {
        for c in [0.5, FRAC_PI_2, 2.0, PI, TAU] {
            let r = fg_identity_residual_with(c, &spec, scheme).unwrap();
            assert!(r < 1e-8, "{scheme:?} c = {c}: residual {r}");
        }
    }
}

#[test]
fn tighter_tolerance_moves_values_little() {
    let loose = QuadratureSpec::default();
    let tight = QuadratureSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        truncation_cutoff: 1e-16,
    };
    for scheme in [Scheme::GaussKronrod, Scheme::TanhSinh] {
        let a = f_integral_with(TAU, &loose, scheme).unwrap();
        let b = f_integral_with(TAU, &tight, scheme).unwrap();
        assert!((a - b).abs() < 1e-9, "{scheme:?}: {a} vs {b}");
    }
}
