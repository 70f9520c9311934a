use std::f64::consts::{LN_2, PI, TAU};

use polywind::analytic::{
    constants, f_integral, g_integral, neg_moment_a, ou_hitting_expectation, QuadratureSpec, EULER_GAMMA,
};
use polywind::model::{InitialConfig, PolymerParams};
use polywind::montecarlo::{
    estimate_mmrt, estimate_mrt, estimate_refinement, exp_functional_refinement, laplace_check, sweep,
    winding_time_samples, McConfig, McEstimate, ParamsTemplate, Statistic, SweepAxis,
};
use polywind::rng::derive_seed;

fn fig4(n: usize) -> PolymerParams {
    PolymerParams::new(n, 10.0, 0.3, 0.25).unwrap()
}

fn z_score(est: &McEstimate, target: f64) -> f64 {
    (est.mean - target) / est.stderr.unwrap()
}

#[test]
fn planar_winding_time_moments() {
    let spec = QuadratureSpec::default();
    let k = constants(&spec).unwrap();
    let mc = McConfig::new(20_000, 1e-2, 2000.0, 7).unwrap();
    let samples = winding_time_samples(TAU, &mc).unwrap();
    assert_eq!(samples.n_timeout, 0);

    let logs: Vec<f64> = samples.times.iter().map(|t| t.ln()).collect();
    let log_mean = McEstimate::from_samples(&logs, 0, 0).unwrap();
    let expected = 2.0 * f_integral(TAU, &spec).unwrap() + LN_2 + EULER_GAMMA;
    assert!(z_score(&log_mean, expected).abs() < 3.0, "{log_mean:?} vs {expected}");

    let inverse: Vec<f64> = samples.times.iter().map(|t| t.recip()).collect();
    let inv_mean = McEstimate::from_samples(&inverse, 0, 0).unwrap();
    let g = g_integral(TAU, &spec).unwrap();
    assert!(z_score(&inv_mean, g).abs() < 3.0, "{inv_mean:?} vs {g}");

    // ln(T + 1/2) = ln T + 1/(2T) - 1/(8T^2) + ..., so the OU expectation is
    // Q_tilde / 4 up to the measured second-order term.
    let ou = ou_hitting_expectation(&samples.times).unwrap();
    let second_order = samples.times.iter().map(|t| 0.125 * t.powi(-2)).sum::<f64>() / logs.len() as f64;
    let tolerance = 3.0 * log_mean.stderr.unwrap() / 4.0 + second_order / 4.0;
    assert!((ou - k.q_tilde / 4.0).abs() < tolerance, "{ou} vs {}", k.q_tilde / 4.0);
}

#[test]
fn laplace_transform_of_exit_time() {
    for y in [0.5, 1.0] {
        let mc = McConfig::new(20_000, 1e-3, 100.0, 11).unwrap();
        let check = laplace_check(PI / 4.0, y, &mc).unwrap();
        assert!(z_score(&check.empirical, check.analytic).abs() < 3.0, "{check:?}");
    }
}

#[test]
fn exponential_functional_inverse_moment() {
    let mc = McConfig::new(20_000, 1e-3, 2.0, 5).unwrap();
    let est = exp_functional_refinement(1.0, &mc).unwrap();
    let exact = neg_moment_a(1.0, &QuadratureSpec::default()).unwrap();
    let allowance = est.refinement_shift();
    assert!(allowance < 1e-3, "{allowance}");
    assert!(
        (est.fine.mean - exact).abs() < 3.0 * est.fine.stderr.unwrap() + allowance,
        "{est:?} vs {exact}"
    );
}

#[test]
fn stderr_shrinks_like_root_replicates() {
    let p = fig4(15);
    let se: Vec<f64> = [100, 400, 1600]
        .iter()
        .map(|&r| {
            let mc = McConfig::new(r, 0.01, 1000.0, 21).unwrap();
            estimate_mrt(&p, &InitialConfig::Stretched, &mc).unwrap().stderr.unwrap()
        })
        .collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "{se:?}");
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let p = fig4(12);
    let mc = McConfig::new(64, 0.01, 1000.0, 99).unwrap();
    let one = estimate_mmrt(&p, &InitialConfig::Stretched, &mc.with_workers(1)).unwrap();
    let three = estimate_mmrt(&p, &InitialConfig::Stretched, &mc.with_workers(3)).unwrap();
    assert_eq!(one.mean.to_bits(), three.mean.to_bits());
    assert_eq!(one, three);
}

#[test]
fn halving_dt_moves_tau_less_than_stderr() {
    // Resolved regime: sqrt(2 D dt) * n = 0.45.
    let p = PolymerParams::new(10, 1.0, 0.1, 0.2).unwrap();
    let mc = McConfig::new(300, 1e-3, 500.0, 3).unwrap();
    for statistic in [Statistic::Mrt, Statistic::Mmrt] {
        let r = estimate_refinement(&p, &InitialConfig::Stretched, statistic, &mc).unwrap();
        assert!(r.shift.mean.abs() < r.coarse.stderr.unwrap(), "{statistic:?}: {r:?}");
    }
}

#[test]
fn minimum_rotation_time_decreases_with_n() {
    let mc = McConfig::new(300, 0.01, 1000.0, 5).unwrap();
    let few = estimate_mmrt(&fig4(4), &InitialConfig::Stretched, &mc).unwrap();
    let many = estimate_mmrt(&fig4(15), &InitialConfig::Stretched, &mc).unwrap();
    let gap = few.mean - many.mean;
    let se = few.stderr.unwrap().hypot(many.stderr.unwrap());
    assert!(gap > 3.0 * se, "{few:?} {many:?}");
    let mrt = estimate_mrt(&fig4(15), &InitialConfig::Stretched, &mc).unwrap();
    assert!(many.mean <= mrt.mean);
}

#[test]
fn sweep_points_reuse_derived_seeds() {
    let mc = McConfig::new(50, 0.01, 1000.0, 8).unwrap();
    let template = ParamsTemplate::from(fig4(10));
    let rows = sweep(&template, SweepAxis::N, &[6.0, 1.0, 9.0], &InitialConfig::Stretched, Statistic::Mrt, &mc);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].result.is_err() && rows[1].params.is_none());
    let direct = estimate_mrt(&fig4(9), &InitialConfig::Stretched, &mc.with_seed(derive_seed(8, 2))).unwrap();
    assert_eq!(rows[2].result.as_ref().unwrap(), &direct);
}
