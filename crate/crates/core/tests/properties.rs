use polywind::analytic::{constants, mrt_stretched, mrt_uniform, ou_clock, ou_clock_inverse, QuadratureSpec};
use polywind::cltlab::{empirical_qv, theory_qv};
use polywind::model::{bead_positions, chain_windings, free_end_winding, InitialConfig, PolymerParams};
use polywind::rng::replicate_rng;
use polywind::sde::{evolve_step, winding_increment, WindingState};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = PolymerParams> {
    (1usize..40, 0.0f64..20.0, 0.0f64..2.0, 0.05f64..1.0).prop_filter_map("infeasible", |(n, d, l, l0)| {
        PolymerParams::new(n, d, l, l0).ok()
    })
}

proptest! {
    #[test]
    fn rods_are_rigid(p in params(), seed in any::<u64>()) {
        let mut rng = replicate_rng(seed, 0);
        let angles: Vec<f64> = (0..p.n()).map(|_| rand::Rng::random_range(&mut rng, -20.0..20.0)).collect();
        let xs = bead_positions(&angles, &p).unwrap();
        let mut prev = polywind::Complex64::new(p.offset(), 0.0);
        for x in xs {
            let len = (x - prev).norm();
            prop_assert!((len - p.rod_length()).abs() <= 1e-12 * p.rod_length().max(1.0) * 4.0);
            prev = x;
        }
    }

    #[test]
    fn stretched_start_does_not_wind(p in params()) {
        prop_assert_eq!(free_end_winding(&vec![0.0; p.n()], &p).unwrap(), 0.0);
    }

    #[test]
    fn winding_is_sum_of_increments(p in params(), seed in any::<u64>(), steps in 1usize..60) {
        let mut rng = replicate_rng(seed, 1);
        let Ok(mut state) = WindingState::new(vec![0.0; p.n()], &p, true) else { return Ok(()); };
        let mut end = *state.positions().last().unwrap();
        let mut sum = 0.0;
        for _ in 0..steps {
            if evolve_step(&mut state, &p, 1e-3, &mut rng).is_err() {
                return Ok(());
            }
            let next = *state.positions().last().unwrap();
            sum += winding_increment(end, next, p.origin_eps()).unwrap();
            end = next;
        }
        prop_assert_eq!(state.phi, sum);
        let phis = state.per_bead_phi.as_ref().unwrap();
        prop_assert_eq!(phis.len(), state.tracked_beads().len());
    }

    #[test]
    fn increments_are_principal(re in -5.0f64..5.0, im in -5.0f64..5.0, re2 in -5.0f64..5.0, im2 in -5.0f64..5.0) {
        let a = polywind::Complex64::new(re, im);
        let b = polywind::Complex64::new(re2, im2);
        if let Ok(d) = winding_increment(a, b, 1e-9) {
            prop_assert!(d > -std::f64::consts::PI && d <= std::f64::consts::PI);
        }
    }

    #[test]
    fn chain_windings_end_at_free_end(p in params(), seed in any::<u64>()) {
        let mut rng = replicate_rng(seed, 2);
        let angles: Vec<f64> = (0..p.n()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let xs = bead_positions(&angles, &p).unwrap();
        if let (Ok(w), Ok(phi)) = (chain_windings(&xs, &p), free_end_winding(&angles, &p)) {
            prop_assert_eq!(*w.last().unwrap(), phi);
        }
    }

    #[test]
    fn uniform_starts_do_not_wind(p in params(), seed in any::<u64>()) {
        let mut rng = replicate_rng(seed, 3);
        let cfg = InitialConfig::UniformRandom { margin: 0.1 };
        if let Ok(angles) = cfg.realize(&p, &mut rng) {
            let phi = free_end_winding(&angles, &p).unwrap();
            prop_assert!(phi.abs() < std::f64::consts::TAU - 0.1);
        }
    }

    #[test]
    fn ou_clock_round_trip(t in 0.0f64..10.0) {
        prop_assert!((ou_clock_inverse(ou_clock(t)) - t).abs() <= 1e-12 * t.max(1.0));
        prop_assert!(ou_clock(t) >= t);
    }

    #[test]
    fn theory_brackets_sum_to_time(t in 0.0f64..50.0) {
        let (s, c, sc) = theory_qv(t);
        prop_assert!((s + c - t).abs() <= 1e-12 * t.max(1.0));
        prop_assert!(s >= 0.0 && s <= t && c <= t);
        prop_assert_eq!(sc, 0.0);
    }

    #[test]
    fn empirical_brackets_are_bounded(n in 1usize..30, seed in any::<u64>()) {
        let q = empirical_qv(n, 0.5, 0.01, &mut replicate_rng(seed, 4)).unwrap();
        for i in 0..q.times.len() {
            prop_assert!(q.qv_s[i] <= q.times[i] + 1e-12);
            prop_assert!(q.qv_c[i] <= q.times[i] + 1e-12);
            prop_assert!((q.qv_s[i] + q.qv_c[i] - q.times[i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn formulas_scale_as_one_over_d() {
    let k = constants(&QuadratureSpec::default()).unwrap();
    for n in [3, 10, 100, 1000] {
        let a = mrt_stretched(n, 1.0, &k).unwrap();
        let b = mrt_stretched(n, 4.0, &k).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        let u = mrt_uniform(n, 2.0, &k).unwrap();
        assert!((u * 8.0 * 2.0 / (n as f64).sqrt() - k.q_tilde).abs() < 1e-12);
    }
}
