mod common;

use common::{
    cape_verde, cape_verde_initial, control, random_parameters, random_state_in_region, rng,
};
use dengue_core::equilibrium::{
    brdfe_closed_form, brdfe_state, classify_stability, default_endemic_guess, eigenvalues,
    endemic_solve, jacobian, sweep, threshold_control, threshold_control_bracketed,
    trivial_equilibrium, Jacobian,
};
use dengue_core::integrator::{integrate, IntegrationConfig};
use dengue_core::model::{
    self, component_scales, control_upper_bound, ControlLevel, ModelParameters, SystemState,
};
use dengue_core::{EquilibriumKind, Error, Stability};
use num_complex::Complex64;

/// Endemic equilibrium by reduction to one unknown: given infected humans,
/// every other compartment follows from its own balance equation; bisection
/// finds the infected-human level that reproduces itself.
fn endemic_by_reduction(p: &ModelParameters, c: f64) -> SystemState {
    let m = model::compute_m(p, control(c));
    let aquatic = p.carrying_capacity * m / (p.maturation_rate * p.egg_laying_rate);
    let chain = |i_h: f64| {
        let force_m = p.biting_rate * p.transmission_to_mosquito * i_h / p.human_population;
        let s_m = p.maturation_rate * aquatic / (force_m + p.mosquito_mortality + c);
        let e_m = force_m * s_m / (p.mosquito_mortality + p.mosquito_incubation + c);
        let i_m = p.mosquito_incubation * e_m / (p.mosquito_mortality + c);
        let force_h = p.biting_rate * p.transmission_to_human * i_m / p.human_population;
        let s_h = p.human_mortality * p.human_population / (force_h + p.human_mortality);
        let e_h = force_h * s_h / (p.human_incubation + p.human_mortality);
        let next_i_h = p.human_incubation * e_h / (p.human_recovery + p.human_mortality);
        let r_h = p.human_recovery * next_i_h / p.human_mortality;
        SystemState {
            s_h,
            e_h,
            i_h: next_i_h,
            r_h,
            a_m: aquatic,
            s_m,
            e_m,
            i_m,
        }
    };
    let gap = |i_h: f64| chain(i_h).i_h - i_h;
    let (mut lo, mut hi) = (1e-6, p.human_population);
    assert!(gap(lo) > 0.0 && gap(hi) < 0.0);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    chain(0.5 * (lo + hi))
}

fn assert_state_close(a: &SystemState, b: &SystemState, rel: f64) {
    for (x, y) in a.to_array().iter().zip(b.to_array()) {
        assert!((x - y).abs() <= rel * y.abs().max(1e-300), "{a:?}\n{b:?}");
    }
}

#[test]
fn endemic_equilibrium_cape_verde() {
    let p = cape_verde();
    let rep = endemic_solve(&p, ControlLevel::NONE, None).unwrap();
    assert_eq!(rep.kind, EquilibriumKind::Endemic);
    assert!(rep.relative_residual() < 1e-9);
    assert!(rep.state.i_h > 0.0 && rep.state.i_m > 0.0);
    assert!(rep.state.e_h > 0.0 && rep.state.e_m > 0.0);
    assert!(rep.state.in_region(&p));

    let oracle = endemic_by_reduction(&p, 0.0);
    assert_state_close(&rep.state, &oracle, 1e-6);
    // Sanity on the oracle itself.
    assert!((oracle.human_total() - p.human_population).abs() < 1e-6);
}

#[test]
fn endemic_independent_of_interior_guess() {
    let p = cape_verde();
    let a = endemic_solve(&p, ControlLevel::NONE, None).unwrap();
    let base = brdfe_closed_form(&p, ControlLevel::NONE).unwrap();
    let guess = SystemState {
        s_h: 0.5 * base.s_h,
        e_h: 1000.0,
        i_h: 1000.0,
        r_h: 0.5 * base.s_h - 2000.0,
        a_m: 0.9 * base.a_m,
        s_m: 0.8 * base.s_m,
        e_m: 5000.0,
        i_m: 5000.0,
    };
    let b = endemic_solve(&p, ControlLevel::NONE, Some(guess)).unwrap();
    assert_state_close(&a.state, &b.state, 1e-6);
    assert!(b.relative_residual() < 1e-9);
}

#[test]
fn endemic_under_partial_control() {
    let p = cape_verde();
    let rep = endemic_solve(&p, control(0.05), None).unwrap();
    assert_state_close(&rep.state, &endemic_by_reduction(&p, 0.05), 1e-6);
}

#[test]
fn endemic_fails_when_r0_below_one() {
    let p = cape_verde();
    assert!(model::r0(&p, control(0.2)).unwrap() < 1.0);
    match endemic_solve(&p, control(0.2), None) {
        Err(Error::CollapsedToDfe { .. }) | Err(Error::NoConvergence { .. }) => {}
        other => panic!("expected failure, got {other:?}"),
    }
    let guess = default_endemic_guess(&p, control(0.2)).unwrap();
    assert!(endemic_solve(&p, control(0.2), Some(guess)).is_err());
}

fn finite_difference_jacobian(
    state: &SystemState,
    p: &ModelParameters,
    c: ControlLevel,
) -> Jacobian {
    let scales = component_scales(p);
    let y = state.to_array();
    let mut j = Jacobian::zeros();
    for col in 0..8 {
        let h = 1e-4 * scales[col];
        let mut plus = y;
        let mut minus = y;
        plus[col] += h;
        minus[col] -= h;
        let fp = model::evaluate_rhs(&SystemState::from_array(plus), p, c).unwrap();
        let fm = model::evaluate_rhs(&SystemState::from_array(minus), p, c).unwrap();
        for row in 0..8 {
            j[(row, col)] = (fp.0[row] - fm.0[row]) / (2.0 * h);
        }
    }
    j
}

fn assert_jacobian_matches(state: &SystemState, p: &ModelParameters, c: ControlLevel) {
    let analytic = jacobian(state, p, c);
    let numeric = finite_difference_jacobian(state, p, c);
    let scale = analytic.amax();
    for r in 0..8 {
        for k in 0..8 {
            let (a, n) = (analytic[(r, k)], numeric[(r, k)]);
            assert!(
                (a - n).abs() <= 1e-5 * a.abs().max(1e-6 * scale),
                "entry ({r},{k}): {a} vs {n}"
            );
        }
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let p = cape_verde();
    let c = control(0.084);
    assert_jacobian_matches(&brdfe_closed_form(&p, c).unwrap(), &p, c);
    let mut r = rng(99);
    for _ in 0..20 {
        let q = random_parameters(&mut r);
        let state = random_state_in_region(&mut r, &q);
        assert_jacobian_matches(&state, &q, control(0.1));
    }
}

fn assert_trace_det(m: &Jacobian) {
    let eig = eigenvalues(m).unwrap();
    let sum: Complex64 = eig.iter().sum();
    let product: Complex64 = eig.iter().product();
    let trace = m.trace();
    let det = m.determinant();
    let trace_scale = eig.iter().map(|z| z.norm()).sum::<f64>();
    assert!(
        (sum.re - trace).abs() <= 1e-8 * trace_scale,
        "{sum} vs {trace}"
    );
    assert!(sum.im.abs() <= 1e-8 * trace_scale);
    assert!(
        (product.re - det).abs() <= 1e-6 * det.abs(),
        "{product} vs {det}"
    );
    assert!(eig.windows(2).all(|w| w[0].re >= w[1].re));
}

#[test]
fn eigenvalues_consistent_with_trace_and_determinant() {
    let p = cape_verde();
    for c in [0.0, 0.05, 0.084, 0.2] {
        assert_trace_det(&jacobian(
            &brdfe_closed_form(&p, control(c)).unwrap(),
            &p,
            control(c),
        ));
        assert_trace_det(&jacobian(
            &trivial_equilibrium(&p, control(c)).unwrap().state,
            &p,
            control(c),
        ));
    }
    let endemic = endemic_solve(&p, ControlLevel::NONE, None).unwrap();
    assert_trace_det(&jacobian(&endemic.state, &p, ControlLevel::NONE));
    let mut r = rng(5);
    for _ in 0..20 {
        let q = random_parameters(&mut r);
        let s = random_state_in_region(&mut r, &q);
        assert_trace_det(&jacobian(&s, &q, control(0.05)));
    }
}

#[test]
fn trivial_and_brdfe_residuals_for_random_parameters() {
    let mut r = rng(17);
    for _ in 0..50 {
        let p = random_parameters(&mut r);
        let c = control(0.3 * control_upper_bound(&p));
        let trivial = trivial_equilibrium(&p, c).unwrap();
        assert_eq!(trivial.residual, 0.0);
        let brdfe = brdfe_state(&p, c).unwrap();
        assert!(
            brdfe.relative_residual() < 1e-9,
            "{}",
            brdfe.relative_residual()
        );
        assert!(brdfe.r0.is_some());
    }
}

#[test]
fn brdfe_verdict_tracks_r0_across_grid() {
    let p = cape_verde();
    let c_max = control_upper_bound(&p);
    let mut checked = 0;
    for i in 1..=50 {
        let c = c_max * i as f64 / 51.0;
        let rep = brdfe_state(&p, control(c)).unwrap();
        let r0 = rep.r0.unwrap();
        if (r0 - 1.0).abs() < 1e-3 {
            continue;
        }
        let verdict = classify_stability(&rep).unwrap();
        let expected = if r0 < 1.0 {
            Stability::AsymptoticallyStable
        } else {
            Stability::Unstable
        };
        assert_eq!(verdict, expected, "c={c} r0={r0}");
        checked += 1;
    }
    assert!(checked >= 45);
}

#[test]
fn threshold_invariant_under_bracket_choice() {
    let p = cape_verde();
    let tol = 1e-7;
    let reference = threshold_control(&p, tol).unwrap();
    let c_max = control_upper_bound(&p);
    for upper in [reference + 0.001, 0.1, 0.3, 0.7, 1.0, 0.999 * c_max] {
        let c = threshold_control_bracketed(&p, tol, upper).unwrap();
        assert!(
            (c - reference).abs() <= 2.0 * tol,
            "{upper}: {c} vs {reference}"
        );
    }
}

#[test]
fn sweep_rows() {
    let p = cape_verde();
    let init = cape_verde_initial();
    let cfg = IntegrationConfig::default();
    let rows = sweep(&p, &[0.0, 0.084], &init, &cfg).unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[0].r0.unwrap() - 2.396).abs() < 1e-3);
    assert!(rows[1].r0.unwrap() < 1.0);
    assert_eq!(rows[0].stability, Some(Stability::Unstable));
    assert_eq!(rows[1].stability, Some(Stability::AsymptoticallyStable));
    assert!(rows[1].peak_infected_humans.unwrap().1 < rows[0].peak_infected_humans.unwrap().1);
    assert!(rows.iter().all(|r| r.errors.is_empty()));

    let rows = sweep(&p, &[0.0837], &init, &cfg).unwrap();
    assert!((rows[0].r0.unwrap() - 1.0).abs() < 2e-3);
}

#[test]
fn sweep_r0_strictly_decreasing_and_marks_undefined() {
    let p = cape_verde();
    let init = cape_verde_initial();
    let cfg = IntegrationConfig {
        t_final: 10.0,
        ..Default::default()
    };
    let grid: Vec<f64> = (0..12).map(|i| 0.11 * i as f64).collect();
    let mut grid_past = grid.clone();
    grid_past.push(2.0);
    let rows = sweep(&p, &grid_past, &init, &cfg).unwrap();
    assert_eq!(rows.len(), grid_past.len());
    for (row, c) in rows.iter().zip(&grid_past) {
        assert_eq!(row.c, *c);
    }
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.r0).collect();
    assert_eq!(defined.len(), grid.len());
    assert!(defined.windows(2).all(|w| w[1] < w[0]));
    let last = rows.last().unwrap();
    assert!(last.r0.is_none() && last.stability.is_none());
    assert!(last.m.unwrap() <= 0.0);
    assert!(!last.errors.is_empty());
    // The simulation still runs beyond the mosquito-viability boundary.
    assert!(last.final_infected_mosquitoes.is_some());
}

#[test]
fn sweep_without_transmission() {
    let mut p = cape_verde();
    p.transmission_to_human = 0.0;
    p.transmission_to_mosquito = 0.0;
    let rows = sweep(
        &p,
        &[0.0, 0.05, 0.1],
        &cape_verde_initial(),
        &IntegrationConfig::default(),
    )
    .unwrap();
    assert!(rows.iter().all(|r| r.r0 == Some(0.0)));
    assert!(rows
        .iter()
        .all(|r| r.stability == Some(Stability::AsymptoticallyStable)));
}

#[test]
fn long_run_approaches_brdfe_except_slow_human_mode() {
    let p = cape_verde();
    let c = control(0.2);
    let target = brdfe_closed_form(&p, c).unwrap();
    let cfg = IntegrationConfig {
        t_final: 2000.0,
        sample_interval: 50.0,
        ..Default::default()
    };
    let traj = integrate(&cape_verde_initial(), &p, c, &cfg).unwrap();
    let end = traj.final_state();
    assert!((end.a_m - target.a_m).abs() < 1e-3 * target.a_m);
    assert!((end.s_m - target.s_m).abs() < 1e-3 * target.s_m);
    for v in [end.e_h, end.i_h, end.e_m, end.i_m] {
        assert!(v.abs() < 1e-6);
    }
    // Recovered humans only leave through mortality, so they decay at the
    // human death rate once transmission has stopped.
    let at_1000 = traj.samples.iter().find(|s| s.t == 1000.0).unwrap().state;
    let predicted = at_1000.r_h * (-p.human_mortality * 1000.0).exp();
    assert!((end.r_h - predicted).abs() < 1e-6 * predicted);
    assert!((end.s_h + end.r_h - p.human_population).abs() < 1e-6);
    // Reference value from an independent DOP853 solve.
    assert!((end.r_h - 1_503.008_520_28).abs() < 1e-4);
}
