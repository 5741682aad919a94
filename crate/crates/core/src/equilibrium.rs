//! Equilibria, linear stability, the minimal control threshold and
//! control sweeps.
//!
//! Three kinds of equilibrium are reported:
//!
//! - trivial: all humans susceptible, no mosquitoes at all;
//! - BRDFE: disease free, with a persisting mosquito population (needs `M > 0`);
//! - endemic: every infected compartment strictly positive, found by Newton.
//!
//! The BRDFE adult population is `K M / (eggs * (adult mortality + c))`. This
//! is what substituting the aquatic and adult balance equations gives; the
//! commonly quoted form without `c` in the denominator only agrees at `c = 0`.

use std::fmt;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrationConfig};
use crate::model::{
    self, compute_m, control_upper_bound, Compartment, ControlLevel, ModelParameters, SystemState,
    STATE_DIM,
};

/// Real 8x8 matrix, per day.
pub type Jacobian = SMatrix<f64, STATE_DIM, STATE_DIM>;

/// Half-width of the band around zero in which the leading eigenvalue real
/// part is classified as marginal (per day).
pub const STABILITY_BAND: f64 = 1e-10;

/// Newton iteration cap for the endemic solve.
pub const MAX_NEWTON_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    Trivial,
    Brdfe,
    Endemic,
}

impl EquilibriumKind {
    pub fn name(self) -> &'static str {
        match self {
            EquilibriumKind::Trivial => "trivial",
            EquilibriumKind::Brdfe => "brdfe",
            EquilibriumKind::Endemic => "endemic",
        }
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    AsymptoticallyStable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::AsymptoticallyStable => "asymptotically_stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub control: ControlLevel,
    pub state: SystemState,
    /// Max-norm of the right-hand side at `state` (individuals per day).
    pub residual: f64,
    /// Sorted by descending real part.
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
    pub m: f64,
    /// `None` when `M <= 0`.
    pub r0: Option<f64>,
}

impl EquilibriumReport {
    pub fn max_real_part(&self) -> f64 {
        max_real_part(&self.eigenvalues)
    }

    /// `residual / max(1, ||state||_inf)`.
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.state.max_abs().max(1.0)
    }
}

fn build_report(
    kind: EquilibriumKind,
    state: SystemState,
    p: &ModelParameters,
    c: ControlLevel,
) -> Result<EquilibriumReport> {
    let residual = model::evaluate_rhs(&state, p, c)?.max_abs();
    let eigenvalues = eigenvalues(&jacobian(&state, p, c))?;
    let stability = classify_spectrum(&eigenvalues);
    Ok(EquilibriumReport {
        kind,
        control: c,
        state,
        residual,
        eigenvalues,
        stability,
        m: compute_m(p, c),
        r0: model::r0(p, c).ok(),
    })
}

/// All humans susceptible and no mosquitoes.
pub fn trivial_equilibrium(p: &ModelParameters, c: ControlLevel) -> Result<EquilibriumReport> {
    p.validate()?;
    let state = SystemState {
        s_h: p.human_population,
        ..Default::default()
    };
    build_report(EquilibriumKind::Trivial, state, p, c)
}

/// Closed-form disease-free state with persisting mosquitoes, or
/// [`Error::BrdfeUndefined`] when `M <= 0`.
pub fn brdfe_closed_form(p: &ModelParameters, c: ControlLevel) -> Result<SystemState> {
    p.validate()?;
    let m = compute_m(p, c);
    if m <= 0.0 {
        return Err(Error::BrdfeUndefined { m });
    }
    let scaled = p.carrying_capacity * m / p.egg_laying_rate;
    Ok(SystemState {
        s_h: p.human_population,
        a_m: scaled / p.maturation_rate,
        s_m: scaled / (p.mosquito_mortality + c.rate()),
        ..Default::default()
    })
}

/// Biologically realistic disease-free equilibrium.
pub fn brdfe_state(p: &ModelParameters, c: ControlLevel) -> Result<EquilibriumReport> {
    let state = brdfe_closed_form(p, c)?;
    build_report(EquilibriumKind::Brdfe, state, p, c)
}

/// Default Newton starting point: the BRDFE with 1% of the susceptible humans
/// and adult mosquitoes moved into the downstream compartments (equal shares
/// to exposed, infected and, for humans, resistant).
pub fn default_endemic_guess(p: &ModelParameters, c: ControlLevel) -> Result<SystemState> {
    let base = brdfe_closed_form(p, c)?;
    let moved_h = 0.01 * base.s_h;
    let moved_m = 0.01 * base.s_m;
    Ok(SystemState {
        s_h: base.s_h - moved_h,
        e_h: moved_h / 3.0,
        i_h: moved_h / 3.0,
        r_h: moved_h / 3.0,
        a_m: base.a_m,
        s_m: base.s_m - moved_m,
        e_m: moved_m / 2.0,
        i_m: moved_m / 2.0,
    })
}

const INFECTED: [usize; 4] = [1, 2, 6, 7];

/// Newton solve for an equilibrium with all infected compartments positive.
///
/// Newton runs in logarithmic coordinates on per-capita rates
/// `G_i = f_i(y) / y_i`, `y = exp(z)`. Disease-free roots sit at infinity in
/// these coordinates, so iterates cannot land on them; instead an iterate
/// whose infected compartments drain towards zero is reported as
/// [`Error::CollapsedToDfe`]. A guess with a non-positive infected compartment
/// collapses immediately.
pub fn endemic_solve(
    p: &ModelParameters,
    c: ControlLevel,
    guess: Option<SystemState>,
) -> Result<EquilibriumReport> {
    p.validate()?;
    let guess = match guess {
        Some(g) => g,
        None => default_endemic_guess(p, c)?,
    };
    guess.check_finite()?;
    let y0 = guess.to_array();
    if INFECTED.iter().any(|&i| y0[i] <= 0.0) {
        return Err(Error::CollapsedToDfe { last_iterate: y0 });
    }

    let scales = model::component_scales(p);
    // Components that may legitimately be zero in a guess get a small floor
    // so the logarithm exists.
    let mut z = [0.0; STATE_DIM];
    for i in 0..STATE_DIM {
        z[i] = y0[i].max(1e-6 * scales[i]).ln();
    }

    let per_capita =
        |z: &[f64; STATE_DIM]| -> ([f64; STATE_DIM], [f64; STATE_DIM], [f64; STATE_DIM]) {
            let y = z.map(f64::exp);
            let f = model::rhs(p, c.rate(), &y);
            let mut g = [0.0; STATE_DIM];
            for i in 0..STATE_DIM {
                g[i] = f[i] / y[i];
            }
            (y, f, g)
        };
    let norm2 = |v: &[f64; STATE_DIM]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual_ok = |y: &[f64; STATE_DIM], f: &[f64; STATE_DIM]| {
        model::max_abs(f) < 1e-9 * model::max_abs(y).max(1.0)
    };

    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (y, f, g) = per_capita(&z);
        if y.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence {
                iterations: MAX_NEWTON_ITERATIONS,
                residual: f64::NAN,
                last_iterate: y,
            });
        }
        if INFECTED.iter().any(|&i| y[i] < 1e-12 * scales[i]) {
            return Err(Error::CollapsedToDfe { last_iterate: y });
        }

        let j = jacobian(&SystemState::from_array(y), p, c);
        let mut jg = Jacobian::zeros();
        for r in 0..STATE_DIM {
            for col in 0..STATE_DIM {
                jg[(r, col)] = j[(r, col)] * y[col] / y[r];
            }
            jg[(r, r)] -= g[r];
        }
        let rhs = -SVector::<f64, STATE_DIM>::from(g);
        let dz = jg.lu().solve(&rhs).ok_or(Error::SingularJacobian)?;
        if dz.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let dz = dz.map(|v| v.clamp(-10.0, 10.0));

        let base = norm2(&g);
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-10 {
            let mut trial = z;
            for i in 0..STATE_DIM {
                trial[i] += lambda * dz[i];
            }
            let (_, _, g_trial) = per_capita(&trial);
            let n = norm2(&g_trial);
            if n.is_finite() && n < (1.0 - 1e-4 * lambda) * base {
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved && residual_ok(&y, &f) {
            // Stagnated at rounding level.
            return finish_endemic(y, p, c);
        }
        let mut largest = 0.0_f64;
        for i in 0..STATE_DIM {
            z[i] += lambda * dz[i];
            largest = largest.max((lambda * dz[i]).abs());
        }
        if largest < 1e-12 {
            let (y, f, _) = per_capita(&z);
            if residual_ok(&y, &f) {
                return finish_endemic(y, p, c);
            }
        }
    }
    let (y, f, _) = per_capita(&z);
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual: model::max_abs(&f),
        last_iterate: y,
    })
}

fn finish_endemic(
    y: [f64; STATE_DIM],
    p: &ModelParameters,
    c: ControlLevel,
) -> Result<EquilibriumReport> {
    let state = SystemState::from_array(y);
    if let Some(why) = state.region_violation(p) {
        return Err(Error::InvalidState(format!(
            "endemic root outside the biological region: {why}"
        )));
    }
    build_report(EquilibriumKind::Endemic, state, p, c)
}

/// Analytic Jacobian of the right-hand side at `state`.
pub fn jacobian(state: &SystemState, p: &ModelParameters, c: ControlLevel) -> Jacobian {
    let SystemState {
        s_h,
        i_h,
        a_m,
        s_m,
        e_m,
        i_m,
        ..
    } = *state;
    let c = c.rate();
    let to_human = p.biting_rate * p.transmission_to_human / p.human_population;
    let to_mosquito = p.biting_rate * p.transmission_to_mosquito / p.human_population;
    let mu_h = p.human_mortality;
    let adults = s_m + e_m + i_m;
    let egg_slope = p.egg_laying_rate * (1.0 - a_m / p.carrying_capacity);

    let mut j = Jacobian::zeros();
    // S_h
    j[(0, 0)] = -(to_human * i_m + mu_h);
    j[(0, 7)] = -to_human * s_h;
    // E_h
    j[(1, 0)] = to_human * i_m;
    j[(1, 1)] = -(p.human_incubation + mu_h);
    j[(1, 7)] = to_human * s_h;
    // I_h
    j[(2, 1)] = p.human_incubation;
    j[(2, 2)] = -(p.human_recovery + mu_h);
    // R_h
    j[(3, 2)] = p.human_recovery;
    j[(3, 3)] = -mu_h;
    // A_m
    j[(4, 4)] = -p.egg_laying_rate * adults / p.carrying_capacity
        - (p.maturation_rate + p.aquatic_mortality);
    j[(4, 5)] = egg_slope;
    j[(4, 6)] = egg_slope;
    j[(4, 7)] = egg_slope;
    // S_m
    j[(5, 2)] = -to_mosquito * s_m;
    j[(5, 4)] = p.maturation_rate;
    j[(5, 5)] = -(to_mosquito * i_h + p.mosquito_mortality + c);
    // E_m
    j[(6, 2)] = to_mosquito * s_m;
    j[(6, 5)] = to_mosquito * i_h;
    j[(6, 6)] = -(p.mosquito_mortality + p.mosquito_incubation + c);
    // I_m
    j[(7, 6)] = p.mosquito_incubation;
    j[(7, 7)] = -(p.mosquito_mortality + c);
    j
}

/// Eigenvalues via a real Schur decomposition, sorted by descending real
/// part (ties by descending imaginary part).
pub fn eigenvalues(matrix: &Jacobian) -> Result<Vec<Complex64>> {
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let schur =
        nalgebra::Schur::try_new(*matrix, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let mut values: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(values)
}

pub fn max_real_part(values: &[Complex64]) -> f64 {
    values
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Verdict from the leading real part alone.
pub fn classify_spectrum(values: &[Complex64]) -> Stability {
    let lead = max_real_part(values);
    if lead < -STABILITY_BAND {
        Stability::AsymptoticallyStable
    } else if lead > STABILITY_BAND {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

/// Stability verdict for a report. For a BRDFE a non-marginal verdict must
/// agree with `R0 < 1` (stable) or `R0 > 1` (unstable).
pub fn classify_stability(report: &EquilibriumReport) -> Result<Stability> {
    let verdict = classify_spectrum(&report.eigenvalues);
    if report.kind == EquilibriumKind::Brdfe && verdict != Stability::Marginal {
        if let Some(r0) = report.r0 {
            let expected = if r0 < 1.0 {
                Some(Stability::AsymptoticallyStable)
            } else if r0 > 1.0 {
                Some(Stability::Unstable)
            } else {
                None
            };
            if let Some(expected) = expected {
                if expected != verdict {
                    return Err(Error::StabilityMismatch {
                        verdict: verdict.name(),
                        expected: expected.name(),
                        r0,
                    });
                }
            }
        }
    }
    Ok(verdict)
}

/// Smallest constant control with `R0 <= 1`, to bisection half-width `tol`.
///
/// Returns 0 when `R0(0) <= 1`. The search bracket is `[0, c_max)`, where
/// `c_max` is the control at which `M` reaches zero.
pub fn threshold_control(p: &ModelParameters, tol: f64) -> Result<f64> {
    p.validate()?;
    threshold_control_bracketed(p, tol, control_upper_bound(p))
}

/// [`threshold_control`] with an explicit upper end of the initial bracket.
/// `upper` must satisfy `R0(upper) < 1` (or lie at or beyond `c_max`).
pub fn threshold_control_bracketed(p: &ModelParameters, tol: f64, upper: f64) -> Result<f64> {
    p.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            constraint: format!("must be finite and > 0, got {tol}"),
        });
    }
    let r0_at_zero = model::r0(p, ControlLevel::NONE)?;
    if r0_at_zero <= 1.0 {
        return Ok(0.0);
    }
    // Above 1 strictly; undefined R0 (M <= 0) counts as below.
    let above_one = |c: f64| -> bool {
        match ControlLevel::new(c).and_then(|c| model::r0(p, c)) {
            Ok(r) => r > 1.0,
            Err(_) => false,
        }
    };
    if !(upper.is_finite() && upper > 0.0) || above_one(upper) {
        return Err(Error::InvalidParameter {
            name: "upper",
            constraint: format!("bracket upper end {upper} does not have R0 < 1"),
        });
    }
    let (mut lo, mut hi) = (0.0_f64, upper);
    while 0.5 * (hi - lo) > tol {
        let mid = 0.5 * (lo + hi);
        if above_one(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of a control sweep. Missing values carry the reason in `errors`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    pub m: Option<f64>,
    pub r0: Option<f64>,
    pub stability: Option<Stability>,
    /// `(t, value)` of the largest sampled infected-human count.
    pub peak_infected_humans: Option<(f64, f64)>,
    pub final_infected_mosquitoes: Option<f64>,
    pub errors: Vec<String>,
}

/// Evaluates `M`, `R0`, BRDFE stability and a simulation for every control
/// level in `grid`. Rows are computed in parallel; order follows the grid.
pub fn sweep(
    p: &ModelParameters,
    grid: &[f64],
    initial: &SystemState,
    cfg: &IntegrationConfig,
) -> Result<Vec<SweepRow>> {
    p.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            constraint: "control grid must not be empty".into(),
        });
    }
    if grid
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidParameter {
            name: "grid",
            constraint: "control grid must be strictly ascending".into(),
        });
    }
    Ok(grid
        .par_iter()
        .map(|&c| sweep_row(p, c, initial, cfg))
        .collect())
}

fn sweep_row(
    p: &ModelParameters,
    c: f64,
    initial: &SystemState,
    cfg: &IntegrationConfig,
) -> SweepRow {
    let mut row = SweepRow {
        c,
        m: None,
        r0: None,
        stability: None,
        peak_infected_humans: None,
        final_infected_mosquitoes: None,
        errors: Vec::new(),
    };
    let control = match ControlLevel::new(c) {
        Ok(control) => control,
        Err(e) => {
            row.errors.push(e.to_string());
            return row;
        }
    };
    row.m = Some(compute_m(p, control));
    match model::r0(p, control) {
        Ok(r) => row.r0 = Some(r),
        Err(e) => row.errors.push(e.to_string()),
    }
    match brdfe_state(p, control).and_then(|rep| classify_stability(&rep)) {
        Ok(s) => row.stability = Some(s),
        Err(e) => row.errors.push(e.to_string()),
    }
    match integrate(initial, p, control, cfg) {
        Ok(traj) => {
            row.peak_infected_humans = Some(traj.peak(Compartment::InfectedHumans));
            row.final_infected_mosquitoes = Some(traj.final_state().i_m);
        }
        Err(e) => row.errors.push(e.to_string()),
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv() -> ModelParameters {
        ModelParameters::cape_verde_2009()
    }

    fn control(c: f64) -> ControlLevel {
        ControlLevel::new(c).unwrap()
    }

    fn contains_real(values: &[Complex64], target: f64) -> bool {
        values
            .iter()
            .any(|z| z.im.abs() < 1e-12 && (z.re - target).abs() < 1e-9 * target.abs().max(1e-3))
    }

    #[test]
    fn trivial_equilibrium_cape_verde() {
        let p = cv();
        let rep = trivial_equilibrium(&p, ControlLevel::NONE).unwrap();
        assert_eq!(rep.kind, EquilibriumKind::Trivial);
        assert_eq!(rep.state.s_h, 480_000.0);
        assert_eq!(rep.state.human_total(), 480_000.0);
        assert!(rep.residual < 1e-12);
        assert_eq!(rep.eigenvalues.len(), 8);
        assert!(contains_real(&rep.eigenvalues, -p.human_mortality));
        assert!(contains_real(
            &rep.eigenvalues,
            -p.human_recovery - p.human_mortality
        ));
    }

    #[test]
    fn brdfe_cape_verde_closed_form() {
        let p = cv();
        let rep = brdfe_state(&p, ControlLevel::NONE).unwrap();
        assert!((rep.state.a_m - 1_350_000.0).abs() < 1e-6);
        assert!((rep.state.s_m - 1_188_000.0).abs() < 1e-6);
        assert!(rep.relative_residual() < 1e-9);
        assert!((rep.r0.unwrap() - 2.396).abs() < 1e-3);

        let rep = brdfe_state(&p, control(0.084)).unwrap();
        assert!((rep.m - 0.42228).abs() < 1e-14);
        assert!((rep.state.a_m - 1_266_840.0).abs() < 1e-6);
        assert!(rep.relative_residual() < 1e-9);
    }

    #[test]
    fn brdfe_requires_positive_m() {
        let mut p = cv();
        p.egg_laying_rate = 0.05;
        assert!(matches!(
            brdfe_state(&p, ControlLevel::NONE),
            Err(Error::BrdfeUndefined { .. })
        ));
    }

    #[test]
    fn jacobian_spot_entries() {
        let p = cv();
        let state = SystemState {
            s_h: 300_000.0,
            e_h: 1000.0,
            i_h: 2500.0,
            r_h: 176_500.0,
            a_m: 1_000_000.0,
            s_m: 900_000.0,
            e_m: 4000.0,
            i_m: 3000.0,
        };
        let j = jacobian(&state, &p, control(0.1));
        assert_eq!(j[(7, 6)], p.mosquito_incubation);
        let expected = -p.biting_rate * p.transmission_to_human * state.s_h / p.human_population;
        assert!((j[(0, 7)] - expected).abs() < 1e-15);
        assert_eq!(j[(3, 3)], -p.human_mortality);
    }

    #[test]
    fn diagonal_eigenvalues_exact() {
        let m = Jacobian::from_diagonal(&SVector::<f64, 8>::from_fn(|i, _| -((i + 1) as f64)));
        let eig = eigenvalues(&m).unwrap();
        for (i, z) in eig.iter().enumerate() {
            assert_eq!(z.re, -((i + 1) as f64));
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn eigenvalues_reject_non_finite() {
        let mut m = Jacobian::identity();
        m[(2, 3)] = f64::NAN;
        assert!(matches!(eigenvalues(&m), Err(Error::EigenFailure)));
    }

    #[test]
    fn brdfe_stability_flip() {
        let p = cv();
        let stable = brdfe_state(&p, control(0.084)).unwrap();
        assert!(stable.max_real_part() < 0.0);
        assert_eq!(
            classify_stability(&stable).unwrap(),
            Stability::AsymptoticallyStable
        );
        assert!(stable.r0.unwrap() < 1.0);

        let unstable = brdfe_state(&p, control(0.05)).unwrap();
        assert_eq!(classify_stability(&unstable).unwrap(), Stability::Unstable);
        assert!(unstable.r0.unwrap() > 1.0);
    }

    #[test]
    fn marginal_band() {
        let zero = vec![Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert_eq!(classify_spectrum(&zero), Stability::Marginal);
        let tiny = vec![Complex64::new(5e-11, 1.0), Complex64::new(5e-11, -1.0)];
        assert_eq!(classify_spectrum(&tiny), Stability::Marginal);
        let barely = vec![Complex64::new(-2e-10, 0.0)];
        assert_eq!(classify_spectrum(&barely), Stability::AsymptoticallyStable);
    }

    #[test]
    fn mismatch_is_reported() {
        let p = cv();
        let mut rep = brdfe_state(&p, control(0.084)).unwrap();
        rep.eigenvalues[0] = Complex64::new(0.5, 0.0);
        rep.eigenvalues
            .sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        assert!(matches!(
            classify_stability(&rep),
            Err(Error::StabilityMismatch { .. })
        ));
        // Other kinds are never cross-checked.
        rep.kind = EquilibriumKind::Endemic;
        assert_eq!(classify_stability(&rep).unwrap(), Stability::Unstable);
    }

    #[test]
    fn threshold_cape_verde() {
        let p = cv();
        let c = threshold_control(&p, 1e-5).unwrap();
        assert!((c - 0.0837).abs() < 5e-4, "{c}");
        let r = |c: f64| model::r0(&p, control(c)).unwrap();
        assert!(r(c - 0.001) > 1.0);
        assert!(r(c + 0.001) < 1.0);
        assert!(r(c + 1e-5) < 1.0);
    }

    #[test]
    fn threshold_without_transmission_is_zero() {
        let mut p = cv();
        p.transmission_to_human = 0.0;
        assert_eq!(threshold_control(&p, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn threshold_without_mosquito_regime() {
        let mut p = cv();
        p.egg_laying_rate = 0.05;
        assert!(matches!(
            threshold_control(&p, 1e-6),
            Err(Error::R0Undefined { .. })
        ));
    }

    #[test]
    fn threshold_rejects_bad_bracket() {
        let p = cv();
        assert!(threshold_control_bracketed(&p, 1e-6, 0.05).is_err());
        assert!(threshold_control(&p, 0.0).is_err());
    }

    #[test]
    fn endemic_from_brdfe_collapses() {
        let p = cv();
        let guess = brdfe_closed_form(&p, ControlLevel::NONE).unwrap();
        assert!(matches!(
            endemic_solve(&p, ControlLevel::NONE, Some(guess)),
            Err(Error::CollapsedToDfe { .. })
        ));
    }

    #[test]
    fn sweep_validates_grid() {
        let p = cv();
        let init = brdfe_closed_form(&p, ControlLevel::NONE).unwrap();
        let cfg = IntegrationConfig::default();
        assert!(sweep(&p, &[], &init, &cfg).is_err());
        assert!(sweep(&p, &[0.1, 0.05], &init, &cfg).is_err());
    }
}
