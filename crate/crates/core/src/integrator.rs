//! Time integration of the transmission model.
//!
//! Two explicit Runge-Kutta schemes share one driver:
//!
//! - [`Method::FixedRk4`]: classical fourth-order Runge-Kutta at a fixed step,
//!   used as the audited reference.
//! - [`Method::Adaptive45`]: the Dormand-Prince 5(4) embedded pair with
//!   weighted-RMS error control, used by default.
//!
//! Output is sampled at multiples of `sample_interval` plus the final time.
//! The adaptive stepper shortens a step when needed so that it lands exactly
//! on the next sample time; the fixed stepper falls back to linear
//! interpolation between accepted steps when its grid does not contain a
//! sample time.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    self, component_scales, undershoot_tolerance, Compartment, ControlLevel, ModelParameters,
    SystemState, STATE_DIM,
};

type Vector = [f64; STATE_DIM];

/// Smallest step the adaptive controller may take before giving up.
pub const MIN_ADAPTIVE_STEP: f64 = 1e-12;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// An autonomous ODE system of dimension [`STATE_DIM`].
pub trait OdeSystem {
    fn derivative(&self, y: &Vector) -> Vector;
}

/// The dengue model at a fixed control level.
#[derive(Debug, Clone, Copy)]
pub struct TransmissionSystem {
    params: ModelParameters,
    control: f64,
}

impl TransmissionSystem {
    pub fn new(params: &ModelParameters, control: ControlLevel) -> Result<Self> {
        params.validate()?;
        Ok(TransmissionSystem {
            params: *params,
            control: control.rate(),
        })
    }
}

impl OdeSystem for TransmissionSystem {
    fn derivative(&self, y: &Vector) -> Vector {
        model::rhs(&self.params, self.control, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    FixedRk4,
    Adaptive45,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FixedRk4 => "fixed_rk4",
            Method::Adaptive45 => "adaptive_45",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fixed_rk4" => Ok(Method::FixedRk4),
            "adaptive_45" => Ok(Method::Adaptive45),
            other => Err(format!(
                "unknown method `{other}` (expected fixed_rk4 or adaptive_45)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub t0: f64,
    pub t_final: f64,
    pub method: Method,
    /// Step for [`Method::FixedRk4`], in days.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub sample_interval: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            t0: 0.0,
            t_final: 84.0,
            method: Method::Adaptive45,
            step: 0.05,
            rel_tol: 1e-8,
            abs_tol: 1e-8,
            sample_interval: 0.5,
        }
    }
}

impl IntegrationConfig {
    pub fn fixed(step: f64, t_final: f64) -> Self {
        IntegrationConfig {
            method: Method::FixedRk4,
            step,
            t_final,
            ..Default::default()
        }
    }

    pub fn adaptive(rel_tol: f64, abs_tol: f64, t_final: f64) -> Self {
        IntegrationConfig {
            method: Method::Adaptive45,
            rel_tol,
            abs_tol,
            t_final,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.t0.is_finite() || !self.t_final.is_finite() {
            return bad("t0 and t_final must be finite".into());
        }
        if self.t_final <= self.t0 {
            return bad(format!(
                "t_final ({}) must exceed t0 ({})",
                self.t_final, self.t0
            ));
        }
        for (name, v) in [
            ("step", self.step),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("sample_interval", self.sample_interval),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Output times: `t0 + j * sample_interval` below `t_final`, then `t_final`.
    pub fn sample_times(&self) -> Vec<f64> {
        let span = self.t_final - self.t0;
        let count = (span / self.sample_interval - 1e-9).ceil().max(1.0) as usize;
        let mut times: Vec<f64> = (0..count)
            .map(|j| self.t0 + j as f64 * self.sample_interval)
            .collect();
        times.push(self.t_final);
        times
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: SystemState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub method: Method,
}

impl Trajectory {
    pub fn initial_state(&self) -> SystemState {
        self.samples[0].state
    }

    pub fn final_state(&self) -> SystemState {
        self.samples[self.samples.len() - 1].state
    }

    pub fn final_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Time and value of the largest sampled value of one compartment.
    pub fn peak(&self, c: Compartment) -> (f64, f64) {
        self.samples.iter().map(|s| (s.t, s.state.get(c))).fold(
            (f64::NAN, f64::NEG_INFINITY),
            |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            },
        )
    }

    /// Largest `||a - b||_inf / ||b||_inf` over samples shared by position.
    ///
    /// `None` when the sample grids differ.
    pub fn max_relative_deviation(&self, reference: &Trajectory) -> Option<f64> {
        if self.samples.len() != reference.samples.len() {
            return None;
        }
        let mut worst = 0.0_f64;
        for (a, b) in self.samples.iter().zip(&reference.samples) {
            if (a.t - b.t).abs() > 1e-12 * b.t.abs().max(1.0) {
                return None;
            }
            worst = worst.max(relative_max_norm(&a.state, &b.state));
        }
        Some(worst)
    }
}

/// `||a - b||_inf / max(||b||_inf, tiny)`.
pub fn relative_max_norm(a: &SystemState, b: &SystemState) -> f64 {
    let (a, b) = (a.to_array(), b.to_array());
    let diff = a
        .iter()
        .zip(&b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
    diff / model::max_abs(&b).max(f64::MIN_POSITIVE)
}

/// Integrates the transmission model from `initial` over `cfg`.
///
/// Aborts with [`Error::PositivityViolation`] if an accepted step leaves any
/// component below `-1e-9 * max(1, scale)`, where the scale is N_h for
/// humans, K for the aquatic phase and m * N_h for adult mosquitoes.
pub fn integrate(
    initial: &SystemState,
    p: &ModelParameters,
    c: ControlLevel,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    let system = TransmissionSystem::new(p, c)?;
    initial.check_finite()?;
    if let Some(why) = initial.region_violation(p) {
        return Err(Error::InvalidState(format!(
            "initial state outside the biological region: {why}"
        )));
    }
    let tolerances = component_scales(p).map(undershoot_tolerance);
    let guard = |t: f64, h: f64, y: &Vector| -> Result<()> {
        for (i, (&v, &tol)) in y.iter().zip(&tolerances).enumerate() {
            if v < -tol || !v.is_finite() {
                return Err(Error::PositivityViolation {
                    component: Compartment::ALL[i].label(),
                    value: v,
                    t,
                    step: h,
                    tolerance: tol,
                });
            }
        }
        Ok(())
    };
    let raw = integrate_system(&system, initial.to_array(), cfg, guard)?;
    Ok(raw.into_trajectory(cfg.method))
}

/// Sampled output of [`integrate_system`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl RawSolution {
    fn into_trajectory(self, method: Method) -> Trajectory {
        let samples = self
            .times
            .into_iter()
            .zip(self.states)
            .map(|(t, y)| Sample {
                t,
                state: SystemState::from_array(y),
            })
            .collect();
        Trajectory {
            samples,
            accepted_steps: self.accepted_steps,
            rejected_steps: self.rejected_steps,
            method,
        }
    }

    pub fn final_state(&self) -> &Vector {
        &self.states[self.states.len() - 1]
    }
}

/// Integrates any [`OdeSystem`]. `on_step(t, h, y)` is called after every
/// accepted step and may abort the run.
pub fn integrate_system<S, G>(
    system: &S,
    y0: Vector,
    cfg: &IntegrationConfig,
    on_step: G,
) -> Result<RawSolution>
where
    S: OdeSystem,
    G: FnMut(f64, f64, &Vector) -> Result<()>,
{
    cfg.validate()?;
    let mut sampler = Sampler::new(cfg.sample_times(), y0);
    let (accepted, rejected) = match cfg.method {
        Method::FixedRk4 => run_fixed(system, y0, cfg, &mut sampler, on_step)?,
        Method::Adaptive45 => run_adaptive(system, y0, cfg, &mut sampler, on_step)?,
    };
    debug_assert_eq!(sampler.states.len(), sampler.times.len());
    Ok(RawSolution {
        times: sampler.times,
        states: sampler.states,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

struct Sampler {
    times: Vec<f64>,
    states: Vec<Vector>,
}

impl Sampler {
    fn new(times: Vec<f64>, y0: Vector) -> Self {
        let mut states = Vec::with_capacity(times.len());
        states.push(y0);
        Sampler { times, states }
    }

    fn next_time(&self) -> Option<f64> {
        self.times.get(self.states.len()).copied()
    }

    /// Records every pending sample time in `(ta, tb]`.
    fn advance(&mut self, ta: f64, ya: &Vector, tb: f64, yb: &Vector) {
        while let Some(t) = self.next_time() {
            if lands_on(t, tb) {
                self.states.push(*yb);
            } else if t < tb {
                let theta = (t - ta) / (tb - ta);
                let mut y = [0.0; STATE_DIM];
                for i in 0..STATE_DIM {
                    y[i] = ya[i] + theta * (yb[i] - ya[i]);
                }
                self.states.push(y);
            } else {
                break;
            }
        }
    }
}

fn lands_on(t: f64, target: f64) -> bool {
    (t - target).abs() <= 1e-12 * target.abs().max(1.0)
}

fn axpy(y: &Vector, h: f64, terms: &[(f64, &Vector)]) -> Vector {
    let mut out = *y;
    for i in 0..STATE_DIM {
        let mut acc = 0.0;
        for (coef, k) in terms {
            acc += coef * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// One classical RK4 step.
pub fn rk4_step<S: OdeSystem>(system: &S, y: &Vector, h: f64) -> Vector {
    let k1 = system.derivative(y);
    let k2 = system.derivative(&axpy(y, h, &[(0.5, &k1)]));
    let k3 = system.derivative(&axpy(y, h, &[(0.5, &k2)]));
    let k4 = system.derivative(&axpy(y, h, &[(1.0, &k3)]));
    axpy(
        y,
        h,
        &[
            (1.0 / 6.0, &k1),
            (1.0 / 3.0, &k2),
            (1.0 / 3.0, &k3),
            (1.0 / 6.0, &k4),
        ],
    )
}

fn run_fixed<S, G>(
    system: &S,
    y0: Vector,
    cfg: &IntegrationConfig,
    sampler: &mut Sampler,
    mut on_step: G,
) -> Result<(usize, usize)>
where
    S: OdeSystem,
    G: FnMut(f64, f64, &Vector) -> Result<()>,
{
    let span = cfg.t_final - cfg.t0;
    let steps = (span / cfg.step - 1e-9).ceil().max(1.0) as usize;
    let mut y = y0;
    let mut t = cfg.t0;
    for i in 1..=steps {
        let t_next = if i == steps {
            cfg.t_final
        } else {
            cfg.t0 + i as f64 * cfg.step
        };
        let h = t_next - t;
        let y_next = rk4_step(system, &y, h);
        on_step(t_next, h, &y_next)?;
        sampler.advance(t, &y, t_next, &y_next);
        t = t_next;
        y = y_next;
    }
    Ok((steps, 0))
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct DopriStep {
    y: Vector,
    /// Derivative at the new point, reused as the next first stage.
    k7: Vector,
    error: f64,
}

fn dopri_step<S: OdeSystem>(
    system: &S,
    y: &Vector,
    k1: &Vector,
    h: f64,
    cfg: &IntegrationConfig,
) -> DopriStep {
    let k2 = system.derivative(&axpy(y, h, &[(A21, k1)]));
    let k3 = system.derivative(&axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = system.derivative(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = system.derivative(&axpy(
        y,
        h,
        &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)],
    ));
    let k6 = system.derivative(&axpy(
        y,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let y_new = axpy(
        y,
        h,
        &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = system.derivative(&y_new);

    let mut sum = 0.0;
    for i in 0..STATE_DIM {
        let err = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (err / scale).powi(2);
    }
    DopriStep {
        y: y_new,
        k7,
        error: (sum / STATE_DIM as f64).sqrt(),
    }
}

fn weighted_rms(v: &Vector, y: &Vector, cfg: &IntegrationConfig) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y)
        .map(|(vi, yi)| (vi / (cfg.abs_tol + cfg.rel_tol * yi.abs())).powi(2))
        .sum();
    (sum / STATE_DIM as f64).sqrt()
}

/// Starting step estimate (Hairer, Norsett & Wanner, II.4).
fn initial_step<S: OdeSystem>(
    system: &S,
    y0: &Vector,
    f0: &Vector,
    cfg: &IntegrationConfig,
) -> f64 {
    let d0 = weighted_rms(y0, y0, cfg);
    let d1 = weighted_rms(f0, y0, cfg);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = system.derivative(&y1);
    let mut diff = [0.0; STATE_DIM];
    for i in 0..STATE_DIM {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = weighted_rms(&diff, y0, cfg) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(cfg.t_final - cfg.t0)
}

fn run_adaptive<S, G>(
    system: &S,
    y0: Vector,
    cfg: &IntegrationConfig,
    sampler: &mut Sampler,
    mut on_step: G,
) -> Result<(usize, usize)>
where
    S: OdeSystem,
    G: FnMut(f64, f64, &Vector) -> Result<()>,
{
    let mut t = cfg.t0;
    let mut y = y0;
    let mut k1 = system.derivative(&y);
    let mut h = initial_step(system, &y, &k1, cfg);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut last_rejected = false;

    while let Some(target) = sampler.next_time() {
        let remaining = target - t;
        let clipped = h >= remaining || lands_on(t + h, target);
        let h_try = if clipped { remaining } else { h };
        if h_try < MIN_ADAPTIVE_STEP {
            return Err(Error::StepUnderflow {
                t,
                step: h_try,
                min_step: MIN_ADAPTIVE_STEP,
            });
        }

        let step = dopri_step(system, &y, &k1, h_try, cfg);
        let factor = if step.error == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * step.error.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };

        if step.error <= 1.0 && step.y.iter().all(|v| v.is_finite()) {
            let t_new = if clipped { target } else { t + h_try };
            on_step(t_new, h_try, &step.y)?;
            sampler.advance(t, &y, t_new, &step.y);
            accepted += 1;
            let grown = if last_rejected {
                h_try * factor.min(1.0)
            } else {
                h_try * factor
            };
            // A step shortened to hit a sample time says little about the
            // achievable step; keep the earlier proposal if it was larger.
            h = if clipped { grown.max(h) } else { grown };
            t = t_new;
            y = step.y;
            k1 = step.k7;
            last_rejected = false;
        } else {
            rejected += 1;
            h = h_try * factor.min(1.0);
            if !step.error.is_finite() {
                h = h_try * MIN_FACTOR;
            }
            last_rejected = true;
        }
    }
    Ok((accepted, rejected))
}

/// Empirical order of convergence of the fixed RK4 stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceEstimate {
    /// Endpoint max-norm errors at `h`, `h/2`, `h/4` against an `h/16` run.
    pub errors: [f64; 3],
    /// `log2(e(h)/e(h/2))` and `log2(e(h/2)/e(h/4))`.
    pub pair_orders: [f64; 2],
    /// Estimate from the finest pair, which is closest to the asymptotic
    /// regime.
    pub order: f64,
}

/// Richardson-style order estimate for RK4 on an arbitrary system.
pub fn convergence_order_of<S: OdeSystem>(
    system: &S,
    y0: Vector,
    horizon: f64,
    base_step: f64,
) -> Result<ConvergenceEstimate> {
    convergence_order_guarded(system, y0, horizon, base_step, |_, _, _| Ok(()))
}

fn convergence_order_guarded<S, G>(
    system: &S,
    y0: Vector,
    horizon: f64,
    base_step: f64,
    mut guard: G,
) -> Result<ConvergenceEstimate>
where
    S: OdeSystem,
    G: FnMut(f64, f64, &Vector) -> Result<()>,
{
    let mut endpoint = |step: f64| -> Result<Vector> {
        let cfg = IntegrationConfig {
            t0: 0.0,
            t_final: horizon,
            method: Method::FixedRk4,
            step,
            sample_interval: horizon,
            ..Default::default()
        };
        let sol = integrate_system(system, y0, &cfg, &mut guard)?;
        Ok(*sol.final_state())
    };
    let reference = endpoint(base_step / 16.0)?;
    let mut errors = [0.0; 3];
    for (i, e) in errors.iter_mut().enumerate() {
        let y = endpoint(base_step / f64::from(1u32 << i))?;
        *e = y
            .iter()
            .zip(&reference)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
    }
    let pair_orders = [
        (errors[0] / errors[1]).log2(),
        (errors[1] / errors[2]).log2(),
    ];
    Ok(ConvergenceEstimate {
        errors,
        pair_orders,
        order: pair_orders[1],
    })
}

/// Empirical RK4 order on the transmission model over `[0, horizon]`.
/// Any sub-run that violates positivity aborts the estimate.
pub fn convergence_order(
    initial: &SystemState,
    p: &ModelParameters,
    c: ControlLevel,
    base_step: f64,
    horizon: f64,
) -> Result<ConvergenceEstimate> {
    let system = TransmissionSystem::new(p, c)?;
    initial.check_finite()?;
    let tolerances = component_scales(p).map(undershoot_tolerance);
    convergence_order_guarded(
        &system,
        initial.to_array(),
        horizon,
        base_step,
        |t, h, y| {
            for (i, (&v, &tol)) in y.iter().zip(&tolerances).enumerate() {
                if v < -tol {
                    return Err(Error::PositivityViolation {
                        component: Compartment::ALL[i].label(),
                        value: v,
                        t,
                        step: h,
                        tolerance: tol,
                    });
                }
            }
            Ok(())
        },
    )
}
