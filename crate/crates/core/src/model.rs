//! Model types and pure evaluations of the coupled human/mosquito system.
//!
//! Humans move through susceptible, exposed, infected and resistant
//! compartments with a constant total population. Female mosquitoes have an
//! aquatic phase (egg, larva, pupa) with logistic egg laying, followed by
//! susceptible, exposed and infected adult compartments. An adulticide
//! applied at a constant rate removes adults only; the aquatic phase is not
//! affected by it.

use std::fmt;

use crate::error::{Error, Result};

/// Number of compartments in [`SystemState`].
pub const STATE_DIM: usize = 8;

/// Compartment labels, in state-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    SusceptibleHumans,
    ExposedHumans,
    InfectedHumans,
    ResistantHumans,
    AquaticMosquitoes,
    SusceptibleMosquitoes,
    ExposedMosquitoes,
    InfectedMosquitoes,
}

impl Compartment {
    pub const ALL: [Compartment; STATE_DIM] = [
        Compartment::SusceptibleHumans,
        Compartment::ExposedHumans,
        Compartment::InfectedHumans,
        Compartment::ResistantHumans,
        Compartment::AquaticMosquitoes,
        Compartment::SusceptibleMosquitoes,
        Compartment::ExposedMosquitoes,
        Compartment::InfectedMosquitoes,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short label, also used as the CSV column name.
    pub fn label(self) -> &'static str {
        match self {
            Compartment::SusceptibleHumans => "S_h",
            Compartment::ExposedHumans => "E_h",
            Compartment::InfectedHumans => "I_h",
            Compartment::ResistantHumans => "R_h",
            Compartment::AquaticMosquitoes => "A_m",
            Compartment::SusceptibleMosquitoes => "S_m",
            Compartment::ExposedMosquitoes => "E_m",
            Compartment::InfectedMosquitoes => "I_m",
        }
    }

    pub fn is_human(self) -> bool {
        self.index() < 4
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Compartment sizes at one instant, in individuals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SystemState {
    pub s_h: f64,
    pub e_h: f64,
    pub i_h: f64,
    pub r_h: f64,
    pub a_m: f64,
    pub s_m: f64,
    pub e_m: f64,
    pub i_m: f64,
}

impl SystemState {
    pub fn from_array(y: [f64; STATE_DIM]) -> Self {
        SystemState {
            s_h: y[0],
            e_h: y[1],
            i_h: y[2],
            r_h: y[3],
            a_m: y[4],
            s_m: y[5],
            e_m: y[6],
            i_m: y[7],
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.s_h, self.e_h, self.i_h, self.r_h, self.a_m, self.s_m, self.e_m, self.i_m,
        ]
    }

    pub fn get(&self, c: Compartment) -> f64 {
        self.to_array()[c.index()]
    }

    pub fn human_total(&self) -> f64 {
        self.s_h + self.e_h + self.i_h + self.r_h
    }

    pub fn adult_mosquitoes(&self) -> f64 {
        self.s_m + self.e_m + self.i_m
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.to_array())
    }

    /// Fails on the first non-finite component.
    pub fn check_finite(&self) -> Result<()> {
        for (c, v) in Compartment::ALL.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    component: c.label(),
                });
            }
        }
        Ok(())
    }

    /// Membership in the region of biological interest, allowing the
    /// integration undershoot tolerance on every bound.
    ///
    /// Returns a description of the first violated constraint.
    pub fn region_violation(&self, p: &ModelParameters) -> Option<String> {
        let scales = component_scales(p);
        for ((c, v), scale) in Compartment::ALL.iter().zip(self.to_array()).zip(scales) {
            if v < -undershoot_tolerance(scale) {
                return Some(format!("{c} = {v:e} is negative"));
            }
        }
        let humans = self.s_h + self.e_h + self.i_h;
        if humans > p.human_population + undershoot_tolerance(p.human_population) {
            return Some(format!(
                "S_h + E_h + I_h = {humans} exceeds N_h = {}",
                p.human_population
            ));
        }
        if self.a_m > p.carrying_capacity + undershoot_tolerance(p.carrying_capacity) {
            return Some(format!(
                "A_m = {} exceeds k*N_h = {}",
                self.a_m, p.carrying_capacity
            ));
        }
        let adult_cap = p.mosquitoes_per_human * p.human_population;
        let adults = self.adult_mosquitoes();
        if adults > adult_cap + undershoot_tolerance(adult_cap) {
            return Some(format!(
                "S_m + E_m + I_m = {adults} exceeds m*N_h = {adult_cap}"
            ));
        }
        None
    }

    pub fn in_region(&self, p: &ModelParameters) -> bool {
        self.region_violation(p).is_none()
    }
}

/// Time derivatives of the eight compartments, same order as [`SystemState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeVector(pub [f64; STATE_DIM]);

impl DerivativeVector {
    pub fn get(&self, c: Compartment) -> f64 {
        self.0[c.index()]
    }

    /// Net rate of change of the human population.
    pub fn human_sum(&self) -> f64 {
        self.0[..4].iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

/// Epidemiological and entomological constants. All rates are per day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParameters {
    /// Total human population N_h.
    pub human_population: f64,
    /// Average daily bites per mosquito, B.
    pub biting_rate: f64,
    /// Transmission probability per bite from an infected mosquito.
    pub transmission_to_human: f64,
    /// Transmission probability per bite from an infected human.
    pub transmission_to_mosquito: f64,
    /// Human mortality (reciprocal of lifespan).
    pub human_mortality: f64,
    /// Human recovery rate (reciprocal of the viremic period).
    pub human_recovery: f64,
    /// Adult mosquito mortality (reciprocal of lifespan).
    pub mosquito_mortality: f64,
    /// Eggs per deposit per capita per day.
    pub egg_laying_rate: f64,
    /// Natural mortality in the aquatic phase.
    pub aquatic_mortality: f64,
    /// Maturation rate from aquatic phase to adult.
    pub maturation_rate: f64,
    /// Reciprocal of the extrinsic (mosquito) incubation period.
    pub mosquito_incubation: f64,
    /// Reciprocal of the intrinsic (human) incubation period.
    pub human_incubation: f64,
    /// Female mosquitoes per human, m.
    pub mosquitoes_per_human: f64,
    /// Larvae per human, k.
    pub larvae_per_human: f64,
    /// Maximal larval capacity K; always k * N_h.
    pub carrying_capacity: f64,
}

impl ModelParameters {
    /// Parameter set for the 2009 Cape Verde outbreak.
    pub fn cape_verde_2009() -> Self {
        let human_population = 480_000.0;
        let larvae_per_human = 3.0;
        ModelParameters {
            human_population,
            biting_rate: 1.0,
            transmission_to_human: 0.375,
            transmission_to_mosquito: 0.375,
            human_mortality: 1.0 / (71.0 * 365.0),
            human_recovery: 1.0 / 3.0,
            mosquito_mortality: 1.0 / 11.0,
            egg_laying_rate: 6.0,
            aquatic_mortality: 1.0 / 4.0,
            maturation_rate: 0.08,
            mosquito_incubation: 1.0 / 11.0,
            human_incubation: 1.0 / 4.0,
            mosquitoes_per_human: 6.0,
            larvae_per_human,
            carrying_capacity: larvae_per_human * human_population,
        }
    }

    /// Recomputes `carrying_capacity` from `larvae_per_human * human_population`.
    pub fn with_derived_capacity(mut self) -> Self {
        self.carrying_capacity = self.larvae_per_human * self.human_population;
        self
    }

    /// Checks every parameter invariant.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("human_population", self.human_population),
            ("biting_rate", self.biting_rate),
            ("human_mortality", self.human_mortality),
            ("human_recovery", self.human_recovery),
            ("mosquito_mortality", self.mosquito_mortality),
            ("egg_laying_rate", self.egg_laying_rate),
            ("aquatic_mortality", self.aquatic_mortality),
            ("maturation_rate", self.maturation_rate),
            ("mosquito_incubation", self.mosquito_incubation),
            ("human_incubation", self.human_incubation),
            ("mosquitoes_per_human", self.mosquitoes_per_human),
            ("larvae_per_human", self.larvae_per_human),
            ("carrying_capacity", self.carrying_capacity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    constraint: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        let probabilities = [
            ("transmission_to_human", self.transmission_to_human),
            ("transmission_to_mosquito", self.transmission_to_mosquito),
        ];
        for (name, v) in probabilities {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    constraint: format!("must lie in [0, 1], got {v}"),
                });
            }
        }
        let expected = self.larvae_per_human * self.human_population;
        if self.carrying_capacity != expected {
            return Err(Error::InvalidParameter {
                name: "carrying_capacity",
                constraint: format!(
                    "must equal larvae_per_human * human_population = {expected}, got {}",
                    self.carrying_capacity
                ),
            });
        }
        Ok(())
    }
}

/// Constant adulticide application rate c (per day).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ControlLevel(f64);

impl ControlLevel {
    pub const NONE: ControlLevel = ControlLevel(0.0);

    pub fn new(rate: f64) -> Result<Self> {
        if rate.is_finite() && rate >= 0.0 {
            Ok(ControlLevel(rate))
        } else {
            Err(Error::InvalidParameter {
                name: "c",
                constraint: format!("control level must be finite and >= 0, got {rate}"),
            })
        }
    }

    pub fn rate(self) -> f64 {
        self.0
    }
}

impl fmt::Display for ControlLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Population scale per compartment: N_h for humans, K for the aquatic
/// phase and m * N_h for adult mosquitoes.
pub fn component_scales(p: &ModelParameters) -> [f64; STATE_DIM] {
    let n = p.human_population;
    let adults = p.mosquitoes_per_human * n;
    [n, n, n, n, p.carrying_capacity, adults, adults, adults]
}

/// Largest tolerated negative excursion for a component of the given scale.
pub fn undershoot_tolerance(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

/// Right-hand side without validation. Callers must have validated `p`.
pub(crate) fn rhs(p: &ModelParameters, control: f64, y: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
    let [s_h, e_h, i_h, r_h, a_m, s_m, e_m, i_m] = *y;
    let n_h = p.human_population;
    let mu_h = p.human_mortality;

    let human_force = p.biting_rate * p.transmission_to_human * i_m / n_h;
    let mosquito_force = p.biting_rate * p.transmission_to_mosquito * i_h / n_h;
    let new_human_infections = human_force * s_h;
    let new_mosquito_infections = mosquito_force * s_m;

    let egg_input = p.egg_laying_rate * (1.0 - a_m / p.carrying_capacity) * (s_m + e_m + i_m);

    [
        mu_h * n_h - new_human_infections - mu_h * s_h,
        new_human_infections - (p.human_incubation + mu_h) * e_h,
        p.human_incubation * e_h - (p.human_recovery + mu_h) * i_h,
        p.human_recovery * i_h - mu_h * r_h,
        egg_input - (p.maturation_rate + p.aquatic_mortality) * a_m,
        -new_mosquito_infections - p.mosquito_mortality * s_m + p.maturation_rate * a_m
            - control * s_m,
        new_mosquito_infections
            - (p.mosquito_mortality + p.mosquito_incubation) * e_m
            - control * e_m,
        p.mosquito_incubation * e_m - p.mosquito_mortality * i_m - control * i_m,
    ]
}

/// Evaluates all eight right-hand sides at `state`.
pub fn evaluate_rhs(
    state: &SystemState,
    p: &ModelParameters,
    c: ControlLevel,
) -> Result<DerivativeVector> {
    p.validate()?;
    state.check_finite()?;
    Ok(DerivativeVector(rhs(p, c.rate(), &state.to_array())))
}

/// Mosquito viability discriminant
/// `M = maturation * eggs - (maturation + aquatic mortality) * (adult mortality + c)`.
///
/// Positive exactly when a nonzero mosquito population can persist.
pub fn compute_m(p: &ModelParameters, c: ControlLevel) -> f64 {
    p.maturation_rate * p.egg_laying_rate
        - (p.maturation_rate + p.aquatic_mortality) * (p.mosquito_mortality + c.rate())
}

/// Largest control level with `M > 0`; the mosquito population collapses
/// for any `c` at or above it. Negative when mosquitoes cannot persist even
/// without control.
pub fn control_upper_bound(p: &ModelParameters) -> f64 {
    let aquatic_exit = p.maturation_rate + p.aquatic_mortality;
    (p.maturation_rate * p.egg_laying_rate - aquatic_exit * p.mosquito_mortality) / aquatic_exit
}

/// Basic reproduction number at constant control `c`.
///
/// Defined only when `M > 0`; otherwise the only equilibrium is the trivial
/// one and this returns [`Error::R0Undefined`].
pub fn r0(p: &ModelParameters, c: ControlLevel) -> Result<f64> {
    p.validate()?;
    let m = compute_m(p, c);
    if m <= 0.0 {
        return Err(Error::R0Undefined { m });
    }
    let c = c.rate();
    let adult_exit = c + p.mosquito_mortality;
    let numerator = p.biting_rate.powi(2)
        * p.larvae_per_human
        * p.transmission_to_mosquito
        * p.transmission_to_human
        * p.mosquito_incubation
        * p.human_incubation
        * m;
    let denominator = p.egg_laying_rate
        * (p.human_recovery + p.human_mortality)
        * adult_exit
        * adult_exit
        * (adult_exit + p.mosquito_incubation)
        * (p.human_mortality + p.human_incubation);
    Ok((numerator / denominator).sqrt())
}

pub(crate) fn max_abs(y: &[f64]) -> f64 {
    y.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
