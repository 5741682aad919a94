#![allow(dead_code)]

use dengue_core::model::{self, ControlLevel, ModelParameters, SystemState};
use dengue_core::Scenario;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn control(c: f64) -> ControlLevel {
    ControlLevel::new(c).unwrap()
}

pub fn cape_verde() -> ModelParameters {
    ModelParameters::cape_verde_2009()
}

pub fn cape_verde_initial() -> SystemState {
    Scenario::cape_verde_2009().initial
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Cape Verde parameters with every entry scaled by a factor in [0.5, 2]
/// (probabilities clipped to 1), redrawn until `M > 0` at zero control.
pub fn random_parameters(rng: &mut StdRng) -> ModelParameters {
    loop {
        let base = cape_verde();
        let mut f = || rng.random_range(0.5..2.0);
        let p = ModelParameters {
            human_population: (base.human_population * f()).round(),
            biting_rate: base.biting_rate * f(),
            transmission_to_human: (base.transmission_to_human * f()).min(1.0),
            transmission_to_mosquito: (base.transmission_to_mosquito * f()).min(1.0),
            human_mortality: base.human_mortality * f(),
            human_recovery: base.human_recovery * f(),
            mosquito_mortality: base.mosquito_mortality * f(),
            egg_laying_rate: base.egg_laying_rate * f(),
            aquatic_mortality: base.aquatic_mortality * f(),
            maturation_rate: base.maturation_rate * f(),
            mosquito_incubation: base.mosquito_incubation * f(),
            human_incubation: base.human_incubation * f(),
            mosquitoes_per_human: base.mosquitoes_per_human * f(),
            larvae_per_human: base.larvae_per_human * f(),
            carrying_capacity: 0.0,
        }
        .with_derived_capacity();
        if model::compute_m(&p, ControlLevel::NONE) > 0.0 {
            return p;
        }
    }
}

/// Random state inside the biological region, with human total exactly N_h
/// up to rounding.
pub fn random_state_in_region(rng: &mut StdRng, p: &ModelParameters) -> SystemState {
    let n = p.human_population;
    let mut w: [f64; 4] = [0.0; 4];
    for v in w.iter_mut() {
        *v = rng.random_range(0.01..1.0);
    }
    // Keep most humans susceptible so the outbreak is not already over.
    w[0] += 3.0;
    let total: f64 = w.iter().sum();
    let e_h = n * w[1] / total;
    let i_h = n * w[2] / total;
    let r_h = n * w[3] / total;
    let s_h = n - e_h - i_h - r_h;

    let adult_cap = p.mosquitoes_per_human * n;
    let adults = adult_cap * rng.random_range(0.05..1.0);
    let e_share = rng.random_range(0.0..0.05);
    let i_share = rng.random_range(0.0..0.05);
    SystemState {
        s_h,
        e_h,
        i_h,
        r_h,
        a_m: p.carrying_capacity * rng.random_range(0.0..1.0),
        s_m: adults * (1.0 - e_share - i_share),
        e_m: adults * e_share,
        i_m: adults * i_share,
    }
}

pub fn max_abs(y: &[f64]) -> f64 {
    y.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}
