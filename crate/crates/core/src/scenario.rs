//! Scenario files and output formats.
//!
//! A scenario is a line-oriented `key = value` file; `#` starts a comment.
//! When the first directive is `base = cape_verde_2009`, every key that the
//! file leaves out takes its value from the 2009 Cape Verde outbreak.
//! Otherwise all model parameters, `t_final_days` and all initial values
//! except `s_h0` are required.
//!
//! Periods and lifespans are given in days and converted to rates here.
//!
//! | key | meaning |
//! |-----|---------|
//! | `n_h` | human population |
//! | `b` | bites per mosquito per day |
//! | `beta_mh`, `beta_hm` | transmission probability per bite, mosquito to human and human to mosquito |
//! | `human_lifespan_days` | 1 / human mortality |
//! | `viremic_period_days` | 1 / human recovery rate |
//! | `mosquito_lifespan_days` | 1 / adult mosquito mortality |
//! | `mu_b` | eggs per deposit per capita per day |
//! | `mu_a` | aquatic-phase mortality per day |
//! | `eta_a` | maturation rate per day |
//! | `extrinsic_incubation_days` | incubation period in the mosquito |
//! | `intrinsic_incubation_days` | incubation period in the human |
//! | `m`, `k` | female mosquitoes and larvae per human |
//! | `c` | adulticide level per day (default 0) |
//! | `t0_days`, `t_final_days` | integration window (t0 defaults to 0) |
//! | `method` | `adaptive_45` (default) or `fixed_rk4` |
//! | `step` | fixed step in days (default 0.05) |
//! | `rel_tol`, `abs_tol` | adaptive tolerances (default 1e-8) |
//! | `sample_interval` | output spacing in days (default 0.5) |
//! | `s_h0` ... `i_m0` | initial compartments |
//! | `name` | free-text scenario name |
//! | `base` | `cape_verde_2009`; only allowed as the first directive |
//!
//! When `s_h0` is omitted it is `n_h - e_h0 - i_h0 - r_h0`.

use std::collections::BTreeMap;
use std::io::Write;

use crate::equilibrium::{EquilibriumReport, SweepRow};
use crate::error::{Error, Result};
use crate::integrator::{IntegrationConfig, Method, Trajectory};
use crate::model::{Compartment, ControlLevel, ModelParameters, SystemState};

pub const BASE_CAPE_VERDE: &str = "cape_verde_2009";

/// CSV header of trajectory files.
pub const TRAJECTORY_HEADER: &str = "t,S_h,E_h,I_h,R_h,A_m,S_m,E_m,I_m";

const KEYS: &[&str] = &[
    "name",
    "n_h",
    "b",
    "beta_mh",
    "beta_hm",
    "human_lifespan_days",
    "viremic_period_days",
    "mosquito_lifespan_days",
    "mu_b",
    "mu_a",
    "eta_a",
    "extrinsic_incubation_days",
    "intrinsic_incubation_days",
    "m",
    "k",
    "c",
    "t0_days",
    "t_final_days",
    "method",
    "step",
    "rel_tol",
    "abs_tol",
    "sample_interval",
    "s_h0",
    "e_h0",
    "i_h0",
    "r_h0",
    "a_m0",
    "s_m0",
    "e_m0",
    "i_m0",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParameters,
    pub control: ControlLevel,
    pub initial: SystemState,
    pub integration: IntegrationConfig,
}

impl Scenario {
    /// The 2009 Cape Verde outbreak, no control, 84 days.
    ///
    /// Susceptible humans start at `N_h - E_h0 - I_h0` so that the human
    /// total equals N_h.
    pub fn cape_verde_2009() -> Self {
        let params = ModelParameters::cape_verde_2009();
        let n = params.human_population;
        Scenario {
            name: BASE_CAPE_VERDE.to_string(),
            params,
            control: ControlLevel::NONE,
            initial: SystemState {
                s_h: n - 216.0 - 434.0,
                e_h: 216.0,
                i_h: 434.0,
                r_h: 0.0,
                a_m: params.larvae_per_human * n,
                s_m: params.mosquitoes_per_human * n,
                e_m: 0.0,
                i_m: 0.0,
            },
            integration: IntegrationConfig::default(),
        }
    }

    pub fn with_control(mut self, c: ControlLevel) -> Self {
        self.control = c;
        self
    }
}

/// Values in file terms, before conversion.
fn cape_verde_defaults(key: &str, numbers: &BTreeMap<&'static str, f64>) -> Option<f64> {
    let n_h = numbers.get("n_h").copied().unwrap_or(480_000.0);
    let v = match key {
        "n_h" => 480_000.0,
        "b" => 1.0,
        "beta_mh" | "beta_hm" => 0.375,
        "human_lifespan_days" => 71.0 * 365.0,
        "viremic_period_days" => 3.0,
        "mosquito_lifespan_days" => 11.0,
        "mu_b" => 6.0,
        "mu_a" => 0.25,
        "eta_a" => 0.08,
        "extrinsic_incubation_days" => 11.0,
        "intrinsic_incubation_days" => 4.0,
        "m" => 6.0,
        "k" => 3.0,
        "t_final_days" => 84.0,
        "e_h0" => 216.0,
        "i_h0" => 434.0,
        "r_h0" | "e_m0" | "i_m0" => 0.0,
        "a_m0" => numbers.get("k").copied().unwrap_or(3.0) * n_h,
        "s_m0" => numbers.get("m").copied().unwrap_or(6.0) * n_h,
        _ => return None,
    };
    Some(v)
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parses scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_with_overrides(text, &[])
}

/// Parses scenario text, then applies `key = value` overrides on top of the
/// file and base defaults before validation. Override errors report line 0.
pub fn parse_scenario_with_overrides(
    text: &str,
    overrides: &[(String, String)],
) -> Result<Scenario> {
    let mut entries: BTreeMap<&'static str, Entry> = BTreeMap::new();
    let mut use_base = false;
    let mut seen_directive = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Syntax {
            line: line_no,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Syntax {
                line: line_no,
                message: "empty key or value".into(),
            });
        }
        if key == "base" {
            if seen_directive {
                return Err(Error::Syntax {
                    line: line_no,
                    message: "`base` must be the first directive".into(),
                });
            }
            if value != BASE_CAPE_VERDE {
                return Err(Error::Syntax {
                    line: line_no,
                    message: format!("unknown base `{value}` (expected {BASE_CAPE_VERDE})"),
                });
            }
            use_base = true;
            seen_directive = true;
            continue;
        }
        seen_directive = true;
        let key = known_key(key).ok_or_else(|| Error::Syntax {
            line: line_no,
            message: format!("unknown key `{key}`"),
        })?;
        if entries.contains_key(key) {
            return Err(Error::Syntax {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.insert(
            key,
            Entry {
                value: value.to_string(),
                line: line_no,
            },
        );
    }

    for (key, value) in overrides {
        let key = known_key(key.trim()).ok_or_else(|| Error::ScenarioValue {
            key: key.clone(),
            constraint: "unknown key in override".into(),
        })?;
        entries.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line: 0,
            },
        );
    }

    build(entries, use_base)
}

fn known_key(key: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|k| *k == key)
}

fn build(entries: BTreeMap<&'static str, Entry>, use_base: bool) -> Result<Scenario> {
    let mut numbers: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut name = None;
    let mut method = None;
    for (&key, entry) in &entries {
        match key {
            "name" => name = Some(entry.value.clone()),
            "method" => {
                method = Some(
                    entry
                        .value
                        .parse::<Method>()
                        .map_err(|message| Error::Syntax {
                            line: entry.line,
                            message,
                        })?,
                )
            }
            _ => {
                let v: f64 = entry.value.parse().map_err(|_| Error::Syntax {
                    line: entry.line,
                    message: format!("`{key}`: `{}` is not a number", entry.value),
                })?;
                if !v.is_finite() {
                    return Err(value_error(key, "must be finite"));
                }
                numbers.insert(key, v);
            }
        }
    }

    let get = |key: &'static str| -> Result<f64> {
        if let Some(v) = numbers.get(key) {
            return Ok(*v);
        }
        if use_base {
            if let Some(v) = cape_verde_defaults(key, &numbers) {
                return Ok(v);
            }
        }
        Err(value_error(
            key,
            "missing (no `base` directive to supply it)",
        ))
    };
    let positive = |key: &'static str| -> Result<f64> {
        let v = get(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(value_error(key, &format!("must be > 0, got {v}")))
        }
    };
    let probability = |key: &'static str| -> Result<f64> {
        let v = get(key)?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(value_error(
                key,
                &format!("probability must lie in [0, 1], got {v}"),
            ))
        }
    };
    let optional = |key: &'static str, default: f64| numbers.get(key).copied().unwrap_or(default);

    let human_population = positive("n_h")?;
    let larvae_per_human = positive("k")?;
    let params = ModelParameters {
        human_population,
        biting_rate: positive("b")?,
        transmission_to_human: probability("beta_mh")?,
        transmission_to_mosquito: probability("beta_hm")?,
        human_mortality: 1.0 / positive("human_lifespan_days")?,
        human_recovery: 1.0 / positive("viremic_period_days")?,
        mosquito_mortality: 1.0 / positive("mosquito_lifespan_days")?,
        egg_laying_rate: positive("mu_b")?,
        aquatic_mortality: positive("mu_a")?,
        maturation_rate: positive("eta_a")?,
        mosquito_incubation: 1.0 / positive("extrinsic_incubation_days")?,
        human_incubation: 1.0 / positive("intrinsic_incubation_days")?,
        mosquitoes_per_human: positive("m")?,
        larvae_per_human,
        carrying_capacity: larvae_per_human * human_population,
    };
    params.validate()?;

    let control = ControlLevel::new(optional("c", 0.0))
        .map_err(|_| value_error("c", "control level must be >= 0"))?;

    let defaults = IntegrationConfig::default();
    let integration = IntegrationConfig {
        t0: optional("t0_days", defaults.t0),
        t_final: get("t_final_days")?,
        method: method.unwrap_or(defaults.method),
        step: optional("step", defaults.step),
        rel_tol: optional("rel_tol", defaults.rel_tol),
        abs_tol: optional("abs_tol", defaults.abs_tol),
        sample_interval: optional("sample_interval", defaults.sample_interval),
    };
    integration.validate()?;

    let non_negative = |key: &'static str| -> Result<f64> {
        let v = get(key)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(value_error(key, &format!("must be >= 0, got {v}")))
        }
    };
    let e_h = non_negative("e_h0")?;
    let i_h = non_negative("i_h0")?;
    let r_h = non_negative("r_h0")?;
    let s_h = match numbers.get("s_h0") {
        Some(_) => non_negative("s_h0")?,
        None => {
            let v = human_population - e_h - i_h - r_h;
            if v < 0.0 {
                return Err(value_error(
                    "s_h0",
                    &format!("derived n_h - e_h0 - i_h0 - r_h0 = {v} is negative"),
                ));
            }
            v
        }
    };
    let initial = SystemState {
        s_h,
        e_h,
        i_h,
        r_h,
        a_m: non_negative("a_m0")?,
        s_m: non_negative("s_m0")?,
        e_m: non_negative("e_m0")?,
        i_m: non_negative("i_m0")?,
    };
    if let Some(why) = initial.region_violation(&params) {
        return Err(value_error("initial state", &why));
    }

    let name = name.unwrap_or_else(|| {
        if use_base {
            BASE_CAPE_VERDE.to_string()
        } else {
            "scenario".to_string()
        }
    });

    Ok(Scenario {
        name,
        params,
        control,
        initial,
        integration,
    })
}

fn value_error(key: &str, constraint: &str) -> Error {
    Error::ScenarioValue {
        key: key.to_string(),
        constraint: constraint.to_string(),
    }
}

/// Writes every field explicitly (no `base`), so the output parses back to
/// the same scenario. Day-valued keys are written as reciprocals of the
/// stored rates and may differ from the original by one rounding step.
pub fn serialize_scenario(s: &Scenario) -> String {
    let p = &s.params;
    let cfg = &s.integration;
    let y = &s.initial;
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    put("name", s.name.clone());
    put("n_h", p.human_population.to_string());
    put("b", p.biting_rate.to_string());
    put("beta_mh", p.transmission_to_human.to_string());
    put("beta_hm", p.transmission_to_mosquito.to_string());
    put("human_lifespan_days", (1.0 / p.human_mortality).to_string());
    put("viremic_period_days", (1.0 / p.human_recovery).to_string());
    put(
        "mosquito_lifespan_days",
        (1.0 / p.mosquito_mortality).to_string(),
    );
    put("mu_b", p.egg_laying_rate.to_string());
    put("mu_a", p.aquatic_mortality.to_string());
    put("eta_a", p.maturation_rate.to_string());
    put(
        "extrinsic_incubation_days",
        (1.0 / p.mosquito_incubation).to_string(),
    );
    put(
        "intrinsic_incubation_days",
        (1.0 / p.human_incubation).to_string(),
    );
    put("m", p.mosquitoes_per_human.to_string());
    put("k", p.larvae_per_human.to_string());
    put("c", s.control.rate().to_string());
    put("t0_days", cfg.t0.to_string());
    put("t_final_days", cfg.t_final.to_string());
    put("method", cfg.method.to_string());
    put("step", cfg.step.to_string());
    put("rel_tol", cfg.rel_tol.to_string());
    put("abs_tol", cfg.abs_tol.to_string());
    put("sample_interval", cfg.sample_interval.to_string());
    put("s_h0", y.s_h.to_string());
    put("e_h0", y.e_h.to_string());
    put("i_h0", y.i_h.to_string());
    put("r_h0", y.r_h.to_string());
    put("a_m0", y.a_m.to_string());
    put("s_m0", y.s_m.to_string());
    put("e_m0", y.e_m.to_string());
    put("i_m0", y.i_m.to_string());
    out
}

/// Scientific notation with ten digits after the decimal point.
pub fn sci(v: f64) -> String {
    format!("{v:.10e}")
}

fn sci_or_undefined(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_else(|| "undefined".to_string())
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Trajectory as CSV: header [`TRAJECTORY_HEADER`], one row per sample.
pub fn write_trajectory_csv<W: Write>(trajectory: &Trajectory, sink: &mut W) -> Result<()> {
    if trajectory.samples.is_empty() {
        return Err(Error::InvalidState("trajectory has no samples".into()));
    }
    let mut buf = String::with_capacity(trajectory.samples.len() * 160);
    buf.push_str(TRAJECTORY_HEADER);
    buf.push('\n');
    for sample in &trajectory.samples {
        buf.push_str(&sci(sample.t));
        for v in sample.state.to_array() {
            buf.push(',');
            buf.push_str(&sci(v));
        }
        buf.push('\n');
    }
    sink.write_all(buf.as_bytes())?;
    Ok(())
}

/// Reads CSV produced by [`write_trajectory_csv`] back into `(t, state)` rows.
pub fn read_trajectory_csv(text: &str) -> Result<Vec<(f64, SystemState)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRAJECTORY_HEADER => {}
        _ => {
            return Err(Error::Syntax {
                line: 1,
                message: format!("expected header `{TRAJECTORY_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Syntax {
                line: idx + 1,
                message: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let mut values = [0.0; 9];
        for (v, f) in values.iter_mut().zip(&fields) {
            *v = f.parse().map_err(|_| Error::Syntax {
                line: idx + 1,
                message: format!("`{f}` is not a number"),
            })?;
        }
        let mut y = [0.0; 8];
        y.copy_from_slice(&values[1..]);
        rows.push((values[0], SystemState::from_array(y)));
    }
    Ok(rows)
}

/// Two-column blocks, one per compartment, separated by blank lines.
pub fn write_plot_data<W: Write>(trajectory: &Trajectory, sink: &mut W) -> Result<()> {
    let mut buf = String::new();
    for (k, c) in Compartment::ALL.iter().enumerate() {
        if k > 0 {
            buf.push('\n');
        }
        buf.push_str(&format!("# series {c}\nt,{c}\n"));
        for s in &trajectory.samples {
            buf.push_str(&format!("{},{}\n", sci(s.t), sci(s.state.get(*c))));
        }
    }
    sink.write_all(buf.as_bytes())?;
    Ok(())
}

fn format_report(report: &EquilibriumReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("kind = {}\n", report.kind));
    out.push_str(&format!("c = {}\n", sci(report.control.rate())));
    out.push_str(&format!("M = {}\n", sci(report.m)));
    out.push_str(&format!("R0 = {}\n", sci_or_undefined(report.r0)));
    out.push_str(&format!("residual = {}\n", sci(report.residual)));
    out.push_str(&format!(
        "max_real_part = {}\n",
        sci(report.max_real_part())
    ));
    out.push_str(&format!("verdict = {}\n", report.stability));
    out.push_str("state:\n");
    for c in Compartment::ALL {
        out.push_str(&format!("  {c} = {}\n", sci(report.state.get(c))));
    }
    out.push_str("eigenvalues:\n");
    for z in &report.eigenvalues {
        out.push_str(&format!("  {} {}i\n", sci(z.re), sci(z.im)));
    }
    out.push_str("# csv\n");
    out.push_str("kind,c,M,R0,residual,verdict,S_h,E_h,I_h,R_h,A_m,S_m,E_m,I_m\n");
    out.push_str(&format!(
        "{},{},{},{},{},{}",
        report.kind,
        sci(report.control.rate()),
        sci(report.m),
        sci_or_undefined(report.r0),
        sci(report.residual),
        report.stability
    ));
    for v in report.state.to_array() {
        out.push(',');
        out.push_str(&sci(v));
    }
    out.push('\n');
    out.push_str("eigen_index,re,im\n");
    for (i, z) in report.eigenvalues.iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", sci(z.re), sci(z.im)));
    }
    out
}

/// Human-readable block followed by a `# csv` section.
pub fn write_report<W: Write>(report: &EquilibriumReport, sink: &mut W) -> Result<()> {
    sink.write_all(format_report(report).as_bytes())?;
    Ok(())
}

/// Several reports separated by blank lines.
pub fn write_reports<W: Write>(reports: &[EquilibriumReport], sink: &mut W) -> Result<()> {
    let blocks: Vec<String> = reports.iter().map(format_report).collect();
    sink.write_all(blocks.join("\n").as_bytes())?;
    Ok(())
}

/// Sweep table: summary lines followed by a `# csv` section. Missing values
/// are written as `undefined`.
pub fn write_sweep<W: Write>(rows: &[SweepRow], sink: &mut W) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("rows = {}\n", rows.len()));
    for row in rows {
        out.push_str(&format!(
            "c = {}: R0 = {}, verdict = {}\n",
            sci(row.c),
            sci_or_undefined(row.r0),
            row.stability.map(|s| s.name()).unwrap_or("undefined")
        ));
    }
    out.push_str("# csv\n");
    out.push_str("c,M,R0,verdict,peak_I_h,peak_time,final_I_m,errors\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            sci(row.c),
            sci_or_undefined(row.m),
            sci_or_undefined(row.r0),
            row.stability.map(|s| s.name()).unwrap_or("undefined"),
            sci_or_undefined(row.peak_infected_humans.map(|p| p.1)),
            sci_or_undefined(row.peak_infected_humans.map(|p| p.0)),
            sci_or_undefined(row.final_infected_mosquitoes),
            csv_quote(&row.errors.join("; ")),
        ));
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}
