//! TOML run configuration in field units.
//!
//! Every physical quantity carries its unit in the key name (`dt_days`,
//! `bc_bar`, `first_md`, `mu_w_cp`, ...). Values are converted to SI once,
//! here. Unknown keys are rejected; missing required keys are reported
//! together with their full paths.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::driver::{
    BoundarySpec, GridSpec, PermeabilityScenario, SimulationConfig, MILLIDARCY, SECONDS_PER_DAY,
};
use crate::error::{Error, Result};
use crate::flow::{CapillaryMode, IterationControls};
use crate::grid::Edge;
use crate::petrophysics::RockFluidParams;
use crate::sparse::{LinearSolveControls, SolveMethod};
use crate::transport::{stokes_einstein_diffusivity, NanoparticleParams};

const BAR: f64 = 1e5;
const CENTIPOISE: f64 = 1e-3;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    grid: Option<GridDoc>,
    rock: Option<RockDoc>,
    nanoparticles: Option<NanoDoc>,
    permeability: Option<PermeabilityDoc>,
    boundary: Option<BoundaryDoc>,
    initial: Option<InitialDoc>,
    time: Option<TimeDoc>,
    controls: Option<ControlsDoc>,
    linear: Option<LinearDoc>,
    output: Option<OutputDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    nx: Option<usize>,
    ny: Option<usize>,
    lx_m: Option<f64>,
    ly_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RockDoc {
    swr: Option<f64>,
    snr: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    krw0: Option<f64>,
    krn0: Option<f64>,
    mu_w_cp: Option<f64>,
    mu_n_cp: Option<f64>,
    bc_bar: Option<f64>,
    phi0: Option<f64>,
    kf: Option<f64>,
    damage_exponent: Option<f64>,
    gamma_f: Option<f64>,
    rho_w_kg_per_m3: Option<f64>,
    rho_n_kg_per_m3: Option<f64>,
    gravity_m_per_s2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NanoDoc {
    enabled: Option<bool>,
    gamma_d_per_m: Option<f64>,
    gamma_e_per_m: Option<f64>,
    gamma_pt_per_m: Option<f64>,
    critical_velocity_m_per_s: Option<f64>,
    injected_concentration: Option<f64>,
    suspension_density_kg_per_m3: Option<f64>,
    /// Either this, or a particle size and temperature for Stokes-Einstein.
    diffusivity_m2_per_s: Option<f64>,
    particle_diameter_nm: Option<f64>,
    temperature_k: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PermeabilityDoc {
    kind: Option<String>,
    value_md: Option<f64>,
    first_md: Option<f64>,
    second_md: Option<f64>,
    blocks_x: Option<usize>,
    blocks_y: Option<usize>,
    min_md: Option<f64>,
    max_md: Option<f64>,
    seed: Option<u64>,
    path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryDoc {
    injection_edge: Option<Edge>,
    production_edge: Option<Edge>,
    rate_pv_per_year: Option<f64>,
    production_pressure_bar: Option<f64>,
    injected_saturation: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialDoc {
    water_saturation: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeDoc {
    dt_days: Option<f64>,
    until_pvi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlsDoc {
    theta_min: Option<f64>,
    theta_max: Option<f64>,
    rho: Option<f64>,
    eps_s: Option<f64>,
    max_outer_iterations: Option<usize>,
    capillary_mode: Option<CapillaryModeName>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CapillaryModeName {
    Linearized,
    Lagged,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearDoc {
    method: Option<SolveMethod>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputDoc {
    snapshot_every_pvi: Option<f64>,
}

/// Collects the paths of absent required keys.
#[derive(Default)]
struct Required(Vec<String>);

impl Required {
    fn get<T: Default>(&mut self, path: &str, value: Option<T>) -> T {
        value.unwrap_or_else(|| {
            self.0.push(path.to_string());
            T::default()
        })
    }

    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "missing required keys: {}",
                self.0.join(", ")
            )))
        }
    }
}

/// Reads and validates a configuration file. Relative permeability-file
/// paths resolve against the configuration file's directory.
pub fn parse_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses a configuration document held in memory.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<SimulationConfig> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
    let config = build(doc, base_dir)?;
    config.validate()?;
    Ok(config)
}

fn build(doc: Document, base_dir: &Path) -> Result<SimulationConfig> {
    let mut req = Required::default();
    let defaults = RockFluidParams::default();

    let g = doc.grid.unwrap_or_default();
    let grid = GridSpec {
        nx: req.get("grid.nx", g.nx),
        ny: req.get("grid.ny", g.ny),
        lx: req.get("grid.lx_m", g.lx_m),
        ly: req.get("grid.ly_m", g.ly_m),
    };

    let r = doc.rock.unwrap_or_default();
    let rock = RockFluidParams {
        swr: req.get("rock.swr", r.swr),
        snr: req.get("rock.snr", r.snr),
        exp_w: req.get("rock.a", r.a),
        exp_n: req.get("rock.b", r.b),
        krw0: r.krw0.unwrap_or(defaults.krw0),
        krn0: r.krn0.unwrap_or(defaults.krn0),
        mu_w: req.get("rock.mu_w_cp", r.mu_w_cp) * CENTIPOISE,
        mu_n: req.get("rock.mu_n_cp", r.mu_n_cp) * CENTIPOISE,
        capillary_scale: req.get("rock.bc_bar", r.bc_bar) * BAR,
        phi0: req.get("rock.phi0", r.phi0),
        plugged_seepage: req.get("rock.kf", r.kf),
        damage_exponent: req.get("rock.damage_exponent", r.damage_exponent),
        flow_efficiency_coef: req.get("rock.gamma_f", r.gamma_f),
        rho_w: r.rho_w_kg_per_m3.unwrap_or(defaults.rho_w),
        rho_n: r.rho_n_kg_per_m3.unwrap_or(defaults.rho_n),
        gravity: r.gravity_m_per_s2.unwrap_or(defaults.gravity),
    };

    let n = doc.nanoparticles.unwrap_or_default();
    let diffusivity = match (n.diffusivity_m2_per_s, n.particle_diameter_nm, n.temperature_k) {
        (Some(d), None, None) => d,
        (None, Some(d_nm), Some(t)) => stokes_einstein_diffusivity(t, rock.mu_w, d_nm * 1e-9),
        (None, None, None) => req.get("nanoparticles.diffusivity_m2_per_s", None),
        _ => {
            return Err(Error::config(
                "nanoparticles: give either diffusivity_m2_per_s or both \
                 particle_diameter_nm and temperature_k",
            ))
        }
    };
    let nano = NanoparticleParams {
        gamma_d: req.get("nanoparticles.gamma_d_per_m", n.gamma_d_per_m),
        gamma_e: req.get("nanoparticles.gamma_e_per_m", n.gamma_e_per_m),
        gamma_pt: req.get("nanoparticles.gamma_pt_per_m", n.gamma_pt_per_m),
        critical_velocity: req.get(
            "nanoparticles.critical_velocity_m_per_s",
            n.critical_velocity_m_per_s,
        ),
        diffusivity,
        injected_concentration: req.get(
            "nanoparticles.injected_concentration",
            n.injected_concentration,
        ),
        suspension_density: n
            .suspension_density_kg_per_m3
            .unwrap_or(NanoparticleParams::default().suspension_density),
    };

    let permeability = permeability(doc.permeability.unwrap_or_default(), base_dir, &mut req)?;

    let b = doc.boundary.unwrap_or_default();
    let boundary = BoundarySpec {
        injection_edge: b.injection_edge.unwrap_or(Edge::Left),
        production_edge: b.production_edge.unwrap_or(Edge::Right),
        rate_pv_per_year: req.get("boundary.rate_pv_per_year", b.rate_pv_per_year),
        production_pressure: req.get("boundary.production_pressure_bar", b.production_pressure_bar)
            * BAR,
        injected_saturation: b.injected_saturation,
    };

    let t = doc.time.unwrap_or_default();
    let dt = req.get("time.dt_days", t.dt_days) * SECONDS_PER_DAY;
    let target_pvi = req.get("time.until_pvi", t.until_pvi);

    let c = doc.controls.unwrap_or_default();
    let dc = IterationControls::default();
    let controls = IterationControls {
        theta_min: c.theta_min.unwrap_or(dc.theta_min),
        theta_max: c.theta_max.unwrap_or(dc.theta_max),
        rho: c.rho.unwrap_or(dc.rho),
        eps_s: c.eps_s.unwrap_or(dc.eps_s),
        max_outer_iterations: c.max_outer_iterations.unwrap_or(dc.max_outer_iterations),
        capillary_mode: match c.capillary_mode {
            Some(CapillaryModeName::Linearized) => CapillaryMode::LinearizedCoupled,
            Some(CapillaryModeName::Lagged) => CapillaryMode::LaggedExplicit,
            None => dc.capillary_mode,
        },
    };

    let l = doc.linear.unwrap_or_default();
    let dl = LinearSolveControls::default();
    let linear = LinearSolveControls {
        rel_tol: l.rel_tol.unwrap_or(dl.rel_tol),
        abs_tol: l.abs_tol.unwrap_or(dl.abs_tol),
        max_iterations: l.max_iterations.or(dl.max_iterations),
        method: l.method.unwrap_or(dl.method),
    };

    req.finish()?;
    Ok(SimulationConfig {
        grid,
        rock,
        nano,
        permeability,
        boundary,
        dt,
        target_pvi,
        initial_saturation: doc.initial.and_then(|i| i.water_saturation),
        controls,
        linear,
        snapshot_every_pvi: doc
            .output
            .and_then(|o| o.snapshot_every_pvi)
            .unwrap_or(SimulationConfig::default().snapshot_every_pvi),
        transport_enabled: n.enabled.unwrap_or(true),
    })
}

fn permeability(
    p: PermeabilityDoc,
    base_dir: &Path,
    req: &mut Required,
) -> Result<PermeabilityScenario> {
    let Some(kind) = p.kind.as_deref() else {
        req.get::<()>("permeability.kind", None);
        return Ok(PermeabilityScenario::Uniform { value: 1.0 });
    };
    let given: Vec<&str> = [
        ("value_md", p.value_md.is_some()),
        ("first_md", p.first_md.is_some()),
        ("second_md", p.second_md.is_some()),
        ("blocks_x", p.blocks_x.is_some()),
        ("blocks_y", p.blocks_y.is_some()),
        ("min_md", p.min_md.is_some()),
        ("max_md", p.max_md.is_some()),
        ("seed", p.seed.is_some()),
        ("path", p.path.is_some()),
    ]
    .into_iter()
    .filter_map(|(k, set)| set.then_some(k))
    .collect();
    let allowed: &[&str] = match kind {
        "uniform" => &["value_md"],
        "regular_heterogeneous" => &["first_md", "second_md", "blocks_x", "blocks_y"],
        "random" => &["min_md", "max_md", "seed"],
        "from_file" => &["path"],
        other => {
            return Err(Error::config(format!(
                "permeability.kind: unknown scenario `{other}` (expected uniform, \
                 regular_heterogeneous, random or from_file)"
            )))
        }
    };
    if let Some(extra) = given.iter().find(|k| !allowed.contains(k)) {
        return Err(Error::config(format!(
            "permeability.{extra}: not used by kind `{kind}`"
        )));
    }
    Ok(match kind {
        "uniform" => PermeabilityScenario::Uniform {
            value: req.get("permeability.value_md", p.value_md) * MILLIDARCY,
        },
        "regular_heterogeneous" => PermeabilityScenario::RegularHeterogeneous {
            first: req.get("permeability.first_md", p.first_md) * MILLIDARCY,
            second: req.get("permeability.second_md", p.second_md) * MILLIDARCY,
            blocks_x: req.get("permeability.blocks_x", p.blocks_x),
            blocks_y: req.get("permeability.blocks_y", p.blocks_y),
        },
        "random" => PermeabilityScenario::Random {
            min: req.get("permeability.min_md", p.min_md) * MILLIDARCY,
            max: req.get("permeability.max_md", p.max_md) * MILLIDARCY,
            seed: req.get("permeability.seed", p.seed),
        },
        _ => PermeabilityScenario::FromFile {
            path: base_dir.join(req.get("permeability.path", p.path)),
        },
    })
}
