//! Time loop, outer iteration, initial conditions and mass-balance audit.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, FlowInputs, IterationControls};
use crate::grid::{BoundaryCondition, BoundarySegment, Edge, StructuredGrid2D};
use crate::petrophysics::{self, RockFluidParams};
use crate::sparse::{self, LinearSolveControls, SolveMethod};
use crate::transport::{self, NanoparticleParams, TransportInputs};

pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const SECONDS_PER_YEAR: f64 = 365.0 * SECONDS_PER_DAY;
pub const MILLIDARCY: f64 = 9.869233e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nx: 60,
            ny: 20,
            lx: 0.3,
            ly: 0.2,
        }
    }
}

/// Initial permeability field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PermeabilityScenario {
    Uniform {
        value: f64,
    },
    /// Checkerboard of `blocks_x` by `blocks_y` rectangular blocks
    /// alternating between two values, starting with `first` in the
    /// bottom-left block. One block count of 1 gives layers.
    RegularHeterogeneous {
        first: f64,
        second: f64,
        blocks_x: usize,
        blocks_y: usize,
    },
    /// Per-cell log-uniform samples in `[min, max]`.
    Random { min: f64, max: f64, seed: u64 },
    /// Whitespace- or comma-separated values in millidarcy, row by row from
    /// the bottom (`j = 0`), `nx` values per row.
    FromFile { path: PathBuf },
}

impl PermeabilityScenario {
    pub fn validate(&self) -> Result<()> {
        let key = "permeability";
        match *self {
            PermeabilityScenario::Uniform { value } if !(value > 0.0) => {
                Err(Error::invalid(format!("{key}.value_md"), "> 0"))
            }
            PermeabilityScenario::RegularHeterogeneous {
                first,
                second,
                blocks_x,
                blocks_y,
            } => {
                if !(first > 0.0 && second > 0.0) {
                    return Err(Error::invalid(format!("{key}.first_md"), "both values > 0"));
                }
                if blocks_x == 0 || blocks_y == 0 {
                    return Err(Error::invalid(format!("{key}.blocks_x"), "block counts >= 1"));
                }
                Ok(())
            }
            PermeabilityScenario::Random { min, max, .. } if !(min > 0.0 && min <= max) => {
                Err(Error::invalid(format!("{key}.min_md"), "0 < min <= max"))
            }
            _ => Ok(()),
        }
    }

    /// Builds the per-cell field (m^2).
    pub fn build(&self, grid: &StructuredGrid2D) -> Result<Vec<f64>> {
        let n = grid.num_cells();
        match self {
            PermeabilityScenario::Uniform { value } => Ok(vec![*value; n]),
            PermeabilityScenario::RegularHeterogeneous {
                first,
                second,
                blocks_x,
                blocks_y,
            } => Ok((0..n)
                .map(|c| {
                    let (i, j) = grid.cell_ij(c);
                    let bi = i * blocks_x / grid.nx;
                    let bj = j * blocks_y / grid.ny;
                    if (bi + bj) % 2 == 0 {
                        *first
                    } else {
                        *second
                    }
                })
                .collect()),
            PermeabilityScenario::Random { min, max, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let (a, b) = (min.ln(), max.ln());
                Ok((0..n)
                    .map(|_| if a == b { *min } else { rng.gen_range(a..=b).exp() })
                    .collect())
            }
            PermeabilityScenario::FromFile { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let values: Vec<f64> = text
                    .split(|ch: char| ch.is_whitespace() || ch == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| {
                            Error::config(format!("{}: bad permeability value `{t}`", path.display()))
                        })
                    })
                    .collect::<Result<_>>()?;
                if values.len() != n {
                    return Err(Error::config(format!(
                        "{}: expected {n} permeability values, found {}",
                        path.display(),
                        values.len()
                    )));
                }
                if values.iter().any(|&k| !(k > 0.0)) {
                    return Err(Error::config(format!(
                        "{}: permeability values must be positive",
                        path.display()
                    )));
                }
                Ok(values.into_iter().map(|k| k * MILLIDARCY).collect())
            }
        }
    }
}

/// Injection through one whole edge at a pore-volume rate, production at
/// fixed pressure on another, no flow elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub injection_edge: Edge,
    pub production_edge: Edge,
    /// Pore volumes per year.
    pub rate_pv_per_year: f64,
    /// Production pressure (Pa).
    pub production_pressure: f64,
    /// Injected water saturation; `1 - S_nr` when absent.
    pub injected_saturation: Option<f64>,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec {
            injection_edge: Edge::Left,
            production_edge: Edge::Right,
            rate_pv_per_year: 0.1,
            production_pressure: 1e5,
            injected_saturation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub grid: GridSpec,
    pub rock: RockFluidParams,
    pub nano: NanoparticleParams,
    pub permeability: PermeabilityScenario,
    pub boundary: BoundarySpec,
    /// Time step (s).
    pub dt: f64,
    pub target_pvi: f64,
    /// Initial water saturation; `S_wr` when absent.
    pub initial_saturation: Option<f64>,
    pub controls: IterationControls,
    pub linear: LinearSolveControls,
    pub snapshot_every_pvi: f64,
    /// Skips the concentration solve and damage update entirely.
    pub transport_enabled: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            grid: GridSpec::default(),
            rock: RockFluidParams::default(),
            nano: NanoparticleParams::default(),
            permeability: PermeabilityScenario::RegularHeterogeneous {
                first: 100.0 * MILLIDARCY,
                second: 10.0 * MILLIDARCY,
                blocks_x: 1,
                blocks_y: 2,
            },
            boundary: BoundarySpec::default(),
            dt: 0.025 * SECONDS_PER_DAY,
            target_pvi: 0.5,
            initial_saturation: None,
            controls: IterationControls::default(),
            linear: LinearSolveControls::default(),
            snapshot_every_pvi: 0.05,
            transport_enabled: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.nx == 0 || g.ny == 0 {
            return Err(Error::invalid("grid.nx", "nx, ny >= 1"));
        }
        if !(g.lx > 0.0 && g.ly > 0.0) {
            return Err(Error::invalid("grid.lx_m", "lx, ly > 0"));
        }
        self.rock.validate()?;
        self.nano.validate()?;
        self.permeability.validate()?;
        self.controls.validate()?;
        self.linear.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::invalid("time.dt_days", "> 0"));
        }
        if !(self.target_pvi >= 0.0) {
            return Err(Error::invalid("time.until_pvi", ">= 0"));
        }
        if !(self.boundary.rate_pv_per_year > 0.0) {
            return Err(Error::invalid("boundary.rate_pv_per_year", "> 0"));
        }
        if self.boundary.injection_edge == self.boundary.production_edge {
            return Err(Error::invalid(
                "boundary.production_edge",
                "must differ from the injection edge",
            ));
        }
        let (lo, hi) = (self.rock.swr, self.rock.max_water_saturation());
        for (key, s) in [
            ("initial.water_saturation", self.initial_saturation),
            ("boundary.injected_saturation", self.boundary.injected_saturation),
        ] {
            if let Some(s) = s {
                if !(lo..=hi).contains(&s) {
                    return Err(Error::invalid(key, "within [S_wr, 1 - S_nr]"));
                }
            }
        }
        if !(self.snapshot_every_pvi > 0.0) {
            return Err(Error::invalid("output.snapshot_every_pvi", "> 0"));
        }
        Ok(())
    }

    pub fn pore_volume(&self) -> f64 {
        self.rock.phi0 * self.grid.lx * self.grid.ly
    }

    fn edge_length(&self, edge: Edge) -> f64 {
        match edge {
            Edge::Left | Edge::Right => self.grid.ly,
            Edge::Bottom | Edge::Top => self.grid.lx,
        }
    }

    /// Uniform inflow velocity on the injection edge (m/s).
    pub fn injection_flux(&self) -> f64 {
        pv_rate_to_flux(
            self.boundary.rate_pv_per_year,
            self.pore_volume(),
            self.edge_length(self.boundary.injection_edge),
        )
    }

    pub fn build_grid(&self) -> Result<StructuredGrid2D> {
        let b = &self.boundary;
        let inject = BoundaryCondition::Flux {
            inflow: self.injection_flux(),
            saturation: b
                .injected_saturation
                .unwrap_or_else(|| self.rock.max_water_saturation()),
            concentration: self.nano.injected_concentration,
        };
        let segments = Edge::ALL
            .iter()
            .map(|&edge| {
                let condition = if edge == b.injection_edge {
                    inject
                } else if edge == b.production_edge {
                    BoundaryCondition::Pressure {
                        pressure: b.production_pressure,
                    }
                } else {
                    BoundaryCondition::NoFlow
                };
                BoundarySegment::whole(edge, condition)
            })
            .collect();
        StructuredGrid2D::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly, segments)
    }

    /// Seconds of injection per pore volume.
    pub fn seconds_per_pvi(&self) -> f64 {
        SECONDS_PER_YEAR / self.boundary.rate_pv_per_year
    }

    /// Steps needed to reach the target PVI.
    pub fn total_steps(&self) -> usize {
        let exact = self.target_pvi * self.seconds_per_pvi() / self.dt;
        (exact - 1e-9 * exact.max(1.0)).ceil().max(0.0) as usize
    }
}

/// Uniform boundary velocity that injects `rate` pore volumes per year
/// through an edge of the given length.
pub fn pv_rate_to_flux(rate_pv_per_year: f64, pore_volume: f64, edge_length: f64) -> f64 {
    rate_pv_per_year * pore_volume / (SECONDS_PER_YEAR * edge_length)
}

/// Per-cell fields at a committed time level, plus the face fluxes of the
/// step that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub saturation: Vec<f64>,
    /// Water potential (Pa).
    pub potential: Vec<f64>,
    pub concentration: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub porosity: Vec<f64>,
    pub permeability: Vec<f64>,
    pub water_flux: Vec<f64>,
    pub oil_flux: Vec<f64>,
    pub water_speed: Vec<f64>,
}

impl SimulationState {
    /// Water pressure recovered from the potential.
    pub fn water_pressure(&self, grid: &StructuredGrid2D, rock: &RockFluidParams) -> Vec<f64> {
        (0..grid.num_cells())
            .map(|c| self.potential[c] - rock.rho_w * rock.gravity * grid.cell_center(c)[1])
            .collect()
    }
}

/// Uniform initial state: `S_w = S_w0`, no particles, undamaged rock and the
/// production pressure everywhere.
pub fn apply_initial_conditions(
    config: &SimulationConfig,
    grid: &StructuredGrid2D,
) -> Result<SimulationState> {
    let n = grid.num_cells();
    let s0 = config.initial_saturation.unwrap_or(config.rock.swr);
    Ok(SimulationState {
        saturation: vec![s0; n],
        potential: vec![config.boundary.production_pressure; n],
        concentration: vec![0.0; n],
        v1: vec![0.0; n],
        v2: vec![0.0; n],
        porosity: vec![config.rock.phi0; n],
        permeability: config.permeability.build(grid)?,
        water_flux: vec![0.0; grid.faces().len()],
        oil_flux: vec![0.0; grid.faces().len()],
        water_speed: vec![0.0; n],
    })
}

/// Cumulative volumes per unit thickness (m^2).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MassBalanceLedger {
    pub water_initial: f64,
    pub water_injected: f64,
    pub water_produced: f64,
    pub water_in_place: f64,
    pub particles_injected: f64,
    pub particles_suspended: f64,
    pub particles_deposited: f64,
    pub particles_entrapped: f64,
    pub particles_produced: f64,
}

impl MassBalanceLedger {
    /// `|in place - initial - injected + produced| / max(initial, injected)`.
    pub fn water_residual(&self) -> f64 {
        let r = self.water_in_place - self.water_initial - self.water_injected + self.water_produced;
        let scale = self.water_initial.max(self.water_injected);
        if scale > 0.0 {
            r.abs() / scale
        } else {
            r.abs()
        }
    }

    /// Particle imbalance relative to the cumulative injected volume
    /// (absolute when nothing has been injected).
    pub fn particle_residual(&self) -> f64 {
        let r = self.particles_suspended
            + self.particles_deposited
            + self.particles_entrapped
            + self.particles_produced
            - self.particles_injected;
        if self.particles_injected > 0.0 {
            r.abs() / self.particles_injected
        } else {
            r.abs()
        }
    }

    fn refresh_in_place(&mut self, grid: &StructuredGrid2D, s: &SimulationState) {
        let vol = grid.cell_volume();
        let mut water = 0.0;
        let mut suspended = 0.0;
        for c in 0..grid.num_cells() {
            let w = s.porosity[c] * s.saturation[c];
            water += w;
            suspended += w * s.concentration[c];
        }
        self.water_in_place = water * vol;
        self.particles_suspended = suspended * vol;
        self.particles_deposited = s.v1.iter().sum::<f64>() * vol;
        self.particles_entrapped = s.v2.iter().sum::<f64>() * vol;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    /// Simulated time at the end of the step (s).
    pub time: f64,
    pub pvi: f64,
    pub outer_iterations: usize,
    /// Last `||S^{k+1} - S^k||_2`.
    pub final_delta: f64,
    pub converged: bool,
    pub thetas: Vec<f64>,
    pub pressure_iterations: Vec<usize>,
    pub concentration_iterations: Vec<usize>,
    pub saturation_clamps: usize,
    pub concentration_clamps: usize,
    pub porosity_clamps: usize,
    pub water_residual: f64,
    pub particle_residual: f64,
    pub ledger: MassBalanceLedger,
}

/// Particle and damage fields produced by one transport pass.
struct TransportResult {
    concentration: Vec<f64>,
    v1: Vec<f64>,
    v2: Vec<f64>,
    porosity: Vec<f64>,
    permeability: Vec<f64>,
    iterations: usize,
    conc_clamps: usize,
    phi_clamps: usize,
}

/// A running simulation: configuration, grid, committed state and ledger.
pub struct Simulation {
    pub config: SimulationConfig,
    pub grid: StructuredGrid2D,
    pub state: SimulationState,
    pub ledger: MassBalanceLedger,
    pub step: usize,
    pub time: f64,
    initial_permeability: Vec<f64>,
    ordering: Vec<usize>,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        Self::new_unchecked(config)
    }

    /// Builds without validating the boundary rate or target, so that
    /// degenerate setups (zero injection) can be stepped directly.
    pub fn new_unchecked(config: SimulationConfig) -> Result<Self> {
        let grid = config.build_grid()?;
        let state = apply_initial_conditions(&config, &grid)?;
        let mut ledger = MassBalanceLedger::default();
        ledger.refresh_in_place(&grid, &state);
        ledger.water_initial = ledger.water_in_place;
        let ordering = grid.narrow_band_ordering();
        Ok(Simulation {
            initial_permeability: state.permeability.clone(),
            config,
            grid,
            state,
            ledger,
            step: 0,
            time: 0.0,
            ordering,
        })
    }

    pub fn initial_permeability(&self) -> &[f64] {
        &self.initial_permeability
    }

    pub fn pvi(&self) -> f64 {
        self.time / self.config.seconds_per_pvi()
    }

    fn ordering(&self) -> Option<&[usize]> {
        match self.config.linear.method {
            SolveMethod::BandedDirect => Some(&self.ordering),
            _ => None,
        }
    }

    fn transport_pass(
        &self,
        sat_new: &[f64],
        phi_iter: &[f64],
        v1_iter: &[f64],
        conc_guess: &[f64],
        water_flux: &[f64],
        water_speed: &[f64],
    ) -> Result<TransportResult> {
        let cfg = &self.config;
        let st = &self.state;
        let system = transport::assemble_concentration_system(&TransportInputs {
            grid: &self.grid,
            params: &cfg.nano,
            dt: cfg.dt,
            phi_iter,
            phi_old: &st.porosity,
            sat_new,
            sat_old: &st.saturation,
            conc_old: &st.concentration,
            v1_iter,
            water_flux,
            water_speed,
        })?;
        let (mut conc, report) =
            sparse::solve_ordered(&system, &cfg.linear, Some(conc_guess), self.ordering())?;
        let conc_clamps = transport::clamp_concentration(&mut conc);

        let n = self.grid.num_cells();
        let rock = &cfg.rock;
        let mut v1 = Vec::with_capacity(n);
        let mut v2 = Vec::with_capacity(n);
        let mut porosity = Vec::with_capacity(n);
        let mut permeability = Vec::with_capacity(n);
        let mut phi_clamps = 0;
        for c in 0..n {
            let u = water_speed[c];
            let a = transport::update_v1(st.v1[c], u, conc[c], &cfg.nano, cfg.dt);
            let b = transport::update_v2(st.v2[c], u, conc[c], &cfg.nano, cfg.dt);
            let (phi, clamped) = petrophysics::update_porosity(rock.phi0, a, b);
            phi_clamps += clamped as usize;
            let f = petrophysics::flow_efficiency(b, rock.flow_efficiency_coef);
            permeability.push(petrophysics::update_permeability(
                self.initial_permeability[c],
                phi,
                rock.phi0,
                f,
                rock.plugged_seepage,
                rock.damage_exponent,
            ));
            v1.push(a);
            v2.push(b);
            porosity.push(phi);
        }
        Ok(TransportResult {
            concentration: conc,
            v1,
            v2,
            porosity,
            permeability,
            iterations: report.iterations,
            conc_clamps,
            phi_clamps,
        })
    }

    /// Advances one time step. On outer-loop failure the committed state is
    /// left untouched and the failing report is returned inside the error.
    pub fn advance_time_step(&mut self) -> Result<StepReport> {
        let cfg = &self.config;
        let controls = cfg.controls;
        let n = self.grid.num_cells();

        let mut sat_k = self.state.saturation.clone();
        let mut phi_k = self.state.porosity.clone();
        let mut perm_k = self.state.permeability.clone();
        let mut pot_k = self.state.potential.clone();
        let mut conc_k = self.state.concentration.clone();
        let mut v1_k = self.state.v1.clone();

        let mut report = StepReport {
            step: self.step + 1,
            time: self.time + cfg.dt,
            pvi: (self.time + cfg.dt) / cfg.seconds_per_pvi(),
            outer_iterations: 0,
            final_delta: f64::INFINITY,
            converged: false,
            thetas: Vec::new(),
            pressure_iterations: Vec::new(),
            concentration_iterations: Vec::new(),
            saturation_clamps: 0,
            concentration_clamps: 0,
            porosity_clamps: 0,
            water_residual: 0.0,
            particle_residual: 0.0,
            ledger: self.ledger,
        };

        let mut delta_prev = 1.0;
        for _ in 0..controls.max_outer_iterations {
            let it = flow::solve_flow_iteration(
                &FlowInputs {
                    grid: &self.grid,
                    rock: &cfg.rock,
                    dt: cfg.dt,
                    sat_old: &self.state.saturation,
                    phi_old: &self.state.porosity,
                    sat_iter: &sat_k,
                    phi_iter: &phi_k,
                    perm_iter: &perm_k,
                    potential_iter: &pot_k,
                    mode: controls.capillary_mode,
                },
                &cfg.linear,
                self.ordering(),
            )?;
            report.outer_iterations += 1;
            report.pressure_iterations.push(it.solve.iterations);
            report.saturation_clamps += it.clamp_events;

            let delta_curr = diff_norm(&it.saturation, &sat_k);
            let theta = flow::compute_relaxation_factor(delta_prev, delta_curr, &controls);
            report.thetas.push(theta);
            let sat_next = flow::relax_saturation(&sat_k, &it.saturation, theta);
            let change = diff_norm(&sat_next, &sat_k);
            report.final_delta = change;

            let tr = if cfg.transport_enabled {
                let tr = self.transport_pass(
                    &it.saturation,
                    &phi_k,
                    &v1_k,
                    &conc_k,
                    &it.fluxes.water,
                    &it.water_speed,
                )?;
                report.concentration_iterations.push(tr.iterations);
                report.concentration_clamps += tr.conc_clamps;
                report.porosity_clamps += tr.phi_clamps;
                Some(tr)
            } else {
                None
            };

            if change < controls.eps_s {
                report.converged = true;
                self.commit(it, tr, &phi_k, &mut report);
                return Ok(report);
            }

            delta_prev = change;
            sat_k = sat_next;
            pot_k = it.potential;
            if let Some(tr) = tr {
                phi_k = tr.porosity;
                perm_k = tr.permeability;
                conc_k = tr.concentration;
                v1_k = tr.v1;
            }
        }
        debug_assert_eq!(sat_k.len(), n);
        log::error!(
            "step {} did not converge: |dS| = {:.3e} after {} iterations",
            report.step,
            report.final_delta,
            report.outer_iterations
        );
        Err(Error::NotConverged(Box::new(report)))
    }

    /// Commits the conservative saturation of the final iteration. Water
    /// volume `phi^k S~` is carried over to the updated porosity so the
    /// water and particle balances telescope across steps.
    fn commit(
        &mut self,
        it: flow::FlowIteration,
        tr: Option<TransportResult>,
        phi_k: &[f64],
        report: &mut StepReport,
    ) {
        let cfg = &self.config;
        let dt = cfg.dt;
        for (f, _) in self.grid.boundary_faces() {
            let q = it.fluxes.water[f];
            if q > 0.0 {
                self.ledger.water_produced += dt * q;
            } else {
                self.ledger.water_injected -= dt * q;
            }
        }
        let st = &mut self.state;
        match tr {
            Some(tr) => {
                st.saturation = it
                    .saturation
                    .iter()
                    .enumerate()
                    .map(|(c, &s)| {
                        if tr.porosity[c] == phi_k[c] {
                            s
                        } else {
                            phi_k[c] * s / tr.porosity[c]
                        }
                    })
                    .collect();
                let (inj, prod) =
                    transport::boundary_particle_rates(&self.grid, &it.fluxes.water, &tr.concentration);
                self.ledger.particles_injected += dt * inj;
                self.ledger.particles_produced += dt * prod;
                st.concentration = tr.concentration;
                st.v1 = tr.v1;
                st.v2 = tr.v2;
                st.porosity = tr.porosity;
                st.permeability = tr.permeability;
            }
            None => st.saturation = it.saturation,
        }
        st.potential = it.potential;
        st.water_flux = it.fluxes.water;
        st.oil_flux = it.fluxes.oil;
        st.water_speed = it.water_speed;

        self.ledger.refresh_in_place(&self.grid, &self.state);
        self.step += 1;
        self.time = self.step as f64 * dt;
        report.ledger = self.ledger;
        report.water_residual = self.ledger.water_residual();
        report.particle_residual = self.ledger.particle_residual();
    }

    /// Steps until the target PVI, calling `observer` after every accepted
    /// step. The observer may stop the run early by returning an error.
    pub fn run(
        &mut self,
        mut observer: impl FnMut(&Simulation, &StepReport) -> Result<()>,
    ) -> Result<()> {
        let total = self.config.total_steps();
        while self.step < total {
            let report = self.advance_time_step()?;
            observer(self, &report)?;
        }
        Ok(())
    }
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
