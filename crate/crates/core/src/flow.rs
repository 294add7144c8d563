//! One outer iteration of the pressure/saturation split.
//!
//! Cell-centered two-point fluxes with harmonic face permeability and
//! phase-wise donor-cell mobilities. Fluxes are volumetric per unit
//! thickness (m^2/s) and positive out of the face owner.
//!
//! The pressure equation is written for the water potential. In
//! [`CapillaryMode::LinearizedCoupled`] the capillary potential is expanded
//! about the previous iterate and the explicit saturation update is
//! substituted into that expansion, so capillary diffusion enters the
//! pressure matrix implicitly. In [`CapillaryMode::LaggedExplicit`] the
//! capillary potential of the previous iterate is a pure source term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, Face, StructuredGrid2D};
use crate::petrophysics::{Mobilities, RockFluidParams};
use crate::sparse::{self, CsrMatrix, LinearSolveControls, SolveReport, SparseSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CapillaryMode {
    #[default]
    LinearizedCoupled,
    LaggedExplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationControls {
    pub theta_min: f64,
    pub theta_max: f64,
    /// Relaxation tuning constant.
    pub rho: f64,
    /// Outer-loop threshold on the 2-norm of the saturation change.
    pub eps_s: f64,
    pub max_outer_iterations: usize,
    pub capillary_mode: CapillaryMode,
}

impl Default for IterationControls {
    fn default() -> Self {
        IterationControls {
            theta_min: 0.1,
            theta_max: 0.9,
            rho: 0.2,
            eps_s: 1e-4,
            max_outer_iterations: 50,
            capillary_mode: CapillaryMode::LinearizedCoupled,
        }
    }
}

impl IterationControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_min > 0.0 && self.theta_min <= self.theta_max && self.theta_max <= 1.0) {
            return Err(Error::invalid(
                "controls.theta_min",
                "0 < theta_min <= theta_max <= 1",
            ));
        }
        if !(self.rho > 0.0) {
            return Err(Error::invalid("controls.rho", "rho > 0"));
        }
        if !(self.eps_s > 0.0) {
            return Err(Error::invalid("controls.eps_s", "eps_s > 0"));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::invalid("controls.max_outer_iterations", ">= 1"));
        }
        Ok(())
    }
}

/// Two-point transmissibility `area * K_face / distance`. Interior faces use
/// the distance-weighted harmonic mean of the two cell permeabilities;
/// boundary faces use the owner value over the half-cell distance.
pub fn face_transmissibility(face: &Face, perm: &[f64]) -> f64 {
    match face.neighbor {
        Some(n) => {
            let half = 0.5 * face.distance;
            let (k1, k2) = (perm[face.owner], perm[n]);
            if k1 <= 0.0 || k2 <= 0.0 {
                return 0.0;
            }
            face.area / (half / k1 + half / k2)
        }
        None => face.area * perm[face.owner] / face.distance,
    }
}

/// Donor-cell mobility: the owner's value when the potential drop from owner
/// to neighbor is non-negative.
pub fn upwind_face_mobility(potential_drop: f64, owner: f64, neighbor: f64) -> f64 {
    if potential_drop >= 0.0 {
        owner
    } else {
        neighbor
    }
}

/// Per-cell and per-face coefficients frozen at the previous iterate.
#[derive(Debug, Clone)]
pub struct FlowCoefficients {
    pub mobilities: Vec<Mobilities>,
    /// Capillary potential and its saturation derivative at `S^k`.
    pub capillary: Vec<f64>,
    pub capillary_slope: Vec<f64>,
    pub transmissibility: Vec<f64>,
    pub face_water_mobility: Vec<f64>,
    pub face_oil_mobility: Vec<f64>,
    /// Water potential on Dirichlet faces (NaN elsewhere).
    pub boundary_potential: Vec<f64>,
}

#[derive(Clone, Copy)]
pub struct FlowInputs<'a> {
    pub grid: &'a StructuredGrid2D,
    pub rock: &'a RockFluidParams,
    pub dt: f64,
    pub sat_old: &'a [f64],
    pub phi_old: &'a [f64],
    pub sat_iter: &'a [f64],
    pub phi_iter: &'a [f64],
    pub perm_iter: &'a [f64],
    /// Water potential of the previous iterate; sets upwind directions.
    pub potential_iter: &'a [f64],
    pub mode: CapillaryMode,
}

impl FlowInputs<'_> {
    fn cell_y(&self, c: usize) -> f64 {
        self.grid.cell_center(c)[1]
    }
}

pub fn flow_coefficients(inp: &FlowInputs) -> FlowCoefficients {
    let grid = inp.grid;
    let rock = inp.rock;
    let n = grid.num_cells();
    let mobilities: Vec<Mobilities> = inp.sat_iter.iter().map(|&s| rock.mobilities(s)).collect();
    let capillary: Vec<f64> = (0..n)
        .map(|c| rock.capillary_potential(inp.sat_iter[c], inp.cell_y(c)))
        .collect();
    let capillary_slope: Vec<f64> = inp
        .sat_iter
        .iter()
        .map(|&s| rock.capillary_potential_derivative(s))
        .collect();

    let nf = grid.faces().len();
    let mut transmissibility = vec![0.0; nf];
    let mut lam_w = vec![0.0; nf];
    let mut lam_n = vec![0.0; nf];
    let mut boundary_potential = vec![f64::NAN; nf];
    for (f, face) in grid.faces().iter().enumerate() {
        transmissibility[f] = face_transmissibility(face, inp.perm_iter);
        let o = face.owner;
        match face.neighbor {
            Some(nb) => {
                let dw = inp.potential_iter[o] - inp.potential_iter[nb];
                let dn = dw + capillary[o] - capillary[nb];
                lam_w[f] = upwind_face_mobility(dw, mobilities[o].water, mobilities[nb].water);
                lam_n[f] = upwind_face_mobility(dn, mobilities[o].oil, mobilities[nb].oil);
            }
            None => {
                lam_w[f] = mobilities[o].water;
                lam_n[f] = mobilities[o].oil;
                if let Some(BoundaryCondition::Pressure { pressure }) =
                    grid.segment_of(face).map(|s| s.condition)
                {
                    let y = grid.face_center(face)[1];
                    boundary_potential[f] = pressure + rock.rho_w * rock.gravity * y;
                }
            }
        }
    }
    FlowCoefficients {
        mobilities,
        capillary,
        capillary_slope,
        transmissibility,
        face_water_mobility: lam_w,
        face_oil_mobility: lam_n,
        boundary_potential,
    }
}

/// Affine form `M x + b` of a per-cell flux divergence.
struct Affine {
    matrix: CsrMatrix,
    offset: Vec<f64>,
}

/// Water flux divergence `W(Phi) = A_w Phi + w_b`, oil flux divergence
/// `A_n Phi + C_n Phi_c + n_b`.
struct FluxOperators {
    water: Affine,
    oil_potential: CsrMatrix,
    oil_capillary: CsrMatrix,
    oil_offset: Vec<f64>,
}

fn flux_operators(inp: &FlowInputs, co: &FlowCoefficients) -> Result<FluxOperators> {
    let grid = inp.grid;
    let rock = inp.rock;
    let n = grid.num_cells();
    let mut tw = Vec::with_capacity(5 * n);
    let mut tn = Vec::with_capacity(5 * n);
    let mut tc = Vec::with_capacity(5 * n);
    let mut wb = vec![0.0; n];
    let mut nb_off = vec![0.0; n];
    let dgrav = (rock.rho_n - rock.rho_w) * rock.gravity;

    for (f, face) in grid.faces().iter().enumerate() {
        let t = co.transmissibility[f];
        let o = face.owner;
        let gw = t * co.face_water_mobility[f];
        let gn = t * co.face_oil_mobility[f];
        match face.neighbor {
            Some(nb) => {
                for (trip, g) in [(&mut tw, gw), (&mut tn, gn), (&mut tc, gn)] {
                    trip.push((o, o, g));
                    trip.push((o, nb, -g));
                    trip.push((nb, nb, g));
                    trip.push((nb, o, -g));
                }
            }
            None => match grid.segment_of(face).map(|s| s.condition) {
                Some(BoundaryCondition::Pressure { .. }) => {
                    let phi_b = co.boundary_potential[f];
                    tw.push((o, o, gw));
                    tn.push((o, o, gn));
                    wb[o] -= gw * phi_b;
                    nb_off[o] -= gn * phi_b;
                    // capillary potential outside equals the owner's at the face height
                    let y_face = grid.face_center(face)[1];
                    nb_off[o] += gn * dgrav * (inp.cell_y(o) - y_face);
                }
                Some(BoundaryCondition::Flux {
                    inflow,
                    saturation,
                    ..
                }) => {
                    let fw = rock.mobilities(saturation).water_fraction;
                    wb[o] -= inflow * face.area * fw;
                    nb_off[o] -= inflow * face.area * (1.0 - fw);
                }
                Some(BoundaryCondition::NoFlow) | None => {}
            },
        }
    }
    Ok(FluxOperators {
        water: Affine {
            matrix: CsrMatrix::from_triplets(n, &tw)?,
            offset: wb,
        },
        oil_potential: CsrMatrix::from_triplets(n, &tn)?,
        oil_capillary: CsrMatrix::from_triplets(n, &tc)?,
        oil_offset: nb_off,
    })
}

/// Assembled pressure system plus what is needed to post-process its
/// solution.
pub struct PressureAssembly {
    pub system: SparseSystem,
    pub coefficients: FlowCoefficients,
    /// Rows are scaled by this factor (`dt / cell volume`).
    pub row_scale: f64,
}

/// Assembles the pressure equation in the new water potential.
pub fn assemble_pressure_system(inp: &FlowInputs) -> Result<PressureAssembly> {
    let grid = inp.grid;
    let n = grid.num_cells();
    if !grid
        .segments()
        .iter()
        .any(|s| s.condition.is_dirichlet())
    {
        return Err(Error::config(
            "pressure equation needs at least one pressure (Dirichlet) boundary segment",
        ));
    }
    let co = flow_coefficients(inp);
    let ops = flux_operators(inp, &co)?;
    let vol = grid.cell_volume();
    let scale = inp.dt / vol;

    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(13 * n);
    let mut rhs = vec![0.0; n];
    for r in 0..n {
        for (c, v) in ops.water.matrix.row(r) {
            trip.push((r, c, scale * v));
        }
        for (c, v) in ops.oil_potential.row(r) {
            trip.push((r, c, scale * v));
        }
        rhs[r] = -(ops.water.offset[r] + ops.oil_offset[r]);
    }

    // known capillary potential entering through C_n
    let mut cap_known = co.capillary.clone();
    let symmetric = match inp.mode {
        CapillaryMode::LaggedExplicit => true,
        CapillaryMode::LinearizedCoupled => {
            // G = dt / (V phi^k), D = Phi_c' G
            let d: Vec<f64> = (0..n)
                .map(|c| co.capillary_slope[c] * inp.dt / (vol * inp.phi_iter[c]))
                .collect();
            for c in 0..n {
                let carried = inp.phi_old[c] * inp.sat_old[c] / inp.phi_iter[c] - inp.sat_iter[c];
                cap_known[c] += co.capillary_slope[c] * carried - d[c] * ops.water.offset[c];
            }
            // - C_n D A_w
            for r in 0..n {
                for (m, cv) in ops.oil_capillary.row(r) {
                    let f = -cv * d[m] * scale;
                    for (c, av) in ops.water.matrix.row(m) {
                        trip.push((r, c, f * av));
                    }
                }
            }
            false
        }
    };
    let mut cn_cap = vec![0.0; n];
    ops.oil_capillary.mul_vec(&cap_known, &mut cn_cap);
    for r in 0..n {
        rhs[r] = scale * (rhs[r] - cn_cap[r]);
    }

    let mut system = SparseSystem::assemble(n, &trip, rhs)?;
    system.symmetric = symmetric;
    Ok(PressureAssembly {
        system,
        coefficients: co,
        row_scale: scale,
    })
}

#[derive(Debug, Clone)]
pub struct FaceFluxes {
    pub water: Vec<f64>,
    pub oil: Vec<f64>,
}

impl FaceFluxes {
    pub fn total(&self, f: usize) -> f64 {
        self.water[f] + self.oil[f]
    }
}

/// Water face fluxes for a given water potential.
pub fn water_fluxes(
    inp: &FlowInputs,
    co: &FlowCoefficients,
    potential: &[f64],
) -> Vec<f64> {
    let grid = inp.grid;
    grid.faces()
        .iter()
        .enumerate()
        .map(|(f, face)| {
            let g = co.transmissibility[f] * co.face_water_mobility[f];
            let o = face.owner;
            match face.neighbor {
                Some(nb) => g * (potential[o] - potential[nb]),
                None => match grid.segment_of(face).map(|s| s.condition) {
                    Some(BoundaryCondition::Pressure { .. }) => {
                        g * (potential[o] - co.boundary_potential[f])
                    }
                    Some(BoundaryCondition::Flux {
                        inflow, saturation, ..
                    }) => -inflow * face.area * inp.rock.mobilities(saturation).water_fraction,
                    _ => 0.0,
                },
            }
        })
        .collect()
}

/// Oil face fluxes for a water potential and a capillary potential field.
pub fn oil_fluxes(
    inp: &FlowInputs,
    co: &FlowCoefficients,
    potential: &[f64],
    capillary: &[f64],
) -> Vec<f64> {
    let grid = inp.grid;
    let rock = inp.rock;
    let dgrav = (rock.rho_n - rock.rho_w) * rock.gravity;
    grid.faces()
        .iter()
        .enumerate()
        .map(|(f, face)| {
            let g = co.transmissibility[f] * co.face_oil_mobility[f];
            let o = face.owner;
            match face.neighbor {
                Some(nb) => g * (potential[o] - potential[nb] + capillary[o] - capillary[nb]),
                None => match grid.segment_of(face).map(|s| s.condition) {
                    Some(BoundaryCondition::Pressure { .. }) => {
                        let y_face = grid.face_center(face)[1];
                        g * (potential[o] - co.boundary_potential[f]
                            + dgrav * (inp.cell_y(o) - y_face))
                    }
                    Some(BoundaryCondition::Flux {
                        inflow, saturation, ..
                    }) => {
                        -inflow * face.area * (1.0 - rock.mobilities(saturation).water_fraction)
                    }
                    _ => 0.0,
                },
            }
        })
        .collect()
}

/// Net outward flux per cell.
pub fn divergence(grid: &StructuredGrid2D, face_flux: &[f64]) -> Vec<f64> {
    let mut div = vec![0.0; grid.num_cells()];
    for (f, face) in grid.faces().iter().enumerate() {
        div[face.owner] += face_flux[f];
        if let Some(nb) = face.neighbor {
            div[nb] -= face_flux[f];
        }
    }
    div
}

/// Cell velocity vectors from face fluxes: each component is the mean of the
/// two opposing face velocities.
pub fn cell_velocities(grid: &StructuredGrid2D, face_flux: &[f64]) -> Vec<[f64; 2]> {
    let mut u = vec![[0.0; 2]; grid.num_cells()];
    for (f, face) in grid.faces().iter().enumerate() {
        let axis = face.axis();
        let vel = face_flux[f] * face.normal[axis] / face.area;
        u[face.owner][axis] += 0.5 * vel;
        if let Some(nb) = face.neighbor {
            u[nb][axis] += 0.5 * vel;
        }
    }
    u
}

pub fn speed(u: &[[f64; 2]]) -> Vec<f64> {
    u.iter().map(|v| v[0].hypot(v[1])).collect()
}

/// Saturation from the discrete water balance
/// `phi^k S~ V = phi^n S^n V - dt div(F_w)`, clamped to
/// `[S_wr, 1 - S_nr]`. Returns the clamped field, the unclamped field, and
/// the number of clamped cells.
pub fn explicit_saturation_update(
    grid: &StructuredGrid2D,
    rock: &RockFluidParams,
    sat_old: &[f64],
    phi_old: &[f64],
    phi_iter: &[f64],
    water_flux: &[f64],
    dt: f64,
) -> (Vec<f64>, Vec<f64>, usize) {
    let vol = grid.cell_volume();
    let div = divergence(grid, water_flux);
    let raw: Vec<f64> = (0..grid.num_cells())
        .map(|c| (phi_old[c] * sat_old[c] - dt * div[c] / vol) / phi_iter[c])
        .collect();
    let (lo, hi) = (rock.swr, rock.max_water_saturation());
    let mut clamps = 0;
    let clamped = raw
        .iter()
        .map(|&s| {
            if s < lo || s > hi {
                clamps += 1;
                s.clamp(lo, hi)
            } else {
                s
            }
        })
        .collect();
    if clamps > 0 {
        log::debug!("saturation clamped in {clamps} cells");
    }
    (clamped, raw, clamps)
}

/// Relaxation factor `clamp(rho * prev / curr, theta_min, theta_max)`, where
/// `prev` is the norm of the previous accepted saturation change (1 on the
/// first iteration) and `curr` the norm of the current unrelaxed change.
pub fn compute_relaxation_factor(prev: f64, curr: f64, controls: &IterationControls) -> f64 {
    (controls.rho * prev / curr.max(1e-30)).clamp(controls.theta_min, controls.theta_max)
}

pub fn relax_saturation(sat_iter: &[f64], sat_tilde: &[f64], theta: f64) -> Vec<f64> {
    sat_iter
        .iter()
        .zip(sat_tilde)
        .map(|(s, t)| s + theta * (t - s))
        .collect()
}

/// Result of one pressure solve and saturation update.
#[derive(Debug, Clone)]
pub struct FlowIteration {
    pub potential: Vec<f64>,
    pub fluxes: FaceFluxes,
    /// Clamped and unclamped conservative saturation.
    pub saturation: Vec<f64>,
    pub saturation_raw: Vec<f64>,
    pub clamp_events: usize,
    /// Cell water velocity and its magnitude (m/s).
    pub water_velocity: Vec<[f64; 2]>,
    pub water_speed: Vec<f64>,
    pub solve: SolveReport,
    /// Pressure solves needed to settle the water upwind directions.
    pub upwind_passes: usize,
}

/// Re-solves allowed per outer iteration while water upwind directions
/// disagree with the solved potential.
pub const MAX_UPWIND_PASSES: usize = 10;

/// Saturation change below which a water upwind flip is ignored.
const UPWIND_FLIP_TOLERANCE: f64 = 1e-13;

/// Number of faces whose water donor cell under `potential` differs from
/// the one used in assembly, counting only flips that would move some
/// saturation by more than [`UPWIND_FLIP_TOLERANCE`].
fn water_upwind_flips(inp: &FlowInputs, co: &FlowCoefficients, potential: &[f64]) -> usize {
    let phi_min = inp.phi_iter.iter().cloned().fold(f64::INFINITY, f64::min);
    let to_saturation = inp.dt / (inp.grid.cell_volume() * phi_min);
    inp.grid
        .interior_faces()
        .filter(|&(f, o, nb)| {
            let before = inp.potential_iter[o] - inp.potential_iter[nb] >= 0.0;
            let drop = potential[o] - potential[nb];
            if before == (drop >= 0.0) {
                return false;
            }
            let dl = (co.mobilities[o].water - co.mobilities[nb].water).abs();
            co.transmissibility[f] * dl * drop.abs() * to_saturation > UPWIND_FLIP_TOLERANCE
        })
        .count()
}

/// Assembles and solves the pressure equation, then derives fluxes,
/// velocities and the unrelaxed saturation.
///
/// Upwind directions start from the previous iterate's potential. When the
/// solved potential reverses the water flow across a face where the donor
/// choice matters, the system is reassembled with the new directions, so
/// that the returned fluxes are upwinded consistently with the potential
/// they were computed from.
pub fn solve_flow_iteration(
    inp: &FlowInputs,
    linear: &LinearSolveControls,
    ordering: Option<&[usize]>,
) -> Result<FlowIteration> {
    let mut upwind = inp.potential_iter.to_vec();
    let mut iterations = 0;
    let mut passes = 0;
    let (co, potential, mut solve) = loop {
        let pass = FlowInputs {
            potential_iter: &upwind,
            ..*inp
        };
        let assembly = assemble_pressure_system(&pass)?;
        let (potential, solve) =
            sparse::solve_ordered(&assembly.system, linear, Some(inp.potential_iter), ordering)?;
        iterations += solve.iterations;
        passes += 1;
        let flips = water_upwind_flips(&pass, &assembly.coefficients, &potential);
        if flips == 0 || passes == MAX_UPWIND_PASSES {
            if flips > 0 {
                log::debug!("{flips} water upwind flips left after {passes} passes");
            }
            break (assembly.coefficients, potential, solve);
        }
        upwind = potential;
    };
    solve.iterations = iterations;
    let water = water_fluxes(inp, &co, &potential);
    let (saturation, saturation_raw, clamp_events) = explicit_saturation_update(
        inp.grid,
        inp.rock,
        inp.sat_old,
        inp.phi_old,
        inp.phi_iter,
        &water,
        inp.dt,
    );
    let capillary: Vec<f64> = match inp.mode {
        CapillaryMode::LaggedExplicit => co.capillary.clone(),
        CapillaryMode::LinearizedCoupled => (0..saturation_raw.len())
            .map(|c| co.capillary[c] + co.capillary_slope[c] * (saturation_raw[c] - inp.sat_iter[c]))
            .collect(),
    };
    let oil = oil_fluxes(inp, &co, &potential, &capillary);
    let water_velocity = cell_velocities(inp.grid, &water);
    let water_speed = speed(&water_velocity);
    Ok(FlowIteration {
        potential,
        fluxes: FaceFluxes { water, oil },
        saturation,
        saturation_raw,
        clamp_events,
        water_velocity,
        water_speed,
        solve,
        upwind_passes: passes,
    })
}
