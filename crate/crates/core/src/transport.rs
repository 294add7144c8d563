//! Suspended nanoparticle concentration in the water phase, with surface
//! deposition (`v1`) and pore-throat entrapment (`v2`).
//!
//! The concentration equation is implicit in `C` with donor-cell advection
//! on the water face fluxes and two-point diffusion. Retention is a sink
//! taken implicitly in `C`, so the suspended loss matches the `v1`/`v2`
//! gains exactly below the critical velocity; entrainment uses the
//! previous iterate of `v1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, StructuredGrid2D};
use crate::sparse::SparseSystem;

pub const BOLTZMANN: f64 = 1.380649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NanoparticleParams {
    /// Surface retention rate coefficient (1/m).
    pub gamma_d: f64,
    /// Entrainment rate coefficient (1/m).
    pub gamma_e: f64,
    /// Pore-throat blocking constant (1/m).
    pub gamma_pt: f64,
    /// Critical velocity for entrainment (m/s).
    pub critical_velocity: f64,
    /// Brownian diffusivity (m^2/s).
    pub diffusivity: f64,
    /// Injected concentration (volume fraction).
    pub injected_concentration: f64,
    /// Particulate suspension density (kg/m^3).
    pub suspension_density: f64,
}

impl Default for NanoparticleParams {
    fn default() -> Self {
        NanoparticleParams {
            gamma_d: 16.0,
            gamma_e: 30.0,
            gamma_pt: 1.28,
            critical_velocity: 4.6e-6,
            diffusivity: 5.6e-8,
            injected_concentration: 0.0,
            suspension_density: 1000.0,
        }
    }
}

impl NanoparticleParams {
    pub fn validate(&self) -> Result<()> {
        let prefix = "nanoparticles";
        for (k, v) in [
            ("gamma_d_per_m", self.gamma_d),
            ("gamma_e_per_m", self.gamma_e),
            ("gamma_pt_per_m", self.gamma_pt),
            ("critical_velocity_m_per_s", self.critical_velocity),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("{prefix}.{k}"), ">= 0"));
            }
        }
        if !(self.diffusivity > 0.0) {
            return Err(Error::invalid(format!("{prefix}.diffusivity_m2_per_s"), "D > 0"));
        }
        if !(0.0..1.0).contains(&self.injected_concentration) {
            return Err(Error::invalid(
                format!("{prefix}.injected_concentration"),
                "0 <= C0 < 1",
            ));
        }
        if !(self.suspension_density > 0.0) {
            return Err(Error::invalid(
                format!("{prefix}.suspension_density_kg_per_m3"),
                "> 0",
            ));
        }
        Ok(())
    }
}

/// Stokes–Einstein diffusivity `k_B T / (3 pi mu d)`.
pub fn stokes_einstein_diffusivity(temperature: f64, viscosity: f64, diameter: f64) -> f64 {
    BOLTZMANN * temperature / (3.0 * std::f64::consts::PI * viscosity * diameter)
}

/// Velocity excess over the critical velocity, zero at or below it.
fn excess(speed: f64, p: &NanoparticleParams) -> f64 {
    (speed - p.critical_velocity).max(0.0)
}

/// Net rate of particle loss from suspension (1/s, volume fraction).
pub fn net_loss_rate(speed: f64, c: f64, v1: f64, p: &NanoparticleParams) -> f64 {
    (p.gamma_d + p.gamma_pt) * speed * c - p.gamma_e * excess(speed, p) * v1
}

/// Surface-deposited volume after one step; implicit in `v1` above the
/// critical velocity.
pub fn update_v1(v1_old: f64, speed: f64, c: f64, p: &NanoparticleParams, dt: f64) -> f64 {
    let gained = v1_old + dt * p.gamma_d * speed * c;
    if speed <= p.critical_velocity {
        gained
    } else {
        gained / (1.0 + dt * p.gamma_e * excess(speed, p))
    }
}

pub fn update_v2(v2_old: f64, speed: f64, c: f64, p: &NanoparticleParams, dt: f64) -> f64 {
    v2_old + dt * p.gamma_pt * speed * c
}

/// Fields entering one concentration solve.
pub struct TransportInputs<'a> {
    pub grid: &'a StructuredGrid2D,
    pub params: &'a NanoparticleParams,
    pub dt: f64,
    /// Porosity of the previous iterate and of the last committed step.
    pub phi_iter: &'a [f64],
    pub phi_old: &'a [f64],
    pub sat_new: &'a [f64],
    pub sat_old: &'a [f64],
    pub conc_old: &'a [f64],
    pub v1_iter: &'a [f64],
    pub water_flux: &'a [f64],
    pub water_speed: &'a [f64],
}

/// Assembles the concentration equation, each row scaled by `dt / V`:
///
/// `phi^k S C - phi^n S^n C^n + dt/V (sum F_adv + F_diff) + dt R = 0`
///
/// with `R = (gamma_d + gamma_pt) |u| C - gamma_e (|u| - u_c)+ v1^k`.
pub fn assemble_concentration_system(inp: &TransportInputs) -> Result<SparseSystem> {
    let grid = inp.grid;
    let p = inp.params;
    let n = grid.num_cells();
    let scale = inp.dt / grid.cell_volume();
    let mut trip = Vec::with_capacity(5 * n);
    let mut rhs = vec![0.0; n];

    for c in 0..n {
        let u = inp.water_speed[c];
        let retention = inp.dt * (p.gamma_d + p.gamma_pt) * u;
        trip.push((c, c, inp.phi_iter[c] * inp.sat_new[c] + retention));
        let release = inp.dt * p.gamma_e * excess(u, p) * inp.v1_iter[c];
        rhs[c] = inp.phi_old[c] * inp.sat_old[c] * inp.conc_old[c] + release;
    }

    let spread: Vec<f64> = (0..n)
        .map(|c| inp.phi_iter[c] * inp.sat_new[c] * p.diffusivity)
        .collect();
    for (f, face) in grid.faces().iter().enumerate() {
        let flux = inp.water_flux[f];
        let o = face.owner;
        match face.neighbor {
            Some(nb) => {
                let (a, b) = (spread[o], spread[nb]);
                let d = if a > 0.0 && b > 0.0 {
                    face.area / (0.5 * face.distance * (1.0 / a + 1.0 / b))
                } else {
                    0.0
                };
                let out = flux.max(0.0);
                let inn = flux.min(0.0);
                trip.push((o, o, scale * (out + d)));
                trip.push((o, nb, scale * (inn - d)));
                trip.push((nb, nb, scale * (-inn + d)));
                trip.push((nb, o, scale * (-out - d)));
            }
            None => {
                if flux > 0.0 {
                    trip.push((o, o, scale * flux));
                } else if flux < 0.0 {
                    let c_in = match grid.segment_of(face).map(|s| s.condition) {
                        Some(BoundaryCondition::Flux { concentration, .. }) => concentration,
                        _ => 0.0,
                    };
                    rhs[o] -= scale * flux * c_in;
                }
            }
        }
    }
    SparseSystem::assemble(n, &trip, rhs)
}

/// Clamps round-off negatives to zero and returns the number of cells
/// touched.
pub fn clamp_concentration(c: &mut [f64]) -> usize {
    let mut count = 0;
    for x in c.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-12 {
                log::warn!("concentration {x:e} clamped to zero");
            }
            *x = 0.0;
            count += 1;
        }
    }
    count
}

/// Per-boundary particle volume rates (m^2/s) implied by a concentration
/// field: inflow carried in, outflow carried out.
pub fn boundary_particle_rates(
    grid: &StructuredGrid2D,
    water_flux: &[f64],
    conc: &[f64],
) -> (f64, f64) {
    let mut injected = 0.0;
    let mut produced = 0.0;
    for (f, face) in grid.boundary_faces() {
        let flux = water_flux[f];
        if flux > 0.0 {
            produced += flux * conc[face.owner];
        } else if flux < 0.0 {
            if let Some(BoundaryCondition::Flux { concentration, .. }) =
                grid.segment_of(face).map(|s| s.condition)
            {
                injected -= flux * concentration;
            }
        }
    }
    (injected, produced)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::grid::{BoundarySegment, Edge};
    use crate::sparse::{dense_lu_solve, solve, LinearSolveControls};

    #[test]
    fn stokes_einstein_values() {
        let d1 = stokes_einstein_diffusivity(293.0, 1e-3, 1e-6);
        // 4.3e-9 cm^2/s
        assert!((d1 / 4.3e-13 - 1.0).abs() < 0.02, "{d1:e}");
        let d2 = stokes_einstein_diffusivity(293.0, 1e-3, 2e-6);
        assert_relative_eq!(d2, d1 / 2.0, max_relative = 1e-15);
        let d40 = stokes_einstein_diffusivity(293.0, 1e-3, 40e-9);
        assert_relative_eq!(d40, 1.0728e-11, max_relative = 1e-3);
    }

    #[test]
    fn loss_rate_cases() {
        let p = NanoparticleParams::default();
        assert_eq!(net_loss_rate(0.0, 0.004, 1e-3, &p), 0.0);
        let at = net_loss_rate(p.critical_velocity, 0.004, 1e-3, &p);
        assert_relative_eq!(at, 17.28 * 4.6e-6 * 0.004, max_relative = 1e-14);
        let r = net_loss_rate(1e-5, 0.004, 1e-3, &p);
        assert_relative_eq!(r, 5.292e-7, max_relative = 1e-12);
    }

    #[test]
    fn v_update_cases() {
        let p = NanoparticleParams::default();
        assert_eq!(update_v1(2e-3, 0.0, 0.004, &p, 2160.0), 2e-3);
        let v1 = update_v1(0.0, 1e-5, 0.004, &p, 2160.0);
        assert_relative_eq!(v1, 1.3824e-3 / 1.34992, max_relative = 1e-12);
        assert!((v1 - 1.0241e-3).abs() < 1e-7);
        let no_e = NanoparticleParams { gamma_e: 0.0, ..p };
        assert_relative_eq!(
            update_v1(1e-4, 1e-5, 0.004, &no_e, 2160.0),
            1e-4 + 2160.0 * 16.0 * 1e-5 * 0.004,
            max_relative = 1e-14
        );
        assert_eq!(update_v2(3e-4, 1e-5, 0.0, &p, 2160.0), 3e-4);
        assert_eq!(update_v2(3e-4, 0.0, 0.004, &p, 2160.0), 3e-4);
        assert_relative_eq!(update_v2(0.0, 1e-5, 0.004, &p, 2160.0), 1.10592e-4, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn branches_continuous(c in 0.0..0.02f64, v1 in 0.0..0.01f64, dt in 1.0..1e4f64) {
            let p = NanoparticleParams::default();
            let uc = p.critical_velocity;
            let h = uc * 1e-9;
            let r_lo = net_loss_rate(uc - h, c, v1, &p);
            let r_hi = net_loss_rate(uc + h, c, v1, &p);
            // Lipschitz bound across the threshold: no jump
            let lip = 2.0 * (p.gamma_d + p.gamma_pt + p.gamma_e) * (c + v1);
            prop_assert!((r_hi - r_lo).abs() <= lip * h * 1.01);
            let a = update_v1(v1, uc - h, c, &p, dt);
            let b = update_v1(v1, uc + h, c, &p, dt);
            prop_assert!((a - b).abs() <= 1e-6 * a.abs() + 1e-300);
        }

        #[test]
        fn updates_non_negative(v1 in 0.0..0.01f64, v2 in 0.0..0.01f64, u in 0.0..1e-3f64, c in 0.0..0.02f64) {
            let p = NanoparticleParams::default();
            prop_assert!(update_v1(v1, u, c, &p, 2160.0) >= 0.0);
            prop_assert!(update_v2(v2, u, c, &p, 2160.0) >= v2);
        }
    }

    fn line_grid(n: usize) -> StructuredGrid2D {
        StructuredGrid2D::new(
            n,
            1,
            0.04,
            0.01,
            vec![
                BoundarySegment::whole(
                    Edge::Left,
                    BoundaryCondition::Flux {
                        inflow: 1e-6,
                        saturation: 0.999,
                        concentration: 0.01,
                    },
                ),
                BoundarySegment::whole(Edge::Right, BoundaryCondition::Pressure { pressure: 0.0 }),
                BoundarySegment::whole(Edge::Bottom, BoundaryCondition::NoFlow),
                BoundarySegment::whole(Edge::Top, BoundaryCondition::NoFlow),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_injection_stays_zero() {
        let g = line_grid(4);
        let p = NanoparticleParams {
            injected_concentration: 0.0,
            ..Default::default()
        };
        let mut flux = vec![0.0; g.faces().len()];
        for (f, face) in g.boundary_faces() {
            flux[f] = 1e-8 * face.normal[0];
        }
        let g0 = StructuredGrid2D::new(
            4,
            1,
            0.04,
            0.01,
            g.segments()
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    if let BoundaryCondition::Flux { concentration, .. } = &mut s.condition {
                        *concentration = 0.0;
                    }
                    s
                })
                .collect(),
        )
        .unwrap();
        let z = vec![0.0; 4];
        let one = vec![0.3; 4];
        let sys = assemble_concentration_system(&TransportInputs {
            grid: &g0,
            params: &p,
            dt: 100.0,
            phi_iter: &one,
            phi_old: &one,
            sat_new: &one,
            sat_old: &one,
            conc_old: &z,
            v1_iter: &z,
            water_flux: &flux,
            water_speed: &[1e-6; 4],
        })
        .unwrap();
        let (c, _) = solve(&sys, &LinearSolveControls::default(), None).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn static_redistribution() {
        let g = StructuredGrid2D::closed(3, 2, 1.0, 1.0).unwrap();
        let n = g.num_cells();
        let p = NanoparticleParams::default();
        let phi = vec![0.25; n];
        let s_old: Vec<f64> = (0..n).map(|c| 0.2 + 0.1 * c as f64).collect();
        let s_new: Vec<f64> = (0..n).map(|c| 0.6 - 0.05 * c as f64).collect();
        let c_old = vec![0.004; n];
        let sys = assemble_concentration_system(&TransportInputs {
            grid: &g,
            params: &NanoparticleParams { diffusivity: 1e-30, ..p },
            dt: 10.0,
            phi_iter: &phi,
            phi_old: &phi,
            sat_new: &s_new,
            sat_old: &s_old,
            conc_old: &c_old,
            v1_iter: &vec![0.0; n],
            water_flux: &vec![0.0; g.faces().len()],
            water_speed: &vec![0.0; n],
        })
        .unwrap();
        let (c, _) = solve(&sys, &LinearSolveControls::default(), None).unwrap();
        for k in 0..n {
            assert_relative_eq!(c[k], 0.004 * s_old[k] / s_new[k], max_relative = 1e-9);
        }
    }

    /// Independent dense build of the 4-cell 1D discrete equations.
    #[test]
    fn four_cell_matches_dense_oracle() {
        let g = line_grid(4);
        let p = NanoparticleParams {
            diffusivity: 2e-7,
            ..Default::default()
        };
        let dx = 0.01;
        let area = 0.01;
        let vol = dx * area;
        let dt = 50.0;
        let phi = [0.3, 0.28, 0.31, 0.29];
        let phi_old = [0.3, 0.29, 0.31, 0.3];
        let s_new = [0.9, 0.7, 0.5, 0.3];
        let s_old = [0.8, 0.6, 0.4, 0.3];
        let c_old = [0.005, 0.002, 0.001, 0.0];
        let v1 = [1e-4, 0.0, 2e-4, 0.0];
        let speed = [1e-5, 2e-6, 6e-6, 1e-6];
        // left inflow 1e-6 * area, flow to the right everywhere, last face decreasing
        let q = [1e-8, 0.9e-8, 0.8e-8, 0.7e-8, 0.6e-8];
        // flux vector in grid face order
        let mut flux = vec![0.0; g.faces().len()];
        for (f, face) in g.faces().iter().enumerate() {
            let i = face.owner;
            flux[f] = if face.normal[0] < 0.0 { -q[0] } else if face.normal[0] > 0.0 { q[i + 1] } else { 0.0 };
        }
        let sys = assemble_concentration_system(&TransportInputs {
            grid: &g,
            params: &p,
            dt,
            phi_iter: &phi,
            phi_old: &phi_old,
            sat_new: &s_new,
            sat_old: &s_old,
            conc_old: &c_old,
            v1_iter: &v1,
            water_flux: &flux,
            water_speed: &speed,
        })
        .unwrap();
        let (c, _) = solve(&sys, &LinearSolveControls::default(), None).unwrap();

        let mut a = vec![vec![0.0; 4]; 4];
        let mut b = vec![0.0; 4];
        for i in 0..4 {
            a[i][i] += phi[i] * s_new[i] * vol / dt;
            b[i] += phi_old[i] * s_old[i] * c_old[i] * vol / dt;
            a[i][i] += vol * (16.0 + 1.28) * speed[i];
            b[i] += vol * 30.0 * (speed[i] - 4.6e-6f64).max(0.0) * v1[i];
        }
        b[0] += q[0] * 0.01;
        for i in 0..4 {
            // advective outflow through the east face
            a[i][i] += q[i + 1];
            if i + 1 < 4 {
                a[i + 1][i] -= q[i + 1];
                let hi = phi[i] * s_new[i] * p.diffusivity;
                let hj = phi[i + 1] * s_new[i + 1] * p.diffusivity;
                let t = area * 2.0 / (dx * (1.0 / hi + 1.0 / hj));
                a[i][i] += t;
                a[i][i + 1] -= t;
                a[i + 1][i + 1] += t;
                a[i + 1][i] -= t;
            }
        }
        let oracle = dense_lu_solve(&a, &b).unwrap();
        for i in 0..4 {
            assert_relative_eq!(c[i], oracle[i], max_relative = 1e-9);
        }
    }
}
