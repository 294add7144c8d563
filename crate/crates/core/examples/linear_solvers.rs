//! The pressure system of a partly flooded layered core, solved with each
//! linear solver.

use std::time::Instant;

use nanoflow::driver::{Simulation, SimulationConfig};
use nanoflow::flow::{assemble_pressure_system, FlowInputs};
use nanoflow::sparse::{solve, solve_ordered, SolveMethod};

fn main() -> nanoflow::Result<()> {
    let mut sim = Simulation::new(SimulationConfig::default())?;
    for _ in 0..50 {
        sim.advance_time_step()?;
    }
    let cfg = &sim.config;
    let st = &sim.state;
    let assembly = assemble_pressure_system(&FlowInputs {
        grid: &sim.grid,
        rock: &cfg.rock,
        dt: cfg.dt,
        sat_old: &st.saturation,
        phi_old: &st.porosity,
        sat_iter: &st.saturation,
        phi_iter: &st.porosity,
        perm_iter: &st.permeability,
        potential_iter: &st.potential,
        mode: cfg.controls.capillary_mode,
    })?;
    let system = &assembly.system;
    let (kl, ku) = system.matrix.bandwidths();
    println!(
        "{} unknowns, {} nonzeros, bandwidths {kl}/{ku}, symmetric: {}",
        system.dim(),
        system.matrix.nnz(),
        system.symmetric
    );

    let ordering = sim.grid.narrow_band_ordering();
    let reference = solve(system, &cfg.linear.with_method(SolveMethod::DenseDirect), None)?.0;
    for method in [SolveMethod::BandedDirect, SolveMethod::IterativeKrylov, SolveMethod::DenseDirect] {
        let start = Instant::now();
        let (x, report) =
            solve_ordered(system, &cfg.linear.with_method(method), Some(&st.potential), Some(&ordering))?;
        let dev = x.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "{method:?}: {:.2} ms, {} iterations, residual {:.2e}, max deviation {dev:.2e} Pa",
            start.elapsed().as_secs_f64() * 1e3,
            report.iterations,
            system.residual_norm(&x)
        );
    }
    Ok(())
}
