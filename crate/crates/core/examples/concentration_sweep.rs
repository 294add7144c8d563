//! Formation damage against injected concentration on a coarse grid.

use nanoflow::driver::{GridSpec, Simulation, SimulationConfig};

fn main() -> nanoflow::Result<()> {
    let until: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.02);
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "C0", "min phi", "min K/K0", "mean Sw", "produced");
    for c0 in [0.0, 0.0009, 0.004, 0.01] {
        let mut cfg = SimulationConfig {
            grid: GridSpec { nx: 30, ny: 10, lx: 0.3, ly: 0.2 },
            target_pvi: until,
            ..SimulationConfig::default()
        };
        cfg.nano.injected_concentration = c0;
        let mut sim = Simulation::new(cfg)?;
        sim.run(|_, _| Ok(()))?;

        let st = &sim.state;
        let min_phi = st.porosity.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_k = st
            .permeability
            .iter()
            .zip(sim.initial_permeability())
            .map(|(k, k0)| k / k0)
            .fold(f64::INFINITY, f64::min);
        let mean_sw = st.saturation.iter().sum::<f64>() / st.saturation.len() as f64;
        println!(
            "{c0:>8} {min_phi:>10.6} {min_k:>10.6} {mean_sw:>10.4} {:>10.3e}",
            sim.ledger.particles_produced
        );
    }
    Ok(())
}
