//! One-dimensional waterflood without capillarity against the Welge
//! tangent construction.

use nanoflow::driver::{GridSpec, PermeabilityScenario, Simulation, SimulationConfig, MILLIDARCY};

fn main() -> nanoflow::Result<()> {
    let mut cfg = SimulationConfig {
        grid: GridSpec { nx: 200, ny: 1, lx: 0.3, ly: 0.2 },
        permeability: PermeabilityScenario::Uniform { value: 100.0 * MILLIDARCY },
        target_pvi: 0.3,
        ..SimulationConfig::default()
    };
    cfg.rock.capillary_scale = 0.0;
    let rock = cfg.rock.clone();

    let fw = |sw: f64| rock.mobilities(sw).water_fraction;
    let dfw = |sw: f64| (fw(sw + 1e-7) - fw(sw - 1e-7)) / 2e-7;
    // tangent from (S_wr, 0): f'(S) (S - S_wr) = f(S)
    let (mut lo, mut hi) = (rock.swr + 1e-6, rock.max_water_saturation() - 1e-6);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dfw(mid) * (mid - rock.swr) > fw(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s_front = 0.5 * (lo + hi);

    let mut sim = Simulation::new(cfg)?;
    sim.run(|_, _| Ok(()))?;
    let x_front = sim.config.grid.lx * sim.pvi() * dfw(s_front);
    println!("front saturation {s_front:.4}, Welge front at {x_front:.4} m after {:.3} PVI", sim.pvi());
    println!("{:>8} {:>8}", "x (m)", "Sw");
    for c in (0..sim.grid.nx).step_by(10) {
        println!("{:>8.4} {:>8.4}", sim.grid.cell_center(c)[0], sim.state.saturation[c]);
    }
    Ok(())
}
