use nanoflow::driver::{GridSpec, PermeabilityScenario, Simulation, SimulationConfig, MILLIDARCY};
use nanoflow::grid::StructuredGrid2D;
use nanoflow::petrophysics::{flow_efficiency, update_permeability, update_porosity, RockFluidParams};
use proptest::prelude::*;

fn small_run(nx: usize, ny: usize, rate: f64, c0: f64, seed: u64) -> SimulationConfig {
    let mut cfg = SimulationConfig {
        grid: GridSpec {
            nx,
            ny,
            lx: 0.3,
            ly: 0.2,
        },
        permeability: PermeabilityScenario::Random {
            min: 10.0 * MILLIDARCY,
            max: 200.0 * MILLIDARCY,
            seed,
        },
        ..SimulationConfig::default()
    };
    cfg.boundary.rate_pv_per_year = rate;
    cfg.nano.injected_concentration = c0;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_geometry(nx in 1usize..40, ny in 1usize..40, lx in 0.01f64..10.0, ly in 0.01f64..10.0) {
        let g = StructuredGrid2D::closed(nx, ny, lx, ly).unwrap();
        prop_assert_eq!(g.faces().len(), nx * (ny + 1) + ny * (nx + 1));
        let area = g.cell_volume() * g.num_cells() as f64;
        prop_assert!((area - lx * ly).abs() <= 1e-12 * lx * ly);
        let mut seen = std::collections::HashSet::new();
        for (f, o, n) in g.interior_faces() {
            prop_assert!(o < n);
            prop_assert!(seen.insert(f));
        }
        prop_assert_eq!(seen.len(), nx * (ny + 1) + ny * (nx + 1) - 2 * (nx + ny));
    }

    #[test]
    fn permeability_never_recovers(steps in prop::collection::vec((0.0f64..1e-3, 0.0f64..1e-3), 1..40)) {
        let rock = RockFluidParams::default();
        let (mut v1, mut v2) = (0.0, 0.0);
        let mut k_prev = 1.0;
        let mut f_prev = 1.0;
        for (d1, d2) in steps {
            v1 += d1;
            v2 += d2;
            let (phi, _) = update_porosity(rock.phi0, v1, v2);
            let f = flow_efficiency(v2, rock.flow_efficiency_coef);
            let k = update_permeability(1.0, phi, rock.phi0, f, rock.plugged_seepage, rock.damage_exponent);
            prop_assert!(f <= f_prev);
            prop_assert!(k <= k_prev * (1.0 + 1e-15));
            prop_assert!(k > 0.0);
            k_prev = k;
            f_prev = f;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stepping_keeps_ledgers_and_bounds(
        nx in 2usize..8,
        ny in 1usize..5,
        rate in 0.05f64..2.0,
        c0 in 0.0f64..0.02,
        seed in any::<u64>(),
    ) {
        let cfg = small_run(nx, ny, rate, c0, seed);
        let (lo, hi) = (cfg.rock.swr, cfg.rock.max_water_saturation());
        let phi0 = cfg.rock.phi0;
        let mut sim = Simulation::new(cfg).unwrap();
        let mut last_pvi = 0.0;
        let mut v2_prev = sim.state.v2.clone();
        for step in 1..=8 {
            let r = sim.advance_time_step().unwrap();
            prop_assert!(r.converged && r.final_delta < sim.config.controls.eps_s);
            prop_assert!(r.water_residual <= 1e-8, "water {}", r.water_residual);
            prop_assert!(r.particle_residual <= 1e-6, "particles {}", r.particle_residual);
            // PVI grows linearly with the step count
            let expected = step as f64 * sim.config.dt / sim.config.seconds_per_pvi();
            prop_assert!((r.pvi - expected).abs() <= 1e-12 * expected);
            prop_assert!(r.pvi > last_pvi);
            last_pvi = r.pvi;
            let st = &sim.state;
            prop_assert!(st.saturation.iter().all(|s| (lo - 1e-12..=hi + 1e-12).contains(s)));
            prop_assert!(st.concentration.iter().all(|&c| c >= 0.0));
            prop_assert!(st.v1.iter().all(|&v| v >= 0.0));
            prop_assert!(st.porosity.iter().all(|&p| p <= phi0));
            prop_assert!(st.v2.iter().zip(&v2_prev).all(|(a, b)| a >= b));
            v2_prev.clone_from(&st.v2);
        }
    }

    #[test]
    fn identical_configs_replay_exactly(seed in any::<u64>(), c0 in 0.0f64..0.02) {
        let cfg = small_run(5, 3, 0.5, c0, seed);
        let mut a = Simulation::new(cfg.clone()).unwrap();
        let mut b = Simulation::new(cfg).unwrap();
        for _ in 0..5 {
            let ra = a.advance_time_step().unwrap();
            let rb = b.advance_time_step().unwrap();
            prop_assert_eq!(ra, rb);
        }
        prop_assert_eq!(&a.state, &b.state);
    }
}

#[test]
fn mirror_symmetric_setup_stays_symmetric() {
    let mut cfg = small_run(8, 6, 0.5, 0.01, 0);
    cfg.permeability = PermeabilityScenario::Uniform {
        value: 50.0 * MILLIDARCY,
    };
    let mut sim = Simulation::new(cfg).unwrap();
    for _ in 0..50 {
        sim.advance_time_step().unwrap();
        let st = &sim.state;
        for c in 0..sim.grid.num_cells() {
            let m = sim.grid.mirror_y(c);
            for f in [&st.saturation, &st.concentration, &st.porosity] {
                assert!((f[c] - f[m]).abs() <= 1e-8);
            }
        }
    }
}
