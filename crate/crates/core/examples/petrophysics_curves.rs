//! Tabulates the constitutive curves and the damage law for the reference
//! rock and fluids.

use nanoflow::petrophysics::{flow_efficiency, update_permeability, update_porosity, RockFluidParams};

fn main() {
    let rock = RockFluidParams::default();

    println!("{:>6} {:>8} {:>8} {:>8} {:>8} {:>12}", "Sw", "S", "krw", "krn", "fw", "pc (bar)");
    for k in 0..=20 {
        let sw = rock.swr + k as f64 / 20.0 * rock.mobile_span();
        let s = rock.normalized_saturation(sw);
        let (krw, krn) = rock.relative_permeabilities(s);
        let m = rock.mobilities(sw);
        println!(
            "{sw:>6.3} {s:>8.4} {krw:>8.4} {krn:>8.4} {:>8.4} {:>12.4}",
            m.water_fraction,
            rock.capillary_pressure(s) / 1e5
        );
    }

    println!("\ndamage: v1 = v2 = v, phi0 = {}, kf = {}, l = {}", rock.phi0, rock.plugged_seepage, rock.damage_exponent);
    println!("{:>8} {:>8} {:>8} {:>8}", "v", "phi", "f", "K/K0");
    for v in [0.0, 0.001, 0.005, 0.01, 0.02, 0.05, 0.1] {
        let (phi, _) = update_porosity(rock.phi0, v, v);
        let f = flow_efficiency(v, rock.flow_efficiency_coef);
        let ratio = update_permeability(1.0, phi, rock.phi0, f, rock.plugged_seepage, rock.damage_exponent);
        println!("{v:>8.3} {phi:>8.4} {f:>8.5} {ratio:>8.4}");
    }
}
