//! Brownian diffusivity of spherical particles in water at 20 C.

use nanoflow::transport::stokes_einstein_diffusivity;

fn main() {
    let (temperature, viscosity) = (293.0, 1e-3);
    println!("{:>10} {:>14} {:>14}", "d (nm)", "D (m^2/s)", "D (cm^2/s)");
    for d_nm in [10.0, 40.0, 100.0, 1000.0] {
        let d = stokes_einstein_diffusivity(temperature, viscosity, d_nm * 1e-9);
        println!("{d_nm:>10} {d:>14.4e} {:>14.4e}", d * 1e4);
    }
}
