//! Nanofluid flood of a two-layer core from the shipped configuration,
//! written out as VTK/CSV snapshots, a time series and a run report.
//!
//! ```text
//! cargo run --release --example layered_flood -- [out_dir] [until_pvi]
//! ```

use std::path::{Path, PathBuf};

use nanoflow::io::{execute, parse_config};

fn main() -> nanoflow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/layered_flood".into()));
    let until: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.01);

    let config_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/regular_heterogeneous.toml");
    let mut cfg = parse_config(&config_path)?;
    cfg.target_pvi = until;
    cfg.snapshot_every_pvi = until / 4.0;

    let report = execute(cfg, &out)?;
    println!("{:?} after {} steps ({:.4} PVI)", report.status, report.steps, report.final_pvi);
    let l = &report.final_ledger;
    println!(
        "particles injected {:.3e} m^2: suspended {:.1}%, deposited {:.1}%, entrapped {:.1}%, produced {:.1}%",
        l.particles_injected,
        100.0 * l.particles_suspended / l.particles_injected,
        100.0 * l.particles_deposited / l.particles_injected,
        100.0 * l.particles_entrapped / l.particles_injected,
        100.0 * l.particles_produced / l.particles_injected,
    );
    for f in &report.files {
        println!("  {} ({:.4} PVI)", out.join(&f.file).display(), f.pvi);
    }
    Ok(())
}
