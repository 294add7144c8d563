//! Runs a configuration to completion and writes every output into one
//! directory.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::driver::{Simulation, SimulationConfig, StepReport};
use crate::error::{Error, Result};
use crate::io::output::{
    hex, sha256_file, write_field_snapshot, FileKind, ManifestEntry, RunReport, RunStatus,
    StepMeta, TimeseriesWriter,
};

/// Deterministic identifier: a prefix of the configuration's SHA-256.
pub fn run_id(config: &SimulationConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    hex(&Sha256::digest(json.as_bytes()))[..16].to_string()
}

struct Emitter<'a> {
    dir: &'a Path,
    files: Vec<ManifestEntry>,
    every: f64,
    next_mark: usize,
    last_snapshot: Option<usize>,
}

impl Emitter<'_> {
    fn record(&mut self, path: &Path, kind: FileKind, meta: StepMeta) -> Result<()> {
        let file = path
            .strip_prefix(self.dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        self.files.push(ManifestEntry {
            file,
            kind,
            step: meta.step,
            time: meta.time,
            pvi: meta.pvi,
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    fn snapshot(&mut self, sim: &Simulation) -> Result<()> {
        let meta = meta_of(sim);
        let files = write_field_snapshot(&sim.state, &sim.grid, &sim.config.rock, &meta, self.dir)?;
        self.record(&files.vtk, FileKind::SnapshotVtk, meta)?;
        self.record(&files.csv, FileKind::SnapshotCsv, meta)?;
        self.last_snapshot = Some(sim.step);
        log::info!("snapshot at step {} ({:.4} PVI)", sim.step, meta.pvi);
        Ok(())
    }

    /// Snapshots whenever the PVI clock passes the next cadence mark.
    fn after_step(&mut self, sim: &Simulation) -> Result<()> {
        let pvi = sim.pvi();
        if pvi >= self.next_mark as f64 * self.every * (1.0 - 1e-12) {
            self.snapshot(sim)?;
            self.next_mark = (pvi / self.every + 1e-9).floor() as usize + 1;
        }
        Ok(())
    }
}

fn meta_of(sim: &Simulation) -> StepMeta {
    StepMeta {
        step: sim.step,
        time: sim.time,
        pvi: sim.pvi(),
    }
}

/// Runs to the configured target, writing snapshots at the PVI cadence (plus
/// the initial and final states), `timeseries.csv`, and `run_report.json`.
///
/// A numerical failure is not an `Err`: the report comes back with
/// [`RunStatus::Failed`], and for a non-converged step the failing
/// [`StepReport`] is dumped to `failed_step.json`. `Err` means bad input or
/// I/O trouble.
pub fn execute(config: SimulationConfig, out_dir: &Path) -> Result<RunReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let id = run_id(&config);
    let mut sim = Simulation::new(config)?;
    log::info!(
        "run {id}: {}x{} cells, {} steps to {} PVI",
        sim.grid.nx,
        sim.grid.ny,
        sim.config.total_steps(),
        sim.config.target_pvi
    );

    let mut emitter = Emitter {
        dir: out_dir,
        files: Vec::new(),
        every: sim.config.snapshot_every_pvi,
        next_mark: 1,
        last_snapshot: None,
    };
    emitter.snapshot(&sim)?;
    let mut series = TimeseriesWriter::create(out_dir)?;

    let outcome = sim.run(|s, report| {
        series.append(report)?;
        emitter.after_step(s)
    });

    let mut error = None;
    match outcome {
        Ok(()) => {}
        Err(e) if e.is_numerical() => {
            log::error!("{e}");
            if let Error::NotConverged(report) = &e {
                dump_failed_step(report, out_dir, &mut emitter)?;
            }
            error = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }

    if emitter.last_snapshot != Some(sim.step) {
        emitter.snapshot(&sim)?;
    }
    let series_path = series.finish()?;
    emitter.record(&series_path, FileKind::Timeseries, meta_of(&sim))?;

    let report = RunReport {
        run_id: id,
        output_dir: out_dir.to_path_buf(),
        status: if error.is_some() {
            RunStatus::Failed
        } else {
            RunStatus::Completed
        },
        steps: sim.step,
        final_time: sim.time,
        final_pvi: sim.pvi(),
        files: emitter.files,
        final_ledger: sim.ledger,
        water_residual: sim.ledger.water_residual(),
        particle_residual: sim.ledger.particle_residual(),
        error,
    };
    report.write(out_dir)?;
    Ok(report)
}

fn dump_failed_step(report: &StepReport, dir: &Path, emitter: &mut Emitter) -> Result<()> {
    let path = dir.join("failed_step.json");
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    let meta = StepMeta {
        step: report.step,
        time: report.time,
        pvi: report.pvi,
    };
    emitter.record(&path, FileKind::FailedStep, meta)
}
