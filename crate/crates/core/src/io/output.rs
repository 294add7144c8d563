//! Field snapshots (legacy VTK and CSV), the per-step time series, and the
//! run manifest.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::driver::{MassBalanceLedger, SimulationState, StepReport};
use crate::error::{Error, Result};
use crate::grid::StructuredGrid2D;
use crate::petrophysics::RockFluidParams;

/// Position of a snapshot in the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMeta {
    pub step: usize,
    /// Seconds.
    pub time: f64,
    pub pvi: f64,
}

/// Cell-data array names, in file order.
pub const FIELD_NAMES: [&str; 7] = ["Sw", "pw", "C", "v1", "v2", "phi", "K"];

/// Column layout of the time-series CSV: step counters, the cumulative
/// ledger volumes (m^2 per unit thickness) and the two relative residuals.
pub const TIMESERIES_HEADER: &str = "step,time_s,pvi,outer_iterations,final_delta,\
pressure_iterations,concentration_iterations,saturation_clamps,concentration_clamps,\
porosity_clamps,water_initial,water_injected,water_produced,water_in_place,\
particles_injected,particles_suspended,particles_deposited,particles_entrapped,\
particles_produced,water_residual,particle_residual";

fn fields(state: &SimulationState, grid: &StructuredGrid2D, rock: &RockFluidParams) -> [Vec<f64>; 7] {
    [
        state.saturation.clone(),
        state.water_pressure(grid, rock),
        state.concentration.clone(),
        state.v1.clone(),
        state.v2.clone(),
        state.porosity.clone(),
        state.permeability.clone(),
    ]
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Full round-trip precision.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotFiles {
    pub vtk: PathBuf,
    pub csv: PathBuf,
}

/// Writes `snapshot_<step>.vtk` (legacy ASCII structured points, cell data)
/// and `snapshot_<step>.csv` into `dir`.
pub fn write_field_snapshot(
    state: &SimulationState,
    grid: &StructuredGrid2D,
    rock: &RockFluidParams,
    meta: &StepMeta,
    dir: &Path,
) -> Result<SnapshotFiles> {
    let stem = format!("snapshot_{:07}", meta.step);
    let data = fields(state, grid, rock);

    let vtk = dir.join(format!("{stem}.vtk"));
    let mut w = create(&vtk)?;
    let mut text = vtk_header(grid, meta);
    for (name, values) in FIELD_NAMES.iter().zip(&data) {
        let _ = writeln!(text, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            text.push_str(&num(*v));
            text.push('\n');
        }
    }
    w.write_all(text.as_bytes()).map_err(|e| Error::io(&vtk, e))?;
    finish(&vtk, w)?;

    let csv = dir.join(format!("{stem}.csv"));
    let mut w = create(&csv)?;
    let mut text = format!("i,j,x,y,{}\n", FIELD_NAMES.join(","));
    for c in 0..grid.num_cells() {
        let (i, j) = grid.cell_ij(c);
        let [x, y] = grid.cell_center(c);
        let _ = write!(text, "{i},{j},{},{}", num(x), num(y));
        for values in &data {
            text.push(',');
            text.push_str(&num(values[c]));
        }
        text.push('\n');
    }
    w.write_all(text.as_bytes()).map_err(|e| Error::io(&csv, e))?;
    finish(&csv, w)?;

    Ok(SnapshotFiles { vtk, csv })
}

/// Everything up to the first `SCALARS` line.
pub fn vtk_header(grid: &StructuredGrid2D, meta: &StepMeta) -> String {
    format!(
        "# vtk DataFile Version 3.0\n\
         nanoflow step {} time_s {} pvi {}\n\
         ASCII\n\
         DATASET STRUCTURED_POINTS\n\
         DIMENSIONS {} {} 1\n\
         ORIGIN 0 0 0\n\
         SPACING {} {} 1\n\
         CELL_DATA {}\n",
        meta.step,
        meta.time,
        meta.pvi,
        grid.nx + 1,
        grid.ny + 1,
        grid.dx,
        grid.dy,
        grid.num_cells()
    )
}

/// Rows of a snapshot CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotTable {
    pub ij: Vec<(usize, usize)>,
    pub xy: Vec<[f64; 2]>,
    /// One column per entry of [`FIELD_NAMES`].
    pub fields: [Vec<f64>; 7],
}

impl SnapshotTable {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        FIELD_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|k| self.fields[k].as_slice())
    }
}

pub fn read_snapshot_csv(path: &Path) -> Result<SnapshotTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, what: &str| {
        Error::config(format!("{}:{line}: {what}", path.display()))
    };
    let mut lines = text.lines().enumerate();
    let expected = format!("i,j,x,y,{}", FIELD_NAMES.join(","));
    match lines.next() {
        Some((_, h)) if h == expected => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    let mut table = SnapshotTable {
        ij: Vec::new(),
        xy: Vec::new(),
        fields: Default::default(),
    };
    for (n, line) in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 + FIELD_NAMES.len() {
            return Err(bad(n + 1, "wrong column count"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(n + 1, "bad index"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(n + 1, "bad number"));
        table.ij.push((int(cols[0])?, int(cols[1])?));
        table.xy.push([real(cols[2])?, real(cols[3])?]);
        for (k, col) in cols[4..].iter().enumerate() {
            table.fields[k].push(real(col)?);
        }
    }
    Ok(table)
}

/// Streams one CSV row per accepted step.
pub struct TimeseriesWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TimeseriesWriter {
    /// Creates `timeseries.csv` in `dir` and writes the header.
    pub fn create(dir: &Path) -> Result<Self> {
        let path = dir.join("timeseries.csv");
        let mut out = create(&path)?;
        writeln!(out, "{TIMESERIES_HEADER}").map_err(|e| Error::io(&path, e))?;
        Ok(TimeseriesWriter { path, out })
    }

    pub fn append(&mut self, r: &StepReport) -> Result<()> {
        let l = &r.ledger;
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.step,
            num(r.time),
            num(r.pvi),
            r.outer_iterations,
            num(r.final_delta),
            r.pressure_iterations.iter().sum::<usize>(),
            r.concentration_iterations.iter().sum::<usize>(),
            r.saturation_clamps,
            r.concentration_clamps,
            r.porosity_clamps,
        );
        for v in [
            l.water_initial,
            l.water_injected,
            l.water_produced,
            l.water_in_place,
            l.particles_injected,
            l.particles_suspended,
            l.particles_deposited,
            l.particles_entrapped,
            l.particles_produced,
            r.water_residual,
            r.particle_residual,
        ] {
            row.push(',');
            row.push_str(&num(v));
        }
        writeln!(self.out, "{row}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(self) -> Result<PathBuf> {
        finish(&self.path, self.out)?;
        Ok(self.path)
    }
}

/// Writes a whole report sequence at once.
pub fn write_timeseries(reports: &[StepReport], dir: &Path) -> Result<PathBuf> {
    let mut w = TimeseriesWriter::create(dir)?;
    for r in reports {
        w.append(r)?;
    }
    w.finish()
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    SnapshotVtk,
    SnapshotCsv,
    Timeseries,
    FailedStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub file: String,
    pub kind: FileKind,
    pub step: usize,
    pub time: f64,
    pub pvi: f64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Manifest of emitted files plus the final ledger; written as
/// `run_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub output_dir: PathBuf,
    pub status: RunStatus,
    pub steps: usize,
    pub final_time: f64,
    pub final_pvi: f64,
    pub files: Vec<ManifestEntry>,
    pub final_ledger: MassBalanceLedger,
    pub water_residual: f64,
    pub particle_residual: f64,
    pub error: Option<String>,
}

impl RunReport {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("run_report.json");
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn checksums(&self) -> Vec<(&str, &str)> {
        self.files
            .iter()
            .map(|f| (f.file.as_str(), f.sha256.as_str()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{apply_initial_conditions, SimulationConfig, GridSpec, Simulation};

    fn tiny(nx: usize, ny: usize) -> SimulationConfig {
        SimulationConfig {
            grid: GridSpec {
                nx,
                ny,
                lx: 0.03,
                ly: 0.02,
            },
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn single_cell_vtk_golden_header() {
        let cfg = tiny(1, 1);
        let grid = cfg.build_grid().unwrap();
        let state = apply_initial_conditions(&cfg, &grid).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let meta = StepMeta { step: 0, time: 0.0, pvi: 0.0 };
        let files = write_field_snapshot(&state, &grid, &cfg.rock, &meta, dir.path()).unwrap();
        let text = std::fs::read_to_string(&files.vtk).unwrap();
        let golden = "# vtk DataFile Version 3.0\n\
                      nanoflow step 0 time_s 0 pvi 0\n\
                      ASCII\n\
                      DATASET STRUCTURED_POINTS\n\
                      DIMENSIONS 2 2 1\n\
                      ORIGIN 0 0 0\n\
                      SPACING 0.03 0.02 1\n\
                      CELL_DATA 1\n\
                      SCALARS Sw double 1\n\
                      LOOKUP_TABLE default\n\
                      1.0000000000000000e-3\n";
        assert!(text.starts_with(golden), "{text}");
        // One datum per array.
        assert_eq!(text.lines().count(), 8 + 7 * 3);
        let table = read_snapshot_csv(&files.csv).unwrap();
        assert_eq!(table.ij, vec![(0, 0)]);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let mut cfg = tiny(5, 3);
        cfg.nano.injected_concentration = 0.01;
        cfg.boundary.rate_pv_per_year = 1.0;
        let mut sim = Simulation::new(cfg).unwrap();
        for _ in 0..3 {
            sim.advance_time_step().unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let meta = StepMeta { step: sim.step, time: sim.time, pvi: sim.pvi() };
        let files =
            write_field_snapshot(&sim.state, &sim.grid, &sim.config.rock, &meta, dir.path()).unwrap();
        let table = read_snapshot_csv(&files.csv).unwrap();
        let expected = fields(&sim.state, &sim.grid, &sim.config.rock);
        for (k, name) in FIELD_NAMES.iter().enumerate() {
            assert_eq!(table.field(name).unwrap(), expected[k].as_slice(), "{name}");
        }
        assert!(table.field("C").unwrap().iter().any(|&c| c > 0.0));
        for (c, xy) in table.xy.iter().enumerate() {
            assert_eq!(*xy, sim.grid.cell_center(c));
        }
    }

    #[test]
    fn initial_snapshot_has_clean_rock() {
        let cfg = tiny(4, 2);
        let grid = cfg.build_grid().unwrap();
        let state = apply_initial_conditions(&cfg, &grid).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let meta = StepMeta { step: 0, time: 0.0, pvi: 0.0 };
        let files = write_field_snapshot(&state, &grid, &cfg.rock, &meta, dir.path()).unwrap();
        let table = read_snapshot_csv(&files.csv).unwrap();
        assert!(table.field("C").unwrap().iter().all(|&c| c == 0.0));
        assert!(table.field("phi").unwrap().iter().all(|&p| p == cfg.rock.phi0));
    }

    #[test]
    fn empty_timeseries_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_timeseries(&[], dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), format!("{TIMESERIES_HEADER}\n"));
    }

    #[test]
    fn timeseries_rows_follow_header() {
        let mut cfg = tiny(4, 2);
        cfg.boundary.rate_pv_per_year = 1.0;
        let mut sim = Simulation::new(cfg).unwrap();
        let reports: Vec<_> = (0..4).map(|_| sim.advance_time_step().unwrap()).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = write_timeseries(&reports, dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let width = TIMESERIES_HEADER.split(',').count();
        let mut last_time = -1.0;
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), width);
            let t: f64 = cols[1].parse().unwrap();
            assert!(t > last_time);
            last_time = t;
        }
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn hex_digest() {
        assert_eq!(
            hex(&Sha256::digest(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
