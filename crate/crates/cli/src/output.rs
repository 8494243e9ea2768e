//! Deterministic tabular output: the shared time-series column contract,
//! generic CSV writing with a config-hash header, and the run manifest.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use superradiance::analysis;
use superradiance::cluster::ClusterRun;
use superradiance::lindblad::ExactRun;

use crate::CliError;

/// Column contract shared by every time-series file. The last two columns
/// hold density-matrix-only quantities and stay empty for correlation-solver
/// runs. Times are in units of `1/g`, rates in units of `g`.
pub const TIME_SERIES_COLUMNS: [&str; 13] = [
    "t_g",
    "sz",
    "n",
    "re_c0",
    "im_c0",
    "czz",
    "gamma_se",
    "gamma_ste",
    "gamma_ce",
    "gamma_tot",
    "witness",
    "purity",
    "dicke_overlap",
];

/// One sample of the shared time-series contract.
#[derive(Debug, Clone, Copy)]
pub struct TimeRow {
    pub t_g: f64,
    pub sz: f64,
    pub n: f64,
    pub re_c0: f64,
    pub im_c0: f64,
    pub czz: f64,
    pub gamma_se: f64,
    pub gamma_ste: f64,
    pub gamma_ce: f64,
    pub gamma_tot: f64,
    pub witness: f64,
    pub purity: Option<f64>,
    pub dicke_overlap: Option<f64>,
}

/// Shortest round-trip scientific rendering; the one float format used in
/// every output file, so identical numbers always produce identical bytes.
pub fn fmt_float(v: f64) -> String {
    format!("{v:e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

impl TimeRow {
    fn to_csv(self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_float(self.t_g),
            fmt_float(self.sz),
            fmt_float(self.n),
            fmt_float(self.re_c0),
            fmt_float(self.im_c0),
            fmt_float(self.czz),
            fmt_float(self.gamma_se),
            fmt_float(self.gamma_ste),
            fmt_float(self.gamma_ce),
            fmt_float(self.gamma_tot),
            fmt_float(self.witness),
            fmt_opt(self.purity),
            fmt_opt(self.dicke_overlap),
        )
    }
}

/// Project an exact trajectory onto the shared column contract.
pub fn rows_from_exact(run: &ExactRun) -> Vec<TimeRow> {
    let g = run.params.coupling_g;
    run.records
        .iter()
        .zip(&run.rates)
        .map(|(rec, rate)| TimeRow {
            t_g: rec.t * g,
            sz: rec.sz,
            n: rec.n,
            re_c0: rec.c0.re,
            im_c0: rec.c0.im,
            czz: rec.czz,
            gamma_se: rate.gamma_se,
            gamma_ste: rate.gamma_ste,
            gamma_ce: rate.gamma_ce,
            gamma_tot: rate.gamma_tot,
            witness: analysis::witness(rec.c0, rec.czz),
            purity: Some(rec.purity),
            dicke_overlap: Some(rec.dicke_overlap),
        })
        .collect()
}

/// Project a correlation-solver trajectory onto the shared column contract.
pub fn rows_from_cluster(run: &ClusterRun) -> Vec<TimeRow> {
    let g = run.params.coupling_g;
    run.times
        .iter()
        .zip(run.states.iter().zip(&run.rates))
        .map(|(&t, (state, rate))| TimeRow {
            t_g: t * g,
            sz: state.s_z,
            n: state.n,
            re_c0: state.c0.re,
            im_c0: state.c0.im,
            czz: state.c_zz,
            gamma_se: rate.gamma_se,
            gamma_ste: rate.gamma_ste,
            gamma_ce: rate.gamma_ce,
            gamma_tot: rate.gamma_tot,
            witness: analysis::witness(state.c0, state.c_zz),
            purity: None,
            dicke_overlap: None,
        })
        .collect()
}

fn metadata_line(config_hash: &str) -> String {
    format!(
        "# config_hash={config_hash} version={} time_unit=1/g rate_unit=g",
        env!("CARGO_PKG_VERSION")
    )
}

/// Write any CSV table: one `#` metadata line, one column-name row, then
/// the data rows (each already rendered with [`fmt_float`]).
pub fn write_table(
    path: &Path,
    config_hash: &str,
    columns: &[&str],
    rows: impl IntoIterator<Item = String>,
) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    let write = |out: &mut std::io::BufWriter<std::fs::File>, line: &str| {
        writeln!(out, "{line}")
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
    };
    write(&mut out, &metadata_line(config_hash))?;
    write(&mut out, &columns.join(","))?;
    for row in rows {
        write(&mut out, &row)?;
    }
    out.flush()
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

/// Write a time-series file under the shared column contract.
pub fn write_time_series(
    path: &Path,
    config_hash: &str,
    rows: &[TimeRow],
) -> Result<(), CliError> {
    write_table(
        path,
        config_hash,
        &TIME_SERIES_COLUMNS,
        rows.iter().map(|r| r.to_csv()),
    )
}

/// One produced output file with the provenance of the run behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// file name, relative to the manifest's directory
    pub file: String,
    pub config_hash: String,
    /// solver regime check: single-emitter rate well below the raw coupling
    pub weak_coupling: bool,
    /// photon-cutoff adequacy; absent for correlation-solver outputs
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_ok: Option<bool>,
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub wall_seconds: f64,
    pub outputs: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn new(wall_seconds: f64, outputs: Vec<ManifestEntry>) -> Self {
        RunManifest { version: env!("CARGO_PKG_VERSION").into(), wall_seconds, outputs }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::io(format!("cannot serialize manifest: {e}")))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid manifest {}: {e}", path.display())))
    }
}

/// Collects output files plus their provenance while a command runs, then
/// writes the manifest in one go.
pub struct OutputSet {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
    started: std::time::Instant,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputSet { dir: dir.to_path_buf(), entries: Vec::new(), started: std::time::Instant::now() })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn record(&mut self, file: &str, config_hash: &str, weak_coupling: bool, cutoff_ok: Option<bool>) {
        self.entries.push(ManifestEntry {
            file: file.to_string(),
            config_hash: config_hash.to_string(),
            weak_coupling,
            cutoff_ok,
        });
    }

    /// Write `<name>` and the manifest entry in one step.
    pub fn write_series(
        &mut self,
        file: &str,
        config_hash: &str,
        weak_coupling: bool,
        cutoff_ok: Option<bool>,
        rows: &[TimeRow],
    ) -> Result<(), CliError> {
        write_time_series(&self.path(file), config_hash, rows)?;
        self.record(file, config_hash, weak_coupling, cutoff_ok);
        Ok(())
    }

    pub fn finish(self, manifest_file: &str) -> Result<(), CliError> {
        let manifest =
            RunManifest::new(self.started.elapsed().as_secs_f64(), self.entries);
        manifest.write(&self.dir.join(manifest_file))
    }
}
