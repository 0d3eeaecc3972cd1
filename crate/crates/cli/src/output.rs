//! CSV and manifest writers. Reals carry 17 significant digits so values
//! round-trip exactly; NaN is written as an empty field. Every file is
//! written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use modsel_core::harness::ReplicationRow;
use serde::Serialize;

use crate::exit::Failure;

pub fn real(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| format!("`{s}` is not a number"))
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Failure::io(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Collects the files of one command run.
pub struct Outputs {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir, written: Vec::new() }
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Failure> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Failure::io(e.to_string());
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::io(e.to_string()))?;
        atomic_write(&self.dir.join(name), &bytes)?;
        self.written.push(name.to_owned());
        Ok(())
    }
}

pub const REPLICATION_HEADER: [&str; 15] = [
    "T",
    "label",
    "criterion",
    "replication",
    "seed",
    "selected",
    "selected_pdim",
    "ratio",
    "L_selected",
    "L_best",
    "n_excluded",
    "cross_mu_eps",
    "cross_loo_eps",
    "lemma1",
    "error",
];

pub fn replication_record(r: &ReplicationRow) -> Vec<String> {
    vec![
        r.t.to_string(),
        r.label.clone(),
        r.criterion.clone(),
        r.replication.to_string(),
        r.seed.to_string(),
        r.selected.clone(),
        r.selected_pdim.to_string(),
        real(r.ratio),
        real(r.l_selected),
        real(r.l_best),
        r.n_excluded.to_string(),
        real(r.cross_mu_eps),
        real(r.cross_loo_eps),
        real(r.lemma1),
        r.error.clone(),
    ]
}

/// Reads rows written by [`replication_record`].
pub fn read_replications(path: &Path) -> Result<Vec<ReplicationRow>, Failure> {
    let bad = |line: usize, msg: String| Failure::data(format!("{}: record {line}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| Failure::data(e.to_string()))?;
    let header = reader.headers().map_err(|e| Failure::data(e.to_string()))?.clone();
    if header.iter().ne(REPLICATION_HEADER) {
        return Err(Failure::data(format!("{} does not have the replication header", path.display())));
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let rec = record.map_err(|e| bad(n + 1, e.to_string()))?;
        let int = |k: usize| rec[k].parse::<u64>().map_err(|_| bad(n + 1, format!("`{}` is not an integer", &rec[k])));
        let num = |k: usize| parse_real(&rec[k]).map_err(|m| bad(n + 1, m));
        rows.push(ReplicationRow {
            t: int(0)? as usize,
            label: rec[1].to_owned(),
            criterion: rec[2].to_owned(),
            replication: int(3)? as usize,
            seed: int(4)?,
            selected: rec[5].to_owned(),
            selected_pdim: int(6)? as usize,
            ratio: num(7)?,
            l_selected: num(8)?,
            l_best: num(9)?,
            n_excluded: int(10)? as usize,
            cross_mu_eps: num(11)?,
            cross_loo_eps: num(12)?,
            lemma1: num(13)?,
            error: rec[14].to_owned(),
        });
    }
    Ok(rows)
}

pub fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub base_seed: u64,
    pub threads: Option<usize>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
    /// Summed replication compute time per T, seconds.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub compute_seconds: Vec<(usize, f64)>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        let mut json = serde_json::to_string_pretty(self).map_err(|e| Failure::io(e.to_string()))?;
        json.push('\n');
        atomic_write(&dir.join("manifest.json"), json.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.12345679, 0.0] {
            assert_eq!(parse_real(&real(v)).unwrap(), v);
        }
        assert!(parse_real(&real(f64::NAN)).unwrap().is_nan());
        assert_eq!(parse_real(&real(f64::INFINITY)).unwrap(), f64::INFINITY);
    }
}
