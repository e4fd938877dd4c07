//! CSV tables with a units comment block, and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Column name and unit (empty for dimensionless).
pub type Column = (&'static str, &'static str);

/// A table of named, unit-tagged columns.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub title: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: Vec<Column>) -> Self {
        Table { title: title.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Renders the table: `#` comment lines with the title and units,
    /// then a header row and the data.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = format!("# {}\n", self.title);
        for (name, unit) in &self.columns {
            out.push_str(&format!("# {name}: {}\n", if unit.is_empty() { "dimensionless" } else { unit }));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.0)).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?);
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Formats a float so that it parses back to the same bits.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Reads a comment-tolerant CSV into its header and string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(csv_error)?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Parses column `name` as floats.
pub fn float_column(header: &[String], rows: &[Vec<String>], name: &str) -> Result<Vec<f64>> {
    let i = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Parse(format!("missing column `{name}` (have {})", header.join(", "))))?;
    rows.iter()
        .enumerate()
        .map(|(k, r)| {
            r.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse(format!("row {}: `{name}` is not a number", k + 1)))
        })
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of an output file as written.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to reproduce one command invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector after the program name.
    pub args: Vec<String>,
    /// Resolved parameters, defaults included.
    pub config: serde_json::Value,
    /// Hashes of the defect table, constants and radial grid.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.into(),
            args,
            config,
            inputs: BTreeMap::new(),
            seed: None,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        self.outputs.push(OutputFile { path: path.to_path_buf(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    /// `<output>.manifest.json` next to the primary output.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))
    }

    /// Outputs whose current contents differ from the recorded hash.
    pub fn mismatched_outputs(&self) -> Result<Vec<PathBuf>> {
        let mut bad = Vec::new();
        for o in &self.outputs {
            if sha256_hex(&fs::read(&o.path)?) != o.sha256 {
                bad.push(o.path.clone());
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_units() {
        let mut t = Table::new("scan", vec![("dy_um", "um"), ("p2", "")]);
        t.push(vec![num(0.1), num(1.0 / 3.0)]);
        t.push(vec![num(-2.5), num(1e-300)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        t.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# scan\n# dy_um: um\n# p2: dimensionless\ndy_um,p2\n"));
        let (h, rows) = read_csv(&path).unwrap();
        let p2 = float_column(&h, &rows, "p2").unwrap();
        assert_eq!(p2[0].to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(p2[1], 1e-300);
        assert!(float_column(&h, &rows, "missing").is_err());
    }

    #[test]
    fn manifest_round_trip_and_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.csv");
        fs::write(&out, "x\n1\n").unwrap();
        let mut m = RunManifest::new("fit", vec!["fit".into()], serde_json::json!({"k": 1}));
        m.seed = Some(7);
        m.record_output(&out).unwrap();
        let mp = RunManifest::path_for(&out);
        assert_eq!(mp.file_name().unwrap(), "a.csv.manifest.json");
        m.write(&mp).unwrap();
        let back = RunManifest::read(&mp).unwrap();
        assert_eq!(back, m);
        assert!(back.mismatched_outputs().unwrap().is_empty());
        fs::write(&out, "x\n2\n").unwrap();
        assert_eq!(back.mismatched_outputs().unwrap(), vec![out]);
    }
}
