//! CSV tables, plot scripts, run manifests and atomic output commits.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;

pub const DATA_FILE: &str = "data.csv";
pub const META_FILE: &str = "meta.json";
pub const PLOT_FILE: &str = "plot.gp";

/// Significant digits written for every number.
pub const SIG_DIGITS: usize = 12;

/// `%.12g`-style text: fixed notation for moderate exponents, scientific
/// otherwise, trailing zeros removed.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // Let the formatter do the rounding, then read the exponent back.
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-4..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_number(v)))
                .expect("writing to memory");
        }
        w.into_inner().expect("flushing to memory")
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Table, csv::Error> {
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>().unwrap_or(f64::NAN))
                .collect();
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn read(path: &Path) -> io::Result<Table> {
        let bytes = fs::read(path)?;
        Table::from_csv(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// Gnuplot script drawing the selected columns of `data.csv` against the
/// first one.
#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub logx: bool,
    pub columns: Vec<usize>,
}

impl PlotSpec {
    pub fn render(&self, header: &[String]) -> String {
        let mut s = String::new();
        s.push_str(&format!("# {}\n", self.title));
        s.push_str("set datafile separator \",\"\n");
        s.push_str(&format!("set title \"{}\"\n", self.title));
        s.push_str(&format!("set xlabel \"{}\"\n", self.xlabel));
        s.push_str(&format!("set ylabel \"{}\"\n", self.ylabel));
        if self.logx {
            s.push_str("set logscale x\n");
        }
        s.push_str("set key outside right\n");
        let lines: Vec<String> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let file = if i == 0 { format!("\"{DATA_FILE}\"") } else { "\"\"".into() };
                let name = header.get(c).map(String::as_str).unwrap_or("?");
                format!("{file} using 1:{} skip 1 with linespoints title \"{name}\"", c + 1)
            })
            .collect();
        s.push_str("plot ");
        s.push_str(&lines.join(", \\\n     "));
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub duration_seconds: f64,
    /// sha256 of each output file, hex encoded.
    pub checksums: BTreeMap<String, String>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn read(path: &Path) -> io::Result<RunManifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `files` and then the manifest produced by `manifest` into `dir`.
///
/// Everything is written into a staging directory first and moved into
/// place with renames, the manifest last. On failure the staging directory
/// and anything already moved are removed, so `dir` never holds a
/// manifest that does not describe the files next to it.
pub fn commit<F>(dir: &Path, files: &[(&str, Vec<u8>)], manifest: F) -> io::Result<()>
where
    F: FnOnce(BTreeMap<String, String>) -> Vec<u8>,
{
    fs::create_dir_all(dir)?;
    let staging = dir.join(format!(".staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir(&staging)?;

    let mut moved: Vec<PathBuf> = Vec::new();
    let result = (|| -> io::Result<()> {
        let mut sums = BTreeMap::new();
        for (name, bytes) in files {
            fs::write(staging.join(name), bytes)?;
            sums.insert(name.to_string(), sha256_hex(bytes));
        }
        fs::write(staging.join(META_FILE), manifest(sums))?;

        let stale_meta = dir.join(META_FILE);
        if stale_meta.exists() {
            fs::remove_file(&stale_meta)?;
        }
        for name in files.iter().map(|(n, _)| *n).chain([META_FILE]) {
            let target = dir.join(name);
            fs::rename(staging.join(name), &target)?;
            moved.push(target);
        }
        Ok(())
    })();

    let _ = fs::remove_dir_all(&staging);
    if result.is_err() {
        for path in moved {
            let _ = fs::remove_file(path);
        }
    }
    result
}
