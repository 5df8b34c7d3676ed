//! CSV/JSON writers and the run manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use stochpsi::config::KeyValues;

use crate::args::Format;
use crate::run::Run;
use crate::CliError;

/// Version of the CSV/JSON layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Manifest keys that describe a run rather than configure it.
pub const META_KEYS: [&str; 8] = [
    "schema-version",
    "subcommand",
    "version",
    "manifest",
    "started-unix",
    "finished-unix",
    "outputs",
    "threads",
];

#[derive(Debug, Clone, Default)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    fn write_csv<W: Write>(&self, header: &[(String, String)], mut w: W) -> Result<(), CliError> {
        for (k, v) in header {
            writeln!(w, "# {k}={v}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Empty cell for a missing value.
pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub struct IoOptions {
    pub out: Option<PathBuf>,
    pub format: Format,
    pub dump_trials: bool,
    pub threads: Option<usize>,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Header shared by every output of a run. Timestamps stay in the sidecar
/// manifest so reruns reproduce outputs byte for byte.
fn header(subcommand: &str, config: &KeyValues, manifest: Option<&Path>) -> Vec<(String, String)> {
    let mut h = vec![
        ("schema-version".to_string(), SCHEMA_VERSION.to_string()),
        ("subcommand".to_string(), subcommand.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    if let Some(m) = manifest {
        h.push(("manifest".to_string(), m.display().to_string()));
    }
    h.extend(config.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    h
}

fn json_document(subcommand: &str, run: &Run, manifest: Option<&Path>) -> Value {
    let config: Map<String, Value> = run.config.iter().map(|(k, v)| (k.to_string(), Value::from(v))).collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "version": env!("CARGO_PKG_VERSION"),
        "manifest": manifest.map(|m| m.display().to_string()),
        "config": config,
        "result": run.summary,
    })
}

fn write_main<W: Write>(subcommand: &str, run: &Run, format: Format, manifest: Option<&Path>, mut w: W) -> Result<(), CliError> {
    match format {
        Format::Csv => run.table.write_csv(&header(subcommand, &run.config, manifest), w),
        Format::Json => {
            let doc = json_document(subcommand, run, manifest);
            serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        }
    }
}

pub fn write(subcommand: &str, run: &Run, io: &IoOptions, started: u64, finished: u64) -> Result<(), CliError> {
    let Some(out) = &io.out else {
        let stdout = io::stdout();
        return write_main(subcommand, run, io.format, None, stdout.lock());
    };
    let manifest_path = with_suffix(out, ".manifest");
    let mut outputs = vec![out.clone()];
    write_main(subcommand, run, io.format, Some(&manifest_path), io::BufWriter::new(fs::File::create(out)?))?;
    if let Some(trials) = &run.trials {
        let path = with_suffix(out, ".trials.csv");
        trials.write_csv(
            &header(subcommand, &run.config, Some(&manifest_path)),
            io::BufWriter::new(fs::File::create(&path)?),
        )?;
        outputs.push(path);
    }

    let mut m = KeyValues::new();
    m.set("schema-version", SCHEMA_VERSION.to_string());
    m.set("subcommand", subcommand);
    m.set("version", env!("CARGO_PKG_VERSION"));
    m.set("started-unix", started.to_string());
    m.set("finished-unix", finished.to_string());
    let names: Vec<String> = outputs.iter().map(|p| p.display().to_string()).collect();
    m.set("outputs", names.join(","));
    if let Some(t) = io.threads {
        m.set("threads", t.to_string());
    }
    m.overlay(&run.config);
    fs::write(&manifest_path, m.to_text())?;
    Ok(())
}
