//! Ordered CSV output with a schema header line.

use std::io::Write;
use std::path::Path;

use collector::LyapEstimate;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const ESTIMATE_COLUMNS: [&str; 8] = [
    "lambda",
    "theta",
    "method",
    "value",
    "cert_type",
    "cert_value",
    "iterations",
    "seed",
];

pub const HEATMAP_COLUMNS: [&str; 5] = ["lambda", "theta", "nu", "cert", "iters"];

pub const MEANFIELD_COLUMNS: [&str; 4] = ["n", "u", "v", "alpha_u_plus_v"];

/// CSV table buffered in memory and written in one piece.
pub struct Table {
    kind: &'static str,
    writer: csv::Writer<Vec<u8>>,
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

impl Table {
    pub fn new(kind: &'static str, columns: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(columns).map_err(io_err)?;
        Ok(Table { kind, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(io_err)
    }

    pub fn estimate(&mut self, lambda: f64, theta: f64, e: &LyapEstimate, seed: u64) -> Result<(), CliError> {
        self.row([
            num(lambda),
            num(theta),
            e.method.as_str().to_string(),
            num(e.value),
            e.cert.kind().to_string(),
            num(e.cert.value()),
            e.iterations.to_string(),
            seed.to_string(),
        ])
    }

    /// Writes to `path`, or stdout when `None`.
    pub fn finish(self, path: Option<&Path>) -> Result<(), CliError> {
        let body = self.writer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        let mut bytes = format!("# collector-csv schema={SCHEMA_VERSION} table={}\n", self.kind).into_bytes();
        bytes.extend_from_slice(&body);
        match path {
            Some(p) => std::fs::write(p, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
            None => std::io::stdout().lock().write_all(&bytes).map_err(|e| CliError::Io(e.to_string())),
        }
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}
