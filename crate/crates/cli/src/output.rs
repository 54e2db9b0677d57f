//! Result rows and their CSV / JSON serialization.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const SCHEMA: &str = "arw-rows/1";

/// One metric of one replicate, with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub schema: &'static str,
    pub command: &'static str,
    pub params: String,
    pub seed: u64,
    /// Replicate index, or `all` for aggregates.
    pub replicate: String,
    pub metric: String,
    pub value: f64,
}

/// Builds rows sharing the parameter tuple of a run.
pub struct Rows<'a> {
    cfg: &'a RunConfig,
    params: String,
    pub rows: Vec<ResultRow>,
}

impl<'a> Rows<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Rows { cfg, params: cfg.params(), rows: Vec::new() }
    }

    pub fn push(&mut self, replicate: impl ToString, metric: impl Into<String>, value: f64) {
        self.rows.push(ResultRow {
            schema: SCHEMA,
            command: self.cfg.command.name(),
            params: self.params.clone(),
            seed: self.cfg.seed,
            replicate: replicate.to_string(),
            metric: metric.into(),
            value,
        });
    }

    pub fn aggregate(&mut self, metric: impl Into<String>, value: f64) {
        self.push("all", metric, value);
    }
}

/// Floats with 17 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["schema", "command", "params", "seed", "replicate", "metric", "value"])?;
    for r in rows {
        out.write_record([
            r.schema,
            r.command,
            &r.params,
            &r.seed.to_string(),
            &r.replicate,
            &r.metric,
            &format_value(r.value),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut w: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, rows)?;
    writeln!(w)?;
    Ok(())
}

fn write_rows<W: Write>(rows: &[ResultRow], format: Format, w: W) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(rows, w),
        Format::Json => write_json(rows, w),
    }
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Output destination. A file is written as `<path>.partial` and renamed
/// over `<path>` only once complete.
pub enum Sink {
    Stdout(Format),
    File { path: PathBuf, partial: PathBuf, file: File, format: Format },
}

impl Sink {
    pub fn open(cfg: &RunConfig) -> Result<Self, CliError> {
        Ok(match &cfg.out {
            None => Sink::Stdout(cfg.format),
            Some(path) => {
                let partial = partial_path(path);
                let file = File::create(&partial)?;
                Sink::File { path: path.clone(), partial, file, format: cfg.format }
            }
        })
    }

    pub fn finish(self, rows: &[ResultRow]) -> Result<(), CliError> {
        match self {
            Sink::Stdout(format) => write_rows(rows, format, io::stdout().lock()),
            Sink::File { path, partial, file, format } => {
                let mut w = io::BufWriter::new(file);
                write_rows(rows, format, &mut w)?;
                w.flush()?;
                w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
                fs::rename(&partial, &path)?;
                Ok(())
            }
        }
    }
}
