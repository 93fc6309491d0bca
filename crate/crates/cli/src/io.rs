use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Top-level JSON document: every output carries the version and the
/// resolved configuration.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub version: &'a str,
    pub config: &'a RunConfig,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_json<T: Serialize>(config: &RunConfig, body: T) -> Result<String> {
    serde_json::to_string_pretty(&Envelope { version: VERSION, config, body })
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Numerical(format!("cannot serialize output: {e}")))
}

/// `# fbmw <version> <config JSON>`, the provenance line heading CSV output.
pub fn csv_preamble(config: &RunConfig) -> Result<String> {
    let json = serde_json::to_string(config).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(format!("# fbmw {VERSION} {json}\n"))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Write to `path`, or to standard output without one.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Rows of a CSV table after the provenance preamble.
pub fn csv_table<S: Serialize>(config: &RunConfig, rows: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Numerical(format!("cannot serialize row: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(csv_preamble(config)? + &String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Observation series as a one-column CSV `z`; values use the shortest
/// representation that reads back exactly.
pub fn series_csv(config: &RunConfig, values: &[f64]) -> Result<String> {
    let mut s = csv_preamble(config)?;
    s.push_str("z\n");
    for v in values {
        s.push_str(&format!("{v:?}\n"));
    }
    Ok(s)
}

/// Read the `z` column (or the only column) of a CSV file. Lines starting
/// with `#` and blank lines are skipped.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut column: Option<usize> = None;
    let mut values = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let col = match column {
            Some(c) => c,
            None => {
                let c = if fields.len() == 1 {
                    0
                } else {
                    fields.iter().position(|f| *f == "z").ok_or_else(|| {
                        CliError::Data(format!("{}:{lineno}: no `z` column in header", path.display()))
                    })?
                };
                column = Some(c);
                // a header row, unless the single column already holds a number
                if fields.len() > 1 || fields[0].parse::<f64>().is_err() {
                    continue;
                }
                c
            }
        };
        let field = fields
            .get(col)
            .ok_or_else(|| CliError::Data(format!("{}:{lineno}: missing column {}", path.display(), col + 1)))?;
        let v: f64 = field
            .parse()
            .map_err(|_| CliError::Data(format!("{}:{lineno}: `{field}` is not a number", path.display())))?;
        if !v.is_finite() {
            return Err(CliError::Data(format!("{}:{lineno}: value {v} is not finite", path.display())));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: no observations", path.display())));
    }
    Ok(values)
}
