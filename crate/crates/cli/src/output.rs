//! CSV sinks that start with `#` comment lines echoing the resolved config.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn config_header<C: Serialize>(command: &str, config: &C) -> CliResult<String> {
    let json = serde_json::to_string(config).map_err(|e| CliError::failure(e.to_string()))?;
    Ok(format!("# ratelessmv {command}\n# config: {json}\n"))
}

fn csv_writer<W: Write>(mut inner: W, header: &str) -> CliResult<csv::Writer<W>> {
    inner.write_all(header.as_bytes())?;
    Ok(csv::Writer::from_writer(inner))
}

pub fn csv_file(path: &Path, header: &str) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file =
        File::create(path).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
    csv_writer(BufWriter::new(file), header)
}

pub fn csv_stdout(header: &str) -> CliResult<csv::Writer<io::Stdout>> {
    csv_writer(io::stdout(), header)
}

pub fn ensure_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| CliError::failure(format!("{}: {e}", dir.display())))
}

/// Empty cell for absent values.
pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}
