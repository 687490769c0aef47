use std::env;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::{CliConfig, CliError};

pub const OUT_DIR_ENV: &str = "ITEREQ_OUT_DIR";

/// Where the CSV goes: `--output` (relative to $ITEREQ_OUT_DIR when set),
/// else `$ITEREQ_OUT_DIR/<command>.csv`, else stdout (`None`).
pub fn resolve_output(config: &CliConfig) -> Option<PathBuf> {
    let dir = env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from);
    match (&config.output, dir) {
        (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(d)) => Some(d.join(format!("{}.csv", config.command.name()))),
        (None, None) => None,
    }
}

pub fn write_output(config: &CliConfig, csv: &[u8]) -> Result<(), CliError> {
    match resolve_output(config) {
        Some(path) => write_atomic(&path, csv),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(csv)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}
