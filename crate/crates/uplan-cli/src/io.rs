//! File helpers: contextual reads and atomic writes.

use std::fs;
use std::path::Path;

use crate::errors::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("read {}: {e}", path.display())))
}

/// Write via a temporary sibling plus rename, so failures never leave a
/// partial file behind.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, contents)
        .map_err(|e| CliError::Io(format!("write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Io(format!("rename into {}: {e}", path.display()))
    })
}
