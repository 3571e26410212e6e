use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Resolved;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Meta<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a BTreeMap<String, String>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub root: f64,
    pub max_bracket: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: Meta<'a>,
    #[serde(flatten)]
    body: &'a T,
}

pub fn meta(resolved: &Resolved, tolerances: Tolerances) -> Meta<'_> {
    Meta {
        tool: "oligodyn",
        version: env!("CARGO_PKG_VERSION"),
        command: resolved.command,
        config: resolved.recorded(),
        tolerances,
    }
}

pub fn json_bytes<T: Serialize>(meta: Meta<'_>, body: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(&Document { meta, body })
        .map_err(|e| CliError::Convergence(format!("cannot encode JSON: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        None => io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
        Some(p) => write_atomic(p, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    // Ordinary file mode (subject to umask) instead of the private 0600 default.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o666));
    }
    let mut tmp = builder.tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory cannot fail");
    buf
}

/// Summary location: explicit `--summary`, else `--out` with a `.json` extension.
pub fn summary_path(resolved: &Resolved) -> Option<PathBuf> {
    resolved
        .output("summary")
        .or_else(|| resolved.output("out").map(|p| p.with_extension("json")))
}
