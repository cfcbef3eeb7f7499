//! Shared plumbing: exit-code policy, path-tagged errors, atomic writes.

use std::path::Path;

use scnn_core::error::{Error, Result};

/// Map an error to the documented process exit code: 1 for configuration and
/// usage problems, 3 for numeric divergence during training, 2 for
/// everything wrong with data, formats, or the filesystem.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::Divergence { .. } => 3,
        Error::InvalidInput(_)
        | Error::Shape(_)
        | Error::Format(_)
        | Error::Unsupported(_)
        | Error::Io(_) => 2,
    }
}

/// Prefix `path` onto an error's message, keeping its variant (and therefore
/// its exit code) intact. Divergence carries no message to extend and passes
/// through unchanged.
pub fn at_path(err: Error, path: &Path) -> Error {
    let p = path.display();
    match err {
        Error::Config(m) => Error::Config(format!("{p}: {m}")),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{p}: {m}")),
        Error::Shape(m) => Error::Shape(format!("{p}: {m}")),
        Error::Format(m) => Error::Format(format!("{p}: {m}")),
        Error::Unsupported(m) => Error::Unsupported(format!("{p}: {m}")),
        Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{p}: {e}"))),
        diverged @ Error::Divergence { .. } => diverged,
    }
}

/// Write `bytes` to `path` through a sibling temp file and a rename, so an
/// interrupted run never leaves a half-written artifact and re-runs replace
/// outputs atomically.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| at_path(Error::Io(e), dir))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".scnn-tmp-")
        .tempfile_in(dir)
        .map_err(|e| at_path(Error::Io(e), dir))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| at_path(Error::Io(e), path))?;
    tmp.persist(path)
        .map_err(|e| at_path(Error::Io(e.error), path))?;
    Ok(())
}

/// Parse one CSV field that must hold a value of type `T`, tagging parse
/// failures with the file, line, and column they came from.
pub fn parse_field<T: std::str::FromStr>(
    raw: &str,
    what: &str,
    line: usize,
) -> Result<T> {
    raw.trim().parse().map_err(|_| {
        Error::format(format!("line {line}: bad {what} value {raw:?}"))
    })
}
