//! Output plumbing: atomic file writes, 17-significant-digit CSV floats,
//! and the resolved-config provenance header every artifact carries.

use std::io::Write;
use std::path::{Path, PathBuf};

/// Formats with 17 significant digits; round-trips every f64.
pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Writes via a temp file in the same directory plus rename, so failures
/// never leave partial output behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp: PathBuf = dir.to_path_buf();
    tmp.push(format!(
        ".{}.tmp{}",
        path.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into()),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Sends to the file atomically, or to stdout when no path was given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}

/// CSV assembly with a `# config: {...}` provenance line and a header row.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(config: &serde_json::Value, header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&format!("# config: {config}\n"));
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn footer_json(&mut self, value: &serde_json::Value) {
        self.buf.push_str(&value.to_string());
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}
