//! Artifact writers. Every output file embeds the config digest and tool
//! version; files are written to a temporary sibling and renamed into place.

use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

pub const TOOL: &str = "ergokit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the raw config bytes.
pub fn config_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Atomic write: temp sibling plus rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// CSV with a header row and one leading comment line carrying the digest.
pub fn write_csv(
    path: &Path,
    digest: &str,
    header: &[&str],
    rows: &[Vec<f64>],
) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# {TOOL} {VERSION} config_digest={digest}\n"));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Pretty JSON report wrapped in the standard envelope.
pub fn write_report(
    path: &Path,
    digest: &str,
    subcommand: &str,
    seed: Option<u64>,
    payload: serde_json::Value,
) -> io::Result<()> {
    let envelope = serde_json::json!({
        "tool": TOOL,
        "version": VERSION,
        "config_digest": digest,
        "subcommand": subcommand,
        "seed": seed,
        "report": payload,
    });
    let mut body = serde_json::to_string_pretty(&envelope)?;
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_hex_sha256() {
        let d = config_digest(b"hello");
        assert_eq!(d.len(), 64);
        assert_eq!(
            d,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
    }

    #[test]
    fn csv_has_comment_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_csv(&path, "abc", &["t", "value"], &[vec![0.0, 1.0], vec![0.5, 0.25]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# ergokit"));
        assert_eq!(lines.next().unwrap(), "t,value");
        assert_eq!(lines.next().unwrap(), "0,1");
        assert_eq!(lines.next().unwrap(), "0.5,0.25");
    }
}
