//! Deterministic CSV and JSON report writers.
//!
//! Every report starts with a provenance record: crate version, SHA-256 of
//! the canonical input (map, system or grid), and the seed. CSV files carry
//! it as a single `#` comment line; JSON documents as a `provenance` object.
//! Line endings are LF and floats use the shortest round-trip
//! representation, so equal inputs give byte-identical files.

use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub input_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(input: &str, seed: Option<u64>) -> Self {
        let digest = Sha256::digest(input.as_bytes());
        let input_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Provenance { version: VERSION.to_string(), input_sha256, seed }
    }

    pub fn comment_line(&self) -> String {
        let mut s = format!("# detdiff {} input_sha256={}", self.version, self.input_sha256);
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        s
    }
}

/// Provenance line, header row, then one row per record.
pub fn write_csv<W: Write, S: Serialize>(mut out: W, provenance: &Provenance, rows: &[S]) -> Result<()> {
    writeln!(out, "{}", provenance.comment_line())?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object with a `provenance` field next to the body's fields.
/// `body` must serialise to a JSON object.
pub fn write_json<W: Write, T: Serialize>(mut out: W, provenance: &Provenance, body: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &Document { provenance, body })?;
    out.write_all(b"\n")?;
    Ok(())
}
