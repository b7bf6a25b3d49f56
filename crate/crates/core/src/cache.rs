//! Binary eigenvalue cache.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     8  magic "HWEYL001"
//!      8     4  format version (currently 1)
//!     12     8  enumeration limit, IEEE-754 f64
//!     20     8  entry count, u64
//!     28   21·n  records: branch u8 (0 torus, 1 type-II),
//!                         index.0 i64, index.1 i64, multiplicity u32
//! ```
//!
//! Records store the exact integer payloads only; eigenvalues are
//! recomputed from the indices on load, so a round-trip reproduces every
//! entry — and any jump sequence built from them — bit for bit.  A cache
//! written at a larger limit serves any smaller request (entries above the
//! requested limit are dropped during reconstruction).

use crate::error::{Error, Result};
use crate::spectrum::{
    spectrum_from_entries, torus_eigenvalues, typeii_eigenvalues, Branch, EigenvalueEntry,
    Spectrum,
};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 8] = *b"HWEYL001";
pub const VERSION: u32 = 1;
const RECORD_BYTES: usize = 1 + 8 + 8 + 4;

/// Serialize an entry list.  Entries should be the concatenation of the
/// torus list and the type-II list, each in its enumerator's order.
pub fn write_entries(path: &Path, limit: f64, entries: &[EigenvalueEntry]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&limit.to_le_bytes())?;
    w.write_all(&(entries.len() as u64).to_le_bytes())?;
    for e in entries {
        let branch: u8 = match e.branch {
            Branch::Torus => 0,
            Branch::TypeII => 1,
        };
        let mult = u32::try_from(e.multiplicity).map_err(|_| {
            Error::CacheFormat(format!("multiplicity {} exceeds u32", e.multiplicity))
        })?;
        w.write_all(&[branch])?;
        w.write_all(&e.index.0.to_le_bytes())?;
        w.write_all(&e.index.1.to_le_bytes())?;
        w.write_all(&mult.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Deserialize a cache file: (limit it was built for, entries).
pub fn read_entries(path: &Path) -> Result<(f64, Vec<EigenvalueEntry>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 28];
    r.read_exact(&mut header)
        .map_err(|_| Error::CacheFormat("file shorter than header".into()))?;
    if header[0..8] != MAGIC {
        return Err(Error::CacheFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::CacheFormat(format!(
            "unsupported version {version} (expected {VERSION})"
        )));
    }
    let limit = f64::from_le_bytes(header[12..20].try_into().unwrap());
    let count = u64::from_le_bytes(header[20..28].try_into().unwrap());
    let mut entries = Vec::with_capacity(count.min(1 << 24) as usize);
    let mut rec = [0u8; RECORD_BYTES];
    for i in 0..count {
        r.read_exact(&mut rec).map_err(|_| {
            Error::CacheFormat(format!("truncated at record {i} of {count}"))
        })?;
        let branch = match rec[0] {
            0 => Branch::Torus,
            1 => Branch::TypeII,
            other => return Err(Error::CacheFormat(format!("unknown branch tag {other}"))),
        };
        let a = i64::from_le_bytes(rec[1..9].try_into().unwrap());
        let b = i64::from_le_bytes(rec[9..17].try_into().unwrap());
        let mult = u32::from_le_bytes(rec[17..21].try_into().unwrap());
        let value = match branch {
            Branch::Torus => {
                if a < 0 || b < 0 {
                    return Err(Error::CacheFormat(format!(
                        "negative torus representative ({a}, {b})"
                    )));
                }
                crate::spectrum::torus_value((a * a + b * b) as u64)
            }
            Branch::TypeII => {
                if a < 1 || b < 0 {
                    return Err(Error::CacheFormat(format!("bad type-II index ({a}, {b})")));
                }
                crate::spectrum::typeii_value((a * (a + 2 * b + 1)) as u64)
            }
        };
        entries.push(EigenvalueEntry {
            value,
            multiplicity: mult as u64,
            branch,
            index: (a, b),
        });
    }
    // Trailing garbage is a sign of corruption, not of a bigger cache.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::CacheFormat("trailing bytes after last record".into()));
    }
    Ok((limit, entries))
}

/// The canonical entry list for a limit: torus entries then type-II
/// entries (what `write_entries` expects).
pub fn enumerate_entries(limit: f64) -> Result<Vec<EigenvalueEntry>> {
    let mut entries = torus_eigenvalues(limit)?;
    entries.extend(typeii_eigenvalues(limit)?);
    Ok(entries)
}

/// Build a [`Spectrum`], reusing `path` when it holds a cache whose limit
/// covers the request; otherwise enumerate and (re)write the cache.
pub fn load_or_build(limit: f64, path: Option<&Path>) -> Result<Spectrum> {
    if let Some(p) = path {
        if p.exists() {
            match read_entries(p) {
                Ok((cached_limit, entries)) if cached_limit >= limit => {
                    return spectrum_from_entries(limit, &entries);
                }
                // Undersized or unreadable cache: fall through and rebuild.
                Ok(_) | Err(Error::CacheFormat(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let entries = enumerate_entries(limit)?;
        write_entries(p, limit, &entries)?;
        return spectrum_from_entries(limit, &entries);
    }
    Spectrum::build(limit)
}
