//! Cleartext tensor files.
//!
//! CSV: a `shape: d1,d2,...` header, then one line per innermost row.
//! Binary: `QSTN`, little-endian u32 rank, u64 dims, then fixed-point ring
//! elements of `ceil(n/8)` little-endian bytes each.

use std::fs;
use std::path::Path;

use super::{Shape, Tensor};
use crate::error::{Error, Result};
use crate::ring::RingConfig;
use crate::sharing::Domain;

const MAGIC: &[u8; 4] = b"QSTN";

pub fn to_csv_string(t: &Tensor) -> String {
    let dims: Vec<String> = t.shape.dims().iter().map(|d| d.to_string()).collect();
    let mut out = format!("shape: {}\n", dims.join(","));
    let row = t.shape.dims().last().copied().unwrap_or(1).max(1);
    for chunk in t.data.chunks(row) {
        let cells: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn from_csv_str(text: &str) -> Result<Tensor> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty file".into() })?;
    let spec = header
        .trim()
        .strip_prefix("shape:")
        .ok_or_else(|| Error::Parse { line: 1, msg: "expected `shape: d1,d2,...` header".into() })?;
    let dims = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| Error::Parse { line: 1, msg: format!("bad dimension {s:?}") }))
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::new();
    for (i, line) in lines {
        for cell in line.split(',') {
            let v = cell
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse { line: i + 1, msg: format!("bad number {:?}", cell.trim()) })?;
            data.push(v);
        }
    }
    let shape = Shape::from(dims);
    if shape.len() != data.len() {
        return Err(Error::Format(format!("shape {shape} needs {} values, found {}", shape.len(), data.len())));
    }
    Ok(Tensor { shape, data })
}

pub fn write_csv(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    Ok(fs::write(path, to_csv_string(t))?)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Tensor> {
    from_csv_str(&fs::read_to_string(path)?)
}

/// Encodes to fixed point under `cfg`; fails on values outside the ring.
pub fn write_binary(path: impl AsRef<Path>, t: &Tensor, cfg: RingConfig) -> Result<()> {
    let mut out = Vec::with_capacity(16 + t.data.len() * cfg.element_bytes());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(t.shape.rank() as u32).to_le_bytes());
    for d in t.shape.dims() {
        out.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    let raw = t.data.iter().map(|v| cfg.encode_raw(*v)).collect::<Result<Vec<_>>>()?;
    out.extend_from_slice(&Domain::Arith(cfg).encode(&raw));
    Ok(fs::write(path, out)?)
}

pub fn read_binary(path: impl AsRef<Path>, cfg: RingConfig) -> Result<Tensor> {
    let bytes = fs::read(path)?;
    let take = |at: usize, len: usize| {
        bytes.get(at..at + len).ok_or_else(|| Error::Format(format!("file truncated at byte {at}")))
    };
    if take(0, 4)? != MAGIC {
        return Err(Error::Format("missing QSTN magic".into()));
    }
    let rank = u32::from_le_bytes(take(4, 4)?.try_into().expect("4 bytes")) as usize;
    let mut dims = Vec::with_capacity(rank.min(64));
    for i in 0..rank {
        let d = u64::from_le_bytes(take(8 + 8 * i, 8)?.try_into().expect("8 bytes"));
        dims.push(usize::try_from(d).map_err(|_| Error::Format(format!("dimension {d} too large")))?);
    }
    let shape = Shape::from(dims);
    let body = &bytes[8 + 8 * rank..];
    let w = cfg.element_bytes();
    if body.len() != shape.len() * w {
        return Err(Error::Format(format!(
            "shape {shape} at {w} bytes per element needs {} bytes, found {}",
            shape.len() * w,
            body.len()
        )));
    }
    let raw = Domain::Arith(cfg).decode(body, shape.len())?;
    Ok(Tensor { shape, data: raw.into_iter().map(|r| cfg.decode_raw(r)).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let t = Tensor::new([2, 3], vec![1.5, -2.0, 0.0, 1e-3, 7.0, 8.25]).unwrap();
        let s = to_csv_string(&t);
        assert!(s.starts_with("shape: 2,3\n1.5,-2,0\n"));
        assert_eq!(from_csv_str(&s).unwrap(), t);
        let scalar = Tensor::scalar(4.0);
        assert_eq!(from_csv_str(&to_csv_string(&scalar)).unwrap(), scalar);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(from_csv_str("1,2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(from_csv_str("shape: 2\n1,x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(from_csv_str("shape: 3\n1,2\n"), Err(Error::Format(_))));
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.qstn");
        let cfg = RingConfig::new(32, 8).unwrap();
        let t = Tensor::new([2, 2], vec![1.5, -2.25, 0.0, 100.0]).unwrap();
        write_binary(&path, &t, cfg).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"QSTN");
        assert_eq!(bytes.len(), 4 + 4 + 16 + 4 * 4);
        assert_eq!(read_binary(&path, cfg).unwrap(), t);
        let other = RingConfig::new(64, 8).unwrap();
        assert!(matches!(read_binary(&path, other), Err(Error::Format(_))));
        fs::write(&path, b"QSTX").unwrap();
        assert!(read_binary(&path, cfg).is_err());
    }
}
