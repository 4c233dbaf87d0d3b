//! EDTG binary grid files.
//!
//! Layout, all little-endian: magic `EDTG`, u32 version, u8 kind, u8 dtype,
//! u8 rank, u32 dims[rank], f64 spacing[rank], f64 origin[rank], u32 metadata
//! length, UTF-8 JSON metadata, payload, u32 CRC32 of the payload.

use std::io::Write;
use std::path::Path;

use edt_core::linalg::C64;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EDTG";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Plane = 0,
    ModeGrid = 1,
    KGrid = 2,
    Volume = 3,
    Occupancy = 4,
}

impl Kind {
    pub fn from_u8(v: u8) -> Result<Kind> {
        Ok(match v {
            0 => Kind::Plane,
            1 => Kind::ModeGrid,
            2 => Kind::KGrid,
            3 => Kind::Volume,
            4 => Kind::Occupancy,
            _ => return Err(Error::Format(format!("unknown kind {v}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    F64 = 0,
    C128 = 1,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F64 => 8,
            DType::C128 => 16,
        }
    }

    fn from_u8(v: u8) -> Result<DType> {
        match v {
            0 => Ok(DType::F64),
            1 => Ok(DType::C128),
            _ => Err(Error::Format(format!("unknown dtype {v}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdtgFile {
    pub kind: Kind,
    pub dtype: DType,
    pub dims: Vec<u32>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    /// JSON object; `components` gives the vector multiplicity (default 1)
    pub metadata: Map<String, Value>,
    pub payload: Vec<u8>,
}

impl EdtgFile {
    pub fn components(&self) -> usize {
        self.metadata.get("components").and_then(Value::as_u64).unwrap_or(1) as usize
    }

    pub fn expected_payload_len(&self) -> usize {
        self.dims.iter().map(|d| *d as usize).product::<usize>() * self.dtype.size() * self.components()
    }

    fn check(&self) -> Result<()> {
        let r = self.dims.len();
        if r > u8::MAX as usize || self.spacing.len() != r || self.origin.len() != r {
            return Err(Error::Format("dims, spacing and origin must share the rank".into()));
        }
        if self.payload.len() != self.expected_payload_len() {
            return Err(Error::Format(format!(
                "payload is {} bytes, header implies {}",
                self.payload.len(),
                self.expected_payload_len()
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check()?;
        let meta = serde_json::to_vec(&self.metadata).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::with_capacity(64 + meta.len() + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind as u8);
        out.push(self.dtype as u8);
        out.push(self.dims.len() as u8);
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in self.spacing.iter().chain(&self.origin) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&crc32fast::hash(&self.payload).to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(b: &[u8]) -> Result<EdtgFile> {
        let mut r = Reader { b, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let kind = Kind::from_u8(r.u8()?)?;
        let dtype = DType::from_u8(r.u8()?)?;
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let spacing = (0..rank).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let origin = (0..rank).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let mlen = r.u32()? as usize;
        let metadata: Map<String, Value> =
            serde_json::from_slice(r.take(mlen)?).map_err(|e| Error::Format(format!("metadata: {e}")))?;
        let mut f = EdtgFile { kind, dtype, dims, spacing, origin, metadata, payload: Vec::new() };
        let plen = f.expected_payload_len();
        f.payload = r.take(plen)?.to_vec();
        let crc = r.u32()?;
        if r.pos != b.len() {
            return Err(Error::Format("trailing bytes after CRC".into()));
        }
        if crc != crc32fast::hash(&f.payload) {
            return Err(Error::Format("payload CRC mismatch".into()));
        }
        Ok(f)
    }

    pub fn crc(&self) -> u32 {
        crc32fast::hash(&self.payload)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn read(path: &Path) -> Result<EdtgFile> {
        EdtgFile::from_bytes(&std::fs::read(path)?)
    }

    pub fn complex(
        kind: Kind,
        dims: Vec<u32>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        metadata: Map<String, Value>,
        values: &[C64],
    ) -> Result<EdtgFile> {
        let mut payload = Vec::with_capacity(values.len() * 16);
        for v in values {
            payload.extend_from_slice(&v.re.to_le_bytes());
            payload.extend_from_slice(&v.im.to_le_bytes());
        }
        let f = EdtgFile { kind, dtype: DType::C128, dims, spacing, origin, metadata, payload };
        f.check()?;
        Ok(f)
    }

    pub fn real(
        kind: Kind,
        dims: Vec<u32>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        metadata: Map<String, Value>,
        values: &[f64],
    ) -> Result<EdtgFile> {
        let payload = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let f = EdtgFile { kind, dtype: DType::F64, dims, spacing, origin, metadata, payload };
        f.check()?;
        Ok(f)
    }

    pub fn complex_values(&self) -> Result<Vec<C64>> {
        if self.dtype != DType::C128 {
            return Err(Error::Format("expected complex128 payload".into()));
        }
        Ok(self
            .payload
            .chunks_exact(16)
            .map(|c| C64::new(f64_at(&c[..8]), f64_at(&c[8..])))
            .collect())
    }

    pub fn real_values(&self) -> Result<Vec<f64>> {
        if self.dtype != DType::F64 {
            return Err(Error::Format("expected float64 payload".into()));
        }
        Ok(self.payload.chunks_exact(8).map(f64_at).collect())
    }
}

fn f64_at(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().expect("8-byte chunk"))
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.b.len());
        let end = end.ok_or_else(|| Error::Format("file truncated".into()))?;
        let s = &self.b[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64_at(self.take(8)?))
    }
}

/// Write to a sibling temp file, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::config("out", "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
