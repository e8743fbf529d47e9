//! Minimal binary tensor container ("tns"). Layout per record:
//! magic `STSN`, version u16 LE, dtype u8 (1 = f32), ndim u8, each dim as
//! u64 LE, then the payload row-major f32 LE. Files may hold several records
//! back to back.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"STSN";
const VERSION: u16 = 1;
const DTYPE_F32: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::DimensionMismatch {
                left: format!("dims {dims:?} ({n} elements)"),
                right: format!("payload of {}", data.len()),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

pub fn write_record<W: Write>(w: &mut W, t: &Tensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[DTYPE_F32, t.dims.len() as u8])?;
    for &d in &t.dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in &t.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read one record. Returns `None` on clean end-of-stream (no magic bytes).
pub fn read_record<R: Read>(r: &mut R) -> Result<Option<Tensor>> {
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if &magic != MAGIC {
        return Err(Error::BadTensorFile(format!("bad magic {magic:?}")));
    }
    let mut buf2 = [0u8; 2];
    r.read_exact(&mut buf2)?;
    let version = u16::from_le_bytes(buf2);
    if version != VERSION {
        return Err(Error::BadTensorFile(format!("unsupported version {version}")));
    }
    r.read_exact(&mut buf2)?;
    let [dtype, ndim] = buf2;
    if dtype != DTYPE_F32 {
        return Err(Error::BadTensorFile(format!("unsupported dtype code {dtype}")));
    }
    let mut dims = Vec::with_capacity(ndim as usize);
    for _ in 0..ndim {
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        dims.push(u64::from_le_bytes(buf8) as usize);
    }
    let n: usize = dims.iter().product();
    let mut payload = vec![0u8; n * 4];
    r.read_exact(&mut payload)?;
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Some(Tensor { dims, data }))
}

pub fn write_file(path: &Path, tensors: &[Tensor]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for t in tensors {
        write_record(&mut w, t)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<Tensor>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    while let Some(t) = read_record(&mut r)? {
        out.push(t);
    }
    Ok(out)
}
