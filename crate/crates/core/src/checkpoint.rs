//! Named-tensor checkpoints.
//!
//! Layout (little-endian): magic `ACKP`, `u32` version, `u32` tensor count,
//! then per tensor a `u32` name length and UTF-8 bytes, a `u32` rank, `rank`
//! `u32` extents, and the raw `f32` values.

use std::io::{Read, Write};

use crate::autograd::{Params, Scalar, Tensor};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"ACKP";
const VERSION: u32 = 1;

pub fn write_checkpoint<'a>(
    mut w: impl Write,
    tensors: impl IntoIterator<Item = (&'a str, &'a Tensor<f32>)>,
) -> Result<()> {
    let tensors: Vec<_> = tensors.into_iter().collect();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&(t.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(t.cols as u32).to_le_bytes());
        for x in &t.data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Serializes every parameter of `params` as `f32`.
pub fn write_params<T: Scalar>(w: impl Write, params: &Params<T>) -> Result<()> {
    let owned: Vec<(String, Tensor<f32>)> = params
        .iter()
        .map(|p| (p.name.clone(), p.value.cast()))
        .collect();
    write_checkpoint(w, owned.iter().map(|(n, t)| (n.as_str(), t)))
}

struct Cursor<R> {
    r: R,
}

impl<R: Read> Cursor<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
}

pub fn read_checkpoint(r: impl Read) -> Result<Vec<(String, Tensor<f32>)>> {
    let mut c = Cursor { r };
    let mut magic = [0u8; 4];
    c.r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = c.u32()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = c.u32()? as usize;
        let mut name = vec![0u8; len];
        c.r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
        let rank = c.u32()? as usize;
        let extents: Vec<usize> = (0..rank).map(|_| c.u32().map(|x| x as usize)).collect::<Result<_>>()?;
        let (rows, cols) = match extents.as_slice() {
            [n] => (1, *n),
            [r, k] => (*r, *k),
            _ => return Err(Error::Format(format!("tensor {name} has unsupported rank {rank}"))),
        };
        let mut bytes = vec![0u8; rows * cols * 4];
        c.r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        out.push((name, Tensor::new(rows, cols, data)?));
    }
    Ok(out)
}
