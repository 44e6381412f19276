//! Binary caches for embedding tables and token sequences.
//!
//! Both share a 24-byte little-endian header: 4-byte magic, `u32` version,
//! then two `u64` extents (`n, d` for embeddings, `N, S` for tokens),
//! followed by row-major `f32` values.

use std::io::{Read, Write};

use crate::{Error, Result};

const EMBED_MAGIC: &[u8; 4] = b"ACEM";
const TOKEN_MAGIC: &[u8; 4] = b"ACTK";
const VERSION: u32 = 1;

/// Row-major `rows x dim` table of `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::shape(
                "embedding_matrix",
                format!("{} values for {rows}x{dim}", data.len()),
            ));
        }
        Ok(Self { rows, dim, data })
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn write_header(w: &mut impl Write, magic: &[u8; 4], a: usize, b: usize) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(a as u64).to_le_bytes())?;
    w.write_all(&(b as u64).to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<(usize, usize)> {
    let mut buf = [0u8; 24];
    r.read_exact(&mut buf)?;
    if &buf[..4] != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            &buf[..4],
            std::str::from_utf8(magic).unwrap_or("?")
        )));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported cache version {version}")));
    }
    let a = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    let b = u64::from_le_bytes(buf[16..24].try_into().unwrap()) as usize;
    Ok((a, b))
}

fn write_f32s(w: &mut impl Write, xs: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(xs.len() * 4);
    for x in xs {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_embeddings(mut w: impl Write, m: &EmbeddingMatrix) -> Result<()> {
    write_header(&mut w, EMBED_MAGIC, m.rows, m.dim)?;
    write_f32s(&mut w, &m.data)
}

pub fn read_embeddings(mut r: impl Read) -> Result<EmbeddingMatrix> {
    let (rows, dim) = read_header(&mut r, EMBED_MAGIC)?;
    let data = read_f32s(&mut r, rows * dim)?;
    EmbeddingMatrix::new(rows, dim, data)
}

/// CSV export: `id,e0,e1,...` with one labelled row per table row.
pub fn write_embeddings_csv(
    w: impl Write,
    labels: impl IntoIterator<Item = String>,
    m: &EmbeddingMatrix,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend((0..m.dim).map(|j| format!("e{j}")));
    csv.write_record(&header)?;
    for (i, label) in labels.into_iter().enumerate().take(m.rows) {
        let mut rec = vec![label];
        rec.extend(m.row(i).iter().map(|x| x.to_string()));
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

/// Writes `N x S` token blocks, one per cascade, in the given order.
pub fn write_token_cache<'a>(
    mut w: impl Write,
    n_patches: usize,
    size: usize,
    blocks: impl IntoIterator<Item = &'a [f32]>,
) -> Result<()> {
    write_header(&mut w, TOKEN_MAGIC, n_patches, size)?;
    for b in blocks {
        if b.len() != n_patches * size {
            return Err(Error::shape(
                "write_token_cache",
                format!("block of {} values, expected {}", b.len(), n_patches * size),
            ));
        }
        write_f32s(&mut w, b)?;
    }
    Ok(())
}

/// Reads every block; returns `(N, S, blocks)`.
pub fn read_token_cache(mut r: impl Read) -> Result<(usize, usize, Vec<Vec<f32>>)> {
    let (n, s) = read_header(&mut r, TOKEN_MAGIC)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    let block = n * s * 4;
    if block == 0 || rest.len() % block != 0 {
        return Err(Error::Format(format!(
            "token payload of {} bytes is not a multiple of {block}",
            rest.len()
        )));
    }
    let blocks = rest
        .chunks_exact(block)
        .map(|c| {
            c.chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok((n, s, blocks))
}
