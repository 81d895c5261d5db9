//! Dense sentence embeddings and their on-disk format.
//!
//! The binary file holds the 8-byte magic `EMBMAT01`, the row count and
//! dimension as little-endian `u32`, then `rows * dim` little-endian `f32`
//! values in row-major order. Sentence ids live in a sibling text file with
//! the same name plus `.ids`, one id per line in row order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::corpus::Style;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"EMBMAT01";
const HEADER_LEN: u64 = 16;

/// One embedding row per sentence of a single style.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    style: Style,
    dim: usize,
    ids: Vec<String>,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(style: Style, ids: Vec<String>, dim: usize, values: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Embedding("dimension must be positive".into()));
        }
        if values.len() != ids.len() * dim {
            return Err(Error::Embedding(format!(
                "{} ids but {} values for dimension {dim}",
                ids.len(),
                values.len()
            )));
        }
        for (row, id) in values.chunks_exact(dim).zip(&ids) {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Embedding(format!("row {id:?} has a non-finite value")));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::Embedding(format!("row {id:?} has zero norm")));
            }
        }
        Ok(EmbeddingMatrix {
            style,
            dim,
            ids,
            values,
        })
    }

    pub fn style(&self) -> Style {
        self.style
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

pub fn ids_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".ids");
    PathBuf::from(p)
}

pub fn save_embeddings(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let rows = u32::try_from(matrix.rows())
        .map_err(|_| Error::Embedding("row count exceeds u32".into()))?;
    let dim = u32::try_from(matrix.dim()).map_err(|_| Error::Embedding("dim exceeds u32".into()))?;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&rows.to_le_bytes())?;
        out.write_all(&dim.to_le_bytes())?;
        for v in &matrix.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))?;

    let ids = ids_path(path);
    let file = File::create(&ids).map_err(|e| Error::io(&ids, e))?;
    let mut out = BufWriter::new(file);
    for id in &matrix.ids {
        writeln!(out, "{id}").map_err(|e| Error::io(&ids, e))?;
    }
    out.flush().map_err(|e| Error::io(&ids, e))
}

pub fn load_embeddings(path: impl AsRef<Path>, style: Style) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let actual = fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    if actual < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            actual,
        });
    }
    let mut header = [0u8; HEADER_LEN as usize];
    file.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if &header[..8] != MAGIC {
        return Err(Error::Embedding(format!(
            "{}: bad magic {:?}, expected {:?}",
            path.display(),
            String::from_utf8_lossy(&header[..8]),
            std::str::from_utf8(MAGIC).unwrap()
        )));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + (rows as u64) * (dim as u64) * 4;
    if actual < expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            actual,
        });
    }
    if actual > expected {
        return Err(Error::Embedding(format!(
            "{}: {} trailing bytes after {rows}x{dim} payload",
            path.display(),
            actual - expected
        )));
    }
    let mut bytes = vec![0u8; rows * dim * 4];
    file.read_exact(&mut bytes).map_err(|e| Error::io(path, e))?;
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();

    let ids_file = ids_path(path);
    let reader = BufReader::new(File::open(&ids_file).map_err(|e| Error::io(&ids_file, e))?);
    let ids = reader
        .lines()
        .collect::<std::io::Result<Vec<String>>>()
        .map_err(|e| Error::io(&ids_file, e))?;
    if ids.len() != rows {
        return Err(Error::Embedding(format!(
            "{}: {} ids for {rows} embedding rows",
            ids_file.display(),
            ids.len()
        )));
    }
    EmbeddingMatrix::new(style, ids, dim, values)
}
