//! Minimal NPY reader/writer.
//!
//! Reads versions 1.0 and 2.0 with a little-endian `<f4` or `<f8` dtype, C
//! order and a 2-D shape. Writes version 1.0, `<f8`, C order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::FeatureMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

#[derive(Debug)]
struct Header {
    dtype: Dtype,
    fortran_order: bool,
    shape: Vec<usize>,
}

pub fn load_npy(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_npy(&mut BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn save_npy(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_npy(m, &mut w)
        .and_then(|_| w.flush().map_err(|e| Error::io(path, e)))
        .map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
}

pub fn read_npy<R: Read>(reader: &mut R) -> Result<FeatureMatrix> {
    let header = read_header(reader)?;
    if header.fortran_order {
        return Err(Error::UnsupportedLayout("fortran_order is True".into()));
    }
    let (rows, cols) = match header.shape[..] {
        [rows, cols] => (rows, cols),
        _ => {
            return Err(Error::UnsupportedLayout(format!(
                "expected 2 dimensions, found {}",
                header.shape.len()
            )))
        }
    };
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("shape overflows".into()))?;
    let width = header.dtype.width();
    let mut payload = Vec::new();
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::io("<reader>", e))?;
    if payload.len() != count * width {
        return Err(Error::Format(format!(
            "payload is {} bytes, shape ({rows}, {cols}) needs {}",
            payload.len(),
            count * width
        )));
    }
    let values: Vec<f64> = match header.dtype {
        Dtype::F8 => payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
        Dtype::F4 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
    };
    FeatureMatrix::new(rows, cols, values)
}

pub fn write_npy<W: Write>(m: &FeatureMatrix, writer: &mut W) -> Result<()> {
    let mut dict = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        m.rows(),
        m.cols()
    );
    // magic + version + u16 length + dict + '\n' must be a multiple of ALIGN.
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');

    let io = |e| Error::io("<writer>", e);
    writer.write_all(MAGIC).map_err(io)?;
    writer.write_all(&[1, 0]).map_err(io)?;
    writer
        .write_all(&(dict.len() as u16).to_le_bytes())
        .map_err(io)?;
    writer.write_all(dict.as_bytes()).map_err(io)?;
    for v in m.as_slice() {
        writer.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    Ok(())
}

fn read_header<R: Read>(reader: &mut R) -> Result<Header> {
    let truncated = |_| Error::Format("truncated header".into());
    let mut prefix = [0u8; 8];
    reader.read_exact(&mut prefix).map_err(truncated)?;
    if &prefix[..6] != MAGIC {
        return Err(Error::Format("bad magic string".into()));
    }
    let len = match (prefix[6], prefix[7]) {
        (1, 0) => {
            let mut b = [0u8; 2];
            reader.read_exact(&mut b).map_err(truncated)?;
            u16::from_le_bytes(b) as usize
        }
        (2, 0) => {
            let mut b = [0u8; 4];
            reader.read_exact(&mut b).map_err(truncated)?;
            u32::from_le_bytes(b) as usize
        }
        (major, minor) => {
            return Err(Error::Format(format!(
                "unsupported version {major}.{minor}"
            )))
        }
    };
    let mut raw = vec![0u8; len];
    reader.read_exact(&mut raw).map_err(truncated)?;
    let text = std::str::from_utf8(&raw).map_err(|_| Error::Format("header is not text".into()))?;
    parse_header_dict(text)
}

fn parse_header_dict(text: &str) -> Result<Header> {
    let body = text
        .trim()
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::Format("header is not a dict".into()))?;

    let mut dtype = None;
    let mut fortran_order = None;
    let mut shape = None;
    let mut rest = body.trim_start();
    while !rest.is_empty() {
        let (key, after) = take_quoted(rest)?;
        let after = after
            .trim_start()
            .strip_prefix(':')
            .ok_or_else(|| Error::Format(format!("missing ':' after key '{key}'")))?
            .trim_start();
        rest = match key {
            "descr" => {
                let (descr, after) = take_quoted(after)?;
                dtype = Some(match descr {
                    "<f8" => Dtype::F8,
                    "<f4" => Dtype::F4,
                    other => return Err(Error::Format(format!("unsupported dtype '{other}'"))),
                });
                after
            }
            "fortran_order" => {
                if let Some(after) = after.strip_prefix("True") {
                    fortran_order = Some(true);
                    after
                } else if let Some(after) = after.strip_prefix("False") {
                    fortran_order = Some(false);
                    after
                } else {
                    return Err(Error::Format("fortran_order is not a bool".into()));
                }
            }
            "shape" => {
                let open = after
                    .strip_prefix('(')
                    .ok_or_else(|| Error::Format("shape is not a tuple".into()))?;
                let close = open
                    .find(')')
                    .ok_or_else(|| Error::Format("unterminated shape tuple".into()))?;
                let dims = open[..close]
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<usize>()
                            .map_err(|_| Error::Format(format!("bad shape entry '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                shape = Some(dims);
                &open[close + 1..]
            }
            other => return Err(Error::Format(format!("unexpected header key '{other}'"))),
        };
        rest = rest.trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }

    Ok(Header {
        dtype: dtype.ok_or_else(|| Error::Format("missing 'descr'".into()))?,
        fortran_order: fortran_order
            .ok_or_else(|| Error::Format("missing 'fortran_order'".into()))?,
        shape: shape.ok_or_else(|| Error::Format("missing 'shape'".into()))?,
    })
}

fn take_quoted(s: &str) -> Result<(&str, &str)> {
    let quote = s
        .chars()
        .next()
        .filter(|c| *c == '\'' || *c == '"')
        .ok_or_else(|| Error::Format("expected a quoted string".into()))?;
    let inner = &s[1..];
    let end = inner
        .find(quote)
        .ok_or_else(|| Error::Format("unterminated string".into()))?;
    Ok((&inner[..end], &inner[end + 1..]))
}
