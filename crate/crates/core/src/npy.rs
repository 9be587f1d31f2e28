//! NPY v1.0 reader/writer for little-endian `f64` arrays in C order.
//!
//! Only the subset needed here is supported: format version 1.0, dtype
//! `<f8`, C (row-major) order, 1-D or 2-D shapes. Anything else is rejected
//! with a format error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAGIC: &[u8; 6] = b"\x93NUMPY";

fn format_err(message: impl Into<String>) -> Error {
    Error::Format {
        message: message.into(),
    }
}

fn write_header<W: Write>(writer: &mut W, shape: &[usize]) -> Result<()> {
    let shape_str = match shape {
        [n] => format!("({n},)"),
        [r, c] => format!("({r}, {c})"),
        _ => unreachable!("only 1-D and 2-D arrays are written"),
    };
    let mut dict = format!("{{'descr': '<f8', 'fortran_order': False, 'shape': {shape_str}, }}");
    // Pad with spaces so the data section starts on a 64-byte boundary.
    let unpadded = MAGIC.len() + 4 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    dict.push_str(&" ".repeat(padding));
    dict.push('\n');

    writer.write_all(MAGIC)?;
    writer.write_all(&[1, 0])?;
    writer.write_all(&(dict.len() as u16).to_le_bytes())?;
    writer.write_all(dict.as_bytes())?;
    Ok(())
}

fn write_values<W: Write>(writer: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Writes a matrix as a 2-D `<f8` NPY file.
pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, &[m.rows(), m.cols()])?;
    write_values(&mut w, m.data())?;
    w.flush()?;
    Ok(())
}

/// Writes a vector as a 1-D `<f8` NPY file.
pub fn save_vector(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, &[values.len()])?;
    write_values(&mut w, values)?;
    w.flush()?;
    Ok(())
}

/// Parsed NPY payload: the flat values plus the declared shape.
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl NpyArray {
    /// Interprets the payload as a matrix; 1-D arrays become a single row.
    pub fn into_matrix(self) -> Result<Matrix> {
        match self.shape.as_slice() {
            [n] => Matrix::new(1, *n, self.values),
            [r, c] => Matrix::new(*r, *c, self.values),
            other => Err(format_err(format!(
                "expected 1-D or 2-D array, got {}-D",
                other.len()
            ))),
        }
    }

    /// Interprets the payload as a 1-D vector.
    pub fn into_vector(self) -> Result<Vec<f64>> {
        match self.shape.as_slice() {
            [_] => Ok(self.values),
            other => Err(format_err(format!(
                "expected 1-D array, got {}-D",
                other.len()
            ))),
        }
    }
}

/// Reads an NPY file, accepting only v1.0, `<f8`, C-order payloads.
pub fn load(path: &Path) -> Result<NpyArray> {
    let mut r = BufReader::new(File::open(path)?);
    read(&mut r)
}

/// Loads an NPY file that must contain a 2-D (or 1-D, taken as one row) matrix.
pub fn load_matrix(path: &Path) -> Result<Matrix> {
    load(path)?.into_matrix()
}

/// Loads an NPY file that must contain a 1-D vector.
pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    load(path)?.into_vector()
}

fn read<R: Read>(reader: &mut R) -> Result<NpyArray> {
    let mut magic = [0u8; 6];
    reader.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(format_err("not an NPY file (bad magic)"));
    }
    let mut version = [0u8; 2];
    reader.read_exact(&mut version)?;
    if version != [1, 0] {
        return Err(format_err(format!(
            "unsupported NPY version {}.{} (only 1.0 is supported)",
            version[0], version[1]
        )));
    }
    let mut len_bytes = [0u8; 2];
    reader.read_exact(&mut len_bytes)?;
    let header_len = u16::from_le_bytes(len_bytes) as usize;
    let mut header = vec![0u8; header_len];
    reader.read_exact(&mut header)?;
    let header =
        std::str::from_utf8(&header).map_err(|_| format_err("NPY header is not valid UTF-8"))?;

    let descr = extract_quoted(header, "descr")?;
    if descr != "<f8" {
        return Err(format_err(format!(
            "unsupported dtype {descr:?} (only '<f8' is supported)"
        )));
    }
    match extract_bool(header, "fortran_order")? {
        false => {}
        true => return Err(format_err("Fortran-order arrays are not supported")),
    }
    let shape = extract_shape(header)?;
    if shape.is_empty() || shape.len() > 2 {
        return Err(format_err(format!(
            "expected 1-D or 2-D array, got {}-D",
            shape.len()
        )));
    }
    let count: usize = shape.iter().product();
    let mut bytes = vec![0u8; count * 8];
    reader.read_exact(&mut bytes)?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(NpyArray { shape, values })
}

fn field_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let pattern = format!("'{key}':");
    let start = header
        .find(&pattern)
        .ok_or_else(|| format_err(format!("NPY header missing {key:?}")))?
        + pattern.len();
    Ok(header[start..].trim_start())
}

fn extract_quoted(header: &str, key: &str) -> Result<String> {
    let rest = field_value(header, key)?;
    let rest = rest
        .strip_prefix('\'')
        .ok_or_else(|| format_err(format!("malformed {key:?} field")))?;
    let end = rest
        .find('\'')
        .ok_or_else(|| format_err(format!("malformed {key:?} field")))?;
    Ok(rest[..end].to_string())
}

fn extract_bool(header: &str, key: &str) -> Result<bool> {
    let rest = field_value(header, key)?;
    if rest.starts_with("False") {
        Ok(false)
    } else if rest.starts_with("True") {
        Ok(true)
    } else {
        Err(format_err(format!("malformed {key:?} field")))
    }
}

fn extract_shape(header: &str) -> Result<Vec<usize>> {
    let rest = field_value(header, "shape")?;
    let rest = rest
        .strip_prefix('(')
        .ok_or_else(|| format_err("malformed 'shape' field"))?;
    let end = rest
        .find(')')
        .ok_or_else(|| format_err("malformed 'shape' field"))?;
    rest[..end]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| format_err(format!("bad shape component {s:?}")))
        })
        .collect()
}
