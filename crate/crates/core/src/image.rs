//! Grayscale image tensor with values in [-1, 1] and binary PGM export.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An `height x width` grayscale image with pixels in [-1, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    /// Builds an image, validating the pixel range.
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidShape {
                rows: height,
                cols: width,
            });
        }
        if pixels.len() != height * width {
            return Err(Error::DataLength {
                expected: height * width,
                got: pixels.len(),
            });
        }
        for (i, &p) in pixels.iter().enumerate() {
            if !p.is_finite() || !(-1.0..=1.0).contains(&p) {
                return Err(Error::PixelOutOfRange { index: i, value: p });
            }
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::new(height, width, vec![0.0; height * width]).expect("valid shape")
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn same_shape(&self, other: &ImageTensor) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Writes the image as binary PGM (P5, 8-bit), mapping
    /// `p -> round((p + 1) / 2 * 255)`.
    pub fn write_pgm<W: Write>(&self, writer: &mut W) -> Result<()> {
        write!(writer, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| ((p + 1.0) * 0.5 * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        writer.write_all(&bytes)?;
        Ok(())
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_pgm(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a binary PGM (P5, maxval 255) back into [-1, 1] pixels.
    pub fn load_pgm(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_pgm_bytes(&bytes)
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |m: &str| Error::Format {
            message: format!("PGM: {m}"),
        };
        let mut pos = 0usize;
        let mut token = |bytes: &[u8]| -> Result<String> {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Format {
                    message: "PGM: truncated header".into(),
                });
            }
            Ok(std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| Error::Format {
                    message: "PGM: non-ASCII header".into(),
                })?
                .to_string())
        };
        if token(bytes)? != "P5" {
            return Err(err("expected P5 magic"));
        }
        let width: usize = token(bytes)?.parse().map_err(|_| err("bad width"))?;
        let height: usize = token(bytes)?.parse().map_err(|_| err("bad height"))?;
        let maxval: usize = token(bytes)?.parse().map_err(|_| err("bad maxval"))?;
        if maxval != 255 {
            return Err(err("only maxval 255 is supported"));
        }
        // Single whitespace byte separates the header from the raster.
        pos += 1;
        if bytes.len() < pos + width * height {
            return Err(err("truncated raster"));
        }
        let pixels: Vec<f64> = bytes[pos..pos + width * height]
            .iter()
            .map(|&b| b as f64 / 255.0 * 2.0 - 1.0)
            .collect();
        Self::new(height, width, pixels)
    }
}
