//! Netpbm graymap (P2 ASCII / P5 binary) reading and writing.

use super::{ClassMask, GrayImage, LabelMap, RasterError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmMode {
    Ascii,
    Binary,
}

/// Decoded graymap with raw integer samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u32>,
}

impl Pgm {
    pub fn new(
        width: usize,
        height: usize,
        maxval: u32,
        samples: Vec<u32>,
    ) -> Result<Self, RasterError> {
        if maxval == 0 || maxval > 65535 {
            return Err(RasterError::Format(format!("maxval {maxval} not in 1..=65535")));
        }
        if width == 0 || height == 0 {
            return Err(RasterError::Format(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(RasterError::Length {
                expected: width * height,
                found: samples.len(),
            });
        }
        if let Some(&v) = samples.iter().find(|&&v| v > maxval) {
            return Err(RasterError::Range {
                value: v as f64,
                maxval,
            });
        }
        Ok(Self {
            width,
            height,
            maxval,
            samples,
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, RasterError> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.token()?;
        let binary = match magic.as_slice() {
            b"P2" => false,
            b"P5" => true,
            other => {
                return Err(RasterError::Format(format!(
                    "unsupported magic {:?}",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        let width = cur.header_number("width")?;
        let height = cur.header_number("height")?;
        let maxval = cur.header_number("maxval")?;
        if width == 0 || height == 0 {
            return Err(RasterError::Format("zero image dimension".into()));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(RasterError::Format(format!("maxval {maxval} not in 1..=65535")));
        }
        let maxval = maxval as u32;
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| RasterError::Format("image dimensions overflow".into()))?;

        let samples = if binary {
            // Exactly one whitespace byte separates the header from the raster.
            match bytes.get(cur.pos) {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => return Err(RasterError::Format("missing header terminator".into())),
            }
            let payload = &bytes[cur.pos..];
            let width_bytes = if maxval > 255 { 2 } else { 1 };
            if payload.len() < expected * width_bytes {
                return Err(RasterError::Length {
                    expected,
                    found: payload.len() / width_bytes,
                });
            }
            if width_bytes == 1 {
                payload[..expected].iter().map(|&b| b as u32).collect()
            } else {
                payload[..expected * 2]
                    .chunks_exact(2)
                    .map(|p| u16::from_be_bytes([p[0], p[1]]) as u32)
                    .collect()
            }
        } else {
            let mut samples = Vec::with_capacity(expected);
            while samples.len() < expected {
                let tok = cur.token();
                match tok {
                    Ok(t) => samples.push(parse_number(&t)? as u32),
                    Err(_) if cur.at_end() => break,
                    Err(e) => return Err(e),
                }
            }
            if samples.len() < expected {
                return Err(RasterError::Length {
                    expected,
                    found: samples.len(),
                });
            }
            samples
        };
        Self::new(width, height, maxval, samples)
    }

    pub fn encode(&self, mode: PgmMode) -> Vec<u8> {
        let magic = match mode {
            PgmMode::Ascii => "P2",
            PgmMode::Binary => "P5",
        };
        let mut out = format!("{magic}\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        match mode {
            PgmMode::Ascii => {
                for row in self.samples.chunks(self.width) {
                    let line: Vec<String> = row.iter().map(u32::to_string).collect();
                    out.extend_from_slice(line.join(" ").as_bytes());
                    out.push(b'\n');
                }
            }
            PgmMode::Binary => {
                if self.maxval > 255 {
                    for &v in &self.samples {
                        out.extend_from_slice(&(v as u16).to_be_bytes());
                    }
                } else {
                    out.extend(self.samples.iter().map(|&v| v as u8));
                }
            }
        }
        out
    }
}

/// Rasters that can be written as a graymap.
pub trait ToPgm {
    fn to_pgm(&self) -> Result<Pgm, RasterError>;
}

impl ToPgm for Pgm {
    fn to_pgm(&self) -> Result<Pgm, RasterError> {
        Ok(self.clone())
    }
}

impl ToPgm for LabelMap {
    fn to_pgm(&self) -> Result<Pgm, RasterError> {
        Pgm::new(self.width(), self.height(), 255, self.labels().to_vec())
    }
}

impl ToPgm for ClassMask {
    fn to_pgm(&self) -> Result<Pgm, RasterError> {
        Pgm::new(self.width(), self.height(), 255, self.labels().to_vec())
    }
}

impl ToPgm for GrayImage {
    /// Intensities must be non-negative integers; maxval is 255 when they fit
    /// in a byte and 65535 otherwise.
    fn to_pgm(&self) -> Result<Pgm, RasterError> {
        let (_, hi) = self.range();
        let maxval = if hi <= 255.0 { 255 } else { 65535 };
        let samples = self
            .data()
            .iter()
            .map(|&v| {
                if v < 0.0 || v > maxval as f64 || v.fract() != 0.0 {
                    Err(RasterError::Range { value: v, maxval })
                } else {
                    Ok(v as u32)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Pgm::new(self.width(), self.height(), maxval, samples)
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<Pgm, RasterError> {
    Pgm::decode(bytes)
}

/// Reads a graymap as raw intensities (no normalization).
pub fn read_gray(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let pgm = Pgm::decode(bytes)?;
    GrayImage::new(
        pgm.width,
        pgm.height,
        pgm.samples.iter().map(|&v| v as f64).collect(),
    )
}

/// Reads a graymap as class labels; raw sample values are the labels.
pub fn read_mask(bytes: &[u8]) -> Result<ClassMask, RasterError> {
    let pgm = Pgm::decode(bytes)?;
    ClassMask::new(pgm.width, pgm.height, pgm.samples)
}

pub fn write_pgm<R: ToPgm + ?Sized>(raster: &R, mode: PgmMode) -> Result<Vec<u8>, RasterError> {
    Ok(raster.to_pgm()?.encode(mode))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Result<Vec<u8>, RasterError> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(RasterError::Format("unexpected end of data".into()));
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn header_number(&mut self, what: &str) -> Result<usize, RasterError> {
        let tok = self
            .token()
            .map_err(|_| RasterError::Format(format!("missing {what} in header")))?;
        parse_number(&tok)
    }
}

fn parse_number(tok: &[u8]) -> Result<usize, RasterError> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| {
            RasterError::Format(format!("invalid number {:?}", String::from_utf8_lossy(tok)))
        })
}
