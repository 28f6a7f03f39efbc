//! Portable graymaps, plain (P2) and raw (P5).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// ASCII samples.
    Plain,
    /// Binary samples, one byte each when `maxval < 256`, else two big-endian.
    Raw,
}

/// A row-major grayscale image with integer samples in `0..=maxval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Graymap {
    /// Map `values` linearly from `[lo, hi]` onto `0..=255`, clamping
    /// outside the range. A degenerate range maps everything to 0.
    pub fn from_values_in(width: usize, height: usize, values: &[f64], lo: f64, hi: f64) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} values do not fill a {width}×{height} image",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "cannot store non-finite values in a graymap".into(),
            ));
        }
        let span = hi - lo;
        let samples = values
            .iter()
            .map(|&v| {
                if span > 0.0 {
                    (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u16
                } else {
                    0
                }
            })
            .collect();
        Ok(Self {
            width,
            height,
            maxval: 255,
            samples,
        })
    }

    /// Like [`Graymap::from_values_in`] over the range of the data.
    pub fn from_values(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::from_values_in(width, height, values, lo.min(hi), hi)
    }

    /// Samples scaled to `[0, 1]`.
    pub fn to_values(&self) -> Vec<f64> {
        let m = f64::from(self.maxval.max(1));
        self.samples.iter().map(|&s| f64::from(s) / m).collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W, format: PgmFormat) -> Result<()> {
        let magic = match format {
            PgmFormat::Plain => "P2",
            PgmFormat::Raw => "P5",
        };
        write!(w, "{magic}\n{} {}\n{}\n", self.width, self.height, self.maxval)?;
        match format {
            PgmFormat::Plain => {
                for row in self.samples.chunks(self.width.max(1)) {
                    let line: Vec<String> = row.iter().map(u16::to_string).collect();
                    writeln!(w, "{}", line.join(" "))?;
                }
            }
            PgmFormat::Raw if self.maxval < 256 => {
                let bytes: Vec<u8> = self.samples.iter().map(|&s| s as u8).collect();
                w.write_all(&bytes)?;
            }
            PgmFormat::Raw => {
                let bytes: Vec<u8> = self.samples.iter().flat_map(|s| s.to_be_bytes()).collect();
                w.write_all(&bytes)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let mut pos = 0;
        let magic = header_token(&buf, &mut pos)?;
        let raw = match magic.as_str() {
            "P2" => false,
            "P5" => true,
            other => return Err(Error::Io(format!("not a graymap: magic {other:?}"))),
        };
        let width = header_number(&buf, &mut pos)?;
        let height = header_number(&buf, &mut pos)?;
        let maxval = header_number(&buf, &mut pos)?;
        if maxval == 0 || maxval > usize::from(u16::MAX) {
            return Err(Error::Io(format!("graymap maxval {maxval} out of range")));
        }
        let count = width * height;
        let samples: Vec<u16> = if raw {
            // Exactly one whitespace byte separates the header from the raster.
            pos += 1;
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            let data = buf
                .get(pos..pos + need)
                .ok_or_else(|| Error::Io(format!("graymap raster truncated: need {need} bytes")))?;
            if wide {
                data.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
            } else {
                data.iter().map(|&b| u16::from(b)).collect()
            }
        } else {
            (0..count)
                .map(|_| header_number(&buf, &mut pos).map(|v| v as u16))
                .collect::<Result<_>>()?
        };
        if samples.iter().any(|&s| usize::from(s) > maxval) {
            return Err(Error::Io("graymap sample exceeds maxval".into()));
        }
        Ok(Self {
            width,
            height,
            maxval: maxval as u16,
            samples,
        })
    }

    pub fn save(&self, path: &Path, format: PgmFormat) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?), format)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Next whitespace-delimited token, skipping `#` comments.
fn header_token(buf: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < buf.len() && buf[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < buf.len() && buf[*pos] == b'#' {
            while *pos < buf.len() && buf[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < buf.len() && !buf[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Io("graymap ended early".into()));
    }
    Ok(String::from_utf8_lossy(&buf[start..*pos]).into_owned())
}

fn header_number(buf: &[u8], pos: &mut usize) -> Result<usize> {
    let t = header_token(buf, pos)?;
    t.parse()
        .map_err(|_| Error::Io(format!("expected a number in graymap, found {t:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Graymap {
        Graymap {
            width: 3,
            height: 2,
            maxval: 255,
            samples: vec![0, 10, 20, 128, 254, 255],
        }
    }

    #[test]
    fn round_trips_both_formats() {
        for fmt in [PgmFormat::Plain, PgmFormat::Raw] {
            let mut out = Vec::new();
            sample().write_to(&mut out, fmt).unwrap();
            assert_eq!(Graymap::read_from(out.as_slice()).unwrap(), sample());
        }
    }

    #[test]
    fn sixteen_bit_raw() {
        let g = Graymap {
            width: 2,
            height: 1,
            maxval: 1000,
            samples: vec![999, 3],
        };
        let mut out = Vec::new();
        g.write_to(&mut out, PgmFormat::Raw).unwrap();
        assert_eq!(Graymap::read_from(out.as_slice()).unwrap(), g);
    }

    #[test]
    fn plain_header_layout_and_comments() {
        let mut out = Vec::new();
        sample().write_to(&mut out, PgmFormat::Plain).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "P2\n3 2\n255\n0 10 20\n128 254 255\n");
        let g = Graymap::read_from("P2 # made by hand\n2 1\n# max\n7\n3 7\n".as_bytes()).unwrap();
        assert_eq!(g.samples, vec![3, 7]);
    }

    #[test]
    fn scaling_and_errors() {
        let g = Graymap::from_values(2, 2, &[-1.0, 0.0, 1.0, 3.0]).unwrap();
        assert_eq!(g.samples, vec![0, 64, 128, 255]);
        assert_eq!(Graymap::from_values(1, 2, &[5.0, 5.0]).unwrap().samples, vec![0, 0]);
        assert!(Graymap::from_values(2, 2, &[0.0; 3]).is_err());
        assert!(Graymap::from_values(1, 1, &[f64::NAN]).is_err());
        assert!(Graymap::read_from("P6\n1 1\n255\n0".as_bytes()).is_err());
        assert!(Graymap::read_from("P5\n2 2\n255\n\x01".as_bytes()).is_err());
    }
}
