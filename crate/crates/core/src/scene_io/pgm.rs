//! Minimal PGM (P2/P5) codec. Samples are kept as raw integers: depth images
//! store integer depth units, not normalized intensities, so no rescaling by
//! maxval happens here.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Option<&'a [u8]> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn next_uint(&mut self, what: &str) -> std::result::Result<u32, String> {
        let tok = self
            .next()
            .ok_or_else(|| format!("unexpected end of file reading {what}"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("invalid {what}: {:?}", String::from_utf8_lossy(tok)))
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Pgm, String> {
    let mut t = Tokens { bytes, pos: 0 };
    let magic = t.next().ok_or("empty file")?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(format!(
                "not a PGM file (magic {:?})",
                String::from_utf8_lossy(other)
            ))
        }
    };
    let width = t.next_uint("width")? as usize;
    let height = t.next_uint("height")? as usize;
    let maxval = t.next_uint("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range 1..=65535"));
    }
    let n = width * height;
    let mut data = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = t.pos + 1;
        let bps = if maxval > 255 { 2 } else { 1 };
        let raster = bytes
            .get(start..start + n * bps)
            .ok_or_else(|| format!("raster truncated: expected {} bytes", n * bps))?;
        if bps == 2 {
            data.extend(
                raster
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]])),
            );
        } else {
            data.extend(raster.iter().map(|&b| b as u16));
        }
    } else {
        for i in 0..n {
            let v = t
                .next_uint("sample")
                .map_err(|e| format!("{e} (sample {i})"))?;
            data.push(v as u16);
        }
    }
    if let Some(bad) = data.iter().find(|&&v| v as u32 > maxval) {
        return Err(format!("sample {bad} exceeds maxval {maxval}"));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        data,
    })
}

pub fn read(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|m| Error::parse(path, m))
}

pub fn encode(pgm: &Pgm) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    if pgm.maxval > 255 {
        out.reserve(pgm.data.len() * 2);
        for v in &pgm.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(pgm.data.iter().map(|&v| v as u8));
    }
    out
}

pub fn write(path: &Path, pgm: &Pgm) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(pgm)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_with_comments() {
        let src = b"P2\n# hand written\n3 2\n# max\n5000\n0 1 2\n3000 4999 5000\n";
        let p = decode(src).unwrap();
        assert_eq!((p.width, p.height, p.maxval), (3, 2, 5000));
        assert_eq!(p.data, vec![0, 1, 2, 3000, 4999, 5000]);
    }

    #[test]
    fn binary_16_and_8_bit_round_trip() {
        for maxval in [255u16, 65535] {
            let p = Pgm {
                width: 4,
                height: 3,
                maxval,
                data: (0..12).map(|i| (i * 21) as u16).collect(),
            };
            assert_eq!(decode(&encode(&p)).unwrap(), p);
        }
    }

    #[test]
    fn rejects_truncated_raster_and_bad_magic() {
        assert!(decode(b"P5\n4 4\n255\n\x00\x01").is_err());
        assert!(decode(b"P6\n1 1\n255\n\x00\x00\x00").is_err());
        assert!(decode(b"P2\n2 1\n10\n3 11\n").is_err());
    }
}
