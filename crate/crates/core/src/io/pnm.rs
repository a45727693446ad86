//! Masks as binary PGM (`P5`) or ASCII PBM (`P1`), and 8-bit PGM output.

use std::path::Path;

use super::FormatError;
use crate::error::{Error, Result};
use crate::tensor::{Scale, SegMask};

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, FormatError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                FormatError::Truncated {
                    offset: start,
                    what: format!("header {what}"),
                    expected: start + 1,
                    actual: self.bytes.len(),
                }
            } else {
                FormatError::InvalidHeader {
                    offset: start,
                    reason: format!("expected {what}, found byte {:#04x}", self.bytes[start]),
                }
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::InvalidHeader {
                offset: start,
                reason: format!("{what} is out of range"),
            })
    }
}

/// Parse a `P5` or `P1` image into a mask. PGM pixels brighter than half the
/// declared maximum (above 127 for the usual 255) and PBM bits equal to 1 are
/// foreground.
pub fn parse_mask(bytes: &[u8]) -> Result<SegMask, FormatError> {
    if bytes.len() < 2 {
        return Err(FormatError::Truncated {
            offset: 0,
            what: "magic".into(),
            expected: 2,
            actual: bytes.len(),
        });
    }
    let magic = &bytes[..2];
    let mut header = Header { bytes, pos: 2 };
    match magic {
        b"P5" => {
            let width = header.number("width")?;
            let height = header.number("height")?;
            let maxval = header.number("maxval")?;
            if maxval == 0 || maxval > 255 {
                return Err(FormatError::Unsupported {
                    offset: header.pos,
                    reason: format!("maxval {maxval} (only 8-bit PGM is supported)"),
                });
            }
            check_dims(width, height, &header)?;
            // exactly one whitespace byte separates the header from the raster
            if header.pos >= bytes.len() || !bytes[header.pos].is_ascii_whitespace() {
                return Err(FormatError::InvalidHeader {
                    offset: header.pos,
                    reason: "missing whitespace after maxval".into(),
                });
            }
            let start = header.pos + 1;
            let needed = width * height;
            let available = bytes.len() - start;
            if available < needed {
                return Err(FormatError::Truncated {
                    offset: bytes.len(),
                    what: format!("{width}x{height} raster"),
                    expected: start + needed,
                    actual: bytes.len(),
                });
            }
            let raster = &bytes[start..start + needed];
            let trailing = &bytes[start + needed..];
            if !trailing.iter().all(u8::is_ascii_whitespace) {
                return Err(FormatError::TrailingBytes {
                    offset: start + needed,
                    count: trailing.len(),
                });
            }
            let bits = raster.iter().map(|&p| 2 * p as usize > maxval).collect();
            Ok(SegMask::new(height, width, bits).expect("dimensions checked"))
        }
        b"P1" => {
            let width = header.number("width")?;
            let height = header.number("height")?;
            check_dims(width, height, &header)?;
            let needed = width * height;
            let mut bits = Vec::with_capacity(needed);
            while bits.len() < needed {
                header.skip_space_and_comments();
                match bytes.get(header.pos) {
                    Some(b'0') => bits.push(false),
                    Some(b'1') => bits.push(true),
                    Some(&other) => {
                        return Err(FormatError::InvalidHeader {
                            offset: header.pos,
                            reason: format!("unexpected byte {other:#04x} in PBM raster"),
                        })
                    }
                    None => {
                        return Err(FormatError::Truncated {
                            offset: header.pos,
                            what: format!("{width}x{height} raster ({} of {needed} bits read)", bits.len()),
                            expected: header.pos + (needed - bits.len()),
                            actual: bytes.len(),
                        })
                    }
                }
                header.pos += 1;
            }
            header.skip_space_and_comments();
            if header.pos != bytes.len() {
                return Err(FormatError::TrailingBytes {
                    offset: header.pos,
                    count: bytes.len() - header.pos,
                });
            }
            Ok(SegMask::new(height, width, bits).expect("dimensions checked"))
        }
        other => Err(FormatError::Unsupported {
            offset: 0,
            reason: format!(
                "magic {:?} (expected P5 or P1)",
                String::from_utf8_lossy(other)
            ),
        }),
    }
}

fn check_dims(width: usize, height: usize, header: &Header<'_>) -> Result<(), FormatError> {
    if width == 0 || height == 0 || width.checked_mul(height).is_none_or(|n| n > (1 << 28)) {
        return Err(FormatError::InvalidHeader {
            offset: header.pos,
            reason: format!("unusable image size {width}x{height}"),
        });
    }
    Ok(())
}

/// Read a mask file, optionally checking its resolution.
pub fn read_mask(path: impl AsRef<Path>, expected: Option<Scale>) -> Result<SegMask> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mask = parse_mask(&bytes)?;
    if let Some(expected) = expected {
        if mask.scale() != expected {
            return Err(FormatError::DimensionMismatch {
                expected,
                actual: mask.scale(),
            }
            .into());
        }
    }
    Ok(mask)
}

/// Binary 8-bit PGM.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel count must match dimensions");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Foreground as 255, background as 0.
pub fn encode_mask_pgm(mask: &SegMask) -> Vec<u8> {
    let pixels: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_pgm(mask.width(), mask.height(), &pixels)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &SegMask) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_mask_pgm(mask)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_all_white_is_all_foreground() {
        let bytes = encode_pgm(3, 2, &[255; 6]);
        let m = parse_mask(&bytes).unwrap();
        assert_eq!(m.scale(), Scale::new(2, 3));
        assert!(m.bits().iter().all(|&b| b));
    }

    #[test]
    fn p5_threshold_is_127() {
        let m = parse_mask(&encode_pgm(2, 1, &[127, 128])).unwrap();
        assert_eq!(m.bits(), &[false, true]);
    }

    #[test]
    fn p1_checkerboard_with_comments() {
        let text = b"P1\n# checker\n4 2\n1 0 1 0\n0101\n";
        let m = parse_mask(text).unwrap();
        assert_eq!(m.bits(), &[true, false, true, false, false, true, false, true]);
    }

    #[test]
    fn p5_truncated_payload() {
        let mut bytes = encode_pgm(4, 4, &[0; 16]);
        bytes.pop();
        match parse_mask(&bytes) {
            Err(FormatError::Truncated { expected, actual, .. }) => {
                assert_eq!(expected, actual + 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsupported_magic_and_depth() {
        assert!(matches!(parse_mask(b"P6\n1 1\n255\n\0\0\0"), Err(FormatError::Unsupported { .. })));
        assert!(matches!(parse_mask(b"P5\n1 1\n65535\n\0\0"), Err(FormatError::Unsupported { .. })));
        assert!(parse_mask(b"").is_err());
        assert!(parse_mask(b"P5").is_err());
        assert!(parse_mask(b"P1 2 2 1 1 1").is_err());
        assert!(parse_mask(b"P1 2 1 1 x").is_err());
    }

    #[test]
    fn mask_pgm_round_trip() {
        let m = SegMask::from_fn(3, 5, |r, c| (r * c) % 3 == 1);
        assert_eq!(parse_mask(&encode_mask_pgm(&m)).unwrap(), m);
    }
}
