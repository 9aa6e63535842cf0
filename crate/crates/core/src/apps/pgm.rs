// SPDX-License-Identifier: Apache-2.0

//! Binary PGM (P5), 8-bit.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::image::GrayImage;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("byte {offset}: not a binary PGM (expected magic P5)")]
    BadMagic { offset: usize },
    #[error("byte {offset}: {reason}")]
    BadHeader { offset: usize, reason: String },
    #[error("byte {offset}: maxval {maxval} unsupported (8-bit only)")]
    Maxval { offset: usize, maxval: u32 },
    #[error("byte {offset}: pixel data truncated, expected {expected} bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.data.get(self.pos) {
            if c == b'#' {
                while self.data.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::BadHeader {
                offset: start,
                reason: format!("expected {what}"),
            });
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::BadHeader {
                offset: start,
                reason: format!("{what} out of range"),
            })
    }
}

pub fn decode(data: &[u8]) -> Result<GrayImage, PgmError> {
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(PgmError::BadMagic { offset: 0 });
    }
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::Maxval {
            offset: maxval_at,
            maxval,
        });
    }
    if width == 0 || height == 0 {
        return Err(PgmError::BadHeader {
            offset: maxval_at,
            reason: "zero image dimension".into(),
        });
    }
    // exactly one whitespace byte separates the header from the raster
    match data.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(PgmError::BadHeader {
                offset: cur.pos,
                reason: "expected whitespace after maxval".into(),
            })
        }
    }
    let expected = width * height;
    let raster = &data[cur.pos..];
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            offset: cur.pos + raster.len(),
            expected,
            found: raster.len(),
        });
    }
    Ok(GrayImage::new(width, height, raster[..expected].to_vec()).expect("size checked"))
}

pub fn read(mut r: impl Read) -> Result<GrayImage, PgmError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode(&buf)
}

pub fn encode(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn write(img: &GrayImage, mut w: impl Write) -> io::Result<()> {
    w.write_all(&encode(img))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_with_comments() {
        let mut data = b"P5\n# made by hand\n3 2\n# depth\n255\n".to_vec();
        data.extend_from_slice(&[0, 1, 2, 3, 4, 255]);
        let img = decode(&data).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.get(2, 1), 255);
    }

    #[test]
    fn errors_name_offsets() {
        assert!(matches!(decode(b"P2\n1 1\n255\n\x00"), Err(PgmError::BadMagic { offset: 0 })));
        assert!(matches!(
            decode(b"P5\n1 x\n255\n\x00"),
            Err(PgmError::BadHeader { offset: 5, .. })
        ));
        assert!(matches!(
            decode(b"P5\n1 1\n65535\n\x00\x00"),
            Err(PgmError::Maxval { maxval: 65535, .. })
        ));
        let err = decode(b"P5\n4 4\n255\n\x00\x01").unwrap_err();
        assert!(matches!(
            err,
            PgmError::Truncated {
                offset: 13,
                expected: 16,
                found: 2
            }
        ));
        assert!(err.to_string().starts_with("byte 13"));
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let pixels: Vec<u8> = (0..w * h)
                .map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8)
                .collect();
            let img = GrayImage::new(w, h, pixels).unwrap();
            prop_assert_eq!(decode(&encode(&img)).unwrap(), img);
        }
    }
}
