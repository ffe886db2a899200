//! Binary PGM (P5) silhouettes.
//!
//! Reading accepts any maxval up to 255 and treats every pixel above zero as
//! foreground; header comments (`#` to end of line) are allowed. Writing
//! emits only 0 and 255, so a read/write cycle reproduces written files
//! byte for byte. The ASCII P2 variant is deliberately not handled.

use std::path::Path;

use crate::io::{read_binary, write_file, FormatError, FormatErrorKind};
use crate::thickness::Silhouette;

struct ByteReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => return,
            }
        }
    }

    fn token(&mut self, field: &str) -> Result<(usize, &'a [u8]), FormatError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(FormatError::at(
                self.path,
                start,
                FormatErrorKind::BadField {
                    field: field.to_string(),
                    expected: "a header token",
                    got: String::new(),
                },
            ));
        }
        Ok((start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, field: &str) -> Result<(usize, u64), FormatError> {
        let (offset, token) = self.token(field)?;
        let text = std::str::from_utf8(token).unwrap_or("");
        let value = text.parse().map_err(|_| {
            FormatError::at(
                self.path,
                offset,
                FormatErrorKind::BadField {
                    field: field.to_string(),
                    expected: "a decimal integer",
                    got: String::from_utf8_lossy(token).into_owned(),
                },
            )
        })?;
        Ok((offset, value))
    }
}

pub fn read_silhouette(path: &Path) -> Result<Silhouette, FormatError> {
    let bytes = read_binary(path)?;
    let mut r = ByteReader { path, bytes: &bytes, pos: 0 };

    let (offset, magic) = r.token("magic")?;
    match magic {
        b"P5" => {}
        b"P1" | b"P2" | b"P3" | b"P4" | b"P6" => {
            return Err(FormatError::at(
                path,
                offset,
                FormatErrorKind::UnsupportedPgm {
                    found: String::from_utf8_lossy(magic).into_owned(),
                },
            ));
        }
        other => {
            return Err(FormatError::at(
                path,
                offset,
                FormatErrorKind::BadMagic {
                    expected: "P5",
                    found: String::from_utf8_lossy(other).into_owned(),
                },
            ));
        }
    }

    let (w_offset, width) = r.number("width")?;
    let (h_offset, height) = r.number("height")?;
    for (offset, value, field) in [(w_offset, width, "width"), (h_offset, height, "height")] {
        if value == 0 || value > usize::MAX as u64 {
            return Err(FormatError::at(
                path,
                offset,
                FormatErrorKind::BadField {
                    field: field.to_string(),
                    expected: "a positive dimension",
                    got: value.to_string(),
                },
            ));
        }
    }
    let (m_offset, maxval) = r.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(FormatError::at(path, m_offset, FormatErrorKind::BadMaxval { maxval }));
    }

    // Exactly one whitespace byte separates the header from the pixel bytes.
    if r.pos >= bytes.len() || !bytes[r.pos].is_ascii_whitespace() {
        return Err(FormatError::at(path, r.pos, FormatErrorKind::Truncated { what: "pixel data" }));
    }
    r.pos += 1;

    let pixel_count = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| FormatError::at(path, w_offset, FormatErrorKind::Truncated { what: "pixel data" }))?;
    let data = &bytes[r.pos..];
    if data.len() < pixel_count {
        return Err(FormatError::at(
            path,
            bytes.len(),
            FormatErrorKind::Truncated { what: "pixel data" },
        ));
    }
    if data.len() > pixel_count {
        return Err(FormatError::at(
            path,
            r.pos + pixel_count,
            FormatErrorKind::TrailingContent,
        ));
    }
    let mask = data.iter().map(|b| *b > 0).collect();
    Ok(Silhouette::new(width as usize, height as usize, mask).expect("dimensions checked"))
}

pub fn write_silhouette(silhouette: &Silhouette, path: &Path) -> Result<(), FormatError> {
    let mut out = format!("P5\n{} {}\n255\n", silhouette.width(), silhouette.height()).into_bytes();
    out.extend(silhouette.mask().iter().map(|fg| if *fg { 255u8 } else { 0u8 }));
    write_file(path, &out)
}
