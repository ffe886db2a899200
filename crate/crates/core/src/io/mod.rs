//! On-disk formats. Every format starts with a magic/version line (or the
//! PGM magic), every reader reports errors with a file location, and every
//! read/write pair round-trips losslessly: floats are serialized with
//! shortest round-trip decimals, so rewriting a parsed file reproduces it
//! byte for byte.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::skeleton::SkeletonError;
use crate::walker::WalkerSpec;

pub mod embeddings;
pub mod pgm;
pub mod pose;
pub mod tensor;

pub use embeddings::{read_embeddings, write_embeddings};
pub use pgm::{read_silhouette, write_silhouette};
pub use pose::{read_pose_sequence, write_pose_sequence};
pub use tensor::{read_feature_map, write_feature_map};

/// What went wrong, independent of where.
#[derive(Debug, Error, PartialEq)]
pub enum FormatErrorKind {
    #[error("unrecognized magic {found:?}, expected {expected:?}")]
    BadMagic { expected: &'static str, found: String },
    #[error("unsupported version {found}, this reader handles version {supported}")]
    VersionMismatch { supported: u32, found: u32 },
    #[error("missing {field} line")]
    MissingField { field: &'static str },
    #[error("field {field}: expected {expected}, got {got:?}")]
    BadField { field: String, expected: &'static str, got: String },
    #[error("field {field}: value is not finite")]
    NonFinite { field: String },
    #[error("expected {expected} values, got {got}")]
    WrongValueCount { expected: usize, got: usize },
    #[error("unexpected end of input while reading {what}")]
    Truncated { what: &'static str },
    #[error("unexpected trailing content")]
    TrailingContent,
    #[error("unsupported PGM variant {found:?}, only binary P5 is handled")]
    UnsupportedPgm { found: String },
    #[error("maxval {maxval} out of range, expected 1..=255")]
    BadMaxval { maxval: u64 },
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error("{0}")]
    Csv(String),
    #[error("{0}")]
    Json(String),
}

/// A format failure tied to a file and, where meaningful, a line or byte.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {cause}", path.display())]
    Io {
        path: PathBuf,
        cause: std::io::Error,
    },
    #[error("{}:{line}: {kind}", path.display())]
    Parse { path: PathBuf, line: usize, kind: FormatErrorKind },
    #[error("{}: byte {offset}: {kind}", path.display())]
    ParseAt { path: PathBuf, offset: usize, kind: FormatErrorKind },
}

impl FormatError {
    pub(crate) fn io(path: &Path, cause: std::io::Error) -> Self {
        FormatError::Io { path: path.to_path_buf(), cause }
    }

    pub(crate) fn parse(path: &Path, line: usize, kind: FormatErrorKind) -> Self {
        FormatError::Parse { path: path.to_path_buf(), line, kind }
    }

    pub(crate) fn at(path: &Path, offset: usize, kind: FormatErrorKind) -> Self {
        FormatError::ParseAt { path: path.to_path_buf(), offset, kind }
    }

    /// The failure detail without the location, for assertions and matching.
    pub fn kind(&self) -> Option<&FormatErrorKind> {
        match self {
            FormatError::Io { .. } => None,
            FormatError::Parse { kind, .. } | FormatError::ParseAt { kind, .. } => Some(kind),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

/// Shared cursor for the line-oriented text formats.
pub(crate) struct LineReader<'a> {
    pub(crate) path: &'a Path,
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> LineReader<'a> {
    pub(crate) fn new(path: &'a Path, text: &'a str) -> Self {
        LineReader { path, lines: text.lines().collect(), pos: 0 }
    }

    pub(crate) fn next_line(&mut self, what: &'static str) -> Result<(usize, &'a str), FormatError> {
        if self.pos >= self.lines.len() {
            return Err(FormatError::parse(
                self.path,
                self.lines.len() + 1,
                FormatErrorKind::Truncated { what },
            ));
        }
        self.pos += 1;
        Ok((self.pos, self.lines[self.pos - 1]))
    }

    pub(crate) fn bad_field(
        &self,
        line: usize,
        field: &str,
        expected: &'static str,
        got: &str,
    ) -> FormatError {
        FormatError::parse(
            self.path,
            line,
            FormatErrorKind::BadField { field: field.to_string(), expected, got: got.to_string() },
        )
    }

    /// A line of the form `<keyword> <tokens...>`.
    pub(crate) fn keyword_line(
        &mut self,
        keyword: &'static str,
    ) -> Result<(usize, Vec<&'a str>), FormatError> {
        let (no, line) = self.next_line(keyword)?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(keyword) {
            return Err(self.bad_field(no, keyword, "a line starting with this keyword", line));
        }
        Ok((no, tokens.collect()))
    }

    pub(crate) fn parse_f64(&self, line: usize, field: &str, token: &str) -> Result<f64, FormatError> {
        token.parse().map_err(|_| self.bad_field(line, field, "a real number", token))
    }

    pub(crate) fn parse_count(&self, line: usize, field: &str, token: &str) -> Result<usize, FormatError> {
        token.parse().map_err(|_| self.bad_field(line, field, "a non-negative integer", token))
    }

    /// Only blank lines may remain.
    pub(crate) fn expect_eof(&mut self) -> Result<(), FormatError> {
        while let Ok((no, line)) = self.next_line("end of file") {
            if !line.trim().is_empty() {
                return Err(FormatError::parse(self.path, no, FormatErrorKind::TrailingContent));
            }
        }
        Ok(())
    }
}

/// First line of every text format: `<MAGIC> <version>`.
pub(crate) fn read_magic(
    r: &mut LineReader<'_>,
    magic: &'static str,
    supported: u32,
) -> Result<(), FormatError> {
    let (no, line) = r.next_line("magic line")?;
    let mut tokens = line.split_whitespace();
    if tokens.next().unwrap_or("") != magic {
        return Err(FormatError::parse(
            r.path,
            no,
            FormatErrorKind::BadMagic { expected: magic, found: line.to_string() },
        ));
    }
    let token = tokens
        .next()
        .ok_or_else(|| r.bad_field(no, "version", "an integer after the magic", line))?;
    let version: u32 = token
        .parse()
        .map_err(|_| r.bad_field(no, "version", "an integer after the magic", token))?;
    if version != supported {
        return Err(FormatError::parse(
            r.path,
            no,
            FormatErrorKind::VersionMismatch { supported, found: version },
        ));
    }
    if tokens.next().is_some() {
        return Err(FormatError::parse(r.path, no, FormatErrorKind::TrailingContent));
    }
    Ok(())
}

pub(crate) fn read_binary(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|e| FormatError::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    std::fs::write(path, bytes).map_err(|e| FormatError::io(path, e))
}

/// Parses a walker description from JSON. Value-range validation happens
/// when the walker is synthesized; this only requires well-formed JSON with
/// the right fields.
pub fn read_walker_spec(path: &Path) -> Result<WalkerSpec, FormatError> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| FormatError::parse(path, e.line(), FormatErrorKind::Json(e.to_string())))
}

/// Serializes a walker description as pretty-printed JSON.
pub fn write_walker_spec(spec: &WalkerSpec, path: &Path) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(spec).expect("walker spec serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}
