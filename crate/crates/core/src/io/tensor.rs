//! Text format for dense feature maps.
//!
//! ```text
//! GAITKIT-TENSOR 1
//! dims 1 2 2 3
//! 0.0 1.0 2.0
//! 3.0 4.0 5.0
//! ...
//! ```
//!
//! `dims` is N C H W; the body holds one line per (batch, channel, row) in
//! row-major order, W values each. Floats use shortest round-trip decimals.

use std::fmt::Write as _;
use std::path::Path;

use crate::gon::FeatureMap;
use crate::io::{read_magic, read_text, write_file, FormatError, FormatErrorKind, LineReader};

const MAGIC: &str = "GAITKIT-TENSOR";
const VERSION: u32 = 1;

pub fn read_feature_map(path: &Path) -> Result<FeatureMap, FormatError> {
    let text = read_text(path)?;
    let mut r = LineReader::new(path, &text);
    read_magic(&mut r, MAGIC, VERSION)?;

    let (no, tokens) = r.keyword_line("dims")?;
    let [n_tok, c_tok, h_tok, w_tok] = tokens[..] else {
        return Err(r.bad_field(no, "dims", "dims N C H W", &tokens.join(" ")));
    };
    let mut dims = [0usize; 4];
    for (slot, (field, token)) in dims.iter_mut().zip([
        ("N", n_tok),
        ("C", c_tok),
        ("H", h_tok),
        ("W", w_tok),
    ]) {
        let value = r.parse_count(no, field, token)?;
        if value == 0 {
            return Err(r.bad_field(no, field, "a positive dimension", token));
        }
        *slot = value;
    }
    let [n, c, h, w] = dims;

    let mut values = Vec::with_capacity(n * c * h * w);
    for _ in 0..n * c * h {
        let (no, line) = r.next_line("tensor row")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != w {
            return Err(FormatError::parse(
                path,
                no,
                FormatErrorKind::WrongValueCount { expected: w, got: tokens.len() },
            ));
        }
        for (k, token) in tokens.iter().enumerate() {
            let field = format!("value {k}");
            let value = r.parse_f64(no, &field, token)?;
            if !value.is_finite() {
                return Err(FormatError::parse(path, no, FormatErrorKind::NonFinite { field }));
            }
            values.push(value);
        }
    }
    r.expect_eof()?;
    Ok(FeatureMap::new(n, c, h, w, values).expect("dims and values validated"))
}

pub fn write_feature_map(map: &FeatureMap, path: &Path) -> Result<(), FormatError> {
    let (n, c, h, w) = map.dims();
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "dims {n} {c} {h} {w}").unwrap();
    for row in map.values().chunks(w) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::FormatErrorKind as Kind;

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a.ten");
        let second = dir.path().join("b.ten");
        let values: Vec<f64> = (0..12).map(|i| (i as f64).sin() * 1e-3 + 0.1).collect();
        let map = FeatureMap::new(1, 2, 2, 3, values).unwrap();
        write_feature_map(&map, &first).unwrap();
        let parsed = read_feature_map(&first).unwrap();
        assert_eq!(parsed, map);
        write_feature_map(&parsed, &second).unwrap();
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }

    #[test]
    fn malformed_tensors_give_located_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ten");

        std::fs::write(&path, "GAITKIT-TENSOR 1\ndims 1 1 1 3\n0.0 1.0\n").unwrap();
        let err = read_feature_map(&path).unwrap_err();
        let FormatError::Parse { line, kind, .. } = err else { panic!("{err}") };
        assert_eq!((line, kind), (3, Kind::WrongValueCount { expected: 3, got: 2 }));

        std::fs::write(&path, "GAITKIT-TENSOR 1\ndims 1 1 0 3\n").unwrap();
        assert!(matches!(
            read_feature_map(&path).unwrap_err().kind(),
            Some(Kind::BadField { .. })
        ));

        std::fs::write(&path, "GAITKIT-TENSOR 1\ndims 1 1 1 1\ninf\n").unwrap();
        assert!(matches!(
            read_feature_map(&path).unwrap_err().kind(),
            Some(Kind::NonFinite { .. })
        ));

        std::fs::write(&path, "GAITKIT-TENSOR 2\ndims 1 1 1 1\n0\n").unwrap();
        assert!(matches!(
            read_feature_map(&path).unwrap_err().kind(),
            Some(Kind::VersionMismatch { .. })
        ));

        std::fs::write(&path, "GAITKIT-TENSOR 1\ndims 1 1 1 1\n0\n0\n").unwrap();
        assert!(matches!(
            read_feature_map(&path).unwrap_err().kind(),
            Some(Kind::TrailingContent)
        ));
    }
}
