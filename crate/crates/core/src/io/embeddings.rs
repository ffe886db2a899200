//! CSV embeddings: header `subject_id,covariate,d0..dK`, one embedding per
//! row. The covariate cell holds a THK level, a free tag, or nothing. The
//! feature dimension comes from the header and every row must match it.

use std::path::Path;

use crate::io::{write_file, FormatError, FormatErrorKind};
use crate::retrieval::{Covariate, Embedding, EmbeddingSet};

fn csv_error(path: &Path, err: csv::Error) -> FormatError {
    match err.kind() {
        csv::ErrorKind::Io(_) => match err.into_kind() {
            csv::ErrorKind::Io(io) => FormatError::io(path, io),
            _ => unreachable!("kind checked above"),
        },
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => FormatError::parse(
            path,
            pos.as_ref().map(|p| p.line() as usize).unwrap_or(0),
            FormatErrorKind::WrongValueCount {
                expected: *expected_len as usize,
                got: *len as usize,
            },
        ),
        _ => FormatError::parse(path, 0, FormatErrorKind::Csv(err.to_string())),
    }
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let bad_header = || {
        FormatError::parse(
            path,
            1,
            FormatErrorKind::BadField {
                field: "header".to_string(),
                expected: "subject_id,covariate,d0..dK",
                got: headers.iter().collect::<Vec<_>>().join(","),
            },
        )
    };
    if headers.len() < 3 || &headers[0] != "subject_id" || &headers[1] != "covariate" {
        return Err(bad_header());
    }
    for (i, name) in headers.iter().skip(2).enumerate() {
        if name != format!("d{i}") {
            return Err(bad_header());
        }
    }
    let dimension = headers.len() - 2;

    let mut embeddings = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let subject = &record[0];
        if subject.is_empty() {
            return Err(FormatError::parse(
                path,
                line,
                FormatErrorKind::BadField {
                    field: "subject_id".to_string(),
                    expected: "a non-empty identifier",
                    got: String::new(),
                },
            ));
        }
        let covariate = match &record[1] {
            "" => None,
            text => Some(text.parse::<Covariate>().expect("covariate parse is total")),
        };
        let mut features = Vec::with_capacity(dimension);
        for (i, cell) in record.iter().skip(2).enumerate() {
            let field = format!("d{i}");
            let value: f64 = cell.parse().map_err(|_| {
                FormatError::parse(
                    path,
                    line,
                    FormatErrorKind::BadField {
                        field: field.clone(),
                        expected: "a real number",
                        got: cell.to_string(),
                    },
                )
            })?;
            if !value.is_finite() {
                return Err(FormatError::parse(path, line, FormatErrorKind::NonFinite { field }));
            }
            features.push(value);
        }
        embeddings.push(
            Embedding::new(subject, covariate, features).expect("dimension from header is >= 1"),
        );
    }
    Ok(EmbeddingSet::new(embeddings).expect("dimensions and values enforced per row"))
}

pub fn write_embeddings(set: &EmbeddingSet, path: &Path) -> Result<(), FormatError> {
    let dimension = set.dimension().unwrap_or(1);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["subject_id".to_string(), "covariate".to_string()];
    header.extend((0..dimension).map(|i| format!("d{i}")));
    writer.write_record(&header).expect("writing to memory");
    for e in set.embeddings() {
        let mut row = vec![
            e.subject_id.clone(),
            e.covariate.as_ref().map(|c| c.to_string()).unwrap_or_default(),
        ];
        row.extend(e.features.iter().map(|v| format!("{v:?}")));
        writer.write_record(&row).expect("writing to memory");
    }
    let bytes = writer.into_inner().expect("writing to memory");
    write_file(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::FormatErrorKind as Kind;
    use crate::thickness::ThicknessLevel;

    #[test]
    fn authored_fixture_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        std::fs::write(
            &path,
            "subject_id,covariate,d0,d1,d2\nalice,THK0,0.25,-1.5,3.0\nbob,carried-bag,1e-3,0,2.5\n",
        )
        .unwrap();
        let set = read_embeddings(&path).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dimension(), Some(3));
        let a = &set.embeddings()[0];
        assert_eq!(a.subject_id, "alice");
        assert_eq!(a.covariate, Some(Covariate::Thickness(ThicknessLevel::new(0).unwrap())));
        assert_eq!(a.features, vec![0.25, -1.5, 3.0]);
        let b = &set.embeddings()[1];
        assert_eq!(b.covariate, Some(Covariate::Tag("carried-bag".into())));
        assert_eq!(b.features[0], 1e-3);
    }

    #[test]
    fn header_only_file_is_an_empty_set() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "subject_id,covariate,d0,d1\n").unwrap();
        let set = read_embeddings(&path).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn ragged_row_is_reported_with_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(&path, "subject_id,covariate,d0,d1\na,THK0,1,2\nb,THK1,3\n").unwrap();
        let err = read_embeddings(&path).unwrap_err();
        let FormatError::Parse { line, kind, .. } = err else { panic!("{err}") };
        assert_eq!(line, 3);
        assert_eq!(kind, Kind::WrongValueCount { expected: 4, got: 3 });
    }

    #[test]
    fn bad_cells_are_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.csv");
        std::fs::write(&path, "subject_id,covariate,d0\na,THK0,abc\n").unwrap();
        let err = read_embeddings(&path).unwrap_err();
        let FormatError::Parse { line, kind, .. } = err else { panic!("{err}") };
        assert_eq!(line, 2);
        assert!(matches!(kind, Kind::BadField { ref field, .. } if field == "d0"));

        std::fs::write(&path, "subject_id,covariate,d0\na,THK0,inf\n").unwrap();
        assert!(matches!(
            read_embeddings(&path).unwrap_err().kind(),
            Some(Kind::NonFinite { .. })
        ));

        std::fs::write(&path, "id,covariate,d0\na,THK0,1\n").unwrap();
        assert!(matches!(
            read_embeddings(&path).unwrap_err().kind(),
            Some(Kind::BadField { ref field, .. }) if field == "header"
        ));
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a.csv");
        let second = dir.path().join("b.csv");
        let set = EmbeddingSet::new(vec![
            Embedding::new("s1", Some(Covariate::Thickness(ThicknessLevel::new(3).unwrap())), vec![0.1 + 0.2, -7.25]).unwrap(),
            Embedding::new("s2", Some(Covariate::Tag("coat, heavy".into())), vec![1.0, 2.0]).unwrap(),
            Embedding::new("s3", None, vec![-0.0, 1e-17]).unwrap(),
        ])
        .unwrap();
        write_embeddings(&set, &first).unwrap();
        let parsed = read_embeddings(&first).unwrap();
        assert_eq!(parsed, set);
        write_embeddings(&parsed, &second).unwrap();
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }
}
