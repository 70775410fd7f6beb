//! Text format for observables and density matrices:
//! `{"label": ..., "dim": d, "matrix": [[re, im], ...]}` with the `d * d`
//! entries listed row-major.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRecord {
    #[serde(default)]
    pub label: String,
    pub dim: usize,
    pub matrix: Vec<[f64; 2]>,
}

/// A file holds either one record or a list of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RecordFile {
    One(MatrixRecord),
    Many(Vec<MatrixRecord>),
}

impl MatrixRecord {
    pub fn from_matrix(label: impl Into<String>, m: &DMatrix<C64>) -> Self {
        let d = m.nrows();
        let mut matrix = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                let z = m[(r, c)];
                matrix.push([z.re, z.im]);
            }
        }
        Self {
            label: label.into(),
            dim: d,
            matrix,
        }
    }

    /// Dense matrix; `path` names the record in diagnostics.
    pub fn to_matrix(&self, path: &str) -> Result<DMatrix<C64>> {
        if self.dim == 0 {
            return Err(Error::schema(format!("{path}.dim"), "must be at least 1"));
        }
        if self.matrix.len() != self.dim * self.dim {
            return Err(Error::schema(
                format!("{path}.matrix"),
                format!(
                    "expected {} [re, im] pairs for dim {}, found {}",
                    self.dim * self.dim,
                    self.dim,
                    self.matrix.len()
                ),
            ));
        }
        if let Some(i) = self.matrix.iter().position(|z| !(z[0].is_finite() && z[1].is_finite())) {
            return Err(Error::schema(format!("{path}.matrix[{i}]"), "non-finite entry"));
        }
        Ok(DMatrix::from_row_iterator(
            self.dim,
            self.dim,
            self.matrix.iter().map(|z| C64::new(z[0], z[1])),
        ))
    }
}

pub fn read_records(path: &Path) -> Result<Vec<MatrixRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Unreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_records(&text, &path.display().to_string())
}

pub fn parse_records(text: &str, origin: &str) -> Result<Vec<MatrixRecord>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    match serde_path_to_error::deserialize::<_, RecordFile>(de) {
        Ok(RecordFile::One(r)) => Ok(vec![r]),
        Ok(RecordFile::Many(v)) => Ok(v),
        Err(e) => Err(Error::schema(
            format!("{origin}:{}", e.path()),
            e.inner().to_string(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::observable::random;

    #[test]
    fn parses_single_and_list() {
        let one = r#"{"label": "K", "dim": 2, "matrix": [[1,0],[0,0],[0,0],[2,0]]}"#;
        let recs = parse_records(one, "inline").unwrap();
        let m = recs[0].to_matrix("obs").unwrap();
        assert_eq!(m[(1, 1)], C64::new(2.0, 0.0));
        assert_eq!(m[(0, 1)], C64::new(0.0, 0.0));
        let many = format!("[{one}, {one}]");
        assert_eq!(parse_records(&many, "inline").unwrap().len(), 2);
    }

    #[test]
    fn row_major_layout() {
        let r = MatrixRecord {
            label: String::new(),
            dim: 2,
            matrix: vec![[0.0, 0.0], [0.0, -1.0], [0.0, 1.0], [0.0, 0.0]],
        };
        let m = r.to_matrix("y").unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(m[(1, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn wrong_length_names_the_field() {
        let r = MatrixRecord {
            label: "bad".into(),
            dim: 2,
            matrix: vec![[1.0, 0.0]],
        };
        match r.to_matrix("observables[0]") {
            Err(Error::SchemaViolation { path, .. }) => assert_eq!(path, "observables[0].matrix"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_through_record() {
        let mut rng = random::rng(2);
        let m = random::hermitian(3, &mut rng);
        let r = MatrixRecord::from_matrix("h", &m);
        let text = serde_json::to_string(&r).unwrap();
        let back = parse_records(&text, "x").unwrap()[0].to_matrix("x").unwrap();
        assert_eq!(back, m);
    }
}
