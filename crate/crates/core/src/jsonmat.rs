//! Row-major nested-array (de)serialization helpers for `DMatrix<f64>`.
//!
//! All JSON interfaces in this crate represent a real matrix as
//! `[[row0...], [row1...], ...]`. An empty matrix serializes as `[]`; on the
//! way back in, degenerate shapes (zero rows or zero columns) lose one
//! dimension, so deserialization sites that care about exact shapes
//! re-normalize against known dimensions (see [`crate::lti::StateSpace`]).

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != nc) {
        return Err("ragged matrix rows".to_string());
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    to_rows(m).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
    let rows = Vec::<Vec<f64>>::deserialize(d)?;
    from_rows(&rows).map_err(serde::de::Error::custom)
}

/// Serde adapter for `Vec<DMatrix<f64>>` fields.
pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let raw = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
        raw.iter()
            .map(|rows| from_rows(rows).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `BTreeMap<String, DMatrix<f64>>` fields.
pub mod map {
    use super::*;
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        ms: &BTreeMap<String, DMatrix<f64>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        ms.iter()
            .map(|(k, v)| (k.clone(), to_rows(v)))
            .collect::<BTreeMap<String, Vec<Vec<f64>>>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, DMatrix<f64>>, D::Error> {
        let raw = BTreeMap::<String, Vec<Vec<f64>>>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, rows)| {
                from_rows(&rows)
                    .map(|m| (k, m))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}
