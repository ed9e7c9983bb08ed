//! Plain-JSON (de)serialization for ndarray containers: vectors as flat
//! arrays, matrices as row-major arrays of rows.

use ndarray::{Array1, Array2};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub(crate) mod vector {
    use super::*;

    pub(crate) fn serialize<S: Serializer>(v: &Array1<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().map(|x| x.to_vec()).unwrap_or_else(|| v.to_vec()).serialize(s)
    }

    pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array1<f64>, D::Error> {
        Ok(Array1::from(Vec::<f64>::deserialize(d)?))
    }
}

pub(crate) mod matrix {
    use super::*;

    pub(crate) fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
        m.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub(crate) fn from_rows(rows: Vec<Vec<f64>>, ncols_if_empty: usize) -> Result<Array2<f64>, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(ncols_if_empty, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        Array2::from_shape_vec((nrows, ncols), rows.concat()).map_err(|e| e.to_string())
    }

    pub(crate) fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        from_rows(Vec::<Vec<f64>>::deserialize(d)?, 0).map_err(D::Error::custom)
    }
}

pub(crate) mod matrix_list {
    use super::*;

    pub(crate) fn serialize<S: Serializer>(ms: &[Array2<f64>], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(matrix::to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Array2<f64>>, D::Error> {
        Vec::<Vec<Vec<f64>>>::deserialize(d)?
            .into_iter()
            .map(|rows| matrix::from_rows(rows, 0).map_err(D::Error::custom))
            .collect()
    }
}
