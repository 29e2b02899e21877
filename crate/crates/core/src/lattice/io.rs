//! Text serialisation of lattice fields.
//!
//! Layout: one JSON header line
//! `{"n":..,"spacing":..,"algebra":..,"field_kind":"scalar"|"vector","dim":..}`
//! followed by one value per line in the flat storage order (site-major,
//! then spatial component for vector fields, then algebra index). Values are
//! written in Rust's shortest round-trip form, so reading back is exact.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{LatticeSpec, ScalarAlgebraField, VectorAlgebraField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Scalar,
    Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n: usize,
    pub spacing: f64,
    pub algebra: String,
    pub field_kind: FieldKind,
    pub dim: usize,
}

fn write_body<W: Write>(mut w: W, header: &FieldHeader, data: &[f64]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    writeln!(w)?;
    for v in data {
        writeln!(w, "{v:?}")?;
    }
    Ok(())
}

pub fn write_vector_field<W: Write>(w: W, algebra: &str, f: &VectorAlgebraField) -> Result<()> {
    let header = FieldHeader {
        n: f.lattice().n(),
        spacing: f.lattice().spacing(),
        algebra: algebra.to_string(),
        field_kind: FieldKind::Vector,
        dim: f.dim(),
    };
    write_body(w, &header, f.data())
}

pub fn write_scalar_field<W: Write>(w: W, algebra: &str, f: &ScalarAlgebraField) -> Result<()> {
    let header = FieldHeader {
        n: f.lattice().n(),
        spacing: f.lattice().spacing(),
        algebra: algebra.to_string(),
        field_kind: FieldKind::Scalar,
        dim: f.dim(),
    };
    write_body(w, &header, f.data())
}

fn read_body<R: BufRead>(r: R) -> Result<(FieldHeader, Vec<f64>)> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Malformed("missing field header".into()))??;
    let header: FieldHeader = serde_json::from_str(&first)?;
    let mut data = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        data.push(
            t.parse::<f64>()
                .map_err(|e| Error::Malformed(format!("value {i}: {e}")))?,
        );
    }
    Ok((header, data))
}

pub fn read_vector_field<R: BufRead>(r: R) -> Result<(FieldHeader, VectorAlgebraField)> {
    let (h, data) = read_body(r)?;
    if h.field_kind != FieldKind::Vector {
        return Err(Error::Malformed("expected a vector field".into()));
    }
    let lat = LatticeSpec::new(h.n, h.spacing)?;
    let f = VectorAlgebraField::from_data(lat, h.dim, data)?;
    Ok((h, f))
}

pub fn read_scalar_field<R: BufRead>(r: R) -> Result<(FieldHeader, ScalarAlgebraField)> {
    let (h, data) = read_body(r)?;
    if h.field_kind != FieldKind::Scalar {
        return Err(Error::Malformed("expected a scalar field".into()));
    }
    let lat = LatticeSpec::new(h.n, h.spacing)?;
    let f = ScalarAlgebraField::from_data(lat, h.dim, data)?;
    Ok((h, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn vector_field_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 8 * 3 * 3)) {
            let lat = LatticeSpec::new(2, 0.25).unwrap();
            let f = VectorAlgebraField::from_data(lat, 3, values).unwrap();
            let mut buf = Vec::new();
            write_vector_field(&mut buf, "su2", &f).unwrap();
            let (h, g) = read_vector_field(buf.as_slice()).unwrap();
            prop_assert_eq!(h.algebra, "su2");
            prop_assert_eq!(g, f);
        }
    }

    #[test]
    fn kind_mismatch_rejected() {
        let lat = LatticeSpec::new(2, 1.0).unwrap();
        let f = ScalarAlgebraField::zeros(lat, 3);
        let mut buf = Vec::new();
        write_scalar_field(&mut buf, "su2", &f).unwrap();
        assert!(read_vector_field(buf.as_slice()).is_err());
        let (_, back) = read_scalar_field(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn truncated_data_rejected() {
        let text = "{\"n\":2,\"spacing\":1.0,\"algebra\":\"su2\",\"field_kind\":\"scalar\",\"dim\":3}\n1.0\n2.0\n";
        assert!(matches!(read_scalar_field(text.as_bytes()), Err(Error::Dimension(_))));
    }
}
