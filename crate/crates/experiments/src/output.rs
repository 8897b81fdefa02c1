//! Versioned CSV and JSON outputs.
//!
//! Every CSV starts with a comment line `#schema=<name>.v<version>`
//! followed by the column header. Readers must check the schema line before
//! parsing; columns are only ever appended within a version.

use nodal_core::kacrice::{Method, MomentEstimate};
use serde::Serialize;
use std::io;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// A CSV schema: name and ordered columns.
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [&'static str],
}

pub const CONVERGE_NU: Schema = Schema {
    name: "converge_nu",
    columns: &[
        "config_hash", "R", "seeds", "faults", "nu_hat", "nu_ci_low", "nu_ci_high", "deficit_rate", "deficit_ci",
        "first_seed_nu",
    ],
};

pub const REALIZATIONS: Schema = Schema {
    name: "realizations",
    columns: &["config_hash", "param", "seed", "n", "n_star", "betti_sums", "measure", "fault"],
};

pub const COMPONENTS: Schema = Schema {
    name: "components",
    columns: &[
        "config_hash", "param", "seed", "component", "kind", "closed", "vertices", "total_curvature", "willmore_energy",
        "knot_label", "determinant", "alexander", "fault",
    ],
};

pub const KNOT_CENSUS: Schema = Schema {
    name: "knot_census",
    columns: &["config_hash", "param", "label", "count", "mu", "ci_low", "ci_high", "components", "faults", "component_faults"],
};

pub const BETTI_SCALING: Schema = Schema {
    name: "betti_scaling",
    columns: &["config_hash", "R", "l", "beta_per_volume", "ci_half_width", "seeds", "faults"],
};

pub const WILLMORE_AUDIT: Schema = Schema {
    name: "willmore_audit",
    columns: &[
        "config_hash", "source", "seed", "component", "kind", "total_curvature", "willmore_energy", "knot_label",
        "reference", "ratio", "pass",
    ],
};

pub const KOSTLAN_LOCAL_LIMIT: Schema =
    Schema { name: "kostlan_local_limit", columns: &["config_hash", "d", "sup_difference", "grid_points"] };

pub const KACRICE_VS_EMPIRICAL: Schema = Schema {
    name: "kacrice_vs_empirical",
    columns: &[
        "config_hash", "quantity", "R", "seeds", "faults", "empirical", "empirical_ci", "kac_rice", "kac_rice_ci",
        "relative_gap",
    ],
};

pub fn schema_line(s: &Schema) -> String {
    format!("#schema={}.v{SCHEMA_VERSION}", s.name)
}

/// Writes the schema comment, the header and `rows`.
pub fn write_csv(path: &Path, schema: &Schema, rows: &[Vec<String>]) -> io::Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(schema_line(schema).as_bytes());
    buf.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(schema.columns)?;
        for row in rows {
            debug_assert_eq!(row.len(), schema.columns.len(), "{}", schema.name);
            w.write_record(row)?;
        }
        w.flush()?;
    }
    std::fs::write(path, buf)
}

/// Shortest round-trip float formatting; stable across runs.
pub fn f(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

/// JSON record of one estimate.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateRecord {
    pub operation: String,
    pub spec_hash: String,
    pub parameters: serde_json::Value,
    pub value: f64,
    pub half_width: f64,
    pub samples: usize,
    pub method: Method,
}

impl EstimateRecord {
    pub fn new(operation: &str, spec_hash: &str, parameters: serde_json::Value, e: &MomentEstimate) -> Self {
        Self {
            operation: operation.into(),
            spec_hash: spec_hash.into(),
            parameters,
            value: e.value,
            half_width: e.half_width,
            samples: e.samples,
            method: e.method,
        }
    }
}

/// Pretty JSON with a top-level `schema` field.
pub fn write_json<T: Serialize>(path: &Path, schema: &str, body: &T) -> io::Result<()> {
    let mut value = serde_json::json!({ "schema": format!("{schema}.v{SCHEMA_VERSION}") });
    let body = serde_json::to_value(body).map_err(io::Error::other)?;
    if let (Some(obj), serde_json::Value::Object(extra)) = (value.as_object_mut(), body) {
        obj.extend(extra);
    }
    let text = serde_json::to_string_pretty(&value).map_err(io::Error::other)?;
    std::fs::write(path, text + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.csv");
        let row: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        write_csv(&p, &KOSTLAN_LOCAL_LIMIT, &[row]).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("#schema=kostlan_local_limit.v1"));
        assert_eq!(lines.next(), Some("config_hash,d,sup_difference,grid_points"));
        assert_eq!(lines.next(), Some("0,1,2,3"));
    }
}
