use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Flagged,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub code_version: String,
    pub seed: Option<u64>,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub schema_version: u32,
    pub campaign: String,
    pub kind: String,
    pub params: BTreeMap<String, Value>,
    pub status: Status,
    pub metrics: BTreeMap<String, Value>,
    /// The violating input for failed rows.
    pub witness: Option<Value>,
    pub runtime_ms: f64,
    pub provenance: Provenance,
}

impl ReportRow {
    /// The row without run-dependent fields (runtime and worker count).
    pub fn canonical(&self) -> ReportRow {
        let mut row = self.clone();
        row.runtime_ms = 0.0;
        row.provenance.workers = 0;
        row
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("rows serialise")
    }
}

pub fn write_jsonl<W: Write>(mut out: W, rows: &[ReportRow]) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<ReportRow>, String> {
    let mut rows = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", k + 1))?);
    }
    Ok(rows)
}

#[derive(Serialize)]
struct FlatRow<'a> {
    schema_version: u32,
    campaign: &'a str,
    kind: &'a str,
    status: Status,
    params: String,
    metrics: String,
    witness: String,
    runtime_ms: f64,
    code_version: &'a str,
    seed: Option<u64>,
    workers: usize,
}

/// One line per row; nested maps are embedded as JSON strings.
pub fn write_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(FlatRow {
            schema_version: r.schema_version,
            campaign: &r.campaign,
            kind: &r.kind,
            status: r.status,
            params: serde_json::to_string(&r.params).expect("serialisable"),
            metrics: serde_json::to_string(&r.metrics).expect("serialisable"),
            witness: r.witness.as_ref().map(|w| w.to_string()).unwrap_or_default(),
            runtime_ms: r.runtime_ms,
            code_version: &r.provenance.code_version,
            seed: r.provenance.seed,
            workers: r.provenance.workers,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn row() -> ReportRow {
        ReportRow {
            schema_version: SCHEMA_VERSION,
            campaign: "sf-00".into(),
            kind: "sf".into(),
            params: BTreeMap::from([("p".to_string(), json!(5))]),
            status: Status::Pass,
            metrics: BTreeMap::from([("ratio".to_string(), json!(0.75))]),
            witness: None,
            runtime_ms: 3.5,
            provenance: Provenance {
                code_version: "v".into(),
                seed: Some(1),
                workers: 4,
            },
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let rows = vec![row(), row()];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &rows).unwrap();
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("schema_version,campaign,kind,status"));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn canonical_drops_volatile_fields() {
        let mut other = row();
        other.runtime_ms = 99.0;
        other.provenance.workers = 1;
        assert_eq!(row().canonical_json(), other.canonical_json());
        assert!(Status::Fail > Status::Flagged && Status::Flagged > Status::Pass);
    }
}
