//! JSON-lines report records shared by the CLI and the verification suites.

use serde::Serialize;
use std::io::Write;

/// One ε-scan sample.
#[derive(Debug, Clone, Serialize)]
pub struct EpsRecord {
    pub case: String,
    pub eps: f64,
    pub value_re: f64,
    pub value_im: f64,
    /// Quadrature refinement delta for this sample.
    pub err: f64,
}

/// One axiom-battery line.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub axiom: String,
    pub order: u32,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// One splitting-pairing line.
#[derive(Debug, Clone, Serialize)]
pub struct SplitRecord {
    pub kernel: String,
    pub omega: i32,
    /// Window radius used for the Taylor subtraction.
    pub window: f64,
    pub value_re: f64,
    pub value_im: f64,
}

/// One verification-suite line.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub suite: String,
    pub case: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Serializes records one JSON object per line.
pub fn write_jsonl<T: Serialize>(mut out: impl Write, records: &[T]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_one_record_per_line() {
        let recs = vec![
            AxiomReport {
                axiom: "I".into(),
                order: 2,
                residual: 1e-9,
                tolerance: 1e-6,
                pass: true,
                detail: None,
            },
            AxiomReport {
                axiom: "III".into(),
                order: 1,
                residual: 2e-3,
                tolerance: 1e-10,
                pass: false,
                detail: Some("krein twist removed".into()),
            },
        ];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.trim_end().split('\n').collect();
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(v["axiom"], "I");
        assert_eq!(v["pass"], true);
        assert!(v.get("detail").is_none());
        let w: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(w["detail"], "krein twist removed");
    }
}
