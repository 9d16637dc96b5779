//! Report emission: a single serializable structure rendered as JSON,
//! text, or CSV (tables only). JSON output is byte-identical for identical
//! configurations and seeds; wall time is reported in text mode only.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub results: BTreeMap<String, Value>,
    pub residuals: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl Report {
    pub fn new(command: &str, digest: String) -> Self {
        Report {
            command: command.to_string(),
            inputs_digest: digest,
            results: BTreeMap::new(),
            residuals: BTreeMap::new(),
            pass: true,
            wall_time_ms: None,
        }
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn residual(&mut self, key: &str, value: f64) {
        self.residuals.insert(key.to_string(), value);
    }

    pub fn require(&mut self, ok: bool) {
        self.pass &= ok;
    }

    pub fn to_json(&self) -> String {
        let mut clone = Report {
            command: self.command.clone(),
            inputs_digest: self.inputs_digest.clone(),
            results: self.results.clone(),
            residuals: self.residuals.clone(),
            pass: self.pass,
            wall_time_ms: None,
        };
        clone.wall_time_ms = None;
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        out.push_str(&format!("inputs:  {}\n", self.inputs_digest));
        for (k, v) in &self.results {
            out.push_str(&format!("{k}: {}\n", render_value(v)));
        }
        if !self.residuals.is_empty() {
            out.push_str("residuals:\n");
            for (k, v) in &self.residuals {
                out.push_str(&format!("  {k}: {v:.3e}\n"));
            }
        }
        out.push_str(&format!("pass: {}\n", self.pass));
        if let Some(ms) = self.wall_time_ms {
            out.push_str(&format!("wall time: {ms} ms\n"));
        }
        out
    }

    /// CSV of every table-valued result (rows of numbers); scalars are
    /// skipped, matching the table-only CSV contract.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.results {
            if let Value::Array(rows) = v {
                if rows.iter().all(|r| matches!(r, Value::Array(_))) {
                    out.push_str(&format!("# {k}\n"));
                    for row in rows {
                        if let Value::Array(cells) = row {
                            let line: Vec<String> =
                                cells.iter().map(render_value).collect();
                            out.push_str(&line.join(","));
                            out.push('\n');
                        }
                    }
                }
            }
        }
        out
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// FNV-1a over the canonical input description.
pub fn digest(parts: &[&str]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for byte in part.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x100_0000_01b3);
        }
        hash ^= 0xff;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    format!("{hash:016x}")
}

pub fn matrix_value(rows: &[Vec<f64>]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| Value::Array(r.iter().map(|&x| x.into()).collect()))
            .collect(),
    )
}
