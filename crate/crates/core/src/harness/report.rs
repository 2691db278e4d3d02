use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Per-replica raw values, one row per replica.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub samples: BTreeMap<String, u64>,
    pub stats: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    /// Seconds; kept out of the JSON so reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_clock: f64,
    #[serde(skip)]
    pub raw: RawTable,
}

impl ExperimentReport {
    pub fn new(name: &str, config: Value, seeds: Vec<u64>) -> Self {
        ExperimentReport {
            name: name.to_string(),
            config,
            seeds,
            samples: BTreeMap::new(),
            stats: BTreeMap::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            wall_clock: 0.0,
            raw: RawTable::default(),
        }
    }

    pub fn stat(&mut self, key: &str, v: impl Serialize) {
        self.stats.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn count(&mut self, key: &str, n: u64) {
        self.samples.insert(key.to_string(), n);
    }

    pub fn verdict(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict { name: name.to_string(), pass, detail: detail.into() });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "== {} ({:.2}s)", self.name, self.wall_clock);
        let width = self.stats.keys().chain(self.samples.keys()).map(|k| k.len()).max().unwrap_or(0);
        for (k, v) in &self.samples {
            let _ = writeln!(s, "  {k:<width$}  {v}");
        }
        for (k, v) in &self.stats {
            let _ = writeln!(s, "  {k:<width$}  {v}");
        }
        for v in &self.verdicts {
            let _ = writeln!(s, "  [{}] {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.raw.columns.join(",");
        s.push('\n');
        for r in &self.raw.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}
