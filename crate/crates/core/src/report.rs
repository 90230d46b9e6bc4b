//! Versioned JSON run reports.
//!
//! Keys are emitted in sorted order and floats in shortest round-trip form, so
//! identical inputs give byte-identical reports. Non-finite floats become `null`.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::grid::Grid;
use crate::obstruction::Classification;

pub const SCHEMA: &str = "beltrami-report/1";

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    entries: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut entries = Map::new();
        entries.insert("schema".into(), SCHEMA.into());
        entries.insert("command".into(), command.into());
        Report { entries }
    }

    /// Adds or replaces a top-level entry.
    pub fn set(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.entries.insert(key.into(), v);
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.entries).expect("a JSON map always serialises");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

pub fn grid_json(grid: &Grid) -> Value {
    serde_json::json!({
        "origin": grid.origin(),
        "spacing": grid.spacing(),
        "dims": grid.dims(),
        "coords": grid.coords().keyword(),
    })
}

/// The classification block: verdict, predicted solution space, tolerance,
/// torsion sup norms and the classifier's diagnostics.
pub fn classification_json(c: &Classification) -> Value {
    let mut m = Map::new();
    m.insert("case".into(), c.case.label().into());
    if let crate::obstruction::Case::NonUmbilic { second_level_vanishes } = c.case {
        m.insert("second_level_vanishes".into(), second_level_vanishes.into());
    }
    m.insert("predicted_solution_space".into(), c.predicted_solution_space.label().into());
    m.insert("eps".into(), serde_json::to_value(c.diagnostics.eps).unwrap_or(Value::Null));
    m.insert("sup_norms".into(), serde_json::to_value(c.diagnostics.sup_norms).unwrap_or(Value::Null));
    m.insert("diagnostics".into(), serde_json::to_value(&c.diagnostics).unwrap_or(Value::Null));
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_sorted_and_schema_is_present() {
        let mut r = Report::new("demo");
        r.set("zeta", 1.5).set("alpha", [1, 2]).set("nan", f64::NAN);
        let s = r.to_json();
        assert!(s.find("\"alpha\"").unwrap() < s.find("\"zeta\"").unwrap());
        assert!(s.contains("\"schema\": \"beltrami-report/1\""));
        assert!(s.contains("\"nan\": null"));
        assert_eq!(s, r.clone().to_json());
    }

    #[test]
    fn grid_descriptor() {
        let g = Grid::cartesian([0.0; 3], [1.0; 3], [5, 5, 5]).unwrap();
        let v = grid_json(&g);
        assert_eq!(v["dims"], serde_json::json!([5, 5, 5]));
        assert_eq!(v["coords"], "cartesian");
        assert_eq!(v["spacing"][0], 0.25);
    }
}
