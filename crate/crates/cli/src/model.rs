//! Model files: a scenario table, named positions and named assets.
//!
//! JSON is the canonical format. CSV is accepted for spreadsheet exports:
//! the header is `state,prob,<names...>` and a column named `NAME@PRICE`
//! is read as an asset with that price.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use riskcap::{Position, ScenarioSpace, TradedAsset};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRow {
    pub state: String,
    /// Decimal literal, kept verbatim so the file round-trips.
    pub prob: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetEntry {
    pub price: f64,
    pub payoff: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub scenario: Vec<StateRow>,
    #[serde(default)]
    pub positions: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub assets: BTreeMap<String, AssetEntry>,
    #[serde(default)]
    pub defaults: Defaults,
}

/// How far the parsed probabilities were moved to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Renormalization {
    pub input_sum: f64,
    pub max_adjustment: f64,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub file: ModelFile,
    pub space: ScenarioSpace,
    pub renormalization: Renormalization,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::FileParse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| csv_error(&e, "header"))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect::<Vec<_>>();
        if headers.len() < 2 || headers[0] != "state" || headers[1] != "prob" {
            return Err(CliError::FileParse {
                location: "row 1".into(),
                message: "header must start with `state,prob`".into(),
            });
        }

        enum Column {
            Position(String),
            Asset(String, f64),
        }
        let mut columns = Vec::new();
        for (j, h) in headers.iter().enumerate().skip(2) {
            let location = || format!("row 1, column {}", j + 1);
            if h.is_empty() {
                return Err(CliError::FileParse {
                    location: location(),
                    message: "empty column name".into(),
                });
            }
            columns.push(match h.split_once('@') {
                Some((name, price)) => {
                    let price = price.trim().parse::<f64>().map_err(|_| CliError::FileParse {
                        location: location(),
                        message: format!("asset price `{price}` is not a number"),
                    })?;
                    Column::Asset(name.trim().to_string(), price)
                }
                None => Column::Position(h.clone()),
            });
        }

        let mut scenario = Vec::new();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); columns.len()];
        for (r, record) in reader.records().enumerate() {
            let row = r + 2;
            let record = record.map_err(|e| csv_error(&e, &format!("row {row}")))?;
            if record.len() != headers.len() {
                return Err(CliError::FileParse {
                    location: format!("row {row}"),
                    message: format!("expected {} fields, found {}", headers.len(), record.len()),
                });
            }
            scenario.push(StateRow {
                state: record[0].trim().to_string(),
                prob: record[1].trim().to_string(),
            });
            for (j, column) in values.iter_mut().enumerate() {
                let cell = record[j + 2].trim();
                let v = cell.parse::<f64>().map_err(|_| CliError::FileParse {
                    location: format!("row {row}, column {}", j + 3),
                    message: format!("`{cell}` is not a number"),
                })?;
                column.push(v);
            }
        }

        let mut file = ModelFile {
            scenario,
            positions: BTreeMap::new(),
            assets: BTreeMap::new(),
            defaults: Defaults::default(),
        };
        for (column, payoff) in columns.into_iter().zip(values) {
            let name = match &column {
                Column::Position(n) | Column::Asset(n, _) => n.clone(),
            };
            if file.positions.contains_key(&name) || file.assets.contains_key(&name) {
                return Err(CliError::FileParse {
                    location: "row 1".into(),
                    message: format!("duplicate column name `{name}`"),
                });
            }
            match column {
                Column::Position(_) => {
                    file.positions.insert(name, payoff);
                }
                Column::Asset(_, price) => {
                    file.assets.insert(name, AssetEntry { price, payoff });
                }
            }
        }
        Ok(file)
    }

    /// Canonical, byte-stable JSON rendering: keys sorted, numbers in
    /// shortest round-trip form, probabilities kept as written.
    pub fn to_canonical_json(&self) -> String {
        crate::output::json(&serde_json::to_value(self).expect("model serializes"))
    }

    /// Checks every column against the scenario table and builds the space.
    pub fn validate(self) -> Result<Model, CliError> {
        let n = self.scenario.len();
        for (name, values) in &self.positions {
            check_column("positions", name, values.len(), n)?;
        }
        for (name, asset) in &self.assets {
            check_column("assets", name, asset.payoff.len(), n)?;
            if self.positions.contains_key(name) {
                return Err(CliError::FileParse {
                    location: format!("assets.{name}"),
                    message: "name is used by both a position and an asset".into(),
                });
            }
        }
        let labels: Vec<String> = self.scenario.iter().map(|r| r.state.clone()).collect();
        let literals: Vec<&str> = self.scenario.iter().map(|r| r.prob.as_str()).collect();
        let space = ScenarioSpace::from_decimal(labels, &literals)?;
        let max_adjustment = literals
            .iter()
            .zip(space.probs())
            .map(|(lit, p)| (lit.trim().parse::<f64>().unwrap_or(*p) - p).abs())
            .fold(0.0, f64::max);
        let renormalization = Renormalization {
            input_sum: space.input_sum(),
            max_adjustment,
        };
        Ok(Model {
            file: self,
            space,
            renormalization,
        })
    }
}

fn check_column(section: &str, name: &str, found: usize, expected: usize) -> Result<(), CliError> {
    if found != expected {
        return Err(CliError::FileParse {
            location: format!("{section}.{name}"),
            message: format!("{found} values for {expected} states"),
        });
    }
    Ok(())
}

fn csv_error(e: &csv::Error, fallback: &str) -> CliError {
    let location = match e.position() {
        Some(p) => format!("row {}", p.line()),
        None => fallback.to_string(),
    };
    CliError::FileParse {
        location,
        message: e.to_string(),
    }
}

impl Model {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let is_csv = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"));
        let file = if is_csv {
            ModelFile::from_csv(&text)?
        } else {
            ModelFile::from_json(&text)?
        };
        file.validate()
    }

    pub fn position(&self, name: &str) -> Result<Position, CliError> {
        let values = self.file.positions.get(name).ok_or_else(|| CliError::NameNotFound {
            kind: "position",
            name: name.into(),
        })?;
        Ok(Position::new(values.clone())?)
    }

    pub fn asset(&self, name: &str) -> Result<TradedAsset, CliError> {
        let entry = self.file.assets.get(name).ok_or_else(|| CliError::NameNotFound {
            kind: "asset",
            name: name.into(),
        })?;
        Ok(TradedAsset::new(&self.space, entry.price, Position::new(entry.payoff.clone())?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_STATE: &str = r#"{
  "scenario": [
    {"state": "w1", "prob": "0.05"},
    {"state": "w2", "prob": "0.06"},
    {"state": "w3", "prob": "0.89"}
  ],
  "positions": {"X3": [0, 0, 1]},
  "assets": {"bond": {"price": 1, "payoff": [0, 1, 1]}},
  "defaults": {"alpha": 0.1, "acceptance": "var"}
}"#;

    #[test]
    fn json_round_trip_is_byte_stable() {
        let parsed = ModelFile::from_json(THREE_STATE).unwrap();
        let first = parsed.to_canonical_json();
        let reparsed = ModelFile::from_json(&first).unwrap();
        assert_eq!(parsed, reparsed);
        assert_eq!(first, reparsed.to_canonical_json());
    }

    #[test]
    fn csv_matches_json() {
        let csv = "state,prob,X3,bond@1\nw1,0.05,0,0\nw2,0.06,0,1\nw3,0.89,1,1\n";
        let mut from_csv = ModelFile::from_csv(csv).unwrap();
        from_csv.defaults = Defaults {
            alpha: Some(0.1),
            acceptance: Some("var".into()),
        };
        assert_eq!(from_csv, ModelFile::from_json(THREE_STATE).unwrap());
    }

    #[test]
    fn csv_errors_carry_locations() {
        let bad_cell = "state,prob,X\nw1,0.5,1\nw2,0.5,abc\n";
        match ModelFile::from_csv(bad_cell) {
            Err(CliError::FileParse { location, .. }) => assert_eq!(location, "row 3, column 3"),
            other => panic!("{other:?}"),
        }
        let bad_header = "label,prob\nw1,1\n";
        assert!(matches!(ModelFile::from_csv(bad_header), Err(CliError::FileParse { .. })));
        let bad_price = "state,prob,b@x\nw1,1,1\n";
        match ModelFile::from_csv(bad_price) {
            Err(CliError::FileParse { location, .. }) => assert_eq!(location, "row 1, column 3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_errors_carry_locations() {
        match ModelFile::from_json("{\n  \"scenario\": [1]\n}") {
            Err(CliError::FileParse { location, .. }) => assert!(location.starts_with("line 2"), "{location}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation() {
        let mut file = ModelFile::from_json(THREE_STATE).unwrap();
        file.positions.insert("short".into(), vec![1.0]);
        assert!(matches!(file.validate(), Err(CliError::FileParse { location, .. }) if location == "positions.short"));

        let model = ModelFile::from_json(THREE_STATE).unwrap().validate().unwrap();
        assert_eq!(model.renormalization.input_sum, 1.0);
        assert!(matches!(model.asset("nope"), Err(CliError::NameNotFound { kind: "asset", .. })));
        assert!(model.position("X3").is_ok());
    }

    #[test]
    fn renormalization_is_reported() {
        let text = THREE_STATE.replace("\"0.89\"", "\"0.8900000000001\"");
        let model = ModelFile::from_json(&text).unwrap().validate().unwrap();
        assert!(model.renormalization.max_adjustment > 0.0);
        assert!(model.renormalization.max_adjustment < 1e-12);
        assert_eq!(model.space.probs().iter().sum::<f64>(), 1.0);
    }
}
