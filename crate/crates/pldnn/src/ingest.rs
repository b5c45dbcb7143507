//! Tabular dataset ingestion: a TOML-described column schema, expansion of
//! attribute values into closed-world literal events, and conflict
//! detection between rows that share a feature vector but disagree on the
//! target.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::learning::Transition;
use crate::reasoning::Event;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Feature,
    Target,
    Ignore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Boolean,
    Categorical,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSchema {
    pub name: String,
    pub role: ColumnRole,
    pub kind: ColumnKind,
    /// Allowed values for categorical columns; required for strict
    /// domain checking and sibling-negative expansion.
    #[serde(default)]
    pub domain: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    #[serde(rename = "column")]
    pub columns: Vec<ColumnSchema>,
}

impl DatasetSchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: DatasetSchema =
            toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for col in &self.columns {
            if seen.insert(col.name.clone(), ()).is_some() {
                return Err(Error::Schema(format!("duplicate column '{}'", col.name)));
            }
            if col.kind == ColumnKind::Categorical
                && col.role != ColumnRole::Ignore
                && col.domain.as_ref().map_or(true, |d| d.is_empty())
            {
                return Err(Error::Schema(format!(
                    "categorical column '{}' needs a non-empty domain",
                    col.name
                )));
            }
        }
        let has = |role| self.columns.iter().any(|c| c.role == role);
        if !has(ColumnRole::Feature) || !has(ColumnRole::Target) {
            return Err(Error::Schema(
                "schema needs at least one feature and one target column".into(),
            ));
        }
        Ok(())
    }
}

/// Truthy/falsy spellings accepted for boolean cells.
fn parse_boolean(value: &str) -> Option<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "y" => Some(true),
        "0" | "false" | "f" | "no" | "n" => Some(false),
        _ => None,
    }
}

fn is_missing(value: &str) -> bool {
    let v = value.trim();
    v.is_empty() || v == "?"
}

/// Expands one cell into literals: booleans become `+name`/`-name`;
/// categoricals become `+name=value` plus a `-name=v` for every other
/// domain value (one-hot, closed world). Labels go into the given event.
pub fn expand_attribute(
    column: &ColumnSchema,
    value: &str,
    strict: bool,
    event: &mut Event,
) -> Result<()> {
    let value = value.trim();
    match column.kind {
        ColumnKind::Boolean => {
            let truth = parse_boolean(value).ok_or_else(|| {
                Error::Value(format!(
                    "column '{}': '{value}' is not a boolean",
                    column.name
                ))
            })?;
            if truth {
                event.add_positive(&column.name);
            } else {
                event.add_negative(&column.name)?;
            }
        }
        ColumnKind::Categorical => {
            let domain = column
                .domain
                .as_ref()
                .ok_or_else(|| Error::Schema(format!("column '{}' has no domain", column.name)))?;
            if !domain.iter().any(|d| d == value) {
                if strict {
                    return Err(Error::Value(format!(
                        "column '{}': '{value}' not in domain",
                        column.name
                    )));
                }
                // Lenient mode widens the one-hot on the fly: the unseen
                // value becomes its own literal, siblings still negated.
                event.add_positive(&format!("{}={}", column.name, value));
                for sibling in domain {
                    event.add_negative(&format!("{}={}", column.name, sibling))?;
                }
                return Ok(());
            }
            for candidate in domain {
                let label = format!("{}={}", column.name, candidate);
                if candidate == value {
                    event.add_positive(&label);
                } else {
                    event.add_negative(&label)?;
                }
            }
        }
    }
    Ok(())
}

/// A training transition plus the 1-based data row it came from.
#[derive(Clone, Debug)]
pub struct RecordTransition {
    pub transition: Transition,
    pub row: usize,
}

/// A row skipped during loading and why.
#[derive(Clone, Debug)]
pub struct RowError {
    pub row: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct LoadReport {
    pub transitions: Vec<RecordTransition>,
    pub skipped: Vec<RowError>,
}

/// Loads a headered CSV file against the schema. Feature columns feed the
/// pre-event, target columns the post-event. Rows with missing cells
/// ("?" or empty) are skipped and reported, never silently dropped. A
/// header missing a schema column is a hard `Schema` error; in strict
/// mode an out-of-domain categorical value is a hard `Value` error.
pub fn load_records(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    strict: bool,
) -> Result<LoadReport> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| Error::Schema(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(e.to_string()))?
        .clone();
    let mut positions = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        if col.role == ColumnRole::Ignore {
            positions.push(None);
            continue;
        }
        let idx = headers
            .iter()
            .position(|h| h == col.name)
            .ok_or_else(|| Error::Schema(format!("header missing column '{}'", col.name)))?;
        positions.push(Some(idx));
    }

    let mut report = LoadReport::default();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.skipped.push(RowError {
                    row,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let mut pre = Event::default();
        let mut post = Event::default();
        let mut row_error = None;
        for (col, pos) in schema.columns.iter().zip(&positions) {
            let Some(pos) = pos else { continue };
            let value = record.get(*pos).unwrap_or("");
            if is_missing(value) {
                row_error = Some(format!("column '{}': missing value", col.name));
                break;
            }
            let event = match col.role {
                ColumnRole::Feature => &mut pre,
                ColumnRole::Target => &mut post,
                ColumnRole::Ignore => unreachable!(),
            };
            if let Err(e) = expand_attribute(col, value, strict, event) {
                if strict {
                    return Err(e);
                }
                row_error = Some(e.to_string());
                break;
            }
        }
        match row_error {
            Some(message) => report.skipped.push(RowError { row, message }),
            None => report.transitions.push(RecordTransition {
                transition: Transition::new(pre, post),
                row,
            }),
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Default)]
pub struct DedupReport {
    pub transitions: Vec<RecordTransition>,
    /// Rows removed because their pre-event appeared with disagreeing
    /// post-events.
    pub conflicting_rows: Vec<usize>,
    /// Exact-duplicate rows collapsed into their first occurrence.
    pub duplicate_rows: Vec<usize>,
}

/// Groups records by pre-event. Groups whose post-events disagree are
/// excluded entirely; exact duplicates keep their first occurrence.
pub fn dedupe_conflicts(records: Vec<RecordTransition>) -> DedupReport {
    let mut groups: BTreeMap<String, Vec<RecordTransition>> = BTreeMap::new();
    let mut order = Vec::new();
    for record in records {
        let key = format!("{:?}", record.transition.pre);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(record);
    }
    let mut report = DedupReport::default();
    for key in order {
        let group = groups.remove(&key).unwrap();
        let conflicting = group
            .iter()
            .any(|r| r.transition.post != group[0].transition.post);
        if conflicting {
            report.conflicting_rows.extend(group.iter().map(|r| r.row));
        } else {
            report
                .duplicate_rows
                .extend(group.iter().skip(1).map(|r| r.row));
            report.transitions.push(group.into_iter().next().unwrap());
        }
    }
    report
}
