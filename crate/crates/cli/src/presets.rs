//! Figure presets shipped in `presets/figures.toml`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

pub const FIGURE_PRESETS: &str = include_str!("../presets/figures.toml");

/// Inclusive `lo..=hi` grid with spacing `step`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        if !(self.step > 0.0 && self.lo <= self.hi && self.lo.is_finite() && self.hi.is_finite()) {
            return Err(CliError::validation(format!(
                "range {}..{} step {} is empty or malformed",
                self.lo, self.hi, self.step
            )));
        }
        Ok(vise_core::sweep::grid(self.lo, self.hi, self.step))
    }
}

pub fn presets_version() -> CliResult<i64> {
    let doc: Table = FIGURE_PRESETS
        .parse()
        .map_err(|e| CliError::Io(format!("bundled presets: {e}")))?;
    Ok(doc.get("version").and_then(Value::as_integer).unwrap_or(0))
}

/// The preset table for figure `id` with `key=value` overrides applied.
pub fn figure_preset<T: DeserializeOwned>(id: u8, overrides: &[String]) -> CliResult<T> {
    let mut doc: Table = FIGURE_PRESETS
        .parse()
        .map_err(|e| CliError::Io(format!("bundled presets: {e}")))?;
    let key = format!("figure{id}");
    let mut table = match doc.remove(&key) {
        Some(Value::Table(t)) => t,
        _ => return Err(CliError::validation(format!("no preset for figure {id}"))),
    };
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    Value::Table(table)
        .try_into()
        .map_err(|e| CliError::validation(format!("figure {id} parameters: {e}")))
}

fn apply_override(table: &mut Table, item: &str) -> CliResult<()> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("override {item:?} is not key=value")))?;
    let value = parse_value(raw.trim())?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one piece");
    let mut cur = table;
    for k in parents {
        cur = match cur.get_mut(*k) {
            Some(Value::Table(t)) => t,
            _ => return Err(CliError::validation(format!("unknown preset key {path:?}"))),
        };
    }
    match cur.get(*last) {
        Some(old) if old.type_str() == value.type_str() || (old.is_float() && value.is_integer()) => {
            let value = match (old, value) {
                (Value::Float(_), Value::Integer(i)) => Value::Float(i as f64),
                (_, v) => v,
            };
            cur.insert(last.to_string(), value);
            Ok(())
        }
        Some(old) => Err(CliError::validation(format!(
            "preset key {path:?} holds a {}, got a {}",
            old.type_str(),
            value.type_str()
        ))),
        None => Err(CliError::validation(format!("unknown preset key {path:?}"))),
    }
}

fn parse_value(raw: &str) -> CliResult<Value> {
    let doc: Table = format!("v = {raw}")
        .parse()
        .map_err(|_| CliError::validation(format!("cannot parse override value {raw:?}")))?;
    Ok(doc["v"].clone())
}
