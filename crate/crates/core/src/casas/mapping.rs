use std::collections::BTreeMap;

use serde::Deserialize;

use crate::placing::SensorKind;

/// Table-driven normalization of raw sensor records.
///
/// ```toml
/// strip_leading_zeros = true
/// skip = ["T", "L", "E"]
/// [kinds]
/// M = "M"
/// AD1-B = "F"
/// [values]
/// ON = true
/// OFF = false
/// [rename]
/// "AD1-B" = "F1"
/// [analog]
/// "AD1-B" = 0.05
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mapping {
    /// `D07` becomes `D7`.
    #[serde(default)]
    pub strip_leading_zeros: bool,
    /// Raw id prefixes whose records are discarded.
    #[serde(default)]
    pub skip: Vec<String>,
    /// Id prefix → kind; the longest matching prefix wins.
    pub kinds: BTreeMap<String, SensorKind>,
    /// Value token (case-insensitive) → state.
    pub values: BTreeMap<String, bool>,
    /// Raw id → engine id, applied before zero stripping.
    #[serde(default)]
    pub rename: BTreeMap<String, String>,
    /// Raw ids with numeric values; ⊤ when the value exceeds the threshold.
    #[serde(default)]
    pub analog: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Normalized {
    Event { sensor: String, kind: SensorKind, value: bool },
    Skipped,
}

impl Mapping {
    pub fn parse(text: &str) -> Result<Mapping, String> {
        let mut m: Mapping = toml::from_str(text).map_err(|e| e.to_string())?;
        m.values = m.values.into_iter().map(|(k, v)| (k.to_ascii_uppercase(), v)).collect();
        Ok(m)
    }

    /// The mapping shipped for the CASAS apartment.
    pub fn builtin() -> Mapping {
        Mapping::parse(crate::adl::builtin_asset("data/casas_mapping.toml").unwrap_or_default())
            .expect("builtin mapping parses")
    }

    pub fn value(&self, token: &str) -> Option<bool> {
        self.values
            .get(&token.to_ascii_uppercase())
            .copied()
            .or_else(|| crate::fluent::parse_state(token))
    }

    fn kind_of(&self, id: &str) -> Option<SensorKind> {
        self.kinds
            .iter()
            .filter(|(prefix, _)| id.starts_with(prefix.as_str()))
            .max_by_key(|(prefix, _)| prefix.len())
            .map(|(_, k)| *k)
    }

    pub fn sensor_id(&self, raw: &str) -> String {
        if let Some(id) = self.rename.get(raw) {
            return id.clone();
        }
        if !self.strip_leading_zeros {
            return raw.to_string();
        }
        let split = raw.find(|c: char| c.is_ascii_digit()).unwrap_or(raw.len());
        let (head, digits) = raw.split_at(split);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return raw.to_string();
        }
        let trimmed = digits.trim_start_matches('0');
        format!("{head}{}", if trimmed.is_empty() { "0" } else { trimmed })
    }

    pub fn normalize(&self, raw_id: &str, raw_value: &str) -> Result<Normalized, String> {
        if self.skip.iter().any(|p| raw_id.starts_with(p.as_str())) {
            return Ok(Normalized::Skipped);
        }
        let sensor = self.sensor_id(raw_id);
        let kind = self
            .kind_of(raw_id)
            .or_else(|| self.kind_of(&sensor))
            .ok_or_else(|| format!("no sensor kind for `{raw_id}`"))?;
        let value = match self.analog.get(raw_id) {
            Some(threshold) => {
                let v: f64 = raw_value
                    .parse()
                    .map_err(|_| format!("analog value `{raw_value}` is not a number"))?;
                v > *threshold
            }
            None => self
                .value(raw_value)
                .ok_or_else(|| format!("unknown value token `{raw_value}`"))?,
        };
        Ok(Normalized::Event { sensor, kind, value })
    }
}
