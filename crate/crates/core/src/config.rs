//! Flat `key = value` configuration files.
//!
//! Keys are the fields of [`ScenarioConfig`] and [`ExperimentParams`].
//! `#` starts a comment. Values are numbers, `true`/`false`, `null`, bare
//! words, or comma-separated lists (brackets optional).

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::channel::ScenarioConfig;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentKind, ExperimentParams};

fn to_map<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("config structs serialize to objects"),
    }
}

fn scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn parse_value(raw: &str, current: &Value) -> Value {
    if current.is_array() {
        let inner = raw
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .unwrap_or(raw)
            .trim();
        if inner.is_empty() {
            return Value::Array(vec![]);
        }
        return Value::Array(inner.split(',').map(|v| scalar(v.trim())).collect());
    }
    scalar(raw)
}

fn from_map<T: DeserializeOwned>(map: &Map<String, Value>) -> std::result::Result<T, String> {
    serde_json::from_value(Value::Object(map.clone())).map_err(|e| e.to_string())
}

/// Parses a configuration on top of the defaults for `kind`.
pub fn parse_config(
    text: &str,
    kind: ExperimentKind,
) -> Result<(ScenarioConfig, ExperimentParams)> {
    let mut scenario = to_map(&ScenarioConfig::default());
    let mut params = to_map(&ExperimentParams::defaults_for(kind));
    let mut seen: Vec<String> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::Config {
            line: line_no,
            message,
        };
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found {content:?}")))?;
        let (key, raw) = (key.trim(), raw.trim());
        if seen.iter().any(|k| k == key) {
            return Err(err(format!("duplicate key {key:?}")));
        }
        seen.push(key.to_string());
        let checked = if let Some(current) = scenario.get(key) {
            let value = parse_value(raw, current);
            scenario.insert(key.to_string(), value);
            from_map::<ScenarioConfig>(&scenario).map(|_| ())
        } else if let Some(current) = params.get(key) {
            let value = parse_value(raw, current);
            params.insert(key.to_string(), value);
            from_map::<ExperimentParams>(&params).map(|_| ())
        } else {
            Err(format!("unknown key {key:?}"))
        };
        checked.map_err(|m| err(format!("{key}: {m}")))?;
    }
    let scenario: ScenarioConfig = from_map(&scenario).map_err(Error::InvalidArgument)?;
    let params: ExperimentParams = from_map(&params).map_err(Error::InvalidArgument)?;
    scenario.validate()?;
    params.validate()?;
    Ok((scenario, params))
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => format!(
            "[{}]",
            items
                .iter()
                .map(render_value)
                .collect::<Vec<_>>()
                .join(", ")
        ),
        other => other.to_string(),
    }
}

/// Writes a configuration that [`parse_config`] reads back unchanged.
pub fn render_config(scenario: &ScenarioConfig, params: &ExperimentParams) -> String {
    let mut out = String::new();
    for map in [to_map(scenario), to_map(params)] {
        for (k, v) in map {
            out.push_str(&format!("{k} = {}\n", render_value(&v)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::SystemObjective;

    #[test]
    fn empty_file_gives_defaults() {
        let (s, p) = parse_config("# nothing\n\n", ExperimentKind::BoundTightness).unwrap();
        assert_eq!(s, ScenarioConfig::default());
        assert_eq!(p, ExperimentParams::default());
    }

    #[test]
    fn values_and_lists() {
        let text = "cell_radius_km = 2.5  # bigger\nnoise_power_dBm = -120\nusers = 2, 4\nrelays = [3]\nobjective = max_min\noracle = true\n";
        let (s, p) = parse_config(text, ExperimentKind::BoundTightness).unwrap();
        assert_eq!(s.cell_radius_km, 2.5);
        assert_eq!(s.noise_power_dbm, Some(-120.0));
        assert_eq!(p.users, vec![2, 4]);
        assert_eq!(p.relays, vec![3]);
        assert_eq!(p.objective, SystemObjective::MaxMin);
        assert!(p.oracle);
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("cell_radius_km = 1\ncell_radus_km = 2\n", 2),
            ("\n\nnum_relays = many\n", 3),
            ("seed 4\n", 1),
            ("seed = 1\nseed = 2\n", 2),
        ] {
            match parse_config(text, ExperimentKind::AssumptionTable) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn render_round_trips() {
        let s = ScenarioConfig {
            noise_power_dbm: Some(-120.0),
            seed: 99,
            ..ScenarioConfig::default()
        };
        let p = ExperimentParams {
            users: vec![],
            snr_db: Some(17.5),
            ..ExperimentParams::defaults_for(ExperimentKind::OracleCheck)
        };
        let text = render_config(&s, &p);
        let (s2, p2) = parse_config(&text, ExperimentKind::AssumptionTable).unwrap();
        assert_eq!((s2, p2), (s, p));
    }
}
