//! In-config assertions: `[expect]` entries checked against observed metrics.
//!
//! A leaf is either a literal (booleans, integers and strings compare exactly,
//! floats within a relative `1e-9`) or a range table `{ min = .., max = .. }`.
//! Nested tables spell dotted metric names, so `contraction.holds = true` and
//! `[expect.contraction] holds = true` are the same assertion.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value as Json;

use crate::config::ConfigError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub key: String,
    pub expected: Json,
    pub observed: Json,
    pub pass: bool,
}

pub type Observed = BTreeMap<String, Json>;

fn is_range(t: &toml::Table) -> bool {
    !t.is_empty() && t.keys().all(|k| k == "min" || k == "max")
}

fn flatten(prefix: &str, t: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(inner) if !is_range(inner) => flatten(&key, inner, out),
            _ => out.push((key, v.clone())),
        }
    }
}

fn to_json(v: &toml::Value) -> Json {
    serde_json::to_value(v).unwrap_or(Json::Null)
}

fn number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Integer(i) => Some(*i as f64),
        toml::Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn matches(expected: &toml::Value, observed: &Json) -> Result<bool, String> {
    use toml::Value as T;
    Ok(match expected {
        T::Boolean(b) => observed.as_bool() == Some(*b),
        T::String(s) => observed.as_str() == Some(s.as_str()),
        T::Integer(_) | T::Float(_) => {
            let e = number(expected).unwrap_or(f64::NAN);
            observed
                .as_f64()
                .is_some_and(|o| (o - e).abs() <= 1e-9 * e.abs().max(1.0))
        }
        T::Table(t) if is_range(t) => {
            let Some(o) = observed.as_f64() else { return Ok(false) };
            let bound = |k: &str| -> Result<Option<f64>, String> {
                t.get(k)
                    .map(|v| number(v).ok_or_else(|| format!("`{k}` must be a number")))
                    .transpose()
            };
            bound("min")?.map_or(true, |m| o >= m) && bound("max")?.map_or(true, |m| o <= m)
        }
        T::Array(items) => {
            let Some(obs) = observed.as_array() else { return Ok(false) };
            if items.len() != obs.len() {
                return Ok(false);
            }
            let mut all = true;
            for (e, o) in items.iter().zip(obs) {
                all &= matches(e, o)?;
            }
            all
        }
        _ => return Err("unsupported expectation value".into()),
    })
}

/// Checks every expectation. Keys that were never observed are configuration errors.
pub fn check(expect: &toml::Table, observed: &Observed) -> Result<Vec<Assertion>, ConfigError> {
    let mut leaves = Vec::new();
    flatten("", expect, &mut leaves);
    let mut out = Vec::with_capacity(leaves.len());
    for (key, value) in leaves {
        let path = format!("expect.{key}");
        let Some(obs) = observed.get(&key) else {
            let known: Vec<&str> = observed.keys().map(String::as_str).collect();
            return Err(ConfigError::new(path, format!("not an observed metric; available: {}", known.join(", "))));
        };
        let pass = matches(&value, obs).map_err(|m| ConfigError::new(path.clone(), m))?;
        out.push(Assertion {
            key,
            expected: to_json(&value),
            observed: obs.clone(),
            pass,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn observed() -> Observed {
        [
            ("rap".to_string(), json!(true)),
            ("fibers.m".to_string(), json!(1)),
            ("inf_abs_p".to_string(), json!(0.01)),
            ("period".to_string(), json!(null)),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn literals_ranges_and_nesting() {
        let t: toml::Table = "rap = true\ninf_abs_p = { max = 0.05 }\n[fibers]\nm = 1\n".parse().unwrap();
        let a = check(&t, &observed()).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|x| x.pass));
        let t: toml::Table = "rap = false\ninf_abs_p = { min = 0.05 }\nperiod = 2".parse().unwrap();
        assert!(check(&t, &observed()).unwrap().iter().all(|x| !x.pass));
    }

    #[test]
    fn unknown_metric_is_a_config_error() {
        let t: toml::Table = "rapp = true".parse().unwrap();
        assert_eq!(check(&t, &observed()).unwrap_err().key, "expect.rapp");
    }
}
