//! Unit-labelled report values and report serialization.

use serde_json::{json, Map, Value};

use crate::kspace::KVec3;
use crate::units::{UnitScale, UnitSystem};

/// Converts natural-unit numbers into labelled report quantities.
#[derive(Debug, Clone, Copy)]
pub struct Labeller {
    scale: Option<UnitScale>,
}

fn quantity(value: impl Into<Value>, unit: &str) -> Value {
    json!({ "value": value.into(), "unit": unit })
}

impl Labeller {
    /// SI output when `scale` is given, natural otherwise.
    pub fn new(scale: Option<UnitScale>) -> Self {
        Self { scale }
    }

    pub fn system(&self) -> UnitSystem {
        if self.scale.is_some() {
            UnitSystem::Si
        } else {
            UnitSystem::Natural
        }
    }

    fn pick(&self, x: f64, si: impl Fn(&UnitScale, f64) -> f64, natural: &str, si_unit: &str) -> Value {
        match &self.scale {
            Some(s) => quantity(si(s, x), si_unit),
            None => quantity(x, natural),
        }
    }

    pub fn energy(&self, x: f64) -> Value {
        self.pick(x, |s, v| s.energy_to_si(v), "hbar*c*k_ref", "J")
    }
    pub fn mass(&self, x: f64) -> Value {
        self.pick(x, |s, v| s.mass_to_si(v), "hbar*k_ref/c", "kg")
    }
    pub fn wavenumber(&self, x: f64) -> Value {
        self.pick(x, |s, v| s.wavenumber_to_si(v), "k_ref", "1/m")
    }
    pub fn length(&self, x: f64) -> Value {
        self.pick(x, |s, v| s.length_to_si(v), "1/k_ref", "m")
    }
    pub fn time(&self, x: f64) -> Value {
        self.pick(x, |s, v| s.time_to_si(v), "1/(c*k_ref)", "s")
    }

    pub fn momentum(&self, p: KVec3) -> Value {
        match &self.scale {
            Some(s) => quantity(p.to_array().map(|v| s.momentum_to_si(v)).to_vec(), "kg*m/s"),
            None => quantity(p.to_array().to_vec(), "hbar*k_ref"),
        }
    }
    pub fn lengths(&self, r: [f64; 3]) -> Value {
        match &self.scale {
            Some(s) => quantity(r.map(|v| s.length_to_si(v)).to_vec(), "m"),
            None => quantity(r.to_vec(), "1/k_ref"),
        }
    }
    pub fn times(&self, t: &[f64]) -> Value {
        match &self.scale {
            Some(s) => quantity(t.iter().map(|&v| s.time_to_si(v)).collect::<Vec<_>>(), "s"),
            None => quantity(t.to_vec(), "1/(c*k_ref)"),
        }
    }
}

pub fn dimensionless(x: impl Into<Value>) -> Value {
    quantity(x, "1")
}

pub fn count(x: usize) -> Value {
    quantity(x, "count")
}

/// Key-sorted, indented JSON with a trailing newline.
pub fn to_json(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report values are serializable");
    s.push('\n');
    s
}

/// Flatten a report into `path,value,unit` rows; vector quantities become
/// one row per component and unlabelled leaves carry an empty unit.
pub fn to_csv(report: &Value) -> String {
    let mut out = String::from("path,value,unit\n");
    flatten(report, String::new(), &mut out);
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn flatten(v: &Value, path: String, out: &mut String) {
    let join = |p: &str, k: &str| if p.is_empty() { k.to_string() } else { format!("{p}.{k}") };
    match v {
        Value::Object(m) if is_quantity(m) => {
            let unit = m["unit"].as_str().unwrap_or_default();
            match &m["value"] {
                Value::Array(items) => {
                    for (i, x) in items.iter().enumerate() {
                        push_row(out, &format!("{path}[{i}]"), &scalar(x), unit);
                    }
                }
                x => push_row(out, &path, &scalar(x), unit),
            }
        }
        Value::Object(m) => {
            for (k, x) in m {
                flatten(x, join(&path, k), out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(x, format!("{path}[{i}]"), out);
            }
        }
        x => push_row(out, &path, &scalar(x), ""),
    }
}

fn is_quantity(m: &Map<String, Value>) -> bool {
    m.len() == 2 && m.contains_key("value") && m.get("unit").is_some_and(Value::is_string)
}

fn push_row(out: &mut String, path: &str, value: &str, unit: &str) {
    out.push_str(&format!("{},{},{}\n", csv_field(path), csv_field(value), csv_field(unit)));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn si_labels_convert() {
        let l = Labeller::new(Some(UnitScale::si(1e6)));
        assert_eq!(l.wavenumber(2.0)["value"], json!(2e6));
        assert_eq!(l.wavenumber(2.0)["unit"], json!("1/m"));
        let n = Labeller::new(None);
        assert_eq!(n.mass(1.5)["unit"], json!("hbar*k_ref/c"));
    }

    #[test]
    fn csv_flattens_quantities() {
        let v = json!({"a": {"value": [1.0, 2.0], "unit": "m"}, "b": {"c": true, "d": {"value": 3, "unit": "1"}}});
        let csv = to_csv(&v);
        assert_eq!(csv, "path,value,unit\na[0],1.0,m\na[1],2.0,m\nb.c,true,\nb.d,3,1\n");
    }
}
