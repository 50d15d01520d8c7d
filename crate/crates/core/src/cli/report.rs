use serde::Serialize;
use serde_json::{Map, Value};

/// One named pass/fail comparison against an oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub oracle: String,
    pub passed: bool,
    pub observed: f64,
    pub tolerance: f64,
}

/// Machine-readable record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: Map::new(),
            outputs: Map::new(),
            checks: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn output(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.outputs.insert(key.to_string(), value.into());
        self
    }

    /// Records `observed <= tolerance` as a check.
    pub fn check_le(&mut self, name: &str, oracle: &str, observed: f64, tolerance: f64) -> bool {
        let passed = observed <= tolerance;
        self.checks.push(Check {
            name: name.to_string(),
            oracle: oracle.to_string(),
            passed,
            observed,
            tolerance,
        });
        passed
    }

    /// Records a boolean property; `observed` carries the witness magnitude.
    pub fn check_flag(
        &mut self,
        name: &str,
        oracle: &str,
        passed: bool,
        observed: f64,
        tolerance: f64,
    ) -> bool {
        self.checks.push(Check {
            name: name.to_string(),
            oracle: oracle.to_string(),
            passed,
            observed,
            tolerance,
        });
        passed
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report is serializable")
    }

    /// Flat `section,key,value` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,value\n");
        for (section, map) in [("input", &self.inputs), ("output", &self.outputs)] {
            for (k, v) in map {
                out.push_str(&format!("{section},{k},{}\n", csv_field(v)));
            }
        }
        for c in &self.checks {
            out.push_str(&format!(
                "check,{},{} observed={} tolerance={} oracle={}\n",
                c.name,
                if c.passed { "pass" } else { "fail" },
                c.observed,
                c.tolerance,
                csv_field(&Value::String(c.oracle.clone()))
            ));
        }
        out
    }
}

fn csv_field(v: &Value) -> String {
    let s = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}
