use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

/// Outcome of one command: either a verdict or a value, optionally with a
/// witness that can be fed back to a checking command.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub verdict: Option<bool>,
    pub value: Option<Value>,
    pub witness: Option<Value>,
}

impl Report {
    pub fn new(command: &str, inputs: Value) -> Self {
        Report { command: command.into(), inputs, verdict: None, value: None, witness: None }
    }

    pub fn verdict(mut self, v: bool) -> Self {
        self.verdict = Some(v);
        self
    }

    pub fn value(mut self, v: Value) -> Self {
        self.value = Some(v);
        self
    }

    pub fn witness(mut self, w: Value) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn exit_code(&self) -> u8 {
        match self.verdict {
            Some(false) => 1,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert("inputs".into(), self.inputs.clone());
        if let Some(v) = self.verdict {
            m.insert("verdict".into(), json!(v));
        }
        if let Some(v) = &self.value {
            m.insert("value".into(), v.clone());
        }
        if let Some(w) = &self.witness {
            m.insert("witness".into(), w.clone());
        }
        Value::Object(m)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => format!("{}\n", serde_json::to_string_pretty(&self.to_json()).expect("serializable")),
            Format::Text => {
                let mut out = String::new();
                if let Some(v) = self.verdict {
                    out.push_str(&format!("{}: {v}\n", self.command));
                }
                if let Some(v) = &self.value {
                    out.push_str(&format!("{}\n", text(v)));
                }
                if let Some(w) = &self.witness {
                    out.push_str(&format!("witness: {}\n", serde_json::to_string(w).expect("serializable")));
                }
                out
            }
        }
    }
}

fn text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => serde_json::to_string_pretty(other).expect("serializable"),
    }
}
