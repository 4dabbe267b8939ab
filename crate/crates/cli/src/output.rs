//! Rendering results as JSON or CSV, and the exit-code mapping.

use std::io::Write;
use std::process::ExitCode;

use clap::ValueEnum;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments: exit 2, message on standard error.
    Usage { flag: &'static str, message: String },
    /// A computation failed: exit 1, JSON error object on standard output.
    Compute {
        kind: &'static str,
        message: String,
        detail: Option<Value>,
    },
}

impl Failure {
    pub fn usage(flag: &'static str, message: impl Into<String>) -> Self {
        Failure::Usage {
            flag,
            message: message.into(),
        }
    }
}

impl From<tvgeom::Error> for Failure {
    fn from(e: tvgeom::Error) -> Self {
        Failure::Compute {
            kind: e.kind(),
            message: e.to_string(),
            detail: None,
        }
    }
}

/// A successful result: either a JSON value, or a ready-made table for CSV.
pub struct Output {
    pub value: Value,
    pub table: Option<String>,
}

impl Output {
    pub fn json(value: Value) -> Self {
        Output { value, table: None }
    }
}

fn csv_field(v: &Value) -> String {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// One header row and one data row of the top-level fields, with nested
/// values written as JSON.
fn flat_csv(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let keys: Vec<&str> = map.keys().map(String::as_str).collect();
            let vals: Vec<String> = map.values().map(csv_field).collect();
            format!("{}\n{}\n", keys.join(","), vals.join(","))
        }
        other => format!("value\n{}\n", csv_field(other)),
    }
}

/// Write to standard output; a closed pipe (e.g. `| head`) is not an error.
fn write_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

pub fn emit(result: Result<Output, Failure>, format: Format) -> ExitCode {
    match result {
        Ok(out) => {
            let text = match format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&out.value).expect("serializable")
                ),
                Format::Csv => out.table.unwrap_or_else(|| flat_csv(&out.value)),
            };
            write_stdout(&text);
            ExitCode::SUCCESS
        }
        Err(Failure::Usage { flag, message }) => {
            eprintln!("error: invalid value for {flag}: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Compute {
            kind,
            message,
            detail,
        }) => {
            let mut err = json!({ "kind": kind, "message": message });
            if let Some(d) = detail {
                err["detail"] = d;
            }
            write_stdout(&format!(
                "{}\n",
                serde_json::to_string_pretty(&json!({ "error": err })).expect("serializable")
            ));
            ExitCode::from(1)
        }
    }
}
