use std::fmt::Display;
use std::path::Path;

use ptsm_core::rational::{self, Rational};
use ptsm_core::system::{system_from_json, TransitionSystem};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Why a command did not succeed; each kind maps to one exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    /// A checked property or assertion failed; the outputs are still reported.
    Property(String, Value),
    Internal(String),
}

impl Failure {
    pub fn input(e: impl Display) -> Self {
        Failure::Input(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Property(..) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

/// Files read by a command, with their SHA-256 digests.
#[derive(Default)]
pub struct Inputs {
    files: Vec<(String, String)>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let bytes =
            std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        self.files
            .push((path.display().to_string(), hex(&Sha256::digest(&bytes))));
        String::from_utf8(bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    pub fn system(&mut self, path: &Path) -> Result<TransitionSystem, Failure> {
        let text = self.read(path)?;
        system_from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    fn to_json(&self) -> (Value, String) {
        let mut all = Sha256::new();
        for (_, h) in &self.files {
            all.update(h.as_bytes());
        }
        let files = self
            .files
            .iter()
            .map(|(p, h)| json!({ "path": p, "sha256": h }))
            .collect();
        (Value::Array(files), hex(&all.finalize()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Exact value plus a six-place decimal for reading.
pub fn number(q: &Rational) -> Value {
    json!({ "value": rational::format(q), "decimal": rational::to_decimal(q, 6) })
}

pub struct RunReport {
    pub command: Vec<String>,
    pub inputs: Inputs,
    pub seed: Option<u64>,
    pub result: Result<Value, Failure>,
    pub timing_ms: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> Value {
        let (inputs, digest) = self.inputs.to_json();
        let (status, outputs, error) = match &self.result {
            Ok(v) => ("ok", v.clone(), None),
            Err(Failure::Input(m)) => ("input_error", Value::Null, Some(m.clone())),
            Err(Failure::Property(m, v)) => ("failed", v.clone(), Some(m.clone())),
            Err(Failure::Internal(m)) => ("internal_error", Value::Null, Some(m.clone())),
        };
        let mut report = json!({
            "command": self.command,
            "inputs": inputs,
            "inputs_digest": digest,
            "seed": self.seed,
            "status": status,
            "outputs": outputs,
        });
        if let Some(e) = error {
            report["error"] = json!(e);
        }
        if let Some(t) = self.timing_ms {
            report["timing_ms"] = json!(t);
        }
        report
    }

    pub fn exit_code(&self) -> u8 {
        self.result.as_ref().err().map_or(0, Failure::exit_code)
    }
}
