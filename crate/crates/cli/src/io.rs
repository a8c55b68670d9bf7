use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use qwp_core::error::Error;
use qwp_core::predicate::Predicate;
use qwp_core::program::{ProgramFile, QuantumProgram};
use qwp_core::tolerance::ToleranceConfig;

pub const STATUS_IO: u8 = 1;
pub const STATUS_SEMANTIC: u8 = 2;
pub const STATUS_FAILED: u8 = 3;

/// A failure that ends the command with `status`.
#[derive(Debug)]
pub struct CliError {
    pub status: u8,
    pub message: String,
}

impl CliError {
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            status: STATUS_IO,
            message: message.into(),
        }
    }

    pub fn semantic(message: impl Into<String>) -> Self {
        Self {
            status: STATUS_SEMANTIC,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::semantic(e.to_string())
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// Parses a whole file; serde_json errors carry line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// Decodes one member of an already parsed document.
pub fn decode<T: DeserializeOwned>(value: Value, path: &Path, what: &str) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::io(format!("{}: invalid {what}: {e}", path.display())))
}

pub fn read_predicate(path: &Path) -> Result<Predicate, CliError> {
    read_json(path)
}

/// Parse errors are status 1; an unbuildable program is status 2.
pub fn read_program(path: &Path, tol: &ToleranceConfig) -> Result<QuantumProgram, CliError> {
    let file: ProgramFile = read_json(path)?;
    build_program(file, path, tol)
}

pub fn build_program(file: ProgramFile, path: &Path, tol: &ToleranceConfig) -> Result<QuantumProgram, CliError> {
    file.build(tol)
        .map_err(|e| CliError::semantic(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_json(value)).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
