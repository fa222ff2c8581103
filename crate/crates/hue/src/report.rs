//! JSON report envelope.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::io::write_file;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub result: &'a R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(command: &'a str, seed: u64, config: &'a C, result: &'a R, timestamp: bool) -> Self {
        let generated_unix = timestamp
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        Self { command, version: env!("CARGO_PKG_VERSION"), seed, config, generated_unix, result }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, self.to_json()?.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_is_optional() {
        let e = Envelope::new("x", 1, &(), &[1.5], false);
        let json = e.to_json().unwrap();
        assert!(!json.contains("generated_unix"));
        assert!(json.contains("\"seed\": 1"));
        let e = Envelope::new("x", 1, &(), &[1.5], true);
        assert!(e.to_json().unwrap().contains("generated_unix"));
    }
}
