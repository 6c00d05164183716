use serde::{Deserialize, Serialize};

/// Reproducibility metadata embedded in every output.
///
/// Re-running the same command with the same parameters reproduces every
/// byte except `timestamp` and `threads`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub timestamp: String,
    pub threads: usize,
}

impl RunManifest {
    pub fn new(
        command: &str,
        parameters: serde_json::Value,
        seed: u64,
        input_digest: Option<String>,
        threads: usize,
    ) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            threads,
        }
    }
}
