//! Versioned result documents with provenance.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "lcr";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub tool_version: String,
    /// Hex SHA-256 of the input file, when there is one.
    pub input_sha256: Option<String>,
    pub seed: u64,
    /// 1-based id of the cancellation pair, when one was used.
    pub pair_id: Option<usize>,
    /// Effective settings after merging the config file and flags.
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(input_sha256: Option<String>, seed: u64, pair_id: Option<usize>, config: serde_json::Value) -> Self {
        Provenance {
            tool: TOOL_NAME.to_owned(),
            tool_version: TOOL_VERSION.to_owned(),
            input_sha256,
            seed,
            pair_id,
            config,
        }
    }
}

/// Envelope shared by every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument<T> {
    pub schema_version: u32,
    /// What `result` holds, e.g. `"estimate"` or `"mle"`.
    pub kind: String,
    pub provenance: Provenance,
    /// Node labels by index, for edge lists with named nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_map: Option<Vec<String>>,
    pub result: T,
}

impl<T: Serialize> ResultDocument<T> {
    pub fn new(kind: &str, provenance: Provenance, label_map: Option<Vec<String>>, result: T) -> Self {
        ResultDocument {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_owned(),
            provenance,
            label_map,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result documents serialize");
        s.push('\n');
        s
    }
}
