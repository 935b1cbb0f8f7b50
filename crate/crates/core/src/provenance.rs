//! Provenance stamps attached to every emitted artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Hex SHA-256 of the canonical configuration text.
    pub config_hash: String,
    pub code_version: String,
}

impl Provenance {
    pub fn for_config(canonical: &str) -> Self {
        let digest = Sha256::digest(canonical.as_bytes());
        let config_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self { config_hash, code_version: env!("CARGO_PKG_VERSION").to_string() }
    }

    /// Comment line placed above CSV bodies; readers skip lines starting with `#`.
    pub fn csv_header(&self) -> String {
        format!("# nlslab {} config {}\n", self.code_version, self.config_hash)
    }
}

/// Strips `#` comment lines, leaving the CSV body that determinism checks compare.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).flat_map(|l| [l, "\n"]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_hex_sha256() {
        let p = Provenance::for_config("");
        assert_eq!(p.config_hash, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn body_drops_comment_lines() {
        let stamped = format!("{}a,b\n1,2\n", Provenance::for_config("x").csv_header());
        assert_eq!(csv_body(&stamped), "a,b\n1,2\n");
    }
}
