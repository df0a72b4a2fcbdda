//! Strict JSON run configuration: circuit, bias, noise environment, and
//! grid settings. Unknown keys are rejected with the offending key named.

use crate::circuit::{CircuitParams, FluxBias, NoiseEnvironment};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Grid and solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    /// Multiplier on all grid counts relative to the reference grid.
    pub scale: f64,
    /// Number of eigenstates to solve for.
    pub k: usize,
    /// Eigensolver residual tolerance, GHz.
    pub tol: f64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { scale: 1.0, k: 20, tol: 1e-7 }
    }
}

/// A full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub circuit: CircuitParams,
    pub bias: FluxBias,
    pub noise: NoiseEnvironment,
    pub basis: BasisConfig,
}

impl Config {
    /// Parse a configuration from JSON text, apply the capacitance lock
    /// when the junction capacitances were left unset, and validate.
    pub fn from_json(text: &str) -> Result<Config> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg: Config =
            serde_json::from_value(raw.clone()).map_err(|e| Error::Config(e.to_string()))?;
        let explicit_caps = raw
            .get("circuit")
            .and_then(|c| c.as_object())
            .map(|c| c.contains_key("c_jk") || c.contains_key("c_jf"))
            .unwrap_or(false);
        if cfg.circuit.cap_lock && !explicit_caps {
            cfg.circuit.apply_cap_lock()?;
        }
        cfg.circuit.validate()?;
        if !(cfg.basis.scale > 0.0) {
            return Err(Error::Config(format!(
                "basis.scale must be positive, got {}",
                cfg.basis.scale
            )));
        }
        if cfg.basis.k < 2 {
            return Err(Error::Config(format!("basis.k must be at least 2, got {}", cfg.basis.k)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Content hash of the canonical serialized form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}
