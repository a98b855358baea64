//! Backend connection settings. These normally arrive from the `[backend]`
//! table of the run config file; the API secret is read from the
//! environment, never from the file.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use tps_core::ResidualMode;

use crate::client::RetryPolicy;
use crate::error::{BackendError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    /// Server base URL, e.g. `http://localhost:8000`.
    pub base_url: String,
    /// Model name sent with every request.
    pub model: String,
    /// Name of the environment variable holding the API secret, if any.
    pub api_key_env: String,
    /// Log-probability depth requested per position.
    pub top_k: usize,
    /// Maximum concurrent in-flight requests.
    pub max_in_flight: usize,
    pub timeout_ms: u64,
    /// Retries after the initial attempt, with doubling backoff.
    pub retries: u32,
    pub backoff_ms: u64,
    /// Where unmatched next-token mass goes.
    pub residual: ResidualMode,
    /// Strip leading/trailing whitespace from token text before matching
    /// answers; tokens collapsing to one answer have probabilities summed.
    pub strip_whitespace: bool,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000".into(),
            model: String::new(),
            api_key_env: "TPS_API_KEY".into(),
            top_k: 20,
            max_in_flight: 4,
            timeout_ms: 30_000,
            retries: 2,
            backoff_ms: 250,
            residual: ResidualMode::Sentinel,
            strip_whitespace: true,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k < 1 {
            return Err(BackendError::Protocol("top_k must be at least 1".into()));
        }
        if self.max_in_flight < 1 {
            return Err(BackendError::Protocol(
                "max_in_flight must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            retries: self.retries,
            initial_backoff: Duration::from_millis(self.backoff_ms),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        BackendConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_limits_rejected() {
        let cfg = BackendConfig {
            top_k: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = BackendConfig {
            max_in_flight: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
