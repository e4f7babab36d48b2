//! Dimension caps shared by every module that builds exponentially large objects.

use crate::error::{Error, Result};

/// Environment variable that overrides the sparse qubit-equivalent cap.
pub const MAX_QUBITS_ENV: &str = "CERTGROUND_MAX_QUBITS";

pub const DEFAULT_MAX_QUBITS: f64 = 26.0;

/// Cap for dense diagonalization (2^12 = 4096).
pub const DENSE_MAX_QUBITS: f64 = 12.0;

/// Cap for the marginal SDP, in qubit-equivalents of the patch state.
pub const DEFAULT_MARGINAL_QUBITS: f64 = 10.0;

pub fn max_qubits() -> f64 {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

pub fn check_qubits(what: &str, needed: f64) -> Result<()> {
    check_against(what, needed, max_qubits())
}

pub fn check_against(what: &str, needed: f64, cap: f64) -> Result<()> {
    if needed > cap + 1e-9 {
        return Err(Error::CapExceeded { what: what.to_string(), needed, cap });
    }
    Ok(())
}

/// `sites · log2(d)`.
pub fn qubit_equivalents(d: usize, sites: usize) -> f64 {
    sites as f64 * (d as f64).log2()
}
