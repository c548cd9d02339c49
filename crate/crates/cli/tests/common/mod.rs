//! Shared helpers for the CLI test suites: analytic oracles independent of
//! the library, and process-level runners for the binary.

use std::path::Path;
use std::process::Command;

/// Impulse-response coefficients of a linear autoregression: `psi[s]` is
/// the coefficient on `x` in the interventional expectation at lag `s`,
/// from the recursion `psi[s] = sum_j phi_j psi[s-j]`, `psi[0] = 1`.
#[allow(clippy::needless_range_loop)]
pub fn ar_impulse_response(phi: &[f64], max_lag: usize) -> Vec<f64> {
    let mut psi = vec![0.0; max_lag + 1];
    psi[0] = 1.0;
    for s in 1..=max_lag {
        for (j, &coef) in phi.iter().enumerate() {
            let lag = j + 1;
            if lag <= s {
                psi[s] += coef * psi[s - lag];
            }
        }
    }
    psi
}

/// Runs the CLI binary, asserting success.
pub fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_mintt"))
        .args(args)
        .status()
        .expect("binary runs");
    assert!(status.success(), "mintt {args:?} failed");
}

/// Runs the CLI binary and expects failure, returning stderr.
#[allow(dead_code)]
pub fn run_cli_expect_error(args: &[&str]) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_mintt"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        !output.status.success(),
        "mintt {args:?} unexpectedly succeeded"
    );
    String::from_utf8_lossy(&output.stderr).to_string()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}
