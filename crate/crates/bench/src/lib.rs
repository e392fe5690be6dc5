//! Fixed parameter points shared by the benchmarks.

use hlgi_core::ModelParams;

/// Representative `(gamma, q)` points: unitary, near-critical post-selected,
/// intermediate and Lindblad.
pub const POINTS: [(f64, f64); 4] = [(0.0, 1.0), (0.9905, 1e-6), (0.5, 0.3), (2.0, 1.0)];

pub fn params() -> Vec<ModelParams> {
    POINTS
        .iter()
        .map(|&(g, q)| ModelParams::new(g, q).expect("valid benchmark point"))
        .collect()
}
