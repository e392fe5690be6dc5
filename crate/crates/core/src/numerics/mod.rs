//! Small dense complex linear algebra: Cardano roots, eigenvalues, `exp`.

mod cubic;
mod eigen;
mod expm;
mod matrix;

pub use cubic::{solve_cubic_cardano, CardanoTerms, CubicCoefficients, CubicRoots, DEGENERACY_GAP};
pub use eigen::{eigenvalues, eigenvalues_4x4};
pub use expm::expm;
pub use matrix::{kron2, ComplexMatrix, Matrix2, Matrix3, Matrix4};
