//! Reduced `(R, Sy, Sz)` dynamics at `theta = pi/2` and its closed-form
//! solution.
//!
//! With `H ~ sx` and an initial state in the y-z plane, `Sx` decouples and the
//! remaining three components obey a linear 3x3 system. Dropping the
//! `gamma q Sz` feedback gives an approximate system whose eigenvalues are
//! `x_j - gamma` with `x_j` the roots of
//!
//! ```text
//! x^3 - gamma q x^2 + (J^2 - gamma^2 (1 + q)) x - gamma q J^2 = 0
//! ```
//!
//! The approximation is exact at `q = 0` and its error grows like `gamma q`.
//! This module is a cross-check; production `K3` values come from
//! [`crate::lgi`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgi;
use crate::model::{BlochState, ModelParams, Outcome};
use crate::numerics::{expm, solve_cubic_cardano, CubicCoefficients, Matrix3};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Approximate,
}

/// Linear generator over `(R, Sy, Sz)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    pub matrix: [[f64; 3]; 3],
    pub variant: Variant,
}

fn require_half_pi(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if !p.is_half_pi() {
        return Err(Error::Unsupported(format!(
            "the reduced Bloch system requires theta = pi/2, got {}",
            p.theta
        )));
    }
    Ok(())
}

pub fn reduced_matrix(p: &ModelParams, variant: Variant) -> Result<ReducedSystem> {
    require_half_pi(p)?;
    let (g, q, j) = (p.gamma, p.q, p.j);
    let matrix = match variant {
        Variant::Exact => [
            [-g * (1.0 - q), 0.0, g * (1.0 - q)],
            [0.0, -g, j],
            [g * (1.0 + q), -j, -g * (1.0 + q)],
        ],
        Variant::Approximate => [
            [-g * (1.0 - q), 0.0, g],
            [0.0, -g, j],
            [g * (1.0 + q), -j, -g],
        ],
    };
    Ok(ReducedSystem { matrix, variant })
}

impl ReducedSystem {
    pub fn as_complex(&self) -> Matrix3 {
        Matrix3::from_real(self.matrix)
    }

    pub fn eigenvalues(&self) -> Result<[C64; 3]> {
        crate::numerics::eigenvalues(&self.as_complex())
    }

    /// `exp(M t) v0`.
    pub fn propagate(&self, v0: [f64; 3], t: f64) -> Result<[f64; 3]> {
        let e = expm(&self.as_complex(), t)?;
        let v = e.mul_vec(&v0.map(|x| C64::new(x, 0.0)));
        Ok(v.map(|z| z.re))
    }
}

/// `(R, Sy, Sz)` at `t = 0` after projecting onto `branch`.
pub fn initial_vector(branch: Outcome) -> [f64; 3] {
    [1.0, branch.sign(), 0.0]
}

/// Cubic for `x = lambda + gamma` of the approximate system.
pub fn reduced_cubic(p: &ModelParams) -> CubicCoefficients {
    let (g, q, j) = (p.gamma, p.q, p.j);
    CubicCoefficients::real(-g * q, j * j - g * g * (1.0 + q), -g * q * j * j)
}

/// Closed-form trajectory of the approximate system from `initial_vector(branch)`.
///
/// Eigenvectors are normalized as
/// `u_j = (gamma J, gamma^2 (1+q) - x_j (x_j - gamma q), J (x_j - gamma q))`,
/// which stays finite when a root vanishes (`q = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSolution {
    pub params: ModelParams,
    pub branch: Outcome,
    pub roots: [C64; 3],
    pub coefficients: [C64; 3],
}

pub fn analytic_branch(p: &ModelParams, branch: Outcome) -> Result<BranchSolution> {
    require_half_pi(p)?;
    let (g, q, j) = (p.gamma, p.q, p.j);
    if g == 0.0 {
        return Err(Error::SingularCoefficients(
            "closed-form coefficients are singular at gamma = 0".into(),
        ));
    }
    let roots = solve_cubic_cardano(&reduced_cubic(p))?;
    if roots.any_degenerate() {
        return Err(Error::DegenerateRoots { gap: roots.min_gap });
    }
    let x = roots.roots;
    // weights sum_j c_j x_j^k u_j match the moments of the initial vector
    let m0 = 1.0 / (g * j);
    let m1 = q / j;
    let m2 = (g * (1.0 + q) + g * q * q) / j - branch.sign();
    let coefficients = std::array::from_fn(|i| {
        let (k, l) = ((i + 1) % 3, (i + 2) % 3);
        (m2 - (x[k] + x[l]) * m1 + x[k] * x[l] * m0) / ((x[i] - x[k]) * (x[i] - x[l]))
    });
    Ok(BranchSolution { params: *p, branch, roots: x, coefficients })
}

impl BranchSolution {
    /// `(R, Sy, Sz)` without the common `exp(-gamma t)` factor.
    fn undamped(&self, t: f64) -> [f64; 3] {
        let (g, q, j) = (self.params.gamma, self.params.q, self.params.j);
        let mut acc = [C64::new(0.0, 0.0); 3];
        for (&x, &c) in self.roots.iter().zip(&self.coefficients) {
            let w = c * (x * t).exp();
            acc[0] += w * (g * j);
            acc[1] += w * (g * g * (1.0 + q) - x * (x - g * q));
            acc[2] += w * j * (x - g * q);
        }
        acc.map(|z| z.re)
    }

    /// Unnormalized `(R, Sy, Sz)`.
    pub fn components(&self, t: f64) -> [f64; 3] {
        let damp = (-self.params.gamma * t).exp();
        self.undamped(t).map(|v| v * damp)
    }

    pub fn bloch(&self, t: f64) -> BlochState {
        let [r, sy, sz] = self.components(t);
        BlochState { r, sx: 0.0, sy, sz }
    }

    /// Normalized `(s_y, s_z)`.
    pub fn normalized(&self, t: f64) -> Result<(f64, f64)> {
        let [r, sy, sz] = self.undamped(t);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::TrajectoryExtinguished {
                trace: r * (-self.params.gamma * t).exp(),
                branch: Some(self.branch.label().into()),
            });
        }
        Ok((sy / r, sz / r))
    }

    pub fn sy(&self, t: f64) -> Result<f64> {
        self.normalized(t).map(|(y, _)| y)
    }
}

/// `s+(t) + (s+(t) - s-(t))/2 + s+(t)(s+(t) + s-(t))/2 - s+(2t)` from the two
/// branch solutions.
pub fn k3_closed_form(p: &ModelParams, t: f64) -> Result<f64> {
    let plus = analytic_branch(p, Outcome::Plus)?;
    let minus = analytic_branch(p, Outcome::Minus)?;
    k3_from_branches(&plus, &minus, t)
}

pub fn k3_from_branches(plus: &BranchSolution, minus: &BranchSolution, t: f64) -> Result<f64> {
    let sp = plus.sy(t)?;
    let sm = minus.sy(t)?;
    let sp2 = plus.sy(2.0 * t)?;
    Ok(sp + 0.5 * (sp - sm) + 0.5 * sp * (sp + sm) - sp2)
}

/// Closed-form `K3`, or the same approximate system propagated numerically
/// when the closed form is unavailable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormK3 {
    pub value: f64,
    /// Set when the numerical fallback was used.
    pub fallback: bool,
}

pub fn k3_closed_form_or_numeric(p: &ModelParams, t: f64) -> Result<ClosedFormK3> {
    match k3_closed_form(p, t) {
        Ok(value) => Ok(ClosedFormK3 { value, fallback: false }),
        Err(Error::DegenerateRoots { .. }) | Err(Error::SingularCoefficients(_)) => {
            let sys = reduced_matrix(p, Variant::Approximate)?;
            let sy = |branch: Outcome, t: f64| -> Result<f64> {
                let [r, sy, _] = sys.propagate(initial_vector(branch), t)?;
                if !(r > 0.0) {
                    return Err(Error::TrajectoryExtinguished {
                        trace: r,
                        branch: Some(branch.label().into()),
                    });
                }
                Ok(sy / r)
            };
            let sp = sy(Outcome::Plus, t)?;
            let sm = sy(Outcome::Minus, t)?;
            let sp2 = sy(Outcome::Plus, 2.0 * t)?;
            Ok(ClosedFormK3 {
                value: sp + 0.5 * (sp - sm) + 0.5 * sp * (sp + sm) - sp2,
                fallback: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Difference between the closed form and [`lgi::k3`] at `t`.
pub fn k3_discrepancy(p: &ModelParams, t: f64) -> Result<f64> {
    let closed = k3_closed_form(p, t)?;
    let reference = lgi::k3(p, t)?;
    Ok(closed - reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_exact;
    use crate::model::{bloch_decompose, normalize, DensityMatrix, DEFAULT_EPS_TRACE};
    use proptest::prelude::*;

    fn params(gamma: f64, q: f64) -> ModelParams {
        ModelParams::new(gamma, q).unwrap()
    }

    fn oracle_sy(p: &ModelParams, branch: Outcome, t: f64) -> f64 {
        let rho0 = DensityMatrix::from_matrix_unchecked(branch.projector());
        let rho = normalize(&evolve_exact(&rho0, p, t).unwrap(), DEFAULT_EPS_TRACE).unwrap();
        bloch_decompose(&rho).sy
    }

    /// Largest distance in a nearest-neighbour matching of two root sets.
    fn unmatched(a: &[C64; 3], b: &[C64; 3]) -> f64 {
        let mut used = [false; 3];
        let mut worst = 0.0f64;
        for x in a {
            let (k, d) = (0..3)
                .filter(|&i| !used[i])
                .map(|i| (i, (x - b[i]).norm()))
                .min_by(|u, v| u.1.total_cmp(&v.1))
                .unwrap();
            used[k] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn variants_agree_at_q_zero() {
        let p = params(0.7, 0.0);
        assert_eq!(
            reduced_matrix(&p, Variant::Exact).unwrap().matrix,
            reduced_matrix(&p, Variant::Approximate).unwrap().matrix
        );
    }

    #[test]
    fn lindblad_trace_row_vanishes() {
        let m = reduced_matrix(&params(0.7, 1.0), Variant::Exact).unwrap().matrix;
        assert_eq!(m[0], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_other_orientations() {
        let p = ModelParams::with_all(1.0, 0.3, 0.5, 0.2).unwrap();
        assert!(matches!(reduced_matrix(&p, Variant::Exact), Err(Error::Unsupported(_))));
        assert!(matches!(analytic_branch(&p, Outcome::Plus), Err(Error::Unsupported(_))));
    }

    #[test]
    fn exact_variant_matches_full_dynamics() {
        for (g, q) in [(0.5, 0.0), (0.9905, 0.3), (2.0, 1.0)] {
            let p = params(g, q);
            let sys = reduced_matrix(&p, Variant::Exact).unwrap();
            for branch in Outcome::BOTH {
                for t in [0.5, 2.0, 7.5] {
                    let v = sys.propagate(initial_vector(branch), t).unwrap();
                    let rho0 = DensityMatrix::from_matrix_unchecked(branch.projector());
                    let b = bloch_decompose(&evolve_exact(&rho0, &p, t).unwrap());
                    let diff = (v[0] - b.r).abs().max((v[1] - b.sy).abs()).max((v[2] - b.sz).abs());
                    assert!(diff <= 1e-9, "{g} {q} {t}: {diff}");
                }
            }
        }
    }

    #[test]
    fn initial_conditions() {
        for branch in Outcome::BOTH {
            let sol = analytic_branch(&params(0.9905, 1e-3), branch).unwrap();
            let v = sol.components(0.0);
            let want = initial_vector(branch);
            for k in 0..3 {
                assert!((v[k] - want[k]).abs() <= 1e-9, "{branch:?} {v:?}");
            }
        }
    }

    #[test]
    fn closed_form_solves_approximate_system() {
        let p = params(0.7, 0.3);
        let sys = reduced_matrix(&p, Variant::Approximate).unwrap();
        for branch in Outcome::BOTH {
            let sol = analytic_branch(&p, branch).unwrap();
            for t in [0.1, 1.3, 4.0] {
                let a = sol.components(t);
                let b = sys.propagate(initial_vector(branch), t).unwrap();
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_at_q_zero() {
        let p = params(0.5, 0.0);
        for branch in Outcome::BOTH {
            let sol = analytic_branch(&p, branch).unwrap();
            for i in 0..=100 {
                let t = 0.1 * i as f64;
                let got = sol.sy(t).unwrap();
                assert!((got - oracle_sy(&p, branch, t)).abs() <= 1e-8, "t={t}");
            }
        }
    }

    #[test]
    fn small_q_error_budget() {
        let p = params(0.9905, 1e-3);
        let sol = analytic_branch(&p, Outcome::Plus).unwrap();
        for i in 0..=100 {
            let t = 0.1 * i as f64;
            assert!((sol.sy(t).unwrap() - oracle_sy(&p, Outcome::Plus, t)).abs() <= 1e-3);
        }
    }

    #[test]
    fn singular_and_degenerate_inputs() {
        assert!(matches!(
            analytic_branch(&params(0.0, 0.5), Outcome::Plus),
            Err(Error::SingularCoefficients(_))
        ));
        // q = 0, gamma = J: x (x^2 + 0) = 0 has a triple root at zero
        assert!(matches!(
            analytic_branch(&params(1.0, 0.0), Outcome::Plus),
            Err(Error::DegenerateRoots { .. })
        ));
        let fb = k3_closed_form_or_numeric(&params(1.0, 0.0), 1.0).unwrap();
        assert!(fb.fallback);
        let direct = lgi::k3(&params(1.0, 0.0), 1.0).unwrap();
        assert!((fb.value - direct).abs() < 1e-10);
        let ok = k3_closed_form_or_numeric(&params(0.5, 0.0), 1.0).unwrap();
        assert!(!ok.fallback);
    }

    #[test]
    fn closed_form_k3_short_time() {
        let k = k3_closed_form(&params(0.5, 0.0), 1e-6).unwrap();
        assert!((k - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_k3_equals_pipeline_at_q_zero() {
        let p = params(0.5, 0.0);
        for i in 1..=50 {
            let t = 0.2 * i as f64;
            assert!(k3_discrepancy(&p, t).unwrap().abs() <= 1e-8, "t={t}");
        }
    }

    #[test]
    fn closed_form_k3_near_optimum_at_small_q() {
        let p = params(0.9905, 1e-4);
        let opt = lgi::optimize_k3(&p, &lgi::OptConfig::default()).unwrap();
        let d = k3_discrepancy(&p, opt.t_star).unwrap();
        // the dropped gamma q Sz term is amplified near the late optimum
        assert!(d.abs() <= 5e-3, "discrepancy {d} at t* = {}", opt.t_star);
    }

    #[test]
    fn approximate_eigenvalues_are_shifted_roots() {
        for (g, q) in [(0.3, 0.2), (0.9905, 1e-3), (2.5, 0.9)] {
            let p = params(g, q);
            let eig = reduced_matrix(&p, Variant::Approximate).unwrap().eigenvalues().unwrap();
            let roots = solve_cubic_cardano(&reduced_cubic(&p)).unwrap().roots;
            let shifted = roots.map(|x| x - g);
            assert!(unmatched(&eig, &shifted) <= 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn exact_eigenvalues_are_liouvillian_roots(r in 0.01..5.0f64, q in 0.0..=1.0f64) {
            let p = params(r, q);
            let eig = reduced_matrix(&p, Variant::Exact).unwrap().eigenvalues().unwrap();
            let roots = solve_cubic_cardano(&crate::spectrum::characteristic_cubic(r, q)).unwrap();
            if !roots.any_degenerate() {
                let scaled = roots.roots.map(|x| x * p.j);
                prop_assert!(unmatched(&eig, &scaled) <= 1e-8, "{:?} vs {:?}", eig, scaled);
            }
        }

        #[test]
        fn c12_decomposition_identity(g in 0.05..3.0f64, t in 0.05..10.0f64) {
            let p = params(g, 0.0);
            let rec = lgi::correlators(&p, t, &lgi::K3Config::default()).unwrap();
            let sp = oracle_sy(&p, Outcome::Plus, t);
            let sm = oracle_sy(&p, Outcome::Minus, t);
            let via = 0.5 * (sp - sm) + 0.5 * sp * (sp + sm);
            prop_assert!((rec.c12 - via).abs() <= 1e-8);
            prop_assert!((rec.p_plus - 0.5 * (1.0 + sp)).abs() <= 1e-10);
        }
    }
}
