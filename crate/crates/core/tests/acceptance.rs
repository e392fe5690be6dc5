//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p hlgi-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hlgi_core::blochsol::{analytic_branch, k3_closed_form};
use hlgi_core::dynamics::{evolve_exact, evolve_kraus, evolve_rk4, EvolveConfig};
use hlgi_core::fit::{in_fit_domain, select_log_base, FitCoefficients, LogBase};
use hlgi_core::lgi::{self, linspace, logspace, optimize_k3, sweep, OptConfig};
use hlgi_core::macrorealism::{check_nsit, joint_probabilities};
use hlgi_core::model::{bloch_decompose, normalize, Outcome, DEFAULT_EPS_TRACE};
use hlgi_core::numerics::{eigenvalues_4x4, solve_cubic_cardano};
use hlgi_core::spectrum::{
    build_liouvillian, characteristic_cubic, coalescence, discriminant, ep_radius, Coalescence,
    COALESCENCE_GAP,
};
use hlgi_core::{DensityMatrix, ModelParams, C64};

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Verdict);

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn params(gamma: f64, q: f64) -> ModelParams {
    ModelParams::new(gamma, q).expect("valid parameters")
}

/// Deterministic quasi-random points in `[0, 1)^d` (additive recurrence).
fn samples<const D: usize>(n: usize) -> Vec<[f64; D]> {
    // generalized golden ratio for dimension D
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (D as f64 + 1.0));
    }
    let alpha: [f64; D] = std::array::from_fn(|i| phi.powi(-(i as i32 + 1)).fract());
    (1..=n)
        .map(|k| std::array::from_fn(|i| (0.5 + alpha[i] * k as f64).fract()))
        .collect()
}

fn within_budget(elapsed: Duration, budget_s: u64) -> bool {
    elapsed.as_secs_f64() < budget_s as f64
}

fn c1_luders_bound() -> Verdict {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for g in [0.25, 0.5, 1.0, 2.0, 5.0] {
        match optimize_k3(&params(g, 1.0), &OptConfig::default()) {
            Ok(r) => worst = worst.max(r.k3_max),
            Err(e) => return verdict(false, format!("gamma={g}: {e}")),
        }
    }
    let el = start.elapsed();
    verdict(
        worst <= 1.5 + 1e-9 && within_budget(el, 60),
        format!("max K3 at q=1 is {worst:.12} ({:.1}s)", el.as_secs_f64()),
    )
}

fn c2_unitary_limit() -> Verdict {
    let r = match optimize_k3(&params(0.0, 1.0), &OptConfig::default()) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let closed = 2.0 * r.t_star.cos() - (2.0 * r.t_star).cos();
    let ok = (r.k3_max - 1.5).abs() <= 1e-4
        && (r.t_star - PI / 3.0).abs() <= 1e-3
        && (closed - r.k3_max).abs() <= 1e-10;
    verdict(ok, format!("K3max={:.10} t*={:.8} (pi/3={:.8})", r.k3_max, r.t_star, PI / 3.0))
}

fn c3_extreme_violation() -> Verdict {
    let start = Instant::now();
    let gammas = linspace(0.9, 1.1, 41);
    let s = match sweep(&gammas, &[1e-6], &ModelParams::default(), &OptConfig::default(), workers()) {
        Ok(s) => s,
        Err(e) => return verdict(false, e.to_string()),
    };
    let best = s
        .cells
        .iter()
        .filter_map(|c| c.k3_max.map(|k| (k, c.gamma)))
        .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let el = start.elapsed();
    verdict(
        best.0 >= 2.5 && within_budget(el, 300),
        format!("max K3max={:.6} at gamma={:.3} ({:.1}s)", best.0, best.1, el.as_secs_f64()),
    )
}

fn c4_fragility() -> Verdict {
    let qs = logspace(1e-6, 1.0, 25).expect("positive bounds");
    let s = match sweep(&[0.9905], &qs, &ModelParams::default(), &OptConfig::default(), workers()) {
        Ok(s) => s,
        Err(e) => return verdict(false, e.to_string()),
    };
    let vals: Vec<f64> = s.cells.iter().map(|c| c.k3_max.unwrap_or(f64::NAN)).collect();
    let monotone = vals.windows(2).all(|w| w[1] <= w[0]);
    let below = qs.iter().zip(&vals).filter(|(q, _)| **q >= 1e-1 * (1.0 - 1e-12)).all(|(_, v)| *v < 1.6);
    verdict(
        monotone && below,
        format!(
            "K3max from {:.4} (q=1e-6) to {:.6} (q=1); non-increasing={monotone}; <1.6 from q=0.1 on={below}",
            vals[0],
            vals[vals.len() - 1]
        ),
    )
}

fn c5_spectrum() -> Verdict {
    let mut worst_exact = 0.0f64;
    let mut worst_cubic = 0.0f64;
    for [u, v, w] in samples::<3>(100) {
        let j = 0.5 + 1.5 * w;
        let gamma = 5.0 * u.max(1e-3);
        let q = v;
        let p = ModelParams::with_all(j, PI / 2.0, gamma, q).expect("valid");
        let eig = match eigenvalues_4x4(&build_liouvillian(&p)) {
            Ok(e) => e,
            Err(e) => return verdict(false, e.to_string()),
        };
        let target = C64::new(-gamma, 0.0);
        let k = (0..4)
            .min_by(|&a, &b| (eig[a] - target).norm().total_cmp(&(eig[b] - target).norm()))
            .expect("four eigenvalues");
        worst_exact = worst_exact.max((eig[k] - target).norm());
        let rest: Vec<C64> = (0..4).filter(|&i| i != k).map(|i| eig[i]).collect();
        let roots = solve_cubic_cardano(&characteristic_cubic(gamma / j, q)).expect("finite");
        let mut used = [false; 3];
        for x in &rest {
            let (i, d) = (0..3)
                .filter(|&i| !used[i])
                .map(|i| (i, (x - roots.roots[i] * j).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("unmatched root");
            used[i] = true;
            worst_cubic = worst_cubic.max(d);
        }
    }
    verdict(
        worst_exact <= 1e-10 && worst_cubic <= 1e-8,
        format!("|lambda+gamma| <= {worst_exact:.2e}, cubic mismatch <= {worst_cubic:.2e}"),
    )
}

fn c6_ep_locus() -> Verdict {
    let p0 = ep_radius(0.0).expect("q in range");
    let p1 = ep_radius(1.0).expect("q in range");
    let ends = p0.r_ep == 1.0 && (p1.r_ep - 2.0).abs() <= 1e-12 && p0.residual <= 1e-10 && p1.residual <= 1e-10;
    let mut coalesced = 0;
    let mut separated = 0;
    let n = 101;
    for k in 0..n {
        let q = k as f64 / (n - 1) as f64;
        let pt = ep_radius(q).expect("q in range");
        let on = solve_cubic_cardano(&characteristic_cubic(pt.r_ep, q)).expect("finite");
        if coalescence(&on.roots, COALESCENCE_GAP) != Coalescence::None && pt.residual <= 1e-10 {
            coalesced += 1;
        }
        let off_ok = [0.98, 1.02].iter().all(|s| {
            let r = pt.r_ep * s;
            let roots = solve_cubic_cardano(&characteristic_cubic(r, q)).expect("finite");
            discriminant(r, q).abs() > 1e-6 && coalescence(&roots.roots, COALESCENCE_GAP) == Coalescence::None
        });
        if off_ok {
            separated += 1;
        }
    }
    verdict(
        ends && coalesced == n && separated == n,
        format!(
            "r_ep(0)={}, r_ep(1)={}, coalescence on locus {coalesced}/{n}, none off locus {separated}/{n}",
            p0.r_ep, p1.r_ep
        ),
    )
}

fn c7_oracles() -> Verdict {
    let mut worst = 0.0f64;
    let rho0 = DensityMatrix::plus_y();
    for [u, v, w] in samples::<3>(50) {
        let p = params(3.0 * u.max(1e-3), v);
        let t = 10.0 * w.max(1e-3);
        let a = match evolve_rk4(&rho0, &p, t, &EvolveConfig::rk4(1e-4)) {
            Ok(r) => r.rho,
            Err(e) => return verdict(false, e.to_string()),
        };
        let b = evolve_exact(&rho0, &p, t).expect("finite");
        worst = worst.max((a.into_matrix() - b.into_matrix()).max_abs());
    }
    let p = params(0.9905, 0.3);
    let exact = evolve_exact(&rho0, &p, 2.0).expect("finite").into_matrix();
    let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| (evolve_kraus(&rho0, &p, 2.0, dt).expect("finite").rho.into_matrix() - exact).max_abs())
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let first_order = ratios.iter().all(|r| (r - 2.0).abs() <= 0.2);
    verdict(
        worst <= 1e-8 && first_order,
        format!("rk4 vs exact <= {worst:.2e}; Kraus ratios {:.3}, {:.3}", ratios[0], ratios[1]),
    )
}

fn c8_closed_form() -> Verdict {
    let ts: Vec<f64> = (0..=1000).map(|k| 0.01 * k as f64).collect();
    let mut traj = 0.0f64;
    for g in [0.5, 0.9905] {
        let p = params(g, 0.0);
        for branch in Outcome::BOTH {
            let sol = analytic_branch(&p, branch).expect("separated roots");
            let rho0 = DensityMatrix::from_matrix_unchecked(branch.projector());
            for &t in &ts {
                let b = bloch_decompose(&normalize(&evolve_exact(&rho0, &p, t).expect("finite"), DEFAULT_EPS_TRACE).expect("alive"));
                let (sy, sz) = sol.normalized(t).expect("alive");
                traj = traj.max((sy - b.sy).abs()).max((sz - b.sz).abs());
            }
        }
    }
    let k3_gap = |p: &ModelParams| {
        ts[1..]
            .iter()
            .filter_map(|&t| Some((k3_closed_form(p, t).ok()? - lgi::k3(p, t).ok()?).abs()))
            .fold(0.0f64, f64::max)
    };
    let exact_gap = k3_gap(&params(0.5, 0.0)).max(k3_gap(&params(0.9905, 0.0)));
    let small_q_gap = k3_gap(&params(0.9905, 1e-3));
    verdict(
        traj <= 1e-8 && exact_gap <= 1e-8 && small_q_gap <= 2e-3,
        format!("q=0 trajectory <= {traj:.2e}, q=0 K3 <= {exact_gap:.2e}, q=1e-3 K3 <= {small_q_gap:.2e}"),
    )
}

fn c9_macrorealism() -> Verdict {
    let mut aot = 0.0f64;
    let mut d012 = 0.0f64;
    for [u, v, w] in samples::<3>(100) {
        let p = params(3.0 * u.max(1e-3), v);
        let t = 5.0 * w.max(1e-3);
        let tab = match joint_probabilities(&p, t) {
            Ok(t) => t,
            Err(e) => return verdict(false, e.to_string()),
        };
        let rep = check_nsit(&tab);
        aot = aot.max(rep.aot.max());
        d012 = d012.max(rep.max_delta_0_12());
    }
    let rep = check_nsit(&joint_probabilities(&params(1.0, 0.5), 1.0).expect("alive"));
    let three = rep.delta_0_1_2(Outcome::Plus, Outcome::Plus);
    verdict(
        aot <= 1e-10 && d012 <= 1e-10 && three > 1e-3,
        format!("AoT <= {aot:.2e}, Delta_(0)12 <= {d012:.2e}, Delta_0(1)2(+,+) = {three:.4e}"),
    )
}

fn c10_fit() -> Verdict {
    let start = Instant::now();
    let mut gammas = linspace(0.05, 0.95, 10);
    gammas.extend(linspace(2.3, 5.0, 10));
    debug_assert!(gammas.iter().all(|&g| in_fit_domain(g)));
    let qs = logspace(1e-6, 1.0, 15).expect("positive bounds");
    let s = match sweep(&gammas, &qs, &ModelParams::default(), &OptConfig::default(), workers()) {
        Ok(s) => s,
        Err(e) => return verdict(false, e.to_string()),
    };
    let (base, natural, ten) = select_log_base(&s, &FitCoefficients::published());
    let rep = if base == LogBase::Natural { &natural } else { &ten };
    let sum = rep.summary.expect("cells in domain");
    let low: Vec<f64> = rep.cells.iter().filter(|c| c.gamma < 1.0).filter_map(|c| c.residual).collect();
    let low_sum = hlgi_core::fit::summarize(&low).expect("low band");
    let el = start.elapsed();
    verdict(
        sum.max <= 0.15 && sum.median <= 0.05 && within_budget(el, 900),
        format!(
            "base {}: max {:.3e}, median {:.3e} (gamma<1 only: max {:.3e}, median {:.3e}) ({:.1}s)",
            base.label(),
            sum.max,
            sum.median,
            low_sum.max,
            low_sum.median,
            el.as_secs_f64()
        ),
    )
}

fn c11_structure() -> Verdict {
    let ts: Vec<f64> = (1..=80).map(|k| 0.125 * k as f64).collect();
    let mut trace_q1 = 0.0f64;
    let mut rise = 0.0f64;
    let mut sx = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut norm = 0.0f64;
    for [u, v] in samples::<2>(40) {
        let g = 3.0 * u.max(1e-3);
        for q in [0.0, v, 1.0] {
            let p = params(g, q);
            for branch in Outcome::BOTH {
                let rho0 = DensityMatrix::from_matrix_unchecked(branch.projector());
                let mut prev = 1.0;
                for &t in &ts {
                    let rho = evolve_exact(&rho0, &p, t).expect("finite");
                    let tr = rho.trace();
                    if q == 1.0 {
                        trace_q1 = trace_q1.max((tr - 1.0).abs());
                    } else {
                        rise = rise.max(tr - prev);
                    }
                    prev = tr;
                    sx = sx.max(bloch_decompose(&rho).sx.abs());
                    min_eig = min_eig.min(rho.eigenvalues().0);
                }
            }
            for &t in ts.iter().step_by(8) {
                if let Ok(tab) = joint_probabilities(&p, t) {
                    norm = norm.max(tab.normalization_defect());
                }
            }
        }
    }
    verdict(
        trace_q1 <= 1e-9 && rise <= 1e-10 && sx <= 1e-10 && min_eig >= -1e-8 && norm <= 1e-10,
        format!(
            "|Tr-1| at q=1 <= {trace_q1:.1e}, trace rise <= {rise:.1e}, |Sx| <= {sx:.1e}, min eig {min_eig:.1e}, prob. norm <= {norm:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("Luders bound at q=1", c1_luders_bound),
        ("unitary limit", c2_unitary_limit),
        ("extreme violation at q=1e-6", c3_extreme_violation),
        ("fragility in q at gamma=0.9905", c4_fragility),
        ("Liouvillian spectrum", c5_spectrum),
        ("exceptional-point locus", c6_ep_locus),
        ("propagator equivalence", c7_oracles),
        ("closed-form Bloch solution", c8_closed_form),
        ("AoT / NSIT conditions", c9_macrorealism),
        ("tanh fit residuals", c10_fit),
        ("structural invariants", c11_structure),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}: {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
