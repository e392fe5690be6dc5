//! Multi-time joint probabilities of `sigma_y` outcomes at `0, t, 2t` and the
//! no-signalling-in-time / arrow-of-time consistency checks built on them.
//!
//! Arrays are indexed by [`Outcome::index`], so `pair01[a][b]` is
//! `P(q0 = a, q1 = b)`. Raw values are kept unclamped.

use serde::{Deserialize, Serialize};

use crate::dynamics::apply_propagator;
use crate::error::{Error, Result};
use crate::model::{normalize, DensityMatrix, ModelParams, Outcome, DEFAULT_EPS_TRACE};
use crate::numerics::{expm, Matrix4};
use crate::spectrum::build_liouvillian;

type Dist1 = [f64; 2];
type Dist2 = [[f64; 2]; 2];
type Dist3 = [[[f64; 2]; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointProbTable {
    pub t: f64,
    /// `P(q0)`, `P(q1)`, `P(q2)` without intermediate measurements.
    pub single: [Dist1; 3],
    pub pair01: Dist2,
    pub pair02: Dist2,
    pub pair12: Dist2,
    pub triple: Dist3,
}

const O: [Outcome; 2] = Outcome::BOTH;

/// `Tr[P_o rho]` for a normalized state.
fn prob(o: Outcome, rho: &DensityMatrix) -> f64 {
    rho.expectation(&o.projector())
}

struct Propagators {
    e1: Matrix4,
    e2: Matrix4,
}

impl Propagators {
    fn new(p: &ModelParams, t: f64) -> Result<Self> {
        let e1 = expm(&build_liouvillian(p), t)?;
        Ok(Self { e1, e2: e1 * e1 })
    }

    /// Normalized evolution of `rho` over `t` (`twice = false`) or `2t`.
    fn evolve(&self, rho: &DensityMatrix, twice: bool, eps: f64, label: &str) -> Result<DensityMatrix> {
        let e = if twice { &self.e2 } else { &self.e1 };
        normalize(&apply_propagator(e, rho), eps).map_err(|err| err.on_branch(label))
    }
}

pub fn joint_probabilities(p: &ModelParams, t: f64) -> Result<JointProbTable> {
    joint_probabilities_with(p, t, DEFAULT_EPS_TRACE)
}

pub fn joint_probabilities_with(p: &ModelParams, t: f64, eps_trace: f64) -> Result<JointProbTable> {
    p.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("interval must be positive, got {t}")));
    }
    let prop = Propagators::new(p, t)?;
    let rho0 = DensityMatrix::plus_y();
    let rho_t = prop.evolve(&rho0, false, eps_trace, "unmeasured at t")?;
    let rho_2t = prop.evolve(&rho0, true, eps_trace, "unmeasured at 2t")?;

    let p0 = O.map(|o| prob(o, &rho0));
    let single = [p0, O.map(|o| prob(o, &rho_t)), O.map(|o| prob(o, &rho_2t))];

    // post-measurement states; a branch that never occurs contributes zero
    let proj = O.map(|o| DensityMatrix::from_matrix_unchecked(o.projector()));
    let mut after_t = [None; 2];
    let mut after_2t = [None; 2];
    for o in O {
        let label = |s: &str| format!("{} {s}", o.label());
        after_t[o.index()] = Some(prop.evolve(&proj[o.index()], false, eps_trace, &label("at t"))?);
        if p0[o.index()] != 0.0 {
            after_2t[o.index()] = Some(prop.evolve(&proj[o.index()], true, eps_trace, &label("at 2t"))?);
        }
    }
    let cond = |from: Outcome, to: Outcome| prob(to, after_t[from.index()].as_ref().expect("evolved"));
    let cond2 = |from: Outcome, to: Outcome| {
        after_2t[from.index()].as_ref().map_or(0.0, |r| prob(to, r))
    };

    let mut pair01 = [[0.0; 2]; 2];
    let mut pair02 = [[0.0; 2]; 2];
    let mut pair12 = [[0.0; 2]; 2];
    let mut triple = [[[0.0; 2]; 2]; 2];
    for a in O {
        for b in O {
            let (i, j) = (a.index(), b.index());
            pair01[i][j] = cond(a, b) * p0[i];
            pair02[i][j] = cond2(a, b) * p0[i];
            pair12[i][j] = cond(a, b) * single[1][i];
            for c in O {
                triple[i][j][c.index()] = cond(b, c) * cond(a, b) * p0[i];
            }
        }
    }
    Ok(JointProbTable { t, single, pair01, pair02, pair12, triple })
}

impl JointProbTable {
    pub fn pair(&self, i: usize, j: usize) -> &Dist2 {
        match (i, j) {
            (0, 1) => &self.pair01,
            (0, 2) => &self.pair02,
            (1, 2) => &self.pair12,
            _ => panic!("no pair ({i}, {j})"),
        }
    }

    /// Largest `|sum - 1|` over every stored distribution.
    pub fn normalization_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in &self.single {
            worst = worst.max((s[0] + s[1] - 1.0).abs());
        }
        for p in [&self.pair01, &self.pair02, &self.pair12] {
            let sum: f64 = p.iter().flatten().sum();
            worst = worst.max((sum - 1.0).abs());
        }
        let sum: f64 = self.triple.iter().flatten().flatten().sum();
        worst.max((sum - 1.0).abs())
    }

    /// Smallest and largest raw entry.
    pub fn range(&self) -> (f64, f64) {
        let all = self
            .single
            .iter()
            .flatten()
            .chain(self.pair01.iter().flatten())
            .chain(self.pair02.iter().flatten())
            .chain(self.pair12.iter().flatten())
            .chain(self.triple.iter().flatten().flatten());
        all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AotDefects {
    /// `max |P(qi) - sum_qj P(qi, qj)|` for `(0,1), (0,2), (1,2)`.
    pub pairs: [f64; 3],
    /// `max |P(q0, q1) - sum_q2 P(q0, q1, q2)|`.
    pub triple: f64,
}

impl AotDefects {
    pub fn max(&self) -> f64 {
        self.pairs.iter().fold(self.triple, |m, &v| m.max(v))
    }
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

pub fn check_aot(table: &JointProbTable) -> AotDefects {
    let pairs = PAIRS.map(|(i, j)| {
        let p = table.pair(i, j);
        (0..2)
            .map(|a| (table.single[i][a] - (p[a][0] + p[a][1])).abs())
            .fold(0.0, f64::max)
    });
    let mut triple = 0.0f64;
    for a in 0..2 {
        for b in 0..2 {
            let marg = table.triple[a][b][0] + table.triple[a][b][1];
            triple = triple.max((table.pair01[a][b] - marg).abs());
        }
    }
    AotDefects { pairs, triple }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacrorealismReport {
    pub t: f64,
    pub aot: AotDefects,
    /// `Delta_(i)j[qj] = |P(qj) - sum_qi P(qi, qj)|` for `(0,1), (0,2), (1,2)`.
    pub nsit_pairs: [Dist1; 3],
    /// `Delta_0(1)2[q0][q2] = |P(q0, q2) - sum_q1 P(q0, q1, q2)|`.
    pub nsit_0_1_2: Dist2,
    /// `Delta_(0)12[q1][q2] = |P(q1, q2) - sum_q0 P(q0, q1, q2)|`.
    pub nsit_0_12: Dist2,
}

pub fn check_nsit(table: &JointProbTable) -> MacrorealismReport {
    let nsit_pairs = PAIRS.map(|(i, j)| {
        let p = table.pair(i, j);
        [0, 1].map(|b| (table.single[j][b] - (p[0][b] + p[1][b])).abs())
    });
    let mut nsit_0_1_2 = [[0.0; 2]; 2];
    let mut nsit_0_12 = [[0.0; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let over_q1 = table.triple[x][0][y] + table.triple[x][1][y];
            nsit_0_1_2[x][y] = (table.pair02[x][y] - over_q1).abs();
            let over_q0 = table.triple[0][x][y] + table.triple[1][x][y];
            nsit_0_12[x][y] = (table.pair12[x][y] - over_q0).abs();
        }
    }
    MacrorealismReport { t: table.t, aot: check_aot(table), nsit_pairs, nsit_0_1_2, nsit_0_12 }
}

fn max2(d: &Dist2) -> f64 {
    d.iter().flatten().fold(0.0, |m, &v| m.max(v))
}

impl MacrorealismReport {
    /// `Delta_(i)j` for the outcome `qj`.
    pub fn delta_pair(&self, i: usize, j: usize, qj: Outcome) -> f64 {
        let k = PAIRS.iter().position(|&pr| pr == (i, j)).expect("valid time pair");
        self.nsit_pairs[k][qj.index()]
    }

    pub fn delta_0_1_2(&self, q0: Outcome, q2: Outcome) -> f64 {
        self.nsit_0_1_2[q0.index()][q2.index()]
    }

    pub fn delta_0_12(&self, q1: Outcome, q2: Outcome) -> f64 {
        self.nsit_0_12[q1.index()][q2.index()]
    }

    pub fn max_delta_0_1_2(&self) -> f64 {
        max2(&self.nsit_0_1_2)
    }

    pub fn max_delta_0_12(&self) -> f64 {
        max2(&self.nsit_0_12)
    }
}

pub fn macrorealism_report(p: &ModelParams, t: f64) -> Result<MacrorealismReport> {
    joint_probabilities(p, t).map(|table| check_nsit(&table))
}
