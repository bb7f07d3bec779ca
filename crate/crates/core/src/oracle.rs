//! Numerical checks of the discrimination facts behind Bob's cheating bound.
//!
//! Three claims are verified independently of the closed forms in
//! [`crate::analytics`]:
//!
//! 1. The Helstrom success for one copy of the bit mixtures equals `a`.
//! 2. The Helstrom success for two copies also equals `a`.
//! 3. No measurement in a family of three-outcome strategies on two copies
//!    beats `-2a^2 + 4a - 1` when an inconclusive outcome falls back to a
//!    single-photon guess worth `a`.
//!
//! The strategy family for (3) lives on `span{|00>, |11>}`. Outcome `b` is
//! `w_b |psi_b><psi_b|` with `psi_b = cos(theta_b)|00> + sin(theta_b)|11>`;
//! the weights sit on the boundary of `w_0 P_0 + w_1 P_1 <= I` and the
//! remainder, including the whole `(|01> +- |10>)` sector, is inconclusive.
//! The value of a strategy is linear in an overall weight scale, so only the
//! boundary and the empty measurement need to be searched.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{cheat_given_a4, EventProbs};
use crate::channel::{poisson_pmf, MeanPhotonNumber};
use crate::linalg::symmetric_eigenvalues;
use crate::qstate::{bit_guess_probability, mixture_density, Bit, StateCoefficient};
use crate::{Error, Result};

pub const SINGLE_PHOTON_TOLERANCE: f64 = 1e-10;
pub const TWO_PHOTON_TOLERANCE: f64 = 1e-9;
pub const BOUND_TOLERANCE: f64 = 1e-9;
pub const COMPLETENESS_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_RESOLUTION: usize = 200;

/// Evenly spaced coefficients from 0.5 to 1 inclusive.
pub fn coefficient_grid(step: f64) -> Vec<StateCoefficient> {
    let n = (0.5 / step).round().max(1.0) as usize;
    (0..=n)
        .map(|i| StateCoefficient::new(0.5 + 0.5 * i as f64 / n as f64).expect("grid within [0.5, 1]"))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct HelstromPoint {
    pub a: f64,
    pub success: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HelstromReport {
    pub photons: u32,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub worst_a: f64,
    pub passed: bool,
    pub points: Vec<HelstromPoint>,
}

impl HelstromReport {
    pub fn check(&self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        Err(Error::OracleViolation {
            check: if self.photons == 1 {
                "single-photon Helstrom"
            } else {
                "two-photon Helstrom"
            },
            a: self.worst_a,
            value: self.max_deviation,
        })
    }
}

fn verify_helstrom(grid: &[StateCoefficient], photons: u32, tolerance: f64) -> Result<HelstromReport> {
    let points = grid
        .iter()
        .map(|&a| {
            let success = bit_guess_probability(a, photons)?;
            Ok(HelstromPoint {
                a: a.value(),
                success,
                deviation: (success - a.value()).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = points
        .iter()
        .max_by(|x, y| x.deviation.total_cmp(&y.deviation));
    let (max_deviation, worst_a) = worst.map_or((0.0, f64::NAN), |p| (p.deviation, p.a));
    Ok(HelstromReport {
        photons,
        tolerance,
        max_deviation,
        worst_a,
        passed: max_deviation < tolerance,
        points,
    })
}

pub fn verify_single_photon_helstrom(grid: &[StateCoefficient]) -> Result<HelstromReport> {
    verify_helstrom(grid, 1, SINGLE_PHOTON_TOLERANCE)
}

pub fn verify_two_photon_helstrom(grid: &[StateCoefficient]) -> Result<HelstromReport> {
    verify_helstrom(grid, 2, TWO_PHOTON_TOLERANCE)
}

/// Event probabilities by exhaustive enumeration of per-pulse photon counts
/// `0..=cap`, with one extra count standing for "more than `cap`".
///
/// Exponential in `pulses`; meant for cross-checking the closed forms at
/// small `K`.
pub fn enumerate_event_probs(pulses: usize, mu: MeanPhotonNumber, cap: usize) -> EventProbs {
    let mut weights: Vec<f64> = (0..=cap).map(|i| poisson_pmf(mu, i)).collect();
    weights.push((1.0 - weights.iter().sum::<f64>()).max(0.0));
    let overflow = cap + 1;

    let mut totals = [0.0; 5];
    let mut counts = vec![0usize; pulses];
    'outer: loop {
        let weight: f64 = counts.iter().map(|&n| weights[n]).product();
        let twos = counts.iter().filter(|&&n| n == 2).count();
        let ones = counts.iter().filter(|&&n| n == 1).count();
        let big = counts.iter().any(|&n| n >= 3);
        let event = match (big, twos, ones) {
            (false, 0, 0) => 0,
            (false, 0, _) => 1,
            (false, 1, 0) => 2,
            (false, 1, _) => 3,
            _ => 4,
        };
        totals[event] += weight;

        for slot in counts.iter_mut() {
            *slot += 1;
            if *slot <= overflow {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    EventProbs {
        a1: totals[0],
        a2: totals[1],
        a3: totals[2],
        a4: totals[3],
        rest: totals[4],
    }
}

/// A three-outcome measurement on two copies together with its performance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConclusiveStrategy {
    pub theta0: f64,
    pub theta1: f64,
    /// Weight of outcome 0; outcome 1 takes the largest weight that keeps
    /// the inconclusive remainder positive.
    pub weight0: f64,
    pub weight1: f64,
    /// `c`: probability of a conclusive answer.
    pub conclusive_prob: f64,
    /// `gamma`: accuracy of a conclusive answer.
    pub conclusive_accuracy: f64,
    /// `gamma'`: accuracy of the best guess from the inconclusive outcome.
    pub inconclusive_accuracy: f64,
    /// `x = c gamma + (1 - c)/2`: success when inconclusive means a coin toss.
    pub guess_value: f64,
    /// `c gamma + (1 - c) a`.
    pub combined_value: f64,
}

impl ConclusiveStrategy {
    /// Full 4x4 outcome operators `[E_0, E_1, E_inconclusive]` in the
    /// `|00>, |01>, |10>, |11>` basis.
    pub fn operators(&self) -> [Vec<f64>; 3] {
        let embed = |theta: f64, w: f64| {
            let v = [theta.cos(), 0.0, 0.0, theta.sin()];
            let mut m = vec![0.0; 16];
            for i in 0..4 {
                for j in 0..4 {
                    m[i * 4 + j] = w * v[i] * v[j];
                }
            }
            m
        };
        let e0 = embed(self.theta0, self.weight0);
        let e1 = embed(self.theta1, self.weight1);
        let rest = (0..16)
            .map(|k| if k % 5 == 0 { 1.0 } else { 0.0 } - e0[k] - e1[k])
            .collect();
        [e0, e1, rest]
    }

    /// Outcome operators sum to identity and are each positive semidefinite.
    pub fn is_valid_measurement(&self) -> bool {
        let ops = self.operators();
        let complete = (0..16).all(|k| {
            let id = if k % 5 == 0 { 1.0 } else { 0.0 };
            (ops[0][k] + ops[1][k] + ops[2][k] - id).abs() < COMPLETENESS_TOLERANCE
        });
        complete
            && ops
                .iter()
                .all(|m| symmetric_eigenvalues(m, 4)[0] >= -COMPLETENESS_TOLERANCE)
    }
}

/// The `{|00>, |11>}` block of the two-copy mixtures, read off the actual
/// density matrices.
struct Blocks {
    a: f64,
    rho: [[f64; 3]; 2],
}

impl Blocks {
    fn new(a: StateCoefficient) -> Result<Self> {
        let mut rho = [[0.0; 3]; 2];
        for (slot, c) in rho.iter_mut().zip(Bit::BOTH) {
            let m = mixture_density(c, a, 2)?;
            *slot = [m.get(0, 0), m.get(0, 3), m.get(3, 3)];
        }
        Ok(Self { a: a.value(), rho })
    }

    /// `<psi(theta)| rho_c |psi(theta)>`.
    fn overlap(&self, c: usize, cos: f64, sin: f64) -> f64 {
        let [p, q, r] = self.rho[c];
        cos * cos * p + 2.0 * cos * sin * q + sin * sin * r
    }

    fn evaluate(&self, theta0: f64, theta1: f64, weight0: f64) -> ConclusiveStrategy {
        let (s0, c0) = theta0.sin_cos();
        let (s1, c1) = theta1.sin_cos();
        let o2 = (c0 * c1 + s0 * s1).powi(2);
        let weight1 = boundary_weight(weight0, o2);
        // p[b][c] = tr(E_b rho_c)
        let p00 = weight0 * self.overlap(0, c0, s0);
        let p01 = weight0 * self.overlap(1, c0, s0);
        let p10 = weight1 * self.overlap(0, c1, s1);
        let p11 = weight1 * self.overlap(1, c1, s1);
        let conclusive = 0.5 * (p00 + p01 + p10 + p11);
        let correct = 0.5 * (p00 + p11);
        let q0 = 1.0 - p00 - p10;
        let q1 = 1.0 - p01 - p11;
        let inconclusive_accuracy = if q0 + q1 > 0.0 {
            q0.max(q1) / (q0 + q1)
        } else {
            0.5
        };
        ConclusiveStrategy {
            theta0,
            theta1,
            weight0,
            weight1,
            conclusive_prob: conclusive,
            conclusive_accuracy: if conclusive > 0.0 { correct / conclusive } else { 0.5 },
            inconclusive_accuracy,
            guess_value: correct + 0.5 * (1.0 - conclusive),
            combined_value: correct + (1.0 - conclusive) * self.a,
        }
    }

    fn empty_measurement(&self) -> ConclusiveStrategy {
        ConclusiveStrategy {
            theta0: 0.0,
            theta1: 0.0,
            weight0: 0.0,
            weight1: 0.0,
            conclusive_prob: 0.0,
            conclusive_accuracy: 0.5,
            inconclusive_accuracy: 0.5,
            guess_value: 0.5,
            combined_value: self.a,
        }
    }
}

/// Largest `w1` with `I - w0 P0 - w1 P1 >= 0` for unit projectors whose
/// squared overlap is `o2`.
fn boundary_weight(w0: f64, o2: f64) -> f64 {
    let slack = 1.0 - w0;
    if slack <= 0.0 {
        // w0 = 1 leaves room only in the orthogonal complement of psi_0
        return if o2 < 1e-24 { 1.0 } else { 0.0 };
    }
    let denom = slack + w0 * o2;
    {
        (slack / denom).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategySearch {
    pub a: f64,
    pub best: ConclusiveStrategy,
    /// `-2a^2 + 4a - 1`.
    pub bound: f64,
    /// `bound - best.combined_value`.
    pub gap: f64,
    pub evaluated: usize,
    /// Evaluated strategies violating `x <= a` or
    /// `value <= x + (2 - 2x)(a - 1/2)`, each with 1e-9 slack.
    pub chain_violations: usize,
}

struct Tracker<'a> {
    blocks: &'a Blocks,
    best: ConclusiveStrategy,
    evaluated: usize,
    chain_violations: usize,
}

impl Tracker<'_> {
    fn consider(&mut self, s: ConclusiveStrategy) {
        let a = self.blocks.a;
        let x = s.guess_value;
        if x > a + BOUND_TOLERANCE
            || s.combined_value > x + (2.0 - 2.0 * x) * (a - 0.5) + BOUND_TOLERANCE
        {
            self.chain_violations += 1;
        }
        self.evaluated += 1;
        if s.combined_value > self.best.combined_value {
            self.best = s;
        }
    }
}

/// Grid search (then one refinement pass at ten times finer spacing) for
/// the best conclusive strategy at coefficient `a`.
pub fn search_conclusive_strategies(a: StateCoefficient, resolution: usize) -> Result<StrategySearch> {
    let resolution = resolution.max(2);
    let blocks = Blocks::new(a)?;
    let mut tracker = Tracker {
        blocks: &blocks,
        best: blocks.empty_measurement(),
        evaluated: 0,
        chain_violations: 0,
    };

    let angle_step = PI / resolution as f64;
    let weight_step = 1.0 / (resolution - 1) as f64;
    for i in 0..resolution {
        let theta0 = i as f64 * angle_step;
        for j in 0..resolution {
            let theta1 = j as f64 * angle_step;
            for k in 0..resolution {
                tracker.consider(blocks.evaluate(theta0, theta1, k as f64 * weight_step));
            }
        }
    }

    let centre = tracker.best;
    if centre.weight0 > 0.0 || centre.weight1 > 0.0 {
        const FINE: i32 = 10;
        for di in -FINE..=FINE {
            let theta0 = centre.theta0 + di as f64 * angle_step / FINE as f64;
            for dj in -FINE..=FINE {
                let theta1 = centre.theta1 + dj as f64 * angle_step / FINE as f64;
                for dk in -FINE..=FINE {
                    let w = centre.weight0 + dk as f64 * weight_step / FINE as f64;
                    if (0.0..=1.0).contains(&w) {
                        tracker.consider(blocks.evaluate(theta0, theta1, w));
                    }
                }
            }
        }
    }

    let bound = cheat_given_a4(a);
    Ok(StrategySearch {
        a: a.value(),
        best: tracker.best,
        bound,
        gap: bound - tracker.best.combined_value,
        evaluated: tracker.evaluated,
        chain_violations: tracker.chain_violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundPoint {
    pub search: StrategySearch,
    pub lower: f64,
    pub upper: f64,
    pub valid_measurement: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub resolution: usize,
    pub passed: bool,
    pub max_gap: f64,
    pub min_gap: f64,
    pub points: Vec<BoundPoint>,
}

impl BoundReport {
    pub fn check(&self) -> Result<()> {
        match self.points.iter().find(|p| !p.passed) {
            None => Ok(()),
            Some(p) => Err(Error::OracleViolation {
                check: "conclusive-strategy bound",
                a: p.search.a,
                value: p.search.best.combined_value,
            }),
        }
    }
}

/// Runs the strategy search over `grid` and checks
/// `a <= best value <= -2a^2 + 4a - 1` (with 1e-9 slack) at every point.
pub fn verify_conclusive_bound(grid: &[StateCoefficient], resolution: usize) -> Result<BoundReport> {
    let points = grid
        .par_iter()
        .map(|&a| {
            let search = search_conclusive_strategies(a, resolution)?;
            let lower = a.value();
            let upper = search.bound;
            let value = search.best.combined_value;
            let valid_measurement = search.best.is_valid_measurement();
            let passed = value >= lower - BOUND_TOLERANCE
                && value <= upper + BOUND_TOLERANCE
                && search.chain_violations == 0
                && valid_measurement;
            Ok(BoundPoint {
                search,
                lower,
                upper,
                valid_measurement,
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps = points.iter().map(|p| p.search.gap);
    Ok(BoundReport {
        resolution,
        passed: points.iter().all(|p| p.passed),
        max_gap: gaps.clone().fold(f64::NEG_INFINITY, f64::max),
        min_gap: gaps.fold(f64::INFINITY, f64::min),
        points,
    })
}
