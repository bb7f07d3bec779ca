//! Fairness solving and the search for the least cheatable fair protocol at
//! a given honest abort level.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analytics::{
    alice_cheat, bob_cheat_from_events, check_pulses, classical_bound, event_probs, honest_abort_at,
    ProtocolParams,
};
use crate::channel::{ChannelParams, MeanPhotonNumber};
use crate::qstate::StateCoefficient;
use crate::{Error, Result};

pub const FAIRNESS_TOLERANCE: f64 = 1e-9;
pub const ABORT_TOLERANCE: f64 = 1e-8;
pub const MAX_BISECTIONS: usize = 200;
pub const DEFAULT_K_MAX: u32 = 15_000;
pub const DEFAULT_MU_BRACKET: (f64, f64) = (1e-4, 2.0);

/// Coefficient `a` at which Alice's and Bob's cheating probabilities agree.
///
/// Alice's probability falls strictly in `a` and Bob's bound never falls, so
/// the crossing is unique whenever Bob's bound at `a = 1` reaches 0.75.
pub fn solve_fair_a(pulses: u32, mu: MeanPhotonNumber) -> Result<StateCoefficient> {
    check_pulses(pulses)?;
    let events = event_probs(pulses, mu);
    let imbalance = |a: f64| {
        let a = StateCoefficient::new(a).expect("bisection stays in [0.5, 1]");
        alice_cheat(a) - bob_cheat_from_events(&events, a)
    };

    let at_one = imbalance(1.0);
    if at_one > 0.0 {
        return Err(Error::NoFairPoint {
            pulses,
            mu: mu.value(),
            bob_at_one: 0.75 - at_one,
        });
    }
    if at_one == 0.0 {
        return StateCoefficient::new(1.0);
    }
    let (mut lo, mut hi) = (0.5, 1.0);
    let mut mid = 0.75;
    for _ in 0..MAX_BISECTIONS {
        mid = 0.5 * (lo + hi);
        let f = imbalance(mid);
        if f == 0.0 || hi - lo < f64::EPSILON {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let residual = imbalance(mid).abs();
    if residual >= FAIRNESS_TOLERANCE {
        return Err(Error::NoConvergence {
            what: "fair coefficient",
            residual,
        });
    }
    StateCoefficient::new(mid)
}

/// Mean photon number giving honest abort `target` with `pulses` pulses.
///
/// The honest abort probability does not increase with `mu`, so the target
/// must lie between its values at the two ends of `bracket`, and strictly
/// above the noise floor `e/2`.
pub fn solve_mu_for_abort(
    pulses: u32,
    ch: &ChannelParams,
    target: f64,
    bracket: (f64, f64),
) -> Result<MeanPhotonNumber> {
    check_pulses(pulses)?;
    let (mu_min, mu_max) = bracket;
    let lo_mu = MeanPhotonNumber::new(mu_min)?;
    let hi_mu = MeanPhotonNumber::new(mu_max)?;
    let h_max = honest_abort_at(pulses, lo_mu, ch);
    let h_min = honest_abort_at(pulses, hi_mu, ch);
    if target <= ch.noise / 2.0 || target < h_min || target > h_max || mu_min >= mu_max {
        return Err(Error::TargetUnreachable {
            target,
            min: h_min.max(ch.noise / 2.0),
            max: h_max,
        });
    }

    // bisect on log(mu); the bracket spans several decades
    let (mut lo, mut hi) = (mu_min.ln(), mu_max.ln());
    let mut best = (f64::INFINITY, mu_min);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let mu = mid.exp();
        let h = honest_abort_at(pulses, MeanPhotonNumber::new(mu)?, ch);
        let residual = (h - target).abs();
        if residual < best.0 {
            best = (residual, mu);
        }
        if residual < 1e-3 * ABORT_TOLERANCE || hi - lo < 1e-15 {
            break;
        }
        if h > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 >= ABORT_TOLERANCE {
        return Err(Error::NoConvergence {
            what: "mean photon number",
            residual: best.0,
        });
    }
    MeanPhotonNumber::new(best.1)
}

/// A fair protocol configuration at a target honest abort level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairPoint {
    pub length_km: f64,
    pub abort_target: f64,
    pub params: ProtocolParams,
    /// Common cheating probability `p_A = p_B` (reported as Alice's value).
    pub p_cheat: f64,
    pub p_alice: f64,
    pub p_bob: f64,
    pub honest_abort: f64,
    pub classical: f64,
    pub advantage: bool,
}

impl FairPoint {
    pub fn fairness_residual(&self) -> f64 {
        (self.p_alice - self.p_bob).abs()
    }
}

/// Builds the fair point for a fixed pulse count, solving `mu` then `a`.
pub fn fair_point_for(
    pulses: u32,
    ch: &ChannelParams,
    target: f64,
    bracket: (f64, f64),
) -> Result<FairPoint> {
    let mu = solve_mu_for_abort(pulses, ch, target, bracket)?;
    let a = solve_fair_a(pulses, mu)?;
    let params = ProtocolParams::new(pulses, mu, a)?;
    let p_alice = alice_cheat(a);
    let p_bob = bob_cheat_from_events(&event_probs(pulses, mu), a);
    let classical = classical_bound(target);
    Ok(FairPoint {
        length_km: ch.length_km,
        abort_target: target,
        params,
        p_cheat: p_alice,
        p_alice,
        p_bob,
        honest_abort: honest_abort_at(pulses, mu, ch),
        classical,
        advantage: p_alice < classical,
    })
}

/// Pulse counts tried by [`optimize`]: powers of two up to `k_max` (and
/// `k_max` itself), then a local pass of `±span` around the best one at step
/// `max(1, K / divisor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSchedule {
    pub k_max: u32,
    pub span: f64,
    pub divisor: u32,
}

impl KSchedule {
    pub fn new(k_max: u32) -> Self {
        Self {
            k_max,
            span: 0.25,
            divisor: 50,
        }
    }

    /// Same span, twice as many refinement points.
    pub fn denser(self) -> Self {
        Self {
            divisor: self.divisor * 2,
            ..self
        }
    }

    pub fn coarse(&self) -> Vec<u32> {
        let mut ks: Vec<u32> = std::iter::successors(Some(1u32), |k| k.checked_mul(2))
            .take_while(|&k| k <= self.k_max)
            .collect();
        if ks.last() != Some(&self.k_max) {
            ks.push(self.k_max);
        }
        ks
    }

    pub fn refinement(&self, centre: u32) -> Vec<u32> {
        let step = (centre / self.divisor).max(1);
        let lo = ((centre as f64 * (1.0 - self.span)).floor() as u32).max(1);
        let hi = ((centre as f64 * (1.0 + self.span)).ceil() as u32).min(self.k_max);
        let mut ks: Vec<u32> = (lo..=hi).step_by(step as usize).collect();
        if ks.last() != Some(&hi) {
            ks.push(hi);
        }
        ks
    }
}

fn better(candidate: &FairPoint, incumbent: &Option<FairPoint>) -> bool {
    match incumbent {
        None => true,
        Some(best) => {
            candidate.p_cheat < best.p_cheat
                || (candidate.p_cheat == best.p_cheat && candidate.params.pulses < best.params.pulses)
        }
    }
}

/// The fair point with the smallest cheating probability over the pulse
/// schedule, at honest abort `target`.
pub fn optimize_with(
    ch: &ChannelParams,
    target: f64,
    schedule: &KSchedule,
    bracket: (f64, f64),
) -> Result<FairPoint> {
    check_pulses(schedule.k_max)?;
    let mut best = None;
    let scan = |ks: Vec<u32>, best: &mut Option<FairPoint>| {
        for k in ks {
            // pulse counts without a fair point or a reachable target are skipped
            if let Ok(point) = fair_point_for(k, ch, target, bracket) {
                if better(&point, best) {
                    *best = Some(point);
                }
            }
        }
    };
    scan(schedule.coarse(), &mut best);
    if let Some(centre) = best.map(|p| p.params.pulses) {
        scan(schedule.refinement(centre), &mut best);
    }
    best.ok_or(Error::NoFeasiblePulseCount {
        k_max: schedule.k_max,
        target,
    })
}

pub fn optimize(ch: &ChannelParams, target: f64, k_max: u32) -> Result<FairPoint> {
    optimize_with(ch, target, &KSchedule::new(k_max), DEFAULT_MU_BRACKET)
}

/// The three datasets behind the result figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Figure {
    /// Honest abort versus optimal mean photon number, per length.
    AbortVsMu,
    /// Cheating probability versus honest abort, per length, with the
    /// classical curve.
    CheatVsAbort,
    /// Fair state coefficient versus honest abort, per length.
    CoefficientVsAbort,
}

impl Figure {
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Figure::AbortVsMu),
            2 => Some(Figure::CheatVsAbort),
            3 => Some(Figure::CoefficientVsAbort),
            _ => None,
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Figure::AbortVsMu => 1,
            Figure::CheatVsAbort => 2,
            Figure::CoefficientVsAbort => 3,
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fig{}", self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lengths_km: Vec<f64>,
    pub abort_targets: Vec<f64>,
    pub k_max: u32,
    pub mu_bracket: (f64, f64),
}

impl SweepGrid {
    pub fn new(lengths_km: Vec<f64>, abort_targets: Vec<f64>) -> Self {
        Self {
            lengths_km,
            abort_targets,
            k_max: DEFAULT_K_MAX,
            mu_bracket: DEFAULT_MU_BRACKET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub length_km: f64,
    pub abort_target: f64,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub figure: Figure,
    pub channel: ChannelParams,
    pub grid: SweepGrid,
    /// Grouped by length in grid order; within a length sorted by `mu` for
    /// figure 1 and by honest abort otherwise.
    pub records: Vec<FairPoint>,
    pub skipped: Vec<SkippedPoint>,
}

impl Dataset {
    pub fn curve(&self, length_km: f64) -> impl Iterator<Item = &FairPoint> {
        self.records.iter().filter(move |r| r.length_km == length_km)
    }

    /// Points where a figure-1 curve increases with `mu` (should be none).
    pub fn abort_vs_mu_violations(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &length in &self.grid.lengths_km {
            let mut curve: Vec<&FairPoint> = self.curve(length).collect();
            curve.sort_by(|x, y| x.params.mu.value().total_cmp(&y.params.mu.value()));
            for pair in curve.windows(2) {
                if pair[1].honest_abort > pair[0].honest_abort + 1e-12 {
                    out.push((length, pair[1].params.mu.value()));
                }
            }
        }
        out
    }
}

pub fn sweep_figure(figure: Figure, ch_base: &ChannelParams, grid: &SweepGrid) -> Dataset {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let schedule = KSchedule::new(grid.k_max);
    for &length_km in &grid.lengths_km {
        let ch = ch_base.with_length(length_km);
        let mut curve = Vec::new();
        for &target in &grid.abort_targets {
            match optimize_with(&ch, target, &schedule, grid.mu_bracket) {
                Ok(point) => curve.push(point),
                Err(e) => skipped.push(SkippedPoint {
                    length_km,
                    abort_target: target,
                    cause: e.to_string(),
                }),
            }
        }
        match figure {
            Figure::AbortVsMu => {
                curve.sort_by(|x, y| x.params.mu.value().total_cmp(&y.params.mu.value()))
            }
            _ => curve.sort_by(|x, y| x.abort_target.total_cmp(&y.abort_target)),
        }
        records.extend(curve);
    }
    Dataset {
        figure,
        channel: *ch_base,
        grid: grid.clone(),
        records,
        skipped,
    }
}

/// Lengths at which the advantage reappears after having been lost at a
/// shorter length, for each abort target of the dataset.
pub fn advantage_monotonicity_violations(records: &[FairPoint]) -> Vec<(f64, f64)> {
    let mut targets: Vec<f64> = records.iter().map(|r| r.abort_target).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let mut out = Vec::new();
    for target in targets {
        let mut row: Vec<&FairPoint> = records.iter().filter(|r| r.abort_target == target).collect();
        row.sort_by(|x, y| x.length_km.total_cmp(&y.length_km));
        let mut lost = false;
        for r in row {
            if lost && r.advantage {
                out.push((r.length_km, target));
            }
            lost |= !r.advantage;
        }
    }
    out
}
