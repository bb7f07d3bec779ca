//! Headline acceptance checks, shared by `qcoinflip reproduce`.

use serde::Serialize;

use crate::analytics::{alice_cheat, bob_cheat_bound, event_probs, ProtocolParams};
use crate::channel::{ChannelParams, MeanPhotonNumber};
use crate::optimizer::{
    optimize, solve_fair_a, sweep_figure, Dataset, FairPoint, Figure, SweepGrid, DEFAULT_K_MAX,
    DEFAULT_MU_BRACKET, FAIRNESS_TOLERANCE,
};
use crate::oracle::{
    coefficient_grid, enumerate_event_probs, verify_conclusive_bound, verify_single_photon_helstrom,
    verify_two_photon_helstrom, BoundReport, HelstromReport, DEFAULT_RESOLUTION,
};
use crate::qstate::StateCoefficient;
use crate::simulator::{estimate_honest_abort, SimulationReport};
use crate::{Error, Result};

pub const HEADLINE_LENGTH_KM: f64 = 21.0;
pub const HEADLINE_TARGET: f64 = 0.01;
pub const HEADLINE_RANGE: (f64, f64) = (0.89, 0.925);
pub const ADVANTAGE_LENGTHS_KM: [f64; 5] = [1.0, 5.0, 10.0, 15.0, 21.0];
pub const NO_ADVANTAGE_LENGTH_KM: f64 = 30.0;
pub const REGION_TARGETS: [f64; 3] = [0.01, 0.015, 0.02];
pub const SIMULATION_LENGTHS_KM: [f64; 3] = [1.0, 10.0, 21.0];
pub const SIMULATION_TARGETS: [f64; 3] = [0.005, 0.01, 0.02];
pub const SIMULATION_RUNS: u64 = 100_000;
pub const ABORT_Z_LIMIT: f64 = 3.0;
pub const CAUSE_Z_LIMIT: f64 = 4.0;
pub const EVENT_TOLERANCE: f64 = 1e-9;
pub const EVENT_MUS: [f64; 3] = [0.05, 0.2, 1.0];

/// Honest abort targets of the figure sweeps.
pub fn figure_targets() -> Vec<f64> {
    (0..=12).map(|i| 0.008 + 0.001 * i as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] criterion {}: {}: {}", self.id, self.name, self.detail)
    }
}

pub fn headline(ch: &ChannelParams) -> (Option<FairPoint>, CriterionResult) {
    let ch = ch.with_length(HEADLINE_LENGTH_KM);
    match optimize(&ch, HEADLINE_TARGET, DEFAULT_K_MAX) {
        Ok(p) => {
            let (lo, hi) = HEADLINE_RANGE;
            let passed = p.p_cheat >= lo && p.p_cheat <= hi && p.advantage;
            let detail = format!(
                "L = {HEADLINE_LENGTH_KM} km, H = {HEADLINE_TARGET}: p_cheat = {:.6} (expected [{lo}, {hi}]), classical = {:.6}, advantage = {}, K = {}, mu = {:.6}, a = {:.6}",
                p.p_cheat, p.classical, p.advantage, p.params.pulses, p.params.mu.value(), p.params.a.value()
            );
            (Some(p), CriterionResult::new(1, "headline reproduction", passed, detail))
        }
        Err(e) => (None, CriterionResult::new(1, "headline reproduction", false, e.to_string())),
    }
}

/// Optimizer solutions over `lengths x targets`; failures are reported as
/// skipped points.
pub fn region_points(ch: &ChannelParams, lengths: &[f64], targets: &[f64]) -> (Vec<FairPoint>, Vec<String>) {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &length in lengths {
        for &target in targets {
            match optimize(&ch.with_length(length), target, DEFAULT_K_MAX) {
                Ok(p) => points.push(p),
                Err(e) => failures.push(format!("L = {length}, H = {target}: {e}")),
            }
        }
    }
    (points, failures)
}

/// Advantage expected below the distance limit and absent at 30 km.
pub fn advantage_region(points: &[FairPoint], failures: &[String]) -> CriterionResult {
    let mut problems: Vec<String> = failures.to_vec();
    for p in points {
        let expected = p.length_km <= HEADLINE_LENGTH_KM;
        if p.advantage != expected {
            problems.push(format!(
                "L = {}, H = {}: expected advantage = {expected}, got p_cheat = {:.6} vs classical {:.6}",
                p.length_km, p.abort_target, p.p_cheat, p.classical
            ));
        }
    }
    let passed = problems.is_empty();
    let detail = if passed {
        format!("{} points as expected", points.len())
    } else {
        problems.join("; ")
    };
    CriterionResult::new(2, "advantage region", passed, detail)
}

pub fn pulse_bound(points: &[FairPoint]) -> CriterionResult {
    let max_k = points.iter().map(|p| p.params.pulses).max().unwrap_or(0);
    CriterionResult::new(
        3,
        "pulse count bound",
        !points.is_empty() && max_k <= DEFAULT_K_MAX,
        format!("max K = {max_k} over {} solutions (limit {DEFAULT_K_MAX})", points.len()),
    )
}

pub fn helstrom_oracles() -> Result<(HelstromReport, HelstromReport, CriterionResult)> {
    let grid = coefficient_grid(0.01);
    let one = verify_single_photon_helstrom(&grid)?;
    let two = verify_two_photon_helstrom(&grid)?;
    let detail = format!(
        "max deviation {:.3e} (1 photon, tol {:.0e}), {:.3e} (2 photons, tol {:.0e}) over {} coefficients",
        one.max_deviation,
        one.tolerance,
        two.max_deviation,
        two.tolerance,
        grid.len()
    );
    let result = CriterionResult::new(4, "discrimination oracles", one.passed && two.passed, detail);
    Ok((one, two, result))
}

pub fn conclusive_bound(resolution: usize) -> Result<(BoundReport, CriterionResult)> {
    let report = verify_conclusive_bound(&coefficient_grid(0.02), resolution)?;
    let detail = format!(
        "{} coefficients, gap to -2a^2+4a-1 in [{:.3e}, {:.3e}]",
        report.points.len(),
        report.min_gap,
        report.max_gap
    );
    let passed = report.passed;
    Ok((report, CriterionResult::new(5, "conclusive-measurement bound", passed, detail)))
}

/// Protocol parameters for a Monte Carlo validation point: the optimizer's
/// solution, or, when the target sits at or below the noise floor, the
/// lowest-abort corner `(K_max, mu_max)` of the search space.
pub fn simulation_params(ch: &ChannelParams, target: f64) -> Result<ProtocolParams> {
    match optimize(ch, target, DEFAULT_K_MAX) {
        Ok(p) => Ok(p.params),
        Err(Error::NoFeasiblePulseCount { .. }) => {
            let mu = MeanPhotonNumber::new(DEFAULT_MU_BRACKET.1)?;
            let a = solve_fair_a(DEFAULT_K_MAX, mu).or_else(|_| StateCoefficient::new(0.9))?;
            ProtocolParams::new(DEFAULT_K_MAX, mu, a)
        }
        Err(e) => Err(e),
    }
}

pub fn simulation_agreement(
    ch: &ChannelParams,
    runs: u64,
    seed: u64,
) -> Result<(Vec<SimulationReport>, CriterionResult)> {
    let mut reports = Vec::new();
    let mut problems = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for &length in &SIMULATION_LENGTHS_KM {
        let ch = ch.with_length(length);
        for &target in &SIMULATION_TARGETS {
            let params = simulation_params(&ch, target)?;
            let report = estimate_honest_abort(&params, &ch, runs, seed);
            let z = report.abort_z();
            let causes = report.cause_z();
            let cause_max = causes.iter().copied().fold(0.0, f64::max);
            worst = (worst.0.max(z), worst.1.max(cause_max));
            if z > ABORT_Z_LIMIT || cause_max > CAUSE_Z_LIMIT {
                problems.push(format!(
                    "L = {length}, H = {target}: abort z = {z:.2}, cause z = {causes:.2?}"
                ));
            }
            reports.push(report);
        }
    }
    let passed = problems.is_empty();
    let detail = if passed {
        format!(
            "{} points x {runs} runs: max abort deviation {:.2} SE, max per-cause deviation {:.2} SE",
            reports.len(),
            worst.0,
            worst.1
        )
    } else {
        problems.join("; ")
    };
    Ok((reports, CriterionResult::new(6, "formula vs simulation", passed, detail)))
}

pub fn event_enumeration() -> Result<CriterionResult> {
    let mut worst = 0.0f64;
    for pulses in 1..=5u32 {
        for &m in &EVENT_MUS {
            let mu = MeanPhotonNumber::new(m)?;
            let cap = if pulses <= 3 { 12 } else { 9 };
            let closed = event_probs(pulses, mu);
            let brute = enumerate_event_probs(pulses as usize, mu, cap);
            let pairs = [
                (closed.a1, brute.a1),
                (closed.a2, brute.a2),
                (closed.a3, brute.a3),
                (closed.a4, brute.a4),
                (closed.rest, brute.rest),
            ];
            for (x, y) in pairs {
                worst = worst.max((x - y).abs());
            }
        }
    }
    Ok(CriterionResult::new(
        7,
        "event probabilities vs enumeration",
        worst < EVENT_TOLERANCE,
        format!("max deviation {worst:.3e} (tol {EVENT_TOLERANCE:.0e})"),
    ))
}

pub fn figure1(ch: &ChannelParams) -> Dataset {
    sweep_figure(
        Figure::AbortVsMu,
        ch,
        &SweepGrid::new(ADVANTAGE_LENGTHS_KM.to_vec(), figure_targets()),
    )
}

fn probability(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Fairness residuals, monotonicity in `a`, figure-1 shape, probability
/// ranges and seed determinism.
pub fn properties(points: &[FairPoint], fig1: &Dataset, ch: &ChannelParams, seed: u64) -> Result<CriterionResult> {
    let mut problems = Vec::new();
    let all: Vec<&FairPoint> = points.iter().chain(&fig1.records).collect();

    let worst_residual = all.iter().map(|p| p.fairness_residual()).fold(0.0, f64::max);
    if worst_residual >= FAIRNESS_TOLERANCE {
        problems.push(format!("fairness residual {worst_residual:.3e}"));
    }
    for p in &all {
        let fields = [p.p_cheat, p.p_alice, p.p_bob, p.honest_abort, p.classical];
        if !fields.into_iter().all(probability) {
            problems.push(format!("probability out of range at L = {}, H = {}", p.length_km, p.abort_target));
        }
    }

    for &(pulses, m) in &[(1u32, 0.1), (1000, 0.01), (15_000, 0.005)] {
        let mu = MeanPhotonNumber::new(m)?;
        let mut prev: Option<(f64, f64)> = None;
        for a in coefficient_grid(0.005) {
            let params = ProtocolParams::new(pulses, mu, a)?;
            let (pa, pb) = (alice_cheat(a), bob_cheat_bound(&params));
            if !probability(pa) || !probability(pb) {
                problems.push(format!("cheating probability out of range at a = {}", a.value()));
            }
            if let Some((qa, qb)) = prev {
                if pa >= qa || pb < qb - 1e-15 {
                    problems.push(format!("monotonicity in a broken at K = {pulses}, a = {}", a.value()));
                }
            }
            prev = Some((pa, pb));
        }
    }

    let fig1_violations = fig1.abort_vs_mu_violations();
    if !fig1_violations.is_empty() {
        problems.push(format!("figure 1 increases in mu at {fig1_violations:?}"));
    }

    let ch10 = ch.with_length(10.0);
    let params = ProtocolParams::new(
        1000,
        MeanPhotonNumber::new(0.05)?,
        StateCoefficient::new(0.88)?,
    )?;
    let first = serde_json::to_vec(&estimate_honest_abort(&params, &ch10, 5000, seed)).expect("report serializes");
    let second = serde_json::to_vec(&estimate_honest_abort(&params, &ch10, 5000, seed)).expect("report serializes");
    if first != second {
        problems.push("simulation reports differ for the same seed".to_string());
    }

    let passed = problems.is_empty();
    let detail = if passed {
        format!(
            "{} fair points, max residual {worst_residual:.3e}; figure 1 monotone; seed {seed} reproducible",
            all.len()
        )
    } else {
        problems.join("; ")
    };
    Ok(CriterionResult::new(8, "property suite", passed, detail))
}

/// Everything `reproduce` computes, for serialization.
#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceSummary {
    pub criteria: Vec<CriterionResult>,
    pub region: Vec<FairPoint>,
    pub simulations: Vec<SimulationReport>,
    pub single_photon: HelstromReport,
    pub two_photon: HelstromReport,
    pub bound: BoundReport,
}

impl AcceptanceSummary {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

/// Runs every acceptance check. `extra_lengths` are added to the region
/// scan (30 km is always included).
pub fn run_all(ch: &ChannelParams, extra_lengths: &[f64], runs: u64, seed: u64) -> Result<AcceptanceSummary> {
    let mut criteria = Vec::new();
    let (_, c1) = headline(ch);
    criteria.push(c1);

    let mut lengths = ADVANTAGE_LENGTHS_KM.to_vec();
    lengths.push(NO_ADVANTAGE_LENGTH_KM);
    for &l in extra_lengths {
        if !lengths.contains(&l) {
            lengths.push(l);
        }
    }
    lengths.sort_by(f64::total_cmp);
    let core: Vec<f64> = lengths
        .iter()
        .copied()
        .filter(|l| ADVANTAGE_LENGTHS_KM.contains(l) || *l == NO_ADVANTAGE_LENGTH_KM)
        .collect();
    let (region, failures) = region_points(ch, &lengths, &REGION_TARGETS);
    let checked: Vec<FairPoint> = region.iter().copied().filter(|p| core.contains(&p.length_km)).collect();
    criteria.push(advantage_region(&checked, &failures));
    let within: Vec<FairPoint> = checked
        .iter()
        .copied()
        .filter(|p| ADVANTAGE_LENGTHS_KM.contains(&p.length_km))
        .collect();
    criteria.push(pulse_bound(&within));

    let (single_photon, two_photon, c4) = helstrom_oracles()?;
    criteria.push(c4);
    let (bound, c5) = conclusive_bound(DEFAULT_RESOLUTION)?;
    criteria.push(c5);
    let (simulations, c6) = simulation_agreement(ch, runs, seed)?;
    criteria.push(c6);
    criteria.push(event_enumeration()?);
    let fig1 = figure1(ch);
    criteria.push(properties(&region, &fig1, ch, seed)?);

    Ok(AcceptanceSummary {
        criteria,
        region,
        simulations,
        single_photon,
        two_photon,
        bound,
    })
}
