//! Acceptance criteria for the primary component. Each test prints one
//! PASS/FAIL line; run with `--nocapture` to see them all.

use std::time::{Duration, Instant};

use qcoinflip::analytics::{alice_cheat, bob_cheat_bound, event_probs, honest_abort, ProtocolParams};
use qcoinflip::channel::{ChannelParams, MeanPhotonNumber};
use qcoinflip::optimizer::{optimize, solve_fair_a, sweep_figure, FairPoint, Figure, SweepGrid};
use qcoinflip::oracle::{
    coefficient_grid, enumerate_event_probs, search_conclusive_strategies, verify_single_photon_helstrom,
    verify_two_photon_helstrom,
};
use qcoinflip::qstate::{bit_guess_probability, StateCoefficient};
use qcoinflip::simulator::estimate_honest_abort;

const K_MAX: u32 = 15_000;
const SEED: u64 = 20_110_512;

fn table(length_km: f64) -> ChannelParams {
    let ch = ChannelParams {
        k_loss: 1.0,
        beta: 0.2,
        length_km,
        eta: 0.2,
        dark_count: 1e-5,
        noise: 0.01,
    };
    assert_eq!(ch, ChannelParams::default().with_length(length_km));
    ch
}

fn report(id: u8, passed: bool, detail: impl AsRef<str>) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {}", detail.as_ref());
}

fn within_budget(id: u8, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    let ok = elapsed < budget;
    report(id, ok, format!("runtime {elapsed:?} (budget {budget:?})"));
    assert!(ok);
}

fn region(lengths: &[f64], targets: &[f64]) -> Vec<FairPoint> {
    let mut out = Vec::new();
    for &l in lengths {
        for &h in targets {
            out.push(optimize(&table(l), h, K_MAX).unwrap_or_else(|e| panic!("L = {l}, H = {h}: {e}")));
        }
    }
    out
}

#[test]
fn criterion_1_headline_reproduction() {
    let start = Instant::now();
    let p = optimize(&table(21.0), 0.01, K_MAX).unwrap();
    let classical = 1.0 - 0.005f64.sqrt();
    let passed = (0.89..=0.925).contains(&p.p_cheat) && p.advantage && (p.classical - classical).abs() < 1e-12;
    report(
        1,
        passed,
        format!(
            "p_cheat = {:.6} in [0.89, 0.925], classical = {:.6}, advantage = {}",
            p.p_cheat, p.classical, p.advantage
        ),
    );
    assert!(passed);
    within_budget(1, start, Duration::from_secs(60));
}

#[test]
fn criterion_2_advantage_region() {
    let start = Instant::now();
    let inside = region(&[1.0, 5.0, 10.0, 15.0, 21.0], &[0.01, 0.015, 0.02]);
    let outside = region(&[30.0], &[0.01, 0.015, 0.02]);
    let mut failures = Vec::new();
    for p in &inside {
        if !p.advantage {
            failures.push(format!(
                "L = {} H = {}: p_cheat {:.6} >= classical {:.6}",
                p.length_km, p.abort_target, p.p_cheat, p.classical
            ));
        }
    }
    for p in &outside {
        if p.advantage {
            failures.push(format!("L = 30 H = {}: unexpected advantage", p.abort_target));
        }
    }
    let passed = failures.is_empty();
    report(
        2,
        passed,
        if passed {
            "advantage at 1-21 km for H in {0.01, 0.015, 0.02}; none at 30 km".to_string()
        } else {
            failures.join("; ")
        },
    );
    within_budget(2, start, Duration::from_secs(300));
    assert!(passed, "{failures:?}");
}

#[test]
fn criterion_3_pulse_count_bound() {
    let points = region(&[1.0, 5.0, 10.0, 15.0, 21.0], &[0.01, 0.015, 0.02]);
    let max_k = points.iter().map(|p| p.params.pulses).max().unwrap();
    let passed = max_k <= 15_000;
    report(3, passed, format!("max K = {max_k} over {} solutions", points.len()));
    assert!(passed);
}

#[test]
fn criterion_4_discrimination_oracles() {
    let start = Instant::now();
    let grid = coefficient_grid(0.01);
    assert_eq!(grid.len(), 51);
    let one = verify_single_photon_helstrom(&grid).unwrap();
    let two = verify_two_photon_helstrom(&grid).unwrap();
    // direct re-evaluation, independent of the report plumbing
    for a in &grid {
        assert!((bit_guess_probability(*a, 1).unwrap() - a.value()).abs() < 1e-10);
        assert!((bit_guess_probability(*a, 2).unwrap() - a.value()).abs() < 1e-9);
    }
    let passed = one.max_deviation < 1e-10 && two.max_deviation < 1e-9;
    report(
        4,
        passed,
        format!("max deviation {:.2e} / {:.2e}", one.max_deviation, two.max_deviation),
    );
    assert!(passed);
    within_budget(4, start, Duration::from_secs(10));
}

#[test]
fn criterion_5_conclusive_bound() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for a in coefficient_grid(0.02) {
        let s = search_conclusive_strategies(a, 200).unwrap();
        let a = a.value();
        let value = s.best.combined_value;
        let upper = -2.0 * a * a + 4.0 * a - 1.0;
        if value < a - 1e-9 || value > upper + 1e-9 || s.chain_violations > 0 || !s.best.is_valid_measurement() {
            failures.push(format!("a = {a}: value {value}, bound {upper}"));
        }
    }
    let passed = failures.is_empty();
    report(5, passed, if passed { "26 coefficients within [a, -2a^2+4a-1]".into() } else { failures.join("; ") });
    assert!(passed);
    within_budget(5, start, Duration::from_secs(120));
}

#[test]
fn criterion_6_formula_vs_simulation() {
    let start = Instant::now();
    let runs = 100_000;
    let mut failures = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for length in [1.0, 10.0, 21.0] {
        let ch = table(length);
        for target in [0.005, 0.01, 0.02] {
            let params = match optimize(&ch, target, K_MAX) {
                Ok(p) => p.params,
                Err(_) => {
                    // at or below the noise floor: lowest-abort corner of the search box
                    assert!(target <= ch.noise / 2.0);
                    let mu = MeanPhotonNumber::new(2.0).unwrap();
                    ProtocolParams::new(K_MAX, mu, solve_fair_a(K_MAX, mu).unwrap()).unwrap()
                }
            };
            let r = estimate_honest_abort(&params, &ch, runs, SEED);
            let z = r.abort_z();
            let causes = r.cause_z();
            let cause_max = causes.iter().copied().fold(0.0, f64::max);
            worst = (worst.0.max(z), worst.1.max(cause_max));
            assert!((r.analytic_abort - honest_abort(&params, &ch)).abs() < 1e-15);
            if z > 3.0 || cause_max > 4.0 {
                failures.push(format!("L = {length} H = {target}: z = {z:.2}, causes {causes:.2?}"));
            }
        }
    }
    let passed = failures.is_empty();
    report(
        6,
        passed,
        if passed {
            format!("9 points: max {:.2} SE overall, {:.2} SE per cause", worst.0, worst.1)
        } else {
            failures.join("; ")
        },
    );
    assert!(passed);
    within_budget(6, start, Duration::from_secs(300));
}

#[test]
fn criterion_7_event_enumeration() {
    let mut worst = 0.0f64;
    for pulses in 1..=5u32 {
        for m in [0.05, 0.2, 1.0] {
            let mu = MeanPhotonNumber::new(m).unwrap();
            let closed = event_probs(pulses, mu);
            let brute = enumerate_event_probs(pulses as usize, mu, 10);
            for (x, y) in [
                (closed.a1, brute.a1),
                (closed.a2, brute.a2),
                (closed.a3, brute.a3),
                (closed.a4, brute.a4),
                (closed.rest, brute.rest),
            ] {
                worst = worst.max((x - y).abs());
            }
        }
    }
    let passed = worst < 1e-9;
    report(7, passed, format!("max deviation {worst:.2e}"));
    assert!(passed);
}

#[test]
fn criterion_8_property_suite() {
    let mut failures = Vec::new();

    let fig1 = sweep_figure(
        Figure::AbortVsMu,
        &ChannelParams::default(),
        &SweepGrid::new(
            vec![1.0, 5.0, 10.0, 15.0, 21.0],
            (0..=12).map(|i| 0.008 + 0.001 * i as f64).collect(),
        ),
    );
    let mut points = region(&[1.0, 5.0, 10.0, 15.0, 21.0, 30.0], &[0.01, 0.015, 0.02]);
    points.extend(fig1.records.iter().copied());

    for p in &points {
        let a = p.params.a;
        let residual = (alice_cheat(a) - bob_cheat_bound(&p.params)).abs();
        if residual >= 1e-9 {
            failures.push(format!("fairness residual {residual:e} at L = {}", p.length_km));
        }
        for x in [p.p_cheat, p.honest_abort, p.classical, a.value(), p.params.mu.value()] {
            if !(0.0..=1.0).contains(&x) {
                failures.push(format!("value {x} out of [0, 1] at L = {}", p.length_km));
            }
        }
    }

    for (pulses, m) in [(1u32, 0.2), (100, 0.05), (15_000, 0.006)] {
        let mu = MeanPhotonNumber::new(m).unwrap();
        let grid = coefficient_grid(0.001);
        for w in grid.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let pb = |a: StateCoefficient| bob_cheat_bound(&ProtocolParams::new(pulses, mu, a).unwrap());
            if alice_cheat(hi) >= alice_cheat(lo) || pb(hi) < pb(lo) {
                failures.push(format!("monotonicity in a at K = {pulses}, a = {}", lo.value()));
            }
        }
    }

    for &length in &fig1.grid.lengths_km {
        let mut curve: Vec<&FairPoint> = fig1.curve(length).collect();
        curve.sort_by(|x, y| x.params.mu.value().total_cmp(&y.params.mu.value()));
        for w in curve.windows(2) {
            if w[1].honest_abort > w[0].honest_abort + 1e-12 {
                failures.push(format!("figure 1 increases with mu at L = {length}"));
            }
        }
    }

    let params = ProtocolParams::new(
        1000,
        MeanPhotonNumber::new(0.05).unwrap(),
        StateCoefficient::new(0.88).unwrap(),
    )
    .unwrap();
    let first = serde_json::to_vec(&estimate_honest_abort(&params, &table(10.0), 20_000, SEED)).unwrap();
    let second = serde_json::to_vec(&estimate_honest_abort(&params, &table(10.0), 20_000, SEED)).unwrap();
    if first != second {
        failures.push("seeded simulation not byte-identical".into());
    }

    let passed = failures.is_empty();
    report(
        8,
        passed,
        if passed {
            format!("{} fair points checked; monotonicity, ranges and determinism hold", points.len())
        } else {
            failures.join("; ")
        },
    );
    assert!(passed);
}
