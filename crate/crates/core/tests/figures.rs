use qcoinflip::channel::ChannelParams;
use qcoinflip::optimizer::{advantage_monotonicity_violations, optimize, sweep_figure, Figure, SweepGrid};

const LENGTHS: [f64; 5] = [1.0, 5.0, 10.0, 15.0, 21.0];

fn targets(lo: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / 0.001).round() as usize;
    (0..=n).map(|i| lo + 0.001 * i as f64).collect()
}

fn fig2() -> qcoinflip::optimizer::Dataset {
    sweep_figure(
        Figure::CheatVsAbort,
        &ChannelParams::default(),
        &SweepGrid::new(LENGTHS.to_vec(), targets(0.008, 0.02)),
    )
}

#[test]
fn classical_column_matches_closed_form() {
    let data = fig2();
    for p in &data.records {
        assert!((p.classical - (1.0 - (p.abort_target / 2.0).sqrt())).abs() < 1e-15);
        if (p.abort_target - 0.02).abs() < 1e-12 {
            assert!((p.classical - 0.9).abs() < 1e-12);
        }
    }
}

#[test]
fn quantum_advantage_up_to_h_0_017() {
    let data = fig2();
    for p in data.records.iter().filter(|p| p.abort_target <= 0.017 + 1e-12) {
        assert!(p.advantage, "L = {} H = {}: {} vs {}", p.length_km, p.abort_target, p.p_cheat, p.classical);
    }
}

#[test]
fn advantage_crossovers() {
    // the highest target with an advantage, per length
    let data = fig2();
    let last = |l: f64| {
        data.curve(l)
            .filter(|p| p.advantage)
            .map(|p| p.abort_target)
            .fold(0.0, f64::max)
    };
    assert!((last(21.0) - 0.017).abs() < 1e-9);
    assert!((last(15.0) - 0.018).abs() < 1e-9);
    for l in LENGTHS {
        assert!(data.curve(l).any(|p| !p.advantage && (p.abort_target - 0.02).abs() < 1e-9));
    }
}

#[test]
fn advantage_shrinks_with_distance() {
    let grid = SweepGrid::new(vec![1.0, 5.0, 10.0, 15.0, 21.0, 30.0], targets(0.008, 0.02));
    let data = sweep_figure(Figure::CheatVsAbort, &ChannelParams::default(), &grid);
    assert!(advantage_monotonicity_violations(&data.records).is_empty());
    assert!(data.curve(30.0).all(|p| !p.advantage));
}

#[test]
fn figure1_abort_falls_with_mu() {
    let data = sweep_figure(
        Figure::AbortVsMu,
        &ChannelParams::default(),
        &SweepGrid::new(LENGTHS.to_vec(), targets(0.008, 0.02)),
    );
    assert!(data.abort_vs_mu_violations().is_empty());
}

#[test]
fn figure3_coefficients_stay_in_range() {
    let data = sweep_figure(
        Figure::CoefficientVsAbort,
        &ChannelParams::default(),
        &SweepGrid::new(LENGTHS.to_vec(), targets(0.008, 0.02)),
    );
    for p in &data.records {
        let a = p.params.a.value();
        assert!((0.5..=1.0).contains(&a));
        assert!(p.fairness_residual() < 1e-9);
    }
}

#[test]
fn headline_point_golden() {
    let p = optimize(&ChannelParams::default().with_length(21.0), 0.01, 15_000).unwrap();
    assert_eq!(p.params.pulses, 13_350);
    assert!((p.params.mu.value() - 0.00907561429259643).abs() < 1e-10);
    assert!((p.params.a.value() - 0.8731481001654).abs() < 1e-9);
    assert!((p.p_cheat - 0.916403497065831).abs() < 1e-9);
    assert!((p.classical - 0.929289321881345).abs() < 1e-12);
}
