use qcoinflip::channel::ChannelParams;
use qcoinflip::optimizer::optimize;
use qcoinflip::simulator::{estimate_honest_abort, CHI_SQUARE_1DOF_P001};

#[test]
fn optimized_point_matches_formula_at_15_km() {
    let ch = ChannelParams::default().with_length(15.0);
    let point = optimize(&ch, 0.015, 15_000).unwrap();
    let report = estimate_honest_abort(&point.params, &ch, 100_000, 1);
    assert!(report.abort_z() <= 3.0, "z = {}", report.abort_z());
    assert!((report.analytic_abort - point.honest_abort).abs() < 1e-15);
}

#[test]
fn accepted_coins_are_unbiased() {
    let ch = ChannelParams::default().with_length(10.0);
    let point = optimize(&ch, 0.01, 15_000).unwrap();
    let report = estimate_honest_abort(&point.params, &ch, 100_000, 2);
    assert!(report.coin_chi_square() < CHI_SQUARE_1DOF_P001, "chi2 = {}", report.coin_chi_square());
}
