//! Closed-form security figures of the protocol.

use serde::{Deserialize, Serialize};

use crate::channel::{blank_probability, poisson_pmf, ChannelParams, MeanPhotonNumber};
use crate::qstate::StateCoefficient;
use crate::{Error, Result};

pub const MAX_PULSES: u32 = 1_000_000;

/// Above this ratio the dark-count series is summed term by term.
const SERIES_CLOSED_FORM_LIMIT: f64 = 1.0 - 1e-12;

/// The three protocol knobs: pulse count `K`, mean photon number and state
/// coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub pulses: u32,
    pub mu: MeanPhotonNumber,
    pub a: StateCoefficient,
}

impl ProtocolParams {
    pub fn new(pulses: u32, mu: MeanPhotonNumber, a: StateCoefficient) -> Result<Self> {
        check_pulses(pulses)?;
        Ok(Self { pulses, mu, a })
    }
}

pub(crate) fn check_pulses(pulses: u32) -> Result<()> {
    if (1..=MAX_PULSES).contains(&pulses) {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "K",
            value: pulses as f64,
            expected: "[1, 1000000]",
        })
    }
}

/// Decomposition of the honest abort probability by cause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbortTerms {
    /// No click in any of the K pulses.
    pub no_detection: f64,
    /// First click is a dark count and fails Bob's check (1/4 of such runs).
    pub dark_count_check: f64,
    /// First click is a signal corrupted by channel noise (e/2 of such runs).
    pub noise_check: f64,
}

impl AbortTerms {
    pub fn total(&self) -> f64 {
        self.no_detection + self.dark_count_check + self.noise_check
    }
}

/// `sum_{i=1}^{K} (1-d)^{i-1} d Z^i`: probability that the first click is a
/// dark count.
fn dark_first_probability(pulses: u32, dark: f64, blank: f64) -> f64 {
    let ratio = (1.0 - dark) * blank;
    if ratio > SERIES_CLOSED_FORM_LIMIT {
        let mut term = dark * blank;
        let mut sum = 0.0;
        for _ in 0..pulses {
            sum += term;
            term *= ratio;
        }
        sum
    } else {
        dark * blank * (1.0 - ratio.powi(pulses as i32)) / (1.0 - ratio)
    }
}

pub fn abort_terms(pulses: u32, mu: MeanPhotonNumber, ch: &ChannelParams) -> AbortTerms {
    let blank = blank_probability(mu, ch);
    let silent = ((1.0 - ch.dark_count) * blank).powi(pulses as i32);
    let dark_first = dark_first_probability(pulses, ch.dark_count, blank);
    let signal_first = (1.0 - silent - dark_first).max(0.0);
    AbortTerms {
        no_detection: silent,
        dark_count_check: 0.25 * dark_first,
        noise_check: 0.5 * ch.noise * signal_first,
    }
}

/// Honest abort probability `H`. Depends only on `K`, `mu` and the channel.
pub fn honest_abort(p: &ProtocolParams, ch: &ChannelParams) -> f64 {
    honest_abort_at(p.pulses, p.mu, ch)
}

pub fn honest_abort_at(pulses: u32, mu: MeanPhotonNumber, ch: &ChannelParams) -> f64 {
    abort_terms(pulses, mu, ch).total().clamp(0.0, 1.0)
}

/// Optimal cheating probability of a dishonest Alice, `(3 + 2 sqrt(a(1-a)))/4`.
pub fn alice_cheat(a: StateCoefficient) -> f64 {
    let a = a.value();
    (3.0 + 2.0 * (a * (1.0 - a)).sqrt()) / 4.0
}

/// Upper bound on Bob's success when he holds one 2-photon pulse and at
/// least one single-photon pulse: `-2a^2 + 4a - 1`.
pub fn cheat_given_a4(a: StateCoefficient) -> f64 {
    let a = a.value();
    -2.0 * a * a + 4.0 * a - 1.0
}

/// Probability at honest abort level `h` of the best classical protocol:
/// `1 - sqrt(h/2)`.
pub fn classical_bound(h: f64) -> f64 {
    1.0 - (h / 2.0).sqrt()
}

/// Photon-number configurations that determine dishonest Bob's advantage.
///
/// - `a1`: every pulse empty.
/// - `a2`: every pulse has at most one photon, at least one has exactly one.
/// - `a3`: exactly one 2-photon pulse, all others empty.
/// - `a4`: exactly one 2-photon pulse, the others at most one photon, at
///   least one single-photon pulse.
/// - `rest`: two or more 2-photon pulses, or any pulse with 3+ photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventProbs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub rest: f64,
}

impl EventProbs {
    pub fn total(&self) -> f64 {
        self.a1 + self.a2 + self.a3 + self.a4 + self.rest
    }
}

pub fn event_probs(pulses: u32, mu: MeanPhotonNumber) -> EventProbs {
    let k = pulses as i32;
    let p0 = poisson_pmf(mu, 0);
    let p1 = poisson_pmf(mu, 1);
    let p2 = poisson_pmf(mu, 2);
    let at_most_one = p0 + p1;
    let a1 = p0.powi(k);
    let a2 = at_most_one.powi(k) - a1;
    let a3 = pulses as f64 * p2 * p0.powi(k - 1);
    let a4 = pulses as f64 * p2 * (at_most_one.powi(k - 1) - p0.powi(k - 1));
    let rest = (1.0 - a1 - a2 - a3 - a4).max(0.0);
    EventProbs {
        a1,
        a2,
        a3,
        a4,
        rest,
    }
}

/// Bob's cheating probability bound given the event probabilities.
pub fn bob_cheat_from_events(events: &EventProbs, a: StateCoefficient) -> f64 {
    let value = 0.5 * events.a1
        + a.value() * (events.a2 + events.a3)
        + cheat_given_a4(a) * events.a4
        + events.rest;
    value.clamp(0.0, 1.0)
}

/// Upper bound on dishonest Bob's cheating probability.
pub fn bob_cheat_bound(p: &ProtocolParams) -> f64 {
    bob_cheat_from_events(&event_probs(p.pulses, p.mu), p.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mu(x: f64) -> MeanPhotonNumber {
        MeanPhotonNumber::new(x).unwrap()
    }

    fn coeff(a: f64) -> StateCoefficient {
        StateCoefficient::new(a).unwrap()
    }

    #[test]
    fn honest_abort_specialisations() {
        let base = ChannelParams::default().with_length(5.0);
        let m = mu(0.3);
        let z = blank_probability(m, &base);

        let clean = ChannelParams {
            dark_count: 0.0,
            noise: 0.0,
            ..base
        };
        let h = honest_abort_at(17, m, &clean);
        assert!((h - z.powi(17)).abs() < 1e-15);

        let quiet = ChannelParams { noise: 0.0, ..base };
        let d = quiet.dark_count;
        let h = honest_abort_at(1, m, &quiet);
        assert!((h - (z * (1.0 - d) + d * z / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_series_matches_direct_sum() {
        let ch = ChannelParams::default().with_length(21.0);
        for (pulses, m) in [(1u32, 0.5), (100, 0.01), (15_000, 0.009), (15_000, 1e-4)] {
            let z = blank_probability(mu(m), &ch);
            let d = ch.dark_count;
            let direct: f64 = (1..=pulses)
                .map(|i| (1.0 - d).powi(i as i32 - 1) * d * z.powi(i as i32))
                .sum();
            let closed = dark_first_probability(pulses, d, z);
            assert!((direct - closed).abs() < 1e-12 * direct.max(1e-300) + 1e-15);
        }
        // ratio pinned at 1 falls back to direct summation
        assert!((dark_first_probability(10, 1e-13, 1.0) - 1e-12).abs() < 1e-20);
    }

    #[test]
    fn honest_abort_floor_is_half_the_noise() {
        let ch = ChannelParams {
            k_loss: 0.0,
            eta: 1.0,
            ..ChannelParams::default()
        };
        let terms = abort_terms(15_000, mu(2.0), &ch);
        assert!(terms.no_detection < 1e-6 && terms.dark_count_check < 1e-6);
        assert!(terms.total() >= ch.noise / 2.0 - 1e-12);
        assert!((terms.total() - ch.noise / 2.0).abs() < 1e-6);
        for (pulses, m) in [(1u32, 0.01), (1000, 0.05), (15_000, 0.5)] {
            let t = abort_terms(pulses, mu(m), &ch);
            let detected = 1.0 - t.no_detection - 4.0 * t.dark_count_check;
            assert!(t.total() >= ch.noise / 2.0 * detected - 1e-15);
        }
    }

    #[test]
    fn honest_abort_non_increasing_in_mu() {
        for length in [1.0, 10.0, 21.0] {
            let ch = ChannelParams::default().with_length(length);
            for pulses in [100u32, 1000, 15_000] {
                let mut prev = f64::INFINITY;
                for step in 0..=400 {
                    let m = 0.001 + (2.0 - 0.001) * step as f64 / 400.0;
                    let h = honest_abort_at(pulses, mu(m), &ch);
                    assert!((0.0..=1.0).contains(&h));
                    assert!(h <= prev + 1e-12, "L={length} K={pulses} mu={m}");
                    prev = h;
                }
            }
        }
    }

    #[test]
    fn alice_examples() {
        assert_eq!(alice_cheat(coeff(1.0)), 0.75);
        assert_eq!(alice_cheat(coeff(0.5)), 1.0);
        assert!((alice_cheat(coeff(0.9)) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn a4_bound_examples() {
        assert_eq!(cheat_given_a4(coeff(0.5)), 0.5);
        assert_eq!(cheat_given_a4(coeff(1.0)), 1.0);
        assert!((cheat_given_a4(coeff(0.9)) - 0.98).abs() < 1e-15);
        for i in 0..=100 {
            let a = 0.5 + 0.005 * i as f64;
            let v = cheat_given_a4(coeff(a));
            assert!(v >= a - 1e-15 && v <= 1.0);
        }
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_bound(0.0), 1.0);
        assert!((classical_bound(0.02) - 0.9).abs() < 1e-15);
        assert!((classical_bound(0.01) - 0.929_289_321_881_345_2).abs() < 1e-15);
    }

    #[test]
    fn event_examples() {
        let m = mu(0.37);
        let e = event_probs(1, m);
        assert_eq!(e.a1, poisson_pmf(m, 0));
        assert!((e.a2 - poisson_pmf(m, 1)).abs() < 1e-16);
        assert_eq!(e.a3, poisson_pmf(m, 2));
        assert_eq!(e.a4, 0.0);

        let e = event_probs(2, mu(0.0));
        assert_eq!((e.a1, e.a2, e.a3, e.a4, e.rest), (1.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn events_match_enumeration() {
        for pulses in 1..=5usize {
            for m in [0.05, 0.2, 0.5, 1.0] {
                let cap = if pulses <= 3 { 12 } else { 9 };
                let oracle = crate::oracle::enumerate_event_probs(pulses, mu(m), cap);
                let e = event_probs(pulses as u32, mu(m));
                let ours = [e.a1, e.a2, e.a3, e.a4, e.rest];
                let theirs = [oracle.a1, oracle.a2, oracle.a3, oracle.a4, oracle.rest];
                for (x, y) in ours.iter().zip(&theirs) {
                    assert!((x - y).abs() < 1e-9, "K={pulses} mu={m}: {ours:?} vs {theirs:?}");
                }
                assert!((e.total() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bob_examples() {
        let tiny = ProtocolParams::new(3, mu(1e-12), coeff(0.9)).unwrap();
        assert!((bob_cheat_bound(&tiny) - 0.5).abs() < 1e-9);
        let helstrom_only = EventProbs {
            a1: 0.0,
            a2: 1.0,
            a3: 0.0,
            a4: 0.0,
            rest: 0.0,
        };
        assert_eq!(bob_cheat_from_events(&helstrom_only, coeff(0.83)), 0.83);
    }

    /// Monte Carlo strategy oracle: draw photon counts, look up the per-event
    /// success of Bob's strategy, average.
    #[test]
    fn bob_bound_matches_strategy_simulation() {
        let (pulses, m, a) = (3usize, 0.2, 0.9);
        let success = [0.5, a, a, -2.0 * a * a + 4.0 * a - 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 400_000;
        let mut total = 0.0;
        let mut sq = 0.0;
        for _ in 0..trials {
            let counts: Vec<usize> = (0..pulses)
                .map(|_| crate::channel::sample_photon_count(mu(m), &mut rng))
                .collect();
            let twos = counts.iter().filter(|&&n| n == 2).count();
            let ones = counts.iter().filter(|&&n| n == 1).count();
            let event = match (counts.iter().any(|&n| n >= 3), twos, ones) {
                (false, 0, 0) => 0,
                (false, 0, _) => 1,
                (false, 1, 0) => 2,
                (false, 1, _) => 3,
                _ => 4,
            };
            let p = success[event];
            let won = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
            total += won;
            sq += won * won;
        }
        let mean = total / trials as f64;
        let se = ((sq / trials as f64 - mean * mean) / trials as f64).sqrt();
        let bound = bob_cheat_bound(&ProtocolParams::new(3, mu(m), coeff(a)).unwrap());
        assert!((mean - bound).abs() < 4.0 * se, "{mean} vs {bound} (se {se})");
    }

    #[test]
    fn monotonicity_in_a_and_mu() {
        for pulses in [1u32, 10, 1000] {
            for m in [0.01, 0.1, 0.5] {
                let mut prev_alice = f64::INFINITY;
                let mut prev_bob = f64::NEG_INFINITY;
                for i in 0..=100 {
                    let a = coeff(0.5 + 0.005 * i as f64);
                    let pa = alice_cheat(a);
                    let pb = bob_cheat_bound(&ProtocolParams::new(pulses, mu(m), a).unwrap());
                    if i > 0 {
                        assert!(pa < prev_alice);
                    }
                    assert!(pb >= prev_bob - 1e-15);
                    assert!((0.5..=1.0).contains(&pb));
                    prev_alice = pa;
                    prev_bob = pb;
                }
            }
        }
        for pulses in [1u32, 100, 15_000] {
            for a in [0.6, 0.9, 0.99] {
                let mut prev = f64::NEG_INFINITY;
                for step in 0..=200 {
                    let m = 0.0001 + step as f64 * 0.01;
                    let pb = bob_cheat_bound(&ProtocolParams::new(pulses, mu(m), coeff(a)).unwrap());
                    assert!(pb >= prev - 1e-12, "K={pulses} a={a} mu={m}");
                    prev = pb;
                }
            }
        }
    }

    #[test]
    fn pulse_count_bounds() {
        assert!(ProtocolParams::new(0, mu(0.1), coeff(0.9)).is_err());
        assert!(ProtocolParams::new(MAX_PULSES + 1, mu(0.1), coeff(0.9)).is_err());
        assert!(ProtocolParams::new(MAX_PULSES, mu(0.1), coeff(0.9)).is_ok());
    }
}
