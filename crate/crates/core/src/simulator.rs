//! Seeded Monte Carlo execution of the honest protocol.
//!
//! Each run walks the K pulses in order. A pulse produces a signal click when
//! it carries photons that survive the channel and detector, and a dark count
//! with probability `d_B`; when both happen the signal is what Bob records.
//! Bob plays with the first click. Only that pulse's preparation and Bob's
//! basis choice for it influence the outcome, so they are drawn when the
//! click happens.
//!
//! Run `i` draws from a ChaCha8 stream selected by `i` under the report
//! seed, so results do not depend on how runs are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{abort_terms, honest_abort, AbortTerms, ProtocolParams};
use crate::channel::{sample_photon_count, ChannelParams};
use crate::qstate::{state_vector, Bit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Completed,
    AbortNoDetection,
    AbortDarkCountCheck,
    AbortNoiseCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub verdict: Verdict,
    /// `b = c_j xor c'_j`, present only for completed runs.
    pub coin: Option<Bit>,
    /// 1-based index `j` of the first click.
    pub first_detection_index: Option<u32>,
}

impl RunOutcome {
    fn aborted(verdict: Verdict, index: u32) -> Self {
        Self {
            verdict,
            coin: None,
            first_detection_index: Some(index),
        }
    }
}

fn random_bit<R: Rng + ?Sized>(rng: &mut R) -> Bit {
    Bit::from_bool(rng.random())
}

/// Bob's outcome when measuring the prepared state in basis `bob_basis`.
fn born_outcome<R: Rng + ?Sized>(alice_basis: Bit, c: Bit, bob_basis: Bit, p: &ProtocolParams, rng: &mut R) -> Bit {
    let psi = state_vector(alice_basis, c, p.a);
    let zero = state_vector(bob_basis, Bit::Zero, p.a);
    let amp = psi[0] * zero[0] + psi[1] * zero[1];
    if rng.random::<f64>() < amp * amp {
        Bit::Zero
    } else {
        Bit::One
    }
}

/// One honest execution of the protocol driven by `rng`.
pub fn run_honest<R: Rng + ?Sized>(p: &ProtocolParams, ch: &ChannelParams, rng: &mut R) -> RunOutcome {
    let detection = ch.detection_efficiency();
    for index in 1..=p.pulses {
        let photons = sample_photon_count(p.mu, rng);
        let signal = photons > 0 && rng.random::<f64>() < detection;
        let dark = rng.random::<f64>() < ch.dark_count;
        if !signal && !dark {
            continue;
        }

        // steps 1-2: Alice's preparation and Bob's basis for pulse j
        let alice_basis = random_bit(rng);
        let c = random_bit(rng);
        let bob_basis = random_bit(rng);
        let outcome = if signal {
            let ideal = born_outcome(alice_basis, c, bob_basis, p, rng);
            if rng.random::<f64>() < ch.noise {
                ideal.flip()
            } else {
                ideal
            }
        } else {
            random_bit(rng)
        };

        // step 3: Bob's bit, steps 4-5: Alice reveals and Bob checks
        let bob_bit = random_bit(rng);
        if alice_basis == bob_basis && outcome != c {
            let verdict = if signal {
                Verdict::AbortNoiseCheck
            } else {
                Verdict::AbortDarkCountCheck
            };
            return RunOutcome::aborted(verdict, index);
        }
        return RunOutcome {
            verdict: Verdict::Completed,
            coin: Some(c.xor(bob_bit)),
            first_detection_index: Some(index),
        };
    }
    RunOutcome {
        verdict: Verdict::AbortNoDetection,
        coin: None,
        first_detection_index: None,
    }
}

/// Generator for run `run` under `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Run number `run` of the stream family `seed`.
pub fn run_honest_seeded(p: &ProtocolParams, ch: &ChannelParams, seed: u64, run: u64) -> RunOutcome {
    run_honest(p, ch, &mut run_rng(seed, run))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub completed: u64,
    pub no_detection: u64,
    pub dark_count_check: u64,
    pub noise_check: u64,
    pub coin_zero: u64,
    pub coin_one: u64,
}

impl VerdictCounts {
    fn record(mut self, outcome: &RunOutcome) -> Self {
        match outcome.verdict {
            Verdict::Completed => self.completed += 1,
            Verdict::AbortNoDetection => self.no_detection += 1,
            Verdict::AbortDarkCountCheck => self.dark_count_check += 1,
            Verdict::AbortNoiseCheck => self.noise_check += 1,
        }
        match outcome.coin {
            Some(Bit::Zero) => self.coin_zero += 1,
            Some(Bit::One) => self.coin_one += 1,
            None => {}
        }
        self
    }

    fn merge(self, other: Self) -> Self {
        Self {
            completed: self.completed + other.completed,
            no_detection: self.no_detection + other.no_detection,
            dark_count_check: self.dark_count_check + other.dark_count_check,
            noise_check: self.noise_check + other.noise_check,
            coin_zero: self.coin_zero + other.coin_zero,
            coin_one: self.coin_one + other.coin_one,
        }
    }

    pub fn total(&self) -> u64 {
        self.completed + self.no_detection + self.dark_count_check + self.noise_check
    }
}

/// An estimated probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
}

impl Estimate {
    pub fn from_count(count: u64, runs: u64) -> Self {
        let value = count as f64 / runs as f64;
        Self {
            value,
            standard_error: (value * (1.0 - value) / runs as f64).sqrt(),
        }
    }

    /// Distance to `target` in units of the standard error. A zero standard
    /// error counts as agreement only on exact equality.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if diff == 0.0 {
            0.0
        } else if self.standard_error == 0.0 {
            f64::INFINITY
        } else {
            diff / self.standard_error
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub params: ProtocolParams,
    pub channel: ChannelParams,
    pub runs: u64,
    pub seed: u64,
    pub counts: VerdictCounts,
    pub abort_rate: Estimate,
    pub no_detection: Estimate,
    pub dark_count_check: Estimate,
    pub noise_check: Estimate,
    /// Closed-form values for comparison.
    pub analytic: AbortTerms,
    pub analytic_abort: f64,
}

impl SimulationReport {
    /// Largest deviation of the abort rate from the closed form, in standard
    /// errors.
    pub fn abort_z(&self) -> f64 {
        self.abort_rate.z_score(self.analytic_abort)
    }

    /// Per-cause deviations in standard errors: no detection, dark-count
    /// check, noise check.
    pub fn cause_z(&self) -> [f64; 3] {
        [
            self.no_detection.z_score(self.analytic.no_detection),
            self.dark_count_check.z_score(self.analytic.dark_count_check),
            self.noise_check.z_score(self.analytic.noise_check),
        ]
    }

    /// Chi-square statistic of the completed coins against a fair coin
    /// (one degree of freedom).
    pub fn coin_chi_square(&self) -> f64 {
        let n = (self.counts.coin_zero + self.counts.coin_one) as f64;
        if n == 0.0 {
            return 0.0;
        }
        let expected = n / 2.0;
        let d0 = self.counts.coin_zero as f64 - expected;
        let d1 = self.counts.coin_one as f64 - expected;
        (d0 * d0 + d1 * d1) / expected
    }
}

/// Chi-square critical value for one degree of freedom at significance 0.001.
pub const CHI_SQUARE_1DOF_P001: f64 = 10.827_566_170_662_733;

/// Aggregates `runs` independent honest executions.
pub fn estimate_honest_abort(p: &ProtocolParams, ch: &ChannelParams, runs: u64, seed: u64) -> SimulationReport {
    let runs = runs.max(1);
    let counts = (0..runs)
        .into_par_iter()
        .map(|run| run_honest_seeded(p, ch, seed, run))
        .fold(VerdictCounts::default, |acc, outcome| acc.record(&outcome))
        .reduce(VerdictCounts::default, VerdictCounts::merge);
    let aborted = runs - counts.completed;
    SimulationReport {
        params: *p,
        channel: *ch,
        runs,
        seed,
        counts,
        abort_rate: Estimate::from_count(aborted, runs),
        no_detection: Estimate::from_count(counts.no_detection, runs),
        dark_count_check: Estimate::from_count(counts.dark_count_check, runs),
        noise_check: Estimate::from_count(counts.noise_check, runs),
        analytic: abort_terms(p.pulses, p.mu, ch),
        analytic_abort: honest_abort(p, ch),
    }
}
