//! Source, fiber and detector model.
//!
//! Detection is modelled per pulse: a pulse carrying at least one photon
//! produces a signal click with probability `F * eta`, independent of how many
//! photons it carries. This matches the no-click probability
//! `Z = p0 + (1 - p0)(1 - F eta)` used by the honest abort formula.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Photon counts above this are never sampled; the Poisson tail beyond it is
/// below 1e-40 for `mu <= 2`.
pub const POISSON_TRUNCATION: usize = 50;

/// Experimental apparatus parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Receiver constant loss `k` [dB].
    pub k_loss: f64,
    /// Absorption coefficient `beta` [dB/km].
    pub beta: f64,
    /// Channel length `L` [km].
    pub length_km: f64,
    /// Detector quantum efficiency `eta`.
    pub eta: f64,
    /// Dark count probability per slot `d_B`.
    pub dark_count: f64,
    /// Signal error rate `e`.
    pub noise: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            k_loss: 1.0,
            beta: 0.2,
            length_km: 0.0,
            eta: 0.2,
            dark_count: 1e-5,
            noise: 0.01,
        }
    }
}

impl ChannelParams {
    pub fn with_length(self, length_km: f64) -> Self {
        Self { length_km, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("k_loss", self.k_loss),
            ("beta", self.beta),
            ("length_km", self.length_km),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value,
                    expected: "[0, inf)",
                });
            }
        }
        let probabilities = [
            ("eta", self.eta),
            ("dark_count", self.dark_count),
            ("noise", self.noise),
        ];
        for (name, value) in probabilities {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Domain {
                    name,
                    value,
                    expected: "[0, 1]",
                });
            }
        }
        Ok(())
    }

    /// System transmission efficiency `F = 10^(-(beta L + k)/10)`.
    pub fn transmission(&self) -> f64 {
        10f64.powf(-(self.beta * self.length_km + self.k_loss) / 10.0)
    }

    /// Probability that a nonempty pulse yields a signal click, `F * eta`.
    pub fn detection_efficiency(&self) -> f64 {
        self.transmission() * self.eta
    }
}

/// Mean photon number `mu` of the attenuated laser source.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct MeanPhotonNumber(f64);

impl MeanPhotonNumber {
    pub fn new(mu: f64) -> Result<Self> {
        if mu >= 0.0 && mu.is_finite() {
            Ok(Self(mu))
        } else {
            Err(Error::Domain {
                name: "mu",
                value: mu,
                expected: "[0, inf)",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for MeanPhotonNumber {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mu = f64::deserialize(d)?;
        MeanPhotonNumber::new(mu).map_err(serde::de::Error::custom)
    }
}

pub fn transmission(params: &ChannelParams) -> f64 {
    params.transmission()
}

/// `e^-mu mu^i / i!`.
pub fn poisson_pmf(mu: MeanPhotonNumber, i: usize) -> f64 {
    let mu = mu.value();
    if mu == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    let mut p = (-mu).exp();
    for n in 1..=i {
        p *= mu / n as f64;
    }
    p
}

/// `Z`: probability that a pulse produces no signal at Bob's detectors.
pub fn blank_probability(mu: MeanPhotonNumber, params: &ChannelParams) -> f64 {
    let p0 = poisson_pmf(mu, 0);
    p0 + (1.0 - p0) * (1.0 - params.detection_efficiency())
}

/// Draws a photon count by CDF inversion, truncated at [`POISSON_TRUNCATION`].
pub fn sample_photon_count<R: Rng + ?Sized>(mu: MeanPhotonNumber, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut p = poisson_pmf(mu, 0);
    let mut cdf = p;
    let mut n = 0;
    while u >= cdf && n < POISSON_TRUNCATION {
        n += 1;
        p *= mu.value() / n as f64;
        cdf += p;
    }
    n
}
