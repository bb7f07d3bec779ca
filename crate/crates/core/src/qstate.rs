//! Protocol qubits and their discrimination.
//!
//! Alice encodes bit `c` in basis `alpha` as
//! `|phi_{alpha,0}> = sqrt(a)|0> + (-1)^alpha sqrt(1-a)|1>` and
//! `|phi_{alpha,1}> = sqrt(1-a)|0> - (-1)^alpha sqrt(a)|1>`.
//! All amplitudes are real, so density matrices are real symmetric.

use serde::{Deserialize, Serialize};

use crate::linalg::symmetric_eigenvalues;
use crate::{Error, Result};

const TRACE_TOLERANCE: f64 = 1e-12;
const PSD_TOLERANCE: f64 = 1e-12;

/// A classical bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub const BOTH: [Bit; 2] = [Bit::Zero, Bit::One];

    pub fn from_bool(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    /// `(-1)^bit`.
    pub fn sign(self) -> f64 {
        match self {
            Bit::Zero => 1.0,
            Bit::One => -1.0,
        }
    }

    pub fn xor(self, other: Bit) -> Bit {
        Bit::from_bool(self != other)
    }

    pub fn flip(self) -> Bit {
        self.xor(Bit::One)
    }
}

/// The state coefficient `a`, restricted to `[0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct StateCoefficient(f64);

impl StateCoefficient {
    pub const MIN: f64 = 0.5;
    pub const MAX: f64 = 1.0;

    pub fn new(a: f64) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&a) {
            Ok(Self(a))
        } else {
            Err(Error::Domain {
                name: "a",
                value: a,
                expected: "[0.5, 1]",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for StateCoefficient {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = f64::deserialize(d)?;
        StateCoefficient::new(a).map_err(serde::de::Error::custom)
    }
}

/// One prepared pulse state `|phi_{alpha,c}>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolQubit {
    pub alpha: Bit,
    pub c: Bit,
    pub a: StateCoefficient,
}

impl ProtocolQubit {
    pub fn amplitudes(&self) -> [f64; 2] {
        state_vector(self.alpha, self.c, self.a)
    }
}

/// Amplitudes of `|phi_{alpha,c}>` in the computational basis.
pub fn state_vector(alpha: Bit, c: Bit, a: StateCoefficient) -> [f64; 2] {
    let a = a.value();
    let (big, small) = (a.sqrt(), (1.0 - a).sqrt());
    match c {
        Bit::Zero => [big, alpha.sign() * small],
        Bit::One => [small, -alpha.sign() * big],
    }
}

/// A real symmetric, unit-trace, positive semidefinite matrix of dimension
/// 2 or 4, stored dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl DensityMatrix {
    /// Validates and wraps row-major `entries`.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::InvalidDensityMatrix(format!("dimension {dim}")));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidDensityMatrix(format!(
                "{} entries for dimension {dim}",
                entries.len()
            )));
        }
        let rho = Self { dim, entries };
        rho.validate()?;
        Ok(rho)
    }

    /// `|v><v|` for a unit vector `v`.
    pub fn pure(v: &[f64]) -> Result<Self> {
        let dim = v.len();
        let entries = v
            .iter()
            .flat_map(|x| v.iter().map(move |y| x * y))
            .collect();
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.entries, self.dim)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.get(i, j) - self.get(j, i)).abs() > TRACE_TOLERANCE {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace}")));
        }
        let min = self.eigenvalues()[0];
        if min < -PSD_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min}"
            )));
        }
        Ok(())
    }
}

fn tensor(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect()
}

/// Bob's view of bit `c` when he receives `photons` copies of the state and
/// does not know the basis: `(1/2) sum_alpha |phi_{alpha,c}><phi_{alpha,c}|^{(x) photons}`.
pub fn mixture_density(c: Bit, a: StateCoefficient, photons: u32) -> Result<DensityMatrix> {
    if !(1..=2).contains(&photons) {
        return Err(Error::UnsupportedPhotonCount(photons));
    }
    let dim = 1usize << photons;
    let mut entries = vec![0.0; dim * dim];
    for alpha in Bit::BOTH {
        let single = state_vector(alpha, c, a);
        let v = if photons == 1 {
            single.to_vec()
        } else {
            tensor(&single, &single)
        };
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] += 0.5 * v[i] * v[j];
            }
        }
    }
    DensityMatrix::new(dim, entries)
}

/// Success probability of the optimal (Helstrom) measurement telling `rho0`
/// from `rho1` at equal priors: `1/2 + ||rho0 - rho1||_1 / 4`.
pub fn helstrom_success(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    if rho0.dim != rho1.dim {
        return Err(Error::DimensionMismatch(rho0.dim, rho1.dim));
    }
    let diff: Vec<f64> = rho0
        .entries
        .iter()
        .zip(&rho1.entries)
        .map(|(x, y)| x - y)
        .collect();
    let trace_norm: f64 = symmetric_eigenvalues(&diff, rho0.dim)
        .iter()
        .map(|l| l.abs())
        .sum();
    Ok((0.5 + 0.25 * trace_norm).clamp(0.5, 1.0))
}

/// Helstrom success on the `photons`-copy mixtures for `c = 0` versus `c = 1`.
pub fn bit_guess_probability(a: StateCoefficient, photons: u32) -> Result<f64> {
    let rho0 = mixture_density(Bit::Zero, a, photons)?;
    let rho1 = mixture_density(Bit::One, a, photons)?;
    helstrom_success(&rho0, &rho1)
}
