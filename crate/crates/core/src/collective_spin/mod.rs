//! Collective pseudo-spin of `N_a` two-level ground manifolds in the Dicke
//! basis `|S, M⟩`, `M = -S..=S`, with `S = N_a / 2`.
//!
//! Amplitudes are stored densely, index `k` holding `M = k - S`.

mod husimi;
mod mixed;
mod moments;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

pub use husimi::{husimi_q, HusimiGrid};
pub use mixed::MixedCollectiveState;
pub use moments::{moments, squeezing_parameters, SpinExpectation, SpinMoments, Squeezing};

/// Largest supported ensemble.
pub const MAX_ATOMS: usize = 10_000;

/// Tolerance on `Σ|c_M|² = 1` and on `tr ρ = 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// A collective spin quantum number, stored as `2S = N_a` so that half-integer
/// values are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Spin {
    twice: usize,
}

impl Spin {
    pub fn from_atoms(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 || n_atoms > MAX_ATOMS {
            return Err(Error::AtomNumber {
                got: n_atoms,
                max: MAX_ATOMS,
            });
        }
        Ok(Spin { twice: n_atoms })
    }

    /// `S` as a real number.
    pub fn value(&self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// `2S`, the number of atoms.
    pub fn n_atoms(&self) -> usize {
        self.twice
    }

    /// Hilbert-space dimension `2S + 1`.
    pub fn dim(&self) -> usize {
        self.twice + 1
    }

    /// Magnetic quantum number at index `k`.
    pub fn m(&self, k: usize) -> f64 {
        k as f64 - self.value()
    }

    pub fn ms(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(move |k| self.m(k))
    }

    /// Index of `M`, if `M` is a valid projection for this spin.
    pub fn index_of(&self, m: f64) -> Option<usize> {
        let k = m + self.value();
        let rounded = k.round();
        if (k - rounded).abs() > 1e-9 || rounded < 0.0 || rounded > self.twice as f64 {
            return None;
        }
        Some(rounded as usize)
    }

    /// `⟨M+1|S₊|M⟩ = sqrt(S(S+1) - M(M+1))` for the `M` at index `k`.
    pub(crate) fn raising(&self, k: usize) -> f64 {
        let s = self.value();
        let m = self.m(k);
        (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }
}

/// Pure collective state `Σ_M c_M |S, M⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveState {
    spin: Spin,
    amplitudes: Vec<Complex64>,
}

impl CollectiveState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(spin: Spin, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != spin.dim() {
            return Err(Error::Dimension {
                expected: spin.dim(),
                got: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(CollectiveState { spin, amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(spin: Spin, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != spin.dim() {
            return Err(Error::Dimension {
                expected: spin.dim(),
                got: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        for c in &mut amplitudes {
            *c /= norm;
        }
        Ok(CollectiveState { spin, amplitudes })
    }

    /// Builds a state from per-`M` log-magnitudes and phases, normalizing with
    /// log-sum-exp so that very small or very large weights never overflow.
    /// Entries with a log-magnitude of `-inf` are exact zeros.
    pub fn from_log_amplitudes(spin: Spin, log_mag: &[f64], phase: &[Complex64]) -> Result<Self> {
        if log_mag.len() != spin.dim() || phase.len() != spin.dim() {
            return Err(Error::Dimension {
                expected: spin.dim(),
                got: log_mag.len().min(phase.len()),
            });
        }
        let log_norm = 0.5 * log_sum_exp(log_mag.iter().map(|l| 2.0 * l));
        if !log_norm.is_finite() {
            return Err(Error::NotNormalized(0.0));
        }
        let amplitudes = log_mag
            .iter()
            .zip(phase)
            .map(|(&l, &p)| {
                if l == f64::NEG_INFINITY {
                    Complex64::new(0.0, 0.0)
                } else {
                    p * (l - log_norm).exp()
                }
            })
            .collect();
        Self::normalized(spin, amplitudes)
    }

    /// Dicke state `|S, M⟩`.
    pub fn dicke(spin: Spin, m: f64) -> Result<Self> {
        let k = spin.index_of(m).ok_or_else(|| {
            Error::invalid(
                "m",
                format!("{m} is not a projection of S = {}", spin.value()),
            )
        })?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); spin.dim()];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(CollectiveState { spin, amplitudes })
    }

    /// The `S_x = S` coherent spin state of `n_atoms` atoms, with binomial
    /// amplitudes `2^{-S} sqrt((2S)! / ((S+M)! (S-M)!))`.
    pub fn css_x_polarized(n_atoms: usize) -> Result<Self> {
        let spin = Spin::from_atoms(n_atoms)?;
        let s = spin.value();
        let log_mag: Vec<f64> = spin
            .ms()
            .map(|m| 0.5 * log_binomial(n_atoms, s + m) - s * std::f64::consts::LN_2)
            .collect();
        let phase = vec![Complex64::new(1.0, 0.0); spin.dim()];
        Self::from_log_amplitudes(spin, &log_mag, &phase)
    }

    /// Coherent spin state pointing along `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn coherent(spin: Spin, theta: f64, phi: f64) -> Result<Self> {
        let log_mag = coherent_log_magnitudes(spin, theta);
        let s = spin.value();
        let phase: Vec<Complex64> = spin
            .ms()
            .map(|m| Complex64::from_polar(1.0, (s - m) * phi))
            .collect();
        Self::from_log_amplitudes(spin, &log_mag, &phase)
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, m: f64) -> Option<Complex64> {
        self.spin.index_of(m).map(|k| self.amplitudes[k])
    }

    /// `|c_M|²` for every `M`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn overlap(&self, other: &CollectiveState) -> Result<Complex64> {
        if self.spin != other.spin {
            return Err(Error::Dimension {
                expected: self.spin.dim(),
                got: other.spin.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// `ln C(n, S+M)` through log-gamma; valid far beyond factorial overflow.
pub(crate) fn log_binomial(n: usize, k: f64) -> f64 {
    let n = n as f64;
    // fixed summation order keeps C(n, k) and C(n, n-k) bitwise equal
    let (lo, hi) = if k <= n - k { (k, n - k) } else { (n - k, k) };
    ln_gamma(n + 1.0) - (ln_gamma(lo + 1.0) + ln_gamma(hi + 1.0))
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln|⟨S,M|θ,φ⟩|` with the `0⁰ = 1` convention at the poles.
pub(crate) fn coherent_log_magnitudes(spin: Spin, theta: f64) -> Vec<f64> {
    let s = spin.value();
    let (sin_half, cos_half) = (0.5 * theta).sin_cos();
    let ln_pow = |base: f64, exponent: f64| {
        if exponent == 0.0 {
            0.0
        } else {
            exponent * base.abs().ln()
        }
    };
    spin.ms()
        .map(|m| {
            0.5 * log_binomial(spin.n_atoms(), s + m)
                + ln_pow(cos_half, s + m)
                + ln_pow(sin_half, s - m)
        })
        .collect()
}
