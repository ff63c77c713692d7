//! Single-atom double-Λ dynamics.
//!
//! Levels 1 and 2 are the ground sublevels, 3 and 4 the excited levels. Pump 1
//! drives 1↔4, pump 2 drives 2↔4 and the probe drives 1↔3; the signal is
//! radiated on 2↔3. All coherences are slowly-varying envelopes in the frame
//! of the applied carriers.

mod obe;
mod perturbative;
mod pulses;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use obe::{integrate_obe, obe_rhs, AtomTrajectory, ObeOptions, MAX_PHASE_PER_STEP};
pub use perturbative::{
    balanced_pump2, dark_state_balance, dark_state_coherence, first_order_coherences,
    ground_population_rate, perturbative_sigma23, second_order_sources, steady_coherence,
    FirstOrder, SecondOrder, Sigma23, SteadyCoherence,
};
pub use pulses::{Drive, Envelope, PulseSet, Shape, Vec3, PERTURBATIVE_THRESHOLD};

/// Expectation values `⟨σ_ij⟩ = ⟨|i⟩⟨j|⟩`, stored zero-based: `sigma[0][3]`
/// is `σ_14`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomState {
    pub sigma: [[Complex64; 4]; 4],
}

/// Populations are allowed this far outside `[0, 1]`.
pub const POPULATION_SLACK: f64 = 1e-8;

impl AtomState {
    pub fn zero() -> Self {
        AtomState {
            sigma: [[Complex64::new(0.0, 0.0); 4]; 4],
        }
    }

    /// An atom entirely in its ground manifold.
    pub fn from_ground(ground: GroundState) -> Self {
        let mut s = Self::zero();
        s.sigma[0][0] = ground.s11.into();
        s.sigma[1][1] = ground.s22.into();
        s.sigma[0][1] = ground.s12;
        s.sigma[1][0] = ground.s12.conj();
        s
    }

    /// `⟨σ_ij⟩` with one-based level labels.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.sigma[i - 1][j - 1]
    }

    pub fn population(&self, level: usize) -> f64 {
        self.get(level, level).re
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|k| self.sigma[k][k]).sum()
    }

    pub fn ground(&self) -> GroundState {
        GroundState {
            s11: self.population(1),
            s22: self.population(2),
            s12: self.get(1, 2),
        }
    }

    /// Largest `|σ_ij - σ_ji*|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in i..4 {
                worst = worst.max((self.sigma[i][j] - self.sigma[j][i].conj()).norm());
            }
        }
        worst
    }

    pub fn populations_in_range(&self) -> bool {
        (1..=4).all(|l| {
            let p = self.population(l);
            (-POPULATION_SLACK..=1.0 + POPULATION_SLACK).contains(&p)
        })
    }
}

/// Ground-manifold values `σ11⁰, σ22⁰, σ12⁰` feeding the perturbative
/// solutions; `σ21⁰ = σ12⁰*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub s11: f64,
    pub s22: f64,
    pub s12: Complex64,
}

impl GroundState {
    /// Equal populations and `σ12 = σ21 = -1/2`: the pseudo-spin along `x`
    /// in the sign convention of the dark state `(|1⟩ - |2⟩)/√2`.
    pub fn x_polarized() -> Self {
        GroundState {
            s11: 0.5,
            s22: 0.5,
            s12: Complex64::new(-0.5, 0.0),
        }
    }

    pub fn s21(&self) -> Complex64 {
        self.s12.conj()
    }

    pub fn imbalance(&self) -> f64 {
        self.s11 - self.s22
    }
}

/// Radiative decay of the excited levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    /// Decay rate of level 3, rad/s.
    pub gamma: f64,
    /// Decay rate of level 4, rad/s.
    pub gamma_prime: f64,
    /// Fractions of level-3 decay landing in levels 1 and 2.
    #[serde(default = "even_branching")]
    pub branching3: [f64; 2],
    /// Fractions of level-4 decay landing in levels 1 and 2.
    #[serde(default = "even_branching")]
    pub branching4: [f64; 2],
}

fn even_branching() -> [f64; 2] {
    [0.5, 0.5]
}

impl DecayModel {
    pub fn new(gamma: f64, gamma_prime: f64) -> Result<Self> {
        let model = DecayModel {
            gamma,
            gamma_prime,
            branching3: even_branching(),
            branching4: even_branching(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !(self.gamma_prime >= 0.0) {
            return Err(Error::invalid("decay", "rates must be non-negative"));
        }
        for b in [self.branching3, self.branching4] {
            if b.iter().any(|f| !(0.0..=1.0).contains(f)) || (b[0] + b[1] - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(
                    "branching",
                    format!("fractions {b:?} must lie in [0, 1] and sum to 1"),
                ));
            }
        }
        Ok(())
    }
}
