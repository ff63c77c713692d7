use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Warning};

pub type Vec3 = [f64; 3];

/// Ratios of Rabi frequency or Raman detuning to one-photon detuning above
/// this value are reported as outside the perturbative regime.
pub const PERTURBATIVE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Flat top switched on and off over `ramp` with a C∞ smooth step.
    #[default]
    Flat,
    /// Gaussian centred at `T/2` with standard deviation `ramp` (or `T/6`
    /// when `ramp` is zero), truncated to `[0, T]`.
    Gaussian,
}

/// Envelope `χ(t)` of one classical pulse (Rabi frequency, rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default)]
    pub shape: Shape,
    pub amplitude: Complex64,
    pub duration: f64,
    #[serde(default)]
    pub ramp: f64,
}

impl Envelope {
    pub fn flat(amplitude: impl Into<Complex64>, duration: f64, ramp: f64) -> Self {
        Envelope {
            shape: Shape::Flat,
            amplitude: amplitude.into(),
            duration,
            ramp,
        }
    }

    pub fn off(duration: f64) -> Self {
        Self::flat(0.0, duration, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::invalid(
                "duration",
                format!("must be positive, got {}", self.duration),
            ));
        }
        if !(self.ramp >= 0.0) {
            return Err(Error::invalid("ramp", "must be non-negative"));
        }
        if self.shape == Shape::Flat && 2.0 * self.ramp > self.duration {
            return Err(Error::invalid(
                "ramp",
                "two ramps do not fit in the pulse duration",
            ));
        }
        if !self.amplitude.re.is_finite() || !self.amplitude.im.is_finite() {
            return Err(Error::invalid("amplitude", "must be finite"));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> Complex64 {
        if !(0.0..=self.duration).contains(&t) {
            return Complex64::new(0.0, 0.0);
        }
        let profile = match self.shape {
            Shape::Flat => {
                if self.ramp == 0.0 {
                    1.0
                } else {
                    smooth_step(t / self.ramp) * smooth_step((self.duration - t) / self.ramp)
                }
            }
            Shape::Gaussian => {
                let sigma = if self.ramp > 0.0 {
                    self.ramp
                } else {
                    self.duration / 6.0
                };
                let x = (t - 0.5 * self.duration) / sigma;
                (-0.5 * x * x).exp()
            }
        };
        self.amplitude * profile
    }
}

/// C∞ step from 0 (x ≤ 0) to 1 (x ≥ 1).
fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let f = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    let a = f(x);
    a / (a + f(1.0 - x))
}

/// The three classical pulses and their detunings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSet {
    /// Pump on 1↔4.
    pub chi1: Envelope,
    /// Pump on 2↔4.
    pub chi2: Envelope,
    /// Probe on 1↔3.
    pub chip: Envelope,
    /// One-photon pump detuning Δ, rad/s.
    pub detuning: f64,
    /// One-photon probe detuning Δ_p, rad/s.
    pub probe_detuning: f64,
    /// Two-photon Raman detuning δ, rad/s.
    pub raman_detuning: f64,
    #[serde(default)]
    pub k1: Vec3,
    #[serde(default)]
    pub k2: Vec3,
    #[serde(default)]
    pub kp: Vec3,
    #[serde(default)]
    pub omega1: f64,
    #[serde(default)]
    pub omega2: f64,
    #[serde(default)]
    pub omega_p: f64,
}

/// Spatially dependent Rabi frequencies `Λ_i(r, t) = χ_i(t) e^{i k_i·r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub pump1: Complex64,
    pub pump2: Complex64,
    pub probe: Complex64,
}

impl PulseSet {
    /// Three flat pulses of common duration with no wave vectors or carriers
    /// set; convenient for dimensionless work with Δ as the unit.
    pub fn scaled(
        chi: [Complex64; 3],
        detuning: f64,
        probe_detuning: f64,
        raman_detuning: f64,
        duration: f64,
        ramp: f64,
    ) -> Self {
        PulseSet {
            chi1: Envelope::flat(chi[0], duration, ramp),
            chi2: Envelope::flat(chi[1], duration, ramp),
            chip: Envelope::flat(chi[2], duration, ramp),
            detuning,
            probe_detuning,
            raman_detuning,
            k1: [0.0; 3],
            k2: [0.0; 3],
            kp: [0.0; 3],
            omega1: 0.0,
            omega2: 0.0,
            omega_p: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for env in [&self.chi1, &self.chi2, &self.chip] {
            env.validate()?;
        }
        for (name, v) in [
            ("detuning", self.detuning),
            ("probe_detuning", self.probe_detuning),
            ("raman_detuning", self.raman_detuning),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Longest of the three pulses.
    pub fn duration(&self) -> f64 {
        self.chi1
            .duration
            .max(self.chi2.duration)
            .max(self.chip.duration)
    }

    /// `(χ1, χ2, χp)` at time `t`.
    pub fn rabi(&self, t: f64) -> [Complex64; 3] {
        [self.chi1.value(t), self.chi2.value(t), self.chip.value(t)]
    }

    pub fn drive(&self, t: f64, r: &Vec3) -> Drive {
        let phase = |k: &Vec3| Complex64::from_polar(1.0, dot(k, r));
        let [c1, c2, cp] = self.rabi(t);
        Drive {
            pump1: c1 * phase(&self.k1),
            pump2: c2 * phase(&self.k2),
            probe: cp * phase(&self.kp),
        }
    }

    pub fn max_one_photon_detuning(&self) -> f64 {
        self.detuning.abs().max(self.probe_detuning.abs())
    }

    /// Perturbative-validity diagnostics from the peak amplitudes.
    pub fn validity_warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        let mut check = |ratio: &str, value: f64| {
            if !(value <= PERTURBATIVE_THRESHOLD) {
                out.push(Warning::Perturbative {
                    ratio: ratio.to_owned(),
                    value,
                    threshold: PERTURBATIVE_THRESHOLD,
                });
            }
        };
        check(
            "|chi1/Delta|",
            self.chi1.amplitude.norm() / self.detuning.abs(),
        );
        check(
            "|chi2/Delta|",
            self.chi2.amplitude.norm() / self.detuning.abs(),
        );
        check(
            "|chip/Delta_p|",
            self.chip.amplitude.norm() / self.probe_detuning.abs(),
        );
        check(
            "|delta/Delta|",
            self.raman_detuning.abs() / self.detuning.abs(),
        );
        check(
            "|delta/Delta_p|",
            self.raman_detuning.abs() / self.probe_detuning.abs(),
        );
        out
    }
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
