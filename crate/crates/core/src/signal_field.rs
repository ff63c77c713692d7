//! The four-wave-mixing signal: phase matching, source envelope `f(t)`,
//! coupling constants `K(t)` and `C`, and 1-D propagation through the sample.
//!
//! The medium is a pencil of area `A`, length `L` and density `n_a`. The
//! slowly varying signal envelope obeys
//! `[∂z + (1/c)∂t] E = -i n_a K(t) D(z)` with `D = σ11 - σ22`, and leaves the
//! sample as `E(L, t) = E(0, t) - i (2K(t)/A) S_z` once the pulse has filled
//! it.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atom_dynamics::{PulseSet, Vec3};
use crate::collective_spin::{moments, CollectiveState, MAX_ATOMS};
use crate::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::{Error, Result, Warning};

/// Phase slips above this many radians over the sample are flagged.
pub const PHASE_MISMATCH_THRESHOLD: f64 = 0.1;

/// `cT/L` at or below this value is flagged as a short pulse.
pub const SHORT_PULSE_THRESHOLD: f64 = 10.0;

/// Default number of z slices in [`propagate_numeric`].
pub const DEFAULT_SLICES: usize = 256;

/// Fewer slices than this are rejected.
pub const MIN_SLICES: usize = 8;

/// Relative tolerance on `k_s = Ω_s/c` in [`CouplingParams`].
pub const DISPERSION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Transverse area, m².
    pub area: f64,
    /// Length, m.
    pub length: f64,
    /// Number density, m⁻³.
    pub density: f64,
}

impl Geometry {
    pub fn new(area: f64, length: f64, density: f64) -> Result<Self> {
        let g = Geometry {
            area,
            length,
            density,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("area", self.area),
            ("length", self.length),
            ("density", self.density),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// `n_a A L` before rounding.
    pub fn n_atoms_exact(&self) -> f64 {
        self.density * self.area * self.length
    }

    /// `n_a A L` rounded to an integer, with a warning when it was not an
    /// integer to within floating-point round-off.
    pub fn n_atoms(&self) -> Result<(usize, Option<Warning>)> {
        let exact = self.n_atoms_exact();
        let rounded = exact.round();
        if rounded < 1.0 || rounded > MAX_ATOMS as f64 {
            return Err(Error::AtomNumber {
                got: if rounded < 1.0 { 0 } else { usize::MAX },
                max: MAX_ATOMS,
            });
        }
        let rounded = rounded as usize;
        let warning = ((exact - rounded as f64).abs() > 1e-9 * exact)
            .then_some(Warning::RoundedAtomNumber { exact, rounded });
        Ok((rounded, warning))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMatch {
    /// Signal carrier `Ω_p - (Ω1 - Ω2)`, rad/s.
    pub omega_s: f64,
    /// `k_p - (k1 - k2)`, rad/m.
    pub k_s: Vec3,
    /// `||k_s| - Ω_s/c| L`, rad.
    pub residual: f64,
    pub warning: Option<Warning>,
}

pub fn phase_match(
    k1: &Vec3,
    k2: &Vec3,
    kp: &Vec3,
    omega1: f64,
    omega2: f64,
    omega_p: f64,
    length: f64,
) -> Result<PhaseMatch> {
    let omega_s = omega_p - (omega1 - omega2);
    if !(omega_s > 0.0) {
        return Err(Error::invalid(
            "omega_s",
            format!("signal frequency must be positive, got {omega_s}"),
        ));
    }
    let k_s = [0, 1, 2].map(|i| kp[i] - (k1[i] - k2[i]));
    let norm = k_s.iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual = (norm - omega_s / SPEED_OF_LIGHT).abs() * length;
    let warning = (residual > PHASE_MISMATCH_THRESHOLD).then_some(Warning::PhaseMismatch {
        residual,
        threshold: PHASE_MISMATCH_THRESHOLD,
    });
    Ok(PhaseMatch {
        omega_s,
        k_s,
        residual,
        warning,
    })
}

/// Source envelope `f(t) = χ1*(t) χ2(t) χp(t) / (Δ Δp δ)`.
pub fn f_envelope(pulses: &PulseSet, t: f64) -> Result<Complex64> {
    for (name, v) in [
        ("Delta", pulses.detuning),
        ("Delta_p", pulses.probe_detuning),
        ("delta", pulses.raman_detuning),
    ] {
        if v == 0.0 {
            return Err(Error::SingularDetuning(name));
        }
    }
    let [c1, c2, cp] = pulses.rabi(t);
    Ok(c1.conj() * c2 * cp / (pulses.detuning * pulses.probe_detuning * pulses.raman_detuning))
}

/// Single-photon field `𝓔_s = sqrt(ħΩ_s / (2ε₀AL))`, V/m.
pub fn field_per_photon(omega_s: f64, geometry: &Geometry) -> f64 {
    (HBAR * omega_s / (2.0 * EPSILON_0 * geometry.area * geometry.length)).sqrt()
}

/// `K = ħ k_s d23 f / (2ε₀)`.
pub fn coupling_k(d23: f64, k_s: f64, f: Complex64) -> Complex64 {
    f * (HBAR * k_s * d23 / (2.0 * EPSILON_0))
}

/// Measurement strength
/// `C = [4π d23 𝓔_s / (ħ √A c^{1/2})] (∫|f|² dt)^{1/2}`, with the integral by
/// the trapezoid rule on the given samples.
pub fn coupling_c(
    d23: f64,
    omega_s: f64,
    geometry: &Geometry,
    times: &[f64],
    f_samples: &[Complex64],
) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::EmptyGrid(
            "coupling_c needs at least two time samples",
        ));
    }
    if times.len() != f_samples.len() {
        return Err(Error::Dimension {
            expected: times.len(),
            got: f_samples.len(),
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    let integral: f64 = times
        .windows(2)
        .zip(f_samples.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0].norm_sqr() + f[1].norm_sqr()))
        .sum();
    let prefactor = 4.0 * std::f64::consts::PI * d23 * field_per_photon(omega_s, geometry)
        / (HBAR * geometry.area.sqrt() * SPEED_OF_LIGHT.sqrt());
    Ok(prefactor * integral.sqrt())
}

/// Physical coupling inputs together with the sampled `f(t)`, `K(t)` and the
/// resulting `C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingParams {
    /// Dipole matrix element on 2↔3, C·m.
    pub d23: f64,
    pub omega_s: f64,
    pub k_s: f64,
    pub times: Vec<f64>,
    pub f_samples: Vec<Complex64>,
    pub k_samples: Vec<Complex64>,
    pub c: f64,
}

impl CouplingParams {
    /// Samples `f` and `K` on `n_samples` uniform points over the pulse
    /// duration and evaluates `C`.
    pub fn from_pulses(
        pulses: &PulseSet,
        geometry: &Geometry,
        d23: f64,
        omega_s: f64,
        k_s: f64,
        n_samples: usize,
    ) -> Result<Self> {
        geometry.validate()?;
        if !(omega_s > 0.0) {
            return Err(Error::invalid("omega_s", "must be positive"));
        }
        if ((k_s - omega_s / SPEED_OF_LIGHT) / k_s).abs() > DISPERSION_TOLERANCE {
            return Err(Error::invalid(
                "k_s",
                format!(
                    "{k_s} differs from omega_s/c = {}",
                    omega_s / SPEED_OF_LIGHT
                ),
            ));
        }
        if n_samples < 2 {
            return Err(Error::EmptyGrid("n_samples must be at least 2"));
        }
        let duration = pulses.duration();
        let times: Vec<f64> = (0..n_samples)
            .map(|i| duration * i as f64 / (n_samples - 1) as f64)
            .collect();
        let f_samples = times
            .iter()
            .map(|&t| f_envelope(pulses, t))
            .collect::<Result<Vec<_>>>()?;
        let k_samples = f_samples.iter().map(|&f| coupling_k(d23, k_s, f)).collect();
        let c = coupling_c(d23, omega_s, geometry, &times, &f_samples)?;
        Ok(CouplingParams {
            d23,
            omega_s,
            k_s,
            times,
            f_samples,
            k_samples,
            c,
        })
    }
}

/// `E_out = E_in - i (2K/A) S_z`.
pub fn output_field(e_in: Complex64, k_t: Complex64, geometry: &Geometry, sz: f64) -> Complex64 {
    e_in - Complex64::i() * k_t * (2.0 * sz / geometry.area)
}

/// Relative intensity `(4|K|²/A²) ⟨S_z²⟩`.
pub fn intensity(state: &CollectiveState, k_t: Complex64, geometry: &Geometry) -> f64 {
    4.0 * k_t.norm_sqr() / (geometry.area * geometry.area) * moments(state).mean_sz_sq
}

/// `S_z = N_a/(2L) ∫₀ᴸ D(z) dz` for a population-difference profile `D`.
pub fn collective_sz(profile: &dyn Fn(f64) -> f64, geometry: &Geometry, slices: usize) -> f64 {
    let h = geometry.length / slices as f64;
    let integral: f64 = (0..slices)
        .map(|j| gauss_legendre(profile, j as f64 * h, (j + 1) as f64 * h))
        .sum();
    geometry.n_atoms_exact() / (2.0 * geometry.length) * integral
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationGrid {
    /// Number of z slices over which `D(z)` is averaged.
    pub slices: usize,
    /// Exit times at which the field is evaluated, s.
    pub times: Vec<f64>,
    /// Pulse duration `T`, used only for the `cT/L` diagnostic.
    pub pulse_duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub times: Vec<f64>,
    /// `E(L, t)` at each requested time.
    pub field: Vec<Complex64>,
    pub warnings: Vec<Warning>,
}

impl Propagation {
    /// Columns `t,re,im`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "re", "im"])?;
        for (t, e) in self.times.iter().zip(&self.field) {
            w.write_record(&[
                format!("{t:.17e}"),
                format!("{:.17e}", e.re),
                format!("{:.17e}", e.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gauss_legendre<T>(f: impl Fn(f64) -> T, a: f64, b: f64) -> T
where
    T: std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
{
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS)
        .map(|(x, w)| f(mid + half * x) * (w * half))
        .sum()
}

/// Field at the exit face by integrating along characteristics.
///
/// For each exit time `t` the characteristic entered at `z = 0` at the
/// retarded time `t - L/c` (carrying the input `E(0, t - L/c)`), or, for
/// `t < L/c`, started inside the medium at `z = L - ct` where the field is
/// initially zero. Along it
/// `E(L, t) = E_start - i n_a Σ_j D̄_j ∫_{slice j} K(t - (L - z)/c) dz`,
/// where `D̄_j` is the average of `D = σ11 - σ22` over slice `j`.
pub fn propagate_numeric(
    profile: &dyn Fn(f64) -> f64,
    e_in: &dyn Fn(f64) -> Complex64,
    k: &dyn Fn(f64) -> Complex64,
    geometry: &Geometry,
    grid: &PropagationGrid,
) -> Result<Propagation> {
    geometry.validate()?;
    if grid.slices < MIN_SLICES {
        return Err(Error::GridTooCoarse(format!(
            "{} slices; at least {MIN_SLICES} are needed",
            grid.slices
        )));
    }
    let l = geometry.length;
    let h = l / grid.slices as f64;
    let averages: Vec<f64> = (0..grid.slices)
        .map(|j| gauss_legendre(profile, j as f64 * h, (j + 1) as f64 * h) / h)
        .collect();

    let mut warnings = Vec::new();
    let ct_over_l = SPEED_OF_LIGHT * grid.pulse_duration / l;
    if ct_over_l <= SHORT_PULSE_THRESHOLD {
        warnings.push(Warning::ShortPulse {
            ct_over_l,
            threshold: SHORT_PULSE_THRESHOLD,
        });
    }

    let transit = l / SPEED_OF_LIGHT;
    let field = grid
        .times
        .iter()
        .map(|&t| {
            let (z_start, start) = if t >= transit {
                (0.0, e_in(t - transit))
            } else {
                (l - SPEED_OF_LIGHT * t.max(0.0), Complex64::new(0.0, 0.0))
            };
            let retarded = |z: f64| k(t - (l - z) / SPEED_OF_LIGHT);
            let first = ((z_start / h).floor() as usize).min(grid.slices);
            let source: Complex64 = (first..grid.slices)
                .map(|j| {
                    let a = (j as f64 * h).max(z_start);
                    let b = (j + 1) as f64 * h;
                    if b <= a {
                        Complex64::new(0.0, 0.0)
                    } else {
                        gauss_legendre(retarded, a, b) * averages[j]
                    }
                })
                .sum();
            start - Complex64::i() * geometry.density * source
        })
        .collect();

    Ok(Propagation {
        times: grid.times.clone(),
        field,
        warnings,
    })
}
