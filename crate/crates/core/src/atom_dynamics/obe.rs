use std::io::Write;

use num_complex::Complex64;

use super::{AtomState, DecayModel, Drive, PulseSet, Vec3};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `dt * max(|Δ|, |Δ_p|)` may not exceed this.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

/// Time derivative of all sixteen `⟨σ_ij⟩`.
///
/// The ten independent equations are written out for the levels as labelled
/// in the module docs; the remaining six are their complex conjugates. With a
/// decay model, level 3 (4) decays at `γ` (`γ'`) into the ground levels with
/// the configured branching, optical coherences decay at half the sum of the
/// rates of the levels they connect, and `σ12` is undamped.
pub fn obe_rhs(
    state: &AtomState,
    drive: &Drive,
    pulses: &PulseSet,
    decay: Option<&DecayModel>,
) -> AtomState {
    let s = |i: usize, j: usize| state.sigma[i - 1][j - 1];
    let (l1, l2, lp) = (drive.pump1, drive.pump2, drive.probe);
    let (big, big_p, small) = (
        pulses.detuning,
        pulses.probe_detuning,
        pulses.raman_detuning,
    );

    let d11 =
        -I * l1 * s(4, 1) + I * l1.conj() * s(1, 4) - I * lp * s(3, 1) + I * lp.conj() * s(1, 3);
    let d22 = -I * l2 * s(4, 2) + I * l2.conj() * s(2, 4);
    let d33 = I * lp * s(3, 1) - I * lp.conj() * s(1, 3);
    let d44 =
        I * l1 * s(4, 1) - I * l1.conj() * s(1, 4) + I * l2 * s(4, 2) - I * l2.conj() * s(2, 4);
    let d14 =
        -I * big * s(1, 4) + I * l1 * (s(1, 1) - s(4, 4)) + I * l2 * s(1, 2) - I * lp * s(3, 4);
    let d24 = -I * (big + small) * s(2, 4) + I * l2 * (s(2, 2) - s(4, 4)) + I * l1 * s(2, 1);
    let d13 = -I * big_p * s(1, 3) + I * lp * (s(1, 1) - s(3, 3)) - I * l1 * s(4, 3);
    let d34 = -I * (big - big_p) * s(3, 4) + I * l1 * s(3, 1) + I * l2 * s(3, 2)
        - I * lp.conj() * s(1, 4);
    let d23 = -I * (big_p + small) * s(2, 3) + I * lp * s(2, 1) - I * l2 * s(4, 3);
    let d12 = I * small * s(1, 2) - I * l1 * s(4, 2) + I * l2.conj() * s(1, 4) - I * lp * s(3, 2);

    let mut out = AtomState::zero();
    {
        let mut set = |i: usize, j: usize, v: Complex64| {
            out.sigma[i - 1][j - 1] = v;
            if i != j {
                out.sigma[j - 1][i - 1] = v.conj();
            }
        };
        // populations are real; keep them exactly so
        set(1, 1, d11.re.into());
        set(2, 2, d22.re.into());
        set(3, 3, d33.re.into());
        set(4, 4, d44.re.into());
        set(1, 4, d14);
        set(2, 4, d24);
        set(1, 3, d13);
        set(3, 4, d34);
        set(2, 3, d23);
        set(1, 2, d12);
    }

    if let Some(decay) = decay {
        let (g3, g4) = (decay.gamma, decay.gamma_prime);
        let p3 = s(3, 3).re;
        let p4 = s(4, 4).re;
        out.sigma[0][0] += g3 * decay.branching3[0] * p3 + g4 * decay.branching4[0] * p4;
        out.sigma[1][1] += g3 * decay.branching3[1] * p3 + g4 * decay.branching4[1] * p4;
        out.sigma[2][2] -= g3 * p3;
        out.sigma[3][3] -= g4 * p4;
        let rate = [0.0, 0.0, g3, g4];
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let damping = 0.5 * (rate[i] + rate[j]);
                    out.sigma[i][j] -= damping * state.sigma[i][j];
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObeOptions {
    /// Atom position `r`; the spatial phases `e^{i k·r}` are evaluated here.
    pub position: Vec3,
    /// Record every `stride`-th step (the final state is always recorded).
    pub stride: usize,
}

impl Default for ObeOptions {
    fn default() -> Self {
        ObeOptions {
            position: [0.0; 3],
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<AtomState>,
    /// Largest step-doubling discrepancy seen, max-norm over all `σ_ij`.
    pub max_step_error: f64,
}

impl AtomTrajectory {
    pub fn last(&self) -> &AtomState {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// State at the recorded time nearest to `t`.
    pub fn nearest(&self, t: f64) -> (f64, &AtomState) {
        let k = self
            .times
            .partition_point(|&x| x < t)
            .min(self.times.len() - 1);
        let k = if k > 0 && (self.times[k - 1] - t).abs() < (self.times[k] - t).abs() {
            k - 1
        } else {
            k
        };
        (self.times[k], &self.states[k])
    }

    /// Columns `t`, then `re_ij,im_ij` for `i, j = 1..4` in row-major order.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_owned()];
        for i in 1..=4 {
            for j in 1..=4 {
                header.push(format!("re_{i}{j}"));
                header.push(format!("im_{i}{j}"));
            }
        }
        w.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![format!("{t:.17e}")];
            for i in 0..4 {
                for j in 0..4 {
                    row.push(format!("{:.17e}", s.sigma[i][j].re));
                    row.push(format!("{:.17e}", s.sigma[i][j].im));
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn axpy(y: &AtomState, a: f64, x: &AtomState) -> AtomState {
    let mut out = *y;
    for i in 0..4 {
        for j in 0..4 {
            out.sigma[i][j] += x.sigma[i][j] * a;
        }
    }
    out
}

fn rk4_step(
    state: &AtomState,
    t: f64,
    h: f64,
    pulses: &PulseSet,
    decay: Option<&DecayModel>,
    r: &Vec3,
) -> AtomState {
    let f = |t: f64, y: &AtomState| obe_rhs(y, &pulses.drive(t, r), pulses, decay);
    let k1 = f(t, state);
    let k2 = f(t + 0.5 * h, &axpy(state, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(state, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(state, h, &k3));
    let mut out = *state;
    for i in 0..4 {
        for j in 0..4 {
            out.sigma[i][j] +=
                (k1.sigma[i][j] + 2.0 * k2.sigma[i][j] + 2.0 * k3.sigma[i][j] + k4.sigma[i][j])
                    * (h / 6.0);
        }
    }
    out
}

/// Fixed-step fourth-order Runge–Kutta from `t = 0` to `t_end`.
///
/// Each step is taken once with `h` and once as two halves; the two-half
/// result is kept and the discrepancy is the error estimate. The step is
/// shrunk to `t_end / ceil(t_end / dt)` so the grid ends exactly at `t_end`.
pub fn integrate_obe(
    pulses: &PulseSet,
    init: &AtomState,
    decay: Option<&DecayModel>,
    options: &ObeOptions,
    t_end: f64,
    dt: f64,
) -> Result<AtomTrajectory> {
    pulses.validate()?;
    if let Some(d) = decay {
        d.validate()?;
    }
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::invalid(
            "dt",
            "time step and end time must be positive",
        ));
    }
    let phase_per_step = dt * pulses.max_one_photon_detuning();
    if phase_per_step > MAX_PHASE_PER_STEP * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge(phase_per_step));
    }
    let trace = init.trace();
    if (trace - 1.0).norm() > 1e-10 {
        return Err(Error::NotNormalized(trace.norm()));
    }
    if options.stride == 0 {
        return Err(Error::invalid("stride", "must be at least 1"));
    }

    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps as f64;
    let r = options.position;
    let mut times = vec![0.0];
    let mut states = vec![*init];
    let mut state = *init;
    let mut max_err: f64 = 0.0;

    for n in 0..steps {
        let t = n as f64 * h;
        let full = rk4_step(&state, t, h, pulses, decay, &r);
        let half = rk4_step(&state, t, 0.5 * h, pulses, decay, &r);
        let half = rk4_step(&half, t + 0.5 * h, 0.5 * h, pulses, decay, &r);
        for i in 0..4 {
            for j in 0..4 {
                max_err = max_err.max((full.sigma[i][j] - half.sigma[i][j]).norm());
            }
        }
        state = half;
        if (n + 1) % options.stride == 0 || n + 1 == steps {
            times.push((n + 1) as f64 * h);
            states.push(state);
        }
    }

    Ok(AtomTrajectory {
        times,
        states,
        max_step_error: max_err,
    })
}
