//! Closed-form perturbative solutions in powers of `χ/Δ_i`.

use num_complex::Complex64;
use serde::Serialize;

use super::{GroundState, PulseSet, Vec3, PERTURBATIVE_THRESHOLD};
use crate::{Error, Result, Warning};

/// First-order optical coherences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder {
    pub s14: Complex64,
    pub s24: Complex64,
    pub s13: Complex64,
    pub s23: Complex64,
}

/// Second-order source coherences `σ34` and `σ12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrder {
    pub s34: Complex64,
    pub s12: Complex64,
}

/// Third-order `σ23` split into its four terms.
///
/// `terms[0]` and `terms[3]` travel along `k_p` and are not phase matched;
/// `terms[1]` is the phase-matched term kept in the simplified form and
/// `terms[2]` the phase-matched term dropped for `δ ≪ Δ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sigma23 {
    pub terms: [Complex64; 4],
    pub full: Complex64,
    pub phase_matched: Complex64,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyCoherence {
    pub value: f64,
    pub warning: Option<Warning>,
}

fn nonzero(value: f64, name: &'static str) -> Result<f64> {
    if value == 0.0 {
        Err(Error::SingularDetuning(name))
    } else {
        Ok(value)
    }
}

pub fn first_order_coherences(
    pulses: &PulseSet,
    t: f64,
    r: &Vec3,
    ground: &GroundState,
) -> Result<FirstOrder> {
    let big = nonzero(pulses.detuning, "Delta")?;
    let big_p = nonzero(pulses.probe_detuning, "Delta_p")?;
    let d = pulses.drive(t, r);
    Ok(FirstOrder {
        s14: (d.pump1 * ground.s11 + d.pump2 * ground.s12) / big,
        s24: (d.pump2 * ground.s22 + d.pump1 * ground.s21()) / big,
        s13: d.probe * ground.s11 / big_p,
        s23: d.probe * ground.s21() / big_p,
    })
}

/// Second-order `(dσ11/dt, dσ22/dt)`.
pub fn ground_population_rate(
    pulses: &PulseSet,
    t: f64,
    r: &Vec3,
    ground: &GroundState,
) -> Result<[f64; 2]> {
    let big = nonzero(pulses.detuning, "Delta")?;
    let d = pulses.drive(t, r);
    let rate = Complex64::i()
        * (d.pump1.conj() * d.pump2 * ground.s12 - d.pump1 * d.pump2.conj() * ground.s21())
        / big;
    Ok([rate.re, -rate.re])
}

/// `σ34` and `σ12` to second order.
///
/// The Raman-detuned shift of the ground coherence is
/// `-Λ1Λ2*(σ11⁰ - σ22⁰)/(Δδ)`. Adiabatic elimination of the ten equations of
/// motion fixes the minus sign; the integrator agrees with it.
pub fn second_order_sources(
    pulses: &PulseSet,
    t: f64,
    r: &Vec3,
    ground: &GroundState,
) -> Result<SecondOrder> {
    let big = nonzero(pulses.detuning, "Delta")?;
    let big_p = nonzero(pulses.probe_detuning, "Delta_p")?;
    let small = nonzero(pulses.raman_detuning, "delta")?;
    let d = pulses.drive(t, r);
    Ok(SecondOrder {
        s34: d.probe.conj() * (d.pump1 * ground.s11 + d.pump2 * ground.s12) / (big * big_p),
        s12: ground.s12 - d.pump1 * d.pump2.conj() * ground.imbalance() / (big * small),
    })
}

/// Third-order `σ23` with the full four-term expression and the simplified
/// phase-matched term.
pub fn perturbative_sigma23(
    pulses: &PulseSet,
    t: f64,
    r: &Vec3,
    ground: &GroundState,
) -> Result<Sigma23> {
    let big = nonzero(pulses.detuning, "Delta")?;
    let big_p = nonzero(pulses.probe_detuning, "Delta_p")?;
    let small = nonzero(pulses.raman_detuning, "delta")?;
    let d = pulses.drive(t, r);
    let (l1, l2, lp) = (d.pump1, d.pump2, d.probe);
    let triple = l1.conj() * l2 * lp;
    let terms = [
        lp * ground.s21() / big_p,
        -triple * ground.imbalance() / (big * big_p * small),
        -triple * ground.s11 / (big * big_p * big_p),
        -l2.norm_sqr() * lp * ground.s21() / (big * big_p * big_p),
    ];
    let mut warnings = Vec::new();
    let ratio = (small / big_p).abs();
    if !(ratio < PERTURBATIVE_THRESHOLD) {
        warnings.push(Warning::Perturbative {
            ratio: "|delta/Delta_p|".to_owned(),
            value: ratio,
            threshold: PERTURBATIVE_THRESHOLD,
        });
    }
    Ok(Sigma23 {
        terms,
        full: terms.iter().sum(),
        phase_matched: terms[1],
        warnings,
    })
}

/// `γ'(χ1² - χ2²)/Δ² - γχp²/Δp²`, exactly as the balance condition is
/// written. Zero means balanced in that form.
pub fn dark_state_balance(
    chi1: f64,
    chi2: f64,
    chip: f64,
    delta: f64,
    delta_p: f64,
    gamma: f64,
    gamma_prime: f64,
) -> Result<f64> {
    let big = nonzero(delta, "Delta")?;
    let big_p = nonzero(delta_p, "Delta_p")?;
    Ok(gamma_prime * (chi1 * chi1 - chi2 * chi2) / (big * big)
        - gamma * chip * chip / (big_p * big_p))
}

/// Pump-2 amplitude that balances the probe-induced imbalance:
/// `χ2² = χ1² + γΔ²χp²/(γ'Δp²)`, i.e. the pump on 2↔4 stronger than the one on
/// 1↔4. This is the sign that holds the ground populations fixed when
/// integrated; see the README.
pub fn balanced_pump2(
    chi1: f64,
    chip: f64,
    delta: f64,
    delta_p: f64,
    gamma: f64,
    gamma_prime: f64,
) -> Result<f64> {
    nonzero(delta, "Delta")?;
    let big_p = nonzero(delta_p, "Delta_p")?;
    if !(gamma_prime > 0.0) || !(gamma >= 0.0) {
        return Err(Error::invalid(
            "gamma_prime",
            "balance needs gamma_prime > 0 and gamma >= 0",
        ));
    }
    Ok((chi1 * chi1 + gamma * delta * delta * chip * chip / (gamma_prime * big_p * big_p)).sqrt())
}

/// Quasi-steady ground coherence `-(χ1/χ2)/2`, flagged when it exceeds 1/2.
pub fn steady_coherence(chi1: f64, chi2: f64) -> Result<SteadyCoherence> {
    if chi2 == 0.0 {
        return Err(Error::invalid("chi2", "must be nonzero"));
    }
    let value = -0.5 * chi1 / chi2;
    let warning = (value.abs() > 0.5).then_some(Warning::CoherenceExceedsHalf { value });
    Ok(SteadyCoherence { value, warning })
}

/// Ground coherence `-χ1χ2/(χ1² + χ2²)` of the dark state
/// `(χ2|1⟩ - χ1|2⟩)/√(χ1² + χ2²)` for real pumps and no probe. Optical
/// pumping settles here. It coincides with [`steady_coherence`] only at
/// `χ1 = χ2`.
pub fn dark_state_coherence(chi1: f64, chi2: f64) -> Result<f64> {
    let norm = chi1 * chi1 + chi2 * chi2;
    if norm == 0.0 {
        return Err(Error::invalid("chi2", "both pumps are zero"));
    }
    Ok(-chi1 * chi2 / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom_dynamics::{integrate_obe, AtomState, ObeOptions};

    const ORIGIN: Vec3 = [0.0; 3];

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn first_order_limits() {
        let p = PulseSet::scaled([c(0.02), c(0.0), c(0.01)], 1.0, 1.5, 1e-3, 1.0, 0.0);
        let g = GroundState {
            s11: 0.8,
            s22: 0.2,
            s12: c(0.0),
        };
        let f = first_order_coherences(&p, 0.5, &ORIGIN, &g).unwrap();
        assert_eq!(f.s14, c(0.02 * 0.8));

        let x = GroundState::x_polarized();
        let f = first_order_coherences(&p, 0.5, &ORIGIN, &x).unwrap();
        assert!((f.s23 - c(-0.01 / (2.0 * 1.5))).norm() < 1e-18);

        let off = PulseSet::scaled([c(0.0); 3], 1.0, 1.5, 1e-3, 1.0, 0.0);
        let f = first_order_coherences(&off, 0.5, &ORIGIN, &x).unwrap();
        assert_eq!([f.s14, f.s24, f.s13, f.s23], [c(0.0); 4]);
    }

    #[test]
    fn singular_detunings_are_errors() {
        let x = GroundState::x_polarized();
        let p = PulseSet::scaled([c(0.01); 3], 0.0, 1.0, 1e-3, 1.0, 0.0);
        assert_eq!(
            first_order_coherences(&p, 0.5, &ORIGIN, &x),
            Err(Error::SingularDetuning("Delta"))
        );
        let p = PulseSet::scaled([c(0.01); 3], 1.0, 1.0, 0.0, 1.0, 0.0);
        assert_eq!(
            second_order_sources(&p, 0.5, &ORIGIN, &x),
            Err(Error::SingularDetuning("delta"))
        );
        assert!(perturbative_sigma23(&p, 0.5, &ORIGIN, &x).is_err());
    }

    #[test]
    fn dark_state_rate_vanishes_for_real_copropagating_pumps() {
        let mut p = PulseSet::scaled([c(0.02), c(0.03), c(0.01)], 1.0, 1.0, 1e-3, 1.0, 0.0);
        p.k1 = [0.0, 0.0, 7.0];
        p.k2 = [0.0, 0.0, 7.0];
        let x = GroundState::x_polarized();
        for z in [0.0, 0.3, 1.1] {
            let rate = ground_population_rate(&p, 0.5, &[0.0, 0.0, z], &x).unwrap();
            // zero up to the rounding of the spatial phase factors
            assert!(rate[0].abs() < 1e-15 * 0.02 * 0.03 && rate[0] == -rate[1]);
        }
        let single = PulseSet::scaled([c(0.02), c(0.0), c(0.01)], 1.0, 1.0, 1e-3, 1.0, 0.0);
        assert_eq!(
            ground_population_rate(&single, 0.5, &ORIGIN, &x).unwrap(),
            [0.0, 0.0]
        );
    }

    #[test]
    fn imaginary_coherence_drives_populations_like_the_integrator() {
        // rate = -2 Im(χ1 χ2 σ12)/Δ for real pumps
        let (chi, big) = (0.01, 1.0);
        let g = GroundState {
            s11: 0.5,
            s22: 0.5,
            s12: Complex64::new(0.0, 0.5),
        };
        let p = PulseSet::scaled([c(chi), c(chi), c(0.0)], big, 1.0, 0.0, 400.0, 100.0);
        let rate = ground_population_rate(&p, 200.0, &ORIGIN, &g).unwrap()[0];
        assert!((rate + chi * chi / big).abs() < 1e-18);

        let traj = integrate_obe(
            &p,
            &AtomState::from_ground(g),
            None,
            &ObeOptions::default(),
            300.0,
            0.05,
        )
        .unwrap();
        let (t0, s0) = traj.nearest(150.0);
        let (t1, s1) = traj.nearest(250.0);
        let numeric = (s1.population(1) - s0.population(1)) / (t1 - t0);
        assert!(
            (numeric - rate).abs() < 0.05 * rate.abs(),
            "{numeric} vs {rate}"
        );
    }

    #[test]
    fn second_order_limits() {
        let x = GroundState::x_polarized();
        let p = PulseSet::scaled([c(0.02), c(0.03), c(0.0)], 1.0, 1.2, 1e-3, 1.0, 0.0);
        let s = second_order_sources(&p, 0.5, &ORIGIN, &x).unwrap();
        assert_eq!(s.s12, x.s12);
        assert_eq!(s.s34, c(0.0));
    }

    #[test]
    fn phase_matched_term_values() {
        let x = GroundState::x_polarized();
        let p = PulseSet::scaled([c(0.02), c(0.03), c(0.01)], 1.0, 1.2, 1e-3, 1.0, 0.0);
        assert_eq!(
            perturbative_sigma23(&p, 0.5, &ORIGIN, &x)
                .unwrap()
                .phase_matched,
            c(0.0)
        );

        let top = GroundState {
            s11: 1.0,
            s22: 0.0,
            s12: c(0.0),
        };
        let s = perturbative_sigma23(&p, 0.5, &ORIGIN, &top).unwrap();
        let expected = -0.02 * 0.03 * 0.01 / (1.0 * 1.2 * 1e-3);
        assert!((s.phase_matched - c(expected)).norm() < 1e-15);
    }

    #[test]
    fn dropped_term_is_small_when_raman_detuning_is_small() {
        let top = GroundState {
            s11: 1.0,
            s22: 0.0,
            s12: c(0.0),
        };
        let p = PulseSet::scaled([c(0.02), c(0.03), c(0.01)], 1.0, 1.0, 0.01, 1.0, 0.0);
        let s = perturbative_sigma23(&p, 0.5, &ORIGIN, &top).unwrap();
        assert!(s.terms[2].norm() <= 0.01 * s.terms[1].norm() * (1.0 + 1e-12));
        assert!(s.warnings.is_empty());
        let p = PulseSet::scaled([c(0.02), c(0.03), c(0.01)], 1.0, 1.0, 0.5, 1.0, 0.0);
        assert_eq!(
            perturbative_sigma23(&p, 0.5, &ORIGIN, &top)
                .unwrap()
                .warnings
                .len(),
            1
        );
    }

    #[test]
    fn phase_matched_term_carries_the_phase_matched_spatial_phase() {
        let mut p = PulseSet::scaled(
            [
                Complex64::new(0.02, 0.01),
                c(0.03),
                Complex64::new(0.0, 0.01),
            ],
            1.0,
            1.2,
            1e-3,
            1.0,
            0.0,
        );
        p.k1 = [0.3, 0.0, 5.0];
        p.k2 = [0.0, 0.2, 4.5];
        p.kp = [0.1, 0.1, 6.0];
        let top = GroundState {
            s11: 1.0,
            s22: 0.0,
            s12: c(0.0),
        };
        let (ra, rb) = ([0.0, 0.0, 0.0], [0.4, -1.3, 2.2]);
        let a = perturbative_sigma23(&p, 0.5, &ra, &top)
            .unwrap()
            .phase_matched;
        let b = perturbative_sigma23(&p, 0.5, &rb, &top)
            .unwrap()
            .phase_matched;
        let ks: Vec<f64> = (0..3).map(|i| p.kp[i] - p.k1[i] + p.k2[i]).collect();
        let phase = ks[0] * rb[0] + ks[1] * rb[1] + ks[2] * rb[2];
        assert!((b - a * Complex64::from_polar(1.0, phase)).norm() < 1e-15);
    }

    #[test]
    fn balance_condition_values() {
        assert_eq!(
            dark_state_balance(0.1, 0.1, 0.0, 1.0, 2.0, 1.0, 3.0).unwrap(),
            0.0
        );
        // the condition as written: γ' = γ, Δ = Δp, χ1² - χ2² = χp²
        let (chi2, chip) = (0.1_f64, 0.05_f64);
        let chi1 = (chi2 * chi2 + chip * chip).sqrt();
        assert!(
            dark_state_balance(chi1, chi2, chip, 1.0, 1.0, 0.3, 0.3)
                .unwrap()
                .abs()
                < 1e-18
        );
        // the helper puts the stronger pump on 2↔4
        let chi2 = balanced_pump2(0.1, 0.05, 1.0, 1.0, 0.3, 0.3).unwrap();
        assert!((chi2 * chi2 - 0.1 * 0.1 - 0.05 * 0.05).abs() < 1e-16);
        assert!(dark_state_balance(0.1, 0.1, 0.0, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn steady_coherence_values() {
        assert_eq!(steady_coherence(1.0, 1.0).unwrap().value, -0.5);
        assert_eq!(steady_coherence(0.0, 1.0).unwrap().value, 0.0);
        assert!((steady_coherence(0.9, 1.0).unwrap().value + 0.45).abs() < 1e-15);
        assert!(steady_coherence(2.0, 1.0).unwrap().warning.is_some());
        assert!(steady_coherence(1.0, 0.0).is_err());
    }

    #[test]
    fn dark_state_coherence_values() {
        assert_eq!(dark_state_coherence(1.0, 1.0).unwrap(), -0.5);
        assert_eq!(dark_state_coherence(0.0, 1.0).unwrap(), 0.0);
        assert!((dark_state_coherence(0.9, 1.0).unwrap() + 0.9 / 1.81).abs() < 1e-15);
        assert!(dark_state_coherence(0.0, 0.0).is_err());
    }
}
