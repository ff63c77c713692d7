//! Perturbative ground-state results checked against the integrator.

use fwmspin::atom_dynamics::{
    balanced_pump2, dark_state_balance, dark_state_coherence, integrate_obe, second_order_sources,
    steady_coherence, AtomState, DecayModel, GroundState, ObeOptions, PulseSet,
};
use fwmspin::Complex64;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ground(s11: f64) -> GroundState {
    GroundState {
        s11,
        s22: 1.0 - s11,
        s12: c(0.0),
    }
}

/// Mean of `σ12` over the flat top, which averages out the small
/// non-adiabatic ringing at the Raman detuning.
fn flat_top_mean(pulses: &PulseSet, init: &AtomState, from: f64, to: f64) -> Complex64 {
    let traj = integrate_obe(pulses, init, None, &ObeOptions::default(), to, 0.05).unwrap();
    let window: Vec<Complex64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= from)
        .map(|(_, s)| s.get(1, 2))
        .collect();
    window.iter().sum::<Complex64>() / window.len() as f64
}

#[test]
fn raman_detuned_ground_coherence_has_the_adiabatic_sign() {
    // all atoms in level 1, no probe, Raman detuning well above the Raman
    // Rabi frequency χ1χ2/Δ
    let (chi, delta) = (0.02, 0.02);
    let pulses = PulseSet::scaled([c(chi), c(chi), c(0.0)], 1.0, 1.0, delta, 3000.0, 1000.0);
    let init = AtomState::from_ground(ground(1.0));
    let numeric = flat_top_mean(&pulses, &init, 1200.0, 1800.0);
    let predicted = second_order_sources(&pulses, 1500.0, &[0.0; 3], &ground(1.0))
        .unwrap()
        .s12;
    assert!(predicted.re < 0.0);
    assert!(
        (numeric - predicted).norm() < 0.05 * predicted.norm(),
        "integrated {numeric}, predicted {predicted}"
    );
}

#[test]
fn optical_pumping_settles_in_the_dark_state() {
    // pumping into the dark state proceeds at about γχ²/Δ²
    let (chi1, chi2, gamma) = (0.09, 0.1, 0.1);
    let t_end = 1e4;
    let pulses = PulseSet::scaled([c(chi1), c(chi2), c(0.0)], 1.0, 1.0, 0.0, t_end, 100.0);
    let decay = DecayModel::new(gamma, gamma).unwrap();
    let init = AtomState::from_ground(GroundState::x_polarized());
    let traj = integrate_obe(
        &pulses,
        &init,
        Some(&decay),
        &ObeOptions::default(),
        t_end,
        0.05,
    )
    .unwrap();
    let s12 = traj.last().get(1, 2);
    let dark = dark_state_coherence(chi1, chi2).unwrap();
    assert!((s12.re - dark).abs() < 1e-3, "{s12} vs {dark}");
    let norm = chi1 * chi1 + chi2 * chi2;
    assert!((traj.last().population(1) - chi2 * chi2 / norm).abs() < 1e-3);

    // the quasi-steady -(χ1/χ2)/2 is ten percent away at this pump ratio
    let quasi = steady_coherence(chi1, chi2).unwrap().value;
    assert!((s12.re - quasi).abs() > 0.04);
}

#[test]
fn balanced_pumps_hold_the_ground_populations() {
    let (gamma, chi1, chip) = (0.01, 0.02, 0.004);
    let t_end = 10.0 / gamma;
    let decay = DecayModel::new(gamma, gamma).unwrap();
    let init = AtomState::from_ground(GroundState::x_polarized());
    let drift = |chi2: f64| {
        let pulses = PulseSet::scaled(
            [c(chi1), c(chi2), c(chip)],
            1.0,
            1.0,
            0.0,
            t_end,
            0.1 * t_end,
        );
        let traj = integrate_obe(
            &pulses,
            &init,
            Some(&decay),
            &ObeOptions::default(),
            t_end,
            0.05,
        )
        .unwrap();
        (traj.last().population(1) - 0.5).abs()
    };
    let balanced = balanced_pump2(chi1, chip, 1.0, 1.0, gamma, gamma).unwrap();
    // the other root of the balance condition as written: χ2² = χ1² - χp²
    let mirrored = (chi1 * chi1 - chip * chip).sqrt();
    assert!(
        dark_state_balance(chi1, mirrored, chip, 1.0, 1.0, gamma, gamma)
            .unwrap()
            .abs()
            < 1e-15
    );
    let (good, bad) = (drift(balanced), drift(mirrored));
    assert!(good < 1e-5, "balanced drift {good}");
    assert!(bad > 20.0 * good, "mirrored drift {bad}, balanced {good}");
}
