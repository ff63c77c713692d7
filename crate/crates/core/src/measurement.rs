//! Photon counting on the signal mode and the conditional state of the atoms.
//!
//! The coupled evolution displaces the signal mode to the coherent amplitude
//! `α_M = -iCM` for each Dicke component, `U = exp[-iC(c† + c)S_z]`, so
//! counting `n` photons multiplies `A_M` by `⟨n|α_M⟩`. Loss is modelled as a
//! beam splitter of transmissivity `η` ahead of an ideal counter, with the
//! reflected port traced out.
//!
//! All weights are handled as logarithms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::collective_spin::{CollectiveState, MixedCollectiveState, Spin};
use crate::{Error, Result};

/// `ln(x^n)` with `0⁰ = 1`.
fn ln_pow(x: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * x.abs().ln()
    }
}

fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `i^n`.
fn i_pow(n: u64) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid(
            "C",
            format!("must be finite and non-negative, got {c}"),
        ));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(
            "eta",
            format!("must lie in (0, 1], got {eta}"),
        ));
    }
    Ok(())
}

/// Coherent amplitudes the signal mode takes for each Dicke component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalMode {
    pub c: f64,
}

impl SignalMode {
    /// `α_M = -iCM`.
    pub fn alpha(&self, m: f64) -> Complex64 {
        Complex64::new(0.0, -self.c * m)
    }

    /// `ln P(n | M)` for the Poisson statistics of `|α_M⟩`.
    pub fn ln_likelihood(&self, m: f64, n: u64) -> f64 {
        let lambda = (self.c * m).powi(2);
        if lambda == 0.0 {
            return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        -lambda + n as f64 * lambda.ln() - ln_factorial(n)
    }
}

/// Default photon-number cutoff `⌈(CS)²⌉ + 10⌈CS⌉ + 20`.
pub fn default_n_max(spin: Spin, c: f64) -> usize {
    let cs = c * spin.value();
    (cs * cs).ceil() as usize + 10 * cs.ceil() as usize + 20
}

/// `P(n) = Σ_M |A_M|² e^{-(CM)²} (CM)^{2n} / n!` for `n = 0..=n_max`.
pub fn photon_distribution(
    prior: &CollectiveState,
    c: f64,
    n_max: Option<usize>,
) -> Result<Vec<f64>> {
    check_c(c)?;
    let spin = prior.spin();
    let n_max = n_max.unwrap_or_else(|| default_n_max(spin, c));
    let mode = SignalMode { c };
    let mut dist = vec![0.0; n_max + 1];
    for (m, w) in spin.ms().zip(prior.probabilities()) {
        if w <= 0.0 {
            continue;
        }
        // Poisson(λ) mass outside λ ± (12√λ + 30) is far below f64 resolution.
        let lam = (c * m) * (c * m);
        let half = 12.0 * lam.sqrt() + 30.0;
        let lo = (lam - half).max(0.0) as usize;
        let hi = ((lam + half).ceil() as usize).min(n_max);
        if lo > hi {
            continue;
        }
        for (n, p) in (lo..).zip(&mut dist[lo..=hi]) {
            *p += (w.ln() + mode.ln_likelihood(m, n as u64)).exp();
        }
    }
    Ok(dist)
}

/// Probability of a single outcome.
pub fn outcome_probability(prior: &CollectiveState, c: f64, n: u64) -> Result<f64> {
    check_c(c)?;
    let mode = SignalMode { c };
    Ok(prior
        .spin()
        .ms()
        .zip(prior.probabilities())
        .filter(|(_, w)| *w > 0.0)
        .map(|(m, w)| (w.ln() + mode.ln_likelihood(m, n)).exp())
        .sum())
}

/// Conditional state after counting `n_m` photons with a perfect detector:
/// `c_M ∝ A_M (iCM)^{n_m} e^{-(CM)²/2}`.
pub fn collapse_ideal(prior: &CollectiveState, c: f64, n_m: u64) -> Result<CollectiveState> {
    check_c(c)?;
    let spin = prior.spin();
    let mut log_mag = Vec::with_capacity(spin.dim());
    let mut phase = Vec::with_capacity(spin.dim());
    for (m, a) in spin.ms().zip(prior.amplitudes()) {
        let cm = c * m;
        if a.norm() == 0.0 || (cm == 0.0 && n_m > 0) {
            log_mag.push(f64::NEG_INFINITY);
            phase.push(Complex64::new(1.0, 0.0));
            continue;
        }
        log_mag.push(a.norm().ln() + ln_pow(cm, n_m) - 0.5 * cm * cm);
        let sign = if cm < 0.0 && n_m % 2 == 1 { -1.0 } else { 1.0 };
        phase.push(i_pow(n_m) * sign * (a / a.norm()));
    }
    if log_mag.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::ZeroProbability(n_m));
    }
    CollectiveState::from_log_amplitudes(spin, &log_mag, &phase)
}

/// Conditional density matrix after `n` counts at efficiency `η`:
/// `ρ_MM' ∝ A_M A*_M' (ηC²MM')ⁿ/n! e^{-ηC²(M²+M'²)/2} e^{-(1-η)C²(M-M')²/2}`.
pub fn collapse_lossy(
    prior: &CollectiveState,
    c: f64,
    n: u64,
    eta: f64,
) -> Result<MixedCollectiveState> {
    check_c(c)?;
    check_eta(eta)?;
    let spin = prior.spin();
    let dim = spin.dim();
    let ms: Vec<f64> = spin.ms().collect();
    let amps = prior.amplitudes();
    let c2 = c * c;

    // log magnitude and phase of each entry
    let entry = |i: usize, j: usize| -> (f64, Complex64) {
        let (a, b) = (amps[i], amps[j]);
        let prod = ms[i] * ms[j];
        if a.norm() == 0.0 || b.norm() == 0.0 || (prod == 0.0 && n > 0) {
            return (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
        }
        let log = a.norm().ln() + b.norm().ln() + ln_pow(eta * c2 * prod, n)
            - ln_factorial(n)
            - 0.5 * eta * c2 * (ms[i] * ms[i] + ms[j] * ms[j])
            - 0.5 * (1.0 - eta) * c2 * (ms[i] - ms[j]).powi(2);
        let sign = if prod < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        (log, (a / a.norm()) * (b / b.norm()).conj() * sign)
    };

    // |ρ_MM'| ≤ sqrt(ρ_MM ρ_M'M'), so the largest diagonal log bounds all
    let shift = (0..dim)
        .map(|i| entry(i, i).0)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Err(Error::ZeroProbability(n));
    }
    let rho = DMatrix::from_fn(dim, dim, |i, j| {
        let (log, phase) = entry(i, j);
        if log == f64::NEG_INFINITY {
            Complex64::new(0.0, 0.0)
        } else {
            phase * (log - shift).exp()
        }
    });
    MixedCollectiveState::normalized(spin, rho)
}

/// Conditional state, pure for a perfect detector.
#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Pure(CollectiveState),
    Mixed(MixedCollectiveState),
}

impl Posterior {
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            Posterior::Pure(s) => s.probabilities(),
            Posterior::Mixed(r) => r.diagonal(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub n_m: u64,
    pub probability: f64,
    pub posterior: Posterior,
    pub c_used: f64,
    pub eta: f64,
}

/// JSON-ready view of a [`MeasurementRecord`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSummary {
    pub n_m: u64,
    pub probability: f64,
    pub eta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub posterior: PosteriorSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PosteriorSummary {
    /// `[re, im]` per `M`, from `-S` up.
    Pure { amplitudes: Vec<[f64; 2]> },
    Mixed {
        diagonal: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        rho: Option<Vec<Vec<[f64; 2]>>>,
    },
}

impl MeasurementRecord {
    pub fn summary(&self, full_matrix: bool) -> RecordSummary {
        let posterior = match &self.posterior {
            Posterior::Pure(s) => PosteriorSummary::Pure {
                amplitudes: s.amplitudes().iter().map(|c| [c.re, c.im]).collect(),
            },
            Posterior::Mixed(r) => PosteriorSummary::Mixed {
                diagonal: r.diagonal(),
                rho: full_matrix.then(|| {
                    r.rho()
                        .row_iter()
                        .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
                        .collect()
                }),
            },
        };
        RecordSummary {
            n_m: self.n_m,
            probability: self.probability,
            eta: self.eta,
            c: self.c_used,
            posterior,
        }
    }
}

/// Conditions on a given count and attaches its probability.
pub fn measure(prior: &CollectiveState, c: f64, eta: f64, n_m: u64) -> Result<MeasurementRecord> {
    check_eta(eta)?;
    // losses act on the counts like a weaker coupling C√η
    let probability = outcome_probability(prior, c * eta.sqrt(), n_m)?;
    let posterior = if eta == 1.0 {
        Posterior::Pure(collapse_ideal(prior, c, n_m)?)
    } else {
        Posterior::Mixed(collapse_lossy(prior, c, n_m, eta)?)
    };
    Ok(MeasurementRecord {
        n_m,
        probability,
        posterior,
        c_used: c,
        eta,
    })
}

/// Draws a count from the detected distribution with a ChaCha8 generator
/// seeded by `seed`, by inverse transform, and conditions on it.
pub fn sample_outcome(
    prior: &CollectiveState,
    c: f64,
    eta: f64,
    seed: u64,
) -> Result<MeasurementRecord> {
    check_eta(eta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_m = draw(&photon_distribution(prior, c * eta.sqrt(), None)?, &mut rng);
    measure(prior, c, eta, n_m)
}

/// Inverse-transform draw from a (possibly truncated) distribution; the
/// missing tail mass goes to the last entry.
pub fn draw<R: Rng>(distribution: &[f64], rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (n, p) in distribution.iter().enumerate() {
        acc += p;
        if u < acc {
            return n as u64;
        }
    }
    distribution.len().saturating_sub(1) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatAnalysis {
    /// `M` of the largest `|c_M|²` with `M > 0`.
    pub peak_plus: f64,
    /// `M` of the largest `|c_M|²` with `M < 0`.
    pub peak_minus: f64,
    pub separation: f64,
    /// Probability with `|M|` below half the smaller peak position.
    pub overlap: f64,
    /// No dip between the peaks; both peaks are then the global maximum.
    pub unimodal: bool,
}

/// Locates the two lobes of a cat-like posterior. `n_m = 0` has no cat
/// structure and is an error.
pub fn cat_analysis(posterior: &CollectiveState, n_m: u64) -> Result<CatAnalysis> {
    if n_m == 0 {
        return Err(Error::NotACat(
            "n_m = 0 collapses onto a squeezed state".to_owned(),
        ));
    }
    let spin = posterior.spin();
    if spin.n_atoms() < 2 {
        return Err(Error::NotACat(
            "a single atom has no two-lobed structure".to_owned(),
        ));
    }
    let p = posterior.probabilities();
    let ms: Vec<f64> = spin.ms().collect();
    let argmax = |range: &mut dyn Iterator<Item = usize>| {
        range.fold(None, |best: Option<usize>, k| match best {
            Some(b) if p[b] >= p[k] => Some(b),
            _ => Some(k),
        })
    };
    let dim = spin.dim();
    let minus = argmax(&mut (0..dim).filter(|&k| ms[k] < 0.0)).expect("S >= 1 has negative M");
    // scan from M = S down so ties resolve towards the outer edge, as for minus
    let plus = argmax(&mut (0..dim).rev().filter(|&k| ms[k] > 0.0)).expect("S >= 1 has positive M");

    let floor = p[plus].min(p[minus]);
    let dip = ((minus + 1)..plus).any(|k| p[k] < floor * (1.0 - 1e-12));
    let (peak_minus, peak_plus, unimodal) = if dip {
        (ms[minus], ms[plus], false)
    } else {
        let global = argmax(&mut (0..dim)).expect("non-empty");
        (ms[global], ms[global], true)
    };
    let half = 0.5 * peak_plus.abs().min(peak_minus.abs());
    let overlap = ms
        .iter()
        .zip(&p)
        .filter(|(m, _)| m.abs() < half)
        .map(|(_, w)| w)
        .sum();
    Ok(CatAnalysis {
        peak_plus,
        peak_minus,
        separation: peak_plus - peak_minus,
        overlap,
        unimodal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective_spin::moments;
    use proptest::prelude::*;

    fn css(n: usize) -> CollectiveState {
        CollectiveState::css_x_polarized(n).unwrap()
    }

    #[test]
    fn no_coupling_means_no_photons() {
        let p = photon_distribution(&css(10), 0.0, None).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&x| x == 0.0));
        assert!(matches!(
            collapse_ideal(&css(10), 0.0, 1),
            Err(Error::ZeroProbability(1))
        ));
        assert_eq!(collapse_ideal(&css(10), 0.0, 0).unwrap(), css(10));
    }

    #[test]
    fn single_atom_is_one_poisson() {
        for c in [0.3, 1.0, 2.5] {
            let p = photon_distribution(&css(1), c, None).unwrap();
            let lambda: f64 = c * c / 4.0;
            for (n, pn) in p.iter().enumerate() {
                let expected = (-lambda + n as f64 * lambda.ln() - ln_factorial(n as u64)).exp();
                assert!((pn - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn distribution_is_normalized_with_default_cutoff() {
        for n in [1, 2, 10, 100, 1000] {
            for c in [0.01, 0.1, 1.0, 3.0] {
                let p = photon_distribution(&css(n), c, None).unwrap();
                let total: f64 = p.iter().sum();
                assert!((total - 1.0).abs() < 1e-12, "N={n} C={c}: {total}");
            }
        }
    }

    #[test]
    fn mean_photon_number_is_c2_sz2() {
        for n in [2, 10, 100] {
            let prior = css(n);
            let sz2 = moments(&prior).mean_sz_sq;
            for c in [0.1, 1.0] {
                let p = photon_distribution(&prior, c, None).unwrap();
                let mean: f64 = p.iter().enumerate().map(|(k, pk)| k as f64 * pk).sum();
                assert!((mean - c * c * sz2).abs() < 1e-10, "N={n} C={c}");
                assert!((mean - c * c * n as f64 / 4.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn one_count_empties_m_zero() {
        let post = collapse_ideal(&css(4), 0.7, 1).unwrap();
        assert_eq!(post.amplitude(0.0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn two_atoms_no_count() {
        // |c_M|² ∝ {e^{-1}/4, 1/2, e^{-1}/4}
        let post = collapse_ideal(&css(2), 1.0, 0).unwrap();
        let e = (-1.0f64).exp();
        let z = e / 2.0 + 0.5;
        let expected = [e / 4.0 / z, 0.5 / z, e / 4.0 / z];
        for (p, q) in post.probabilities().iter().zip(expected) {
            assert!((p - q).abs() < 1e-15);
        }
        assert!(moments(&post).var_z < 0.5);
    }

    #[test]
    fn no_count_squeezes() {
        let prior = css(20);
        let post = collapse_ideal(&prior, 0.3, 0).unwrap();
        let xi = crate::collective_spin::squeezing_parameters(&moments(&post)).unwrap();
        assert!(xi.wineland < 1.0, "{xi:?}");
    }

    #[test]
    fn lossless_lossy_collapse_is_the_pure_projector() {
        for (n_atoms, c, n) in [(4, 1.0, 0), (5, 0.5, 3), (8, 2.0, 5)] {
            let ideal = collapse_ideal(&css(n_atoms), c, n).unwrap();
            let lossy = collapse_lossy(&css(n_atoms), c, n, 1.0).unwrap();
            assert!(lossy.distance_to_pure(&ideal) < 1e-12);
        }
    }

    #[test]
    fn lossy_collapse_is_a_state() {
        for eta in [0.05, 0.5, 0.9] {
            for n in 0..4 {
                let rho = collapse_lossy(&css(6), 1.3, n, eta).unwrap();
                assert!(rho.min_eigenvalue() > -1e-10);
                assert!(rho.purity() <= 1.0 + 1e-12);
            }
        }
        assert!(collapse_lossy(&css(6), 1.0, 0, 0.0).is_err());
    }

    #[test]
    fn weak_detection_dephases_the_prior() {
        // η → 0 with no counts leaves |A_M|² on the diagonal and damps
        // coherences by e^{-C²(M-M')²/2}
        let prior = css(4);
        let rho = collapse_lossy(&prior, 1.0, 0, 1e-9).unwrap();
        let a = prior.amplitudes();
        for i in 0..5 {
            for j in 0..5 {
                let dm = i as f64 - j as f64;
                let expected = a[i] * a[j].conj() * (-0.5 * dm * dm).exp();
                assert!((rho.rho()[(i, j)] - expected).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_trivial_at_zero_coupling() {
        let prior = css(30);
        let a = sample_outcome(&prior, 0.4, 1.0, 42).unwrap();
        let b = sample_outcome(&prior, 0.4, 1.0, 42).unwrap();
        assert_eq!(a, b);
        for seed in 0..20 {
            assert_eq!(sample_outcome(&prior, 0.0, 1.0, seed).unwrap().n_m, 0);
        }
        let dist = photon_distribution(&prior, 0.4, None).unwrap();
        assert!((a.probability - dist[a.n_m as usize]).abs() < 1e-12);
    }

    #[test]
    fn histogram_matches_distribution() {
        let prior = css(16);
        let c = 0.6;
        let dist = photon_distribution(&prior, c, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mut counts = vec![0u64; dist.len()];
        for _ in 0..draws {
            counts[draw(&dist, &mut rng) as usize] += 1;
        }
        for (n, (&k, &p)) in counts.iter().zip(&dist).enumerate() {
            let mean = p * draws as f64;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (k as f64 - mean).abs() <= 4.0 * sigma + 1.0,
                "n={n}: {k} vs {mean}"
            );
        }
    }

    #[test]
    fn detected_statistics_match_the_rescaled_coupling() {
        let prior = css(6);
        let (c, eta) = (1.2, 0.4f64);
        let dist = photon_distribution(&prior, c * eta.sqrt(), None).unwrap();
        for n in 0..6u64 {
            // unnormalized trace of the lossy update equals P_η(n)
            let spin = prior.spin();
            let trace: f64 = spin
                .ms()
                .zip(prior.probabilities())
                .map(|(m, w)| {
                    let lam = eta * c * c * m * m;
                    w * (-lam + ln_pow(lam, n) - ln_factorial(n)).exp()
                })
                .sum();
            assert!((trace - dist[n as usize]).abs() < 1e-14);
        }
    }

    #[test]
    fn cat_peaks_sit_near_root_n_over_c_for_a_flat_prior() {
        // likelihood alone peaks at M* = √n / C
        let spin = Spin::from_atoms(100).unwrap();
        let flat = CollectiveState::normalized(spin, vec![Complex64::new(1.0, 0.0); 101]).unwrap();
        let n = 4;
        let c = (n as f64).sqrt() / 25.0;
        let post = collapse_ideal(&flat, c, n).unwrap();
        let cat = cat_analysis(&post, n).unwrap();
        assert!(!cat.unimodal);
        assert!((cat.peak_plus - 25.0).abs() <= 1.0 && (cat.peak_minus + 25.0).abs() <= 1.0);
        assert!((cat.separation - 50.0).abs() <= 2.0);
        assert!(cat.overlap < 0.1);
    }

    #[test]
    fn cat_analysis_flags_missing_cats() {
        let post = collapse_ideal(&css(10), 0.5, 0).unwrap();
        assert!(matches!(cat_analysis(&post, 0), Err(Error::NotACat(_))));
        // a CSS has a single central lobe
        let cat = cat_analysis(&css(10), 1).unwrap();
        assert!(cat.unimodal);
        assert_eq!(cat.peak_plus, cat.peak_minus);
        assert_eq!(cat.peak_plus, 0.0);
    }

    #[test]
    fn record_summary_shapes() {
        let rec = measure(&css(4), 1.0, 0.5, 2).unwrap();
        match rec.summary(false).posterior {
            PosteriorSummary::Mixed { diagonal, rho } => {
                assert_eq!(diagonal.len(), 5);
                assert!(rho.is_none());
            }
            _ => panic!("lossy record must be mixed"),
        }
        let rec = measure(&css(4), 1.0, 1.0, 2).unwrap();
        assert!(matches!(
            rec.summary(true).posterior,
            PosteriorSummary::Pure { .. }
        ));
    }

    proptest! {
        #[test]
        fn symmetric_priors_give_symmetric_posteriors(n_atoms in 1usize..40, c in 0.01f64..3.0, n in 0u64..8) {
            let post = collapse_ideal(&css(n_atoms), c, n);
            if let Ok(post) = post {
                let p = post.probabilities();
                let d = p.len();
                for k in 0..d {
                    prop_assert!((p[k] - p[d - 1 - k]).abs() < 1e-12);
                }
                prop_assert!((post.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn no_count_variance_does_not_grow_with_c(n_atoms in 2usize..60, c in 0.0f64..2.0, dc in 0.0f64..0.5) {
            let a = moments(&collapse_ideal(&css(n_atoms), c, 0).unwrap()).var_z;
            let b = moments(&collapse_ideal(&css(n_atoms), c + dc, 0).unwrap()).var_z;
            prop_assert!(b <= a + 1e-12);
        }
    }
}
