use fwmspin::collective_spin::{husimi_q, moments, CollectiveState};
use fwmspin::constants::SPEED_OF_LIGHT;
use fwmspin::measurement::{
    collapse_ideal, collapse_lossy, measure, photon_distribution, sample_outcome,
};
use fwmspin::signal_field::{
    collective_sz, output_field, propagate_numeric, Geometry, PropagationGrid,
};
use fwmspin::Complex64;
use proptest::prelude::*;

fn css(n: usize) -> CollectiveState {
    CollectiveState::css_x_polarized(n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Averaging the posteriors over outcomes returns the prior populations,
    /// with or without loss.
    #[test]
    fn posteriors_average_back_to_the_prior(
        n in 1usize..30,
        c in 0.05f64..1.5,
        eta in 0.1f64..=1.0,
    ) {
        let prior = css(n);
        let dist = photon_distribution(&prior, c * eta.sqrt(), None).unwrap();
        let mut mixture = vec![0.0; prior.spin().dim()];
        for (k, p) in dist.iter().enumerate() {
            if *p < 1e-300 {
                continue;
            }
            let post = collapse_lossy(&prior, c, k as u64, eta).unwrap();
            for (m, d) in mixture.iter_mut().zip(post.diagonal()) {
                *m += p * d;
            }
        }
        for (m, w) in mixture.iter().zip(prior.probabilities()) {
            prop_assert!((m - w).abs() < 1e-10, "{m} vs {w}");
        }
    }

    #[test]
    fn posteriors_are_states_with_mirror_symmetry(
        n in 2usize..80,
        c in 0.01f64..2.0,
        n_m in 0u64..12,
        eta in 0.05f64..=1.0,
    ) {
        let prior = css(n);
        let pure = collapse_ideal(&prior, c, n_m).unwrap();
        prop_assert!((pure.norm_sqr() - 1.0).abs() < 1e-12);
        let p = pure.probabilities();
        for k in 0..p.len() {
            prop_assert!((p[k] - p[p.len() - 1 - k]).abs() < 1e-12);
        }
        // the x-polarized prior is mirror symmetric, so ⟨S_z⟩ stays zero
        prop_assert!(moments(&pure).mean_z.abs() < 1e-9);

        let mixed = collapse_lossy(&prior, c, n_m, eta).unwrap();
        prop_assert!(mixed.min_eigenvalue() > -1e-10);
        prop_assert!(mixed.purity() <= 1.0 + 1e-12);
    }

    /// Losing photons only rescales the counting statistics: the detected
    /// distribution at efficiency η is the lossless one at C√η.
    #[test]
    fn outcome_probability_matches_the_rescaled_distribution(
        n in 1usize..40,
        c in 0.05f64..1.0,
        eta in 0.1f64..=1.0,
        n_m in 0u64..8,
    ) {
        let prior = css(n);
        let dist = photon_distribution(&prior, c * eta.sqrt(), Some(n_m as usize)).unwrap();
        let record = measure(&prior, c, eta, n_m).unwrap();
        prop_assert!((record.probability - dist[n_m as usize]).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_a_function_of_the_seed(
        n in 1usize..40,
        c in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let prior = css(n);
        let a = sample_outcome(&prior, c, 0.7, seed).unwrap();
        let b = sample_outcome(&prior, c, 0.7, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn husimi_function_of_a_posterior_is_normalized(
        n in 2usize..30,
        c in 0.05f64..1.0,
        n_m in 0u64..6,
    ) {
        let post = collapse_ideal(&css(n), c, n_m).unwrap();
        let q = husimi_q(&post, 64, 128).unwrap();
        prop_assert!((q.integrate() - 1.0).abs() < 1e-3);
    }

    /// The numeric exit field is affine in the population profile and
    /// reproduces the closed form for linear profiles.
    #[test]
    fn propagation_is_affine_in_the_profile(
        d0 in -1.0f64..1.0,
        slope in -1.0f64..1.0,
        k_re in -2.0f64..2.0,
        k_im in -2.0f64..2.0,
    ) {
        let geometry = Geometry::new(1e-8, 0.01, 1e17).unwrap();
        let k = Complex64::new(k_re, k_im) * 1e-30;
        let e_in = Complex64::new(3e-16, -1e-16);
        let transit = geometry.length / SPEED_OF_LIGHT;
        let grid = PropagationGrid {
            slices: 64,
            times: vec![2.0 * transit, 50.0 * transit],
            pulse_duration: 100.0 * transit,
        };
        let l = geometry.length;
        let profile = |z: f64| d0 + slope * (z / l - 0.5);
        let out = propagate_numeric(&profile, &|_| e_in, &|_| k, &geometry, &grid).unwrap();
        let sz = collective_sz(&profile, &geometry, 64);
        // the linear part integrates to zero over the sample
        let exact_sz = geometry.n_atoms_exact() / 2.0 * d0;
        prop_assert!((sz - exact_sz).abs() <= 1e-12 * exact_sz.abs().max(1.0));
        let exact = output_field(e_in, k, &geometry, exact_sz);
        for e in &out.field {
            prop_assert!((e - exact).norm() <= 1e-10 * exact.norm());
        }
    }
}
