use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use super::{coherent_log_magnitudes, CollectiveState};
use crate::{Error, Result};

/// Husimi `Q(θ, φ) = |⟨θ, φ|ψ⟩|²` on a regular sphere grid.
///
/// `θ` runs over `n_theta` points from 0 to π inclusive; `φ` over `n_phi`
/// points from 0 to 2π exclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Row-major, `values[i][j]` at `(thetas[i], phis[j])`.
    pub values: Vec<Vec<f64>>,
    spin_dim: usize,
}

impl HusimiGrid {
    /// Largest value and where it sits.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &q) in row.iter().enumerate() {
                if q > best.0 {
                    best = (q, self.thetas[i], self.phis[j]);
                }
            }
        }
        best
    }

    /// `(2S+1)/4π ∫ Q sinθ dθ dφ`; equals 1 up to grid resolution.
    pub fn integrate(&self) -> f64 {
        let n_theta = self.thetas.len();
        let d_theta = PI / (n_theta - 1) as f64;
        let d_phi = 2.0 * PI / self.phis.len() as f64;
        let mut total = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            let w = if i == 0 || i == n_theta - 1 { 0.5 } else { 1.0 };
            total += w * self.thetas[i].sin() * row.iter().sum::<f64>();
        }
        total * d_theta * d_phi * self.spin_dim as f64 / (4.0 * PI)
    }

    /// Columns `theta,phi,q`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["theta", "phi", "q"])?;
        for (i, row) in self.values.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                w.write_record(&[
                    format!("{:.17e}", self.thetas[i]),
                    format!("{:.17e}", self.phis[j]),
                    format!("{q:.17e}"),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn husimi_q(state: &CollectiveState, n_theta: usize, n_phi: usize) -> Result<HusimiGrid> {
    if n_theta < 2 {
        return Err(Error::EmptyGrid("n_theta must be at least 2"));
    }
    if n_phi == 0 {
        return Err(Error::EmptyGrid("n_phi must be at least 1"));
    }
    let spin = state.spin();
    let s = spin.value();
    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| PI * i as f64 / (n_theta - 1) as f64)
        .collect();
    let phis: Vec<f64> = (0..n_phi)
        .map(|j| 2.0 * PI * j as f64 / n_phi as f64)
        .collect();
    let psi = state.amplitudes();

    let values = thetas
        .iter()
        .map(|&theta| {
            let weights: Vec<Complex64> = coherent_log_magnitudes(spin, theta)
                .iter()
                .zip(psi)
                .map(|(l, c)| c * l.exp())
                .collect();
            phis.iter()
                .map(|&phi| {
                    let overlap: Complex64 = spin
                        .ms()
                        .zip(&weights)
                        .map(|(m, w)| w * Complex64::from_polar(1.0, -(s - m) * phi))
                        .sum();
                    overlap.norm_sqr().min(1.0)
                })
                .collect()
        })
        .collect();

    Ok(HusimiGrid {
        thetas,
        phis,
        values,
        spin_dim: spin.dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective_spin::Spin;

    #[test]
    fn css_x_peaks_on_the_equator_at_zero_azimuth() {
        let css = CollectiveState::css_x_polarized(12).unwrap();
        let grid = husimi_q(&css, 41, 80).unwrap();
        let (q, theta, phi) = grid.argmax();
        assert!((q - 1.0).abs() < 1e-12);
        assert!((theta - PI / 2.0).abs() < 1e-12);
        assert_eq!(phi, 0.0);
    }

    #[test]
    fn top_state_is_one_at_north_pole() {
        let spin = Spin::from_atoms(6).unwrap();
        let state = CollectiveState::dicke(spin, 3.0).unwrap();
        let grid = husimi_q(&state, 9, 16).unwrap();
        for q in &grid.values[0] {
            assert!((q - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn values_are_probabilities_and_integrate_to_one() {
        for n in [1, 4, 10] {
            let spin = Spin::from_atoms(n).unwrap();
            let state = CollectiveState::coherent(spin, 0.9, 1.7).unwrap();
            let grid = husimi_q(&state, 181, 120).unwrap();
            assert!(grid
                .values
                .iter()
                .flatten()
                .all(|&q| (0.0..=1.0).contains(&q)));
            assert!(
                (grid.integrate() - 1.0).abs() < 1e-3,
                "N={n}: {}",
                grid.integrate()
            );
        }
    }

    #[test]
    fn cat_has_two_mirror_maxima() {
        // |c_M|² ∝ |A_M|² (CM)^{2n} e^{-(CM)²} evaluated directly
        let n_atoms = 20;
        let (c, n_m) = (0.5_f64, 16);
        let css = CollectiveState::css_x_polarized(n_atoms).unwrap();
        let spin = css.spin();
        let amps: Vec<Complex64> = spin
            .ms()
            .zip(css.amplitudes())
            .map(|(m, a)| a * (c * m).powi(n_m) * (-(c * m).powi(2) / 2.0).exp())
            .collect();
        let cat = CollectiveState::normalized(spin, amps).unwrap();
        let grid = husimi_q(&cat, 91, 1).unwrap();
        let column: Vec<f64> = grid.values.iter().map(|r| r[0]).collect();
        let (i_max, _) = column
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &q)| if q > acc.1 { (i, q) } else { acc },
            );
        let mirror = column.len() - 1 - i_max;
        assert_ne!(i_max, mirror);
        assert!((column[i_max] - column[mirror]).abs() < 1e-12);
        // and a dip on the equator between the two lobes
        assert!(column[45] < 0.5 * column[i_max]);
    }

    #[test]
    fn rejects_empty_grids() {
        let css = CollectiveState::css_x_polarized(2).unwrap();
        assert!(matches!(husimi_q(&css, 0, 4), Err(Error::EmptyGrid(_))));
        assert!(matches!(husimi_q(&css, 4, 0), Err(Error::EmptyGrid(_))));
    }
}
