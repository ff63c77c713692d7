use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{CollectiveState, Spin, NORM_TOLERANCE};
use crate::{Error, Result};

/// Largest tolerated negative eigenvalue of a density matrix.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Density matrix in the `|S, M⟩` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedCollectiveState {
    spin: Spin,
    rho: DMatrix<Complex64>,
}

impl MixedCollectiveState {
    /// Validates trace, hermiticity and positivity.
    pub fn new(spin: Spin, rho: DMatrix<Complex64>) -> Result<Self> {
        let n = spin.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: rho.nrows(),
            });
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > NORM_TOLERANCE || trace.im.abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(trace.norm()));
        }
        let state = MixedCollectiveState { spin, rho };
        let herm = state.hermiticity_error();
        if herm > NORM_TOLERANCE {
            return Err(Error::invalid(
                "rho",
                format!("not Hermitian (max deviation {herm:e})"),
            ));
        }
        let min_eig = state.min_eigenvalue();
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::invalid(
                "rho",
                format!("negative eigenvalue {min_eig:e}"),
            ));
        }
        Ok(state)
    }

    /// Divides by the trace and symmetrizes away rounding-level
    /// anti-Hermitian parts before validating.
    pub fn normalized(spin: Spin, rho: DMatrix<Complex64>) -> Result<Self> {
        let trace = rho.trace().re;
        if !(trace > 0.0) || !trace.is_finite() {
            return Err(Error::NotNormalized(trace));
        }
        let rho = (&rho + rho.adjoint()).unscale(2.0 * trace);
        Self::new(spin, rho)
    }

    pub fn from_pure(state: &CollectiveState) -> Self {
        let psi = nalgebra::DVector::from_column_slice(state.amplitudes());
        MixedCollectiveState {
            spin: state.spin(),
            rho: &psi * psi.adjoint(),
        }
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    /// Populations `ρ_MM`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.spin.dim()).map(|k| self.rho[(k, k)].re).collect()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.rho.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.spin.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation from `|ψ⟩⟨ψ|`.
    pub fn distance_to_pure(&self, state: &CollectiveState) -> f64 {
        let other = Self::from_pure(state);
        (&self.rho - &other.rho)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_projector_is_valid() {
        let css = CollectiveState::css_x_polarized(4).unwrap();
        let rho = MixedCollectiveState::from_pure(&css);
        let checked = MixedCollectiveState::new(rho.spin(), rho.rho().clone()).unwrap();
        assert!((checked.purity() - 1.0).abs() < 1e-12);
        assert!(checked.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn rejects_non_unit_trace_and_negative_eigenvalues() {
        let spin = Spin::from_atoms(1).unwrap();
        let half = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.5, 0.0))
            * Complex64::new(2.0, 0.0);
        assert!(matches!(
            MixedCollectiveState::new(spin, half),
            Err(Error::NotNormalized(_))
        ));

        let bad = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.2, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-0.2, 0.0),
            ],
        );
        assert!(MixedCollectiveState::new(spin, bad).is_err());
    }

    #[test]
    fn maximally_mixed_purity() {
        let spin = Spin::from_atoms(3).unwrap();
        let rho = DMatrix::from_diagonal_element(4, 4, Complex64::new(0.25, 0.0));
        let state = MixedCollectiveState::new(spin, rho).unwrap();
        assert!((state.purity() - 0.25).abs() < 1e-15);
    }
}
