//! Brute-force reference computations for small sizes.
//!
//! Each routine reaches its answer by a route that shares no code with the
//! production path: factorials instead of log-gamma, dense matrix
//! exponentials in a truncated Fock space instead of Poisson weights, a
//! two-mode beam splitter instead of the closed-form lossy update, and the
//! exact characteristic integral for a uniform medium.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::collective_spin::Spin;
use crate::constants::SPEED_OF_LIGHT;
use crate::signal_field::Geometry;
use crate::{Error, Result};

/// Largest spin the oracles accept.
pub const MAX_ORACLE_SPIN: f64 = 4.0;

/// Largest Fock cutoff (number of photon levels) the oracles accept.
pub const MAX_FOCK_CUTOFF: usize = 64;

/// Largest per-mode cutoff for the two-mode beam splitter.
pub const MAX_BEAM_SPLITTER_CUTOFF: usize = 30;

fn check_spin(spin: Spin) -> Result<()> {
    if spin.value() > MAX_ORACLE_SPIN {
        return Err(Error::SizeLimit(format!(
            "S = {} exceeds the oracle limit {MAX_ORACLE_SPIN}",
            spin.value()
        )));
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `A(S, M) = 2^{-S} sqrt((2S)! / ((S+M)! (S-M)!))` straight from factorials.
pub fn css_factorial_table(n_atoms: usize) -> Result<Vec<(f64, f64)>> {
    let spin = Spin::from_atoms(n_atoms)?;
    check_spin(spin)?;
    Ok((0..=n_atoms)
        .map(|k| {
            let a = (factorial(n_atoms) / (factorial(k) * factorial(n_atoms - k))).sqrt()
                / 2f64.powf(n_atoms as f64 / 2.0);
            (spin.m(k), a)
        })
        .collect())
}

/// Quadrature `a† + a` truncated to `cutoff` levels.
fn quadrature(cutoff: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(cutoff, cutoff, |i, j| {
        if i == j + 1 {
            Complex64::new((i as f64).sqrt(), 0.0)
        } else if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Joint atoms ⊗ photons state `exp[-iC(c† + c)S_z] |prior⟩|0⟩` in a Fock
/// space of `cutoff` levels, by exponentiating the full Kronecker-product
/// generator.
///
/// This is the unitary that displaces the signal to `α_M = -iCM`. Written
/// with `c† - c` and the prefactor `-i`, the exponent would be Hermitian
/// rather than anti-Hermitian and the operator would not be unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct FockEvolution {
    pub spin: Spin,
    pub cutoff: usize,
    /// Index `k * cutoff + n` for Dicke index `k` and photon number `n`.
    pub joint: DVector<Complex64>,
}

impl FockEvolution {
    pub fn amplitude(&self, k: usize, n: usize) -> Complex64 {
        self.joint[k * self.cutoff + n]
    }

    /// `P(n) = Σ_M |⟨M, n|ψ⟩|²`.
    pub fn photon_probability(&self, n: usize) -> f64 {
        (0..self.spin.dim())
            .map(|k| self.amplitude(k, n).norm_sqr())
            .sum()
    }

    /// Normalized atomic state after projecting the field on `|n⟩`.
    pub fn conditional(&self, n: usize) -> Option<Vec<Complex64>> {
        let p = self.photon_probability(n);
        (p > 0.0).then(|| {
            (0..self.spin.dim())
                .map(|k| self.amplitude(k, n) / p.sqrt())
                .collect()
        })
    }
}

pub fn fock_evolve(
    prior: &[Complex64],
    spin: Spin,
    c: f64,
    cutoff: usize,
) -> Result<FockEvolution> {
    check_spin(spin)?;
    if cutoff == 0 || cutoff > MAX_FOCK_CUTOFF {
        return Err(Error::SizeLimit(format!(
            "Fock cutoff {cutoff} outside 1..={MAX_FOCK_CUTOFF}"
        )));
    }
    if prior.len() != spin.dim() {
        return Err(Error::Dimension {
            expected: spin.dim(),
            got: prior.len(),
        });
    }
    let sz = DMatrix::from_fn(spin.dim(), spin.dim(), |i, j| {
        Complex64::new(if i == j { spin.m(i) } else { 0.0 }, 0.0)
    });
    let generator = sz.kronecker(&quadrature(cutoff)) * Complex64::new(0.0, -c);
    let u = generator.exp();
    let mut initial = DVector::zeros(spin.dim() * cutoff);
    for (k, a) in prior.iter().enumerate() {
        initial[k * cutoff] = *a;
    }
    Ok(FockEvolution {
        spin,
        cutoff,
        joint: u * initial,
    })
}

/// Conditional density matrices after lossy counting, from an explicit
/// two-mode beam splitter.
///
/// For each Dicke component the signal is displaced from vacuum (matrix
/// exponential in a single-mode space of [`MAX_FOCK_CUTOFF`] levels, then
/// truncated to `cutoff + 1` levels), mixed with a vacuum loss port by
/// `exp[θ(a†b - ab†)]` with `cos θ = √η` on the `(cutoff + 1)²` two-mode
/// space, projected on `n` transmitted photons, and the loss port is traced
/// out. The beam-splitter unitary is built once per efficiency.
pub struct BeamSplitterOracle {
    levels: usize,
    unitary: DMatrix<Complex64>,
}

impl BeamSplitterOracle {
    pub fn new(eta: f64, cutoff: usize) -> Result<Self> {
        if cutoff > MAX_BEAM_SPLITTER_CUTOFF {
            return Err(Error::SizeLimit(format!(
                "beam-splitter cutoff {cutoff} exceeds {MAX_BEAM_SPLITTER_CUTOFF}"
            )));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid("eta", "must lie in (0, 1]"));
        }
        let levels = cutoff + 1;
        let theta = eta.sqrt().acos();
        // a†b moves one photon from b to a; -ab† the reverse
        let element = |(a_r, b_r): (usize, usize), (a_c, b_c): (usize, usize)| {
            let mut v = 0.0;
            if a_r == a_c + 1 && b_c == b_r + 1 {
                v += (a_r as f64).sqrt() * (b_c as f64).sqrt();
            }
            if a_c == a_r + 1 && b_r == b_c + 1 {
                v -= (a_c as f64).sqrt() * (b_r as f64).sqrt();
            }
            Complex64::new(theta * v, 0.0)
        };
        // The generator conserves a + b, so it is exponentiated one
        // total-photon block at a time.
        let mut unitary = DMatrix::zeros(levels * levels, levels * levels);
        for total in 0..2 * levels - 1 {
            let states: Vec<(usize, usize)> = (0..levels)
                .filter(|&a| total >= a && total - a < levels)
                .map(|a| (a, total - a))
                .collect();
            let block = DMatrix::from_fn(states.len(), states.len(), |i, j| {
                element(states[i], states[j])
            })
            .exp();
            for (i, &(a_r, b_r)) in states.iter().enumerate() {
                for (j, &(a_c, b_c)) in states.iter().enumerate() {
                    unitary[(a_r * levels + b_r, a_c * levels + b_c)] = block[(i, j)];
                }
            }
        }
        Ok(BeamSplitterOracle { levels, unitary })
    }

    pub fn collapse(
        &self,
        prior: &[Complex64],
        spin: Spin,
        c: f64,
        n: usize,
    ) -> Result<DMatrix<Complex64>> {
        check_spin(spin)?;
        let levels = self.levels;
        if n >= levels {
            return Err(Error::SizeLimit(format!(
                "n = {n} beyond the cutoff {}",
                levels - 1
            )));
        }
        if prior.len() != spin.dim() {
            return Err(Error::Dimension {
                expected: spin.dim(),
                got: prior.len(),
            });
        }
        let generator = quadrature(MAX_FOCK_CUTOFF);
        let dim = spin.dim();
        let conditioned: Vec<DVector<Complex64>> = (0..dim)
            .map(|k| {
                let mut vacuum = DVector::zeros(MAX_FOCK_CUTOFF);
                vacuum[0] = Complex64::new(1.0, 0.0);
                let signal = (&generator * Complex64::new(0.0, -c * spin.m(k))).exp() * vacuum;
                let mut two_mode = DVector::zeros(levels * levels);
                for a in 0..levels {
                    two_mode[a * levels] = signal[a];
                }
                let out = &self.unitary * two_mode;
                DVector::from_fn(levels, |b, _| out[n * levels + b] * prior[k])
            })
            .collect();

        let rho = DMatrix::from_fn(dim, dim, |i, j| conditioned[j].dotc(&conditioned[i]));
        let trace = rho.trace().re;
        if !(trace > 0.0) {
            return Err(Error::ZeroProbability(n as u64));
        }
        Ok(rho.unscale(trace))
    }
}

/// Exit field for a uniform medium `D(z) = d`, constant `K` and input
/// `E_in`: `E(L, t) = E_in(t - L/c) θ(t - L/c) - i n_a K d min(ct, L)`.
pub fn propagate_uniform(
    d: f64,
    k: Complex64,
    e_in: &dyn Fn(f64) -> Complex64,
    geometry: &Geometry,
    t: f64,
) -> Complex64 {
    let transit = geometry.length / SPEED_OF_LIGHT;
    let carried = if t >= transit {
        e_in(t - transit)
    } else {
        Complex64::new(0.0, 0.0)
    };
    let path = (SPEED_OF_LIGHT * t.max(0.0)).min(geometry.length);
    carried - Complex64::i() * geometry.density * k * d * path
}

/// Row of the `css` oracle output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CssRow {
    pub m: f64,
    pub amplitude: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_table_for_four_atoms() {
        let t = css_factorial_table(4).unwrap();
        let expected = [0.25, 0.5, 6f64.sqrt() / 4.0, 0.5, 0.25];
        for ((m, a), (k, e)) in t.iter().zip(expected.iter().enumerate()) {
            assert_eq!(*m, k as f64 - 2.0);
            assert!((a - e).abs() < 1e-15);
        }
        assert!(matches!(css_factorial_table(9), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn fock_evolution_is_unitary_and_coherent() {
        let spin = Spin::from_atoms(2).unwrap();
        let prior = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5f64.sqrt(), 0.0),
            Complex64::new(0.5, 0.0),
        ];
        let ev = fock_evolve(&prior, spin, 1.0, 40).unwrap();
        assert!((ev.joint.norm() - 1.0).abs() < 1e-12);
        // M = 1 component is |α = -i⟩ scaled by its prior amplitude
        for n in 0..6 {
            let coherent =
                (-0.5f64).exp() * Complex64::new(0.0, -1.0).powu(n as u32) / factorial(n).sqrt();
            assert!((ev.amplitude(2, n) - coherent * 0.5).norm() < 1e-12);
        }
        assert!(fock_evolve(&prior, spin, 1.0, 65).is_err());
    }

    #[test]
    fn beam_splitter_at_unit_efficiency_is_a_pure_projection() {
        let spin = Spin::from_atoms(2).unwrap();
        let prior = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5f64.sqrt(), 0.0),
            Complex64::new(0.5, 0.0),
        ];
        let rho = BeamSplitterOracle::new(1.0, 20)
            .unwrap()
            .collapse(&prior, spin, 1.0, 1)
            .unwrap();
        // n = 1 removes M = 0 and leaves equal weight on M = ±1
        assert!(rho[(1, 1)].norm() < 1e-14);
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_propagation_transient_and_filled() {
        let g = Geometry::new(1e-8, 0.03, 1e15).unwrap();
        let k = Complex64::new(1.0, 0.5);
        let transit = g.length / SPEED_OF_LIGHT;
        let half = propagate_uniform(0.2, k, &|_| Complex64::new(1.0, 0.0), &g, 0.5 * transit);
        assert!(
            (half - (-Complex64::i() * g.density * k * 0.2 * 0.5 * g.length)).norm()
                < 1e-9 * half.norm()
        );
        let full = propagate_uniform(0.2, k, &|_| Complex64::new(1.0, 0.0), &g, 3.0 * transit);
        assert!(
            (full - Complex64::new(1.0, 0.0) + Complex64::i() * g.density * k * 0.2 * g.length)
                .norm()
                < 1e-9 * full.norm()
        );
    }
}
