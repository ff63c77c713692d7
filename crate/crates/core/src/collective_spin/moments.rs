use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use super::{CollectiveState, MixedCollectiveState, Spin};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this fraction of `S` the mean spin is treated as zero.
const ZERO_MEAN_FRACTION: f64 = 1e-9;

/// First and second moments of the collective spin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinMoments {
    pub spin: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    /// `⟨S_z²⟩`.
    pub mean_sz_sq: f64,
    pub var_z: f64,
    /// Smallest variance over directions orthogonal to the mean spin, or over
    /// all directions when `zero_mean` is set.
    pub var_perp_min: f64,
    /// Symmetrized covariance `½⟨{S_i, S_j}⟩ - ⟨S_i⟩⟨S_j⟩`.
    pub covariance: [[f64; 3]; 3],
    pub zero_mean: bool,
}

impl SpinMoments {
    pub fn mean(&self) -> Vector3<f64> {
        Vector3::new(self.mean_x, self.mean_y, self.mean_z)
    }

    pub fn mean_length(&self) -> f64 {
        self.mean().norm()
    }
}

/// Wineland and Kitagawa–Ueda squeezing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Squeezing {
    /// `2S · var_perp_min / |⟨S⟩|²`.
    pub wineland: f64,
    /// `var_perp_min / (S/2)`.
    pub kitagawa_ueda: f64,
}

/// States whose spin moments can be evaluated.
pub trait SpinExpectation {
    fn spin(&self) -> Spin;
    /// `(⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩)`.
    fn first_moments(&self) -> [f64; 3];
    /// `½⟨{S_i, S_j}⟩`.
    fn second_moments(&self) -> [[f64; 3]; 3];
}

/// One of `S_x`, `S_y`, `S_z` as a tridiagonal matrix in the Dicke basis.
struct Tridiagonal {
    /// Entry `(k+1, k)`.
    sub: Vec<Complex64>,
    diag: Vec<Complex64>,
    /// Entry `(k, k+1)`.
    sup: Vec<Complex64>,
}

impl Tridiagonal {
    fn axis(spin: Spin, axis: usize) -> Self {
        let n = spin.dim();
        let ladder: Vec<f64> = (0..n - 1).map(|k| spin.raising(k)).collect();
        let zero = Complex64::new(0.0, 0.0);
        match axis {
            0 => Tridiagonal {
                sub: ladder
                    .iter()
                    .map(|&l| Complex64::new(0.5 * l, 0.0))
                    .collect(),
                diag: vec![zero; n],
                sup: ladder
                    .iter()
                    .map(|&l| Complex64::new(0.5 * l, 0.0))
                    .collect(),
            },
            1 => Tridiagonal {
                sub: ladder.iter().map(|&l| -I * 0.5 * l).collect(),
                diag: vec![zero; n],
                sup: ladder.iter().map(|&l| I * 0.5 * l).collect(),
            },
            _ => Tridiagonal {
                sub: vec![zero; n - 1],
                diag: spin.ms().map(|m| Complex64::new(m, 0.0)).collect(),
                sup: vec![zero; n - 1],
            },
        }
    }

    fn get(&self, row: usize, col: usize) -> Complex64 {
        if row == col {
            self.diag[row]
        } else if row == col + 1 {
            self.sub[col]
        } else if col == row + 1 {
            self.sup[row]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let mut y = self.diag[k] * x[k];
                if k + 1 < n {
                    y += self.sup[k] * x[k + 1];
                }
                if k > 0 {
                    y += self.sub[k - 1] * x[k - 1];
                }
                y
            })
            .collect()
    }
}

fn axes(spin: Spin) -> [Tridiagonal; 3] {
    [
        Tridiagonal::axis(spin, 0),
        Tridiagonal::axis(spin, 1),
        Tridiagonal::axis(spin, 2),
    ]
}

/// `Σ_M M p_M` summed over mirror pairs, so that a distribution symmetric
/// under `M → -M` gives exactly zero.
fn parity_exact_mean(spin: Spin, p: impl Fn(usize) -> f64) -> f64 {
    let n = spin.dim();
    (0..n / 2).map(|k| spin.m(k) * (p(k) - p(n - 1 - k))).sum()
}

impl SpinExpectation for CollectiveState {
    fn spin(&self) -> Spin {
        self.spin
    }

    fn first_moments(&self) -> [f64; 3] {
        let ops = axes(self.spin);
        let psi = self.amplitudes();
        let mut out = [0.0; 3];
        for (axis, op) in ops.iter().enumerate().take(2) {
            out[axis] = dot(psi, &op.apply(psi)).re;
        }
        out[2] = parity_exact_mean(self.spin, |k| psi[k].norm_sqr());
        out
    }

    fn second_moments(&self) -> [[f64; 3]; 3] {
        let psi = self.amplitudes();
        let v: Vec<Vec<Complex64>> = axes(self.spin).iter().map(|op| op.apply(psi)).collect();
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                g[i][j] = dot(&v[i], &v[j]).re;
                g[j][i] = g[i][j];
            }
        }
        g
    }
}

impl SpinExpectation for MixedCollectiveState {
    fn spin(&self) -> Spin {
        MixedCollectiveState::spin(self)
    }

    fn first_moments(&self) -> [f64; 3] {
        let spin = MixedCollectiveState::spin(self);
        let rho = self.rho();
        let n = spin.dim();
        let ops = axes(spin);
        let mut out = [0.0; 3];
        for (axis, op) in ops.iter().enumerate().take(2) {
            // tr(ρ S) = Σ_ab ρ_ab S_ba over the three bands of S
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..n {
                for b in a.saturating_sub(1)..(a + 2).min(n) {
                    acc += rho[(a, b)] * op.get(b, a);
                }
            }
            out[axis] = acc.re;
        }
        out[2] = parity_exact_mean(spin, |k| rho[(k, k)].re);
        out
    }

    fn second_moments(&self) -> [[f64; 3]; 3] {
        let spin = MixedCollectiveState::spin(self);
        let rho = self.rho();
        let n = spin.dim();
        let ops = axes(spin);
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            // W = ρ S_i, then tr(W S_j) = Σ_ab W_ab (S_j)_ba.
            let mut w = vec![Complex64::new(0.0, 0.0); n * n];
            for a in 0..n {
                for b in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in b.saturating_sub(1)..(b + 2).min(n) {
                        acc += rho[(a, c)] * ops[i].get(c, b);
                    }
                    w[a * n + b] = acc;
                }
            }
            for j in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..n {
                    for b in a.saturating_sub(1)..(a + 2).min(n) {
                        acc += w[a * n + b] * ops[j].get(b, a);
                    }
                }
                // symmetrize: ½(tr ρS_iS_j + tr ρS_jS_i) = Re tr ρS_iS_j for Hermitian ρ
                g[i][j] += 0.5 * acc.re;
                g[j][i] += 0.5 * acc.re;
            }
        }
        g
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Means, `⟨S_z²⟩`, `var(S_z)` and the minimal transverse variance.
pub fn moments<T: SpinExpectation + ?Sized>(state: &T) -> SpinMoments {
    let spin = state.spin();
    let s = spin.value();
    let mean = state.first_moments();
    let second = state.second_moments();

    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            covariance[i][j] = second[i][j] - mean[i] * mean[j];
        }
    }
    let cov = Matrix3::from_fn(|i, j| covariance[i][j]);
    let m = Vector3::from(mean);
    let length = m.norm();
    let zero_mean = length <= ZERO_MEAN_FRACTION * s;

    let var_perp_min = if zero_mean {
        SymmetricEigen::new(cov).eigenvalues.min()
    } else {
        let n = m / length;
        // any vector not parallel to n seeds the orthonormal pair
        let seed = if n.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let e1 = (seed - n * n.dot(&seed)).normalize();
        let e2 = n.cross(&e1);
        let p = e1.dot(&(cov * e1));
        let q = e2.dot(&(cov * e2));
        let r = e1.dot(&(cov * e2));
        0.5 * (p + q) - (0.25 * (p - q).powi(2) + r * r).sqrt()
    };

    SpinMoments {
        spin: s,
        mean_x: mean[0],
        mean_y: mean[1],
        mean_z: mean[2],
        mean_sz_sq: second[2][2],
        var_z: (second[2][2] - mean[2] * mean[2]).max(0.0),
        var_perp_min: var_perp_min.max(0.0),
        covariance,
        zero_mean,
    }
}

/// Both squeezing parameters. Fails when the mean spin vanishes, since the
/// Wineland parameter divides by `|⟨S⟩|²`.
pub fn squeezing_parameters(moments: &SpinMoments) -> Result<Squeezing> {
    if moments.zero_mean {
        return Err(Error::ZeroMeanSpin(format!(
            "|<S>| = {:e} for S = {}",
            moments.mean_length(),
            moments.spin
        )));
    }
    let s = moments.spin;
    let length_sq = moments.mean().norm_squared();
    Ok(Squeezing {
        wineland: 2.0 * s * moments.var_perp_min / length_sq,
        kitagawa_ueda: moments.var_perp_min / (0.5 * s),
    })
}
