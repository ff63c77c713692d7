//! `oracle` subcommand: brute-force reference outputs at small sizes.

use fwmspin::collective_spin::{CollectiveState, Spin};
use fwmspin::constants::SPEED_OF_LIGHT;
use fwmspin::oracle::{
    css_factorial_table, fock_evolve, propagate_uniform, CssRow, MAX_FOCK_CUTOFF, MAX_ORACLE_SPIN,
};
use fwmspin::signal_field::{propagate_numeric, Geometry, PropagationGrid, DEFAULT_SLICES};
use fwmspin::{Complex64, Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FockOutput {
    pub spin: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub cutoff: usize,
    pub norm: f64,
    pub photon_probabilities: Vec<f64>,
    /// `[M, n, re, im]` for every Dicke component and photon number.
    pub amplitudes: Vec<[f64; 4]>,
}

/// `exp[-iC(c† + c)S_z]` applied to the x-polarized coherent spin state and
/// the photon vacuum.
pub fn fock(spin: f64, c: f64, cutoff: usize) -> Result<FockOutput> {
    if !(spin > 0.0) || (2.0 * spin).fract() != 0.0 {
        return Err(Error::InvalidParameter {
            name: "spin",
            reason: format!("must be a positive half-integer, got {spin}"),
        });
    }
    if spin > MAX_ORACLE_SPIN {
        return Err(Error::SizeLimit(format!(
            "S = {spin} exceeds {MAX_ORACLE_SPIN}"
        )));
    }
    if cutoff > MAX_FOCK_CUTOFF {
        return Err(Error::SizeLimit(format!(
            "cutoff {cutoff} exceeds {MAX_FOCK_CUTOFF}"
        )));
    }
    let n_atoms = (2.0 * spin) as usize;
    let s = Spin::from_atoms(n_atoms)?;
    let prior = CollectiveState::css_x_polarized(n_atoms)?;
    let evo = fock_evolve(prior.amplitudes(), s, c, cutoff)?;
    let mut amplitudes = Vec::with_capacity(s.dim() * cutoff);
    for k in 0..s.dim() {
        for n in 0..cutoff {
            let a = evo.amplitude(k, n);
            amplitudes.push([s.m(k), n as f64, a.re, a.im]);
        }
    }
    Ok(FockOutput {
        spin,
        c,
        cutoff,
        norm: evo.joint.norm(),
        photon_probabilities: (0..cutoff).map(|n| evo.photon_probability(n)).collect(),
        amplitudes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CssOutput {
    pub n_atoms: usize,
    pub spin: f64,
    pub rows: Vec<CssRow>,
}

pub fn css(n_atoms: usize) -> Result<CssOutput> {
    let rows = css_factorial_table(n_atoms)?
        .into_iter()
        .map(|(m, amplitude)| CssRow { m, amplitude })
        .collect();
    Ok(CssOutput {
        n_atoms,
        spin: n_atoms as f64 / 2.0,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagateRow {
    pub t: f64,
    pub closed_form: [f64; 2],
    pub numeric: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagateOutput {
    pub d: f64,
    pub k: [f64; 2],
    pub area: f64,
    pub length: f64,
    pub density: f64,
    pub ct_over_l: f64,
    pub rows: Vec<PropagateRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagateArgs {
    pub d: f64,
    pub k: Complex64,
    pub area: f64,
    pub length: f64,
    pub density: f64,
    pub ct_over_l: f64,
    pub samples: usize,
}

/// Uniform medium `D(z) = d`, constant `K`, no input field: the exact exit
/// field next to the characteristic-line integration.
pub fn propagate(args: &PropagateArgs) -> Result<PropagateOutput> {
    let geometry = Geometry::new(args.area, args.length, args.density)?;
    if args.samples < 2 {
        return Err(Error::EmptyGrid("propagate needs at least two samples"));
    }
    if !(args.ct_over_l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "ct_over_l",
            reason: "must be positive".to_owned(),
        });
    }
    let duration = args.ct_over_l * args.length / SPEED_OF_LIGHT;
    let times: Vec<f64> = (0..args.samples)
        .map(|i| duration * i as f64 / (args.samples - 1) as f64)
        .collect();
    let zero = |_: f64| Complex64::new(0.0, 0.0);
    let k = args.k;
    let numeric = propagate_numeric(
        &|_| args.d,
        &zero,
        &|_| k,
        &geometry,
        &PropagationGrid {
            slices: DEFAULT_SLICES,
            times: times.clone(),
            pulse_duration: duration,
        },
    )?;
    let rows = times
        .iter()
        .zip(&numeric.field)
        .map(|(&t, e)| {
            let exact = propagate_uniform(args.d, k, &zero, &geometry, t);
            PropagateRow {
                t,
                closed_form: [exact.re, exact.im],
                numeric: [e.re, e.im],
            }
        })
        .collect();
    Ok(PropagateOutput {
        d: args.d,
        k: [k.re, k.im],
        area: args.area,
        length: args.length,
        density: args.density,
        ct_over_l: args.ct_over_l,
        rows,
    })
}
