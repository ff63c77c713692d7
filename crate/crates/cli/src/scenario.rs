//! Execution of validated scenarios and assembly of the run report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fwmspin::atom_dynamics::{
    dark_state_balance, dark_state_coherence, integrate_obe, perturbative_sigma23,
    steady_coherence, AtomState, AtomTrajectory, ObeOptions, PulseSet, SteadyCoherence,
};
use fwmspin::collective_spin::{
    husimi_q, moments, squeezing_parameters, CollectiveState, HusimiGrid, Spin, SpinMoments,
};
use fwmspin::constants::SPEED_OF_LIGHT;
use fwmspin::measurement::{
    cat_analysis, measure, sample_outcome, CatAnalysis, Posterior, RecordSummary,
};
use fwmspin::signal_field::{phase_match, CouplingParams, SHORT_PULSE_THRESHOLD};
use fwmspin::{Complex64, Warning};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{
    Config, CouplingSource, DarkStateSpec, MeasurementSpec, OutcomePolicy, Scenario, ScenarioKind,
    Units,
};
use crate::seed::point_seed;

/// Version of the `report.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Physics(#[from] fwmspin::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides `run.seed` when set.
    pub seed: Option<u64>,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_sha256: String,
    pub version: &'static str,
    /// Unix seconds at report assembly; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
}

/// Small-parameter ratios of the pulse set.
#[derive(Debug, Clone, Serialize)]
pub struct Ratios {
    pub chi1_over_delta: f64,
    pub chi2_over_delta: f64,
    pub chip_over_delta_p: f64,
    pub raman_over_delta: f64,
    pub raman_over_delta_p: f64,
}

impl Ratios {
    fn of(p: &PulseSet) -> Self {
        Ratios {
            chi1_over_delta: p.chi1.amplitude.norm() / p.detuning.abs(),
            chi2_over_delta: p.chi2.amplitude.norm() / p.detuning.abs(),
            chip_over_delta_p: p.chip.amplitude.norm() / p.probe_detuning.abs(),
            raman_over_delta: p.raman_detuning.abs() / p.detuning.abs(),
            raman_over_delta_p: p.raman_detuning.abs() / p.probe_detuning.abs(),
        }
    }
}

/// How `C` was obtained and the quantities derived on the way.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub source: &'static str,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub n_atoms_from_geometry: Option<usize>,
    pub omega_s: Option<f64>,
    pub k_s: Option<f64>,
    pub phase_mismatch_residual: Option<f64>,
    pub ct_over_l: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub ratios: Option<Ratios>,
    pub coupling: Option<CouplingReport>,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GroundReport {
    pub s11: f64,
    pub s22: f64,
    pub s12: [f64; 2],
}

impl GroundReport {
    fn of(s: &AtomState) -> Self {
        let s12 = s.get(1, 2);
        GroundReport {
            s11: s.population(1),
            s22: s.population(2),
            s12: [s12.re, s12.im],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sigma23Report {
    pub t: f64,
    pub integrator: [f64; 2],
    pub perturbative: [f64; 2],
    pub phase_matched: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct DarkStateReport {
    pub t_end: f64,
    pub dt: f64,
    pub samples: usize,
    pub max_step_error: f64,
    pub initial: GroundReport,
    pub last: GroundReport,
    /// Largest `|σ_ii(t) - σ_ii(0)|` over both ground levels.
    pub max_population_drift: f64,
    pub max_coherence_drift: f64,
    pub max_excited_population: f64,
    pub max_trace_error: f64,
    pub balance_residual: Option<f64>,
    /// `-(χ1/χ2)/2`.
    pub steady_coherence: Option<f64>,
    /// `-χ1χ2/(χ1² + χ2²)`.
    pub dark_state_coherence: Option<f64>,
    pub sigma23: Option<Sigma23Report>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub index: usize,
    pub seed: Option<u64>,
    pub n_atoms: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub eta: f64,
    pub n_m: Option<u64>,
    pub probability: Option<f64>,
    pub xi2_wineland: Option<f64>,
    pub xi2_kitagawa_ueda: Option<f64>,
    pub var_z: Option<f64>,
    pub var_perp_min: Option<f64>,
    pub mean_x: Option<f64>,
    pub mean_y: Option<f64>,
    pub mean_z: Option<f64>,
    pub purity: Option<f64>,
    pub cat: Option<CatAnalysis>,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior: Option<RecordSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub scenario: ScenarioKind,
    pub units: Units,
    pub label: Option<String>,
    pub derived: Derived,
    pub warnings: Vec<Warning>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_state: Option<DarkStateReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointReport>,
}

/// Everything `validate` prints, computed without running the scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub scenario: ScenarioKind,
    pub derived: Derived,
    pub warnings: Vec<Warning>,
    pub balance_residual: Option<f64>,
    pub steady_coherence: Option<f64>,
}

/// One sweep point before evaluation.
#[derive(Debug, Clone, Copy)]
struct Point {
    index: usize,
    n_atoms: usize,
    c: f64,
    eta: f64,
    n_m: u64,
    seed: Option<u64>,
}

struct Evaluated {
    report: PointReport,
    husimi: Option<HusimiGrid>,
}

fn real_amplitudes(p: &PulseSet) -> Option<[f64; 3]> {
    let a = [p.chi1.amplitude, p.chi2.amplitude, p.chip.amplitude];
    a.iter()
        .all(|c| c.im == 0.0)
        .then(|| [a[0].re, a[1].re, a[2].re])
}

fn coupling_report(
    spec: &MeasurementSpec,
    warnings: &mut Vec<Warning>,
) -> Result<CouplingReport, RunError> {
    Ok(match &spec.coupling {
        CouplingSource::Override(c) => CouplingReport {
            source: "override",
            c: Some(*c),
            n_atoms_from_geometry: None,
            omega_s: None,
            k_s: None,
            phase_mismatch_residual: None,
            ct_over_l: None,
        },
        CouplingSource::Swept => CouplingReport {
            source: "swept",
            c: None,
            n_atoms_from_geometry: None,
            omega_s: None,
            k_s: None,
            phase_mismatch_residual: None,
            ct_over_l: None,
        },
        CouplingSource::Physical {
            d23,
            geometry,
            samples,
        } => {
            let pulses = spec
                .pulses
                .as_ref()
                .expect("validated: physical coupling has pulses");
            let (n_atoms, rounding) = geometry.n_atoms()?;
            warnings.extend(rounding);
            let pm = phase_match(
                &pulses.k1,
                &pulses.k2,
                &pulses.kp,
                pulses.omega1,
                pulses.omega2,
                pulses.omega_p,
                geometry.length,
            )?;
            warnings.extend(pm.warning.clone());
            let k_s = pm.omega_s / SPEED_OF_LIGHT;
            let params =
                CouplingParams::from_pulses(pulses, geometry, *d23, pm.omega_s, k_s, *samples)?;
            let ct_over_l = SPEED_OF_LIGHT * pulses.duration() / geometry.length;
            if ct_over_l <= SHORT_PULSE_THRESHOLD {
                warnings.push(Warning::ShortPulse {
                    ct_over_l,
                    threshold: SHORT_PULSE_THRESHOLD,
                });
            }
            CouplingReport {
                source: "physical",
                c: Some(params.c),
                n_atoms_from_geometry: Some(n_atoms),
                omega_s: Some(pm.omega_s),
                k_s: Some(k_s),
                phase_mismatch_residual: Some(pm.residual),
                ct_over_l: Some(ct_over_l),
            }
        }
    })
}

fn points(spec: &MeasurementSpec, coupling: &CouplingReport, master: u64) -> Vec<Point> {
    let sweep = spec.sweep.clone().unwrap_or_default();
    let n_atoms = sweep.n_atoms.unwrap_or_else(|| {
        vec![spec
            .n_atoms
            .or(coupling.n_atoms_from_geometry)
            .expect("validated: atom number known")]
    });
    let cs = sweep
        .c
        .unwrap_or_else(|| vec![coupling.c.expect("validated: C known")]);
    let etas = sweep.eta.unwrap_or_else(|| vec![spec.eta]);
    let n_ms = sweep.n_m.unwrap_or_else(|| vec![spec.n_m]);
    let mut out = Vec::new();
    for &n in &n_atoms {
        for &c in &cs {
            for &eta in &etas {
                for &n_m in &n_ms {
                    let index = out.len();
                    let seed =
                        (spec.outcome == OutcomePolicy::Sampled).then(|| point_seed(master, index));
                    out.push(Point {
                        index,
                        n_atoms: n,
                        c,
                        eta,
                        n_m,
                        seed,
                    });
                }
            }
        }
    }
    out
}

fn evaluate(point: &Point, config: &Config) -> Evaluated {
    let mut report = PointReport {
        index: point.index,
        seed: point.seed,
        n_atoms: point.n_atoms,
        c: point.c,
        eta: point.eta,
        n_m: point.seed.is_none().then_some(point.n_m),
        probability: None,
        xi2_wineland: None,
        xi2_kitagawa_ueda: None,
        var_z: None,
        var_perp_min: None,
        mean_x: None,
        mean_y: None,
        mean_z: None,
        purity: None,
        cat: None,
        error: None,
        posterior: None,
    };
    let outcome =
        CollectiveState::css_x_polarized(point.n_atoms).and_then(|prior| match point.seed {
            Some(seed) => sample_outcome(&prior, point.c, point.eta, seed),
            None => measure(&prior, point.c, point.eta, point.n_m),
        });
    let record = match outcome {
        Ok(r) => r,
        Err(e) => {
            report.error = Some(e.to_string());
            return Evaluated {
                report,
                husimi: None,
            };
        }
    };
    report.n_m = Some(record.n_m);
    report.probability = Some(record.probability);
    let m: SpinMoments = match &record.posterior {
        Posterior::Pure(s) => moments(s),
        Posterior::Mixed(r) => {
            report.purity = Some(r.purity());
            moments(r)
        }
    };
    if let Ok(sq) = squeezing_parameters(&m) {
        report.xi2_wineland = Some(sq.wineland);
        report.xi2_kitagawa_ueda = Some(sq.kitagawa_ueda);
    }
    report.var_z = Some(m.var_z);
    report.var_perp_min = Some(m.var_perp_min);
    report.mean_x = Some(m.mean_x);
    report.mean_y = Some(m.mean_y);
    report.mean_z = Some(m.mean_z);
    if record.n_m > 0 {
        // lobe positions depend on the M distribution only
        let spin = Spin::from_atoms(point.n_atoms).expect("valid atom number");
        let amplitudes = record
            .posterior
            .probabilities()
            .into_iter()
            .map(|p| Complex64::new(p.max(0.0).sqrt(), 0.0))
            .collect();
        report.cat = CollectiveState::normalized(spin, amplitudes)
            .and_then(|s| cat_analysis(&s, record.n_m))
            .ok();
    }
    let husimi = match (&record.posterior, config.output.husimi) {
        (Posterior::Pure(s), true) => {
            let [n_theta, n_phi] = config.output.husimi_grid;
            husimi_q(s, n_theta, n_phi).ok()
        }
        _ => None,
    };
    if config.output.posteriors {
        report.posterior = Some(record.summary(config.output.full_matrix));
    }
    Evaluated { report, husimi }
}

fn dark_state_diagnostics(
    spec: &DarkStateSpec,
) -> (Option<f64>, Option<SteadyCoherence>, Option<f64>) {
    let Some([chi1, chi2, chip]) = real_amplitudes(&spec.pulses) else {
        return (None, None, None);
    };
    let p = &spec.pulses;
    let balance = spec.decay.and_then(|d| {
        dark_state_balance(
            chi1,
            chi2,
            chip,
            p.detuning,
            p.probe_detuning,
            d.gamma,
            d.gamma_prime,
        )
        .ok()
    });
    let steady = steady_coherence(chi1, chi2).ok();
    let dark = dark_state_coherence(chi1, chi2).ok();
    (balance, steady, dark)
}

fn run_dark_state(spec: &DarkStateSpec) -> Result<(DarkStateReport, AtomTrajectory), RunError> {
    let init = AtomState::from_ground(spec.init);
    let options = ObeOptions {
        stride: spec.stride,
        ..Default::default()
    };
    let traj = integrate_obe(
        &spec.pulses,
        &init,
        spec.decay.as_ref(),
        &options,
        spec.t_end,
        spec.dt,
    )?;
    let g0 = spec.init;
    let mut max_pop: f64 = 0.0;
    let mut max_coh: f64 = 0.0;
    let mut max_exc: f64 = 0.0;
    let mut max_trace: f64 = 0.0;
    for s in &traj.states {
        max_pop = max_pop
            .max((s.population(1) - g0.s11).abs())
            .max((s.population(2) - g0.s22).abs());
        max_coh = max_coh.max((s.get(1, 2) - g0.s12).norm());
        max_exc = max_exc.max(s.population(3) + s.population(4));
        max_trace = max_trace.max((s.trace() - 1.0).norm());
    }
    let (balance, steady, dark) = dark_state_diagnostics(spec);
    let sigma23 = if spec.pulses.raman_detuning != 0.0
        && spec.pulses.probe_detuning != 0.0
        && spec.pulses.detuning != 0.0
    {
        let t_mid = 0.5 * spec.t_end.min(spec.pulses.duration());
        let (t, state) = traj.nearest(t_mid);
        let pert = perturbative_sigma23(&spec.pulses, t, &[0.0; 3], &g0)?;
        let s23 = state.get(2, 3);
        Some(Sigma23Report {
            t,
            integrator: [s23.re, s23.im],
            perturbative: [pert.full.re, pert.full.im],
            phase_matched: [pert.phase_matched.re, pert.phase_matched.im],
        })
    } else {
        None
    };
    let report = DarkStateReport {
        t_end: spec.t_end,
        dt: spec.dt,
        samples: traj.states.len(),
        max_step_error: traj.max_step_error,
        initial: GroundReport::of(&init),
        last: GroundReport::of(traj.last()),
        max_population_drift: max_pop,
        max_coherence_drift: max_coh,
        max_excited_population: max_exc,
        max_trace_error: max_trace,
        balance_residual: balance,
        steady_coherence: steady.map(|s| s.value),
        dark_state_coherence: dark,
        sigma23,
    };
    Ok((report, traj))
}

/// Derived quantities and warnings, without running anything expensive.
pub fn diagnose(config: &Config) -> Result<Diagnostics, RunError> {
    let mut warnings = Vec::new();
    match &config.scenario {
        Scenario::DarkState(spec) => {
            warnings.extend(spec.pulses.validity_warnings());
            let (balance, steady, _) = dark_state_diagnostics(spec);
            warnings.extend(steady.as_ref().and_then(|s| s.warning.clone()));
            Ok(Diagnostics {
                scenario: ScenarioKind::DarkState,
                derived: Derived {
                    ratios: Some(Ratios::of(&spec.pulses)),
                    coupling: None,
                    points: 1,
                },
                warnings,
                balance_residual: balance,
                steady_coherence: steady.map(|s| s.value),
            })
        }
        Scenario::Measurement(spec) => {
            if let Some(p) = &spec.pulses {
                warnings.extend(p.validity_warnings());
            }
            let coupling = coupling_report(spec, &mut warnings)?;
            let n = points(spec, &coupling, config.seed).len();
            Ok(Diagnostics {
                scenario: ScenarioKind::Measurement,
                derived: Derived {
                    ratios: spec.pulses.as_ref().map(Ratios::of),
                    coupling: Some(coupling),
                    points: n,
                },
                warnings,
                balance_residual: None,
                steady_coherence: None,
            })
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| RunError::Io {
            path: path.to_owned(),
            source,
        })
}

/// First line of every CSV file written by a run.
fn csv_header(config: &Config, seed: u64) -> String {
    format!(
        "# fwmspin {} config_sha256={} seed={}\n",
        env!("CARGO_PKG_VERSION"),
        config.sha256,
        seed
    )
}

fn write_csv_file(
    path: &Path,
    header: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>,
) -> Result<(), RunError> {
    let mut file = create(path)?;
    let io = |source| RunError::Io {
        path: path.to_owned(),
        source,
    };
    file.write_all(header.as_bytes()).map_err(io)?;
    body(&mut file).map_err(|source| RunError::Csv {
        path: path.to_owned(),
        source,
    })?;
    file.flush().map_err(io)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_sweep_csv(path: &Path, header: &str, points: &[PointReport]) -> Result<(), RunError> {
    write_csv_file(path, header, |file| {
        let mut w = csv::Writer::from_writer(file);
        w.write_record([
            "index",
            "seed",
            "n_atoms",
            "C",
            "eta",
            "n_m",
            "probability",
            "xi2_wineland",
            "xi2_kitagawa_ueda",
            "var_z",
            "var_perp_min",
            "mean_x",
            "mean_y",
            "mean_z",
            "purity",
            "peak_plus",
            "peak_minus",
            "separation",
            "overlap",
            "unimodal",
            "error",
        ])?;
        for p in points {
            w.write_record([
                p.index.to_string(),
                p.seed.map(|s| s.to_string()).unwrap_or_default(),
                p.n_atoms.to_string(),
                p.c.to_string(),
                p.eta.to_string(),
                p.n_m.map(|n| n.to_string()).unwrap_or_default(),
                opt(p.probability),
                opt(p.xi2_wineland),
                opt(p.xi2_kitagawa_ueda),
                opt(p.var_z),
                opt(p.var_perp_min),
                opt(p.mean_x),
                opt(p.mean_y),
                opt(p.mean_z),
                opt(p.purity),
                opt(p.cat.as_ref().map(|c| c.peak_plus)),
                opt(p.cat.as_ref().map(|c| c.peak_minus)),
                opt(p.cat.as_ref().map(|c| c.separation)),
                opt(p.cat.as_ref().map(|c| c.overlap)),
                p.cat
                    .as_ref()
                    .map(|c| c.unimodal.to_string())
                    .unwrap_or_default(),
                p.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

/// Executes the scenario, writes `report.json` and the CSV tables into
/// `options.out_dir`, and returns the report.
pub fn run(config: &Config, options: &RunOptions) -> Result<RunReport, RunError> {
    let seed = options.seed.unwrap_or(config.seed);
    std::fs::create_dir_all(&options.out_dir).map_err(|source| RunError::Io {
        path: options.out_dir.clone(),
        source,
    })?;
    let header = csv_header(config, seed);
    let diagnostics = diagnose(config)?;
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance {
            seed,
            config_sha256: config.sha256.clone(),
            version: env!("CARGO_PKG_VERSION"),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
        scenario: diagnostics.scenario,
        units: config.units,
        label: config.label.clone(),
        derived: diagnostics.derived,
        warnings: diagnostics.warnings,
        dark_state: None,
        points: Vec::new(),
    };
    match &config.scenario {
        Scenario::DarkState(spec) => {
            let (dark, traj) = run_dark_state(spec)?;
            let path = options.out_dir.join("trajectory_0.csv");
            write_csv_file(&path, &header, |f| traj.write_csv(f))?;
            report.dark_state = Some(dark);
        }
        Scenario::Measurement(spec) => {
            let coupling = report
                .derived
                .coupling
                .clone()
                .expect("measurement has coupling");
            let grid = points(spec, &coupling, seed);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(options.threads.unwrap_or(0))
                .build()
                .map_err(|e| RunError::Pool(e.to_string()))?;
            // collect preserves sweep order whatever the scheduling
            let evaluated: Vec<Evaluated> =
                pool.install(|| grid.par_iter().map(|p| evaluate(p, config)).collect());
            for e in &evaluated {
                if let Some(h) = &e.husimi {
                    let path = options
                        .out_dir
                        .join(format!("husimi_{}.csv", e.report.index));
                    write_csv_file(&path, &header, |f| h.write_csv(f))?;
                }
            }
            report.points = evaluated.into_iter().map(|e| e.report).collect();
            write_sweep_csv(&options.out_dir.join("sweep.csv"), &header, &report.points)?;
        }
    }
    let path = options.out_dir.join("report.json");
    let mut file = create(&path)?;
    let io = |source| RunError::Io {
        path: path.clone(),
        source,
    };
    serde_json::to_writer_pretty(&mut file, &report).map_err(|e| io(std::io::Error::other(e)))?;
    file.write_all(b"\n").map_err(io)?;
    file.flush().map_err(io)?;
    Ok(report)
}
