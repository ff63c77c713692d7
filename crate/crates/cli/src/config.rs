//! Scenario files: one TOML document with a flat table per module.
//!
//! Parse errors carry the line reported by the TOML parser; semantic errors
//! are pinned to the line of the offending key when it can be found in the
//! source text.

use std::fmt;
use std::path::Path;

use fwmspin::atom_dynamics::{DecayModel, Envelope, GroundState, PulseSet, Shape, Vec3};
use fwmspin::signal_field::Geometry;
use fwmspin::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Validation failure pointing at a key of the scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}: {}", self.path, line, self.key, self.message),
            None => write!(f, "{}: {}: {}", self.path, self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    DarkState,
    Measurement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Rates in rad/s, times in s, lengths in m.
    #[default]
    Si,
    /// Rates in units of `Δ`, times in units of `1/Δ`; `C` given directly.
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomePolicy {
    #[default]
    Fixed,
    Sampled,
}

/// A Rabi amplitude: a real number, `[re, im]`, or (for `chi2` only) the
/// string `"balanced"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
    Keyword(String),
}

/// Initial ground state of the dark-state run.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InitialGround {
    Named(String),
    Explicit { s11: f64, s22: f64, s12: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub units: Units,
    pub seed: Option<u64>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsesSection {
    pub chi1: Amplitude,
    pub chi2: Amplitude,
    pub chip: Amplitude,
    pub duration: f64,
    #[serde(default)]
    pub ramp: f64,
    #[serde(default)]
    pub shape: Shape,
    pub detuning: Option<f64>,
    pub probe_detuning: f64,
    pub raman_detuning: f64,
    #[serde(default)]
    pub k1: Vec3,
    #[serde(default)]
    pub k2: Vec3,
    #[serde(default)]
    pub kp: Vec3,
    #[serde(default)]
    pub omega1: f64,
    #[serde(default)]
    pub omega2: f64,
    #[serde(default)]
    pub omega_p: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub branching3: Option<[f64; 2]>,
    pub branching4: Option<[f64; 2]>,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub t_end: Option<f64>,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub init: Option<InitialGround>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub area: f64,
    pub length: f64,
    pub density: f64,
}

fn default_samples() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    /// Measurement strength given directly; bypasses the physical chain.
    pub c: Option<f64>,
    /// Dipole matrix element on 2↔3, C·m.
    pub d23: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_eta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub n_atoms: Option<usize>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub outcome: OutcomePolicy,
    #[serde(default)]
    pub n_m: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub c: Option<Vec<f64>>,
    pub n_atoms: Option<Vec<usize>>,
    pub n_m: Option<Vec<u64>>,
    pub eta: Option<Vec<f64>>,
}

fn default_husimi_grid() -> [usize; 2] {
    [48, 96]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub husimi: bool,
    #[serde(default = "default_husimi_grid")]
    pub husimi_grid: [usize; 2],
    #[serde(default)]
    pub posteriors: bool,
    #[serde(default)]
    pub full_matrix: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            husimi: false,
            husimi_grid: default_husimi_grid(),
            posteriors: false,
            full_matrix: false,
        }
    }
}

/// The raw file, as deserialized.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub run: RunSection,
    pub pulses: Option<PulsesSection>,
    pub decay: Option<DecaySection>,
    pub dynamics: Option<DynamicsSection>,
    pub geometry: Option<GeometrySection>,
    pub coupling: Option<CouplingSection>,
    pub measurement: Option<MeasurementSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// How `C` is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSource {
    Override(f64),
    /// Every point takes `C` from the sweep axis.
    Swept,
    Physical {
        d23: f64,
        geometry: Geometry,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkStateSpec {
    pub pulses: PulseSet,
    pub decay: Option<DecayModel>,
    pub init: GroundState,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSpec {
    pub pulses: Option<PulseSet>,
    pub coupling: CouplingSource,
    /// `None` in physical mode means "from the geometry".
    pub n_atoms: Option<usize>,
    pub eta: f64,
    pub outcome: OutcomePolicy,
    pub n_m: u64,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    DarkState(DarkStateSpec),
    Measurement(MeasurementSpec),
}

/// A validated scenario plus what is needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub path: String,
    pub sha256: String,
    pub units: Units,
    pub seed: u64,
    pub label: Option<String>,
    pub scenario: Scenario,
    pub output: OutputSection,
}

/// Hex SHA-256 of the file bytes.
pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: display.clone(),
        line: None,
        key: "file".to_owned(),
        message: e.to_string(),
    })?;
    parse(&text, &display)
}

pub fn parse(text: &str, path: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        path: path.to_owned(),
        line: e.span().map(|s| line_of_offset(text, s.start)),
        key: "syntax".to_owned(),
        message: e.message().trim().to_owned(),
    })?;
    let fail = |table: &str, key: &str, message: String| ConfigError {
        path: path.to_owned(),
        line: locate(text, table, Some(key)).or_else(|| locate(text, table, None)),
        key: if key.is_empty() {
            table.to_owned()
        } else {
            format!("{table}.{key}")
        },
        message,
    };
    build(raw, text, path, &fail)
}

type Fail<'a> = dyn Fn(&str, &str, String) -> ConfigError + 'a;

fn build(raw: RawConfig, text: &str, path: &str, fail: &Fail) -> Result<Config, ConfigError> {
    let units = raw.run.units;
    let scenario = match raw.run.scenario {
        ScenarioKind::DarkState => Scenario::DarkState(build_dark_state(&raw, fail)?),
        ScenarioKind::Measurement => Scenario::Measurement(build_measurement(&raw, fail)?),
    };
    let [n_theta, n_phi] = raw.output.husimi_grid;
    if raw.output.husimi && (n_theta < 2 || n_phi < 1) {
        return Err(fail(
            "output",
            "husimi_grid",
            "needs at least 2 polar and 1 azimuthal points".into(),
        ));
    }
    Ok(Config {
        path: path.to_owned(),
        sha256: hash_bytes(text.as_bytes()),
        units,
        seed: raw.run.seed.unwrap_or(0),
        label: raw.run.label.clone(),
        scenario,
        output: raw.output,
    })
}

fn amplitude(a: &Amplitude, key: &str, fail: &Fail) -> Result<Complex64, ConfigError> {
    match a {
        Amplitude::Real(x) => Ok(Complex64::new(*x, 0.0)),
        Amplitude::Complex([re, im]) => Ok(Complex64::new(*re, *im)),
        Amplitude::Keyword(k) => Err(fail(
            "pulses",
            key,
            format!("expected a number or [re, im], got \"{k}\""),
        )),
    }
}

fn build_decay(raw: &RawConfig, fail: &Fail) -> Result<Option<DecayModel>, ConfigError> {
    let Some(d) = &raw.decay else {
        return Ok(None);
    };
    let mut model = DecayModel::new(d.gamma, d.gamma_prime)
        .map_err(|e| fail("decay", "gamma", e.to_string()))?;
    if let Some(b) = d.branching3 {
        model.branching3 = b;
    }
    if let Some(b) = d.branching4 {
        model.branching4 = b;
    }
    model
        .validate()
        .map_err(|e| fail("decay", "branching3", e.to_string()))?;
    Ok(Some(model))
}

fn build_pulses(
    p: &PulsesSection,
    units: Units,
    decay: Option<&DecayModel>,
    fail: &Fail,
) -> Result<PulseSet, ConfigError> {
    let detuning = match (units, p.detuning) {
        (Units::Scaled, None) | (Units::Scaled, Some(1.0)) => 1.0,
        (Units::Scaled, Some(other)) => {
            return Err(fail(
                "pulses",
                "detuning",
                format!("scaled units measure rates in Delta, so detuning must be 1 (got {other})"),
            ))
        }
        (Units::Si, Some(d)) => d,
        (Units::Si, None) => return Err(fail("pulses", "detuning", "required in SI units".into())),
    };
    let chi1 = amplitude(&p.chi1, "chi1", fail)?;
    let chip = amplitude(&p.chip, "chip", fail)?;
    let chi2 = match &p.chi2 {
        Amplitude::Keyword(k) if k == "balanced" => {
            let Some(decay) = decay else {
                return Err(fail(
                    "pulses",
                    "chi2",
                    "\"balanced\" needs a [decay] table".into(),
                ));
            };
            if chi1.im != 0.0 || chip.im != 0.0 {
                return Err(fail(
                    "pulses",
                    "chi2",
                    "\"balanced\" needs real chi1 and chip".into(),
                ));
            }
            let v = fwmspin::atom_dynamics::balanced_pump2(
                chi1.re,
                chip.re,
                detuning,
                p.probe_detuning,
                decay.gamma,
                decay.gamma_prime,
            )
            .map_err(|e| fail("pulses", "chi2", e.to_string()))?;
            Complex64::new(v, 0.0)
        }
        other => amplitude(other, "chi2", fail)?,
    };
    let envelope = |a: Complex64| Envelope {
        shape: p.shape,
        amplitude: a,
        duration: p.duration,
        ramp: p.ramp,
    };
    let pulses = PulseSet {
        chi1: envelope(chi1),
        chi2: envelope(chi2),
        chip: envelope(chip),
        detuning,
        probe_detuning: p.probe_detuning,
        raman_detuning: p.raman_detuning,
        k1: p.k1,
        k2: p.k2,
        kp: p.kp,
        omega1: p.omega1,
        omega2: p.omega2,
        omega_p: p.omega_p,
    };
    pulses.validate().map_err(|e| {
        let key = match &e {
            fwmspin::Error::InvalidParameter { name, .. } => *name,
            _ => "",
        };
        fail("pulses", key, e.to_string())
    })?;
    Ok(pulses)
}

fn build_dark_state(raw: &RawConfig, fail: &Fail) -> Result<DarkStateSpec, ConfigError> {
    if raw.sweep.is_some() {
        return Err(fail(
            "sweep",
            "",
            "sweeps apply to the measurement scenario only".into(),
        ));
    }
    let decay = build_decay(raw, fail)?;
    let Some(p) = &raw.pulses else {
        return Err(fail(
            "run",
            "scenario",
            "dark_state needs a [pulses] table".into(),
        ));
    };
    let pulses = build_pulses(p, raw.run.units, decay.as_ref(), fail)?;
    let Some(dyn_) = &raw.dynamics else {
        return Err(fail(
            "run",
            "scenario",
            "dark_state needs a [dynamics] table".into(),
        ));
    };
    let t_end = dyn_.t_end.unwrap_or(pulses.duration());
    if !(t_end > 0.0) {
        return Err(fail("dynamics", "t_end", "must be positive".into()));
    }
    if !(dyn_.dt > 0.0) {
        return Err(fail("dynamics", "dt", "must be positive".into()));
    }
    let limit = dyn_.dt * pulses.max_one_photon_detuning();
    if limit > fwmspin::atom_dynamics::MAX_PHASE_PER_STEP * (1.0 + 1e-12) {
        return Err(fail(
            "dynamics",
            "dt",
            format!("dt * max(|Delta|, |Delta_p|) = {limit:.3e} exceeds 0.1"),
        ));
    }
    if dyn_.stride == 0 {
        return Err(fail("dynamics", "stride", "must be at least 1".into()));
    }
    let init = match &dyn_.init {
        None => GroundState::x_polarized(),
        Some(InitialGround::Named(n)) if n == "x_polarized" => GroundState::x_polarized(),
        Some(InitialGround::Named(n)) => {
            return Err(fail(
                "dynamics",
                "init",
                format!(
                    "unknown initial state \"{n}\"; use \"x_polarized\" or {{ s11, s22, s12 }}"
                ),
            ))
        }
        Some(InitialGround::Explicit { s11, s22, s12 }) => {
            let g = GroundState {
                s11: *s11,
                s22: *s22,
                s12: Complex64::new(s12[0], s12[1]),
            };
            if (s11 + s22 - 1.0).abs() > 1e-10 {
                return Err(fail(
                    "dynamics",
                    "init",
                    format!("s11 + s22 = {} must equal 1", s11 + s22),
                ));
            }
            if *s11 < 0.0 || *s22 < 0.0 || g.s12.norm_sqr() > s11 * s22 + 1e-12 {
                return Err(fail(
                    "dynamics",
                    "init",
                    "not a valid density matrix".into(),
                ));
            }
            g
        }
    };
    Ok(DarkStateSpec {
        pulses,
        decay,
        init,
        t_end,
        dt: dyn_.dt,
        stride: dyn_.stride,
    })
}

fn build_measurement(raw: &RawConfig, fail: &Fail) -> Result<MeasurementSpec, ConfigError> {
    let Some(m) = &raw.measurement else {
        return Err(fail(
            "run",
            "scenario",
            "measurement needs a [measurement] table".into(),
        ));
    };
    let units = raw.run.units;
    let coupling_table = raw.coupling.clone().unwrap_or(CouplingSection {
        c: None,
        d23: None,
        samples: default_samples(),
    });
    let physical_inputs = coupling_table.d23.is_some() || raw.geometry.is_some();
    let decay = build_decay(raw, fail)?;
    let pulses = match &raw.pulses {
        Some(p) => Some(build_pulses(p, units, decay.as_ref(), fail)?),
        None => None,
    };
    let sweep_c = raw.sweep.as_ref().and_then(|s| s.c.as_ref()).is_some();
    let coupling =
        match (coupling_table.c, physical_inputs) {
            (Some(_), true) => return Err(fail(
                "coupling",
                "c",
                "give either the C override or the physical inputs (d23 and [geometry]), not both"
                    .into(),
            )),
            (Some(c), false) => {
                if !(c >= 0.0) || !c.is_finite() {
                    return Err(fail(
                        "coupling",
                        "c",
                        format!("must be finite and non-negative, got {c}"),
                    ));
                }
                CouplingSource::Override(c)
            }
            (None, true) => {
                if units == Units::Scaled {
                    return Err(fail(
                        "coupling",
                        "d23",
                        "scaled units take C directly; set coupling.c".into(),
                    ));
                }
                let Some(d23) = coupling_table.d23 else {
                    return Err(fail(
                        "coupling",
                        "d23",
                        "physical coupling needs d23".into(),
                    ));
                };
                let Some(g) = raw.geometry else {
                    return Err(fail(
                        "geometry",
                        "",
                        "physical coupling needs a [geometry] table".into(),
                    ));
                };
                if pulses.is_none() {
                    return Err(fail(
                        "coupling",
                        "d23",
                        "physical coupling needs a [pulses] table".into(),
                    ));
                }
                if sweep_c {
                    return Err(fail(
                        "sweep",
                        "c",
                        "a C sweep needs the coupling.c override".into(),
                    ));
                }
                let geometry = Geometry::new(g.area, g.length, g.density)
                    .map_err(|e| fail("geometry", "", e.to_string()))?;
                if coupling_table.samples < 2 {
                    return Err(fail("coupling", "samples", "must be at least 2".into()));
                }
                CouplingSource::Physical {
                    d23,
                    geometry,
                    samples: coupling_table.samples,
                }
            }
            (None, false) if sweep_c => CouplingSource::Swept,
            (None, false) => {
                return Err(fail(
                    "coupling",
                    "c",
                    "no coupling given: set coupling.c or the physical inputs (d23 and [geometry])"
                        .into(),
                ))
            }
        };
    if !matches!(coupling, CouplingSource::Physical { .. }) && m.n_atoms.is_none() {
        let swept = raw
            .sweep
            .as_ref()
            .and_then(|s| s.n_atoms.as_ref())
            .is_some();
        if !swept {
            return Err(fail(
                "measurement",
                "n_atoms",
                "required unless derived from [geometry]".into(),
            ));
        }
    }
    if let Some(n) = m.n_atoms {
        check_atoms(n, "measurement", "n_atoms", fail)?;
    }
    check_eta(m.eta, "measurement", "eta", fail)?;
    if let Some(s) = &raw.sweep {
        validate_sweep(s, m, fail)?;
    }
    Ok(MeasurementSpec {
        pulses,
        coupling,
        n_atoms: m.n_atoms,
        eta: m.eta,
        outcome: m.outcome,
        n_m: m.n_m,
        sweep: raw.sweep.clone(),
    })
}

fn check_atoms(n: usize, table: &str, key: &str, fail: &Fail) -> Result<(), ConfigError> {
    if n == 0 || n > fwmspin::collective_spin::MAX_ATOMS {
        return Err(fail(
            table,
            key,
            format!(
                "must be in 1..={}, got {n}",
                fwmspin::collective_spin::MAX_ATOMS
            ),
        ));
    }
    Ok(())
}

fn check_eta(eta: f64, table: &str, key: &str, fail: &Fail) -> Result<(), ConfigError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(fail(table, key, format!("must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

fn validate_sweep(
    s: &SweepSection,
    m: &MeasurementSection,
    fail: &Fail,
) -> Result<(), ConfigError> {
    let axes = [
        ("c", s.c.as_ref().map(Vec::len)),
        ("n_atoms", s.n_atoms.as_ref().map(Vec::len)),
        ("n_m", s.n_m.as_ref().map(Vec::len)),
        ("eta", s.eta.as_ref().map(Vec::len)),
    ];
    if axes.iter().all(|(_, len)| len.is_none()) {
        return Err(fail(
            "sweep",
            "",
            "sweep mode needs at least one axis (c, n_atoms, n_m, eta)".into(),
        ));
    }
    for (name, len) in axes {
        if len == Some(0) {
            return Err(fail("sweep", name, "axis must not be empty".into()));
        }
    }
    for &c in s.c.iter().flatten() {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(fail(
                "sweep",
                "c",
                format!("values must be finite and non-negative, got {c}"),
            ));
        }
    }
    for &n in s.n_atoms.iter().flatten() {
        check_atoms(n, "sweep", "n_atoms", fail)?;
    }
    for &eta in s.eta.iter().flatten() {
        check_eta(eta, "sweep", "eta", fail)?;
    }
    if s.n_m.is_some() && m.outcome == OutcomePolicy::Sampled {
        return Err(fail(
            "sweep",
            "n_m",
            "an n_m sweep needs measurement.outcome = \"fixed\"".into(),
        ));
    }
    Ok(())
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `key` inside `[table]`, or of the table header itself.
pub fn locate(text: &str, table: &str, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('[') {
            if let Some(name) = rest.split(']').next() {
                current = name.trim().to_owned();
                if key.is_none() && current == table {
                    return Some(i + 1);
                }
            }
            continue;
        }
        if current != table {
            continue;
        }
        if let Some(key) = key.filter(|k| !k.is_empty()) {
            if let Some(rest) = trimmed.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const MEASUREMENT: &str = r#"
[run]
scenario = "measurement"
units = "scaled"
seed = 7

[coupling]
c = 0.3

[measurement]
n_atoms = 20
"#;

    #[test]
    fn minimal_measurement_parses() {
        let cfg = parse(MEASUREMENT, "m.toml").unwrap();
        assert_eq!(cfg.seed, 7);
        let Scenario::Measurement(m) = cfg.scenario else {
            panic!()
        };
        assert_eq!(m.coupling, CouplingSource::Override(0.3));
        assert_eq!(m.n_atoms, Some(20));
        assert_eq!(m.eta, 1.0);
    }

    #[test]
    fn hash_is_of_the_raw_bytes() {
        let a = parse(MEASUREMENT, "m.toml").unwrap();
        let b = parse(&format!("{MEASUREMENT}\n# comment\n"), "m.toml").unwrap();
        assert_ne!(a.sha256, b.sha256);
        assert_eq!(a.sha256.len(), 64);
    }

    #[test]
    fn empty_sweep_axis_is_rejected_with_its_line() {
        let text = format!("{MEASUREMENT}\n[sweep]\nc = []\n");
        let err = parse(&text, "m.toml").unwrap_err();
        assert_eq!(err.key, "sweep.c");
        assert_eq!(err.line, Some(locate(&text, "sweep", Some("c")).unwrap()));
        assert!(err.to_string().contains("must not be empty"));
    }

    #[test]
    fn sweep_without_axes_is_rejected() {
        let err = parse(&format!("{MEASUREMENT}\n[sweep]\n"), "m.toml").unwrap_err();
        assert_eq!(err.key, "sweep");
    }

    #[test]
    fn override_and_physical_inputs_conflict() {
        let text = MEASUREMENT
            .replace("c = 0.3", "c = 0.3\nd23 = 1e-29")
            .replace("units = \"scaled\"", "");
        let err = parse(&text, "m.toml").unwrap_err();
        assert_eq!(err.key, "coupling.c");
    }

    #[test]
    fn unknown_keys_report_the_parser_line() {
        let text = MEASUREMENT.replace("n_atoms = 20", "n_atoms = 20\nbogus = 1");
        let err = parse(&text, "m.toml").unwrap_err();
        assert_eq!(err.key, "syntax");
        assert_eq!(
            err.line,
            Some(locate(&text, "measurement", Some("bogus")).unwrap())
        );
    }

    #[test]
    fn scaled_units_pin_the_detuning() {
        let text = r#"
[run]
scenario = "dark_state"
units = "scaled"
[pulses]
chi1 = 0.02
chi2 = 0.02
chip = 0.0
detuning = 2.0
probe_detuning = 1.0
raman_detuning = 0.0
duration = 100.0
[dynamics]
dt = 0.05
"#;
        assert_eq!(parse(text, "d.toml").unwrap_err().key, "pulses.detuning");
        let ok = parse(&text.replace("detuning = 2.0\n", ""), "d.toml").unwrap();
        let Scenario::DarkState(d) = ok.scenario else {
            panic!()
        };
        assert_eq!(d.pulses.detuning, 1.0);
        assert_eq!(d.init, GroundState::x_polarized());
    }

    #[test]
    fn balanced_pump_is_resolved() {
        let text = r#"
[run]
scenario = "dark_state"
units = "scaled"
[pulses]
chi1 = 0.02
chi2 = "balanced"
chip = 0.001
probe_detuning = 1.0
raman_detuning = 0.0
duration = 100.0
[decay]
gamma = 0.01
gamma_prime = 0.01
[dynamics]
dt = 0.05
"#;
        let cfg = parse(text, "d.toml").unwrap();
        let Scenario::DarkState(d) = cfg.scenario else {
            panic!()
        };
        let chi2 = d.pulses.chi2.amplitude.re;
        assert!((chi2 * chi2 - 0.02f64.powi(2) - 0.001f64.powi(2)).abs() < 1e-18);
        let no_decay = text.replace("[decay]\ngamma = 0.01\ngamma_prime = 0.01\n", "");
        assert_eq!(parse(&no_decay, "d.toml").unwrap_err().key, "pulses.chi2");
    }

    #[test]
    fn oversized_step_is_rejected() {
        let text = r#"
[run]
scenario = "dark_state"
units = "scaled"
[pulses]
chi1 = 0.02
chi2 = 0.02
chip = 0.0
probe_detuning = 3.0
raman_detuning = 0.0
duration = 100.0
[dynamics]
dt = 0.05
"#;
        assert_eq!(parse(text, "d.toml").unwrap_err().key, "dynamics.dt");
    }

    #[test]
    fn locate_finds_keys_in_their_table_only() {
        let text = "[a]\nx = 1\n[b]\nx = 2\n";
        assert_eq!(locate(text, "b", Some("x")), Some(4));
        assert_eq!(locate(text, "b", None), Some(3));
        assert_eq!(locate(text, "c", Some("x")), None);
    }
}
