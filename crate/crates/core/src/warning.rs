use std::fmt;

use serde::Serialize;

/// Non-fatal diagnostics. Perturbative-validity problems are reported, never
/// enforced, so breakdown regimes stay explorable.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// A small-parameter ratio exceeds its threshold.
    Perturbative {
        ratio: String,
        value: f64,
        threshold: f64,
    },
    /// Residual phase slip of the generated wave over the sample, in radians.
    PhaseMismatch { residual: f64, threshold: f64 },
    /// The pulse is not long compared to the transit time through the sample.
    ShortPulse { ct_over_l: f64, threshold: f64 },
    /// `n_a * A * L` was not an integer and had to be rounded.
    RoundedAtomNumber { exact: f64, rounded: usize },
    /// A quasi-steady ground coherence larger than 1/2 in magnitude.
    CoherenceExceedsHalf { value: f64 },
    /// The mean spin vanishes and the transverse variance was taken over all
    /// directions.
    ZeroMeanSpin,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Perturbative {
                ratio,
                value,
                threshold,
            } => write!(
                f,
                "perturbative validity: {ratio} = {value:.3e} exceeds {threshold:.3e}"
            ),
            Warning::PhaseMismatch {
                residual,
                threshold,
            } => write!(
                f,
                "phase mismatch over the sample: {residual:.3e} rad (threshold {threshold:.1e})"
            ),
            Warning::ShortPulse {
                ct_over_l,
                threshold,
            } => write!(f, "short pulse: cT/L = {ct_over_l:.3} <= {threshold}"),
            Warning::RoundedAtomNumber { exact, rounded } => {
                write!(f, "atom number n_a*A*L = {exact} rounded to {rounded}")
            }
            Warning::CoherenceExceedsHalf { value } => {
                write!(f, "steady coherence {value} exceeds 1/2 in magnitude")
            }
            Warning::ZeroMeanSpin => write!(
                f,
                "mean spin vanishes; transverse variance taken over all directions"
            ),
        }
    }
}
