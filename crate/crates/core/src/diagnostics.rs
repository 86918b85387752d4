//! Time-crystal diagnostics: stroboscopic averages, the DTC/DMF order
//! parameters, revival-period detection and table-driven predictions.

use crate::error::{DtcError, Result};
use crate::observables::TrajectoryRecord;

/// Default revival tolerance for period detection.
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Default number of periods scanned when looking for a revival.
pub const DEFAULT_N_MAX: usize = 64;

/// `(1/count) * sum_{n=1..count} series[n * stride]`, where `series[0]` is
/// the value before the first period.
pub fn stroboscopic_average(series: &[f64], stride: usize, count: usize) -> Result<f64> {
    if stride == 0 || count == 0 {
        return Err(DtcError::Validation(
            "stride and count must be positive".into(),
        ));
    }
    let needed = stride
        .checked_mul(count)
        .ok_or_else(|| DtcError::Validation("stride * count overflows".into()))?;
    if series.len() <= needed {
        return Err(DtcError::InsufficientData(format!(
            "need index {needed}, series has {} entries",
            series.len()
        )));
    }
    Ok((1..=count).map(|n| series[n * stride]).sum::<f64>() / count as f64)
}

/// Time-averaged order parameters over periods `1..=count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderParameters {
    /// Mean of `(-1)^n M(nT)`.
    pub o_dtc: f64,
    /// Mean of `M(nT)`.
    pub o_dmf: f64,
    /// `o_dtc - o_dmf`.
    pub o_rel: f64,
}

pub fn relative_order_parameter(series: &[f64], count: usize) -> Result<OrderParameters> {
    if count == 0 {
        return Err(DtcError::Validation("count must be positive".into()));
    }
    if series.len() <= count {
        return Err(DtcError::InsufficientData(format!(
            "need index {count}, series has {} entries",
            series.len()
        )));
    }
    let window = &series[1..=count];
    let signed: f64 = window
        .iter()
        .enumerate()
        .map(|(i, m)| if (i + 1) % 2 == 0 { *m } else { -*m })
        .sum();
    let plain: f64 = window.iter().sum();
    let o_dtc = signed / count as f64;
    let o_dmf = plain / count as f64;
    Ok(OrderParameters {
        o_dtc,
        o_dmf,
        o_rel: o_dtc - o_dmf,
    })
}

/// Result of a revival scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodReport {
    /// Smallest `n >= 1` whose fidelity with the initial state exceeds `1 - epsilon`.
    pub detected_period: Option<usize>,
    /// Fidelity at the detected period, or the best fidelity seen if none.
    pub revival_fidelity: f64,
    /// Smallest repeat length of the `m_sat_x` sequence.
    pub magnetization_period: Option<usize>,
}

fn sequence_period(values: &[f64], epsilon: f64) -> Option<usize> {
    (1..=values.len() / 2).find(|&p| {
        values
            .windows(p + 1)
            .all(|w| (w[0] - w[p]).abs() <= epsilon)
    })
}

/// Scans a trajectory (records with `n = 0` are ignored for revivals).
pub fn detect_period(trajectory: &[TrajectoryRecord], epsilon: f64) -> Result<PeriodReport> {
    if trajectory.is_empty() {
        return Err(DtcError::EmptyTrajectory);
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(DtcError::Validation(format!(
            "epsilon {epsilon} must lie in (0, 1)"
        )));
    }
    let revival = trajectory
        .iter()
        .find(|r| r.n >= 1 && r.fidelity_initial > 1.0 - epsilon);
    let revival_fidelity = match revival {
        Some(r) => r.fidelity_initial,
        None => trajectory
            .iter()
            .filter(|r| r.n >= 1)
            .map(|r| r.fidelity_initial)
            .fold(0.0, f64::max),
    };
    let m: Vec<f64> = trajectory.iter().map(|r| r.m_sat_x).collect();
    Ok(PeriodReport {
        detected_period: revival.map(|r| r.n),
        revival_fidelity,
        magnetization_period: sequence_period(&m, epsilon),
    })
}

/// Largest fidelity with the initial state strictly before period `n`.
pub fn max_fidelity_before(trajectory: &[TrajectoryRecord], n: usize) -> f64 {
    trajectory
        .iter()
        .filter(|r| r.n >= 1 && r.n < n)
        .map(|r| r.fidelity_initial)
        .fold(0.0, f64::max)
}

/// Parameter regimes with tabulated predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `lambda = 2 pi`, any g.
    Lambda2Pi,
    /// `lambda` an odd multiple of pi, g an odd multiple of pi/2.
    SpecialHo,
    RegularClass1,
    RegularClass2,
}

impl std::str::FromStr for Regime {
    type Err = DtcError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "lambda_2pi" | "2pi" => Ok(Regime::Lambda2Pi),
            "special" | "special_ho" => Ok(Regime::SpecialHo),
            "regular_1" | "regular_class_1" => Ok(Regime::RegularClass1),
            "regular_2" | "regular_class_2" => Ok(Regime::RegularClass2),
            other => Err(DtcError::Validation(format!("unknown regime '{other}'"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Lambda2Pi => "lambda_2pi",
            Regime::SpecialHo => "special_ho",
            Regime::RegularClass1 => "regular_class_1",
            Regime::RegularClass2 => "regular_class_2",
        })
    }
}

/// Stroboscopic behaviour of one subsystem at `lambda = 2 pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Behaviour {
    PeriodDoubling,
    Sinusoidal,
}

impl std::fmt::Display for Behaviour {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Behaviour::PeriodDoubling => "period doubling",
            Behaviour::Sinusoidal => "sinusoidal",
        })
    }
}

/// A table lookup result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DtcPrediction {
    pub satellites: Option<Behaviour>,
    pub central: Option<Behaviour>,
    pub period: Option<usize>,
}

/// Looks up the period-doubling taxonomy, the special HO-DTC period or the
/// regular HO-DTC period tables. Regular tables only cover even `n_sat` with
/// integer s.
pub fn predict_dtc_class(n_sat: usize, two_s: usize, regime: Regime) -> Result<DtcPrediction> {
    if n_sat == 0 || two_s == 0 {
        return Err(DtcError::InvalidShape(
            "n_sat and two_s must be positive".into(),
        ));
    }
    let odd_n = n_sat % 2 == 1;
    let half = two_s % 2 == 1;
    let only_period = |p: usize| DtcPrediction {
        satellites: None,
        central: None,
        period: Some(p),
    };
    match regime {
        Regime::Lambda2Pi => {
            use Behaviour::*;
            let (sat, cen) = match (odd_n, half) {
                (false, false) => (Sinusoidal, Sinusoidal),
                (false, true) => (PeriodDoubling, Sinusoidal),
                (true, false) => (Sinusoidal, PeriodDoubling),
                (true, true) => (PeriodDoubling, PeriodDoubling),
            };
            let period = (sat == PeriodDoubling && cen == PeriodDoubling).then_some(2);
            Ok(DtcPrediction {
                satellites: Some(sat),
                central: Some(cen),
                period,
            })
        }
        Regime::SpecialHo => Ok(only_period(match (odd_n, half) {
            (false, false) => 4,
            (false, true) => 12,
            (true, false) => 12,
            (true, true) => 24,
        })),
        Regime::RegularClass1 | Regime::RegularClass2 => {
            if odd_n || half {
                return Err(DtcError::NotTabulated(format!(
                    "regular HO-DTC tables cover even n_sat and integer s only (n_sat={n_sat}, two_s={two_s})"
                )));
            }
            let four_j = n_sat.is_multiple_of(4);
            let even_s = two_s.is_multiple_of(4);
            let p = match (regime, four_j, even_s) {
                (Regime::RegularClass1, false, false) => 12,
                (Regime::RegularClass1, _, _) => 24,
                (_, true, true) => 12,
                _ => 24,
            };
            Ok(only_period(p))
        }
    }
}

/// Regular HO-DTC drive points `(lambda, g)` of a class, grouped around the
/// four special points.
pub fn regular_points(regime: Regime) -> Result<Vec<(f64, f64)>> {
    use std::f64::consts::PI;
    let q = PI / 4.0;
    // Entries in units of pi/4.
    let pts: &[(f64, f64)] = match regime {
        Regime::RegularClass1 => &[
            (4.0, 1.0),
            (4.0, 3.0),
            (12.0, 1.0),
            (12.0, 3.0),
            (4.0, 5.0),
            (4.0, 7.0),
            (12.0, 5.0),
            (12.0, 7.0),
        ],
        Regime::RegularClass2 => &[
            (2.0, 2.0),
            (6.0, 2.0),
            (10.0, 2.0),
            (14.0, 2.0),
            (2.0, 6.0),
            (6.0, 6.0),
            (10.0, 6.0),
            (14.0, 6.0),
        ],
        other => {
            return Err(DtcError::NotTabulated(format!(
                "{other} has no regular point list"
            )))
        }
    };
    Ok(pts.iter().map(|(l, g)| (l * q, g * q)).collect())
}

/// Measured behaviour of a `M(2nT)` series, `n = 0, 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesFit {
    /// Every sample equals the first within tolerance.
    PeriodDoubling,
    /// Samples follow `amplitude * cos(2 g n)` within tolerance.
    Sinusoidal { amplitude: f64, residual: f64 },
    /// Neither model fits; `residual` is the cosine-fit residual.
    Irregular { residual: f64 },
}

impl SeriesFit {
    pub fn behaviour(&self) -> Option<Behaviour> {
        match self {
            SeriesFit::PeriodDoubling => Some(Behaviour::PeriodDoubling),
            SeriesFit::Sinusoidal { .. } => Some(Behaviour::Sinusoidal),
            SeriesFit::Irregular { .. } => None,
        }
    }
}

/// Classifies a two-period-sampled magnetization series for kick angle `g`.
pub fn classify_two_period_series(series: &[f64], g: f64, tol: f64) -> Result<SeriesFit> {
    if series.len() < 3 {
        return Err(DtcError::InsufficientData(
            "need at least three samples".into(),
        ));
    }
    if series.iter().all(|m| (m - series[0]).abs() < tol) {
        return Ok(SeriesFit::PeriodDoubling);
    }
    let cosines: Vec<f64> = (0..series.len())
        .map(|n| (2.0 * g * n as f64).cos())
        .collect();
    let denom: f64 = cosines.iter().map(|c| c * c).sum();
    let amplitude = series.iter().zip(&cosines).map(|(m, c)| m * c).sum::<f64>() / denom;
    let residual = series
        .iter()
        .zip(&cosines)
        .map(|(m, c)| (m - amplitude * c).abs())
        .fold(0.0, f64::max);
    Ok(if residual < tol {
        SeriesFit::Sinusoidal {
            amplitude,
            residual,
        }
    } else {
        SeriesFit::Irregular { residual }
    })
}
