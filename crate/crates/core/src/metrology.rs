//! Quantum Fisher information for joint estimation of `(lambda, g)` from the
//! evolved x-polarized state, its scalar figure of merit `G`, and power-law
//! fits of `G` against time or system size.
//!
//! `g` is one parameter shared by the satellite and central kicks.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DtcError, Result};
use crate::floquet::DriveParams;
use crate::hilbert::{inner, PureState, SystemShape};
use crate::observables::evolved_state;

/// Default finite-difference step.
pub const DEFAULT_DELTA: f64 = 1e-4;
/// Relative disagreement between the two estimators that raises the flag.
pub const AGREEMENT_TOLERANCE: f64 = 0.01;
/// Overlap differences below this are treated as lost to cancellation.
pub const CANCELLATION_FLOOR: f64 = 1e-12;

/// The three independent Fisher elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherElements {
    pub f_ll: f64,
    pub f_gg: f64,
    pub f_lg: f64,
}

impl FisherElements {
    pub fn determinant(&self) -> f64 {
        self.f_ll * self.f_gg - self.f_lg * self.f_lg
    }

    fn as_array(&self) -> [f64; 3] {
        [self.f_ll, self.f_gg, self.f_lg]
    }

    /// Largest element-wise relative difference. Each difference is scaled by
    /// the larger magnitude of the pair, floored at 1e-3 of the largest
    /// diagonal element so that elements which vanish analytically do not
    /// dominate.
    pub fn relative_difference(&self, other: &FisherElements) -> f64 {
        let floor = 1e-3
            * self
                .f_ll
                .abs()
                .max(self.f_gg.abs())
                .max(other.f_ll.abs())
                .max(other.f_gg.abs());
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| {
                let scale = a.abs().max(b.abs()).max(floor);
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Fisher matrix from the overlap formula, with the standard-form cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiMatrix {
    pub f_ll: f64,
    pub f_gg: f64,
    pub f_lg: f64,
    /// `det F / tr F`, present when the determinant is positive.
    pub g_scalar: Option<f64>,
    pub n_periods: usize,
    pub delta: f64,
    /// `4 Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>]` with central differences.
    pub cross_check: FisherElements,
    /// True when the two estimators differ by more than 1% relative.
    pub disagreement: bool,
}

impl QfiMatrix {
    pub fn elements(&self) -> FisherElements {
        FisherElements {
            f_ll: self.f_ll,
            f_gg: self.f_gg,
            f_lg: self.f_lg,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.elements().determinant()
    }
}

/// The five evolved states a Fisher matrix is assembled from.
#[derive(Debug, Clone)]
pub struct ShiftedStates {
    pub psi: PureState,
    pub lambda_plus: PureState,
    pub g_plus: PureState,
    pub lambda_minus: PureState,
    pub g_minus: PureState,
}

impl ShiftedStates {
    /// Evolves the x-polarized state at the point and its four neighbours,
    /// concurrently; results are placed by role, not completion order.
    pub fn evolve(
        shape: SystemShape,
        params: DriveParams,
        n_periods: usize,
        delta: f64,
    ) -> Result<Self> {
        let shifts = [
            (0.0, 0.0),
            (delta, 0.0),
            (0.0, delta),
            (-delta, 0.0),
            (0.0, -delta),
        ];
        let mut states: Vec<PureState> = shifts
            .par_iter()
            .map(|&(dl, dg)| {
                let p =
                    DriveParams::with_kicks(params.lambda + dl, params.g_s + dg, params.g_c + dg);
                evolved_state(shape, p, n_periods)
            })
            .collect::<Result<Vec<_>>>()?;
        let g_minus = states.pop().expect("five states");
        let lambda_minus = states.pop().expect("five states");
        let g_plus = states.pop().expect("five states");
        let lambda_plus = states.pop().expect("five states");
        let psi = states.pop().expect("five states");
        Ok(Self {
            psi,
            lambda_plus,
            g_plus,
            lambda_minus,
            g_minus,
        })
    }

    /// Copy with every state multiplied by the same global phase.
    pub fn with_common_phase(&self, phase: Complex64) -> Self {
        Self {
            psi: self.psi.with_phase(phase),
            lambda_plus: self.lambda_plus.with_phase(phase),
            g_plus: self.g_plus.with_phase(phase),
            lambda_minus: self.lambda_minus.with_phase(phase),
            g_minus: self.g_minus.with_phase(phase),
        }
    }
}

/// `4 Re[<a|b> - <a|psi><b|psi>] / delta^2`.
fn overlap_element(
    a: &PureState,
    b: &PureState,
    psi: &PureState,
    delta: f64,
) -> Result<(f64, f64)> {
    let raw = inner(a, b)? - inner(a, psi)? * inner(b, psi)?;
    Ok((4.0 * raw.re / (delta * delta), raw.re.abs()))
}

fn standard_elements(st: &ShiftedStates, delta: f64) -> Result<FisherElements> {
    let deriv = |plus: &PureState, minus: &PureState| -> Vec<Complex64> {
        plus.amplitudes()
            .iter()
            .zip(minus.amplitudes())
            .map(|(p, m)| (p - m) / (2.0 * delta))
            .collect()
    };
    let dl = deriv(&st.lambda_plus, &st.lambda_minus);
    let dg = deriv(&st.g_plus, &st.g_minus);
    let psi = st.psi.amplitudes();
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let elem = |a: &[Complex64], b: &[Complex64]| 4.0 * (dot(a, b) - dot(a, psi) * dot(psi, b)).re;
    Ok(FisherElements {
        f_ll: elem(&dl, &dl),
        f_gg: elem(&dg, &dg),
        f_lg: elem(&dl, &dg),
    })
}

/// Assembles the Fisher matrix from already evolved states.
pub fn qfi_from_states(states: &ShiftedStates, n_periods: usize, delta: f64) -> Result<QfiMatrix> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(DtcError::Validation(format!(
            "delta {delta} must be positive and finite"
        )));
    }
    let psi = &states.psi;
    let (f_ll, raw_ll) = overlap_element(&states.lambda_plus, &states.lambda_plus, psi, delta)?;
    let (f_gg, raw_gg) = overlap_element(&states.g_plus, &states.g_plus, psi, delta)?;
    let (f_lg, _) = overlap_element(&states.lambda_plus, &states.g_plus, psi, delta)?;
    if n_periods > 0 && raw_ll.max(raw_gg) < CANCELLATION_FLOOR {
        return Err(DtcError::StepSize(format!(
            "overlap differences {raw_ll:e}, {raw_gg:e} are below {CANCELLATION_FLOOR:e} at delta {delta:e}"
        )));
    }
    let cross_check = standard_elements(states, delta)?;
    let elements = FisherElements { f_ll, f_gg, f_lg };
    let disagreement = elements.relative_difference(&cross_check) > AGREEMENT_TOLERANCE;
    let mut q = QfiMatrix {
        f_ll,
        f_gg,
        f_lg,
        g_scalar: None,
        n_periods,
        delta,
        cross_check,
        disagreement,
    };
    q.g_scalar = weighted_uncertainty(&q).ok();
    Ok(q)
}

/// Fisher matrix of the x-polarized state evolved `n_periods` at `params`.
pub fn qfi_matrix(
    shape: SystemShape,
    params: DriveParams,
    n_periods: usize,
    delta: f64,
) -> Result<QfiMatrix> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(DtcError::Validation(format!(
            "delta {delta} must be positive and finite"
        )));
    }
    if n_periods == 0 {
        let zero = FisherElements {
            f_ll: 0.0,
            f_gg: 0.0,
            f_lg: 0.0,
        };
        return Ok(QfiMatrix {
            f_ll: 0.0,
            f_gg: 0.0,
            f_lg: 0.0,
            g_scalar: None,
            n_periods,
            delta,
            cross_check: zero,
            disagreement: false,
        });
    }
    let states = ShiftedStates::evolve(shape, params, n_periods, delta)?;
    qfi_from_states(&states, n_periods, delta)
}

/// `G = det F / tr F`, the reciprocal of `tr F^-1`, so that
/// `d lambda^2 + d g^2 >= 1/G`.
pub fn weighted_uncertainty(q: &QfiMatrix) -> Result<f64> {
    let det = q.determinant();
    let trace = q.f_ll + q.f_gg;
    if !(det > 0.0) || !(trace > 0.0) {
        return Err(DtcError::DegenerateInformation(det));
    }
    Ok(det / trace)
}

/// Step-halving check: maximum relative element change between `delta` and `delta / 2`.
pub fn step_halving_change(
    shape: SystemShape,
    params: DriveParams,
    n_periods: usize,
    delta: f64,
) -> Result<f64> {
    let coarse = qfi_matrix(shape, params, n_periods, delta)?;
    let fine = qfi_matrix(shape, params, n_periods, delta / 2.0)?;
    Ok(coarse.elements().relative_difference(&fine.elements()))
}

/// Least-squares slope of `ln y` against `ln x`, with the coefficient of determination.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(DtcError::InsufficientData(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(DtcError::NonPositive(format!("point ({x}, {y})")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DtcError::InsufficientData("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok((slope, r_squared))
}
