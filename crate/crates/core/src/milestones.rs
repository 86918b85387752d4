//! Milestone states of the special higher-order time crystal at
//! `lambda = pi, g = pi/2`: polarized products, Bell super-cat states, GHZ
//! states and products of two GHZ factors.
//!
//! Each state is a superposition of terms `c * |a, sigma>^{(x) n_sat} (x) |tau s>^b`
//! with a satellite axis `a`, a central axis `b` and signs `sigma, tau`.
//!
//! Phase conventions: satellite states and central y/z poles are the
//! `axis_eigenbasis` columns; central x poles are `exp(-i pi/2 S^y)|+-s>^z`.
//!
//! The printed coefficients hold for one residue class of
//! `(n_sat mod 4, 2s mod 4)` per parity case. Other classes in the same case
//! differ by signs on the terms carrying a minus-polarized factor; these are
//! applied so that every shape of the case is covered.

use num_complex::Complex64;

use crate::error::{DtcError, Result};
use crate::floquet::DriveParams;
use crate::hilbert::{fidelity, uniform_product_state, x_polarized_state, PureState, SystemShape};
use crate::observables::evolved_state;
use crate::spin::{coherent_axis_state, rotated_x_pole, Axis, LocalState, Sign};

/// Parity of `(n_sat, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParityCase {
    OddInt,
    EvenHalf,
    OddHalf,
    EvenInt,
}

impl ParityCase {
    pub fn of(shape: SystemShape) -> ParityCase {
        match (shape.n_sat() % 2 == 1, shape.two_s() % 2 == 1) {
            (true, false) => ParityCase::OddInt,
            (false, true) => ParityCase::EvenHalf,
            (true, true) => ParityCase::OddHalf,
            (false, false) => ParityCase::EvenInt,
        }
    }

    /// Period of the special higher-order crystal for this parity.
    pub fn period(self) -> usize {
        match self {
            ParityCase::EvenInt => 4,
            ParityCase::OddInt | ParityCase::EvenHalf => 12,
            ParityCase::OddHalf => 24,
        }
    }

    /// Time indices with a constructor.
    pub fn supported_times(self) -> &'static [usize] {
        match self {
            ParityCase::OddInt | ParityCase::EvenHalf => &[3, 6, 12],
            ParityCase::OddHalf => &[1, 2, 3, 4, 5, 6, 12, 24],
            ParityCase::EvenInt => &[1, 2, 3, 4],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ParityCase::OddInt => "odd_int",
            ParityCase::EvenHalf => "even_half",
            ParityCase::OddHalf => "odd_half",
            ParityCase::EvenInt => "even_int",
        }
    }
}

impl std::str::FromStr for ParityCase {
    type Err = DtcError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "odd_int" => Ok(ParityCase::OddInt),
            "even_half" => Ok(ParityCase::EvenHalf),
            "odd_half" => Ok(ParityCase::OddHalf),
            "even_int" => Ok(ParityCase::EvenInt),
            other => Err(DtcError::Validation(format!(
                "unknown parity case '{other}'"
            ))),
        }
    }
}

/// A milestone: parity case and the period count at which it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MilestoneSpec {
    pub parity_case: ParityCase,
    pub time_index: usize,
}

impl MilestoneSpec {
    pub fn new(parity_case: ParityCase, time_index: usize) -> Self {
        Self {
            parity_case,
            time_index,
        }
    }

    /// All supported milestones of a parity case.
    pub fn all(parity_case: ParityCase) -> Vec<MilestoneSpec> {
        parity_case
            .supported_times()
            .iter()
            .map(|&t| Self::new(parity_case, t))
            .collect()
    }
}

/// One product term of a milestone superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilestoneTerm {
    pub coefficient: Complex64,
    pub sat_axis: Axis,
    pub sat_sign: Sign,
    pub central_axis: Axis,
    pub central_sign: Sign,
}

/// Which term sets change sign: (satellite-minus terms, central-minus terms).
type Flips = (bool, bool);

/// How residue-class changes act on a multi-term milestone: the flips caused
/// by a change of `n_sat mod 4` and by a change of `2s mod 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ClassSigns {
    n_shift: Flips,
    s_shift: Flips,
}

/// Printed form is valid for every shape of the case.
const UNIVERSAL: ClassSigns = ClassSigns {
    n_shift: (false, false),
    s_shift: (false, false),
};
/// `n_sat` flips satellite-minus terms, `2s` flips central-minus terms.
const DIRECT: ClassSigns = ClassSigns {
    n_shift: (true, false),
    s_shift: (false, true),
};
const EXCHANGED: ClassSigns = ClassSigns {
    n_shift: (false, true),
    s_shift: (true, false),
};
/// As `DIRECT`, but a change of `2s` flips both minus sets (so the (-,-)
/// term keeps its sign).
const SPIN_FLIPS_BOTH: ClassSigns = ClassSigns {
    n_shift: (true, false),
    s_shift: (true, true),
};
/// As `DIRECT`, but a change of `n_sat` flips both minus sets.
const SIZE_FLIPS_BOTH: ClassSigns = ClassSigns {
    n_shift: (true, true),
    s_shift: (false, true),
};

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Coefficients in term order (+,+), (+,-), (-,+), (-,-) as
/// (satellite sign, central sign).
type FourTerms = [Complex64; 4];

struct Layout {
    sat_axis: Axis,
    central_axis: Axis,
    coefficients: FourTerms,
    signs: ClassSigns,
}

fn layout(spec: MilestoneSpec) -> Option<Layout> {
    use Axis::*;
    use ParityCase::*;
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let product = |axis: Axis, sign: Sign| {
        let mut coefficients = [z; 4];
        coefficients[if sign == Sign::Plus { 0 } else { 3 }] = one;
        Layout {
            sat_axis: axis,
            central_axis: axis,
            coefficients,
            signs: UNIVERSAL,
        }
    };
    let four = |sat_axis, central_axis, coefficients, signs| Layout {
        sat_axis,
        central_axis,
        coefficients,
        signs,
    };
    Some(match (spec.parity_case, spec.time_index) {
        (OddInt, 3) => four(Y, X, [one, -one, -i, -i], SPIN_FLIPS_BOTH),
        (OddInt | EvenHalf, 6) => product(X, Sign::Minus),
        (OddInt | EvenHalf, 12) => product(X, Sign::Plus),
        (EvenHalf, 3) => four(X, Y, [one, -i, -one, -i], SIZE_FLIPS_BOTH),
        (OddHalf, 1) => four(Z, Z, [one, -one, -one, -one], DIRECT),
        (OddHalf, 2) => four(Y, Y, [one, -one, -one, -one], EXCHANGED),
        (OddHalf, 3) => four(
            X,
            X,
            [c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)],
            DIRECT,
        ),
        (OddHalf, 4) => four(Z, Z, [-one, one, one, -one], UNIVERSAL),
        (OddHalf, 5) => four(Y, Y, [i, z, z, -one], UNIVERSAL),
        (OddHalf, 6) => four(X, X, [c(-1.0, -1.0), z, z, c(1.0, -1.0)], UNIVERSAL),
        (OddHalf, 12) => product(X, Sign::Minus),
        (OddHalf, 24) => product(X, Sign::Plus),
        (EvenInt, 1) => four(Y, Y, [one, one, one, -one], UNIVERSAL),
        (EvenInt, 2) => four(X, X, [one, -one, -one, -one], UNIVERSAL),
        (EvenInt, 3) => product(Y, Sign::Minus),
        (EvenInt, 4) => product(X, Sign::Plus),
        _ => return None,
    })
}

/// Residue class `(n_sat mod 4, 2s mod 4)` in which the printed
/// coefficients hold.
fn reference_class(case: ParityCase) -> (usize, usize) {
    match case {
        ParityCase::OddInt => (1, 0),
        ParityCase::EvenHalf => (0, 1),
        ParityCase::OddHalf => (1, 1),
        ParityCase::EvenInt => (0, 0),
    }
}

fn check(shape: SystemShape, spec: MilestoneSpec) -> Result<Layout> {
    let found = ParityCase::of(shape);
    if found != spec.parity_case {
        return Err(DtcError::ShapeMismatch(format!(
            "{shape} is {}, milestone requires {}",
            found.label(),
            spec.parity_case.label()
        )));
    }
    layout(spec).ok_or_else(|| {
        DtcError::UnsupportedMilestone(format!(
            "{} has no milestone at t={}T (supported: {:?})",
            spec.parity_case.label(),
            spec.time_index,
            spec.parity_case.supported_times()
        ))
    })
}

/// Product terms of the milestone for this shape, with residue-class signs applied.
pub fn milestone_terms(shape: SystemShape, spec: MilestoneSpec) -> Result<Vec<MilestoneTerm>> {
    let lay = check(shape, spec)?;
    let (ref_n, ref_s) = reference_class(spec.parity_case);
    let n_shift = shape.n_sat() % 4 != ref_n;
    let s_shift = shape.two_s() % 4 != ref_s;
    let pick = |on: bool, f: Flips| if on { f } else { (false, false) };
    let (n_sat_flip, n_c_flip) = pick(n_shift, lay.signs.n_shift);
    let (s_sat_flip, s_c_flip) = pick(s_shift, lay.signs.s_shift);
    let flip_sat = n_sat_flip ^ s_sat_flip;
    let flip_central = n_c_flip ^ s_c_flip;
    let signs = [
        (Sign::Plus, Sign::Plus),
        (Sign::Plus, Sign::Minus),
        (Sign::Minus, Sign::Plus),
        (Sign::Minus, Sign::Minus),
    ];
    Ok(signs
        .iter()
        .zip(lay.coefficients)
        .filter(|(_, coef)| coef.norm() > 0.0)
        .map(|(&(sat_sign, central_sign), mut coef)| {
            if flip_sat && sat_sign == Sign::Minus {
                coef = -coef;
            }
            if flip_central && central_sign == Sign::Minus {
                coef = -coef;
            }
            MilestoneTerm {
                coefficient: coef,
                sat_axis: lay.sat_axis,
                sat_sign,
                central_axis: lay.central_axis,
                central_sign,
            }
        })
        .collect())
}

fn central_pole(two_s: usize, axis: Axis, sign: Sign) -> Result<LocalState> {
    match axis {
        Axis::X => rotated_x_pole(two_s, sign),
        _ => coherent_axis_state(two_s, axis, sign),
    }
}

/// Normalized milestone state.
pub fn milestone_state(shape: SystemShape, spec: MilestoneSpec) -> Result<PureState> {
    let terms = milestone_terms(shape, spec)?;
    let mut acc = vec![Complex64::new(0.0, 0.0); shape.dim()];
    for t in &terms {
        let sat = coherent_axis_state(1, t.sat_axis, t.sat_sign)?;
        let central = central_pole(shape.two_s(), t.central_axis, t.central_sign)?;
        let product = uniform_product_state(shape, &sat, &central)?;
        acc.iter_mut()
            .zip(product.amplitudes())
            .for_each(|(a, p)| *a += t.coefficient * p);
    }
    PureState::normalized(shape, acc)
}

/// Fidelity between the evolved x-polarized state and the milestone.
pub fn milestone_fidelity(
    shape: SystemShape,
    params: DriveParams,
    spec: MilestoneSpec,
) -> Result<f64> {
    let target = milestone_state(shape, spec)?;
    let evolved = if spec.time_index == 0 {
        x_polarized_state(shape)
    } else {
        evolved_state(shape, params, spec.time_index)?
    };
    fidelity(&target, &evolved)
}
