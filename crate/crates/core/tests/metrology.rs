use std::f64::consts::{FRAC_PI_2, PI, TAU};

use dtc_core::error::DtcError;
use dtc_core::floquet::DriveParams;
use dtc_core::hilbert::SystemShape;
use dtc_core::metrology::{
    fit_power_law, qfi_from_states, qfi_matrix, step_halving_change, weighted_uncertainty,
    FisherElements, QfiMatrix, ShiftedStates, AGREEMENT_TOLERANCE, DEFAULT_DELTA,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn shape(n: usize, two_s: usize) -> SystemShape {
    SystemShape::new(n, two_s).unwrap()
}

fn special() -> DriveParams {
    DriveParams::new(PI, FRAC_PI_2)
}

fn manual(f_ll: f64, f_gg: f64, f_lg: f64) -> QfiMatrix {
    QfiMatrix {
        f_ll,
        f_gg,
        f_lg,
        g_scalar: None,
        n_periods: 1,
        delta: DEFAULT_DELTA,
        cross_check: FisherElements { f_ll, f_gg, f_lg },
        disagreement: false,
    }
}

fn g_at(sh: SystemShape, n: usize) -> Result<f64, DtcError> {
    weighted_uncertainty(&qfi_matrix(sh, special(), n, DEFAULT_DELTA)?)
}

#[test]
fn zero_periods_carry_no_information() {
    let q = qfi_matrix(shape(5, 1), special(), 0, DEFAULT_DELTA).unwrap();
    assert_eq!((q.f_ll, q.f_gg, q.f_lg), (0.0, 0.0, 0.0));
    assert!(q.g_scalar.is_none());
    assert!(matches!(
        weighted_uncertainty(&q),
        Err(DtcError::DegenerateInformation(_))
    ));
}

#[test]
fn lambda_information_grows_quadratically() {
    let pts: Vec<(f64, f64)> = (1..=12)
        .map(|k| {
            let n = 8 * k;
            (
                n as f64,
                qfi_matrix(shape(5, 1), special(), n, DEFAULT_DELTA)
                    .unwrap()
                    .f_ll,
            )
        })
        .collect();
    let (alpha, r2) = fit_power_law(&pts).unwrap();
    assert!((alpha - 2.0).abs() <= 0.1, "exponent {alpha}, r2 {r2}");
}

#[test]
fn weighted_bound_grows_quadratically() {
    let pts: Vec<(f64, f64)> = (1..=12)
        .map(|k| (8.0 * k as f64, g_at(shape(5, 1), 8 * k).unwrap()))
        .collect();
    let (alpha, _) = fit_power_law(&pts).unwrap();
    assert!((alpha - 2.0).abs() <= 0.1, "exponent {alpha}");
}

/// The one-sided overlap form leaves an error linear in delta on f_lg. At the
/// special point the exact f_lg is zero, so that bias is the whole element and
/// halving delta halves it. The criterion is kept as stated.
#[test]
#[ignore = "literal off-diagonal carries an O(delta) bias; change is about 4% at delta = 1e-4"]
fn step_halving_converges() {
    let change = step_halving_change(shape(5, 1), special(), 32, 1e-4).unwrap();
    assert!(change < 1e-3, "relative change {change}");
}

#[test]
fn step_halving_per_element() {
    let sh = shape(5, 1);
    let coarse = qfi_matrix(sh, special(), 32, 1e-4).unwrap();
    let fine = qfi_matrix(sh, special(), 32, 5e-5).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    assert!(rel(coarse.f_ll, fine.f_ll) < 1e-3);
    assert!(rel(coarse.f_gg, fine.f_gg) < 1e-3);
    assert!(coarse.cross_check.relative_difference(&fine.cross_check) < 1e-3);
    // The off-diagonal bias halves with the step.
    assert!(
        (coarse.f_lg / fine.f_lg - 2.0).abs() < 0.05,
        "{} {}",
        coarse.f_lg,
        fine.f_lg
    );
    assert!(coarse.cross_check.f_lg.abs() < 1e-6);
}

#[test]
fn disagreement_flag_tracks_relative_difference() {
    for (sh, n) in [(shape(5, 1), 32), (shape(4, 2), 20), (shape(3, 3), 12)] {
        let q = qfi_matrix(sh, DriveParams::new(2.2, 0.7), n, DEFAULT_DELTA).unwrap();
        let diff = q.elements().relative_difference(&q.cross_check);
        assert_eq!(q.disagreement, diff > AGREEMENT_TOLERANCE, "{sh}: {q:?}");
        // The literal diagonal adds the squared connection term instead of subtracting it.
        let scale = q.f_ll.max(q.f_gg);
        assert!(q.f_ll >= q.cross_check.f_ll - 1e-6 * scale, "{sh}");
        assert!(q.f_gg >= q.cross_check.f_gg - 1e-6 * scale, "{sh}");
    }
}

#[test]
fn tiny_step_is_reported() {
    let r = qfi_matrix(shape(3, 1), special(), 8, 1e-9);
    assert!(matches!(r, Err(DtcError::StepSize(_))), "{r:?}");
    assert!(matches!(
        qfi_matrix(shape(3, 1), special(), 8, 0.0),
        Err(DtcError::Validation(_))
    ));
    assert!(qfi_matrix(shape(3, 1), special(), 8, f64::NAN).is_err());
}

#[test]
fn global_phase_does_not_matter() {
    let sh = shape(4, 3);
    let p = DriveParams::new(1.3, 2.1);
    let states = ShiftedStates::evolve(sh, p, 15, DEFAULT_DELTA).unwrap();
    let base = qfi_from_states(&states, 15, DEFAULT_DELTA).unwrap();
    for theta in [0.3, 1.9, 4.4] {
        let rotated = states.with_common_phase(Complex64::from_polar(1.0, theta));
        let q = qfi_from_states(&rotated, 15, DEFAULT_DELTA).unwrap();
        let scale = base.f_ll.abs().max(base.f_gg.abs());
        for (a, b) in [
            (q.f_ll, base.f_ll),
            (q.f_gg, base.f_gg),
            (q.f_lg, base.f_lg),
        ] {
            assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
        }
    }
}

#[test]
fn weighted_uncertainty_examples() {
    // det / trace of diag(F, F) is F / 2.
    for f in [0.5, 3.0, 120.0] {
        assert!((weighted_uncertainty(&manual(f, f, 0.0)).unwrap() - f / 2.0).abs() < 1e-12);
    }
    let (a, b) = (4.0, 9.0);
    assert!(matches!(
        weighted_uncertainty(&manual(a, b, 6.0)),
        Err(DtcError::DegenerateInformation(_))
    ));
    assert!(matches!(
        weighted_uncertainty(&manual(a, b, 6.5)),
        Err(DtcError::DegenerateInformation(_))
    ));
    let g = weighted_uncertainty(&manual(a, b, 1.0)).unwrap();
    assert!((g - 35.0 / 13.0).abs() < 1e-12);
}

#[test]
fn power_law_examples() {
    let sq: Vec<(f64, f64)> = (1..=10).map(|x| (x as f64, 7.0 * (x * x) as f64)).collect();
    let (e, r2) = fit_power_law(&sq).unwrap();
    assert!((e - 2.0).abs() < 1e-10 && (r2 - 1.0).abs() < 1e-12);
    let lin: Vec<(f64, f64)> = (1..=6).map(|x| (x as f64, 0.3 * x as f64)).collect();
    assert!((fit_power_law(&lin).unwrap().0 - 1.0).abs() < 1e-12);
    assert!(matches!(
        fit_power_law(&sq[..2]),
        Err(DtcError::InsufficientData(_))
    ));
    assert!(matches!(
        fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
        Err(DtcError::NonPositive(_))
    ));
}

/// Size exponents per congruence class of `n_sat`, each fitted separately.
/// Several points have a singular Fisher matrix at n = 48 (for example
/// n_sat = 3 with s = 1/2), so the fit cannot be formed and the claimed
/// exponents are not reproduced. Run with `--ignored` to see the numbers.
#[test]
#[ignore = "claimed size exponents are not reproduced; several G values vanish"]
fn size_exponents_by_congruence_class() {
    let classes: [(usize, &[usize], f64); 6] = [
        (1, &[2, 3, 5, 6, 7], 2.0),
        (1, &[4, 8, 12], 1.0),
        (2, &[2, 3, 5, 6, 7], 1.0),
        (2, &[4, 8, 12], 0.0),
        (4, &[2, 3, 5, 6, 7], 1.0),
        (4, &[4, 8, 12], 1.0),
    ];
    let mut failures = Vec::new();
    for (two_s, sizes, beta) in classes {
        let values: Vec<(f64, Result<f64, DtcError>)> = sizes
            .iter()
            .map(|&n| (n as f64, g_at(shape(n, two_s), 48)))
            .collect();
        let pts: Vec<(f64, f64)> = values
            .iter()
            .filter_map(|(n, g)| g.as_ref().ok().map(|g| (*n, *g)))
            .collect();
        let fitted = if pts.len() == values.len() {
            fit_power_law(&pts).ok().map(|f| f.0)
        } else {
            None
        };
        let ok = fitted.is_some_and(|b| (b - beta).abs() <= 0.25);
        println!(
            "two_s={two_s} sizes={sizes:?} expected beta {beta}: fitted {fitted:?}, G {values:?}"
        );
        if !ok {
            failures.push((two_s, sizes, fitted));
        }
    }
    assert!(failures.is_empty(), "classes off target: {failures:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn diagonal_elements_are_nonnegative(
        n in 1usize..6,
        two_s in 1usize..5,
        lambda in 0.0..(2.0 * TAU),
        g in 0.0..TAU,
        periods in 1usize..30,
    ) {
        match qfi_matrix(shape(n, two_s), DriveParams::new(lambda, g), periods, DEFAULT_DELTA) {
            Ok(q) => {
                prop_assert!(q.f_ll >= -1e-6 && q.f_gg >= -1e-6);
                prop_assert!(q.cross_check.f_ll >= -1e-6 && q.cross_check.f_gg >= -1e-6);
            }
            Err(DtcError::StepSize(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
