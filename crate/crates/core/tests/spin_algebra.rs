use dtc_core::spin::{axis_eigenbasis, coherent_axis_state, spin_matrices, Axis, Sign};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

type M = DMatrix<Complex64>;

fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

#[test]
fn spin_half_matrices() {
    let ops = spin_matrices(1).unwrap();
    let h = Complex64::new(0.5, 0.0);
    let z = Complex64::new(0.0, 0.0);
    assert_eq!(ops.sz, M::from_row_slice(2, 2, &[h, z, z, -h]));
    assert_eq!(ops.sx, M::from_row_slice(2, 2, &[z, h, h, z]));
}

#[test]
fn spin_two_diagonal_and_ladder_entry() {
    let ops = spin_matrices(4).unwrap();
    for (l, m) in [2.0, 1.0, 0.0, -1.0, -2.0].iter().enumerate() {
        assert!((ops.sz[(l, l)].re - m).abs() < 1e-15);
    }
    // <m=2| S^x |m=1> = sqrt(s(s+1) - m(m+1)) / 2 with m = 1 on the ket.
    let oracle = (2.0f64 * 3.0 - 1.0 * 2.0).sqrt() / 2.0;
    assert!((ops.sx[(0, 1)].re - oracle).abs() < 1e-14);
    assert!((ops.sx[(0, 1)].re - 1.0).abs() < 1e-14);
}

#[test]
fn zero_spin_rejected() {
    assert!(spin_matrices(0).is_err());
    assert!(axis_eigenbasis(0, Axis::X).is_err());
}

#[test]
fn algebra_for_all_small_spins() {
    let i = Complex64::new(0.0, 1.0);
    for two_s in 1..=12 {
        let ops = spin_matrices(two_s).unwrap();
        let s = two_s as f64 / 2.0;
        let d = ops.dim();
        for a in Axis::ALL {
            let m = ops.component(a);
            assert!(
                max_abs(&(m - m.adjoint())) < 1e-10,
                "two_s={two_s} {a} not Hermitian"
            );
        }
        let comm = |a: &M, b: &M| a * b - b * a;
        assert!(max_abs(&(comm(&ops.sx, &ops.sy) - &ops.sz * i)) < 1e-10);
        assert!(max_abs(&(comm(&ops.sy, &ops.sz) - &ops.sx * i)) < 1e-10);
        assert!(max_abs(&(comm(&ops.sz, &ops.sx) - &ops.sy * i)) < 1e-10);
        let casimir = &ops.sx * &ops.sx + &ops.sy * &ops.sy + &ops.sz * &ops.sz;
        let target = M::identity(d, d) * Complex64::new(s * (s + 1.0), 0.0);
        assert!(
            max_abs(&(casimir - target)) < 1e-10,
            "Casimir two_s={two_s}"
        );
    }
}

#[test]
fn spin_half_x_basis() {
    let v = axis_eigenbasis(1, Axis::X).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let expect = [[r, r], [r, -r]];
    for row in 0..2 {
        for col in 0..2 {
            assert!((v[(row, col)] - Complex64::new(expect[row][col], 0.0)).norm() < 1e-15);
        }
    }
    assert_eq!(axis_eigenbasis(1, Axis::Z).unwrap(), M::identity(2, 2));
}

#[test]
fn spin_one_x_basis_diagonalizes() {
    let ops = spin_matrices(2).unwrap();
    let v = axis_eigenbasis(2, Axis::X).unwrap();
    let d = v.adjoint() * &ops.sx * &v;
    let target = M::from_diagonal(&nalgebra::DVector::from_vec(
        [1.0, 0.0, -1.0]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect(),
    ));
    assert!(max_abs(&(d - target)) < 1e-12);
}

#[test]
fn eigenbases_orthonormal_diagonal_and_phase_fixed() {
    for two_s in 1..=12 {
        let ops = spin_matrices(two_s).unwrap();
        let dim = two_s + 1;
        for axis in Axis::ALL {
            let v = axis_eigenbasis(two_s, axis).unwrap();
            assert!(max_abs(&(v.adjoint() * &v - M::identity(dim, dim))) < 1e-12);
            let d = v.adjoint() * ops.component(axis) * &v;
            for r in 0..dim {
                for c in 0..dim {
                    let expect = if r == c {
                        two_s as f64 / 2.0 - r as f64
                    } else {
                        0.0
                    };
                    assert!(
                        (d[(r, c)] - Complex64::new(expect, 0.0)).norm() < 1e-12,
                        "two_s={two_s} {axis}"
                    );
                }
            }
            for c in 0..dim {
                let first = v
                    .column(c)
                    .iter()
                    .copied()
                    .find(|z| z.norm() > 1e-12)
                    .unwrap();
                assert!(first.im.abs() < 1e-12 && first.re > 0.0);
            }
        }
    }
}

#[test]
fn spin_half_coherent_states() {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let px = coherent_axis_state(1, Axis::X, Sign::Plus).unwrap();
    assert!((px.amplitudes()[0] - Complex64::new(r, 0.0)).norm() < 1e-15);
    assert!((px.amplitudes()[1] - Complex64::new(r, 0.0)).norm() < 1e-15);

    let my = coherent_axis_state(1, Axis::Y, Sign::Minus).unwrap();
    let expect = [Complex64::new(r, 0.0), Complex64::new(0.0, -r)];
    let overlap: Complex64 = my
        .amplitudes()
        .iter()
        .zip(expect)
        .map(|(a, b)| a.conj() * b)
        .sum();
    assert!((overlap.norm() - 1.0).abs() < 1e-14);
}

#[test]
fn y_pole_in_x_basis_is_binomial() {
    // Expansion of |+s>^y on the x eigenbasis: magnitudes sqrt(C(2s, l)) / 2^s,
    // relative phases (-i)^l under the column-phase convention used here.
    for two_s in [1usize, 2, 3, 5, 8] {
        let y = coherent_axis_state(two_s, Axis::Y, Sign::Plus).unwrap();
        let vx = axis_eigenbasis(two_s, Axis::X).unwrap();
        let coeffs = vx.adjoint() * y.amplitudes();
        let anchor = coeffs[0] / coeffs[0].norm();
        for l in 0..=two_s {
            let mag = binomial(two_s as u64, l as u64).sqrt() / 2f64.powf(two_s as f64 / 2.0);
            let phase = Complex64::new(0.0, -1.0).powu(l as u32);
            let expect = anchor * phase * mag;
            assert!((coeffs[l] - expect).norm() < 1e-12, "two_s={two_s} l={l}");
        }
    }
}

proptest! {
    #[test]
    fn coherent_states_are_extremal(two_s in 1usize..=12, axis_idx in 0usize..3, minus in any::<bool>()) {
        let axis = Axis::ALL[axis_idx];
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let state = coherent_axis_state(two_s, axis, sign).unwrap();
        let ops = spin_matrices(two_s).unwrap();
        let expect = sign.value() * two_s as f64 / 2.0;
        prop_assert!((state.expectation(ops.component(axis)) - expect).abs() < 1e-12);
        let norm: f64 = state.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }
}
