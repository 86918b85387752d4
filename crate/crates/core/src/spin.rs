//! Spin-s operator matrices, axis eigenbases and extremal coherent states.
//!
//! Basis vectors are the S^z eigenstates in descending order: row/column `l`
//! holds `m = s - l`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DtcError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Cartesian spin axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = DtcError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(DtcError::Validation(format!("unknown axis '{other}'"))),
        }
    }
}

/// Orientation of an extremal state along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Spin component matrices for a single spin with `d = two_s + 1` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub two_s: usize,
    pub sx: DMatrix<Complex64>,
    pub sy: DMatrix<Complex64>,
    pub sz: DMatrix<Complex64>,
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.two_s + 1
    }

    pub fn component(&self, axis: Axis) -> &DMatrix<Complex64> {
        match axis {
            Axis::X => &self.sx,
            Axis::Y => &self.sy,
            Axis::Z => &self.sz,
        }
    }
}

/// A normalized single-site state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalState {
    amplitudes: DVector<Complex64>,
}

impl LocalState {
    /// Wraps an already normalized vector; rejects norms off by more than 1e-12.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(DtcError::InvalidShape(
                "local state has zero dimension".into(),
            ));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(DtcError::Validation(format!(
                "local state norm {norm} differs from 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(DtcError::Validation(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Ok(Self {
            amplitudes: amplitudes / Complex64::new(norm, 0.0),
        })
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes))
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// Expectation value of a Hermitian operator of matching dimension.
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> f64 {
        (self.amplitudes.adjoint() * op * &self.amplitudes)[(0, 0)].re
    }

    /// Multiplies by a global phase factor.
    pub fn with_phase(&self, phase: Complex64) -> LocalState {
        LocalState {
            amplitudes: &self.amplitudes * phase,
        }
    }
}

fn check_two_s(two_s: usize) -> Result<()> {
    if two_s == 0 {
        return Err(DtcError::InvalidShape("two_s must be at least 1".into()));
    }
    Ok(())
}

/// Builds S^x, S^y, S^z from Condon-Shortley ladder operators.
pub fn spin_matrices(two_s: usize) -> Result<SpinOperators> {
    check_two_s(two_s)?;
    let d = two_s + 1;
    let s = two_s as f64 / 2.0;
    let mut raise = DMatrix::<Complex64>::zeros(d, d);
    let mut sz = DMatrix::<Complex64>::zeros(d, d);
    for l in 0..d {
        let m = s - l as f64;
        sz[(l, l)] = Complex64::new(m, 0.0);
        if l > 0 {
            // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>, and |m+1> sits at row l-1.
            raise[(l - 1, l)] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let lower = raise.adjoint();
    let sx = (&raise + &lower) * Complex64::new(0.5, 0.0);
    let sy = (&raise - &lower) * Complex64::new(0.0, -0.5);
    Ok(SpinOperators { two_s, sx, sy, sz })
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Wigner small-d matrix at beta = pi/2 in the descending-m layout, i.e. the
/// matrix of exp(-i pi/2 S^y). Column `l` is the S^z eigenstate `m = s - l`
/// rotated onto the x axis.
fn wigner_d_half_pi(two_s: usize) -> DMatrix<f64> {
    let j = two_s;
    let lf = ln_factorials(two_s);
    let scale = -(two_s as f64) * 0.5 * std::f64::consts::LN_2;
    DMatrix::from_fn(j + 1, j + 1, |row, col| {
        // a = j+m', b = j-m', c = j+m, e = j-m in integer units.
        let (a, b) = (j - row, row);
        let (c, e) = (j - col, col);
        let k_lo = c.saturating_sub(a);
        let k_hi = c.min(b);
        let mut sum = 0.0;
        for k in k_lo..=k_hi {
            let ln_mag = 0.5 * (lf[a] + lf[b] + lf[c] + lf[e])
                - lf[c - k]
                - lf[k]
                - lf[b - k]
                - lf[k + a - c]
                + scale;
            let sign = if (k + a + 2 * j - c).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sum += sign * ln_mag.exp();
        }
        sum
    })
}

fn fix_column_phases(mut v: DMatrix<Complex64>) -> DMatrix<Complex64> {
    for mut col in v.column_iter_mut() {
        let lead = col.iter().copied().find(|z| z.norm() > 1e-12);
        if let Some(z) = lead {
            let phase = z.conj() / z.norm();
            col.iter_mut().for_each(|c| *c *= phase);
            col.iter_mut()
                .filter(|c| c.norm() < 1e-15)
                .for_each(|c| *c = ZERO);
        }
    }
    v
}

/// Extremal state `R|+-s>^z` where R rotates the z axis onto the x axis by
/// exp(-i pi/2 S^y). Unlike `axis_eigenbasis` its phase follows the rotation,
/// so the minus pole carries a factor (-1)^(2s) relative to the basis column.
pub fn rotated_x_pole(two_s: usize, sign: Sign) -> Result<LocalState> {
    check_two_s(two_s)?;
    let d = wigner_d_half_pi(two_s);
    let col = match sign {
        Sign::Plus => 0,
        Sign::Minus => two_s,
    };
    LocalState::normalized(d.column(col).map(|x| Complex64::new(x, 0.0)))
}

/// Orthonormal eigenvectors of S^axis as columns, ordered by descending
/// eigenvalue, each column scaled so its first nonzero entry is real positive.
pub fn axis_eigenbasis(two_s: usize, axis: Axis) -> Result<DMatrix<Complex64>> {
    check_two_s(two_s)?;
    let d = two_s + 1;
    let s = two_s as f64 / 2.0;
    let basis = match axis {
        Axis::Z => DMatrix::identity(d, d),
        Axis::X => wigner_d_half_pi(two_s).map(|x| Complex64::new(x, 0.0)),
        Axis::Y => {
            // exp(-i pi/2 S^z) carries the x axis onto the y axis.
            let dx = wigner_d_half_pi(two_s);
            DMatrix::from_fn(d, d, |row, col| {
                let m = s - row as f64;
                Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * m) * dx[(row, col)]
            })
        }
    };
    Ok(fix_column_phases(basis))
}

/// The extremal eigenstate |+-s> of S^axis with the `axis_eigenbasis` phase.
pub fn coherent_axis_state(two_s: usize, axis: Axis, sign: Sign) -> Result<LocalState> {
    let v = axis_eigenbasis(two_s, axis)?;
    let col = match sign {
        Sign::Plus => 0,
        Sign::Minus => two_s,
    };
    LocalState::normalized(v.column(col).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn spin_half_matches_pauli_over_two() {
        let ops = spin_matrices(1).unwrap();
        assert!(close(ops.sz[(0, 0)], Complex64::new(0.5, 0.0), 1e-15));
        assert!(close(ops.sz[(1, 1)], Complex64::new(-0.5, 0.0), 1e-15));
        assert!(close(ops.sx[(0, 1)], Complex64::new(0.5, 0.0), 1e-15));
        assert!(close(ops.sx[(1, 0)], Complex64::new(0.5, 0.0), 1e-15));
        assert!(close(ops.sy[(0, 1)], Complex64::new(0.0, -0.5), 1e-15));
    }

    #[test]
    fn spin_two_ladder_entry() {
        let ops = spin_matrices(4).unwrap();
        let diag: Vec<f64> = (0..5).map(|l| ops.sz[(l, l)].re).collect();
        assert_eq!(diag, vec![2.0, 1.0, 0.0, -1.0, -2.0]);
        // row m=2 is l=0, column m=1 is l=1
        assert!(close(ops.sx[(0, 1)], Complex64::new(1.0, 0.0), 1e-14));
    }

    #[test]
    fn zero_spin_is_rejected() {
        assert!(matches!(spin_matrices(0), Err(DtcError::InvalidShape(_))));
        assert!(axis_eigenbasis(0, Axis::X).is_err());
    }

    #[test]
    fn spin_half_x_basis() {
        let v = axis_eigenbasis(1, Axis::X).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(v[(0, 0)], Complex64::new(r, 0.0), 1e-15));
        assert!(close(v[(1, 0)], Complex64::new(r, 0.0), 1e-15));
        assert!(close(v[(0, 1)], Complex64::new(r, 0.0), 1e-15));
        assert!(close(v[(1, 1)], Complex64::new(-r, 0.0), 1e-15));
        assert_eq!(
            axis_eigenbasis(1, Axis::Z).unwrap(),
            DMatrix::identity(2, 2)
        );
    }

    #[test]
    fn spin_half_y_minus() {
        let st = coherent_axis_state(1, Axis::Y, Sign::Minus).unwrap();
        let a = st.amplitudes();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(a[0], Complex64::new(r, 0.0), 1e-15));
        assert!(close(a[1], Complex64::new(0.0, -r), 1e-15));
    }

    #[test]
    fn rotated_pole_phase() {
        for two_s in 1..8 {
            let basis = coherent_axis_state(two_s, Axis::X, Sign::Minus).unwrap();
            let rot = rotated_x_pole(two_s, Sign::Minus).unwrap();
            let factor = if two_s % 2 == 0 { 1.0 } else { -1.0 };
            let diff = (rot.amplitudes() - basis.amplitudes() * Complex64::new(factor, 0.0)).norm();
            assert!(diff < 1e-13, "two_s={two_s}");
            let plus = (rotated_x_pole(two_s, Sign::Plus).unwrap().amplitudes()
                - coherent_axis_state(two_s, Axis::X, Sign::Plus)
                    .unwrap()
                    .amplitudes())
            .norm();
            assert!(plus < 1e-13);
        }
    }
}
