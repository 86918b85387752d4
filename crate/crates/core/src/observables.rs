//! Stroboscopic measurements: magnetizations, entanglement entropy and
//! fidelity against a reference state.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::floquet::{evolve, precompute, DriveParams};
use crate::hilbert::{
    central_entropy, fidelity, reduced_central_density, x_polarized_state, PureState, SystemShape,
};
use crate::spin::{spin_matrices, Axis};

/// Which subsystem a magnetization refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Satellites,
    Central,
}

/// Observables after period `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub n: usize,
    /// Satellite-averaged <S^x>, in [-1/2, 1/2].
    pub m_sat_x: f64,
    /// Central <S_c^x>, in [-s, s].
    pub m_c_x: f64,
    /// Central-satellite entanglement entropy in nats.
    pub entropy: f64,
    pub fidelity_initial: f64,
}

/// Per-spin satellite average of <S_i^axis> from bit-pair contractions.
fn satellite_magnetization(state: &PureState, axis: Axis) -> f64 {
    let shape = state.shape();
    let d = shape.central_dim();
    let amps = state.amplitudes();
    let mut total = 0.0;
    for bit in 0..shape.n_sat() {
        let stride = d << bit;
        let mut acc = 0.0;
        for block in amps.chunks_exact(2 * stride) {
            let (up, down) = block.split_at(stride);
            acc += match axis {
                // <sigma^x> = 2 Re sum conj(a_up) a_down
                Axis::X => {
                    up.iter()
                        .zip(down)
                        .map(|(a, b)| (a.conj() * b).re)
                        .sum::<f64>()
                        * 2.0
                }
                // <sigma^y> = 2 Im sum conj(a_up) a_down
                Axis::Y => {
                    up.iter()
                        .zip(down)
                        .map(|(a, b)| (a.conj() * b).im)
                        .sum::<f64>()
                        * 2.0
                }
                Axis::Z => {
                    up.iter().map(|a| a.norm_sqr()).sum::<f64>()
                        - down.iter().map(|b| b.norm_sqr()).sum::<f64>()
                }
            };
        }
        total += 0.5 * acc;
    }
    total / shape.n_sat() as f64
}

fn central_operator(two_s: usize, axis: Axis) -> DMatrix<Complex64> {
    spin_matrices(two_s)
        .expect("validated shape")
        .component(axis)
        .clone()
}

/// Satellite-averaged or central expectation of S^axis.
pub fn magnetization(state: &PureState, target: Target, axis: Axis) -> f64 {
    match target {
        Target::Satellites => satellite_magnetization(state, axis),
        Target::Central => {
            let rho = reduced_central_density(state);
            rho.expectation(&central_operator(state.shape().two_s(), axis))
                .re
        }
    }
}

/// Bundles the x magnetizations, entropy and reference fidelity.
pub fn record(state: &PureState, n: usize, reference: &PureState) -> Result<TrajectoryRecord> {
    Ok(TrajectoryRecord {
        n,
        m_sat_x: magnetization(state, Target::Satellites, Axis::X),
        m_c_x: magnetization(state, Target::Central, Axis::X),
        entropy: central_entropy(state),
        fidelity_initial: fidelity(reference, state)?,
    })
}

/// Evolves the x-polarized state and records every period, starting with
/// the `n = 0` record of the initial state.
pub fn trajectory(
    shape: SystemShape,
    params: DriveParams,
    n_periods: usize,
) -> Result<Vec<TrajectoryRecord>> {
    let tables = precompute(shape, params)?;
    let initial = x_polarized_state(shape);
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(n_periods + 1);
    out.push(record(&state, 0, &initial)?);
    let rest = evolve(&mut state, &tables, n_periods, |n, st| {
        record(st, n, &initial)
    })?;
    for r in rest {
        out.push(r?);
    }
    Ok(out)
}

/// Evolves the x-polarized state `n_periods` periods and returns it.
pub fn evolved_state(
    shape: SystemShape,
    params: DriveParams,
    n_periods: usize,
) -> Result<PureState> {
    let tables = precompute(shape, params)?;
    let mut state = x_polarized_state(shape);
    crate::floquet::evolve_silent(&mut state, &tables, n_periods)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::uniform_product_state;
    use crate::spin::{coherent_axis_state, Sign};

    #[test]
    fn polarized_values() {
        let shape = SystemShape::new(3, 5).unwrap();
        let st = x_polarized_state(shape);
        assert!((magnetization(&st, Target::Satellites, Axis::X) - 0.5).abs() < 1e-14);
        assert!((magnetization(&st, Target::Central, Axis::X) - 2.5).abs() < 1e-13);
        let r = record(&st, 0, &st).unwrap();
        assert!(r.entropy.abs() < 1e-12 && (r.fidelity_initial - 1.0).abs() < 1e-14);
    }

    #[test]
    fn z_product_has_no_x_magnetization() {
        let shape = SystemShape::new(4, 2).unwrap();
        let up = coherent_axis_state(1, Axis::Z, Sign::Plus).unwrap();
        let c = coherent_axis_state(2, Axis::Z, Sign::Plus).unwrap();
        let st = uniform_product_state(shape, &up, &c).unwrap();
        assert!(magnetization(&st, Target::Satellites, Axis::X).abs() < 1e-15);
        assert!((magnetization(&st, Target::Satellites, Axis::Z) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn y_magnetization_sign() {
        let shape = SystemShape::new(2, 3).unwrap();
        let y = coherent_axis_state(1, Axis::Y, Sign::Minus).unwrap();
        let c = coherent_axis_state(3, Axis::Y, Sign::Plus).unwrap();
        let st = uniform_product_state(shape, &y, &c).unwrap();
        assert!((magnetization(&st, Target::Satellites, Axis::Y) + 0.5).abs() < 1e-14);
        assert!((magnetization(&st, Target::Central, Axis::Y) - 1.5).abs() < 1e-13);
    }
}
