//! Joint satellite-central Hilbert space: layout, states, overlaps and the
//! central reduced density matrix.
//!
//! Global index = `k_sat * (two_s + 1) + l_c`. Satellite site `i` is bit `i`
//! of `k_sat` (bit set = spin down along z); `l_c = 0` is the central `m = +s`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DtcError, Result};
use crate::spin::{coherent_axis_state, Axis, LocalState, Sign};

/// Largest joint dimension accepted for a state vector (16 GiB of amplitudes).
pub const MAX_STATE_DIM: usize = 1 << 30;

/// Number of satellites and twice the central spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemShape {
    n_sat: usize,
    two_s: usize,
}

impl SystemShape {
    pub fn new(n_sat: usize, two_s: usize) -> Result<Self> {
        if n_sat == 0 {
            return Err(DtcError::InvalidShape("n_sat must be at least 1".into()));
        }
        if two_s == 0 {
            return Err(DtcError::InvalidShape("two_s must be at least 1".into()));
        }
        let shape = Self { n_sat, two_s };
        let dim = u32::try_from(n_sat)
            .ok()
            .and_then(|n| 1usize.checked_shl(n))
            .filter(|_| n_sat < usize::BITS as usize)
            .and_then(|sat| sat.checked_mul(two_s + 1));
        match dim {
            Some(d) if d <= MAX_STATE_DIM => Ok(shape),
            _ => Err(DtcError::Capacity(format!(
                "dimension 2^{n_sat}*{} exceeds the state budget of {MAX_STATE_DIM}",
                two_s + 1
            ))),
        }
    }

    pub fn n_sat(&self) -> usize {
        self.n_sat
    }

    pub fn two_s(&self) -> usize {
        self.two_s
    }

    /// Central spin quantum number s.
    pub fn spin(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    pub fn central_dim(&self) -> usize {
        self.two_s + 1
    }

    pub fn satellite_dim(&self) -> usize {
        1 << self.n_sat
    }

    pub fn dim(&self) -> usize {
        self.satellite_dim() * self.central_dim()
    }

    pub fn encode(&self, k_sat: usize, l_c: usize) -> usize {
        k_sat * self.central_dim() + l_c
    }

    pub fn decode(&self, index: usize) -> (usize, usize) {
        (index / self.central_dim(), index % self.central_dim())
    }
}

impl std::fmt::Display for SystemShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.two_s.is_multiple_of(2) {
            write!(f, "(n_sat={}, s={})", self.n_sat, self.two_s / 2)
        } else {
            write!(f, "(n_sat={}, s={}/2)", self.n_sat, self.two_s)
        }
    }
}

/// Normalized amplitude vector over the joint space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    shape: SystemShape,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps amplitudes whose norm is 1 within 1e-10.
    pub fn new(shape: SystemShape, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != shape.dim() {
            return Err(DtcError::ShapeMismatch(format!(
                "expected {} amplitudes for {shape}, got {}",
                shape.dim(),
                amplitudes.len()
            )));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(DtcError::Validation(format!(
                "state norm {norm} differs from 1"
            )));
        }
        Ok(Self { shape, amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(shape: SystemShape, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != shape.dim() {
            return Err(DtcError::ShapeMismatch(format!(
                "expected {} amplitudes for {shape}, got {}",
                shape.dim(),
                amplitudes.len()
            )));
        }
        let n = norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(DtcError::Validation(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(Self { shape, amplitudes })
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Mutable access for kernels; callers are responsible for keeping the norm.
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Copy multiplied by a global phase factor of unit modulus.
    pub fn with_phase(&self, phase: Complex64) -> PureState {
        PureState {
            shape: self.shape,
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    /// Largest elementwise modulus of the difference with another state.
    pub fn sup_distance(&self, other: &PureState) -> Result<f64> {
        same_shape(self, other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn same_shape(a: &PureState, b: &PureState) -> Result<()> {
    if a.shape != b.shape {
        return Err(DtcError::ShapeMismatch(format!(
            "{} vs {}",
            a.shape, b.shape
        )));
    }
    Ok(())
}

/// Tensor product of satellite states (site 0 first) and the central state.
pub fn product_state(
    shape: SystemShape,
    sat_locals: &[LocalState],
    central_local: &LocalState,
) -> Result<PureState> {
    if sat_locals.len() != shape.n_sat() {
        return Err(DtcError::ShapeMismatch(format!(
            "{} satellite states supplied for {} satellites",
            sat_locals.len(),
            shape.n_sat()
        )));
    }
    if let Some(bad) = sat_locals.iter().position(|s| s.dim() != 2) {
        return Err(DtcError::ShapeMismatch(format!(
            "satellite {bad} is not a two-level state"
        )));
    }
    if central_local.dim() != shape.central_dim() {
        return Err(DtcError::ShapeMismatch(format!(
            "central state has dimension {}, expected {}",
            central_local.dim(),
            shape.central_dim()
        )));
    }
    let mut amps: Vec<Complex64> = central_local.amplitudes().iter().copied().collect();
    amps.reserve(shape.dim() - amps.len());
    for site in sat_locals {
        let (up, down) = (site.amplitudes()[0], site.amplitudes()[1]);
        let low = amps.len();
        amps.extend_from_within(..);
        amps[..low].iter_mut().for_each(|a| *a *= up);
        amps[low..].iter_mut().for_each(|a| *a *= down);
    }
    PureState::normalized(shape, amps)
}

/// Product of identical satellite states with a central state.
pub fn uniform_product_state(
    shape: SystemShape,
    sat: &LocalState,
    central: &LocalState,
) -> Result<PureState> {
    product_state(shape, &vec![sat.clone(); shape.n_sat()], central)
}

/// All satellites in |+x>, central spin in |+s>^x.
pub fn x_polarized_state(shape: SystemShape) -> PureState {
    let sat = coherent_axis_state(1, Axis::X, Sign::Plus).expect("spin-1/2 is valid");
    let central = coherent_axis_state(shape.two_s(), Axis::X, Sign::Plus).expect("validated shape");
    uniform_product_state(shape, &sat, &central).expect("dimensions agree by construction")
}

/// Sum of conj(a) * b.
pub fn inner(a: &PureState, b: &PureState) -> Result<Complex64> {
    same_shape(a, b)?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// |<a|b>|^2, insensitive to global phases.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr().min(1.0))
}

/// Hermitian, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and spectrum within 1e-10.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(DtcError::InvalidShape(
                "density matrix must be square and nonempty".into(),
            ));
        }
        let asym = (&entries - entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if asym > 1e-10 {
            return Err(DtcError::Validation(format!(
                "matrix is not Hermitian (deviation {asym:e})"
            )));
        }
        let trace = entries.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(DtcError::Validation(format!(
                "trace {trace} differs from 1"
            )));
        }
        let rho = Self { entries };
        if let Some(&p) = rho
            .eigenvalues()
            .iter()
            .find(|&&p| !(-1e-10..=1.0 + 1e-10).contains(&p))
        {
            return Err(DtcError::Validation(format!(
                "eigenvalue {p} outside [0, 1]"
            )));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Real spectrum, unsorted.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().collect()
    }

    /// Tr(rho * op).
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Complex64 {
        (&self.entries * op).trace()
    }
}

/// Partial trace over all satellites.
pub fn reduced_central_density(state: &PureState) -> DensityMatrix {
    let d = state.shape.central_dim();
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    for block in state.amplitudes.chunks_exact(d) {
        for r in 0..d {
            let ar = block[r];
            for c in r..d {
                rho[(r, c)] += ar * block[c].conj();
            }
        }
    }
    for r in 0..d {
        rho[(r, r)].im = 0.0;
        for c in r + 1..d {
            rho[(c, r)] = rho[(r, c)].conj();
        }
    }
    let trace = rho.trace().re;
    DensityMatrix {
        entries: rho / Complex64::new(trace, 0.0),
    }
}

/// -sum p ln p over the spectrum, skipping p <= 1e-14.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&p| p > 1e-14)
        .map(|p| -p * p.ln())
        .sum();
    s.max(0.0)
}

/// Entanglement entropy between the central spin and the satellites.
pub fn central_entropy(state: &PureState) -> f64 {
    von_neumann_entropy(&reduced_central_density(state))
}
