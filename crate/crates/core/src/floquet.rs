//! Matrix-free Floquet propagation.
//!
//! One period is `U = U_0 U_d` with `T = 1`: the kick
//! `U_d = exp(-i g_c S_c^z) prod_i exp(-i g_s S_i^z)` acts first, then the
//! star interaction `U_0 = exp(i lambda sum_i S_i^x S_c^x)`.
//!
//! `U_d` is diagonal in the z basis. `U_0` is diagonal in the joint x basis,
//! reached by a Hadamard on every satellite qubit and the central x-eigenbasis
//! rotation, so a period costs O(D (n_sat + two_s)) operations.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DtcError, Result};
use crate::hilbert::{PureState, SystemShape};
use crate::spin::{axis_eigenbasis, spin_matrices, Axis};

/// Largest joint dimension accepted by the dense oracle.
pub const ORACLE_MAX_DIM: usize = 4096;

/// Largest joint dimension for which step tables are built (two tables of
/// complex numbers, 8 GiB at the limit).
pub const MAX_TABLE_DIM: usize = 1 << 28;

/// Interaction strength and kick angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    pub lambda: f64,
    pub g_s: f64,
    pub g_c: f64,
}

impl DriveParams {
    /// Shared kick angle for satellites and central spin.
    pub fn new(lambda: f64, g: f64) -> Self {
        Self {
            lambda,
            g_s: g,
            g_c: g,
        }
    }

    pub fn with_kicks(lambda: f64, g_s: f64, g_c: f64) -> Self {
        Self { lambda, g_s, g_c }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.lambda, self.g_s, self.g_c]
            .iter()
            .all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(DtcError::Validation(format!(
                "drive parameters must be finite: {self:?}"
            )))
        }
    }
}

/// Precomputed diagonals and the central basis change for one drive point.
#[derive(Debug, Clone)]
pub struct StepTables {
    shape: SystemShape,
    params: DriveParams,
    kick_phases: Vec<Complex64>,
    interaction_phases: Vec<Complex64>,
    central_x_rotation: DMatrix<Complex64>,
    // Row-major copies used by the kernel.
    rot: Vec<Complex64>,
    rot_adj: Vec<Complex64>,
}

impl StepTables {
    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn params(&self) -> DriveParams {
        self.params
    }

    pub fn kick_phases(&self) -> &[Complex64] {
        &self.kick_phases
    }

    pub fn interaction_phases(&self) -> &[Complex64] {
        &self.interaction_phases
    }

    /// Columns are the central S^x eigenvectors in the z basis.
    pub fn central_x_rotation(&self) -> &DMatrix<Complex64> {
        &self.central_x_rotation
    }
}

/// Builds the kick and interaction tables.
pub fn precompute(shape: SystemShape, params: DriveParams) -> Result<StepTables> {
    params.validate()?;
    let dim = shape.dim();
    if dim > MAX_TABLE_DIM {
        return Err(DtcError::Capacity(format!(
            "{shape} needs {dim} table entries, budget is {MAX_TABLE_DIM}"
        )));
    }
    let d = shape.central_dim();
    let n = shape.n_sat() as f64;
    let s = shape.spin();
    let sat_phase = |g: f64| -> Vec<Complex64> {
        (0..=shape.n_sat())
            .map(|pop| Complex64::from_polar(1.0, -g * (n - 2.0 * pop as f64) / 2.0))
            .collect()
    };
    let central_phase = |g: f64| -> Vec<Complex64> {
        (0..d)
            .map(|l| Complex64::from_polar(1.0, -g * (s - l as f64)))
            .collect()
    };
    let kick_sat = sat_phase(params.g_s);
    let kick_c = central_phase(params.g_c);

    let mut kick_phases = Vec::with_capacity(dim);
    let mut interaction_phases = Vec::with_capacity(dim);
    for k in 0..shape.satellite_dim() {
        let pop = k.count_ones() as usize;
        let x_sat = (n - 2.0 * pop as f64) / 2.0;
        for l in 0..d {
            kick_phases.push(kick_sat[pop] * kick_c[l]);
            interaction_phases.push(Complex64::from_polar(
                1.0,
                params.lambda * x_sat * (s - l as f64),
            ));
        }
    }
    let v = axis_eigenbasis(shape.two_s(), Axis::X)?;
    let rot = (0..d * d).map(|i| v[(i / d, i % d)]).collect();
    let rot_adj = (0..d * d).map(|i| v[(i % d, i / d)].conj()).collect();
    Ok(StepTables {
        shape,
        params,
        kick_phases,
        interaction_phases,
        central_x_rotation: v,
        rot,
        rot_adj,
    })
}

/// Accumulates complex multiply-add counts inside the kernels.
trait Tally {
    fn add(&mut self, ops: usize);
}

impl Tally for () {
    #[inline(always)]
    fn add(&mut self, _: usize) {}
}

impl Tally for usize {
    #[inline(always)]
    fn add(&mut self, ops: usize) {
        *self += ops;
    }
}

fn check(state: &PureState, tables: &StepTables) -> Result<()> {
    if state.shape() != tables.shape {
        return Err(DtcError::ShapeMismatch(format!(
            "state {} vs tables {}",
            state.shape(),
            tables.shape
        )));
    }
    Ok(())
}

fn diagonal_kernel<T: Tally>(amps: &mut [Complex64], phases: &[Complex64], tally: &mut T) {
    amps.iter_mut().zip(phases).for_each(|(a, p)| *a *= p);
    tally.add(amps.len());
}

/// Unnormalized Hadamard butterflies on every satellite bit.
fn hadamard_all<T: Tally>(amps: &mut [Complex64], n_sat: usize, d: usize, tally: &mut T) {
    for bit in 0..n_sat {
        let stride = d << bit;
        for block in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        tally.add(amps.len() / 2);
    }
}

/// Applies a row-major d x d matrix to every consecutive central block.
fn central_kernel<T: Tally>(amps: &mut [Complex64], m: &[Complex64], d: usize, tally: &mut T) {
    let mut buf = vec![Complex64::new(0.0, 0.0); d];
    for block in amps.chunks_exact_mut(d) {
        for (r, out) in buf.iter_mut().enumerate() {
            *out = m[r * d..(r + 1) * d]
                .iter()
                .zip(block.iter())
                .map(|(a, b)| a * b)
                .sum();
        }
        block.copy_from_slice(&buf);
    }
    tally.add(amps.len() * d);
}

fn interaction_kernel<T: Tally>(amps: &mut [Complex64], tables: &StepTables, tally: &mut T) {
    let n_sat = tables.shape.n_sat();
    let d = tables.shape.central_dim();
    // Two unnormalized transforms contribute 2^n_sat in total.
    let scale = 0.5f64.powi(n_sat as i32);
    hadamard_all(amps, n_sat, d, tally);
    if d > 1 {
        central_kernel(amps, &tables.rot_adj, d, tally);
    }
    amps.iter_mut()
        .zip(&tables.interaction_phases)
        .for_each(|(a, p)| *a *= p * scale);
    tally.add(amps.len());
    if d > 1 {
        central_kernel(amps, &tables.rot, d, tally);
    }
    hadamard_all(amps, n_sat, d, tally);
}

fn period_kernel<T: Tally>(amps: &mut [Complex64], tables: &StepTables, tally: &mut T) {
    diagonal_kernel(amps, &tables.kick_phases, tally);
    interaction_kernel(amps, tables, tally);
}

/// Multiplies by the kick diagonal `U_d`.
pub fn apply_kick(state: &mut PureState, tables: &StepTables) -> Result<()> {
    check(state, tables)?;
    diagonal_kernel(state.amplitudes_mut(), &tables.kick_phases, &mut ());
    Ok(())
}

/// Applies `U_0` through the joint x basis.
pub fn apply_interaction(state: &mut PureState, tables: &StepTables) -> Result<()> {
    check(state, tables)?;
    interaction_kernel(state.amplitudes_mut(), tables, &mut ());
    Ok(())
}

/// Applies one full period (kick, then interaction).
pub fn apply_period(state: &mut PureState, tables: &StepTables) -> Result<()> {
    check(state, tables)?;
    period_kernel(state.amplitudes_mut(), tables, &mut ());
    Ok(())
}

/// Complex multiply-add count of one period, measured by running the kernel
/// on a scratch vector with counting enabled.
pub fn period_operation_count(tables: &StepTables) -> usize {
    let mut scratch = vec![Complex64::new(0.0, 0.0); tables.shape.dim()];
    let mut ops = 0usize;
    period_kernel(&mut scratch, tables, &mut ops);
    ops
}

// Rounded phases and the rounded x basis are unitary only to the last bit,
// with a sign that does not average out, so long runs drift by ~1e-16 per
// period unless the norm is restored.
fn renormalize(amps: &mut [Complex64]) {
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        let inv = 1.0 / norm;
        amps.iter_mut().for_each(|a| *a *= inv);
    }
}

/// Evolves `n_periods` periods in place, calling `recorder(n, state)` after
/// each period `n = 1..=n_periods` and collecting its output.
pub fn evolve<R, F>(
    state: &mut PureState,
    tables: &StepTables,
    n_periods: usize,
    mut recorder: F,
) -> Result<Vec<R>>
where
    F: FnMut(usize, &PureState) -> R,
{
    check(state, tables)?;
    let mut out = Vec::with_capacity(n_periods);
    for n in 1..=n_periods {
        period_kernel(state.amplitudes_mut(), tables, &mut ());
        renormalize(state.amplitudes_mut());
        out.push(recorder(n, state));
    }
    Ok(out)
}

/// Evolves without recording.
pub fn evolve_silent(state: &mut PureState, tables: &StepTables, n_periods: usize) -> Result<()> {
    evolve(state, tables, n_periods, |_, _| ()).map(|_| ())
}

/// Parity class of `U^2` at `lambda = 2 pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum USquaredClass {
    /// Odd n_sat, half-integer s: `U^2` is the identity up to phase.
    RevivalBoth,
    /// Odd n_sat, integer s: satellites keep a residual z rotation.
    SatelliteRotationOnly,
    /// Even n_sat, half-integer s: the central spin keeps a residual z rotation.
    CentralRotationOnly,
    /// Even n_sat, integer s: both keep residual rotations.
    BothRotate,
}

impl USquaredClass {
    pub fn satellites_rotate(self) -> bool {
        matches!(
            self,
            USquaredClass::SatelliteRotationOnly | USquaredClass::BothRotate
        )
    }

    pub fn central_rotates(self) -> bool {
        matches!(
            self,
            USquaredClass::CentralRotationOnly | USquaredClass::BothRotate
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            USquaredClass::RevivalBoth => "revival_both",
            USquaredClass::SatelliteRotationOnly => "satellite_rotation_only",
            USquaredClass::CentralRotationOnly => "central_rotation_only",
            USquaredClass::BothRotate => "both_rotate",
        }
    }
}

pub fn u_squared_class(n_sat: usize, two_s: usize) -> USquaredClass {
    match (n_sat % 2 == 1, two_s % 2 == 1) {
        (true, true) => USquaredClass::RevivalBoth,
        (true, false) => USquaredClass::SatelliteRotationOnly,
        (false, true) => USquaredClass::CentralRotationOnly,
        (false, false) => USquaredClass::BothRotate,
    }
}

/// Applies the residual two-period rotation predicted at `lambda = 2 pi`:
/// `exp(-i 2 g_s S_i^z)` on every satellite and/or `exp(-i 2 g_c S_c^z)`.
pub fn apply_two_period_closed_form(state: &mut PureState, params: DriveParams) -> Result<()> {
    let shape = state.shape();
    let class = u_squared_class(shape.n_sat(), shape.two_s());
    let g_s = if class.satellites_rotate() {
        2.0 * params.g_s
    } else {
        0.0
    };
    let g_c = if class.central_rotates() {
        2.0 * params.g_c
    } else {
        0.0
    };
    let tables = precompute(shape, DriveParams::with_kicks(0.0, g_s, g_c))?;
    apply_kick(state, &tables)
}

fn hermitian_exp(h: &DMatrix<Complex64>, theta: f64) -> DMatrix<Complex64> {
    // exp(-i theta H) = V diag(exp(-i theta e)) V^dagger
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|e| Complex64::from_polar(1.0, -theta * e)),
    );
    v * phases * v.adjoint()
}

fn kron_chain(ops: &[&DMatrix<Complex64>]) -> DMatrix<Complex64> {
    ops.iter()
        .skip(1)
        .fold(ops[0].clone(), |acc, m| acc.kronecker(*m))
}

/// Dense `(U_0, U_d)` built from explicit Kronecker products and Hermitian
/// eigendecomposition exponentials.
pub fn oracle_unitaries(
    shape: SystemShape,
    params: DriveParams,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    params.validate()?;
    let dim = shape.dim();
    if dim > ORACLE_MAX_DIM {
        return Err(DtcError::Capacity(format!(
            "dense oracle limited to dimension {ORACLE_MAX_DIM}, {shape} has {dim}"
        )));
    }
    let half = spin_matrices(1)?;
    let central = spin_matrices(shape.two_s())?;
    let n = shape.n_sat();
    let id2 = DMatrix::<Complex64>::identity(2, 2);
    let idc = DMatrix::<Complex64>::identity(shape.central_dim(), shape.central_dim());
    // Site i sits at Kronecker position n-1-i (site 0 is least significant).
    let on_site = |i: usize, op: &DMatrix<Complex64>, c: &DMatrix<Complex64>| {
        let mut factors: Vec<&DMatrix<Complex64>> = Vec::with_capacity(n + 1);
        for j in (0..n).rev() {
            factors.push(if j == i { op } else { &id2 });
        }
        factors.push(c);
        kron_chain(&factors)
    };
    let mut coupling = DMatrix::<Complex64>::zeros(dim, dim);
    let mut kick = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n {
        coupling += on_site(i, &half.sx, &central.sx);
        kick += on_site(i, &half.sz, &idc) * Complex64::new(params.g_s, 0.0);
    }
    let all_id: Vec<&DMatrix<Complex64>> =
        std::iter::repeat_n(&id2, n).chain([&central.sz]).collect();
    kick += kron_chain(&all_id) * Complex64::new(params.g_c, 0.0);
    // U_0 = exp(+i lambda K) = exp(-i (-lambda) K); U_d = exp(-i G).
    Ok((
        hermitian_exp(&coupling, -params.lambda),
        hermitian_exp(&kick, 1.0),
    ))
}

/// Reference evolution by dense matrix-vector products.
pub fn oracle_evolve(
    shape: SystemShape,
    params: DriveParams,
    initial: &PureState,
    n_periods: usize,
) -> Result<PureState> {
    if initial.shape() != shape {
        return Err(DtcError::ShapeMismatch(format!(
            "{} vs {shape}",
            initial.shape()
        )));
    }
    let (u0, ud) = oracle_unitaries(shape, params)?;
    let period = u0 * ud;
    let mut v = nalgebra::DVector::from_column_slice(initial.amplitudes());
    for _ in 0..n_periods {
        v = &period * v;
    }
    PureState::normalized(shape, v.iter().copied().collect())
}
