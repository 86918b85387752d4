//! Exact stroboscopic simulation of a periodically kicked star of spin-1/2
//! satellites coupled to a spin-s central spin, with time-crystal
//! diagnostics, closed-form milestone states and Fisher-information metrology.
//!
//! | module | contents |
//! |---|---|
//! | [`spin`] | spin-s matrices, axis eigenbases, extremal states |
//! | [`hilbert`] | index layout, product states, overlaps, reduced density, entropy |
//! | [`floquet`] | matrix-free period kernels, parity classes, dense oracle |
//! | [`observables`] | magnetizations and per-period records |
//! | [`diagnostics`] | averages, order parameters, period detection, tables |
//! | [`milestones`] | milestone state constructors |
//! | [`metrology`] | Fisher matrix, `G`, power-law fits |
//! | [`sweep`] | parallel grid scans, CSV, checkpoints |
//! | [`cli`] | the `dtc` command line |

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod floquet;
pub mod hilbert;
pub mod metrology;
pub mod milestones;
pub mod observables;
pub mod spin;
pub mod sweep;

pub use error::{DtcError, Result};
pub use floquet::{DriveParams, StepTables};
pub use hilbert::{PureState, SystemShape};
