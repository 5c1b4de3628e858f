//! Pseudospectral Galerkin solver for an incompressible viscoelastic fluid
//! whose elastic response is carried by a single positive scalar field `b`
//! (the trace of the elastic stretch), coupled to the momentum balance
//! through a Korteweg stress and regularized by stress diffusion.
//!
//! On the periodic box the governing system reads
//!
//! ```text
//! div v = 0
//! rho (dv/dt + div(v (x) v)) = div( -p I + 2 nu D - sigma grad b (x) grad b )
//! nu1 (db/dt + div(b v)) + mu (b^2 - b) - 2 sigma b^2 Lap b = 0
//! ```
//!
//! The solver evolves the cut-off Galerkin form of this system, in which
//! every `1/b` appears as `1/T_n(b)` with the clamp `T_n(b) = min(n, max(1/n, b))`,
//! and audits the structure that makes the scheme work: the energy budget
//! (stored energy plus cumulative dissipation stays at its initial value),
//! nonnegative entropy production, min/max barriers for `b`, and the
//! per-step identity of the implicit Rothe update.
//!
//! # Quick start
//!
//! ```
//! use elastoflow::{Grid, SpectralField, VectorField, State, FluidParams,
//!                  GalerkinIndices, CutoffIndex, rk4_step};
//!
//! let grid = Grid::square(16)?;
//! let idx = GalerkinIndices::new(4, 4, CutoffIndex::new(4)?, grid)?;
//! let params = FluidParams::unit();
//!
//! // uniform b = 2 relaxes toward 1 along the logistic curve
//! let b0 = SpectralField::constant(grid, 2.0);
//! let mut state = State::new(VectorField::zeros(grid), b0, 0.0)?;
//! for _ in 0..100 {
//!     state = rk4_step(&state, 1e-2, &params, &idx, 1e-12)?;
//! }
//! assert!(state.b.mean() < 2.0 && state.b.mean() > 1.0);
//! # Ok::<(), elastoflow::Error>(())
//! ```

pub mod config;
pub mod convergence;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
mod fft;
pub mod ledger;
pub mod oracle;
pub mod plot;
pub mod presets;
pub mod run;
pub mod scalar;
pub mod snapshot;
pub mod spectral;
pub mod stepping;
pub mod verify;

pub use diagnostics::{
    apriori_monitor, dissipation_rate, energy_budget, korteweg_exchange, minmax_monitor,
    thermo_report, total_energy, weak_residual_momentum, AprioriReport, BudgetReport,
    EnergyLedger, MinMaxReport, ThermoReport,
};
pub use dynamics::{
    b_rhs, b_weak_residual, momentum_rhs, stress_extra, symmetric_gradient, weighted_mass_apply,
    weighted_mass_solve, FluidParams, GalerkinIndices, State, SymTensorField, WeightedMass,
};
pub use error::{Error, Result};
pub use scalar::{BarrierBounds, CutoffIndex};
pub use spectral::{Grid, SpectralField, VectorField};
pub use stepping::{
    rk4_step, rk4_step_forced, rothe_interpolant, rothe_residual, rothe_step,
    semi_implicit_coupled_step, time_average_velocity, Forcing, RotheStepRecord, SchemeConfig,
    Stepper,
};
