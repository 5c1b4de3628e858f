//! The thermodynamic audit layer: total energy and its parts, dissipation,
//! entropy production, the energy-budget residual, min/max principle
//! monitors, a priori estimate monitors and weak-form residuals.
//!
//! The semi-discrete scheme satisfies an energy identity, not just the
//! inequality of the limit object: total energy plus cumulative dissipation
//! stays at its initial value up to time-integration error. The ledger
//! records exactly that defect as `budget_residual`.
//!
//! Spatial integrals of nonlinear compositions (the logarithm, barriers,
//! the cut-off weights) use the collocation-grid quadrature, which is what
//! the Galerkin pairing itself uses; norms of band-limited fields are
//! evaluated spectrally, where the two coincide.

use crate::dynamics::{
    gradient_outer_product, momentum_rhs_korteweg, stress_extra, symmetric_gradient, FluidParams,
    GalerkinIndices, State,
};
use crate::error::Result;
use crate::scalar::{self, BarrierBounds, CutoffIndex};
use crate::spectral::{pointwise_product, SpectralField, VectorField};

/// One row of the per-step energy ledger.
#[derive(Debug, Clone, Copy)]
pub struct EnergyLedger {
    pub time: f64,
    pub e_kin: f64,
    pub e_grad: f64,
    pub e_log: f64,
    pub e_total: f64,
    pub d_visc: f64,
    pub d_relax: f64,
    pub cum_dissipation: f64,
    pub budget_residual: f64,
    pub b_min_obs: f64,
    pub b_max_obs: f64,
    pub div_v_max: f64,
    pub newton_iters: usize,
    /// Set when the scalar lost positivity somewhere on the grid; `e_log`
    /// then carries an infinity marker.
    pub fault: bool,
}

impl EnergyLedger {
    /// Measure every state-dependent column. `cum_dissipation`,
    /// `budget_residual` and `newton_iters` are owned by the run loop and
    /// start at zero.
    pub fn measure(
        state: &State,
        bdot: &SpectralField,
        params: &FluidParams,
        n_cut: CutoffIndex,
    ) -> Self {
        let grid = state.grid();
        let bp = state.b.physical();
        let (b_min_obs, b_max_obs) = {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in &bp {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (lo, hi)
        };
        let fault = !(b_min_obs > 0.0);

        let e_kin = 0.5 * params.rho * state.v.l2_norm_sq();
        let e_grad = 0.5 * params.sigma * state.b.h1_seminorm_sq();
        let e_log = if fault {
            f64::INFINITY
        } else {
            let h2 = grid.spacing() * grid.spacing();
            0.5 * params.mu * bp.iter().map(|&b| b - b.ln()).sum::<f64>() * h2
        };

        let d_visc = viscous_dissipation(state, params);
        let d_relax = relaxation_dissipation(state, bdot, params, n_cut);

        Self {
            time: state.time,
            e_kin,
            e_grad,
            e_log,
            e_total: e_kin + e_grad + e_log,
            d_visc,
            d_relax,
            cum_dissipation: 0.0,
            budget_residual: 0.0,
            b_min_obs,
            b_max_obs,
            div_v_max: state.v.max_divergence(),
            newton_iters: 0,
            fault,
        }
    }
}

/// Total stored energy `E_kin + E_grad + E_log` with the 1/2 factors of the
/// energy inequality; infinite (and fault-flagged in the ledger) when the
/// scalar is not positive.
pub fn total_energy(state: &State, params: &FluidParams, n_cut: CutoffIndex) -> f64 {
    let zero = SpectralField::zeros(state.grid());
    EnergyLedger::measure(state, &zero, params, n_cut).e_total
}

/// Viscous dissipation `2 nu ||D||_2^2`.
pub fn viscous_dissipation(state: &State, params: &FluidParams) -> f64 {
    2.0 * params.nu * symmetric_gradient(&state.v).l2_norm_sq()
}

/// Relaxation dissipation `int nu1 |bdot + v.grad b|^2 / (2 T_n(b)^2) dx`,
/// grid quadrature of the pointwise square.
pub fn relaxation_dissipation(
    state: &State,
    bdot: &SpectralField,
    params: &FluidParams,
    n_cut: CutoffIndex,
) -> f64 {
    let grid = state.grid();
    let bp = state.b.physical();
    let grad = state.b.gradient();
    let gx = grad.x.physical();
    let gy = grad.y.physical();
    let vx = state.v.x.physical();
    let vy = state.v.y.physical();
    let dp = bdot.physical();
    let h2 = grid.spacing() * grid.spacing();
    let mut sum = 0.0;
    for i in 0..bp.len() {
        let t = scalar::cutoff(n_cut, bp[i]);
        let rate = dp[i] + vx[i] * gx[i] + vy[i] * gy[i];
        sum += rate * rate / (t * t);
    }
    0.5 * params.nu1 * sum * h2
}

/// Total dissipation rate, the integrand of the energy inequality.
pub fn dissipation_rate(
    state: &State,
    bdot: &SpectralField,
    params: &FluidParams,
    n_cut: CutoffIndex,
) -> f64 {
    viscous_dissipation(state, params) + relaxation_dissipation(state, bdot, params, n_cut)
}

/// Energy-budget audit over a time-ordered ledger series.
#[derive(Debug, Clone)]
pub struct BudgetReport {
    pub max_abs_residual: f64,
    pub final_cum_dissipation: f64,
    pub dissipation_nonnegative: bool,
    pub dissipation_nondecreasing: bool,
    pub residuals: Vec<f64>,
}

/// Recompute cumulative dissipation by trapezoidal quadrature over the rows
/// and report `budget_residual(t) = E_total(t) + cum_dissipation(t) - E_total(0)`.
pub fn energy_budget(series: &[EnergyLedger]) -> BudgetReport {
    let mut residuals = Vec::with_capacity(series.len());
    let mut cum = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut nonneg = true;
    let mut nondec = true;
    let mut prev_cum = 0.0;
    for (k, row) in series.iter().enumerate() {
        if k > 0 {
            let prev = &series[k - 1];
            let dt = row.time - prev.time;
            cum += 0.5 * dt * (prev.d_visc + prev.d_relax + row.d_visc + row.d_relax);
        }
        if cum < -1e-14 {
            nonneg = false;
        }
        if cum < prev_cum - 1e-14 {
            nondec = false;
        }
        prev_cum = cum;
        let residual = row.e_total + cum - series[0].e_total;
        max_abs = max_abs.max(residual.abs());
        residuals.push(residual);
    }
    BudgetReport {
        max_abs_residual: max_abs,
        final_cum_dissipation: cum,
        dissipation_nonnegative: nonneg,
        dissipation_nondecreasing: nondec,
        residuals,
    }
}

/// Min/max principle monitor: pointwise violations of the initial-data
/// barriers and the barrier integrals that the continuous theory keeps at
/// zero.
#[derive(Debug, Clone, Copy)]
pub struct MinMaxReport {
    pub violation_above: f64,
    pub violation_below: f64,
    pub barrier_plus_integral: f64,
    pub barrier_minus_integral: f64,
}

pub fn minmax_monitor(state: &State, bounds: &BarrierBounds, n_cut: CutoffIndex) -> MinMaxReport {
    let bp = state.b.physical();
    let h2 = state.grid().spacing().powi(2);
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut int_plus = 0.0;
    let mut int_minus = 0.0;
    for &b in &bp {
        hi = hi.max(b);
        lo = lo.min(b);
        int_plus += scalar::barrier_plus(n_cut, bounds.b_max(), b);
        int_minus += scalar::barrier_minus(n_cut, bounds.b_min(), b);
    }
    MinMaxReport {
        violation_above: (hi - bounds.b_max()).max(0.0),
        violation_below: (bounds.b_min() - lo).max(0.0),
        barrier_plus_integral: int_plus * h2,
        barrier_minus_integral: int_minus * h2,
    }
}

/// Weak momentum residual against one solenoidal test field:
/// `<rho vdot, w> + <2 nu D - sigma grad b (x) grad b - rho v (x) v, grad w>`.
/// Scheme-produced pairs annihilate every retained test mode.
pub fn weak_residual_momentum(
    state: &State,
    vdot: &VectorField,
    params: &FluidParams,
    test: &VectorField,
) -> Result<f64> {
    let mut tensor = stress_extra(state, params)?;
    let conv_xx = pointwise_product(&state.v.x, &state.v.x)?.dealias();
    let conv_xy = pointwise_product(&state.v.x, &state.v.y)?.dealias();
    let conv_yy = pointwise_product(&state.v.y, &state.v.y)?.dealias();
    tensor.xx = tensor.xx.add_scaled(-params.rho, &conv_xx);
    tensor.xy = tensor.xy.add_scaled(-params.rho, &conv_xy);
    tensor.yy = tensor.yy.add_scaled(-params.rho, &conv_yy);
    Ok(params.rho * vdot.inner_product(test)? + tensor.contract_gradient(test)?)
}

/// Free energy and entropy production.
///
/// The free energy is `int mu (b - 1 - ln b)/2 + sigma |grad b|^2 / 2 dx`
/// (the incompressible baseline `psi_0` is an additive constant and reported
/// as zero by convention). The entropy production integrates
/// `xi = 2 nu |D|^2 + (nu1/2) |(bdot + v.grad b)/T_n(b)|^2`, a sum of
/// squares: nonnegative at every evaluated state, by construction.
#[derive(Debug, Clone, Copy)]
pub struct ThermoReport {
    pub free_energy: f64,
    pub entropy_production: f64,
    /// Smallest pointwise value of the production density (never negative).
    pub min_pointwise_production: f64,
}

pub fn thermo_report(
    state: &State,
    bdot: &SpectralField,
    params: &FluidParams,
    n_cut: CutoffIndex,
) -> Result<ThermoReport> {
    let grid = state.grid();
    let h2 = grid.spacing() * grid.spacing();
    let bp = state.b.physical();
    if let Some(&bad) = bp.iter().find(|&&b| !(b > 0.0)) {
        return Err(crate::error::Error::Invalid(format!(
            "free energy undefined: scalar reaches {bad}"
        )));
    }
    let grad = state.b.gradient();
    let gx = grad.x.physical();
    let gy = grad.y.physical();
    let mut free = 0.0;
    for i in 0..bp.len() {
        let b = bp[i];
        free += 0.5 * params.mu * (b - 1.0 - b.ln()) + 0.5 * params.sigma * (gx[i] * gx[i] + gy[i] * gy[i]);
    }

    let d = symmetric_gradient(&state.v);
    let dxx = d.xx.physical();
    let dxy = d.xy.physical();
    let dyy = d.yy.physical();
    let vx = state.v.x.physical();
    let vy = state.v.y.physical();
    let dp = bdot.physical();
    let mut production = 0.0;
    let mut min_pointwise = f64::INFINITY;
    for i in 0..bp.len() {
        let t = scalar::cutoff(n_cut, bp[i]);
        let rate = (dp[i] + vx[i] * gx[i] + vy[i] * gy[i]) / t;
        let frob2 = dxx[i] * dxx[i] + 2.0 * dxy[i] * dxy[i] + dyy[i] * dyy[i];
        let xi = 2.0 * params.nu * frob2 + 0.5 * params.nu1 * rate * rate;
        production += xi;
        min_pointwise = min_pointwise.min(xi);
    }
    Ok(ThermoReport {
        free_energy: free * h2,
        entropy_production: production * h2,
        min_pointwise_production: min_pointwise,
    })
}

/// Both evaluations of the Korteweg coupling integral, which must cancel in
/// the summed ledger: the kinetic-side rate through the assembled momentum
/// operator, and the direct quadrature `-sigma int (grad b (x) grad b) : grad v dx`
/// on the scalar-equation side.
pub fn korteweg_exchange(
    state: &State,
    params: &FluidParams,
    idx: &GalerkinIndices,
) -> Result<(f64, f64)> {
    let vdot_k = momentum_rhs_korteweg(state, params, idx)?;
    let momentum_side = params.rho * vdot_k.inner_product(&state.v)?;

    let outer = gradient_outer_product(&state.b)?;
    let b_side = -params.sigma * outer.contract_gradient(&state.v)?;
    Ok((momentum_side, b_side))
}

/// A priori estimate monitors of a completed run.
#[derive(Debug, Clone)]
pub struct AprioriReport {
    pub sup_v_l2: f64,
    pub int_v_h1_sq: f64,
    pub sup_grad_b_l2: f64,
    pub int_relax_sq: f64,
    /// Initial total energy, the right-hand side of the energy inequality.
    pub data_bound: f64,
    pub flags: Vec<String>,
}

/// Fill the a priori report from a ledger series. Every monitored quantity
/// is checked against the bound the energy inequality provides from the
/// initial data alone: since each energy component is nonnegative,
/// `sup ||v||_2 <= sqrt(2 E_0 / rho)`, `sup ||grad b||_2 <= sqrt(2 E_0 / sigma)`,
/// `int ||v||_{1,2}^2 dt <= 2 T E_0 / rho + E_0 / nu` and
/// `int ||(bdot + v.grad b)/T_n(b)||_2^2 dt <= 2 E_0 / nu1`, each with a
/// small slack for time-integration error.
pub fn apriori_monitor(series: &[EnergyLedger], params: &FluidParams) -> AprioriReport {
    let e0 = series.first().map_or(0.0, |r| r.e_total);
    let t_span = match (series.first(), series.last()) {
        (Some(a), Some(b)) => b.time - a.time,
        _ => 0.0,
    };
    let mut sup_v_l2: f64 = 0.0;
    let mut sup_grad_b: f64 = 0.0;
    let mut int_v_h1 = 0.0;
    let mut int_relax = 0.0;
    for (k, row) in series.iter().enumerate() {
        sup_v_l2 = sup_v_l2.max((2.0 * row.e_kin / params.rho).sqrt());
        if params.sigma > 0.0 {
            sup_grad_b = sup_grad_b.max((2.0 * row.e_grad / params.sigma).sqrt());
        }
        if k > 0 {
            let prev = &series[k - 1];
            let dt = row.time - prev.time;
            let h1 = |r: &EnergyLedger| 2.0 * r.e_kin / params.rho + r.d_visc / params.nu;
            int_v_h1 += 0.5 * dt * (h1(prev) + h1(row));
            let relax = |r: &EnergyLedger| 2.0 * r.d_relax / params.nu1;
            int_relax += 0.5 * dt * (relax(prev) + relax(row));
        }
    }

    let slack = 1e-6 * e0.abs() + 1e-12;
    let mut flags = Vec::new();
    let bound_v = (2.0 * e0 / params.rho).sqrt();
    if sup_v_l2 > bound_v + slack.sqrt() {
        flags.push(format!("sup ||v||_2 = {sup_v_l2:.6e} exceeds data bound {bound_v:.6e}"));
    }
    if params.sigma > 0.0 {
        let bound_g = (2.0 * e0 / params.sigma).sqrt();
        if sup_grad_b > bound_g + slack.sqrt() {
            flags.push(format!(
                "sup ||grad b||_2 = {sup_grad_b:.6e} exceeds data bound {bound_g:.6e}"
            ));
        }
    }
    let bound_h1 = 2.0 * t_span * e0 / params.rho + e0 / params.nu;
    if int_v_h1 > bound_h1 + slack {
        flags.push(format!(
            "int ||v||_1,2^2 dt = {int_v_h1:.6e} exceeds data bound {bound_h1:.6e}"
        ));
    }
    let bound_relax = 2.0 * e0 / params.nu1;
    if int_relax > bound_relax + slack {
        flags.push(format!(
            "int ||rate/T||_2^2 dt = {int_relax:.6e} exceeds data bound {bound_relax:.6e}"
        ));
    }
    if series.iter().any(|r| r.fault) {
        flags.push("scalar positivity fault recorded".into());
    }

    AprioriReport {
        sup_v_l2,
        int_v_h1_sq: int_v_h1,
        sup_grad_b_l2: sup_grad_b,
        int_relax_sq: int_relax,
        data_bound: e0,
        flags,
    }
}
