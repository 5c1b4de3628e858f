//! Time integration: classical RK4 for the semi-discrete Galerkin system,
//! and the implicit Rothe update for the scalar equation with its damped
//! Newton solve. The coupled semi-implicit stepper is Lie splitting: one RK4
//! sub-step for the velocity with the scalar frozen, then one Rothe step for
//! the scalar driven by the time-averaged velocity.

use crate::dynamics::{
    b_rhs, default_mass_iter_cap, momentum_rhs, FluidParams, GalerkinIndices, State,
};
use crate::error::{Error, Result};
use crate::scalar;
use crate::spectral::{from_physical_unchecked, Grid, SpectralField, VectorField};

/// Stepper selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    ExplicitRk4,
    RotheSemiImplicit,
}

impl Stepper {
    pub fn name(&self) -> &'static str {
        match self {
            Stepper::ExplicitRk4 => "explicit_rk4",
            Stepper::RotheSemiImplicit => "rothe_semi_implicit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "explicit_rk4" => Ok(Stepper::ExplicitRk4),
            "rothe_semi_implicit" => Ok(Stepper::RotheSemiImplicit),
            other => Err(Error::Config(format!(
                "unknown stepper '{other}' (expected explicit_rk4 or rothe_semi_implicit)"
            ))),
        }
    }
}

/// Time-stepping configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub stepper: Stepper,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub mass_solve_tol: f64,
}

impl SchemeConfig {
    pub fn new(dt: f64, t_end: f64, stepper: Stepper) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            stepper,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            mass_solve_tol: 1e-10,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::Config(format!(
                "dt and t_end must be positive, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        if !(self.newton_tol > 0.0) || !(self.mass_solve_tol > 0.0) {
            return Err(Error::Config("tolerances must be strictly positive".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps covering `[0, t_end]`; the last step may be short.
    pub fn num_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).floor() as usize + 1
    }
}

/// Optional manufactured-solution forcing, evaluated at stage times.
/// Absent from the model itself; defaults to zero everywhere.
pub struct Forcing<'a> {
    pub velocity: Option<&'a dyn Fn(f64) -> VectorField>,
    pub scalar: Option<&'a dyn Fn(f64) -> SpectralField>,
}

impl Forcing<'_> {
    pub fn none() -> Forcing<'static> {
        Forcing {
            velocity: None,
            scalar: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.velocity.is_some() || self.scalar.is_some()
    }

    fn velocity_at(&self, t: f64) -> Option<VectorField> {
        self.velocity.map(|f| f(t))
    }

    fn scalar_at(&self, t: f64) -> Option<SpectralField> {
        self.scalar.map(|f| f(t))
    }
}

/// Record of one implicit scalar update.
#[derive(Debug, Clone, Copy)]
pub struct RotheStepRecord {
    pub step_index: usize,
    pub newton_iterations: usize,
    pub residual_norm: f64,
    /// Defect of the per-step discrete identity obtained by pairing the
    /// converged update with itself (the analogue of testing with b^{k+1}).
    pub per_step_identity_residual: f64,
}

fn blowup_error(state: &State, params: &FluidParams) -> Error {
    // report the last finite energy so the failure is actionable
    let e_kin = 0.5 * params.rho * state.v.l2_norm_sq();
    let e_grad = 0.5 * params.sigma * state.b.h1_seminorm_sq();
    Error::Blowup {
        time: state.time,
        last_energy: e_kin + e_grad,
    }
}

fn coupled_rhs(
    state: &State,
    params: &FluidParams,
    idx: &GalerkinIndices,
    mass_tol: f64,
    forcing: &Forcing,
    t: f64,
) -> Result<(VectorField, SpectralField)> {
    let fv = forcing.velocity_at(t);
    let fb = forcing.scalar_at(t);
    let dv = momentum_rhs(state, params, idx, fv.as_ref())?;
    let db = b_rhs(state, params, idx, fb.as_ref(), mass_tol)?;
    Ok((dv, db))
}

/// One classical RK4 step of the coupled semi-discrete system. The output
/// velocity is re-projected and truncated; deterministic for fixed inputs.
pub fn rk4_step(
    state: &State,
    dt: f64,
    params: &FluidParams,
    idx: &GalerkinIndices,
    mass_tol: f64,
) -> Result<State> {
    rk4_step_forced(state, dt, params, idx, mass_tol, &Forcing::none())
}

/// RK4 step with optional forcing evaluated at the stage times.
pub fn rk4_step_forced(
    state: &State,
    dt: f64,
    params: &FluidParams,
    idx: &GalerkinIndices,
    mass_tol: f64,
    forcing: &Forcing,
) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("dt must be positive, got {dt}")));
    }
    let t = state.time;
    let (kv1, kb1) = coupled_rhs(state, params, idx, mass_tol, forcing, t)?;

    let mid1 = State {
        v: state.v.add_scaled(0.5 * dt, &kv1),
        b: state.b.add_scaled(0.5 * dt, &kb1),
        time: t + 0.5 * dt,
    };
    if !mid1.is_finite() {
        return Err(blowup_error(state, params));
    }
    let (kv2, kb2) = coupled_rhs(&mid1, params, idx, mass_tol, forcing, t + 0.5 * dt)?;

    let mid2 = State {
        v: state.v.add_scaled(0.5 * dt, &kv2),
        b: state.b.add_scaled(0.5 * dt, &kb2),
        time: t + 0.5 * dt,
    };
    if !mid2.is_finite() {
        return Err(blowup_error(state, params));
    }
    let (kv3, kb3) = coupled_rhs(&mid2, params, idx, mass_tol, forcing, t + 0.5 * dt)?;

    let end = State {
        v: state.v.add_scaled(dt, &kv3),
        b: state.b.add_scaled(dt, &kb3),
        time: t + dt,
    };
    if !end.is_finite() {
        return Err(blowup_error(state, params));
    }
    let (kv4, kb4) = coupled_rhs(&end, params, idx, mass_tol, forcing, t + dt)?;

    let sixth = dt / 6.0;
    let v = state
        .v
        .add_scaled(sixth, &kv1)
        .add_scaled(2.0 * sixth, &kv2)
        .add_scaled(2.0 * sixth, &kv3)
        .add_scaled(sixth, &kv4)
        .leray_project()
        .truncate(idx.n_v)?;
    let b = state
        .b
        .add_scaled(sixth, &kb1)
        .add_scaled(2.0 * sixth, &kb2)
        .add_scaled(2.0 * sixth, &kb3)
        .add_scaled(sixth, &kb4)
        .truncate(idx.l_b)?;

    let next = State { v, b, time: t + dt };
    if !next.is_finite() {
        return Err(blowup_error(state, params));
    }
    Ok(next)
}

/// Trapezoidal time average of equally spaced velocity samples spanning one
/// step, endpoints included. Linear, so solenoidality is preserved.
pub fn time_average_velocity(samples: &[VectorField]) -> Result<VectorField> {
    match samples {
        [] => Err(Error::Invalid("empty velocity history".into())),
        [only] => Ok(only.clone()),
        _ => {
            let m = samples.len() - 1;
            let mut avg = samples[0].scale(0.5 / m as f64);
            for s in &samples[1..m] {
                avg = avg.add_scaled(1.0 / m as f64, s);
            }
            Ok(avg.add_scaled(0.5 / m as f64, &samples[m]))
        }
    }
}

/// Context for one Rothe update: previous scalar, averaged velocity, step
/// size and physics. Assembles the residual map and its SPD-part Jacobian.
struct RotheProblem<'a> {
    grid: Grid,
    f_prev: Vec<f64>,
    v_avg_x: Vec<f64>,
    v_avg_y: Vec<f64>,
    forcing: Option<Vec<f64>>,
    dt: f64,
    params: &'a FluidParams,
    idx: &'a GalerkinIndices,
}

impl<'a> RotheProblem<'a> {
    fn new(
        b_prev: &SpectralField,
        v_avg: &VectorField,
        dt: f64,
        params: &'a FluidParams,
        idx: &'a GalerkinIndices,
        forcing: Option<&SpectralField>,
    ) -> Self {
        let f_prev: Vec<f64> = b_prev
            .physical()
            .iter()
            .map(|&s| scalar::rothe_f(idx.n_cut, s))
            .collect();
        Self {
            grid: b_prev.grid(),
            f_prev,
            v_avg_x: v_avg.x.physical(),
            v_avg_y: v_avg.y.physical(),
            forcing: forcing.map(|f| f.physical()),
            dt,
            params,
            idx,
        }
    }

    /// Residual field `R(b)` whose pairing with a retained test mode is the
    /// Rothe weak form; the root gives the accepted update.
    fn residual(&self, b: &SpectralField) -> SpectralField {
        let n_cut = self.idx.n_cut;
        let bp = b.physical();
        let grad = b.gradient();
        let gx = grad.x.physical();
        let gy = grad.y.physical();
        let mut density = Vec::with_capacity(bp.len());
        for i in 0..bp.len() {
            let t = scalar::cutoff(n_cut, bp[i]);
            let f_new = scalar::rothe_f(n_cut, bp[i]);
            // grad f(b) . v via the chain rule f'(b) grad b = grad b / T_n(b)^2
            let transport = (self.v_avg_x[i] * gx[i] + self.v_avg_y[i] * gy[i]) / (t * t);
            let mut val = self.params.nu1 * ((f_new - self.f_prev[i]) / self.dt + transport)
                + self.params.mu * (1.0 - 1.0 / t);
            if let Some(g) = &self.forcing {
                val -= self.params.nu1 * g[i] / (t * t);
            }
            density.push(val);
        }
        let bulk = from_physical_unchecked(self.grid, &density)
            .truncate(self.idx.l_b)
            .expect("l_b validated");
        // + 2 sigma <grad b, grad w>  pairs as  - 2 sigma Lap b
        bulk.add_scaled(
            -2.0 * self.params.sigma,
            &b.laplacian().truncate(self.idx.l_b).expect("l_b validated"),
        )
    }

    /// SPD approximation of the Jacobian at `b`: the weighted mass from the
    /// f-difference, the nonnegative reaction weight, and the (diagonal)
    /// stiffness. The small nonsymmetric transport block is dropped; Newton
    /// with line search absorbs it.
    fn jacobian_solve(&self, b: &SpectralField, rhs: &SpectralField, tol: f64) -> Result<SpectralField> {
        let n_cut = self.idx.n_cut;
        let bp = b.physical();
        let weight: Vec<f64> = bp
            .iter()
            .map(|&s| {
                let t = scalar::cutoff(n_cut, s);
                let mass = self.params.nu1 / (self.dt * t * t);
                let reaction = self.params.mu * scalar::cutoff_deriv(n_cut, s) / (t * t);
                mass + reaction
            })
            .collect();
        let op = WeightedJacobian {
            grid: self.grid,
            l_b: self.idx.l_b,
            weight,
            stiffness: 2.0 * self.params.sigma,
        };
        op.solve(rhs, tol, default_mass_iter_cap(n_cut) * 4)
    }
}

/// SPD operator `w -> P[ weight * w ] - stiffness * Lap w` used as the
/// approximate Rothe Jacobian, solved by conjugate gradients.
struct WeightedJacobian {
    grid: Grid,
    l_b: usize,
    weight: Vec<f64>,
    stiffness: f64,
}

impl WeightedJacobian {
    fn apply(&self, w: &SpectralField) -> SpectralField {
        // complex pathway, as in the weighted mass: keeps the operator SPD
        // on the full coefficient space for the CG iteration
        let wp = w.complex_physical();
        let weighted: Vec<_> = wp.iter().zip(self.weight.iter()).map(|(a, b)| a * b).collect();
        let bulk = SpectralField::from_complex_physical(self.grid, &weighted)
            .truncate(self.l_b)
            .expect("l_b validated");
        bulk.add_scaled(-self.stiffness, &w.laplacian())
    }

    fn solve(&self, rhs: &SpectralField, tol: f64, max_iter: usize) -> Result<SpectralField> {
        crate::dynamics::cg_solve(
            |w| self.apply(w),
            rhs,
            SpectralField::zeros(self.grid),
            tol,
            max_iter,
        )
    }
}

/// Weak Rothe residual of a candidate update against one test function.
pub fn rothe_residual(
    b_candidate: &SpectralField,
    b_prev: &SpectralField,
    v_avg: &VectorField,
    dt: f64,
    params: &FluidParams,
    idx: &GalerkinIndices,
    test: &SpectralField,
) -> Result<f64> {
    let problem = RotheProblem::new(b_prev, v_avg, dt, params, idx, None);
    problem.residual(b_candidate).inner_product(test)
}

/// One implicit Rothe update of the scalar: damped Newton on the truncated
/// coefficient vector, with a damped Picard fallback on stagnation.
pub fn rothe_step(
    b_prev: &SpectralField,
    v_avg: &VectorField,
    dt: f64,
    params: &FluidParams,
    idx: &GalerkinIndices,
    cfg: &SchemeConfig,
) -> Result<(SpectralField, RotheStepRecord)> {
    rothe_step_forced(b_prev, v_avg, dt, params, idx, cfg, None, 0)
}

#[allow(clippy::too_many_arguments)]
pub fn rothe_step_forced(
    b_prev: &SpectralField,
    v_avg: &VectorField,
    dt: f64,
    params: &FluidParams,
    idx: &GalerkinIndices,
    cfg: &SchemeConfig,
    forcing: Option<&SpectralField>,
    step_index: usize,
) -> Result<(SpectralField, RotheStepRecord)> {
    let problem = RotheProblem::new(b_prev, v_avg, dt, params, idx, forcing);
    let mut b = b_prev.clone();
    let mut residual = problem.residual(&b);
    let mut res_norm = residual.l2_norm();
    let mut iterations = 0usize;

    if res_norm > cfg.newton_tol {
        'newton: for _ in 0..cfg.newton_max_iter {
            iterations += 1;
            let delta = problem.jacobian_solve(&b, &residual, cfg.mass_solve_tol)?;
            // halving line search on the residual norm
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = b.add_scaled(-step, &delta);
                let trial_res = problem.residual(&trial);
                let trial_norm = trial_res.l2_norm();
                if trial_norm < res_norm {
                    b = trial;
                    residual = trial_res;
                    res_norm = trial_norm;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if res_norm <= cfg.newton_tol {
                break 'newton;
            }
            if !improved {
                break 'newton; // stagnated; Picard below
            }
        }
    }

    if res_norm > cfg.newton_tol {
        // damped Picard with the Jacobian frozen at the previous iterate
        for _ in 0..cfg.newton_max_iter * 4 {
            iterations += 1;
            let delta = problem.jacobian_solve(b_prev, &residual, cfg.mass_solve_tol)?;
            let trial = b.add_scaled(-0.5, &delta);
            let trial_res = problem.residual(&trial);
            let trial_norm = trial_res.l2_norm();
            if trial_norm >= res_norm {
                break;
            }
            b = trial;
            residual = trial_res;
            res_norm = trial_norm;
            if res_norm <= cfg.newton_tol {
                break;
            }
        }
    }

    if res_norm > cfg.newton_tol || !b.is_finite() {
        return Err(Error::RotheStagnation { residual: res_norm });
    }

    // per-step identity: pair the converged update with itself; the transport
    // pairing telescopes to a divergence and drops out
    let f_diff: Vec<f64> = {
        let bp = b.physical();
        bp.iter()
            .zip(problem.f_prev.iter())
            .map(|(&s, &fp)| scalar::rothe_f(idx.n_cut, s) - fp)
            .collect()
    };
    let f_diff_hat = from_physical_unchecked(b.grid(), &f_diff);
    let reaction: Vec<f64> = b
        .physical()
        .iter()
        .map(|&s| 1.0 - 1.0 / scalar::cutoff(idx.n_cut, s))
        .collect();
    let reaction_hat = from_physical_unchecked(b.grid(), &reaction);
    let identity = params.nu1 * f_diff_hat.inner_product(&b)?
        + dt * params.mu * reaction_hat.inner_product(&b)?
        + dt * 2.0 * params.sigma * b.h1_seminorm_sq();

    let record = RotheStepRecord {
        step_index,
        newton_iterations: iterations,
        residual_norm: res_norm,
        per_step_identity_residual: identity.abs(),
    };
    Ok((b, record))
}

/// Piecewise-linear-in-time reconstruction through the Rothe nodes.
pub fn rothe_interpolant(b_seq: &[SpectralField], t: f64, dt: f64) -> Result<SpectralField> {
    if b_seq.is_empty() {
        return Err(Error::Invalid("empty Rothe sequence".into()));
    }
    let hi = (b_seq.len() - 1) as f64 * dt;
    if t < -1e-12 || t > hi * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::OutOfRange { t, lo: 0.0, hi });
    }
    let k = ((t / dt).floor() as usize).min(b_seq.len().saturating_sub(2));
    if b_seq.len() == 1 {
        return Ok(b_seq[0].clone());
    }
    let t_k = k as f64 * dt;
    let w = ((t - t_k) / dt).clamp(0.0, 1.0);
    Ok(b_seq[k].scale(1.0 - w).add_scaled(w, &b_seq[k + 1]))
}

/// One Lie-splitting step of the coupled system: RK4 on the velocity with
/// the scalar frozen, then a Rothe update driven by the two-point
/// time-averaged velocity.
pub fn semi_implicit_coupled_step(
    state: &State,
    dt: f64,
    params: &FluidParams,
    idx: &GalerkinIndices,
    cfg: &SchemeConfig,
) -> Result<(State, RotheStepRecord)> {
    semi_implicit_coupled_step_forced(state, dt, params, idx, cfg, &Forcing::none(), 0)
}

pub fn semi_implicit_coupled_step_forced(
    state: &State,
    dt: f64,
    params: &FluidParams,
    idx: &GalerkinIndices,
    cfg: &SchemeConfig,
    forcing: &Forcing,
    step_index: usize,
) -> Result<(State, RotheStepRecord)> {
    let t = state.time;
    // velocity sub-step: RK4 with b frozen
    let stage = |v: &VectorField, ts: f64| -> Result<VectorField> {
        let frozen = State {
            v: v.clone(),
            b: state.b.clone(),
            time: ts,
        };
        momentum_rhs(&frozen, params, idx, forcing.velocity_at(ts).as_ref())
    };
    let k1 = stage(&state.v, t)?;
    let k2 = stage(&state.v.add_scaled(0.5 * dt, &k1), t + 0.5 * dt)?;
    let k3 = stage(&state.v.add_scaled(0.5 * dt, &k2), t + 0.5 * dt)?;
    let k4 = stage(&state.v.add_scaled(dt, &k3), t + dt)?;
    let sixth = dt / 6.0;
    let v_new = state
        .v
        .add_scaled(sixth, &k1)
        .add_scaled(2.0 * sixth, &k2)
        .add_scaled(2.0 * sixth, &k3)
        .add_scaled(sixth, &k4)
        .leray_project()
        .truncate(idx.n_v)?;
    if !v_new.is_finite() {
        return Err(blowup_error(state, params));
    }

    let v_avg = time_average_velocity(&[state.v.clone(), v_new.clone()])?;
    let fb = forcing.scalar_at(t + dt);
    let (b_new, record) = rothe_step_forced(
        &state.b,
        &v_avg,
        dt,
        params,
        idx,
        cfg,
        fb.as_ref(),
        step_index,
    )?;
    if !b_new.is_finite() {
        return Err(blowup_error(state, params));
    }

    Ok((
        State {
            v: v_new,
            b: b_new,
            time: t + dt,
        },
        record,
    ))
}
