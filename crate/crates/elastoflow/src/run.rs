//! Run orchestration: step from 0 to t_end, maintain the energy ledger and
//! its budget, watch the min/max barriers and entropy sign, and write the
//! output set (manifest, ledger CSV, snapshots, final report).

use crate::config::RunConfig;
use crate::diagnostics::{
    apriori_monitor, dissipation_rate, minmax_monitor, thermo_report, AprioriReport, EnergyLedger,
};
use crate::dynamics::{b_rhs, State};
use crate::error::{Error, Result};
use crate::ledger;
use crate::plot::emit_plots;
use crate::scalar::BarrierBounds;
use crate::snapshot::{write_snapshot, SnapshotMeta};
use crate::stepping::{rk4_step, semi_implicit_coupled_step_forced, Forcing, Stepper};
use std::fs;
use std::path::Path;

/// Everything a finished (or failed) run reports.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps_completed: usize,
    pub final_time: f64,
    pub rows: Vec<EnergyLedger>,
    pub apriori: AprioriReport,
    pub max_budget_residual: f64,
    pub max_violation_above: f64,
    pub max_violation_below: f64,
    pub max_barrier_plus: f64,
    pub max_barrier_minus: f64,
    pub newton_iters_median: usize,
    pub newton_iters_max: usize,
    pub max_identity_residual: f64,
    pub min_entropy_production: f64,
    /// Rothe discrete energy estimate: the running value of
    /// `sum_k tau ||(b_{k+1} - b_k)/tau||_2^2 + sup_k ||grad b_k||_2^2`.
    pub rothe_energy_sum: f64,
    /// Ten times the first step's extrapolation of the same sum; the
    /// monitor flags the run if the estimate ever exceeds it.
    pub rothe_energy_bound: f64,
    pub rothe_energy_ok: bool,
    pub failure: Option<String>,
}

impl RunSummary {
    pub fn report_text(&self, config: &RunConfig) -> String {
        let mut s = String::new();
        s.push_str("run report\n==========\n");
        s.push_str(&format!("stepper           : {}\n", config.stepper.name()));
        s.push_str(&format!("steps completed   : {}\n", self.steps_completed));
        s.push_str(&format!("final time        : {}\n", self.final_time));
        s.push_str(&format!("max |budget residual|      : {:.6e}\n", self.max_budget_residual));
        s.push_str(&format!("max barrier violation above: {:.6e}\n", self.max_violation_above));
        s.push_str(&format!("max barrier violation below: {:.6e}\n", self.max_violation_below));
        s.push_str(&format!("max int Gamma+(b)          : {:.6e}\n", self.max_barrier_plus));
        s.push_str(&format!("max int Gamma-(b)          : {:.6e}\n", self.max_barrier_minus));
        s.push_str(&format!("min entropy production     : {:.6e}\n", self.min_entropy_production));
        if config.stepper == Stepper::RotheSemiImplicit {
            s.push_str(&format!(
                "newton iterations          : median {}, max {}\n",
                self.newton_iters_median, self.newton_iters_max
            ));
            s.push_str(&format!(
                "max per-step identity      : {:.6e}\n",
                self.max_identity_residual
            ));
            s.push_str(&format!(
                "discrete energy estimate   : {:.6e} (bound {:.6e}, {})\n",
                self.rothe_energy_sum,
                self.rothe_energy_bound,
                if self.rothe_energy_ok { "ok" } else { "EXCEEDED" }
            ));
        }
        s.push_str("\na priori monitors\n-----------------\n");
        s.push_str(&format!("sup_t ||v||_2        : {:.6e}\n", self.apriori.sup_v_l2));
        s.push_str(&format!("int ||v||_1,2^2 dt   : {:.6e}\n", self.apriori.int_v_h1_sq));
        s.push_str(&format!("sup_t ||grad b||_2   : {:.6e}\n", self.apriori.sup_grad_b_l2));
        s.push_str(&format!("int ||rate/T||_2^2 dt: {:.6e}\n", self.apriori.int_relax_sq));
        s.push_str(&format!("data bound E_total(0): {:.6e}\n", self.apriori.data_bound));
        if self.apriori.flags.is_empty() {
            s.push_str("flags               : none\n");
        } else {
            for f in &self.apriori.flags {
                s.push_str(&format!("FLAG: {f}\n"));
            }
        }
        match &self.failure {
            None => s.push_str("\nstatus: completed\n"),
            Some(msg) => s.push_str(&format!("\nstatus: FAILED — {msg}\n")),
        }
        s
    }
}

/// Advance a configured run in memory. `on_snapshot` is called with
/// `(snapshot_index, state)` at the configured snapshot cadence (step 0
/// included when periodic snapshots are enabled). Returns the summary and
/// the final state.
pub fn simulate_observed(
    config: &RunConfig,
    mut on_snapshot: impl FnMut(usize, &State) -> Result<()>,
) -> Result<(RunSummary, State)> {
    let (state0, bounds) = config.initial_state()?;
    let params = config.params;
    let idx = config.indices()?;
    let cfg = config.scheme()?;
    let n_cut = idx.n_cut;

    let mut state = state0;
    let mut rows: Vec<EnergyLedger> = Vec::new();
    let mut cum_diss = 0.0;
    let mut min_entropy = f64::INFINITY;
    let mut newton_iters: Vec<usize> = Vec::new();
    let mut max_identity: f64 = 0.0;
    let mut snapshots_written = 0usize;
    let mut failure: Option<String> = None;
    // discrete energy estimate of the Rothe trajectory
    let mut rothe_rate_sum = 0.0_f64;
    let mut rothe_grad_sup = state.b.h1_seminorm_sq();
    let mut rothe_energy_bound = f64::INFINITY;
    let mut rothe_energy_ok = true;

    // shared per-row bookkeeping
    let observe = |state: &State,
                       bdot: &crate::spectral::SpectralField,
                       iters: usize,
                       cum: f64,
                       e0: Option<f64>,
                       rows: &mut Vec<EnergyLedger>,
                       vio: &mut (f64, f64, f64, f64),
                       entropy_floor: &mut f64|
     -> Result<EnergyLedger> {
        let mut row = EnergyLedger::measure(state, bdot, &params, n_cut);
        row.cum_dissipation = cum;
        row.budget_residual = row.e_total + cum - e0.unwrap_or(row.e_total);
        row.newton_iters = iters;
        rows.push(row);

        let mm = minmax_monitor(state, &bounds, n_cut);
        vio.0 = vio.0.max(mm.violation_above);
        vio.1 = vio.1.max(mm.violation_below);
        vio.2 = vio.2.max(mm.barrier_plus_integral);
        vio.3 = vio.3.max(mm.barrier_minus_integral);

        if !row.fault {
            let thermo = thermo_report(state, bdot, &params, n_cut)?;
            *entropy_floor = entropy_floor.min(thermo.min_pointwise_production);
        }
        Ok(row)
    };

    let mut vio = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let bdot0 = b_rhs(&state, &params, &idx, None, cfg.mass_solve_tol)?;
    let row0 = observe(&state, &bdot0, 0, 0.0, None, &mut rows, &mut vio, &mut min_entropy)?;
    let e_total0 = row0.e_total;
    let mut prev_rate = row0.d_visc + row0.d_relax;
    if config.snapshot_every > 0 {
        on_snapshot(snapshots_written, &state)?;
        snapshots_written += 1;
    }

    let total_steps = cfg.num_steps();
    let mut steps_completed = 0usize;

    for k in 0..total_steps {
        let remaining = cfg.t_end - state.time;
        if remaining <= 1e-12 * cfg.t_end {
            break;
        }
        let dt = cfg.dt.min(remaining);
        let step_result: Result<(State, usize, f64)> = match cfg.stepper {
            Stepper::ExplicitRk4 => {
                rk4_step(&state, dt, &params, &idx, cfg.mass_solve_tol).map(|s| (s, 0, 0.0))
            }
            Stepper::RotheSemiImplicit => {
                semi_implicit_coupled_step_forced(&state, dt, &params, &idx, &cfg, &Forcing::none(), k)
                    .map(|(s, rec)| (s, rec.newton_iterations, rec.per_step_identity_residual))
            }
        };
        let (next, iters, identity) = match step_result {
            Ok(v) => v,
            Err(e) => {
                failure = Some(format!("step {k} at t = {:.6}: {e}", state.time));
                break;
            }
        };
        if cfg.stepper == Stepper::RotheSemiImplicit {
            let rate_sq = next.b.sub(&state.b).l2_norm_sq() / (dt * dt);
            rothe_rate_sum += dt * rate_sq;
            rothe_grad_sup = rothe_grad_sup.max(next.b.h1_seminorm_sq());
            if k == 0 {
                rothe_energy_bound =
                    10.0 * (total_steps as f64 * dt * rate_sq + rothe_grad_sup).max(1e-300);
            }
            if rothe_rate_sum + rothe_grad_sup > rothe_energy_bound {
                rothe_energy_ok = false;
            }
        }
        state = next;
        steps_completed += 1;
        newton_iters.push(iters);
        max_identity = max_identity.max(identity);

        // dissipation accumulates every step, trapezoid on step endpoints
        let bdot = b_rhs(&state, &params, &idx, None, cfg.mass_solve_tol)?;
        let rate = dissipation_rate(&state, &bdot, &params, n_cut);
        cum_diss += 0.5 * dt * (prev_rate + rate);
        prev_rate = rate;

        let is_last = state.time >= cfg.t_end - 1e-12 * cfg.t_end;
        if (k + 1) % config.ledger_every == 0 || is_last {
            let row = observe(
                &state,
                &bdot,
                iters,
                cum_diss,
                Some(e_total0),
                &mut rows,
                &mut vio,
                &mut min_entropy,
            )?;
            if row.fault && failure.is_none() {
                failure = Some(format!("scalar positivity fault at step {}", k + 1));
                break;
            }
        }
        if config.snapshot_every > 0 && (k + 1) % config.snapshot_every == 0 {
            on_snapshot(snapshots_written, &state)?;
            snapshots_written += 1;
        }
    }

    let apriori = apriori_monitor(&rows, &params);
    let mut iters_sorted = newton_iters.clone();
    iters_sorted.sort_unstable();
    let median = iters_sorted.get(iters_sorted.len() / 2).copied().unwrap_or(0);
    let max_iters = iters_sorted.last().copied().unwrap_or(0);
    let max_budget = rows.iter().map(|r| r.budget_residual.abs()).fold(0.0_f64, f64::max);

    let summary = RunSummary {
        steps_completed,
        final_time: state.time,
        rows,
        apriori,
        max_budget_residual: max_budget,
        max_violation_above: vio.0,
        max_violation_below: vio.1,
        max_barrier_plus: vio.2,
        max_barrier_minus: vio.3,
        newton_iters_median: median,
        newton_iters_max: max_iters,
        max_identity_residual: max_identity,
        min_entropy_production: if min_entropy.is_finite() { min_entropy } else { 0.0 },
        rothe_energy_sum: rothe_rate_sum + rothe_grad_sup,
        rothe_energy_bound,
        rothe_energy_ok,
        failure,
    };
    Ok((summary, state))
}

/// In-memory run without snapshot callbacks.
pub fn simulate(config: &RunConfig) -> Result<(RunSummary, State)> {
    simulate_observed(config, |_, _| Ok(()))
}

/// Full run with file outputs: `manifest.cfg`, `ledger.csv`, periodic and
/// final snapshots, `report.txt` and the standard plots. On failure the
/// partial outputs are retained, the report names the failing step, and an
/// error is returned.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    fs::create_dir_all(&config.out_dir)?;
    fs::write(config.out_dir.join("manifest.cfg"), config.to_text())?;
    let meta = SnapshotMeta {
        params: &config.params,
        n_v: config.n_v,
        l_b: config.l_b,
        n_cut: config.n_cut,
    };

    let result = simulate_observed(config, |index, state| {
        fs::write(
            config.out_dir.join(format!("snap_{index:06}.vbsnap")),
            write_snapshot(state, &meta),
        )?;
        Ok(())
    });
    let (summary, final_state) = match result {
        Ok(v) => v,
        Err(e) => {
            fs::write(
                config.out_dir.join("report.txt"),
                format!("run failed before completion: {e}\n"),
            )?;
            return Err(e);
        }
    };

    fs::write(config.out_dir.join("ledger.csv"), ledger::to_csv(&summary.rows))?;
    fs::write(config.out_dir.join("final.vbsnap"), write_snapshot(&final_state, &meta))?;
    fs::write(config.out_dir.join("report.txt"), summary.report_text(config))?;
    for (name, svg) in emit_plots(&summary.rows)? {
        fs::write(config.out_dir.join(name), svg)?;
    }

    match &summary.failure {
        None => Ok(summary),
        Some(msg) => Err(Error::Invalid(format!("run failed: {msg}"))),
    }
}

/// Run a configuration parsed from a file path.
pub fn run_config_file(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path)?;
    let config = RunConfig::parse(&text)?;
    run(&config)
}

/// Barrier bounds of a config's initial state (for tests and tools).
pub fn initial_bounds(config: &RunConfig) -> Result<BarrierBounds> {
    Ok(config.initial_state()?.1)
}
