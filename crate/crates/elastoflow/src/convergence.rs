//! Convergence studies: sweep one axis (dt, l_b, n_v or grid N) over a base
//! configuration, measure errors against an analytic reference or the finest
//! level, and report observed orders. For the scalar truncation axis the
//! min/max violation metric is additionally required to be non-increasing
//! under refinement.

use crate::config::RunConfig;
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::oracle;
use crate::presets::InitialCondition;
use crate::run::{simulate, RunSummary};
use crate::stepping::Stepper;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Dt,
    LB,
    NV,
    GridN,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(Axis::Dt),
            "l_b" => Ok(Axis::LB),
            "n_v" => Ok(Axis::NV),
            "N" | "grid_n" => Ok(Axis::GridN),
            other => Err(Error::Invalid(format!(
                "unknown axis '{other}' (expected dt, l_b, n_v or N)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Axis::Dt => "dt",
            Axis::LB => "l_b",
            Axis::NV => "n_v",
            Axis::GridN => "N",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub axis: Axis,
    pub levels: Vec<f64>,
    /// One error per level measured against the reference; the reference
    /// level itself carries no error entry for self-convergence studies.
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub max_violations: Vec<f64>,
    pub max_barrier_integrals: Vec<f64>,
    pub reference: String,
    pub flags: Vec<String>,
}

impl RateTable {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "convergence study: axis {}, reference: {}\n",
            self.axis.name(),
            self.reference
        ));
        s.push_str(&format!(
            "{:>14} {:>14} {:>8} {:>14} {:>14}\n",
            self.axis.name(),
            "error",
            "order",
            "max violation",
            "max int Gamma+",
        ));
        for (i, level) in self.levels.iter().enumerate() {
            let err = self
                .errors
                .get(i)
                .map_or("-".to_string(), |e| format!("{e:.6e}"));
            let order = if i > 0 {
                self.orders
                    .get(i - 1)
                    .map_or("-".to_string(), |o| format!("{o:.2}"))
            } else {
                "-".to_string()
            };
            let vio = self
                .max_violations
                .get(i)
                .map_or("-".to_string(), |v| format!("{v:.6e}"));
            let bar = self
                .max_barrier_integrals
                .get(i)
                .map_or("-".to_string(), |v| format!("{v:.6e}"));
            s.push_str(&format!("{level:>14.6e} {err:>14} {order:>8} {vio:>14} {bar:>14}\n"));
        }
        for f in &self.flags {
            s.push_str(&format!("FLAG: {f}\n"));
        }
        s
    }
}

fn with_level(base: &RunConfig, axis: Axis, level: f64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    let as_index = |name: &str| -> Result<usize> {
        if level <= 0.0 || level.fract() != 0.0 {
            return Err(Error::Invalid(format!(
                "{name} levels must be positive integers, got {level}"
            )));
        }
        Ok(level as usize)
    };
    match axis {
        Axis::Dt => {
            if !(level > 0.0) {
                return Err(Error::Invalid(format!("dt level must be positive, got {level}")));
            }
            cfg.dt = level;
        }
        Axis::LB => cfg.l_b = as_index("l_b")?,
        Axis::NV => cfg.n_v = as_index("n_v")?,
        Axis::GridN => cfg.grid_n = as_index("N")?,
    }
    cfg.validate_static()?;
    Ok(cfg)
}

/// L^2 distance between two states over the Fourier modes both resolve.
pub fn state_distance(a: &State, b: &State) -> f64 {
    let band = (a.grid().points_per_axis().min(b.grid().points_per_axis()) / 2 - 1) as i64;
    let area = a.grid().area();
    let mut sum = 0.0;
    for ky in -band..=band {
        for kx in -band..=band {
            sum += (a.b.mode(kx, ky) - b.b.mode(kx, ky)).norm_sqr();
            sum += (a.v.x.mode(kx, ky) - b.v.x.mode(kx, ky)).norm_sqr();
            sum += (a.v.y.mode(kx, ky) - b.v.y.mode(kx, ky)).norm_sqr();
        }
    }
    (area * sum).sqrt()
}

/// Run the sweep. Levels must be ordered from coarsest to finest.
pub fn convergence_study(base: &RunConfig, axis: Axis, levels: &[f64]) -> Result<RateTable> {
    if levels.len() < 3 {
        return Err(Error::Invalid(format!(
            "a convergence study needs at least 3 levels, got {}",
            levels.len()
        )));
    }

    let mut summaries: Vec<(RunSummary, State)> = Vec::with_capacity(levels.len());
    for &level in levels {
        let cfg = with_level(base, axis, level)?;
        let (summary, state) = simulate(&cfg)?;
        if let Some(f) = &summary.failure {
            return Err(Error::Invalid(format!(
                "level {level} failed: {f} (cannot complete the study)"
            )));
        }
        summaries.push((summary, state));
    }

    // analytic reference for the uniform preset on the dt axis; otherwise the
    // finest level is the reference
    let analytic = matches!(base.ic, InitialCondition::Uniform { .. }) && axis == Axis::Dt;
    let mut errors: Vec<f64> = Vec::new();
    let reference;
    if analytic {
        let c = match base.ic {
            InitialCondition::Uniform { b0 } => b0,
            _ => unreachable!(),
        };
        let r = base.params.mu / base.params.nu1;
        let exact = oracle::logistic(c, r, base.t_end);
        reference = format!("analytic logistic value {exact:.12e}");
        for (_, state) in &summaries {
            errors.push((state.b.mean() - exact).abs());
        }
    } else {
        reference = format!("finest level {}", levels[levels.len() - 1]);
        let (_, ref fine) = summaries[summaries.len() - 1];
        for (_, state) in &summaries[..summaries.len() - 1] {
            errors.push(state_distance(state, fine));
        }
    }

    // observed orders from consecutive error pairs
    let mut orders = Vec::new();
    for i in 1..errors.len() {
        let h_ratio = match axis {
            Axis::Dt => levels[i - 1] / levels[i],
            // resolution axes refine as the level grows
            _ => levels[i] / levels[i - 1],
        };
        let order = if errors[i] > 0.0 && errors[i - 1] > 0.0 && h_ratio != 1.0 {
            (errors[i - 1] / errors[i]).ln() / h_ratio.ln()
        } else {
            f64::NAN
        };
        orders.push(order);
    }

    let max_violations: Vec<f64> = summaries
        .iter()
        .map(|(s, _)| s.max_violation_above.max(s.max_violation_below))
        .collect();
    let max_barrier_integrals: Vec<f64> = summaries
        .iter()
        .map(|(s, _)| s.max_barrier_plus.max(s.max_barrier_minus))
        .collect();

    let mut flags = Vec::new();
    if analytic {
        for w in errors.windows(2) {
            if w[1] > w[0] * (1.0 + 1e-9) + 1e-14 {
                flags.push(format!(
                    "non-monotone error on the analytic benchmark: {} -> {}",
                    w[0], w[1]
                ));
                break;
            }
        }
        // sanity: the documented temporal order of the configured stepper
        let expected = match base.stepper {
            Stepper::ExplicitRk4 => 4.0,
            Stepper::RotheSemiImplicit => 1.0,
        };
        if let Some(&last) = orders.last() {
            if last.is_finite() && (last - expected).abs() > 1.0 {
                flags.push(format!(
                    "observed temporal order {last:.2} far from the stepper's order {expected}"
                ));
            }
        }
    }
    if axis == Axis::LB {
        // the min/max violation must not grow under scalar refinement
        let floor = 1e-12;
        for w in max_violations.windows(2) {
            if w[1] > w[0] + floor {
                flags.push(format!(
                    "min/max violation increased under l_b refinement: {} -> {}",
                    w[0], w[1]
                ));
                break;
            }
        }
    }

    Ok(RateTable {
        axis,
        levels: levels.to_vec(),
        errors,
        orders,
        max_violations,
        max_barrier_integrals,
        reference,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic_base() -> RunConfig {
        let mut cfg = RunConfig::parse(
            "grid.n = 16\nindices.n_v = 4\nindices.l_b = 4\nindices.n_cut = 4\n\
             ic.preset = uniform\nic.b0 = 0.5\nscheme.t_end = 1.0\nscheme.dt = 0.1",
        )
        .unwrap();
        cfg.params.mu = 2.0;
        cfg
    }

    #[test]
    fn rk4_dt_sweep_shows_fourth_order() {
        let base = logistic_base();
        let table = convergence_study(&base, Axis::Dt, &[0.2, 0.1, 0.05, 0.025]).unwrap();
        assert!(!table.flagged(), "{:?}", table.flags);
        for &o in &table.orders {
            assert!((o - 4.0).abs() < 0.25, "order {o}");
        }
        let text = table.render_text();
        assert!(text.contains("axis dt"));
    }

    #[test]
    fn rothe_dt_sweep_shows_first_order() {
        let mut base = logistic_base();
        base.stepper = Stepper::RotheSemiImplicit;
        let table = convergence_study(&base, Axis::Dt, &[0.08, 0.04, 0.02]).unwrap();
        assert!(!table.flagged(), "{:?}", table.flags);
        for &o in &table.orders {
            assert!((o - 1.0).abs() < 0.15, "order {o}");
        }
    }

    #[test]
    fn too_few_levels_is_rejected() {
        let base = logistic_base();
        assert!(convergence_study(&base, Axis::Dt, &[0.1, 0.05]).is_err());
    }

    #[test]
    fn integer_axis_rejects_fractional_levels() {
        let base = logistic_base();
        assert!(convergence_study(&base, Axis::LB, &[4.5, 8.0, 16.0]).is_err());
    }
}
