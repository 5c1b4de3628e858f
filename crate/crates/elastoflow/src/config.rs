//! Run configuration: flat `key = value` text with `#` comments, every key
//! optional with documented defaults, unknown keys rejected.
//!
//! ```
//! use elastoflow::config::RunConfig;
//! let cfg = RunConfig::parse("
//!     grid.n = 32
//!     indices.n_v = 8
//!     indices.l_b = 8
//!     params.mu = 2.0
//!     ic.preset = uniform
//!     ic.b0 = 0.5
//! ").unwrap();
//! assert_eq!(cfg.grid_n, 32);
//! assert_eq!(cfg.params.mu, 2.0);
//! assert!(RunConfig::parse("params.nu = -1").is_err());
//! ```

use crate::dynamics::{FluidParams, GalerkinIndices, State};
use crate::error::{Error, Result};
use crate::presets::{make_initial_condition, InitialCondition};
use crate::scalar::{BarrierBounds, CutoffIndex};
use crate::spectral::Grid;
use crate::stepping::{SchemeConfig, Stepper};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid_n: usize,
    pub grid_length: f64,
    pub params: FluidParams,
    pub n_v: usize,
    pub l_b: usize,
    pub n_cut: u32,
    pub stepper: Stepper,
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub mass_solve_tol: f64,
    pub ic: InitialCondition,
    pub out_dir: PathBuf,
    pub ledger_every: usize,
    /// Snapshot cadence in steps; 0 disables periodic snapshots (the final
    /// state is always written).
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_n: 64,
            grid_length: std::f64::consts::TAU,
            params: FluidParams::unit(),
            n_v: 16,
            l_b: 16,
            n_cut: 10,
            stepper: Stepper::ExplicitRk4,
            dt: 1e-3,
            t_end: 1.0,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            mass_solve_tol: 1e-10,
            ic: InitialCondition::Equilibrium,
            out_dir: PathBuf::from("out"),
            ledger_every: 1,
            snapshot_every: 0,
        }
    }
}

/// Scratch holding the raw preset keys until the preset name is known.
#[derive(Default)]
struct IcKeys {
    preset: Option<String>,
    b0: Option<f64>,
    amplitude: Option<f64>,
    b_amp: Option<f64>,
    v_amp: Option<f64>,
    k_max: Option<usize>,
    seed: Option<u64>,
}

impl RunConfig {
    /// Parse a configuration text. Unknown keys and violated invariants are
    /// rejected with messages naming the key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut ic = IcKeys::default();

        for (line_no, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', got '{line}'", line_no + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let fdup = |k: &str| Error::Config(format!("invalid value for {k}: '{value}'"));

            let parse_f64 = |k: &str| -> Result<f64> { value.parse::<f64>().map_err(|_| fdup(k)) };
            let parse_usize =
                |k: &str| -> Result<usize> { value.parse::<usize>().map_err(|_| fdup(k)) };
            let parse_u64 = |k: &str| -> Result<u64> { value.parse::<u64>().map_err(|_| fdup(k)) };

            match key {
                "grid.n" => cfg.grid_n = parse_usize(key)?,
                "grid.length" => cfg.grid_length = parse_f64(key)?,
                "params.rho" | "params.nu" | "params.nu1" | "params.mu" | "params.sigma" => {
                    let v = parse_f64(key)?;
                    let field = &key[7..];
                    let positive = |ok: bool| -> Result<()> {
                        if ok {
                            Ok(())
                        } else {
                            Err(Error::Config(format!(
                                "{field} must be positive (the model constants are assumed positive), got {v}"
                            )))
                        }
                    };
                    match field {
                        "rho" => {
                            positive(v > 0.0)?;
                            cfg.params.rho = v;
                        }
                        "nu" => {
                            positive(v > 0.0)?;
                            cfg.params.nu = v;
                        }
                        "nu1" => {
                            positive(v > 0.0)?;
                            cfg.params.nu1 = v;
                        }
                        "mu" => {
                            positive(v > 0.0)?;
                            cfg.params.mu = v;
                        }
                        // sigma = 0 is the documented decoupled benchmark
                        "sigma" => {
                            if !(v >= 0.0) {
                                return Err(Error::Config(format!(
                                    "sigma must be nonnegative, got {v}"
                                )));
                            }
                            cfg.params.sigma = v;
                        }
                        _ => unreachable!(),
                    }
                }
                "indices.n_v" => cfg.n_v = parse_usize(key)?,
                "indices.l_b" => cfg.l_b = parse_usize(key)?,
                "indices.n_cut" => cfg.n_cut = parse_usize(key)? as u32,
                "scheme.stepper" => cfg.stepper = Stepper::parse(value)?,
                "scheme.dt" => cfg.dt = parse_f64(key)?,
                "scheme.t_end" => cfg.t_end = parse_f64(key)?,
                "scheme.newton_tol" => cfg.newton_tol = parse_f64(key)?,
                "scheme.newton_max_iter" => cfg.newton_max_iter = parse_usize(key)?,
                "scheme.mass_solve_tol" => cfg.mass_solve_tol = parse_f64(key)?,
                "ic.preset" => ic.preset = Some(value.to_string()),
                "ic.b0" => ic.b0 = Some(parse_f64(key)?),
                "ic.amplitude" => ic.amplitude = Some(parse_f64(key)?),
                "ic.b_amp" => ic.b_amp = Some(parse_f64(key)?),
                "ic.v_amp" => ic.v_amp = Some(parse_f64(key)?),
                "ic.k_max" => ic.k_max = Some(parse_usize(key)?),
                "ic.seed" => ic.seed = Some(parse_u64(key)?),
                "output.dir" => cfg.out_dir = PathBuf::from(value),
                "output.ledger_every" => cfg.ledger_every = parse_usize(key)?,
                "output.snapshot_every" => cfg.snapshot_every = parse_usize(key)?,
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }

        cfg.ic = match ic.preset.as_deref().unwrap_or("equilibrium") {
            "equilibrium" => InitialCondition::Equilibrium,
            "uniform" => {
                let b0 = ic.b0.unwrap_or(1.0);
                if !(b0 > 0.0) {
                    return Err(Error::Config(format!(
                        "ic.b0 must be strictly positive (the data assumption requires b0 > 0 a.e.), got {b0}"
                    )));
                }
                InitialCondition::Uniform { b0 }
            }
            "taylor_green" => InitialCondition::TaylorGreen {
                amplitude: ic.amplitude.unwrap_or(1.0),
            },
            "perturbed" => InitialCondition::Perturbed {
                b_amp: ic.b_amp.unwrap_or(0.1),
                v_amp: ic.v_amp.unwrap_or(0.1),
                k_max: ic.k_max.unwrap_or(3),
                seed: ic.seed.unwrap_or(0),
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}' (expected equilibrium, uniform, taylor_green or perturbed)"
                )))
            }
        };

        cfg.validate_static()?;
        Ok(cfg)
    }

    /// Checks that need no field construction.
    pub fn validate_static(&self) -> Result<()> {
        Grid::new(self.grid_n, self.grid_length)?;
        let grid = Grid::new(self.grid_n, self.grid_length)?;
        GalerkinIndices::new(self.n_v, self.l_b, CutoffIndex::new(self.n_cut)?, grid)?;
        self.scheme()?.validate()?;
        if self.ledger_every == 0 {
            return Err(Error::Config("output.ledger_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_n, self.grid_length)
    }

    pub fn indices(&self) -> Result<GalerkinIndices> {
        GalerkinIndices::new(self.n_v, self.l_b, CutoffIndex::new(self.n_cut)?, self.grid()?)
    }

    pub fn scheme(&self) -> Result<SchemeConfig> {
        let mut s = SchemeConfig::new(self.dt, self.t_end, self.stepper)?;
        s.newton_tol = self.newton_tol;
        s.newton_max_iter = self.newton_max_iter;
        s.mass_solve_tol = self.mass_solve_tol;
        s.validate()?;
        Ok(s)
    }

    /// Build the initial state and its barrier bounds, enforcing the
    /// admissibility of `n_cut` against the realized initial datum.
    pub fn initial_state(&self) -> Result<(State, BarrierBounds)> {
        let grid = self.grid()?;
        let idx = self.indices()?;
        let state = make_initial_condition(self.ic, grid, &idx)?;
        let (lo, hi) = state.b.min_max();
        let bounds = BarrierBounds::from_range(lo, hi)?;
        let n_cut = CutoffIndex::new(self.n_cut)?;
        if !n_cut.admits(&bounds) {
            return Err(Error::Config(format!(
                "n_cut = {} must exceed both max b0 = {hi:.6} and 1/min b0 = {:.6} for the \
                 barrier arguments to apply",
                self.n_cut,
                1.0 / lo
            )));
        }
        Ok((state, bounds))
    }

    /// Canonical text form; parses back to an identical configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("grid.n = {}\n", self.grid_n));
        s.push_str(&format!("grid.length = {}\n", self.grid_length));
        s.push_str(&format!("params.rho = {}\n", self.params.rho));
        s.push_str(&format!("params.nu = {}\n", self.params.nu));
        s.push_str(&format!("params.nu1 = {}\n", self.params.nu1));
        s.push_str(&format!("params.mu = {}\n", self.params.mu));
        s.push_str(&format!("params.sigma = {}\n", self.params.sigma));
        s.push_str(&format!("indices.n_v = {}\n", self.n_v));
        s.push_str(&format!("indices.l_b = {}\n", self.l_b));
        s.push_str(&format!("indices.n_cut = {}\n", self.n_cut));
        s.push_str(&format!("scheme.stepper = {}\n", self.stepper.name()));
        s.push_str(&format!("scheme.dt = {}\n", self.dt));
        s.push_str(&format!("scheme.t_end = {}\n", self.t_end));
        s.push_str(&format!("scheme.newton_tol = {}\n", self.newton_tol));
        s.push_str(&format!("scheme.newton_max_iter = {}\n", self.newton_max_iter));
        s.push_str(&format!("scheme.mass_solve_tol = {}\n", self.mass_solve_tol));
        s.push_str(&format!("ic.preset = {}\n", self.ic.name()));
        match self.ic {
            InitialCondition::Equilibrium => {}
            InitialCondition::Uniform { b0 } => s.push_str(&format!("ic.b0 = {b0}\n")),
            InitialCondition::TaylorGreen { amplitude } => {
                s.push_str(&format!("ic.amplitude = {amplitude}\n"))
            }
            InitialCondition::Perturbed { b_amp, v_amp, k_max, seed } => {
                s.push_str(&format!("ic.b_amp = {b_amp}\n"));
                s.push_str(&format!("ic.v_amp = {v_amp}\n"));
                s.push_str(&format!("ic.k_max = {k_max}\n"));
                s.push_str(&format!("ic.seed = {seed}\n"));
            }
        }
        s.push_str(&format!("output.dir = {}\n", self.out_dir.display()));
        s.push_str(&format!("output.ledger_every = {}\n", self.ledger_every));
        s.push_str(&format!("output.snapshot_every = {}\n", self.snapshot_every));
        s
    }
}
