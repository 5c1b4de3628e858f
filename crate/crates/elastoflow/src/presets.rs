//! Initial-condition presets. All presets are band-limited by construction,
//! so Galerkin truncation is exact and the positivity of the scalar survives
//! it; positivity is re-verified on the physical grid anyway.

use crate::dynamics::{GalerkinIndices, State};
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField, VectorField};
use num_complex::Complex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Named initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `v = 0`, `b = 1`: a fixed point of the dynamics.
    Equilibrium,
    /// `v = 0`, spatially uniform `b = b0`; relaxes along the logistic curve.
    Uniform { b0: f64 },
    /// Taylor-Green vortex with `b = 1`; with `sigma = 0` the classical
    /// decaying Navier-Stokes solution.
    TaylorGreen { amplitude: f64 },
    /// Seeded random band-limited perturbation of the equilibrium.
    Perturbed {
        b_amp: f64,
        v_amp: f64,
        k_max: usize,
        seed: u64,
    },
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Equilibrium => "equilibrium",
            InitialCondition::Uniform { .. } => "uniform",
            InitialCondition::TaylorGreen { .. } => "taylor_green",
            InitialCondition::Perturbed { .. } => "perturbed",
        }
    }
}

fn random_band_limited(grid: Grid, k_max: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    let m = k_max as i64;
    for ky in -m..=m {
        for kx in -m..=m {
            if kx == 0 && ky == 0 {
                continue;
            }
            // fill each conjugate pair once, with a mild spectral decay
            if ky < 0 || (ky == 0 && kx < 0) {
                continue;
            }
            let decay = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            let c = Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * decay;
            f.set_mode(kx, ky, c);
        }
    }
    f
}

/// Build the initial state for a preset: `v` solenoidal and truncated to
/// `n_v`, `b` strictly positive and truncated to `l_b`.
pub fn make_initial_condition(
    preset: InitialCondition,
    grid: Grid,
    idx: &GalerkinIndices,
) -> Result<State> {
    let scale = grid.wavenumber_scale();
    let state = match preset {
        InitialCondition::Equilibrium => State::new(
            VectorField::zeros(grid),
            SpectralField::constant(grid, 1.0),
            0.0,
        )?,
        InitialCondition::Uniform { b0 } => {
            if !(b0 > 0.0) {
                return Err(Error::Config(format!(
                    "b0 must be strictly positive (the data assumption requires b0 > 0 a.e.), got {b0}"
                )));
            }
            State::new(VectorField::zeros(grid), SpectralField::constant(grid, b0), 0.0)?
        }
        InitialCondition::TaylorGreen { amplitude } => {
            let v = VectorField {
                x: SpectralField::from_fn(grid, |x, y| {
                    amplitude * (scale * x).sin() * (scale * y).cos()
                }),
                y: SpectralField::from_fn(grid, |x, y| {
                    -amplitude * (scale * x).cos() * (scale * y).sin()
                }),
            };
            State::new(v, SpectralField::constant(grid, 1.0), 0.0)?
        }
        InitialCondition::Perturbed {
            b_amp,
            v_amp,
            k_max,
            seed,
        } => {
            if !(b_amp >= 0.0 && b_amp < 1.0) {
                return Err(Error::Config(format!(
                    "b_amp must lie in [0, 1) so that b0 stays positive, got {b_amp}"
                )));
            }
            if k_max == 0 || k_max > idx.n_v.min(idx.l_b) {
                return Err(Error::Config(format!(
                    "k_max = {k_max} must lie in [1, min(n_v, l_b) = {}] so that presets stay \
                     band-limited under truncation",
                    idx.n_v.min(idx.l_b)
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw_b = random_band_limited(grid, k_max, &mut rng);
            let raw_vx = random_band_limited(grid, k_max, &mut rng);
            let raw_vy = random_band_limited(grid, k_max, &mut rng);
            let b = if b_amp == 0.0 {
                SpectralField::constant(grid, 1.0)
            } else {
                let sup = raw_b.max_abs().max(1e-300);
                SpectralField::constant(grid, 1.0).add(&raw_b.scale(b_amp / sup))
            };
            let v_raw = VectorField { x: raw_vx, y: raw_vy }.leray_project();
            let v = if v_amp == 0.0 {
                VectorField::zeros(grid)
            } else {
                let sup = {
                    let px = v_raw.x.physical();
                    let py = v_raw.y.physical();
                    px.iter()
                        .zip(py.iter())
                        .map(|(a, b)| (a * a + b * b).sqrt())
                        .fold(0.0_f64, f64::max)
                        .max(1e-300)
                };
                v_raw.scale(v_amp / sup)
            };
            State::new(v, b, 0.0)?
        }
    };

    let v = state.v.truncate(idx.n_v)?;
    let b = state.b.truncate(idx.l_b)?;
    let (b_min, _) = b.min_max();
    if !(b_min > 0.0) {
        return Err(Error::Config(format!(
            "initial scalar loses positivity after truncation: min b0 = {b_min}"
        )));
    }
    State::new(v, b, 0.0)
}
