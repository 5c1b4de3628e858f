//! Assembly of the semi-discrete Galerkin right-hand sides: the momentum
//! balance with viscous, convective and Korteweg stresses, and the cut-off
//! scalar equation whose weak form carries the weighted mass operator
//! `M(b) w = P [ w / T_n(b)^2 ]`.
//!
//! Nonlinear products are evaluated pseudospectrally on the physical grid
//! and dealiased with the 2/3 rule; Galerkin truncation indices are required
//! to stay at or below N/3 so truncation and dealiasing compose cleanly.

use crate::error::{Error, Result};
use crate::scalar::{self, CutoffIndex};
use crate::spectral::{
    from_physical_unchecked, pointwise_product, Grid, SpectralField, VectorField,
};

/// The five material constants of the model. All must be positive except the
/// stress-diffusion coefficient `sigma`, which may be zero: that choice
/// decouples the system into plain Navier-Stokes plus damped transport and is
/// kept available as a benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    pub rho: f64,
    pub nu: f64,
    pub nu1: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl FluidParams {
    pub fn new(rho: f64, nu: f64, nu1: f64, mu: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [("rho", rho), ("nu", nu), ("nu1", nu1), ("mu", mu)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Invalid(format!("sigma must be nonnegative, got {sigma}")));
        }
        Ok(Self { rho, nu, nu1, mu, sigma })
    }

    /// Unit constants, handy in tests.
    pub fn unit() -> Self {
        Self { rho: 1.0, nu: 1.0, nu1: 1.0, mu: 1.0, sigma: 1.0 }
    }
}

/// Galerkin truncation indices: `n_v` for velocity, `l_b` for the scalar,
/// plus the cut-off index of `T_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalerkinIndices {
    pub n_v: usize,
    pub l_b: usize,
    pub n_cut: CutoffIndex,
}

impl GalerkinIndices {
    pub fn new(n_v: usize, l_b: usize, n_cut: CutoffIndex, grid: Grid) -> Result<Self> {
        let n = grid.points_per_axis();
        if 3 * n_v > n || n_v == 0 {
            return Err(Error::Invalid(format!(
                "n_v = {n_v} incompatible with dealiasing on N = {n} (need 1 <= n_v <= N/3)"
            )));
        }
        if 3 * l_b > n || l_b == 0 {
            return Err(Error::Invalid(format!(
                "l_b = {l_b} incompatible with dealiasing on N = {n} (need 1 <= l_b <= N/3)"
            )));
        }
        Ok(Self { n_v, l_b, n_cut })
    }
}

/// Simulation unknown: a solenoidal velocity and the positive scalar `b`
/// at one time instant.
#[derive(Debug, Clone)]
pub struct State {
    pub v: VectorField,
    pub b: SpectralField,
    pub time: f64,
}

impl State {
    pub fn new(v: VectorField, b: SpectralField, time: f64) -> Result<Self> {
        if v.grid() != b.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { v, b, time })
    }

    pub fn grid(&self) -> Grid {
        self.b.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.b.is_finite()
    }
}

/// Symmetric 2x2 tensor field with the off-diagonal entry stored once.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    pub xx: SpectralField,
    pub xy: SpectralField,
    pub yy: SpectralField,
}

impl SymTensorField {
    /// `||A||_2^2 = int (A_xx^2 + 2 A_xy^2 + A_yy^2) dx`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.xx.l2_norm_sq() + 2.0 * self.xy.l2_norm_sq() + self.yy.l2_norm_sq()
    }

    /// `<A, grad w> = int A : grad w dx` for a vector field `w`.
    pub fn contract_gradient(&self, w: &VectorField) -> Result<f64> {
        let gx = w.x.gradient();
        let gy = w.y.gradient();
        Ok(self.xx.inner_product(&gx.x)?
            + self.xy.inner_product(&gx.y)?
            + self.xy.inner_product(&gy.x)?
            + self.yy.inner_product(&gy.y)?)
    }
}

/// Symmetric velocity gradient `D = (grad v + grad v^T)/2`, exact in
/// spectral space.
pub fn symmetric_gradient(v: &VectorField) -> SymTensorField {
    let gx = v.x.gradient();
    let gy = v.y.gradient();
    SymTensorField {
        xx: gx.x,
        xy: gx.y.add(&gy.x).scale(0.5),
        yy: gy.y,
    }
}

/// Dealiased outer product `grad b (x) grad b`.
pub fn gradient_outer_product(b: &SpectralField) -> Result<SymTensorField> {
    let g = b.gradient();
    Ok(SymTensorField {
        xx: pointwise_product(&g.x, &g.x)?.dealias(),
        xy: pointwise_product(&g.x, &g.y)?.dealias(),
        yy: pointwise_product(&g.y, &g.y)?.dealias(),
    })
}

/// Extra stress `S = 2 nu D(v) - sigma grad b (x) grad b`.
pub fn stress_extra(state: &State, params: &FluidParams) -> Result<SymTensorField> {
    let d = symmetric_gradient(&state.v);
    let k = gradient_outer_product(&state.b)?;
    Ok(SymTensorField {
        xx: d.xx.scale(2.0 * params.nu).add_scaled(-params.sigma, &k.xx),
        xy: d.xy.scale(2.0 * params.nu).add_scaled(-params.sigma, &k.xy),
        yy: d.yy.scale(2.0 * params.nu).add_scaled(-params.sigma, &k.yy),
    })
}

/// Row-wise divergence of a symmetric tensor field.
fn tensor_divergence(t: &SymTensorField) -> VectorField {
    let dxx = t.xx.gradient();
    let dxy = t.xy.gradient();
    let dyy = t.yy.gradient();
    VectorField {
        x: dxx.x.add(&dxy.y),
        y: dxy.x.add(&dyy.y),
    }
}

/// Momentum right-hand side:
/// `dv/dt = P Leray[ -div(v(x)v) + (nu/rho) Lap v - (sigma/rho) div(grad b (x) grad b) ] + forcing`,
/// dealiased, Leray-projected and truncated to `n_v`.
pub fn momentum_rhs(
    state: &State,
    params: &FluidParams,
    idx: &GalerkinIndices,
    forcing: Option<&VectorField>,
) -> Result<VectorField> {
    let v = &state.v;
    // convective tensor v (x) v
    let conv = SymTensorField {
        xx: pointwise_product(&v.x, &v.x)?.dealias(),
        xy: pointwise_product(&v.x, &v.y)?.dealias(),
        yy: pointwise_product(&v.y, &v.y)?.dealias(),
    };
    let mut rhs = tensor_divergence(&conv).scale(-1.0);

    let visc = VectorField {
        x: v.x.laplacian(),
        y: v.y.laplacian(),
    };
    rhs = rhs.add_scaled(params.nu / params.rho, &visc);

    if params.sigma != 0.0 {
        let korteweg = tensor_divergence(&gradient_outer_product(&state.b)?);
        rhs = rhs.add_scaled(-params.sigma / params.rho, &korteweg);
    }

    if let Some(f) = forcing {
        rhs = rhs.add(f);
    }

    rhs.leray_project().truncate(idx.n_v)
}

/// Korteweg part of the momentum right-hand side alone, for the exchange
/// diagnostics: `-(sigma/rho) P Leray[ div(grad b (x) grad b) ]`.
pub fn momentum_rhs_korteweg(
    state: &State,
    params: &FluidParams,
    idx: &GalerkinIndices,
) -> Result<VectorField> {
    let korteweg = tensor_divergence(&gradient_outer_product(&state.b)?);
    korteweg
        .scale(-params.sigma / params.rho)
        .leray_project()
        .truncate(idx.n_v)
}

/// The weighted Galerkin mass operator `M(b) w = P^l [ w / T_n(b)^2 ]`,
/// symmetric positive definite with spectrum inside `[n^-2, n^2]`.
pub struct WeightedMass {
    grid: Grid,
    l_b: usize,
    inv_t2: Vec<f64>,
}

impl WeightedMass {
    pub fn new(b: &SpectralField, n_cut: CutoffIndex, l_b: usize) -> Self {
        let inv_t2: Vec<f64> = b
            .physical()
            .iter()
            .map(|&s| {
                let t = scalar::cutoff(n_cut, s);
                1.0 / (t * t)
            })
            .collect();
        Self {
            grid: b.grid(),
            l_b,
            inv_t2,
        }
    }

    pub fn apply(&self, w: &SpectralField) -> SpectralField {
        // complex pathway: pointwise real weights conjugated by the unitary
        // transform are exactly SPD, with no kernel on the anti-Hermitian
        // part of the coefficient space
        let wp = w.complex_physical();
        let weighted: Vec<_> = wp.iter().zip(self.inv_t2.iter()).map(|(a, b)| a * b).collect();
        SpectralField::from_complex_physical(self.grid, &weighted)
            .truncate(self.l_b)
            .expect("l_b validated against the grid")
    }

    /// Matrix-free conjugate gradients for `M y = rhs` on the truncated span.
    /// `M` is SPD, so this converges; the error path only trips when `tol`
    /// sits below the floating-point floor of the operator.
    pub fn solve(&self, rhs: &SpectralField, tol: f64, max_iter: usize) -> Result<SpectralField> {
        // start from the mean-weight rescaling of the right-hand side
        let mean_w = self.inv_t2.iter().sum::<f64>() / self.inv_t2.len() as f64;
        let x0 = rhs.scale(1.0 / mean_w);
        cg_solve(|w| self.apply(w), rhs, x0, tol, max_iter)
    }
}

/// Conjugate gradients for an SPD operator given as a closure. Tracks the
/// best iterate by true residual and restarts once from it when the
/// recurrence destabilizes, which happens when `tol` is at or below the
/// roundoff floor; succeeding means the returned iterate genuinely satisfies
/// `||A x - rhs|| <= tol ||rhs||`.
pub(crate) fn cg_solve(
    apply: impl Fn(&SpectralField) -> SpectralField,
    rhs: &SpectralField,
    x0: SpectralField,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralField> {
    let rhs_norm = rhs.l2_norm();
    if rhs_norm == 0.0 {
        return Ok(SpectralField::zeros(rhs.grid()));
    }
    let target = tol * rhs_norm;

    let mut x = x0;
    let mut r = rhs.sub(&apply(&x));
    let mut best_x = x.clone();
    let mut best_res = r.l2_norm();
    if best_res <= target {
        return Ok(best_x);
    }
    let mut p = r.clone();
    let mut rs_old = r.l2_norm_sq();
    let mut restarts = 0usize;
    let mut iterations = 0usize;

    while iterations < max_iter {
        iterations += 1;
        let ap = apply(&p);
        let p_ap = p.inner_product(&ap).expect("same grid");
        let diverging = p_ap <= 0.0 || !p_ap.is_finite();
        if !diverging {
            let alpha = rs_old / p_ap;
            x = x.add_scaled(alpha, &p);
            r = r.add_scaled(-alpha, &ap);
            let rs_new = r.l2_norm_sq();
            if rs_new.sqrt() <= target {
                // verify against the true residual before declaring success
                let true_r = rhs.sub(&apply(&x));
                let true_norm = true_r.l2_norm();
                if true_norm <= target {
                    return Ok(x);
                }
                if true_norm < best_res {
                    // the restart below recomputes the residual of best_x
                    best_x = x.clone();
                }
            } else {
                if rs_new.sqrt() < best_res {
                    // keep the recurrence residual as a cheap proxy; verified
                    // on the success and restart paths
                    best_res = rs_new.sqrt();
                    best_x = x.clone();
                }
                p = r.add_scaled(rs_new / rs_old, &p);
                rs_old = rs_new;
                continue;
            }
        }
        // restart from the best iterate with a freshly computed residual
        if restarts >= 2 {
            break;
        }
        restarts += 1;
        x = best_x.clone();
        r = rhs.sub(&apply(&x));
        let fresh = r.l2_norm();
        if fresh <= target {
            return Ok(x);
        }
        best_res = fresh;
        p = r.clone();
        rs_old = r.l2_norm_sq();
    }

    let final_res = rhs.sub(&apply(&best_x)).l2_norm();
    if final_res <= target {
        return Ok(best_x);
    }
    Err(Error::MassSolve {
        residual: final_res / rhs_norm,
        tol,
        iterations,
    })
}

/// One-shot application `P^l[ w / T_n(b)^2 ]`.
pub fn weighted_mass_apply(
    b: &SpectralField,
    n_cut: CutoffIndex,
    l_b: usize,
    w: &SpectralField,
) -> SpectralField {
    WeightedMass::new(b, n_cut, l_b).apply(w)
}

/// One-shot solve of `M(b) y = rhs` to relative residual `tol`.
pub fn weighted_mass_solve(
    b: &SpectralField,
    n_cut: CutoffIndex,
    l_b: usize,
    rhs: &SpectralField,
    tol: f64,
) -> Result<SpectralField> {
    WeightedMass::new(b, n_cut, l_b).solve(rhs, tol, default_mass_iter_cap(n_cut))
}

pub(crate) fn default_mass_iter_cap(n_cut: CutoffIndex) -> usize {
    200 + 40 * n_cut.index() as usize
}

/// Pointwise physical-space assembly of
/// `nu1 (bdot + v . grad b) / T_n(b)^2 + mu (1 - 1/T_n(b))`, the non-elliptic
/// part of the scalar weak form. `bdot` may be `None` for the stationary part.
fn scalar_weak_density(
    state: &State,
    bdot: Option<&SpectralField>,
    params: &FluidParams,
    n_cut: CutoffIndex,
) -> Vec<f64> {
    let grad_b = state.b.gradient();
    let gx = grad_b.x.physical();
    let gy = grad_b.y.physical();
    let vx = state.v.x.physical();
    let vy = state.v.y.physical();
    let bp = state.b.physical();
    let bdot_p = bdot.map(|f| f.physical());
    let mut out = Vec::with_capacity(bp.len());
    for i in 0..bp.len() {
        let t = scalar::cutoff(n_cut, bp[i]);
        let transport = vx[i] * gx[i] + vy[i] * gy[i];
        let rate = bdot_p.as_ref().map_or(0.0, |d| d[i]);
        out.push(params.nu1 * (rate + transport) / (t * t) + params.mu * (1.0 - 1.0 / t));
    }
    out
}

/// Weak residual of the scalar equation against one test function:
/// `int nu1 (bdot + v.grad b) test / T_n(b)^2 + mu (1 - 1/T_n(b)) test
///  + 2 sigma grad b . grad test dx`.
/// A Galerkin solution makes this vanish for every retained test mode.
pub fn b_weak_residual(
    state: &State,
    bdot: &SpectralField,
    params: &FluidParams,
    idx: &GalerkinIndices,
    test: &SpectralField,
) -> Result<f64> {
    let density = scalar_weak_density(state, Some(bdot), params, idx.n_cut);
    let density_hat = from_physical_unchecked(state.grid(), &density);
    let bulk = density_hat.inner_product(test)?;
    let elliptic = 2.0 * params.sigma * state.b.gradient_inner_product(test)?;
    Ok(bulk + elliptic)
}

/// Scalar right-hand side: the unique truncated coefficient vector making
/// [`b_weak_residual`] vanish on all retained modes,
/// `db/dt = -M(b)^{-1} P^l[ nu1 (v.grad b)/T_n(b)^2 + mu (1 - 1/T_n(b)) - 2 sigma Lap b ] / nu1 + forcing`.
pub fn b_rhs(
    state: &State,
    params: &FluidParams,
    idx: &GalerkinIndices,
    forcing: Option<&SpectralField>,
    mass_tol: f64,
) -> Result<SpectralField> {
    let stationary = scalar_weak_density(state, None, params, idx.n_cut);
    let mut q = from_physical_unchecked(state.grid(), &stationary).truncate(idx.l_b)?;
    q = q.add_scaled(-2.0 * params.sigma, &state.b.laplacian().truncate(idx.l_b)?);
    let mass = WeightedMass::new(&state.b, idx.n_cut, idx.l_b);
    let y = mass.solve(&q, mass_tol, default_mass_iter_cap(idx.n_cut))?;
    let mut bdot = y.scale(-1.0 / params.nu1);
    if let Some(f) = forcing {
        bdot = bdot.add(f);
    }
    Ok(bdot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid32() -> Grid {
        Grid::square(32).unwrap()
    }

    fn indices(grid: Grid, m: usize, n_cut: u32) -> GalerkinIndices {
        GalerkinIndices::new(m, m, CutoffIndex::new(n_cut).unwrap(), grid).unwrap()
    }

    fn random_scalar(grid: Grid, band: usize, amp: f64, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(grid);
        let m = band as i64;
        for ky in -m..=m {
            for kx in -m..=m {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let decay = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
                let c = Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * amp * decay;
                f.set_mode(kx, ky, c);
            }
        }
        f
    }

    fn random_positive_b(grid: Grid, band: usize, seed: u64) -> SpectralField {
        let pert = random_scalar(grid, band, 0.4, seed);
        let scale = 0.4 / pert.max_abs().max(1e-12);
        SpectralField::constant(grid, 1.0).add(&pert.scale(scale))
    }

    fn random_solenoidal(grid: Grid, band: usize, seed: u64) -> VectorField {
        VectorField {
            x: random_scalar(grid, band, 1.0, seed),
            y: random_scalar(grid, band, 1.0, seed + 1),
        }
        .leray_project()
    }

    #[test]
    fn params_validation() {
        assert!(FluidParams::new(1.0, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(FluidParams::new(1.0, 1.0, 1.0, 1.0, 0.0).is_ok());
        assert!(FluidParams::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn indices_respect_dealias_bound() {
        let grid = grid32();
        assert!(GalerkinIndices::new(10, 10, CutoffIndex::new(2).unwrap(), grid).is_ok());
        assert!(GalerkinIndices::new(11, 10, CutoffIndex::new(2).unwrap(), grid).is_err());
    }

    #[test]
    fn stress_extra_vanishes_at_rest() {
        let grid = grid32();
        let state = State::new(VectorField::zeros(grid), SpectralField::constant(grid, 1.5), 0.0)
            .unwrap();
        let s = stress_extra(&state, &FluidParams::unit()).unwrap();
        assert!(s.l2_norm_sq() < 1e-24);
    }

    #[test]
    fn stress_extra_shear_flow() {
        // v = (sin y, 0): D has off-diagonal cos(y)/2, so S_xy = cos y for nu = 1
        let grid = grid32();
        let v = VectorField {
            x: SpectralField::from_fn(grid, |_, y| y.sin()),
            y: SpectralField::zeros(grid),
        };
        let state = State::new(v, SpectralField::constant(grid, 1.0), 0.0).unwrap();
        let s = stress_extra(&state, &FluidParams::unit()).unwrap();
        let expected = SpectralField::from_fn(grid, |_, y| y.cos());
        assert!(s.xy.sub(&expected).l2_norm() < 1e-11);
        assert!(s.xx.l2_norm() < 1e-12);
        assert!(s.yy.l2_norm() < 1e-12);
    }

    #[test]
    fn stress_extra_korteweg_part() {
        // b = sin x: grad b (x) grad b has only the xx entry cos^2 x
        let grid = grid32();
        let b = SpectralField::from_fn(grid, |x, _| x.sin());
        let state = State::new(VectorField::zeros(grid), b, 0.0).unwrap();
        let s = stress_extra(&state, &FluidParams::unit()).unwrap();
        let expected = SpectralField::from_fn(grid, |x, _| -(x.cos() * x.cos()));
        assert!(s.xx.sub(&expected).l2_norm() < 1e-11);
        assert!(s.xy.l2_norm() < 1e-12);
        assert!(s.yy.l2_norm() < 1e-12);
    }

    #[test]
    fn momentum_rhs_zero_at_rest() {
        let grid = grid32();
        let state = State::new(VectorField::zeros(grid), SpectralField::constant(grid, 2.0), 0.0)
            .unwrap();
        let rhs = momentum_rhs(&state, &FluidParams::unit(), &indices(grid, 10, 4), None).unwrap();
        assert!(rhs.l2_norm() < 1e-14);
    }

    #[test]
    fn momentum_rhs_taylor_green_is_pure_viscous_decay() {
        // the nonlinear term of the Taylor-Green vortex is a gradient, so the
        // projection removes it and the rhs is -2 nu v
        let grid = grid32();
        let v = VectorField {
            x: SpectralField::from_fn(grid, |x, y| x.sin() * y.cos()),
            y: SpectralField::from_fn(grid, |x, y| -(x.cos() * y.sin())),
        };
        let state = State::new(v.clone(), SpectralField::constant(grid, 1.0), 0.0).unwrap();
        let rhs = momentum_rhs(&state, &FluidParams::unit(), &indices(grid, 10, 4), None).unwrap();
        let expected = v.scale(-2.0);
        assert!(rhs.sub(&expected).l2_norm() < 1e-10 * expected.l2_norm());
    }

    #[test]
    fn momentum_rhs_output_is_solenoidal_and_truncated() {
        let grid = grid32();
        let state = State::new(
            random_solenoidal(grid, 9, 41).truncate(9).unwrap(),
            random_positive_b(grid, 9, 42).truncate(9).unwrap(),
            0.0,
        )
        .unwrap();
        let idx = indices(grid, 9, 4);
        let rhs = momentum_rhs(&state, &FluidParams::unit(), &idx, None).unwrap();
        assert!(rhs.max_divergence() <= 1e-10 * rhs.max_gradient().max(1e-300));
        let band = rhs.x.active_band(1e-300).max(rhs.y.active_band(1e-300));
        assert!(band <= 9, "modes above n_v survived: band {band}");
    }

    #[test]
    fn korteweg_divergence_matches_finite_difference_oracle() {
        // spectral assembly of div(grad b (x) grad b) against a centered
        // finite-difference evaluation on a 512^2 grid
        let grid = grid32();
        let b_fn = |x: f64, _y: f64| x.sin();
        let b = SpectralField::from_fn(grid, b_fn);
        let outer = gradient_outer_product(&b).unwrap();
        let spectral = tensor_divergence(&outer);
        let sx = spectral.x.physical();
        let fine = 512;
        let (fd_x, _) = crate::oracle::korteweg_divergence_fd(b_fn, grid, fine);
        let stride = fine / grid.points_per_axis();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for iy in 0..grid.points_per_axis() {
            for ix in 0..grid.points_per_axis() {
                let coarse = sx[iy * grid.points_per_axis() + ix];
                let fd = fd_x[(iy * stride) * fine + ix * stride];
                worst = worst.max((coarse - fd).abs());
                scale = scale.max(fd.abs());
            }
        }
        assert!(worst <= 1e-6 * scale.max(1.0), "FD mismatch {worst:.3e}");

        // for b = sin x the divergence is the pure gradient of cos(2x)/2, so
        // the projected momentum contribution vanishes
        let state = State::new(VectorField::zeros(grid), b, 0.0).unwrap();
        let params = FluidParams::unit();
        let rhs = momentum_rhs(&state, &params, &indices(grid, 10, 4), None).unwrap();
        assert!(rhs.l2_norm() < 1e-12);

        // a genuinely two-dimensional scalar exercises both components
        let b2_fn = |x: f64, y: f64| (x + 0.5 * y).sin() + 0.3 * (2.0 * y).cos();
        let b2 = SpectralField::from_fn(grid, b2_fn);
        let spectral2 = tensor_divergence(&gradient_outer_product(&b2).unwrap());
        let (fd2_x, fd2_y) = crate::oracle::korteweg_divergence_fd(b2_fn, grid, fine);
        let s2x = spectral2.x.physical();
        let s2y = spectral2.y.physical();
        let mut worst2 = 0.0_f64;
        let mut scale2 = 0.0_f64;
        for iy in 0..grid.points_per_axis() {
            for ix in 0..grid.points_per_axis() {
                let i_c = iy * grid.points_per_axis() + ix;
                let i_f = (iy * stride) * fine + ix * stride;
                worst2 = worst2.max((s2x[i_c] - fd2_x[i_f]).abs());
                worst2 = worst2.max((s2y[i_c] - fd2_y[i_f]).abs());
                scale2 = scale2.max(fd2_x[i_f].abs().max(fd2_y[i_f].abs()));
            }
        }
        assert!(worst2 <= 1e-6 * scale2, "2D FD mismatch {worst2:.3e}");
    }

    #[test]
    fn convective_energy_transfer_is_antisymmetric() {
        // <div(v (x) v), v> = 0 for dealiased solenoidal v
        let grid = grid32();
        for seed in 0..5 {
            let v = random_solenoidal(grid, 8, 100 + seed).truncate(8).unwrap();
            let conv = SymTensorField {
                xx: pointwise_product(&v.x, &v.x).unwrap().dealias(),
                xy: pointwise_product(&v.x, &v.y).unwrap().dealias(),
                yy: pointwise_product(&v.y, &v.y).unwrap().dealias(),
            };
            let transfer = tensor_divergence(&conv).inner_product(&v).unwrap();
            let scale = v.l2_norm().powi(3).max(1.0);
            assert!(transfer.abs() <= 1e-10 * scale, "transfer {transfer}");
        }
    }

    #[test]
    fn weighted_mass_identity_weight() {
        let grid = grid32();
        let b = SpectralField::constant(grid, 1.0);
        let w = random_scalar(grid, 6, 1.0, 5).truncate(6).unwrap();
        let out = weighted_mass_apply(&b, CutoffIndex::new(4).unwrap(), 6, &w);
        assert!(out.sub(&w).l2_norm() < 1e-12 * w.l2_norm());
    }

    #[test]
    fn weighted_mass_constant_weight() {
        let grid = grid32();
        let b = SpectralField::constant(grid, 2.0);
        let w = random_scalar(grid, 6, 1.0, 6).truncate(6).unwrap();
        let out = weighted_mass_apply(&b, CutoffIndex::new(4).unwrap(), 6, &w);
        assert!(out.sub(&w.scale(0.25)).l2_norm() < 1e-12 * w.l2_norm());
    }

    #[test]
    fn weighted_mass_is_self_adjoint_with_bounded_spectrum() {
        let grid = grid32();
        let n_cut = CutoffIndex::new(4).unwrap();
        let b = random_positive_b(grid, 7, 77);
        let mass = WeightedMass::new(&b, n_cut, 8);
        for seed in 0..4 {
            let w1 = random_scalar(grid, 8, 1.0, 200 + seed).truncate(8).unwrap();
            let w2 = random_scalar(grid, 8, 1.0, 300 + seed).truncate(8).unwrap();
            let lhs = mass.apply(&w1).inner_product(&w2).unwrap();
            let rhs = w1.inner_product(&mass.apply(&w2)).unwrap();
            assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
            let rayleigh = mass.apply(&w1).inner_product(&w1).unwrap() / w1.l2_norm_sq();
            let nf = n_cut.value();
            assert!(rayleigh >= 1.0 / (nf * nf) - 1e-12);
            assert!(rayleigh <= nf * nf + 1e-12);
        }
    }

    #[test]
    fn weighted_mass_solve_constant_weights() {
        let grid = grid32();
        let n_cut = CutoffIndex::new(4).unwrap();
        let rhs = random_scalar(grid, 6, 1.0, 9).truncate(6).unwrap();
        let y1 = weighted_mass_solve(&SpectralField::constant(grid, 1.0), n_cut, 6, &rhs, 1e-13)
            .unwrap();
        assert!(y1.sub(&rhs).l2_norm() < 1e-11 * rhs.l2_norm());
        let y2 = weighted_mass_solve(&SpectralField::constant(grid, 2.0), n_cut, 6, &rhs, 1e-13)
            .unwrap();
        assert!(y2.sub(&rhs.scale(4.0)).l2_norm() < 1e-11 * rhs.l2_norm());
    }

    #[test]
    fn weighted_mass_solve_residual_oracle() {
        let grid = grid32();
        let n_cut = CutoffIndex::new(4).unwrap();
        let b = random_positive_b(grid, 7, 31); // values inside [0.6, 1.4]
        let rhs = random_scalar(grid, 8, 1.0, 32).truncate(8).unwrap();
        let tol = 1e-12;
        let y = weighted_mass_solve(&b, n_cut, 8, &rhs, tol).unwrap();
        let res = weighted_mass_apply(&b, n_cut, 8, &y).sub(&rhs).l2_norm();
        assert!(res <= tol * rhs.l2_norm() * 1.01, "residual {res}");
    }

    #[test]
    fn b_rhs_uniform_matches_logistic_reduction() {
        let grid = grid32();
        let idx = indices(grid, 8, 4);
        let params = FluidParams { mu: 1.7, nu1: 0.8, ..FluidParams::unit() };
        // equilibrium
        let eq = State::new(VectorField::zeros(grid), SpectralField::constant(grid, 1.0), 0.0)
            .unwrap();
        let rhs = b_rhs(&eq, &params, &idx, None, 1e-13).unwrap();
        assert!(rhs.l2_norm() < 1e-13);
        // uniform c inside (1/n, n): db/dt = -(mu/nu1)(c^2 - c)
        for &c in &[0.5, 2.0, 1.3] {
            let st = State::new(VectorField::zeros(grid), SpectralField::constant(grid, c), 0.0)
                .unwrap();
            let rhs = b_rhs(&st, &params, &idx, None, 1e-13).unwrap();
            let expected = -(params.mu / params.nu1) * (c * c - c);
            assert!((rhs.mean() - expected).abs() < 1e-11 * expected.abs().max(1.0));
            assert!(rhs.sub(&SpectralField::constant(grid, rhs.mean())).l2_norm() < 1e-11);
        }
    }

    #[test]
    fn b_rhs_annihilates_every_retained_test_mode() {
        let grid = grid32();
        let idx = indices(grid, 6, 4);
        let params = FluidParams { sigma: 0.7, mu: 1.2, nu1: 0.9, ..FluidParams::unit() };
        let b = SpectralField::constant(grid, 1.0)
            .add(&SpectralField::from_fn(grid, |x, _| 0.1 * x.cos()))
            .truncate(idx.l_b)
            .unwrap();
        let v = random_solenoidal(grid, 6, 55).truncate(6).unwrap().scale(0.5);
        let state = State::new(v, b, 0.0).unwrap();
        let bdot = b_rhs(&state, &params, &idx, None, 1e-13).unwrap();

        let mut worst: f64 = 0.0;
        let m = idx.l_b as i64;
        for ky in -m..=m {
            for kx in 0..=m {
                let mut test = SpectralField::zeros(grid);
                test.set_mode(kx, ky, Complex::new(0.7, if kx == 0 && ky == 0 { 0.0 } else { 0.3 }));
                let r = b_weak_residual(&state, &bdot, &params, &idx, &test).unwrap();
                worst = worst.max(r.abs() / test.l2_norm());
            }
        }
        assert!(worst <= 1e-9, "worst weak residual {worst}");
    }

    #[test]
    fn uniform_balance_weak_residual() {
        // b = c, v = 0, bdot = -(mu/nu1)(c^2 - c): the constant test mode pairs to zero
        let grid = grid32();
        let idx = indices(grid, 8, 4);
        let params = FluidParams::unit();
        let c = 1.6;
        let st = State::new(VectorField::zeros(grid), SpectralField::constant(grid, c), 0.0)
            .unwrap();
        let bdot = SpectralField::constant(grid, -(params.mu / params.nu1) * (c * c - c));
        let test = SpectralField::constant(grid, 1.0);
        let r = b_weak_residual(&st, &bdot, &params, &idx, &test).unwrap();
        assert!(r.abs() < 1e-12);
    }
}
