//! The `verify` subcommand: a self-contained oracle and property suite that
//! exercises the closed forms against brute-force references and the core
//! structural identities of the scheme. Prints one line per check; the
//! process exits nonzero if any check fails.

use crate::diagnostics::{korteweg_exchange, thermo_report, weak_residual_momentum};
use crate::dynamics::{
    b_rhs, b_weak_residual, momentum_rhs, weighted_mass_apply, weighted_mass_solve, FluidParams,
    GalerkinIndices, State,
};
use crate::oracle;
use crate::presets::{make_initial_condition, InitialCondition};
use crate::scalar::{self, CutoffIndex};
use crate::spectral::{Grid, SpectralField, VectorField};
use crate::stepping::{rk4_step, rothe_step, SchemeConfig, Stepper};
use num_complex::Complex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(results: &mut Vec<Outcome>, name: &'static str, result: Result<String, String>) {
    let outcome = match result {
        Ok(detail) => Outcome { name, passed: true, detail },
        Err(detail) => Outcome { name, passed: false, detail },
    };
    println!(
        "{} {:<46} {}",
        if outcome.passed { "ok  " } else { "FAIL" },
        outcome.name,
        outcome.detail
    );
    results.push(outcome);
}

fn scalar_kit_vs_oracles() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for &ni in &[2u32, 5, 10] {
        let n = CutoffIndex::new(ni).unwrap();
        let nf = n.value();
        for i in 0..=120 {
            let s = -10.0 * nf + 20.0 * nf * i as f64 / 120.0;
            let pairs = [
                (scalar::theta(n, s), oracle::integrate(|t| t / scalar::cutoff(n, t).powi(2), 0.0, s, 1e-12)),
                (scalar::rothe_f(n, s), oracle::integrate(|t| 1.0 / scalar::cutoff(n, t).powi(2), 0.0, s, 1e-12)),
                (scalar::rothe_cap_f(n, s), oracle::integrate(|t| scalar::rothe_f(n, t), 0.0, s, 1e-12)),
                (scalar::barrier_plus(n, 1.25, s), oracle::integrate(|t| (t - 1.25).max(0.0) / scalar::cutoff(n, t).powi(2), 1.25, s.max(1.25), 1e-12)),
                (scalar::barrier_minus(n, 0.8, s), oracle::integrate(|t| (0.8 - t).max(0.0) / scalar::cutoff(n, t).powi(2), s.min(0.8), 0.8, 1e-12)),
                (scalar::rothe_f_star(n, s), scalar::rothe_f_star_search(n, s)),
            ];
            for (closed, reference) in pairs {
                worst = worst.max((closed - reference).abs() / reference.abs().max(1.0));
            }
            let th = scalar::theta(n, s);
            if 2.0 * th > nf * nf * s * s + 1e-10 || 2.0 * th < s * s / (nf * nf) - 1e-10 {
                return Err(format!("theta bound violated at n={ni}, s={s}"));
            }
            let cf = scalar::rothe_cap_f(n, s);
            if cf > nf * nf * s * s / 2.0 + 1e-10 || cf < s * s / (2.0 * nf * nf) - 1e-10 {
                return Err(format!("F bound violated at n={ni}, s={s}"));
            }
        }
        for i in -12..=12 {
            let a = i as f64 * 0.7;
            let gap = scalar::rothe_cap_f(n, a) + scalar::rothe_f_star(n, scalar::rothe_f(n, a))
                - a * scalar::rothe_f(n, a);
            if gap.abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(format!("Fenchel-Young equality violated at n={ni}, a={a}: {gap}"));
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("worst closed-form-vs-oracle deviation {worst:.2e}"))
    } else {
        Err(format!("closed form deviates from oracle by {worst:.2e}"))
    }
}

fn spectral_properties() -> Result<String, String> {
    let grid = Grid::square(32).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut f = SpectralField::zeros(grid);
    let mut gx = SpectralField::zeros(grid);
    let mut gy = SpectralField::zeros(grid);
    for ky in -9i64..=9 {
        for kx in -9i64..=9 {
            if kx == 0 && ky == 0 {
                continue;
            }
            let mut c = || Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            f.set_mode(kx, ky, c());
            gx.set_mode(kx, ky, c());
            gy.set_mode(kx, ky, c());
        }
    }
    // round trip
    let back = SpectralField::from_physical(grid, &f.physical()).map_err(|e| e.to_string())?;
    let rt = back.sub(&f).l2_norm() / f.l2_norm();
    if rt > 1e-12 {
        return Err(format!("round-trip error {rt:.2e}"));
    }
    // Parseval
    let phys: f64 = f.physical().iter().map(|v| v * v).sum::<f64>() / grid.num_points() as f64;
    let spec: f64 = f.coefficients().iter().map(|c| c.norm_sqr()).sum();
    if (phys - spec).abs() > 1e-12 * spec {
        return Err(format!("Parseval mismatch {:.2e}", (phys - spec).abs()));
    }
    // Leray
    let u = VectorField { x: gx, y: gy };
    let p = u.leray_project();
    let div_ratio = p.max_divergence() / p.max_gradient().max(1e-300);
    if div_ratio > 1e-10 {
        return Err(format!("Leray projection leaves divergence {div_ratio:.2e}"));
    }
    let pp = p.leray_project();
    if pp.sub(&p).l2_norm() > 1e-12 * p.l2_norm() {
        return Err("Leray projection is not idempotent".into());
    }
    Ok(format!("round trip {rt:.2e}, Leray div ratio {div_ratio:.2e}"))
}

fn random_state(grid: Grid, band: i64, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vx = SpectralField::zeros(grid);
    let mut vy = SpectralField::zeros(grid);
    let mut b = SpectralField::constant(grid, 1.1);
    for ky in -band..=band {
        for kx in -band..=band {
            if kx == 0 && ky == 0 {
                continue;
            }
            let decay = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            let mut c = || Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * decay;
            vx.set_mode(kx, ky, c());
            vy.set_mode(kx, ky, c());
            b.set_mode(kx, ky, c() * 0.2);
        }
    }
    State::new(VectorField { x: vx, y: vy }.leray_project(), b, 0.0).unwrap()
}

fn mass_operator_checks() -> Result<String, String> {
    let grid = Grid::square(32).map_err(|e| e.to_string())?;
    let n_cut = CutoffIndex::new(4).unwrap();
    let state = random_state(grid, 7, 77);
    let rhs = random_state(grid, 8, 78).b.truncate(8).map_err(|e| e.to_string())?;
    let y = weighted_mass_solve(&state.b, n_cut, 8, &rhs, 1e-12).map_err(|e| e.to_string())?;
    let res = weighted_mass_apply(&state.b, n_cut, 8, &y).sub(&rhs).l2_norm() / rhs.l2_norm();
    if res > 1.5e-12 {
        return Err(format!("mass solve residual {res:.2e}"));
    }
    Ok(format!("CG residual {res:.2e}"))
}

fn weak_form_consistency() -> Result<String, String> {
    let grid = Grid::square(32).map_err(|e| e.to_string())?;
    let params = FluidParams { sigma: 0.6, mu: 1.3, nu1: 0.9, ..FluidParams::unit() };
    let idx = GalerkinIndices::new(9, 9, CutoffIndex::new(4).unwrap(), grid)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for seed in 0..4 {
        let state = random_state(grid, 9, 500 + seed);
        let state = State::new(
            state.v.truncate(idx.n_v).unwrap(),
            state.b.truncate(idx.l_b).unwrap(),
            0.0,
        )
        .unwrap();
        let bdot = b_rhs(&state, &params, &idx, None, 1e-13).map_err(|e| e.to_string())?;
        let vdot = momentum_rhs(&state, &params, &idx, None).map_err(|e| e.to_string())?;
        for (kx, ky) in [(1i64, 0i64), (3, 2), (0, 5), (9, 9)] {
            let mut test = SpectralField::zeros(grid);
            test.set_mode(kx, ky, Complex::new(0.6, 0.2));
            let r = b_weak_residual(&state, &bdot, &params, &idx, &test)
                .map_err(|e| e.to_string())?;
            worst = worst.max(r.abs() / test.l2_norm());
            let mut tx = SpectralField::zeros(grid);
            tx.set_mode(kx, ky, Complex::new(-0.3, 0.4));
            let vtest = VectorField { x: tx, y: SpectralField::zeros(grid) }
                .leray_project()
                .truncate(idx.n_v)
                .unwrap();
            if vtest.l2_norm() > 1e-12 {
                let rm = weak_residual_momentum(&state, &vdot, &params, &vtest)
                    .map_err(|e| e.to_string())?;
                let scale = params.rho * vdot.l2_norm() * vtest.l2_norm() + 1.0;
                worst = worst.max(rm.abs() / scale);
            }
        }
    }
    if worst <= 1e-9 {
        Ok(format!("worst retained-mode residual {worst:.2e}"))
    } else {
        Err(format!("weak residual {worst:.2e} above 1e-9"))
    }
}

fn korteweg_cancellation() -> Result<String, String> {
    let grid = Grid::square(32).map_err(|e| e.to_string())?;
    let params = FluidParams { sigma: 0.8, ..FluidParams::unit() };
    let idx = GalerkinIndices::new(9, 9, CutoffIndex::new(4).unwrap(), grid)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let state = random_state(grid, 6, 900 + seed);
        let (a, b) = korteweg_exchange(&state, &params, &idx).map_err(|e| e.to_string())?;
        worst = worst.max((a + b).abs() / a.abs().max(1e-300));
    }
    if worst <= 1e-10 {
        Ok(format!("worst relative defect {worst:.2e}"))
    } else {
        Err(format!("exchange defect {worst:.2e} above 1e-10"))
    }
}

fn equilibrium_fixed_point() -> Result<String, String> {
    let grid = Grid::square(16).map_err(|e| e.to_string())?;
    let params = FluidParams::unit();
    let idx = GalerkinIndices::new(4, 4, CutoffIndex::new(4).unwrap(), grid)
        .map_err(|e| e.to_string())?;
    let cfg = SchemeConfig::new(1e-2, 1.0, Stepper::RotheSemiImplicit).unwrap();
    let mut state = make_initial_condition(InitialCondition::Equilibrium, grid, &idx)
        .map_err(|e| e.to_string())?;
    for _ in 0..50 {
        state = rk4_step(&state, 1e-2, &params, &idx, 1e-13).map_err(|e| e.to_string())?;
    }
    let drift_rk4 = state.v.l2_norm()
        + state.b.sub(&SpectralField::constant(grid, 1.0)).l2_norm();
    let (b_next, _) = rothe_step(&state.b, &VectorField::zeros(grid), 1e-2, &params, &idx, &cfg)
        .map_err(|e| e.to_string())?;
    let drift_rothe = b_next.sub(&SpectralField::constant(grid, 1.0)).l2_norm();
    if drift_rk4 < 1e-13 && drift_rothe < 1e-13 {
        Ok(format!("drift rk4 {drift_rk4:.2e}, rothe {drift_rothe:.2e}"))
    } else {
        Err(format!("equilibrium drifts: rk4 {drift_rk4:.2e}, rothe {drift_rothe:.2e}"))
    }
}

fn logistic_benchmark() -> Result<String, String> {
    let grid = Grid::square(16).map_err(|e| e.to_string())?;
    let params = FluidParams::unit();
    let idx = GalerkinIndices::new(4, 4, CutoffIndex::new(4).unwrap(), grid)
        .map_err(|e| e.to_string())?;
    let mut state = make_initial_condition(InitialCondition::Uniform { b0: 2.0 }, grid, &idx)
        .map_err(|e| e.to_string())?;
    let dt = 1e-3;
    for _ in 0..1000 {
        state = rk4_step(&state, dt, &params, &idx, 1e-13).map_err(|e| e.to_string())?;
    }
    let exact = oracle::logistic(2.0, 1.0, 1.0);
    let err = (state.b.mean() - exact).abs();
    if err <= 1e-8 {
        Ok(format!("error vs analytic logistic {err:.2e}"))
    } else {
        Err(format!("logistic error {err:.2e} above 1e-8"))
    }
}

fn entropy_sign() -> Result<String, String> {
    let grid = Grid::square(32).map_err(|e| e.to_string())?;
    let params = FluidParams { sigma: 0.4, ..FluidParams::unit() };
    let idx = GalerkinIndices::new(8, 8, CutoffIndex::new(4).unwrap(), grid)
        .map_err(|e| e.to_string())?;
    let mut floor = f64::INFINITY;
    for seed in 0..5 {
        let state = random_state(grid, 8, 40 + seed);
        let state = State::new(
            state.v.truncate(idx.n_v).unwrap(),
            state.b.truncate(idx.l_b).unwrap(),
            0.0,
        )
        .unwrap();
        let bdot = b_rhs(&state, &params, &idx, None, 1e-12).map_err(|e| e.to_string())?;
        let report = thermo_report(&state, &bdot, &params, idx.n_cut).map_err(|e| e.to_string())?;
        floor = floor.min(report.min_pointwise_production);
    }
    if floor >= 0.0 {
        Ok(format!("pointwise entropy production floor {floor:.2e}"))
    } else {
        Err(format!("entropy production went negative: {floor:.2e}"))
    }
}

fn snapshot_round_trip() -> Result<String, String> {
    use crate::snapshot::{read_snapshot, write_snapshot, SnapshotMeta};
    let grid = Grid::square(16).map_err(|e| e.to_string())?;
    let idx = GalerkinIndices::new(4, 4, CutoffIndex::new(4).unwrap(), grid)
        .map_err(|e| e.to_string())?;
    let state = make_initial_condition(
        InitialCondition::Perturbed { b_amp: 0.3, v_amp: 0.3, k_max: 3, seed: 11 },
        grid,
        &idx,
    )
    .map_err(|e| e.to_string())?;
    let params = FluidParams::unit();
    let meta = SnapshotMeta { params: &params, n_v: 4, l_b: 4, n_cut: 4 };
    let bytes = write_snapshot(&state, &meta);
    let (back, _) = read_snapshot(&bytes).map_err(|e| e.to_string())?;
    if back.b.coefficients() == state.b.coefficients()
        && write_snapshot(&back, &meta) == bytes
    {
        Ok(format!("bit-exact over {} bytes", bytes.len()))
    } else {
        Err("snapshot round trip is not bit-exact".into())
    }
}

/// Run every check; returns the number of failures.
pub fn run_verification() -> usize {
    let mut results = Vec::new();
    check(&mut results, "scalar kit vs quadrature/search oracles", scalar_kit_vs_oracles());
    check(&mut results, "spectral round trip, Parseval, Leray", spectral_properties());
    check(&mut results, "weighted mass CG solve", mass_operator_checks());
    check(&mut results, "weak-form residuals annihilate retained modes", weak_form_consistency());
    check(&mut results, "Korteweg exchange cancellation", korteweg_cancellation());
    check(&mut results, "equilibrium fixed point", equilibrium_fixed_point());
    check(&mut results, "uniform logistic benchmark", logistic_benchmark());
    check(&mut results, "entropy production sign", entropy_sign());
    check(&mut results, "snapshot bit-exact round trip", snapshot_round_trip());
    let failures = results.iter().filter(|o| !o.passed).count();
    if failures == 0 {
        println!("verify: all {} checks passed", results.len());
    } else {
        println!("verify: {failures} of {} checks FAILED", results.len());
    }
    failures
}
