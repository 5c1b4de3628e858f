//! Brute-force reference implementations used to verify closed-form code
//! paths: adaptive Simpson quadrature, scalar bisection, and fine-grid
//! quadrature of spectral fields.
//!
//! Nothing in here is called by the solver; these routines exist so that
//! tests and `elastoflow verify` can check the fast paths against slow,
//! independent ones.

use crate::spectral::Grid;

/// Signed adaptive Simpson integral of `f` over `[a, b]` (handles a > b).
/// A few subdivision levels are forced before the error estimate may accept,
/// so that kinks sitting symmetrically in a panel cannot fake convergence.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let panels = 8;
    let h = (hi - lo) / panels as f64;
    let mut sum = 0.0;
    for i in 0..panels {
        sum += adaptive(&f, lo + i as f64 * h, lo + (i + 1) as f64 * h, tol / panels as f64, 60, 5);
    }
    sign * sum
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32, force: u32) -> f64 {
    let whole = simpson(f, a, b);
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let refined = left + right;
    // the roundoff floor keeps huge integrands from recursing forever when
    // the absolute tolerance is unreachable in f64
    let floor = 1e-14 * (whole.abs() + refined.abs());
    if depth == 0 || (force == 0 && (refined - whole).abs() <= (15.0 * tol).max(floor)) {
        refined + (refined - whole) / 15.0
    } else {
        let next_force = force.saturating_sub(1);
        adaptive(f, a, m, tol / 2.0, depth - 1, next_force)
            + adaptive(f, m, b, tol / 2.0, depth - 1, next_force)
    }
}

/// Root of a monotone continuous function on `[lo, hi]` by bisection.
/// Panics if the endpoints do not bracket a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let (mut flo, fhi) = (f(lo), f(hi));
    assert!(
        flo == 0.0 || fhi == 0.0 || (flo < 0.0) != (fhi < 0.0),
        "bisection endpoints do not bracket a root: f({lo}) = {flo}, f({hi}) = {fhi}"
    );
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < tol {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximum of a concave function on `[lo, hi]` by golden-section search.
pub fn maximize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    f(0.5 * (lo + hi))
}

/// Quadrature of `f(x, y)` over the box by sampling on a fine uniform grid,
/// independent of the spectral Parseval route.
pub fn grid_quadrature(f: impl Fn(f64, f64) -> f64, length: f64, points: usize) -> f64 {
    let h = length / points as f64;
    let mut sum = 0.0;
    for iy in 0..points {
        let y = iy as f64 * h;
        for ix in 0..points {
            sum += f(ix as f64 * h, y);
        }
    }
    sum * h * h
}

/// Second-order centered finite-difference evaluation of
/// `div(grad b (x) grad b)` for a closed-form scalar `b`, sampled on `grid`.
/// Used as an independent check of the spectral Korteweg assembly.
pub fn korteweg_divergence_fd(
    b: impl Fn(f64, f64) -> f64,
    grid: Grid,
    points: usize,
) -> (Vec<f64>, Vec<f64>) {
    let length = grid.box_length();
    let n = points;
    let h = length / n as f64;
    let idx = |ix: usize, iy: usize| iy * n + ix;
    let mut bv = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            bv[idx(ix, iy)] = b(ix as f64 * h, iy as f64 * h);
        }
    }
    let wrap = |i: isize| -> usize { i.rem_euclid(n as isize) as usize };
    let dx = |f: &[f64], ix: usize, iy: usize| {
        (f[idx(wrap(ix as isize + 1), iy)] - f[idx(wrap(ix as isize - 1), iy)]) / (2.0 * h)
    };
    let dy = |f: &[f64], ix: usize, iy: usize| {
        (f[idx(ix, wrap(iy as isize + 1))] - f[idx(ix, wrap(iy as isize - 1))]) / (2.0 * h)
    };
    let mut gx = vec![0.0; n * n];
    let mut gy = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            gx[idx(ix, iy)] = dx(&bv, ix, iy);
            gy[idx(ix, iy)] = dy(&bv, ix, iy);
        }
    }
    // tensor entries
    let mut txx = vec![0.0; n * n];
    let mut txy = vec![0.0; n * n];
    let mut tyy = vec![0.0; n * n];
    for i in 0..n * n {
        txx[i] = gx[i] * gx[i];
        txy[i] = gx[i] * gy[i];
        tyy[i] = gy[i] * gy[i];
    }
    let mut div_x = vec![0.0; n * n];
    let mut div_y = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            div_x[idx(ix, iy)] = dx(&txx, ix, iy) + dy(&txy, ix, iy);
            div_y[idx(ix, iy)] = dx(&txy, ix, iy) + dy(&tyy, ix, iy);
        }
    }
    (div_x, div_y)
}

/// Solution of the logistic equation `b' = r b (1 - b)`, `b(0) = c`.
pub fn logistic(c: f64, r: f64, t: f64) -> f64 {
    let e = (r * t).exp();
    c * e / (1.0 + c * (e - 1.0))
}

/// High-accuracy reference integration of `b' = r b (1 - b)` by RK4 with a
/// very small step, independent of the solver's stepping machinery.
pub fn logistic_rk4_reference(c: f64, r: f64, t_end: f64, steps: usize) -> f64 {
    let dt = t_end / steps as f64;
    let rhs = |b: f64| r * b * (1.0 - b);
    let mut b = c;
    for _ in 0..steps {
        let k1 = rhs(b);
        let k2 = rhs(b + 0.5 * dt * k1);
        let k3 = rhs(b + 0.5 * dt * k2);
        let k4 = rhs(b + dt * k3);
        b += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_a_polynomial_exactly() {
        let v = integrate(|t| 3.0 * t * t, 0.0, 2.0, 1e-12);
        assert!((v - 8.0).abs() < 1e-10);
        let w = integrate(|t| t, 2.0, 0.0, 1e-12);
        assert!((w + 2.0).abs() < 1e-10);
    }

    #[test]
    fn integrates_across_a_kink() {
        let v = integrate(|t| t.abs(), -1.0, 1.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bisection_finds_a_root() {
        let r = bisect(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2.0_f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn golden_section_maximizes_a_parabola() {
        let m = maximize(|x| 1.0 - (x - 0.3) * (x - 0.3), -4.0, 4.0, 1e-12);
        assert!((m - 1.0).abs() < 1e-10);
    }

    #[test]
    fn logistic_analytic_matches_fine_rk4() {
        let a = logistic(0.5, 1.0, 3.0);
        let b = logistic_rk4_reference(0.5, 1.0, 3.0, 300_000);
        assert!((a - b).abs() < 1e-12);
    }
}
