//! The scalar auxiliary functions behind the cut-off Galerkin scheme: the
//! clamp `T_n`, its weighted primitive `Theta_n`, the barrier functions
//! `Gamma_+/-` driving the min/max principle, and the convex triple
//! `(f, F, F*)` used by the implicit stepper.
//!
//! All of them are integrals of piecewise-rational functions of `T_n`, so
//! closed forms exist; the test suite checks every branch against an
//! adaptive-quadrature oracle.
//!
//! ```
//! use elastoflow::scalar::{CutoffIndex, cutoff, rothe_f, rothe_cap_f, rothe_f_star};
//! let n = CutoffIndex::new(2).unwrap();
//! assert_eq!(cutoff(n, 5.0), 2.0);          // clamped above
//! assert_eq!(rothe_f(n, 0.5), 2.0);         // n^2 s on [0, 1/n]
//! let a = 1.3;
//! let young = rothe_cap_f(n, a) + rothe_f_star(n, rothe_f(n, a)) - a * rothe_f(n, a);
//! assert!(young.abs() < 1e-12);             // Fenchel-Young equality at b = f(a)
//! ```

use crate::error::{Error, Result};

/// Index n of the cut-off `T_n`; n >= 2 so that 1/n < 1 < n strictly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutoffIndex(u32);

impl CutoffIndex {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("cutoff index must be >= 2, got {n}")));
        }
        Ok(Self(n))
    }

    pub fn value(&self) -> f64 {
        f64::from(self.0)
    }

    pub fn index(&self) -> u32 {
        self.0
    }

    /// Whether the barriers of `bounds` are usable: n must dominate both
    /// b_max and 1/b_min.
    pub fn admits(&self, bounds: &BarrierBounds) -> bool {
        let n = self.value();
        n > bounds.b_max() && n * bounds.b_min() > 1.0
    }
}

/// Essential bounds of the initial datum, clamped to straddle 1:
/// `b_max = max(1, sup b0)` and `1/b_min = max(1, sup 1/b0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierBounds {
    b_max: f64,
    b_min: f64,
}

impl BarrierBounds {
    pub fn new(b_max: f64, b_min: f64) -> Result<Self> {
        if !(b_max >= 1.0) {
            return Err(Error::Invalid(format!("b_max must be >= 1, got {b_max}")));
        }
        if !(b_min > 0.0 && b_min <= 1.0) {
            return Err(Error::Invalid(format!("b_min must lie in (0, 1], got {b_min}")));
        }
        Ok(Self { b_max, b_min })
    }

    /// Bounds computed from the observed range of the initial datum.
    pub fn from_range(min_b0: f64, max_b0: f64) -> Result<Self> {
        if !(min_b0 > 0.0) {
            return Err(Error::Invalid(format!(
                "initial datum must be strictly positive, observed minimum {min_b0}"
            )));
        }
        Self::new(max_b0.max(1.0), min_b0.min(1.0))
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    pub fn b_min(&self) -> f64 {
        self.b_min
    }
}

/// The cut-off `T_n(s) = min(n, max(1/n, s))`.
pub fn cutoff(n: CutoffIndex, s: f64) -> f64 {
    let n = n.value();
    s.max(1.0 / n).min(n)
}

/// Derivative of the cut-off: 1 inside `[1/n, n]`, 0 outside.
pub fn cutoff_deriv(n: CutoffIndex, s: f64) -> f64 {
    let n = n.value();
    if s >= 1.0 / n && s <= n {
        1.0
    } else {
        0.0
    }
}

/// `Theta_n(s) = int_0^s t / T_n(t)^2 dt`, the convex weight satisfying
/// `n^-2 s^2 <= 2 Theta_n(s) <= n^2 s^2`.
pub fn theta(n: CutoffIndex, s: f64) -> f64 {
    let nf = n.value();
    let inv = 1.0 / nf;
    if s <= inv {
        // includes all negative s: the integrand is n^2 t there
        0.5 * nf * nf * s * s
    } else if s <= nf {
        0.5 + (nf * s).ln()
    } else {
        0.5 + 2.0 * nf.ln() + (s * s - nf * nf) / (2.0 * nf * nf)
    }
}

/// Upper barrier `Gamma_+(t) = int_{b_max}^t (s - b_max)_+ / T_n(s)^2 ds`:
/// zero for `t <= b_max`, strictly increasing beyond it.
pub fn barrier_plus(n: CutoffIndex, b_max: f64, t: f64) -> f64 {
    debug_assert!(b_max >= 1.0);
    if t <= b_max {
        return 0.0;
    }
    let nf = n.value();
    let mut total = 0.0;
    // on [b_max, n] the cut-off is the identity (b_max >= 1 > 1/n)
    if b_max < nf {
        let hi = t.min(nf);
        // int (s - a)/s^2 ds = ln s + a/s
        total += (hi.ln() + b_max / hi) - (b_max.ln() + 1.0);
    }
    // beyond n the weight is constant 1/n^2
    if t > nf {
        let lo = b_max.max(nf);
        total += ((t - b_max).powi(2) - (lo - b_max).powi(2)) / (2.0 * nf * nf);
    }
    total
}

/// Lower barrier `Gamma_-(t) = -int_t^{b_min} (s - b_min)_- / T_n(s)^2 ds`:
/// zero for `t >= b_min`, strictly positive below it.
pub fn barrier_minus(n: CutoffIndex, b_min: f64, t: f64) -> f64 {
    debug_assert!(b_min > 0.0 && b_min <= 1.0);
    if t >= b_min {
        return 0.0;
    }
    let nf = n.value();
    let inv = 1.0 / nf;
    let mut total = 0.0;
    // on [1/n, b_min] the cut-off is the identity
    if b_min > inv {
        let lo = t.max(inv);
        // int (a - s)/s^2 ds = -a/s - ln s
        total += (-1.0 - b_min.ln()) - (-b_min / lo - lo.ln());
    }
    // below 1/n the weight is constant n^2
    if t < inv {
        let hi = b_min.min(inv);
        total += nf * nf * ((b_min * hi - 0.5 * hi * hi) - (b_min * t - 0.5 * t * t));
    }
    total
}

/// `f(s) = int_0^s T_n(t)^-2 dt`, strictly increasing with slopes
/// `n^2 | 1/s^2 | 1/n^2` below, inside and above `[1/n, n]`.
pub fn rothe_f(n: CutoffIndex, s: f64) -> f64 {
    let nf = n.value();
    let inv = 1.0 / nf;
    if s <= inv {
        nf * nf * s
    } else if s <= nf {
        2.0 * nf - 1.0 / s
    } else {
        2.0 * nf - inv + (s - nf) / (nf * nf)
    }
}

/// Inverse of [`rothe_f`].
pub fn rothe_f_inv(n: CutoffIndex, y: f64) -> f64 {
    let nf = n.value();
    let inv = 1.0 / nf;
    if y <= nf {
        y / (nf * nf)
    } else if y <= 2.0 * nf - inv {
        1.0 / (2.0 * nf - y)
    } else {
        nf + nf * nf * (y - 2.0 * nf + inv)
    }
}

/// `F(s) = int_0^s f`, uniformly convex with
/// `s^2/(2 n^2) <= F(s) <= n^2 s^2 / 2`.
pub fn rothe_cap_f(n: CutoffIndex, s: f64) -> f64 {
    let nf = n.value();
    let inv = 1.0 / nf;
    if s <= inv {
        0.5 * nf * nf * s * s
    } else if s <= nf {
        2.0 * nf * s - 1.5 - (nf * s).ln()
    } else {
        let f_at_n = 2.0 * nf * nf - 1.5 - 2.0 * nf.ln();
        f_at_n + (2.0 * nf - inv) * (s - nf) + (s - nf).powi(2) / (2.0 * nf * nf)
    }
}

/// Convex conjugate `F*(y) = sup_t (y t - F(t))`, evaluated through the
/// piecewise inversion of `f = F'`.
pub fn rothe_f_star(n: CutoffIndex, y: f64) -> f64 {
    let a = rothe_f_inv(n, y);
    y * a - rothe_cap_f(n, a)
}

/// Dual route for `F*`: golden-section maximization of `t -> y t - F(t)`.
/// Kept alongside the closed form so the two can be cross-checked.
pub fn rothe_f_star_search(n: CutoffIndex, y: f64) -> f64 {
    let nf = n.value();
    // the maximizer is f^{-1}(y); bracket it generously
    let center = rothe_f_inv(n, y);
    let half = 2.0 * (center.abs() + nf);
    let (mut lo, mut hi) = (center - half, center + half);
    let objective = |t: f64| y * t - rothe_cap_f(n, t);
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = objective(x1);
        }
        if hi - lo < 1e-13 * (1.0 + center.abs()) {
            break;
        }
    }
    objective(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn n2() -> CutoffIndex {
        CutoffIndex::new(2).unwrap()
    }

    #[test]
    fn cutoff_index_rejects_small_n() {
        assert!(CutoffIndex::new(1).is_err());
        assert!(CutoffIndex::new(2).is_ok());
    }

    #[test]
    fn cutoff_clamps_and_fixes_the_middle() {
        let n = n2();
        assert_eq!(cutoff(n, 5.0), 2.0);
        assert_eq!(cutoff(n, 0.1), 0.5);
        assert_eq!(cutoff(n, 1.0), 1.0);
        assert_eq!(cutoff(n, -3.0), 0.5);
    }

    #[test]
    fn cutoff_is_one_lipschitz_and_monotone() {
        let n = CutoffIndex::new(5).unwrap();
        let pts: Vec<f64> = (-200..200).map(|i| i as f64 * 0.11).collect();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ta, tb) = (cutoff(n, a), cutoff(n, b));
            assert!(tb >= ta);
            assert!((tb - ta).abs() <= (b - a).abs() + 1e-15);
        }
    }

    #[test]
    fn theta_closed_form_values() {
        let n = n2();
        assert_eq!(theta(n, 0.0), 0.0);
        // n^2 s^2 / 2 on [0, 1/n]
        assert!((theta(n, 0.5) - 0.5).abs() < 1e-15);
        // 1/2 + ln(ns) inside
        assert!((theta(n, 1.0) - (0.5 + 2.0_f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn theta_two_sided_bound_on_sweep() {
        for &ni in &[2u32, 5, 10] {
            let n = CutoffIndex::new(ni).unwrap();
            let nf = n.value();
            for i in 0..=400 {
                let s = -10.0 * nf + 20.0 * nf * i as f64 / 400.0;
                let th = theta(n, s);
                assert!(th >= 0.0);
                assert!(s * s / (nf * nf) <= 2.0 * th + 1e-12);
                assert!(2.0 * th <= nf * nf * s * s + 1e-12);
            }
        }
    }

    #[test]
    fn theta_matches_quadrature_oracle() {
        for &ni in &[2u32, 5, 10] {
            let n = CutoffIndex::new(ni).unwrap();
            for i in 0..=60 {
                let s = -3.0 * n.value() + 6.0 * n.value() * i as f64 / 60.0;
                let exact = theta(n, s);
                let quad = oracle::integrate(|t| t / cutoff(n, t).powi(2), 0.0, s, 1e-12);
                assert!(
                    (exact - quad).abs() <= 1e-10 * exact.abs().max(1.0),
                    "theta mismatch at n={ni}, s={s}: {exact} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn barrier_plus_vanishes_on_the_safe_side() {
        let n = n2();
        assert_eq!(barrier_plus(n, 1.5, 1.5), 0.0);
        assert_eq!(barrier_plus(n, 1.5, 0.5), 0.0);
        assert!(barrier_plus(n, 1.0, 1.5) > 0.0);
    }

    #[test]
    fn barrier_plus_frozen_oracle_value() {
        // int_1^{3/2} (s-1)/s^2 ds = ln(3/2) - 1/3
        let expected = 1.5_f64.ln() - 1.0 / 3.0;
        assert!((barrier_plus(n2(), 1.0, 1.5) - expected).abs() < 1e-14);
    }

    #[test]
    fn barrier_minus_vanishes_on_the_safe_side() {
        let n = n2();
        assert_eq!(barrier_minus(n, 0.5, 0.5), 0.0);
        assert_eq!(barrier_minus(n, 0.5, 1.0), 0.0);
        assert!(barrier_minus(n, 1.0, 0.25) > 0.0);
    }

    #[test]
    fn barrier_minus_frozen_oracle_value() {
        // b_min = 1, t = 1/4, n = 2: constant weight 4 on [1/4, 1/2] contributes
        // 5/8; the 1/s^2 stretch on [1/2, 1] contributes 1 - ln 2
        let frozen = 0.625 + (1.0 - 2.0_f64.ln());
        let value = barrier_minus(n2(), 1.0, 0.25);
        assert!((value - frozen).abs() < 1e-14, "got {value}");
    }

    #[test]
    fn barriers_match_quadrature_oracle() {
        for &ni in &[2u32, 5] {
            let n = CutoffIndex::new(ni).unwrap();
            for i in 0..=50 {
                let t = -2.0 + 8.0 * i as f64 / 50.0;
                let b_max = 1.25;
                let quad_p = oracle::integrate(
                    |s| (s - b_max).max(0.0) / cutoff(n, s).powi(2),
                    b_max,
                    t.max(b_max),
                    1e-12,
                );
                let exact_p = barrier_plus(n, b_max, t);
                assert!((exact_p - quad_p).abs() <= 1e-10 * quad_p.abs().max(1.0));

                let b_min = 0.75;
                let quad_m = oracle::integrate(
                    |s| (b_min - s).max(0.0) / cutoff(n, s).powi(2),
                    t.min(b_min),
                    b_min,
                    1e-12,
                );
                let exact_m = barrier_minus(n, b_min, t);
                assert!((exact_m - quad_m).abs() <= 1e-10 * quad_m.abs().max(1.0));
            }
        }
    }

    #[test]
    fn barriers_are_nonnegative_and_convex_where_claimed() {
        // Gamma_- is convex on all of R whenever b_min >= 1/n; Gamma_+ is
        // convex as long as the clamp at n kicks in before the slope
        // (t - b_max)/t^2 turns over at t = 2 b_max, i.e. for n <= 2 b_max.
        let h = 0.05;
        let n5 = CutoffIndex::new(5).unwrap();
        for i in 0..200 {
            let t = -2.0 + 8.0 * i as f64 / 200.0;
            let gm = barrier_minus(n5, 0.8, t);
            let gp = barrier_plus(n5, 1.3, t);
            assert!(gm >= 0.0 && gp >= 0.0);
            let mid_m = barrier_minus(n5, 0.8, t + h);
            assert!(mid_m <= 0.5 * (gm + barrier_minus(n5, 0.8, t + 2.0 * h)) + 1e-12);
        }
        let n2 = n2(); // n = 2 b_max for b_max = 1: the convex regime
        for i in 0..200 {
            let t = -1.0 + 5.0 * i as f64 / 200.0;
            let gp = barrier_plus(n2, 1.0, t);
            let mid_p = barrier_plus(n2, 1.0, t + h);
            assert!(mid_p <= 0.5 * (gp + barrier_plus(n2, 1.0, t + 2.0 * h)) + 1e-12);
        }
    }

    #[test]
    fn rothe_f_frozen_values() {
        let n = n2();
        assert!((rothe_f(n, 0.5) - 2.0).abs() < 1e-15);
        assert!((rothe_f(n, 2.0) - 3.5).abs() < 1e-15);
        assert!((rothe_f(n, -1.0) + 4.0).abs() < 1e-15);
    }

    #[test]
    fn rothe_f_matches_quadrature_and_is_increasing() {
        for &ni in &[2u32, 5, 10] {
            let n = CutoffIndex::new(ni).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=80 {
                let s = -2.0 * n.value() + 4.0 * n.value() * i as f64 / 80.0;
                let exact = rothe_f(n, s);
                assert!(exact > prev);
                prev = exact;
                let quad = oracle::integrate(|t| 1.0 / cutoff(n, t).powi(2), 0.0, s, 1e-12);
                assert!((exact - quad).abs() <= 1e-10 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rothe_f_inv_inverts_f() {
        for &ni in &[2u32, 7] {
            let n = CutoffIndex::new(ni).unwrap();
            for i in -50..=50 {
                let s = i as f64 * 0.37;
                let back = rothe_f_inv(n, rothe_f(n, s));
                assert!((back - s).abs() < 1e-11 * s.abs().max(1.0));
            }
        }
    }

    #[test]
    fn cap_f_values_and_bounds() {
        let n = n2();
        assert_eq!(rothe_cap_f(n, 0.0), 0.0);
        assert!((rothe_cap_f(n, 0.5) - 0.5).abs() < 1e-15);
        for &s in &[-3.0, 0.1, 1.0, 5.0] {
            let v = rothe_cap_f(n, s);
            assert!(s * s / 8.0 <= v + 1e-13, "lower bound fails at {s}");
            assert!(v <= 2.0 * s * s + 1e-13, "upper bound fails at {s}");
        }
    }

    #[test]
    fn cap_f_matches_double_quadrature() {
        for &ni in &[2u32, 5] {
            let n = CutoffIndex::new(ni).unwrap();
            for i in 0..=24 {
                let s = -6.0 + 12.0 * i as f64 / 24.0;
                let exact = rothe_cap_f(n, s);
                let quad = oracle::integrate(|t| rothe_f(n, t), 0.0, s, 1e-12);
                assert!((exact - quad).abs() <= 1e-10 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn derivative_of_cap_f_is_f() {
        let n = CutoffIndex::new(5).unwrap();
        let worst_at = |h: f64| {
            let mut worst: f64 = 0.0;
            for i in -40..=40 {
                let s = i as f64 * 0.21;
                let fd = (rothe_cap_f(n, s + h) - rothe_cap_f(n, s - h)) / (2.0 * h);
                worst = worst.max((fd - rothe_f(n, s)).abs());
            }
            worst
        };
        // centered differences are O(h^2): observed order >= 1.9
        let (w3, w4) = (worst_at(1e-3), worst_at(1e-4));
        let order = (w3 / w4).log10();
        assert!(order >= 1.9, "observed order {order} (errors {w3:.3e}, {w4:.3e})");
        assert!(w3 < 1e-3);
    }

    #[test]
    fn fenchel_young_inequality_and_equality() {
        let n = n2();
        // equality at b = f(a)
        for i in -30..=30 {
            let a = i as f64 * 0.3;
            let b = rothe_f(n, a);
            let gap = rothe_cap_f(n, a) + rothe_f_star(n, b) - a * b;
            assert!(gap.abs() < 1e-9 * (1.0 + a.abs() * b.abs()), "gap {gap} at a={a}");
        }
        // inequality for mismatched pairs
        for i in 0..200 {
            let a = (i as f64 * 0.713).sin() * 5.0;
            let b = (i as f64 * 1.618).cos() * 8.0;
            let gap = rothe_cap_f(n, a) + rothe_f_star(n, b) - a * b;
            assert!(gap >= -1e-10);
        }
    }

    #[test]
    fn f_star_closed_form_agrees_with_search() {
        for &ni in &[2u32, 5, 10] {
            let n = CutoffIndex::new(ni).unwrap();
            for i in -20..=20 {
                let y = i as f64 * 0.9;
                let a = rothe_f_star(n, y);
                let b = rothe_f_star_search(n, y);
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "n={ni}, y={y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn f_star_frozen_value() {
        // n = 2, y = 1: maximizer 1/4, F*(1) = 1/4 - F(1/4) = 1/8
        assert!((rothe_f_star(n2(), 1.0) - 0.125).abs() < 1e-14);
        assert_eq!(rothe_f_star(n2(), 0.0), 0.0);
    }

    #[test]
    fn barrier_bounds_from_range() {
        let b = BarrierBounds::from_range(0.7, 1.9).unwrap();
        assert_eq!(b.b_max(), 1.9);
        assert_eq!(b.b_min(), 0.7);
        let c = BarrierBounds::from_range(1.2, 1.9).unwrap();
        assert_eq!(c.b_min(), 1.0);
        assert!(BarrierBounds::from_range(-0.1, 2.0).is_err());
        let n4 = CutoffIndex::new(4).unwrap();
        assert!(n4.admits(&b));
        assert!(!CutoffIndex::new(2).unwrap().admits(&BarrierBounds::from_range(0.4, 1.0).unwrap()));
    }
}
