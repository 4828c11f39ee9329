//! Bessel functions of the first kind, orders 0 and 1, for real arguments.
//!
//! Three branches: the power series for small arguments, Miller's backward
//! recurrence normalised by `J0 + 2 Σ J_2k = 1` in the middle range, and the
//! Hankel asymptotic expansion for large arguments. Each branch is accurate
//! to a few ulps of `max(1, |J|)` on its range.

use std::f64::consts::PI;

pub(crate) const SERIES_MAX: f64 = 5.0;
pub(crate) const ASYMPTOTIC_MIN: f64 = 25.0;

fn series(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 1.0);
    let (mut s0, mut s1) = (1.0, 1.0);
    for m in 1..60 {
        let mf = m as f64;
        t0 *= q / (mf * mf);
        t1 *= q / (mf * (mf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.abs() < 1e-18 && t1.abs() < 1e-18 {
            break;
        }
    }
    (s0, 0.5 * x * s1)
}

fn miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x as usize + 20 + (40.0 * x).sqrt() as usize) / 2);
    let (mut above, mut cur) = (0.0f64, 1e-30f64);
    let (mut j0, mut j1) = (0.0, 0.0);
    let mut norm = 0.0;
    for n in (1..=start).rev() {
        let below = 2.0 * n as f64 / x * cur - above;
        above = cur;
        cur = below;
        // `cur` now holds J_{n-1} (unnormalised).
        if n == 2 {
            j1 = cur;
        }
        if (n - 1) % 2 == 0 && n - 1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            above *= 1e-250;
            cur *= 1e-250;
            j1 *= 1e-250;
            norm *= 1e-250;
        }
        if n == 1 {
            j0 = cur;
        }
    }
    norm += j0;
    (j0 / norm, j1 / norm)
}

fn asymptotic(x: f64) -> (f64, f64) {
    // J_nu(x) = sqrt(2/(pi x)) (P cos(x - phase) - Q sin(x - phase)),
    // phase = (2 nu + 1) pi / 4, with P, Q the Hankel series.
    let hankel = |nu: f64| -> (f64, f64) {
        let mu = 4.0 * nu * nu;
        let (mut p, mut q) = (1.0, 0.0);
        let mut term = 1.0;
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let kf = k as f64;
            term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
            if term.abs() >= prev || term.abs() < 1e-17 {
                break;
            }
            prev = term.abs();
            match k % 4 {
                1 => q += term,
                2 => p -= term,
                3 => q -= term,
                _ => p += term,
            }
        }
        (p, q)
    };
    let (s, c) = x.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    // cos(x - pi/4) = (c + s)/sqrt2, sin(x - pi/4) = (s - c)/sqrt2,
    // cos(x - 3pi/4) = (s - c)/sqrt2, sin(x - 3pi/4) = -(c + s)/sqrt2.
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (p0, q0) = hankel(0.0);
    let (p1, q1) = hankel(1.0);
    let j0 = amp * (p0 * (c + s) - q0 * (s - c)) * r;
    let j1 = amp * (p1 * (s - c) + q1 * (c + s)) * r;
    (j0, j1)
}

/// `(J0(x), J1(x))` for any finite real `x`.
pub fn j0_j1(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (j0, j1) = if ax <= SERIES_MAX {
        series(ax)
    } else if ax <= ASYMPTOTIC_MIN {
        miller(ax)
    } else {
        asymptotic(ax)
    };
    (j0, if x < 0.0 { -j1 } else { j1 })
}

pub fn j0(x: f64) -> f64 {
    j0_j1(x).0
}

pub fn j1(x: f64) -> f64 {
    j0_j1(x).1
}
