//! Bessel functions `J0`, `J1` of real argument, accurate to about 1e-14
//! absolute.
//!
//! Power series for `|x| <= 8`, Miller's backward recurrence for
//! `8 < |x| < 25`, Hankel asymptotic expansion beyond. A plain series/asymptotic
//! split cannot reach 1e-12 near `|x| = 12` in double precision (the series
//! cancels, the asymptotic series is still too coarse), hence the middle band.

use std::f64::consts::PI;

const SERIES_MAX: f64 = 8.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_MAX {
        series(0, ax)
    } else if ax < ASYMPTOTIC_MIN {
        miller(ax).0
    } else {
        hankel(0, ax)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_MAX {
        series(1, ax)
    } else if ax < ASYMPTOTIC_MIN {
        miller(ax).1
    } else {
        hankel(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn series(n: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if n == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            return sum;
        }
        k += 1.0;
    }
}

/// `(J0(x), J1(x))` by downward recurrence from a large even order,
/// normalized with `J0 + 2 (J2 + J4 + ...) = 1`.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x + 30.0 + (40.0 * x).sqrt()) as usize / 2);
    let mut above = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 / x * cur - above;
        above = cur;
        cur = below;
        // `cur` is now J_{k-1}.
        if k - 1 == 1 {
            j1 = cur;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    norm += cur;
    (cur / norm, j1 / norm)
}

fn hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..200u32 {
        if term.abs() >= prev || term.abs() < 1e-17 {
            break;
        }
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        prev = term.abs();
        let odd = (2 * k + 1) as f64;
        term *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * x);
    }
    let chi = x - (0.5 * n as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
