//! The scalar equations `l = κ coth(κa/2) − 2/a` and `m = κ tanh(κa/2)`.
//!
//! Both left-hand sides are strictly increasing in κ, and the elementary
//! inequalities `κ − 2/a ≤ κ tanh(κa/2) ≤ κ ≤ κ coth(κa/2) ≤ κ + 2/a` give
//! the brackets `[l, l + 2/a]` and `[m, m + 2/a]` for the roots. Edge lengths
//! may be `f64::INFINITY`, in which case the roots are `l` and `m` exactly.

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

const MAX_ITERATIONS: usize = 200;
const BISECTION_WIDTH: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootResult {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// `κ tanh(κa/2)`.
pub fn kappa_tanh(kappa: f64, a: f64) -> f64 {
    if a.is_infinite() {
        return kappa;
    }
    kappa * (0.5 * kappa * a).tanh()
}

/// `κ / tanh(κa/2)`, continuous at κ = 0 with value `2/a`.
pub fn kappa_coth(kappa: f64, a: f64) -> f64 {
    if a.is_infinite() {
        return kappa;
    }
    kappa_coth_shifted(kappa, a) + 2.0 / a
}

/// `κ / tanh(κa/2) − 2/a`, evaluated as `(2/a)(y coth y − 1)` with `y = κa/2`.
pub fn kappa_coth_shifted(kappa: f64, a: f64) -> f64 {
    if a.is_infinite() {
        return kappa;
    }
    let y = 0.5 * kappa * a;
    let s = if y.abs() < 1e-3 {
        let y2 = y * y;
        y2 * (1.0 / 3.0 - y2 * (1.0 / 45.0 - y2 * (2.0 / 945.0 - y2 / 4725.0)))
    } else {
        y / y.tanh() - 1.0
    };
    2.0 / a * s
}

fn d_kappa_tanh(kappa: f64, a: f64) -> f64 {
    if a.is_infinite() {
        return 1.0;
    }
    let y = 0.5 * kappa * a;
    let t = y.tanh();
    t + y * (1.0 - t * t)
}

fn d_kappa_coth(kappa: f64, a: f64) -> f64 {
    if a.is_infinite() {
        return 1.0;
    }
    let y = 0.5 * kappa * a;
    if y < 1e-3 {
        2.0 * y / 3.0 - 4.0 * y * y * y / 45.0
    } else if y > 300.0 {
        1.0
    } else {
        let sh = y.sinh();
        (sh * y.cosh() - y) / (sh * sh)
    }
}

fn check_inputs(name: &str, x: f64, a: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name}: first argument must be positive, got {x}")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("{name}: length must be positive, got {a}")));
    }
    Ok(())
}

/// Hybrid solver for an increasing `f` with `f(lo) ≤ 0 ≤ f(hi)`: bisection
/// down to [`BISECTION_WIDTH`], then Newton steps kept inside the bracket.
fn solve_increasing(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    eps: f64,
) -> Result<RootResult> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo > eps || f_hi < -eps {
        return Err(Error::Numerical(format!(
            "bracket [{lo}, {hi}] does not straddle the root (f = {f_lo:e}, {f_hi:e})"
        )));
    }
    if f_lo.abs() <= eps {
        return Ok(RootResult { root: lo, residual: f_lo.abs(), iterations: 0 });
    }
    if f_hi.abs() <= eps {
        return Ok(RootResult { root: hi, residual: f_hi.abs(), iterations: 0 });
    }
    let mut iterations = 0;
    while hi - lo > BISECTION_WIDTH && iterations < MAX_ITERATIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= eps {
            return Ok(RootResult { root: mid, residual: fm.abs(), iterations });
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if fx.abs() <= eps {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = df(x);
        let newton = x - fx / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            break;
        }
        x = next;
        fx = f(x);
    }
    Ok(RootResult { root: x, residual: fx.abs(), iterations })
}

/// η(l, a): the root of `l = κ coth(κa/2) − 2/a`.
pub fn eta(l: f64, a: f64) -> Result<RootResult> {
    eta_with(l, a, &Tolerances::default())
}

pub fn eta_with(l: f64, a: f64, tol: &Tolerances) -> Result<RootResult> {
    check_inputs("eta", l, a)?;
    if a.is_infinite() {
        return Ok(RootResult { root: l, residual: 0.0, iterations: 0 });
    }
    solve_increasing(
        |k| kappa_coth_shifted(k, a) - l,
        |k| d_kappa_coth(k, a),
        l,
        l + 2.0 / a,
        tol.root(l),
    )
}

/// ν(m, a): the root of `m = κ tanh(κa/2)`.
pub fn nu(m: f64, a: f64) -> Result<RootResult> {
    nu_with(m, a, &Tolerances::default())
}

pub fn nu_with(m: f64, a: f64, tol: &Tolerances) -> Result<RootResult> {
    check_inputs("nu", m, a)?;
    if a.is_infinite() {
        return Ok(RootResult { root: m, residual: 0.0, iterations: 0 });
    }
    solve_increasing(
        |k| kappa_tanh(k, a) - m,
        |k| d_kappa_tanh(k, a),
        m,
        m + 2.0 / a,
        tol.root(m),
    )
}

/// ξ(m, a): the closed-form majorant of ν(m, a).
pub fn xi(m: f64, a: f64) -> Result<f64> {
    check_inputs("xi", m, a)?;
    if a.is_infinite() {
        return Ok(4.0 * m);
    }
    Ok(if m <= 1.0 / (2.0 * a) {
        (8.0 * m / a).sqrt()
    } else {
        4.0 * m
    })
}
