//! Escape radius constants, orbits, escape times and the Green's function.
//!
//! Every function here assumes the sequence satisfies `|c_i| <= R` for the
//! `R` its [`Constants`] were derived from. The escape criterion and the
//! Green's function error bound both rely on it.

use serde::Serialize;
use thiserror::Error;

use crate::domain::ParamSource;
use crate::Complex;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_N_MAX: u32 = 1000;

/// Moduli above this end [`iterate`] with an [`Overflow`].
pub const OVERFLOW_MODULUS: f64 = 1e100;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parameter bound R must be positive and finite, got {0}")]
pub struct InvalidBound(pub f64);

/// The constants `(R, R0, R̃0, G)` shared by every sequence with `|c_i| <= R`.
///
/// * `r0` is an escape radius: `|z| >= R0` implies `|z² + c| >= 2|z|`, and
///   `|g_ω(z) - log|z|| < 1` outside `D(0, R0)`.
/// * `tilde_r0` lies in `(R0, R0² - R)`, so `f_c^{-1}(D(0, R̃0)) ⊂ D(0, R0)`.
/// * `g` bounds the Green's function on `R0 <= |z| <= R̃0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "tildeR0")]
    pub tilde_r0: f64,
    #[serde(rename = "G")]
    pub g: f64,
}

impl Constants {
    pub fn derive(r: f64) -> Result<Self, InvalidBound> {
        if !(r.is_finite() && r > 0.0) {
            return Err(InvalidBound(r));
        }
        let r0 = (1.0 + (1.0 + r).sqrt()).max((2.0 * r).sqrt()).max(r + 1.0);
        let tilde_r0 = 0.5 * (r0 + r0 * r0 - r);
        Ok(Constants {
            r,
            r0,
            tilde_r0,
            g: tilde_r0.ln() + 1.0,
        })
    }

    /// Lower and upper bounds on `g_ω(z)` for a point of `D(0, R0)` with
    /// escape time `k`.
    pub fn green_sandwich(&self, k: u32) -> (f64, f64) {
        let scale = 0.5f64.powi(k as i32);
        let log_r0 = self.r0.ln();
        ((log_r0 - 1.0) * scale, 2.0 * (log_r0 + 1.0) * scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("orbit modulus exceeded 1e100 at step {step}")]
pub struct Overflow {
    pub step: u64,
}

/// `f^n_ω(z)` by direct iteration.
pub fn iterate<P: ParamSource + ?Sized>(seq: &P, z: Complex, n: u64) -> Result<Complex, Overflow> {
    let limit = OVERFLOW_MODULUS * OVERFLOW_MODULUS;
    let mut w = z;
    for (i, c) in (0..n).zip(seq.params(0)) {
        w = w * w + c;
        if w.norm_sqr().is_nan() || w.norm_sqr() > limit {
            return Err(Overflow { step: i + 1 });
        }
    }
    Ok(w)
}

/// Escape time `k(z, ω)` observed up to a finite horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EscapeTime {
    /// `|f^k(z)| >= R0` for the first time at step `k`; `point` is `f^k(z)`.
    Escaped { k: u32, point: Complex },
    /// `|f^j(z)| < R0` for every `j <= horizon`.
    Bounded { horizon: u32 },
}

impl EscapeTime {
    pub fn k(&self) -> Option<u32> {
        match self {
            EscapeTime::Escaped { k, .. } => Some(*k),
            EscapeTime::Bounded { .. } => None,
        }
    }
}

pub fn escape_time<P: ParamSource + ?Sized>(
    seq: &P,
    z: Complex,
    consts: &Constants,
    n_max: u32,
) -> EscapeTime {
    escape_along(&mut seq.params(0), z, consts, n_max)
}

/// Escape time driven by `params`, which is left positioned just after the
/// parameters consumed.
fn escape_along(
    params: &mut dyn Iterator<Item = Complex>,
    z: Complex,
    consts: &Constants,
    n_max: u32,
) -> EscapeTime {
    let r0_sq = consts.r0 * consts.r0;
    let mut w = z;
    for k in 0..=n_max {
        if w.norm_sqr() >= r0_sq {
            return EscapeTime::Escaped { k, point: w };
        }
        if k < n_max {
            w = w * w + params.next().expect("parameter sequences are infinite");
        }
    }
    EscapeTime::Bounded { horizon: n_max }
}

/// A Green's function value with a certified truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenEval {
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenOutcome {
    Escaped { k: u32, eval: GreenEval },
    /// Escape not certified within the horizon; `g` reads as 0 there.
    Bounded { horizon: u32 },
}

impl GreenOutcome {
    pub fn value_or_zero(&self) -> f64 {
        match self {
            GreenOutcome::Escaped { eval, .. } => eval.value,
            GreenOutcome::Bounded { .. } => 0.0,
        }
    }

    pub fn abs_error(&self) -> f64 {
        match self {
            GreenOutcome::Escaped { eval, .. } => eval.abs_error,
            GreenOutcome::Bounded { .. } => 0.0,
        }
    }

    pub fn k(&self) -> Option<u32> {
        match self {
            GreenOutcome::Escaped { k, .. } => Some(*k),
            GreenOutcome::Bounded { .. } => None,
        }
    }
}

// The tail bound shrinks at least eightfold per step, so this is never hit
// for tolerances above the subnormal range.
const MAX_EXPANSION_STEPS: u64 = 2048;

/// `g_ω(z) = lim 2^{-n} log|f^n_ω(z)|`.
///
/// The orbit is run to its escape step `k`, then
/// `g_ω(z) = 2^{-k} g_{σ^k ω}(w)` with `w = f^k_ω(z)`. Outside `D(0, R0)` the
/// partial sums `a_n = 2^{-n} log|f^n(w)|` satisfy
/// `a_{n+1} = a_n + 2^{-(n+1)} log|1 + c/(f^n(w))²|`, and since `|f^n(w)|`
/// at least doubles per step, the terms not yet added sum to at most
/// `2^{-(n+1)} (16/7) R / |f^n(w)|²`. Summation stops once that bound, scaled
/// by `2^{-k}`, is at most `tol`; it is reported as `abs_error`.
///
/// The outer orbit is carried as `(log|w|, w/|w|)` so it never overflows.
pub fn green<P: ParamSource + ?Sized>(
    seq: &P,
    z: Complex,
    consts: &Constants,
    n_max: u32,
    tol: f64,
) -> GreenOutcome {
    let mut params = seq.params(0);
    let (k, w) = match escape_along(&mut params, z, consts, n_max) {
        EscapeTime::Escaped { k, point } => (k, point),
        EscapeTime::Bounded { horizon } => return GreenOutcome::Bounded { horizon },
    };
    let scale = 0.5f64.powi(k as i32);
    let mut log_mod = w.norm().ln();
    let mut dir = w / w.norm();
    let mut sum = log_mod;
    let mut weight = 0.5;
    let mut tail;
    let mut n = 0u64;
    loop {
        tail = weight * (16.0 / 7.0) * consts.r * (-2.0 * log_mod).exp();
        if scale * tail <= tol || n >= MAX_EXPANSION_STEPS {
            break;
        }
        let c = params.next().expect("parameter sequences are infinite");
        let dir_sq = dir * dir;
        // t = c / w², so that w² + c = w² (1 + t)
        let t = c * dir_sq.conj() * (-2.0 * log_mod).exp();
        let correction = 0.5 * (2.0 * t.re + t.norm_sqr()).ln_1p();
        sum += weight * correction;
        let next = dir_sq * (1.0 + t);
        dir = next / next.norm();
        log_mod = 2.0 * log_mod + correction;
        weight *= 0.5;
        n += 1;
    }
    GreenOutcome::Escaped {
        k,
        eval: GreenEval {
            value: scale * sum,
            abs_error: scale * tail,
        },
    }
}
