//! Non-autonomous quadratic dynamics.
//!
//! A parameter sequence `ω = (c_0, c_1, ...)` drives the composition
//! `f^n_ω = f_{c_{n-1}} ∘ ... ∘ f_{c_0}` with `f_c(z) = z² + c`. This crate
//! computes orbits, escape times and the Green's function `g_ω` with a
//! certified truncation bound, derives the per-level degree bounds used to
//! argue total disconnectedness of `J_ω`, and runs deterministic Monte Carlo
//! estimates of the escape-time tails of random sequences.
//!
//! Module map:
//!
//! * [`domain`] parameter regions, uniform sampling and parameter sequences
//! * [`dynamics`] escape radius constants, iteration, escape time, Green's function
//! * [`connectivity`] degree profiles, the critical-orbit disconnectedness scan,
//!   grid approximations of `K_ω` and their connected components
//! * [`stats`] tail curves, exponential-rate fits and sample fractions
//! * [`cli`] the `randjulia` command line front end

pub mod cli;
pub mod connectivity;
pub mod domain;
pub mod dynamics;
pub mod pgm;
pub mod stats;

pub use num_complex::Complex64 as Complex;

pub use connectivity::{
    bbr_disconnected_scan, components, critical_profile, grid_escape_field, property_kk,
    sufficient_condition_report, ComponentReport, DegreeProfile, GridBox, GridField,
    SufficiencyReport, Verdict,
};
pub use domain::{ParamSequence, ParamSource, Region, RegionError, Shifted};
pub use dynamics::{
    escape_time, green, iterate, Constants, EscapeTime, GreenEval, GreenOutcome, Overflow,
};
pub use stats::{
    disconnect_fraction, fit_gamma, green_summary, sample_tail, GammaFit, StatsError, TailCurve,
    TailMode,
};
