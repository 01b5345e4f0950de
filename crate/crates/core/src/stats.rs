//! Monte Carlo estimates over random sequences `ω ∈ V^ℕ`.
//!
//! Sample `j` of a run uses the sequence `Random { region, master_seed, stream: j }`
//! and the critical point `z = 0`. Samples are evaluated in parallel and
//! reduced in index order, so every result depends only on its inputs.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::connectivity::{bbr_disconnected_scan, critical_profile, sufficient_condition_report, Verdict};
use crate::domain::{ParamSequence, Region};
use crate::dynamics::{escape_time, green, Constants, GreenOutcome, DEFAULT_TOL};
use crate::Complex;

pub const DEFAULT_MIN_SURVIVORS: u64 = 30;
pub const DEFAULT_K_LO: u32 = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("only {usable} usable points in the fit window, need at least 3")]
    InsufficientData { usable: usize },
    #[error("cannot merge curves: {0}")]
    Mismatch(&'static str),
    #[error("malformed tail csv at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Survival of the escape time: fraction with `k(0, ω) > k`.
    EscapeTime,
    /// Fraction with `g_ω(0) < G 2^{-k}`.
    FastEscapeGreen,
}

impl TailMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailMode::EscapeTime => "escape_time",
            TailMode::FastEscapeGreen => "fast_escape_green",
        }
    }
}

fn region_constants(region: &Region) -> Constants {
    Constants::derive(region.bounding_radius()).expect("validated region has a positive radius")
}

/// Empirical survival probabilities for `k = 0..=k_max`.
///
/// Samples still bounded at the horizon count as surviving at every `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub mode: TailMode,
    pub samples: u64,
    pub k_max: u32,
    pub n_max: u32,
    pub master_seed: u64,
    pub survivors: Vec<u64>,
    pub survival: Vec<f64>,
    pub censored: u64,
}

impl TailCurve {
    fn from_counts(
        mode: TailMode,
        samples: u64,
        n_max: u32,
        master_seed: u64,
        survivors: Vec<u64>,
        censored: u64,
    ) -> Self {
        let survival = survivors
            .iter()
            .map(|&s| s as f64 / samples as f64)
            .collect();
        TailCurve {
            mode,
            samples,
            k_max: survivors.len() as u32 - 1,
            n_max,
            master_seed,
            survivors,
            survival,
            censored,
        }
    }

    /// A curve with prescribed survival values, for checking estimators.
    pub fn synthetic(samples: u64, survival: Vec<f64>) -> Self {
        let survivors = survival
            .iter()
            .map(|s| (s * samples as f64).round() as u64)
            .collect();
        TailCurve {
            mode: TailMode::EscapeTime,
            samples,
            k_max: survival.len() as u32 - 1,
            n_max: survival.len() as u32 - 1,
            master_seed: 0,
            survivors,
            survival,
            censored: 0,
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.survivors.windows(2).all(|w| w[1] <= w[0])
    }

    /// Smallest `k` with survival at most one half.
    pub fn median(&self) -> Option<u32> {
        self.survivors
            .iter()
            .position(|&s| 2 * s <= self.samples)
            .map(|k| k as u32)
    }

    /// Combines runs over disjoint stream ranges.
    pub fn merge(&self, other: &TailCurve) -> Result<TailCurve, StatsError> {
        if self.mode != other.mode {
            return Err(StatsError::Mismatch("modes differ"));
        }
        if self.k_max != other.k_max || self.n_max != other.n_max {
            return Err(StatsError::Mismatch("horizons differ"));
        }
        if self.master_seed != other.master_seed {
            return Err(StatsError::Mismatch("seeds differ"));
        }
        let survivors = self
            .survivors
            .iter()
            .zip(&other.survivors)
            .map(|(a, b)| a + b)
            .collect();
        Ok(TailCurve::from_counts(
            self.mode,
            self.samples + other.samples,
            self.n_max,
            self.master_seed,
            survivors,
            self.censored + other.censored,
        ))
    }

    /// CSV with `#` metadata lines: first `header` (verbatim), then the
    /// curve's own `[curve]` table, then `k,survivors,survival` rows.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# [curve]");
        let _ = writeln!(out, "# mode = \"{}\"", self.mode.as_str());
        let _ = writeln!(out, "# samples = {}", self.samples);
        let _ = writeln!(out, "# censored = {}", self.censored);
        let _ = writeln!(out, "# k_max = {}", self.k_max);
        let _ = writeln!(out, "# n_max = {}", self.n_max);
        let _ = writeln!(out, "# master_seed = {}", self.master_seed);
        out.push_str("k,survivors,survival\n");
        for (k, (s, p)) in self.survivors.iter().zip(&self.survival).enumerate() {
            let _ = writeln!(out, "{k},{s},{p}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<TailCurve, StatsError> {
        let err = |line: usize, reason: &str| StatsError::Csv {
            line,
            reason: reason.to_string(),
        };
        let mut meta = std::collections::HashMap::new();
        let mut in_curve = false;
        let mut survivors = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if comment.starts_with('[') {
                    in_curve = comment == "[curve]";
                } else if in_curve {
                    if let Some((key, value)) = comment.split_once('=') {
                        meta.insert(key.trim().to_string(), value.trim().trim_matches('"').to_string());
                    }
                }
                continue;
            }
            if !header_seen {
                if line != "k,survivors,survival" {
                    return Err(err(lineno, "expected header k,survivors,survival"));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(err(lineno, "expected three fields"));
            }
            let k: usize = fields[0].parse().map_err(|_| err(lineno, "bad k"))?;
            if k != survivors.len() {
                return Err(err(lineno, "k values must run 0, 1, 2, ..."));
            }
            survivors.push(fields[1].parse::<u64>().map_err(|_| err(lineno, "bad survivors"))?);
        }
        if survivors.is_empty() {
            return Err(err(0, "no data rows"));
        }
        let get = |key: &str| -> Result<u64, StatsError> {
            meta.get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(0, &format!("missing or bad metadata `{key}`")))
        };
        let mode = match meta.get("mode").map(String::as_str) {
            Some("escape_time") => TailMode::EscapeTime,
            Some("fast_escape_green") => TailMode::FastEscapeGreen,
            _ => return Err(err(0, "missing or bad metadata `mode`")),
        };
        let samples = get("samples")?;
        if samples == 0 {
            return Err(err(0, "samples must be positive"));
        }
        Ok(TailCurve::from_counts(
            mode,
            samples,
            get("n_max")? as u32,
            get("master_seed")?,
            survivors,
            get("censored")?,
        ))
    }
}

/// The Green's function at the critical point for sample streams `streams`.
pub fn critical_greens(
    region: &Region,
    streams: Range<u64>,
    n_max: u32,
    master_seed: u64,
    tol: f64,
) -> Vec<GreenOutcome> {
    let consts = region_constants(region);
    streams
        .into_par_iter()
        .map(|s| {
            let seq = ParamSequence::random(region.clone(), master_seed, s);
            green(&seq, Complex::new(0.0, 0.0), &consts, n_max, tol)
        })
        .collect()
}

pub fn sample_tail(
    region: &Region,
    samples: u64,
    k_max: u32,
    n_max: u32,
    master_seed: u64,
    mode: TailMode,
) -> TailCurve {
    sample_tail_streams(region, 0..samples, k_max, n_max, master_seed, mode)
}

/// [`sample_tail`] over an explicit range of sample streams.
pub fn sample_tail_streams(
    region: &Region,
    streams: Range<u64>,
    k_max: u32,
    n_max: u32,
    master_seed: u64,
    mode: TailMode,
) -> TailCurve {
    assert!(k_max <= n_max, "k_max must not exceed n_max");
    assert!(!streams.is_empty(), "at least one sample is required");
    let consts = region_constants(region);
    let samples = streams.end - streams.start;
    let mut survivors = vec![0u64; k_max as usize + 1];
    let mut censored = 0;
    match mode {
        TailMode::EscapeTime => {
            let times: Vec<Option<u32>> = streams
                .into_par_iter()
                .map(|s| {
                    let seq = ParamSequence::random(region.clone(), master_seed, s);
                    escape_time(&seq, Complex::new(0.0, 0.0), &consts, n_max).k()
                })
                .collect();
            for t in times {
                // survives level k while k(0, ω) > k
                let alive = match t {
                    None => {
                        censored += 1;
                        k_max as usize + 1
                    }
                    Some(t) => (t as usize).min(k_max as usize + 1),
                };
                for s in &mut survivors[..alive] {
                    *s += 1;
                }
            }
        }
        TailMode::FastEscapeGreen => {
            for g in critical_greens(region, streams, n_max, master_seed, DEFAULT_TOL) {
                match g {
                    GreenOutcome::Bounded { .. } => {
                        censored += 1;
                        survivors.iter_mut().for_each(|s| *s += 1);
                    }
                    GreenOutcome::Escaped { eval, .. } => {
                        let lower = eval.value - eval.abs_error;
                        for (k, s) in survivors.iter_mut().enumerate() {
                            if lower < consts.g * 0.5f64.powi(k as i32) {
                                *s += 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
    TailCurve::from_counts(mode, samples, n_max, master_seed, survivors, censored)
}

/// Least-squares fit of `log survival(k) ≈ intercept - γ k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaFit {
    pub gamma_hat: f64,
    pub intercept: f64,
    pub fit_range: (u32, u32),
    pub points: usize,
    pub rms_residual: f64,
    pub min_survivors: u64,
}

/// Fits the decay rate over `k >= k_lo`.
///
/// A level is usable while at least `min_survivors` samples survive it and
/// some of them are still uncensored; levels pinned at the censored floor
/// carry no decay information.
pub fn fit_gamma(curve: &TailCurve, k_lo: u32, min_survivors: u64) -> Result<GammaFit, StatsError> {
    let points: Vec<(f64, f64)> = (k_lo as usize..curve.survival.len())
        .take_while(|&k| {
            curve.survival[k] > 0.0
                && curve.survivors[k] >= min_survivors
                && curve.survivors[k] > curve.censored
        })
        .map(|k| (k as f64, curve.survival[k].ln()))
        .collect();
    if points.len() < 3 {
        return Err(StatsError::InsufficientData {
            usable: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    Ok(GammaFit {
        gamma_hat: -slope,
        intercept,
        fit_range: (points[0].0 as u32, points[points.len() - 1].0 as u32),
        points: points.len(),
        rms_residual: (rss / n).sqrt(),
        min_survivors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisconnectFraction {
    pub samples: u64,
    /// Fraction whose critical-orbit scan found an escaping shift.
    pub fraction_disconnected: f64,
    /// Fraction whose degree profile gave `EvidenceTotallyDisconnected`.
    pub fraction_evidence_td: f64,
    #[serde(rename = "K_used")]
    pub k_used: u32,
}

/// Per-sample disconnectedness diagnostics. The degree profile of each
/// sample covers levels `1..=shift_max` and is judged with cap `big_k`.
pub fn disconnect_fraction(
    region: &Region,
    samples: u64,
    shift_max: u32,
    n_max: u32,
    master_seed: u64,
    big_k: u32,
) -> DisconnectFraction {
    assert!(samples > 0 && shift_max > 0);
    let consts = region_constants(region);
    let flags: Vec<(bool, bool)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let seq = ParamSequence::random(region.clone(), master_seed, s);
            let disconnected = !bbr_disconnected_scan(&seq, shift_max, &consts, n_max).is_empty();
            let profile = critical_profile(&seq, shift_max, &consts, n_max, DEFAULT_TOL);
            let evidence = sufficient_condition_report(&profile, big_k).verdict
                == Verdict::EvidenceTotallyDisconnected;
            (disconnected, evidence)
        })
        .collect();
    let count = |pick: fn(&(bool, bool)) -> bool| flags.iter().filter(|f| pick(f)).count();
    DisconnectFraction {
        samples,
        fraction_disconnected: count(|f| f.0) as f64 / samples as f64,
        fraction_evidence_td: count(|f| f.1) as f64 / samples as f64,
        k_used: big_k,
    }
}

pub const SUMMARY_LEVELS: [f64; 7] = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenSummary {
    pub samples: u64,
    /// `(level, value)` nearest-rank quantiles of `g_ω(0)`, with horizon
    /// bounded samples read as 0.
    pub quantiles: Vec<(f64, f64)>,
    pub censored_fraction: f64,
    pub escaped: u64,
    /// Escaped samples outside `[(log R0 - 1) 2^{-k}, 2 (log R0 + 1) 2^{-k}]`
    /// by more than their error bound.
    pub sandwich_violations: u64,
}

pub fn green_summary(region: &Region, samples: u64, n_max: u32, master_seed: u64) -> GreenSummary {
    assert!(samples > 0);
    let consts = region_constants(region);
    let outcomes = critical_greens(region, 0..samples, n_max, master_seed, DEFAULT_TOL);
    summarize_greens(&consts, &outcomes)
}

pub fn summarize_greens(consts: &Constants, outcomes: &[GreenOutcome]) -> GreenSummary {
    let mut values: Vec<f64> = outcomes.iter().map(GreenOutcome::value_or_zero).collect();
    values.sort_by(f64::total_cmp);
    let m = values.len();
    let quantiles = SUMMARY_LEVELS
        .iter()
        .map(|&p| {
            let rank = ((p * m as f64).ceil() as usize).clamp(1, m);
            (p, values[rank - 1])
        })
        .collect();
    let mut escaped = 0;
    let mut violations = 0;
    for o in outcomes {
        if let GreenOutcome::Escaped { k, eval } = o {
            escaped += 1;
            let (lo, hi) = consts.green_sandwich(*k);
            if eval.value + eval.abs_error < lo || eval.value - eval.abs_error > hi {
                violations += 1;
            }
        }
    }
    GreenSummary {
        samples: m as u64,
        quantiles,
        censored_fraction: (m as u64 - escaped) as f64 / m as f64,
        escaped,
        sandwich_violations: violations,
    }
}
