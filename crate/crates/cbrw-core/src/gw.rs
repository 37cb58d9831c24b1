//! Galton-Watson analytics and simulation: extinction probabilities,
//! exact trajectory simulation, and the Monte Carlo shape checks for the
//! subcritical/critical survival asymptotics and extinction-time tails.
//!
//! The asymptotic constants of those limit theorems are existence
//! statements; the reports here fit or tabulate them from simulation and
//! never assert their values.

use crate::engine::{sample_offspring_total, EngineError, StreamSeed};
use crate::model::GwSpec;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Tolerance for the criticality test `|mean - 1| <= CRITICAL_EPS`.
/// Near-critical studies must use the subcritical path explicitly.
pub const CRITICAL_EPS: f64 = 1e-12;

const FIXED_POINT_TOL: f64 = 1e-14;
const FIXED_POINT_SAFEGUARD: u32 = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GwError {
    #[error("offspring mean {mean} is not subcritical")]
    NotSubcritical { mean: f64 },
    #[error("offspring mean {mean} is not critical (tolerance {CRITICAL_EPS})")]
    NotCritical { mean: f64 },
    #[error("offspring variance is zero")]
    ZeroVariance,
    #[error(
        "exact pgf iteration is only a cross-check oracle for max offspring <= {cap}, got {max_k}"
    )]
    SupportTooLarge { max_k: u32, cap: u32 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Generation sizes of one simulated Galton-Watson run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GwTrajectory {
    /// `sizes[n]` is the population at generation `n`; `sizes[0]` is the
    /// initial population.
    pub sizes: Vec<u64>,
    /// First generation with zero particles, if extinction happened within
    /// the horizon.
    pub extinct_at: Option<u64>,
}

/// Result of the extinction-probability fixed point.
///
/// `degenerate` marks the unit-offspring law, where extinction never occurs
/// and survival is trivial; the probability is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionProbability {
    pub probability: f64,
    pub degenerate: bool,
}

/// Extinction probability of the Galton-Watson process: `q^z` with `q` the
/// smallest fixed point of the offspring pgf in `[0, 1]`, found by monotone
/// iteration from 0. Returns exactly 1 when the mean is at most 1 (and the
/// law is not the degenerate unit-offspring one).
pub fn extinction_probability(spec: &GwSpec) -> ExtinctionProbability {
    let dist = spec.offspring();
    if dist.support() == [(1, 1.0)] {
        return ExtinctionProbability {
            probability: 0.0,
            degenerate: true,
        };
    }
    if dist.mean() <= 1.0 {
        return ExtinctionProbability {
            probability: 1.0,
            degenerate: false,
        };
    }
    let mut q = 0.0f64;
    let mut settled = 0u32;
    for _ in 0..1_000_000 {
        let next = dist.pgf(q).expect("q stays in [0, 1] under a pgf");
        let done = (next - q).abs() < FIXED_POINT_TOL;
        q = next;
        if done {
            settled += 1;
            if settled > FIXED_POINT_SAFEGUARD {
                break;
            }
        } else {
            settled = 0;
        }
    }
    ExtinctionProbability {
        probability: q.powi(spec.initial() as i32),
        degenerate: false,
    }
}

/// Exact survival probability `P(Z_n > 0)` by n-fold pgf composition.
/// Cross-check oracle only; rejected for supports with max offspring above 8
/// because the composition is not meant as a general feature.
pub fn exact_survival_probability(spec: &GwSpec, n: u64) -> Result<f64, GwError> {
    const CAP: u32 = 8;
    let dist = spec.offspring();
    if dist.max_k() > CAP {
        return Err(GwError::SupportTooLarge {
            max_k: dist.max_k(),
            cap: CAP,
        });
    }
    let mut s = 0.0f64;
    for _ in 0..n {
        s = dist.pgf(s).expect("pgf maps [0,1] into itself");
    }
    Ok(1.0 - s.powi(spec.initial() as i32))
}

/// Exact simulation of generation sizes up to `horizon`, each generation the
/// sum of i.i.d. offspring draws through the engine's population sampler.
pub fn simulate_gw<R: Rng + ?Sized>(
    spec: &GwSpec,
    horizon: u64,
    rng: &mut R,
) -> Result<GwTrajectory, GwError> {
    let mut sizes = Vec::with_capacity(horizon as usize + 1);
    let mut current = spec.initial();
    sizes.push(current);
    let mut extinct_at = None;
    for n in 1..=horizon {
        if current > 0 {
            let (next, _) = sample_offspring_total(&current, spec.offspring(), rng)?;
            current = next;
            if current == 0 {
                extinct_at = Some(n);
            }
        }
        sizes.push(current);
    }
    Ok(GwTrajectory { sizes, extinct_at })
}

/// First extinction generation, simulated only as far as needed (capped at
/// `horizon`). `None` means still alive at the horizon.
fn extinction_time<R: Rng + ?Sized>(
    spec: &GwSpec,
    horizon: u64,
    rng: &mut R,
) -> Result<Option<u64>, GwError> {
    let mut current = spec.initial();
    for n in 1..=horizon {
        let (next, _) = sample_offspring_total(&current, spec.offspring(), rng)?;
        current = next;
        if current == 0 {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// One row of a survival report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GwReportRow {
    pub n: u64,
    /// Monte Carlo estimate of `P(Z_n > 0)`.
    pub p_survive: f64,
    pub p_stderr: f64,
    /// The headline statistic: `p_survive / mean^n` for the subcritical
    /// report, `n * p_survive` for the critical one.
    pub statistic: f64,
    pub stat_stderr: f64,
}

/// A survival-asymptotics report table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwReport {
    pub kind: &'static str,
    pub trials: u64,
    pub master_seed: u64,
    pub rows: Vec<GwReportRow>,
}

impl GwReport {
    pub const CSV_HEADER: &'static str = "n,estimate,stderr,trials";

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.n, r.statistic, r.stat_stderr, self.trials
            ));
        }
        out
    }
}

fn survival_counts(
    spec: &GwSpec,
    n_max: u64,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<u64>, GwError> {
    let times: Vec<Result<Option<u64>, GwError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamSeed::new(master_seed).stream(i).rng();
            extinction_time(spec, n_max, &mut rng)
        })
        .collect();
    let mut alive = vec![0u64; n_max as usize + 1];
    for t in times {
        let e = t?;
        let last_alive = e.map_or(n_max, |e| e - 1);
        for cell in alive.iter_mut().take(last_alive as usize + 1) {
            *cell += 1;
        }
    }
    Ok(alive)
}

fn binomial_stderr(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Monte Carlo table of `P(Z_n > 0)` with the ratio to `mean^n`, which must
/// stabilize for a subcritical process with positive variance.
pub fn subcritical_decay_report(
    spec: &GwSpec,
    n_max: u64,
    trials: u64,
    master_seed: u64,
) -> Result<GwReport, GwError> {
    let mean = spec.offspring().mean();
    if mean >= 1.0 - CRITICAL_EPS {
        return Err(GwError::NotSubcritical { mean });
    }
    let alive = survival_counts(spec, n_max, trials, master_seed)?;
    let rows = (1..=n_max)
        .map(|n| {
            let p = alive[n as usize] as f64 / trials as f64;
            let se = binomial_stderr(p, trials);
            let scale = mean.powi(n as i32);
            GwReportRow {
                n,
                p_survive: p,
                p_stderr: se,
                statistic: p / scale,
                stat_stderr: se / scale,
            }
        })
        .collect();
    Ok(GwReport {
        kind: "subcritical_decay",
        trials,
        master_seed,
        rows,
    })
}

/// Monte Carlo table of `n * P(Z_n > 0)` for a critical process; the column
/// stabilizes (classically at `2 / variance`, reported but never asserted).
pub fn critical_survival_report(
    spec: &GwSpec,
    n_max: u64,
    trials: u64,
    master_seed: u64,
) -> Result<GwReport, GwError> {
    let mean = spec.offspring().mean();
    if (mean - 1.0).abs() > CRITICAL_EPS {
        return Err(GwError::NotCritical { mean });
    }
    if spec.offspring().variance() == 0.0 {
        return Err(GwError::ZeroVariance);
    }
    let alive = survival_counts(spec, n_max, trials, master_seed)?;
    let rows = (1..=n_max)
        .map(|n| {
            let p = alive[n as usize] as f64 / trials as f64;
            let se = binomial_stderr(p, trials);
            GwReportRow {
                n,
                p_survive: p,
                p_stderr: se,
                statistic: n as f64 * p,
                stat_stderr: n as f64 * se,
            }
        })
        .collect();
    Ok(GwReport {
        kind: "critical_survival",
        trials,
        master_seed,
        rows,
    })
}

/// Monte Carlo estimates of the extinction-time tail of a critical process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub z: u64,
    pub n: u64,
    pub trials: u64,
    pub master_seed: u64,
    /// `P(T <= n)` and its standard error.
    pub p_le: f64,
    pub p_le_stderr: f64,
    /// `P(T = n)` and its standard error.
    pub p_eq: f64,
    pub p_eq_stderr: f64,
}

/// Estimates `P_z(T <= n)` and `P_z(T = n)` for a critical process with
/// positive variance.
pub fn extinction_time_tail(
    spec: &GwSpec,
    n: u64,
    trials: u64,
    master_seed: u64,
) -> Result<TailEstimate, GwError> {
    let mean = spec.offspring().mean();
    if (mean - 1.0).abs() > CRITICAL_EPS {
        return Err(GwError::NotCritical { mean });
    }
    if spec.offspring().variance() == 0.0 {
        return Err(GwError::ZeroVariance);
    }
    let times: Vec<Result<Option<u64>, GwError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamSeed::new(master_seed).stream(i).rng();
            extinction_time(spec, n, &mut rng)
        })
        .collect();
    let mut le = 0u64;
    let mut eq = 0u64;
    for t in times {
        match t? {
            Some(e) if e <= n => {
                le += 1;
                if e == n {
                    eq += 1;
                }
            }
            _ => {}
        }
    }
    let p_le = le as f64 / trials as f64;
    let p_eq = eq as f64 / trials as f64;
    Ok(TailEstimate {
        z: spec.initial(),
        n,
        trials,
        master_seed,
        p_le,
        p_le_stderr: binomial_stderr(p_le, trials),
        p_eq,
        p_eq_stderr: binomial_stderr(p_eq, trials),
    })
}
