//! Monte Carlo experiment harness tying the simulation engine to the closed
//! forms: phi estimation, geometric left-reach decay, recurrence window
//! statistics, frontier speed, leading-process growth, and phase scans.
//!
//! Every report embeds `(master_seed, trials)` and its truncation metadata;
//! re-running with the same inputs reproduces the estimate bit-exactly.
//! Trials fan out across a worker pool, but each trial's stream is derived
//! from `(master_seed, trial_index)` and aggregation happens in trial-index
//! order, so results are independent of scheduling.

use crate::analytic::{
    classify_brw, classify_cbrw, lp_growth_rate, phi_pair, AnalyticError, BrwClass, RegimeKind,
};
use crate::engine::{
    run, run_brw_absorbed, run_brw_min_reach, BigCount, EngineError, StreamSeed, Trace,
};
use crate::model::{CbrwParams, OffspringDistribution, ValidationError};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Default truncation band for first-passage runs. The unresolved-line bias
/// these leave is geometrically small and always reported, never corrected.
pub const DEFAULT_RIGHT_CUTOFF: i64 = 40;
pub const DEFAULT_BRW_HORIZON: u64 = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("no trial reached -{n}; widen the trial budget")]
    InsufficientHits { n: i64 },
    #[error("invalid scan point: {0:?}")]
    InvalidScanPoint(Vec<ValidationError>),
}

/// Which first-passage mean to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Truncation bookkeeping for band-limited first-passage estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationMeta {
    /// Trials with particles still alive at the horizon.
    pub truncated_runs: u64,
    pub truncated_fraction: f64,
    pub right_cutoff: i64,
    pub horizon: u64,
}

/// Monte Carlo point estimate with standard error and the closed form it is
/// checked against, when one exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub truncation: Option<TruncationMeta>,
    pub closed_form: Option<f64>,
    /// `(estimate - closed_form) / stderr` when a closed form is present.
    pub z_score: Option<f64>,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Estimates `phi_l` (or `phi_r`) as the mean first-passage count at the
/// adjacent level, cross-checked against the closed form.
///
/// The right side is simulated through the mirror walk (`p_0 <-> q_0`),
/// under which the count of first arrivals at +1 is distributed as the
/// mirror's count at -1.
pub fn estimate_phi(
    mu_0: &OffspringDistribution,
    p_0: f64,
    side: Side,
    trials: u64,
    master_seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    let m_0 = mu_0.mean();
    if classify_brw(p_0, m_0)? == BrwClass::StronglyRecurrent {
        return Err(AnalyticError::NotTransient { p_0, m_0 }.into());
    }
    let phi = phi_pair(p_0, m_0)?;
    let (closed_form, sim_p, name) = match side {
        Side::Left => (phi.phi_l, p_0, "phi_left"),
        Side::Right => (phi.phi_r, 1.0 - p_0, "phi_right"),
    };

    let outcomes: Vec<Result<(u64, bool), EngineError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            run_brw_absorbed(
                mu_0,
                sim_p,
                -1,
                DEFAULT_RIGHT_CUTOFF,
                DEFAULT_BRW_HORIZON,
                StreamSeed::new(master_seed).stream(i),
            )
            .map(|c| (c.lambda_minus, c.truncated_mass > 0))
        })
        .collect();

    let mut values = Vec::with_capacity(outcomes.len());
    let mut truncated_runs = 0u64;
    for o in outcomes {
        let (count, truncated) = o?;
        values.push(count as f64);
        truncated_runs += u64::from(truncated);
    }
    let (estimate, stderr) = mean_and_se(&values);
    Ok(EstimateReport {
        name: name.to_string(),
        estimate,
        stderr,
        trials,
        master_seed,
        truncation: Some(TruncationMeta {
            truncated_runs,
            truncated_fraction: truncated_runs as f64 / trials as f64,
            right_cutoff: DEFAULT_RIGHT_CUTOFF,
            horizon: DEFAULT_BRW_HORIZON,
        }),
        closed_form: Some(closed_form),
        z_score: Some((estimate - closed_form) / stderr),
    })
}

/// One depth of the reach-decay table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: i64,
    pub hits: u64,
    pub p_hat: f64,
}

/// Weighted least-squares fit of `log P(reach -n)` against `n`.
///
/// Weights are the hit counts (inverse variance of a log binomial
/// proportion in the rare-event regime), so the deep, near-empty cells do
/// not drown the fit in their noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub closed_form_slope: f64,
    pub n_min: i64,
    pub n_max: i64,
    pub trials: u64,
    pub master_seed: u64,
    pub rows: Vec<DecayRow>,
}

/// Fits the geometric decay rate of `P(some particle ever reaches -n)` over
/// `n in [n_min, n_max]` and compares the slope to `log(phi_l)`.
pub fn estimate_left_reach_decay(
    mu_0: &OffspringDistribution,
    p_0: f64,
    n_min: i64,
    n_max: i64,
    trials: u64,
    master_seed: u64,
) -> Result<DecayReport, EstimatorError> {
    assert!(1 <= n_min && n_min <= n_max);
    let closed_form_slope = crate::analytic::left_reach_decay_rate(p_0, mu_0.mean())?.ln();

    let reaches: Vec<Result<i64, EngineError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            run_brw_min_reach(
                mu_0,
                p_0,
                n_max,
                DEFAULT_RIGHT_CUTOFF,
                DEFAULT_BRW_HORIZON,
                StreamSeed::new(master_seed).stream(i),
            )
            .map(|(min_site, _)| min_site)
        })
        .collect();

    let mut hits = vec![0u64; (n_max - n_min + 1) as usize];
    for r in reaches {
        let min_site = r?;
        for (idx, cell) in hits.iter_mut().enumerate() {
            let n = n_min + idx as i64;
            if min_site <= -n {
                *cell += 1;
            }
        }
    }

    let mut rows = Vec::with_capacity(hits.len());
    for (idx, &h) in hits.iter().enumerate() {
        let n = n_min + idx as i64;
        if h == 0 {
            return Err(EstimatorError::InsufficientHits { n });
        }
        rows.push(DecayRow {
            n,
            hits: h,
            p_hat: h as f64 / trials as f64,
        });
    }

    // weighted least squares on (n, ln p_hat) with weights = hits
    let wsum: f64 = rows.iter().map(|r| r.hits as f64).sum();
    let n_bar: f64 = rows.iter().map(|r| r.hits as f64 * r.n as f64).sum::<f64>() / wsum;
    let y_bar: f64 = rows
        .iter()
        .map(|r| r.hits as f64 * r.p_hat.ln())
        .sum::<f64>()
        / wsum;
    let sxx: f64 = rows
        .iter()
        .map(|r| {
            let d = r.n as f64 - n_bar;
            r.hits as f64 * d * d
        })
        .sum();
    let sxy: f64 = rows
        .iter()
        .map(|r| {
            let d = r.n as f64 - n_bar;
            r.hits as f64 * d * (r.p_hat.ln() - y_bar)
        })
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * n_bar;

    Ok(DecayReport {
        slope,
        slope_stderr: (1.0 / sxx).sqrt(),
        intercept,
        closed_form_slope,
        n_min,
        n_max,
        trials,
        master_seed,
        rows,
    })
}

/// Window statistics corroborating (never proving) a recurrence class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
    /// Fraction of trials with the origin occupied at some `t` in
    /// `[horizon/2, horizon]`.
    pub late_window_occupation: f64,
    pub late_window_stderr: f64,
    /// Mean total number of particle visits to the origin over `t >= 1`
    /// (lossily summed; population counts can be astronomically large).
    pub mean_particle_visits: f64,
    /// Fraction of trials that ever returned to the origin after time 0.
    pub returned_fraction: f64,
    /// Among returning trials, the fraction with no origin visit after the
    /// first return. Absent when no trial returned.
    pub p_no_revisit_after_first_return: Option<f64>,
}

struct TrialRecurrence {
    late_occupied: bool,
    visits: f64,
    first_return: Option<u64>,
    revisit_after_first: bool,
}

fn trial_recurrence(trace: &Trace, horizon: u64) -> TrialRecurrence {
    let window_start = horizon / 2;
    let mut late_occupied = false;
    let mut visits = 0.0;
    let mut first_return = None;
    let mut revisit_after_first = false;
    for r in &trace.records {
        if r.t == 0 {
            continue;
        }
        let occupied = r.z0 > 0u32.into();
        if occupied {
            use num_traits::ToPrimitive;
            visits += r.z0.to_f64().unwrap_or(f64::INFINITY);
            match first_return {
                None => first_return = Some(r.t),
                Some(t1) if r.t > t1 => revisit_after_first = true,
                _ => {}
            }
            if r.t >= window_start {
                late_occupied = true;
            }
        }
    }
    TrialRecurrence {
        late_occupied,
        visits,
        first_return,
        revisit_after_first,
    }
}

/// Runs `trials` full CBRW simulations and reports origin-visit statistics
/// for the late window `[horizon/2, horizon]`.
pub fn recurrence_statistic(
    params: &CbrwParams,
    horizon: u64,
    trials: u64,
    master_seed: u64,
) -> Result<RecurrenceReport, EstimatorError> {
    let stats: Vec<Result<TrialRecurrence, EngineError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            run::<BigCount>(params, horizon, StreamSeed::new(master_seed).stream(i))
                .map(|trace| trial_recurrence(&trace, horizon))
        })
        .collect();

    let mut late = 0u64;
    let mut visits_sum = 0.0;
    let mut returned = 0u64;
    let mut no_revisit = 0u64;
    for s in stats {
        let s = s?;
        late += u64::from(s.late_occupied);
        visits_sum += s.visits;
        if s.first_return.is_some() {
            returned += 1;
            no_revisit += u64::from(!s.revisit_after_first);
        }
    }
    let p_late = late as f64 / trials as f64;
    Ok(RecurrenceReport {
        horizon,
        trials,
        master_seed,
        late_window_occupation: p_late,
        late_window_stderr: (p_late * (1.0 - p_late) / trials as f64).sqrt(),
        mean_particle_visits: visits_sum / trials as f64,
        returned_fraction: returned as f64 / trials as f64,
        p_no_revisit_after_first_return: (returned > 0)
            .then(|| no_revisit as f64 / returned as f64),
    })
}

/// Empirical distribution of the frontier speed `l(horizon) / horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierSpeedReport {
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub mean: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx]
}

pub fn frontier_speed_estimate(
    params: &CbrwParams,
    horizon: u64,
    trials: u64,
    master_seed: u64,
) -> Result<FrontierSpeedReport, EstimatorError> {
    assert!(horizon >= 1);
    let speeds: Vec<Result<f64, EngineError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            run::<BigCount>(params, horizon, StreamSeed::new(master_seed).stream(i)).map(|trace| {
                trace.records.last().expect("horizon+1 records").l_frontier as f64 / horizon as f64
            })
        })
        .collect();
    let mut values = Vec::with_capacity(speeds.len());
    for s in speeds {
        values.push(s?);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    Ok(FrontierSpeedReport {
        horizon,
        trials,
        master_seed,
        mean,
        q05: quantile(&values, 0.05),
        q25: quantile(&values, 0.25),
        median: quantile(&values, 0.50),
        q75: quantile(&values, 0.75),
        q95: quantile(&values, 0.95),
    })
}

/// Violation counting for the leading-process growth ceiling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpGrowthReport {
    /// Tested bound: `|LP_n| < alpha^n` for `n >= n_min`.
    pub alpha: f64,
    pub n_min: u64,
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub violation_pairs: u64,
    pub pairs_checked: u64,
    pub violation_fraction: f64,
}

/// Checks `|LP_n| < (m~ + 0.1)^n` over all `(trial, n >= n_min)` pairs,
/// where `m~ = max(1, p_0 m_0)` is the growth ceiling.
pub fn lp_growth_check(
    params: &CbrwParams,
    horizon: u64,
    trials: u64,
    n_min: u64,
    master_seed: u64,
) -> Result<LpGrowthReport, EstimatorError> {
    let alpha = lp_growth_rate(params) + 0.1;
    let counts: Vec<Result<u64, EngineError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            run::<BigCount>(params, horizon, StreamSeed::new(master_seed).stream(i)).map(|trace| {
                use num_traits::ToPrimitive;
                trace
                    .records
                    .iter()
                    .filter(|r| r.t >= n_min)
                    .filter(|r| {
                        r.lp_size.to_f64().unwrap_or(f64::INFINITY) >= alpha.powi(r.t as i32)
                    })
                    .count() as u64
            })
        })
        .collect();
    let mut violation_pairs = 0u64;
    for c in counts {
        violation_pairs += c?;
    }
    let pairs_checked = trials * (horizon - n_min + 1);
    Ok(LpGrowthReport {
        alpha,
        n_min,
        horizon,
        trials,
        master_seed,
        violation_pairs,
        pairs_checked,
        violation_fraction: violation_pairs as f64 / pairs_checked as f64,
    })
}

/// Which model parameter a scan axis sweeps. Mean axes (`Mc`, `M0`) rebuild
/// the corresponding offspring law as the two-point law with that mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParam {
    Pc,
    P0,
    Mc,
    M0,
}

impl std::str::FromStr for ScanParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pc" | "p_c" => Ok(ScanParam::Pc),
            "p0" | "p_0" => Ok(ScanParam::P0),
            "mc" | "m_c" => Ok(ScanParam::Mc),
            "m0" | "m_0" => Ok(ScanParam::M0),
            other => Err(format!(
                "unknown scan parameter {other:?} (want pc|p0|mc|m0)"
            )),
        }
    }
}

/// One scan axis: the parameter and the grid values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanAxis {
    pub param: ScanParam,
    pub values: Vec<f64>,
}

impl ScanAxis {
    pub fn linspace(param: ScanParam, min: f64, max: f64, steps: usize) -> Self {
        assert!(steps >= 1);
        let values = if steps == 1 {
            vec![min]
        } else {
            (0..steps)
                .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
                .collect()
        };
        Self { param, values }
    }
}

/// Two-axis grid over a base parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridSpec {
    pub x: ScanAxis,
    pub y: ScanAxis,
    pub base: CbrwParams,
}

/// Simulation budget attached to scan cells when empirical corroboration is
/// requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimBudget {
    pub trials: u64,
    pub horizon: u64,
}

/// One grid cell: the scanned coordinates, the predicted regime, and the
/// optional empirical origin statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub x: f64,
    pub y: f64,
    pub kind: RegimeKind,
    pub boundary_flags: Vec<String>,
    pub occupation: Option<f64>,
    pub mean_visits: Option<f64>,
}

/// Row-major scan result (`y` outer, `x` inner).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseScan {
    pub x_param: ScanParam,
    pub y_param: ScanParam,
    pub master_seed: u64,
    pub cells: Vec<PhaseCell>,
}

impl PhaseScan {
    pub const CSV_HEADER: &'static str = "param1,param2,kind,flags,occupation,mean_visits";

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let kind = serde_json::to_value(c.kind).expect("kind serializes");
            let occ = c.occupation.map(|v| v.to_string()).unwrap_or_default();
            let visits = c.mean_visits.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.x,
                c.y,
                kind.as_str().expect("plain string"),
                c.boundary_flags.join(";"),
                occ,
                visits
            ));
        }
        out
    }
}

fn apply_scan_param(
    base: &CbrwParams,
    param: ScanParam,
    value: f64,
) -> Result<CbrwParams, EstimatorError> {
    let build = |mu_c, p_c, mu_0, p_0| {
        CbrwParams::new(mu_c, p_c, mu_0, p_0, base.layout())
            .map_err(EstimatorError::InvalidScanPoint)
    };
    match param {
        ScanParam::Pc => build(base.mu_c().clone(), value, base.mu_0().clone(), base.p_0()),
        ScanParam::P0 => build(base.mu_c().clone(), base.p_c(), base.mu_0().clone(), value),
        ScanParam::Mc => {
            let mu_c = OffspringDistribution::two_point_with_mean(value)
                .map_err(EstimatorError::InvalidScanPoint)?;
            build(mu_c, base.p_c(), base.mu_0().clone(), base.p_0())
        }
        ScanParam::M0 => {
            let mu_0 = OffspringDistribution::two_point_with_mean(value)
                .map_err(EstimatorError::InvalidScanPoint)?;
            build(base.mu_c().clone(), base.p_c(), mu_0, base.p_0())
        }
    }
}

/// Classifies every cell of the grid; when `simulate` is given, attaches the
/// late-window recurrence statistics at that budget. Predictions are a pure
/// function of the cell parameters, independent of budget and seed.
pub fn phase_scan(
    grid: &PhaseGridSpec,
    simulate: Option<SimBudget>,
    master_seed: u64,
) -> Result<PhaseScan, EstimatorError> {
    let mut cells = Vec::with_capacity(grid.x.values.len() * grid.y.values.len());
    for (yi, &y) in grid.y.values.iter().enumerate() {
        for (xi, &x) in grid.x.values.iter().enumerate() {
            let params = apply_scan_param(&grid.base, grid.x.param, x)?;
            let params = apply_scan_param(&params, grid.y.param, y)?;
            let regime = classify_cbrw(&params);
            let (occupation, mean_visits) = match simulate {
                None => (None, None),
                Some(budget) => {
                    // decorrelate cells without coupling them to grid size
                    let cell_index = (yi * grid.x.values.len() + xi) as u64;
                    let cell_seed = master_seed ^ cell_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    let rec =
                        recurrence_statistic(&params, budget.horizon, budget.trials, cell_seed)?;
                    (
                        Some(rec.late_window_occupation),
                        Some(rec.mean_particle_visits),
                    )
                }
            };
            cells.push(PhaseCell {
                x,
                y,
                kind: regime.kind,
                boundary_flags: regime
                    .boundary_flags
                    .iter()
                    .map(|f| f.name.clone())
                    .collect(),
                occupation,
                mean_visits,
            });
        }
    }
    Ok(PhaseScan {
        x_param: grid.x.param,
        y_param: grid.y.param,
        master_seed,
        cells,
    })
}
