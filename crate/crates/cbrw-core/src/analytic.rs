//! Closed-form layer: first-visit generating functions, the first-passage
//! means `phi_r`/`phi_l`, the trichotomy of the plain branching random walk,
//! and the CBRW regime classifier for both cookie layouts.
//!
//! All decisive inequalities are evaluated with exact floating comparisons;
//! a separate [`BoundaryFlag`] channel warns when a decisive quantity sits
//! within [`BOUNDARY_EPS`] of its threshold, since silently nudging a sharp
//! condition would misclassify genuine boundary points.

use crate::model::{CbrwParams, CookieLayout};
use serde::Serialize;
use thiserror::Error;

/// Distance at which a decisive quantity triggers a near-boundary warning.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("the plain branching random walk is not transient at (p_0, m_0) = ({p_0}, {m_0})")]
    NotTransient { p_0: f64, m_0: f64 },
    #[error("the plain branching random walk is not transient to the right at (p_0, m_0) = ({p_0}, {m_0})")]
    NotTransientRight { p_0: f64, m_0: f64 },
}

/// Recurrence/transience class of the branching random walk without cookies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BrwClass {
    TransientRight,
    TransientLeft,
    StronglyRecurrent,
}

/// Regime of the full CBRW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    StronglyRecurrent,
    WeaklyRecurrent,
    TransientRight,
    TransientLeft,
}

/// Named near-boundary warning with the distance to the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryFlag {
    pub name: String,
    pub distance: f64,
}

/// The quantities the classifier actually compared against thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisiveQuantities {
    pub pcmc: f64,
    pub pcmc_phil: Option<f64>,
    pub qcmc: f64,
    pub brw_class: BrwClass,
    pub phi_l: Option<f64>,
    pub phi_r: Option<f64>,
}

/// Classification outcome: the regime, the decisive quantities, and any
/// near-boundary warnings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub decisive_quantities: DecisiveQuantities,
    pub boundary_flags: Vec<BoundaryFlag>,
}

/// Means of the first-passage counts one step right / one step left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiPair {
    pub phi_r: f64,
    pub phi_l: f64,
}

/// Frontier speed bound for a rightward-transient walk: `expected_t1` is the
/// mean time for the comparison walk to conquer one fresh level, and
/// `lambda = 1 / expected_t1` is the nominal speed. The guaranteed bound is
/// strictly below `lambda`; consumers should test against a margin of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierSpeedBound {
    pub lambda: f64,
    pub expected_t1: f64,
}

fn check_walk_domain(p_0: f64) -> Result<(), AnalyticError> {
    if !(p_0 > 0.0 && p_0 < 1.0) {
        return Err(AnalyticError::DomainError(format!(
            "p_0 = {p_0} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Trichotomy of the plain branching random walk with drift `p_0` and
/// offspring mean `m_0 >= 1`: transient right iff `p_0 > 1/2` and
/// `m_0 <= 1/(2 sqrt(p_0 q_0))`, mirrored for transient left, strongly
/// recurrent otherwise. Equality at the bound classifies as transient.
pub fn classify_brw(p_0: f64, m_0: f64) -> Result<BrwClass, AnalyticError> {
    check_walk_domain(p_0)?;
    if m_0 < 1.0 || m_0.is_nan() {
        return Err(AnalyticError::DomainError(format!("m_0 = {m_0} below 1")));
    }
    let q_0 = 1.0 - p_0;
    let bound = 1.0 / (2.0 * (p_0 * q_0).sqrt());
    if p_0 > 0.5 && m_0 <= bound {
        Ok(BrwClass::TransientRight)
    } else if p_0 < 0.5 && m_0 <= bound {
        Ok(BrwClass::TransientLeft)
    } else {
        Ok(BrwClass::StronglyRecurrent)
    }
}

/// First visit generating function of the nearest-neighbour walk with
/// right-step probability `p_0`, evaluated at `z` in the convergence region
/// `(0, 1/(2 sqrt(p_0 q_0))]`.
///
/// `delta = +1` gives `F(0, 1 | z)`; `delta = -n` (for `n >= 1`) gives
/// `F(0, -n | z) = F(0, -1 | z)^n`, the strong-Markov factorization over
/// nearest-neighbour first passages.
pub fn first_visit_gf(p_0: f64, delta: i64, z: f64) -> Result<f64, AnalyticError> {
    check_walk_domain(p_0)?;
    let q_0 = 1.0 - p_0;
    let radius = 1.0 / (2.0 * (p_0 * q_0).sqrt());
    if !(z > 0.0 && z <= radius) {
        return Err(AnalyticError::DomainError(format!(
            "z = {z} outside the convergence region (0, {radius}]"
        )));
    }
    let root = (1.0 - 4.0 * p_0 * q_0 * z * z).sqrt();
    match delta {
        1 => Ok((1.0 - root) / (2.0 * q_0 * z)),
        d if d <= -1 => {
            let one_step = (1.0 - root) / (2.0 * p_0 * z);
            Ok(one_step.powi((-d) as i32))
        }
        d => Err(AnalyticError::DomainError(format!(
            "displacement {d} unsupported (want +1 or -n)"
        ))),
    }
}

/// `(phi_r, phi_l)` for a transient plain BRW: the means of the counts of
/// particles first in their ancestral line to reach +1 / -1. For `m_0 = 1`
/// these reduce to `min(1, p_0/q_0)` and `min(1, q_0/p_0)`.
pub fn phi_pair(p_0: f64, m_0: f64) -> Result<PhiPair, AnalyticError> {
    if classify_brw(p_0, m_0)? == BrwClass::StronglyRecurrent {
        return Err(AnalyticError::NotTransient { p_0, m_0 });
    }
    Ok(PhiPair {
        phi_r: first_visit_gf(p_0, 1, m_0)?,
        phi_l: first_visit_gf(p_0, -1, m_0)?,
    })
}

/// Asserted geometric decay rate of the probability that the rightward
/// transient BRW ever reaches `-n`: returns `phi_l`.
pub fn left_reach_decay_rate(p_0: f64, m_0: f64) -> Result<f64, AnalyticError> {
    if classify_brw(p_0, m_0)? != BrwClass::TransientRight {
        return Err(AnalyticError::NotTransientRight { p_0, m_0 });
    }
    Ok(phi_pair(p_0, m_0)?.phi_l)
}

/// Frontier speed bound for `p_0 > 1/2`: `expected_t1 = 1 + 2/(2 p_0 - 1)`.
pub fn frontier_speed_bound(p_0: f64) -> Result<FrontierSpeedBound, AnalyticError> {
    check_walk_domain(p_0)?;
    if p_0 <= 0.5 {
        return Err(AnalyticError::DomainError(format!(
            "p_0 = {p_0} not above 1/2"
        )));
    }
    let expected_t1 = 1.0 + 2.0 / (2.0 * p_0 - 1.0);
    Ok(FrontierSpeedBound {
        lambda: 1.0 / expected_t1,
        expected_t1,
    })
}

/// Growth ceiling of the leading process: `max(1, p_0 m_0)`.
pub fn lp_growth_rate(params: &CbrwParams) -> f64 {
    (params.p_0() * params.m_0()).max(1.0)
}

fn push_flag(flags: &mut Vec<BoundaryFlag>, name: &str, value: f64, threshold: f64) {
    let distance = (value - threshold).abs();
    if distance < BOUNDARY_EPS {
        flags.push(BoundaryFlag {
            name: name.to_string(),
            distance,
        });
    }
}

/// Classifies a validated CBRW into its recurrence/transience regime.
///
/// Half-line layout: a strongly recurrent plain BRW forces strong
/// recurrence. Over a rightward-transient BRW, a supercritical leading
/// process (`p_c m_c > 1`) gives strong recurrence iff `p_c m_c phi_l >= 1`
/// and transience to the right otherwise; a critical or subcritical leading
/// process is transient to the right. Over a leftward-transient BRW, a
/// supercritical leading process gives weak recurrence, otherwise the CBRW
/// is transient to the left.
///
/// Full-line layout adds the mirrored leading process on the negative side:
/// over a rightward-transient BRW the transient branch above splits on
/// `q_c m_c` (weakly recurrent iff `q_c m_c > 1`), and the leftward case is
/// the exact mirror (`p_c <-> q_c`, `phi_l <-> phi_r`).
pub fn classify_cbrw(params: &CbrwParams) -> Regime {
    let p_0 = params.p_0();
    let q_0 = 1.0 - p_0;
    let m_0 = params.m_0();
    let m_c = params.m_c();
    let p_c = params.p_c();
    let q_c = 1.0 - p_c;
    let pcmc = p_c * m_c;
    let qcmc = q_c * m_c;

    let brw_class = classify_brw(p_0, m_0).expect("validated params are in the classifier domain");
    let phi = phi_pair(p_0, m_0).ok();
    let phi_l = phi.map(|p| p.phi_l);
    let phi_r = phi.map(|p| p.phi_r);
    let pcmc_phil = phi_l.map(|phi_l| pcmc * phi_l);
    let qcmc_phir = phi_r.map(|phi_r| qcmc * phi_r);

    let kind = match (params.layout(), brw_class) {
        (_, BrwClass::StronglyRecurrent) => RegimeKind::StronglyRecurrent,
        (CookieLayout::HalfLine, BrwClass::TransientRight) => {
            let pcmc_phil = pcmc_phil.expect("phi exists in the transient case");
            if pcmc > 1.0 && pcmc_phil >= 1.0 {
                RegimeKind::StronglyRecurrent
            } else {
                RegimeKind::TransientRight
            }
        }
        (CookieLayout::HalfLine, BrwClass::TransientLeft) => {
            if pcmc > 1.0 {
                RegimeKind::WeaklyRecurrent
            } else {
                RegimeKind::TransientLeft
            }
        }
        (CookieLayout::FullLine, BrwClass::TransientRight) => {
            let pcmc_phil = pcmc_phil.expect("phi exists in the transient case");
            if pcmc > 1.0 && pcmc_phil >= 1.0 {
                RegimeKind::StronglyRecurrent
            } else if qcmc > 1.0 {
                RegimeKind::WeaklyRecurrent
            } else {
                RegimeKind::TransientRight
            }
        }
        (CookieLayout::FullLine, BrwClass::TransientLeft) => {
            // mirror of the rightward-transient case
            let qcmc_phir = qcmc_phir.expect("phi exists in the transient case");
            if qcmc > 1.0 && qcmc_phir >= 1.0 {
                RegimeKind::StronglyRecurrent
            } else if pcmc > 1.0 {
                RegimeKind::WeaklyRecurrent
            } else {
                RegimeKind::TransientLeft
            }
        }
    };

    let mut boundary_flags = Vec::new();
    push_flag(&mut boundary_flags, "pcmc", pcmc, 1.0);
    if let Some(v) = pcmc_phil {
        push_flag(&mut boundary_flags, "pcmc_phil", v, 1.0);
    }
    push_flag(&mut boundary_flags, "qcmc", qcmc, 1.0);
    if let Some(v) = qcmc_phir {
        push_flag(&mut boundary_flags, "qcmc_phir", v, 1.0);
    }
    let brw_bound = 1.0 / (2.0 * (p_0 * q_0).sqrt());
    push_flag(&mut boundary_flags, "brw_transience_bound", m_0, brw_bound);

    Regime {
        kind,
        decisive_quantities: DecisiveQuantities {
            pcmc,
            pcmc_phil,
            qcmc,
            brw_class,
            phi_l,
            phi_r,
        },
        boundary_flags,
    }
}
