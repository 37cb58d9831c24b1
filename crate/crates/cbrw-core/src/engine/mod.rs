//! Exact stochastic evolution of the CBRW population.
//!
//! The production engine is count-based: particles at the same site are
//! exchangeable under the branching/movement rules, so per-site counts are a
//! sufficient statistic, and populations that grow like `m^n` stay cheap to
//! evolve. A genealogy-tracking engine ([`run_genealogy`]) exists as a
//! correctness oracle for small horizons, and band-limited first-passage
//! kernels ([`run_brw_absorbed`]) realize the absorbed-line semantics of the
//! first-passage counts.

mod brw;
mod count;
mod genealogy;
mod sampling;
mod seed;
mod walk;

pub use brw::{run_brw_absorbed, run_brw_min_reach, FirstPassageCounts};
pub use count::{BigCount, Count};
pub use genealogy::{run_genealogy, GenealogyNode, GenealogyRun};
pub use sampling::{sample_binomial, sample_offspring_total, EXACT_SAMPLING_THRESHOLD};
pub use seed::StreamSeed;
pub use walk::run_comparison_walk;

use crate::model::{CbrwParams, CookieLayout};
use num_bigint::BigUint;
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("particle count overflowed the fixed-width backend")]
    CountOverflow,
    #[error("expected population {expected:.3e} exceeds the genealogy guard of {guard:.1e}")]
    PopulationGuardExceeded { expected: f64, guard: f64 },
}

/// Per-site particle counts plus the cookie frontier(s) and the time index.
///
/// `l_frontier` is the leftmost remaining cookie on the nonnegative side;
/// `r_frontier` (full-line layout only) the rightmost remaining cookie on
/// the nonpositive side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationState<C: Count> {
    counts: BTreeMap<i64, C>,
    l_frontier: i64,
    r_frontier: Option<i64>,
    time: u64,
}

impl<C: Count> PopulationState<C> {
    /// One particle at the origin, all cookies intact, time zero.
    pub fn initial(layout: CookieLayout) -> Self {
        let mut counts = BTreeMap::new();
        counts.insert(0, C::from_u64(1));
        Self {
            counts,
            l_frontier: 0,
            r_frontier: match layout {
                CookieLayout::HalfLine => None,
                CookieLayout::FullLine => Some(0),
            },
            time: 0,
        }
    }

    /// Arbitrary starting configuration. Used by test doubles, e.g. a
    /// cookies-exhausted population (`l_frontier` beyond any reachable site).
    pub fn with_frontier(
        counts: BTreeMap<i64, C>,
        l_frontier: i64,
        r_frontier: Option<i64>,
        time: u64,
    ) -> Self {
        Self {
            counts,
            l_frontier,
            r_frontier,
            time,
        }
    }

    pub fn counts(&self) -> &BTreeMap<i64, C> {
        &self.counts
    }

    pub fn count_at(&self, site: i64) -> C {
        self.counts.get(&site).cloned().unwrap_or_else(C::zero)
    }

    pub fn l_frontier(&self) -> i64 {
        self.l_frontier
    }

    pub fn r_frontier(&self) -> Option<i64> {
        self.r_frontier
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Size of the leading process: the count at the leftmost cookie.
    pub fn lp_size(&self) -> C {
        self.count_at(self.l_frontier)
    }

    pub fn total(&self) -> Result<C, EngineError> {
        let mut acc = C::zero();
        for c in self.counts.values() {
            acc = acc.checked_add(c)?;
        }
        Ok(acc)
    }

    fn has_cookie(&self, site: i64) -> bool {
        site >= self.l_frontier || self.r_frontier.is_some_and(|r| site <= r)
    }
}

/// Advances the population by one step: every particle branches with the law
/// of its site (cookie or no-cookie), the children move, and each cookie at
/// a site that branched is removed. Returns the new state and whether any
/// sampling used the Gaussian approximation.
pub fn step<C: Count, R: Rng + ?Sized>(
    state: &PopulationState<C>,
    params: &CbrwParams,
    rng: &mut R,
) -> Result<(PopulationState<C>, bool), EngineError> {
    let mut next: BTreeMap<i64, C> = BTreeMap::new();
    let mut approx = false;
    let mut right_cookie_branched = false;
    let mut left_cookie_branched = false;

    for (&site, count) in &state.counts {
        if count.is_zero() {
            continue;
        }
        debug_assert_eq!(
            (site - state.time as i64).rem_euclid(2),
            0,
            "occupied site parity must match time"
        );
        let on_cookie = state.has_cookie(site);
        let (law, p_right) = if on_cookie {
            (params.mu_c(), params.p_c())
        } else {
            (params.mu_0(), params.p_0())
        };
        let (total, a0) = sample_offspring_total(count, law, rng)?;
        let (right, a1) = sample_binomial(&total, p_right, rng);
        let left = total.saturating_sub(&right);
        approx |= a0 | a1;

        if !right.is_zero() {
            let cell = next.entry(site + 1).or_insert_with(C::zero);
            *cell = cell.checked_add(&right)?;
        }
        if !left.is_zero() {
            let cell = next.entry(site - 1).or_insert_with(C::zero);
            *cell = cell.checked_add(&left)?;
        }
        if on_cookie {
            if site >= state.l_frontier {
                right_cookie_branched = true;
                debug_assert_eq!(
                    site, state.l_frontier,
                    "only the frontier cookie is reachable"
                );
            }
            if state.r_frontier.is_some_and(|r| site <= r) {
                left_cookie_branched = true;
            }
        }
    }

    Ok((
        PopulationState {
            counts: next,
            l_frontier: state.l_frontier + i64::from(right_cookie_branched),
            r_frontier: state
                .r_frontier
                .map(|r| r - i64::from(left_cookie_branched)),
            time: state.time + 1,
        },
        approx,
    ))
}

/// One per-step record of everything the harness observes.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub l_frontier: i64,
    pub r_frontier: Option<i64>,
    /// Count at the origin.
    pub z0: BigUint,
    /// Count at the leftmost cookie (the leading process size).
    pub lp_size: BigUint,
    pub total: BigUint,
    pub min_site: i64,
    pub max_site: i64,
    /// True once any sampling step used the Gaussian approximation.
    pub approx: bool,
}

/// A full simulation trace: `horizon + 1` records, deterministic given
/// `(params, horizon, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: StreamSeed,
    pub backend: &'static str,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub const CSV_HEADER: &'static str = "t,l,r,z0,lp_size,total,min_site,max_site,approx_flag";

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let rf = r.r_frontier.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.t,
                r.l_frontier,
                rf,
                r.z0,
                r.lp_size,
                r.total,
                r.min_site,
                r.max_site,
                u8::from(r.approx)
            ));
        }
        out
    }
}

fn record<C: Count>(state: &PopulationState<C>, approx: bool) -> Result<TraceRecord, EngineError> {
    let (min_site, max_site) = match (state.counts.keys().next(), state.counts.keys().next_back()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0, 0),
    };
    Ok(TraceRecord {
        t: state.time,
        l_frontier: state.l_frontier,
        r_frontier: state.r_frontier,
        z0: state.count_at(0).to_biguint(),
        lp_size: state.lp_size().to_biguint(),
        total: state.total()?.to_biguint(),
        min_site,
        max_site,
        approx,
    })
}

/// Runs a full CBRW trial from the standard initial condition, recording one
/// [`TraceRecord`] per time step (including time 0).
pub fn run<C: Count>(
    params: &CbrwParams,
    horizon: u64,
    seed: StreamSeed,
) -> Result<Trace, EngineError> {
    let mut rng = seed.rng();
    let mut state = PopulationState::<C>::initial(params.layout());
    let mut approx_seen = false;
    let mut records = Vec::with_capacity(horizon as usize + 1);
    records.push(record(&state, approx_seen)?);
    for _ in 0..horizon {
        let (next, approx) = step(&state, params, &mut rng)?;
        approx_seen |= approx;
        state = next;
        records.push(record(&state, approx_seen)?);
    }
    Ok(Trace {
        seed,
        backend: C::BACKEND,
        records,
    })
}
