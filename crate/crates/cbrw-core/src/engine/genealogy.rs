//! Agent-level reference engine with full genealogy.
//!
//! Tracks every particle individually with parent links, so per-site counts
//! derived from it are distributionally identical to the count engine. Only
//! feasible for tiny horizons; guarded against population blowup.

use super::seed::StreamSeed;
use super::EngineError;
use crate::model::{CbrwParams, CookieLayout, OffspringDistribution};
use rand::Rng;
use std::collections::BTreeMap;

/// Hard cap on the expected (and actual) population.
pub const POPULATION_GUARD: f64 = 1e6;

/// One particle: parent index in the previous generation, its index among
/// that parent's children (1-based, so a path of these is the Ulam-Harris
/// label), and its position after moving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenealogyNode {
    pub parent: Option<usize>,
    pub child_index: u32,
    pub position: i64,
}

/// Full particle tree, one `Vec` of nodes per generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenealogyRun {
    pub generations: Vec<Vec<GenealogyNode>>,
    pub l_frontiers: Vec<i64>,
    pub r_frontiers: Vec<Option<i64>>,
}

impl GenealogyRun {
    /// Per-site counts at time `t`.
    pub fn site_counts(&self, t: usize) -> BTreeMap<i64, u64> {
        let mut counts = BTreeMap::new();
        for node in &self.generations[t] {
            *counts.entry(node.position).or_insert(0) += 1;
        }
        counts
    }

    /// Ulam-Harris label of generation-`t` node `index`: the child indices
    /// along the ancestral line from the root.
    pub fn label(&self, t: usize, index: usize) -> Vec<u32> {
        let mut label = Vec::with_capacity(t);
        let mut gen = t;
        let mut idx = index;
        while gen > 0 {
            let node = &self.generations[gen][idx];
            label.push(node.child_index);
            idx = node.parent.expect("non-root node has a parent");
            gen -= 1;
        }
        label.reverse();
        label
    }
}

fn draw_offspring<R: Rng + ?Sized>(dist: &OffspringDistribution, rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(k, p) in dist.support() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    dist.max_k()
}

/// Simulates the CBRW particle by particle for `horizon` steps.
///
/// Errors with [`EngineError::PopulationGuardExceeded`] if the worst-case
/// expected population `max(m_c, m_0)^horizon` (or the actual population)
/// exceeds [`POPULATION_GUARD`].
pub fn run_genealogy(
    params: &CbrwParams,
    horizon: u64,
    seed: StreamSeed,
) -> Result<GenealogyRun, EngineError> {
    let growth = params.m_c().max(params.m_0());
    let expected = growth.powf(horizon as f64);
    if expected > POPULATION_GUARD {
        return Err(EngineError::PopulationGuardExceeded {
            expected,
            guard: POPULATION_GUARD,
        });
    }

    let mut rng = seed.rng();
    let root = GenealogyNode {
        parent: None,
        child_index: 0,
        position: 0,
    };
    let mut generations = vec![vec![root]];
    let mut l_frontier = 0i64;
    let mut r_frontier = match params.layout() {
        CookieLayout::HalfLine => None,
        CookieLayout::FullLine => Some(0),
    };
    let mut l_frontiers = vec![l_frontier];
    let mut r_frontiers = vec![r_frontier];

    for _ in 0..horizon {
        let current = generations.last().expect("at least the root generation");
        let mut next = Vec::with_capacity(current.len() * 2);
        let mut right_cookie_branched = false;
        let mut left_cookie_branched = false;
        for (parent_idx, node) in current.iter().enumerate() {
            let on_cookie =
                node.position >= l_frontier || r_frontier.is_some_and(|r| node.position <= r);
            let (law, p_right) = if on_cookie {
                (params.mu_c(), params.p_c())
            } else {
                (params.mu_0(), params.p_0())
            };
            if on_cookie {
                if node.position >= l_frontier {
                    right_cookie_branched = true;
                }
                if r_frontier.is_some_and(|r| node.position <= r) {
                    left_cookie_branched = true;
                }
            }
            let kids = draw_offspring(law, &mut rng);
            for c in 1..=kids {
                let go_right = rng.random::<f64>() < p_right;
                next.push(GenealogyNode {
                    parent: Some(parent_idx),
                    child_index: c,
                    position: node.position + if go_right { 1 } else { -1 },
                });
            }
        }
        if next.len() as f64 > POPULATION_GUARD {
            return Err(EngineError::PopulationGuardExceeded {
                expected: next.len() as f64,
                guard: POPULATION_GUARD,
            });
        }
        l_frontier += i64::from(right_cookie_branched);
        if left_cookie_branched {
            r_frontier = r_frontier.map(|r| r - 1);
        }
        generations.push(next);
        l_frontiers.push(l_frontier);
        r_frontiers.push(r_frontier);
    }

    Ok(GenealogyRun {
        generations,
        l_frontiers,
        r_frontiers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OffspringDistribution;

    #[test]
    fn horizon_zero_is_just_the_root() {
        let params = CbrwParams::new(
            OffspringDistribution::point(2),
            0.5,
            OffspringDistribution::point(1),
            0.5,
            CookieLayout::HalfLine,
        )
        .unwrap();
        let run = run_genealogy(&params, 0, StreamSeed::new(0)).unwrap();
        assert_eq!(run.generations.len(), 1);
        assert_eq!(run.generations[0][0].position, 0);
        assert_eq!(run.label(0, 0), Vec::<u32>::new());
    }

    #[test]
    fn deterministic_march_path() {
        let params = CbrwParams::new_unchecked(
            OffspringDistribution::point(1),
            1.0,
            OffspringDistribution::point(1),
            1.0,
            CookieLayout::HalfLine,
        );
        let run = run_genealogy(&params, 5, StreamSeed::new(0)).unwrap();
        let path: Vec<i64> = (0..=5).map(|t| run.generations[t][0].position).collect();
        assert_eq!(path, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(run.l_frontiers, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(run.label(5, 0), vec![1, 1, 1, 1, 1]);
    }

    #[test]
    fn guard_rejects_infeasible_horizons() {
        let params = CbrwParams::new(
            OffspringDistribution::point(4),
            0.5,
            OffspringDistribution::point(4),
            0.5,
            CookieLayout::HalfLine,
        )
        .unwrap();
        assert!(matches!(
            run_genealogy(&params, 64, StreamSeed::new(0)),
            Err(EngineError::PopulationGuardExceeded { .. })
        ));
    }

    #[test]
    fn one_step_site_counts_match_enumeration() {
        // same pmf as the count-engine test: (2,0)/(1,1)/(0,2) w.p. 1/4,1/2,1/4
        let params = CbrwParams::new(
            OffspringDistribution::point(2),
            0.5,
            OffspringDistribution::point(1),
            0.5,
            CookieLayout::HalfLine,
        )
        .unwrap();
        let trials = 100_000;
        let mut hist = [0u32; 3];
        for i in 0..trials {
            let run = run_genealogy(&params, 1, StreamSeed::new(31).stream(i)).unwrap();
            let counts = run.site_counts(1);
            hist[counts.get(&1).copied().unwrap_or(0) as usize] += 1;
        }
        let p = hist.map(|h| h as f64 / trials as f64);
        assert!((p[0] - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / trials as f64).sqrt());
        assert!((p[1] - 0.5).abs() < 3.0 * (0.25f64 / trials as f64).sqrt());
        assert!((p[2] - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / trials as f64).sqrt());
    }
}
