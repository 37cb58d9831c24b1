//! Shared test support: an exact brute-force enumerator for tiny CBRW
//! configurations (independent of the engine code paths), and a chi-square
//! goodness-of-fit helper.

#![allow(dead_code)]

use cbrw_core::{CbrwParams, CookieLayout};
use std::collections::HashMap;

/// Canonical configuration: sorted `(site, count)` pairs plus the frontier.
pub type Config = (Vec<(i64, u64)>, i64);

/// Movement outcomes of one site: `(right_movers, left_movers, prob)`.
pub type SiteOutcomes = Vec<(u64, u64, f64)>;

fn binomial_coefficient(n: u64, k: u64) -> f64 {
    let k = k.min(n - k.min(n));
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// pmf of the total offspring of `k` independent draws from `law`.
fn offspring_total_pmf(law: &[(u32, f64)], k: u64) -> Vec<f64> {
    let mut pmf = vec![1.0f64];
    for _ in 0..k {
        let max: usize = pmf.len() - 1 + law.last().unwrap().0 as usize;
        let mut next = vec![0.0; max + 1];
        for (t, &pt) in pmf.iter().enumerate() {
            if pt == 0.0 {
                continue;
            }
            for &(j, pj) in law {
                next[t + j as usize] += pt * pj;
            }
        }
        pmf = next;
    }
    pmf
}

/// All `(right_movers, left_movers, prob)` outcomes for one site holding `k`
/// particles branching with `law` and splitting with right-probability `p`.
fn site_outcomes(law: &[(u32, f64)], p: f64, k: u64) -> SiteOutcomes {
    let totals = offspring_total_pmf(law, k);
    let mut outcomes = Vec::new();
    for (total, &pt) in totals.iter().enumerate() {
        if pt == 0.0 {
            continue;
        }
        let total = total as u64;
        for right in 0..=total {
            let pr = binomial_coefficient(total, right)
                * p.powi(right as i32)
                * (1.0 - p).powi((total - right) as i32);
            if pr > 0.0 {
                outcomes.push((right, total - right, pt * pr));
            }
        }
    }
    outcomes
}

/// Exact distribution over configurations after `horizon` steps, computed by
/// full enumeration of every branching/movement outcome. Half-line layout.
pub fn enumerate_cbrw(params: &CbrwParams, horizon: u32) -> HashMap<Config, f64> {
    assert_eq!(params.layout(), CookieLayout::HalfLine);
    let mut dist: HashMap<Config, f64> = HashMap::new();
    dist.insert((vec![(0, 1)], 0), 1.0);

    for _ in 0..horizon {
        let mut next: HashMap<Config, f64> = HashMap::new();
        for ((counts, l_frontier), prob) in dist {
            // per-site outcome lists, then their cartesian product
            let per_site: Vec<(i64, SiteOutcomes)> = counts
                .iter()
                .map(|&(site, k)| {
                    let on_cookie = site >= l_frontier;
                    let (law, p) = if on_cookie {
                        (params.mu_c().support(), params.p_c())
                    } else {
                        (params.mu_0().support(), params.p_0())
                    };
                    (site, site_outcomes(law, p, k))
                })
                .collect();
            let branched_cookie = counts.iter().any(|&(site, k)| site >= l_frontier && k > 0);
            let new_l = l_frontier + i64::from(branched_cookie);

            let mut stack: Vec<(usize, HashMap<i64, u64>, f64)> = vec![(0, HashMap::new(), prob)];
            while let Some((idx, acc, p_acc)) = stack.pop() {
                if idx == per_site.len() {
                    let mut cfg: Vec<(i64, u64)> = acc
                        .iter()
                        .filter(|&(_, &c)| c > 0)
                        .map(|(&s, &c)| (s, c))
                        .collect();
                    cfg.sort_unstable();
                    *next.entry((cfg, new_l)).or_insert(0.0) += p_acc;
                    continue;
                }
                let (site, outcomes) = &per_site[idx];
                for &(right, left, p_out) in outcomes {
                    let mut acc2 = acc.clone();
                    if right > 0 {
                        *acc2.entry(site + 1).or_insert(0) += right;
                    }
                    if left > 0 {
                        *acc2.entry(site - 1).or_insert(0) += left;
                    }
                    stack.push((idx + 1, acc2, p_acc * p_out));
                }
            }
        }
        dist = next;
    }
    dist
}

/// Natural log of the gamma function (Lanczos).
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_7e-2,
        -0.539_523_938_495_3e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000_000_000_190_015;
    for c in COEFFS {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Regularized lower incomplete gamma P(a, x) by series expansion.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-14 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma Q(a, x) by continued fraction.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-14 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_p_value(statistic: f64, dof: f64) -> f64 {
    let a = dof / 2.0;
    let x = statistic / 2.0;
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Chi-square goodness of fit of observed category counts against exact
/// probabilities. Categories with expected count below 5 are pooled.
/// Returns `(statistic, dof, p_value)`.
pub fn chi_square_test<K: std::hash::Hash + Eq + Clone>(
    observed: &HashMap<K, u64>,
    expected_probs: &HashMap<K, f64>,
    trials: u64,
) -> (f64, f64, f64) {
    for key in observed.keys() {
        assert!(
            expected_probs.contains_key(key),
            "observed an outcome with zero enumerated probability"
        );
    }
    let mut kept: Vec<(f64, u64)> = Vec::new();
    let mut pooled_exp = 0.0;
    let mut pooled_obs = 0u64;
    for (key, &p) in expected_probs {
        let exp = p * trials as f64;
        let obs = observed.get(key).copied().unwrap_or(0);
        if exp >= 5.0 {
            kept.push((exp, obs));
        } else {
            pooled_exp += exp;
            pooled_obs += obs;
        }
    }
    if pooled_exp > 0.0 {
        kept.push((pooled_exp, pooled_obs));
    }
    assert!(kept.len() >= 2, "need at least two categories");
    let statistic: f64 = kept
        .iter()
        .map(|&(exp, obs)| (obs as f64 - exp).powi(2) / exp)
        .sum();
    let dof = (kept.len() - 1) as f64;
    (statistic, dof, chi_square_p_value(statistic, dof))
}

/// Sample mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod sanity {
    use super::*;

    #[test]
    fn chi_square_p_value_known_points() {
        // P(chi2_1 > 3.841) ~ 0.05, P(chi2_5 > 11.07) ~ 0.05
        assert!((chi_square_p_value(3.841, 1.0) - 0.05).abs() < 1e-3);
        assert!((chi_square_p_value(11.07, 5.0) - 0.05).abs() < 1e-3);
        assert!((chi_square_p_value(0.0, 3.0) - 1.0).abs() < 1e-12);
    }
}
