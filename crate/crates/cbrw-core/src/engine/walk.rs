//! The auxiliary comparison walk used to lower-bound the frontier speed.
//!
//! The walk moves left with probability 1 every time it stands on a fresh
//! running maximum, and otherwise steps right/left with `(p_0, q_0)`. The
//! times between conquering consecutive fresh levels are i.i.d. with mean
//! `1 + 2/(2 p_0 - 1)`.

use super::seed::StreamSeed;
use rand::Rng;

/// First-hitting times `T_1, ..., T_n` of levels `1..=n_levels`.
///
/// Requires `p_0 > 1/2`; the walk would otherwise not conquer new levels at
/// a linear rate and the run could take unbounded time.
pub fn run_comparison_walk(p_0: f64, n_levels: u32, seed: StreamSeed) -> Vec<u64> {
    assert!(
        p_0 > 0.5 && p_0 < 1.0,
        "comparison walk needs p_0 in (1/2, 1)"
    );
    let mut rng = seed.rng();
    let mut position: i64 = 0;
    let mut max_visited: i64 = i64::MIN;
    let mut t: u64 = 0;
    let mut hits = Vec::with_capacity(n_levels as usize);

    loop {
        let fresh_max = position > max_visited;
        if fresh_max {
            max_visited = position;
            if position >= 1 {
                hits.push(t);
                if hits.len() == n_levels as usize {
                    return hits;
                }
            }
        }
        let go_right = !fresh_max && rng.random::<f64>() < p_0;
        position += if go_right { 1 } else { -1 };
        t += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn increments(times: &[u64]) -> Vec<f64> {
        let mut incs = Vec::with_capacity(times.len());
        let mut prev = 0u64;
        for &t in times {
            incs.push((t - prev) as f64);
            prev = t;
        }
        incs
    }

    #[test]
    fn mean_increment_matches_formula() {
        for (p_0, expect, seed) in [(0.75, 5.0, 11u64), (0.9, 3.5, 12u64)] {
            let times = run_comparison_walk(p_0, 100_000, StreamSeed::new(seed));
            let incs = increments(&times);
            let n = incs.len() as f64;
            let mean: f64 = incs.iter().sum::<f64>() / n;
            let var: f64 = incs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!(
                (mean - expect).abs() < 3.0 * se,
                "p_0={p_0}: mean {mean}, se {se}"
            );
        }
    }

    #[test]
    fn increments_are_uncorrelated() {
        let times = run_comparison_walk(0.75, 100_000, StreamSeed::new(13));
        let incs = increments(&times);
        let n = incs.len();
        let mean: f64 = incs.iter().sum::<f64>() / n as f64;
        let var: f64 = incs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let mut cov = 0.0;
        for w in incs.windows(2) {
            cov += (w[0] - mean) * (w[1] - mean);
        }
        cov /= (n - 1) as f64;
        let rho = cov / var;
        // se of the lag-1 autocorrelation of an iid sequence is ~ 1/sqrt(n)
        assert!(
            rho.abs() < 3.0 / (n as f64).sqrt(),
            "lag-1 autocorrelation {rho}"
        );
    }

    #[test]
    fn first_hit_is_after_the_forced_left_start() {
        // the walk starts on a fresh maximum at 0, so T_1 >= 3
        let times = run_comparison_walk(0.75, 5, StreamSeed::new(14));
        assert!(times[0] >= 3);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }
}
