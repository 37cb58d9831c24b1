//! Parameter and distribution domain model.
//!
//! Everything here is immutable after construction and safe to share across
//! concurrent trials. Probabilities are stored as `f64` and are never
//! auto-renormalized: a pmf that does not sum to 1 within [`PMF_TOLERANCE`]
//! is rejected so user error is not masked.

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Absolute tolerance for pmf normalization checks.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Default cap on the largest offspring count `M`. The model only requires
/// `M < infinity`; the cap exists to catch typos in configs and can be
/// lifted with [`OffspringDistribution::new_uncapped`].
pub const DEFAULT_SUPPORT_CAP: u32 = 64;

/// A single invariant violation. `validate` collects all of them instead of
/// stopping at the first.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationError {
    #[error("{law}: empty support")]
    EmptySupport { law: String },
    #[error("{law}: pmf sums to {sum}, not 1 (tolerance {PMF_TOLERANCE})")]
    UnnormalizedPmf { law: String, sum: f64 },
    #[error("{what} = {value} is outside its valid range")]
    ProbabilityOutOfRange { what: String, value: f64 },
    #[error("{law}: offspring law puts mass {mass} at zero children")]
    ZeroOffspringMass { law: String, mass: f64 },
    #[error("{law}: duplicate support point k = {k}")]
    DuplicateSupport { law: String, k: u32 },
    #[error("{law}: max offspring {max_k} exceeds the support cap {cap} (use the uncapped constructor / --allow-large-support to override)")]
    SupportCapExceeded { law: String, max_k: u32, cap: u32 },
}

/// Domain errors for pure evaluations (as opposed to construction-time
/// validation).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    DomainError(String),
}

/// Finite-support offspring probability mass function.
///
/// The support is kept sorted by `k` with strictly positive probabilities.
/// Mass at zero is allowed here (plain Galton-Watson specs need it); the
/// CBRW-level constraint `mu(0) = 0` is enforced by [`CbrwParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    support: Vec<(u32, f64)>,
}

impl OffspringDistribution {
    /// Builds a distribution, enforcing the default support cap.
    pub fn new(
        entries: impl IntoIterator<Item = (u32, f64)>,
    ) -> Result<Self, Vec<ValidationError>> {
        Self::build(entries, Some(DEFAULT_SUPPORT_CAP), "pmf")
    }

    /// Builds a distribution without the support cap.
    pub fn new_uncapped(
        entries: impl IntoIterator<Item = (u32, f64)>,
    ) -> Result<Self, Vec<ValidationError>> {
        Self::build(entries, None, "pmf")
    }

    pub(crate) fn build(
        entries: impl IntoIterator<Item = (u32, f64)>,
        cap: Option<u32>,
        law: &str,
    ) -> Result<Self, Vec<ValidationError>> {
        let mut support: Vec<(u32, f64)> = entries.into_iter().collect();
        support.sort_by_key(|&(k, _)| k);
        let mut errors = Vec::new();
        if support.is_empty() {
            errors.push(ValidationError::EmptySupport {
                law: law.to_string(),
            });
        }
        for w in support.windows(2) {
            if w[0].0 == w[1].0 {
                errors.push(ValidationError::DuplicateSupport {
                    law: law.to_string(),
                    k: w[0].0,
                });
            }
        }
        for &(k, p) in &support {
            if !(p > 0.0 && p <= 1.0) {
                errors.push(ValidationError::ProbabilityOutOfRange {
                    what: format!("{law}({k})"),
                    value: p,
                });
            }
        }
        let sum: f64 = support.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            errors.push(ValidationError::UnnormalizedPmf {
                law: law.to_string(),
                sum,
            });
        }
        if let (Some(cap), Some(&(max_k, _))) = (cap, support.last()) {
            if max_k > cap {
                errors.push(ValidationError::SupportCapExceeded {
                    law: law.to_string(),
                    max_k,
                    cap,
                });
            }
        }
        if errors.is_empty() {
            Ok(Self { support })
        } else {
            Err(errors)
        }
    }

    /// Degenerate law putting all mass on `k`.
    pub fn point(k: u32) -> Self {
        Self {
            support: vec![(k, 1.0)],
        }
    }

    /// Two-point law on `{floor(m), floor(m)+1}` with mean exactly `m`.
    /// Used by parameter scans that sweep a mean rather than a full pmf.
    pub fn two_point_with_mean(m: f64) -> Result<Self, Vec<ValidationError>> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(vec![ValidationError::ProbabilityOutOfRange {
                what: "mean".to_string(),
                value: m,
            }]);
        }
        let a = m.floor();
        let f = m - a;
        if f <= PMF_TOLERANCE {
            return Ok(Self::point(a as u32));
        }
        Self::new(vec![(a as u32, 1.0 - f), (a as u32 + 1, f)])
    }

    /// Support points `(k, prob)` sorted by `k`.
    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    /// Largest offspring count with positive mass (the `M` of the model).
    pub fn max_k(&self) -> u32 {
        self.support.last().map(|&(k, _)| k).unwrap_or(0)
    }

    /// Smallest offspring count with positive mass.
    pub fn min_k(&self) -> u32 {
        self.support.first().map(|&(k, _)| k).unwrap_or(0)
    }

    /// Probability mass at `k`.
    pub fn mass_at(&self, k: u32) -> f64 {
        self.support
            .binary_search_by_key(&k, |&(j, _)| j)
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    /// Mean number of offspring.
    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(k, p)| k as f64 * p).sum()
    }

    /// Offspring variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support
            .iter()
            .map(|&(k, p)| {
                let d = k as f64 - m;
                d * d * p
            })
            .sum()
    }

    /// Probability generating function `sum_k mu(k) s^k` for `s in [0, 1]`.
    pub fn pgf(&self, s: f64) -> Result<f64, ModelError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(ModelError::DomainError(format!(
                "pgf argument s = {s} outside [0, 1]"
            )));
        }
        Ok(self
            .support
            .iter()
            .map(|&(k, p)| p * s.powi(k as i32))
            .sum())
    }

    /// Law of the number of children that move in a fixed direction: each of
    /// `N ~ self` children independently goes that way with probability `p`.
    /// Computed exactly as a mixture of binomial rows, each row built by
    /// finite convolution with `[1-p, p]`.
    pub fn directional_thinning(&self, p: f64) -> OffspringDistribution {
        assert!(
            (0.0..=1.0).contains(&p),
            "thinning probability {p} outside [0, 1]"
        );
        let max_k = self.max_k() as usize;
        let mut mixture = vec![0.0; max_k + 1];
        // row = pmf of Binomial(n, p), extended one convolution at a time
        let mut row = vec![1.0f64];
        let mut row_n = 0u32;
        for &(k, mass) in &self.support {
            while row_n < k {
                let mut next = vec![0.0; row.len() + 1];
                for (j, &b) in row.iter().enumerate() {
                    next[j] += b * (1.0 - p);
                    next[j + 1] += b * p;
                }
                row = next;
                row_n += 1;
            }
            for (j, &b) in row.iter().enumerate() {
                mixture[j] += mass * b;
            }
        }
        let support: Vec<(u32, f64)> = mixture
            .into_iter()
            .enumerate()
            .filter(|&(_, q)| q > 0.0)
            .map(|(j, q)| (j as u32, q))
            .collect();
        OffspringDistribution { support }
    }
}

impl Serialize for OffspringDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.support.len()))?;
        for &(k, p) in &self.support {
            seq.serialize_element(&PmfEntryEcho { k, p })?;
        }
        seq.end()
    }
}

#[derive(Serialize)]
struct PmfEntryEcho {
    k: u32,
    p: f64,
}

/// Initial cookie configuration: one cookie per site on the nonnegative
/// half-line, or on every integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CookieLayout {
    HalfLine,
    FullLine,
}

/// Full CBRW model: cookie law `(mu_c, p_c)`, no-cookie law `(mu_0, p_0)`,
/// and the cookie layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CbrwParams {
    mu_c: OffspringDistribution,
    p_c: f64,
    mu_0: OffspringDistribution,
    p_0: f64,
    layout: CookieLayout,
}

impl CbrwParams {
    pub fn new(
        mu_c: OffspringDistribution,
        p_c: f64,
        mu_0: OffspringDistribution,
        p_0: f64,
        layout: CookieLayout,
    ) -> Result<Self, Vec<ValidationError>> {
        let params = Self::new_unchecked(mu_c, p_c, mu_0, p_0, layout);
        validate(params)
    }

    /// Skips validation. Intended for test doubles (e.g. a deterministic
    /// march with `p_c = 1`) and internal parameter sweeps.
    pub fn new_unchecked(
        mu_c: OffspringDistribution,
        p_c: f64,
        mu_0: OffspringDistribution,
        p_0: f64,
        layout: CookieLayout,
    ) -> Self {
        Self {
            mu_c,
            p_c,
            mu_0,
            p_0,
            layout,
        }
    }

    pub fn mu_c(&self) -> &OffspringDistribution {
        &self.mu_c
    }

    pub fn p_c(&self) -> f64 {
        self.p_c
    }

    pub fn mu_0(&self) -> &OffspringDistribution {
        &self.mu_0
    }

    pub fn p_0(&self) -> f64 {
        self.p_0
    }

    pub fn layout(&self) -> CookieLayout {
        self.layout
    }

    /// Mean of the cookie offspring law.
    pub fn m_c(&self) -> f64 {
        self.mu_c.mean()
    }

    /// Mean of the no-cookie offspring law.
    pub fn m_0(&self) -> f64 {
        self.mu_0.mean()
    }

    pub fn validate(&self) -> Result<&Self, Vec<ValidationError>> {
        collect_violations(self).map(|_| self)
    }
}

/// Returns `params` unchanged iff every model invariant holds; otherwise the
/// complete list of violations.
pub fn validate(params: CbrwParams) -> Result<CbrwParams, Vec<ValidationError>> {
    collect_violations(&params).map(|_| params)
}

fn collect_violations(params: &CbrwParams) -> Result<(), Vec<ValidationError>> {
    let mut errors = Vec::new();
    for (law, dist) in [("mu_c", &params.mu_c), ("mu_0", &params.mu_0)] {
        // re-run the pmf-level checks so a hand-built value cannot sneak past
        if let Err(mut errs) = OffspringDistribution::build(dist.support.iter().copied(), None, law)
        {
            errors.append(&mut errs);
        }
        let mass0 = dist.mass_at(0);
        if mass0 > 0.0 {
            errors.push(ValidationError::ZeroOffspringMass {
                law: law.to_string(),
                mass: mass0,
            });
        }
    }
    for (what, p) in [("p_c", params.p_c), ("p_0", params.p_0)] {
        if !(p > 0.0 && p < 1.0) {
            errors.push(ValidationError::ProbabilityOutOfRange {
                what: what.to_string(),
                value: p,
            });
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Plain Galton-Watson specification: an offspring law (mass at zero is
/// allowed here, unlike in a CBRW) and the number of initial particles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwSpec {
    offspring: OffspringDistribution,
    initial: u64,
}

impl GwSpec {
    pub fn new(
        offspring: OffspringDistribution,
        initial: u64,
    ) -> Result<Self, Vec<ValidationError>> {
        if initial == 0 {
            return Err(vec![ValidationError::ProbabilityOutOfRange {
                what: "initial population".to_string(),
                value: 0.0,
            }]);
        }
        Ok(Self { offspring, initial })
    }

    pub fn offspring(&self) -> &OffspringDistribution {
        &self.offspring
    }

    pub fn initial(&self) -> u64 {
        self.initial
    }

    /// The same offspring law with a different starting population.
    pub fn with_initial(&self, initial: u64) -> Result<Self, Vec<ValidationError>> {
        Self::new(self.offspring.clone(), initial)
    }
}

/// JSON config document for [`CbrwParams`], with pmf probabilities given as
/// numbers or fraction strings (`"3/4"`). Fractions are parsed exactly and
/// converted to floats once, so phase-boundary studies get bit-stable entry.
#[derive(Debug, Clone, Deserialize)]
pub struct ParamsDoc {
    pub mu_c: Vec<PmfEntry>,
    pub p_c: PValue,
    pub mu_0: Vec<PmfEntry>,
    pub p_0: PValue,
    pub layout: CookieLayout,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PmfEntry {
    pub k: u32,
    pub p: PValue,
}

/// A probability entered either as a JSON number or as a fraction string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PValue {
    Number(f64),
    Fraction(String),
}

impl PValue {
    pub fn to_f64(&self) -> Result<f64, ModelError> {
        match self {
            PValue::Number(x) => Ok(*x),
            PValue::Fraction(s) => {
                let (num, den) = s
                    .split_once('/')
                    .ok_or_else(|| ModelError::DomainError(format!("not a fraction: {s:?}")))?;
                let num: i64 = num
                    .trim()
                    .parse()
                    .map_err(|_| ModelError::DomainError(format!("bad numerator in {s:?}")))?;
                let den: i64 = den
                    .trim()
                    .parse()
                    .map_err(|_| ModelError::DomainError(format!("bad denominator in {s:?}")))?;
                if den == 0 {
                    return Err(ModelError::DomainError(format!(
                        "zero denominator in {s:?}"
                    )));
                }
                Ok(num as f64 / den as f64)
            }
        }
    }
}

impl ParamsDoc {
    /// Builds validated parameters, collecting every violation.
    pub fn build(&self) -> Result<CbrwParams, Vec<ValidationError>> {
        self.build_with_cap(Some(DEFAULT_SUPPORT_CAP))
    }

    pub fn build_with_cap(&self, cap: Option<u32>) -> Result<CbrwParams, Vec<ValidationError>> {
        let mut errors = Vec::new();
        let mut resolve = |entries: &[PmfEntry], law: &str| -> Option<OffspringDistribution> {
            let mut pairs = Vec::with_capacity(entries.len());
            for e in entries {
                match e.p.to_f64() {
                    Ok(p) => pairs.push((e.k, p)),
                    Err(err) => errors.push(ValidationError::ProbabilityOutOfRange {
                        what: format!("{law}({}): {err}", e.k),
                        value: f64::NAN,
                    }),
                }
            }
            match OffspringDistribution::build(pairs, cap, law) {
                Ok(d) => Some(d),
                Err(mut errs) => {
                    errors.append(&mut errs);
                    None
                }
            }
        };
        let mu_c = resolve(&self.mu_c, "mu_c");
        let mu_0 = resolve(&self.mu_0, "mu_0");

        // CBRW-level checks run regardless of pmf-level failures so callers
        // always see the complete violation list
        for (law, dist) in [("mu_c", &mu_c), ("mu_0", &mu_0)] {
            if let Some(dist) = dist {
                let mass0 = dist.mass_at(0);
                if mass0 > 0.0 {
                    errors.push(ValidationError::ZeroOffspringMass {
                        law: law.to_string(),
                        mass: mass0,
                    });
                }
            }
        }
        let p_c = self.p_c.to_f64().unwrap_or(f64::NAN);
        let p_0 = self.p_0.to_f64().unwrap_or(f64::NAN);
        for (what, p) in [("p_c", p_c), ("p_0", p_0)] {
            if !(p > 0.0 && p < 1.0) {
                errors.push(ValidationError::ProbabilityOutOfRange {
                    what: what.to_string(),
                    value: p,
                });
            }
        }
        match (mu_c, mu_0) {
            (Some(mu_c), Some(mu_0)) if errors.is_empty() => {
                Ok(CbrwParams::new_unchecked(mu_c, p_c, mu_0, p_0, self.layout))
            }
            _ => Err(errors),
        }
    }
}

impl CbrwParams {
    /// Compact JSON echo for embedding in output artifacts.
    pub fn echo_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }
}
