//! Log-normal fatigue-strength model and experiment records.
//!
//! A material's fatigue strength is log-normal. Throughout the crate the
//! distribution is parameterized in log10 space:
//!
//! ```text
//! P(failure | load) = StdNormalCDF((log10(load) - log10(mu_l)) / log10(sigma_l))
//! ```
//!
//! so `sigma_l` is a multiplicative scatter factor (`10^0.03` is a typical
//! steel value) and `log10(sigma_l)` is the standard deviation of `log10`
//! strength.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::normal;

/// Mean fatigue strength and multiplicative scatter of a material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct MaterialParams {
    mu_l: f64,
    sigma_l: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    mu_l: f64,
    sigma_l: f64,
}

impl TryFrom<RawParams> for MaterialParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        MaterialParams::new(raw.mu_l, raw.sigma_l)
    }
}

impl From<MaterialParams> for RawParams {
    fn from(p: MaterialParams) -> Self {
        RawParams { mu_l: p.mu_l, sigma_l: p.sigma_l }
    }
}

impl MaterialParams {
    pub fn new(mu_l: f64, sigma_l: f64) -> Result<Self> {
        if !(mu_l.is_finite() && mu_l > 0.0) {
            return Err(domain(format!("mu_l must be positive and finite, got {mu_l}")));
        }
        if !(sigma_l.is_finite() && sigma_l > 1.0) {
            return Err(domain(format!("sigma_l must be a finite factor > 1, got {sigma_l}")));
        }
        Ok(Self { mu_l, sigma_l })
    }

    /// Builds parameters from `log10(mu_l)` and `log10(sigma_l)`.
    pub fn from_log10(mu_log10: f64, scatter_log10: f64) -> Result<Self> {
        if !(scatter_log10 > 0.0) {
            return Err(domain(format!("log10(sigma_l) must be > 0, got {scatter_log10}")));
        }
        Self::new(10f64.powf(mu_log10), 10f64.powf(scatter_log10))
    }

    pub fn mu_l(&self) -> f64 {
        self.mu_l
    }

    pub fn sigma_l(&self) -> f64 {
        self.sigma_l
    }

    pub fn mu_log10(&self) -> f64 {
        self.mu_l.log10()
    }

    /// Standard deviation of log10 strength, `log10(sigma_l)`.
    pub fn scatter_log10(&self) -> f64 {
        self.sigma_l.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Failure,
    Runout,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::Failure)
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Failure => "failure",
            Outcome::Runout => "runout",
        })
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "failure" | "f" => Ok(Outcome::Failure),
            "runout" | "r" => Ok(Outcome::Runout),
            other => Err(domain(format!("unknown outcome '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub index: usize,
    pub load: f64,
    pub outcome: Outcome,
}

/// An ordered, append-only testing campaign on one material.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct ExperimentSeries {
    #[serde(default)]
    material_id: String,
    records: Vec<ExperimentRecord>,
}

#[derive(Deserialize)]
struct RawSeries {
    #[serde(default)]
    material_id: String,
    records: Vec<ExperimentRecord>,
}

impl TryFrom<RawSeries> for ExperimentSeries {
    type Error = Error;
    fn try_from(raw: RawSeries) -> Result<Self> {
        let mut series = ExperimentSeries::new(raw.material_id);
        for (i, r) in raw.records.into_iter().enumerate() {
            if r.index != i {
                return Err(domain(format!("record indices must be consecutive, found {} at {i}", r.index)));
            }
            series.push(r.load, r.outcome)?;
        }
        Ok(series)
    }
}

impl ExperimentSeries {
    pub fn new(material_id: impl Into<String>) -> Self {
        Self { material_id: material_id.into(), records: Vec::new() }
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, Outcome)>,
    {
        let mut series = Self::default();
        for (load, outcome) in pairs {
            series.push(load, outcome)?;
        }
        Ok(series)
    }

    pub fn material_id(&self) -> &str {
        &self.material_id
    }

    pub fn push(&mut self, load: f64, outcome: Outcome) -> Result<&ExperimentRecord> {
        if !(load.is_finite() && load > 0.0) {
            return Err(domain(format!("load must be positive and finite, got {load}")));
        }
        let index = self.records.len();
        self.records.push(ExperimentRecord { index, load, outcome });
        Ok(&self.records[index])
    }

    /// Returns a copy with one more record appended.
    pub fn with(&self, load: f64, outcome: Outcome) -> Result<Self> {
        let mut next = self.clone();
        next.push(load, outcome)?;
        Ok(next)
    }

    /// Appends all records of `other`, re-indexing them.
    pub fn concat(&self, other: &ExperimentSeries) -> Self {
        let mut out = self.clone();
        for r in other.records() {
            out.push(r.load, r.outcome).expect("loads already validated");
        }
        out
    }

    pub fn records(&self) -> &[ExperimentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ExperimentRecord> {
        self.records.iter()
    }
}

pub(crate) fn z_score(load_log10: f64, mu_log10: f64, scatter_log10: f64) -> f64 {
    (load_log10 - mu_log10) / scatter_log10
}

/// Probability that a specimen fails at `load`.
pub fn failure_probability(params: &MaterialParams, load: f64) -> Result<f64> {
    if !(load > 0.0) || load.is_nan() {
        return Err(domain(format!("load must be positive, got {load}")));
    }
    let z = z_score(load.log10(), params.mu_log10(), params.scatter_log10());
    Ok(normal::cdf(z))
}

/// Log-probability of a single outcome at `load`.
pub fn outcome_log_probability(params: &MaterialParams, load: f64, outcome: Outcome) -> Result<f64> {
    if !(load > 0.0) || load.is_nan() {
        return Err(domain(format!("load must be positive, got {load}")));
    }
    let z = z_score(load.log10(), params.mu_log10(), params.scatter_log10());
    Ok(match outcome {
        Outcome::Failure => normal::log_cdf(z),
        Outcome::Runout => normal::log_sf(z),
    })
}

/// Log-likelihood of the whole series: the sum of per-experiment log
/// probabilities. An empty series has log-likelihood 0.
pub fn series_log_likelihood(series: &ExperimentSeries, params: &MaterialParams) -> f64 {
    let mu = params.mu_log10();
    let s = params.scatter_log10();
    series
        .iter()
        .map(|r| {
            let z = z_score(r.load.log10(), mu, s);
            match r.outcome {
                Outcome::Failure => normal::log_cdf(z),
                Outcome::Runout => normal::log_sf(z),
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn truth() -> MaterialParams {
        MaterialParams::new(400.0, 10f64.powf(0.03)).unwrap()
    }

    #[test]
    fn median_has_probability_one_half() {
        assert_eq!(failure_probability(&truth(), 400.0).unwrap(), 0.5);
    }

    #[test]
    fn staircase_level_probability_matches_oracle() {
        // mpmath: ncdf((log10 429 - log10 400) / 0.03)
        let p = failure_probability(&truth(), 429.0).unwrap();
        assert!((p - 0.844_528_033_343_767_1).abs() < 1e-12, "{p}");
    }

    #[test]
    fn limits() {
        let p = truth();
        assert!(failure_probability(&p, 1e-300).unwrap() < 1e-300);
        assert_eq!(failure_probability(&p, 1e300).unwrap(), 1.0);
    }

    #[test]
    fn invalid_inputs_are_domain_errors() {
        assert!(failure_probability(&truth(), 0.0).is_err());
        assert!(failure_probability(&truth(), -3.0).is_err());
        assert!(MaterialParams::new(0.0, 2.0).is_err());
        assert!(MaterialParams::new(400.0, 1.0).is_err());
        assert!(MaterialParams::new(400.0, 0.5).is_err());
        let mut s = ExperimentSeries::default();
        assert!(s.push(0.0, Outcome::Failure).is_err());
        assert!(s.is_empty());
    }

    #[test]
    fn likelihood_examples() {
        let p = truth();
        assert_eq!(series_log_likelihood(&ExperimentSeries::default(), &p), 0.0);
        let one = ExperimentSeries::from_pairs([(400.0, Outcome::Failure)]).unwrap();
        assert!((series_log_likelihood(&one, &p) - 0.5f64.ln()).abs() < 1e-15);
        let two = ExperimentSeries::from_pairs([(429.0, Outcome::Failure), (373.0, Outcome::Runout)]).unwrap();
        // mpmath: ln Phi(z_429) + ln(1 - Phi(z_373))
        assert!((series_log_likelihood(&two, &p) - -0.338_389_968_314_047_4).abs() < 1e-12);
    }

    #[test]
    fn deserialization_rejects_bad_records() {
        let bad = r#"{"records":[{"index":0,"load":-1.0,"outcome":"failure"}]}"#;
        assert!(serde_json::from_str::<ExperimentSeries>(bad).is_err());
        let gap = r#"{"records":[{"index":1,"load":1.0,"outcome":"failure"}]}"#;
        assert!(serde_json::from_str::<ExperimentSeries>(gap).is_err());
        assert!(serde_json::from_str::<MaterialParams>(r#"{"mu_l":400,"sigma_l":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_load(a in 1.0f64..2000.0, b in 1.0f64..2000.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let p = truth();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let plo = failure_probability(&p, lo).unwrap();
            let phi = failure_probability(&p, hi).unwrap();
            // Strict where the CDF is resolvable in double precision.
            if plo > 0.0 && phi < 1.0 {
                prop_assert!(plo < phi);
            } else {
                prop_assert!(plo <= phi);
            }
        }

        #[test]
        fn scale_equivariance(c in 0.01f64..100.0, load in 100.0f64..900.0) {
            let p = truth();
            let scaled = MaterialParams::new(400.0 * c, p.sigma_l()).unwrap();
            let a = failure_probability(&p, load).unwrap();
            let b = failure_probability(&scaled, load * c).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn complement(load in 1.0f64..2000.0) {
            let p = truth();
            let pf = outcome_log_probability(&p, load, Outcome::Failure).unwrap().exp();
            let pr = outcome_log_probability(&p, load, Outcome::Runout).unwrap().exp();
            prop_assert!((pf + pr - 1.0).abs() < 1e-14);
        }

        #[test]
        fn likelihood_factorizes(
            a in proptest::collection::vec((200.0f64..700.0, any::<bool>()), 0..6),
            b in proptest::collection::vec((200.0f64..700.0, any::<bool>()), 0..6),
        ) {
            let to_series = |v: &Vec<(f64, bool)>| ExperimentSeries::from_pairs(
                v.iter().map(|&(l, f)| (l, if f { Outcome::Failure } else { Outcome::Runout }))
            ).unwrap();
            let (sa, sb) = (to_series(&a), to_series(&b));
            let p = truth();
            let joined = series_log_likelihood(&sa.concat(&sb), &p);
            let parts = series_log_likelihood(&sa, &p) + series_log_likelihood(&sb, &p);
            prop_assert!((joined - parts).abs() < 1e-9 * (1.0 + parts.abs()));
        }
    }
}
