//! Monte Carlo estimation over uniform random `r`-subsets of `[n]`.
//!
//! Every trial draws from its own substream `(seed, trial)`, so a run's
//! per-trial records are identical whatever the parallelism. Aggregation
//! happens after collection, in trial order.

mod bound;
mod sampling;
mod stats;
mod threshold;

use std::time::{Duration, Instant};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::adversary::{is_dense_with, AdversaryOptions, Verdict};
use crate::error::{Error, Result};
use crate::instances::DifferenceSet;
use crate::output::sig6;
use crate::par::{map_indexed, Parallelism};
use crate::poly::Polynomial;

pub use bound::{expected_instances, expected_instances_with, union_bound_value};
pub use sampling::{sample_subset, subset_digest, trial_rng};
pub use stats::{linear_fit, mean_and_se, wilson_interval, Z_95};
pub use threshold::{threshold_scan, ThresholdOptions, ThresholdRow, ThresholdScan};

/// The monotone property a probe estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// The sampled set contains an instance.
    Containment,
    /// The sampled set is certified `(delta, P)`-dense.
    Density,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: u64,
    pub poly: Polynomial,
    pub r: u64,
    #[serde(default, with = "crate::output::opt_ratio_string")]
    pub delta: Option<BigRational>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub parallelism: Parallelism,
    #[serde(default)]
    pub adversary: AdversaryOptions,
}

impl ExperimentConfig {
    pub fn new(n: u64, poly: Polynomial, r: u64, trials: u64, seed: u64) -> Self {
        Self {
            n,
            poly,
            r,
            delta: None,
            trials,
            seed,
            parallelism: Parallelism::AUTO,
            adversary: AdversaryOptions::default(),
        }
    }

    pub fn with_delta(mut self, delta: BigRational) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 1 || self.r > self.n {
            return Err(Error::InvalidArgument(format!(
                "r = {} must satisfy 1 <= r <= n = {}",
                self.r, self.n
            )));
        }
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub digest: u64,
    pub instances: u64,
    pub contains: bool,
    pub verdict: Option<Verdict>,
    /// Wall time; excluded from equality.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl PartialEq for TrialRecord {
    fn eq(&self, other: &Self) -> bool {
        self.trial == other.trial
            && self.digest == other.digest
            && self.instances == other.instances
            && self.contains == other.contains
            && self.verdict == other.verdict
    }
}

impl Eq for TrialRecord {}

/// Runs `cfg.trials` trials; density verdicts are computed when `cfg.delta` is set.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let ds = DifferenceSet::new(&cfg.poly, cfg.n)?;
    run_trials_with(cfg, &ds)
}

fn run_trials_with(cfg: &ExperimentConfig, ds: &DifferenceSet) -> Result<Vec<TrialRecord>> {
    map_indexed(cfg.trials, cfg.parallelism, |trial| {
        let start = Instant::now();
        let mut rng = trial_rng(cfg.seed, trial);
        let set = sample_subset(cfg.n, cfg.r, &mut rng)?;
        let instances = ds.count_instances(&set)?;
        let verdict = match &cfg.delta {
            Some(delta) => Some(is_dense_with(ds, &set, delta, &cfg.adversary)?.verdict),
            None => None,
        };
        Ok(TrialRecord {
            trial,
            digest: subset_digest(&set),
            instances,
            contains: instances > 0,
            verdict,
            elapsed: start.elapsed(),
        })
    })
    .into_iter()
    .collect()
}

/// One `(n, r)` probe of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub n: u64,
    pub r: u64,
    pub trials: u64,
    pub property: Property,
    /// Trials with the property (contains, or certified dense).
    pub successes: u64,
    pub dense: u64,
    pub not_dense: u64,
    pub unknown: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_count: f64,
    pub se_count: f64,
    #[serde(with = "crate::output::ratio_string")]
    pub expected_count: BigRational,
    pub seed: u64,
}

impl ProbeRow {
    pub fn from_records(
        cfg: &ExperimentConfig,
        property: Property,
        records: &[TrialRecord],
        expected_count: BigRational,
    ) -> Self {
        let tally = |v: Verdict| records.iter().filter(|t| t.verdict == Some(v)).count() as u64;
        let (dense, not_dense, unknown) =
            (tally(Verdict::Dense), tally(Verdict::NotDense), tally(Verdict::Unknown));
        let successes = match property {
            Property::Containment => records.iter().filter(|t| t.contains).count() as u64,
            Property::Density => dense,
        };
        let trials = records.len() as u64;
        let (ci_lo, ci_hi) = wilson_interval(successes, trials, Z_95);
        let (mean_count, se_count) = mean_and_se(records.iter().map(|t| t.instances as f64));
        Self {
            n: cfg.n,
            r: cfg.r,
            trials,
            property,
            successes,
            dense,
            not_dense,
            unknown,
            p_hat: successes as f64 / trials.max(1) as f64,
            ci_lo,
            ci_hi,
            mean_count,
            se_count,
            expected_count,
            seed: cfg.seed,
        }
    }

    pub fn unknown_frac(&self) -> f64 {
        self.unknown as f64 / self.trials.max(1) as f64
    }

    pub fn not_dense_frac(&self) -> f64 {
        self.not_dense as f64 / self.trials.max(1) as f64
    }

    pub fn dense_frac(&self) -> f64 {
        self.dense as f64 / self.trials.max(1) as f64
    }

    pub const CSV_HEADER: &'static str =
        "n,r,trials,p_hat,ci_lo,ci_hi,mean_count,expected_count,unknown_frac,seed";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.r,
            self.trials,
            sig6(self.p_hat),
            sig6(self.ci_lo),
            sig6(self.ci_hi),
            sig6(self.mean_count),
            self.expected_count,
            sig6(self.unknown_frac()),
            self.seed
        )
    }

    /// JSON mirror of the CSV row, floats rounded to six significant digits.
    pub fn json_value(&self) -> serde_json::Value {
        let num = |x: f64| {
            sig6(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(serde_json::Value::Null, serde_json::Value::Number)
        };
        serde_json::json!({
            "n": self.n,
            "r": self.r,
            "trials": self.trials,
            "p_hat": num(self.p_hat),
            "ci_lo": num(self.ci_lo),
            "ci_hi": num(self.ci_hi),
            "mean_count": num(self.mean_count),
            "expected_count": self.expected_count.to_string(),
            "unknown_frac": num(self.unknown_frac()),
            "seed": self.seed,
        })
    }
}

/// Fraction of trials containing an instance.
pub fn estimate_containment_probability(cfg: &ExperimentConfig) -> Result<ProbeRow> {
    cfg.validate()?;
    let ds = DifferenceSet::new(&cfg.poly, cfg.n)?;
    let plain = ExperimentConfig {
        delta: None,
        ..cfg.clone()
    };
    let records = run_trials_with(&plain, &ds)?;
    let expected = expected_instances_with(&ds, cfg.r)?;
    Ok(ProbeRow::from_records(cfg, Property::Containment, &records, expected))
}

/// Fractions of dense / not-dense / unknown verdicts; `p_hat` is the dense fraction.
pub fn estimate_density_probability(cfg: &ExperimentConfig) -> Result<ProbeRow> {
    cfg.validate()?;
    if cfg.delta.is_none() {
        return Err(Error::InvalidArgument("density estimation needs delta".into()));
    }
    let ds = DifferenceSet::new(&cfg.poly, cfg.n)?;
    let records = run_trials_with(cfg, &ds)?;
    let expected = expected_instances_with(&ds, cfg.r)?;
    Ok(ProbeRow::from_records(cfg, Property::Density, &records, expected))
}

pub fn estimate_probability(cfg: &ExperimentConfig, property: Property) -> Result<ProbeRow> {
    match property {
        Property::Containment => estimate_containment_probability(cfg),
        Property::Density => estimate_density_probability(cfg),
    }
}

/// Rows of a sweep over several `(n, r)` probes.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<ProbeRow>,
}

impl SweepSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ProbeRow::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self.rows.iter().map(ProbeRow::json_value).collect();
        serde_json::to_string_pretty(&rows).expect("json values serialize") + "\n"
    }
}

/// Probes every `r` in `r_grid` with the rest of `base` fixed.
pub fn sweep(base: &ExperimentConfig, r_grid: &[u64], property: Property) -> Result<SweepSummary> {
    let rows = r_grid
        .iter()
        .map(|&r| estimate_probability(&ExperimentConfig { r, ..base.clone() }, property))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepSummary { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::SubsetMask;

    fn sq() -> Polynomial {
        Polynomial::monomial(2).unwrap()
    }

    #[test]
    fn containment_forced_cases() {
        let full = estimate_containment_probability(&ExperimentConfig::new(10, sq(), 10, 50, 3)).unwrap();
        assert_eq!(full.p_hat, 1.0);
        let single = estimate_containment_probability(&ExperimentConfig::new(10, sq(), 1, 50, 3)).unwrap();
        assert_eq!(single.p_hat, 0.0);
        assert!(single.ci_lo <= single.p_hat && single.p_hat <= single.ci_hi);
    }

    #[test]
    fn density_singletons_never_dense() {
        let cfg = ExperimentConfig::new(30, sq(), 1, 40, 5).with_delta(BigRational::new(1.into(), 1.into()));
        let row = estimate_density_probability(&cfg).unwrap();
        assert_eq!(row.dense, 0);
        assert_eq!(row.not_dense, 40);
    }

    #[test]
    fn density_pairs_exhaustive() {
        // A pair is (1, d^2)-dense iff it is an edge. Differences 1, 4, 9 give
        // 9 + 6 + 1 = 16 edges among the 45 pairs of [10].
        let ds = DifferenceSet::new(&sq(), 10).unwrap();
        let delta = BigRational::new(1.into(), 1.into());
        let (mut dense, mut edges) = (0, 0);
        for a in 1..=10u64 {
            for b in a + 1..=10 {
                let r = SubsetMask::from_elements(10, [a, b]).unwrap();
                let v = is_dense_with(&ds, &r, &delta, &AdversaryOptions::default()).unwrap();
                dense += (v.verdict == Verdict::Dense) as u32;
                edges += [1, 4, 9].contains(&(b - a)) as u32;
            }
        }
        assert_eq!(edges, 16);
        assert_eq!(dense, edges);
    }

    #[test]
    fn density_fractions_partition() {
        let cfg = ExperimentConfig::new(64, sq(), 32, 1000, 11).with_delta(BigRational::new(1.into(), 2.into()));
        let row = estimate_density_probability(&cfg).unwrap();
        assert_eq!(row.dense + row.not_dense + row.unknown, row.trials);
        let total = row.dense_frac() + row.not_dense_frac() + row.unknown_frac();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(estimate_density_probability(&ExperimentConfig::new(64, sq(), 32, 10, 1)).is_err());
    }

    #[test]
    fn records_independent_of_parallelism() {
        let cfg = ExperimentConfig::new(500, sq(), 40, 300, 42)
            .with_delta(BigRational::new(1.into(), 2.into()));
        let serial = run_trials(&cfg.clone().with_parallelism(Parallelism::SERIAL)).unwrap();
        let par = run_trials(&cfg.clone().with_parallelism(Parallelism(8))).unwrap();
        assert_eq!(serial, par);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(10, sq(), 0, 5, 1).validate().is_err());
        assert!(ExperimentConfig::new(10, sq(), 11, 5, 1).validate().is_err());
        assert!(ExperimentConfig::new(10, sq(), 3, 0, 1).validate().is_err());
    }

    #[test]
    fn csv_and_json_rows() {
        let summary = sweep(&ExperimentConfig::new(10, sq(), 10, 20, 7), &[1, 10], Property::Containment).unwrap();
        let csv = summary.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], ProbeRow::CSV_HEADER);
        assert_eq!(lines[2].split(',').collect::<Vec<_>>()[..4], ["10", "10", "20", "1"]);
        assert!(lines[2].contains(",16,"));
        let json: serde_json::Value = serde_json::from_str(&summary.to_json()).unwrap();
        assert_eq!(json[1]["p_hat"], 1.0);
        assert_eq!(json[1]["expected_count"], "16");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig::new(100, "d^2+d".parse().unwrap(), 12, 30, 9)
            .with_delta(BigRational::new(2.into(), 3.into()));
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
