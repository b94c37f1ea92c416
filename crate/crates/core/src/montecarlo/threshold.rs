//! Bisection for the median threshold `r*(n)` and its log-log scaling.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::Serialize;

use super::{estimate_probability, linear_fit, ExperimentConfig, Property};
use crate::adversary::AdversaryOptions;
use crate::error::{Error, Result};
use crate::output::sig6;
use crate::par::Parallelism;
use crate::poly::Polynomial;

#[derive(Clone, Debug)]
pub struct ThresholdOptions {
    pub property: Property,
    pub target: f64,
    pub trials_per_probe: u64,
    pub seed: u64,
    pub parallelism: Parallelism,
    pub delta: Option<BigRational>,
    pub adversary: AdversaryOptions,
    pub max_iterations: u32,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            property: Property::Containment,
            target: 0.5,
            trials_per_probe: 400,
            seed: 0,
            parallelism: Parallelism::AUTO,
            delta: None,
            adversary: AdversaryOptions::default(),
            max_iterations: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub n: u64,
    /// Smallest probed `r` whose estimate reached the target.
    pub r_star: Option<u64>,
    pub p_at_r_star: Option<f64>,
    /// Every `(r, p_hat)` evaluated, ascending in `r`.
    pub probes: Vec<(u64, f64)>,
    pub valid: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdScan {
    pub rows: Vec<ThresholdRow>,
    /// Least-squares slope of `ln r*` against `ln n` over valid rows.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl ThresholdScan {
    pub const CSV_HEADER: &'static str = "n,r_star,p_at_r_star,probes,valid";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.n,
                row.r_star.map_or(String::new(), |r| r.to_string()),
                row.p_at_r_star.map_or(String::new(), sig6),
                row.probes.len(),
                row.valid
            ));
        }
        out
    }
}

/// For each `n`, bisects `r ∈ [1, n]` for the smallest `r` with estimated
/// probability `>= target`, then fits `ln r* = slope * ln n + c`.
///
/// All probes reuse the trial substreams of `opts.seed`.
pub fn threshold_scan(
    n_grid: &[u64],
    poly: &Polynomial,
    opts: &ThresholdOptions,
) -> Result<ThresholdScan> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n-grid must be strictly ascending".into()));
    }
    if !(opts.target > 0.0 && opts.target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target {} not in (0, 1)",
            opts.target
        )));
    }
    if opts.property == Property::Density && opts.delta.is_none() {
        return Err(Error::InvalidArgument("density threshold needs delta".into()));
    }

    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        rows.push(scan_one(n, poly, opts)?);
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.valid)
        .filter_map(|row| row.r_star.map(|r| ((row.n as f64).ln(), (r as f64).ln())))
        .collect();
    let fit = linear_fit(&points);
    Ok(ThresholdScan {
        rows,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
    })
}

fn scan_one(n: u64, poly: &Polynomial, opts: &ThresholdOptions) -> Result<ThresholdRow> {
    let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
    let mut probe = |r: u64| -> Result<f64> {
        if let Some(&p) = cache.get(&r) {
            return Ok(p);
        }
        let cfg = ExperimentConfig {
            n,
            poly: poly.clone(),
            r,
            delta: opts.delta.clone(),
            trials: opts.trials_per_probe,
            seed: opts.seed,
            parallelism: opts.parallelism,
            adversary: opts.adversary,
        };
        let p = estimate_probability(&cfg, opts.property)?.p_hat;
        cache.insert(r, p);
        Ok(p)
    };

    let at_top = probe(n)?;
    if at_top < opts.target {
        return Ok(ThresholdRow {
            n,
            r_star: None,
            p_at_r_star: None,
            probes: cache.into_iter().collect(),
            valid: false,
            note: Some(format!("probability {} < target at r = n", sig6(at_top))),
        });
    }

    let (mut lo, mut hi) = (1u64, n);
    let mut iterations = 0;
    while lo < hi && iterations < opts.max_iterations {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? >= opts.target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
        iterations += 1;
    }
    let converged = lo >= hi;
    let p_star = probe(hi)?;
    Ok(ThresholdRow {
        n,
        r_star: Some(hi),
        p_at_r_star: Some(p_star),
        probes: cache.into_iter().collect(),
        valid: converged,
        note: (!converged).then(|| "bisection hit the iteration limit".to_string()),
    })
}
