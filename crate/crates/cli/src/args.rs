use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polyconfig::montecarlo::Property;
use polyconfig::{BigRational, Polynomial};
use serde::{Deserialize, Serialize};

#[derive(Parser, Clone, Debug, Serialize, Deserialize)]
#[command(
    name = "polyconfig",
    version,
    about = "Two-point polynomial configurations (a, a + P(d)) in subsets of [n]",
    subcommand_required = false
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// Size of the ground set [n]
    #[arg(long, global = true)]
    pub n: Option<u64>,

    /// Polynomial: coefficients constant-first ("0,0,1") or an expression ("d^2", "d^2+d")
    #[arg(long, global = true, value_parser = parse_poly)]
    pub poly: Option<Polynomial>,

    /// Subset size
    #[arg(long, global = true)]
    pub r: Option<u64>,

    /// Density parameter in (0, 1], e.g. "1/2"
    #[arg(long, global = true, value_parser = parse_ratio)]
    #[serde(default, with = "polyconfig::output::opt_ratio_string")]
    pub delta: Option<BigRational>,

    #[arg(long, global = true)]
    pub trials: Option<u64>,

    #[arg(long, global = true, env = "POLYCONFIG_SEED")]
    pub seed: Option<u64>,

    /// Worker threads; 0 uses every core, 1 is fully serial
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,

    /// Directory receiving data files and manifest.json
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Replay the invocation recorded in a manifest
    #[arg(long, global = true)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyArg {
    #[default]
    Containment,
    Density,
}

impl From<PropertyArg> for Property {
    fn from(p: PropertyArg) -> Self {
        match p {
            PropertyArg::Containment => Property::Containment,
            PropertyArg::Density => Property::Density,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AvoidMode {
    /// Exact branch-and-bound when |R| is within the cap, greedy otherwise
    #[default]
    Auto,
    Exact,
    Greedy,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SearchArgs {
    /// Branch-and-bound node budget
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,

    /// Largest |R| handed to the exact solver
    #[arg(long, default_value_t = 64)]
    pub exact_cap: usize,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Count instances (a, d) inside a set
    Count {
        /// Comma-separated elements, or @file with one element per line
        #[arg(long)]
        set: String,
    },
    /// Expected instance count of a uniform r-subset, as an exact rational
    Expect,
    /// Largest instance-free subset of a set (default: all of [n])
    Avoid {
        #[arg(long)]
        set: Option<String>,
        #[arg(long, value_enum, default_value_t = AvoidMode::Auto)]
        mode: AvoidMode,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// (delta, P)-density verdict for a set
    Dense {
        #[arg(long)]
        set: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Exact number of instance-free s-subsets of [n]
    BadCount {
        #[arg(long)]
        s: u64,
        /// Largest C(n, s) accepted
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
    },
    /// Containment or density probability over a grid of r
    Sweep {
        /// Comma-separated subset sizes (defaults to --r)
        #[arg(long, value_delimiter = ',')]
        r_grid: Vec<u64>,
        #[arg(long, value_enum, default_value_t = PropertyArg::Containment)]
        property: PropertyArg,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Median threshold r*(n) over a grid of n, with the log-log slope
    Threshold {
        /// Comma-separated ascending ground-set sizes
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 0.5)]
        target: f64,
        #[arg(long, value_enum, default_value_t = PropertyArg::Containment)]
        property: PropertyArg,
        #[arg(long, default_value_t = 20)]
        max_iterations: u32,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// alpha^s C(n,s) C(n-s,r-s) / C(n,r), exactly
    Bound {
        #[arg(long, value_parser = parse_ratio)]
        #[serde(with = "polyconfig::output::ratio_string")]
        alpha: BigRational,
        #[arg(long)]
        s: u64,
    },
    /// Simulate the ordered bad-set selection process
    LemmaSim {
        #[arg(long)]
        s: u64,
        /// Number of traces (defaults to --trials, then 100)
        #[arg(long)]
        traces: Option<u64>,
        /// Selection parameter epsilon; defaults to alpha^2/6
        #[arg(long, value_parser = parse_ratio)]
        #[serde(default, with = "polyconfig::output::opt_ratio_string")]
        epsilon: Option<BigRational>,
        #[arg(long, value_parser = parse_ratio, default_value = "1/2")]
        #[serde(with = "polyconfig::output::ratio_string")]
        alpha: BigRational,
        /// Constant c(epsilon); defaults to 1 unless --calibrate-n is given
        #[arg(long, value_parser = parse_ratio)]
        #[serde(default, with = "polyconfig::output::opt_ratio_string")]
        c_epsilon: Option<BigRational>,
        /// Derive c(epsilon) from an exhaustive ratio scan at this n
        #[arg(long)]
        calibrate_n: Option<u64>,
    },
    /// Minimum normalized instance ratio over all A with |A| >= eps n
    SfScan {
        #[arg(long, value_parser = parse_ratio)]
        #[serde(with = "polyconfig::output::ratio_string")]
        eps: BigRational,
        /// Largest n accepted
        #[arg(long, default_value_t = 22)]
        cap: u64,
    },
}

fn parse_poly(s: &str) -> Result<Polynomial, String> {
    s.parse().map_err(|e: polyconfig::Error| e.to_string())
}

/// Accepts `p`, `p/q`, or a decimal such as `0.25`.
pub fn parse_ratio(s: &str) -> Result<BigRational, String> {
    let text = s.trim();
    let bad = || format!("expected an integer, fraction p/q, or decimal, got {s:?}");
    if let Some((whole, frac)) = text.split_once('.') {
        let digits_only = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if frac.is_empty() || !digits_only(frac) || !digits_only(whole.trim_start_matches('-')) {
            return Err(bad());
        }
        let digits: BigRational = format!("{whole}{frac}").parse().map_err(|_| bad())?;
        let scale: BigRational = format!("1{}", "0".repeat(frac.len())).parse().map_err(|_| bad())?;
        return Ok(digits / scale);
    }
    text.parse::<BigRational>().map_err(|_| bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_forms() {
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(parse_ratio("1/2").unwrap(), half);
        assert_eq!(parse_ratio("0.5").unwrap(), half);
        assert_eq!(parse_ratio(" 2/4 ").unwrap(), half);
        assert_eq!(parse_ratio("3").unwrap(), BigRational::from_integer(3.into()));
        for bad in ["", "1/", "0.", ".x", "a/b", "1/0.5"] {
            assert!(parse_ratio(bad).is_err(), "{bad:?}");
        }
    }
}
