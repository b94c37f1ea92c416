use std::fs;
use std::path::Path;

use polyconfig::adversary::{
    count_bad_subsets, is_dense_with, max_avoiding_subset_exact, max_avoiding_subset_greedy,
    AdversaryOptions, AvoidanceResult, AvoidanceStatus, BadCountOptions, DensityVerdict,
};
use polyconfig::instances::{difference_set, min_sf_ratio_exhaustive, ExhaustiveOptions};
use polyconfig::lemma::{simulate_traces, suggest_c_epsilon, trace_statistics, LemmaParams, TraceReport};
use polyconfig::montecarlo::{
    expected_instances, sweep, threshold_scan, union_bound_value, ExperimentConfig, Property,
    ThresholdOptions,
};
use polyconfig::output::sig6;
use polyconfig::{BigRational, Parallelism, Polynomial, SubsetMask};

use crate::args::{AvoidMode, Cli, Command, Format, GlobalArgs, SearchArgs};
use crate::CliError;

const DEFAULT_TRIALS: u64 = 1000;
const DEFAULT_THRESHOLD_TRIALS: u64 = 400;
const DEFAULT_TRACES: u64 = 100;

/// One output file. `stdout` marks the files echoed when no `--out` is given.
pub struct Artifact {
    pub name: String,
    pub content: String,
    pub stdout: bool,
}

impl Artifact {
    fn shown(name: impl Into<String>, content: String) -> Self {
        Self {
            name: name.into(),
            content,
            stdout: true,
        }
    }

    fn file_only(name: impl Into<String>, content: String) -> Self {
        Self {
            name: name.into(),
            content,
            stdout: false,
        }
    }
}

/// Fills every defaulted knob so the invocation can be replayed verbatim.
pub fn resolve(mut cli: Cli) -> Result<Cli, CliError> {
    let g = &mut cli.global;
    g.seed.get_or_insert(0);
    g.parallelism.get_or_insert(0);
    g.format.get_or_insert(Format::Csv);

    let Some(command) = cli.command.as_mut() else {
        return Err(CliError::Usage("no subcommand given (see --help)".into()));
    };
    match command {
        Command::Sweep { r_grid, .. } => {
            if r_grid.is_empty() {
                r_grid.push(require(g.r, "--r or --r-grid")?);
            }
            g.trials.get_or_insert(DEFAULT_TRIALS);
        }
        Command::Threshold { .. } => {
            g.trials.get_or_insert(DEFAULT_THRESHOLD_TRIALS);
        }
        Command::LemmaSim {
            traces,
            epsilon,
            alpha,
            c_epsilon,
            calibrate_n,
            ..
        } => {
            traces.get_or_insert(g.trials.unwrap_or(DEFAULT_TRACES));
            let eps = epsilon
                .get_or_insert_with(|| LemmaParams::epsilon_for_alpha(alpha))
                .clone();
            if c_epsilon.is_none() {
                *c_epsilon = Some(match calibrate_n.take() {
                    Some(cal) => suggest_c_epsilon(&require_poly(g)?, cal, &eps)?,
                    None => BigRational::from_integer(1.into()),
                });
            }
        }
        _ => {}
    }
    Ok(cli)
}

pub fn execute(cli: &Cli) -> Result<Vec<Artifact>, CliError> {
    let g = &cli.global;
    let format = g.format.unwrap_or_default();
    let parallelism = Parallelism(g.parallelism.unwrap_or(0));
    let seed = g.seed.unwrap_or(0);
    let command = cli
        .command
        .as_ref()
        .ok_or_else(|| CliError::Usage("no subcommand given".into()))?;
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let file = |stem: &str| format!("{stem}.{ext}");

    let artifacts = match command {
        Command::Count { set } => {
            let n = require(g.n, "--n")?;
            let a = parse_set(set, n)?;
            let count = difference_set(&require_poly(g)?, n)?.count_instances(&a)?;
            vec![Artifact::shown(
                file("count"),
                scalar(format, "count", count.to_string(), serde_json::json!(count)),
            )]
        }
        Command::Expect => {
            let (n, r) = (require(g.n, "--n")?, require(g.r, "--r")?);
            let e = expected_instances(&require_poly(g)?, n, r)?;
            vec![Artifact::shown(
                file("expect"),
                scalar(format, "expected_instances", e.to_string(), e.to_string().into()),
            )]
        }
        Command::Bound { alpha, s } => {
            let (n, r) = (require(g.n, "--n")?, require(g.r, "--r")?);
            let b = union_bound_value(alpha, n, *s, r)?;
            vec![Artifact::shown(
                file("bound"),
                scalar(format, "bound", b.to_string(), b.to_string().into()),
            )]
        }
        Command::BadCount { s, budget } => {
            let n = require(g.n, "--n")?;
            let opts = BadCountOptions {
                budget: *budget,
                parallelism,
            };
            let count = count_bad_subsets(n, *s, &require_poly(g)?, &opts)?;
            vec![Artifact::shown(
                file("bad_count"),
                scalar(format, "bad_subsets", count.to_string(), serde_json::json!(count)),
            )]
        }
        Command::Avoid { set, mode, search } => {
            let n = require(g.n, "--n")?;
            let poly = require_poly(g)?;
            let r = match set {
                Some(text) => parse_set(text, n)?,
                None => SubsetMask::full(n),
            };
            let opts = adversary_options(search);
            let result = match mode {
                AvoidMode::Exact => max_avoiding_subset_exact(&r, &poly, n, &opts)?,
                AvoidMode::Greedy => max_avoiding_subset_greedy(&r, &poly, n)?,
                AvoidMode::Auto if r.len() as usize <= opts.exact_cap => {
                    max_avoiding_subset_exact(&r, &poly, n, &opts)?
                }
                AvoidMode::Auto => max_avoiding_subset_greedy(&r, &poly, n)?,
            };
            vec![Artifact::shown(file("avoid"), render_avoidance(format, &result))]
        }
        Command::Dense { set, search } => {
            let n = require(g.n, "--n")?;
            let delta = g
                .delta
                .as_ref()
                .ok_or_else(|| CliError::Usage("missing --delta".into()))?;
            let r = parse_set(set, n)?;
            let ds = difference_set(&require_poly(g)?, n)?;
            let verdict = is_dense_with(&ds, &r, delta, &adversary_options(search))?;
            vec![Artifact::shown(file("dense"), render_verdict(format, &verdict))]
        }
        Command::Sweep {
            r_grid,
            property,
            search,
        } => {
            let property = Property::from(*property);
            let mut base = ExperimentConfig::new(
                require(g.n, "--n")?,
                require_poly(g)?,
                r_grid[0],
                g.trials.unwrap_or(DEFAULT_TRIALS),
                seed,
            )
            .with_parallelism(parallelism);
            base.adversary = adversary_options(search);
            if let Some(delta) = &g.delta {
                base = base.with_delta(delta.clone());
            } else if property == Property::Density {
                return Err(CliError::Usage("density sweep needs --delta".into()));
            }
            let summary = sweep(&base, r_grid, property)?;
            let content = match format {
                Format::Csv => summary.to_csv(),
                Format::Json => summary.to_json(),
            };
            vec![Artifact::shown(file("sweep"), content)]
        }
        Command::Threshold {
            n_grid,
            target,
            property,
            max_iterations,
            search,
        } => {
            let opts = ThresholdOptions {
                property: (*property).into(),
                target: *target,
                trials_per_probe: g.trials.unwrap_or(DEFAULT_THRESHOLD_TRIALS),
                seed,
                parallelism,
                delta: g.delta.clone(),
                adversary: adversary_options(search),
                max_iterations: *max_iterations,
            };
            let scan = threshold_scan(n_grid, &require_poly(g)?, &opts)?;
            match format {
                Format::Csv => {
                    let fit = format!(
                        "slope,intercept\n{},{}\n",
                        scan.slope.map_or(String::new(), sig6),
                        scan.intercept.map_or(String::new(), sig6)
                    );
                    vec![
                        Artifact::shown("threshold.csv", scan.to_csv()),
                        Artifact::shown("threshold_fit.csv", fit),
                    ]
                }
                Format::Json => vec![Artifact::shown("threshold.json", pretty(&scan))],
            }
        }
        Command::LemmaSim {
            s,
            traces,
            epsilon,
            c_epsilon,
            ..
        } => {
            let params = LemmaParams::new(
                require(g.n, "--n")?,
                require_poly(g)?,
                *s,
                epsilon.clone().expect("resolved"),
                c_epsilon.clone().expect("resolved"),
            );
            let traces = simulate_traces(&params, traces.expect("resolved"), seed, parallelism)?;
            let report = trace_statistics(&traces)?;
            let mut jsonl = String::new();
            for trace in &traces {
                jsonl.push_str(&serde_json::to_string(trace).expect("trace serializes"));
                jsonl.push('\n');
            }
            let report = match format {
                Format::Csv => Artifact::shown("report.csv", report_csv(&report)),
                Format::Json => Artifact::shown("report.json", pretty(&report)),
            };
            vec![Artifact::file_only("traces.jsonl", jsonl), report]
        }
        Command::SfScan { eps, cap } => {
            let n = require(g.n, "--n")?;
            let opts = ExhaustiveOptions {
                cap: *cap,
                parallelism,
            };
            let scan = min_sf_ratio_exhaustive(n, &require_poly(g)?, eps, opts)?;
            let content = match format {
                Format::Csv => format!(
                    "min_ratio,witness_instances,subsets_examined,witness\n{},{},{},{}\n",
                    scan.min_ratio,
                    scan.witness_instances,
                    scan.subsets_examined,
                    join(&scan.witness.to_vec())
                ),
                Format::Json => pretty(&scan),
            };
            vec![Artifact::shown(file("sf_scan"), content)]
        }
    };
    Ok(artifacts)
}

/// Writes artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for artifact in artifacts {
        fs::write(dir.join(&artifact.name), &artifact.content)?;
    }
    Ok(())
}

fn require(value: Option<u64>, flag: &str) -> Result<u64, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing {flag}")))
}

fn require_poly(g: &GlobalArgs) -> Result<Polynomial, CliError> {
    g.poly
        .clone()
        .ok_or_else(|| CliError::Usage("missing --poly".into()))
}

fn adversary_options(search: &SearchArgs) -> AdversaryOptions {
    AdversaryOptions {
        exact_cap: search.exact_cap,
        budget: search.budget,
    }
}

/// `"1,2,5"` or `@path` with one integer per line.
pub fn parse_set(text: &str, n: u64) -> Result<SubsetMask, CliError> {
    let body = match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(path)?,
        None => text.to_string(),
    };
    let elements = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u64>()
                .map_err(|_| CliError::Usage(format!("bad set element {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SubsetMask::from_elements(n, elements)?)
}

fn scalar(format: Format, key: &str, text: String, json: serde_json::Value) -> String {
    match format {
        Format::Csv => text + "\n",
        Format::Json => pretty(&serde_json::json!({ key: json })),
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn join(elements: &[u64]) -> String {
    elements
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn status_str(status: AvoidanceStatus) -> &'static str {
    match status {
        AvoidanceStatus::Exact => "exact",
        AvoidanceStatus::Bounded => "bounded",
    }
}

fn render_avoidance(format: Format, result: &AvoidanceResult) -> String {
    match format {
        Format::Csv => format!(
            "lower_bound,upper_bound,status,nodes,witness\n{},{},{},{},{}\n",
            result.lower_bound,
            result.upper_bound,
            status_str(result.status),
            result.nodes,
            join(&result.witness.to_vec())
        ),
        Format::Json => pretty(result),
    }
}

fn render_verdict(format: Format, verdict: &DensityVerdict) -> String {
    let ev = &verdict.evidence;
    match format {
        Format::Csv => format!(
            "verdict,lower_bound,upper_bound,status,witness\n{},{},{},{},{}\n",
            verdict.verdict.as_str(),
            ev.lower_bound,
            ev.upper_bound,
            status_str(ev.status),
            join(&ev.witness.to_vec())
        ),
        Format::Json => pretty(verdict),
    }
}

fn report_csv(report: &TraceReport) -> String {
    format!(
        "n,s,epsilon,c_epsilon,traces,mean_s_prime,max_s_prime,s_prime_bound,mean_final_neighborhood,truncated_fraction,b_fraction,violations,chain_holds\n\
         {},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        report.params.n,
        report.params.s,
        report.params.epsilon,
        report.params.c_epsilon,
        report.traces,
        sig6(report.mean_s_prime),
        report.max_s_prime,
        report.s_prime_bound,
        sig6(report.mean_final_neighborhood),
        sig6(report.truncated_fraction),
        sig6(report.b_fraction),
        report.violations.len(),
        report.chain_holds
    )
}
