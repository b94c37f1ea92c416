//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each, and
//! exits nonzero if any criterion fails or overruns its time limit.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyconfig::adversary::{
    binomial, count_bad_subsets, max_avoiding_subset_exact, AdversaryOptions, AvoidanceStatus,
    BadCountOptions, Verdict,
};
use polyconfig::instances::{count_instances, difference_set};
use polyconfig::lemma::{simulate_traces, trace_statistics, LemmaParams};
use polyconfig::montecarlo::{
    estimate_containment_probability, expected_instances, run_trials, sample_subset,
    threshold_scan, trial_rng, union_bound_value, ExperimentConfig, Property, ThresholdOptions,
};
use polyconfig::{Parallelism, Polynomial, SubsetMask};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn poly(text: &str) -> Polynomial {
    text.parse().unwrap()
}

fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// All `d >= 1` with `P(d) = diff`, found by walking `d` directly.
fn naive_multiplicity(coeffs: &[i64], diff: i64) -> u64 {
    let mut hits = 0;
    for d in 1i64.. {
        let v: i64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * d.pow(i as u32))
            .sum();
        if v == diff {
            hits += 1;
        }
        // Every test polynomial is increasing on d >= 1.
        if v > diff {
            break;
        }
    }
    hits
}

fn c1_counting_oracle() -> Outcome {
    let polys = [("d^2", vec![0, 0, 1]), ("d^3", vec![0, 0, 0, 1]), ("d^2+d", vec![0, 1, 1])];
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut checked = 0;
    let mut total_instances = 0;
    for case in 0..1000 {
        let (text, coeffs) = &polys[case % polys.len()];
        let n = rng.random_range(1..=512u64);
        let density: f64 = rng.random();
        let elements: Vec<u64> = (1..=n).filter(|_| rng.random_bool(density)).collect();
        let mut oracle = 0u64;
        for (i, &a) in elements.iter().enumerate() {
            for &b in &elements[i + 1..] {
                oracle += naive_multiplicity(coeffs, (b - a) as i64);
            }
        }
        let mask = SubsetMask::from_elements(n, elements.iter().copied()).unwrap();
        let got = count_instances(&mask, &poly(text), n).map_err(|e| e.to_string())?;
        ensure!(got == oracle, "case {case}: n={n} P={text} got {got}, oracle {oracle}");
        checked += 1;
        total_instances += oracle;
    }
    Ok(format!("{checked} cases agree ({total_instances} instances in total)"))
}

fn c2_expectation_identity() -> Outcome {
    let mut identities = 0;
    for text in ["d^2", "d^3", "d^2+d"] {
        let p = poly(text);
        for n in 1..=12u64 {
            let ds = difference_set(&p, n).unwrap();
            let mut sums = vec![0u64; n as usize + 1];
            let mut sizes = vec![0u64; n as usize + 1];
            for bits in 0u64..(1 << n) {
                let mask = SubsetMask::from_bits(n, bits).unwrap();
                let r = bits.count_ones() as usize;
                sums[r] += ds.count_instances(&mask).unwrap();
                sizes[r] += 1;
            }
            for r in 0..=n {
                let mean = BigRational::new(sums[r as usize].into(), sizes[r as usize].into());
                let expected = expected_instances(&p, n, r).map_err(|e| e.to_string())?;
                ensure!(mean == expected, "P={text} n={n} r={r}: mean {mean} vs {expected}");
                identities += 1;
            }
        }
    }
    Ok(format!("{identities} (P, n, r) identities exact"))
}

fn c3_scaling() -> Outcome {
    let p = poly("d^2");
    let mut notes = Vec::new();
    for n in [1_000u64, 10_000, 100_000] {
        let r = (n as f64).powf(0.6).round() as u64;
        let cfg = ExperimentConfig::new(n, p.clone(), r, 10_000, 0xC3 + n);
        let row = estimate_containment_probability(&cfg).map_err(|e| e.to_string())?;
        let expected = row.expected_count.to_f64().unwrap();
        let z = (row.mean_count - expected) / row.se_count;
        ensure!(z.abs() <= 3.0, "n={n} r={r}: mean {} vs {expected}, z={z:.2}", row.mean_count);
        let normalized = expected / ((n as f64).powf(0.5 - 1.0) * (r * r) as f64);
        ensure!(
            (0.3..=1.0).contains(&normalized),
            "n={n} r={r}: normalized expectation {normalized:.4} outside [0.3, 1]"
        );
        notes.push(format!("n={n} z={z:+.2} norm={normalized:.3}"));
    }
    Ok(notes.join("; "))
}

fn c4_threshold_exponent() -> Outcome {
    let opts = ThresholdOptions {
        property: Property::Containment,
        target: 0.5,
        trials_per_probe: 400,
        seed: 0xC4,
        ..ThresholdOptions::default()
    };
    let grid = [1_000, 3_000, 10_000, 30_000, 100_000];
    let scan = threshold_scan(&grid, &poly("d^2"), &opts).map_err(|e| e.to_string())?;
    let stars: Vec<String> = scan
        .rows
        .iter()
        .map(|row| format!("{}:{}", row.n, row.r_star.map_or("-".into(), |r| r.to_string())))
        .collect();
    ensure!(scan.rows.iter().all(|row| row.valid), "invalid rows: {stars:?}");
    let slope = scan.slope.ok_or("no slope")?;
    ensure!(
        (slope - 0.25).abs() <= 0.05,
        "slope {slope:.4} outside 0.25 ± 0.05 (r* {})",
        stars.join(" ")
    );
    Ok(format!("slope {slope:.4}; r* {}", stars.join(" ")))
}

fn c5_density_monotonicity() -> Outcome {
    let n = 512u64;
    let trials = 300u64;
    let mut fractions = Vec::new();
    let mut flags: Vec<Vec<f64>> = Vec::new();
    for c in [1.0f64, 2.0, 4.0, 8.0] {
        let r = (c * (n as f64).sqrt()).round() as u64;
        let cfg = ExperimentConfig::new(n, poly("d^2"), r, trials, 0xC5).with_delta(ratio(1, 2));
        let records = run_trials(&cfg).map_err(|e| e.to_string())?;
        let x: Vec<f64> = records
            .iter()
            .map(|t| (t.verdict == Some(Verdict::NotDense)) as u8 as f64)
            .collect();
        let unknown = records.iter().filter(|t| t.verdict == Some(Verdict::Unknown)).count();
        fractions.push((c, r, x.iter().sum::<f64>() / trials as f64, unknown as f64 / trials as f64));
        flags.push(x);
    }
    let shown: Vec<String> = fractions
        .iter()
        .map(|(c, r, f, u)| format!("C={c} r={r} not_dense={f:.3} unknown={u:.3}"))
        .collect();
    for w in fractions.windows(2) {
        ensure!(w[1].2 <= w[0].2, "not monotone: {}", shown.join(", "));
    }
    // Trials share seed substreams across C, so pair them by index.
    let diffs: Vec<f64> = flags[0].iter().zip(&flags[3]).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / trials as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let sigma = (var / trials as f64).sqrt();
    ensure!(
        mean > 3.0 * sigma,
        "difference {mean:.4} not above 3σ = {:.4}; {}",
        3.0 * sigma,
        shown.join(", ")
    );
    Ok(format!("{}; paired diff {mean:.3}, σ {sigma:.4}", shown.join(", ")))
}

fn c6_adversary_oracle() -> Outcome {
    const N: u64 = 16;
    let is_square = |x: u64| {
        let s = (x as f64).sqrt() as u64;
        (s.saturating_sub(1)..=s + 1).any(|t| t * t == x)
    };
    // Bit i stands for element i + 1.
    let mut independent = vec![true; 1 << N];
    for bits in 1usize..(1 << N) {
        let low = bits.trailing_zeros() as u64;
        let rest = bits & (bits - 1);
        independent[bits] = independent[rest]
            && (0..N).all(|j| rest >> j & 1 == 0 || !is_square(j.abs_diff(low)));
    }
    let p = poly("d^2");
    let opts = AdversaryOptions::default();
    let mut submasks = 0u64;
    for bits in 0usize..(1 << N) {
        let mut best = 0;
        let mut sub = bits;
        loop {
            if independent[sub] {
                best = best.max(sub.count_ones() as u64);
            }
            submasks += 1;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & bits;
        }
        let r = SubsetMask::from_bits(N, bits as u64).unwrap();
        let got = max_avoiding_subset_exact(&r, &p, N, &opts).map_err(|e| e.to_string())?;
        ensure!(
            got.status == AvoidanceStatus::Exact && got.lower_bound == best && got.upper_bound == best,
            "R={bits:#x}: got [{}, {}] {:?}, brute force {best}",
            got.lower_bound,
            got.upper_bound,
            got.status
        );
        let witness: usize = got.witness.iter().map(|x| 1usize << (x - 1)).sum();
        ensure!(
            witness & !bits == 0 && independent[witness] && got.witness.len() == best,
            "R={bits:#x}: bad witness {:?}",
            got.witness.to_vec()
        );
    }
    let ten = max_avoiding_subset_exact(&SubsetMask::full(10), &p, 10, &opts).unwrap();
    ensure!(ten.lower_bound == 4 && ten.upper_bound == 4, "R=[10]: {ten:?}");
    Ok(format!("65536 subsets agree ({submasks} submasks brute-forced); [10] -> 4"))
}

fn c7_bad_subset_decay() -> Outcome {
    let n = 30u64;
    let p = poly("d^2");
    let opts = BadCountOptions::default();
    let counts: Vec<u64> = (2..=6)
        .map(|s| count_bad_subsets(n, s, &p, &opts))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    // Pairs with a square difference: 29 + 26 + 21 + 14 + 5 = 95.
    ensure!(counts[0] == 435 - 95, "s=2 count {} != 340", counts[0]);
    let fractions: Vec<BigRational> = (2..=6u64)
        .zip(&counts)
        .map(|(s, &c)| BigRational::new(c.into(), binomial(n, s).into()))
        .collect();
    let mut steps = Vec::new();
    for w in fractions.windows(2) {
        ensure!(w[1] < w[0], "not strictly decreasing: {counts:?}");
        let step = &w[1] / &w[0];
        ensure!(step <= ratio(9, 10), "step ratio {step} > 0.9; counts {counts:?}");
        steps.push(format!("{:.3}", step.to_f64().unwrap()));
    }
    Ok(format!("counts {counts:?}; step ratios {}", steps.join(" ")))
}

fn c8_union_bound() -> Outcome {
    const MAX: usize = 120;
    // Pascal's rule only: no factorials, no multiplicative formula.
    let mut pascal: Vec<Vec<BigUint>> = Vec::with_capacity(MAX + 1);
    for n in 0..=MAX {
        let mut row = vec![BigUint::one(); n + 1];
        for k in 1..n {
            row[k] = &pascal[n - 1][k - 1] + &pascal[n - 1][k];
        }
        pascal.push(row);
    }
    let c = |n: u64, k: u64| -> BigRational {
        BigRational::new(pascal[n as usize][k as usize].clone().into(), 1.into())
    };
    let mut ones = 0;
    for n in 1..=MAX as u64 {
        for s in 0..=n {
            let v = union_bound_value(&BigRational::one(), n, s, s).map_err(|e| e.to_string())?;
            ensure!(v.is_one(), "alpha=1 n={n} s=r={s}: {v}");
            ones += 1;
        }
    }
    let mut spots = 0;
    for alpha in [ratio(1, 2), ratio(2, 3), ratio(1, 7), ratio(9, 10), BigRational::one()] {
        for (n, s, r) in [(7, 3, 3), (20, 3, 8), (50, 5, 25), (64, 10, 40), (100, 7, 60), (120, 30, 90), (120, 0, 5)] {
            let got = union_bound_value(&alpha, n, s, r).map_err(|e| e.to_string())?;
            let mut power = BigRational::one();
            for _ in 0..s {
                power *= &alpha;
            }
            let want = power * c(n, s) * c(n - s, r - s) / c(n, r);
            ensure!(got == want, "alpha={alpha} n={n} s={s} r={r}: {got} vs {want}");
            spots += 1;
        }
    }
    ensure!(
        union_bound_value(&ratio(1, 2), 10, 0, 4).unwrap() == BigRational::one(),
        "s=0 should give 1"
    );
    ensure!(!binomial(MAX as u64, 60).is_zero(), "binomial underflow");
    Ok(format!("{ones} alpha=1 identities, {spots} spot values exact"))
}

fn c9_sampling() -> Outcome {
    let draws = 20_000u64;
    let mut counts = [0u64; 64];
    for i in 0..draws {
        let s = sample_subset(6, 3, &mut trial_rng(0xC9, i)).map_err(|e| e.to_string())?;
        ensure!(s.len() == 3, "draw {i} has size {}", s.len());
        counts[s.words()[0] as usize] += 1;
    }
    let cells: Vec<u64> = (0..64usize)
        .filter(|b| b.count_ones() == 3)
        .map(|b| counts[b])
        .collect();
    ensure!(cells.len() == 20, "expected 20 cells");
    ensure!(cells.iter().sum::<u64>() == draws, "draws outside the 3-subsets");
    let expected = draws as f64 / 20.0;
    let chi2: f64 = cells.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    // Upper 0.001 quantile of chi-square with 19 degrees of freedom.
    const CRITICAL: f64 = 43.820_195_964_517_53;
    ensure!(chi2 < CRITICAL, "chi2 = {chi2:.3} >= {CRITICAL}");

    let base = ExperimentConfig::new(2_000, poly("d^2"), 40, 500, 0xC9).with_delta(ratio(1, 2));
    let serial = run_trials(&base.clone().with_parallelism(Parallelism(1))).map_err(|e| e.to_string())?;
    let wide = run_trials(&base.with_parallelism(Parallelism(8))).map_err(|e| e.to_string())?;
    ensure!(serial == wide, "trial streams differ between parallelism 1 and 8");
    Ok(format!("chi2 = {chi2:.2} < {CRITICAL:.2}; 500 trials identical at parallelism 1 and 8"))
}

fn c10_lemma_accounting() -> Outcome {
    let params = LemmaParams::new(
        10_000,
        poly("d^2"),
        40,
        LemmaParams::epsilon_for_alpha(&ratio(1, 2)),
        BigRational::one(),
    );
    let render = |parallelism| -> Result<String, String> {
        let traces = simulate_traces(&params, 100, 0xC10, parallelism).map_err(|e| e.to_string())?;
        let report = trace_statistics(&traces).map_err(|e| e.to_string())?;
        let mut out = serde_json::to_string(&report).unwrap();
        for t in &traces {
            out.push('\n');
            out.push_str(&serde_json::to_string(t).unwrap());
        }
        let broken: Vec<u64> = traces.iter().filter(|t| !t.chain_holds()).map(|t| t.id).collect();
        if !broken.is_empty() || !report.chain_holds {
            return Err(format!("chain fails in traces {broken:?}"));
        }
        Ok(out)
    };
    let first = render(Parallelism(1))?;
    let again = render(Parallelism(1))?;
    let wide = render(Parallelism::AUTO)?;
    ensure!(first == again && first == wide, "reports differ across reruns");
    Ok(format!("chain holds in 100/100 traces; {} report bytes identical across 3 runs", first.len()))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "counting oracle", limit: Duration::from_secs(10), run: c1_counting_oracle },
        Criterion { id: 2, name: "expectation identity", limit: Duration::from_secs(60), run: c2_expectation_identity },
        Criterion { id: 3, name: "instance scaling", limit: Duration::from_secs(300), run: c3_scaling },
        Criterion { id: 4, name: "containment threshold exponent", limit: Duration::from_secs(600), run: c4_threshold_exponent },
        Criterion { id: 5, name: "density monotonicity", limit: Duration::from_secs(600), run: c5_density_monotonicity },
        Criterion { id: 6, name: "adversary oracle", limit: Duration::from_secs(60), run: c6_adversary_oracle },
        Criterion { id: 7, name: "bad-subset decay", limit: Duration::from_secs(60), run: c7_bad_subset_decay },
        Criterion { id: 8, name: "union bound evaluator", limit: Duration::from_secs(1), run: c8_union_bound },
        Criterion { id: 9, name: "sampling uniformity", limit: Duration::from_secs(10), run: c9_sampling },
        Criterion { id: 10, name: "lemma-sim accounting", limit: Duration::from_secs(60), run: c10_lemma_accounting },
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.trim_start_matches('c').parse().ok())
        .collect();

    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for c in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > c.limit => Err(format!("took {elapsed:.2?}, limit {:?}", c.limit)),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {:>2} {} [{elapsed:.2?}]: {detail}", c.id, c.name);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}
