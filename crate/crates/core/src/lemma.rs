//! Simulation of the ordered selection process behind the bad-set counting lemma.
//!
//! Vertices `v_1, v_2, ...` are drawn one at a time, each uniformly from the
//! vertices that are neither chosen nor adjacent to a chosen vertex, so the
//! chosen set stays instance-free. `N_k` is the neighbourhood of the first `k`
//! choices. Step `k + 1` is flagged (the choice lies in `B_{k+1}`) when it adds
//! at most `c_epsilon * epsilon * avg_degree` new neighbours.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{min_sf_ratio_exhaustive, DifferenceSet, ExhaustiveOptions};
use crate::mask::{word_count, BitIter};
use crate::montecarlo::trial_rng;
use crate::output::ratio_string;
use crate::par::{map_indexed, Parallelism};
use crate::poly::Polynomial;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub n: u64,
    pub poly: Polynomial,
    pub s: u64,
    #[serde(with = "ratio_string")]
    pub epsilon: BigRational,
    #[serde(with = "ratio_string")]
    pub c_epsilon: BigRational,
}

impl LemmaParams {
    pub fn new(n: u64, poly: Polynomial, s: u64, epsilon: BigRational, c_epsilon: BigRational) -> Self {
        Self {
            n,
            poly,
            s,
            epsilon,
            c_epsilon,
        }
    }

    /// `epsilon = alpha^2 / 6`.
    pub fn epsilon_for_alpha(alpha: &BigRational) -> BigRational {
        alpha * alpha / BigRational::from_integer(6.into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub id: u64,
    pub params: LemmaParams,
    /// Edges per left vertex of the instance graph on `[n]`.
    #[serde(with = "ratio_string")]
    pub average_degree: BigRational,
    pub chosen: Vec<u64>,
    /// `|N_1|, ..., |N_len|`.
    pub neighborhood_sizes: Vec<u64>,
    /// Flags for steps `2..=len`: `true` when `v_{k+1} ∈ B_{k+1}`.
    pub b_flags: Vec<bool>,
    /// Steps whose choice is outside `B_{k+1}`.
    pub s_prime: u64,
    /// The process ran out of admissible vertices before `s` choices.
    pub truncated: bool,
}

impl SelectionTrace {
    /// `c_epsilon * epsilon * avg_degree`.
    pub fn growth_threshold(&self) -> BigRational {
        &self.params.c_epsilon * &self.params.epsilon * &self.average_degree
    }

    pub fn growth(&self) -> impl Iterator<Item = u64> + '_ {
        self.neighborhood_sizes.windows(2).map(|w| w[1] - w[0])
    }

    /// Recomputes the flags from the stored neighbourhood sizes under new parameters.
    pub fn reflag(&self, epsilon: BigRational, c_epsilon: BigRational) -> SelectionTrace {
        let mut out = self.clone();
        out.params.epsilon = epsilon;
        out.params.c_epsilon = c_epsilon;
        let threshold = out.growth_threshold();
        out.b_flags = self.growth().map(|g| big(g) <= threshold).collect();
        out.s_prime = out.b_flags.iter().filter(|&&f| !f).count() as u64;
        out
    }

    pub fn final_neighborhood(&self) -> u64 {
        self.neighborhood_sizes.last().copied().unwrap_or(0)
    }

    /// `n >= |N_s| >= s' * c_epsilon * epsilon * avg_degree`, exactly.
    pub fn chain_holds(&self) -> bool {
        let last = self.final_neighborhood();
        last <= self.params.n && big(last) >= big(self.s_prime) * self.growth_threshold()
    }
}

fn big(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// One run of the ordered selection process on `[n]`.
pub fn simulate_selection<R: Rng + ?Sized>(
    params: &LemmaParams,
    ds: &DifferenceSet,
    id: u64,
    rng: &mut R,
) -> Result<SelectionTrace> {
    let n = params.n;
    if ds.n() != n {
        return Err(Error::WidthMismatch { mask: ds.n(), n });
    }
    if params.s > n {
        return Err(Error::InvalidArgument(format!("s = {} exceeds n = {n}", params.s)));
    }
    let offsets: Vec<u64> = ds.values().collect();
    let average_degree = ds.average_degree()?;
    let threshold = &params.c_epsilon * &params.epsilon * &average_degree;

    let words = word_count(n);
    let mut neighbours = vec![0u64; words];
    let mut chosen_bits = vec![0u64; words];
    let mut neighbour_count = 0u64;
    let mut chosen = Vec::with_capacity(params.s as usize);
    let mut sizes = Vec::with_capacity(params.s as usize);
    let mut flags = Vec::new();
    let mut truncated = false;

    let set = |bits: &mut [u64], x: u64| -> bool {
        let (w, b) = (((x - 1) / 64) as usize, (x - 1) % 64);
        let fresh = bits[w] >> b & 1 == 0;
        bits[w] |= 1 << b;
        fresh
    };

    for step in 0..params.s {
        let blocked = neighbour_count + step;
        let available = n - blocked;
        if available == 0 {
            truncated = true;
            break;
        }
        let pick = rng.random_range(0..available);
        let v = nth_free(&neighbours, &chosen_bits, n, pick);
        set(&mut chosen_bits, v);
        chosen.push(v);

        let before = neighbour_count;
        for &d in &offsets {
            if v + d <= n && set(&mut neighbours, v + d) {
                neighbour_count += 1;
            }
            if v > d && set(&mut neighbours, v - d) {
                neighbour_count += 1;
            }
        }
        sizes.push(neighbour_count);
        if step > 0 {
            flags.push(big(neighbour_count - before) <= threshold);
        }
    }

    let s_prime = flags.iter().filter(|&&f| !f).count() as u64;
    Ok(SelectionTrace {
        id,
        params: params.clone(),
        average_degree,
        chosen,
        neighborhood_sizes: sizes,
        b_flags: flags,
        s_prime,
        truncated,
    })
}

/// Position of the `pick`-th (0-based) element outside both masks.
fn nth_free(neighbours: &[u64], chosen: &[u64], n: u64, mut pick: u64) -> u64 {
    for (w, (a, b)) in neighbours.iter().zip(chosen).enumerate() {
        let mut free = !(a | b);
        let base = w as u64 * 64;
        if base + 64 > n {
            free &= (1u64 << (n - base)) - 1;
        }
        let c = free.count_ones() as u64;
        if pick < c {
            let bit = BitIter(free).nth(pick as usize).expect("pick < popcount");
            return base + bit as u64 + 1;
        }
        pick -= c;
    }
    unreachable!("pick exceeds the number of free vertices")
}

/// `count` traces; trace `i` draws from substream `(seed, i)`.
pub fn simulate_traces(
    params: &LemmaParams,
    count: u64,
    seed: u64,
    parallelism: Parallelism,
) -> Result<Vec<SelectionTrace>> {
    let ds = DifferenceSet::new(&params.poly, params.n)?;
    map_indexed(count, parallelism, |i| {
        simulate_selection(params, &ds, i, &mut trial_rng(seed, i))
    })
    .into_iter()
    .collect()
}

/// Minimum ratio from an exhaustive scan at a small calibration size, as a
/// stand-in for the unknown constant `c(epsilon)`.
pub fn suggest_c_epsilon(poly: &Polynomial, calibration_n: u64, epsilon: &BigRational) -> Result<BigRational> {
    Ok(min_sf_ratio_exhaustive(calibration_n, poly, epsilon, ExhaustiveOptions::default())?.min_ratio)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub params: LemmaParams,
    pub traces: u64,
    pub mean_s_prime: f64,
    pub max_s_prime: u64,
    pub mean_final_neighborhood: f64,
    pub truncated_fraction: f64,
    /// Fraction of flagged steps over all traces.
    pub b_fraction: f64,
    /// `(c_epsilon * epsilon)^-1 * n / avg_degree`.
    #[serde(with = "ratio_string")]
    pub s_prime_bound: BigRational,
    /// Ids of traces with `s' > s_prime_bound`.
    pub violations: Vec<u64>,
    /// Whether `n >= |N_s| >= s' * c_epsilon * epsilon * avg_degree` held in every trace.
    pub chain_holds: bool,
}

pub fn trace_statistics(traces: &[SelectionTrace]) -> Result<TraceReport> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidArgument("no traces".into()))?;
    if traces
        .iter()
        .any(|t| t.params != first.params || t.average_degree != first.average_degree)
    {
        return Err(Error::MixedParameters);
    }
    let count = traces.len() as f64;
    let threshold = first.growth_threshold();
    let s_prime_bound = if threshold.is_zero() {
        // Nothing can be ruled out; report n as the trivial bound on s'.
        big(first.params.n)
    } else {
        big(first.params.n) / threshold
    };
    let violations = traces
        .iter()
        .filter(|t| big(t.s_prime) > s_prime_bound)
        .map(|t| t.id)
        .collect();
    let flags: u64 = traces.iter().map(|t| t.b_flags.len() as u64).sum();
    let flagged: u64 = traces
        .iter()
        .map(|t| t.b_flags.iter().filter(|&&f| f).count() as u64)
        .sum();
    Ok(TraceReport {
        params: first.params.clone(),
        traces: traces.len() as u64,
        mean_s_prime: traces.iter().map(|t| t.s_prime as f64).sum::<f64>() / count,
        max_s_prime: traces.iter().map(|t| t.s_prime).max().unwrap_or(0),
        mean_final_neighborhood: traces.iter().map(|t| t.final_neighborhood() as f64).sum::<f64>()
            / count,
        truncated_fraction: traces.iter().filter(|t| t.truncated).count() as f64 / count,
        b_fraction: if flags == 0 { 0.0 } else { flagged as f64 / flags as f64 },
        s_prime_bound,
        violations,
        chain_holds: traces.iter().all(SelectionTrace::chain_holds),
    })
}

impl TraceReport {
    pub fn s_prime_bound_f64(&self) -> f64 {
        self.s_prime_bound.to_f64().unwrap_or(f64::NAN)
    }
}
