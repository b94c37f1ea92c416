//! Difference sets, the instance graph on `[n]`, and instance counting.
//!
//! The instance graph joins `u` to `v` when `v - u = P(d)` for some `d >= 1`.
//! Its edge offsets are the values of `P` that land in `[1, n - 1]`, which the
//! [`DifferenceSet`] stores with multiplicities. Counting instances inside a
//! subset `A` reduces to one shifted AND-popcount per offset.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::SubsetMask;
use crate::par::{map_indexed, Parallelism};
use crate::poly::Polynomial;

/// Most `d` values a difference-set enumeration will visit.
const MAX_ENUMERATED_D: u64 = 1 << 26;

/// The offsets `{P(d) : d >= 1} ∩ [1, n - 1]` with their multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DifferenceSet {
    n: u64,
    /// Sorted by value; `(value, multiplicity)`.
    entries: Vec<(u64, u64)>,
}

impl DifferenceSet {
    /// Enumerates `d = 1, 2, ...` until `P` provably stays outside `[1, n - 1]`.
    ///
    /// For `n < 2` the set is empty.
    pub fn new(poly: &Polynomial, n: u64) -> Result<Self> {
        let mut values: BTreeMap<u64, u64> = BTreeMap::new();
        let coeffs: Vec<i128> = poly.coefficients().iter().map(|&c| c as i128).collect();
        let lead = poly.leading_coefficient() as i128;
        let mass: i128 = coeffs[..coeffs.len() - 1].iter().map(|c| c.abs()).sum();
        let lower_degree = poly.degree() - 1;

        for d in 1u64.. {
            if d > MAX_ENUMERATED_D {
                return Err(Error::Budget(format!(
                    "difference set of {} on [{n}] needs more than {MAX_ENUMERATED_D} evaluations",
                    poly.expression()
                )));
            }
            let di = d as i128;
            // An overflowing value is far outside [1, n - 1].
            if let Some(v) = horner_checked(&coeffs, di) {
                if v >= 1 && v < n as i128 {
                    *values.entry(v as u64).or_default() += 1;
                }
            }
            // For d >= 1: P(d) >= d^(k-1) * (lead * d - mass) when lead > 0,
            // and P(d) <= d^(k-1) * (mass - |lead| * d) when lead < 0.
            if lead > 0 {
                let gap = lead * di - mass;
                if gap > 0 {
                    let floor = di
                        .checked_pow(lower_degree)
                        .and_then(|p| p.checked_mul(gap));
                    if floor.is_none_or(|f| f >= n as i128) {
                        break;
                    }
                }
            } else if -lead * di >= mass {
                break;
            }
        }
        Ok(Self {
            n,
            entries: values.into_iter().collect(),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|&(v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of `d >= 1` with `P(d) = v`.
    pub fn multiplicity(&self, v: u64) -> u64 {
        self.entries
            .binary_search_by_key(&v, |&(value, _)| value)
            .map_or(0, |i| self.entries[i].1)
    }

    /// Sum of multiplicities: the number of admissible `d`.
    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|&(_, m)| m).sum()
    }

    /// `e([n], [n])`: pairs `(a, d)` with `a >= 1`, `a + P(d) <= n`.
    pub fn edge_count_total(&self) -> Result<u64> {
        self.entries.iter().try_fold(0u64, |acc, &(v, m)| {
            m.checked_mul(self.n - v)
                .and_then(|e| acc.checked_add(e))
                .ok_or_else(|| Error::Overflow("edge count".into()))
        })
    }

    /// Edges per left vertex, `e([n], [n]) / n`.
    pub fn average_degree(&self) -> Result<BigRational> {
        Ok(BigRational::new(
            self.edge_count_total()?.into(),
            self.n.max(1).into(),
        ))
    }

    /// Pairs `(a, d)` with `a ∈ A`, `a + P(d) ∈ A`.
    pub fn count_instances(&self, a: &SubsetMask) -> Result<u64> {
        self.count_instances_with(a, CountStrategy::Auto)
    }

    pub fn count_instances_with(&self, a: &SubsetMask, strategy: CountStrategy) -> Result<u64> {
        a.check_width(self.n)?;
        let total = match self.resolve(a, strategy) {
            CountStrategy::ElementProbe => {
                let mut total = 0u64;
                for x in a.iter() {
                    for &(v, m) in &self.entries {
                        if x + v > self.n {
                            break;
                        }
                        if a.contains(x + v) {
                            total += m;
                        }
                    }
                }
                total
            }
            _ => self
                .entries
                .iter()
                .map(|&(v, m)| m * a.shifted_overlap(v))
                .sum(),
        };
        Ok(total)
    }

    /// Whether `A` contains a nontrivial instance. Stops at the first hit.
    pub fn contains_instance(&self, a: &SubsetMask) -> Result<bool> {
        a.check_width(self.n)?;
        if a.len() < 2 {
            return Ok(false);
        }
        Ok(match self.resolve(a, CountStrategy::Auto) {
            CountStrategy::ElementProbe => a.iter().any(|x| {
                self.entries
                    .iter()
                    .take_while(|&&(v, _)| x + v <= self.n)
                    .any(|&(v, _)| a.contains(x + v))
            }),
            _ => self.entries.iter().any(|&(v, _)| a.has_shifted_overlap(v)),
        })
    }

    /// Unordered element pairs `{a, b} ⊆ A` with `b - a` an offset, ignoring multiplicity.
    pub fn count_distinct_pairs(&self, a: &SubsetMask) -> Result<u64> {
        a.check_width(self.n)?;
        Ok(self.values().map(|v| a.shifted_overlap(v)).sum())
    }

    fn resolve(&self, a: &SubsetMask, strategy: CountStrategy) -> CountStrategy {
        match strategy {
            CountStrategy::Auto if (a.len() as usize) < a.words().len() => {
                CountStrategy::ElementProbe
            }
            CountStrategy::Auto => CountStrategy::BitParallel,
            s => s,
        }
    }
}

/// How [`DifferenceSet::count_instances_with`] walks the subset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountStrategy {
    /// Bit-parallel when the subset is dense, per-element probing when sparse.
    Auto,
    /// One shifted AND-popcount over the whole mask per offset.
    BitParallel,
    /// For each member `x` and offset `v`, test membership of `x + v`.
    ElementProbe,
}

fn horner_checked(coeffs: &[i128], d: i128) -> Option<i128> {
    coeffs
        .iter()
        .rev()
        .try_fold(0i128, |acc, &c| acc.checked_mul(d)?.checked_add(c))
}

pub fn difference_set(poly: &Polynomial, n: u64) -> Result<DifferenceSet> {
    DifferenceSet::new(poly, n)
}

pub fn edge_count_total(poly: &Polynomial, n: u64) -> Result<u64> {
    DifferenceSet::new(poly, n)?.edge_count_total()
}

pub fn average_degree(poly: &Polynomial, n: u64) -> Result<BigRational> {
    DifferenceSet::new(poly, n)?.average_degree()
}

pub fn count_instances(a: &SubsetMask, poly: &Polynomial, n: u64) -> Result<u64> {
    a.check_width(n)?;
    DifferenceSet::new(poly, n)?.count_instances(a)
}

pub fn contains_instance(a: &SubsetMask, poly: &Polynomial, n: u64) -> Result<bool> {
    a.check_width(n)?;
    DifferenceSet::new(poly, n)?.contains_instance(a)
}

/// `floor(n^(1/k))`.
pub fn integer_root(n: u64, k: u32) -> u64 {
    n.nth_root(k)
}

/// `e(A,A) * n / (|A|^2 * floor(n^(1/k)))` with `k = deg P`.
pub fn sf_ratio(a: &SubsetMask, poly: &Polynomial, n: u64) -> Result<BigRational> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let e = count_instances(a, poly, n)?;
    Ok(sf_ratio_from_count(e, a.len(), n, poly.degree()))
}

fn sf_ratio_from_count(e: u64, size: u64, n: u64, k: u32) -> BigRational {
    let numer = BigInt::from(e) * BigInt::from(n);
    let denom = BigInt::from(size) * BigInt::from(size) * BigInt::from(integer_root(n, k));
    BigRational::new(numer, denom)
}

#[derive(Clone, Copy, Debug)]
pub struct ExhaustiveOptions {
    /// Largest `n` the scan accepts.
    pub cap: u64,
    pub parallelism: Parallelism,
}

impl Default for ExhaustiveOptions {
    fn default() -> Self {
        Self {
            cap: 22,
            parallelism: Parallelism::AUTO,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SfScan {
    #[serde(with = "crate::output::ratio_string")]
    pub min_ratio: BigRational,
    pub witness: SubsetMask,
    pub witness_instances: u64,
    pub subsets_examined: u64,
}

/// Minimum of [`sf_ratio`] over every `A ⊆ [n]` with `|A| >= eps * n`.
///
/// Ties keep the subset with the smallest bit pattern.
pub fn min_sf_ratio_exhaustive(
    n: u64,
    poly: &Polynomial,
    eps: &BigRational,
    opts: ExhaustiveOptions,
) -> Result<SfScan> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if n > opts.cap || n > 63 {
        return Err(Error::Budget(format!(
            "exhaustive scan over 2^{n} subsets exceeds the cap n <= {}",
            opts.cap.min(63)
        )));
    }
    if eps < &BigRational::zero() || eps > &BigRational::from_integer(1.into()) {
        return Err(Error::InvalidArgument(format!("eps = {eps} not in [0, 1]")));
    }
    let min_size = (eps * BigRational::from_integer(n.into()))
        .ceil()
        .to_integer()
        .try_into()
        .unwrap_or(0u64)
        .max(1);

    let ds = DifferenceSet::new(poly, n)?;
    let offsets: Vec<(u64, u64)> = ds.entries().to_vec();
    let instances = |m: u64| -> u64 {
        offsets
            .iter()
            .map(|&(v, mult)| mult * (m & (m >> v)).count_ones() as u64)
            .sum()
    };

    let chunk_bits = n.min(12);
    let chunks = 1u64 << chunk_bits;
    let per_chunk = 1u64 << (n - chunk_bits);

    // (instances, size, mask) of the chunk minimum, plus subsets examined.
    let partial = map_indexed(chunks, opts.parallelism, |c| {
        let mut best: Option<(u64, u64, u64)> = None;
        let mut examined = 0u64;
        for m in c * per_chunk..(c + 1) * per_chunk {
            let size = m.count_ones() as u64;
            if size < min_size {
                continue;
            }
            examined += 1;
            let e = instances(m);
            if best.is_none_or(|b| ratio_less(e, size, b.0, b.1)) {
                best = Some((e, size, m));
            }
        }
        (best, examined)
    });

    let mut best: Option<(u64, u64, u64)> = None;
    let mut examined = 0;
    for (candidate, count) in partial {
        examined += count;
        if let Some(c) = candidate {
            if best.is_none_or(|b| ratio_less(c.0, c.1, b.0, b.1)) {
                best = Some(c);
            }
        }
    }
    let (e, size, m) = best.ok_or_else(|| {
        Error::InvalidArgument(format!("no subset of [{n}] has size >= {min_size}"))
    })?;
    Ok(SfScan {
        min_ratio: sf_ratio_from_count(e, size, n, poly.degree()),
        witness: SubsetMask::from_bits(n, m)?,
        witness_instances: e,
        subsets_examined: examined,
    })
}

/// `e1 / s1^2 < e2 / s2^2`.
fn ratio_less(e1: u64, s1: u64, e2: u64, s2: u64) -> bool {
    (e1 as u128) * (s2 as u128 * s2 as u128) < (e2 as u128) * (s1 as u128 * s1 as u128)
}
