//! Avoidance search and density verdicts.
//!
//! A subset of `R` avoids the configuration exactly when it is an independent
//! set of the instance graph induced on `R`, so the largest avoiding subset is
//! a maximum independent set. Small graphs are solved exactly by
//! branch-and-bound; larger ones get a greedy witness plus a clique-cover
//! upper bound.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instances::DifferenceSet;
use crate::mask::{word_count, BitIter, SubsetMask};
use crate::par::{map_indexed, Parallelism};
use crate::poly::Polynomial;

// Word-slice bitset helpers over an index space.

fn bit_test(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn bit_set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn bit_clear(bits: &mut [u64], i: usize) {
    bits[i / 64] &= !(1 << (i % 64));
}

fn popcount(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

fn popcount_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

fn ones(bits: &[u64]) -> impl Iterator<Item = usize> + '_ {
    bits.iter()
        .enumerate()
        .flat_map(|(w, &word)| BitIter(word).map(move |b| w * 64 + b as usize))
}

/// The instance graph induced on a subset `R ⊆ [n]`.
///
/// Vertex `i` is the `i`-th smallest element of `R`; `u ~ v` iff `|v - u|` is
/// an offset of the difference set.
#[derive(Clone, Debug)]
pub struct InstanceGraph {
    n: u64,
    vertices: Vec<u64>,
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl InstanceGraph {
    pub fn induced(r: &SubsetMask, ds: &DifferenceSet) -> Result<Self> {
        r.check_width(ds.n())?;
        let vertices = r.to_vec();
        let m = vertices.len();
        let words = m.div_ceil(64).max(1);
        let mut rows = vec![vec![0u64; words]; m];
        for (i, &x) in vertices.iter().enumerate() {
            for v in ds.values() {
                if x + v > ds.n() {
                    break;
                }
                if r.contains(x + v) {
                    let j = vertices
                        .binary_search(&(x + v))
                        .expect("member of R is a vertex");
                    bit_set(&mut rows[i], j);
                    bit_set(&mut rows[j], i);
                }
            }
        }
        Ok(Self {
            n: ds.n(),
            vertices,
            words,
            rows,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Elements of `R`, ascending.
    pub fn vertices(&self) -> &[u64] {
        &self.vertices
    }

    pub fn degree(&self, i: usize) -> usize {
        popcount(&self.rows[i])
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        bit_test(&self.rows[i], j)
    }

    /// Edges as element pairs `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for j in ones(row).filter(|&j| j > i) {
                out.push((self.vertices[i], self.vertices[j]));
            }
        }
        out
    }

    fn all(&self) -> Vec<u64> {
        let mut bits = vec![0u64; self.words];
        for i in 0..self.vertex_count() {
            bit_set(&mut bits, i);
        }
        bits
    }

    fn to_mask(&self, bits: &[u64]) -> SubsetMask {
        SubsetMask::from_elements(self.n, ones(bits).map(|i| self.vertices[i]))
            .expect("vertices lie in [n]")
    }

    /// Number of cliques in a greedy clique cover of the vertices in `cand`.
    /// An independent set meets each clique at most once.
    fn clique_cover_bound(&self, cand: &[u64]) -> usize {
        // Each clique keeps the set of vertices adjacent to all of its members.
        let mut commons: Vec<Vec<u64>> = Vec::new();
        for v in ones(cand) {
            match commons.iter_mut().find(|c| bit_test(c, v)) {
                Some(common) => {
                    for (c, r) in common.iter_mut().zip(&self.rows[v]) {
                        *c &= r;
                    }
                }
                None => {
                    let common = self.rows[v].iter().zip(cand).map(|(r, c)| r & c).collect();
                    commons.push(common);
                }
            }
        }
        commons.len()
    }

    /// Minimum-degree-first greedy, then one pass of (1,2)-swaps.
    fn greedy_independent_set(&self) -> Vec<u64> {
        let mut cand = self.all();
        let mut sol = vec![0u64; self.words];
        while popcount(&cand) > 0 {
            let v = ones(&cand)
                .min_by_key(|&v| (popcount_and(&self.rows[v], &cand), v))
                .expect("nonempty");
            bit_set(&mut sol, v);
            bit_clear(&mut cand, v);
            for (c, r) in cand.iter_mut().zip(&self.rows[v]) {
                *c &= !r;
            }
        }
        self.two_improvement_pass(&mut sol);
        sol
    }

    fn two_improvement_pass(&self, sol: &mut [u64]) {
        let members: Vec<usize> = ones(sol).collect();
        for x in members {
            if !bit_test(sol, x) {
                continue;
            }
            // Non-solution neighbours of x whose only solution neighbour is x.
            let tight: Vec<usize> = ones(&self.rows[x])
                .filter(|&u| !bit_test(sol, u) && popcount_and(&self.rows[u], sol) == 1)
                .collect();
            let pair = tight.iter().enumerate().find_map(|(a, &u)| {
                tight[a + 1..]
                    .iter()
                    .find(|&&w| !self.adjacent(u, w))
                    .map(|&w| (u, w))
            });
            if let Some((u, w)) = pair {
                bit_clear(sol, x);
                bit_set(sol, u);
                bit_set(sol, w);
                for f in 0..self.vertex_count() {
                    if !bit_test(sol, f) && popcount_and(&self.rows[f], sol) == 0 {
                        bit_set(sol, f);
                    }
                }
            }
        }
    }

    /// Scalable lower bound: greedy witness with a clique-cover upper bound.
    pub fn avoid_greedy(&self) -> AvoidanceResult {
        let sol = self.greedy_independent_set();
        let lower = popcount(&sol) as u64;
        let upper = self.clique_cover_bound(&self.all()) as u64;
        AvoidanceResult {
            lower_bound: lower,
            upper_bound: upper.max(lower),
            witness: self.to_mask(&sol),
            status: AvoidanceStatus::Bounded,
            nodes: 0,
        }
    }

    /// Branch-and-bound maximum independent set, stopping after `budget` nodes.
    pub fn avoid_exact(&self, budget: u64) -> AvoidanceResult {
        let greedy = self.greedy_independent_set();
        let mut search = BranchAndBound {
            g: self,
            best_size: popcount(&greedy),
            best: greedy,
            nodes: 0,
            budget,
            exhausted: false,
        };
        search.run(self.all(), vec![0u64; self.words], 0);
        let lower = search.best_size as u64;
        let (upper, status) = if search.exhausted {
            let bound = self.clique_cover_bound(&self.all()) as u64;
            (bound.max(lower), AvoidanceStatus::Bounded)
        } else {
            (lower, AvoidanceStatus::Exact)
        };
        AvoidanceResult {
            lower_bound: lower,
            upper_bound: upper,
            witness: self.to_mask(&search.best),
            status,
            nodes: search.nodes,
        }
    }
}

struct BranchAndBound<'g> {
    g: &'g InstanceGraph,
    best: Vec<u64>,
    best_size: usize,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl BranchAndBound<'_> {
    fn take(&self, cand: &mut [u64], chosen: &mut [u64], v: usize) {
        bit_set(chosen, v);
        bit_clear(cand, v);
        for (c, r) in cand.iter_mut().zip(&self.g.rows[v]) {
            *c &= !r;
        }
    }

    fn run(&mut self, mut cand: Vec<u64>, mut chosen: Vec<u64>, mut size: usize) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }

        // Vertices of degree <= 1 belong to some maximum independent set.
        loop {
            let mut changed = false;
            let snapshot: Vec<usize> = ones(&cand).collect();
            for v in snapshot {
                if bit_test(&cand, v) && popcount_and(&self.g.rows[v], &cand) <= 1 {
                    self.take(&mut cand, &mut chosen, v);
                    size += 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let remaining = popcount(&cand);
        if remaining == 0 {
            if size > self.best_size {
                self.best_size = size;
                self.best = chosen;
            }
            return;
        }
        if size + remaining <= self.best_size
            || size + self.g.clique_cover_bound(&cand) <= self.best_size
        {
            return;
        }

        let v = ones(&cand)
            .max_by_key(|&v| (popcount_and(&self.g.rows[v], &cand), std::cmp::Reverse(v)))
            .expect("nonempty");

        let mut with_cand = cand.clone();
        let mut with_chosen = chosen.clone();
        self.take(&mut with_cand, &mut with_chosen, v);
        self.run(with_cand, with_chosen, size + 1);

        bit_clear(&mut cand, v);
        self.run(cand, chosen, size);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AvoidanceStatus {
    Exact,
    Bounded,
}

/// A verified instance-free subset of `R` with bounds on the largest one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AvoidanceResult {
    pub lower_bound: u64,
    pub upper_bound: u64,
    pub witness: SubsetMask,
    pub status: AvoidanceStatus,
    /// Branch-and-bound nodes visited (0 for greedy).
    pub nodes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdversaryOptions {
    /// Largest `|R|` handed to the exact solver.
    pub exact_cap: usize,
    /// Node budget for one branch-and-bound run.
    pub budget: u64,
}

impl Default for AdversaryOptions {
    fn default() -> Self {
        Self {
            exact_cap: 64,
            budget: 1_000_000,
        }
    }
}

pub fn induced_instance_graph(r: &SubsetMask, poly: &Polynomial, n: u64) -> Result<InstanceGraph> {
    r.check_width(n)?;
    InstanceGraph::induced(r, &DifferenceSet::new(poly, n)?)
}

/// Exact largest avoiding subset of `R`; refuses `|R|` above `opts.exact_cap`.
pub fn max_avoiding_subset_exact(
    r: &SubsetMask,
    poly: &Polynomial,
    n: u64,
    opts: &AdversaryOptions,
) -> Result<AvoidanceResult> {
    if r.len() as usize > opts.exact_cap {
        return Err(Error::Budget(format!(
            "|R| = {} exceeds the exact-solver cap {}",
            r.len(),
            opts.exact_cap
        )));
    }
    Ok(induced_instance_graph(r, poly, n)?.avoid_exact(opts.budget))
}

pub fn max_avoiding_subset_greedy(
    r: &SubsetMask,
    poly: &Polynomial,
    n: u64,
) -> Result<AvoidanceResult> {
    Ok(induced_instance_graph(r, poly, n)?.avoid_greedy())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dense,
    NotDense,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Dense => "dense",
            Verdict::NotDense => "not_dense",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityVerdict {
    pub verdict: Verdict,
    pub evidence: AvoidanceResult,
}

impl Serialize for DensityVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("DensityVerdict", 3)?;
        st.serialize_field("verdict", self.verdict.as_str())?;
        st.serialize_field("witness", &self.evidence.witness)?;
        st.serialize_field(
            "bounds",
            &[self.evidence.lower_bound, self.evidence.upper_bound],
        )?;
        st.end()
    }
}

/// `size >= delta * total`, compared exactly.
fn meets_density(size: u64, delta: &BigRational, total: u64) -> bool {
    BigRational::from_integer(size.into()) >= delta * BigRational::from_integer(total.into())
}

/// Decides whether every subset of `R` of size at least `delta * |R|` contains an instance.
///
/// `NotDense` always carries an avoiding witness of size `>= delta * |R|`;
/// `Dense` is only returned from a completed exact search.
pub fn is_dense_with(
    ds: &DifferenceSet,
    r: &SubsetMask,
    delta: &BigRational,
    opts: &AdversaryOptions,
) -> Result<DensityVerdict> {
    if !delta.is_positive() || delta > &BigRational::one() {
        return Err(Error::InvalidArgument(format!("delta = {delta} not in (0, 1]")));
    }
    let graph = InstanceGraph::induced(r, ds)?;
    let greedy = graph.avoid_greedy();
    if meets_density(greedy.lower_bound, delta, r.len()) {
        return Ok(DensityVerdict {
            verdict: Verdict::NotDense,
            evidence: greedy,
        });
    }
    if graph.vertex_count() > opts.exact_cap {
        return Ok(DensityVerdict {
            verdict: Verdict::Unknown,
            evidence: greedy,
        });
    }
    let exact = graph.avoid_exact(opts.budget);
    let verdict = if meets_density(exact.lower_bound, delta, r.len()) {
        Verdict::NotDense
    } else if exact.status == AvoidanceStatus::Exact {
        Verdict::Dense
    } else {
        Verdict::Unknown
    };
    Ok(DensityVerdict {
        verdict,
        evidence: exact,
    })
}

pub fn is_dense(
    r: &SubsetMask,
    delta: &BigRational,
    poly: &Polynomial,
    n: u64,
    opts: &AdversaryOptions,
) -> Result<DensityVerdict> {
    r.check_width(n)?;
    is_dense_with(&DifferenceSet::new(poly, n)?, r, delta, opts)
}

#[derive(Clone, Copy, Debug)]
pub struct BadCountOptions {
    /// Largest `C(n, s)` the enumeration accepts.
    pub budget: u64,
    pub parallelism: Parallelism,
}

impl Default for BadCountOptions {
    fn default() -> Self {
        Self {
            budget: 100_000_000,
            parallelism: Parallelism::AUTO,
        }
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of `s`-subsets of `[n]` containing no instance (independent `s`-sets
/// of the instance graph on `[n]`).
pub fn count_bad_subsets(n: u64, s: u64, poly: &Polynomial, opts: &BadCountOptions) -> Result<u64> {
    let total = binomial(n, s);
    if total > BigUint::from(opts.budget) {
        return Err(Error::Budget(format!(
            "C({n}, {s}) = {total} exceeds the enumeration budget {}",
            opts.budget
        )));
    }
    if s == 0 {
        return Ok(1);
    }
    if s > n {
        return Ok(0);
    }
    let ds = DifferenceSet::new(poly, n)?;
    let offsets: Vec<u64> = ds.values().collect();
    let counter = BadCounter {
        n,
        words: word_count(n),
        offsets: &offsets,
    };
    let per_first = map_indexed(n - s + 1, opts.parallelism, |i| {
        let first = i + 1;
        let mut forbidden = vec![0u64; counter.words];
        counter.forbid_neighbours(&mut forbidden, first);
        counter.count_from(first, &forbidden, s - 1)
    });
    Ok(per_first.into_iter().sum::<u64>())
}

struct BadCounter<'a> {
    n: u64,
    words: usize,
    offsets: &'a [u64],
}

impl BadCounter<'_> {
    fn forbid_neighbours(&self, forbidden: &mut [u64], x: u64) {
        for &v in self.offsets {
            if x + v <= self.n {
                bit_set(forbidden, (x + v - 1) as usize);
            }
            if x > v {
                bit_set(forbidden, (x - v - 1) as usize);
            }
        }
    }

    /// Ways to extend a partial bad set whose largest element is `last` by `left` more.
    fn count_from(&self, last: u64, forbidden: &[u64], left: u64) -> u64 {
        if left == 0 {
            return 1;
        }
        if left == 1 {
            // Free elements in (last, n].
            return (last + 1..=self.n)
                .filter(|&y| !bit_test(forbidden, (y - 1) as usize))
                .count() as u64;
        }
        let mut total = 0;
        let mut next = forbidden.to_vec();
        for y in last + 1..=self.n - left + 1 {
            if bit_test(forbidden, (y - 1) as usize) {
                continue;
            }
            next.copy_from_slice(forbidden);
            self.forbid_neighbours(&mut next, y);
            total += self.count_from(y, &next, left - 1);
        }
        total
    }
}

/// Fraction of `s`-subsets that are bad, as an exact rational.
pub fn bad_fraction(n: u64, s: u64, poly: &Polynomial, opts: &BadCountOptions) -> Result<BigRational> {
    let count = count_bad_subsets(n, s, poly, opts)?;
    let total = binomial(n, s);
    if total.is_zero() {
        return Err(Error::InvalidArgument(format!("s = {s} exceeds n = {n}")));
    }
    Ok(BigRational::new(count.into(), total.into()))
}

impl AvoidanceResult {
    /// Checks that the witness avoids the configuration and matches `lower_bound`.
    pub fn verify(&self, ds: &DifferenceSet) -> Result<bool> {
        Ok(self.witness.len() == self.lower_bound
            && self.lower_bound <= self.upper_bound
            && !ds.contains_instance(&self.witness)?)
    }

    pub fn witness_fraction(&self, total: u64) -> f64 {
        if total == 0 {
            return 0.0;
        }
        BigRational::new(self.lower_bound.into(), total.into())
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}
