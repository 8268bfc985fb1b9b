//! Classical side: index-oracle access, the random-guess player and its
//! permutation-conjugated (average-case) wrapper, the query lower bound, the
//! exact unique-draw distribution and exhaustive uniformity checks.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::prp::random_permutation;
use crate::subsetstates::SubsetSpec;

/// Query access to the `i`-th element (1-based) of a hidden subset.
pub trait IndexAccess {
    /// Size of the ambient universe.
    fn universe(&self) -> usize;
    /// Cardinality of the hidden subset.
    fn k(&self) -> usize;
    fn query(&mut self, i: usize) -> Result<usize>;
    fn query_count(&self) -> usize;
}

/// Counting index oracle over a fixed element order.
#[derive(Debug, Clone)]
pub struct IndexOracle {
    universe: usize,
    elements: Vec<usize>,
    query_count: usize,
}

impl IndexOracle {
    pub fn new(spec: &SubsetSpec) -> Self {
        Self {
            universe: spec.universe(),
            elements: spec.elements().to_vec(),
            query_count: 0,
        }
    }

    /// Oracle over an arbitrary universe `{0, ..., universe - 1}` (not necessarily `2^n`).
    pub fn with_universe(universe: usize, elements: Vec<usize>) -> Result<Self> {
        let k = elements.len();
        if k == 0 || k >= universe {
            return Err(Error::InvalidSubset(format!(
                "cardinality {k} must satisfy 1 <= K <= {}",
                universe.saturating_sub(1)
            )));
        }
        let mut sorted = elements.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k || sorted[k - 1] >= universe {
            return Err(Error::InvalidSubset(
                "elements must be distinct and below the universe size".into(),
            ));
        }
        Ok(Self {
            universe,
            elements,
            query_count: 0,
        })
    }

    /// Membership test for the referee; not part of the player's interface.
    pub fn contains(&self, x: usize) -> bool {
        self.elements.contains(&x)
    }
}

impl IndexAccess for IndexOracle {
    fn universe(&self) -> usize {
        self.universe
    }

    fn k(&self) -> usize {
        self.elements.len()
    }

    fn query(&mut self, i: usize) -> Result<usize> {
        if i == 0 || i > self.elements.len() {
            return Err(Error::OutOfRange(format!(
                "index {i} outside 1..={}",
                self.elements.len()
            )));
        }
        self.query_count += 1;
        Ok(self.elements[i - 1])
    }

    fn query_count(&self) -> usize {
        self.query_count
    }
}

/// Oracle for `σ(S)` built from an oracle for `S`.
struct ConjugatedOracle<'a> {
    inner: &'a mut dyn IndexAccess,
    sigma: &'a [usize],
}

impl IndexAccess for ConjugatedOracle<'_> {
    fn universe(&self) -> usize {
        self.inner.universe()
    }

    fn k(&self) -> usize {
        self.inner.k()
    }

    fn query(&mut self, i: usize) -> Result<usize> {
        Ok(self.sigma[self.inner.query(i)?])
    }

    fn query_count(&self) -> usize {
        self.inner.query_count()
    }
}

/// The `r`-th (0-based) string of `{0..universe}` not in `seen_sorted`.
pub fn nth_unseen(r: usize, seen_sorted: &[usize]) -> usize {
    let mut y = r;
    for &s in seen_sorted {
        if s <= y {
            y += 1;
        } else {
            break;
        }
    }
    y
}

/// How a classical player picks its output after seeing samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessPolicy {
    /// Uniform over strings not yet observed.
    Unseen,
    /// Uniform over the whole universe.
    Anything,
}

/// Guesses a string given observed samples (duplicates allowed).
pub fn guess_from_samples<R: Rng + ?Sized>(
    samples: &[usize],
    universe: usize,
    policy: GuessPolicy,
    rng: &mut R,
) -> usize {
    match policy {
        GuessPolicy::Anything => rng.random_range(0..universe),
        GuessPolicy::Unseen => {
            let mut seen = samples.to_vec();
            seen.sort_unstable();
            seen.dedup();
            nth_unseen(rng.random_range(0..universe - seen.len()), &seen)
        }
    }
}

/// Queries indices `1..=q_budget` and outputs a uniform string among the unseen ones.
pub fn random_guess_player<R: Rng + ?Sized>(
    oracle: &mut dyn IndexAccess,
    q_budget: usize,
    rng: &mut R,
) -> Result<usize> {
    if q_budget > oracle.k() {
        return Err(Error::OutOfRange(format!(
            "query budget {q_budget} exceeds K = {}",
            oracle.k()
        )));
    }
    let seen = (1..=q_budget)
        .map(|i| oracle.query(i))
        .collect::<Result<Vec<_>>>()?;
    Ok(guess_from_samples(&seen, oracle.universe(), GuessPolicy::Unseen, rng))
}

/// `(N - K) / (N - q)`.
pub fn random_guess_success(universe: u64, k: u64, q: u64) -> BigRational {
    BigRational::new((universe - k).into(), (universe - q).into())
}

/// A classical strategy with index-oracle access.
pub trait IndexPlayer {
    fn play(&mut self, oracle: &mut dyn IndexAccess, rng: &mut dyn RngCore) -> Result<usize>;
}

#[derive(Debug, Clone, Copy)]
pub struct RandomGuessPlayer {
    pub budget: usize,
}

impl IndexPlayer for RandomGuessPlayer {
    fn play(&mut self, oracle: &mut dyn IndexAccess, rng: &mut dyn RngCore) -> Result<usize> {
        random_guess_player(oracle, self.budget, rng)
    }
}

/// Ignores the oracle and always answers the same string.
#[derive(Debug, Clone, Copy)]
pub struct FixedOutputPlayer {
    pub output: usize,
}

impl IndexPlayer for FixedOutputPlayer {
    fn play(&mut self, _oracle: &mut dyn IndexAccess, _rng: &mut dyn RngCore) -> Result<usize> {
        Ok(self.output)
    }
}

/// Wraps a player so it sees `σ(S)` for a fresh uniform permutation `σ`, and
/// maps its answer back through `σ⁻¹`. Its success on any fixed `S` equals
/// the wrapped player's success averaged over uniformly random subsets.
#[derive(Debug, Clone)]
pub struct AverageCaseReduction<P> {
    inner: P,
}

/// Largest universe for which the reduction materializes permutation tables.
pub const MAX_REDUCTION_UNIVERSE: usize = 1 << 20;

pub fn average_case_reduction<P: IndexPlayer>(worst_case_player: P) -> AverageCaseReduction<P> {
    AverageCaseReduction {
        inner: worst_case_player,
    }
}

impl<P: IndexPlayer> IndexPlayer for AverageCaseReduction<P> {
    fn play(&mut self, oracle: &mut dyn IndexAccess, rng: &mut dyn RngCore) -> Result<usize> {
        let universe = oracle.universe();
        if universe > MAX_REDUCTION_UNIVERSE {
            return Err(Error::Scale(format!(
                "universe {universe} too large for an explicit permutation"
            )));
        }
        let sigma = random_permutation(universe, rng);
        let mut inverse = vec![0; universe];
        for (x, &y) in sigma.iter().enumerate() {
            inverse[y] = x;
        }
        let mut conjugated = ConjugatedOracle {
            inner: oracle,
            sigma: &sigma,
        };
        let y = self.inner.play(&mut conjugated, rng)?;
        inverse
            .get(y)
            .copied()
            .ok_or_else(|| Error::OutOfRange(format!("player output {y} outside universe")))
    }
}

// ---- bounds -------------------------------------------------------------

fn check_bounds_params(universe: u64, k: u64) -> Result<()> {
    if k == 0 || k >= universe {
        return Err(Error::OutOfRange(format!(
            "K = {k} must satisfy 1 <= K <= N - 1 = {}",
            universe.saturating_sub(1)
        )));
    }
    Ok(())
}

/// `N - 2(N - K) / (2δ + 1)`; may be negative, meaning zero queries suffice.
pub fn lower_bound_queries(universe: u64, k: u64, delta: f64) -> Result<f64> {
    check_bounds_params(universe, k)?;
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::ParameterRange {
            name: "delta",
            value: delta,
            range: "[0, 1/2]",
        });
    }
    let (n, k) = (universe as f64, k as f64);
    Ok(n - 2.0 * (n - k) / (2.0 * delta + 1.0))
}

/// Exact rational form of [`lower_bound_queries`].
pub fn lower_bound_queries_exact(universe: u64, k: u64, delta: &BigRational) -> Result<BigRational> {
    check_bounds_params(universe, k)?;
    let half = BigRational::new(1.into(), 2.into());
    if delta < &BigRational::zero() || delta > &half {
        return Err(Error::ParameterRange {
            name: "delta",
            value: delta.to_f64().unwrap_or(f64::NAN),
            range: "[0, 1/2]",
        });
    }
    let two = BigRational::from_integer(2.into());
    let n = BigRational::from_integer(universe.into());
    let gap = BigRational::from_integer((universe - k).into());
    Ok(n - &two * gap / (&two * delta + BigRational::one()))
}

/// Query lower bound for one `(N, K, δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub universe: u64,
    pub k: u64,
    pub delta: f64,
    pub min_queries: f64,
}

impl BoundsReport {
    pub fn new(universe: u64, k: u64, delta: f64) -> Result<Self> {
        Ok(Self {
            universe,
            k,
            delta,
            min_queries: lower_bound_queries(universe, k, delta)?,
        })
    }
}

// ---- unique draws ---------------------------------------------------------

pub const MAX_DRAWS: u64 = 64;
pub const MAX_UNIQUE_DRAW_K: u64 = 1_000_000;

/// Row `d` of the Stirling triangle of the second kind: `S(d, 0..=d)`.
pub fn stirling2_row(d: u64) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for m in 1..=d as usize {
        let mut next = vec![BigUint::zero(); m + 1];
        for (q, slot) in next.iter_mut().enumerate().skip(1) {
            // S(m, q) = q S(m-1, q) + S(m-1, q-1)
            let stay = row.get(q).map(|s| s * BigUint::from(q)).unwrap_or_default();
            *slot = stay + &row[q - 1];
        }
        row = next;
    }
    row
}

/// Distribution of the number of distinct values in `d` uniform draws
/// (with replacement) from `K` values.
#[derive(Debug, Clone, PartialEq)]
pub struct UniqueDrawDistribution {
    pub k: u64,
    pub d: u64,
    /// `(q, P[q distinct])` for `q = 1..=min(d, K)`.
    pub probabilities: Vec<(u64, BigRational)>,
}

impl UniqueDrawDistribution {
    pub fn probability(&self, q: u64) -> BigRational {
        self.probabilities
            .iter()
            .find(|(p, _)| *p == q)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.probabilities.iter().map(|(_, r)| r).sum()
    }

    pub fn to_f64(&self) -> Vec<(u64, f64)> {
        self.probabilities
            .iter()
            .map(|(q, r)| (*q, r.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }
}

/// `P[q] = K!/(K-q)! · S(d, q) / K^d`, in exact arithmetic.
pub fn unique_draw_distribution(k: u64, d: u64) -> Result<UniqueDrawDistribution> {
    if k == 0 || d == 0 {
        return Err(Error::OutOfRange("K and d must be at least 1".into()));
    }
    if d > MAX_DRAWS || k > MAX_UNIQUE_DRAW_K {
        return Err(Error::Scale(format!(
            "unique-draw distribution supports d <= {MAX_DRAWS} and K <= {MAX_UNIQUE_DRAW_K}"
        )));
    }
    let stirling = stirling2_row(d);
    let denominator = BigUint::from(k).pow(d as u32);
    let mut falling = BigUint::one();
    let mut probabilities = Vec::new();
    for q in 1..=d.min(k) {
        falling *= BigUint::from(k - q + 1);
        let numerator = &falling * &stirling[q as usize];
        probabilities.push((
            q,
            BigRational::new(numerator.into(), denominator.clone().into()),
        ));
    }
    Ok(UniqueDrawDistribution { k, d, probabilities })
}

/// `Σ_q P[q distinct] · (N - K)/(N - q)`, exactly.
pub fn sample_complexity_success_exact(universe: u64, k: u64, d: u64) -> Result<BigRational> {
    check_bounds_params(universe, k)?;
    let dist = unique_draw_distribution(k, d)?;
    Ok(dist
        .probabilities
        .iter()
        .map(|(q, p)| p * random_guess_success(universe, k, *q))
        .sum())
}

pub fn sample_complexity_success(universe: u64, k: u64, d: u64) -> Result<f64> {
    Ok(sample_complexity_success_exact(universe, k, d)?
        .to_f64()
        .unwrap_or(f64::NAN))
}

// ---- exhaustive checks ------------------------------------------------------

/// Largest universe accepted by the enumeration-based checks.
pub const MAX_ENUMERATION_UNIVERSE: usize = 16;

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// All `k`-subsets of `{0..universe}` as bitmasks (Gosper's hack), increasing.
pub fn k_subsets(universe: usize, k: usize) -> Vec<u32> {
    if k == 0 {
        return vec![0];
    }
    if k > universe || universe > 31 {
        return Vec::new();
    }
    let limit = 1u32 << universe;
    let mut out = Vec::new();
    let mut v: u32 = (1 << k) - 1;
    while v < limit {
        out.push(v);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Result of conditioning a uniform `K`-subset on containing `Q`.
#[derive(Debug, Clone)]
pub struct UniformityReport {
    /// Conditional probability of each complement (bitmask) with nonzero mass.
    pub conditional: BTreeMap<u32, BigRational>,
    /// `1 / C(N - q, N - K)`.
    pub expected: BigRational,
    /// Every listed probability equals `expected` and all `C(N-q, N-K)` complements appear.
    pub uniform: bool,
    /// Some listed complement contains an element of `Q` (must be false).
    pub touches_observed: bool,
}

/// Enumerates every `(N-K)`-subset as a candidate complement and applies Bayes' rule.
pub fn bayes_uniformity_check(universe: usize, k: usize, observed: &[usize]) -> Result<UniformityReport> {
    if universe > MAX_ENUMERATION_UNIVERSE {
        return Err(Error::Scale(format!(
            "enumeration limited to N <= {MAX_ENUMERATION_UNIVERSE}"
        )));
    }
    check_bounds_params(universe as u64, k as u64)?;
    let mut q_mask = 0u32;
    for &x in observed {
        if x >= universe || q_mask & (1 << x) != 0 {
            return Err(Error::InvalidSubset("observed elements must be distinct and in range".into()));
        }
        q_mask |= 1 << x;
    }
    let q = observed.len();
    if q > k {
        return Err(Error::OutOfRange(format!("|Q| = {q} exceeds K = {k}")));
    }
    let full = (1u32 << universe) - 1;
    let family = k_subsets(universe, k);
    let prior = BigRational::new(1.into(), BigUint::from(family.len()).into());
    let consistent = family.iter().filter(|&&s| s & q_mask == q_mask).count();
    let evidence = &prior * BigRational::from_integer(consistent.into());

    let mut conditional = BTreeMap::new();
    for comp in k_subsets(universe, universe - k) {
        let joint = if comp & q_mask == 0 {
            debug_assert_eq!((full ^ comp) & q_mask, q_mask);
            prior.clone()
        } else {
            BigRational::zero()
        };
        let p = joint / &evidence;
        if !p.is_zero() {
            conditional.insert(comp, p);
        }
    }
    let expected = BigRational::new(
        1.into(),
        binomial((universe - q) as u64, (universe - k) as u64).into(),
    );
    let uniform = BigUint::from(conditional.len()) == binomial((universe - q) as u64, (universe - k) as u64)
        && conditional.values().all(|p| p == &expected);
    let touches_observed = conditional.keys().any(|c| c & q_mask != 0);
    Ok(UniformityReport {
        conditional,
        expected,
        uniform,
        touches_observed,
    })
}

/// Calls `visit` with every permutation of `0..len` (Heap's algorithm).
pub fn for_each_permutation(len: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..len).collect();
    let mut c = vec![0usize; len];
    visit(&perm);
    let mut i = 0;
    while i < len {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// For a fixed subset, counts how many permutations map it onto each target subset.
pub fn permutation_image_counts(universe: usize, subset: &[usize]) -> Result<BTreeMap<u32, u64>> {
    if universe > 8 {
        return Err(Error::Scale("permutation enumeration limited to N <= 8".into()));
    }
    IndexOracle::with_universe(universe, subset.to_vec())?;
    let mut counts = BTreeMap::new();
    for_each_permutation(universe, |sigma| {
        let image = subset.iter().fold(0u32, |m, &x| m | (1 << sigma[x]));
        *counts.entry(image).or_insert(0) += 1;
    });
    Ok(counts)
}

/// Exact success of [`random_guess_player`] averaged over all `K`-subsets
/// (sorted element order) and all of its uniform choices.
pub fn exhaustive_random_guess_success(universe: usize, k: usize, q: usize) -> Result<BigRational> {
    if universe > MAX_ENUMERATION_UNIVERSE {
        return Err(Error::Scale(format!(
            "enumeration limited to N <= {MAX_ENUMERATION_UNIVERSE}"
        )));
    }
    check_bounds_params(universe as u64, k as u64)?;
    if q > k {
        return Err(Error::OutOfRange(format!("query budget {q} exceeds K = {k}")));
    }
    let mut wins = 0u64;
    let mut total = 0u64;
    for mask in k_subsets(universe, k) {
        let elements: Vec<usize> = (0..universe).filter(|x| mask & (1 << x) != 0).collect();
        let mut oracle = IndexOracle::with_universe(universe, elements)?;
        let mut seen = (1..=q).map(|i| oracle.query(i)).collect::<Result<Vec<_>>>()?;
        seen.sort_unstable();
        for r in 0..universe - q {
            let y = nth_unseen(r, &seen);
            total += 1;
            if mask & (1 << y) == 0 {
                wins += 1;
            }
        }
    }
    Ok(BigRational::new(wins.into(), total.into()))
}
