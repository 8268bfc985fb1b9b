//! Subset, complement, phase and conjugate states, plus closed-form overlaps.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::StateVector;

/// Widest universe a [`SubsetSpec`] may live in.
pub const MAX_SUBSET_BITS: usize = 24;

/// An ordered subset `S` of the `n`-bit strings with `1 <= |S| <= 2^n - 1`.
///
/// The element order is the order the index oracle reports; constructors
/// document which order they produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SubsetSpecJson", into = "SubsetSpecJson")]
pub struct SubsetSpec {
    n: usize,
    elements: Vec<usize>,
    membership: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct SubsetSpecJson {
    n: usize,
    elements: Vec<String>,
}

impl From<SubsetSpec> for SubsetSpecJson {
    fn from(spec: SubsetSpec) -> Self {
        let width = spec.n.div_ceil(4).max(1);
        Self {
            n: spec.n,
            elements: spec
                .elements
                .iter()
                .map(|e| format!("{e:0width$x}"))
                .collect(),
        }
    }
}

impl TryFrom<SubsetSpecJson> for SubsetSpec {
    type Error = Error;

    fn try_from(json: SubsetSpecJson) -> Result<Self> {
        let elements = json
            .elements
            .iter()
            .map(|h| parse_hex(h))
            .collect::<Result<Vec<_>>>()?;
        SubsetSpec::new(json.n, elements)
    }
}

pub(crate) fn parse_hex(s: &str) -> Result<usize> {
    let t = s.trim().trim_start_matches("0x");
    usize::from_str_radix(t, 16).map_err(|e| Error::Parse(format!("bad hex string {s:?}: {e}")))
}

impl SubsetSpec {
    /// Validates and stores `elements` in the given order.
    pub fn new(n: usize, elements: Vec<usize>) -> Result<Self> {
        if n == 0 || n > MAX_SUBSET_BITS {
            return Err(Error::Scale(format!("n = {n} not in 1..={MAX_SUBSET_BITS}")));
        }
        let universe = 1usize << n;
        let k = elements.len();
        if k == 0 || k >= universe {
            return Err(Error::InvalidSubset(format!(
                "cardinality {k} must satisfy 1 <= K <= {}",
                universe - 1
            )));
        }
        let mut membership = vec![false; universe];
        for &e in &elements {
            if e >= universe {
                return Err(Error::InvalidSubset(format!("element {e} >= 2^{n}")));
            }
            if std::mem::replace(&mut membership[e], true) {
                return Err(Error::InvalidSubset(format!("element {e} repeated")));
            }
        }
        Ok(Self {
            n,
            elements,
            membership,
        })
    }

    /// `{0, 1, ..., k-1}` in increasing order.
    pub fn first_k(n: usize, k: usize) -> Result<Self> {
        Self::new(n, (0..k).collect())
    }

    /// Builds a subset from a membership predicate; elements are sorted.
    pub fn from_predicate(n: usize, mut pred: impl FnMut(usize) -> bool) -> Result<Self> {
        if n == 0 || n > MAX_SUBSET_BITS {
            return Err(Error::Scale(format!("n = {n} not in 1..={MAX_SUBSET_BITS}")));
        }
        Self::new(n, (0..1usize << n).filter(|&x| pred(x)).collect())
    }

    /// Uniformly random `k`-subset, elements in draw order (partial Fisher-Yates).
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || n > MAX_SUBSET_BITS {
            return Err(Error::Scale(format!("n = {n} not in 1..={MAX_SUBSET_BITS}")));
        }
        let universe = 1usize << n;
        if k == 0 || k >= universe {
            return Err(Error::InvalidSubset(format!(
                "cardinality {k} must satisfy 1 <= K <= {}",
                universe - 1
            )));
        }
        let mut pool: Vec<usize> = (0..universe).collect();
        for i in 0..k {
            let j = rng.random_range(i..universe);
            pool.swap(i, j);
        }
        pool.truncate(k);
        Self::new(n, pool)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.elements.len()
    }

    /// `N = 2^n`.
    pub fn universe(&self) -> usize {
        1 << self.n
    }

    /// `K/N - 1/2`.
    pub fn beta(&self) -> f64 {
        self.k() as f64 / self.universe() as f64 - 0.5
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn contains(&self, x: usize) -> bool {
        self.membership.get(x).copied().unwrap_or(false)
    }

    /// Sorted elements of the complement.
    pub fn complement_elements(&self) -> Vec<usize> {
        (0..self.universe()).filter(|&x| !self.membership[x]).collect()
    }

    /// The complement as a subset (sorted order).
    pub fn complement(&self) -> SubsetSpec {
        let elements = self.complement_elements();
        let membership = self.membership.iter().map(|m| !m).collect();
        Self {
            n: self.n,
            elements,
            membership,
        }
    }

    /// `|S ∩ T|`.
    pub fn intersection_size(&self, other: &SubsetSpec) -> Result<usize> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(self.elements.iter().filter(|&&x| other.contains(x)).count())
    }
}

/// A balanced function `f` on `n` bits, stored as its zero set (`K = N/2`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedFunctionSpec {
    support: SubsetSpec,
}

impl BalancedFunctionSpec {
    pub fn new(support: SubsetSpec) -> Result<Self> {
        if 2 * support.k() != support.universe() {
            return Err(Error::InvalidSubset(format!(
                "balanced function needs K = N/2 = {}, got {}",
                support.universe() / 2,
                support.k()
            )));
        }
        Ok(Self { support })
    }

    pub fn n(&self) -> usize {
        self.support.n()
    }

    pub fn support(&self) -> &SubsetSpec {
        &self.support
    }

    /// `f(x)`: 0 on the support, 1 elsewhere.
    pub fn eval(&self, x: usize) -> u8 {
        u8::from(!self.support.contains(x))
    }
}

/// Function inducing a phase state.
#[derive(Debug, Clone)]
pub enum PhaseFunction {
    Constant { n: usize },
    Balanced(BalancedFunctionSpec),
}

fn uniform_state_on(n: usize, members: impl Iterator<Item = usize>, count: usize) -> StateVector {
    let a = Complex64::new(1.0 / (count as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for x in members {
        amps[x] = a;
    }
    StateVector::from_raw(n, amps)
}

/// `|S>`: amplitude `1/√K` on each member.
pub fn make_subset_state(spec: &SubsetSpec) -> StateVector {
    uniform_state_on(spec.n(), spec.elements().iter().copied(), spec.k())
}

/// `|S̄>`: amplitude `1/√(N-K)` on each non-member.
pub fn make_complement_state(spec: &SubsetSpec) -> StateVector {
    let n = spec.n();
    uniform_state_on(
        n,
        (0..spec.universe()).filter(|&x| !spec.contains(x)),
        spec.universe() - spec.k(),
    )
}

/// `|y_f> = N^{-1/2} Σ_x (-1)^{f(x)} |x>`.
pub fn make_phase_state(f: &PhaseFunction) -> Result<StateVector> {
    match f {
        PhaseFunction::Constant { n } => StateVector::uniform(*n),
        PhaseFunction::Balanced(b) => {
            let dim = b.support().universe();
            let a = 1.0 / (dim as f64).sqrt();
            let amps = (0..dim)
                .map(|x| Complex64::new(if b.eval(x) == 0 { a } else { -a }, 0.0))
                .collect();
            Ok(StateVector::from_raw(b.n(), amps))
        }
    }
}

/// Conjugate pair `((|S> + |S̄>)/√2, (|S> - |S̄>)/√2)`.
pub fn make_conjugate_states(spec: &SubsetSpec) -> (StateVector, StateVector) {
    let s = make_subset_state(spec);
    let c = make_complement_state(spec);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = s
        .amplitudes()
        .iter()
        .zip(c.amplitudes())
        .map(|(a, b)| (a + b) * h)
        .collect();
    let minus = s
        .amplitudes()
        .iter()
        .zip(c.amplitudes())
        .map(|(a, b)| (a - b) * h)
        .collect();
    (
        StateVector::from_raw(spec.n(), plus),
        StateVector::from_raw(spec.n(), minus),
    )
}

/// `|<y_f|y_g>| = |2 I_{f,g} - N| / N` where `I_{f,g}` counts agreements.
pub fn phase_state_overlap(f: &BalancedFunctionSpec, g: &BalancedFunctionSpec) -> Result<f64> {
    let common = f.support().intersection_size(g.support())?;
    let n_universe = f.support().universe() as i64;
    let k = f.support().k() as i64;
    // Agreements: both zero (common) plus both one (N - 2K + common).
    let agreements = n_universe - 2 * k + 2 * common as i64;
    Ok((2 * agreements - n_universe).abs() as f64 / n_universe as f64)
}

fn check_cardinality(k: u64, universe: u64) -> Result<()> {
    if k == 0 || k >= universe {
        return Err(Error::OutOfRange(format!(
            "K = {k} must satisfy 1 <= K <= N - 1 = {}",
            universe.saturating_sub(1)
        )));
    }
    Ok(())
}

/// `|<φ⁺_1|φ⁻_2>|²` for `K`-subsets with `|S_1 ∩ S_2| = x`:
/// `(1/4) ((2K - N)(K - x) / (K (N - K)))²`.
pub fn conjugate_pair_overlap(k: u64, universe: u64, x_intersection: u64) -> Result<f64> {
    check_cardinality(k, universe)?;
    let lo = (2 * k).saturating_sub(universe);
    if x_intersection < lo || x_intersection > k {
        return Err(Error::OutOfRange(format!(
            "intersection {x_intersection} outside [{lo}, {k}]"
        )));
    }
    let (k, n, x) = (k as f64, universe as f64, x_intersection as f64);
    let r = (2.0 * k - n) * (k - x) / (k * (n - k));
    Ok(0.25 * r * r)
}

/// Maximum of [`conjugate_pair_overlap`] over admissible intersections.
pub fn max_conjugate_overlap(k: u64, universe: u64) -> Result<f64> {
    check_cardinality(k, universe)?;
    let (kf, n) = (k as f64, universe as f64);
    Ok(if 2 * k <= universe {
        let r = (n - 2.0 * kf) / (kf - n);
        0.25 * r * r
    } else {
        let r = 2.0 - n / kf;
        0.25 * r * r
    })
}
