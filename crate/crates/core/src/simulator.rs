//! Dense statevector engine.
//!
//! Qubit ordering: qubit 0 is the most significant bit of the basis-state
//! index, so on `n` qubits qubit `q` corresponds to the bit mask
//! `1 << (n - 1 - q)`. The basis state `|b_0 b_1 ... b_{n-1}>` therefore has
//! index `b_0 * 2^(n-1) + ... + b_{n-1}`.
//!
//! Gates are available in two forms: in-place methods on [`StateVector`]
//! (`&mut self`) and pure free functions (`apply_*`) that clone their input.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance for normalization checks at construction.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Largest register the engine accepts.
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A normalized pure state on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Result of a partial (single-qubit) or full measurement.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    /// Measured value. For a single-qubit measurement this is 0 or 1.
    pub bitstring: usize,
    /// Born probability of the observed outcome before measurement.
    pub probability: f64,
    /// Renormalized post-measurement state on the full register.
    pub post_state: StateVector,
}

fn check_width(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Scale(format!(
            "register width {n_qubits} not in 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// Builds a state from raw amplitudes, checking length and norm.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_width(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::InvalidState(format!(
                "{} amplitudes given for {} qubits",
                amplitudes.len(),
                n_qubits
            )));
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "squared norm {norm} differs from 1"
            )));
        }
        Ok(state)
    }

    /// Normalizes arbitrary nonzero amplitudes into a state.
    pub fn from_unnormalized(n_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        check_width(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::InvalidState(format!(
                "{} amplitudes given for {} qubits",
                amplitudes.len(),
                n_qubits
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_width(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::OutOfRange(format!(
                "basis index {index} >= 2^{n_qubits}"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// The uniform superposition `|+^n>`.
    pub fn uniform(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            n_qubits,
            amplitudes: vec![a; dim],
        })
    }

    /// Haar-random state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_width(n_qubits)?;
        let dim = 1usize << n_qubits;
        let amplitudes = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_unnormalized(n_qubits, amplitudes)
    }

    pub(crate) fn from_raw(n_qubits: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n_qubits);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::InvalidQubit {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    /// `<self|other>`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Appends a fresh `|0>` qubit as the new highest index (least significant bit).
    pub fn with_ancilla(&self) -> Result<StateVector> {
        check_width(self.n_qubits + 1)?;
        let mut amplitudes = vec![ZERO; self.dim() * 2];
        for (i, a) in self.amplitudes.iter().enumerate() {
            amplitudes[i << 1] = *a;
        }
        Ok(Self::from_raw(self.n_qubits + 1, amplitudes))
    }

    /// Probability that `qubit` reads `bit`.
    pub fn qubit_probability(&self, qubit: usize, bit: u8) -> Result<f64> {
        let mask = self.mask(qubit)?;
        let want = if bit == 0 { 0 } else { mask };
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects `qubit` onto `bit` and removes it from the register, returning the
    /// branch probability and the renormalized state on the remaining qubits.
    pub fn postselect_and_remove(&self, qubit: usize, bit: u8) -> Result<(f64, StateVector)> {
        let mask = self.mask(qubit)?;
        if self.n_qubits == 1 {
            return Err(Error::Scale("cannot remove the only qubit".into()));
        }
        let want = if bit == 0 { 0 } else { mask };
        let low = mask - 1;
        let mut reduced = vec![ZERO; self.dim() / 2];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if i & mask == want {
                let j = ((i >> 1) & !low) | (i & low);
                reduced[j] = *a;
            }
        }
        let probability: f64 = reduced.iter().map(|a| a.norm_sqr()).sum();
        if probability < 1e-15 {
            return Err(Error::DegenerateBranch(probability));
        }
        let scale = 1.0 / probability.sqrt();
        for a in &mut reduced {
            *a *= scale;
        }
        Ok((probability, Self::from_raw(self.n_qubits - 1, reduced)))
    }

    // ---- in-place gates -------------------------------------------------

    /// `H^{⊗n}` via the fast Walsh-Hadamard transform.
    pub fn hadamard_all(&mut self) {
        let dim = self.dim();
        let mut half = 1;
        while half < dim {
            for block in (0..dim).step_by(half * 2) {
                for i in block..block + half {
                    let a = self.amplitudes[i];
                    let b = self.amplitudes[i + half];
                    self.amplitudes[i] = a + b;
                    self.amplitudes[i + half] = a - b;
                }
            }
            half <<= 1;
        }
        let scale = 1.0 / (dim as f64).sqrt();
        for a in &mut self.amplitudes {
            *a *= scale;
        }
    }

    /// Hadamard on each listed qubit.
    pub fn hadamard_on(&mut self, qubits: &[usize]) -> Result<()> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let gate = [
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ];
        for &q in qubits {
            self.single_qubit_gate(q, gate)?;
        }
        Ok(())
    }

    /// Applies a 2x2 matrix (row-major) to `qubit`.
    pub fn single_qubit_gate(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) -> Result<()> {
        let mask = self.mask(qubit)?;
        for i in 0..self.dim() {
            if i & mask == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Grover diffusion `2|+^n><+^n| - I`, using `a_i -> 2*mean(a) - a_i`.
    pub fn diffusion(&mut self) {
        let mean = self.amplitudes.iter().sum::<Complex64>() / self.dim() as f64;
        let twice = mean * 2.0;
        for a in &mut self.amplitudes {
            *a = twice - *a;
        }
    }

    /// `W(q) = [[√q, -√(1-q)], [√(1-q), √q]]` (or its transpose when `adjoint`).
    pub fn w_gate(&mut self, qubit: usize, q_w: f64, adjoint: bool) -> Result<()> {
        let m = w_matrix(q_w, adjoint)?;
        self.single_qubit_gate(qubit, m)
    }

    /// Diffusion on every qubit except `control`, applied only where `control` reads `control_value`.
    pub fn controlled_diffusion(&mut self, control: usize, control_value: u8) -> Result<()> {
        let mask = self.mask(control)?;
        let want = if control_value == 0 { 0 } else { mask };
        let branch = self.dim() / 2;
        let mean = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == want)
            .map(|(_, a)| *a)
            .sum::<Complex64>()
            / branch as f64;
        let twice = mean * 2.0;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask == want {
                *a = twice - *a;
            }
        }
        Ok(())
    }

    /// Flips `target` on basis states matching every `(qubit, required_bit)` control.
    pub fn multi_controlled_not(&mut self, target: usize, controls: &[(usize, u8)]) -> Result<()> {
        let tmask = self.mask(target)?;
        let mut seen = vec![target];
        let mut cmask = 0;
        let mut cwant = 0;
        for &(q, bit) in controls {
            if seen.contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
            seen.push(q);
            let m = self.mask(q)?;
            cmask |= m;
            if bit != 0 {
                cwant |= m;
            }
        }
        for i in 0..self.dim() {
            if i & tmask == 0 && i & cmask == cwant {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    pub fn z(&mut self, qubit: usize) -> Result<()> {
        let mask = self.mask(qubit)?;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
        Ok(())
    }

    pub fn global_phase(&mut self, phase: Complex64) {
        for a in &mut self.amplitudes {
            *a *= phase;
        }
    }

    // ---- measurement ----------------------------------------------------

    /// Measures one qubit; the post state keeps the full register width.
    pub fn measure_qubit<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        rng: &mut R,
    ) -> Result<MeasurementOutcome> {
        let mask = self.mask(qubit)?;
        let p0 = self.qubit_probability(qubit, 0)?;
        let bit = if rng.random::<f64>() < p0 { 0 } else { 1 };
        let probability = if bit == 0 { p0 } else { 1.0 - p0 };
        let mass = if bit == 0 { p0 } else { self.qubit_probability(qubit, 1)? };
        if mass < 1e-15 {
            return Err(Error::DegenerateBranch(mass));
        }
        let want = if bit == 0 { 0 } else { mask };
        let scale = 1.0 / mass.sqrt();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == want { a * scale } else { ZERO })
            .collect();
        Ok(MeasurementOutcome {
            bitstring: bit,
            probability,
            post_state: Self::from_raw(self.n_qubits, amplitudes),
        })
    }

    /// Samples a full computational-basis outcome.
    pub fn measure_all<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.random::<f64>() * self.norm_sqr();
        let mut acc = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            acc += a.norm_sqr();
            if r < acc {
                return i;
            }
        }
        // Rounding left r at the very top; return the last outcome with mass.
        self.amplitudes
            .iter()
            .rposition(|a| a.norm_sqr() > 0.0)
            .unwrap_or(0)
    }

    /// Born probabilities of all `2^n` outcomes.
    pub fn exact_distribution(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Total probability mass on the listed basis states.
    pub fn mass_on(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        indices
            .into_iter()
            .map(|i| self.amplitudes[i].norm_sqr())
            .sum()
    }
}

/// Precomputed cumulative Born distribution for repeated sampling in `O(log N)`.
#[derive(Debug, Clone)]
pub struct BornSampler {
    cumulative: Vec<f64>,
}

impl BornSampler {
    pub fn new(state: &StateVector) -> Self {
        let mut acc = 0.0;
        let cumulative = state
            .amplitudes
            .iter()
            .map(|a| {
                acc += a.norm_sqr();
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let r = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= r);
        idx.min(self.cumulative.len() - 1)
    }
}

fn w_matrix(q_w: f64, adjoint: bool) -> Result<[[Complex64; 2]; 2]> {
    if !(0.0..=1.0).contains(&q_w) || q_w.is_nan() {
        return Err(Error::ParameterRange {
            name: "q_w",
            value: q_w,
            range: "[0, 1]",
        });
    }
    let c = q_w.sqrt();
    let s = (1.0 - q_w).sqrt();
    let r = |x: f64| Complex64::new(x, 0.0);
    Ok(if adjoint {
        [[r(c), r(s)], [r(-s), r(c)]]
    } else {
        [[r(c), r(-s)], [r(s), r(c)]]
    })
}

// ---- pure wrappers --------------------------------------------------------

pub fn apply_hadamard_all(state: &StateVector) -> StateVector {
    let mut out = state.clone();
    out.hadamard_all();
    out
}

pub fn apply_diffusion(state: &StateVector) -> StateVector {
    let mut out = state.clone();
    out.diffusion();
    out
}

pub fn apply_w_gate(state: &StateVector, qubit: usize, q_w: f64, adjoint: bool) -> Result<StateVector> {
    let mut out = state.clone();
    out.w_gate(qubit, q_w, adjoint)?;
    Ok(out)
}

pub fn apply_controlled_diffusion(
    state: &StateVector,
    control: usize,
    control_value: u8,
) -> Result<StateVector> {
    let mut out = state.clone();
    out.controlled_diffusion(control, control_value)?;
    Ok(out)
}

pub fn apply_multi_controlled_not(
    state: &StateVector,
    target: usize,
    controls: &[(usize, u8)],
) -> Result<StateVector> {
    let mut out = state.clone();
    out.multi_controlled_not(target, controls)?;
    Ok(out)
}

pub fn apply_z(state: &StateVector, qubit: usize) -> Result<StateVector> {
    let mut out = state.clone();
    out.z(qubit)?;
    Ok(out)
}

pub fn apply_global_phase(state: &StateVector, phase: Complex64) -> StateVector {
    let mut out = state.clone();
    out.global_phase(phase);
    out
}

pub fn measure_qubit<R: Rng + ?Sized>(
    state: &StateVector,
    qubit: usize,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    state.measure_qubit(qubit, rng)
}

pub fn measure_all<R: Rng + ?Sized>(state: &StateVector, rng: &mut R) -> usize {
    state.measure_all(rng)
}

pub fn exact_distribution(state: &StateVector) -> Vec<f64> {
    state.exact_distribution()
}

/// `|<a|b>|`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner_product(b)?.norm())
}
