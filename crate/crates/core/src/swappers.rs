//! Quantum algorithms for complement sampling: the diffusion swapper, the
//! flagged zero-error swapper, the Deutsch-Jozsa distinguisher and the
//! swapper built from it, and the coupon-collector baseline.
//!
//! All routines assume the promised input (`|S>` or a phase state); promise
//! violations are not detected.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::simulator::{BornSampler, StateVector};
use crate::subsetstates::{make_subset_state, SubsetSpec};

/// Parameters of the zero-error circuit: the `Z^b` power and the `W(q_w)` angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroErrorConfig {
    pub b: u8,
    pub q_w: f64,
}

impl ZeroErrorConfig {
    /// `(0, 1/(2(1-K/N)))` when `K < N/2`, otherwise `(1, N/(2K))`.
    pub fn for_cardinality(k: usize, universe: usize) -> Result<Self> {
        if k == 0 || k >= universe {
            return Err(Error::OutOfRange(format!(
                "K = {k} must satisfy 1 <= K <= N - 1 = {}",
                universe.saturating_sub(1)
            )));
        }
        let (kf, n) = (k as f64, universe as f64);
        Ok(if 2 * k < universe {
            Self {
                b: 0,
                q_w: n / (2.0 * (n - kf)),
            }
        } else {
            Self {
                b: 1,
                q_w: n / (2.0 * kf),
            }
        })
    }
}

/// `min{K, N-K} / max{K, N-K}`.
pub fn zero_error_success_probability(k: usize, universe: usize) -> f64 {
    let other = universe - k;
    k.min(other) as f64 / k.max(other) as f64
}

/// `1 - (1 - p)^k` for `k` sequential attempts.
pub fn repeated_success_probability(p: f64, copies: usize) -> f64 {
    1.0 - (1.0 - p).powi(copies as i32)
}

/// Outcome of one or more zero-error swap attempts.
#[derive(Debug, Clone)]
pub struct SwapAttempt {
    /// 0 on success.
    pub flag: u8,
    /// Computational-basis draw from the output, present only when `flag == 0`.
    pub sample: Option<usize>,
    /// Register state on the observed flag branch (ancilla removed).
    pub post_state: StateVector,
    /// Flag-0 probability of the final attempt, before its measurement.
    pub success_probability: f64,
    /// Copies consumed.
    pub attempts: usize,
}

/// Applies `U` to `state` and returns it with the complement mass `4(K/N)(1-K/N)`.
pub fn complement_swap(state: &StateVector, spec: &SubsetSpec) -> (StateVector, f64) {
    let mut out = state.clone();
    out.diffusion();
    let ratio = spec.k() as f64 / spec.universe() as f64;
    (out, 4.0 * ratio * (1.0 - ratio))
}

/// Pre-measurement state of the zero-error circuit on `n + 1` qubits; the
/// flag ancilla is qubit `n` (the least significant bit).
///
/// Sequence: `W(q)` on the ancilla, `U` on the register controlled on the
/// ancilla being 0, `Z^b` on the ancilla, `W(q)†`.
pub fn zero_error_circuit(state: &StateVector, config: ZeroErrorConfig) -> Result<StateVector> {
    let ancilla = state.n_qubits();
    let mut s = state.with_ancilla()?;
    s.w_gate(ancilla, config.q_w, false)?;
    s.controlled_diffusion(ancilla, 0)?;
    if config.b == 1 {
        s.z(ancilla)?;
    }
    s.w_gate(ancilla, config.q_w, true)?;
    Ok(s)
}

/// Zero-error swap when only the cardinality `k` is known.
pub fn zero_error_swap_with_cardinality<R: Rng + ?Sized>(
    state: &StateVector,
    k: usize,
    rng: &mut R,
) -> Result<SwapAttempt> {
    let config = ZeroErrorConfig::for_cardinality(k, state.dim())?;
    let pre = zero_error_circuit(state, config)?;
    let ancilla = state.n_qubits();
    let p0 = pre.qubit_probability(ancilla, 0)?;
    let flag = if rng.random::<f64>() < p0 { 0 } else { 1 };
    let (_, post_state) = pre.postselect_and_remove(ancilla, flag)?;
    let sample = (flag == 0).then(|| post_state.measure_all(rng));
    Ok(SwapAttempt {
        flag,
        sample,
        post_state,
        success_probability: p0,
        attempts: 1,
    })
}

/// Runs the flagged circuit of the zero-error swapper once and measures the flag.
pub fn zero_error_swap<R: Rng + ?Sized>(
    state: &StateVector,
    spec: &SubsetSpec,
    rng: &mut R,
) -> Result<SwapAttempt> {
    zero_error_swap_with_cardinality(state, spec.k(), rng)
}

/// Tries each copy in turn until a flag reads 0.
pub fn repeated_zero_error_swap_with_cardinality<R: Rng + ?Sized>(
    copies: &[StateVector],
    k: usize,
    rng: &mut R,
) -> Result<SwapAttempt> {
    if copies.is_empty() {
        return Err(Error::OutOfRange("at least one copy is required".into()));
    }
    let mut last = None;
    for (i, copy) in copies.iter().enumerate() {
        let mut attempt = zero_error_swap_with_cardinality(copy, k, rng)?;
        attempt.attempts = i + 1;
        if attempt.flag == 0 {
            return Ok(attempt);
        }
        last = Some(attempt);
    }
    Ok(last.expect("non-empty copies"))
}

pub fn repeated_zero_error_swap<R: Rng + ?Sized>(
    copies: &[StateVector],
    spec: &SubsetSpec,
    rng: &mut R,
) -> Result<SwapAttempt> {
    repeated_zero_error_swap_with_cardinality(copies, spec.k(), rng)
}

/// Deutsch-Jozsa with the outcome copied into an ancilla: `H^{⊗n}` on the
/// register, then a NOT on ancilla qubit `n` controlled on the register being all zero.
pub fn dj_distinguisher_circuit(state: &StateVector) -> Result<StateVector> {
    let n = state.n_qubits();
    let mut s = state.clone();
    s.hadamard_all();
    let mut s = s.with_ancilla()?;
    let controls: Vec<(usize, u8)> = (0..n).map(|q| (q, 0)).collect();
    s.multi_controlled_not(n, &controls)?;
    Ok(s)
}

/// Probability that [`dj_distinguish`] answers 1 (balanced).
pub fn dj_balanced_probability(state: &StateVector) -> Result<f64> {
    let out = dj_distinguisher_circuit(state)?;
    out.qubit_probability(state.n_qubits(), 0)
}

/// Returns 0 for the constant phase state, 1 for a balanced one.
pub fn dj_distinguish<R: Rng + ?Sized>(state: &StateVector, rng: &mut R) -> Result<u8> {
    let out = dj_distinguisher_circuit(state)?;
    let flag = out.measure_qubit(state.n_qubits(), rng)?;
    // Ancilla 1 means the register collapsed to all zeros: constant.
    Ok(if flag.bitstring == 1 { 0 } else { 1 })
}

/// `|P[answer 1 | a] - P[answer 1 | b]|` for the Deutsch-Jozsa distinguisher.
pub fn distinguishing_bias(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok((dj_balanced_probability(a)? - dj_balanced_probability(b)?).abs())
}

/// Swapper obtained by plugging the distinguisher into the distinguisher-to-swapper
/// construction and simplifying: `H` on qubits `1..n`, `Z` on qubit 0, NOT on
/// qubit 0 controlled on qubits `1..n` being zero, `Z` on qubit 0, `H` on qubits `1..n`.
///
/// Equals `-U`.
pub fn aas_swapper_from_distinguisher(state: &StateVector) -> StateVector {
    let n = state.n_qubits();
    let rest: Vec<usize> = (1..n).collect();
    let controls: Vec<(usize, u8)> = rest.iter().map(|&q| (q, 0)).collect();
    let mut s = state.clone();
    // Indices are in range by construction.
    s.hadamard_on(&rest).expect("valid qubits");
    s.z(0).expect("valid qubit");
    s.multi_controlled_not(0, &controls).expect("distinct qubits");
    s.z(0).expect("valid qubit");
    s.hadamard_on(&rest).expect("valid qubits");
    s
}

/// Branches of the measurement `{|+^n><+^n|, I - |+^n><+^n|}`.
#[derive(Debug, Clone)]
pub struct CouponBranches {
    pub plus_probability: f64,
    pub plus_state: StateVector,
    /// `None` when the state is (numerically) `|+^n>`.
    pub rest_state: Option<StateVector>,
}

pub fn coupon_collector_branches(state: &StateVector) -> Result<CouponBranches> {
    let n = state.n_qubits();
    let plus_state = StateVector::uniform(n)?;
    let overlap: Complex64 = plus_state.inner_product(state)?;
    let plus_probability = overlap.norm_sqr();
    let rest: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .zip(plus_state.amplitudes())
        .map(|(a, p)| a - overlap * p)
        .collect();
    let rest_norm: f64 = rest.iter().map(|a| a.norm_sqr()).sum();
    let rest_state = if rest_norm < 1e-15 {
        None
    } else {
        Some(StateVector::from_unnormalized(n, rest)?)
    };
    Ok(CouponBranches {
        plus_probability,
        plus_state,
        rest_state,
    })
}

/// Projective `{|+><+|, I - |+><+|}` measurement followed by a computational-basis measurement.
pub fn coupon_collector_sample<R: Rng + ?Sized>(state: &StateVector, rng: &mut R) -> Result<usize> {
    let branches = coupon_collector_branches(state)?;
    let take_plus = rng.random::<f64>() < branches.plus_probability;
    Ok(match (&branches.rest_state, take_plus) {
        (Some(rest), false) => rest.measure_all(rng),
        _ => branches.plus_state.measure_all(rng),
    })
}

/// Exact probability that the coupon-collector output lies outside `spec`.
pub fn coupon_collector_hit_probability(state: &StateVector, spec: &SubsetSpec) -> Result<f64> {
    let b = coupon_collector_branches(state)?;
    let outside = spec.complement_elements();
    let mut p = b.plus_probability * b.plus_state.mass_on(outside.iter().copied());
    if let Some(rest) = &b.rest_state {
        p += (1.0 - b.plus_probability) * rest.mass_on(outside.iter().copied());
    }
    Ok(p)
}

/// One row of the single-sample success table.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub beta: f64,
    pub k: usize,
    pub analytic: CurveValues,
    pub simulated: Option<CurveValues>,
}

/// Success probabilities of the complement swapper, zero-error swapper,
/// coupon collector and classical single-sample guess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveValues {
    pub cs: f64,
    pub ze: f64,
    pub cc: f64,
    pub cl: f64,
}

impl CurveValues {
    pub fn analytic(beta: f64, universe: usize) -> Self {
        let n = universe as f64;
        Self {
            cs: 1.0 - 4.0 * beta * beta,
            ze: (1.0 - 2.0 * beta.abs()) / (1.0 + 2.0 * beta.abs()),
            cc: (1.0 - 4.0 * beta * beta) / 2.0,
            cl: (0.5 - beta) / (1.0 - 1.0 / n),
        }
    }
}

/// All `β = K/N - 1/2` with `1 <= K <= N - 1`.
pub fn admissible_betas(universe: usize) -> Vec<f64> {
    (1..universe)
        .map(|k| k as f64 / universe as f64 - 0.5)
        .collect()
}

/// `K = N(1/2 + β)`, rejecting β that do not give an integer in `1..N`.
pub fn cardinality_for_beta(beta: f64, universe: usize) -> Result<usize> {
    let kf = universe as f64 * (0.5 + beta);
    let k = kf.round();
    if (kf - k).abs() > 1e-9 || k < 1.0 || k > (universe - 1) as f64 {
        let admissible = admissible_betas(universe)
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::NonIntegralCardinality {
            beta,
            universe,
            admissible,
        });
    }
    Ok(k as usize)
}

fn simulate_curves(spec: &SubsetSpec, trials: usize, seed: u64) -> Result<CurveValues> {
    let n = spec.n();
    let k = spec.k();
    let subset_state = make_subset_state(spec);
    let hits = |count: usize| count as f64 / trials as f64;

    let (swapped, _) = complement_swap(&subset_state, spec);
    let cs_sampler = BornSampler::new(&swapped);
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let cs = (0..trials)
        .filter(|_| !spec.contains(cs_sampler.sample(&mut rng)))
        .count();

    // Sampling the full (register, flag) outcome is equivalent to measuring the
    // flag first and then the register on the selected branch.
    let config = ZeroErrorConfig::for_cardinality(k, spec.universe())?;
    let ze_sampler = BornSampler::new(&zero_error_circuit(&subset_state, config)?);
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    let ze = (0..trials)
        .filter(|_| {
            let outcome = ze_sampler.sample(&mut rng);
            outcome & 1 == 0 && !spec.contains(outcome >> 1)
        })
        .count();

    let branches = coupon_collector_branches(&subset_state)?;
    let plus_sampler = BornSampler::new(&branches.plus_state);
    let rest_sampler = branches.rest_state.as_ref().map(BornSampler::new);
    let mut rng = rng_from_seed(derive_seed(seed, 2));
    let cc = (0..trials)
        .filter(|_| {
            let take_plus = rng.random::<f64>() < branches.plus_probability;
            let y = match (&rest_sampler, take_plus) {
                (Some(r), false) => r.sample(&mut rng),
                _ => plus_sampler.sample(&mut rng),
            };
            !spec.contains(y)
        })
        .count();

    let universe = 1usize << n;
    let mut rng = rng_from_seed(derive_seed(seed, 3));
    let cl = (0..trials)
        .filter(|_| {
            let seen = spec.elements()[rng.random_range(0..k)];
            let r = rng.random_range(0..universe - 1);
            let guess = if r < seen { r } else { r + 1 };
            !spec.contains(guess)
        })
        .count();

    Ok(CurveValues {
        cs: hits(cs),
        ze: hits(ze),
        cc: hits(cc),
        cl: hits(cl),
    })
}

/// Analytic curves for each `β`, plus Monte Carlo estimates over `trials`
/// shots (omitted when `trials == 0`). Each row uses a random subset drawn
/// from a seed derived from `seed` and `K`.
pub fn success_curves(
    beta_grid: &[f64],
    universe: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<CurveRow>> {
    if universe < 2 || !universe.is_power_of_two() {
        return Err(Error::OutOfRange(format!(
            "N = {universe} must be a power of two >= 2"
        )));
    }
    let n = universe.trailing_zeros() as usize;
    beta_grid
        .iter()
        .map(|&beta| {
            let k = cardinality_for_beta(beta, universe)?;
            let simulated = if trials > 0 {
                let row_seed = derive_seed(seed, k as u64);
                let mut rng = rng_from_seed(row_seed);
                let spec = SubsetSpec::random(n, k, &mut rng)?;
                Some(simulate_curves(&spec, trials, row_seed)?)
            } else {
                None
            };
            Ok(CurveRow {
                beta,
                k,
                analytic: CurveValues::analytic(beta, universe),
                simulated,
            })
        })
        .collect()
}

pub const CURVE_CSV_HEADER: &str = "beta,K,analytic_cs,analytic_ze,analytic_cc,analytic_cl,simulated_cs,simulated_ze,simulated_cc,simulated_cl,trials,seed";

/// Writes rows in the fixed column order of [`CURVE_CSV_HEADER`].
pub fn write_curves_csv<W: Write>(rows: &[CurveRow], trials: usize, seed: u64, out: &mut W) -> Result<()> {
    writeln!(out, "{CURVE_CSV_HEADER}")?;
    for r in rows {
        let a = r.analytic;
        let sim = match r.simulated {
            Some(s) => format!("{},{},{},{}", s.cs, s.ze, s.cc, s.cl),
            None => ",,,".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.beta, r.k, a.cs, a.ze, a.cc, a.cl, sim, trials, seed
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{apply_diffusion, fidelity};
    use crate::subsetstates::{
        make_complement_state, make_conjugate_states, make_phase_state, BalancedFunctionSpec,
        PhaseFunction,
    };
    use crate::rng::rng_from_seed;

    fn max_err(a: &StateVector, b: &StateVector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn config_branches() {
        let c = ZeroErrorConfig::for_cardinality(4, 16).unwrap();
        assert_eq!(c.b, 0);
        assert!((c.q_w - 16.0 / 24.0).abs() < 1e-15);
        let c = ZeroErrorConfig::for_cardinality(12, 16).unwrap();
        assert_eq!(c.b, 1);
        assert!((c.q_w - 16.0 / 24.0).abs() < 1e-15);
        let c = ZeroErrorConfig::for_cardinality(8, 16).unwrap();
        assert_eq!((c.b, c.q_w), (1, 1.0));
        for universe in [2usize, 8, 64, 256] {
            for k in 1..universe {
                let c = ZeroErrorConfig::for_cardinality(k, universe).unwrap();
                assert!(c.q_w >= 0.5 - 1e-15 && c.q_w <= 1.0 + 1e-15);
            }
        }
        assert!(ZeroErrorConfig::for_cardinality(0, 16).is_err());
        assert!(ZeroErrorConfig::for_cardinality(16, 16).is_err());
    }

    #[test]
    fn perfect_swap_at_half() {
        let mut rng = rng_from_seed(20);
        let spec = SubsetSpec::random(3, 4, &mut rng).unwrap();
        let s = make_subset_state(&spec);
        let (out, mass) = complement_swap(&s, &spec);
        assert!((fidelity(&out, &make_complement_state(&spec)).unwrap() - 1.0).abs() <= 1e-12);
        assert!((mass - 1.0).abs() < 1e-15);
        let (back, _) = complement_swap(&out, &spec);
        assert!(max_err(&back, &s) <= 1e-12);
    }

    #[test]
    fn imperfect_swap_mass_quarter() {
        let spec = SubsetSpec::first_k(4, 4).unwrap();
        let (out, predicted) = complement_swap(&make_subset_state(&spec), &spec);
        let exact = out.mass_on(spec.complement_elements());
        assert!((exact - 0.75).abs() <= 1e-12);
        assert!((predicted - 0.75).abs() <= 1e-15);
        let beta = spec.beta();
        assert!((1.0 - 4.0 * beta * beta - exact).abs() <= 1e-12);
    }

    #[test]
    fn zero_error_probabilities() {
        let mut rng = rng_from_seed(21);
        for (k, want) in [(8usize, 1.0), (4, 1.0 / 3.0), (12, 1.0 / 3.0)] {
            let spec = SubsetSpec::random(4, k, &mut rng).unwrap();
            let s = make_subset_state(&spec);
            let config = ZeroErrorConfig::for_cardinality(k, 16).unwrap();
            let pre = zero_error_circuit(&s, config).unwrap();
            let p0 = pre.qubit_probability(4, 0).unwrap();
            assert!((p0 - want).abs() <= 1e-12, "K={k}: {p0}");
            let (_, branch) = pre.postselect_and_remove(4, 0).unwrap();
            assert!(branch.mass_on(spec.elements().iter().copied()) <= 1e-12);
            assert!((fidelity(&branch, &make_complement_state(&spec)).unwrap() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn zero_error_never_lands_in_subset() {
        let mut rng = rng_from_seed(22);
        let spec = SubsetSpec::random(4, 4, &mut rng).unwrap();
        let s = make_subset_state(&spec);
        let mut successes = 0;
        for _ in 0..2000 {
            let a = zero_error_swap(&s, &spec, &mut rng).unwrap();
            assert_eq!(a.attempts, 1);
            if a.flag == 0 {
                successes += 1;
                assert!(!spec.contains(a.sample.unwrap()));
            } else {
                assert!(a.sample.is_none());
            }
        }
        assert!(successes > 0 && successes < 2000);

        let half = SubsetSpec::random(4, 8, &mut rng).unwrap();
        let s = make_subset_state(&half);
        for _ in 0..100 {
            assert_eq!(zero_error_swap(&s, &half, &mut rng).unwrap().flag, 0);
        }
    }

    #[test]
    fn repeated_swap_uses_copies() {
        let mut rng = rng_from_seed(23);
        let spec = SubsetSpec::random(4, 12, &mut rng).unwrap();
        let s = make_subset_state(&spec);
        assert!(repeated_zero_error_swap(&[], &spec, &mut rng).is_err());
        let copies = vec![s.clone(); 3];
        let mut used = [0usize; 4];
        for _ in 0..500 {
            let a = repeated_zero_error_swap(&copies, &spec, &mut rng).unwrap();
            used[a.attempts] += 1;
            if a.flag == 0 {
                assert!(!spec.contains(a.sample.unwrap()));
            } else {
                assert_eq!(a.attempts, 3);
            }
        }
        assert!(used[2] > 0 && used[3] > 0);
        assert!((repeated_success_probability(2.0 / 3.0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((repeated_success_probability(1.0 / 3.0, 3) - 19.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn deutsch_jozsa_on_phase_states() {
        let mut rng = rng_from_seed(24);
        let con = StateVector::uniform(4).unwrap();
        assert_eq!(dj_distinguish(&con, &mut rng).unwrap(), 0);
        assert!(dj_balanced_probability(&con).unwrap().abs() <= 1e-12);
        for _ in 0..100 {
            let f = BalancedFunctionSpec::new(SubsetSpec::random(4, 8, &mut rng).unwrap()).unwrap();
            let bal = make_phase_state(&PhaseFunction::Balanced(f.clone())).unwrap();
            assert_eq!(dj_distinguish(&bal, &mut rng).unwrap(), 1);
            assert!((dj_balanced_probability(&bal).unwrap() - 1.0).abs() <= 1e-12);
            let (plus, minus) = make_conjugate_states(f.support());
            assert!((distinguishing_bias(&plus, &minus).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn aas_swapper_is_negative_diffusion() {
        let mut rng = rng_from_seed(25);
        for n in 1..=6 {
            for _ in 0..10 {
                let s = StateVector::random(n, &mut rng).unwrap();
                let a = aas_swapper_from_distinguisher(&s);
                let u = apply_diffusion(&s);
                let sum = a
                    .amplitudes()
                    .iter()
                    .zip(u.amplitudes())
                    .map(|(x, y)| (x + y).norm())
                    .fold(0.0, f64::max);
                assert!(sum <= 1e-12);
            }
        }
        let plus = StateVector::uniform(3).unwrap();
        let out = aas_swapper_from_distinguisher(&plus);
        assert!(out.amplitudes().iter().zip(plus.amplitudes()).all(|(a, b)| (a + b).norm() < 1e-12));

        let spec = SubsetSpec::random(4, 8, &mut rng).unwrap();
        let out = aas_swapper_from_distinguisher(&make_subset_state(&spec));
        let comp = make_complement_state(&spec);
        assert!(out.amplitudes().iter().zip(comp.amplitudes()).all(|(a, b)| (a + b).norm() <= 1e-12));
    }

    #[test]
    fn coupon_collector_hit_rates() {
        let mut rng = rng_from_seed(26);
        for k in 1..16 {
            let spec = SubsetSpec::random(4, k, &mut rng).unwrap();
            let p = coupon_collector_hit_probability(&make_subset_state(&spec), &spec).unwrap();
            let r = k as f64 / 16.0;
            assert!((p - 2.0 * r * (1.0 - r)).abs() <= 1e-12, "K={k}");
        }
        let spec = SubsetSpec::random(4, 8, &mut rng).unwrap();
        let s = make_subset_state(&spec);
        let trials = 20_000;
        let hits = (0..trials)
            .filter(|_| !spec.contains(coupon_collector_sample(&s, &mut rng).unwrap()))
            .count();
        let sigma = (0.25 / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - 0.5).abs() <= 5.0 * sigma);
    }

    #[test]
    fn curves_at_zero_and_errors() {
        let rows = success_curves(&[0.0], 16, 0, 1).unwrap();
        let a = rows[0].analytic;
        assert_eq!((a.cs, a.ze, a.cc), (1.0, 1.0, 0.5));
        assert!((a.cl - 8.0 / 15.0).abs() < 1e-15);
        assert!(rows[0].simulated.is_none());
        assert!(matches!(
            success_curves(&[0.1], 16, 0, 1),
            Err(Error::NonIntegralCardinality { .. })
        ));
        assert!(success_curves(&[0.5], 16, 0, 1).is_err());
        assert!(success_curves(&[-0.5], 16, 0, 1).is_err());
        assert!(success_curves(&[0.0], 12, 0, 1).is_err());
    }

    #[test]
    fn curve_simulation_tracks_analytic() {
        let trials = 20_000;
        let rows = success_curves(&[0.25, -0.125], 16, trials, 99).unwrap();
        for row in rows {
            let a = row.analytic;
            let s = row.simulated.unwrap();
            for (p, est) in [(a.cs, s.cs), (a.ze, s.ze), (a.cc, s.cc), (a.cl, s.cl)] {
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                assert!((p - est).abs() <= 5.0 * sigma, "beta={} p={p} est={est}", row.beta);
            }
        }
    }

    #[test]
    fn csv_is_deterministic() {
        let grid = admissible_betas(8);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_curves_csv(&success_curves(&grid, 8, 100, 5).unwrap(), 100, 5, &mut a).unwrap();
        write_curves_csv(&success_curves(&grid, 8, 100, 5).unwrap(), 100, 5, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with(CURVE_CSV_HEADER));
    }
}
