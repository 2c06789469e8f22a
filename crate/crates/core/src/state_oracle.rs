//! Brute-force reference for small walks: the full `2ᴹ`-dimensional coin
//! register is evolved in position space, one coin flip and one conditional
//! shift per step. Used only to validate [`crate::walk_engine`].
//!
//! Coin `j` occupies bit `j` of the register index; a clear bit is the
//! chirality `|1⟩` (step `+1`), a set bit is `|-1⟩` (step `-1`).

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coin_kernel::{Mat2, Qubit};
use crate::walk_engine::{CoinInit, InitialSpec, PositionDistribution, WalkError};

pub const MAX_COINS: usize = 12;
pub const MAX_STEPS: usize = 24;
/// Largest number of enumerated basis assignments for random coins.
pub const MAX_ASSIGNMENTS: usize = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle supports at most {MAX_COINS} coins and {MAX_STEPS} steps (got M = {m}, t = {t})")]
    SizeExceeded { m: usize, t: usize },
    #[error("evolve needs every coin to be pure")]
    MixedCoin,
    #[error("initial condition has {init} coins, expected {m}")]
    CoinCountMismatch { m: usize, init: usize },
    #[error("{0} random coins exceed the enumeration budget")]
    TooManyMixed(usize),
    #[error("sample count must be positive")]
    NoSamples,
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// Coin register amplitudes at every position, stored densely over
/// `[-t, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    m: usize,
    t: usize,
    amps: Vec<C64>,
}

impl FullState {
    fn dim(&self) -> usize {
        1 << self.m
    }

    pub fn coins(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Register amplitudes at position `x`.
    pub fn at(&self, x: i64) -> &[C64] {
        let i = (x + self.t as i64) as usize;
        &self.amps[i * self.dim()..(i + 1) * self.dim()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn position_masses(&self) -> Vec<f64> {
        self.amps.chunks(self.dim()).map(|c| c.iter().map(|a| a.norm_sqr()).sum()).collect()
    }
}

fn check_size(m: usize, t: usize) -> Result<(), OracleError> {
    if m == 0 || m > MAX_COINS || t > MAX_STEPS {
        return Err(OracleError::SizeExceeded { m, t });
    }
    Ok(())
}

/// Evolves a product of pure coins for `t` steps. Step `s` flips coin
/// `s mod M` with the Hadamard matrix and shifts by that coin's chirality.
pub fn evolve(m: usize, t: usize, init: &InitialSpec) -> Result<FullState, OracleError> {
    check_size(m, t)?;
    if init.len() != m {
        return Err(OracleError::CoinCountMismatch { m, init: init.len() });
    }
    let qubits = init
        .coins()
        .iter()
        .map(|c| match c {
            CoinInit::Pure(q) => Ok(*q),
            CoinInit::MixedBasis => Err(OracleError::MixedCoin),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(evolve_product(&qubits, t, |_, _| {}))
}

/// Core loop; `on_step` observes the state after each step.
fn evolve_product<F: FnMut(usize, &FullState)>(qubits: &[Qubit], t: usize, mut on_step: F) -> FullState {
    let m = qubits.len();
    let dim = 1usize << m;
    let width = 2 * t + 1;
    let mut state = FullState {
        m,
        t,
        amps: vec![C64::new(0.0, 0.0); width * dim],
    };
    let origin = t * dim;
    for b in 0..dim {
        state.amps[origin + b] = (0..m).fold(C64::new(1.0, 0.0), |acc, j| {
            acc * qubits[j].as_array()[(b >> j) & 1]
        });
    }

    let h = Mat2::hadamard().0;
    let mut next = vec![C64::new(0.0, 0.0); width * dim];
    for s in 0..t {
        let j = s % m;
        let bit = 1usize << j;
        next.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        for pos in 0..width {
            let base = pos * dim;
            for b in 0..dim {
                if b & bit != 0 {
                    continue;
                }
                let up = state.amps[base + b];
                let down = state.amps[base + (b | bit)];
                if up == C64::new(0.0, 0.0) && down == C64::new(0.0, 0.0) {
                    continue;
                }
                let new_up = h[0][0] * up + h[0][1] * down;
                let new_down = h[1][0] * up + h[1][1] * down;
                // chirality +1 moves right, -1 moves left; support stays in [-t, t]
                next[base + dim + b] += new_up;
                next[base - dim + (b | bit)] += new_down;
            }
        }
        std::mem::swap(&mut state.amps, &mut next);
        on_step(s, &state);
    }
    state
}

fn to_distribution(state: &FullState) -> Result<PositionDistribution, OracleError> {
    Ok(PositionDistribution::new(state.t, state.position_masses())?)
}

fn basis_qubit(set: bool) -> Qubit {
    if set {
        Qubit::left()
    } else {
        Qubit::right()
    }
}

/// Pure coins as given, random coins replaced by basis states encoded in
/// the bits of `assignment`.
fn assign(init: &InitialSpec, assignment: usize) -> Vec<Qubit> {
    let mut r = 0;
    init.coins()
        .iter()
        .map(|c| match c {
            CoinInit::Pure(q) => *q,
            CoinInit::MixedBasis => {
                let q = basis_qubit((assignment >> r) & 1 == 1);
                r += 1;
                q
            }
        })
        .collect()
}

fn average(t: usize, runs: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
    let mut acc = vec![0.0; 2 * t + 1];
    let mut n = 0usize;
    for run in runs {
        acc.iter_mut().zip(run).for_each(|(a, b)| *a += b);
        n += 1;
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    acc
}

/// Exact distribution; random basis coins are averaged over all `2ʳ`
/// assignments.
pub fn oracle_distribution(m: usize, t: usize, init: &InitialSpec) -> Result<PositionDistribution, OracleError> {
    check_size(m, t)?;
    if init.len() != m {
        return Err(OracleError::CoinCountMismatch { m, init: init.len() });
    }
    let r = init.count_mixed();
    if (1usize << r) > MAX_ASSIGNMENTS {
        return Err(OracleError::TooManyMixed(r));
    }
    let mass = average(
        t,
        (0..1usize << r).map(|a| evolve_product(&assign(init, a), t, |_, _| {}).position_masses()),
    );
    Ok(PositionDistribution::new(t, mass)?)
}

/// Monte-Carlo estimate of the all-random-coin distribution from
/// `n_samples` i.i.d. basis assignments. When `2ᴹ ≤ n_samples` every
/// assignment is enumerated instead and the result is exact.
pub fn sample_case_b(m: usize, t: usize, n_samples: usize, seed: u64) -> Result<PositionDistribution, OracleError> {
    check_size(m, t)?;
    if n_samples == 0 {
        return Err(OracleError::NoSamples);
    }
    let init = InitialSpec::case_b(m);
    if (1usize << m) <= n_samples {
        return oracle_distribution(m, t, &init);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<usize> = (0..n_samples).map(|_| rng.random_range(0..1usize << m)).collect();
    let mass = average(
        t,
        draws.into_iter().map(|a| evolve_product(&assign(&init, a), t, |_, _| {}).position_masses()),
    );
    Ok(PositionDistribution::new(t, mass)?)
}

/// Squared norm after every step, for unitarity checks.
pub fn norm_history(init: &InitialSpec, t: usize) -> Result<Vec<f64>, OracleError> {
    let m = init.len();
    check_size(m, t)?;
    let qubits = assign(init, 0);
    let mut norms = Vec::with_capacity(t);
    evolve_product(&qubits, t, |_, st| norms.push(st.norm_sqr()));
    Ok(norms)
}

/// Distribution of a pure product state, as [`evolve`] followed by
/// squared norms.
pub fn pure_distribution(m: usize, t: usize, init: &InitialSpec) -> Result<PositionDistribution, OracleError> {
    to_distribution(&evolve(m, t, init)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_steps_keeps_product_state_at_origin() {
        let init = InitialSpec::new(vec![CoinInit::Pure(Qubit::symmetric()), CoinInit::Pure(Qubit::left())]).unwrap();
        let st = evolve(2, 0, &init).unwrap();
        let amps = st.at(0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // bit 0 = coin 0, bit 1 = coin 1 (in |-1⟩)
        assert_abs_diff_eq!(amps[0b10].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(amps[0b11].im, s, epsilon = 1e-15);
        assert_eq!(amps[0b00], C64::new(0.0, 0.0));
    }

    #[test]
    fn single_coin_two_steps() {
        let d = pure_distribution(1, 2, &InitialSpec::case_a(1)).unwrap();
        assert_abs_diff_eq!(d.mass_at(-2), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(d.mass_at(0), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(d.mass_at(2), 0.25, epsilon = 1e-14);
        // amplitudes by hand: H(1,i)/√2 = ((1+i)/2, (1-i)/2)
        let st = evolve(1, 1, &InitialSpec::case_a(1)).unwrap();
        assert_abs_diff_eq!(st.at(1)[0].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(st.at(1)[0].im, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(st.at(-1)[1].im, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn binomial_for_random_coins() {
        let d = oracle_distribution(3, 3, &InitialSpec::case_b(3)).unwrap();
        for (x, p) in [(-3, 0.125), (-1, 0.375), (1, 0.375), (3, 0.125)] {
            assert_abs_diff_eq!(d.mass_at(x), p, epsilon = 1e-14);
        }
    }

    #[test]
    fn norm_is_preserved_for_random_pure_inits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = rng.random_range(1..=5);
            let coins = (0..m)
                .map(|_| {
                    let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let b = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    CoinInit::Pure(Qubit::normalized(a, b).unwrap())
                })
                .collect();
            let init = InitialSpec::new(coins).unwrap();
            for n in norm_history(&init, 16).unwrap() {
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixture_equals_average_of_basis_runs() {
        let m = 3;
        let t = 7;
        let mixed = oracle_distribution(m, t, &InitialSpec::case_b(m)).unwrap();
        let mut acc = vec![0.0; 2 * t + 1];
        for a in 0..1 << m {
            let init = InitialSpec::new((0..m).map(|j| CoinInit::Pure(basis_qubit((a >> j) & 1 == 1))).collect()).unwrap();
            let d = pure_distribution(m, t, &init).unwrap();
            acc.iter_mut().zip(d.mass()).for_each(|(x, y)| *x += y / 8.0);
        }
        for (a, b) in acc.iter().zip(mixed.mass()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn sampling_enumerates_when_cheap_and_is_reproducible() {
        let exact = oracle_distribution(3, 6, &InitialSpec::case_b(3)).unwrap();
        assert_eq!(sample_case_b(3, 6, 8, 99).unwrap(), exact);
        let a = sample_case_b(4, 8, 10, 3).unwrap();
        let b = sample_case_b(4, 8, 10, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_error_is_small() {
        let exact = oracle_distribution(4, 8, &InitialSpec::case_b(4)).unwrap();
        // 2⁴ = 16 ≤ 4000 so this enumerates; force sampling through M = 4 with n < 16
        let est = sample_case_b(4, 8, 4000, 1).unwrap();
        assert!(est.total_variation(&exact) < 0.05);
        let rough = sample_case_b(4, 8, 12, 1).unwrap();
        assert!(rough.total_variation(&exact) < 0.5);
    }

    #[test]
    fn size_limits() {
        assert!(matches!(
            evolve(13, 2, &InitialSpec::case_a(13)),
            Err(OracleError::SizeExceeded { .. })
        ));
        assert!(matches!(evolve(2, 3, &InitialSpec::case_b(2)), Err(OracleError::MixedCoin)));
        assert!(matches!(sample_case_b(2, 3, 0, 1), Err(OracleError::NoSamples)));
    }
}
