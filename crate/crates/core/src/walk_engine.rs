//! Exact position distribution of the M-coin walk through its factorised
//! characteristic function
//!
//! ```text
//! E[e^{iξX_t}] = ∫₀^{2π} Π_j F_j(k, ξ) dk/2π
//! ```
//!
//! where each coin contributes `Q_n(k, ξ) = ⟨Ĥⁿ(k)φ, Ĥⁿ(k+ξ)φ⟩` when its
//! initial state is pure and `C_n(k, ξ) = Tr[Ĥ⁻ⁿ(k) Ĥⁿ(k+ξ)]/2` when it is a
//! uniformly random basis state, with `n ∈ {d, d+1}` the number of times it
//! has been flipped. The integrand is a trigonometric polynomial of degree at
//! most `2t` in `k` and `φ` one of degree at most `t` in `ξ`, so the uniform
//! rectangle rule and the discrete Fourier inversion below are exact up to
//! rounding. The cost is `O(t²)` and does not depend on `2ᴹ`.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

use crate::coin_kernel::{eigensystem, inner, FourierEigensystem, Mat2, Qubit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("initial condition must contain at least one coin")]
    EmptyInit,
    #[error("walk has {spec} coins but the initial condition has {init}")]
    CoinCountMismatch { spec: usize, init: usize },
    #[error("number of coins must be positive")]
    NoCoins,
    #[error("estimated cost {estimated:.3e} exceeds budget {budget:.3e}")]
    BudgetExceeded { estimated: f64, budget: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("moment order {0} not in 1..=8")]
    MomentOrder(u32),
}

/// Initial state of one coin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoinInit {
    Pure(Qubit),
    /// Uniformly random basis state `|1⟩` or `|-1⟩`, i.e. the maximally
    /// mixed qubit.
    MixedBasis,
}

/// Ordered per-coin initial conditions; entry `j` is coin `j`, the coin
/// flipped at steps `s ≡ j (mod M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    coins: Vec<CoinInit>,
}

impl InitialSpec {
    pub fn new(coins: Vec<CoinInit>) -> Result<Self, WalkError> {
        if coins.is_empty() {
            return Err(WalkError::EmptyInit);
        }
        Ok(InitialSpec { coins })
    }

    pub fn uniform(m: usize, phi: Qubit) -> Self {
        InitialSpec {
            coins: vec![CoinInit::Pure(phi); m.max(1)],
        }
    }

    /// Every coin in `(1, i)/√2`.
    pub fn case_a(m: usize) -> Self {
        Self::uniform(m, Qubit::symmetric())
    }

    /// Every coin a uniformly random basis state.
    pub fn case_b(m: usize) -> Self {
        InitialSpec {
            coins: vec![CoinInit::MixedBasis; m.max(1)],
        }
    }

    /// Every coin in `|1⟩`.
    pub fn ket1(m: usize) -> Self {
        Self::uniform(m, Qubit::right())
    }

    /// `n_pure` leading coins in `(1, i)/√2`, the rest random basis states.
    pub fn mixture(m: usize, n_pure: usize) -> Self {
        let m = m.max(1);
        let n_pure = n_pure.min(m);
        let mut coins = vec![CoinInit::Pure(Qubit::symmetric()); n_pure];
        coins.extend(std::iter::repeat_n(CoinInit::MixedBasis, m - n_pure));
        InitialSpec { coins }
    }

    pub fn coins(&self) -> &[CoinInit] {
        &self.coins
    }

    pub fn len(&self) -> usize {
        self.coins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coins.is_empty()
    }

    pub fn count_mixed(&self) -> usize {
        self.coins.iter().filter(|c| matches!(c, CoinInit::MixedBasis)).count()
    }
}

/// `M` coins walked for `t` steps, `t = dM + q` with `0 ≤ q < M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WalkSpec {
    coins: usize,
    steps: usize,
}

impl WalkSpec {
    pub fn new(coins: usize, steps: usize) -> Result<Self, WalkError> {
        if coins == 0 {
            return Err(WalkError::NoCoins);
        }
        Ok(WalkSpec { coins, steps })
    }

    pub fn coins(&self) -> usize {
        self.coins
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn d(&self) -> usize {
        self.steps / self.coins
    }

    pub fn q(&self) -> usize {
        self.steps % self.coins
    }

    /// Number of flips coin `j` has received after `t` steps.
    pub fn flips_of(&self, j: usize) -> usize {
        if j < self.q() {
            self.d() + 1
        } else {
            self.d()
        }
    }
}

/// Probability mass on `x ∈ {-t, …, t}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionDistribution {
    t: usize,
    mass: Vec<f64>,
}

impl PositionDistribution {
    /// Validates and cleans raw masses: entries above `-1e-9` are accepted
    /// and clamped at zero, wrong-parity sites are zeroed, and the total
    /// (which must be within `1e-10` of one) is renormalised.
    pub fn new(t: usize, mut mass: Vec<f64>) -> Result<Self, WalkError> {
        if mass.len() != 2 * t + 1 {
            return Err(WalkError::InvalidDistribution(format!(
                "expected {} entries, got {}",
                2 * t + 1,
                mass.len()
            )));
        }
        for (i, m) in mass.iter_mut().enumerate() {
            if !m.is_finite() || *m < -1e-9 {
                return Err(WalkError::InvalidDistribution(format!(
                    "mass {m} at x = {}",
                    i as i64 - t as i64
                )));
            }
            if i % 2 == 1 {
                // x = i - t has the wrong parity
                if m.abs() > 1e-9 {
                    return Err(WalkError::InvalidDistribution(format!(
                        "mass {m} on odd-parity site x = {}",
                        i as i64 - t as i64
                    )));
                }
                *m = 0.0;
            }
            if *m < 0.0 {
                *m = 0.0;
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(WalkError::InvalidDistribution(format!("total mass {total}")));
        }
        mass.iter_mut().for_each(|m| *m /= total);
        Ok(PositionDistribution { t, mass })
    }

    pub fn point_mass_at_origin() -> Self {
        PositionDistribution { t: 0, mass: vec![1.0] }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Raw masses indexed by `x + t`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_at(&self, x: i64) -> f64 {
        let i = x + self.t as i64;
        if i < 0 || i >= self.mass.len() as i64 {
            0.0
        } else {
            self.mass[i as usize]
        }
    }

    /// `(x, P(X = x))` over `-t..=t`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let t = self.t as i64;
        self.mass.iter().enumerate().map(move |(i, &m)| (i as i64 - t, m))
    }

    /// Sites of the correct parity, `x ≡ t (mod 2)`.
    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.iter().step_by(2)
    }

    pub fn total_variation(&self, other: &PositionDistribution) -> f64 {
        let r = self.t.max(other.t) as i64;
        0.5 * (-r..=r)
            .map(|x| (self.mass_at(x) - other.mass_at(x)).abs())
            .sum::<f64>()
    }

    /// `Σ_x P(x) (x/t^θ)ⁿ`.
    pub fn scaled_moment(&self, n: u32, theta: f64) -> f64 {
        let scale = (self.t.max(1) as f64).powf(theta);
        self.iter()
            .map(|(x, m)| m * (x as f64 / scale).powi(n as i32))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.scaled_moment(1, 0.0)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.iter().map(|(x, m)| m * (x as f64 - mu).powi(2)).sum()
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().max(0.0).sqrt()
    }
}

/// `E[(X/t^θ)ⁿ]` for `1 ≤ n ≤ 8`.
pub fn moments(dist: &PositionDistribution, n: u32, theta: f64) -> Result<f64, WalkError> {
    if !(1..=8).contains(&n) {
        return Err(WalkError::MomentOrder(n));
    }
    Ok(dist.scaled_moment(n, theta))
}

/// Per-coin factor for a pure initial coin.
pub fn q_factor(k: f64, xi: f64, d: u32, phi: &Qubit) -> C64 {
    if d == 0 {
        return inner(phi.as_array(), phi.as_array());
    }
    let a = eigensystem(k).power(d as i64).apply(phi.as_array());
    let b = eigensystem(k + xi).power(d as i64).apply(phi.as_array());
    inner(&a, &b)
}

/// Per-coin factor for a random basis coin.
pub fn c_factor(k: f64, xi: f64, d: u32) -> C64 {
    if d == 0 {
        return C64::new(1.0, 0.0);
    }
    half_trace_overlap(&eigensystem(k).power(d as i64), &eigensystem(k + xi).power(d as i64))
}

/// `Tr[A† B] / 2`.
#[inline]
fn half_trace_overlap(a: &Mat2, b: &Mat2) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += a.0[i][j].conj() * b.0[i][j];
        }
    }
    acc * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GroupKind {
    Pure([C64; 2]),
    Mixed,
}

/// Coins sharing an initial condition and a flip count; their factors are
/// identical and enter the product as one power.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CoinGroup {
    kind: GroupKind,
    flips: u32,
    count: u32,
}

fn coin_groups(spec: &WalkSpec, init: &InitialSpec) -> Result<Vec<CoinGroup>, WalkError> {
    if spec.coins() != init.len() {
        return Err(WalkError::CoinCountMismatch {
            spec: spec.coins(),
            init: init.len(),
        });
    }
    let mut groups: Vec<CoinGroup> = Vec::new();
    for (j, coin) in init.coins().iter().enumerate() {
        let flips = spec.flips_of(j) as u32;
        if flips == 0 {
            continue;
        }
        let kind = match coin {
            CoinInit::Pure(q) => GroupKind::Pure(*q.as_array()),
            CoinInit::MixedBasis => GroupKind::Mixed,
        };
        match groups.iter_mut().find(|g| g.kind == kind && g.flips == flips) {
            Some(g) => g.count += 1,
            None => groups.push(CoinGroup { kind, flips, count: 1 }),
        }
    }
    Ok(groups)
}

fn group_factor(g: &CoinGroup, at_k: &FourierEigensystem, at_kxi: &FourierEigensystem) -> C64 {
    let n = g.flips as i64;
    match g.kind {
        GroupKind::Pure(phi) => inner(&at_k.power(n).apply(&phi), &at_kxi.power(n).apply(&phi)),
        GroupKind::Mixed => half_trace_overlap(&at_k.power(n), &at_kxi.power(n)),
    }
}

/// Number of `k`-nodes used for a walk of `t` steps (at least `2t + 2`).
pub fn k_nodes(t: usize) -> usize {
    2 * (2 * t + 1)
}

/// `E[e^{iξX_t}]` at an arbitrary real `ξ`.
pub fn characteristic_function(spec: &WalkSpec, init: &InitialSpec, xi: f64) -> Result<C64, WalkError> {
    let groups = coin_groups(spec, init)?;
    let n = k_nodes(spec.steps());
    let step = TAU / n as f64;
    let sum = (0..n)
        .into_par_iter()
        .map(|j| {
            let k = step * j as f64;
            let a = eigensystem(k);
            let b = eigensystem(k + xi);
            groups
                .iter()
                .fold(C64::new(1.0, 0.0), |acc, g| acc * group_factor(g, &a, &b).powu(g.count))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(C64::new(0.0, 0.0), |acc, z| acc + z);
    Ok(sum / n as f64)
}

/// Grid sizes. `N_ξ = xi_oversample · (2t+1)` inversion nodes and
/// `N_k = k_per_xi · N_ξ` momentum nodes; every `k + ξ_m` then falls on the
/// momentum grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Quadrature {
    pub xi_oversample: usize,
    pub k_per_xi: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            xi_oversample: 1,
            k_per_xi: 2,
        }
    }
}

impl Quadrature {
    pub fn xi_nodes(&self, t: usize) -> usize {
        self.xi_oversample.max(1) * (2 * t + 1)
    }

    pub fn k_nodes(&self, t: usize) -> usize {
        self.k_per_xi.max(1) * self.xi_nodes(t)
    }
}

/// Default cost ceiling, in (ξ-node × k-node × coin-group) evaluations.
pub const DEFAULT_BUDGET: f64 = 2e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngineConfig {
    pub quadrature: Quadrature,
    pub budget: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            quadrature: Quadrature::default(),
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Cost of [`distribution_with`] in evaluation units.
pub fn estimated_cost(spec: &WalkSpec, init: &InitialSpec, quad: &Quadrature) -> Result<f64, WalkError> {
    let groups = coin_groups(spec, init)?.len().max(1);
    let t = spec.steps();
    Ok((quad.xi_nodes(t) / 2 + 1) as f64 * quad.k_nodes(t) as f64 * groups as f64)
}

/// Products smaller than `e^-NEGLIGIBLE_LOG` are dropped from the
/// momentum sum.
const NEGLIGIBLE_LOG: f64 = 46.0;

/// Terms summed directly before compensated accumulation.
const BLOCK: usize = 256;

/// Per-group tabulation of `Ĥⁿ(k_j)φ` or `Ĥⁿ(k_j)` over the momentum grid.
enum Table {
    Pure(Vec<[C64; 2]>),
    Mixed(Vec<Mat2>),
}

/// `φ(ξ_m)` for `ξ_m = 2πm/N_ξ`, `m = 0..N_ξ`.
pub fn characteristic_on_grid(
    spec: &WalkSpec,
    init: &InitialSpec,
    quad: &Quadrature,
) -> Result<Vec<C64>, WalkError> {
    let groups = coin_groups(spec, init)?;
    let t = spec.steps();
    let n_xi = quad.xi_nodes(t);
    let n_k = quad.k_nodes(t);
    let stride = quad.k_per_xi.max(1);
    let dk = TAU / n_k as f64;

    let eigs: Vec<FourierEigensystem> = (0..n_k).into_par_iter().map(|j| eigensystem(dk * j as f64)).collect();
    let tables: Vec<(Table, u32, f64)> = groups
        .iter()
        .map(|g| {
            let n = g.flips as i64;
            let table = match g.kind {
                GroupKind::Pure(phi) => Table::Pure(eigs.par_iter().map(|e| e.power(n).apply(&phi)).collect()),
                GroupKind::Mixed => Table::Mixed(eigs.par_iter().map(|e| e.power(n)).collect()),
            };
            // |f|² below this makes |f|^count < e^-46 ≈ 1e-20
            let cut = (-2.0 * NEGLIGIBLE_LOG / g.count as f64).exp();
            (table, g.count, cut)
        })
        .collect();
    drop(eigs);

    let half = n_xi / 2;
    let head: Vec<C64> = (0..=half)
        .into_par_iter()
        .map(|m| {
            let mut j2 = (m * stride) % n_k;
            let mut sum = C64::new(0.0, 0.0);
            let mut comp = C64::new(0.0, 0.0);
            let mut block = C64::new(0.0, 0.0);
            for j in 0..n_k {
                let mut prod = C64::new(1.0, 0.0);
                for (table, count, cut) in &tables {
                    let f = match table {
                        Table::Pure(v) => inner(&v[j], &v[j2]),
                        Table::Mixed(u) => half_trace_overlap(&u[j], &u[j2]),
                    };
                    if f.norm_sqr() < *cut {
                        prod = C64::new(0.0, 0.0);
                        break;
                    }
                    prod *= if *count == 1 { f } else { f.powu(*count) };
                }
                block += prod;
                j2 += 1;
                if j2 == n_k {
                    j2 = 0;
                }
                if j % BLOCK == BLOCK - 1 || j == n_k - 1 {
                    // Kahan–Babuška summation of block partial sums
                    let s = sum + block;
                    comp += if sum.norm_sqr() >= block.norm_sqr() {
                        (sum - s) + block
                    } else {
                        (block - s) + sum
                    };
                    sum = s;
                    block = C64::new(0.0, 0.0);
                }
            }
            (sum + comp) / n_k as f64
        })
        .collect();

    let mut out = vec![C64::new(0.0, 0.0); n_xi];
    out[..=half].copy_from_slice(&head);
    for m in half + 1..n_xi {
        out[m] = out[n_xi - m].conj();
    }
    Ok(out)
}

pub fn distribution(spec: &WalkSpec, init: &InitialSpec) -> Result<PositionDistribution, WalkError> {
    distribution_with(spec, init, &EngineConfig::default())
}

/// Exact `P(X_t = x)` by Fourier inversion of the characteristic function
/// sampled on `N_ξ` equispaced nodes.
pub fn distribution_with(
    spec: &WalkSpec,
    init: &InitialSpec,
    cfg: &EngineConfig,
) -> Result<PositionDistribution, WalkError> {
    let estimated = estimated_cost(spec, init, &cfg.quadrature)?;
    if estimated > cfg.budget {
        return Err(WalkError::BudgetExceeded {
            estimated,
            budget: cfg.budget,
        });
    }
    let t = spec.steps();
    let mut phi = characteristic_on_grid(spec, init, &cfg.quadrature)?;
    let n_xi = phi.len();
    FftPlanner::new().plan_fft_forward(n_xi).process(&mut phi);
    // phi[r] now holds Σ_m φ(ξ_m) e^{-2πi m r / N_ξ} = N_ξ · P(X = r)
    let mass: Vec<f64> = (-(t as i64)..=t as i64)
        .map(|x| phi[x.rem_euclid(n_xi as i64) as usize].re / n_xi as f64)
        .collect();
    PositionDistribution::new(t, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn walk_spec_arithmetic() {
        let s = WalkSpec::new(2, 7).unwrap();
        assert_eq!((s.d(), s.q()), (3, 1));
        assert_eq!(s.flips_of(0), 4);
        assert_eq!(s.flips_of(1), 3);
        assert!(WalkSpec::new(0, 3).is_err());
    }

    #[test]
    fn factors_at_zero_shift() {
        let phi = Qubit::symmetric();
        for &k in &[0.0, 0.4, 2.2, 5.0] {
            for d in 0..6 {
                assert_abs_diff_eq!(q_factor(k, 0.0, d, &phi).re, 1.0, epsilon = 1e-14);
                assert_abs_diff_eq!(c_factor(k, 0.0, d).re, 1.0, epsilon = 1e-14);
            }
            assert_abs_diff_eq!(q_factor(k, 0.7, 0, &phi).re, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_flip_factor_expansion() {
        let phi = Qubit::symmetric();
        let eps = 1e-3;
        for &k in &[0.1, 1.3, 2.8, 4.0] {
            let z = q_factor(k, eps, 1, &phi);
            assert!((z - C64::new(1.0 - eps * eps / 2.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn mixed_factor_expansion_uses_nu() {
        let eps = 1e-3;
        for &k in &[0.1, 1.3, 2.8] {
            let nu = crate::coin_kernel::nu_d(k, 1).unwrap();
            let z = c_factor(k, eps, 1);
            assert!((z - C64::new(1.0 - eps * eps * nu / 2.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn large_d_mixed_factor_is_cosine_of_velocity() {
        let (d, m) = (400u32, 4.0);
        for i in 0..16 {
            let k = TAU * (i as f64 + 0.3) / 16.0;
            let xi = 2.5;
            let z = c_factor(k, xi / (d as f64 * m), d);
            let h = crate::coin_kernel::group_velocity(k).unwrap();
            assert!((z - C64::new((xi * h / m).cos(), 0.0)).norm() < 1e-3, "k={k} z={z}");
        }
    }

    #[test]
    fn characteristic_function_basic_properties() {
        let spec = WalkSpec::new(3, 8).unwrap();
        let init = InitialSpec::new(vec![
            CoinInit::Pure(Qubit::symmetric()),
            CoinInit::MixedBasis,
            CoinInit::Pure(Qubit::right()),
        ])
        .unwrap();
        let one = characteristic_function(&spec, &init, 0.0).unwrap();
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-12);
        for &xi in &[0.3, 1.1, 2.9] {
            let a = characteristic_function(&spec, &init, xi).unwrap();
            let b = characteristic_function(&spec, &init, -xi).unwrap();
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn binomial_characteristic_function() {
        let spec = WalkSpec::new(5, 5).unwrap();
        let init = InitialSpec::case_b(5);
        for &xi in &[0.2, 0.9, 2.0] {
            let z = characteristic_function(&spec, &init, xi).unwrap();
            assert!((z - C64::new(xi.cos().powi(5), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn grid_values_agree_with_direct_evaluation() {
        let spec = WalkSpec::new(2, 5).unwrap();
        let init = InitialSpec::new(vec![CoinInit::Pure(Qubit::symmetric()), CoinInit::MixedBasis]).unwrap();
        let quad = Quadrature::default();
        let grid = characteristic_on_grid(&spec, &init, &quad).unwrap();
        let n = grid.len();
        for (m, z) in grid.iter().enumerate() {
            let xi = TAU * m as f64 / n as f64;
            let direct = characteristic_function(&spec, &init, xi).unwrap();
            assert!((z - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn small_distributions() {
        let d = distribution(&WalkSpec::new(3, 3).unwrap(), &InitialSpec::case_b(3)).unwrap();
        for (x, p) in [(-3, 0.125), (-1, 0.375), (1, 0.375), (3, 0.125)] {
            assert_abs_diff_eq!(d.mass_at(x), p, epsilon = 1e-12);
        }
        let d = distribution(&WalkSpec::new(1, 2).unwrap(), &InitialSpec::case_a(1)).unwrap();
        for (x, p) in [(-2, 0.25), (0, 0.5), (2, 0.25)] {
            assert_abs_diff_eq!(d.mass_at(x), p, epsilon = 1e-12);
        }
        assert_eq!(d.mass_at(1), 0.0);
    }

    #[test]
    fn zero_steps_is_a_point_mass() {
        let d = distribution(&WalkSpec::new(2, 0).unwrap(), &InitialSpec::case_a(2)).unwrap();
        assert_eq!(d.mass(), &[1.0]);
    }

    #[test]
    fn mismatched_coin_count() {
        let err = distribution(&WalkSpec::new(2, 4).unwrap(), &InitialSpec::case_a(3)).unwrap_err();
        assert_eq!(err, WalkError::CoinCountMismatch { spec: 2, init: 3 });
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = EngineConfig {
            budget: 10.0,
            ..EngineConfig::default()
        };
        let err = distribution_with(&WalkSpec::new(2, 50).unwrap(), &InitialSpec::case_a(2), &cfg).unwrap_err();
        assert!(matches!(err, WalkError::BudgetExceeded { .. }));
    }

    #[test]
    fn moment_orders() {
        let d = distribution(&WalkSpec::new(6, 6).unwrap(), &InitialSpec::case_a(6)).unwrap();
        assert_abs_diff_eq!(moments(&d, 2, 0.5).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(moments(&d, 1, 0.5).unwrap(), 0.0, epsilon = 1e-12);
        assert!(moments(&d, 9, 1.0).is_err());
        assert!(moments(&d, 0, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(PositionDistribution::new(1, vec![0.5, 0.0, 0.4]).is_err());
        assert!(PositionDistribution::new(1, vec![0.5, 0.1, 0.4]).is_err());
        assert!(PositionDistribution::new(1, vec![1.1, 0.0, -0.1]).is_err());
        assert!(PositionDistribution::new(1, vec![0.5, 0.0]).is_err());
        let d = PositionDistribution::new(1, vec![0.5, 1e-12, 0.5 - 1e-12]).unwrap();
        assert_eq!(d.mass()[1], 0.0);
    }
}
