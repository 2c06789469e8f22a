//! Spectral analysis of the Fourier-space Hadamard coin
//! `Ĥ(k) = diag(e^{ik}, e^{-ik}) · H`.
//!
//! Derivatives in `k` follow the convention `D_k = i d/dk`, under which
//! `D_k Ĥ(k) = -σ₃ Ĥ(k)`. Powers of the coin and their derivatives are
//! evaluated through the eigendecomposition, never by repeated multiplication.
//!
//! Branch labelling: `λ₀(k) = -e^{-iω(k)}` and `λ₁(k) = e^{iω(k)}` with
//! `sin ω = sin k / √2`. The two eigenvalues never coincide
//! (`|λ₀ - λ₁| = 2 cos ω ≥ √2`), so the labelling is analytic on the whole
//! circle. The group velocities `h₀ = -h₁ = cos k / √(1 + cos² k)` touch only
//! at `k = π/2, 3π/2`, where both vanish.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Tolerance used when validating unit vectors.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoinError {
    #[error("coin vector is not normalised (squared norm {0})")]
    NotNormalized(f64),
    #[error("derivative order d must be at least 1")]
    ZeroPower,
    #[error("argument {0} is outside the open interval (-1/sqrt 2, 1/sqrt 2)")]
    OutOfDomain(f64),
    #[error("non-finite angle {0}")]
    NonFinite(f64),
    #[error("expected a real value but got imaginary residue {0}")]
    ComplexResidue(f64),
}

/// Dense 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn zero() -> Self {
        Mat2([[C64::new(0.0, 0.0); 2]; 2])
    }

    pub fn hadamard() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::new(s, s, s, -s)
    }

    pub fn sigma3() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn apply(&self, v: &[C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.adjoint() * *self).max_abs_diff(&Mat2::identity()) <= tol
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scale(C64::new(-1.0, 0.0))
    }
}

/// `⟨a, b⟩`, conjugate-linear in the first argument.
#[inline]
pub fn inner(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// A unit vector in the single-coin space, in the chirality basis
/// `|1⟩ = (1, 0)`, `|-1⟩ = (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit([C64; 2]);

impl Qubit {
    pub fn new(up: C64, down: C64) -> Result<Self, CoinError> {
        let v = [up, down];
        check_unit(&v)?;
        Ok(Qubit(v))
    }

    /// Rescales `(up, down)` to unit norm. Fails only on the zero vector.
    pub fn normalized(up: C64, down: C64) -> Result<Self, CoinError> {
        let n = (up.norm_sqr() + down.norm_sqr()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(CoinError::NotNormalized(n * n));
        }
        Ok(Qubit([up / n, down / n]))
    }

    /// The symmetric initial coin `(1, i)/√2`.
    pub fn symmetric() -> Self {
        Qubit([C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)])
    }

    /// `|1⟩`: chirality +1, steps to the right.
    pub fn right() -> Self {
        Qubit([C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    /// `|-1⟩`: chirality -1, steps to the left.
    pub fn left() -> Self {
        Qubit([C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }

    pub fn as_array(&self) -> &[C64; 2] {
        &self.0
    }
}

fn check_unit(v: &[C64; 2]) -> Result<(), CoinError> {
    let n2 = v[0].norm_sqr() + v[1].norm_sqr();
    if (n2 - 1.0).abs() > NORM_TOL || !n2.is_finite() {
        return Err(CoinError::NotNormalized(n2));
    }
    Ok(())
}

fn check_finite(k: f64) -> Result<(), CoinError> {
    if k.is_finite() {
        Ok(())
    } else {
        Err(CoinError::NonFinite(k))
    }
}

/// `Ĥ(k)` at a given momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierCoin {
    pub k: f64,
    pub matrix: Mat2,
}

/// Reduces an angle into `[0, 2π)`.
pub fn reduce_angle(k: f64) -> f64 {
    let r = k.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn fourier_coin(k: f64) -> FourierCoin {
    let k = reduce_angle(k);
    let s = FRAC_1_SQRT_2;
    let e = C64::cis(k) * s;
    let f = C64::cis(-k) * s;
    FourierCoin {
        k,
        matrix: Mat2::new(e, e, f, -f),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierEigensystem {
    pub k: f64,
    pub lambda0: C64,
    pub lambda1: C64,
    pub v0: [C64; 2],
    pub v1: [C64; 2],
    /// Arguments of `λ₀`, `λ₁`; powers are formed as `cis(n·phase)`.
    phases: [f64; 2],
    projectors: [Mat2; 2],
}

pub fn eigensystem(k: f64) -> FourierEigensystem {
    let coin = fourier_coin(k);
    let s = coin.k.sin() * FRAC_1_SQRT_2;
    let c = (1.0 - s * s).sqrt();
    let omega = s.atan2(c);
    let lambda1 = C64::new(c, s);
    let lambda0 = C64::new(-c, s);
    let phases = [PI - omega, omega];

    let id = Mat2::identity();
    let gap = lambda0 - lambda1;
    let p0 = (coin.matrix - id.scale(lambda1)).scale(gap.inv());
    let p1 = (coin.matrix - id.scale(lambda0)).scale(-gap.inv());

    FourierEigensystem {
        k: coin.k,
        lambda0,
        lambda1,
        v0: projector_column(&p0),
        v1: projector_column(&p1),
        phases,
        projectors: [p0, p1],
    }
}

/// Unit eigenvector from a rank-one projector, gauge fixed so that its
/// larger component is real and positive.
fn projector_column(p: &Mat2) -> [C64; 2] {
    let col0 = [p.0[0][0], p.0[1][0]];
    let col1 = [p.0[0][1], p.0[1][1]];
    let n0 = col0[0].norm_sqr() + col0[1].norm_sqr();
    let n1 = col1[0].norm_sqr() + col1[1].norm_sqr();
    let (col, n) = if n0 >= n1 { (col0, n0) } else { (col1, n1) };
    let n = n.sqrt();
    [col[0] / n, col[1] / n]
}

impl FourierEigensystem {
    pub fn eigenvalue(&self, j: usize) -> C64 {
        [self.lambda0, self.lambda1][j]
    }

    pub fn eigenvector(&self, j: usize) -> [C64; 2] {
        [self.v0, self.v1][j]
    }

    pub fn projector(&self, j: usize) -> Mat2 {
        self.projectors[j]
    }

    /// `λⱼⁿ`, exact to rounding of `n·arg λⱼ`.
    pub fn eigenvalue_pow(&self, j: usize, n: i64) -> C64 {
        C64::cis(n as f64 * self.phases[j])
    }

    /// `Ĥ(k)ⁿ = λ₀ⁿ P₀ + λ₁ⁿ P₁`.
    pub fn power(&self, n: i64) -> Mat2 {
        self.projectors[0].scale(self.eigenvalue_pow(0, n))
            + self.projectors[1].scale(self.eigenvalue_pow(1, n))
    }

    /// `D_k(Ĥⁿ) = -Σ_{a<n} Ĥᵃ σ₃ Ĥⁿ⁻ᵃ`, summed in the eigenbasis.
    pub fn power_derivative(&self, n: u32) -> Mat2 {
        if n == 0 {
            return Mat2::zero();
        }
        let n_i = n as i64;
        let s3 = Mat2::sigma3();
        let mut acc = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                let weight = if i == j {
                    self.eigenvalue_pow(i, n_i) * n as f64
                } else {
                    let li = self.eigenvalue(i);
                    let lj = self.eigenvalue(j);
                    lj * (self.eigenvalue_pow(j, n_i) - self.eigenvalue_pow(i, n_i)) / (lj - li)
                };
                acc = acc + (self.projectors[i] * s3 * self.projectors[j]).scale(weight);
            }
        }
        acc.scale(C64::new(-1.0, 0.0))
    }

    /// `D_k²(Ĥⁿ) = -Σ_{a<n} [D_k(Ĥᵃ) σ₃ Ĥⁿ⁻ᵃ + Ĥᵃ σ₃ D_k(Ĥⁿ⁻ᵃ)]`.
    pub fn power_second_derivative(&self, n: u32) -> Mat2 {
        let s3 = Mat2::sigma3();
        let mut acc = Mat2::zero();
        for a in 0..n {
            let rest = n - a;
            acc = acc
                + self.power_derivative(a) * s3 * self.power(rest as i64)
                + self.power(a as i64) * s3 * self.power_derivative(rest);
        }
        acc.scale(C64::new(-1.0, 0.0))
    }
}

/// `Ĥ(k)ᵈ` via the eigendecomposition.
pub fn coin_power(k: f64, d: u32) -> Mat2 {
    if d == 0 {
        return Mat2::identity();
    }
    eigensystem(k).power(d as i64)
}

/// Group velocity `h(k) ≡ h₀(k) = D_k λ₀ / λ₀ = cos k / √(1 + cos² k)`.
pub fn group_velocity(k: f64) -> Result<f64, CoinError> {
    check_finite(k)?;
    Ok(velocity(k))
}

#[inline]
pub(crate) fn velocity(k: f64) -> f64 {
    let c = k.cos();
    c / (1.0 + c * c).sqrt()
}

/// `h₀, h₁, p, q` at one momentum for one initial coin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDerivatives {
    pub h0: f64,
    pub h1: f64,
    pub p: f64,
    pub q: f64,
}

pub fn spectral_derivatives(k: f64, phi: &[C64; 2]) -> Result<SpectralDerivatives, CoinError> {
    let h0 = group_velocity(k)?;
    let (p, q) = spectral_weights(k, phi)?;
    Ok(SpectralDerivatives { h0, h1: -h0, p, q })
}

/// `p = |⟨v₀(k), φ⟩|²`, `q = |⟨v₁(k), φ⟩|²`.
pub fn spectral_weights(k: f64, phi: &[C64; 2]) -> Result<(f64, f64), CoinError> {
    check_finite(k)?;
    check_unit(phi)?;
    Ok(weights_unchecked(&eigensystem(k), phi))
}

#[inline]
pub(crate) fn weights_unchecked(eig: &FourierEigensystem, phi: &[C64; 2]) -> (f64, f64) {
    let p = inner(&eig.v0, phi).norm_sqr().clamp(0.0, 1.0);
    (p, 1.0 - p)
}

/// `μ_d(k) = ⟨Ψ̂_d, D_k Ψ̂_d⟩ / d` with `Ψ̂_d = Ĥᵈ(k) φ`.
pub fn mu_d(k: f64, d: u32, phi: &[C64; 2]) -> Result<f64, CoinError> {
    check_finite(k)?;
    check_unit(phi)?;
    if d == 0 {
        return Err(CoinError::ZeroPower);
    }
    mu_unchecked(&eigensystem(k), d, phi)
}

pub(crate) fn mu_unchecked(eig: &FourierEigensystem, d: u32, phi: &[C64; 2]) -> Result<f64, CoinError> {
    let psi = eig.power(d as i64).apply(phi);
    let dpsi = eig.power_derivative(d).apply(phi);
    let z = inner(&psi, &dpsi) / d as f64;
    real_part(z)
}

/// `ν_d(k) = Tr[Ĥ⁻ᵈ(k) D_k² Ĥᵈ(k)] / 2d`.
pub fn nu_d(k: f64, d: u32) -> Result<f64, CoinError> {
    check_finite(k)?;
    if d == 0 {
        return Err(CoinError::ZeroPower);
    }
    nu_unchecked(&eigensystem(k), d)
}

pub(crate) fn nu_unchecked(eig: &FourierEigensystem, d: u32) -> Result<f64, CoinError> {
    let inv = eig.power(-(d as i64));
    let z = (inv * eig.power_second_derivative(d)).trace() / (2.0 * d as f64);
    real_part(z)
}

fn real_part(z: C64) -> Result<f64, CoinError> {
    if z.im.abs() > 1e-10 * z.re.abs().max(1.0) {
        return Err(CoinError::ComplexResidue(z.im));
    }
    Ok(z.re)
}

/// Konno change of variables `k(x) = arccos(x / √(1 - x²)) ∈ (0, π)`,
/// the inverse of `h` on `(0, π)`.
pub fn konno_substitution(x: f64) -> Result<f64, CoinError> {
    if !(x.abs() < FRAC_1_SQRT_2) {
        return Err(CoinError::OutOfDomain(x));
    }
    Ok(konno_angle(x))
}

/// `k(x)` clamped to `[0, π]` for `|x| ≥ 1/√2`.
#[inline]
pub(crate) fn konno_angle(x: f64) -> f64 {
    if x >= FRAC_1_SQRT_2 {
        return 0.0;
    }
    if x <= -FRAC_1_SQRT_2 {
        return PI;
    }
    (x / (1.0 - x * x).sqrt()).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn fourier_coin_special_angles() {
        let s = FRAC_1_SQRT_2;
        let h = Mat2::hadamard();
        assert!(fourier_coin(0.0).matrix.max_abs_diff(&h) < 1e-15);
        assert!(fourier_coin(PI).matrix.max_abs_diff(&h.scale(c(-1.0, 0.0))) < 1e-15);
        let expect = Mat2::new(c(0.0, s), c(0.0, s), c(0.0, -s), c(0.0, s));
        assert!(fourier_coin(PI / 2.0).matrix.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn unitary_with_determinant_minus_one_on_grid() {
        for i in 0..1000 {
            let k = TAU * i as f64 / 1000.0;
            let m = fourier_coin(k).matrix;
            assert!(m.is_unitary(1e-12));
            assert!((m.det() + 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn angle_reduction() {
        assert_abs_diff_eq!(fourier_coin(TAU + 0.5).k, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fourier_coin(-0.5).k, TAU - 0.5, epsilon = 1e-12);
    }

    #[test]
    fn small_powers() {
        let k = 1.234;
        assert!(coin_power(k, 0).max_abs_diff(&Mat2::identity()) < 1e-15);
        assert!(coin_power(k, 1).max_abs_diff(&fourier_coin(k).matrix) < 1e-14);
        assert!(coin_power(0.0, 2).max_abs_diff(&Mat2::identity()) < 1e-14);
    }

    #[test]
    fn powers_match_repeated_multiplication() {
        for &k in &[0.0, 0.3, 1.1, PI / 2.0, 2.9, 4.4, 6.0] {
            let step = fourier_coin(k).matrix;
            let mut acc = Mat2::identity();
            for d in 1..=64u32 {
                acc = acc * step;
                assert!(coin_power(k, d).max_abs_diff(&acc) < 1e-10, "k={k} d={d}");
            }
        }
    }

    #[test]
    fn eigenvalues_at_zero_are_those_of_hadamard() {
        let e = eigensystem(0.0);
        assert!((e.lambda0 - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((e.lambda1 - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigen_invariants_and_generic_solver() {
        for i in 0..500 {
            let k = TAU * i as f64 / 500.0;
            let e = eigensystem(k);
            assert!((e.lambda0.norm() - 1.0).abs() < 1e-12);
            assert!((e.lambda1.norm() - 1.0).abs() < 1e-12);
            assert!((e.lambda0 * e.lambda1 + 1.0).norm() < 1e-12);
            assert!(inner(&e.v0, &e.v1).norm() < 1e-12);
            let m = fourier_coin(k).matrix;
            for j in 0..2 {
                let v = e.eigenvector(j);
                let mv = m.apply(&v);
                let lv = [v[0] * e.eigenvalue(j), v[1] * e.eigenvalue(j)];
                assert!((mv[0] - lv[0]).norm() < 1e-12 && (mv[1] - lv[1]).norm() < 1e-12);
            }
        }
        // quadratic-formula oracle on the raw matrix entries
        let m = fourier_coin(0.3).matrix;
        let tr = m.trace();
        let det = m.det();
        let disc = (tr * tr - det * 4.0).sqrt();
        let roots = [(tr + disc) / 2.0, (tr - disc) / 2.0];
        let e = eigensystem(0.3);
        for l in [e.lambda0, e.lambda1] {
            let best = roots.iter().map(|r| (r - l).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10);
        }
    }

    #[test]
    fn branch_labelling_is_continuous() {
        let mut prev = eigensystem(0.0);
        for i in 1..=4000 {
            let e = eigensystem(TAU * i as f64 / 4000.0);
            assert!((e.lambda0 - prev.lambda0).norm() < 5e-3);
            assert!((e.lambda1 - prev.lambda1).norm() < 5e-3);
            prev = e;
        }
    }

    /// Richardson-extrapolated central difference, base step 1e-4.
    fn richardson<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        let h = 1e-4;
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    /// Continuous phase of λ₀ near k.
    fn phase0(k: f64, reference: f64) -> f64 {
        let a = eigensystem(k).lambda0.arg();
        let mut a = a;
        while a - reference > PI {
            a -= TAU;
        }
        while reference - a > PI {
            a += TAU;
        }
        a
    }

    #[test]
    fn closed_form_velocity_matches_phase_derivative() {
        for i in 0..100 {
            let k = TAU * (i as f64 + 0.37) / 100.0;
            let r = eigensystem(k).lambda0.arg();
            // D_k λ₀ / λ₀ = i · i θ₀' = -θ₀'
            let fd = -richardson(|kk| phase0(kk, r), k);
            assert_abs_diff_eq!(group_velocity(k).unwrap(), fd, epsilon = 1e-8);
        }
        let r = eigensystem(PI / 2.0).lambda0.arg();
        assert_abs_diff_eq!(-richardson(|kk| phase0(kk, r), PI / 2.0), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(group_velocity(PI / 2.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(group_velocity(0.0).unwrap(), FRAC_1_SQRT_2, epsilon = 1e-15);
        let r = eigensystem(1e-3).lambda0.arg();
        assert_abs_diff_eq!(-richardson(|kk| phase0(kk, r), 1e-3), FRAC_1_SQRT_2, epsilon = 1e-6);
        assert!(group_velocity(f64::NAN).is_err());
    }

    #[test]
    fn velocities_antisymmetric_weights_sum_to_one() {
        let phi = Qubit::symmetric();
        for i in 0..1000 {
            let k = TAU * i as f64 / 1000.0;
            let s = spectral_derivatives(k, phi.as_array()).unwrap();
            assert_eq!(s.h0 + s.h1, 0.0);
            assert!((s.p + s.q - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&s.p) && (0.0..=1.0).contains(&s.q));
            assert!(s.h0.abs() <= FRAC_1_SQRT_2);
        }
    }

    #[test]
    fn weights_on_eigenvectors() {
        let e = eigensystem(0.77);
        let (p, q) = spectral_weights(0.77, &e.v0).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-12);
        let (p, q) = spectral_weights(0.77, &e.v1).unwrap();
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q, 1.0, epsilon = 1e-12);
        let bad = [c(1.0, 0.0), c(0.1, 0.0)];
        assert!(matches!(spectral_weights(0.77, &bad), Err(CoinError::NotNormalized(_))));
    }

    #[test]
    fn weight_of_symmetric_coin_matches_konno_p() {
        // p(k(x)) against (1 + √(1 - 2x²))/2 on a grid of x.
        let phi = Qubit::symmetric();
        for i in 1..200 {
            let x = -FRAC_1_SQRT_2 + FRAC_1_SQRT_2 * 2.0 * i as f64 / 200.0;
            let k = konno_substitution(x).unwrap();
            let (p, _) = spectral_weights(k, phi.as_array()).unwrap();
            let expect = (1.0 + (1.0 - 2.0 * x * x).sqrt()) / 2.0;
            assert_abs_diff_eq!(p, expect, epsilon = 1e-8);
        }
    }

    fn psi_fd_mu(k: f64, d: u32, phi: &[C64; 2]) -> f64 {
        // ⟨Ψ, i dΨ/dk⟩ / d with Richardson differences on each component
        let psi = |kk: f64| coin_power(kk, d).apply(phi);
        let p = psi(k);
        let h = 1e-4;
        let diff = |h: f64| {
            let a = psi(k + h);
            let b = psi(k - h);
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
        };
        let d1 = diff(h);
        let d2 = diff(h / 2.0);
        let dp = [(d2[0] * 4.0 - d1[0]) / 3.0, (d2[1] * 4.0 - d1[1]) / 3.0];
        let i = c(0.0, 1.0);
        (inner(&p, &[dp[0] * i, dp[1] * i]) / d as f64).re
    }

    #[test]
    fn mu_values() {
        let phi = Qubit::symmetric();
        for i in 0..50 {
            let k = TAU * i as f64 / 50.0;
            assert_abs_diff_eq!(mu_d(k, 1, phi.as_array()).unwrap(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                mu_d(k, 2, phi.as_array()).unwrap(),
                (2.0 * k).sin() / 2.0,
                epsilon = 1e-12
            );
        }
        for d in 2..=4 {
            for i in 0..20 {
                let k = TAU * (i as f64 + 0.21) / 20.0;
                let fd = psi_fd_mu(k, d, phi.as_array());
                assert_abs_diff_eq!(mu_d(k, d, phi.as_array()).unwrap(), fd, epsilon = 1e-8);
            }
        }
        assert_eq!(mu_d(0.1, 0, phi.as_array()), Err(CoinError::ZeroPower));
    }

    #[test]
    fn nu_values() {
        for i in 0..50 {
            let k = TAU * i as f64 / 50.0;
            assert_abs_diff_eq!(nu_d(k, 2).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(nu_d(k, 1).unwrap(), 1.0, epsilon = 1e-12);
        }
        // second-order central differences of Ĥ³, Richardson-extrapolated
        for i in 0..20 {
            let k = TAU * (i as f64 + 0.4) / 20.0;
            let u = coin_power(k, 3);
            let second = |h: f64| {
                (coin_power(k + h, 3) + coin_power(k - h, 3) - u.scale(c(2.0, 0.0)))
                    .scale(c(1.0 / (h * h), 0.0))
            };
            let h = 1e-3;
            let rich = (second(h / 2.0).scale(c(4.0, 0.0)) - second(h)).scale(c(1.0 / 3.0, 0.0));
            // D_k² = -d²/dk²
            let fd = -(u.adjoint() * rich).trace().re / 6.0;
            assert_abs_diff_eq!(nu_d(k, 3).unwrap(), fd, epsilon = 1e-7);
        }
        assert_eq!(nu_d(0.1, 0), Err(CoinError::ZeroPower));
    }

    #[test]
    fn nu_equals_frobenius_norm_of_first_derivative() {
        for d in 1..=12u32 {
            for i in 0..16 {
                let k = TAU * (i as f64 + 0.13) / 16.0;
                let e = eigensystem(k);
                let frob = e.power_derivative(d).frobenius_sq() / (2.0 * d as f64);
                assert_abs_diff_eq!(nu_d(k, d).unwrap(), frob, epsilon = 1e-10);
                assert!(nu_d(k, d).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn first_derivative_trace_vanishes() {
        for d in 1..=8u32 {
            for i in 0..64 {
                let k = TAU * i as f64 / 64.0;
                let e = eigensystem(k);
                let tr = (e.power(-(d as i64)) * e.power_derivative(d)).trace();
                assert!(tr.norm() < 1e-10, "d={d} k={k} tr={tr}");
            }
        }
    }

    #[test]
    fn derivative_identity_for_single_step() {
        for i in 0..32 {
            let k = TAU * i as f64 / 32.0;
            let e = eigensystem(k);
            let expect = (Mat2::sigma3() * fourier_coin(k).matrix).scale(c(-1.0, 0.0));
            assert!(e.power_derivative(1).max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn substitution_basics() {
        assert_abs_diff_eq!(konno_substitution(0.0).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert!(konno_substitution(FRAC_1_SQRT_2 - 1e-12).unwrap() < 1e-5);
        assert!(konno_substitution(FRAC_1_SQRT_2).is_err());
        assert!(konno_substitution(-0.8).is_err());
        for i in 1..100 {
            let k = PI * i as f64 / 100.0;
            let x = group_velocity(k).unwrap();
            assert_abs_diff_eq!(konno_substitution(x).unwrap(), k, epsilon = 1e-10);
        }
    }

    #[test]
    fn qubit_validation() {
        assert!(Qubit::new(c(1.0, 0.0), c(1.0, 0.0)).is_err());
        let q = Qubit::normalized(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(q.as_array()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(Qubit::normalized(c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }
}
