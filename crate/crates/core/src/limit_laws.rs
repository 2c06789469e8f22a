//! Limit distributions of the M-coin walk.
//!
//! A [`LimitLaw`] is a cheap descriptor that can be parsed from a catalog
//! name. [`LimitLaw::build`] precomputes whatever tables the law needs and
//! returns a [`BuiltLaw`], which answers CDF, density, moment and sampling
//! queries. Built laws are immutable and `Sync`.
//!
//! Densities with inverse-square-root endpoints are integrated after the
//! substitution `x = c + r sin u`, which turns them into smooth functions of
//! `u ∈ [-π/2, π/2]`.
//!
//! Velocity convention: under `D_k = i d/dk` the eigen-branch `j` of `Ĥ(k)`
//! moves ballistically with velocity `-hⱼ(k)`, so a coin found in branch 0
//! drifts with `-h(k)` and one in branch 1 with `+h(k)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::coin_kernel::{
    eigensystem, konno_angle, mu_unchecked, nu_unchecked, velocity, weights_unchecked, Qubit,
};
use crate::quadrature::{integrate, periodic_mean};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("unknown law `{0}`")]
    UnknownLaw(String),
    #[error("bad parameter in `{0}`")]
    BadParameter(String),
    #[error("moment order {0} not supported (0..=8)")]
    MomentOrder(u32),
}

/// Initial-coin case for the fixed-`M` laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Case {
    /// Every coin in the given pure state.
    A(Qubit),
    /// Every coin a uniformly random basis state.
    B,
}

/// Tagged catalog of limit distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitLaw {
    Dirac0,
    Gaussian { sigma: f64 },
    /// Density `2^β s(2^β x)` with `s` the arcsine density on `(-1, 1)`.
    Arcsine { beta: f64 },
    /// Density `ρ(x) = 1/(π(1-x²)√(1-2x²))` on `(-1/√2, 1/√2)`.
    Konno,
    /// Independent sum of `N(0,1)` and `Arcsine { beta }`.
    GaussPlusArcsine { beta: f64 },
    /// Independent product of `N(0,1)` and `Konno`.
    GaussTimesKonno,
    /// `X_t / t` limit for fixed `M` with pure coins.
    FixedMA { m: u32, phi: Qubit },
    /// `X_t / t` limit for fixed `M` with random basis coins.
    FixedMB { m: u32 },
    /// Law of `μ_d(K)` for uniform `K`.
    FixedDA { d: u32, phi: Qubit },
    /// Law of `√ν_d(K) · N(0,1)`.
    FixedDB { d: u32 },
    /// Density `3/(π(1+x²)√(1-8x²))` on `(-1/√8, 1/√8)`.
    ProductLimitSym,
    /// Density `1/(π(1-x)√((1-2x)x))` on `(0, 1/2)`.
    ProductLimitKet1,
    /// Law of `factor · Y` for `Y ~ law`, `factor > 0`.
    Scaled { law: Box<LimitLaw>, factor: f64 },
}

/// Point mass of a law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSpec {
    pub location: f64,
    pub mass: f64,
}

impl LimitLaw {
    pub fn scaled(self, factor: f64) -> LimitLaw {
        LimitLaw::Scaled {
            law: Box::new(self),
            factor,
        }
    }

    pub fn build(&self) -> BuiltLaw {
        let model = match self {
            LimitLaw::Dirac0 => Model::Dirac,
            LimitLaw::Gaussian { sigma } => Model::Gaussian(*sigma),
            LimitLaw::Arcsine { beta } => Model::Arcsine(2f64.powf(-beta)),
            LimitLaw::Konno => Model::Singular(SingularLaw::new(SingularKind::Konno)),
            LimitLaw::GaussPlusArcsine { beta } => Model::GaussPlusArcsine(2f64.powf(-beta)),
            LimitLaw::GaussTimesKonno => Model::GaussTimesKonno(SingularLaw::new(SingularKind::Konno)),
            LimitLaw::FixedMA { m, phi } => Model::FixedM(FixedMLaw::new(*m, Case::A(*phi))),
            LimitLaw::FixedMB { m } => Model::FixedM(FixedMLaw::new(*m, Case::B)),
            LimitLaw::FixedDA { d, phi } => Model::FixedDA(LevelSetLaw::new(*d, *phi)),
            LimitLaw::FixedDB { d } => Model::FixedDB(MixtureLaw::new(*d)),
            LimitLaw::ProductLimitSym => Model::Singular(SingularLaw::new(SingularKind::ProductSym)),
            LimitLaw::ProductLimitKet1 => Model::Singular(SingularLaw::new(SingularKind::ProductKet1)),
            LimitLaw::Scaled { law, factor } => Model::Scaled(Box::new(law.build()), *factor),
        };
        BuiltLaw {
            spec: self.clone(),
            model,
        }
    }
}

fn qubit_label(phi: &Qubit) -> String {
    if *phi == Qubit::symmetric() {
        "caseA".into()
    } else if *phi == Qubit::right() {
        "ket1".into()
    } else if *phi == Qubit::left() {
        "ketm1".into()
    } else {
        let v = phi.as_array();
        format!("({},{};{},{})", v[0].re, v[0].im, v[1].re, v[1].im)
    }
}

impl fmt::Display for LimitLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitLaw::Dirac0 => write!(f, "dirac"),
            LimitLaw::Gaussian { sigma } => write!(f, "gaussian:sigma={sigma}"),
            LimitLaw::Arcsine { beta } => write!(f, "arcsine:beta={beta}"),
            LimitLaw::Konno => write!(f, "konno"),
            LimitLaw::GaussPlusArcsine { beta } => write!(f, "gauss+arcsine:beta={beta}"),
            LimitLaw::GaussTimesKonno => write!(f, "gauss*konno"),
            LimitLaw::FixedMA { m, phi } => write!(f, "fixedM:A:M={m}:init={}", qubit_label(phi)),
            LimitLaw::FixedMB { m } => write!(f, "fixedM:B:M={m}"),
            LimitLaw::FixedDA { d, phi } => write!(f, "fixedD:A:d={d}:init={}", qubit_label(phi)),
            LimitLaw::FixedDB { d } => write!(f, "fixedD:B:d={d}"),
            LimitLaw::ProductLimitSym => write!(f, "product-sym"),
            LimitLaw::ProductLimitKet1 => write!(f, "product-ket1"),
            LimitLaw::Scaled { law, factor } => write!(f, "scaled:factor={factor}:{law}"),
        }
    }
}

fn param<T: FromStr>(tokens: &[&str], key: &str, default: Option<T>, whole: &str) -> Result<T, LawError> {
    for tok in tokens {
        if let Some((k, v)) = tok.split_once('=') {
            if k.trim() == key {
                return v.trim().parse().map_err(|_| LawError::BadParameter(whole.into()));
            }
        }
    }
    default.ok_or_else(|| LawError::BadParameter(whole.into()))
}

fn init_param(tokens: &[&str], whole: &str) -> Result<Qubit, LawError> {
    match param::<String>(tokens, "init", Some("caseA".into()), whole)?.as_str() {
        "caseA" | "A" | "phi0" => Ok(Qubit::symmetric()),
        "ket1" => Ok(Qubit::right()),
        "ketm1" => Ok(Qubit::left()),
        _ => Err(LawError::BadParameter(whole.into())),
    }
}

impl FromStr for LimitLaw {
    type Err = LawError;

    /// Catalog names: `dirac`, `gaussian[:sigma=S]`, `arcsine:beta=B`,
    /// `konno`, `gauss+arcsine:beta=B`, `gauss*konno`,
    /// `fixedM:A:M=4[:init=ket1]`, `fixedM:B:M=4`, `fixedD:A:d=2[:init=ket1]`,
    /// `fixedD:B:d=3`, `product-sym`, `product-ket1`,
    /// `scaled:factor=F:<law>`.
    fn from_str(s: &str) -> Result<Self, LawError> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("scaled:") {
            let (head, inner) = rest.split_once(':').ok_or_else(|| LawError::BadParameter(s.into()))?;
            let factor: f64 = param(&[head], "factor", None, s)?;
            if !(factor > 0.0 && factor.is_finite()) {
                return Err(LawError::BadParameter(s.into()));
            }
            return Ok(inner.parse::<LimitLaw>()?.scaled(factor));
        }
        let tokens: Vec<&str> = s.split(':').collect();
        let rest = &tokens[1..];
        let positive = |v: u32| if v >= 1 { Ok(v) } else { Err(LawError::BadParameter(s.into())) };
        let law = match tokens[0] {
            "dirac" | "dirac0" => LimitLaw::Dirac0,
            "gaussian" | "normal" => {
                let sigma: f64 = param(rest, "sigma", Some(1.0), s)?;
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(LawError::BadParameter(s.into()));
                }
                LimitLaw::Gaussian { sigma }
            }
            "arcsine" => LimitLaw::Arcsine {
                beta: unit_beta(param(rest, "beta", Some(0.0), s)?, s)?,
            },
            "konno" => LimitLaw::Konno,
            "gauss+arcsine" => LimitLaw::GaussPlusArcsine {
                beta: unit_beta(param(rest, "beta", Some(0.0), s)?, s)?,
            },
            "gauss*konno" => LimitLaw::GaussTimesKonno,
            "fixedM" => {
                let m = positive(param(rest, "M", None, s)?)?;
                match rest.first() {
                    Some(&"A") => LimitLaw::FixedMA {
                        m,
                        phi: init_param(rest, s)?,
                    },
                    Some(&"B") => LimitLaw::FixedMB { m },
                    _ => return Err(LawError::BadParameter(s.into())),
                }
            }
            "fixedD" => {
                let d = positive(param(rest, "d", None, s)?)?;
                match rest.first() {
                    Some(&"A") => LimitLaw::FixedDA {
                        d,
                        phi: init_param(rest, s)?,
                    },
                    Some(&"B") => LimitLaw::FixedDB { d },
                    _ => return Err(LawError::BadParameter(s.into())),
                }
            }
            "product-sym" => LimitLaw::ProductLimitSym,
            "product-ket1" => LimitLaw::ProductLimitKet1,
            _ => return Err(LawError::UnknownLaw(s.into())),
        };
        Ok(law)
    }
}

fn unit_beta(beta: f64, whole: &str) -> Result<f64, LawError> {
    if (0.0..=1.0).contains(&beta) {
        Ok(beta)
    } else {
        Err(LawError::BadParameter(whole.into()))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (TAU).sqrt()
}

/// `E[Nⁿ]` for a standard normal `N`.
fn normal_moment(n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    (1..n).step_by(2).map(|k| k as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Konno density `ρ`.
pub fn konno_density(x: f64) -> f64 {
    if x.abs() >= FRAC_1_SQRT_2 {
        return 0.0;
    }
    1.0 / (PI * (1.0 - x * x) * (1.0 - 2.0 * x * x).sqrt())
}

/// Arcsine density `s` on `(-1, 1)`.
pub fn arcsine_density(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    1.0 / (PI * (1.0 - x * x).sqrt())
}

const TABLE_CELLS: usize = 4096;
const TABLE_TOL: f64 = 1e-15;

/// Monotone inverse-CDF table on `[-π/2, π/2]` in the substituted variable,
/// interpolated by cubic Hermite segments with exact end slopes.
#[derive(Debug, Clone)]
struct InverseCdfTable {
    u: Vec<f64>,
    cum: Vec<f64>,
    slope: Vec<f64>,
}

impl InverseCdfTable {
    fn invert(&self, p: f64) -> f64 {
        let total = *self.cum.last().unwrap();
        let p = (p * total).clamp(0.0, total);
        let i = match self.cum.binary_search_by(|c| c.partial_cmp(&p).unwrap()) {
            Ok(i) => return self.u[i],
            Err(i) => i.clamp(1, self.cum.len() - 1) - 1,
        };
        let (f0, f1) = (self.cum[i], self.cum[i + 1]);
        let (u0, u1) = (self.u[i], self.u[i + 1]);
        let h = f1 - f0;
        if h <= 0.0 {
            return u0;
        }
        let s = (p - f0) / h;
        // du/dF = 1/g(u)
        let m0 = h / self.slope[i];
        let m1 = h / self.slope[i + 1];
        let s2 = s * s;
        let s3 = s2 * s;
        let u = (2.0 * s3 - 3.0 * s2 + 1.0) * u0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * u1
            + (s3 - s2) * m1;
        u.clamp(u0, u1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SingularKind {
    Konno,
    ProductSym,
    ProductKet1,
}

/// A density with inverse-square-root endpoints at `c ± r`.
#[derive(Debug, Clone)]
struct SingularLaw {
    kind: SingularKind,
    center: f64,
    radius: f64,
    table: InverseCdfTable,
}

impl SingularLaw {
    fn new(kind: SingularKind) -> Self {
        let (center, radius) = match kind {
            SingularKind::Konno => (0.0, FRAC_1_SQRT_2),
            SingularKind::ProductSym => (0.0, 1.0 / 8f64.sqrt()),
            SingularKind::ProductKet1 => (0.25, 0.25),
        };
        let mut law = SingularLaw {
            kind,
            center,
            radius,
            table: InverseCdfTable {
                u: vec![],
                cum: vec![],
                slope: vec![],
            },
        };
        let du = PI / TABLE_CELLS as f64;
        let u: Vec<f64> = (0..=TABLE_CELLS).map(|i| -FRAC_PI_2 + du * i as f64).collect();
        let mut cum = Vec::with_capacity(u.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in u.windows(2) {
            acc += integrate(|v| law.g(v), w[0], w[1], TABLE_TOL);
            cum.push(acc);
        }
        let slope = u.iter().map(|&v| law.g(v)).collect();
        law.table = InverseCdfTable { u, cum, slope };
        law
    }

    /// Density times `dx/du` after `x = c + r sin u`.
    fn g(&self, u: f64) -> f64 {
        let s = u.sin();
        match self.kind {
            SingularKind::Konno => 1.0 / (PI * SQRT_2 * (1.0 - 0.5 * s * s)),
            SingularKind::ProductSym => 3.0 / (8f64.sqrt() * PI * (1.0 + s * s / 8.0)),
            SingularKind::ProductKet1 => 2.0 * SQRT_2 / (PI * (3.0 - s)),
        }
    }

    fn density(&self, x: f64) -> f64 {
        let y = x - self.center;
        if y.abs() >= self.radius {
            return 0.0;
        }
        match self.kind {
            SingularKind::Konno => konno_density(x),
            SingularKind::ProductSym => 3.0 / (PI * (1.0 + x * x) * (1.0 - 8.0 * x * x).sqrt()),
            SingularKind::ProductKet1 => 1.0 / (PI * (1.0 - x) * ((1.0 - 2.0 * x) * x).sqrt()),
        }
    }

    fn x_of(&self, u: f64) -> f64 {
        self.center + self.radius * u.sin()
    }

    fn cdf(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.radius;
        if y <= -1.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        let u = y.asin();
        let du = PI / TABLE_CELLS as f64;
        let i = (((u + FRAC_PI_2) / du).floor() as usize).min(TABLE_CELLS - 1);
        let base = self.table.cum[i];
        (base + integrate(|v| self.g(v), self.table.u[i], u, TABLE_TOL)).clamp(0.0, 1.0)
    }

    fn total_mass(&self) -> f64 {
        *self.table.cum.last().unwrap()
    }

    fn moment(&self, n: u32) -> f64 {
        integrate(|u| self.x_of(u).powi(n as i32) * self.g(u), -FRAC_PI_2, FRAC_PI_2, 1e-14)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.x_of(self.table.invert(rng.random::<f64>()))
    }
}

/// Fixed-`M` law: `(2J/M - 1) h(K)` with `K` uniform and, given `K`,
/// `J ~ Bin(M, q(K))` counting coins in branch 1.
#[derive(Debug, Clone)]
struct FixedMLaw {
    m: u32,
    case: Case,
    atom: f64,
    /// Cumulative `∫₀^{k_i} w_j dk/2π` on a uniform `k` grid (case A only).
    cumulative: Vec<Vec<f64>>,
}

const FIXED_M_CELLS: usize = 2048;

impl FixedMLaw {
    fn new(m: u32, case: Case) -> Self {
        let mut law = FixedMLaw {
            m,
            case,
            atom: atom_mass(m, case),
            cumulative: vec![],
        };
        if let Case::A(_) = case {
            let dk = TAU / FIXED_M_CELLS as f64;
            law.cumulative = (0..=m)
                .map(|j| {
                    let mut acc = 0.0;
                    let mut v = Vec::with_capacity(FIXED_M_CELLS + 1);
                    v.push(0.0);
                    for i in 0..FIXED_M_CELLS {
                        let a = dk * i as f64;
                        acc += integrate(|k| law.weight(j, k), a, a + dk, 1e-15) / TAU;
                        v.push(acc);
                    }
                    v
                })
                .collect();
        }
        law
    }

    fn pq(&self, k: f64) -> (f64, f64) {
        match self.case {
            Case::A(phi) => weights_unchecked(&eigensystem(k), phi.as_array()),
            Case::B => (0.5, 0.5),
        }
    }

    /// `C(M, j) p^{M-j} q^j` at momentum `k`.
    fn weight(&self, j: u32, k: f64) -> f64 {
        let (p, q) = self.pq(k);
        binomial_pmf(self.m, j, q, p)
    }

    fn coefficient(&self, j: u32) -> f64 {
        2.0 * j as f64 / self.m as f64 - 1.0
    }

    /// `∫_a^b w_j dk/2π` for `0 ≤ a ≤ b ≤ 2π`.
    fn weight_integral(&self, j: u32, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self.case {
            Case::B => binomial_pmf(self.m, j, 0.5, 0.5) * (b - a) / TAU,
            Case::A(_) => self.cumulative_at(j, b) - self.cumulative_at(j, a),
        }
    }

    fn cumulative_at(&self, j: u32, k: f64) -> f64 {
        let dk = TAU / FIXED_M_CELLS as f64;
        let i = ((k / dk).floor() as usize).min(FIXED_M_CELLS - 1);
        let table = &self.cumulative[j as usize];
        table[i] + integrate(|kk| self.weight(j, kk), dk * i as f64, k, 1e-15) / TAU
    }

    fn cdf(&self, x: f64) -> f64 {
        let mut total = if x >= 0.0 { self.atom } else { 0.0 };
        for j in 0..=self.m {
            let c = self.coefficient(j);
            if c == 0.0 {
                continue;
            }
            let kappa = konno_angle(x / c);
            total += if c > 0.0 {
                // {h ≤ x/c} = [κ, 2π - κ]
                self.weight_integral(j, kappa, TAU - kappa)
            } else {
                // {h ≥ x/c} = [0, κ] ∪ [2π - κ, 2π)
                self.weight_integral(j, 0.0, kappa) + self.weight_integral(j, TAU - kappa, TAU)
            };
        }
        total.clamp(0.0, 1.0)
    }

    fn density(&self, x: f64) -> f64 {
        let mut total = 0.0;
        for j in 0..=self.m {
            let c = self.coefficient(j);
            if c == 0.0 {
                continue;
            }
            let y = x / c;
            if y.abs() >= FRAC_1_SQRT_2 {
                continue;
            }
            let kappa = konno_angle(y);
            let w = 0.5 * (self.weight(j, kappa) + self.weight(j, TAU - kappa));
            total += konno_density(y) * w / c.abs();
        }
        total
    }

    fn moment(&self, n: u32) -> f64 {
        periodic_mean(
            |k| {
                let (p, q) = self.pq(k);
                let h = velocity(k).powi(n as i32);
                (0..=self.m)
                    .map(|j| binomial_pmf(self.m, j, q, p) * self.coefficient(j).powi(n as i32))
                    .sum::<f64>()
                    * h
            },
            4096,
        )
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let k = TAU * rng.random::<f64>();
        let (_, q) = self.pq(k);
        let j = Binomial::new(self.m as u64, q.clamp(0.0, 1.0)).unwrap().sample(rng) as u32;
        self.coefficient(j) * velocity(k)
    }
}

/// `C(n, j) sʲ (1-s)^{n-j}` given `s` and `r = 1 - s`.
fn binomial_pmf(n: u32, j: u32, s: f64, r: f64) -> f64 {
    if n <= 60 {
        return binomial(n, j) * s.powi(j as i32) * r.powi((n - j) as i32);
    }
    let term = |e: u32, v: f64| if e == 0 { 0.0 } else { e as f64 * v.ln() };
    (ln_binomial(n, j) + term(j, s) + term(n - j, r)).exp()
}

/// Characteristic function of the fixed-`M` limit law,
/// `∫ (p e^{-iξh/M} + q e^{iξh/M})^M dk/2π`.
pub fn fixed_m_char(m: u32, case: Case, xi: f64) -> C64 {
    let n = 1024 + 16 * xi.abs().ceil() as usize;
    let step = TAU / n as f64;
    let mut sum = C64::new(0.0, 0.0);
    for i in 0..n {
        let k = step * i as f64;
        let (p, q) = match case {
            Case::A(phi) => weights_unchecked(&eigensystem(k), phi.as_array()),
            Case::B => (0.5, 0.5),
        };
        let phase = C64::cis(xi * velocity(k) / m as f64);
        sum += (phase.conj() * p + phase * q).powu(m);
    }
    sum / n as f64
}

/// Mass of the atom at the origin of the fixed-`M` law; zero for odd `M`.
pub fn atom_mass(m: u32, case: Case) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let half = m / 2;
    match case {
        Case::B => binomial_pmf(m, half, 0.5, 0.5),
        Case::A(phi) => {
            let c = binomial(m, half);
            periodic_mean(
                |k| {
                    let (p, q) = weights_unchecked(&eigensystem(k), phi.as_array());
                    c * (p * q).powi(half as i32)
                },
                4096,
            )
        }
    }
}

/// The fixed-`M` densities exactly as the closed forms read, with the sum
/// truncated at `j ≤ ⌊M/2⌋` and the `j = M/2` term left to the atom. Case A
/// uses the symmetric initial coin. Kept for comparison against the
/// canonical law, which it does not integrate to.
pub fn as_printed_density_fixed_m(m: u32, case_a: bool, x: f64) -> f64 {
    let p_of = |y: f64| (1.0 + (1.0 - 2.0 * y * y).max(0.0).sqrt()) / 2.0;
    let q_of = |y: f64| (1.0 - (1.0 - 2.0 * y * y).max(0.0).sqrt()) / 2.0;
    let mut total = 0.0;
    for j in 0..=m / 2 {
        let c = (1.0 - 2.0 * j as f64 / m as f64).abs();
        if c == 0.0 {
            continue;
        }
        let y = x / c;
        let base = binomial(m, j) * konno_density(y) / c;
        total += if case_a {
            base * p_of(y).powi((m - j) as i32) * q_of(y).powi(j as i32)
        } else {
            base * 0.5f64.powi(m as i32)
        };
    }
    total
}

const LEVEL_GRID: usize = 1 << 16;

/// Law of `μ_d(K)`: CDF from the measure of `{k : μ_d(k) ≤ x}`, computed
/// on monotone pieces whose ends are refined local extrema.
#[derive(Debug, Clone)]
struct LevelSetLaw {
    d: u32,
    phi: Qubit,
    /// `(start, end)` angles of monotone pieces; `end` may exceed 2π.
    pieces: Vec<(f64, f64)>,
    constant: Option<f64>,
    /// `μ_d(π - k) = -μ_d(k)` for the symmetric coin.
    odd: bool,
}

impl LevelSetLaw {
    fn new(d: u32, phi: Qubit) -> Self {
        let mut law = LevelSetLaw {
            d,
            phi,
            pieces: vec![],
            constant: None,
            odd: phi == Qubit::symmetric(),
        };
        let dk = TAU / LEVEL_GRID as f64;
        let vals: Vec<f64> = (0..LEVEL_GRID).map(|i| law.mu(dk * i as f64)).collect();
        let (lo, hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi - lo < 1e-12 {
            law.constant = Some(0.5 * (lo + hi));
            return law;
        }
        let n = LEVEL_GRID;
        let mut extrema = Vec::new();
        for i in 0..n {
            let prev = vals[(i + n - 1) % n];
            let next = vals[(i + 1) % n];
            let v = vals[i];
            let is_max = v > prev && v >= next;
            let is_min = v < prev && v <= next;
            if is_max || is_min {
                let centre = dk * i as f64;
                extrema.push(law.refine_extremum(centre - dk, centre + dk, is_max));
            }
        }
        for w in 0..extrema.len() {
            let a = extrema[w];
            let mut b = extrema[(w + 1) % extrema.len()];
            if b <= a {
                b += TAU;
            }
            law.pieces.push((a, b));
        }
        law
    }

    fn mu(&self, k: f64) -> f64 {
        mu_unchecked(&eigensystem(k), self.d, self.phi.as_array()).unwrap_or(f64::NAN)
    }

    fn refine_extremum(&self, mut a: f64, mut b: f64, maximise: bool) -> f64 {
        let sign = if maximise { -1.0 } else { 1.0 };
        let f = |k: f64| sign * self.mu(k);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        0.5 * (a + b)
    }

    /// Crossing of `μ = x` inside a monotone piece.
    fn crossing(&self, a: f64, b: f64, x: f64, increasing: bool) -> f64 {
        let (mut lo, mut hi) = (a, b);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            let below = self.mu(mid) <= x;
            if below == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn cdf(&self, x: f64) -> f64 {
        if let Some(c) = self.constant {
            return if x >= c { 1.0 } else { 0.0 };
        }
        // Crossings at flat inflections (μ ~ k³ near 0 and π) carry errors
        // of order ε^{1/3}; averaging with the mirror image cancels them.
        if self.odd {
            return 0.5 * (self.level_measure(x) + 1.0 - self.level_measure(-x));
        }
        self.level_measure(x)
    }

    fn level_measure(&self, x: f64) -> f64 {
        let mut measure = 0.0;
        for &(a, b) in &self.pieces {
            let (va, vb) = (self.mu(a), self.mu(b));
            let increasing = vb >= va;
            let (lo, hi) = if increasing { (va, vb) } else { (vb, va) };
            measure += if x <= lo {
                0.0
            } else if x >= hi {
                b - a
            } else {
                let k = self.crossing(a, b, x, increasing);
                if increasing {
                    k - a
                } else {
                    b - k
                }
            };
        }
        (measure / TAU).clamp(0.0, 1.0)
    }

    fn density(&self, x: f64) -> f64 {
        if self.constant.is_some() {
            return 0.0;
        }
        let mut total = 0.0;
        for &(a, b) in &self.pieces {
            let (va, vb) = (self.mu(a), self.mu(b));
            let increasing = vb >= va;
            let (lo, hi) = if increasing { (va, vb) } else { (vb, va) };
            if x <= lo || x >= hi {
                continue;
            }
            let k = self.crossing(a, b, x, increasing);
            let h = 1e-6;
            let slope = (self.mu(k + h) - self.mu(k - h)) / (2.0 * h);
            total += 1.0 / (TAU * slope.abs());
        }
        total
    }

    fn moment(&self, n: u32) -> f64 {
        if let Some(c) = self.constant {
            return c.powi(n as i32);
        }
        let nodes = 4 * self.d as usize * n.max(1) as usize + 64;
        periodic_mean(|k| self.mu(k).powi(n as i32), nodes)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.mu(TAU * rng.random::<f64>())
    }
}

/// Law of `√ν_d(K) · N(0,1)` as a Gaussian scale mixture.
#[derive(Debug, Clone)]
struct MixtureLaw {
    d: u32,
    /// `√ν_d` on a uniform grid.
    scales: Vec<f64>,
}

impl MixtureLaw {
    fn new(d: u32) -> Self {
        let n = (64 * d as usize).max(4096);
        let scales = (0..n)
            .map(|i| {
                let k = TAU * i as f64 / n as f64;
                nu_unchecked(&eigensystem(k), d).unwrap_or(f64::NAN).max(0.0).sqrt()
            })
            .collect();
        MixtureLaw { d, scales }
    }

    fn cdf(&self, x: f64) -> f64 {
        let s: f64 = self
            .scales
            .iter()
            .map(|&s| {
                if s == 0.0 {
                    if x >= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    normal_cdf(x / s)
                }
            })
            .sum();
        (s / self.scales.len() as f64).clamp(0.0, 1.0)
    }

    fn density(&self, x: f64) -> f64 {
        self.scales
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| normal_pdf(x / s) / s)
            .sum::<f64>()
            / self.scales.len() as f64
    }

    fn moment(&self, n: u32) -> f64 {
        if n % 2 == 1 {
            return 0.0;
        }
        let nodes = 2 * self.d as usize * n as usize + 64;
        let d = self.d;
        normal_moment(n)
            * periodic_mean(
                |k| nu_unchecked(&eigensystem(k), d).unwrap_or(f64::NAN).powi(n as i32 / 2),
                nodes,
            )
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let k = TAU * rng.random::<f64>();
        let nu = nu_unchecked(&eigensystem(k), self.d).unwrap_or(0.0).max(0.0);
        let z: f64 = rng.sample(StandardNormal);
        nu.sqrt() * z
    }
}

#[derive(Debug, Clone)]
enum Model {
    Dirac,
    Gaussian(f64),
    /// Half-width `2^{-β}`.
    Arcsine(f64),
    Singular(SingularLaw),
    GaussPlusArcsine(f64),
    GaussTimesKonno(SingularLaw),
    FixedM(FixedMLaw),
    FixedDA(LevelSetLaw),
    FixedDB(MixtureLaw),
    Scaled(Box<BuiltLaw>, f64),
}

/// A limit law with its tables precomputed.
#[derive(Debug, Clone)]
pub struct BuiltLaw {
    spec: LimitLaw,
    model: Model,
}

const SAT: f64 = 9.0;

impl BuiltLaw {
    pub fn spec(&self) -> &LimitLaw {
        &self.spec
    }

    /// `P(Y ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.model {
            Model::Dirac => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Model::Gaussian(sigma) => normal_cdf(x / sigma),
            Model::Arcsine(a) => {
                if x <= -a {
                    0.0
                } else if x >= *a {
                    1.0
                } else {
                    0.5 + (x / a).asin() / PI
                }
            }
            Model::Singular(s) => s.cdf(x),
            Model::GaussPlusArcsine(a) => {
                let a = *a;
                (integrate(|u| normal_cdf(x - a * u.sin()), -FRAC_PI_2, FRAC_PI_2, 1e-13) / PI).clamp(0.0, 1.0)
            }
            Model::GaussTimesKonno(konno) => {
                if x == 0.0 {
                    return 0.5;
                }
                if x < 0.0 {
                    return 1.0 - self.cdf(-x);
                }
                // P(N|Z| ≤ x) = E Φ(x/|Z|); Φ ≈ 1 where x/|Z| > SAT
                let r = konno.radius;
                let u_sat = (x / (SAT * r)).min(1.0).asin();
                let flat = konno.cdf(r * u_sat.sin()) - 0.5;
                let curved = integrate(
                    |u| normal_cdf(x / (r * u.sin())) * konno.g(u),
                    u_sat,
                    FRAC_PI_2,
                    1e-13,
                );
                (2.0 * (flat + curved)).clamp(0.0, 1.0)
            }
            Model::FixedM(f) => f.cdf(x),
            Model::FixedDA(l) => l.cdf(x),
            Model::FixedDB(m) => m.cdf(x),
            Model::Scaled(inner, f) => inner.cdf(x / f),
        }
    }

    /// `P(Y < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        (self.cdf(x) - self.atom_mass_at(x)).max(0.0)
    }

    pub fn atoms(&self) -> Vec<AtomSpec> {
        match &self.model {
            Model::Dirac => vec![AtomSpec {
                location: 0.0,
                mass: 1.0,
            }],
            Model::FixedM(f) if f.atom > 0.0 => vec![AtomSpec {
                location: 0.0,
                mass: f.atom,
            }],
            Model::FixedDA(l) => l
                .constant
                .map(|c| AtomSpec { location: c, mass: 1.0 })
                .into_iter()
                .collect(),
            Model::Scaled(inner, f) => inner
                .atoms()
                .into_iter()
                .map(|a| AtomSpec {
                    location: a.location * f,
                    mass: a.mass,
                })
                .collect(),
            _ => vec![],
        }
    }

    pub fn atom_mass_at(&self, x: f64) -> f64 {
        self.atoms().iter().filter(|a| a.location == x).map(|a| a.mass).sum()
    }

    /// Density of the continuous part; zero outside the support and at
    /// atoms. `GaussTimesKonno` has a logarithmic pole at the origin and
    /// returns `+∞` there.
    pub fn density(&self, x: f64) -> f64 {
        match &self.model {
            Model::Dirac => 0.0,
            Model::Gaussian(sigma) => normal_pdf(x / sigma) / sigma,
            Model::Arcsine(a) => arcsine_density(x / a) / a,
            Model::Singular(s) => s.density(x),
            Model::GaussPlusArcsine(a) => {
                let a = *a;
                integrate(|u| normal_pdf(x - a * u.sin()), -FRAC_PI_2, FRAC_PI_2, 1e-13) / PI
            }
            Model::GaussTimesKonno(konno) => {
                if x == 0.0 {
                    return f64::INFINITY;
                }
                let r = konno.radius;
                let x = x.abs();
                let u_cut = (x / (40.0 * r)).min(1.0).asin();
                2.0 * integrate(
                    |u| {
                        let z = r * u.sin();
                        normal_pdf(x / z) / z * konno.g(u)
                    },
                    u_cut,
                    FRAC_PI_2,
                    1e-13,
                )
            }
            Model::FixedM(f) => f.density(x),
            Model::FixedDA(l) => l.density(x),
            Model::FixedDB(m) => m.density(x),
            Model::Scaled(inner, f) => inner.density(x / f) / f,
        }
    }

    /// `E[Yⁿ]` for `n ≤ 8`.
    pub fn moment(&self, n: u32) -> Result<f64, LawError> {
        if n > 8 {
            return Err(LawError::MomentOrder(n));
        }
        if n == 0 {
            return Ok(1.0);
        }
        Ok(match &self.model {
            Model::Dirac => 0.0,
            Model::Gaussian(sigma) => sigma.powi(n as i32) * normal_moment(n),
            Model::Arcsine(a) => arcsine_moment(*a, n),
            Model::Singular(s) => s.moment(n),
            Model::GaussPlusArcsine(a) => (0..=n)
                .map(|i| binomial(n, i) * normal_moment(i) * arcsine_moment(*a, n - i))
                .sum(),
            Model::GaussTimesKonno(k) => normal_moment(n) * k.moment(n),
            Model::FixedM(f) => f.moment(n),
            Model::FixedDA(l) => l.moment(n),
            Model::FixedDB(m) => m.moment(n),
            Model::Scaled(inner, f) => f.powi(n as i32) * inner.moment(n)?,
        })
    }

    /// Smallest interval carrying all the mass; unbounded for Gaussian
    /// factors.
    pub fn support(&self) -> (f64, f64) {
        match &self.model {
            Model::Dirac => (0.0, 0.0),
            Model::Arcsine(a) => (-a, *a),
            Model::Singular(s) => (s.center - s.radius, s.center + s.radius),
            Model::FixedM(_) => (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            Model::FixedDA(l) => match l.constant {
                Some(c) => (c, c),
                None => l.pieces.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(a, _)| {
                    let v = l.mu(a);
                    (lo.min(v), hi.max(v))
                }),
            },
            Model::Scaled(inner, f) => {
                let (lo, hi) = inner.support();
                (lo * f, hi * f)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Total mass of the continuous part plus atoms, as seen by the CDF
    /// machinery.
    pub fn total_mass(&self) -> f64 {
        match &self.model {
            Model::Singular(s) => s.total_mass(),
            _ => {
                let (lo, hi) = self.support();
                let hi = if hi.is_finite() { hi } else { 60.0 };
                let lo = if lo.is_finite() { lo } else { -60.0 };
                self.cdf(hi) - self.cdf_left(lo)
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.spec {
            LimitLaw::ProductLimitKet1 => false,
            LimitLaw::FixedMA { phi, .. } | LimitLaw::FixedDA { phi, .. } => *phi == Qubit::symmetric(),
            LimitLaw::Scaled { .. } => match &self.model {
                Model::Scaled(inner, _) => inner.is_symmetric(),
                _ => unreachable!(),
            },
            _ => true,
        }
    }

    pub fn sample_one<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.model {
            Model::Dirac => 0.0,
            Model::Gaussian(sigma) => sigma * rng.sample::<f64, _>(StandardNormal),
            Model::Arcsine(a) => a * (TAU * rng.random::<f64>()).sin(),
            Model::Singular(s) => s.sample(rng),
            Model::GaussPlusArcsine(a) => {
                let z: f64 = rng.sample(StandardNormal);
                z + a * (TAU * rng.random::<f64>()).sin()
            }
            Model::GaussTimesKonno(k) => {
                let z: f64 = rng.sample(StandardNormal);
                z * k.sample(rng)
            }
            Model::FixedM(f) => f.sample(rng),
            Model::FixedDA(l) => l.sample(rng),
            Model::FixedDB(m) => m.sample(rng),
            Model::Scaled(inner, f) => f * inner.sample_one(rng),
        }
    }

    /// `n` i.i.d. draws from a ChaCha stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample_one(&mut rng)).collect()
    }
}

fn arcsine_moment(a: f64, n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    a.powi(n as i32) * binomial(n, n / 2) / 2f64.powi(n as i32)
}

pub fn density(law: &LimitLaw, x: f64) -> f64 {
    law.build().density(x)
}

pub fn cdf(law: &LimitLaw, x: f64) -> f64 {
    law.build().cdf(x)
}

pub fn moment(law: &LimitLaw, n: u32) -> Result<f64, LawError> {
    law.build().moment(n)
}

pub fn sample(law: &LimitLaw, n: usize, seed: u64) -> Vec<f64> {
    law.build().sample(n, seed)
}
