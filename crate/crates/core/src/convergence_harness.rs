//! Convergence checks of scaled walk distributions against limit laws.
//!
//! Distances are Kolmogorov–Smirnov. Walk distributions are lattice laws,
//! so the supremum is taken over both sides of every jump and of every atom
//! of the reference law.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coin_kernel::Qubit;
use crate::limit_laws::{BuiltLaw, LawError, LimitLaw};
use crate::state_oracle::OracleError;
use crate::walk_engine::{distribution_with, EngineConfig, InitialSpec, PositionDistribution, WalkError, WalkSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("exponent fit needs at least 4 times spanning a decade")]
    TooFewPoints,
    #[error("zero variance at t = {0}")]
    Degenerate(usize),
    #[error("beta {0} outside [0, 1]")]
    BetaRange(f64),
    #[error("ceiling file: {0}")]
    Ceilings(String),
}

/// KS distance between a finite atomic law, given as `(location, mass)`
/// pairs, and a limit law.
pub fn ks_points(points: &[(f64, f64)], law: &BuiltLaw) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > 0.0).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let atoms = law.atoms();
    let mut cum = Vec::with_capacity(pts.len());
    let mut below = 0.0;
    for &(_, m) in &pts {
        cum.push(below);
        below += m;
    }
    let best = pts
        .par_iter()
        .zip(cum.par_iter())
        .map(|(&(y, m), &left)| {
            let f = law.cdf(y);
            let atom: f64 = atoms.iter().filter(|a| a.location == y).map(|a| a.mass).sum();
            (left - (f - atom)).abs().max((left + m - f).abs())
        })
        .reduce(|| 0.0, f64::max);
    // atoms of the law falling between jumps
    let mut best = best;
    for atom in atoms {
        let left: f64 = pts.iter().filter(|p| p.0 < atom.location).map(|p| p.1).sum();
        let right: f64 = pts.iter().filter(|p| p.0 <= atom.location).map(|p| p.1).sum();
        best = best.max((left - law.cdf_left(atom.location)).abs());
        best = best.max((right - law.cdf(atom.location)).abs());
    }
    best.min(1.0)
}

/// `sup_x |P(X_t/t^θ ≤ x) - F(x)|`.
pub fn ks_distance(dist: &PositionDistribution, theta: f64, law: &BuiltLaw) -> f64 {
    let scale = (dist.t().max(1) as f64).powf(theta);
    let points: Vec<(f64, f64)> = dist.support().map(|(x, m)| (x as f64 / scale, m)).collect();
    ks_points(&points, law)
}

/// KS distance between two limit laws, by a uniform grid over the joint
/// effective support followed by golden-section refinement of the worst
/// cell. Atoms are compared from both sides.
pub fn ks_between(a: &BuiltLaw, b: &BuiltLaw) -> f64 {
    let span = |l: &BuiltLaw| {
        let (lo, hi) = l.support();
        let sd = l.moment(2).unwrap_or(1.0).sqrt();
        (if lo.is_finite() { lo } else { -9.0 * sd }, if hi.is_finite() { hi } else { 9.0 * sd })
    };
    let (alo, ahi) = span(a);
    let (blo, bhi) = span(b);
    let (lo, hi) = (alo.min(blo), ahi.max(bhi));
    let gap = |x: f64| (a.cdf(x) - b.cdf(x)).abs();
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let mut best = 0.0;
    let mut arg = lo;
    for i in 0..=n {
        let x = lo + h * i as f64;
        let g = gap(x);
        if g > best {
            best = g;
            arg = x;
        }
    }
    let (mut l, mut r) = (arg - h, arg + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = r - phi * (r - l);
        let d = l + phi * (r - l);
        if gap(c) > gap(d) {
            r = d;
        } else {
            l = c;
        }
    }
    best = best.max(gap(0.5 * (l + r)));
    for atom in a.atoms().into_iter().chain(b.atoms()) {
        let x = atom.location;
        best = best.max(gap(x));
        best = best.max((a.cdf_left(x) - b.cdf_left(x)).abs());
    }
    best.min(1.0)
}

/// Initial coin preparation for fixed-`M` / fixed-`d` families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    CaseA,
    CaseB,
    Ket1,
}

impl Init {
    fn spec(self, m: usize) -> InitialSpec {
        match self {
            Init::CaseA => InitialSpec::case_a(m),
            Init::CaseB => InitialSpec::case_b(m),
            Init::Ket1 => InitialSpec::ket1(m),
        }
    }

    fn qubit(self) -> Qubit {
        match self {
            Init::Ket1 => Qubit::right(),
            _ => Qubit::symmetric(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Assumption {
    /// `t = M + M^β`, all coins `(1, i)/√2`.
    A,
    /// `t = 2M`, `M^β` coins `(1, i)/√2` and the rest random basis states.
    B,
    /// `M ~ t^{1-β}`, `d ~ t^β`, all coins random basis states.
    C,
    FixedM { m: usize, init: Init },
    FixedD { d: usize, init: Init },
    /// `M = t`: every coin flipped once.
    Binomial,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assumption::A => write!(f, "a"),
            Assumption::B => write!(f, "b"),
            Assumption::C => write!(f, "c"),
            Assumption::FixedM { m, init } => write!(f, "fixedM:M={m}:{init:?}"),
            Assumption::FixedD { d, init } => write!(f, "fixedD:d={d}:{init:?}"),
            Assumption::Binomial => write!(f, "binomial"),
        }
    }
}

/// A walk realized from a target time under an assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub spec: WalkSpec,
    pub init: InitialSpec,
    /// Coins prepared in a pure state.
    pub n_pure: usize,
}

impl Realization {
    pub fn t(&self) -> usize {
        self.spec.steps()
    }
}

/// Predicted scaling exponent and limit law.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub theta: f64,
    pub law: LimitLaw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFamily {
    pub assumption: Assumption,
    pub beta: f64,
    pub times: Vec<usize>,
}

fn round_pos(x: f64) -> usize {
    (x.round() as usize).max(1)
}

/// Real `M` with `M + M^β = t`.
fn solve_a(t: f64, beta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, t);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + mid.powf(beta) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(M, d)` under (c) from the smaller factor `n`: the other factor is
/// rounded so that `M d²` stays as close as possible to `(Md)^{1+β}`.
fn c_factors(beta: f64, n: usize) -> (usize, usize) {
    let nf = n as f64;
    if beta <= 0.5 {
        (round_pos(nf.powf((1.0 - beta) / beta)), n)
    } else {
        (n, round_pos(nf.powf(beta / (1.0 - beta))))
    }
}

/// Odd factors `3, 5, 7, 9, 11`, then the odd integer just below `√2`
/// times the previous one.
fn odd_factors() -> impl Iterator<Item = usize> {
    std::iter::successors(Some(3usize), |&n| {
        let next = if n < 11 { n + 2 } else { 2 * ((n as f64 * SQRT_2 / 2.0).floor() as usize) + 1 };
        (next < 1 << 31).then_some(next)
    })
}

impl ScalingFamily {
    pub fn new(assumption: Assumption, beta: f64, times: Vec<usize>) -> Result<Self, HarnessError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(HarnessError::BetaRange(beta));
        }
        Ok(ScalingFamily {
            assumption,
            beta,
            times,
        })
    }

    /// Ladder of five times ending near `t_max`.
    ///
    /// Assumptions other than (c) use ratio-2 target times, realized and
    /// deduplicated. Under (c) with `0 < β < 1` the finite-size laws depend
    /// on the residues of `M` and `d` mod 4 (even `M` carries an atom at the
    /// origin; the fixed-`d` laws have period 4 in `d`), so the ladder runs
    /// over odd values `n` of the smaller factor and derives the other one.
    pub fn ladder(assumption: Assumption, beta: f64, t_max: usize) -> Result<Self, HarnessError> {
        let probe = ScalingFamily::new(assumption, beta, vec![])?;
        let wanted = 5;
        let mut times: Vec<usize> = Vec::new();
        if assumption == Assumption::C && beta > 0.0 && beta < 1.0 {
            for n in odd_factors() {
                let (m, d) = c_factors(beta, n);
                match m.checked_mul(d) {
                    Some(t) if t <= t_max => times.push(t),
                    _ => break,
                }
            }
            let skip = times.len().saturating_sub(wanted);
            times.drain(..skip);
            return Ok(ScalingFamily { times, ..probe });
        }
        let mut target = t_max as f64;
        while times.len() < wanted && target >= 8.0 {
            let t = probe.realize(target.round() as usize).t();
            if t as f64 <= 1.1 * t_max as f64 && !times.contains(&t) {
                times.push(t);
            }
            target /= 2.0;
        }
        times.sort_unstable();
        Ok(ScalingFamily { times, ..probe })
    }

    /// Integer `(M, d, q)` realizing the assumption near time `t`.
    pub fn realize(&self, t: usize) -> Realization {
        let beta = self.beta;
        let tf = t.max(1) as f64;
        let (m, steps, init, n_pure) = match self.assumption {
            Assumption::A => {
                let m = round_pos(solve_a(tf, beta));
                let q = (m as f64).powf(beta).round() as usize;
                (m, m + q.min(m), InitialSpec::case_a(m), m)
            }
            Assumption::B => {
                let m = round_pos(tf / 2.0);
                let n_pure = ((m as f64).powf(beta).round() as usize).min(m);
                (m, 2 * m, InitialSpec::mixture(m, n_pure), n_pure)
            }
            Assumption::C => {
                let (m, d) = if beta == 0.0 {
                    (round_pos(tf), 1)
                } else if beta == 1.0 {
                    (1, round_pos(tf))
                } else {
                    c_factors(beta, round_pos(tf.powf(beta.min(1.0 - beta))))
                };
                (m, m * d, InitialSpec::case_b(m), 0)
            }
            Assumption::FixedM { m, init } => {
                let d = round_pos(tf / m as f64);
                let n_pure = if init == Init::CaseB { 0 } else { m };
                (m, m * d, init.spec(m), n_pure)
            }
            Assumption::FixedD { d, init } => {
                let m = round_pos(tf / d as f64);
                let n_pure = if init == Init::CaseB { 0 } else { m };
                (m, m * d, init.spec(m), n_pure)
            }
            Assumption::Binomial => (t.max(1), t, InitialSpec::case_a(t.max(1)), t.max(1)),
        };
        Realization {
            spec: WalkSpec::new(m, steps).expect("m ≥ 1"),
            init,
            n_pure,
        }
    }

    /// Critical exponent and limit law on the critical line.
    pub fn predicted(&self) -> Prediction {
        let b = self.beta;
        let gauss = LimitLaw::Gaussian { sigma: 1.0 };
        let (theta, law) = match self.assumption {
            Assumption::A => {
                if b < 0.5 {
                    (0.5, gauss)
                } else if b == 0.5 {
                    (0.5, LimitLaw::GaussPlusArcsine { beta: 0.0 })
                } else if b < 1.0 {
                    (b, LimitLaw::Arcsine { beta: 0.0 })
                } else {
                    (1.0, LimitLaw::Arcsine { beta: 1.0 })
                }
            }
            Assumption::B => {
                if b < 0.5 {
                    (0.5, gauss)
                } else if b == 0.5 {
                    (0.5, LimitLaw::GaussPlusArcsine { beta: 0.5 })
                } else {
                    (b, LimitLaw::Arcsine { beta: b })
                }
            }
            Assumption::C => {
                if b == 0.0 {
                    (0.5, gauss)
                } else if b == 1.0 {
                    (1.0, LimitLaw::Konno)
                } else {
                    (0.5 * (1.0 + b), LimitLaw::GaussTimesKonno)
                }
            }
            Assumption::FixedM { m, init } => (
                1.0,
                match init {
                    Init::CaseB => LimitLaw::FixedMB { m: m as u32 },
                    _ => LimitLaw::FixedMA {
                        m: m as u32,
                        phi: init.qubit(),
                    },
                },
            ),
            Assumption::FixedD { d, init } => match init {
                Init::CaseB => (0.5, LimitLaw::FixedDB { d: d as u32 }),
                _ => (
                    1.0,
                    LimitLaw::FixedDA {
                        d: d as u32,
                        phi: init.qubit(),
                    },
                ),
            },
            Assumption::Binomial => (0.5, gauss),
        };
        Prediction { theta, law }
    }
}

/// Least-squares slope of `log std` against `log t`.
pub fn fit_exponent(times: &[usize], stds: &[f64]) -> Result<f64, HarnessError> {
    if times.len() < 4 || times.len() != stds.len() {
        return Err(HarnessError::TooFewPoints);
    }
    let (tmin, tmax) = (*times.iter().min().unwrap(), *times.iter().max().unwrap());
    if (tmax as f64) < 10.0 * tmin as f64 {
        return Err(HarnessError::TooFewPoints);
    }
    if let Some(i) = stds.iter().position(|&s| s <= 0.0 || !s.is_finite()) {
        return Err(HarnessError::Degenerate(times[i]));
    }
    let xs: Vec<f64> = times.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = stds.iter().map(|s| s.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Fitted exponent of `std(X_t)` along the family's times.
pub fn scaling_exponent(family: &ScalingFamily, cfg: &EngineConfig) -> Result<f64, HarnessError> {
    let dists = family
        .times
        .par_iter()
        .map(|&t| {
            let r = family.realize(t);
            distribution_with(&r.spec, &r.init, cfg).map(|d| (r.t(), d.std_dev()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (ts, ss): (Vec<usize>, Vec<f64>) = dists.into_iter().unzip();
    fit_exponent(&ts, &ss)
}

/// One time point of a convergence report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub t: usize,
    pub m: usize,
    pub d: usize,
    pub q: usize,
    pub n_pure: usize,
    pub ks: f64,
    /// `E[(X_t/t^θ)ⁿ]` for `n = 1..4`.
    pub moments: [f64; 4],
    pub std: f64,
    /// `std(X_t) / t^{θ + 0.15}`.
    pub scaled_std_above: f64,
}

/// Offset above the critical line used for the degenerate-region check.
pub const ABOVE_CRITICAL: f64 = 0.15;
/// Required relative decay of the above-critical scaled std.
pub const ABOVE_DECAY: f64 = 0.30;
/// Allowed deviation of the fitted exponent from the critical one.
pub const EXPONENT_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub key: String,
    pub assumption: String,
    pub beta: f64,
    pub theta: f64,
    pub predicted_law: String,
    pub points: Vec<ConvergencePoint>,
    pub fitted_exponent: Option<f64>,
    pub exponent_ok: bool,
    pub ks_decreasing: bool,
    /// `1 - s(t_max)/s(t_min)` for the above-critical scaled std `s`.
    pub above_decay: Option<f64>,
    pub above_ok: bool,
    pub ceiling: Option<f64>,
    pub ceiling_ok: Option<bool>,
    pub complete: bool,
    pub error: Option<String>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.complete && self.exponent_ok && self.ks_decreasing && self.above_ok && self.ceiling_ok != Some(false)
    }
}

/// Strictly decreasing sequence.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.len() >= 2 && v.windows(2).all(|w| w[1] < w[0])
}

pub fn report_key(assumption: Assumption, beta: f64) -> String {
    format!("theorem/{assumption}/beta={beta}")
}

/// Runs a family through the engine and summarizes it against the
/// prediction. Budget failures truncate the report to the completed prefix.
pub fn run_family(family: &ScalingFamily, cfg: &EngineConfig, ceilings: Option<&Ceilings>) -> ConvergenceReport {
    let pred = family.predicted();
    let law = pred.law.build();
    let theta = pred.theta;
    let results: Vec<Result<ConvergencePoint, HarnessError>> = family
        .times
        .par_iter()
        .map(|&t| {
            let r = family.realize(t);
            let dist = distribution_with(&r.spec, &r.init, cfg)?;
            let tf = r.t() as f64;
            let std = dist.std_dev();
            let moments = [1, 2, 3, 4].map(|n| dist.scaled_moment(n, theta));
            Ok(ConvergencePoint {
                t: r.t(),
                m: r.spec.coins(),
                d: r.spec.d(),
                q: r.spec.q(),
                n_pure: r.n_pure,
                ks: ks_distance(&dist, theta, &law),
                moments,
                std,
                scaled_std_above: std / tf.powf(theta + ABOVE_CRITICAL),
            })
        })
        .collect();
    let mut points = Vec::new();
    let mut error = None;
    for r in results {
        match r {
            Ok(p) => points.push(p),
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let complete = error.is_none();
    let ts: Vec<usize> = points.iter().map(|p| p.t).collect();
    let ss: Vec<f64> = points.iter().map(|p| p.std).collect();
    let fitted = fit_exponent(&ts, &ss).ok();
    let ks: Vec<f64> = points.iter().map(|p| p.ks).collect();
    let above_decay = match (points.first(), points.last()) {
        (Some(a), Some(b)) if points.len() >= 2 => Some(1.0 - b.scaled_std_above / a.scaled_std_above),
        _ => None,
    };
    let key = report_key(family.assumption, family.beta);
    let ceiling = ceilings.and_then(|c| c.get(&key));
    let ceiling_ok = match (ceiling, ks.last()) {
        (Some(c), Some(&k)) => Some(k <= c),
        _ => None,
    };
    ConvergenceReport {
        key,
        assumption: family.assumption.to_string(),
        beta: family.beta,
        theta,
        predicted_law: pred.law.to_string(),
        exponent_ok: fitted.is_some_and(|f| (f - theta).abs() <= EXPONENT_TOL),
        fitted_exponent: fitted,
        ks_decreasing: strictly_decreasing(&ks),
        above_ok: above_decay.is_some_and(|d| d >= ABOVE_DECAY),
        above_decay,
        ceiling,
        ceiling_ok,
        complete,
        error,
        points,
    }
}

/// Sweep over `betas` for one of assumptions (a), (b), (c), one report per β.
pub fn phase_sweep(
    assumption: Assumption,
    betas: &[f64],
    t_max: usize,
    cfg: &EngineConfig,
    ceilings: Option<&Ceilings>,
) -> Result<Vec<ConvergenceReport>, HarnessError> {
    betas
        .iter()
        .map(|&b| Ok(run_family(&ScalingFamily::ladder(assumption, b, t_max)?, cfg, ceilings)))
        .collect()
}

/// Flat CSV with one row per (assumption, β, t).
pub fn reports_to_csv(reports: &[ConvergenceReport]) -> String {
    let mut out = String::from(
        "assumption,beta,theta,predicted_law,t,M,d,q,n_pure,ks,m1,m2,m3,m4,std,scaled_std_above,fitted_exponent\n",
    );
    for r in reports {
        let fitted = r.fitted_exponent.map(|f| f.to_string()).unwrap_or_default();
        for p in &r.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.assumption,
                r.beta,
                r.theta,
                r.predicted_law,
                p.t,
                p.m,
                p.d,
                p.q,
                p.n_pure,
                p.ks,
                p.moments[0],
                p.moments[1],
                p.moments[2],
                p.moments[3],
                p.std,
                p.scaled_std_above,
                fitted
            ));
        }
    }
    out
}

/// A KS sequence along a ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub label: String,
    pub index: Vec<usize>,
    pub ks: Vec<f64>,
    pub decreasing: bool,
}

impl Trajectory {
    fn new(label: &str, index: Vec<usize>, ks: Vec<f64>) -> Self {
        Trajectory {
            label: label.into(),
            decreasing: strictly_decreasing(&ks),
            index,
            ks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleLimitReport {
    /// `KS(Z_d/√d, 𝒳𝒵)` over `d`.
    pub fixed_d: Trajectory,
    /// `KS(√M Z^{[M]}, 𝒳𝒵)` over `M`.
    pub fixed_m: Trajectory,
    /// `KS(X_t/t, ProductLimitSym)` for `d = M = n`, symmetric coins.
    pub product_sym: Trajectory,
    /// Same with every coin in `|1⟩`, against ProductLimitKet1.
    pub product_ket1: Trajectory,
    /// `E[Z_32²]/32`, to compare with `1 - 1/√2`.
    pub moment_route: f64,
    pub ket1_second_moment: f64,
}

impl DoubleLimitReport {
    pub fn passed(&self) -> bool {
        self.fixed_d.decreasing
            && self.fixed_m.decreasing
            && self.product_sym.decreasing
            && self.product_ket1.decreasing
            && (self.moment_route - (1.0 - FRAC_1_SQRT_2)).abs() < 1e-2
    }
}

/// `d = M = n` ladder used for balanced growth at β = 1/2.
pub const BALANCED_LADDER: [usize; 7] = [16, 24, 32, 48, 64, 96, 128];
pub const DOUBLE_LIMIT_ORDERS: [u32; 5] = [2, 4, 8, 16, 32];

/// KS of `X_t/t` for `M = d = n` coins all in `init`, against `law`.
pub fn balanced_trajectory(
    label: &str,
    init: Init,
    law: &BuiltLaw,
    ladder: &[usize],
    cfg: &EngineConfig,
) -> Result<Trajectory, HarnessError> {
    let ks = ladder
        .par_iter()
        .map(|&n| {
            let spec = WalkSpec::new(n, n * n)?;
            let dist = distribution_with(&spec, &init.spec(n), cfg)?;
            Ok(ks_distance(&dist, 1.0, law))
        })
        .collect::<Result<Vec<f64>, HarnessError>>()?;
    Ok(Trajectory::new(label, ladder.iter().map(|&n| n * n).collect(), ks))
}

pub fn double_limit_check(cfg: &EngineConfig) -> Result<DoubleLimitReport, HarnessError> {
    let xz = LimitLaw::GaussTimesKonno.build();
    let orders = DOUBLE_LIMIT_ORDERS;
    let ks_d: Vec<f64> = orders
        .par_iter()
        .map(|&d| {
            let z = LimitLaw::FixedDB { d }.scaled(1.0 / (d as f64).sqrt()).build();
            ks_between(&z, &xz)
        })
        .collect();
    let ks_m: Vec<f64> = orders
        .par_iter()
        .map(|&m| {
            let z = LimitLaw::FixedMB { m }.scaled((m as f64).sqrt()).build();
            ks_between(&z, &xz)
        })
        .collect();
    let idx: Vec<usize> = orders.iter().map(|&o| o as usize).collect();
    let sym = LimitLaw::ProductLimitSym.build();
    let ket1 = LimitLaw::ProductLimitKet1.build();
    Ok(DoubleLimitReport {
        fixed_d: Trajectory::new("fixedD:B/sqrt(d) vs gauss*konno", idx.clone(), ks_d),
        fixed_m: Trajectory::new("sqrt(M) fixedM:B vs gauss*konno", idx, ks_m),
        product_sym: balanced_trajectory("caseA d=M vs product-sym", Init::CaseA, &sym, &BALANCED_LADDER, cfg)?,
        product_ket1: balanced_trajectory("ket1 d=M vs product-ket1", Init::Ket1, &ket1, &BALANCED_LADDER, cfg)?,
        moment_route: LimitLaw::FixedDB { d: 32 }.build().moment(2)? / 32.0,
        ket1_second_moment: ket1.moment(2)?,
    })
}

/// Calibrated KS ceilings keyed by check name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ceilings {
    pub version: u32,
    pub ceilings: BTreeMap<String, f64>,
}

/// Golden ceilings shipped with the crate.
pub const GOLDEN_CEILINGS: &str = include_str!("../golden/ks_ceilings.json");

/// Headroom applied to measured KS values when calibrating.
pub const CEILING_HEADROOM: f64 = 1.25;

impl Ceilings {
    pub fn golden() -> Result<Self, HarnessError> {
        Self::from_json(GOLDEN_CEILINGS)
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.ceilings.get(key).copied()
    }

    pub fn insert_measured(&mut self, key: &str, ks: f64) {
        let c = (ks * CEILING_HEADROOM * 1e5).ceil() / 1e5;
        self.ceilings.insert(key.into(), c);
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Ceilings(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Ceilings(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map of floats serializes")
    }
}
