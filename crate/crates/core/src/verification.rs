//! Named verification suites. Each suite returns a list of [`Check`]s; the
//! command line prints them as JSON and the acceptance target prints one
//! line per group.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::coin_kernel::{eigensystem, group_velocity, konno_substitution, mu_d, nu_d, spectral_derivatives, Qubit};
use crate::convergence_harness::{
    double_limit_check, ks_distance, phase_sweep, strictly_decreasing, Assumption, Ceilings, ConvergenceReport,
    HarnessError, Trajectory,
};
use crate::limit_laws::LimitLaw;
use crate::quadrature::{integrate, periodic_mean};
use crate::state_oracle::oracle_distribution;
use crate::walk_engine::{distribution_with, EngineConfig, InitialSpec, WalkSpec};

/// Outcome of one check. `value` is the measured statistic and `limit` the
/// bound it was held to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: value.is_finite() && value < limit,
            value,
            limit,
            detail: detail.into(),
        }
    }

    fn flag(name: impl Into<String>, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            value,
            limit: f64::NAN,
            detail: detail.into(),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Budget used by the long-running suites.
pub const VERIFY_BUDGET: f64 = 2e10;

pub fn verify_config() -> EngineConfig {
    EngineConfig {
        budget: VERIFY_BUDGET,
        ..EngineConfig::default()
    }
}

pub const ORACLE_MAX_COINS: usize = 8;
pub const ORACLE_MAX_STEPS: usize = 20;
pub const ORACLE_TV: f64 = 1e-10;

/// Engine against brute-force state evolution on every `M ≤ 8`, `t ≤ 20`.
pub fn oracle_suite(cfg: &EngineConfig) -> Result<Vec<Check>, HarnessError> {
    let inits: [(&str, fn(usize) -> InitialSpec); 4] = [
        ("caseA", InitialSpec::case_a),
        ("ket1", InitialSpec::ket1),
        ("caseB", InitialSpec::case_b),
        ("mix:beta=0.5", |m| InitialSpec::mixture(m, (m as f64).sqrt().round() as usize)),
    ];
    inits
        .iter()
        .map(|&(label, make)| {
            let grid: Vec<(usize, usize)> = (1..=ORACLE_MAX_COINS)
                .flat_map(|m| (1..=ORACLE_MAX_STEPS).map(move |t| (m, t)))
                .collect();
            let worst = grid
                .par_iter()
                .map(|&(m, t)| {
                    let init = make(m);
                    let engine = distribution_with(&WalkSpec::new(m, t)?, &init, cfg)?;
                    let oracle = oracle_distribution(m, t, &init)?;
                    Ok((engine.total_variation(&oracle), m, t))
                })
                .collect::<Result<Vec<_>, HarnessError>>()?
                .into_iter()
                .fold((0.0, 0, 0), |a, b| if b.0 > a.0 { b } else { a });
            Ok(Check::below(
                format!("oracle/{label}"),
                worst.0,
                ORACLE_TV,
                format!("max TV over M<=8, t<=20 at M={} t={}", worst.1, worst.2),
            ))
        })
        .collect()
}

pub const BINOMIAL_CASES: [(usize, usize); 3] = [(10, 10), (50, 37), (100, 100)];
pub const BINOMIAL_TOL: f64 = 1e-12;

fn binomial_pmf(t: usize) -> Vec<f64> {
    let mut p = vec![0.0; t + 1];
    p[0] = 0.5f64.powi(t as i32);
    for j in 0..t {
        p[j + 1] = p[j] * (t - j) as f64 / (j + 1) as f64;
    }
    p
}

/// `t ≤ M`: each coin is used at most once and `X_t` is a sum of fair signs.
pub fn binomial_suite(cfg: &EngineConfig) -> Result<Vec<Check>, HarnessError> {
    let mut out = Vec::new();
    for (m, t) in BINOMIAL_CASES {
        let pmf = binomial_pmf(t);
        for (label, init) in [("caseA", InitialSpec::case_a(m)), ("caseB", InitialSpec::case_b(m))] {
            let dist = distribution_with(&WalkSpec::new(m, t)?, &init, cfg)?;
            let mut err: f64 = 0.0;
            for x in -(t as i64)..=t as i64 {
                let expect = if (x + t as i64) % 2 == 0 {
                    pmf[((t as i64 - x) / 2) as usize]
                } else {
                    0.0
                };
                err = err.max((dist.mass_at(x) - expect).abs());
            }
            out.push(Check::below(
                format!("binomial/M={m}/t={t}/{label}"),
                err,
                BINOMIAL_TOL,
                "max |P(X=x) - C(t,j)/2^t|",
            ));
        }
    }
    Ok(out)
}

pub const LEMMA_GRID: usize = 1000;

/// `∫ g(x) w(k(x)) ρ(x) dx` with `x = sin(u)/√2`, which absorbs the
/// endpoint singularities of `ρ`.
fn konno_side<G: Fn(f64) -> f64, W: Fn(f64) -> f64>(g: G, w: W) -> f64 {
    integrate(
        |u: f64| {
            let s = u.sin();
            let x = s * FRAC_1_SQRT_2;
            let k = konno_substitution(x).unwrap_or(if x > 0.0 { 0.0 } else { PI });
            g(x) * w(k) / (PI * SQRT_2 * (1.0 - 0.5 * s * s))
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        1e-13,
    )
}

pub fn lemma_suite() -> Vec<Check> {
    let ks: Vec<f64> = (0..LEMMA_GRID).map(|j| 2.0 * PI * (j as f64 + 0.5) / LEMMA_GRID as f64).collect();
    let phis = [Qubit::symmetric(), Qubit::right(), Qubit::left()];
    let mut vel: f64 = 0.0;
    let mut weight: f64 = 0.0;
    for &k in &ks {
        for phi in &phis {
            match spectral_derivatives(k, phi.as_array()) {
                Ok(s) => {
                    vel = vel.max((s.h0 + s.h1).abs());
                    weight = weight.max((s.p + s.q - 1.0).abs());
                }
                Err(_) => {
                    vel = f64::NAN;
                    weight = f64::NAN;
                }
            }
        }
    }
    let mut out = vec![
        Check::below("lemma/h0+h1", vel, 1e-12, "max over 1000 momenta, 3 initial coins"),
        Check::below("lemma/p+q", weight, 1e-12, "max over 1000 momenta, 3 initial coins"),
    ];

    let gs: [(&str, fn(f64) -> f64); 3] = [("1", |_| 1.0), ("x^2", |x| x * x), ("x^4", |x| x.powi(4))];
    let ws: [(&str, fn(f64) -> f64); 2] = [("1", |_| 1.0), ("cos k", f64::cos)];
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for (gn, g) in gs {
        for (wn, w) in ws {
            // g(h(k)) w(k) is analytic and periodic: the rectangle rule converges geometrically
            let lhs = periodic_mean(|k| g(group_velocity(k).unwrap_or(f64::NAN)) * w(k), 4096);
            let rhs = konno_side(g, w);
            let e = (lhs - rhs).abs();
            if detail.is_empty() || e > worst {
                worst = e;
                detail = format!("worst at g={gn}, w={wn}: {lhs} vs {rhs}");
            }
        }
    }
    out.push(Check::below("lemma/substitution", worst, 1e-6, detail));

    let second = konno_side(|x| x * x, |_| 1.0);
    let target = 1.0 - FRAC_1_SQRT_2;
    out.push(Check::below(
        "lemma/konno-second-moment",
        (second - target).abs(),
        1e-8,
        format!("{second} vs 1 - 1/sqrt(2)"),
    ));
    out
}

pub const SPECTRAL_TOL: f64 = 1e-10;

pub fn spectral_suite() -> Vec<Check> {
    let ks: Vec<f64> = (0..LEMMA_GRID).map(|j| 2.0 * PI * j as f64 / LEMMA_GRID as f64).collect();
    let phi = *Qubit::symmetric().as_array();
    let sup = |f: &dyn Fn(f64) -> f64| ks.iter().map(|&k| f(k)).fold(0.0, f64::max);
    let mu1 = sup(&|k| mu_d(k, 1, &phi).map_or(f64::NAN, f64::abs));
    let mu2 = sup(&|k| mu_d(k, 2, &phi).map_or(f64::NAN, |m| (m - 0.5 * (2.0 * k).sin()).abs()));
    let nu2 = sup(&|k| nu_d(k, 2).map_or(f64::NAN, |v| (v - 1.0).abs()));
    let trace = sup(&|k| {
        let eig = eigensystem(k);
        (1..=8u32)
            .map(|d| (eig.power(-(d as i64)) * eig.power_derivative(d)).trace().norm())
            .fold(0.0, f64::max)
    });
    vec![
        Check::below("spectral/mu1", mu1, SPECTRAL_TOL, "sup |mu_1(k)|"),
        Check::below("spectral/mu2", mu2, SPECTRAL_TOL, "sup |mu_2(k) - sin(2k)/2|"),
        Check::below("spectral/nu2", nu2, SPECTRAL_TOL, "sup |nu_2(k) - 1|"),
        Check::below("spectral/first-derivative-trace", trace, SPECTRAL_TOL, "sup over d<=8 of |Tr[H^-d D_k H^d]|"),
    ]
}

pub const MOMENT_COINS: [usize; 2] = [2, 4];
pub const MOMENT_ORDERS: [usize; 3] = [100, 250, 500];
pub const MOMENT_TOL: f64 = 5e-3;

/// Large-`d` second moment of `X_t/t` for `M` coins in `|1⟩`.
pub fn ket1_second_moment(m: usize) -> f64 {
    1.0 - 5.0 / (4.0 * SQRT_2) + 1.0 / (4.0 * m as f64 * SQRT_2)
}

pub fn moment_suite(cfg: &EngineConfig) -> Result<Vec<Check>, HarnessError> {
    let mut out = Vec::new();
    for m in MOMENT_COINS {
        let target = ket1_second_moment(m);
        let errs = MOMENT_ORDERS
            .par_iter()
            .map(|&d| {
                let dist = distribution_with(&WalkSpec::new(m, m * d)?, &InitialSpec::ket1(m), cfg)?;
                Ok((dist.scaled_moment(2, 1.0) - target).abs())
            })
            .collect::<Result<Vec<f64>, HarnessError>>()?;
        let last = *errs.last().unwrap();
        out.push(Check::below(
            format!("moments/ket1/M={m}"),
            last,
            MOMENT_TOL,
            format!("|E[(X_t/t)^2] - target| at d=100,250,500: {errs:?}"),
        ));
        out.push(Check::flag(
            format!("moments/ket1/M={m}/improving"),
            strictly_decreasing(&errs),
            last,
            format!("{errs:?}"),
        ));
    }

    // The quoted fixed-d second moments read as E[mu_d^2] for coins in |1⟩;
    // the alternative, the Case B variance E[nu_d], is reported beside it.
    for (d, target) in [(2u32, 1.0 / 8.0), (3, 7.0 / 72.0)] {
        let read = LimitLaw::FixedDA { d, phi: Qubit::right() }.build().moment(2)?;
        let alt = LimitLaw::FixedDB { d }.build().moment(2)?;
        out.push(Check::below(
            format!("moments/fixed-d={d}"),
            (read - target).abs(),
            1e-8,
            format!("E[mu_d^2] with |1>: {read}; E[nu_d] (random coins): {alt}; quoted {target}"),
        ));
    }
    Ok(out)
}

pub const COROLLARY_TIMES: [usize; 4] = [250, 500, 1000, 2000];
pub const COROLLARY_KS_A: f64 = 0.05;
pub const COROLLARY_KS_B: f64 = 0.03;

fn ceiling_check(name: &str, ks: f64, ceilings: Option<&Ceilings>) -> Check {
    match ceilings.and_then(|c| c.get(name)) {
        Some(c) => Check {
            name: format!("{name}/ceiling"),
            passed: ks <= c,
            value: ks,
            limit: c,
            detail: "top-of-ladder KS against golden ceiling".into(),
        },
        None => Check::flag(format!("{name}/ceiling"), false, ks, "no golden ceiling recorded"),
    }
}

fn trajectory_detail(index: &[usize], ks: &[f64]) -> String {
    index
        .iter()
        .zip(ks)
        .map(|(t, k)| format!("t={t}: {k:.5}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Two coins used alternately (`t = 2M`): Case A against the arcsine law
/// on `(-1/2, 1/2)`, Case B against the standard Gaussian.
pub fn corollary_suite(cfg: &EngineConfig, ceilings: Option<&Ceilings>) -> Result<Vec<Check>, HarnessError> {
    let arcsine = LimitLaw::Arcsine { beta: 1.0 }.build();
    let gauss = LimitLaw::Gaussian { sigma: 1.0 }.build();
    let rows = COROLLARY_TIMES
        .par_iter()
        .map(|&t| {
            let spec = WalkSpec::new(t / 2, t)?;
            let a = distribution_with(&spec, &InitialSpec::case_a(t / 2), cfg)?;
            let b = distribution_with(&spec, &InitialSpec::case_b(t / 2), cfg)?;
            Ok((ks_distance(&a, 1.0, &arcsine), ks_distance(&b, 0.5, &gauss)))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let (ka, kb): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let (top_a, top_b) = (*ka.last().unwrap(), *kb.last().unwrap());
    Ok(vec![
        Check::flag(
            "corollary/caseA/decreasing",
            strictly_decreasing(&ka),
            top_a,
            trajectory_detail(&COROLLARY_TIMES, &ka),
        ),
        Check::below("corollary/caseA/top", top_a, COROLLARY_KS_A, "KS(X_t/t, arcsine:beta=1) at t=2000"),
        ceiling_check("corollary/caseA", top_a, ceilings),
        Check::below(
            "corollary/caseB/top",
            top_b,
            COROLLARY_KS_B,
            format!("KS(X_t/sqrt(t), gaussian) along ladder: {}", trajectory_detail(&COROLLARY_TIMES, &kb)),
        ),
        ceiling_check("corollary/caseB", top_b, ceilings),
    ])
}

pub const THEOREM_BETAS: [f64; 3] = [0.2, 0.5, 0.8];
/// Top of the ladder for assumptions (a) and (b).
pub const THEOREM_T_MAX: usize = 2000;
/// Top of the ladder for assumption (c), whose ladder runs over odd factors.
pub const THEOREM_T_MAX_C: usize = 60000;

pub fn theorem_t_max(assumption: Assumption) -> usize {
    if assumption == Assumption::C {
        THEOREM_T_MAX_C
    } else {
        THEOREM_T_MAX
    }
}

pub fn report_checks(reports: &[ConvergenceReport], ceilings: Option<&Ceilings>) -> Vec<Check> {
    let mut out = Vec::new();
    for r in reports {
        let ks: Vec<f64> = r.points.iter().map(|p| p.ks).collect();
        let ts: Vec<usize> = r.points.iter().map(|p| p.t).collect();
        let top = ks.last().copied().unwrap_or(f64::NAN);
        let mut traj = trajectory_detail(&ts, &ks);
        if let Some(e) = &r.error {
            traj.push_str(&format!(" (truncated: {e})"));
        }
        out.push(Check {
            name: format!("{}/exponent", r.key),
            passed: r.complete && r.exponent_ok,
            value: r.fitted_exponent.unwrap_or(f64::NAN),
            limit: r.theta,
            detail: format!("fitted vs critical {} within 0.05", r.theta),
        });
        out.push(Check::flag(
            format!("{}/ks-decreasing", r.key),
            r.complete && r.ks_decreasing,
            top,
            format!("against {}: {traj}", r.predicted_law),
        ));
        out.push(Check {
            name: format!("{}/above-critical", r.key),
            passed: r.complete && r.above_ok,
            value: r.above_decay.unwrap_or(f64::NAN),
            limit: 0.30,
            detail: format!("relative decay of std/t^{:.2}", r.theta + 0.15),
        });
        out.push(ceiling_check(&r.key, top, ceilings));
    }
    out
}

pub fn theorem_suite(
    assumption: Assumption,
    betas: &[f64],
    cfg: &EngineConfig,
    ceilings: Option<&Ceilings>,
) -> Result<(Vec<ConvergenceReport>, Vec<Check>), HarnessError> {
    let reports = phase_sweep(assumption, betas, theorem_t_max(assumption), cfg, ceilings)?;
    let checks = report_checks(&reports, ceilings);
    Ok((reports, checks))
}

pub const BALANCED_KS: f64 = 0.06;

fn trajectory_check(name: &str, t: &Trajectory) -> Check {
    Check::flag(
        name,
        t.decreasing,
        t.ks.last().copied().unwrap_or(f64::NAN),
        format!("{}: {}", t.label, trajectory_detail(&t.index, &t.ks)),
    )
}

/// Mass of the balanced-growth limit density, integrated directly after
/// `x = sin(u)/√8`.
fn product_sym_mass() -> f64 {
    let r = 1.0 / 8f64.sqrt();
    integrate(
        |u: f64| {
            let x = r * u.sin();
            3.0 * r / (PI * (1.0 + x * x))
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        1e-14,
    )
}

pub fn double_limit_suite(cfg: &EngineConfig, ceilings: Option<&Ceilings>) -> Result<Vec<Check>, HarnessError> {
    let r = double_limit_check(cfg)?;
    let sym_top = r.product_sym.ks.last().copied().unwrap_or(f64::NAN);
    let ket1_target = 1.0 - 5.0 / (4.0 * SQRT_2);
    let sym = LimitLaw::ProductLimitSym.build();
    let quad_mass = product_sym_mass();
    Ok(vec![
        trajectory_check("double-limit/product-sym/decreasing", &r.product_sym),
        Check::below("double-limit/product-sym/top", sym_top, BALANCED_KS, "KS at top of the balanced ladder"),
        ceiling_check("double-limit/product-sym", sym_top, ceilings),
        Check::below(
            "double-limit/product-sym/mass",
            (quad_mass - 1.0).abs().max((sym.total_mass() - 1.0).abs()),
            1e-8,
            format!("direct quadrature {quad_mass}, law tables {}", sym.total_mass()),
        ),
        Check::below(
            "double-limit/product-ket1/second-moment",
            (r.ket1_second_moment - ket1_target).abs(),
            1e-8,
            format!("{} vs 1 - 5/(4 sqrt 2)", r.ket1_second_moment),
        ),
        trajectory_check("double-limit/fixed-d/decreasing", &r.fixed_d),
        trajectory_check("double-limit/fixed-m/decreasing", &r.fixed_m),
        trajectory_check("double-limit/product-ket1/decreasing", &r.product_ket1),
        Check::below(
            "double-limit/moment-route",
            (r.moment_route - (1.0 - FRAC_1_SQRT_2)).abs(),
            1e-2,
            format!("E[Z_32^2]/32 = {}", r.moment_route),
        ),
    ])
}

/// Top-of-ladder KS values for every ceiling key, measured fresh.
pub fn calibrate(cfg: &EngineConfig) -> Result<Ceilings, HarnessError> {
    let mut c = Ceilings {
        version: 1,
        ..Ceilings::default()
    };
    let measured = |checks: &[Check], name: &str| checks.iter().find(|x| x.name == name).map(|x| x.value);
    let cor = corollary_suite(cfg, None)?;
    for key in ["corollary/caseA", "corollary/caseB"] {
        if let Some(v) = measured(&cor, &format!("{key}/ceiling")) {
            c.insert_measured(key, v);
        }
    }
    for a in [Assumption::A, Assumption::B, Assumption::C] {
        let (reports, _) = theorem_suite(a, &THEOREM_BETAS, cfg, None)?;
        for r in reports.iter().filter(|r| r.complete) {
            if let Some(p) = r.points.last() {
                c.insert_measured(&r.key, p.ks);
            }
        }
    }
    let dl = double_limit_suite(cfg, None)?;
    if let Some(v) = measured(&dl, "double-limit/product-sym/ceiling") {
        c.insert_measured("double-limit/product-sym", v);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_pmf_sums_to_one() {
        let p = binomial_pmf(37);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((p[1] - 37.0 / 2f64.powi(37)).abs() < 1e-25);
    }

    #[test]
    fn konno_side_mass() {
        assert!((konno_side(|_| 1.0, |_| 1.0) - 1.0).abs() < 1e-12);
        // odd in x
        assert!(konno_side(|x| x, |_| 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_sym_quadrature_mass() {
        assert!((product_sym_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lemma_and_spectral_suites_pass() {
        for c in lemma_suite().into_iter().chain(spectral_suite()) {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn missing_ceiling_fails() {
        let c = ceiling_check("corollary/caseA", 0.01, None);
        assert!(!c.passed);
        let mut g = Ceilings::default();
        g.insert_measured("corollary/caseA", 0.01);
        assert!(ceiling_check("corollary/caseA", 0.0125, Some(&g)).passed);
        assert!(!ceiling_check("corollary/caseA", 0.013, Some(&g)).passed);
    }
}
