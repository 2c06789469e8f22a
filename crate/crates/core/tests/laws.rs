use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2, TAU};

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mcqw::coin_kernel::{group_velocity, konno_substitution, spectral_weights, Qubit};
use mcqw::limit_laws::{atom_mass, fixed_m_char, moment, sample, Case, LimitLaw};
use mcqw::walk_engine::{distribution, InitialSpec, WalkSpec};

fn second_moment(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    (m2, ((m4 - m2 * m2) / n).sqrt())
}

#[test]
fn fixed_d_second_moments_for_ket1_coins() {
    let ket1 = Qubit::right();
    let two = moment(&LimitLaw::FixedDA { d: 2, phi: ket1 }, 2).unwrap();
    let three = moment(&LimitLaw::FixedDA { d: 3, phi: ket1 }, 2).unwrap();
    assert_abs_diff_eq!(two, 1.0 / 8.0, epsilon = 1e-8);
    assert_abs_diff_eq!(three, 7.0 / 72.0, epsilon = 1e-8);
    // random coins give E[ν_d] instead, which is 1 for d = 2, 3
    assert_abs_diff_eq!(moment(&LimitLaw::FixedDB { d: 2 }, 2).unwrap(), 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(moment(&LimitLaw::FixedDB { d: 3 }, 2).unwrap(), 1.0, epsilon = 1e-8);
}

#[test]
fn fixed_m_laws_conserve_mass() {
    for m in 1..=6 {
        for case in [Case::B, Case::A(Qubit::symmetric()), Case::A(Qubit::right())] {
            let law = match case {
                Case::B => LimitLaw::FixedMB { m },
                Case::A(phi) => LimitLaw::FixedMA { m, phi },
            }
            .build();
            assert_abs_diff_eq!(law.total_mass(), 1.0, epsilon = 1e-8);
            let atoms: f64 = law.atoms().iter().map(|a| a.mass).sum();
            assert_abs_diff_eq!(atoms, atom_mass(m, case), epsilon = 1e-12);
        }
    }
}

/// `∫ cos(ξx) dF(x)` from the tabulated CDF, against the full-sum
/// characteristic function.
#[test]
fn fixed_m_cdf_reproduces_characteristic_function() {
    for (m, case) in [(2, Case::B), (3, Case::B), (2, Case::A(Qubit::symmetric())), (3, Case::A(Qubit::symmetric()))] {
        let law = match case {
            Case::B => LimitLaw::FixedMB { m },
            Case::A(phi) => LimitLaw::FixedMA { m, phi },
        }
        .build();
        for xi in [1.0, 4.0] {
            // E cos(ξX) = cos(ξa) + ∫ ξ sin(ξx) F(x) dx over [-a, a]
            let a = FRAC_1_SQRT_2;
            let n = 20000;
            let h = 2.0 * a / n as f64;
            let mut by_parts = 0.0;
            for i in 0..n {
                let x = -a + h * (i as f64 + 0.5);
                by_parts += xi * (xi * x).sin() * law.cdf(x) * h;
            }
            let expect = (xi * a).cos() + by_parts;
            assert_abs_diff_eq!(fixed_m_char(m, case, xi).re, expect, epsilon = 2e-6);
        }
    }
}

#[test]
fn two_coin_atom_matches_walk_mass_near_origin() {
    let c = atom_mass(2, Case::A(Qubit::symmetric()));
    let direct = {
        let n = 4096;
        (0..n)
            .map(|j| {
                let (p, q) = spectral_weights(TAU * j as f64 / n as f64, Qubit::symmetric().as_array()).unwrap();
                p * q
            })
            .sum::<f64>()
            * 2.0
            / n as f64
    };
    assert_abs_diff_eq!(c, direct, epsilon = 1e-12);
    let errs: Vec<f64> = [100usize, 300, 1000]
        .iter()
        .map(|&d| {
            let t = 2 * d;
            let w = (t as f64).sqrt();
            let dist = distribution(&WalkSpec::new(2, t).unwrap(), &InitialSpec::case_a(2)).unwrap();
            let near: f64 = dist.support().filter(|(x, _)| (*x as f64).abs() <= w).map(|(_, m)| m).sum();
            (near - c).abs()
        })
        .collect();
    assert!(errs.windows(2).all(|e| e[1] < e[0]), "{errs:?}");
    assert!(errs[2] < 0.02, "{errs:?}");
}

#[test]
fn weights_along_the_velocity_substitution() {
    // p(k(x)) for the symmetric coin against (1 + √(1 - 2x²))/2
    let phi = Qubit::symmetric();
    for i in 1..200 {
        let x = -FRAC_1_SQRT_2 + i as f64 * SQRT_2 / 200.0;
        let k = konno_substitution(x).unwrap();
        assert_abs_diff_eq!(group_velocity(k).unwrap(), x, epsilon = 1e-12);
        let (p, _) = spectral_weights(k, phi.as_array()).unwrap();
        assert_abs_diff_eq!(p, 0.5 * (1.0 + (1.0 - 2.0 * x * x).sqrt()), epsilon = 1e-8);
    }
}

#[test]
fn sampler_second_moments() {
    let n = 1_000_000;
    let (m, _) = second_moment(&sample(&LimitLaw::Arcsine { beta: 0.0 }, n, 1));
    assert_abs_diff_eq!(m, 0.5, epsilon = 3e-3);
    let (m, _) = second_moment(&sample(&LimitLaw::GaussTimesKonno, n, 2));
    assert_abs_diff_eq!(m, 1.0 - FRAC_1_SQRT_2, epsilon = 5e-3);
    let (m, _) = second_moment(&sample(&LimitLaw::GaussPlusArcsine { beta: 0.5 }, n, 3));
    assert_abs_diff_eq!(m, 1.25, epsilon = 5e-3);
}

/// The balanced-growth law is that of `h(K)(p(K) - q(K))` for uniform `K`
/// and the symmetric coin.
#[test]
fn product_sym_moment_against_sampled_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let phi = Qubit::symmetric();
    let ys: Vec<f64> = (0..400_000)
        .map(|_| {
            let k = rng.random::<f64>() * TAU;
            let (p, q) = spectral_weights(k, phi.as_array()).unwrap();
            group_velocity(k).unwrap() * (p - q)
        })
        .collect();
    let (m, se) = second_moment(&ys);
    let law = moment(&LimitLaw::ProductLimitSym, 2).unwrap();
    assert!((m - law).abs() < 3.0 * se, "{m} vs {law} (se {se})");
    assert!(ys.iter().all(|y| y.abs() <= 1.0 / 8f64.sqrt() + 1e-12));
}
