//! One-dimensional quadrature: adaptive Gauss–Kronrod bisection for smooth
//! integrands on finite intervals, and the rectangle rule for periodic ones.

use std::f64::consts::TAU;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default absolute tolerance for adaptive integration.
pub const ABS_TOL: f64 = 1e-10;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive bisection with a 15-point Kronrod rule; stops when the summed
/// error estimate falls below `tol` or the depth limit is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate(f, b, a, tol);
    }
    recurse(&f, a, b, tol, 0)
}

fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth >= 40 || (b - a) < 1e-14 * (1.0 + a.abs()) {
        return val;
    }
    let m = 0.5 * (a + b);
    recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
}

/// `∫₀^{2π} f(k) dk/2π` by the `n`-point rectangle rule, exact for
/// trigonometric polynomials of degree below `n`.
pub fn periodic_mean<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let step = TAU / n as f64;
    let mut sum = 0.0;
    for j in 0..n {
        sum += f(step * j as f64);
    }
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_and_smooth_functions() {
        assert_abs_diff_eq!(integrate(|x| x * x, 0.0, 3.0, 1e-12), 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(f64::sin, 0.0, PI, 1e-12), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(f64::exp, 1.0, 0.0, 1e-12), 1.0 - 1f64.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(|x| (x - 0.3).abs(), 0.0, 1.0, 1e-12), 0.29, epsilon = 1e-11);
    }

    #[test]
    fn rectangle_rule_is_exact_for_trig_polynomials() {
        let f = |k: f64| (3.0 * k).cos().powi(2) + (5.0 * k).sin();
        assert_abs_diff_eq!(periodic_mean(f, 11), 0.5, epsilon = 1e-14);
    }
}
