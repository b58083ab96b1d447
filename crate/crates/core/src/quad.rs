//! Adaptive Gauss-Kronrod quadrature and the sine integral.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
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

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol.max(whole.abs() * 1e-15) || depth >= MAX_DEPTH || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, whole, 0.5 * tol, depth + 1) + adapt(f, m, b, whole, 0.5 * tol, depth + 1)
}

/// Integrates `f` over `[a, b]`, splitting at every breakpoint that falls
/// strictly inside the interval. `tol` is an absolute error target.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut pts: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    pts.push(a);
    pts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let pieces = (pts.len() - 1) as f64;
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (rough, _) = gk15(&mut f, w[0], w[1]);
        total += adapt(&mut f, w[0], w[1], rough, tol / pieces, 0);
    }
    total
}

/// Sine integral `Si(x) = int_0^x sin(t)/t dt`.
pub fn sine_integral(x: f64) -> f64 {
    let t = x.abs();
    let si = if t == 0.0 {
        0.0
    } else if t <= 2.0 {
        let mut term = t;
        let mut sum = t;
        let t2 = t * t;
        let mut n = 0.0_f64;
        loop {
            term *= -t2 / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
            let add = term / (2.0 * n + 3.0);
            sum += add;
            n += 1.0;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        // Lentz continued fraction for E1(i t).
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, t);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 2..200 {
            let a = -((i - 1) as f64).powi(2);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
                break;
            }
        }
        h *= Complex64::new(t.cos(), -t.sin());
        FRAC_PI_2 + h.im
    };
    si.copysign(x)
}
