//! Quadrature of the classical normal Stein solution
//! `f_h(x) = -∫_0^∞ (E h(e^{-s}x + sqrt(1-e^{-2s}) Z) - E h(Z)) ds`.

use crate::moments::normal_moment;
use crate::rational;

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
// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Most subintervals the adaptive rule will create before giving up on the
/// requested tolerance and returning its best estimate.
const MAX_INTERVALS: usize = 2000;

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss-Kronrod (G7/K15) integral of `f` over `[a, b]`.
///
/// The subinterval with the largest error estimate is bisected until the
/// summed estimate drops below `abs_tol` or the interval budget runs out.
pub fn gauss_kronrod_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    let (v, e) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut err = e;
    while err > abs_tol && pieces.len() < MAX_INTERVALS {
        let worst = (0..pieces.len())
            .max_by(|&i, &j| pieces[i].3.total_cmp(&pieces[j].3))
            .expect("at least one interval");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (lv, le) = gk15(&f, lo, mid);
        let (rv, re) = gk15(&f, mid, hi);
        pieces.push((lo, mid, lv, le));
        pieces.push((mid, hi, rv, re));
        err = pieces.iter().map(|p| p.3).sum();
    }
    pieces.iter().map(|p| p.2).sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `f_h(x)` for `h(x) = x^k` under the standard normal, by quadrature.
///
/// The Gaussian expectation inside is expanded binomially and evaluated
/// with exact normal moments; only the outer `s`-integral is numerical. The
/// integrand is bounded by `C e^{-s}`, so it is truncated at
/// `S = ln(C / 1e-12)`.
pub fn quadrature_normal_solution(k: u32, x: f64) -> f64 {
    let m: Vec<f64> = (0..=k)
        .map(|j| rational::to_f64(&normal_moment(j)))
        .collect();
    let coeffs: Vec<f64> = (0..=k).map(|j| binomial(k, j)).collect();
    let integrand = |s: f64| {
        let decay = (-s).exp();
        let spread = -(-2.0 * s).exp_m1();
        let mut total = -m[k as usize];
        for j in 0..=k {
            let rest = (k - j) as usize;
            if m[rest] == 0.0 {
                continue;
            }
            total += coeffs[j as usize]
                * (decay * x).powi(j as i32)
                * spread.powf(rest as f64 / 2.0)
                * m[rest];
        }
        total
    };
    let tail_const: f64 = (1..=k)
        .map(|j| coeffs[j as usize] * x.abs().powi(j as i32) * m[(k - j) as usize])
        .sum::<f64>()
        + 0.5 * k as f64 * m[k as usize];
    let horizon = (tail_const.max(1e-300) / 1e-12).ln().max(1.0);
    // Rounding in the integrand scales with its size, so large `k` or `|x|`
    // cannot reach a fixed absolute tolerance.
    let tol = (1e-14 * tail_const).max(1e-13);
    -gauss_kronrod_adaptive(integrand, 0.0, horizon, tol)
}
