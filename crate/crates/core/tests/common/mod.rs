//! Test-only numerical oracles, independent of the closed forms under test.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use zeno_core::wavepacket::GaussianSum;

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (7-point rule).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * KRONROD_WEIGHTS[7];
    let mut gauss = fc * GAUSS_WEIGHTS[3];
    for i in 0..7 {
        let x = h * KRONROD_NODES[i];
        let pair = f(c - x) + f(c + x);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    // Pre-split so that narrow features are not missed by the first panel.
    let panels = 64;
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| recurse(&f, a + i as f64 * w, a + (i + 1) as f64 * w, tol / panels as f64, 0))
        .sum()
}

/// Integration window `[min center - k sigma, max center + k sigma]`.
pub fn window(state: &GaussianSum, widths: f64) -> (f64, f64) {
    let (lo, hi) = state.center_range();
    (lo - widths * state.sigma(), hi + widths * state.sigma())
}

pub fn quad_norm_sq(state: &GaussianSum) -> f64 {
    let (a, b) = window(state, 10.0);
    integrate(|x| state.amplitude_at(x).norm_sqr(), a, b, 1e-13)
}

pub fn quad_moment(state: &GaussianSum, order: i32) -> f64 {
    let (a, b) = window(state, 10.0);
    let norm = quad_norm_sq(state);
    integrate(|x| x.powi(order) * state.amplitude_at(x).norm_sqr(), a, b, 1e-13) / norm
}

/// `<a|b>` by position-space quadrature of `conj(psi_a) psi_b`.
pub fn quad_inner_product(a: &GaussianSum, b: &GaussianSum) -> Complex64 {
    let (a0, a1) = window(a, 10.0);
    let (b0, b1) = window(b, 10.0);
    let (lo, hi) = (a0.min(b0), a1.max(b1));
    let re = integrate(|x| (a.amplitude_at(x).conj() * b.amplitude_at(x)).re, lo, hi, 1e-14);
    let im = integrate(|x| (a.amplitude_at(x).conj() * b.amplitude_at(x)).im, lo, hi, 1e-14);
    Complex64::new(re, im)
}

/// `<P^2>` by quadrature of the momentum-space density. The packet's Fourier
/// transform has `|f~(k)|^2 = Normal(k; 0, 1 / (4 sigma^2))` and each
/// translation by `s` contributes a phase `exp(-i k s)`.
pub fn quad_momentum_second_moment(state: &GaussianSum) -> f64 {
    let sd = 1.0 / (2.0 * state.sigma());
    let spectrum = |k: f64| {
        let phase_sum: Complex64 = state
            .components()
            .iter()
            .map(|c| c.amplitude * Complex64::from_polar(1.0, -k * c.center))
            .sum();
        let envelope = (-0.5 * (k / sd).powi(2)).exp() / ((2.0 * PI).sqrt() * sd);
        phase_sum.norm_sqr() * envelope
    };
    let (a, b) = (-14.0 * sd, 14.0 * sd);
    let norm = integrate(&spectrum, a, b, 1e-14);
    integrate(|k| k * k * spectrum(k), a, b, 1e-14 * sd * sd) / norm
}

/// Relative-or-absolute closeness.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
