//! One-dimensional quadrature: adaptive Simpson and a 7/15-point Gauss-Kronrod pair.

/// Value and error estimate of a definite integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral { value: self.value + rhs.value, abs_error: self.abs_error + rhs.abs_error }
    }
}

impl Integral {
    pub const ZERO: Integral = Integral { value: 0.0, abs_error: 0.0 };
}

/// Relative error below which further bisection only chases rounding noise.
const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

/// Adaptive Simpson on dyadic subdivisions; each half gets half the tolerance.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Integral {
    if !(b > a) {
        return Integral::ZERO;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Integral {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= (15.0 * tol).max(ROUNDOFF * (left + right).abs()) || m <= a || m >= b {
        return Integral { value: left + right + delta / 15.0, abs_error: delta.abs() / 15.0 };
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

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
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Single 15-point Kronrod rule with the embedded 7-point Gauss error estimate.
pub fn gauss_kronrod15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> Integral {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Integral { value: kronrod * h, abs_error: ((kronrod - gauss) * h).abs() }
}

/// Recursive bisection with the Gauss-Kronrod pair until the local error meets `tol`.
pub fn adaptive_gauss_kronrod<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Integral {
    if !(b > a) {
        return Integral::ZERO;
    }
    gk_step(&mut f, a, b, tol, max_depth)
}

fn gk_step<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> Integral {
    let est = gauss_kronrod15(&mut *f, a, b);
    let m = 0.5 * (a + b);
    if est.abs_error <= tol.max(ROUNDOFF * est.value.abs()) || depth == 0 || m <= a || m >= b {
        return est;
    }
    gk_step(f, a, m, 0.5 * tol, depth - 1) + gk_step(f, m, b, 0.5 * tol, depth - 1)
}

/// Integrates piece by piece over sorted breakpoints inside `[a, b]`.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> Integral {
    let mut nodes = vec![a];
    nodes.extend(breakpoints.iter().copied().filter(|&t| t > a && t < b));
    nodes.push(b);
    nodes.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    nodes.dedup();
    let pieces = (nodes.len() - 1).max(1) as f64;
    let mut total = Integral::ZERO;
    for w in nodes.windows(2) {
        total = total + adaptive_gauss_kronrod(&mut f, w[0], w[1], tol / pieces, 40);
    }
    total
}

/// Golden-section search for the maximum of a unimodal function.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
