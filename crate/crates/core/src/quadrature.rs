//! Numerical integration of complex-valued integrands: adaptive
//! Gauss–Kronrod (7/15) with bisection, and fixed Gauss–Legendre panels.

use num_complex::Complex64;

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

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 16;

/// One G7K15 step on [a, b]: (Kronrod estimate, |Kronrod − Gauss|,
/// Kronrod estimate of ∫|f|).
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for i in 0..7 {
        let dx = h * XGK[i];
        let (lo, hi) = (f(c - dx), f(c + dx));
        let s = lo + hi;
        k += s * WGK[i];
        abs += (lo.norm() + hi.norm()) * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm(), abs * h.abs())
}

fn adapt<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Complex64 {
    let (k, err, abs) = gk15(f, a, b);
    // Oscillatory integrands carry phase rounding far above f64::EPSILON, so
    // the floor below which bisection cannot help is set generously.
    if err <= tol || err <= 1e3 * f64::EPSILON * abs || depth >= MAX_DEPTH {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1)
}

/// ∫_a^b f, split first into `pieces` equal panels, each refined by
/// bisection until its local error estimate meets its share of `abs_tol`.
pub fn integrate_adaptive<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, abs_tol: f64, pieces: usize) -> Complex64 {
    let pieces = pieces.max(1);
    let w = (b - a) / pieces as f64;
    let tol = abs_tol / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + w * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + w };
            adapt(&f, lo, hi, tol, 0)
        })
        .sum()
}

/// Gauss–Legendre nodes and weights of order `n` on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// ∫_a^b f over `panels` equal sub-panels.
    pub fn integrate<F: Fn(f64) -> Complex64>(&self, f: F, a: f64, b: f64, panels: usize) -> Complex64 {
        let panels = panels.max(1);
        let w = (b - a) / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let c = a + w * (p as f64 + 0.5);
            let h = 0.5 * w;
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                acc += f(c + h * x) * (wt * h);
            }
        }
        acc
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gk_integrates_polynomials_and_oscillations() {
        let v = integrate_adaptive(|x| Complex64::new(x * x, 0.0), 0.0, 3.0, 1e-12, 1);
        assert!((v.re - 9.0).abs() < 1e-12);
        // ∫_0^1 e^{j2π·40.5 x} dx = (e^{j81π} − 1)/(j2π·40.5) = 2j/(2π·40.5)
        let v = integrate_adaptive(|x| Complex64::from_polar(1.0, 2.0 * PI * 40.5 * x), 0.0, 1.0, 1e-12, 4);
        let want = Complex64::new(0.0, 1.0 / (PI * 40.5));
        assert!((v - want).norm() < 1e-11, "{v}");
    }

    #[test]
    fn gauss_legendre_weights_and_exactness() {
        for n in [1, 2, 5, 8, 16] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
            // Exact for degree 2n − 1.
            let d = 2 * n - 1;
            let v = gl.integrate(|x| Complex64::new(x.powi(d as i32) + 1.0, 0.0), 0.0, 1.0, 1);
            assert!((v.re - (1.0 / (d as f64 + 1.0) + 1.0)).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn gauss_legendre_panels() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(|x| Complex64::from_polar(1.0, 2.0 * PI * 10.0 * x), 0.0, 0.25, 8);
        let want = (Complex64::from_polar(1.0, 2.0 * PI * 2.5) - 1.0) / Complex64::new(0.0, 2.0 * PI * 10.0);
        assert!((v - want).norm() < 1e-13);
    }
}
