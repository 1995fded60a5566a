//! Test-only numerical oracles, independent of the library's code paths.
#![allow(dead_code)]

pub mod oracles;

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

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on `[a, b]`: bisects
/// the worst interval until the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_tol<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let mut parts = vec![(a, b, gk15(f, a, b))];
    for _ in 0..5000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap())
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(f, lo, mid)));
        parts.push((mid, hi, gk15(f, mid, hi)));
    }
    parts.iter().map(|p| p.2 .0).sum()
}

pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    integrate_tol(f, a, b, 0.0, 1e-13)
}

/// Gamma(shape, 1) log-density.
pub fn ln_gamma_density(g: f64, shape: f64) -> f64 {
    (shape - 1.0) * g.ln() - g - statrs::function::gamma::ln_gamma(shape)
}

/// GAL density from its Gamma mixture, integrated over `s = ln g`.
pub fn gal_mixture_pdf(delta: f64, mu: f64, nu: f64, sigma: f64, y: f64) -> f64 {
    let shape = 1.0 / nu;
    let f = |s: f64| {
        let g = s.exp();
        let mean = delta + g * mu;
        let var = g * sigma * sigma;
        let ln_n = -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (y - mean).powi(2) / (2.0 * var);
        (ln_n + ln_gamma_density(g, shape) + s).exp()
    };
    // The integrand is negligible outside this window for all tested inputs.
    let mut total = 0.0;
    let edges = [-700.0, -200.0, -60.0, -20.0, -5.0, 0.0, 2.0, 4.0, 8.0];
    for w in edges.windows(2) {
        total += integrate(&f, w[0], w[1]);
    }
    total
}

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        s += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// One-sample KS p-value of `samples` against `cdf`.
pub fn ks_pvalue<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// CDF of the closed-form density, integrating over `ln |y - delta|`.
pub fn cdf_by_quadrature(p: &drive_events::gal::GalParams, y: f64) -> f64 {
    let f = |s: f64| {
        let x = s.exp();
        p.ln_pdf_at_offset(-x).exp() * x
    };
    let below_location = |x_min: f64| integrate(&f, x_min.ln(), 7.0);
    if y < p.delta {
        below_location(p.delta - y)
    } else {
        let lower = integrate(&f, -80.0, 7.0);
        if y == p.delta {
            return lower;
        }
        let g = |s: f64| {
            let x = s.exp();
            p.ln_pdf_at_offset(x).exp() * x
        };
        lower + integrate(&g, -80.0, (y - p.delta).ln())
    }
}
