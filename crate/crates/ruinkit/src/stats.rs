//! Small statistics toolbox: the error function to near machine precision,
//! the standard normal CDF, and weighted Kolmogorov–Smirnov statistics.

const FRAC_1_SQRT_PI: f64 = 0.56418958354775628695;

const A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const B: [f64; 4] =
    [2.36012909523441209e1, 2.44024637934444173e2, 1.28261652607737228e3, 2.84423683343917062e3];
const C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

/// Error function, Cody's rational Chebyshev approximation (the SPECFUN
/// coefficient set); relative error below 1e-15 across the range.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        let z = x * x;
        let mut num = A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + A[i]) * z;
            den = (den + B[i]) * z;
        }
        x * (num + A[3]) / (den + B[3])
    } else if x < 0.0 {
        erfc(y) - 1.0
    } else {
        1.0 - erfc(y)
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        return 1.0 - erf(x);
    }
    let core = if y <= 4.0 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        (-y * y).exp() * (num + C[7]) / (den + D[7])
    } else {
        let z = 1.0 / (y * y);
        let mut num = P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + P[i]) * z;
            den = (den + Q[i]) * z;
        }
        let r = z * (num + P[4]) / (den + Q[4]);
        (-y * y).exp() * (FRAC_1_SQRT_PI - r) / y
    };
    if x < 0.0 {
        2.0 - core
    } else {
        core
    }
}

/// Standard normal CDF `Φ(x) = erfc(-x/√2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// One-sample Kolmogorov–Smirnov statistic of a (possibly weighted) sample
/// against a reference CDF. Weights need not be normalized; the slice is
/// sorted in place.
pub fn ks_vs_cdf(sample: &mut [(f64, f64)], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = sample.iter().map(|(_, w)| w).sum();
    let mut cum = 0.0;
    let mut d: f64 = 0.0;
    for (x, w) in sample.iter() {
        let f = cdf(*x);
        d = d.max((cum / total - f).abs());
        cum += w;
        d = d.max((cum / total - f).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic between weighted samples.
/// Both slices are sorted in place.
pub fn ks_two_sample(a: &mut [(f64, f64)], b: &mut [(f64, f64)]) -> f64 {
    a.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    b.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let wa: f64 = a.iter().map(|(_, w)| w).sum();
    let wb: f64 = b.iter().map(|(_, w)| w).sum();
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ca, mut cb) = (0.0f64, 0.0f64);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let xa = a.get(i).map(|t| t.0).unwrap_or(f64::INFINITY);
        let xb = b.get(j).map(|t| t.0).unwrap_or(f64::INFINITY);
        if xa <= xb {
            ca += a[i].1;
            i += 1;
        } else {
            cb += b[j].1;
            j += 1;
        }
        d = d.max((ca / wa - cb / wb).abs());
    }
    d
}

/// Effective sample size of importance weights, `(Σw)²/Σw²`.
pub fn effective_sample_size(weights: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut s2) = (0.0, 0.0);
    for w in weights {
        s += w;
        s2 += w * w;
    }
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}
