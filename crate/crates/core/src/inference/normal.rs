//! Gaussian tail machinery: erfc/erfcx rational approximations (after W. J.
//! Cody's SPECFUN) and numerically stable truncated-normal tail probabilities.
//!
//! Region boundaries and coefficients follow the classic CALERF layout:
//! a direct rational fit below 0.46875, an `exp(-x^2)`-scaled fit to 4, and
//! an asymptotic-style fit in `1/x^2` beyond, which doubles as erfcx for
//! arguments far past the erfc underflow point.

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
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
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const INV_SQRT_PI: f64 = 5.6418958354775628695e-1;

/// erf on |x| <= 0.46875.
fn erf_small(x: f64) -> f64 {
    let y2 = x * x;
    let mut num = ERF_A[4] * y2;
    let mut den = y2;
    for i in 0..3 {
        num = (num + ERF_A[i]) * y2;
        den = (den + ERF_B[i]) * y2;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

/// erfc(x)*exp(x^2) on 0.46875 <= x <= 4.
fn erfcx_mid(x: f64) -> f64 {
    let mut num = ERF_C[8] * x;
    let mut den = x;
    for i in 0..7 {
        num = (num + ERF_C[i]) * x;
        den = (den + ERF_D[i]) * x;
    }
    (num + ERF_C[7]) / (den + ERF_D[7])
}

/// erfc(x)*exp(x^2) on x > 4.
fn erfcx_large(x: f64) -> f64 {
    let y2 = 1.0 / (x * x);
    let mut num = ERF_P[5] * y2;
    let mut den = y2;
    for i in 0..4 {
        num = (num + ERF_P[i]) * y2;
        den = (den + ERF_Q[i]) * y2;
    }
    let r = y2 * (num + ERF_P[4]) / (den + ERF_Q[4]);
    (INV_SQRT_PI - r) / x
}

/// Scaled complementary error function, all real arguments.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // erfc(-x) = 2 - erfc(x); the exp can overflow for very negative x.
        let e = (x * x).exp();
        return 2.0 * e - erfcx(-x);
    }
    if x <= 0.46875 {
        (x * x).exp() * (1.0 - erf_small(x))
    } else if x <= 4.0 {
        erfcx_mid(x)
    } else {
        erfcx_large(x)
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x <= 0.46875 {
        1.0 - erf_small(x)
    } else {
        // exp(-x^2) split into an exactly representable part and a small
        // correction, following CALERF, to keep the tail accurate.
        let xs = (x * 16.0).trunc() / 16.0;
        let del = (x - xs) * (x + xs);
        let scaled = if x <= 4.0 { erfcx_mid(x) } else { erfcx_large(x) };
        (-xs * xs).exp() * (-del).exp() * scaled
    }
}

/// Standard normal survival function `P(Z >= z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal survival scaled by `exp(z^2/2)`, i.e.
/// `normal_sf(z) * exp(z^2/2)`, finite for all z >= 0.
fn normal_sf_scaled(z: f64) -> f64 {
    0.5 * erfcx(z / std::f64::consts::SQRT_2)
}

/// A Gaussian restricted to `[a, b]` (bounds may be infinite).
#[derive(Debug, Clone, Copy)]
pub struct TruncatedGaussian {
    pub mu: f64,
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
}

impl TruncatedGaussian {
    pub fn new(mu: f64, sigma: f64, a: f64, b: f64) -> Option<Self> {
        if !(sigma > 0.0) || a.is_nan() || b.is_nan() || !(a < b) {
            return None;
        }
        Some(TruncatedGaussian { mu, sigma, a, b })
    }
}

/// `P(Z >= x | a <= Z <= b)` for `Z ~ N(mu, sigma^2)`, clamped to [0, 1].
///
/// Both tails are computed through the scaled survival function so that far
/// truncation windows (|a|, |b| >> 1) keep full relative accuracy.
pub fn truncnorm_tail(tg: &TruncatedGaussian, x: f64) -> f64 {
    let alpha = (tg.a - tg.mu) / tg.sigma;
    let beta = (tg.b - tg.mu) / tg.sigma;
    let xi = ((x - tg.mu) / tg.sigma).clamp(alpha, beta);

    if xi <= alpha {
        return 1.0;
    }
    if xi >= beta {
        return 0.0;
    }

    let p = if alpha >= 0.0 {
        // Right tail: P = [S(xi) - S(beta)] / [S(alpha) - S(beta)] with the
        // common exp factored against alpha.
        let sb = |t: f64, reference: f64| {
            if t.is_infinite() {
                0.0
            } else {
                normal_sf_scaled(t) * (-(t * t - reference * reference) / 2.0).exp()
            }
        };
        let num = sb(xi, xi) - sb(beta, xi);
        let den = normal_sf_scaled(alpha) - sb(beta, alpha);
        (-(xi * xi - alpha * alpha) / 2.0).exp() * num / den
    } else if beta <= 0.0 {
        // Left tail: mirror into the right tail via S(-t) = 1 - S(t).
        let sb = |t: f64, reference: f64| {
            if t.is_infinite() {
                0.0
            } else {
                normal_sf_scaled(-t) * (-(t * t - reference * reference) / 2.0).exp()
            }
        };
        // P = [Phi(beta) - Phi(xi)] / [Phi(beta) - Phi(alpha)], all in the
        // negative half-line, scaled against beta.
        let num = sb(beta, beta) - sb(xi, beta);
        let den = sb(beta, beta) - sb(alpha, beta);
        num / den
    } else {
        // Window straddles zero: the denominator is O(1).
        let den = cdf_diff(alpha, beta);
        let num = cdf_diff(xi, beta);
        num / den
    };
    p.clamp(0.0, 1.0)
}

/// `Phi(b) - Phi(a)` for a <= b with the window assumed to carry real mass.
fn cdf_diff(a: f64, b: f64) -> f64 {
    let sf = |t: f64| {
        if t == f64::INFINITY {
            0.0
        } else if t == f64::NEG_INFINITY {
            1.0
        } else {
            normal_sf(t)
        }
    };
    // Phi(b) - Phi(a) = S(a) - S(b); evaluate the better-conditioned side.
    if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        sf(-b) - sf(-a)
    } else {
        1.0 - sf(-a) - sf(b)
    }
}
