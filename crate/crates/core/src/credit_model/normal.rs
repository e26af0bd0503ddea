//! Standard normal density, distribution function and quantile.
//!
//! `norm_cdf` follows W. J. Cody's rational Chebyshev approximations (the
//! same scheme as R's `pnorm`), accurate to a few ulps in both tails.
//! `norm_ppf` starts from Acklam's approximation and polishes it with Halley
//! steps against `norm_cdf`/`norm_sf`.

use crate::error::{CoreError, Result};

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_32: f64 = 5.656_854_249_492_381;

const A: [f64; 5] = [
    2.235_252_035_460_683_9,
    161.028_231_068_555_88,
    1_067.689_485_460_371,
    18_154.981_253_343_56,
    0.065_682_337_918_207_45,
];
const B: [f64; 4] = [47.202_581_904_688_24, 976.098_551_737_776_7, 10_260.932_208_618_978, 45_507.789_335_026_73];
const C: [f64; 9] = [
    0.398_941_512_088_134_66,
    8.883_149_794_388_376,
    93.506_656_132_177_86,
    597.270_276_394_800_3,
    2_494.537_585_290_372_7,
    6_848.190_450_536_283,
    11_602.651_437_647_35,
    9_842.714_838_383_978,
    1.076_557_677_372_019_2e-8,
];
const D: [f64; 8] = [
    22.266_688_044_328_117,
    235.387_901_782_625,
    1_519.377_599_407_554_8,
    6_485.558_298_266_761,
    18_615.571_640_885_097,
    34_900.952_721_145_98,
    38_912.003_286_093_27,
    19_685.429_676_859_99,
];
const P: [f64; 6] = [
    0.215_898_534_057_957,
    0.127_401_161_160_247_36,
    0.022_235_277_870_649_807,
    0.001_421_619_193_227_893_5,
    2.911_287_495_116_879e-5,
    0.023_073_441_764_940_173,
];
const Q: [f64; 5] = [
    1.284_260_096_144_911_2,
    0.468_238_212_480_865_1,
    0.065_988_137_868_928_55,
    0.003_782_396_332_027_582_4,
    7.297_515_550_839_662e-5,
];

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `exp(-x^2/2)` evaluated with the split `x = xs + (x - xs)` to keep the
/// exponent exact in the tails.
fn gauss_tail_factor(y: f64) -> f64 {
    let ys = (y * 16.0).trunc() / 16.0;
    let del = (y - ys) * (y + ys);
    (-ys * ys * 0.5).exp() * (-del * 0.5).exp()
}

/// Returns `(Phi(x), 1 - Phi(x))`, each with full relative accuracy.
pub fn norm_cdf_both(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    let y = x.abs();
    if y <= 0.674_489_75 {
        let xsq = if y > 1.11e-16 { x * x } else { 0.0 };
        let mut xnum = A[4] * xsq;
        let mut xden = xsq;
        for i in 0..3 {
            xnum = (xnum + A[i]) * xsq;
            xden = (xden + B[i]) * xsq;
        }
        let t = x * (xnum + A[3]) / (xden + B[3]);
        return (0.5 + t, 0.5 - t);
    }
    let tail = if y <= SQRT_32 {
        let mut xnum = C[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + C[i]) * y;
            xden = (xden + D[i]) * y;
        }
        gauss_tail_factor(y) * (xnum + C[7]) / (xden + D[7])
    } else if y < 40.0 {
        let xsq = 1.0 / (x * x);
        let mut xnum = P[5] * xsq;
        let mut xden = xsq;
        for i in 0..4 {
            xnum = (xnum + P[i]) * xsq;
            xden = (xden + Q[i]) * xsq;
        }
        let t = xsq * (xnum + P[4]) / (xden + Q[4]);
        gauss_tail_factor(y) * (FRAC_1_SQRT_2PI - t) / y
    } else {
        0.0
    };
    if x > 0.0 {
        (1.0 - tail, tail)
    } else {
        (tail, 1.0 - tail)
    }
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    norm_cdf_both(x).0
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf_both(x).1
}

/// `ln(1 - Phi(x))`, finite far beyond the point where `norm_sf` underflows.
pub fn norm_log_sf(x: f64) -> f64 {
    if x < 30.0 {
        return norm_sf(x).ln();
    }
    // Mills ratio R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), evaluated from
    // the tail; at x >= 30 forty levels reach double precision.
    let mut t = x;
    for k in (1..=40).rev() {
        t = x + k as f64 / t;
    }
    -0.5 * x * x - LN_SQRT_2PI - t.ln()
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] =
    [-5.447_609_879_822_406e1, 1.615_858_368_580_409e2, -1.556_989_798_598_866e2, 6.680_131_188_771_972e1, -1.328_068_155_288_572e1];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.024_25;
    let tail = |q: f64| {
        let c = &ACKLAM_C;
        let d = &ACKLAM_D;
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Standard normal quantile. Returns `-inf`/`+inf` at 0/1 and NaN outside
/// `[0, 1]`; see [`norm_inv`] for the checked version.
pub fn norm_ppf(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        // 1 - p is exact here, and the lower tail has the finer grid.
        return -lower_ppf(1.0 - p);
    }
    lower_ppf(p)
}

/// Quantile for `p <= 0.5`, refined in the lower tail where `Phi` keeps full
/// relative precision.
fn lower_ppf(p: f64) -> f64 {
    let mut x = acklam(p);
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        // Newton ratio e / phi(x), with the exponent kept finite.
        let u = e * (0.5 * x * x).exp() / FRAC_1_SQRT_2PI;
        let step = u / (1.0 + 0.5 * x * u);
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

/// Standard normal quantile; `p` must lie strictly inside (0, 1).
pub fn norm_inv(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(norm_ppf(p))
    } else {
        Err(CoreError::Domain(format!("norm_inv requires 0 < p < 1, got {p}")))
    }
}

/// Inverse of the upper tail: `x` with `1 - Phi(x) = q`.
pub fn norm_isf(q: f64) -> f64 {
    -norm_ppf(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_points() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert_eq!(norm_ppf(0.5), 0.0);
        assert_eq!(norm_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(norm_cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn endpoints_are_domain_errors() {
        assert!(norm_inv(0.0).is_err());
        assert!(norm_inv(1.0).is_err());
        assert!(norm_inv(f64::NAN).is_err());
        assert_eq!(norm_ppf(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn log_sf_joins_smoothly() {
        let below = norm_sf(29.999_999).ln();
        let above = norm_log_sf(30.0);
        assert!((below - above).abs() < 1e-4);
        assert!((norm_sf(30.0).ln() - norm_log_sf(30.0)).abs() < 1e-12);
    }
}
