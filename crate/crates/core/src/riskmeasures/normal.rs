//! Standard normal tail, inverse and Mills ratio.

use crate::error::{domain, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Above this point the Mills ratio comes from its continued fraction.
const MILLS_SWITCH: f64 = 8.0;
const MILLS_TERMS: usize = 80;

/// Standard normal density.
pub fn pdf(y: f64) -> f64 {
    (-0.5 * y * y).exp() / SQRT_2PI
}

/// P(Z > y).
pub fn tail(y: f64) -> f64 {
    0.5 * libm::erfc(y * FRAC_1_SQRT_2)
}

/// P(Z ≤ y).
pub fn cdf(y: f64) -> f64 {
    tail(-y)
}

/// ϖ(y) = e^{y²/2} ∫_y^∞ e^{-t²/2} dt.
pub fn mills_ratio(y: f64) -> f64 {
    if y <= MILLS_SWITCH {
        return (0.5 * y * y).exp() * SQRT_2PI * tail(y);
    }
    // 1 / (y + 1/(y + 2/(y + 3/(y + ...)))), evaluated from the bottom up
    let mut den = y;
    for k in (1..=MILLS_TERMS).rev() {
        den = y + k as f64 / den;
    }
    1.0 / den
}

/// Inverse of the standard normal distribution function on (0, 1).
pub fn inverse_cdf(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return f64::NAN;
    }
    let mut x = ppnd16(p);
    // one Newton step against the tail on the side that keeps precision
    let err = if x < 0.0 { tail(-x) - p } else { (1.0 - p) - tail(x) };
    let dens = pdf(x);
    if dens > 0.0 {
        x -= err / dens;
    }
    x
}

/// q_α for 0 < α < 1/2 (negative).
pub fn quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(domain(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    Ok(inverse_cdf(alpha))
}

/// |q_α|.
pub fn quantile_abs(alpha: f64) -> Result<f64> {
    quantile(alpha).map(f64::abs)
}

/// ln F_α(z) for z ≥ q = |q_α|, via Mills ratios so that large z stays finite.
pub fn ln_f_alpha(z: f64, q: f64) -> f64 {
    if z == q {
        return 0.0;
    }
    mills_ratio(z).ln() - mills_ratio(q).ln() - 0.5 * (z - q) * (z + q)
}

/// ι(u) = 1/ϖ(u + q) - u with q = |q_α|.
pub fn iota(u: f64, q: f64) -> f64 {
    1.0 / mills_ratio(u + q) - u
}

/// Wichura's AS241 rational approximation (about 1e-16 relative).
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_700)
                * r
                + 45921.953_931_549_871)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545_5 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_710)
                * r
                + 21213.794_301_586_595)
                * r
                + 5394.196_021_424_751_1)
                * r
                + 687.187_007_492_057_91)
                * r
                + 42.313_330_701_600_911)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.745_450_142_783_414_1e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506_1e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691_4)
            * r
            + 4.630_337_846_156_545_3)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_344_9e-4) * r
                + 1.519_866_656_361_645_7e-2)
                * r
                + 1.481_039_764_274_800_7e-1)
                * r
                + 6.897_673_349_851_000_2e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_758_8)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103_8)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446_0e-7) * r
                + 1.846_318_317_510_054_7e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 1.369_298_809_227_358_1e-1)
                * r
                + 5.998_322_065_558_879_4e-1)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}
