//! Exact phase reduction for large integer frequencies.
//!
//! Dispersive phases `(k⁵ − αk³)·t` reach 10¹⁸ rad for |k| ~ 4096, far past
//! the point where `f64` multiplication followed by `rem_euclid(2π)` keeps any
//! phase information. Times are therefore carried in units of the revival
//! period `2π` and the fractional part of `n·τ` is formed from exact
//! two-products of 31-bit chunks of `n`.

use std::f64::consts::TAU;

use num_complex::Complex64;

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Fractional part of `n·x` for an integer `n` and a double `x`.
///
/// `n` is split into 31-bit chunks; each chunk times `x·2^(31i)` is an exact
/// two-product whose pieces are reduced separately, so the result is accurate
/// to a few ulps of 1 regardless of the magnitude of `n·x`.
pub fn frac_mul(n: i128, x: f64) -> f64 {
    const CHUNK_BITS: u32 = 31;
    const MASK: u128 = (1 << CHUNK_BITS) - 1;
    let scale_step = (1u64 << CHUNK_BITS) as f64;

    let mut rest = n.unsigned_abs();
    let mut scaled = x;
    let mut acc = 0.0;
    while rest != 0 {
        let chunk = (rest & MASK) as f64;
        if chunk != 0.0 {
            let (p, e) = two_prod(chunk, scaled);
            acc = frac(acc + frac(p) + frac(e));
        }
        rest >>= CHUNK_BITS;
        scaled *= scale_step;
    }
    if n < 0 {
        frac(-acc)
    } else {
        acc
    }
}

/// `e^{−2πi·f}` for a fraction of a turn.
#[inline]
pub fn turn(f: f64) -> Complex64 {
    Complex64::from_polar(1.0, -TAU * f)
}

/// `e^{−2πi·num/den}` from an exact residue.
#[inline]
pub fn root_of_unity(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64;
    Complex64::from_polar(1.0, -TAU * r / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_products_match_naive() {
        for n in [-7i128, 0, 1, 3, 1000, 123_456_789] {
            let x = 0.318_309_886_183_790_7;
            let naive = frac(n as f64 * x);
            // n·x in f64 carries an error of about n·2^{−53}.
            let tol = 1e-15 + n.abs() as f64 * 2e-16;
            assert!((frac_mul(n, x) - naive).abs() < tol, "n = {n}");
        }
    }

    #[test]
    fn huge_integer_times_dyadic_is_exact() {
        // 2^60 + 3 times 1/8 has fractional part 3/8.
        let n: i128 = (1i128 << 60) + 3;
        assert_eq!(frac_mul(n, 0.125), 0.375);
        assert_eq!(frac_mul(-n, 0.125), 0.625);
    }

    #[test]
    fn matches_integer_arithmetic_for_rational_dyadics() {
        // x = a / 2^20 exactly; n·a mod 2^20 computed in integers.
        let a: i128 = 333_331;
        let x = a as f64 / (1u64 << 20) as f64;
        for k in [17i128, 1023, 4096] {
            let n = k.pow(5) - k.pow(3);
            let exact = ((n * a).rem_euclid(1 << 20)) as f64 / (1u64 << 20) as f64;
            assert!((frac_mul(n, x) - exact).abs() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn root_of_unity_reduces_residue() {
        let z = root_of_unity(5, 4);
        let w = root_of_unity(1, 4);
        assert!((z - w).norm() < 1e-15);
        assert!((root_of_unity(1, 2) + Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
