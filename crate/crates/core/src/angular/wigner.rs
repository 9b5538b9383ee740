//! Wigner 3j and 6j symbols and Clebsch–Gordan coefficients.
//!
//! Racah sums are evaluated in exact rational arithmetic and only the final
//! square root is taken in floating point, so results are correct to a few
//! ulps for every angular momentum this crate ever asks for (j ≲ 40).

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

const FACTORIAL_TABLE: usize = 256;

fn factorials() -> &'static [BigUint] {
    static TABLE: OnceLock<Vec<BigUint>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(FACTORIAL_TABLE);
        out.push(BigUint::one());
        for n in 1..FACTORIAL_TABLE {
            let next = &out[n - 1] * BigUint::from(n as u64);
            out.push(next);
        }
        out
    })
}

fn fact(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    BigInt::from(factorials()[n as usize].clone())
}

/// Exact conversion of p/q to the nearest-ish f64 without overflowing the
/// intermediate integers.
fn ratio_to_f64(r: &BigRational) -> f64 {
    let p = r.numer();
    let q = r.denom();
    if p.is_zero() {
        return 0.0;
    }
    let shift = p.bits() as i64 - q.bits() as i64 - 64;
    let n = if shift > 0 {
        p / (q << shift as usize)
    } else {
        (p << (-shift) as usize) / q
    };
    n.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

/// sign(s) * sqrt(pref * s^2) for exact rationals.
fn signed_sqrt(pref: &BigRational, sum: &BigRational, sign: i32) -> f64 {
    if sum.is_zero() {
        return 0.0;
    }
    let sq = pref * sum * sum;
    let mag = ratio_to_f64(&sq).sqrt();
    let s = if sum.is_negative() { -sign } else { sign };
    f64::from(s) * mag
}

fn triangle(a: i64, b: i64, c: i64) -> bool {
    c >= (a - b).abs() && c <= a + b
}

fn delta(a: i64, b: i64, c: i64) -> BigRational {
    BigRational::new(
        fact(a + b - c) * fact(a - b + c) * fact(-a + b + c),
        fact(a + b + c + 1),
    )
}

fn parity(n: i64) -> i32 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Unchecked 3j symbol; all j must be nonnegative.
pub(crate) fn w3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    let (j1, j2, j3, m1, m2, m3) = (
        j1 as i64, j2 as i64, j3 as i64, m1 as i64, m2 as i64, m3 as i64,
    );
    if m1 + m2 + m3 != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    if m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    let tmin = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let tmax = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for t in tmin..=tmax {
        let den = fact(t)
            * fact(j3 - j2 + t + m1)
            * fact(j3 - j1 + t - m2)
            * fact(j1 + j2 - j3 - t)
            * fact(j1 - t - m1)
            * fact(j2 - t + m2);
        let term = BigRational::new(BigInt::from(parity(t)), den);
        sum += term;
    }
    let pref = delta(j1, j2, j3)
        * BigRational::from_integer(
            fact(j1 + m1)
                * fact(j1 - m1)
                * fact(j2 + m2)
                * fact(j2 - m2)
                * fact(j3 + m3)
                * fact(j3 - m3),
        );
    signed_sqrt(&pref, &sum, parity(j1 - j2 - m3))
}

/// Unchecked 6j symbol {j1 j2 j3; j4 j5 j6}.
pub(crate) fn w6j(j1: i32, j2: i32, j3: i32, j4: i32, j5: i32, j6: i32) -> f64 {
    let (a, b, c, d, e, f) = (
        j1 as i64, j2 as i64, j3 as i64, j4 as i64, j5 as i64, j6 as i64,
    );
    if !(triangle(a, b, c) && triangle(a, e, f) && triangle(d, b, f) && triangle(d, e, c)) {
        return 0.0;
    }
    let (t1, t2, t3, t4) = (a + b + c, a + e + f, d + b + f, d + e + c);
    let (u1, u2, u3) = (a + b + d + e, b + c + e + f, c + a + f + d);
    let tmin = t1.max(t2).max(t3).max(t4);
    let tmax = u1.min(u2).min(u3);
    let mut sum = BigRational::zero();
    for t in tmin..=tmax {
        let den = fact(t - t1)
            * fact(t - t2)
            * fact(t - t3)
            * fact(t - t4)
            * fact(u1 - t)
            * fact(u2 - t)
            * fact(u3 - t);
        sum += BigRational::new(BigInt::from(parity(t)) * fact(t + 1), den);
    }
    let pref = delta(a, b, c) * delta(a, e, f) * delta(d, b, f) * delta(d, e, c);
    signed_sqrt(&pref, &sum, 1)
}

/// Unchecked Clebsch–Gordan coefficient ⟨j1 m1 j2 m2 | J M⟩ (Condon–Shortley).
pub(crate) fn cg(j1: i32, m1: i32, j2: i32, m2: i32, jj: i32, mm: i32) -> f64 {
    if m1 + m2 != mm {
        return 0.0;
    }
    let phase = f64::from(parity(i64::from(j1 - j2 + mm)));
    phase * f64::from(2 * jj + 1).sqrt() * w3j(j1, j2, jj, m1, m2, -mm)
}

fn check_nonneg(js: &[i32]) -> Result<()> {
    if let Some(j) = js.iter().find(|&&j| j < 0) {
        return invalid(format!("angular momentum must be nonnegative, got {j}"));
    }
    Ok(())
}

/// Wigner 3j symbol. Zero when the m's don't sum to zero, any |m| exceeds its
/// j, or the triangle rule fails.
pub fn wigner3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> Result<f64> {
    check_nonneg(&[j1, j2, j3])?;
    Ok(w3j(j1, j2, j3, m1, m2, m3))
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
pub fn wigner6j(j1: i32, j2: i32, j3: i32, j4: i32, j5: i32, j6: i32) -> Result<f64> {
    check_nonneg(&[j1, j2, j3, j4, j5, j6])?;
    Ok(w6j(j1, j2, j3, j4, j5, j6))
}

/// Clebsch–Gordan coefficient `C^{J M}_{j1 m1 j2 m2}`.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, jj: i32, mm: i32) -> Result<f64> {
    check_nonneg(&[j1, j2, jj])?;
    Ok(cg(j1, m1, j2, m2, jj, mm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }

    #[test]
    fn trivial_values() {
        close(wigner3j(0, 0, 0, 0, 0, 0).unwrap(), 1.0);
        close(wigner6j(0, 0, 0, 0, 0, 0).unwrap(), 1.0);
        close(clebsch_gordan(0, 0, 0, 0, 0, 0).unwrap(), 1.0);
    }

    #[test]
    fn racah_oracle_values() {
        close(wigner3j(1, 1, 0, 1, -1, 0).unwrap(), 1.0 / 3f64.sqrt());
        close(wigner3j(1, 1, 2, 0, 0, 0).unwrap(), (2.0f64 / 15.0).sqrt());
        close(wigner6j(1, 1, 1, 1, 1, 1).unwrap(), 1.0 / 6.0);
        // {a a 0; d d f} = (-1)^{a+d+f} / sqrt((2a+1)(2d+1))
        close(wigner6j(1, 1, 0, 1, 1, 1).unwrap(), -1.0 / 3.0);
        close(wigner6j(2, 2, 0, 1, 1, 2).unwrap(), -1.0 / 15f64.sqrt());
        close(
            clebsch_gordan(1, 0, 1, 0, 2, 0).unwrap(),
            (2.0f64 / 3.0).sqrt(),
        );
        close(
            clebsch_gordan(1, 1, 1, -1, 0, 0).unwrap(),
            1.0 / 3f64.sqrt(),
        );
    }

    #[test]
    fn selection_rules_give_exact_zero() {
        assert_eq!(wigner3j(1, 1, 1, 0, 0, 0).unwrap(), 0.0);
        assert_eq!(wigner3j(1, 1, 3, 0, 0, 0).unwrap(), 0.0);
        assert_eq!(wigner3j(2, 1, 1, 1, 1, 0).unwrap(), 0.0);
        assert_eq!(wigner6j(1, 1, 3, 1, 1, 1).unwrap(), 0.0);
        assert_eq!(clebsch_gordan(1, 1, 1, 1, 2, 1).unwrap(), 0.0);
    }

    #[test]
    fn negative_j_is_rejected() {
        assert!(wigner3j(-1, 1, 0, 0, 0, 0).is_err());
        assert!(wigner6j(1, 1, 1, 1, -1, 1).is_err());
        assert!(clebsch_gordan(1, 0, -2, 0, 1, 0).is_err());
    }

    #[test]
    fn large_j_stays_finite() {
        // Stretched coupling |j1 j1>|j2 j2> = |J J> with J = j1 + j2.
        let (a, b) = (20, 20);
        let v = wigner3j(a, b, a + b, a, b, -(a + b)).unwrap();
        assert!((v.abs() - 1.0 / f64::from(2 * (a + b) + 1).sqrt()).abs() < 1e-15);
        // (j j 0; m -m 0) = (-1)^{j-m} / sqrt(2j+1)
        let v = wigner3j(30, 30, 0, 7, -7, 0).unwrap();
        assert!((v + 1.0 / 61f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn orthogonality_small_j() {
        for j1 in 0..=4 {
            for j2 in 0..=4 {
                for j3 in 0..=8 {
                    for j3p in 0..=8 {
                        for m3 in -j3.min(j3p)..=j3.min(j3p) {
                            let mut s = 0.0;
                            for m1 in -j1..=j1 {
                                let m2 = -m1 - m3;
                                s += f64::from(2 * j3 + 1)
                                    * w3j(j1, j2, j3, m1, m2, m3)
                                    * w3j(j1, j2, j3p, m1, m2, m3);
                            }
                            let tri = j3 >= (j1 - j2).abs() && j3 <= j1 + j2;
                            let e = if j3 == j3p && tri { 1.0 } else { 0.0 };
                            assert!((s - e).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }
}
