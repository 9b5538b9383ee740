//! Scalar and vector spherical harmonics (Condon–Shortley phase).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::wigner::cg;
use crate::error::{invalid, Result};

/// A complex Cartesian 3-vector `[x, y, z]`.
pub type Vec3 = [Complex64; 3];

const ZERO3: Vec3 = [Complex64::new(0.0, 0.0); 3];

/// Normalized associated Legendre function `P̄_ℓ^m(cos θ)` for `m ≥ 0`,
/// including the Condon–Shortley phase, such that `Y_ℓ^m = P̄_ℓ^m e^{imφ}`.
fn normalized_legendre(l: i32, m: i32, x: f64) -> f64 {
    debug_assert!(m >= 0 && m <= l);
    let sin_t = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for i in 1..=m {
        let i = f64::from(i);
        pmm *= -((2.0 * i + 1.0) / (2.0 * i)).sqrt() * sin_t;
    }
    if l == m {
        return pmm;
    }
    let mut p_prev = pmm;
    let mut p = x * f64::from(2 * m + 3).sqrt() * pmm;
    let mf = f64::from(m);
    for ll in (m + 2)..=l {
        let lf = f64::from(ll);
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let lp = lf - 1.0;
        let a_prev = ((4.0 * lp * lp - 1.0) / (lp * lp - mf * mf)).sqrt();
        let next = a * (x * p - p_prev / a_prev);
        p_prev = p;
        p = next;
    }
    p
}

/// Scalar spherical harmonic `Y_ℓ^m(θ, φ)`; zero if `|m| > ℓ` or `ℓ < 0`.
pub fn spherical_harmonic(l: i32, m: i32, theta: f64, phi: f64) -> Complex64 {
    if l < 0 || m.abs() > l {
        return Complex64::new(0.0, 0.0);
    }
    let p = normalized_legendre(l, m.abs(), theta.cos());
    let y = Complex64::from_polar(p, f64::from(m.abs()) * phi);
    if m >= 0 {
        y
    } else if m % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    }
}

/// Spherical basis vector `e_σ` in Cartesian components:
/// `e₊₁ = −(x̂+iŷ)/√2`, `e₀ = ẑ`, `e₋₁ = (x̂−iŷ)/√2`.
pub fn spherical_basis_vector(sigma: i32) -> Vec3 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    match sigma {
        1 => [c(-s, 0.0), c(0.0, -s), c(0.0, 0.0)],
        0 => [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        -1 => [c(s, 0.0), c(0.0, -s), c(0.0, 0.0)],
        _ => ZERO3,
    }
}

pub(crate) fn vsh_unchecked(j: i32, l: i32, m: i32, theta: f64, phi: f64) -> Vec3 {
    let mut out = ZERO3;
    for sigma in -1..=1 {
        let c = cg(l, m - sigma, 1, sigma, j, m);
        if c == 0.0 {
            continue;
        }
        let y = spherical_harmonic(l, m - sigma, theta, phi) * c;
        let e = spherical_basis_vector(sigma);
        for (o, ei) in out.iter_mut().zip(e) {
            *o += y * ei;
        }
    }
    out
}

/// Vector spherical harmonic `Y^ℓ_{jm}(θ, φ) = Σ_σ C^{jm}_{ℓ,m−σ;1σ} Y_ℓ^{m−σ} e_σ`.
///
/// Valid triples have `j ≥ 0`, `ℓ ∈ {j−1, j, j+1}` with `ℓ ≥ 0`, `|m| ≤ j`,
/// and for `j = 0` only `ℓ = 1`.
pub fn vector_spherical_harmonic(j: i32, l: i32, m: i32, theta: f64, phi: f64) -> Result<Vec3> {
    if j < 0 || l < 0 || (l - j).abs() > 1 || m.abs() > j || (j == 0 && l != 1) {
        return invalid(format!("invalid vector harmonic (j={j}, l={l}, m={m})"));
    }
    Ok(vsh_unchecked(j, l, m, theta, phi))
}

/// Transverse (M, N) and longitudinal (L) angular combinations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    M,
    N,
    L,
}

/// Angular combination `Y^χ_{jm}` for `χ ∈ {M, N, L}`:
/// `Y^M = Y^{j}`, `Y^N = a Y^{j−1} + b Y^{j+1}`, `Y^L = b Y^{j−1} − a Y^{j+1}`
/// with `a = √((j+1)/(2j+1))`, `b = √(j/(2j+1))`.
pub fn transverse_combination(
    kind: Polarization,
    j: i32,
    m: i32,
    theta: f64,
    phi: f64,
) -> Result<Vec3> {
    if j < 0 || m.abs() > j {
        return invalid(format!("invalid (j={j}, m={m})"));
    }
    if j == 0 && kind != Polarization::L {
        return invalid("M and N harmonics require j >= 1");
    }
    let jf = f64::from(j);
    let a = ((jf + 1.0) / (2.0 * jf + 1.0)).sqrt();
    let b = (jf / (2.0 * jf + 1.0)).sqrt();
    let (lo, hi) = match kind {
        Polarization::M => return Ok(vsh_unchecked(j, j, m, theta, phi)),
        Polarization::N => (a, b),
        Polarization::L => (b, -a),
    };
    let mut out = ZERO3;
    if j >= 1 {
        let y = vsh_unchecked(j, j - 1, m, theta, phi);
        for (o, yi) in out.iter_mut().zip(y) {
            *o += yi * lo;
        }
    }
    let y = vsh_unchecked(j, j + 1, m, theta, phi);
    for (o, yi) in out.iter_mut().zip(y) {
        *o += yi * hi;
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) fn dot_conj(a: &Vec3, b: &Vec3) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
