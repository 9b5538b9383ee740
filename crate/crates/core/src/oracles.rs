//! Closed-form references: the spherical square well, the dielectric
//! sphere, and free plane-wave and Green's-function expansions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::harmonics::vsh_unchecked;
use crate::angular::{spherical_harmonic, Polarization, Vec3};
use crate::error::{invalid, Error, Result};
use crate::radial::{log_derivative_w, riccati_hankel_deriv, spherical_h1, spherical_j};
use crate::radial::{
    riccati_bessel, riccati_bessel_deriv, riccati_hankel, riccati_hankel2, riccati_hankel2_deriv,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Parameters of a closed-form oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// `V = v0` for `r < a`, zero outside.
    SquareWell { v0: f64, a: f64 },
    /// Refractive index `n` for `r < a`, vacuum outside.
    DielectricSphere { n: f64, a: f64 },
}

impl OracleSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OracleSpec::SquareWell { a, v0 } if a > 0.0 && v0.is_finite() => Ok(()),
            OracleSpec::DielectricSphere { n, a } if n > 0.0 && a > 0.0 => Ok(()),
            _ => invalid("oracle needs a > 0 (and n > 0)"),
        }
    }
}

/// Match an interior regular solution with log-derivative weight `w` to
/// `ĥ⁽²⁾ + S ĥ⁽¹⁾` at `ka`:
/// `S = −(w ĵ'(qa) ĥ⁽²⁾ − ĵ(qa) ĥ⁽²⁾') / (w ĵ'(qa) ĥ⁽¹⁾ − ĵ(qa) ĥ⁽¹⁾')`.
fn matched(l: u32, k: Complex64, q: Complex64, a: f64, w: Complex64) -> Result<Complex64> {
    let (z, zq) = (k * a, q * a);
    let (h1, h1p) = (riccati_hankel(l, z)?, riccati_hankel_deriv(l, z)?);
    let (h2, h2p) = (riccati_hankel2(l, z)?, riccati_hankel2_deriv(l, z)?);
    let (num, den, scale) = if zq.im.abs() > 30.0 {
        // ĵ overflows; its log-derivative is that of the dominant Hankel
        // function up to exponentially small terms
        let rho = if zq.im > 0.0 {
            log_derivative_w(l, zq.conj())?.conj()
        } else {
            log_derivative_w(l, zq)?
        };
        let wr = w * rho;
        (wr * h2 - h2p, wr * h1 - h1p, (wr * h1).norm() + h1p.norm())
    } else {
        let (j, jp) = (riccati_bessel(l, zq), riccati_bessel_deriv(l, zq));
        (
            w * jp * h2 - j * h2p,
            w * jp * h1 - j * h1p,
            (w * jp * h1).norm() + (j * h1p).norm(),
        )
    };
    if den.norm() <= 1e-14 * scale || !den.is_finite() {
        return Err(Error::Pole(format!(
            "oracle denominator vanishes at k = {k}, l = {l}"
        )));
    }
    Ok(-num / den)
}

/// Exact S for partial wave `ℓ` of the hard-edged well `V = v0` inside
/// `r < a`, with interior wave number `q = √(k² − v0)`.
pub fn s_exact_square_well(l: u32, k: Complex64, v0: f64, a: f64) -> Result<Complex64> {
    if k.norm() == 0.0 || a <= 0.0 {
        return invalid("square well needs k != 0 and a > 0");
    }
    let q = (k * k - v0).sqrt();
    if q.norm() == 0.0 {
        // interior solution r^{ℓ+1}: log-derivative (ℓ+1)/a
        let d = Complex64::new(f64::from(l + 1) / a, 0.0);
        let z = k * a;
        let num = k * riccati_hankel2_deriv(l, z)? - d * riccati_hankel2(l, z)?;
        let den = k * riccati_hankel_deriv(l, z)? - d * riccati_hankel(l, z)?;
        return Ok(-num / den);
    }
    matched(l, k, q, a, q / k)
}

/// Exact S for a sphere of index `n` and radius `a`, total angular momentum
/// `j ≥ 1`; `delta = +1` for the M (TE) and `−1` for the N (TM) polarization.
pub fn s_exact_dielectric_sphere(
    j: u32,
    delta: i32,
    k: Complex64,
    n: f64,
    a: f64,
) -> Result<Complex64> {
    if j == 0 || k.norm() == 0.0 || n <= 0.0 || a <= 0.0 || delta.abs() != 1 {
        return invalid("dielectric sphere needs j >= 1, k != 0, n > 0, a > 0, delta = ±1");
    }
    matched(j, k, k * n, a, Complex64::new(n.powi(delta), 0.0))
}

/// Partial-wave order adequate for radius `r_max`: `⌈k r_max⌉ + 25`.
pub fn default_lmax(k: f64, r_max: f64) -> u32 {
    (k.abs() * r_max).ceil() as u32 + 25
}

/// A point in spherical coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub fn new(r: f64, theta: f64, phi: f64) -> Self {
        Self { r, theta, phi }
    }

    pub fn cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [self.r * st * cp, self.r * st * sp, self.r * ct]
    }

    pub fn from_cartesian(x: [f64; 3]) -> Self {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let theta = if r == 0.0 {
            0.0
        } else {
            (x[2] / r).clamp(-1.0, 1.0).acos()
        };
        Self {
            r,
            theta,
            phi: x[1].atan2(x[0]),
        }
    }
}

/// Coefficient `4π i^ℓ Y_ℓ^m(θ_k, φ_k)*` of `j_ℓ(kr) Y_ℓ^m` in a plane wave.
pub fn scalar_plane_wave_coeff(theta_k: f64, phi_k: f64, l: i32, m: i32) -> Complex64 {
    4.0 * PI * I.powi(l) * spherical_harmonic(l, m, theta_k, phi_k).conj()
}

/// Truncated expansion of `e^{i k·r}` with `k = k k̂(θ_k, φ_k)`.
pub fn scalar_plane_wave(
    k: f64,
    theta_k: f64,
    phi_k: f64,
    at: SphericalPoint,
    lmax: u32,
) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let kr = Complex64::new(k * at.r, 0.0);
    for l in 0..=lmax as i32 {
        let jl = spherical_j(l as u32, kr);
        for m in -l..=l {
            sum += scalar_plane_wave_coeff(theta_k, phi_k, l, m)
                * jl
                * spherical_harmonic(l, m, at.theta, at.phi);
        }
    }
    sum
}

fn order(a: SphericalPoint, b: SphericalPoint) -> Result<(f64, f64)> {
    if a.r == b.r || a.r < 0.0 || b.r < 0.0 {
        return Err(Error::Domain(
            "Green's function expansion needs distinct radii".into(),
        ));
    }
    Ok((a.r.min(b.r), a.r.max(b.r)))
}

/// `ik Σ j_ℓ(kr_<) h_ℓ(kr_>) Y_ℓ^m(r̂')* Y_ℓ^m(r̂)`, truncated at `lmax`.
pub fn scalar_greens_function(
    at: SphericalPoint,
    from: SphericalPoint,
    k: f64,
    lmax: u32,
) -> Result<Complex64> {
    let (rl, rg) = order(at, from)?;
    let kc = Complex64::new(k, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..=lmax as i32 {
        let radial = spherical_j(l as u32, kc * rl) * spherical_h1(l as u32, kc * rg)?;
        for m in -l..=l {
            sum += radial
                * spherical_harmonic(l, m, from.theta, from.phi).conj()
                * spherical_harmonic(l, m, at.theta, at.phi);
        }
    }
    Ok(sum * I * k)
}

/// `e^{ik|r−r'|} / (4π|r−r'|)`.
pub fn scalar_greens_closed(at: SphericalPoint, from: SphericalPoint, k: f64) -> Complex64 {
    let (a, b) = (at.cartesian(), from.cartesian());
    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    (I * k * d).exp() / (4.0 * PI * d)
}

/// Radial-channel coefficients of the free modes on `ℓ = (j−1, j, j+1)`:
/// `M = (0, 1, 0)`, `N = (−a, 0, b)`, `L = (b, 0, a)` with
/// `a = √((j+1)/(2j+1))`, `b = √(j/(2j+1))`.
pub fn mode_coefficients(kind: Polarization, j: i32) -> [f64; 3] {
    let jf = f64::from(j);
    let a = ((jf + 1.0) / (2.0 * jf + 1.0)).sqrt();
    let b = (jf / (2.0 * jf + 1.0)).sqrt();
    match kind {
        Polarization::M => [0.0, 1.0, 0.0],
        Polarization::N => [-a, 0.0, b],
        Polarization::L => [b, 0.0, a],
    }
}

/// Radial function kind of a free mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Radial {
    Regular,
    Outgoing,
}

fn z_l(kind: Radial, l: u32, x: Complex64) -> Result<Complex64> {
    match kind {
        Radial::Regular => Ok(spherical_j(l, x)),
        Radial::Outgoing => spherical_h1(l, x),
    }
}

fn axpy3(out: &mut Vec3, c: Complex64, v: Vec3) {
    for (o, vi) in out.iter_mut().zip(v) {
        *o += c * vi;
    }
}

/// Free vector mode `χ_{jm,k}` (`χ ∈ {M, N, L}`) at a point.
pub fn free_mode(
    kind: Polarization,
    radial: Radial,
    j: i32,
    m: i32,
    k: f64,
    at: SphericalPoint,
) -> Result<Vec3> {
    if j < 0 || m.abs() > j || (j == 0 && kind != Polarization::L) {
        return invalid(format!("invalid mode (j={j}, m={m}, {kind:?})"));
    }
    let c = mode_coefficients(kind, j);
    let x = Complex64::new(k * at.r, 0.0);
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (i, l) in (j - 1..=j + 1).enumerate() {
        if c[i] == 0.0 || l < 0 {
            continue;
        }
        let z = z_l(radial, l as u32, x)? * c[i];
        axpy3(&mut out, z, vsh_unchecked(j, l, m, at.theta, at.phi));
    }
    Ok(out)
}

/// Plane wave `ξ e^{i k·r}` from its `(ℓ j m)` expansion.
pub fn vector_plane_wave_ljm(
    k: f64,
    theta_k: f64,
    phi_k: f64,
    xi: Vec3,
    at: SphericalPoint,
    jmax: u32,
) -> Vec3 {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    let x = Complex64::new(k * at.r, 0.0);
    for j in 0..=jmax as i32 {
        for l in (j - 1).max(0)..=j + 1 {
            if j == 0 && l != 1 {
                continue;
            }
            let jl = spherical_j(l as u32, x);
            for m in -j..=j {
                let yk = vsh_unchecked(j, l, m, theta_k, phi_k);
                let proj: Complex64 = xi.iter().zip(yk).map(|(a, b)| a * b.conj()).sum();
                let c = 4.0 * PI * I.powi(l) * proj * jl;
                axpy3(&mut out, c, vsh_unchecked(j, l, m, at.theta, at.phi));
            }
        }
    }
    out
}

/// Plane wave `ξ e^{i k·r}` from its `(χ j m)` expansion,
/// `4π Σ i^{j+σ} (ξ·Y^χ(k̂)*) χ^reg` with `σ = 0, 1, −1` for M, N, L.
pub fn vector_plane_wave_mnl(
    k: f64,
    theta_k: f64,
    phi_k: f64,
    xi: Vec3,
    at: SphericalPoint,
    jmax: u32,
) -> Result<Vec3> {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for j in 0..=jmax as i32 {
        for (kind, sigma) in [
            (Polarization::M, 0),
            (Polarization::N, 1),
            (Polarization::L, -1),
        ] {
            if j == 0 && kind != Polarization::L {
                continue;
            }
            for m in -j..=j {
                let yk = crate::angular::transverse_combination(kind, j, m, theta_k, phi_k)?;
                let proj: Complex64 = xi.iter().zip(yk).map(|(a, b)| a * b.conj()).sum();
                let c = 4.0 * PI * I.powi(j + sigma) * proj;
                axpy3(&mut out, c, free_mode(kind, Radial::Regular, j, m, k, at)?);
            }
        }
    }
    Ok(out)
}

/// 3×3 Cartesian dyad.
pub type Dyad = [[Complex64; 3]; 3];

fn add_outer(acc: &mut Dyad, c: Complex64, a: &Vec3, b: &Vec3) {
    for (row, ai) in acc.iter_mut().zip(a) {
        for (e, bj) in row.iter_mut().zip(b) {
            *e += c * ai * bj;
        }
    }
}

/// `𝔾(r₁, r₂) = ik Σ j_ℓ(kr_<) h_ℓ(kr_>) Y^ℓ_{jm}(r̂₁)* ⊗ Y^ℓ_{jm}(r̂₂)`,
/// truncated at `jmax`; real `k`.
pub fn dyadic_greens_ljm(
    r1: SphericalPoint,
    r2: SphericalPoint,
    k: f64,
    jmax: u32,
) -> Result<Dyad> {
    let (rl, rg) = order(r1, r2)?;
    let kc = Complex64::new(k, 0.0);
    let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
    for j in 0..=jmax as i32 {
        for l in (j - 1).max(0)..=j + 1 {
            if j == 0 && l != 1 {
                continue;
            }
            let radial = spherical_j(l as u32, kc * rl) * spherical_h1(l as u32, kc * rg)?;
            for m in -j..=j {
                let a = vsh_unchecked(j, l, m, r1.theta, r1.phi).map(|z| z.conj());
                let b = vsh_unchecked(j, l, m, r2.theta, r2.phi);
                add_outer(&mut g, radial * I * k, &a, &b);
            }
        }
    }
    Ok(g)
}

/// `𝔾 = ik Σ_{χ j m} χ^reg(r_<)* ⊗ χ^out(r_>)`, truncated at `jmax`; real `k`.
pub fn dyadic_greens_mnl(
    r1: SphericalPoint,
    r2: SphericalPoint,
    k: f64,
    jmax: u32,
) -> Result<Dyad> {
    order(r1, r2)?;
    let (lo, hi) = if r1.r < r2.r { (r1, r2) } else { (r2, r1) };
    let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
    for j in 0..=jmax as i32 {
        for kind in [Polarization::M, Polarization::N, Polarization::L] {
            if j == 0 && kind != Polarization::L {
                continue;
            }
            for m in -j..=j {
                let a = free_mode(kind, Radial::Regular, j, m, k, lo)?.map(|z| z.conj());
                let b = free_mode(kind, Radial::Outgoing, j, m, k, hi)?;
                add_outer(&mut g, I * k, &a, &b);
            }
        }
    }
    // the first index belongs to r₁; the m-sum of Y* ⊗ Y is invariant under
    // swapping which factor carries the conjugate, so a transpose suffices
    if r1.r > r2.r {
        g = std::array::from_fn(|i| std::array::from_fn(|j| g[j][i]));
    }
    Ok(g)
}

/// Largest entrywise difference between two dyads.
pub fn dyad_distance(a: &Dyad, b: &Dyad) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
