//! Riccati–Bessel and Riccati–Hankel functions of complex argument, the free
//! outgoing-wave matrix `Ŵ` and its logarithmic derivative.
//!
//! Conventions: `ĵ_ℓ(z) = z j_ℓ(z)`, `ĥ_ℓ(z) = z h^{(1)}_ℓ(z)`, so that
//! `ĥ_0 = −i e^{iz}` and `ĵ_0 = sin z`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::angular::ChannelBasis;
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_nonzero(z: Complex64) -> Result<()> {
    if z == Complex64::new(0.0, 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "Riccati functions are singular at z = {z}"
        )));
    }
    Ok(())
}

/// `e^{−iz} ĥ_ℓ(z)` for `ℓ = 0..=lmax`: polynomials in `1/z`, free of the
/// exponential growth/decay of the Hankel functions themselves.
pub fn riccati_hankel_scaled_all(lmax: u32, z: Complex64) -> Result<Vec<Complex64>> {
    check_nonzero(z)?;
    let mut out = Vec::with_capacity(lmax as usize + 1);
    out.push(-I);
    if lmax >= 1 {
        out.push(-(1.0 + I / z));
    }
    for l in 1..lmax as usize {
        let next = out[l] * (2 * l + 1) as f64 / z - out[l - 1];
        out.push(next);
    }
    Ok(out)
}

/// `ĥ_ℓ(z) = z h^{(1)}_ℓ(z)` for `ℓ = 0..=lmax` by upward recurrence.
pub fn riccati_hankel_all(lmax: u32, z: Complex64) -> Result<Vec<Complex64>> {
    let e = (I * z).exp();
    Ok(riccati_hankel_scaled_all(lmax, z)?
        .into_iter()
        .map(|h| h * e)
        .collect())
}

/// Riccati–Hankel function `z h^{(1)}_ℓ(z)`.
pub fn riccati_hankel(l: u32, z: Complex64) -> Result<Complex64> {
    Ok(riccati_hankel_all(l, z)?[l as usize])
}

/// Derivative `ĥ'_ℓ(z) = ĥ_{ℓ−1}(z) − (ℓ/z) ĥ_ℓ(z)` (with `ĥ'_0 = e^{iz}`).
pub fn riccati_hankel_deriv(l: u32, z: Complex64) -> Result<Complex64> {
    let h = riccati_hankel_all(l, z)?;
    Ok(if l == 0 {
        (I * z).exp()
    } else {
        h[l as usize - 1] - h[l as usize] * f64::from(l) / z
    })
}

fn riccati_bessel_series(l: u32, z: Complex64) -> Complex64 {
    // z^{l+1}/(2l+1)!! Σ_k (−z²/2)^k / (k! (2l+3)(2l+5)…(2l+2k+1))
    let mut pref = z;
    for i in 1..=l {
        pref *= z / f64::from(2 * i + 1);
    }
    let w = -z * z * 0.5;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..200u32 {
        term *= w / (f64::from(k) * f64::from(2 * l + 2 * k + 1));
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    pref * sum
}

/// `ĵ_ℓ(z) = z j_ℓ(z)` for `ℓ = 0..=lmax`, by downward ratio recursion
/// (Miller's method) normalized against a closed-form low order.
pub fn riccati_bessel_all(lmax: u32, z: Complex64) -> Vec<Complex64> {
    let n = lmax as usize;
    if z == Complex64::new(0.0, 0.0) {
        return vec![Complex64::new(0.0, 0.0); n + 1];
    }
    if z.norm() < 0.5 {
        return (0..=lmax).map(|l| riccati_bessel_series(l, z)).collect();
    }
    // ratios rho[l] = ĵ_l / ĵ_{l-1}, l >= 1
    let start = n + 20 + (2.0 * z.norm()) as usize + 20;
    let mut rho = vec![Complex64::new(0.0, 0.0); start + 2];
    for l in (1..=start).rev() {
        let denom = (2 * l + 1) as f64 / z - rho[l + 1];
        rho[l] = if denom == Complex64::new(0.0, 0.0) {
            Complex64::new(f64::INFINITY, 0.0)
        } else {
            1.0 / denom
        };
    }
    let j0 = z.sin();
    let j1 = z.sin() / z - z.cos();
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    // Pick the better-conditioned anchor: near zeros of sin z use ĵ_1.
    if z.norm() < 2.0 || j0.norm() >= j1.norm() {
        out[0] = j0;
        for l in 1..=n {
            out[l] = out[l - 1] * rho[l];
        }
    } else {
        out[0] = j0;
        if n >= 1 {
            out[1] = j1;
            for l in 2..=n {
                out[l] = out[l - 1] * rho[l];
            }
        }
    }
    out
}

/// Riccati–Bessel function `z j_ℓ(z)`.
pub fn riccati_bessel(l: u32, z: Complex64) -> Complex64 {
    riccati_bessel_all(l, z)[l as usize]
}

/// Derivative `ĵ'_ℓ(z)`.
pub fn riccati_bessel_deriv(l: u32, z: Complex64) -> Complex64 {
    if l == 0 {
        return z.cos();
    }
    let j = riccati_bessel_all(l, z);
    j[l as usize - 1] - j[l as usize] * f64::from(l) / z
}

/// `z h^{(2)}_ℓ(z) = 2ĵ_ℓ − ĥ_ℓ`.
pub fn riccati_hankel2(l: u32, z: Complex64) -> Result<Complex64> {
    Ok(2.0 * riccati_bessel(l, z) - riccati_hankel(l, z)?)
}

/// Derivative of `z h^{(2)}_ℓ(z)`.
pub fn riccati_hankel2_deriv(l: u32, z: Complex64) -> Result<Complex64> {
    Ok(2.0 * riccati_bessel_deriv(l, z) - riccati_hankel_deriv(l, z)?)
}

/// Spherical Bessel `j_ℓ(z)`.
pub fn spherical_j(l: u32, z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return if l == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    riccati_bessel(l, z) / z
}

/// Spherical Hankel `h^{(1)}_ℓ(z)`.
pub fn spherical_h1(l: u32, z: Complex64) -> Result<Complex64> {
    Ok(riccati_hankel(l, z)? / z)
}

/// Logarithmic derivatives `d/dx log ĥ_ℓ(x)` for `ℓ = 0..=lmax`, via the
/// finite continued fraction `ρ_{ℓ+1} = (2ℓ+1)/x − 1/ρ_ℓ`, `ρ_1 = −i + 1/x`.
pub fn log_derivative_all(lmax: u32, x: Complex64) -> Result<Vec<Complex64>> {
    check_nonzero(x)?;
    let mut out = Vec::with_capacity(lmax as usize + 1);
    out.push(I);
    let mut rho = -I + 1.0 / x;
    for l in 1..=lmax {
        if rho.norm() == 0.0 || !rho.is_finite() {
            return Err(Error::Pole(format!(
                "zero of the Riccati-Hankel function of order {l} at x = {x}"
            )));
        }
        out.push(1.0 / rho - f64::from(l) / x);
        rho = f64::from(2 * l + 1) / x - 1.0 / rho;
    }
    Ok(out)
}

/// `d/dx log(x h^{(1)}_ℓ(x))`.
pub fn log_derivative_w(l: u32, x: Complex64) -> Result<Complex64> {
    Ok(log_derivative_all(l, x)?[l as usize])
}

/// `Ŵ(x)^{-1} Ŵ(−x)` for one channel: `(−1)^{ℓ+1} ĥ^{(2)}_ℓ(x) / ĥ_ℓ(x)`,
/// computed without forming the exponentials separately.
pub fn w_ratio(l: u32, x: Complex64) -> Result<Complex64> {
    let hs = riccati_hankel_scaled_all(l, x)?[l as usize];
    // ĥ2/ĥ1 = (2ĵ − ĥ1)/ĥ1 = 2 ĵ e^{−ix} / hs − 1
    let j = riccati_bessel(l, x);
    let ratio = 2.0 * j * (-I * x).exp() / hs - 1.0;
    Ok(if l % 2 == 1 { ratio } else { -ratio })
}

/// Analytic `r → 0` limit of `Ŵ(kr)^{-1} Ŵ(−kr)`: the diagonal `(−1)^ℓ`.
pub fn small_r_ratio_limit(basis: &ChannelBasis) -> DVector<f64> {
    basis.parity()
}

/// The diagonal free outgoing-wave matrix `Ŵ(kr)` over a channel basis.
#[derive(Clone, Debug)]
pub struct FreeWaveMatrix {
    ells: Vec<u32>,
    lmax: u32,
    pub k: Complex64,
}

impl FreeWaveMatrix {
    pub fn new(basis: &ChannelBasis, k: Complex64) -> Self {
        let ells: Vec<u32> = basis.ells().into_iter().map(|l| l as u32).collect();
        let lmax = ells.iter().copied().max().unwrap_or(0);
        Self { ells, lmax, k }
    }

    pub fn dim(&self) -> usize {
        self.ells.len()
    }

    pub fn ells(&self) -> &[u32] {
        &self.ells
    }

    fn per_channel(&self, table: Vec<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(
            self.ells.len(),
            self.ells.iter().map(|&l| table[l as usize]),
        )
    }

    /// Diagonal entries `ĥ_ℓ(kr)`.
    pub fn diag(&self, r: f64) -> Result<DVector<Complex64>> {
        Ok(self.per_channel(riccati_hankel_all(self.lmax, self.k * r)?))
    }

    /// Diagonal entries `∂_r ĥ_ℓ(kr) = k ĥ'_ℓ(kr)`, finite even where
    /// `ĥ_ℓ(kr)` vanishes.
    pub fn diag_deriv(&self, r: f64) -> Result<DVector<Complex64>> {
        let z = self.k * r;
        let h = riccati_hankel_all(self.lmax, z)?;
        let d: Vec<Complex64> = (0..=self.lmax as usize)
            .map(|l| {
                if l == 0 {
                    (I * z).exp()
                } else {
                    h[l - 1] - h[l] * l as f64 / z
                }
            })
            .collect();
        Ok(self.per_channel(d) * self.k)
    }

    /// Diagonal entries `e^{−ikr} ĥ_ℓ(kr)`; conjugating by these is the same
    /// as conjugating by `Ŵ` but cannot overflow.
    pub fn scaled(&self, r: f64) -> Result<DVector<Complex64>> {
        Ok(self.per_channel(riccati_hankel_scaled_all(self.lmax, self.k * r)?))
    }

    /// `Λ(r) = ∂_r log Ŵ(kr) = k L_ℓ(kr)`.
    pub fn log_derivative(&self, r: f64) -> Result<DVector<Complex64>> {
        let l = log_derivative_all(self.lmax, self.k * r)?;
        Ok(self.per_channel(l) * self.k)
    }

    /// `Λ'(r) = ℓ(ℓ+1)/r² − k² − Λ²`, from the free radial equation.
    pub fn log_derivative_prime(&self, r: f64, lambda: &DVector<Complex64>) -> DVector<Complex64> {
        let k2 = self.k * self.k;
        DVector::from_iterator(
            self.dim(),
            self.ells.iter().zip(lambda.iter()).map(|(&l, &lam)| {
                Complex64::new(f64::from(l * (l + 1)) / (r * r), 0.0) - k2 - lam * lam
            }),
        )
    }

    /// Diagonal entries `ĵ_ℓ(kr)`.
    pub fn regular(&self, r: f64) -> DVector<Complex64> {
        self.per_channel(riccati_bessel_all(self.lmax, self.k * r))
    }

    /// Diagonal entries `∂_r ĵ_ℓ(kr) = k ĵ'_ℓ(kr)`.
    pub fn regular_deriv(&self, r: f64) -> DVector<Complex64> {
        let z = self.k * r;
        let j = riccati_bessel_all(self.lmax + 1, z);
        let d: Vec<Complex64> = (0..=self.lmax as usize)
            .map(|l| {
                if l == 0 {
                    z.cos()
                } else {
                    j[l - 1] - j[l] * l as f64 / z
                }
            })
            .collect();
        self.per_channel(d) * self.k
    }

    /// `Ŵ(kr)^{-1} Ŵ(−kr)` per channel.
    pub fn ratio(&self, r: f64) -> Result<DVector<Complex64>> {
        let z = self.k * r;
        let mut table = Vec::with_capacity(self.lmax as usize + 1);
        for l in 0..=self.lmax {
            table.push(w_ratio(l, z)?);
        }
        Ok(self.per_channel(table))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Explicit finite sum `ĥ_ℓ(z) = (−i)^{ℓ+1} e^{iz} Σ_k i^k (ℓ+k)!/(k!(ℓ−k)!(2z)^k)`.
    fn hankel_sum(l: u32, z: Complex64) -> Complex64 {
        let mut s = c(0.0, 0.0);
        for k in 0..=l {
            let mut coef = 1.0;
            for i in (l - k + 1)..=(l + k) {
                coef *= f64::from(i);
            }
            for i in 1..=k {
                coef /= f64::from(i);
            }
            s += I.powu(k) * coef / (2.0 * z).powu(k);
        }
        (-I).powu(l + 1) * (I * z).exp() * s
    }

    #[test]
    fn hankel_closed_forms() {
        let x = 1.7;
        let h0 = riccati_hankel(0, c(x, 0.0)).unwrap();
        assert!((h0 - (-I * (I * x).exp())).norm() < 1e-15);
        let z = I;
        let h1 = riccati_hankel(1, z).unwrap();
        assert!((h1 - (-(1.0 + I / z) * (I * z).exp())).norm() < 1e-15);
        let z = c(2.0, 0.5);
        let h5 = riccati_hankel(5, z).unwrap();
        let e = hankel_sum(5, z);
        assert!((h5 - e).norm() < 1e-12 * e.norm());
        assert!(riccati_hankel(0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn log_derivative_examples() {
        for &x in &[c(0.3, 0.0), c(2.0, 1.0), c(0.0, 5.0)] {
            assert!((log_derivative_w(0, x).unwrap() - I).norm() < 1e-15);
        }
        let l1 = log_derivative_w(1, c(1.0, 0.0)).unwrap();
        assert!((l1 - (I - I / (1.0 + I))).norm() < 1e-15);
        let x = c(0.01, 0.0);
        let l3 = log_derivative_w(3, x).unwrap();
        let direct = {
            let h = hankel_sum(3, x);
            let hp = hankel_sum(2, x) - 3.0 / x * h;
            hp / h
        };
        assert!((l3 - direct).norm() < 1e-10 * direct.norm());
        assert!((l3.re + 3.0 / 0.01).abs() / 300.0 < 1e-3);
    }

    #[test]
    fn riccati_wronskian_identity() {
        let mut x = 0.1;
        while x <= 20.0 {
            let z = c(x, 0.0);
            for l in 0..=6 {
                let w = riccati_bessel(l, z) * riccati_hankel_deriv(l, z).unwrap()
                    - riccati_bessel_deriv(l, z) * riccati_hankel(l, z).unwrap();
                assert!((w - I).norm() < 1e-10, "l={l} x={x} w={w}");
            }
            x += 0.37;
        }
    }

    #[test]
    fn bessel_matches_series_and_closed_forms() {
        for &z in &[
            c(0.3, 0.1),
            c(3.1, 0.0),
            c(6.3, 0.0),
            c(4.0, -2.0),
            c(0.0, 3.0),
            c(15.0, 0.2),
        ] {
            let j = riccati_bessel_all(6, z);
            assert!((j[0] - z.sin()).norm() < 1e-13 * (1.0 + z.sin().norm()));
            let j1 = z.sin() / z - z.cos();
            assert!((j[1] - j1).norm() < 1e-12 * (1.0 + j1.norm()));
            for l in 0..=6u32 {
                let s = riccati_bessel_series(l, z);
                assert!(
                    (j[l as usize] - s).norm() < 1e-10 * s.norm().max(1e-30) + 1e-14,
                    "l={l} z={z}"
                );
            }
        }
    }

    #[test]
    fn log_derivative_matches_numerical() {
        // Deterministic pseudo-random points in an annulus.
        let mut seed = 12345u64;
        let mut rnd = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let rad = 0.05 * (400f64).powf(rnd());
            let ang = std::f64::consts::PI * (rnd() - 0.5);
            let x = Complex64::from_polar(rad, ang);
            let l = (rnd() * 6.0) as u32;
            let h = 1e-6 * rad;
            let f = |z: Complex64| riccati_hankel(l, z).unwrap();
            let num = (f(x + h) - f(x - h)) / (2.0 * h) / f(x);
            let an = log_derivative_w(l, x).unwrap();
            assert!((num - an).norm() < 1e-7 * an.norm().max(1.0), "x={x} l={l}");
        }
    }

    #[test]
    fn ratio_limit() {
        let b = ChannelBasis::scalar(3, 0);
        let w = FreeWaveMatrix::new(&b, c(1.0, 0.0));
        let r = w.ratio(1e-6).unwrap();
        let lim = small_r_ratio_limit(&b);
        for i in 0..b.dim() {
            assert!((r[i] - c(lim[i], 0.0)).norm() < 1e-5);
        }
        assert_eq!(lim[0], 1.0);
        assert_eq!(lim[1], -1.0);
    }

    #[test]
    fn imaginary_axis_decay() {
        for l in 0..4 {
            let mut prev = f64::INFINITY;
            for y in [1.0, 2.0, 4.0, 8.0, 16.0] {
                let h = riccati_hankel(l, c(0.0, y)).unwrap().norm();
                assert!(h < prev);
                prev = h;
            }
        }
    }

    #[test]
    fn free_equation_residual() {
        let b = ChannelBasis::scalar(3, 0);
        let k = c(1.3, 0.2);
        let w = FreeWaveMatrix::new(&b, k);
        let r = 1.7;
        let h = 1e-4;
        let (wm, w0, wp) = (
            w.diag(r - h).unwrap(),
            w.diag(r).unwrap(),
            w.diag(r + h).unwrap(),
        );
        let l2 = b.l_squared();
        for i in 0..b.dim() {
            let d2 = (wp[i] - 2.0 * w0[i] + wm[i]) / (h * h);
            let res = -d2 + w0[i] * l2[i] / (r * r) - k * k * w0[i];
            assert!(res.norm() < 1e-6 * w0[i].norm());
        }
    }
}
