//! Product quadrature on the unit sphere: Gauss–Legendre in `cos θ` and the
//! trapezoid rule in `φ`. Exact for band-limited integrands of degree below
//! `2·n_theta` in `cos θ` and `n_phi` in the azimuthal frequency.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Tensor-product quadrature rule on the sphere.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    /// (θ, φ, weight) triples.
    pub nodes: Vec<(f64, f64, f64)>,
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = xi.acos();
            for k in 0..n_phi {
                nodes.push((theta, k as f64 * dphi, wi * dphi));
            }
        }
        Self { nodes }
    }

    /// The 64 × 128 rule used for coupling-tensor cross-checks.
    pub fn standard() -> Self {
        Self::new(64, 128)
    }

    pub fn integrate<F: FnMut(f64, f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        self.nodes.iter().map(|&(t, p, w)| f(t, p) * w).sum()
    }
}
