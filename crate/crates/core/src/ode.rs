//! Adaptive Dormand–Prince 5(4) integration of complex matrix ODEs.
//!
//! Second-order matrix equations `M'' = F(r, M, M')` are integrated as the
//! stacked first-order system `(M, M')`. Integration may run toward larger
//! or smaller `r`; requested sample radii are filled in by cubic Hermite
//! interpolation on accepted steps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Error-control settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step as a fraction of the integration interval.
    pub max_step_fraction: f64,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_step_fraction: 1.0 / 50.0,
            max_steps: 2_000_000,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0
            && self.atol > 0.0
            && self.max_step_fraction > 0.0
            && self.max_steps > 0)
        {
            return invalid("tolerances must be positive");
        }
        Ok(())
    }
}

/// Direction of integration in `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Inward,
    Outward,
}

/// Counters collected during one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Result of a first-order vector integration.
#[derive(Clone, Debug)]
pub struct VectorSolution {
    pub r_start: f64,
    pub r_end: f64,
    pub y: DVector<Complex64>,
    /// `(r, y)` at each requested sample radius, in request order.
    pub samples: Vec<(f64, DVector<Complex64>)>,
    pub stats: StepStats,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B_STAR: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn all_finite(y: &DVector<Complex64>) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn hermite(
    r0: f64,
    y0: &DVector<Complex64>,
    f0: &DVector<Complex64>,
    r1: f64,
    y1: &DVector<Complex64>,
    f1: &DVector<Complex64>,
    r: f64,
) -> DVector<Complex64> {
    let h = r1 - r0;
    let t = (r - r0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    y0 * Complex64::new(h00, 0.0)
        + f0 * Complex64::new(h10 * h, 0.0)
        + y1 * Complex64::new(h01, 0.0)
        + f1 * Complex64::new(h11 * h, 0.0)
}

/// Integrate `y' = f(r, y)` from `r_start` to `r_end`.
pub fn integrate_vector<F>(
    mut f: F,
    r_start: f64,
    y0: DVector<Complex64>,
    r_end: f64,
    tol: &Tolerances,
    sample_radii: &[f64],
) -> Result<VectorSolution>
where
    F: FnMut(f64, &DVector<Complex64>) -> Result<DVector<Complex64>>,
{
    tol.validate()?;
    if r_start == r_end || !r_start.is_finite() || !r_end.is_finite() {
        return invalid("integration interval must be nonempty and finite");
    }
    let (lo, hi) = (r_start.min(r_end), r_start.max(r_end));
    if sample_radii.iter().any(|&s| s < lo || s > hi) {
        return invalid("sample radii must lie inside the integration interval");
    }
    let dir = (r_end - r_start).signum();
    let span = (r_end - r_start).abs();
    let h_max = span * tol.max_step_fraction;
    let n = y0.len();
    let mut stats = StepStats::default();
    let mut samples: Vec<Option<DVector<Complex64>>> = vec![None; sample_radii.len()];
    for (i, &s) in sample_radii.iter().enumerate() {
        if s == r_start {
            samples[i] = Some(y0.clone());
        }
    }

    let weight = |a: &DVector<Complex64>, b: &DVector<Complex64>, i: usize| {
        tol.atol + tol.rtol * a[i].norm().max(b[i].norm())
    };

    let mut r = r_start;
    let mut y = y0;
    let mut fy = f(r, &y)?;
    stats.rhs_evals += 1;
    if !all_finite(&fy) {
        return Err(Error::IntegrationFailure {
            r,
            reason: "non-finite derivative at start".into(),
        });
    }

    // Initial step (Hairer–Nørsett–Wanner heuristic).
    let mut h = {
        let d0 = (y
            .iter()
            .enumerate()
            .map(|(i, v)| (v.norm() / weight(&y, &y, i)).powi(2))
            .sum::<f64>()
            / n.max(1) as f64)
            .sqrt();
        let d1 = (fy
            .iter()
            .enumerate()
            .map(|(i, v)| (v.norm() / weight(&y, &y, i)).powi(2))
            .sum::<f64>()
            / n.max(1) as f64)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        h0.min(h_max).max(1e-12 * span)
    };

    let mut k: Vec<DVector<Complex64>> = vec![DVector::zeros(n); 7];
    while dir * (r_end - r) > 0.0 {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::IntegrationFailure {
                r,
                reason: "maximum number of steps exceeded".into(),
            });
        }
        let last = h >= (r_end - r).abs();
        let hs = if last { (r_end - r).abs() } else { h };
        let step = dir * hs;
        k[0] = fy.clone();
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys.axpy(Complex64::new(step * a, 0.0), kj, Complex64::new(1.0, 0.0));
                }
            }
            k[s] = f(r + C[s] * step, &ys)?;
            stats.rhs_evals += 1;
        }
        let mut y_new = y.clone();
        let mut err = DVector::<Complex64>::zeros(n);
        for s in 0..7 {
            if B[s] != 0.0 {
                y_new.axpy(
                    Complex64::new(step * B[s], 0.0),
                    &k[s],
                    Complex64::new(1.0, 0.0),
                );
            }
            let e = B[s] - B_STAR[s];
            if e != 0.0 {
                err.axpy(
                    Complex64::new(step * e, 0.0),
                    &k[s],
                    Complex64::new(1.0, 0.0),
                );
            }
        }
        let finite = all_finite(&y_new);
        let en = if finite {
            (err.iter()
                .enumerate()
                .map(|(i, e)| (e.norm() / weight(&y, &y_new, i)).powi(2))
                .sum::<f64>()
                / n.max(1) as f64)
                .sqrt()
        } else {
            f64::INFINITY
        };
        if en <= 1.0 {
            let r_new = if last { r_end } else { r + step };
            let f_new = k[6].clone(); // FSAL
            for (i, &s) in sample_radii.iter().enumerate() {
                if samples[i].is_none() && dir * (s - r) > 0.0 && dir * (r_new - s) >= 0.0 {
                    samples[i] = Some(hermite(r, &y, &fy, r_new, &y_new, &f_new, s));
                }
            }
            r = r_new;
            y = y_new;
            fy = f_new;
            stats.accepted += 1;
            if !all_finite(&fy) {
                return Err(Error::IntegrationFailure {
                    r,
                    reason: "non-finite derivative".into(),
                });
            }
            let fac = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (hs * fac).min(h_max);
        } else {
            stats.rejected += 1;
            let fac = if en.is_finite() {
                (0.9 * en.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h = hs * fac;
            if h < 1e-14 * r.abs().max(span) {
                let reason = if finite {
                    "step size underflow"
                } else {
                    "overflow (non-finite state)"
                };
                return Err(Error::IntegrationFailure {
                    r,
                    reason: reason.into(),
                });
            }
        }
    }

    let samples = sample_radii
        .iter()
        .zip(samples)
        .map(|(&s, v)| (s, v.unwrap_or_else(|| y.clone())))
        .collect();
    Ok(VectorSolution {
        r_start,
        r_end,
        y,
        samples,
        stats,
    })
}

/// A matrix-valued radial solution `(M, M')` at the end of an integration.
#[derive(Clone, Debug)]
pub struct RadialMatrixSolution {
    pub direction: Direction,
    pub r_start: f64,
    pub r_end: f64,
    pub m: DMatrix<Complex64>,
    pub mp: DMatrix<Complex64>,
    /// `(r, M, M')` at requested sample radii.
    pub samples: Vec<(f64, DMatrix<Complex64>, DMatrix<Complex64>)>,
    pub stats: StepStats,
}

fn pack(m: &DMatrix<Complex64>, mp: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_iterator(m.len() + mp.len(), m.iter().chain(mp.iter()).copied())
}

fn unpack(
    y: &DVector<Complex64>,
    rows: usize,
    cols: usize,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = rows * cols;
    let m = DMatrix::from_column_slice(rows, cols, &y.as_slice()[..n]);
    let mp = DMatrix::from_column_slice(rows, cols, &y.as_slice()[n..]);
    (m, mp)
}

/// Integrate the second-order matrix equation `M'' = rhs(r, M, M')`.
pub fn integrate<F>(
    mut rhs: F,
    r_start: f64,
    initial: (DMatrix<Complex64>, DMatrix<Complex64>),
    r_end: f64,
    tol: &Tolerances,
    sample_radii: &[f64],
) -> Result<RadialMatrixSolution>
where
    F: FnMut(f64, &DMatrix<Complex64>, &DMatrix<Complex64>) -> Result<DMatrix<Complex64>>,
{
    let (m0, mp0) = initial;
    if m0.shape() != mp0.shape() {
        return invalid("M and M' must have the same shape");
    }
    let (rows, cols) = m0.shape();
    let n = rows * cols;
    let f = |r: f64, y: &DVector<Complex64>| -> Result<DVector<Complex64>> {
        let (m, mp) = unpack(y, rows, cols);
        let mpp = rhs(r, &m, &mp)?;
        let mut out = DVector::zeros(2 * n);
        out.as_mut_slice()[..n].copy_from_slice(&y.as_slice()[n..]);
        out.as_mut_slice()[n..].copy_from_slice(mpp.as_slice());
        Ok(out)
    };
    let sol = integrate_vector(f, r_start, pack(&m0, &mp0), r_end, tol, sample_radii)?;
    let (m, mp) = unpack(&sol.y, rows, cols);
    let samples = sol
        .samples
        .iter()
        .map(|(r, y)| {
            let (a, b) = unpack(y, rows, cols);
            (*r, a, b)
        })
        .collect();
    Ok(RadialMatrixSolution {
        direction: if r_end > r_start {
            Direction::Outward
        } else {
            Direction::Inward
        },
        r_start,
        r_end,
        m,
        mp,
        samples,
        stats: sol.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn harmonic(k: f64, span: f64, tol: &Tolerances) -> Complex64 {
        let id = DMatrix::<Complex64>::identity(2, 2);
        let sol = integrate(
            |_, m, _| Ok(m * c(-k * k)),
            0.3,
            (id.clone(), DMatrix::zeros(2, 2)),
            0.3 + span,
            tol,
            &[],
        )
        .unwrap();
        sol.m[(0, 0)]
    }

    #[test]
    fn harmonic_oscillator_period() {
        let k = 1.7;
        let period = 2.0 * std::f64::consts::PI / k;
        let v = harmonic(k, period, &Tolerances::default());
        assert!((v - c(1.0)).norm() < 1e-8);
        let v = harmonic(k, 0.77, &Tolerances::default());
        assert!((v - c((k * 0.77).cos())).norm() < 1e-8);
    }

    #[test]
    fn zero_rhs_is_constant() {
        let m0 = DMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64 + 0.5, j as f64 - 1.0));
        let sol = integrate(
            |_, m, _| Ok(DMatrix::zeros(m.nrows(), m.ncols())),
            5.0,
            (m0.clone(), DMatrix::zeros(3, 3)),
            0.1,
            &Tolerances::default(),
            &[1.0],
        )
        .unwrap();
        assert_eq!(sol.m, m0);
        assert_eq!(sol.samples[0].1, m0);
        assert_eq!(sol.direction, Direction::Inward);
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let k: f64 = 3.0;
        let span: f64 = 10.0;
        let exact = c((k * span).cos());
        let mut t = Tolerances {
            rtol: 1e-6,
            atol: 1e-9,
            ..Default::default()
        };
        t.max_step_fraction = 1.0;
        let e1 = (harmonic(k, span, &t) - exact).norm();
        t.rtol *= 0.5;
        t.atol *= 0.5;
        let e2 = (harmonic(k, span, &t) - exact).norm();
        assert!(e2 < e1 / 2.0, "{e1} {e2}");
        let tight = Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
            ..Default::default()
        };
        assert!((harmonic(k, span, &tight) - exact).norm() < 1e-10);
    }

    #[test]
    fn inward_and_outward_are_inverse() {
        let a = DMatrix::from_fn(2, 2, |i, j| Complex64::new(0.3 * (i + 2 * j) as f64, 0.1));
        let rhs = |r: f64,
                   m: &DMatrix<Complex64>,
                   mp: &DMatrix<Complex64>|
         -> Result<DMatrix<Complex64>> {
            Ok(&a * m * c(-1.0 / (1.0 + r)) - mp * c(0.2))
        };
        let m0 = DMatrix::from_fn(2, 2, |i, j| Complex64::new(1.0 + i as f64, j as f64));
        let mp0 = DMatrix::from_fn(2, 2, |i, j| Complex64::new(0.5 * j as f64, -(i as f64)));
        let tol = Tolerances::default();
        let out = integrate(rhs, 0.5, (m0.clone(), mp0.clone()), 3.0, &tol, &[]).unwrap();
        let back = integrate(rhs, 3.0, (out.m, out.mp), 0.5, &tol, &[]).unwrap();
        assert!((back.m - m0).norm() < 1e-7);
        assert!((back.mp - mp0).norm() < 1e-7);
    }

    #[test]
    fn dense_output_samples() {
        let id = DMatrix::<Complex64>::identity(1, 1);
        let sol = integrate(
            |_, m, _| Ok(-m),
            0.0,
            (id, DMatrix::zeros(1, 1)),
            3.0,
            &Tolerances::default(),
            &[0.0f64, 1.234, 2.5],
        )
        .unwrap();
        for (r, m, mp) in &sol.samples {
            assert!((m[(0, 0)] - c(r.cos())).norm() < 1e-6);
            assert!((mp[(0, 0)] + c(r.sin())).norm() < 1e-6);
        }
    }

    #[test]
    fn blow_up_is_diagnosed() {
        let id = DMatrix::<Complex64>::identity(1, 1);
        let err = integrate(
            |_, m, _| Ok(m.map(|z| z * z * z)),
            0.0,
            (id.clone(), id),
            10.0,
            &Tolerances::default(),
            &[],
        )
        .unwrap_err();
        match err {
            Error::IntegrationFailure { r, .. } => assert!(r > 0.0 && r < 10.0),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_arguments() {
        let id = DMatrix::<Complex64>::identity(1, 1);
        let f = |_: f64, m: &DMatrix<Complex64>, _: &DMatrix<Complex64>| Ok(m.clone());
        assert!(integrate(
            f,
            1.0,
            (id.clone(), id.clone()),
            1.0,
            &Tolerances::default(),
            &[]
        )
        .is_err());
        assert!(integrate(
            f,
            1.0,
            (id.clone(), id.clone()),
            2.0,
            &Tolerances::default(),
            &[3.0]
        )
        .is_err());
        let bad = Tolerances {
            rtol: 0.0,
            ..Default::default()
        };
        assert!(integrate(f, 1.0, (id.clone(), id), 2.0, &bad, &[]).is_err());
    }
}
