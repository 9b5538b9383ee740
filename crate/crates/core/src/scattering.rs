//! S-matrix results, eigenphases, eigenphase tracking across a k grid and
//! the change in the continuum density of states.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::angular::ChannelBasis;
use crate::error::{invalid, Result};
use crate::linalg::{self, CMatrix, CVector};

/// Numerical health indicators of one solve.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    /// `‖S†S − 1‖₂` (of the projected S for Maxwell solves).
    pub unitarity_residual: f64,
    /// `‖S(r₀) − S(1.4 r₀)‖₂` from dense output, when available.
    pub fit_sensitivity: Option<f64>,
    /// 1-norm condition number of the Wronskian at `+k`.
    pub cond_wronskian_plus: f64,
    /// 1-norm condition number of the Wronskian at `−k`.
    pub cond_wronskian_minus: f64,
    /// Worst condition number of `d₂` seen (Maxwell only).
    pub cond_d2: Option<f64>,
    /// `‖[S, P]‖₂` (Maxwell only).
    pub commutator_norm: Option<f64>,
    pub r_small: f64,
    pub r0: f64,
    pub r_big: f64,
    /// Accepted integration steps over all radial solves.
    pub steps: usize,
    /// Non-fatal problems noticed during the solve.
    pub warnings: Vec<String>,
}

/// S-matrix restricted to the physical transverse subspace.
#[derive(Clone, Debug)]
pub struct ProjectedS {
    /// Labels such as `j=1 m=0 M`, one per row.
    pub labels: Vec<String>,
    /// `Q† S Q` with `Q` the orthonormal (M, N) columns.
    pub s: CMatrix,
    /// The projector `P = Q Q†` in the full channel basis.
    pub projector: CMatrix,
    /// The isometry `Q`.
    pub q: CMatrix,
}

/// Scattering data at one wave number.
#[derive(Clone, Debug)]
pub struct ScatteringResult {
    pub k: Complex64,
    pub basis: ChannelBasis,
    pub s: CMatrix,
    pub eigenvalues: CVector,
    pub eigenvectors: CMatrix,
    /// `½ arg λ` for each eigenvalue, in eigenvalue order.
    pub eigenphases: Vec<f64>,
    pub projected: Option<ProjectedS>,
    pub diagnostics: Diagnostics,
}

impl ScatteringResult {
    /// Build a result from an S-matrix, filling eigen-data and unitarity.
    pub fn new(
        k: Complex64,
        basis: ChannelBasis,
        s: CMatrix,
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        let (eigenvalues, eigenvectors) = linalg::eig(&s)?;
        let eigenphases = linalg::eigenphases(&eigenvalues);
        let mut diagnostics = diagnostics;
        diagnostics.unitarity_residual = linalg::unitarity_residual(&s);
        Ok(Self {
            k,
            basis,
            s,
            eigenvalues,
            eigenvectors,
            eigenphases,
            projected: None,
            diagnostics,
        })
    }

    /// `T = (S − 1)/2`.
    pub fn t(&self) -> CMatrix {
        t_matrix(&self.s)
    }

    /// The physically relevant S: the projected one if present.
    pub fn physical_s(&self) -> &CMatrix {
        self.projected.as_ref().map(|p| &p.s).unwrap_or(&self.s)
    }

    /// Channel labels matching [`physical_s`](Self::physical_s).
    pub fn physical_labels(&self) -> Vec<String> {
        match &self.projected {
            Some(p) => p.labels.clone(),
            None => self.basis.labels(),
        }
    }

    /// Eigen-data of the physical S.
    pub fn physical_eigen(&self) -> Result<(CVector, CMatrix)> {
        match &self.projected {
            Some(p) => linalg::eig(&p.s),
            None => Ok((self.eigenvalues.clone(), self.eigenvectors.clone())),
        }
    }
}

/// `T = (S − 1)/2`.
pub fn t_matrix(s: &CMatrix) -> CMatrix {
    let n = s.nrows();
    (s - CMatrix::identity(n, n)) * Complex64::new(0.5, 0.0)
}

/// Eigenphase branches followed across a k grid.
#[derive(Clone, Debug, Serialize)]
pub struct TrackedEigenphases {
    /// `phases[branch][i]` at grid point `i`, unwrapped modulo π.
    pub phases: Vec<Vec<f64>>,
    /// `moduli[branch][i] = |λ|`.
    pub moduli: Vec<Vec<f64>>,
    /// `columns[branch][i]`: the eigenvalue index carried by the branch.
    pub columns: Vec<Vec<usize>>,
    /// Grid indices where the overlap-based assignment was ambiguous.
    pub ambiguous: Vec<usize>,
}

fn unwrap_near(prev: f64, x: f64) -> f64 {
    x - PI * ((x - prev) / PI).round()
}

/// Follow eigenvalues across successive grid points by maximal eigenvector
/// overlap (greedy assignment) and unwrap their phases modulo π.
pub fn track_eigenphases(eigen: &[(CVector, CMatrix)]) -> TrackedEigenphases {
    let Some((v0, _)) = eigen.first() else {
        return TrackedEigenphases {
            phases: vec![],
            moduli: vec![],
            columns: vec![],
            ambiguous: vec![],
        };
    };
    let n = v0.len();
    let mut phases: Vec<Vec<f64>> = (0..n).map(|b| vec![0.5 * v0[b].arg()]).collect();
    let mut moduli: Vec<Vec<f64>> = (0..n).map(|b| vec![v0[b].norm()]).collect();
    let mut columns: Vec<Vec<usize>> = (0..n).map(|b| vec![b]).collect();
    let mut ambiguous = Vec::new();
    // column of the previous grid point's eigenvector carried by each branch
    let mut prev_vecs: Vec<CVector> = (0..n).map(|b| eigen[0].1.column(b).clone_owned()).collect();
    for (i, (vals, vecs)) in eigen.iter().enumerate().skip(1) {
        if vals.len() != n {
            // keep the branches aligned with the grid
            ambiguous.push(i);
            for b in 0..n {
                let (p, m) = (*phases[b].last().unwrap(), *moduli[b].last().unwrap());
                phases[b].push(p);
                moduli[b].push(m);
                columns[b].push(b.min(vals.len().saturating_sub(1)));
            }
            continue;
        }
        let mut pairs = Vec::with_capacity(n * n);
        for (b, pv) in prev_vecs.iter().enumerate() {
            for c in 0..n {
                let o = pv.dotc(&vecs.column(c)).norm();
                pairs.push((o, b, c));
            }
        }
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut used_b = vec![false; n];
        let mut used_c = vec![false; n];
        let mut assign = vec![0usize; n];
        let mut weak = false;
        for (o, b, c) in pairs {
            if used_b[b] || used_c[c] {
                continue;
            }
            used_b[b] = true;
            used_c[c] = true;
            assign[b] = c;
            if o < 0.5 {
                weak = true;
            }
        }
        if weak {
            ambiguous.push(i);
        }
        for b in 0..n {
            let c = assign[b];
            let ph = 0.5 * vals[c].arg();
            let last = *phases[b].last().unwrap();
            phases[b].push(unwrap_near(last, ph));
            moduli[b].push(vals[c].norm());
            columns[b].push(c);
            prev_vecs[b] = vecs.column(c).clone_owned();
        }
    }
    TrackedEigenphases {
        phases,
        moduli,
        columns,
        ambiguous,
    }
}

/// `½ arg det S` unwrapped modulo π along the grid: the sum of eigenphases.
pub fn summed_eigenphase(s_matrices: &[CMatrix]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(s_matrices.len());
    for s in s_matrices {
        let d = s.clone().lu().determinant();
        let ph = 0.5 * d.arg();
        let v = match out.last() {
            Some(&prev) => unwrap_near(prev, ph),
            None => ph,
        };
        out.push(v);
    }
    out
}

/// `Δρ(k) = (1/π) d/dk Σ δ(k)` by central differences (one-sided at the
/// ends) on a uniform real grid.
pub fn delta_rho_from_phases(ks: &[f64], summed: &[f64]) -> Result<Vec<f64>> {
    let n = ks.len();
    if n < 2 || summed.len() != n {
        return invalid("need at least two grid points with matching phases");
    }
    let h = (ks[n - 1] - ks[0]) / (n - 1) as f64;
    if h <= 0.0
        || ks
            .windows(2)
            .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0))
    {
        return invalid("k grid must be uniform and increasing");
    }
    let d = |i: usize| -> f64 {
        if n == 2 {
            (summed[1] - summed[0]) / h
        } else if i == 0 {
            (-3.0 * summed[0] + 4.0 * summed[1] - summed[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * summed[n - 1] - 4.0 * summed[n - 2] + summed[n - 3]) / (2.0 * h)
        } else {
            (summed[i + 1] - summed[i - 1]) / (2.0 * h)
        }
    };
    Ok((0..n).map(|i| d(i) / PI).collect())
}

/// Δρ on a uniform real grid from the S-matrices solved there.
pub fn density_of_states_delta(ks: &[f64], s_matrices: &[CMatrix]) -> Result<Vec<f64>> {
    delta_rho_from_phases(ks, &summed_eigenphase(s_matrices))
}
