//! Electromagnetic S-matrix: fitted solve of the generalized Helmholtz
//! equation, projection onto the transverse modes, and reconstruction of
//! the physical wavefunction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::assembly::MaxwellOperator;
use crate::angular::{BasisKind, ChannelBasis};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, cr, diag_right, inverse_checked, norm2, CMatrix};
use crate::scattering::{Diagnostics, ProjectedS, ScatteringResult};
use crate::source::{MultipoleField, Source};
use crate::variable_phase::{self, SolveOptions};

/// Commutator `‖[S, P]‖₂` above which a warning is attached to a result.
pub const COMMUTATOR_WARNING: f64 = 1e-5;

/// Orthonormal transverse columns `Q` of a vector basis: for each `j ≥ 1`
/// and `m`, the `M` combination `(0, 1, 0)` and the `N` combination
/// `(−a, 0, b)` on `ℓ = (j−1, j, j+1)`, `a = √((j+1)/(2j+1))`,
/// `b = √(j/(2j+1))`. Returns `Q` and one label per column.
pub fn transverse_isometry(basis: &ChannelBasis) -> Result<(CMatrix, Vec<String>)> {
    if basis.kind != BasisKind::Vector {
        return Err(Error::BasisMismatch(
            "transverse projection needs a vector basis".into(),
        ));
    }
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    for j in 1..=basis.max {
        let jf = f64::from(j);
        let a = ((jf + 1.0) / (2.0 * jf + 1.0)).sqrt();
        let b = (jf / (2.0 * jf + 1.0)).sqrt();
        for m in -j..=j {
            let idx = |l: i32| {
                basis.index_of(j, l, m).ok_or_else(|| {
                    Error::BasisMismatch(format!("missing channel j={j} l={l} m={m}"))
                })
            };
            cols.push(vec![(idx(j)?, 1.0)]);
            labels.push(format!("j={j} m={m} M"));
            cols.push(vec![(idx(j - 1)?, -a), (idx(j + 1)?, b)]);
            labels.push(format!("j={j} m={m} N"));
        }
    }
    let mut q = CMatrix::zeros(basis.dim(), cols.len());
    for (c, entries) in cols.iter().enumerate() {
        for &(r, v) in entries {
            q[(r, c)] = cr(v);
        }
    }
    Ok((q, labels))
}

/// Orthogonal projector `P = Q Q†` onto the transverse modes.
pub fn transverse_projector(basis: &ChannelBasis) -> Result<CMatrix> {
    let (q, _) = transverse_isometry(basis)?;
    Ok(&q * q.adjoint())
}

fn check_k(op: &MaxwellOperator, k: Complex64) -> Result<()> {
    if k == cr(0.0) {
        return invalid("the Maxwell engine needs k != 0");
    }
    if (k * k - op.k_squared()).norm() > 1e-12 * (1.0 + op.k_squared().norm()) {
        return invalid("operator was assembled for a different k");
    }
    Ok(())
}

/// Fitted S-matrix of an assembled operator, with its transverse projection.
pub fn solve_operator(
    op: &MaxwellOperator,
    k: Complex64,
    opts: &SolveOptions,
) -> Result<ScatteringResult> {
    check_k(op, k)?;
    let basis = variable_phase::RadialOperator::basis(op).clone();
    let out = variable_phase::solve(op, k, opts)?;
    let (q, labels) = transverse_isometry(&basis)?;
    let p = &q * q.adjoint();
    let projected = q.adjoint() * &out.s * &q;
    let commutator = linalg::commutator_norm(&out.s, &p);
    let fit_sensitivity = out
        .s_probe
        .as_ref()
        .map(|s1| norm2(&(q.adjoint() * (s1 - &out.s) * &q)));
    let mut warnings = Vec::new();
    if commutator > COMMUTATOR_WARNING {
        warnings.push(format!(
            "S does not commute with the transverse projector: ‖[S,P]‖ = {commutator:.3e}"
        ));
    }
    let diag = Diagnostics {
        fit_sensitivity,
        cond_wronskian_plus: out.cond_plus,
        cond_wronskian_minus: out.cond_minus,
        cond_d2: Some(op.worst_d2_condition()),
        commutator_norm: Some(commutator),
        r_small: out.geometry.r_small,
        r0: out.geometry.r0,
        r_big: out.geometry.r_big,
        steps: out.steps,
        warnings,
        ..Default::default()
    };
    let mut res = ScatteringResult::new(k, basis, out.s, diag)?;
    res.diagnostics.unitarity_residual = linalg::unitarity_residual(&projected);
    res.projected = Some(ProjectedS {
        labels,
        s: projected,
        projector: p,
        q,
    });
    Ok(res)
}

/// Electromagnetic S-matrix of a permittivity on a vector basis at `k`.
pub fn maxwell_s_matrix(
    field: &MultipoleField,
    basis: &ChannelBasis,
    k: Complex64,
    opts: &SolveOptions,
) -> Result<ScatteringResult> {
    let op = MaxwellOperator::new(field, basis, k, None)?;
    solve_operator(&op, k, opts)
}

/// As [`maxwell_s_matrix`] for a possibly k-dependent source (such as a
/// Drude medium), which is evaluated at `k` first.
pub fn maxwell_s_matrix_for(
    source: &dyn Source,
    basis: &ChannelBasis,
    k: Complex64,
    opts: &SolveOptions,
) -> Result<ScatteringResult> {
    maxwell_s_matrix(&source.field_at(k)?, basis, k, opts)
}

/// The normalized physical wavefunction on a radial grid.
#[derive(Clone, Debug, Serialize)]
pub struct Wavefunction {
    pub k: Complex64,
    pub r0: f64,
    pub radii: Vec<f64>,
    /// `ψ̂(r)` per radius, in the full channel basis.
    #[serde(skip)]
    pub psi: Vec<CMatrix>,
    /// Eigenvalues of `ψ̂(r)` per radius.
    pub eigenvalues: Vec<Vec<Complex64>>,
    /// Relative mismatch of `ψ̂'` between the two branches at `r₀`.
    pub branch_mismatch: f64,
}

/// Reconstruct `ψ̂(r)` for an assembled operator.
///
/// Outside `r₀`, `ψ̂ = (2π)^{−1/2} [F_k S − F_{−k} M̂] P`, which tends to
/// `(2π)^{−1/2} (ĥ⁽¹⁾ S + ĥ⁽²⁾) P` and is regular at the origin. Inside,
/// `ψ̂ = R Ĉ` with `R` a regular column solution and `Ĉ` chosen so the two
/// branches agree at `r₀`; the derivative mismatch there measures accuracy.
pub fn reconstruct_wavefunction(
    op: &MaxwellOperator,
    k: Complex64,
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<Wavefunction> {
    check_k(op, k)?;
    let basis = variable_phase::RadialOperator::basis(op).clone();
    let res = solve_operator(op, k, opts)?;
    let r0 = res.diagnostics.r0;
    let p = res
        .projected
        .as_ref()
        .map(|x| x.projector.clone())
        .unwrap_or_default();
    let mut outer: Vec<f64> = radii.iter().copied().filter(|&r| r >= r0).collect();
    outer.push(r0);
    let mut inner: Vec<f64> = radii.iter().copied().filter(|&r| r < r0).collect();
    inner.push(r0);
    let ((fp, fm), reg) = rayon::join(
        || {
            rayon::join(
                || variable_phase::sample_outgoing_unfactorized(op, k, &outer, opts),
                || variable_phase::sample_outgoing_unfactorized(op, -k, &outer, opts),
            )
        },
        || variable_phase::sample_regular_column(op, k, &inner, opts),
    );
    let (fp, fm, reg) = (fp?, fm?, reg?);
    let parity = basis.parity().map(cr);
    let norm = cr(1.0 / (2.0 * PI).sqrt());
    let combine =
        |(f, fpr): &(CMatrix, CMatrix), (g, gpr): &(CMatrix, CMatrix)| -> (CMatrix, CMatrix) {
            let v = (f * &res.s - diag_right(g, &parity)) * &p * norm;
            let d = (fpr * &res.s - diag_right(gpr, &parity)) * &p * norm;
            (v, d)
        };
    let out: Vec<(CMatrix, CMatrix)> = fp.iter().zip(&fm).map(|(a, b)| combine(a, b)).collect();
    let (psi0, dpsi0) = out.last().unwrap();
    let (r_at0, rp_at0) = reg.last().unwrap();
    let (rinv, _) = inverse_checked(r_at0, "regular solution at the fitting point")?;
    let c = rinv * psi0;
    let mismatch = norm2(&(rp_at0 * &c - dpsi0)) / norm2(dpsi0).max(f64::MIN_POSITIVE);
    let mut psi = Vec::with_capacity(radii.len());
    let (mut io, mut ii) = (0, 0);
    for &r in radii {
        if r >= r0 {
            psi.push(out[io].0.clone());
            io += 1;
        } else {
            psi.push(&reg[ii].0 * &c);
            ii += 1;
        }
    }
    let eigenvalues = psi
        .iter()
        .map(|m| linalg::eig(m).map(|(v, _)| v.iter().copied().collect()))
        .collect::<Result<Vec<Vec<Complex64>>>>()?;
    Ok(Wavefunction {
        k,
        r0,
        radii: radii.to_vec(),
        psi,
        eigenvalues,
        branch_mismatch: mismatch,
    })
}

/// Eigenvalues of `Ĝ(r)` at `outer` radii and of `Ĥ(r)` at `inner` radii.
#[derive(Clone, Debug, Serialize)]
pub struct GhProfiles {
    pub inner: Vec<f64>,
    pub h_eigenvalues: Vec<Vec<Complex64>>,
    pub outer: Vec<f64>,
    pub g_eigenvalues: Vec<Vec<Complex64>>,
}

/// Sample the factorized solutions on both sides of the fitting point.
pub fn gh_profiles(
    op: &MaxwellOperator,
    k: Complex64,
    inner: &[f64],
    outer: &[f64],
    opts: &SolveOptions,
) -> Result<GhProfiles> {
    check_k(op, k)?;
    let (h, g) = rayon::join(
        || variable_phase::sample_regular(op, k, inner, opts),
        || variable_phase::sample_outgoing(op, k, outer, opts),
    );
    let eigs = |v: Vec<(CMatrix, CMatrix)>| -> Result<Vec<Vec<Complex64>>> {
        v.iter()
            .map(|(m, _)| linalg::eig(m).map(|(e, _)| e.iter().copied().collect()))
            .collect()
    };
    Ok(GhProfiles {
        inner: inner.to_vec(),
        h_eigenvalues: eigs(h?)?,
        outer: outer.to_vec(),
        g_eigenvalues: eigs(g?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::s_exact_dielectric_sphere;
    use crate::source::{smooth_ball, FieldKind};

    #[test]
    fn projector_properties() {
        let basis = ChannelBasis::vector(3, 0);
        let p = transverse_projector(&basis).unwrap();
        assert!((&p * &p - &p).norm() < 1e-14);
        assert!((p.adjoint() - &p).norm() < 1e-14);
        let rank: f64 = p.diagonal().iter().map(|z| z.re).sum();
        assert!((rank - 2.0 * (3.0 + 5.0 + 7.0)).abs() < 1e-12);
        // j = 0 is purely longitudinal
        let i0 = basis.index_of(0, 1, 0).unwrap();
        assert!(p.column(i0).norm() < 1e-15);
        // the longitudinal combination (b, 0, a) is annihilated
        let (a, b) = ((2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt());
        let mut l = crate::linalg::CVector::zeros(basis.dim());
        l[basis.index_of(1, 0, 1).unwrap()] = cr(b);
        l[basis.index_of(1, 2, 1).unwrap()] = cr(a);
        assert!((&p * l).norm() < 1e-15);
    }

    #[test]
    fn vacuum_gives_identity() {
        let f = MultipoleField::vacuum(FieldKind::Permittivity);
        let basis = ChannelBasis::vector(2, 0);
        for k in [Complex64::new(0.5, 0.0), Complex64::new(0.0, 2.0)] {
            let r = maxwell_s_matrix(&f, &basis, k, &SolveOptions::default()).unwrap();
            let n = basis.dim();
            assert!(
                (r.s.clone() - CMatrix::identity(n, n)).norm() < 1e-8,
                "k={k}"
            );
            assert!(r.diagnostics.warnings.is_empty());
        }
    }

    #[test]
    fn smooth_sphere_matches_oracle() {
        let (n_idx, a, s) = (1.5, 1.0, 50.0);
        let f = smooth_ball(n_idx * n_idx - 1.0, a, s).unwrap();
        let basis = ChannelBasis::vector(2, 0);
        let k = Complex64::new(1.3, 0.0);
        let r = maxwell_s_matrix(&f, &basis, k, &SolveOptions::default()).unwrap();
        let proj = r.projected.as_ref().unwrap();
        for (i, label) in proj.labels.iter().enumerate() {
            let j: u32 = label[2..3].parse().unwrap();
            let delta = if label.ends_with('M') { 1 } else { -1 };
            let want = s_exact_dielectric_sphere(j, delta, k, n_idx, a).unwrap();
            let got = proj.s[(i, i)];
            let err = 0.5 * (got / want).arg().abs();
            assert!(err < 1e-2, "{label}: got {got}, want {want}");
        }
        assert!(
            r.diagnostics.commutator_norm.unwrap() < 1e-6,
            "{:?}",
            r.diagnostics
        );
        assert!(r.diagnostics.unitarity_residual < 1e-6);
    }

    #[test]
    fn wavefunction_branches_join() {
        let f = smooth_ball(4.0, 1.0, 8.0).unwrap();
        let basis = ChannelBasis::vector(1, 0);
        let k = Complex64::new(1.0, 0.0);
        let op = MaxwellOperator::new(&f, &basis, k, None).unwrap();
        let radii: Vec<f64> = (1..30).map(|i| 0.1 * f64::from(i)).collect();
        let w = reconstruct_wavefunction(&op, k, &radii, &SolveOptions::default()).unwrap();
        assert!(w.branch_mismatch < 1e-6, "mismatch {}", w.branch_mismatch);
        assert_eq!(w.psi.len(), radii.len());
    }
}
