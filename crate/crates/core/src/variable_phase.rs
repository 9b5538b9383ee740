//! The variable phase engine shared by the scalar, vector and Maxwell
//! solvers.
//!
//! Every supported problem reduces to a matrix radial equation
//!
//! ```text
//! ψ'' = D₁ ψ' + D₀ ψ,    D₀ = L̂²/r² − k² + U(r)
//! ```
//!
//! over a channel basis, with `U` and `D₁` vanishing outside the source. A
//! [`RadialOperator`] supplies `U`, `D₁` and `D₁'` at any radius.
//!
//! The outgoing solution is written `F = G Ŵ(kr)` with `G = 1` outside the
//! source and integrated inward; the regular left solution is written
//! `Φᵗ = Ŵ⁻¹ H` with free regular data near the origin and integrated
//! outward. Their Wronskian at a fitting point `r₀`, evaluated at both `+k`
//! and `−k`, yields `S = 𝒲ₖ⁻¹ M̂ 𝒲₋ₖ M̂`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::ChannelBasis;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, cr, diag_left, diag_right, inverse_checked, norm2, CMatrix, CVector};
use crate::ode::{self, RadialMatrixSolution, Tolerances};
use crate::radial::FreeWaveMatrix;

/// The interaction part of the radial equation at one radius.
#[derive(Clone, Debug)]
pub struct Coefficients {
    /// `U = D₀ − L̂²/r² + k²`; the potential matrix for Helmholtz problems.
    pub u: CMatrix,
    /// First-derivative coupling `D₁`, absent for Helmholtz problems.
    pub d1: Option<CMatrix>,
    /// `dD₁/dr`, present whenever `d1` is.
    pub d1p: Option<CMatrix>,
}

/// A radial problem at fixed `k²`.
pub trait RadialOperator: Sync {
    fn basis(&self) -> &ChannelBasis;
    fn coefficients(&self, r: f64) -> Result<Coefficients>;
    /// Radius beyond which the interaction vanishes.
    fn support_radius(&self) -> f64;
    /// Typical size of the interaction region (default fitting point scale).
    fn core_radius(&self) -> f64;
}

/// Radii used by one solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub r_small: f64,
    pub r0: f64,
    pub r_big: f64,
}

/// User-facing knobs for a solve; unset radii take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub r0: Option<f64>,
    pub r_small: Option<f64>,
    pub r_big: Option<f64>,
    pub tol: Tolerances,
    /// Also evaluate S at `1.4 r₀` from dense output.
    pub sensitivity: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            r0: None,
            r_small: None,
            r_big: None,
            tol: Tolerances::default(),
            sensitivity: true,
        }
    }
}

/// Ratio of the sensitivity probe radius to `r₀`.
pub const PROBE_FACTOR: f64 = 1.4;

/// `r_small = min(1/|k|, R_core)/SMALL_DIVISOR`.
pub const SMALL_DIVISOR: f64 = 1000.0;

impl SolveOptions {
    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = Some(r0);
        self
    }

    /// Resolve default radii for a problem of the given size at `k`.
    pub fn geometry(&self, k: Complex64, support: f64, core: f64) -> Result<Geometry> {
        if k.norm() == 0.0 || !k.is_finite() {
            return invalid("k must be finite and nonzero");
        }
        self.tol.validate()?;
        let inv_k = 1.0 / k.norm();
        let r0 = self.r0.unwrap_or(0.5 * core);
        let r_small = self
            .r_small
            .unwrap_or(inv_k.min(core).min(r0) / SMALL_DIVISOR);
        let r_big = self.r_big.unwrap_or(10.0 * inv_k.max(support));
        if !(r_small > 0.0 && r_small < r0 && PROBE_FACTOR * r0 < r_big) {
            return invalid(format!(
                "need 0 < r_small < r0 < r_big/{PROBE_FACTOR} (got {r_small}, {r0}, {r_big})"
            ));
        }
        Ok(Geometry { r_small, r0, r_big })
    }
}

/// `G'' = [L̂², G]/r² + U G − 2G'Λ + D₁(GΛ + G')`.
pub fn outgoing_rhs<'a, O: RadialOperator + ?Sized>(
    op: &'a O,
    free: &'a FreeWaveMatrix,
) -> impl FnMut(f64, &CMatrix, &CMatrix) -> Result<CMatrix> + 'a {
    let l2 = op.basis().l_squared().map(cr);
    move |r, g, gp| {
        let lam = free.log_derivative(r)?;
        let c = op.coefficients(r)?;
        let inv_r2 = cr(1.0 / (r * r));
        let mut out = (diag_left(&l2, g) - diag_right(g, &l2)) * inv_r2 + &c.u * g
            - diag_right(gp, &lam) * cr(2.0);
        if let Some(d1) = &c.d1 {
            out += d1 * (diag_right(g, &lam) + gp);
        }
        Ok(out)
    }
}

/// `H'' = 2Λ'H + 2ΛH' − [L̂², H]/r² + HU − (H' − ΛH)D₁ − HD₁'`.
pub fn regular_rhs<'a, O: RadialOperator + ?Sized>(
    op: &'a O,
    free: &'a FreeWaveMatrix,
) -> impl FnMut(f64, &CMatrix, &CMatrix) -> Result<CMatrix> + 'a {
    let l2 = op.basis().l_squared().map(cr);
    move |r, h, hp| {
        let lam = free.log_derivative(r)?;
        let lamp = free.log_derivative_prime(r, &lam);
        let c = op.coefficients(r)?;
        let inv_r2 = cr(1.0 / (r * r));
        let mut out = diag_left(&(lamp * cr(2.0)), h) + diag_left(&(&lam * cr(2.0)), hp)
            - (diag_left(&l2, h) - diag_right(h, &l2)) * inv_r2
            + h * &c.u;
        if let (Some(d1), Some(d1p)) = (&c.d1, &c.d1p) {
            out -= (hp - diag_left(&lam, h)) * d1 + h * d1p;
        }
        Ok(out)
    }
}

/// Free regular data `H = i(2ℓ+1) Ŵ ĵ / k` and its derivative at `r`, for
/// which `H ≈ r·1` near the origin.
pub fn free_regular_initial(free: &FreeWaveMatrix, r: f64) -> Result<(CMatrix, CMatrix)> {
    let k = free.k;
    let w = free.diag(r)?;
    let lam = free.log_derivative(r)?;
    let j = free.regular(r);
    let jp = free.regular_deriv(r);
    let c: CVector = CVector::from_iterator(
        free.dim(),
        free.ells()
            .iter()
            .map(|&l| Complex64::i() * f64::from(2 * l + 1) / k),
    );
    let h = c.component_mul(&w).component_mul(&j);
    let hp = c
        .component_mul(&w)
        .component_mul(&(lam.component_mul(&j) + jp));
    Ok((CMatrix::from_diagonal(&h), CMatrix::from_diagonal(&hp)))
}

/// Log-derivative `R'R⁻¹` of the regular column solutions at small `r`,
/// from the leading Frobenius behaviour `R ≈ V r^ν`.
///
/// With `C₁ = r D₁` and `C₀ = r² D₀` frozen at `r`, the exponents solve
/// `ν(ν−1)v = (νC₁ + C₀)v`; they come in pairs `ν, 1−ν` and the regular
/// ones are those with `Re ν > ½`. A permittivity whose higher moments do
/// not vanish at the origin shifts them away from `ℓ+1` and mixes channels.
/// Returns `None` for problems without a first-derivative coupling, where
/// the free `ĵ'/ĵ` is exact to leading order.
pub fn regular_log_derivative<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    r: f64,
) -> Result<Option<CMatrix>> {
    let c = op.coefficients(r)?;
    let Some(d1) = c.d1 else { return Ok(None) };
    let n = d1.nrows();
    let l2 = op.basis().l_squared();
    let mut comp = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        comp[(i, n + i)] = cr(1.0);
        comp[(n + i, n + i)] = cr(1.0);
        for j in 0..n {
            let mut c0 = c.u[(i, j)] * (r * r);
            if i == j {
                c0 += l2[i] - k * k * (r * r);
            }
            comp[(n + i, j)] = c0;
            comp[(n + i, n + j)] += d1[(i, j)] * r;
        }
    }
    // the regular pairs (v, νv) span the invariant subspace with Re ν > ½;
    // for any basis [X; Y] of it, R'R⁻¹ = Y X⁻¹ / r
    let basis = linalg::invariant_subspace(&comp, 0.5, n).map_err(|_| Error::IllConditioned {
        what: "indicial exponents at the origin".into(),
        cond: f64::INFINITY,
    })?;
    let x = basis.rows(0, n).clone_owned();
    let y = basis.rows(n, n).clone_owned();
    let (xinv, _) = inverse_checked(&x, "Frobenius eigenvectors")?;
    Ok(Some(y * xinv * cr(1.0 / r)))
}

/// `exp(E ln(r/ρ))`: the leading Frobenius propagator from `ρ` to `r` for
/// the exponent matrix `E`.
fn frobenius_power(e: &CMatrix, r: f64, rho: f64) -> CMatrix {
    (e * cr((r / rho).ln())).exp()
}

/// Regular left data at `r`, for a solve fitted near `rho`.
///
/// Without a first-derivative coupling this is the free data. Otherwise a
/// left solution is regular exactly when its modified Wronskian with the
/// regular column solutions vanishes, `Φᵗ' = Φᵗ (R'R⁻¹ − D₁) = Φᵗ E / r`.
/// The values are taken as `Φᵗ = c ĵ(kρ) (r/ρ)^E`, so that every row stays
/// dominated by its own exponent and the rows remain independent at `ρ`;
/// a plain diagonal start would let the fastest-growing exponent take over
/// all rows. The factored data is `H = Ŵ Φᵗ`, `H' = ΛH + Ŵ Φᵗ'`.
pub fn regular_initial<O: RadialOperator + ?Sized>(
    op: &O,
    free: &FreeWaveMatrix,
    r: f64,
    rho: f64,
) -> Result<(CMatrix, CMatrix)> {
    let Some(lr) = regular_log_derivative(op, free.k, r)? else {
        return free_regular_initial(free, r);
    };
    let d1 = op.coefficients(r)?.d1.expect("log-derivative implies D1");
    let e = (lr - d1) * cr(r);
    let k = free.k;
    let scale = CVector::from_iterator(
        free.dim(),
        free.ells()
            .iter()
            .zip(free.regular(rho).iter())
            .map(|(&l, &j)| Complex64::i() * f64::from(2 * l + 1) / k * j),
    );
    let phi = diag_left(&scale, &frobenius_power(&e, r, rho));
    let dphi = &phi * &e * cr(1.0 / r);
    let w = free.diag(r)?;
    let h = diag_left(&w, &phi);
    let hp = diag_left(&free.log_derivative(r)?, &h) + diag_left(&w, &dphi);
    Ok((h, hp))
}

/// Normalized Wronskian
/// `𝒲 = N⁻¹ Ŵ⁻¹ [H(G' + GΛ) − (H' − ΛH)G − H D₁ G] Ŵ`, `N = diag(2ℓ+1)`,
/// evaluated with the overflow-free scaled `Ŵ`. Equals `−1` for a free
/// problem and does not depend on `r`.
pub fn wronskian(
    free: &FreeWaveMatrix,
    r: f64,
    h: (&CMatrix, &CMatrix),
    g: (&CMatrix, &CMatrix),
    d1: Option<&CMatrix>,
) -> Result<CMatrix> {
    let (h, hp) = h;
    let (g, gp) = g;
    let lam = free.log_derivative(r)?;
    let ws = free.scaled(r)?;
    let mut x = h * (gp + diag_right(g, &lam)) - (hp - diag_left(&lam, h)) * g;
    if let Some(d1) = d1 {
        x -= h * d1 * g;
    }
    let left = CVector::from_iterator(
        free.dim(),
        ws.iter()
            .zip(free.ells())
            .map(|(w, &l)| cr(1.0 / f64::from(2 * l + 1)) / w),
    );
    Ok(diag_right(&diag_left(&left, &x), &ws))
}

/// Integrate `G` inward from `r_from` (where `G = 1`, `G' = 0`) to `r_to`.
pub fn integrate_outgoing<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    r_from: f64,
    r_to: f64,
    tol: &Tolerances,
    samples: &[f64],
) -> Result<RadialMatrixSolution> {
    let free = FreeWaveMatrix::new(op.basis(), k);
    let n = op.basis().dim();
    ode::integrate(
        outgoing_rhs(op, &free),
        r_from,
        (CMatrix::identity(n, n), CMatrix::zeros(n, n)),
        r_to,
        tol,
        samples,
    )
}

/// Integrate `H` outward from regular data at `r_from` to `r_to`.
pub fn integrate_regular<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    r_from: f64,
    r_to: f64,
    tol: &Tolerances,
    samples: &[f64],
) -> Result<RadialMatrixSolution> {
    let free = FreeWaveMatrix::new(op.basis(), k);
    let init = regular_initial(op, &free, r_from, r_to)?;
    ode::integrate(regular_rhs(op, &free), r_from, init, r_to, tol, samples)
}

/// `ψ'' = D₁ψ' + (L̂²/r² − k² + U)ψ`, the unfactorized radial equation.
pub fn direct_rhs<'a, O: RadialOperator + ?Sized>(
    op: &'a O,
    k: Complex64,
) -> impl FnMut(f64, &CMatrix, &CMatrix) -> Result<CMatrix> + 'a {
    let l2 = op.basis().l_squared();
    move |r, f, fp| {
        let c = op.coefficients(r)?;
        let diag = l2.map(|x| cr(x / (r * r)) - k * k);
        let mut out = diag_left(&diag, f) + &c.u * f;
        if let Some(d1) = &c.d1 {
            out += d1 * fp;
        }
        Ok(out)
    }
}

/// Integrate through a sequence of radii, restarting at each one so every
/// requested radius is an integrator endpoint (no interpolation). Returns
/// `(M, M')` at each radius in `stops` and the accepted step count.
fn integrate_legs<F>(
    mut rhs: F,
    r_start: f64,
    init: (CMatrix, CMatrix),
    stops: &[f64],
    tol: &Tolerances,
) -> Result<(Vec<(CMatrix, CMatrix)>, usize)>
where
    F: FnMut(f64, &CMatrix, &CMatrix) -> Result<CMatrix>,
{
    let mut out = Vec::with_capacity(stops.len());
    let mut state = init;
    let mut r = r_start;
    let mut steps = 0;
    for &stop in stops {
        if stop != r {
            let sol = ode::integrate(&mut rhs, r, state, stop, tol, &[])?;
            steps += sol.stats.accepted;
            state = (sol.m, sol.mp);
            r = stop;
        }
        out.push(state.clone());
    }
    Ok((out, steps))
}

/// Like [`integrate_legs`] for the outward regular integration, but the
/// rows of `[H, rH']` are re-orthonormalized at geometrically spaced radii
/// (ratio `ratio`) before the first stop.
///
/// Every row is a regular left solution and any invertible recombination of
/// the rows leaves the fitted S unchanged. Without it, local integration
/// errors seed the fastest-growing regular solution into every row; when
/// the exponents at the origin are spread apart this makes the rows nearly
/// parallel by `r₀` and the Wronskian numerically singular.
fn integrate_legs_orthonormalized<F>(
    free: &FreeWaveMatrix,
    mut rhs: F,
    r_start: f64,
    init: (CMatrix, CMatrix),
    stops: &[f64],
    ratio: f64,
    tol: &Tolerances,
) -> Result<(Vec<(CMatrix, CMatrix)>, usize)>
where
    F: FnMut(f64, &CMatrix, &CMatrix) -> Result<CMatrix>,
{
    let first = stops.iter().copied().fold(f64::INFINITY, f64::min);
    let mut state = init;
    let mut r = r_start;
    let mut steps = 0;
    while r * ratio < first {
        let next = r * ratio;
        let sol = ode::integrate(&mut rhs, r, state, next, tol, &[])?;
        steps += sol.stats.accepted;
        state = orthonormalize_rows(free, &sol.m, &sol.mp, next)?;
        r = next;
    }
    let (out, more) = integrate_legs(rhs, r, state, stops, tol)?;
    Ok((out, steps + more))
}

/// Recombine the regular solutions so that the rows of `[Φᵗ, rΦᵗ']` are
/// orthonormal, where `Φᵗ = Ŵ⁻¹H`, and return the matching `(H, H')`.
fn orthonormalize_rows(
    free: &FreeWaveMatrix,
    h: &CMatrix,
    hp: &CMatrix,
    r: f64,
) -> Result<(CMatrix, CMatrix)> {
    let n = h.nrows();
    let w = free.diag(r)?;
    let lam = free.log_derivative(r)?;
    let winv = w.map(|x| Complex64::new(1.0, 0.0) / x);
    let phi = diag_left(&winv, h);
    let dphi = diag_left(&winv, &(hp - diag_left(&lam, h)));
    let mut x = CMatrix::zeros(2 * n, n);
    x.view_mut((0, 0), (n, n)).copy_from(&phi.transpose());
    x.view_mut((n, 0), (n, n))
        .copy_from(&(dphi.transpose() * cr(r)));
    let rt = x.qr().r().transpose();
    let t = rt.try_inverse().ok_or_else(|| Error::IllConditioned {
        what: "regular solution basis".into(),
        cond: f64::INFINITY,
    })?;
    let phi = &t * phi;
    let dphi = &t * dphi;
    let h = diag_left(&w, &phi);
    let hp = diag_left(&lam, &h) + diag_left(&w, &dphi);
    Ok((h, hp))
}

/// The outgoing solution at the fitting radii, either factorized as `G`
/// (`F = G Ŵ`) or stored directly as `F`.
#[derive(Clone, Debug)]
enum Outgoing {
    Factorized(Vec<(CMatrix, CMatrix)>),
    Direct(Vec<(CMatrix, CMatrix)>),
}

fn fit_radii(geom: &Geometry, opts: &SolveOptions) -> Vec<f64> {
    if opts.sensitivity {
        vec![geom.r0, PROBE_FACTOR * geom.r0]
    } else {
        vec![geom.r0]
    }
}

/// Outgoing solution for wave number `q` at the fitting radii.
///
/// For `Im q ≥ 0`, `ĥ_ℓ(qr)` has no zeros at real `r` and the factorized
/// form is integrated from `r_big`. In the lower half plane (the `−k` leg of
/// an imaginary-k solve) `ĥ_ℓ(qr)` may vanish at real `r`, so `F` itself is
/// integrated inward from the edge of the source instead.
fn outgoing_at<O: RadialOperator + ?Sized>(
    op: &O,
    q: Complex64,
    geom: &Geometry,
    opts: &SolveOptions,
) -> Result<(Outgoing, usize)> {
    let radii = fit_radii(geom, opts);
    let inward: Vec<f64> = radii.iter().rev().copied().collect();
    let n = op.basis().dim();
    let (mut vals, steps, factorized) = if q.im >= 0.0 {
        let free = FreeWaveMatrix::new(op.basis(), q);
        let init = (CMatrix::identity(n, n), CMatrix::zeros(n, n));
        let (v, st) = integrate_legs(
            outgoing_rhs(op, &free),
            geom.r_big,
            init,
            &inward,
            &opts.tol,
        )?;
        (v, st, true)
    } else {
        let r_start = op
            .support_radius()
            .max(*inward.first().unwrap())
            .min(geom.r_big);
        let free = FreeWaveMatrix::new(op.basis(), q);
        let init = (
            CMatrix::from_diagonal(&free.diag(r_start)?),
            CMatrix::from_diagonal(&free.diag_deriv(r_start)?),
        );
        let (v, st) = integrate_legs(direct_rhs(op, q), r_start, init, &inward, &opts.tol)?;
        (v, st, false)
    };
    vals.reverse();
    Ok((
        if factorized {
            Outgoing::Factorized(vals)
        } else {
            Outgoing::Direct(vals)
        },
        steps,
    ))
}

/// Normalized Wronskian of the regular solution `H` (built on `Ŵ(q_h r)`)
/// with an outgoing solution for wave number `q_o`, at radius `r`:
/// `N⁻¹ Ŵ(q_h r)⁻¹ [H F' − (H' − ΛH) F − H D₁ F]`, conjugated back to the
/// `Ŵ(q_o r)` frame for factorized outgoing data.
fn wronskian_against(
    free_h: &FreeWaveMatrix,
    free_o: &FreeWaveMatrix,
    r: f64,
    h: (&CMatrix, &CMatrix),
    out: (&CMatrix, &CMatrix),
    factorized: bool,
    d1: Option<&CMatrix>,
) -> Result<CMatrix> {
    let (h, hp) = h;
    let (o, op) = out;
    let hb = hp - diag_left(&free_h.log_derivative(r)?, h);
    let mut x = if factorized {
        h * (op + diag_right(o, &free_o.log_derivative(r)?)) - &hb * o
    } else {
        h * op - &hb * o
    };
    if let Some(d1) = d1 {
        x -= h * d1 * o;
    }
    let ws_h = free_h.scaled(r)?;
    let left = CVector::from_iterator(
        free_h.dim(),
        ws_h.iter()
            .zip(free_h.ells())
            .map(|(w, &l)| cr(1.0 / f64::from(2 * l + 1)) / w),
    );
    let x = diag_left(&left, &x);
    Ok(if factorized {
        let phase = (Complex64::i() * (free_o.k - free_h.k) * r).exp();
        diag_right(&x, &free_o.scaled(r)?) * phase
    } else {
        x * (-Complex64::i() * free_h.k * r).exp()
    })
}

/// `S = 𝒲ₖ⁻¹ M̂ 𝒲₋ₖ M̂` and the condition numbers of the two Wronskians.
pub fn s_from_wronskians(
    wk: &CMatrix,
    wmk: &CMatrix,
    parity: &DVector<f64>,
) -> Result<(CMatrix, f64, f64)> {
    let (inv, cond_k) = inverse_checked(wk, "Wronskian at +k")?;
    let cond_mk = crate::linalg::norm1(wmk)
        * crate::linalg::norm1(&inverse_checked(wmk, "Wronskian at -k")?.0);
    let p = parity.map(cr);
    Ok((inv * diag_right(&diag_left(&p, wmk), &p), cond_k, cond_mk))
}

/// Output of [`solve`].
#[derive(Clone, Debug)]
pub struct FittedSolve {
    pub s: CMatrix,
    pub wronskian_plus: CMatrix,
    pub wronskian_minus: CMatrix,
    pub cond_plus: f64,
    pub cond_minus: f64,
    /// `‖S(r₀) − S(1.4 r₀)‖₂`.
    pub fit_sensitivity: Option<f64>,
    /// `S` fitted at the probe radius `1.4 r₀`, when computed.
    pub s_probe: Option<CMatrix>,
    pub geometry: Geometry,
    pub steps: usize,
}

/// Full solve at complex `k`.
///
/// The regular solution is integrated once, for whichever of `±k` lies in
/// the closed upper half plane; the other sign follows exactly from
/// `Φᵗ₋ₖ = M̂ Φᵗₖ`, since its equation depends on `k²` only and the free
/// regular data obey the same relation. The outgoing solutions for `+k`
/// and `−k` are integrated in parallel.
pub fn solve<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    opts: &SolveOptions,
) -> Result<FittedSolve> {
    let geom = opts.geometry(k, op.support_radius(), op.core_radius())?;
    let flip = k.im < 0.0;
    let qp = if flip { -k } else { k };
    let qm = -qp;
    let radii = fit_radii(&geom, opts);
    let free_p = FreeWaveMatrix::new(op.basis(), qp);
    let regular = || -> Result<(Vec<(CMatrix, CMatrix)>, usize)> {
        let init = regular_initial(op, &free_p, geom.r_small, geom.r0)?;
        if op.coefficients(geom.r_small)?.d1.is_some() {
            integrate_legs_orthonormalized(
                &free_p,
                regular_rhs(op, &free_p),
                geom.r_small,
                init,
                &radii,
                4.0,
                &opts.tol,
            )
        } else {
            integrate_legs(
                regular_rhs(op, &free_p),
                geom.r_small,
                init,
                &radii,
                &opts.tol,
            )
        }
    };
    let (h, (op_p, op_m)) = rayon::join(regular, || {
        rayon::join(
            || outgoing_at(op, qp, &geom, opts),
            || outgoing_at(op, qm, &geom, opts),
        )
    });
    let ((h_vals, steps_h), (out_p, steps_p), (out_m, steps_m)) = (h?, op_p?, op_m?);
    let free_m = FreeWaveMatrix::new(op.basis(), qm);
    let parity = op.basis().parity();
    let pm = parity.map(cr);
    let wron = |i: usize, out: &Outgoing, free_o: &FreeWaveMatrix| -> Result<CMatrix> {
        let r = radii[i];
        let d1 = op.coefficients(r)?.d1;
        let (vals, fac) = match out {
            Outgoing::Factorized(v) => (v, true),
            Outgoing::Direct(v) => (v, false),
        };
        wronskian_against(
            &free_p,
            free_o,
            r,
            (&h_vals[i].0, &h_vals[i].1),
            (&vals[i].0, &vals[i].1),
            fac,
            d1.as_ref(),
        )
    };
    let mut s_at = Vec::with_capacity(radii.len());
    let mut first = None;
    for i in 0..radii.len() {
        let w_p = wron(i, &out_p, &free_p)?;
        let w_m = diag_left(&pm, &wron(i, &out_m, &free_m)?);
        let (wk, wmk) = if flip { (w_m, w_p) } else { (w_p, w_m) };
        let (s, cp, cm) = s_from_wronskians(&wk, &wmk, &parity)?;
        if i == 0 {
            first = Some((wk, wmk, cp, cm));
        }
        s_at.push(s);
    }
    let (wk, wmk, cond_plus, cond_minus) = first.unwrap();
    let fit_sensitivity = s_at.get(1).map(|s1| norm2(&(s1 - &s_at[0])));
    let s_probe = s_at.get(1).cloned();
    Ok(FittedSolve {
        s_probe,
        s: s_at.swap_remove(0),
        wronskian_plus: wk,
        wronskian_minus: wmk,
        cond_plus,
        cond_minus,
        fit_sensitivity,
        geometry: geom,
        steps: steps_h + steps_p + steps_m,
    })
}

/// Integrate through `radii` in the order given by `increasing` and return
/// the states in the caller's order.
fn sampled<F>(
    rhs: F,
    r_start: f64,
    init: (CMatrix, CMatrix),
    radii: &[f64],
    increasing: bool,
    tol: &Tolerances,
) -> Result<Vec<(CMatrix, CMatrix)>>
where
    F: FnMut(f64, &CMatrix, &CMatrix) -> Result<CMatrix>,
{
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| {
        let c = radii[a].total_cmp(&radii[b]);
        if increasing {
            c
        } else {
            c.reverse()
        }
    });
    let stops: Vec<f64> = order.iter().map(|&i| radii[i]).collect();
    let (vals, _) = integrate_legs(rhs, r_start, init, &stops, tol)?;
    let mut out = vec![(CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)); radii.len()];
    for (v, &i) in vals.into_iter().zip(&order) {
        out[i] = v;
    }
    Ok(out)
}

fn check_radii(radii: &[f64], lo: f64, hi: f64) -> Result<()> {
    if radii.iter().any(|&r| !(r >= lo && r <= hi)) {
        return invalid(format!("sample radii must lie in [{lo:.3e}, {hi:.3e}]"));
    }
    Ok(())
}

/// `(G, G')` of the outgoing solution `F = G Ŵ(kr)` at the given radii
/// (between `r_small` and `r_big`), for `Im k ≥ 0`.
pub fn sample_outgoing<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<(CMatrix, CMatrix)>> {
    if k.im < 0.0 {
        return invalid("the factorized outgoing solution is sampled for Im k >= 0 only");
    }
    let geom = opts.geometry(k, op.support_radius(), op.core_radius())?;
    check_radii(radii, geom.r_small, geom.r_big)?;
    let free = FreeWaveMatrix::new(op.basis(), k);
    let n = op.basis().dim();
    let init = (CMatrix::identity(n, n), CMatrix::zeros(n, n));
    sampled(
        outgoing_rhs(op, &free),
        geom.r_big,
        init,
        radii,
        false,
        &opts.tol,
    )
}

/// `(H, H')` of the regular left solution `Φᵗ = Ŵ(kr)⁻¹ H` at the given
/// radii, for `Im k ≥ 0`.
pub fn sample_regular<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<(CMatrix, CMatrix)>> {
    if k.im < 0.0 {
        return invalid("the regular solution is sampled for Im k >= 0 only");
    }
    let geom = opts.geometry(k, op.support_radius(), op.core_radius())?;
    check_radii(radii, geom.r_small, geom.r_big)?;
    let free = FreeWaveMatrix::new(op.basis(), k);
    let init = regular_initial(op, &free, geom.r_small, geom.r0)?;
    sampled(
        regular_rhs(op, &free),
        geom.r_small,
        init,
        radii,
        true,
        &opts.tol,
    )
}

/// `(F, F')` of the outgoing column solution (`F → Ŵ(qr)` outside the
/// source) at the given radii, for either sign of `Im q`.
pub fn sample_outgoing_unfactorized<O: RadialOperator + ?Sized>(
    op: &O,
    q: Complex64,
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<(CMatrix, CMatrix)>> {
    let free = FreeWaveMatrix::new(op.basis(), q);
    if q.im >= 0.0 {
        let g = sample_outgoing(op, q, radii, opts)?;
        return radii
            .iter()
            .zip(g)
            .map(|(&r, (g, gp))| {
                let w = free.diag(r)?;
                let lam = free.log_derivative(r)?;
                Ok((
                    diag_right(&g, &w),
                    diag_right(&(gp + diag_right(&g, &lam)), &w),
                ))
            })
            .collect();
    }
    let geom = opts.geometry(q, op.support_radius(), op.core_radius())?;
    check_radii(radii, geom.r_small, geom.r_big)?;
    let r_start = radii.iter().copied().fold(op.support_radius(), f64::max);
    let init = (
        CMatrix::from_diagonal(&free.diag(r_start)?),
        CMatrix::from_diagonal(&free.diag_deriv(r_start)?),
    );
    sampled(direct_rhs(op, q), r_start, init, radii, false, &opts.tol)
}

/// `(R, R')` of regular column solutions at the given radii, started at
/// `r_small` as `diag ĵ_ℓ(kr)` or, with a first-derivative coupling, as
/// `(r/r₀)^E ĵ(kr₀)` with `E = r R'R⁻¹` from the Frobenius exponents.
pub fn sample_regular_column<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<(CMatrix, CMatrix)>> {
    let geom = opts.geometry(k, op.support_radius(), op.core_radius())?;
    check_radii(radii, geom.r_small, geom.r_big)?;
    let free = FreeWaveMatrix::new(op.basis(), k);
    let r_s = geom.r_small;
    let init = match regular_log_derivative(op, k, r_s)? {
        Some(lr) => {
            let start = diag_right(
                &frobenius_power(&(&lr * cr(r_s)), r_s, geom.r0),
                &free.regular(geom.r0),
            );
            (start.clone(), lr * start)
        }
        None => (
            CMatrix::from_diagonal(&free.regular(r_s)),
            CMatrix::from_diagonal(&free.regular_deriv(r_s)),
        ),
    };
    sampled(
        direct_rhs(op, k),
        geom.r_small,
        init,
        radii,
        true,
        &opts.tol,
    )
}

/// `A = Ŵ⁻¹ G Ŵ` at `r`, computed entrywise so that large and small factors
/// never meet in a sum.
fn conjugated(free: &FreeWaveMatrix, r: f64, g: &CMatrix) -> Result<CMatrix> {
    let ws = free.scaled(r)?;
    let inv = ws.map(|w| cr(1.0) / w);
    Ok(diag_right(&diag_left(&inv, g), &ws))
}

/// Direct route `S = lim_{r→0} Ŵ(kr)⁻¹ G₊⁻¹ G₋ Ŵ(−kr) M̂`, evaluated as
/// `A₊⁻¹ D A₋ M̂` with `A± = Ŵ(±kr)⁻¹ G± Ŵ(±kr)` and `D = Ŵ(kr)⁻¹ Ŵ(−kr)`.
/// The finite-r error is `O(k r)` (from `ℓ = 0`), so the values at `r_tiny`
/// and `r_tiny/2` are Richardson-extrapolated. Intended as a cross-check at
/// real `k`.
pub fn solve_direct<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    r_tiny: f64,
    opts: &SolveOptions,
) -> Result<CMatrix> {
    let geom = opts.geometry(k, op.support_radius(), op.core_radius())?;
    if !(r_tiny > 0.0 && r_tiny < geom.r0) {
        return invalid("r_tiny must lie in (0, r0)");
    }
    let stops = [r_tiny, 0.5 * r_tiny];
    let n = op.basis().dim();
    let run = |kk: Complex64| -> Result<Vec<CMatrix>> {
        let free = FreeWaveMatrix::new(op.basis(), kk);
        let init = (CMatrix::identity(n, n), CMatrix::zeros(n, n));
        let (vals, _) =
            integrate_legs(outgoing_rhs(op, &free), geom.r_big, init, &stops, &opts.tol)?;
        stops
            .iter()
            .zip(&vals)
            .map(|(&r, (g, _))| conjugated(&free, r, g))
            .collect()
    };
    let (ap, am) = rayon::join(|| run(k), || run(-k));
    let (ap, am) = (ap?, am?);
    let free = FreeWaveMatrix::new(op.basis(), k);
    let p = op.basis().parity().map(cr);
    let mut s_at = Vec::with_capacity(2);
    for (i, &r) in stops.iter().enumerate() {
        let (inv, _) = inverse_checked(&ap[i], "conjugated outgoing solution")?;
        s_at.push(inv * diag_right(&diag_left(&free.ratio(r)?, &am[i]), &p));
    }
    Ok(&s_at[1] * cr(2.0) - &s_at[0])
}

/// `−lim_{r→0} Ŵ⁻¹ G Ŵ`, the small-r form of the normalized Wronskian.
pub fn wronskian_small_r_limit<O: RadialOperator + ?Sized>(
    op: &O,
    k: Complex64,
    r_tiny: f64,
    opts: &SolveOptions,
) -> Result<CMatrix> {
    let geom = opts.geometry(k, op.support_radius(), op.core_radius())?;
    let g = integrate_outgoing(op, k, geom.r_big, r_tiny, &opts.tol, &[])?;
    Ok(-conjugated(
        &FreeWaveMatrix::new(op.basis(), k),
        r_tiny,
        &g.m,
    )?)
}

/// The operator of a problem without interaction (useful for checks).
#[derive(Clone, Debug)]
pub struct FreeOperator {
    pub basis: ChannelBasis,
}

impl RadialOperator for FreeOperator {
    fn basis(&self) -> &ChannelBasis {
        &self.basis
    }
    fn coefficients(&self, _r: f64) -> Result<Coefficients> {
        let n = self.basis.dim();
        Ok(Coefficients {
            u: CMatrix::zeros(n, n),
            d1: None,
            d1p: None,
        })
    }
    fn support_radius(&self) -> f64 {
        1.0
    }
    fn core_radius(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_wronskian_is_minus_one() {
        let basis = ChannelBasis::scalar(3, 0);
        for k in [Complex64::new(1.3, 0.0), Complex64::new(0.0, 0.7)] {
            let free = FreeWaveMatrix::new(&basis, k);
            for r in [1e-3, 0.4, 3.0] {
                let (h, hp) = free_regular_initial(&free, r).unwrap();
                let n = basis.dim();
                let w = wronskian(
                    &free,
                    r,
                    (&h, &hp),
                    (&CMatrix::identity(n, n), &CMatrix::zeros(n, n)),
                    None,
                )
                .unwrap();
                assert!((w + CMatrix::identity(n, n)).norm() < 1e-11, "k={k} r={r}");
            }
        }
    }

    #[test]
    fn free_initial_data_is_near_r() {
        let basis = ChannelBasis::vector(2, 0);
        let free = FreeWaveMatrix::new(&basis, Complex64::new(2.0, 0.0));
        let r = 1e-4;
        let (h, hp) = free_regular_initial(&free, r).unwrap();
        for i in 0..basis.dim() {
            assert!((h[(i, i)] / r - 1.0).norm() < 1e-3);
            assert!((hp[(i, i)] - 1.0).norm() < 1e-3);
        }
    }

    #[test]
    fn free_solve_gives_identity() {
        let op = FreeOperator {
            basis: ChannelBasis::scalar(2, 0),
        };
        for k in [Complex64::new(0.5, 0.0), Complex64::new(0.0, 2.0)] {
            let out = solve(&op, k, &SolveOptions::default()).unwrap();
            let n = op.basis.dim();
            assert!((out.s - CMatrix::identity(n, n)).norm() < 1e-8, "k={k}");
        }
    }

    #[test]
    fn geometry_defaults_and_validation() {
        let g = SolveOptions::default()
            .geometry(Complex64::new(2.0, 0.0), 1.8, 1.0)
            .unwrap();
        assert_eq!(g.r0, 0.5);
        assert!((g.r_big - 18.0).abs() < 1e-12);
        assert!((g.r_small - 0.5 / SMALL_DIVISOR / 1.0).abs() < 1e-15);
        assert!(SolveOptions::default()
            .with_r0(100.0)
            .geometry(Complex64::new(1.0, 0.0), 1.0, 1.0)
            .is_err());
        assert!(SolveOptions::default()
            .geometry(Complex64::new(0.0, 0.0), 1.0, 1.0)
            .is_err());
    }
}
