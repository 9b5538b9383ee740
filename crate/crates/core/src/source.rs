//! Scattering sources as multipole moment functions.
//!
//! A source `f(r⃗) = Σ_{ℓm} f_{ℓm}(r) Y_ℓ^m(θ, φ)` is stored as a list of
//! moments, each a sum of `coefficient × profile(r)` terms with analytic
//! first and second radial derivatives. For a permittivity the listed
//! moments describe `ε − 1`; the vacuum monopole `√(4π)` is always added to
//! `ε₀₀`, so `ε → 1` far from the source by construction.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Value and first two radial derivatives of a moment at one radius.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl Jet {
    fn scale(self, c: Complex64) -> Self {
        Jet {
            v: self.v * c,
            d1: self.d1 * c,
            d2: self.d2 * c,
        }
    }
}

impl std::ops::AddAssign for Jet {
    fn add_assign(&mut self, o: Self) {
        self.v += o.v;
        self.d1 += o.d1;
        self.d2 += o.d2;
    }
}

/// Natural cubic spline through tabulated samples.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CubicSpline {
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(skip)]
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut s = Self {
            r,
            values,
            m: Vec::new(),
        };
        s.prepare()?;
        Ok(s)
    }

    fn prepare(&mut self) -> Result<()> {
        let n = self.r.len();
        if n < 3 || n != self.values.len() {
            return invalid("tabulated profile needs at least 3 samples and matching lengths");
        }
        if self.r.windows(2).any(|w| w[1] <= w[0]) || self.r[0] < 0.0 {
            return invalid("tabulated radii must be nonnegative and strictly increasing");
        }
        // Tridiagonal solve for second derivatives with natural end conditions.
        let (r, y) = (&self.r, &self.values);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut m = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = r[i] - r[i - 1];
            let h1 = r[i + 1] - r[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        self.m = m;
        Ok(())
    }

    fn jet(&self, x: f64) -> (f64, f64, f64) {
        let n = self.r.len();
        if x > self.r[n - 1] {
            return (0.0, 0.0, 0.0);
        }
        let i = match self.r.partition_point(|&ri| ri <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - x) / h, (x - x0) / h);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2 = a * m0 + b * m1;
        (v, d1, d2)
    }
}

/// A named radial profile.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "profile", content = "params", rename_all = "snake_case")]
pub enum Profile {
    /// `amplitude · (1 − tanh[s(r − radius)])/2`.
    TanhStep {
        amplitude: f64,
        radius: f64,
        steepness: f64,
    },
    /// `amplitude · exp(−(r − center)²/(2 width²))`.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Natural cubic spline through samples; zero beyond the last radius.
    Tabulated(CubicSpline),
}

impl Profile {
    pub fn validate(&mut self) -> Result<()> {
        match self {
            Profile::TanhStep {
                radius, steepness, ..
            } => {
                if *radius <= 0.0 || *steepness <= 0.0 {
                    return invalid("tanh step needs positive radius and steepness");
                }
            }
            Profile::Gaussian { width, center, .. } => {
                if *width <= 0.0 || *center < 0.0 {
                    return invalid("gaussian needs positive width and nonnegative center");
                }
            }
            Profile::Tabulated(s) => s.prepare()?,
        }
        Ok(())
    }

    pub fn jet(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Profile::TanhStep {
                amplitude,
                radius,
                steepness: s,
            } => {
                let t = (s * (r - radius)).tanh();
                let sech2 = 1.0 - t * t;
                (
                    amplitude * (1.0 - t) * 0.5,
                    -amplitude * 0.5 * s * sech2,
                    amplitude * s * s * sech2 * t,
                )
            }
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let u = (r - center) / width;
                let g = amplitude * (-0.5 * u * u).exp();
                (g, -g * u / width, g * (u * u - 1.0) / (width * width))
            }
            Profile::Tabulated(ref s) => s.jet(r),
        }
    }

    /// Radius beyond which the profile is below ~1e−10 relative.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Profile::TanhStep {
                radius, steepness, ..
            } => radius + 40.0 / steepness,
            Profile::Gaussian { center, width, .. } => center + 7.0 * width,
            Profile::Tabulated(ref s) => *s.r.last().unwrap_or(&0.0),
        }
    }

    /// Characteristic size of the source's body.
    pub fn core_radius(&self) -> f64 {
        match *self {
            Profile::TanhStep { radius, .. } => radius,
            Profile::Gaussian { center, width, .. } => center + width,
            Profile::Tabulated(ref s) => 0.5 * *s.r.last().unwrap_or(&0.0),
        }
    }
}

/// Whether a field is a Schrödinger/Helmholtz potential or a permittivity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Potential,
    Permittivity,
}

/// One term `coefficient · profile(r)` contributing to moment `(ℓ, m)`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MomentTerm {
    pub l: i32,
    pub m: i32,
    #[serde(default = "one")]
    pub coefficient: Complex64,
    #[serde(flatten)]
    pub profile: Profile,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// JSON source specification:
/// `{"kind": "potential", "moments": [{"l":0,"m":0,"profile":"tanh_step","params":{…}}], "support_radius": 2.0}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SourceSpec {
    pub kind: FieldKind,
    #[serde(default)]
    pub moments: Vec<MomentTerm>,
    #[serde(default)]
    pub support_radius: Option<f64>,
}

/// A localized source as multipole moments with analytic radial derivatives.
#[derive(Clone, Debug)]
pub struct MultipoleField {
    kind: FieldKind,
    /// Sorted distinct `(ℓ, m)` with their terms.
    moments: BTreeMap<(i32, i32), Vec<(Complex64, Profile)>>,
    support_radius: f64,
    core_radius: f64,
}

const SQRT_4PI: f64 = 3.5449077018110318;

pub fn sqrt_4pi() -> f64 {
    SQRT_4PI
}

impl MultipoleField {
    /// A source with no moments: vacuum (`V = 0` or `ε = 1`).
    pub fn vacuum(kind: FieldKind) -> Self {
        Self {
            kind,
            moments: BTreeMap::new(),
            support_radius: 1.0,
            core_radius: 1.0,
        }
    }

    pub fn from_spec(spec: SourceSpec) -> Result<Self> {
        let mut f = Self::vacuum(spec.kind);
        let mut support: f64 = 0.0;
        let mut core: f64 = 0.0;
        for mut t in spec.moments {
            if t.l < 0 || t.m.abs() > t.l {
                return invalid(format!("invalid moment (l={}, m={})", t.l, t.m));
            }
            t.profile.validate()?;
            support = support.max(t.profile.support_radius());
            core = core.max(t.profile.core_radius());
            f.moments
                .entry((t.l, t.m))
                .or_default()
                .push((t.coefficient, t.profile));
        }
        if let Some(r) = spec.support_radius {
            if r <= 0.0 {
                return invalid("support_radius must be positive");
            }
            support = r;
        }
        if support > 0.0 {
            f.support_radius = support;
            f.core_radius = if core > 0.0 {
                core.min(support)
            } else {
                0.5 * support
            };
        }
        Ok(f)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(text)?)
    }

    /// Add a term to moment `(ℓ, m)`.
    pub fn add_term(
        &mut self,
        l: i32,
        m: i32,
        coefficient: Complex64,
        profile: Profile,
    ) -> Result<()> {
        let mut profile = profile;
        if l < 0 || m.abs() > l {
            return invalid(format!("invalid moment (l={l}, m={m})"));
        }
        profile.validate()?;
        if self.moments.is_empty() {
            self.support_radius = profile.support_radius();
            self.core_radius = profile.core_radius();
        } else {
            self.support_radius = self.support_radius.max(profile.support_radius());
            self.core_radius = self.core_radius.max(profile.core_radius());
        }
        self.moments
            .entry((l, m))
            .or_default()
            .push((coefficient, profile));
        Ok(())
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// Sorted `(ℓ, m)` pairs that are (or may be) nonzero, including the
    /// vacuum monopole of a permittivity.
    pub fn pattern(&self) -> Vec<(i32, i32)> {
        let mut p: Vec<(i32, i32)> = self.moments.keys().copied().collect();
        if self.kind == FieldKind::Permittivity && !self.moments.contains_key(&(0, 0)) {
            p.insert(0, (0, 0));
        }
        p
    }

    pub fn source_lmax(&self) -> i32 {
        self.moments.keys().map(|&(l, _)| l).max().unwrap_or(0)
    }

    pub fn is_vacuum(&self) -> bool {
        self.moments.values().flatten().all(|(c, p)| match p {
            Profile::TanhStep { amplitude, .. } | Profile::Gaussian { amplitude, .. } => {
                *c == Complex64::new(0.0, 0.0) || *amplitude == 0.0
            }
            Profile::Tabulated(s) => {
                *c == Complex64::new(0.0, 0.0) || s.values.iter().all(|v| *v == 0.0)
            }
        })
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn core_radius(&self) -> f64 {
        self.core_radius
    }

    /// Moment `(ℓ, m)` at radius `r` with derivatives; includes the vacuum
    /// monopole for permittivities.
    pub fn moment(&self, l: i32, m: i32, r: f64) -> Jet {
        let mut j = Jet::default();
        if self.kind == FieldKind::Permittivity && (l, m) == (0, 0) {
            j.v = Complex64::new(SQRT_4PI, 0.0);
        }
        if let Some(terms) = self.moments.get(&(l, m)) {
            for (c, p) in terms {
                let (v, d1, d2) = p.jet(r);
                j += Jet {
                    v: Complex64::new(v, 0.0),
                    d1: Complex64::new(d1, 0.0),
                    d2: Complex64::new(d2, 0.0),
                }
                .scale(*c);
            }
        }
        j
    }

    /// All moments of [`pattern`](Self::pattern) at `r`, in pattern order.
    pub fn eval(&self, r: f64) -> Vec<Jet> {
        self.pattern()
            .into_iter()
            .map(|(l, m)| self.moment(l, m, r))
            .collect()
    }

    /// Asymptotic value of moment `(ℓ, m)`.
    pub fn asymptotic(&self, l: i32, m: i32) -> Complex64 {
        if self.kind == FieldKind::Permittivity && (l, m) == (0, 0) {
            Complex64::new(SQRT_4PI, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Whether `f_{ℓ,−m} = (−1)^m f_{ℓm}*` holds for all stored moments,
    /// checked at a handful of radii.
    pub fn is_real(&self) -> bool {
        let radii = [0.1, 0.5, 1.0, 2.0].map(|x| x * self.core_radius.max(1e-3));
        self.moments.keys().all(|&(l, m)| {
            radii.iter().all(|&r| {
                let a = self.moment(l, m, r).v;
                let b = self.moment(l, -m, r).v;
                let s = if m % 2 == 0 { 1.0 } else { -1.0 };
                (a.conj() * s - b).norm() <= 1e-12 * (1.0 + a.norm())
            })
        })
    }

    /// Copy of the field with moment `(ℓ, m)` removed.
    pub fn without_moment(&self, l: i32, m: i32) -> Self {
        let mut f = self.clone();
        f.moments.remove(&(l, m));
        f
    }

    /// Potential or permittivity value at a point, summing `f_{ℓm} Y_ℓ^m`.
    pub fn value_at(&self, r: f64, theta: f64, phi: f64) -> Complex64 {
        self.pattern()
            .into_iter()
            .map(|(l, m)| {
                self.moment(l, m, r).v * crate::angular::spherical_harmonic(l, m, theta, phi)
            })
            .sum()
    }
}

/// Smooth dielectric ball: `ε₀₀ = √(4π)(1 + h(1 − tanh[s(r − w)])/2)`.
pub fn smooth_ball(h: f64, w: f64, s: f64) -> Result<MultipoleField> {
    if w <= 0.0 || s <= 0.0 {
        return invalid("smooth ball needs w > 0 and s > 0");
    }
    let mut f = MultipoleField::vacuum(FieldKind::Permittivity);
    f.add_term(
        0,
        0,
        Complex64::new(SQRT_4PI * h, 0.0),
        Profile::TanhStep {
            amplitude: 1.0,
            radius: w,
            steepness: s,
        },
    )?;
    Ok(f)
}

/// Smoothed spherical square well: `V₀₀ = √(4π) V₀ (1 − tanh[s(r − a)])/2`.
pub fn square_well(v0: f64, a: f64, s: f64) -> Result<MultipoleField> {
    if a <= 0.0 || s <= 0.0 {
        return invalid("square well needs a > 0 and s > 0");
    }
    let mut f = MultipoleField::vacuum(FieldKind::Potential);
    f.add_term(
        0,
        0,
        Complex64::new(SQRT_4PI * v0, 0.0),
        Profile::TanhStep {
            amplitude: 1.0,
            radius: a,
            steepness: s,
        },
    )?;
    Ok(f)
}

/// Branch used for `√(−k²)` in the Drude prefactor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrudeBranch {
    /// Principal square root; on the real axis `−k²` is taken with a `+0`
    /// imaginary part, so `√(−k²) = i|k|`.
    #[default]
    Principal,
    /// `√(−k²) = −ik`: the continuation from the upper half plane, which
    /// makes the medium passive on the real axis.
    Causal,
}

/// Drude prefactor `(2π)² / [(π/σp)√(−k²) − (λp k)²]`.
pub fn drude_prefactor(
    lambda_p: f64,
    sigma_p: f64,
    k: Complex64,
    branch: DrudeBranch,
) -> Result<Complex64> {
    if lambda_p <= 0.0 || sigma_p <= 0.0 {
        return invalid("Drude parameters must be positive");
    }
    if k == Complex64::new(0.0, 0.0) {
        return invalid("Drude model needs k != 0");
    }
    let root = match branch {
        DrudeBranch::Principal => {
            let mut z = -(k * k);
            if z.im == 0.0 {
                z.im = 0.0; // drop a negative zero so the cut is approached from above
            }
            z.sqrt()
        }
        DrudeBranch::Causal => -Complex64::i() * k,
    };
    let denom = root * (PI / sigma_p) - (k * lambda_p) * (k * lambda_p);
    if denom.norm() < 1e-300 || !denom.is_finite() {
        return Err(Error::SingularParameter(format!(
            "Drude denominator vanishes at k = {k}"
        )));
    }
    Ok(Complex64::new(4.0 * PI * PI, 0.0) / denom)
}

/// Deformed Drude sphere: `ε₀₀ = √(4π) + P·√(4π)·p(r)`, `ε₁₀ = P·p(r)` with
/// `p(r) = (1 − tanh[s(r − w)])/2` and `P` the Drude prefactor at `k`.
pub fn drude_deformed(
    lambda_p: f64,
    sigma_p: f64,
    w: f64,
    s: f64,
    k: Complex64,
    branch: DrudeBranch,
) -> Result<MultipoleField> {
    if w <= 0.0 || s <= 0.0 {
        return invalid("Drude profile needs w > 0 and s > 0");
    }
    let pref = drude_prefactor(lambda_p, sigma_p, k, branch)?;
    let step = Profile::TanhStep {
        amplitude: 1.0,
        radius: w,
        steepness: s,
    };
    let mut f = MultipoleField::vacuum(FieldKind::Permittivity);
    f.add_term(0, 0, pref * SQRT_4PI, step.clone())?;
    f.add_term(1, 0, pref, step)?;
    Ok(f)
}

/// Anything that yields a (possibly k-dependent) multipole source.
pub trait Source: Send + Sync {
    fn field_at(&self, k: Complex64) -> Result<MultipoleField>;
    fn kind(&self) -> FieldKind;
}

impl Source for MultipoleField {
    fn field_at(&self, _k: Complex64) -> Result<MultipoleField> {
        Ok(self.clone())
    }
    fn kind(&self) -> FieldKind {
        self.kind
    }
}

/// The k-dependent deformed Drude sphere.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DrudeSource {
    pub lambda_p: f64,
    pub sigma_p: f64,
    pub w: f64,
    pub s: f64,
    #[serde(default)]
    pub zero_dipole: bool,
    #[serde(default)]
    pub branch: DrudeBranch,
}

impl Source for DrudeSource {
    fn field_at(&self, k: Complex64) -> Result<MultipoleField> {
        let f = drude_deformed(self.lambda_p, self.sigma_p, self.w, self.s, k, self.branch)?;
        Ok(if self.zero_dipole {
            f.without_moment(1, 0)
        } else {
            f
        })
    }
    fn kind(&self) -> FieldKind {
        FieldKind::Permittivity
    }
}
