//! k-sweeps through the engines and the tables they produce: eigenphase
//! curves, S-matrix dumps, diagnostics, oracle comparisons and the
//! consistency-check report.
//!
//! A [`RunConfig`] is plain JSON; the command-line front end overlays its
//! flags on top of it with [`Overrides`]. Floats in CSV output are written
//! with 17 significant digits so that runs are reproducible byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{BasisKind, ChannelBasis};
use crate::error::{invalid, Error, Result};
use crate::helmholtz;
use crate::linalg::{self, CMatrix};
use crate::maxwell;
use crate::ode::Tolerances;
use crate::oracles::{s_exact_dielectric_sphere, s_exact_square_well, OracleSpec};
use crate::scattering::{self, ScatteringResult};
use crate::source::{self, DrudeSource, FieldKind, MultipoleField, Source, SourceSpec};
use crate::variable_phase::SolveOptions;

/// Which radial reduction to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Scalar Helmholtz/Schrödinger equation on `(ℓ, m)` channels.
    #[default]
    Scalar,
    /// The same potential on vector `(j, ℓ, m)` channels.
    Vector,
    /// Electromagnetic scattering off a permittivity.
    Maxwell,
}

impl Engine {
    fn field_kind(self) -> FieldKind {
        match self {
            Engine::Scalar | Engine::Vector => FieldKind::Potential,
            Engine::Maxwell => FieldKind::Permittivity,
        }
    }

    fn basis_kind(self) -> BasisKind {
        match self {
            Engine::Scalar => BasisKind::Scalar,
            Engine::Vector | Engine::Maxwell => BasisKind::Vector,
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(Engine::Scalar),
            "vector" => Ok(Engine::Vector),
            "maxwell" => Ok(Engine::Maxwell),
            _ => invalid(format!("unknown engine '{s}' (scalar, vector or maxwell)")),
        }
    }
}

/// Where the source comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceRef {
    /// No scatterer; the field kind follows the engine.
    #[default]
    Vacuum,
    /// A [`SourceSpec`] JSON file, relative to the config file.
    File { path: PathBuf },
    /// A [`SourceSpec`] written out in the config.
    Inline { spec: SourceSpec },
    /// Smoothed spherical well `v0` inside `a`.
    SquareWell { v0: f64, a: f64, s: f64 },
    /// Smoothed dielectric ball `ε = 1 + h` inside `w`.
    SmoothBall { h: f64, w: f64, s: f64 },
    /// The k-dependent deformed Drude sphere.
    DrudeDeformed(DrudeSource),
}

/// The k values to solve at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KSpec {
    /// A single complex wave number, `[re, im]`.
    Value(Complex64),
    /// `num` evenly spaced real values from `min` to `max`.
    Grid { min: f64, max: f64, num: usize },
    /// `k = iκ` for `num` evenly spaced `κ` from `min` to `max`.
    Imag { min: f64, max: f64, num: usize },
}

impl Default for KSpec {
    fn default() -> Self {
        KSpec::Grid {
            min: 0.5,
            max: 3.0,
            num: 10,
        }
    }
}

fn linspace(min: f64, max: f64, num: usize) -> Vec<f64> {
    match num {
        0 => vec![],
        1 => vec![min],
        _ => (0..num)
            .map(|i| min + (max - min) * i as f64 / (num - 1) as f64)
            .collect(),
    }
}

impl KSpec {
    pub fn values(&self) -> Vec<Complex64> {
        match *self {
            KSpec::Value(k) => vec![k],
            KSpec::Grid { min, max, num } => linspace(min, max, num)
                .into_iter()
                .map(|k| Complex64::new(k, 0.0))
                .collect(),
            KSpec::Imag { min, max, num } => linspace(min, max, num)
                .into_iter()
                .map(|k| Complex64::new(0.0, k))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            KSpec::Value(k) => k.is_finite() && k.norm() > 0.0,
            KSpec::Grid { min, max, num } | KSpec::Imag { min, max, num } => {
                num > 0 && min.is_finite() && max.is_finite() && min > 0.0 && max >= min
            }
        };
        if ok {
            Ok(())
        } else {
            invalid("k specification must be a nonempty grid of nonzero values")
        }
    }

    /// Real uniform grids are the ones Δρ can be differentiated on.
    fn is_real_grid(&self) -> bool {
        matches!(self, KSpec::Grid { num, .. } if *num >= 2)
    }
}

/// Pass thresholds for [`run_checks`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckTolerances {
    pub unitarity: f64,
    pub commutator: f64,
    pub fitting_point: f64,
    /// Eigenphase deviation in radians (relative deviation off the real axis).
    pub oracle: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-6,
            commutator: 1e-5,
            fitting_point: 1e-6,
            oracle: 1e-2,
        }
    }
}

/// Everything needed for a sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub engine: Engine,
    pub source: SourceRef,
    /// `ℓmax` (scalar) or `jmax` (vector, Maxwell).
    #[serde(alias = "lmax", alias = "jmax")]
    pub max: Option<u32>,
    /// Override of the source multipole order used to pad the basis.
    pub source_lmax: Option<u32>,
    pub k: KSpec,
    pub r0: Option<f64>,
    pub tolerances: Tolerances,
    /// Closed form to compare against; inferred from the source if absent
    /// and [`compare_oracle`](Self::compare_oracle) is set.
    pub oracle: Option<OracleSpec>,
    pub compare_oracle: bool,
    pub checks: CheckTolerances,
    pub out: Option<PathBuf>,
    /// Directory relative paths in the config are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub engine: Option<Engine>,
    pub k: Option<KSpec>,
    pub max: Option<u32>,
    pub r0: Option<f64>,
    pub oracle: bool,
    pub out: Option<PathBuf>,
}

/// Default `ℓmax`/`jmax` when neither the config nor the flags give one.
pub const DEFAULT_MAX: u32 = 2;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Flags override config fields, which override defaults.
    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(e) = o.engine {
            self.engine = e;
        }
        if let Some(k) = &o.k {
            self.k = k.clone();
        }
        if o.max.is_some() {
            self.max = o.max;
        }
        if o.r0.is_some() {
            self.r0 = o.r0;
        }
        if o.oracle {
            self.compare_oracle = true;
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.k.validate()?;
        self.tolerances.validate()?;
        if let Some(r0) = self.r0 {
            if !(r0 > 0.0 && r0.is_finite()) {
                return invalid("r0 must be positive");
            }
        }
        if let Some(o) = &self.oracle {
            o.validate()?;
        }
        let c = &self.checks;
        if ![c.unitarity, c.commutator, c.fitting_point, c.oracle]
            .iter()
            .all(|&t| t > 0.0)
        {
            return invalid("check tolerances must be positive");
        }
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            r0: self.r0,
            tol: self.tolerances,
            ..SolveOptions::default()
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// Instantiate the source, checking it suits the engine.
    pub fn build_source(&self) -> Result<Box<dyn Source>> {
        let kind = self.engine.field_kind();
        let src: Box<dyn Source> = match &self.source {
            SourceRef::Vacuum => Box::new(MultipoleField::vacuum(kind)),
            SourceRef::File { path } => Box::new(MultipoleField::from_json(&fs::read_to_string(
                self.resolve(path),
            )?)?),
            SourceRef::Inline { spec } => Box::new(MultipoleField::from_spec(spec.clone())?),
            SourceRef::SquareWell { v0, a, s } => Box::new(source::square_well(*v0, *a, *s)?),
            SourceRef::SmoothBall { h, w, s } => Box::new(source::smooth_ball(*h, *w, *s)?),
            SourceRef::DrudeDeformed(d) => Box::new(d.clone()),
        };
        if src.kind() != kind {
            return invalid(format!(
                "the {:?} engine needs a {kind:?} source",
                self.engine
            ));
        }
        Ok(src)
    }

    /// The oracle to compare with, explicit or inferred from a named source.
    pub fn oracle_spec(&self) -> Option<OracleSpec> {
        if self.oracle.is_some() {
            return self.oracle;
        }
        if !self.compare_oracle {
            return None;
        }
        match (&self.source, self.engine) {
            (SourceRef::SquareWell { v0, a, .. }, Engine::Scalar | Engine::Vector) => {
                Some(OracleSpec::SquareWell { v0: *v0, a: *a })
            }
            (SourceRef::SmoothBall { h, w, .. }, Engine::Maxwell) if *h > -1.0 => {
                Some(OracleSpec::DielectricSphere {
                    n: (1.0 + h).sqrt(),
                    a: *w,
                })
            }
            (SourceRef::Vacuum, Engine::Maxwell) => {
                Some(OracleSpec::DielectricSphere { n: 1.0, a: 1.0 })
            }
            (SourceRef::Vacuum, _) => Some(OracleSpec::SquareWell { v0: 0.0, a: 1.0 }),
            _ => None,
        }
    }

    fn basis(&self, src: &dyn Source, k: Complex64) -> Result<ChannelBasis> {
        let field = src.field_at(k)?;
        let lsrc = self
            .source_lmax
            .unwrap_or(field.source_lmax().max(0) as u32);
        let max = self.max.unwrap_or(DEFAULT_MAX);
        Ok(match self.engine.basis_kind() {
            BasisKind::Scalar => ChannelBasis::scalar(max, lsrc),
            BasisKind::Vector => ChannelBasis::vector(max, lsrc),
        })
    }
}

/// Solve one k with the configured engine.
pub fn solve_point(
    engine: Engine,
    src: &dyn Source,
    basis: &ChannelBasis,
    k: Complex64,
    opts: &SolveOptions,
) -> Result<ScatteringResult> {
    match engine {
        Engine::Scalar | Engine::Vector => helmholtz::s_matrix(&src.field_at(k)?, basis, k, opts),
        Engine::Maxwell => maxwell::maxwell_s_matrix_for(src, basis, k, opts),
    }
}

/// One row of the eigenphase table.
#[derive(Clone, Debug, Serialize)]
pub struct EigenphaseRow {
    pub k: Complex64,
    /// Label of the channel that dominates the eigenvector.
    pub label: String,
    /// Branch index after continuity tracking.
    pub branch: usize,
    pub delta: f64,
    pub modulus: f64,
}

/// Engine-vs-closed-form comparison for one channel at one k.
#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub k: Complex64,
    pub label: String,
    pub engine: Complex64,
    pub oracle: Complex64,
    /// `½|arg(S/S_exact)|` on the real axis, `|S − S_exact|/max(|S_exact|, 1)` off it.
    pub deviation: f64,
}

/// The outcome of a sweep, in k order.
pub struct SweepOutput {
    pub engine: Engine,
    pub ks: Vec<Complex64>,
    pub results: Vec<Result<ScatteringResult>>,
    pub eigenphases: Vec<EigenphaseRow>,
    pub oracle: Vec<OracleRow>,
    /// `(k, Δρ)` when the grid is real and uniform and every point solved.
    pub density_of_states: Option<Vec<(f64, f64)>>,
}

impl SweepOutput {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.is_err()).count()
    }

    /// Largest oracle deviation, if any comparison was made.
    pub fn max_oracle_deviation(&self) -> Option<f64> {
        self.oracle.iter().map(|r| r.deviation).reduce(f64::max)
    }
}

/// Run the configured sweep; k points are solved in parallel.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepOutput> {
    run_sweep_with_progress(cfg, &AtomicUsize::new(0))
}

/// [`run_sweep`] that counts finished k points in `progress`.
pub fn run_sweep_with_progress(cfg: &RunConfig, progress: &AtomicUsize) -> Result<SweepOutput> {
    cfg.validate()?;
    let src = cfg.build_source()?;
    let ks = cfg.k.values();
    let basis = cfg.basis(src.as_ref(), ks[0])?;
    let opts = cfg.solve_options();
    let results: Vec<Result<ScatteringResult>> = ks
        .par_iter()
        .map(|&k| {
            let r = solve_point(cfg.engine, src.as_ref(), &basis, k, &opts);
            progress.fetch_add(1, Ordering::Relaxed);
            r
        })
        .collect();
    let eigenphases = eigenphase_rows(&ks, &results)?;
    let oracle = match cfg.oracle_spec() {
        Some(spec) => oracle_rows(spec, &ks, &results)?,
        None => vec![],
    };
    let density_of_states = if cfg.k.is_real_grid() && results.iter().all(|r| r.is_ok()) {
        let kr: Vec<f64> = ks.iter().map(|k| k.re).collect();
        let s: Vec<CMatrix> = results
            .iter()
            .flatten()
            .map(|r| r.physical_s().clone())
            .collect();
        let d = scattering::density_of_states_delta(&kr, &s)?;
        Some(kr.into_iter().zip(d).collect())
    } else {
        None
    };
    Ok(SweepOutput {
        engine: cfg.engine,
        ks,
        results,
        eigenphases,
        oracle,
        density_of_states,
    })
}

fn eigenphase_rows(
    ks: &[Complex64],
    results: &[Result<ScatteringResult>],
) -> Result<Vec<EigenphaseRow>> {
    let ok: Vec<(Complex64, &ScatteringResult)> = ks
        .iter()
        .zip(results)
        .filter_map(|(k, r)| r.as_ref().ok().map(|r| (*k, r)))
        .collect();
    let eigen = ok
        .iter()
        .map(|(_, r)| r.physical_eigen())
        .collect::<Result<Vec<_>>>()?;
    let tracked = scattering::track_eigenphases(&eigen);
    let mut rows = Vec::new();
    for (i, ((k, res), (_, vecs))) in ok.iter().zip(&eigen).enumerate() {
        let labels = res.physical_labels();
        for b in 0..tracked.phases.len() {
            let delta = tracked.phases[b][i];
            let modulus = tracked.moduli[b][i];
            let col = tracked.columns[b][i];
            let dominant = vecs
                .column(col)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .map(|(i, _)| i);
            let label = dominant
                .and_then(|d| labels.get(d).cloned())
                .unwrap_or_default();
            rows.push(EigenphaseRow {
                k: *k,
                label,
                branch: b,
                delta,
                modulus,
            });
        }
    }
    Ok(rows)
}

/// `(j, δ)` from a projected label such as `j=2 m=-1 N`.
fn polarized_label(label: &str) -> Option<(u32, i32)> {
    let j = label
        .strip_prefix("j=")?
        .split_whitespace()
        .next()?
        .parse()
        .ok()?;
    let delta = match label.rsplit(' ').next()? {
        "M" => 1,
        "N" => -1,
        _ => return None,
    };
    Some((j, delta))
}

/// `ℓ` from a scalar (`l=1 m=0`) or vector (`j=1 l=0 m=0`) channel label.
fn ell_label(label: &str) -> Option<u32> {
    label
        .split_whitespace()
        .find_map(|t| t.strip_prefix("l="))
        .and_then(|v| v.parse().ok())
}

fn oracle_rows(
    spec: OracleSpec,
    ks: &[Complex64],
    results: &[Result<ScatteringResult>],
) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    for (k, res) in ks.iter().zip(results) {
        let Ok(res) = res else { continue };
        let s = res.physical_s();
        for (i, label) in res.physical_labels().iter().enumerate() {
            let exact = match spec {
                OracleSpec::SquareWell { v0, a } => match ell_label(label) {
                    Some(l) if res.projected.is_none() => s_exact_square_well(l, *k, v0, a)?,
                    _ => continue,
                },
                OracleSpec::DielectricSphere { n, a } => match polarized_label(label) {
                    Some((j, delta)) => s_exact_dielectric_sphere(j, delta, *k, n, a)?,
                    None => continue,
                },
            };
            let got = s[(i, i)];
            let deviation = if k.im == 0.0 {
                0.5 * (got / exact).arg().abs()
            } else {
                (got - exact).norm() / exact.norm().max(1.0)
            };
            rows.push(OracleRow {
                k: *k,
                label: label.clone(),
                engine: got,
                oracle: exact,
                deviation,
            });
        }
    }
    Ok(rows)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Dump of one S-matrix for downstream consumers.
#[derive(Serialize)]
struct MatrixDump {
    k: [f64; 2],
    error: Option<String>,
    labels: Vec<String>,
    /// Row-major real and imaginary parts.
    re: Vec<f64>,
    im: Vec<f64>,
    projected: Option<ProjectedDump>,
}

#[derive(Serialize)]
struct ProjectedDump {
    labels: Vec<String>,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn row_major(m: &CMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(m.len());
    let mut im = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            re.push(m[(i, j)].re);
            im.push(m[(i, j)].im);
        }
    }
    (re, im)
}

#[derive(Serialize)]
struct SweepDump<'a> {
    engine: Engine,
    basis: Option<&'a ChannelBasis>,
    points: Vec<MatrixDump>,
}

/// Files written by [`write_outputs`].
pub const EIGENPHASES_CSV: &str = "eigenphases.csv";
pub const SMATRIX_JSON: &str = "smatrix.json";
pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";
pub const ORACLE_CSV: &str = "oracle.csv";
pub const DOS_CSV: &str = "dos.csv";

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Write the eigenphase, S-matrix, diagnostics and (when present) oracle and
/// Δρ tables into `dir`; returns the paths written.
pub fn write_outputs(out: &SweepOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join(EIGENPHASES_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record(["k_re", "k_im", "label", "branch", "delta", "modulus"])
        .map_err(csv_error)?;
    for r in &out.eigenphases {
        w.write_record([
            fmt(r.k.re),
            fmt(r.k.im),
            r.label.clone(),
            r.branch.to_string(),
            fmt(r.delta),
            fmt(r.modulus),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join(DIAGNOSTICS_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "k_re",
        "k_im",
        "status",
        "unitarity_residual",
        "commutator_norm",
        "fit_sensitivity",
        "cond_wronskian_plus",
        "cond_wronskian_minus",
        "cond_d2",
        "steps",
        "r_small",
        "r0",
        "r_big",
        "message",
    ])
    .map_err(csv_error)?;
    for (k, res) in out.ks.iter().zip(&out.results) {
        let rec = match res {
            Ok(r) => {
                let d = &r.diagnostics;
                vec![
                    fmt(k.re),
                    fmt(k.im),
                    "ok".into(),
                    fmt(d.unitarity_residual),
                    fmt_opt(d.commutator_norm),
                    fmt_opt(d.fit_sensitivity),
                    fmt(d.cond_wronskian_plus),
                    fmt(d.cond_wronskian_minus),
                    fmt_opt(d.cond_d2),
                    d.steps.to_string(),
                    fmt(d.r_small),
                    fmt(d.r0),
                    fmt(d.r_big),
                    d.warnings.join("; "),
                ]
            }
            Err(e) => {
                let mut v = vec![fmt(k.re), fmt(k.im), "error".into()];
                v.extend(std::iter::repeat_n(String::new(), 10));
                v.push(e.to_string());
                v
            }
        };
        w.write_record(rec).map_err(csv_error)?;
    }
    w.flush()?;
    written.push(path);

    let basis = out
        .results
        .iter()
        .find_map(|r| r.as_ref().ok())
        .map(|r| &r.basis);
    let points = out
        .ks
        .iter()
        .zip(&out.results)
        .map(|(k, res)| match res {
            Ok(r) => {
                let (re, im) = row_major(&r.s);
                let projected = r.projected.as_ref().map(|p| {
                    let (re, im) = row_major(&p.s);
                    ProjectedDump {
                        labels: p.labels.clone(),
                        re,
                        im,
                    }
                });
                MatrixDump {
                    k: [k.re, k.im],
                    error: None,
                    labels: r.basis.labels(),
                    re,
                    im,
                    projected,
                }
            }
            Err(e) => MatrixDump {
                k: [k.re, k.im],
                error: Some(e.to_string()),
                labels: vec![],
                re: vec![],
                im: vec![],
                projected: None,
            },
        })
        .collect();
    let path = dir.join(SMATRIX_JSON);
    fs::write(
        &path,
        serde_json::to_string_pretty(&SweepDump {
            engine: out.engine,
            basis,
            points,
        })?,
    )?;
    written.push(path);

    if !out.oracle.is_empty() {
        let path = dir.join(ORACLE_CSV);
        let mut w = csv_writer(&path)?;
        w.write_record([
            "k_re",
            "k_im",
            "label",
            "engine_re",
            "engine_im",
            "oracle_re",
            "oracle_im",
            "deviation",
        ])
        .map_err(csv_error)?;
        for r in &out.oracle {
            w.write_record([
                fmt(r.k.re),
                fmt(r.k.im),
                r.label.clone(),
                fmt(r.engine.re),
                fmt(r.engine.im),
                fmt(r.oracle.re),
                fmt(r.oracle.im),
                fmt(r.deviation),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        written.push(path);
    }

    if let Some(dos) = &out.density_of_states {
        let path = dir.join(DOS_CSV);
        let mut w = csv_writer(&path)?;
        w.write_record(["k", "delta_rho"]).map_err(csv_error)?;
        for (k, d) in dos {
            w.write_record([fmt(*k), fmt(*d)]).map_err(csv_error)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// One measured consistency check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub k: Complex64,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Machine-readable result of [`run_checks`].
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Unitarity (real sources at real k), projector commutation (Maxwell),
/// fitting-point independence under `r₀ → 2r₀`, and agreement with the
/// closed form when one applies.
pub fn run_checks(cfg: &RunConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let src = cfg.build_source()?;
    let ks = cfg.k.values();
    let basis = cfg.basis(src.as_ref(), ks[0])?;
    let opts = cfg.solve_options();
    let tol = cfg.checks;
    let oracle = cfg.oracle_spec();
    let per_k: Vec<Vec<Check>> = ks
        .par_iter()
        .map(|&k| {
            let mut out = Vec::new();
            let mut add = |name: &str, value: f64, tolerance: f64, message: Option<String>| {
                out.push(Check {
                    name: name.into(),
                    k,
                    value,
                    tolerance,
                    passed: value.is_finite() && value < tolerance,
                    message,
                })
            };
            let base = match solve_point(cfg.engine, src.as_ref(), &basis, k, &opts) {
                Ok(r) => r,
                Err(e) => {
                    add("solve", f64::INFINITY, 0.0, Some(e.to_string()));
                    return out;
                }
            };
            let real_source = src.field_at(k).map(|f| f.is_real()).unwrap_or(false);
            if k.im == 0.0 && real_source {
                add(
                    "unitarity",
                    base.diagnostics.unitarity_residual,
                    tol.unitarity,
                    None,
                );
            }
            if let Some(c) = base.diagnostics.commutator_norm {
                add("projector_commutator", c, tol.commutator, None);
            }
            let moved = SolveOptions {
                r0: Some(2.0 * base.diagnostics.r0),
                ..opts.clone()
            };
            match solve_point(cfg.engine, src.as_ref(), &basis, k, &moved) {
                Ok(r2) => {
                    let d = linalg::norm2(&(r2.physical_s() - base.physical_s()));
                    add("fitting_point", d, tol.fitting_point, None);
                }
                Err(e) => add(
                    "fitting_point",
                    f64::INFINITY,
                    tol.fitting_point,
                    Some(e.to_string()),
                ),
            }
            if let Some(spec) = oracle {
                let results = [Ok(base)];
                match oracle_rows(spec, &[k], &results) {
                    Ok(rows) => {
                        let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
                        add("oracle", worst, tol.oracle, None);
                    }
                    Err(e) => add("oracle", f64::INFINITY, tol.oracle, Some(e.to_string())),
                }
            }
            out
        })
        .collect();
    let checks: Vec<Check> = per_k.into_iter().flatten().collect();
    Ok(CheckReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Closed-form S values over a list of k for the `oracle` command.
pub fn oracle_table(
    spec: OracleSpec,
    channel: u32,
    polarization: i32,
    ks: &[Complex64],
) -> Result<Vec<(Complex64, Complex64)>> {
    spec.validate()?;
    ks.iter()
        .map(|&k| {
            let s = match spec {
                OracleSpec::SquareWell { v0, a } => s_exact_square_well(channel, k, v0, a)?,
                OracleSpec::DielectricSphere { n, a } => {
                    s_exact_dielectric_sphere(channel, polarization, k, n, a)?
                }
            };
            Ok((k, s))
        })
        .collect()
}

/// CSV text of an oracle table: `k_re,k_im,s_re,s_im,delta`.
pub fn oracle_csv(rows: &[(Complex64, Complex64)]) -> String {
    let mut text = String::from("k_re,k_im,s_re,s_im,delta\n");
    for (k, s) in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(k.re),
            fmt(k.im),
            fmt(s.re),
            fmt(s.im),
            fmt(0.5 * s.arg())
        ));
    }
    text
}
