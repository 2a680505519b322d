//! Scenario configuration: TOML with nested tables and formula strings.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientRef, AmbientSurface, BoundaryCurve, Domain, Point};
use crate::error::{Error, Result};
use crate::family::TestFamily;
use crate::flow::FlowConfig;
use crate::inequality::SamplerConfig;
use crate::mesh::MeshSurface;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, rename = "scenario", skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    CheckBall,
    CheckLinear,
    CheckNonlinear,
    EstimateConstant,
    Dichotomy,
    Avoidance,
    CompactnessProbe,
    Stability,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::CheckBall => "check-ball",
            Kind::CheckLinear => "check-linear",
            Kind::CheckNonlinear => "check-nonlinear",
            Kind::EstimateConstant => "estimate-constant",
            Kind::Dichotomy => "dichotomy",
            Kind::Avoidance => "avoidance",
            Kind::CompactnessProbe => "compactness-probe",
            Kind::Stability => "stability",
        }
    }
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub kind: Kind,
    /// Whether failed expectations count toward the exit status.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub assert: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<AmbientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub meshes: Vec<MeshSpec>,
    /// Stationary support for avoidance checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<MeshSpec>,
    /// Core curve of a perturbed tube flow (avoidance).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tube: Option<MeshSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scales: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<UniformPotential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<TestFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<Refinement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformPotential {
    pub length: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub value: f64,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub relative: bool,
}

impl Target {
    pub fn accepts(&self, x: f64) -> bool {
        let scale = if self.relative { self.value.abs() } else { 1.0 };
        (x - self.value).abs() <= self.tol * scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedVerdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedOutcome {
    Extinct,
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<ExpectedVerdict>,
    /// `ratio / constant` of each report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<ExpectedOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ext: Option<Target>,
    /// Length of each limit curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_below: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_finite: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diverges: Option<bool>,
    /// Mass of the last varifold in a probe sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals_decreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AmbientSpec {
    Plane,
    Space,
    Euclidean { dim: usize, half_width: f64 },
    RoundSphere { radius: f64 },
    Hyperbolic { curvature: f64, r_max: f64 },
    Conformal { log_factor: String, lo: [f64; 2], hi: [f64; 2] },
    Revolution { profile: String, z_lo: f64, z_hi: f64 },
    Product { circumference: f64, z_half: f64 },
}

impl AmbientSpec {
    pub fn build(&self) -> Result<AmbientRef> {
        Ok(Arc::new(match self {
            AmbientSpec::Plane => AmbientSurface::plane(),
            AmbientSpec::Space => AmbientSurface::space(),
            AmbientSpec::Euclidean { dim, half_width } => AmbientSurface::euclidean(*dim, *half_width)?,
            AmbientSpec::RoundSphere { radius } => AmbientSurface::round_sphere(*radius)?,
            AmbientSpec::Hyperbolic { curvature, r_max } => AmbientSurface::hyperbolic(*curvature, *r_max)?,
            AmbientSpec::Conformal { log_factor, lo, hi } => AmbientSurface::conformal(log_factor, *lo, *hi)?,
            AmbientSpec::Revolution { profile, z_lo, z_hi } => AmbientSurface::revolution(profile, *z_lo, *z_hi)?,
            AmbientSpec::Product { circumference, z_half } => AmbientSurface::product(*circumference, *z_half)?,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Disk in the plane (ignores the scenario ambient).
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    /// `|z| ≤ h` on a surface of revolution.
    Band { h: f64 },
    /// `θ ≤ θ₀` on a round sphere.
    Cap { theta0: f64 },
    /// Constraints `g ≤ 0` in chart variables and boundary parametrisations
    /// `[u(s), v(s)]`, `s ∈ [0, 1)`.
    Custom {
        name: String,
        constraints: Vec<String>,
        boundary: Vec<[String; 2]>,
    },
}

impl DomainSpec {
    pub fn build(&self, ambient: Option<&AmbientRef>) -> Result<Domain> {
        let need = |what: &str| {
            ambient.cloned().ok_or_else(|| Error::Validation(format!("{what} domain needs an ambient")))
        };
        match self {
            DomainSpec::Disk { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Validation(format!("disk radius {radius} must be positive")));
                }
                Domain::plane_disk(*center, *radius)
            }
            DomainSpec::Band { h } => Domain::revolution_band(need("band")?, *h),
            DomainSpec::Cap { theta0 } => Domain::spherical_cap(need("cap")?, *theta0),
            DomainSpec::Custom { name, constraints, boundary } => {
                let amb = need("custom")?;
                let cs: Vec<&str> = constraints.iter().map(|s| s.as_str()).collect();
                let curves = boundary.iter().map(|[u, v]| BoundaryCurve::parse(u, v)).collect::<Result<_>>()?;
                Domain::new(name.clone(), amb, &cs, curves)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshSpec {
    /// Plane circle with `4·2^level` segments (or `segments`).
    Circle {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        segments: Option<usize>,
    },
    /// Straight chart segment in the scenario ambient (plane by default).
    Segment {
        a: [f64; 2],
        b: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        segments: Option<usize>,
    },
    /// Coordinate circle `x⁰ = c` in the scenario ambient.
    Latitude {
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        segments: Option<usize>,
    },
    Parametric {
        u: String,
        v: String,
        #[serde(default)]
        closed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        segments: Option<usize>,
    },
    Polyline {
        points: Vec<[f64; 2]>,
        #[serde(default)]
        closed: bool,
    },
    /// Flat disk in `z = 0` of E³.
    Disk {
        #[serde(default)]
        center: [f64; 3],
        #[serde(default = "one")]
        radius: f64,
        level: usize,
    },
    /// Icosphere in E³.
    Sphere {
        #[serde(default)]
        center: [f64; 3],
        #[serde(default = "one")]
        radius: f64,
        level: usize,
    },
    /// Mesh text file or OFF file, path relative to the config file.
    File {
        path: PathBuf,
        #[serde(default)]
        format: FileFormat,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FileFormat {
    #[default]
    Mesh,
    Off,
}

fn curve_segments(level: Option<usize>, segments: Option<usize>, over: Option<usize>) -> Result<usize> {
    if let Some(l) = over {
        return Ok(4usize << l);
    }
    match (level, segments) {
        (Some(_), Some(_)) => Err(Error::Validation("give either level or segments, not both".into())),
        (Some(l), None) if l <= 20 => Ok(4 << l),
        (Some(l), None) => Err(Error::Validation(format!("level {l} too large"))),
        (None, Some(n)) => Ok(n),
        (None, None) => Ok(128),
    }
}

impl MeshSpec {
    /// Build in `ambient` (or the generator's natural ambient); `level`
    /// overrides the configured resolution.
    pub fn build(&self, ambient: Option<&AmbientRef>, base: &Path, level: Option<usize>) -> Result<MeshSurface> {
        let plane = || ambient.cloned().unwrap_or_else(|| Arc::new(AmbientSurface::plane()));
        let space = || ambient.cloned().unwrap_or_else(|| Arc::new(AmbientSurface::space()));
        match self {
            MeshSpec::Circle { center, radius, level: l, segments } => {
                let amb = plane();
                if !amb.is_euclidean() || amb.dim() != 2 {
                    return Err(Error::Validation("circle generator needs a plane ambient".into()));
                }
                let curve = BoundaryCurve::parse(
                    &format!("{} + {}*cos(2*pi*s)", center[0], radius),
                    &format!("{} + {}*sin(2*pi*s)", center[1], radius),
                )?;
                MeshSurface::parametric(amb, curve, curve_segments(*l, *segments, level)?, true)
            }
            MeshSpec::Segment { a, b, level: l, segments } => {
                MeshSurface::segment(plane(), *a, *b, curve_segments(*l, *segments, level)?)
            }
            MeshSpec::Latitude { c, level: l, segments } => {
                let amb = ambient.cloned().ok_or_else(|| Error::Validation("latitude needs an ambient".into()))?;
                MeshSurface::latitude(amb, *c, curve_segments(*l, *segments, level)?)
            }
            MeshSpec::Parametric { u, v, closed, level: l, segments } => {
                MeshSurface::parametric(plane(), BoundaryCurve::parse(u, v)?, curve_segments(*l, *segments, level)?, *closed)
            }
            MeshSpec::Polyline { points, closed } => {
                let pts = points.iter().map(|p| Point::new(p[0], p[1], 0.0)).collect();
                MeshSurface::polyline(plane(), pts, *closed)
            }
            MeshSpec::Disk { center, radius, level: l } => {
                let m = MeshSurface::disk(*center, *radius, level.unwrap_or(*l))?;
                rebind(m, space())
            }
            MeshSpec::Sphere { center, radius, level: l } => {
                let m = MeshSurface::sphere(*center, *radius, level.unwrap_or(*l))?;
                rebind(m, space())
            }
            MeshSpec::File { path, format } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let text = std::fs::read_to_string(&full)?;
                match format {
                    FileFormat::Mesh => crate::io::read_mesh(&text, plane_or_space(ambient, &text)),
                    FileFormat::Off => crate::io::read_off(&text, space()),
                }
            }
        }
    }
}

fn rebind(m: MeshSurface, amb: AmbientRef) -> Result<MeshSurface> {
    if !(amb.is_euclidean() && amb.dim() == 3) {
        return Err(Error::Validation("triangle generators need a Euclidean 3-space ambient".into()));
    }
    Ok(m)
}

fn plane_or_space(ambient: Option<&AmbientRef>, text: &str) -> AmbientRef {
    if let Some(a) = ambient {
        return a.clone();
    }
    let space = AmbientSurface::space();
    let is_space = text.lines().any(|l| l.trim() == format!("ambient {}", space.name));
    Arc::new(if is_space { space } else { AmbientSurface::plane() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// `|δV(X) − (∫_∂M X·η − ∫ X·H)|` for the configured field.
    DivergenceResidual,
    Measure,
    /// Ball-bound `ratio / constant`.
    BallRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refinement {
    pub quantity: Quantity,
    /// Inclusive level range.
    pub levels: [usize; 2],
    /// Chart components of the test field (position field when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<String>>,
    /// Limit value; defaults to 0 for residuals and 1 for ball ratios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Normalised TOML text.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        for s in &self.scenarios {
            if s.id.is_empty() || s.id.contains(|c: char| c.is_whitespace() || c == '/' || c == '\\') {
                return Err(Error::Validation(format!("scenario id {:?} must be a nonempty word", s.id)));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Validation(format!("duplicate scenario id {:?}", s.id)));
            }
            s.validate().map_err(|e| match e {
                Error::Validation(m) => Error::Validation(format!("scenario {}: {m}", s.id)),
                e => e,
            })?;
        }
        Ok(())
    }
}

impl Scenario {
    fn validate(&self) -> Result<()> {
        use Kind::*;
        let bad = |m: String| Err(Error::Validation(m));
        let present: Vec<(&str, bool)> = vec![
            ("ambient", self.ambient.is_some()),
            ("domain", self.domain.is_some()),
            ("meshes", !self.meshes.is_empty()),
            ("support", self.support.is_some()),
            ("tube", self.tube.is_some()),
            ("constant", self.constant.is_some()),
            ("curvature_bound", self.curvature_bound.is_some()),
            ("linear_constant", self.linear_constant.is_some()),
            ("scales", !self.scales.is_empty()),
            ("horizon", self.horizon.is_some()),
            ("k", self.k.is_some()),
            ("grid", self.grid.is_some()),
            ("uniform", self.uniform.is_some()),
            ("family", self.family.is_some()),
            ("sampler", self.sampler.is_some()),
            ("flow", self.flow.is_some()),
            ("refinement", self.refinement.is_some()),
        ];
        let (allowed, required): (&[&str], &[&str]) = match self.kind {
            CheckBall => (&["ambient", "meshes", "refinement"], &["meshes"]),
            CheckLinear => (&["ambient", "domain", "meshes", "constant", "family", "refinement"], &["meshes", "constant"]),
            CheckNonlinear => (
                &["ambient", "meshes", "constant", "curvature_bound", "linear_constant", "scales", "refinement"],
                &["meshes", "constant"],
            ),
            EstimateConstant => (&["ambient", "domain", "k", "sampler"], &["domain"]),
            Dichotomy => (&["ambient", "domain", "flow"], &["domain"]),
            Avoidance => (&["ambient", "domain", "support", "tube", "horizon", "flow"], &["horizon"]),
            CompactnessProbe => (&["ambient", "meshes", "family"], &["meshes"]),
            Stability => (&["ambient", "meshes", "grid", "uniform"], &[]),
        };
        for (name, on) in &present {
            if *on && !allowed.contains(name) {
                return bad(format!("field `{name}` is not used by kind {}", self.kind.name()));
            }
        }
        for r in required {
            if !present.iter().any(|(n, on)| n == r && *on) {
                return bad(format!("kind {} requires `{r}`", self.kind.name()));
            }
        }
        if self.kind == Avoidance && (self.domain.is_some() == self.tube.is_some()) {
            return bad("avoidance needs exactly one of `domain` or `tube`".into());
        }
        if self.kind == Stability && (self.meshes.is_empty() == self.uniform.is_none()) {
            return bad("stability needs exactly one of `meshes` or `uniform`".into());
        }
        for c in [self.constant, self.linear_constant].into_iter().flatten() {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("constant {c} must be positive and finite"));
            }
        }
        if let Some(k) = self.curvature_bound {
            if !(k >= 0.0 && k.is_finite()) {
                return bad(format!("curvature bound {k} must be nonnegative"));
            }
        }
        for s in &self.scales {
            if !(*s > 0.0 && s.is_finite()) {
                return bad(format!("scale {s} must be positive"));
            }
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("horizon {h} must be positive"));
            }
        }
        if let Some(f) = &self.flow {
            f.validate()?;
        }
        if let Some(f) = &self.family {
            if f.degree == 0 || f.grid < 3 || !(f.lipschitz_cap > 0.0) || f.max_iter == 0 {
                return bad("test family needs degree ≥ 1, grid ≥ 3 and positive caps".into());
            }
        }
        if let Some(g) = self.grid {
            if g < crate::stability::MIN_GRID {
                return bad(format!("grid {g} below {}", crate::stability::MIN_GRID));
            }
        }
        if let Some(r) = &self.refinement {
            if r.levels[0] > r.levels[1] || r.levels[1] > 12 {
                return bad(format!("refinement levels {:?} invalid", r.levels));
            }
        }
        if let Some(e) = &self.expect {
            let ok: &[&str] = match self.kind {
                CheckBall | CheckLinear | CheckNonlinear => &["verdict", "normalized"],
                EstimateConstant => &["upper_finite", "diverges"],
                Dichotomy => &["outcome", "t_ext", "length", "eigenvalue", "residual_below"],
                Avoidance => &["pass"],
                CompactnessProbe => &["mass", "residual_below", "residuals_decreasing"],
                Stability => &["eigenvalue"],
            };
            let set = [
                ("verdict", e.verdict.is_some()),
                ("normalized", e.normalized.is_some()),
                ("outcome", e.outcome.is_some()),
                ("t_ext", e.t_ext.is_some()),
                ("length", e.length.is_some()),
                ("eigenvalue", e.eigenvalue.is_some()),
                ("residual_below", e.residual_below.is_some()),
                ("pass", e.pass.is_some()),
                ("upper_finite", e.upper_finite.is_some()),
                ("diverges", e.diverges.is_some()),
                ("mass", e.mass.is_some()),
                ("residuals_decreasing", e.residuals_decreasing.is_some()),
            ];
            for (name, on) in set {
                if on && !ok.contains(&name) {
                    return bad(format!("expectation `{name}` does not apply to kind {}", self.kind.name()));
                }
            }
            for t in [e.normalized, e.t_ext, e.length, e.eigenvalue, e.mass].into_iter().flatten() {
                if !(t.tol >= 0.0 && t.value.is_finite()) {
                    return bad("expectation tolerances must be nonnegative".into());
                }
            }
        }
        Ok(())
    }

    pub fn ambient(&self) -> Result<Option<AmbientRef>> {
        self.ambient.as_ref().map(|a| a.build()).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7

[[scenario]]
id = "ball"
kind = "check-ball"
meshes = [{ generator = "circle", level = 6 }, { generator = "sphere", level = 3 }]
expect = { normalized = { value = 1.0, tol = 2e-2 } }

[[scenario]]
id = "band"
kind = "dichotomy"
ambient = { family = "revolution", profile = "1 + z^2", z_lo = -2.0, z_hi = 2.0 }
domain = { shape = "band", h = 1.0 }
flow = { vertices = 64 }
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = Config::parse(SAMPLE).unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.scenarios.len(), 2);
        let once = c.to_toml().unwrap();
        let again = Config::parse(&once).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml().unwrap(), once);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let text = SAMPLE.replace("seed = 7", "seed = 7\ncolour = 1");
        assert!(matches!(Config::parse(&text), Err(Error::Parse(_))));
        let text = SAMPLE.replace("vertices = 64", "vertices = 64, speed = 2");
        assert!(matches!(Config::parse(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn misplaced_fields_are_validation_errors() {
        let text = SAMPLE.replace("kind = \"check-ball\"", "kind = \"check-ball\"\nhorizon = 5.0");
        assert!(matches!(Config::parse(&text), Err(Error::Validation(_))));
        let text = SAMPLE.replace("flow = { vertices = 64 }", "flow = { vertices = 3 }");
        assert!(matches!(Config::parse(&text), Err(Error::Validation(_))));
        let dup = format!("{SAMPLE}\n[[scenario]]\nid = \"ball\"\nkind = \"stability\"\nuniform = {{ length = 6.0, q = 1.0 }}\n");
        assert!(matches!(Config::parse(&dup), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_config_is_valid() {
        let c = Config::parse("").unwrap();
        assert!(c.scenarios.is_empty());
    }
}
