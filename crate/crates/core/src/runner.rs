//! Scenario execution, report files and convergence tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::ambient::{AmbientRef, Point};
use crate::config::{Config, ExpectedOutcome, ExpectedVerdict, Kind, MeshSpec, Quantity, Scenario};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flow::{monitored_flow, perturbed_tube_flow, run_dichotomy_with, Outcome};
use crate::inequality::{
    check_ball_bound, check_linear, check_nonlinear, check_varifold_linear, estimate_constant, ratio_sequence_probe,
    IsoperimetricReport, SamplerConfig, Verdict,
};
use crate::io::{write_mesh, write_varifold};
use crate::mesh::MeshSurface;
use crate::numerics::{dec, decimal};
use crate::stability::StabilityProblem;
use crate::varifold::DiscreteVarifold;

/// One line of `report.jsonl`.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub scenario: String,
    pub kind: &'static str,
    pub index: usize,
    pub label: String,
    /// `None` when the scenario states no expectation for this record.
    pub pass: Option<bool>,
    pub data: Value,
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioResult {
    pub id: String,
    pub records: Vec<Record>,
    /// `(file stem, two-column series)`.
    pub series: Vec<(String, Vec<(f64, f64)>)>,
    /// `(file name, mesh text)`.
    pub snapshots: Vec<(String, String)>,
    pub error: Option<String>,
    pub exit_code: Option<i32>,
    pub asserted: bool,
}

impl ScenarioResult {
    pub fn failed(&self) -> bool {
        self.asserted && self.records.iter().any(|r| r.pass == Some(false))
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub results: Vec<ScenarioResult>,
}

impl RunReport {
    /// 0 when every asserted check passes; 4 (or the error's own code) when a
    /// scenario aborted; 1 on failed assertions.
    pub fn exit_code(&self) -> i32 {
        if let Some(c) = self.results.iter().find_map(|r| r.exit_code) {
            return c;
        }
        if self.results.iter().any(|r| r.failed()) {
            1
        } else {
            0
        }
    }

    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        let head = json!({
            "record": "run",
            "config_hash": self.config_hash,
            "seed": self.seed.to_string(),
            "scenarios": self.results.len(),
        });
        let _ = writeln!(out, "{head}");
        for r in &self.results {
            for rec in &r.records {
                let _ = writeln!(out, "{}", serde_json::to_string(rec).expect("record serialises"));
            }
            if let Some(e) = &r.error {
                let _ = writeln!(out, "{}", json!({"scenario": r.id, "error": e}));
            }
        }
        let fails = self.results.iter().filter(|r| r.failed()).count();
        let errors = self.results.iter().filter(|r| r.error.is_some()).count();
        let _ = writeln!(out, "{}", json!({"record": "summary", "failed": fails, "errors": errors, "exit_code": self.exit_code()}));
        out
    }

    pub fn table(&self) -> String {
        let mut rows = vec![["scenario".to_string(), "kind".into(), "item".into(), "status".into(), "detail".into()]];
        for r in &self.results {
            for rec in &r.records {
                let status = match rec.pass {
                    Some(true) => "pass",
                    Some(false) if r.asserted => "FAIL",
                    Some(false) => "fail (not asserted)",
                    None => "-",
                };
                rows.push([r.id.clone(), rec.kind.into(), rec.label.clone(), status.into(), brief(&rec.data)]);
            }
            if let Some(e) = &r.error {
                rows.push([r.id.clone(), "-".into(), "-".into(), "ERROR".into(), e.clone()]);
            }
        }
        let mut out = format!("config {}  seed {}\n", &self.config_hash[..12], self.seed);
        out.push_str(&render(&rows));
        out
    }

    /// Write `report.jsonl`, `summary.txt` and series files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = vec![];
        let mut put = |name: &str, text: &str| -> Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, text)?;
            written.push(p);
            Ok(())
        };
        put("report.jsonl", &self.jsonl())?;
        put("summary.txt", &self.table())?;
        for r in &self.results {
            for (stem, s) in &r.series {
                let mut text = String::new();
                for (x, y) in s {
                    let _ = writeln!(text, "{} {}", dec(*x), dec(*y));
                }
                put(&format!("{}.{stem}.dat", r.id), &text)?;
            }
            for (name, text) in &r.snapshots {
                put(name, text)?;
            }
        }
        Ok(written)
    }
}

fn brief(v: &Value) -> String {
    let keys = [
        "verdict", "normalized", "outcome", "t_ext", "length", "stability_eigenvalue", "eigenvalue", "lower", "upper",
        "pass", "minimum", "mass",
    ];
    let mut parts = vec![];
    if let Value::Object(m) = v {
        for k in keys {
            if let Some(x) = m.get(k) {
                let s = match x {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                parts.push(format!("{k}={s}"));
            }
        }
    }
    parts.join(" ")
}

fn render(rows: &[[String; 5]]) -> String {
    let mut w = [0usize; 5];
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            w[i] = w[i].max(c.chars().count());
        }
    }
    let mut out = String::new();
    for (j, r) in rows.iter().enumerate() {
        let line: Vec<String> = r.iter().enumerate().map(|(i, c)| format!("{c:<width$}", width = w[i])).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if j == 0 {
            let _ = writeln!(out, "{}", w.iter().map(|n| "-".repeat(*n)).collect::<Vec<_>>().join("  "));
        }
    }
    out
}

/// Git-style object hash (`sha256("blob <len>\0" + text)`), hex encoded.
pub fn content_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-scenario seeds drawn in config order from one generator.
pub fn scenario_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Write a mesh snapshot of the flowing curves every this many steps.
    pub snapshot_every: Option<usize>,
    /// Write `<id>.trajectory.jsonl` for flow scenarios.
    pub trajectory: bool,
}

/// Run every scenario (in parallel) and collect results in config order.
pub fn run_config(config: &Config, text: &str, base: &Path, opts: &RunOptions) -> RunReport {
    let seed = opts.seed.or(config.seed).unwrap_or(0);
    let seeds = scenario_seeds(seed, config.scenarios.len());
    let results = config
        .scenarios
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(s, &sd)| run_scenario(s, base, sd, opts))
        .collect();
    RunReport { config_hash: content_hash(text), seed, results }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => 2,
        Error::Validation(_) => 3,
        Error::Assertion(_) => 1,
        _ => 4,
    }
}

pub fn run_scenario(s: &Scenario, base: &Path, seed: u64, opts: &RunOptions) -> ScenarioResult {
    let mut res = ScenarioResult { id: s.id.clone(), asserted: s.assert, ..Default::default() };
    if let Err(e) = execute(s, base, seed, opts, &mut res) {
        res.exit_code = Some(exit_code_for(&e));
        res.error = Some(e.to_string());
    }
    res
}

struct Ctx<'a> {
    s: &'a Scenario,
    base: &'a Path,
    amb: Option<AmbientRef>,
}

impl Ctx<'_> {
    fn meshes(&self) -> Result<Vec<MeshSurface>> {
        self.s.meshes.iter().map(|m| m.build(self.amb.as_ref(), self.base, None)).collect()
    }

    fn mesh(&self, m: &MeshSpec) -> Result<MeshSurface> {
        m.build(self.amb.as_ref(), self.base, None)
    }
}

fn verdict_name(v: &Verdict) -> ExpectedVerdict {
    match v {
        Verdict::Holds => ExpectedVerdict::Holds,
        Verdict::Violated => ExpectedVerdict::Violated,
        Verdict::Inconclusive { .. } => ExpectedVerdict::Inconclusive,
    }
}

fn and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x && y),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serialisable")
}

fn execute(s: &Scenario, base: &Path, seed: u64, opts: &RunOptions, res: &mut ScenarioResult) -> Result<()> {
    let ctx = Ctx { s, base, amb: s.ambient()? };
    let expect = s.expect.clone().unwrap_or_default();
    let kind = s.kind.name();
    let push = |res: &mut ScenarioResult, label: String, pass: Option<bool>, data: Value| {
        let index = res.records.len();
        res.records.push(Record { scenario: s.id.clone(), kind, index, label, pass, data });
    };
    let judge = |r: &IsoperimetricReport| {
        let mut p = expect.verdict.map(|v| v == verdict_name(&r.verdict));
        p = and(p, expect.normalized.map(|t| t.accepts(r.normalized)));
        p
    };
    match s.kind {
        Kind::CheckBall => {
            for (i, m) in ctx.meshes()?.iter().enumerate() {
                let r = check_ball_bound(m)?;
                push(res, format!("mesh[{i}]"), judge(&r), to_value(&r));
            }
        }
        Kind::CheckLinear => {
            let c = s.constant.expect("validated");
            let domain = s.domain.as_ref().map(|d| d.build(ctx.amb.as_ref())).transpose()?;
            for (i, m) in ctx.meshes()?.iter().enumerate() {
                let r = match &s.family {
                    Some(f) => {
                        if let Some(d) = &domain {
                            for (j, v) in m.vertices.iter().enumerate() {
                                if !d.contains_tol(v, 1e-9) {
                                    return Err(Error::Containment(format!("vertex {j} of mesh {i} lies outside {}", d.name)));
                                }
                            }
                        }
                        check_varifold_linear(&DiscreteVarifold::from_mesh(m)?, c, f)?
                    }
                    None => check_linear(m, c, domain.as_ref())?,
                };
                push(res, format!("mesh[{i}]"), judge(&r), to_value(&r));
            }
        }
        Kind::CheckNonlinear => {
            let c = s.constant.expect("validated");
            let scales = if s.scales.is_empty() { vec![1.0] } else { s.scales.clone() };
            for (i, m) in ctx.meshes()?.iter().enumerate() {
                let kb = match s.curvature_bound {
                    Some(k) => k,
                    None => m.ambient.second_fundamental_bound(m.k())?,
                };
                let mut verdicts = vec![];
                for &lam in &scales {
                    let scaled = if lam == 1.0 {
                        m.clone()
                    } else {
                        if !m.ambient.is_euclidean() {
                            return Err(Error::Unsupported("dilations need a Euclidean ambient".into()));
                        }
                        m.map_vertices(m.ambient.clone(), |p| lam * p)?
                    };
                    // Dilating the ambient by λ scales its curvature bound by 1/λ and a linear constant by λ.
                    let r = check_nonlinear(&scaled, c, kb / lam, s.linear_constant.map(|l| l * lam))?;
                    verdicts.push(verdict_name(&r.verdict));
                    let mut data = to_value(&r);
                    data["scale"] = Value::String(dec(lam));
                    data["curvature_bound"] = Value::String(dec(kb / lam));
                    push(res, format!("mesh[{i}]x{}", dec(lam)), judge(&r), data);
                }
                let invariant = verdicts.windows(2).all(|w| w[0] == w[1]);
                push(res, format!("mesh[{i}] dilation"), Some(invariant), json!({"invariant": invariant}));
            }
        }
        Kind::EstimateConstant => {
            let d = s.domain.as_ref().expect("validated").build(ctx.amb.as_ref())?;
            let cfg = SamplerConfig { seed, ..s.sampler.clone().unwrap_or_default() };
            let est = estimate_constant(&d, s.k.unwrap_or(1), &cfg)?;
            let mut p = expect.upper_finite.map(|u| u == est.upper.is_some_and(f64::is_finite));
            p = and(p, expect.diverges.map(|x| x == est.diverges));
            push(res, d.name.clone(), p, to_value(&est));
        }
        Kind::Dichotomy => {
            let d = s.domain.as_ref().expect("validated").build(ctx.amb.as_ref())?;
            let cfg = s.flow.clone().unwrap_or_default();
            let mut snaps = vec![];
            let out = run_dichotomy_with(&d, &cfg, |st| {
                if let Some(n) = opts.snapshot_every {
                    if n > 0 && st.steps % n == 0 {
                        if let Ok(m) = st.mesh() {
                            snaps.push((format!("{}.step{:08}.mesh", s.id, st.steps), write_mesh(&m)));
                        }
                    }
                }
            })?;
            res.snapshots = snaps;
            if opts.trajectory {
                let mut text = String::new();
                for r in &out.trail {
                    let _ = writeln!(
                        text,
                        "{}",
                        json!({"t": dec(r.t), "length": dec(r.length), "max_h": dec(r.max_h), "min_spacing": dec(r.min_spacing)})
                    );
                }
                res.snapshots.push((format!("{}.trajectory.jsonl", s.id), text));
            }
            res.series.push(("length".into(), out.trail.iter().map(|r| (r.t, r.length)).collect()));
            res.series.push(("max_h".into(), out.trail.iter().map(|r| (r.t, r.max_h)).collect()));
            let mut p = None;
            match &out.outcome {
                Outcome::Extinct { t_ext } => {
                    p = and(p, expect.outcome.map(|o| o == ExpectedOutcome::Extinct));
                    p = and(p, expect.t_ext.map(|t| t.accepts(*t_ext)));
                    for key in [expect.length.is_some(), expect.eigenvalue.is_some(), expect.residual_below.is_some()] {
                        if key {
                            p = Some(false);
                        }
                    }
                }
                Outcome::Converged { curve_lengths, residual, stability_eigenvalue, .. } => {
                    p = and(p, expect.outcome.map(|o| o == ExpectedOutcome::Converged));
                    p = and(p, expect.length.map(|t| curve_lengths.iter().all(|l| t.accepts(*l))));
                    p = and(p, expect.eigenvalue.map(|t| t.accepts(*stability_eigenvalue)));
                    p = and(p, expect.residual_below.map(|b| *residual < b));
                    if expect.t_ext.is_some() {
                        p = Some(false);
                    }
                }
            }
            push(res, d.name.clone(), p, to_value(&out));
        }
        Kind::Avoidance => {
            let cfg = s.flow.clone().unwrap_or_default();
            let horizon = s.horizon.expect("validated");
            let support: Vec<Point> = match &s.support {
                Some(m) => DiscreteVarifold::from_mesh(&ctx.mesh(m)?)?.spatial_support(1e-9)?,
                None => vec![],
            };
            if let Some(d) = &s.domain {
                let d = d.build(ctx.amb.as_ref())?;
                let (rep, _) = monitored_flow(&d, &support, horizon, &cfg)?;
                res.series.push(("distance".into(), rep.series.clone()));
                if opts.trajectory {
                    let mut text = String::new();
                    for (t, d) in &rep.series {
                        let _ = writeln!(text, "{}", json!({"t": dec(*t), "distance": dec(*d)}));
                    }
                    res.snapshots.push((format!("{}.trajectory.jsonl", s.id), text));
                }
                let p = expect.pass.map(|x| x == rep.pass);
                let mut data = to_value(&rep);
                data["series"] = Value::from(rep.series.len());
                push(res, d.name.clone(), p, data);
            } else {
                let m = ctx.mesh(s.tube.as_ref().expect("validated"))?;
                let chains = m.chains();
                let (chain, closed) = chains.first().ok_or_else(|| Error::InvalidMesh("tube core has no chain".into()))?;
                if !closed {
                    return Err(Error::Validation("tube core must be a closed curve".into()));
                }
                let pts: Vec<Point> = chain.iter().map(|&v| m.vertices[v]).collect();
                let (traj, _) = perturbed_tube_flow(m.ambient.clone(), &pts, &cfg, horizon, &support)?;
                let pass = traj.contact_time.is_none();
                for c in 0..traj.records.first().map_or(0, |r| r.1.len()) {
                    res.series.push((
                        format!("length{c}"),
                        traj.records.iter().filter(|r| r.1.len() > c).map(|r| (r.0, r.1[c])).collect(),
                    ));
                }
                let mut data = to_value(&traj);
                data["records"] = Value::from(traj.records.len());
                data["pass"] = Value::Bool(pass);
                push(res, "tube".into(), expect.pass.map(|x| x == pass), data);
            }
        }
        Kind::CompactnessProbe => {
            let vs = ctx.meshes()?.iter().map(DiscreteVarifold::from_mesh).collect::<Result<Vec<_>>>()?;
            let fam = s.family.clone().unwrap_or_default();
            let t = ratio_sequence_probe(&vs, &fam, seed)?;
            res.series.push(("ratio".into(), t.rows.iter().map(|r| (r.index as f64, r.ratio)).collect()));
            res.series.push(("residual".into(), t.rows.iter().map(|r| (r.index as f64, r.residual)).collect()));
            res.series.push(("mass".into(), t.rows.iter().map(|r| (r.index as f64, r.mass)).collect()));
            let last = t.rows.last().expect("nonempty");
            let mut p = expect.mass.map(|m| m.accepts(last.mass));
            p = and(p, expect.residual_below.map(|b| last.residual < b));
            p = and(p, expect.residuals_decreasing.map(|d| d == t.residuals_decreasing));
            push(res, format!("sequence[{}]", t.rows.len()), p, to_value(&t));
        }
        Kind::Stability => {
            let grid = s.grid.unwrap_or(128);
            let mut problems = vec![];
            if let Some(u) = &s.uniform {
                problems.push(("uniform".to_string(), StabilityProblem::uniform(u.length, u.q, grid)?));
            }
            for (i, m) in ctx.meshes()?.iter().enumerate() {
                let chains = m.chains();
                let (chain, closed) = chains.first().ok_or_else(|| Error::InvalidMesh("curve has no chain".into()))?;
                if !closed {
                    return Err(Error::Validation(format!("mesh {i} is not a closed curve")));
                }
                let pts: Vec<Point> = chain.iter().map(|&v| m.vertices[v]).collect();
                problems.push((format!("mesh[{i}]"), StabilityProblem::from_curve(&m.ambient, &pts, grid)?));
            }
            for (label, pr) in problems {
                let sp = pr.smallest();
                let p = expect.eigenvalue.map(|t| t.accepts(sp.eigenvalue));
                let data = json!({
                    "length": dec(pr.length),
                    "grid": pr.q.len(),
                    "eigenvalue": dec(sp.eigenvalue),
                    "stable": sp.stable,
                });
                push(res, label, p, data);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub level: usize,
    #[serde(serialize_with = "decimal::serialize")]
    pub h: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub value: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub error: f64,
    /// `log₂(e_{i−1}/e_i)`; `None` on the first row or when errors vanish.
    #[serde(serialize_with = "decimal::option::serialize")]
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub quantity: Quantity,
    pub rows: Vec<TableRow>,
    /// All errors at or below `1e-12`: the order column is not applicable.
    pub exact: bool,
    #[serde(serialize_with = "decimal::option::serialize")]
    pub min_order: Option<f64>,
}

impl ConvergenceTable {
    pub fn render(&self) -> String {
        let mut rows = vec![["level".to_string(), "h".into(), "value".into(), "error".into(), "order".into()]];
        for r in &self.rows {
            let order = match (self.exact, r.order) {
                (true, _) => "n/a".into(),
                (false, Some(o)) => format!("{o:.3}"),
                (false, None) => "-".into(),
            };
            rows.push([r.level.to_string(), format!("{:.6e}", r.h), dec(r.value), format!("{:.3e}", r.error), order]);
        }
        format!("{} ({:?})\n{}", self.scenario, self.quantity, render(&rows))
    }
}

/// Refinement study of the first mesh of a scenario.
pub fn convergence_table(s: &Scenario, base: &Path) -> Result<ConvergenceTable> {
    let r = s
        .refinement
        .as_ref()
        .ok_or_else(|| Error::Validation(format!("scenario {} has no refinement section", s.id)))?;
    let [lo, hi] = r.levels;
    if hi + 1 < lo + 3 {
        return Err(Error::InsufficientData(format!("need at least 3 refinement levels, got {}", hi + 1 - lo)));
    }
    let spec = s.meshes.first().ok_or_else(|| Error::Validation("refinement needs a mesh".into()))?;
    let amb = s.ambient()?;
    let exact = match (r.quantity, r.exact) {
        (_, Some(e)) => e,
        (Quantity::DivergenceResidual, None) => 0.0,
        (Quantity::BallRatio, None) => 1.0,
        (Quantity::Measure, None) => return Err(Error::Validation("measure refinement needs `exact`".into())),
    };
    let rows: Vec<(usize, f64, f64)> = (lo..=hi)
        .into_par_iter()
        .map(|level| {
            let m = spec.build(amb.as_ref(), base, Some(level))?;
            let v = match r.quantity {
                Quantity::DivergenceResidual => {
                    let x = match &r.field {
                        Some(c) => VectorField::chart(&m.ambient, &c.iter().map(|s| s.as_str()).collect::<Vec<_>>())?,
                        None => VectorField::position(),
                    };
                    m.divergence_identity_residual(&x)?
                }
                Quantity::Measure => m.measure(),
                Quantity::BallRatio => check_ball_bound(&m)?.normalized,
            };
            Ok((level, m.max_element_size(), v))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = rows.iter().map(|r| (r.2 - exact).abs()).collect();
    let is_exact = errors.iter().all(|e| *e <= 1e-12);
    let mut out = Vec::new();
    for (i, (level, h, v)) in rows.iter().enumerate() {
        let order = (i > 0 && !is_exact && errors[i] > 0.0 && errors[i - 1] > 0.0).then(|| (errors[i - 1] / errors[i]).log2());
        out.push(TableRow { level: *level, h: *h, value: *v, error: errors[i], order });
    }
    let min_order = if is_exact { None } else { out.iter().filter_map(|r| r.order).reduce(f64::min) };
    Ok(ConvergenceTable { scenario: s.id.clone(), quantity: r.quantity, rows: out, exact: is_exact, min_order })
}

/// Mesh text of every mesh input, keyed by output file name.
pub fn dump_meshes(config: &Config, base: &Path) -> Result<Vec<(String, String)>> {
    let mut out = vec![];
    for s in &config.scenarios {
        let amb = s.ambient()?;
        for (i, m) in s.meshes.iter().enumerate() {
            out.push((format!("{}.{i}.mesh", s.id), write_mesh(&m.build(amb.as_ref(), base, None)?)));
        }
        for (name, m) in [("support", &s.support), ("tube", &s.tube)] {
            if let Some(m) = m {
                out.push((format!("{}.{name}.mesh", s.id), write_mesh(&m.build(amb.as_ref(), base, None)?)));
            }
        }
    }
    Ok(out)
}

/// Varifold dump of every mesh input.
pub fn dump_varifolds(config: &Config, base: &Path) -> Result<Vec<(String, String)>> {
    let mut out = vec![];
    for s in &config.scenarios {
        let amb = s.ambient()?;
        for (i, m) in s.meshes.iter().enumerate() {
            let v = DiscreteVarifold::from_mesh(&m.build(amb.as_ref(), base, None)?)?;
            out.push((format!("{}.{i}.varifold", s.id), write_varifold(&v)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_hash_matches_git_blob_scheme() {
        // sha256 of "blob 0\0"
        assert_eq!(content_hash(""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(scenario_seeds(5, 3), scenario_seeds(5, 3));
        assert_ne!(scenario_seeds(5, 3), scenario_seeds(6, 3));
    }

    #[test]
    fn empty_config_runs_clean() {
        let c = Config::parse("").unwrap();
        let r = run_config(&c, "", Path::new("."), &RunOptions::default());
        assert_eq!(r.exit_code(), 0);
        assert_eq!(r.jsonl().lines().count(), 2);
    }

    #[test]
    fn stability_scenario_reports_eigenvalue() {
        let text = r#"
[[scenario]]
id = "s"
kind = "stability"
uniform = { length = 6.283185307179586, q = 1.0 }
expect = { eigenvalue = { value = -1.0, tol = 1e-6 } }
"#;
        let c = Config::parse(text).unwrap();
        let r = run_config(&c, text, Path::new("."), &RunOptions::default());
        assert_eq!(r.exit_code(), 0, "{}", r.jsonl());
        assert_eq!(r.results[0].records[0].pass, Some(true));
    }

    #[test]
    fn failed_expectation_sets_exit_one() {
        let text = r#"
[[scenario]]
id = "c"
kind = "check-linear"
constant = 0.1
meshes = [{ generator = "segment", a = [0.0, 0.0], b = [1.0, 0.0], segments = 4 }]
expect = { verdict = "holds" }
"#;
        let c = Config::parse(text).unwrap();
        let r = run_config(&c, text, Path::new("."), &RunOptions::default());
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn table_needs_three_levels() {
        let text = r#"
[[scenario]]
id = "t"
kind = "check-ball"
meshes = [{ generator = "circle" }]
refinement = { quantity = "ball-ratio", levels = [4, 5] }
"#;
        let c = Config::parse(text).unwrap();
        assert!(matches!(convergence_table(&c.scenarios[0], Path::new(".")), Err(Error::InsufficientData(_))));
    }
}
