//! JSON input formats: surfaces, metrics and scenario files.
//!
//! Surface: `{"type": "type_A"|"type_B"|"s_kappa"|"wong"|"ansatz"|"custom",
//! "Gamma": {"11^1": "expr", ...}, "domain": {"x1": [lo, hi], "x2": [lo, hi]},
//! "params": {...}}`.
//!
//! Metric: `{"coords": [...], "g": [[...], ...], "params": {...},
//! "orientation": ±1, "box": {...}, "points": [[...], ...]}` with `g` a full
//! symmetric matrix of expressions or numbers.
//!
//! Scenario: `{"scenario": id, "params": {...}, "box": {...}, "points": N,
//! "seed": S, "tol": {...}}`.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use crate::affine::models::{self, constants_from_map};
use crate::affine::{AffineSurface, SURFACE_COORDS};
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::field::expr_field;
use crate::tensor::{CoordBox, MetricField};
use crate::verifier::report::RunConfig;
use crate::verifier::scenarios::{build, Params, Scenario, Subject};
use crate::verifier::ToleranceProfile;

fn cfg(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// A number or an expression string, as found in `Gamma`, `g` and `params`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Num(v) => format!("{v:e}"),
            Scalar::Text(s) => s.clone(),
        }
    }
}

/// Splits params into numeric constants and expression strings.
fn split_params(params: &BTreeMap<String, Scalar>) -> (BTreeMap<String, f64>, BTreeMap<String, String>) {
    let mut nums = BTreeMap::new();
    let mut texts = BTreeMap::new();
    for (k, v) in params {
        match v {
            Scalar::Num(x) => {
                nums.insert(k.clone(), *x);
            }
            Scalar::Text(s) => {
                texts.insert(k.clone(), s.clone());
            }
        }
    }
    (nums, texts)
}

/// Evaluates an expression that may only mention numeric parameters.
fn constant_value(text: &str, params: &BTreeMap<String, f64>) -> Result<f64> {
    let e = parse(text)?;
    let v = e.eval_f64(&|n| params.get(n).copied().or(if n == "pi" { Some(std::f64::consts::PI) } else { None }))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("'{text}' is not a finite constant")));
    }
    Ok(v)
}

/// Reads a box given as `{"name": [lo, hi], ...}` over `coords`, or as a
/// list of `[lo, hi]` pairs.
pub fn parse_box(v: &Value, coords: &[&str]) -> Result<CoordBox> {
    let ranges: Vec<(f64, f64)> = match v {
        Value::Object(m) => {
            if let Some(k) = m.keys().find(|k| !coords.contains(&k.as_str())) {
                return Err(Error::Config(format!("box names unknown coordinate '{k}' (expected {coords:?})")));
            }
            coords
                .iter()
                .map(|c| {
                    let r = m.get(*c).ok_or_else(|| Error::Config(format!("box is missing coordinate '{c}'")))?;
                    serde_json::from_value::<(f64, f64)>(r.clone()).map_err(cfg)
                })
                .collect::<Result<_>>()?
        }
        Value::Array(_) => serde_json::from_value::<Vec<(f64, f64)>>(v.clone()).map_err(cfg)?,
        _ => return Err(Error::Config("box must be an object or an array of ranges".into())),
    };
    if ranges.len() != coords.len() {
        return Err(Error::Config(format!("box has {} ranges, expected {}", ranges.len(), coords.len())));
    }
    CoordBox::new(&ranges)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceFile {
    #[serde(rename = "type")]
    kind: String,
    #[serde(rename = "Gamma", default)]
    gamma: BTreeMap<String, Scalar>,
    domain: Option<Value>,
    #[serde(default)]
    params: BTreeMap<String, Scalar>,
}

fn default_domain(kind: &str) -> CoordBox {
    let r = match kind {
        "type_B" => [(0.5, 2.0), (-1.0, 1.0)],
        "s_kappa" => [(0.5, 2.0), (0.5, 2.0)],
        _ => [(-1.0, 1.0), (-1.0, 1.0)],
    };
    CoordBox::new(&r).expect("static box")
}

pub fn surface_from_json(text: &str) -> Result<AffineSurface> {
    let file: SurfaceFile = serde_json::from_str(text).map_err(cfg)?;
    let domain = match &file.domain {
        Some(v) => parse_box(v, &SURFACE_COORDS)?,
        None => default_domain(&file.kind),
    };
    let (nums, texts) = split_params(&file.params);
    let text_param = |k: &str| {
        texts
            .get(k)
            .cloned()
            .or_else(|| nums.get(k).map(|v| format!("{v:e}")))
            .ok_or_else(|| Error::Config(format!("surface type '{}' needs params.{k}", file.kind)))
    };
    let no_gamma = || {
        if file.gamma.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("surface type '{}' takes no Gamma table", file.kind)))
        }
    };
    match file.kind.as_str() {
        "type_A" | "type_B" => {
            let consts = file
                .gamma
                .iter()
                .map(|(k, v)| Ok((k.clone(), constant_value(&v.text(), &nums)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let c = constants_from_map(&consts)?;
            if file.kind == "type_A" {
                models::type_a(c, domain)
            } else {
                models::type_b(c, domain)
            }
        }
        "s_kappa" => {
            no_gamma()?;
            let kappa = nums
                .get("kappa")
                .copied()
                .ok_or_else(|| Error::Config("surface type 's_kappa' needs a numeric params.kappa".into()))?;
            models::s_kappa(kappa, domain)
        }
        "wong" => {
            no_gamma()?;
            let u = expr_field(&text_param("u")?, &["x1"], &nums)?;
            let v = expr_field(&text_param("v")?, &["x1"], &nums)?;
            Ok(models::wong_nilpotent(u, v, domain)?.surface)
        }
        "ansatz" => {
            no_gamma()?;
            let phi = expr_field(&text_param("phi")?, &SURFACE_COORDS, &nums)?;
            models::ansatz_phi(phi, domain)
        }
        "custom" => {
            let exprs = file.gamma.iter().map(|(k, v)| (k.clone(), v.text())).collect();
            AffineSurface::from_exprs("custom", &exprs, &nums, domain)
        }
        other => Err(Error::Config(format!("unknown surface type '{other}'"))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricFile {
    coords: Vec<String>,
    g: Vec<Vec<Scalar>>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    orientation: Option<f64>,
    #[serde(rename = "box")]
    bx: Option<Value>,
    points: Option<Vec<Vec<f64>>>,
}

/// A metric file with its optional sampling box and explicit points.
#[derive(Debug, Clone)]
pub struct MetricInput {
    pub metric: MetricField,
    pub sample_box: Option<CoordBox>,
    pub points: Option<Vec<Vec<f64>>>,
}

pub fn metric_from_json(text: &str) -> Result<MetricInput> {
    let file: MetricFile = serde_json::from_str(text).map_err(cfg)?;
    let n = file.coords.len();
    if file.g.len() != n || file.g.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("g must be a {n}×{n} matrix")));
    }
    let coords: Vec<&str> = file.coords.iter().map(String::as_str).collect();
    let mut comps = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let (a, b) = (file.g[i][j].text(), file.g[j][i].text());
            if a.split_whitespace().collect::<String>() != b.split_whitespace().collect::<String>() {
                return Err(Error::Config(format!("g is not symmetric: g[{i}][{j}] = '{a}', g[{j}][{i}] = '{b}'")));
            }
            comps.push(expr_field(&a, &coords, &file.params)?);
        }
    }
    let mut metric = MetricField::new(&coords, comps)?;
    if let Some(o) = file.orientation {
        if o != 1.0 && o != -1.0 {
            return Err(Error::Config(format!("orientation must be 1 or -1, got {o}")));
        }
        metric = metric.with_orientation(o);
    }
    let sample_box = file.bx.as_ref().map(|v| parse_box(v, &coords)).transpose()?;
    if let Some(p) = file.points.iter().flatten().find(|p| p.len() != n) {
        return Err(Error::Config(format!("point {p:?} does not have {n} coordinates")));
    }
    Ok(MetricInput {
        metric,
        sample_box,
        points: file.points,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: String,
    #[serde(default)]
    params: Params,
    #[serde(rename = "box")]
    bx: Option<Value>,
    points: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    tol: BTreeMap<String, f64>,
}

/// A scenario file resolved against the registry. `config` starts from
/// `base` and takes the file's points, seed and tolerances.
#[derive(Debug, Clone)]
pub struct ScenarioInput {
    pub scenario: Scenario,
    pub config: RunConfig,
    /// The raw params, so callers can layer further overrides.
    pub params: Params,
    pub sample_box: Option<CoordBox>,
}

pub fn scenario_coords(sc: &Scenario) -> Vec<String> {
    match &sc.subject {
        Subject::Metric { instance, .. } => instance.metric.coords.clone(),
        Subject::Surface(_) => SURFACE_COORDS.iter().map(|s| s.to_string()).collect(),
    }
}

/// Resolves a box against the coordinates of scenario `id`.
pub fn scenario_box(id: &str, params: &Params, v: &Value) -> Result<CoordBox> {
    let probe = build(id, params, None)?;
    let coords = scenario_coords(&probe);
    let names: Vec<&str> = coords.iter().map(String::as_str).collect();
    parse_box(v, &names)
}

pub fn apply_tolerances(tol: &mut ToleranceProfile, overrides: &BTreeMap<String, f64>) -> Result<()> {
    for (k, v) in overrides {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::Config(format!("tolerance {k} must be positive, got {v}")));
        }
        match k.as_str() {
            "residual" => tol.residual = *v,
            "identity" => tol.identity = *v,
            "rank" => tol.rank = *v,
            _ => return Err(Error::Config(format!("unknown tolerance '{k}'"))),
        }
    }
    Ok(())
}

pub fn scenario_from_json(text: &str, base: &RunConfig) -> Result<ScenarioInput> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(cfg)?;
    let sample_box = file
        .bx
        .as_ref()
        .map(|v| scenario_box(&file.scenario, &file.params, v))
        .transpose()?;
    let scenario = build(&file.scenario, &file.params, sample_box.clone())?;
    let mut config = base.clone();
    if let Some(p) = file.points {
        if p == 0 {
            return Err(Error::Config("points must be at least 1".into()));
        }
        config.points = p;
    }
    if let Some(s) = file.seed {
        config.seed = s;
    }
    apply_tolerances(&mut config.tol, &file.tol)?;
    Ok(ScenarioInput {
        scenario,
        config,
        params: file.params,
        sample_box,
    })
}
