//! Running a scenario over sample points and writing the report.

use std::collections::BTreeMap;
use std::io;

use rayon::prelude::*;
use serde::Serialize;

use crate::affine::{e_invariant, qee_residual, recurrence_form, affine_ricci};
use crate::duality::{frame_self_duality_check, orient_frame, orthonormal_frame, values, weyl_blocks_with};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::{i2, i3, normalized_norm, sample_points, CoordBox};

use super::scenarios::{ansatz_predictions, Check, Params, Probe, Scenario, Subject, Threshold};
use super::{
    gqe_residual_at, isotropic_structure_at, isotropy_at, lambda_jet, gqe_identities_at, q_tensor_at, GqeInstance,
    IsotropicStructure, Isotropy, GqeIdentities, LambdaMode, PointEval, ToleranceProfile,
};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "QEFORGE_THREADS";

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub points: usize,
    pub seed: u64,
    /// Metric jet order; raised automatically when a check needs more.
    pub order: usize,
    pub tol: ToleranceProfile,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            points: 16,
            seed: 42,
            order: 3,
            tol: ToleranceProfile::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSpec {
    pub name: String,
    pub threshold: Threshold,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub points: usize,
    pub order: usize,
    pub tol: ToleranceProfile,
    pub params: Params,
    #[serde(rename = "box")]
    pub sample_box: CoordBox,
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isotropy: Option<Isotropy>,
    pub residuals: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isotropy: Option<Isotropy>,
    /// Worst value per check: the maximum for upper bounds, the minimum for
    /// lower bounds.
    pub worst: BTreeMap<String, f64>,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub description: String,
    pub config: ConfigEcho,
    pub points: Vec<PointRecord>,
    pub aggregate: Aggregate,
}

fn verdict(t: Threshold, v: f64, tol: &ToleranceProfile) -> bool {
    match t {
        Threshold::Residual => v <= tol.residual,
        Threshold::Identity => v <= tol.identity,
        Threshold::AtMost(b) => v <= b,
        Threshold::AtLeast(b) => v >= b,
        Threshold::Info => true,
    }
}

/// Worker count from `QEFORGE_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

pub fn run_scenario(sc: &Scenario, cfg: &RunConfig) -> Result<VerificationReport> {
    if cfg.points == 0 {
        return Err(Error::Config("at least one sample point is needed".into()));
    }
    let order = cfg.order.max(sc.order());
    let points = sample_points(&sc.sample_box, cfg.points, cfg.seed, |_| true)?;
    let eval = |(i, p): (usize, &Vec<f64>)| evaluate_point(sc, i, p, order, &cfg.tol);
    let records: Vec<PointRecord> = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| points.par_iter().enumerate().map(eval).collect::<Result<_>>())?,
        None => points.par_iter().enumerate().map(eval).collect::<Result<_>>()?,
    };
    Ok(assemble(sc, cfg, order, records))
}

fn assemble(sc: &Scenario, cfg: &RunConfig, order: usize, records: Vec<PointRecord>) -> VerificationReport {
    let mut worst = BTreeMap::new();
    let mut failed = Vec::new();
    for c in &sc.checks {
        let vals = records.iter().filter_map(|r| r.residuals.get(&c.name).copied());
        let w = match c.threshold {
            Threshold::AtLeast(_) => vals.fold(f64::INFINITY, f64::min),
            _ => vals.fold(0.0f64, f64::max),
        };
        worst.insert(c.name.clone(), w);
        if records.iter().any(|r| r.verdicts.get(&c.name) == Some(&false)) {
            failed.push(c.name.clone());
        }
    }
    let isotropy = if records.iter().any(|r| r.isotropy.is_some()) {
        Some(super::aggregate_isotropy(records.iter().filter_map(|r| r.isotropy)))
    } else {
        None
    };
    VerificationReport {
        scenario: sc.id.clone(),
        description: sc.description.clone(),
        config: ConfigEcho {
            seed: cfg.seed,
            points: cfg.points,
            order,
            tol: cfg.tol,
            params: sc.params.clone(),
            sample_box: sc.sample_box.clone(),
            checks: sc
                .checks
                .iter()
                .map(|c| CheckSpec {
                    name: c.name.clone(),
                    threshold: c.threshold,
                })
                .collect(),
        },
        aggregate: Aggregate {
            pass: records.iter().all(|r| r.pass),
            isotropy,
            worst,
            failed,
        },
        points: records,
    }
}

/// Lazily computed per-point quantities shared by several probes.
struct MetricCtx<'a> {
    inst: &'a GqeInstance,
    orientation: f64,
    pe: PointEval,
    weyl: Option<Vec<Jet>>,
    structure: Option<IsotropicStructure>,
    identities: Option<GqeIdentities>,
}

impl MetricCtx<'_> {
    fn weyl(&mut self) -> Result<&Vec<Jet>> {
        if self.weyl.is_none() {
            self.weyl = Some(self.pe.geo.weyl()?);
        }
        Ok(self.weyl.as_ref().expect("set"))
    }

    fn structure(&mut self) -> Result<&IsotropicStructure> {
        if self.structure.is_none() {
            self.structure = Some(isotropic_structure_at(self.inst, &self.pe, self.orientation)?);
        }
        Ok(self.structure.as_ref().expect("set"))
    }

    fn identities(&mut self) -> Result<&GqeIdentities> {
        if self.identities.is_none() {
            self.identities = Some(gqe_identities_at(self.inst, &self.pe)?);
        }
        Ok(self.identities.as_ref().expect("set"))
    }

    fn probe(&mut self, probe: &Probe) -> Result<f64> {
        let geo = &self.pe.geo;
        let n = geo.n;
        Ok(match probe {
            Probe::Gqe => gqe_residual_at(self.inst, &self.pe)?.norm,
            Probe::LambdaExpected(expected) => {
                let auto = GqeInstance {
                    lambda: LambdaMode::AutoTrace,
                    ..self.inst.clone()
                };
                let l = lambda_jet(&auto, &self.pe)?.value();
                (l - expected.eval(&geo.point)?).abs()
            }
            Probe::LambdaTau4 => self.structure()?.lambda_tau4_residual,
            Probe::RicciForm => self.structure()?.ricci_form_residual,
            Probe::ParallelDist => self.structure()?.parallel_dist_residual,
            Probe::RicciNorm => self.structure()?.ricci_norm,
            Probe::RicciSquare => self.structure()?.ricci_square_norm,
            Probe::WPlus | Probe::WMinus => {
                let o = self.orientation;
                let w = self.weyl()?.clone();
                let b = weyl_blocks_with(&self.pe.geo, &w, o)?;
                if matches!(probe, Probe::WPlus) {
                    b.w_plus_norm
                } else {
                    b.w_minus_norm
                }
            }
            Probe::FrameDuality(sign) => {
                let o = self.orientation;
                let sign = *sign;
                let w = self.weyl()?.clone();
                let geo = &self.pe.geo;
                let frame = orient_frame(orthonormal_frame(&values(geo))?, o);
                frame_self_duality_check(geo, &w, &frame, sign)? / (1.0 + geo.gmax().powi(2))
            }
            Probe::Tau => geo.tau.value().abs(),
            Probe::GradNormSq => {
                let row = isotropy_at(&self.pe);
                row.grad_norm_sq.abs() / (1.0 + geo.gmax())
            }
            Probe::GradMax => isotropy_at(&self.pe).grad_max,
            Probe::Identity(i) => self.identities()?.items[i - 1],
            Probe::Identity4SingleTerm => self.identities()?.item4_single_term,
            Probe::Identity5Reduced => self.identities()?.item5_reduced,
            Probe::Cotton => {
                let c = geo.cotton()?;
                let d = geo.div4_weyl()?;
                let diff = c.iter().zip(&d).map(|(a, b)| a.value() + 2.0 * b.value());
                normalized_norm(diff, 3, geo.gmax())
            }
            Probe::QPrimed => q_tensor_at(self.inst, &self.pe)?.primed_block_residual,
            Probe::QFull => q_tensor_at(self.inst, &self.pe)?.norm,
            Probe::AffineGqe { surface, f_hat, mu } => {
                let p = &geo.point[..2];
                let ageo = surface.geometry(p, 1)?;
                let r = ageo.gqe_affine_residual(&f_hat.eval_jet(p, 2)?, *mu)?;
                r.iter().fold(0.0f64, |a, x| a.max(x.value().abs()))
            }
            Probe::WalkerParallel => {
                let mut m = 0.0f64;
                for a in 0..n {
                    for i in 2..n {
                        for k in 0..2 {
                            m = m.max(geo.gamma[i3(n, a, i, k)].value().abs());
                        }
                    }
                }
                m
            }
            Probe::DistributionNull => {
                let mut m = 0.0f64;
                for i in 2..n {
                    for j in 2..n {
                        m = m.max(geo.g[i2(n, i, j)].value().abs());
                    }
                }
                m
            }
            Probe::GradInDistribution => {
                let g = geo.gradient(&self.pe.f);
                g[..2].iter().fold(0.0f64, |a, x| a.max(x.value().abs()))
            }
            Probe::PhiEigen
            | Probe::RecurrenceOmega
            | Probe::RecurrenceResidual
            | Probe::RicciFormula
            | Probe::EFormula => {
                return Err(Error::Argument("surface probe on a metric scenario".into()));
            }
        })
    }
}

fn surface_probe(a: &crate::affine::models::AnsatzSurface, probe: &Probe, p: &[f64]) -> Result<f64> {
    let [omega, rho12, e, _] = ansatz_predictions(a, p)?;
    let rel = |x: f64, y: f64| (x - y).abs() / (1.0 + y.abs());
    Ok(match probe {
        Probe::PhiEigen => {
            let r = qee_residual(&a.surface, &a.phi, a.mu, p)?;
            r.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
        }
        Probe::RecurrenceOmega => {
            let r = recurrence_form(&a.surface, p)?;
            rel(r.omega[0], omega).max(rel(r.omega[1], omega))
        }
        Probe::RecurrenceResidual => {
            let r = recurrence_form(&a.surface, p)?;
            r.residual / (1.0 + r.d_rho_norm)
        }
        Probe::RicciFormula => {
            let r = affine_ricci(&a.surface, p)?;
            let rs = r.rho_s;
            rel(rs[0][1], rho12)
                .max(rel(rs[1][0], rho12))
                .max(rs[0][0].abs())
                .max(rs[1][1].abs())
        }
        Probe::EFormula => rel(e_invariant(&a.surface, p)?.e, e),
        _ => return Err(Error::Argument("metric probe on a surface scenario".into())),
    })
}

fn evaluate_point(sc: &Scenario, index: usize, p: &[f64], order: usize, tol: &ToleranceProfile) -> Result<PointRecord> {
    let mut residuals = BTreeMap::new();
    let mut isotropy = None;
    match &sc.subject {
        Subject::Metric { instance, orientation } => {
            let pe = instance.eval(p, order)?;
            isotropy = Some(isotropy_at(&pe).class);
            let mut ctx = MetricCtx {
                inst: instance,
                orientation: *orientation,
                pe,
                weyl: None,
                structure: None,
                identities: None,
            };
            for c in &sc.checks {
                residuals.insert(c.name.clone(), ctx.probe(&c.probe).map_err(|e| e.at_point(p))?);
            }
        }
        Subject::Surface(a) => {
            for c in &sc.checks {
                residuals.insert(c.name.clone(), surface_probe(a, &c.probe, p).map_err(|e| e.at_point(p))?);
            }
        }
    }
    let verdicts: BTreeMap<String, bool> = sc
        .checks
        .iter()
        .map(|c: &Check| (c.name.clone(), verdict(c.threshold, residuals[&c.name], tol)))
        .collect();
    Ok(PointRecord {
        index,
        point: p.to_vec(),
        isotropy,
        pass: verdicts.values().all(|&v| v),
        residuals,
        verdicts,
    })
}

/// JSON formatter writing every float with 17 significant digits.
struct FixedDigits<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17 significant digits per float; non-finite values
/// become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = FixedDigits(serde_json::ser::PrettyFormatter::with_indent(b"  "));
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Argument(format!("report serialization: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Human-readable summary with 6 significant digits.
pub fn to_text(r: &VerificationReport) -> String {
    let mut s = format!(
        "scenario {} ({})\nseed {}  points {}  order {}\n",
        r.scenario, r.description, r.config.seed, r.config.points, r.config.order
    );
    if let Some(i) = r.aggregate.isotropy {
        s += &format!("isotropy {}\n", serde_json::to_string(&i).unwrap_or_default().trim_matches('"'));
    }
    let width = r.config.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &r.config.checks {
        let w = r.aggregate.worst.get(&c.name).copied().unwrap_or(f64::NAN);
        let bound = match c.threshold {
            Threshold::Residual => format!("<= {:.6e}", r.config.tol.residual),
            Threshold::Identity => format!("<= {:.6e}", r.config.tol.identity),
            Threshold::AtMost(b) => format!("<= {b:.6e}"),
            Threshold::AtLeast(b) => format!(">= {b:.6e}"),
            Threshold::Info => "info".to_string(),
        };
        let status = if r.aggregate.failed.contains(&c.name) { "FAIL" } else { "ok" };
        s += &format!("  {:<width$}  {:>14.6e}  {:<16} {}\n", c.name, w, bound, status);
    }
    s += &format!("verdict: {}\n", if r.aggregate.pass { "PASS" } else { "FAIL" });
    s
}
