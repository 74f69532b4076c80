//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so every line is printed. A criterion
//! listed in `KNOWN_FAILURES` is still evaluated and reported as FAIL; the
//! binary exits nonzero if any other criterion fails or if a known failure
//! starts passing.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use qeforge_core::affine::models::{s_kappa, type_a, type_a_predicted_dim, wong_nilpotent};
use qeforge_core::affine::ode::{rk4_fixed, AnsatzOde, FhatSystem, OdeField, OdeSystem};
use qeforge_core::affine::{affine_ricci, dim_e, e_invariant, gqe_affine_residual, recurrence_form};
use qeforge_core::field::{self, expr_field};
use qeforge_core::tensor::{sample_points, CoordBox};
use qeforge_core::verifier::report::{run_scenario, RunConfig, VerificationReport};
use qeforge_core::verifier::scenarios::{build, Params, Subject};

const KNOWN_FAILURES: &[(usize, &str)] = &[(
    2,
    "on S_-2, x1*x2/(x1+x2) is a third solution of Hes h = -h rho, so dim E(-1) = 3, not 2",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn params(v: Value) -> Params {
    serde_json::from_value(v).unwrap()
}

fn run(id: &str, p: Value, points: usize) -> VerificationReport {
    run_with_mu(id, p, points).0
}

/// The report together with the metric-level μ, if the scenario has a metric.
fn run_with_mu(id: &str, p: Value, points: usize) -> (VerificationReport, Option<f64>) {
    let sc = build(id, &params(p), None).unwrap_or_else(|e| panic!("{id}: {e}"));
    let cfg = RunConfig {
        points,
        ..RunConfig::default()
    };
    let mu = match &sc.subject {
        Subject::Metric { instance, .. } => Some(instance.mu),
        Subject::Surface(_) => None,
    };
    (run_scenario(&sc, &cfg).unwrap_or_else(|e| panic!("{id}: {e}")), mu)
}

fn column(r: &VerificationReport, name: &str) -> Vec<f64> {
    r.points.iter().map(|p| p.residuals[name]).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(*b))
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().fold(f64::INFINITY, |a, b| a.min(*b))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300).max(if b == 0.0 { 1.0 } else { 0.0 })
}

fn c01_curvature_conventions() -> Outcome {
    let bx = CoordBox::new(&[(0.5, 2.0), (0.5, 2.0)]).unwrap();
    let pts = sample_points(&bx, 8, 1, |_| true).unwrap();
    let mut worst = 0.0f64;
    for kappa in [1.0, -2.0, 3.0] {
        let s = s_kappa(kappa, bx.clone()).unwrap();
        for p in &pts {
            let t = p[0] + p[1];
            let r = affine_ricci(&s, p).unwrap();
            let off = kappa / (t * t);
            worst = worst
                .max(r.rho[0][0].abs() / off.abs())
                .max(r.rho[1][1].abs() / off.abs())
                .max(rel(r.rho[0][1], off))
                .max(rel(r.rho[1][0], off));
            let w = recurrence_form(&s, p).unwrap();
            let want = -(2.0 + kappa) / t;
            for o in w.omega {
                worst = worst.max(if want == 0.0 { o.abs() } else { rel(o, want) });
            }
        }
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:.2e} over kappa in {{1,-2,3}}, 8 points"))
}

fn c02_eigenspace_dimensions() -> Outcome {
    let sk = |k: f64| s_kappa(k, CoordBox::new(&[(0.5, 2.0), (0.5, 2.0)]).unwrap()).unwrap();
    let flat = type_a([0.0; 6], CoordBox::new(&[(-1.0, 1.0), (-1.0, 1.0)]).unwrap()).unwrap();
    let p = [1.0, 1.2];
    let cells: Vec<(String, usize, usize)> = [
        ("kappa=2 mu=3", sk(2.0), 3.0, 1),
        ("kappa=2 mu=0", sk(2.0), 0.0, 1),
        ("kappa=2 mu=-1", sk(2.0), -1.0, 0),
        ("kappa=2 mu=1.7", sk(2.0), 1.7, 0),
        ("kappa=-2 mu=-1", sk(-2.0), -1.0, 2),
        ("kappa=-2 mu=0", sk(-2.0), 0.0, 1),
        ("flat mu=-1", flat.clone(), -1.0, 3),
        ("flat mu=0.7", flat.clone(), 0.7, 3),
        ("flat mu=2", flat, 2.0, 3),
    ]
    .into_iter()
    .map(|(name, s, mu, want)| (name.to_string(), dim_e(&s, &p, mu, 4).unwrap().dim_e, want))
    .collect();
    let bad: Vec<String> = cells
        .iter()
        .filter(|c| c.1 != c.2)
        .map(|(n, got, want)| format!("{n}: got {got}, expected {want}"))
        .collect();
    let ok = cells.len() - bad.len();
    let mut d = format!("{ok}/{} cells match", cells.len());
    if !bad.is_empty() {
        d.push_str(&format!(" [{}]", bad.join("; ")));
    }
    outcome(bad.is_empty(), d)
}

fn c03_type_a_trichotomy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let domain = CoordBox::new(&[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
    let (mut agree, mut total) = (0, 0);
    let mut ranks = [0usize; 3];
    let mut bad = Vec::new();
    for i in 0..20 {
        // sparse integer constants so that all three Ricci ranks occur
        let c: [f64; 6] = std::array::from_fn(|_| if rng.gen_bool(0.6) { 0.0 } else { rng.gen_range(-2..=2) as f64 });
        let s = type_a(c, domain.clone()).unwrap();
        let rank = affine_ricci(&s, &[0.0, 0.0]).unwrap().rank_s;
        ranks[rank] += 1;
        for mu in [-1.0, 0.31, 1.7] {
            total += 1;
            let got = dim_e(&s, &[0.0, 0.0], mu, 4).unwrap().dim_e;
            let want = type_a_predicted_dim(rank, mu);
            if want == Some(got) {
                agree += 1;
            } else {
                bad.push(format!("instance {i} {c:?} mu={mu}: got {got}, table {want:?}"));
            }
        }
    }
    let mut d = format!("{agree}/{total} cells agree (rank counts 0/1/2: {}/{}/{})", ranks[0], ranks[1], ranks[2]);
    if !bad.is_empty() {
        d.push_str(&format!(" [{}]", bad.join("; ")));
    }
    outcome(agree == total && total == 60, d)
}

/// The quasi-Einstein scenarios of criterion 4, with 16-point reports.
fn qe_reports() -> Vec<(String, VerificationReport, f64)> {
    [
        ("thm13_case1_skappa kappa=1", "thm13_case1_skappa", json!({"kappa": 1.0})),
        ("thm13_case1_skappa kappa=2", "thm13_case1_skappa", json!({"kappa": 2.0})),
        ("thm13_case1_ode", "thm13_case1_ode", json!({})),
        ("thm13_case2 C=1", "thm13_case2", json!({"C": 1.0})),
        ("thm13_case2 C=-0.5", "thm13_case2", json!({"C": -0.5})),
        ("conf_einstein_example52", "conf_einstein_example52", json!({})),
        ("asd_nilpotent", "asd_nilpotent", json!({})),
    ]
    .into_iter()
    .map(|(label, id, p)| {
        let (r, mu) = run_with_mu(id, p, 16);
        (label.to_string(), r, mu.expect("metric scenario"))
    })
    .collect()
}

fn c04_qe_residuals(reports: &[(String, VerificationReport, f64)]) -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (label, r, _) in reports {
        let m = max_of(&column(r, "gqe_residual"));
        worst = worst.max(m);
        if m > 1e-8 || r.points.len() != 16 {
            bad.push(format!("{label}: {m:.2e}"));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} scenarios, worst gqe_residual {worst:.2e}{}", reports.len(), if bad.is_empty() { String::new() } else { format!(" [{}]", bad.join("; ")) }),
    )
}

fn c05_duality(reports: &[(String, VerificationReport, f64)]) -> Outcome {
    let mut msgs = Vec::new();
    let mut ok = true;
    let mut w_minus = 0.0f64;
    let mut w_plus = f64::INFINITY;
    for (label, r, _) in reports.iter().filter(|(l, ..)| l.starts_with("thm13_")) {
        let m = max_of(&column(r, "w_minus"));
        w_minus = w_minus.max(m);
        ok &= m <= 1e-8;
        // the S_kappa surfaces with kappa != -2 and the case 2 surface are not projectively flat
        if label.starts_with("thm13_case2") || label.starts_with("thm13_case1_skappa") {
            let p = min_of(&column(r, "w_plus"));
            w_plus = w_plus.min(p);
            ok &= p >= 1e-4;
        }
    }
    msgs.push(format!("self-dual: max |W-| {w_minus:.2e}, min |W+| {w_plus:.2e}"));
    let (_, asd, _) = reports.iter().find(|(l, ..)| l == "asd_nilpotent").unwrap();
    let (wp, wm, tau) = (
        max_of(&column(asd, "w_plus")),
        min_of(&column(asd, "w_minus")),
        max_of(&column(asd, "tau")),
    );
    ok &= wp <= 1e-8 && wm >= 1e-4 && tau <= 1e-9;
    msgs.push(format!("anti-self-dual: max |W+| {wp:.2e}, min |W-| {wm:.2e}, max |tau| {tau:.2e}"));
    outcome(ok, msgs.join("; "))
}

fn c06_isotropic_structure(reports: &[(String, VerificationReport, f64)]) -> Outcome {
    let (flat, flat_mu) = run_with_mu("flat_sanity", json!({}), 16);
    let mut extra = vec![("flat_sanity".to_string(), flat, flat_mu.unwrap())];
    extra.extend(reports.iter().cloned());
    let mut ok = true;
    let mut lam = 0.0f64;
    let mut form = 0.0f64;
    let mut used = Vec::new();
    let mut exceptions = Vec::new();
    for (label, r, mu) in &extra {
        let iso = r.aggregate.isotropy == Some(qeforge_core::verifier::Isotropy::Isotropic);
        if !(iso && r.aggregate.pass) {
            continue;
        }
        used.push(label.clone());
        let l = max_of(&column(r, "lambda_tau4"));
        lam = lam.max(l);
        ok &= l <= 1e-7;
        // η = μ(n − 2) + 1 in dimension 4
        let eta = 2.0 * mu + 1.0;
        let f = max_of(&column(r, "ricci_form")).max(max_of(&column(r, "parallel_distribution")));
        if eta == 0.0 {
            exceptions.push(format!("{label} (eta = 0): null-frame pattern residual {f:.2e}, not required"));
        } else {
            form = form.max(f);
            ok &= f <= 1e-7;
        }
    }
    let mut d = format!(
        "{} isotropic scenarios, max |lambda - tau/4| {lam:.2e}, max pattern/parallel residual (eta != 0) {form:.2e}",
        used.len()
    );
    for e in exceptions {
        d.push_str(&format!("; {e}"));
    }
    outcome(ok && used.len() >= 6, d)
}

fn c07_gqe_identities() -> Outcome {
    let r = run("thm13_case2", json!({}), 16);
    let items = (1..=5).map(|i| max_of(&column(&r, &format!("gqe_identity_{i}")))).collect::<Vec<_>>();
    let e = run("conf_einstein_example52", json!({}), 16);
    let reduced = max_of(&column(&e, "gqe_identity_5_reduced"));
    let ok = items.iter().all(|v| *v <= 1e-6) && reduced <= 1e-6;
    outcome(
        ok,
        format!(
            "items 1-5 max {:.2e}, {:.2e}, {:.2e}, {:.2e}, {:.2e}; reduced item 5 at eta = 0: {reduced:.2e}",
            items[0], items[1], items[2], items[3], items[4]
        ),
    )
}

fn c08_cotton() -> Outcome {
    let t = Instant::now();
    let r = run("thm13_case2", json!({}), 8);
    let secs = t.elapsed().as_secs_f64();
    let m = max_of(&column(&r, "cotton_vs_div_weyl"));
    outcome(m <= 1e-7 && secs <= 60.0, format!("max discrepancy {m:.2e} at 8 points in {secs:.2} s"))
}

fn c09_ode_fidelity() -> Outcome {
    let mut sup = 0.0f64;
    for mu in [2.0f64, 3.0] {
        let tr = rk4_fixed(&AnsatzOde { mu }, 1.0, &[1.0, mu, mu * (mu - 1.0)], 2.0, 1024).unwrap();
        for (t, y) in tr.t.iter().zip(&tr.y) {
            sup = sup.max((y[0] - t.powf(mu)).abs());
        }
    }
    // potential ODE on the nilpotent surface Γ₁₁² = u + x2 v
    let (mu, x1) = (0.5, (0.0, 1.0));
    let u = expr_field("0.3*x1", &["x1"], &BTreeMap::new()).unwrap();
    let v = expr_field("0.5 + 0.25*x1", &["x1"], &BTreeMap::new()).unwrap();
    let bx = CoordBox::new(&[(0.0, 1.0), (-1.0, 1.0)]).unwrap();
    let w = wong_nilpotent(u, v.clone(), bx).unwrap();
    let sys: Arc<dyn OdeSystem> = Arc::new(FhatSystem { mu, v });
    let sol = OdeField::solve(sys.clone(), x1.0, &[0.0, 0.2], x1.1, 1024).unwrap();
    let f_hat = field::lift(sol[0].clone(), 2, &[0]).unwrap();
    let nodes = rk4_fixed(sys.as_ref(), x1.0, &[0.0, 0.2], x1.1, 1024).unwrap().t;
    let mut res = 0.0f64;
    for (i, t) in nodes.iter().enumerate().step_by(8) {
        let x2 = -0.9 + 1.8 * (i as f64 / nodes.len() as f64);
        let m = gqe_affine_residual(&w.surface, &f_hat, mu, &[*t, x2]).unwrap();
        res = res.max(m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())));
    }
    outcome(
        sup <= 1e-8 && res <= 1e-8,
        format!("sup |gamma - t^mu| {sup:.2e} (mu = 2, 3; 1024 steps); affine GQE residual along trajectory {res:.2e}"),
    )
}

fn c10_e_invariant() -> Outcome {
    let r = run("ansatz_phi_e26", json!({}), 16);
    let m = max_of(&column(&r, "e_formula"));
    let sc = build("ansatz_phi_e26", &params(json!({"mu": -1.0})), None).unwrap();
    let Subject::Surface(a) = &sc.subject else { unreachable!() };
    let mut e_max = 0.0f64;
    for p in sample_points(&sc.sample_box, 16, 42, |_| true).unwrap() {
        e_max = e_max.max(e_invariant(&a.surface, &p).unwrap().e.abs());
    }
    outcome(m <= 1e-7 && e_max <= 1e-7, format!("formula mismatch {m:.2e}; |E| at mu = -1: {e_max:.2e}"))
}

/// Random expressions that are smooth on [-1, 1]^3.
fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..5) {
            0 => "x".into(),
            1 => "y".into(),
            2 => "z".into(),
            3 => format!("{:.2}", rng.gen_range(-2.0..2.0)),
            _ => "x*y".into(),
        };
    }
    let a = random_expr(rng, depth - 1);
    let b = random_expr(rng, depth - 1);
    match rng.gen_range(0..11) {
        0 => format!("({a}) + ({b})"),
        1 => format!("({a}) - ({b})"),
        2 => format!("({a}) * ({b})"),
        3 => format!("({a}) / (1.5 + ({b})^2)"),
        4 => format!("sin({a})"),
        5 => format!("cos({a})"),
        6 => format!("exp(0.5*sin({a}))"),
        7 => format!("log(2 + ({a})^2)"),
        8 => format!("sqrt(1 + ({a})^2)"),
        9 => format!("({a})^3"),
        _ => format!("pow(2 + cos({a}), sin({b}))"),
    }
}

fn c11_ad_integrity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vars = ["x", "y", "z"];
    let h = 2e-3;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for _ in 0..30 {
        let text = random_expr(&mut rng, 4);
        let f = expr_field(&text, &vars, &BTreeMap::new()).unwrap();
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let jet = f.eval_jet(&p, 3).unwrap();
        let val = |q: &[f64]| f.eval_jet(q, 0).unwrap().value();
        // nested central differences along the listed axes, relative error
        // measured against max(1, |value|)
        fn fd(val: &dyn Fn(&[f64]) -> f64, p: &[f64], axes: &[usize], h: f64) -> f64 {
            match axes.split_first() {
                None => val(p),
                Some((&i, rest)) => {
                    let (mut a, mut b) = (p.to_vec(), p.to_vec());
                    a[i] += h;
                    b[i] -= h;
                    (fd(val, &a, rest, h) - fd(val, &b, rest, h)) / (2.0 * h)
                }
            }
        }
        for a0 in 0..=3u8 {
            for a1 in 0..=(3 - a0) {
                for a2 in 0..=(3 - a0 - a1) {
                    let alpha = [a0, a1, a2];
                    let axes: Vec<usize> = (0..3).flat_map(|i| std::iter::repeat(i).take(alpha[i] as usize)).collect();
                    let ad = jet.partial(&alpha).unwrap();
                    // one Richardson step removes the O(h²) term
                    let num = (4.0 * fd(&val, &p, &axes, h / 2.0) - fd(&val, &p, &axes, h)) / 3.0;
                    let err = (ad - num).abs() / ad.abs().max(num.abs()).max(1.0);
                    if err > worst {
                        worst = err;
                    }
                    checked += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-4, format!("{checked} derivatives of 30 expressions, worst relative error {worst:.2e} (extrapolated central differences)"))
}

fn c12_determinism() -> Outcome {
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            Command::new(env!("CARGO_BIN_EXE_qeforge"))
                .args(["verify", "--scenario", "thm13_case2", "--seed", "7", "--json"])
                .output()
                .expect("binary runs")
                .stdout
        })
        .collect();
    let same = runs[0] == runs[1] && !runs[0].is_empty();
    outcome(same, format!("two runs, {} bytes each, identical: {same}", runs[0].len()))
}

fn main() -> ExitCode {
    let reports = qe_reports();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("curvature conventions on S_kappa", Box::new(c01_curvature_conventions)),
        ("eigenspace dimensions", Box::new(c02_eigenspace_dimensions)),
        ("Type A trichotomy, 20 random instances", Box::new(c03_type_a_trichotomy)),
        ("quasi-Einstein residuals", Box::new(|| c04_qe_residuals(&reports))),
        ("duality verdicts", Box::new(|| c05_duality(&reports))),
        ("isotropic structure: lambda = tau/4 and null-frame Ricci", Box::new(|| c06_isotropic_structure(&reports))),
        ("curvature identities of a GQE", Box::new(c07_gqe_identities)),
        ("Cotton cross-oracle", Box::new(c08_cotton)),
        ("ODE fidelity", Box::new(c09_ode_fidelity)),
        ("E invariant on the phi ansatz", Box::new(c10_e_invariant)),
        ("AD integrity against finite differences", Box::new(c11_ad_integrity)),
        ("deterministic CLI reports", Box::new(c12_determinism)),
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let o = f();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == n);
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status}: {name}: {}", o.detail);
        match (o.pass, known) {
            (true, None) => passed += 1,
            (false, Some((_, why))) => println!("             known failure: {why}"),
            (true, Some(_)) => {
                println!("             listed as a known failure but passed; update KNOWN_FAILURES");
                unexpected += 1;
            }
            (false, None) => unexpected += 1,
        }
    }
    println!(
        "acceptance: {passed}/{} pass, {} known failure(s), {unexpected} unexpected",
        criteria.len(),
        KNOWN_FAILURES.len()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
