use std::collections::BTreeSet;
use std::fmt::Write;

use pathvar::douglas::{build_system, check_candidate_phi, default_levels, verdict_for_system, Mechanism, Verdict};
use pathvar::expr::{is_zero_guarded, Interval, Point, Var};
use pathvar::lagrange::{
    self as lag, convexity_probe, hessian_phi, numeric_extremal_check, reduce_second_order, sample_hom_points,
    sample_points, verify_equivalence, ConvexitySummary, HomLagrangian, Jet,
};
use pathvar::parser::{print_structure, Structure};
use pathvar::LagrangeError;
use serde_json::{json, Value as Json};

use crate::input::{lagrangian_sampler, load, resolve_lagrangian, Loaded};
use crate::report::{point, rational, zero_text, zero_verdict, CliError, Report};
use crate::Common;

const SCOPE: &str = "microlocal near witness jet";

fn header(command: &str, common: &Common, loaded: &Loaded) -> Json {
    json!({ "command": command, "input": common.source, "n": loaded.n(), "seed": common.seed })
}

fn merge(mut base: Json, extra: Json) -> Json {
    if let (Json::Object(b), Json::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn matrix(m: &[pathvar::douglas::SymMatrix]) -> Json {
    Json::Array(
        m.iter()
            .map(|k| {
                Json::Array(
                    k.iter()
                        .map(|row| {
                            Json::Array(
                                row.iter().map(|q| rational(q.numer().to_string(), q.denom().to_string())).collect(),
                            )
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn check(common: &Common, levels: Option<usize>, trials: usize) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let p = loaded.path_structure()?;
    let n = p.n();
    let levels = levels.unwrap_or(default_levels(n));
    if levels == 0 || trials == 0 {
        return Err(CliError::Input("--levels and --trials must be at least 1".into()));
    }
    let system = build_system(&p, levels);
    let mut sampler = pathvar::expr::RationalSampler::new(common.seed);
    let v = verdict_for_system(&system, &mut sampler, trials)?;

    let mut text = String::new();
    let _ = writeln!(text, "input:   {} (n = {n}, seed {})", common.source, common.seed);
    let _ = writeln!(
        text,
        "system:  {} rows on {} unknowns, levels {levels}, {trials} trials",
        system.rows.len(),
        system.cols()
    );
    let _ = writeln!(text, "verdict: {}", v.label());
    let detail = match &v {
        Verdict::NotVariational(Mechanism::FullRank { witness }) => {
            let _ = writeln!(text, "scope:   {SCOPE}");
            let _ = writeln!(text, "rank:    {}/{} (float rank {})", witness.rank, witness.max_possible, witness.float_rank);
            let _ = writeln!(text, "witness: {}", witness.point);
            json!({
                "scope": SCOPE,
                "mechanism": "FullRank",
                "rank": witness.rank,
                "max_rank": witness.max_possible,
                "float_rank": witness.float_rank,
                "witness": point(&witness.point),
            })
        }
        Verdict::NotVariational(Mechanism::ForcedDegenerate { kernel_dim, vanishing, base_points, draws_per_point }) => {
            let names: Vec<String> = vanishing.iter().map(|(i, j)| format!("phi{i}{j}")).collect();
            let _ = writeln!(text, "scope:   {SCOPE}");
            let _ = writeln!(text, "kernel:  dimension {kernel_dim}, {} vanish on it", names.join(", "));
            let _ = writeln!(
                text,
                "det:     identically 0 on the kernel ({draws_per_point} draws at each of {} base points)",
                base_points.len()
            );
            if let Some(b) = base_points.first() {
                let _ = writeln!(text, "witness: {b}");
            }
            json!({
                "scope": SCOPE,
                "mechanism": "ForcedDegenerate",
                "kernel_dim": kernel_dim,
                "vanishing": names,
                "draws_per_point": draws_per_point,
                "base_points": base_points.iter().map(point).collect::<Vec<_>>(),
            })
        }
        Verdict::Inconclusive { kernel_dim, max_rank, kernel_sample } => {
            let _ = writeln!(text, "rank:    {max_rank}/{}", kernel_sample.max_possible);
            let _ = writeln!(text, "kernel:  dimension {kernel_dim} at {}", kernel_sample.point);
            json!({
                "max_rank": max_rank,
                "max_possible": kernel_sample.max_possible,
                "kernel_dim": kernel_dim,
                "kernel_sample": {
                    "point": point(&kernel_sample.point),
                    "basis": matrix(&kernel_sample.kernel_basis),
                },
            })
        }
    };
    let json = merge(
        header("check", common, &loaded),
        merge(
            json!({
                "levels": levels,
                "trials": trials,
                "rows": system.rows.len(),
                "unknowns": system.cols(),
                "verdict": v.label(),
            }),
            detail,
        ),
    );
    Ok(Report { json, text, exit: 0 })
}

fn jet_of(p: &Point, n: usize) -> Jet {
    let get = |v| p.get(v).map(|x| x.to_f64()).unwrap_or(0.0);
    Jet {
        x: get(Var::X),
        y: (1..=n).map(|i| get(Var::Y(i as u16))).collect(),
        dy: (1..=n).map(|i| get(Var::Dy(i as u16))).collect(),
    }
}

pub fn verify(common: &Common, lagrangian: &str, trials: usize, tol: f64) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let p = loaded.path_structure()?;
    let l = resolve_lagrangian(lagrangian, &loaded, common.seed)?;
    if trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let mut guards = l.guards();
    guards.extend(p.guards());
    let mut sampler = lagrangian_sampler(common.seed, &guards);

    let eq = verify_equivalence(&l, &p, &mut sampler, trials, tol)?;
    let h = hessian_phi(&l);
    let cand = check_candidate_phi(&p, &h.phi, &mut sampler, trials, tol)?;

    let jets = sample_points(&l, Some(&p), &mut sampler, 3)?;
    let jets: Vec<Jet> = jets.iter().map(|q| jet_of(q, p.n())).collect();
    let extremal = match numeric_extremal_check(&l, &p, &jets, 1.0, 1e-10) {
        Ok(r) => json!({ "max_residual": r.max_residual, "trajectories": jets.len(), "samples": r.samples }),
        Err(e @ (LagrangeError::SingularTrajectory { .. } | LagrangeError::StepUnderflow(_))) => {
            json!({ "skipped": e.to_string() })
        }
        Err(e) => return Err(e.into()),
    };
    let pass = eq.pass() && cand.passes();

    let mut text = String::new();
    let _ = writeln!(text, "input:      {} (n = {}, seed {})", common.source, p.n(), common.seed);
    let _ = writeln!(text, "lagrangian: L = {}", l.expr());
    for (j, (r, v)) in eq.residuals.iter().zip(&eq.residual_verdicts).enumerate() {
        let _ = writeln!(text, "EL[{}]:      {}", j + 1, zero_text(v));
        if !v.is_zero() {
            let _ = writeln!(text, "            residual = {r}");
        }
    }
    let _ = writeln!(text, "det phi:    {} ({})", eq.det, if eq.nondegenerate() { "nondegenerate" } else { "degenerate" });
    for (name, fam) in cand.families() {
        let bad = fam.iter().find(|c| !c.verdict.is_zero());
        let status = match bad {
            None if fam.iter().all(|c| c.verdict.is_symbolic_zero()) => "SymbolicZero".to_string(),
            None => "NumericZero".to_string(),
            Some(c) => format!("{} {}", c.label, zero_text(&c.verdict)),
        };
        let _ = writeln!(text, "{name}:        {status}");
    }
    if let Some(m) = extremal.get("max_residual") {
        let _ = writeln!(text, "extremals:  max residual {m} over {} trajectories", jets.len());
    } else if let Some(s) = extremal.get("skipped") {
        let _ = writeln!(text, "extremals:  skipped ({})", s.as_str().unwrap_or(""));
    }
    let _ = writeln!(text, "result:     {}", if pass { "pass" } else { "fail" });

    let families: Vec<Json> = cand
        .families()
        .iter()
        .map(|(name, fam)| {
            json!({
                "family": name,
                "checks": fam.iter().map(|c| json!({ "label": c.label, "result": zero_verdict(&c.verdict) })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let json = merge(
        header("verify", common, &loaded),
        json!({
            "lagrangian": l.expr().to_string(),
            "trials": trials,
            "tol": tol,
            "residuals": eq.residuals.iter().zip(&eq.residual_verdicts)
                .map(|(r, v)| json!({ "expr": r.to_string(), "result": zero_verdict(v) }))
                .collect::<Vec<_>>(),
            "det": { "expr": eq.det.to_string(), "result": zero_verdict(&eq.det_verdict), "nondegenerate": eq.nondegenerate() },
            "fundamental_system": families,
            "extremals": extremal,
            "pass": pass,
        }),
    );
    Ok(Report { json, text, exit: if pass { 0 } else { 1 } })
}

pub fn homogenize(common: &Common) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let l = loaded
        .lagrangian()
        .ok_or_else(|| CliError::Input(format!("`{}` is not a first-order Lagrangian", common.source)))?;
    let lh = lag::homogenize(&l);
    let res = lh.euler_residual();
    let mut sampler = lagrangian_sampler(common.seed, &lh.guards());
    let euler = is_zero_guarded(&res, &lh.guards(), &mut sampler, 20, 1e-9)?;
    let file = print_structure(&Structure::HomLagrangian(lh.clone()));
    let text = format!("{file}# chart u0 > 0; Euler identity: {}\n", zero_text(&euler));
    let json = merge(
        header("homogenize", common, &loaded),
        json!({ "input_lagrangian": l.expr().to_string(), "homogeneous": lh.expr().to_string(), "chart": "u0 > 0", "euler": zero_verdict(&euler) }),
    );
    Ok(Report { json, text, exit: 0 })
}

pub fn dehomogenize(common: &Common, trials: usize) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let Structure::HomLagrangian(lh) = &loaded.structure else {
        return Err(CliError::Input(format!("`{}` is not a homlagrangian", common.source)));
    };
    let mut sampler = lagrangian_sampler(common.seed, &lh.guards());
    let l = lag::dehomogenize(lh, &mut sampler, trials.max(1))?;
    let text = print_structure(&Structure::Lagrangian(l.clone()));
    let json = merge(
        header("dehomogenize", common, &loaded),
        json!({ "homogeneous": lh.expr().to_string(), "lagrangian": l.expr().to_string() }),
    );
    Ok(Report { json, text, exit: 0 })
}

fn expr_matrix(m: &[Vec<pathvar::Expr>]) -> Json {
    Json::Array(m.iter().map(|r| Json::Array(r.iter().map(|e| Json::String(e.to_string())).collect())).collect())
}

pub fn hessian(common: &Common) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let (vars, h, det, what) = match (&loaded.structure, loaded.lagrangian()) {
        (Structure::HomLagrangian(lh), _) => {
            let vars: Vec<Var> = (0..=lh.n()).map(|i| Var::U(i as u16)).collect();
            let h = lag::hessian(lh.expr(), &vars);
            let det = pathvar::lagrange::det_symbolic(&h);
            (vars, h, det, lh.expr().clone())
        }
        (_, Some(l)) => {
            let f = hessian_phi(&l);
            let vars: Vec<Var> = (1..=l.n()).map(|i| Var::Dy(i as u16)).collect();
            (vars, f.phi, f.det, l.expr().clone())
        }
        _ => return Err(CliError::Input(format!("`{}` is not a Lagrangian", common.source))),
    };
    let mut text = String::new();
    let _ = writeln!(text, "L = {what}");
    for (i, a) in vars.iter().enumerate() {
        for (j, b) in vars.iter().enumerate().skip(i) {
            if !h[i][j].is_zero() {
                let _ = writeln!(text, "d2L/d{a}d{b} = {}", h[i][j]);
            }
        }
    }
    let _ = writeln!(text, "det = {det}");
    let json = merge(
        header("hessian", common, &loaded),
        json!({
            "lagrangian": what.to_string(),
            "variables": vars.iter().map(|v| v.name()).collect::<Vec<_>>(),
            "hessian": expr_matrix(&h),
            "det": det.to_string(),
        }),
    );
    Ok(Report { json, text, exit: 0 })
}

pub fn convexity(common: &Common, trials: usize) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let members: Vec<HomLagrangian> = match (&loaded.structure, loaded.lagrangian()) {
        (Structure::HomLagrangian(lh), _) => vec![lh.clone()],
        (Structure::PsiFamily(f), _) => (0..f.len()).map(|k| f.lagrangian(k)).collect(),
        (_, Some(l)) => vec![lag::homogenize(&l)],
        _ => return Err(CliError::Input(format!("`{}` has no homogeneous Lagrangian", common.source))),
    };
    if trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let mut text = String::new();
    let _ = writeln!(text, "input: {} (n = {}, seed {}, {trials} samples each)", common.source, loaded.n(), common.seed);
    let _ = writeln!(text, "{:<8} {:<12} {:>10} {:>10} {:>10}", "member", "summary", "indefinite", "degenerate", "definite");
    let mut rows = Vec::new();
    for (k, lh) in members.iter().enumerate() {
        let mut sampler = lagrangian_sampler(common.seed, &lh.guards()).with_interval(Var::U(0), Interval::open(0.25, 2.0));
        let pts = sample_hom_points(lh, &BTreeSet::new(), &mut sampler, trials)?;
        let r = convexity_probe(lh, &pts)?;
        let indefinite = r.points.iter().filter(|c| c.squared.is_indefinite()).count();
        let definite = r.points.iter().filter(|c| c.squared.is_positive_definite()).count();
        let degenerate = r.points.len() - indefinite - definite;
        let (label, witness) = match r.summary {
            ConvexitySummary::PositiveDefinite => ("definite", None),
            ConvexitySummary::Indefinite { witness } => ("indefinite", Some(witness)),
            ConvexitySummary::Degenerate { witness } => ("degenerate", Some(witness)),
        };
        let _ = writeln!(text, "{:<8} {:<12} {:>10} {:>10} {:>10}", k + 1, label, indefinite, degenerate, definite);
        let mut row = json!({
            "member": k + 1,
            "lagrangian": lh.expr().to_string(),
            "summary": label,
            "indefinite": indefinite,
            "degenerate": degenerate,
            "definite": definite,
        });
        if let Some(w) = witness {
            let c = &r.points[w];
            let _ = writeln!(text, "         witness {}: eig Hess(L^2) = {:?}", c.point, c.squared.eigenvalues);
            row = merge(
                row,
                json!({
                    "witness": point(&c.point),
                    "eigenvalues_squared": c.squared.eigenvalues,
                    "eigenvalues_plain": c.plain.eigenvalues,
                }),
            );
        }
        rows.push(row);
    }
    let json = merge(header("convexity", common, &loaded), json!({ "samples": trials, "members": rows }));
    Ok(Report { json, text, exit: 0 })
}

pub fn reduce2(common: &Common) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let Structure::Lagrangian2(l2) = &loaded.structure else {
        return Err(CliError::Input(format!("`{}` is not a lagrangian2", common.source)));
    };
    let r = reduce_second_order(l2)?;
    let mut text = String::new();
    let _ = writeln!(text, "L2 = {}", l2.expr());
    for (s, lam) in r.lambda.iter().enumerate() {
        let _ = writeln!(text, "lambda{s} = {lam}");
    }
    let _ = writeln!(text, "F = {}", r.f);
    let _ = writeln!(text, "Lambda = {}", r.potential);
    let _ = writeln!(text, "reduced L = {}", r.reduced);
    let _ = writeln!(text, "certificate L2 - L - dLambda/dt: {}", zero_text(&r.certificate_verdict));
    let json = merge(
        header("reduce2", common, &loaded),
        json!({
            "lagrangian2": l2.expr().to_string(),
            "lambda": r.lambda.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "f": r.f.to_string(),
            "potential": r.potential.to_string(),
            "reduced": r.reduced.to_string(),
            "certificate": { "expr": r.certificate.to_string(), "result": zero_verdict(&r.certificate_verdict) },
        }),
    );
    Ok(Report { json, text, exit: 0 })
}
