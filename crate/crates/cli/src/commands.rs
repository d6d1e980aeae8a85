use std::collections::BTreeSet;

use serde_json::{json, Value};

use pss_core::catalog::{build, CatalogError, FKind, FamilyId, FamilyParams, FamilySpec};
use pss_core::expr::{parse, EquationContext, EquationKind, Expr, Jet, Point, Var, ZeroTest, ZeroVerdict};
use pss_core::forms::verify_family_with;
use pss_core::frame::{export_mesh, integrate_frame, validate_surface, FrameError, FrameOptions, SurfaceMesh, SurfaceTolerances};
use pss_core::sff::{closed_form, codazzi_residuals, finite_jet_obstruction, gauss_residual, ImmersionParams, SecondFundamentalForm, SffError};
use pss_core::solutions::{linear_solution, sg_kink, traveling_wave, AnalyticSolution, GridSpec, SolutionError, SolutionGrid};

use crate::config::{RunConfig, SolutionKind};
use crate::Failure;

fn catalog_failure(e: CatalogError) -> Failure {
    match e {
        CatalogError::Context(_) | CatalogError::Zero(_) => Failure::check(e.to_string()),
        _ => Failure::usage(e.to_string()),
    }
}

fn sff_failure(e: SffError) -> Failure {
    match e {
        SffError::Context(_) | SffError::Zero(_) => Failure::check(e.to_string()),
        _ => Failure::usage(e.to_string()),
    }
}

fn solution_failure(e: SolutionError) -> Failure {
    Failure::usage(format!("solution: {e}"))
}

fn frame_failure(e: FrameError) -> Failure {
    match e {
        FrameError::MissingJet(_) | FrameError::Unbound(_) => Failure::usage(e.to_string()),
        _ => Failure::check(e.to_string()),
    }
}

fn family(cfg: &RunConfig) -> Result<FamilySpec, Failure> {
    let name = cfg.family.as_deref().ok_or_else(|| Failure::usage("no family given (use --family)"))?;
    let id: FamilyId = name.parse().map_err(catalog_failure)?;
    let mut input = FamilyParams { values: cfg.params.clone(), ..FamilyParams::default() };
    for (k, text) in &cfg.coefficients {
        let e = parse(text).map_err(|e| Failure::usage(format!("coefficient {k} = `{text}`: {e}")))?;
        input.exprs.insert(k.clone(), e);
    }
    if let Some(k) = &cfg.fkind {
        input.fkind = Some(k.parse::<FKind>().map_err(catalog_failure)?);
    }
    build(id, &input).map_err(catalog_failure)
}

fn immersion(cfg: &RunConfig) -> ImmersionParams {
    ImmersionParams { sign: cfg.imm_sign, l: cfg.l, gamma_im: cfg.gamma_im }
}

fn write_report(cfg: &RunConfig, report: &Value) -> Result<(), Failure> {
    if let Some(path) = &cfg.report {
        let text = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
        std::fs::write(path, text).map_err(|e| Failure::check(format!("cannot write report {}: {e}", path.display())))?;
    }
    Ok(())
}

fn header(cfg: &RunConfig, command: &str, spec: &FamilySpec) -> Value {
    json!({
        "command": command,
        "family": spec.id.name(),
        "params": spec.params,
        "fkind": spec.fkind.map(|k| k.name()),
        "rhs": spec.rhs.to_string(),
        "notes": spec.report,
        "seed": cfg.seed,
    })
}

fn verdicts(zt: &ZeroTest, exprs: &[Expr]) -> Result<Vec<ZeroVerdict>, Failure> {
    exprs.iter().map(|e| zt.check(e).map_err(|e| Failure::check(e.to_string()))).collect()
}

pub fn verify(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = family(cfg)?;
    let tr = spec.triple();
    println!("family {} ({})", spec.id.name(), spec.id.cli_name());
    for note in &spec.report {
        println!("note: {note}");
    }
    let rep = verify_family_with(&tr, &spec.zero_test().with_seed(cfg.seed));
    let structure = if rep.passed() { "OK" } else { "FAILED" };
    println!("structure equations: {structure}");
    for (i, (on, off)) in rep.on_shell.iter().zip(&rep.off_shell).enumerate() {
        println!("  R{}: on-shell {on}, off-shell {off}", i + 1);
    }
    if let Some(e) = &rep.error {
        println!("  error: {e}");
    }
    let mut ok = rep.passed();
    let mut report = header(cfg, "verify", &spec);
    report["structure"] = json!(rep);

    match closed_form(&spec, &immersion(cfg)) {
        Ok(s) => {
            let zt = s.zero_test(&tr).map_err(sff_failure)?.with_seed(cfg.seed);
            let [e1, e2] = codazzi_residuals(&tr, &s).map_err(sff_failure)?;
            let v = verdicts(&zt, &[gauss_residual(&s), e1, e2])?;
            let passed = v.iter().all(ZeroVerdict::is_zero);
            ok &= passed;
            println!("immersion closed-form: {}", if passed { "OK" } else { "FAILED" });
            println!("  a = {}\n  b = {}\n  c = {}", s.a, s.b, s.c);
            for (name, v) in ["gauss", "codazzi 1", "codazzi 2"].iter().zip(&v) {
                println!("  {name}: {v}");
            }
            report["immersion"] = json!({
                "a": s.a.to_string(),
                "b": s.b.to_string(),
                "c": s.c.to_string(),
                "gauss": v[0].to_string(),
                "codazzi": [v[1].to_string(), v[2].to_string()],
                "passed": passed,
            });
        }
        Err(SffError::NoImmersion(_)) => {
            println!("immersion closed-form: none");
            report["immersion"] = Value::Null;
        }
        Err(e) => return Err(sff_failure(e)),
    }
    report["passed"] = json!(ok);
    write_report(cfg, &report)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::check("verification failed"))
    }
}

pub fn obstruct(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = family(cfg)?;
    let verdict = match finite_jet_obstruction(&spec.triple(), cfg.order, &immersion(cfg)) {
        Ok(v) => v,
        Err(SffError::UnsupportedOrder(n)) => {
            return Err(Failure::usage(format!(
                "jet order {n} is not supported: the analyzer covers orders 0 and 1; higher orders need the general classification argument"
            )))
        }
        Err(e) => return Err(sff_failure(e)),
    };
    println!("family {} order {}: {}", spec.id.name(), verdict.order, verdict.kind());
    if let Some(s) = verdict.sff() {
        println!("  a = {}\n  b = {}\n  c = {}", s.a, s.b, s.c);
    }
    for step in &verdict.trace {
        println!("  [{}] {:?}: {}{}", step.branch, step.rule, step.expr, if step.note.is_empty() { String::new() } else { format!(" ({})", step.note) });
    }
    let mut report = header(cfg, "obstruct", &spec);
    report["verdict"] = verdict.to_json();
    write_report(cfg, &report)
}

/// `(λ, ξ, τ)` when `rhs = λ u + ξ u_x + τ`.
fn linear_coefficients(rhs: &Expr, zt: &ZeroTest) -> Option<(f64, f64, f64)> {
    let origin = Point::new().with(Var::z(0), 0.0).with(Var::z(1), 0.0);
    let lambda = rhs.partial(&Var::z(0)).simplify().eval(&Point::new()).ok()?;
    let xi = rhs.partial(&Var::z(1)).simplify().eval(&Point::new()).ok()?;
    let tau = rhs.eval(&origin).ok()?;
    let n = pss_core::expr::number;
    let rest = (rhs - (n(lambda) * Expr::z(0) + n(xi) * Expr::z(1) + n(tau))).simplify();
    zt.check(&rest).ok()?.is_zero().then_some((lambda, xi, tau))
}

fn bound_context(spec: &FamilySpec) -> Result<EquationContext, Failure> {
    let rhs = spec.bound_rhs();
    let ctx = match spec.ctx.kind() {
        EquationKind::Hyperbolic => EquationContext::hyperbolic(rhs),
        EquationKind::Evolution { .. } => EquationContext::evolution(rhs),
        EquationKind::Free => Ok(EquationContext::free()),
    };
    ctx.map_err(|e| Failure::usage(e.to_string()))
}

/// Largest `|residual| / (1 + |u|)` over up to 64 evenly strided grid nodes.
fn grid_residual(sol: &AnalyticSolution, grid: &GridSpec) -> Result<f64, SolutionError> {
    let stride = (grid.len() / 64).max(1);
    let mut worst: f64 = 0.0;
    for k in (0..grid.len()).step_by(stride) {
        let (x, t) = (grid.x(k % grid.nx), grid.t(k / grid.nx));
        let u = sol.jet(Jet::z(0), x, t)?;
        worst = worst.max(sol.residual(x, t)?.abs() / (1.0 + u.abs()));
    }
    Ok(worst)
}

fn solution_grid(cfg: &RunConfig, spec: &FamilySpec, jets: &[Jet]) -> Result<(String, SolutionGrid), Failure> {
    if cfg.solution == SolutionKind::File {
        let path = cfg.input.as_deref().ok_or_else(|| Failure::usage("--solution file needs --input"))?;
        let read = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) { SolutionGrid::read_csv(path) } else { SolutionGrid::read_binary(path) };
        return Ok((format!("file({})", path.display()), read.map_err(solution_failure)?));
    }
    let grid: GridSpec = cfg.grid.parse().map_err(solution_failure)?;
    let zt = ZeroTest::default().with_seed(cfg.seed);
    let hyperbolic = spec.ctx.is_hyperbolic();
    let rhs = spec.bound_rhs();
    let sol = match cfg.solution {
        SolutionKind::Kink => {
            let same = hyperbolic && zt.check(&(&rhs - Expr::z(0).sin())).is_ok_and(|v| v.is_zero());
            if !same {
                return Err(Failure::usage(format!("kink solves u_xt = sin u, but {} has right-hand side {rhs}", spec.id)));
            }
            sg_kink(cfg.a)
        }
        SolutionKind::Linear => {
            let Some((lambda, xi, tau)) = linear_coefficients(&rhs, &zt).filter(|_| hyperbolic) else {
                return Err(Failure::usage(format!("linear solution needs u_xt = λu + ξu_x + τ, found {rhs}")));
            };
            linear_solution(lambda, xi, tau, cfg.p, cfg.amplitude)
        }
        SolutionKind::Wave => {
            let s = [grid.x(0), grid.x(grid.nx.saturating_sub(1))]
                .into_iter()
                .flat_map(|x| [grid.t(0), grid.t(grid.nt.saturating_sub(1))].map(|t| x + cfg.c * t));
            let range = s.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            traveling_wave(&bound_context(spec)?, cfg.c, cfg.wave_data.0, cfg.wave_data.1, range)
        }
        SolutionKind::Expr => {
            let text = cfg.u.as_deref().ok_or_else(|| Failure::usage("--solution expr needs --u"))?;
            let u = parse(text).map_err(|e| Failure::usage(format!("--u `{text}`: {e}")))?;
            let sol = AnalyticSolution::from_expr(text, u, bound_context(spec)?).map_err(solution_failure)?;
            let r = grid_residual(&sol, &grid).map_err(solution_failure)?;
            if !(r < 1e-8) {
                return Err(Failure::usage(format!("u = {text} does not solve the equation: residual {r:.3e}")));
            }
            Ok(sol)
        }
        SolutionKind::File => unreachable!(),
    }
    .map_err(solution_failure)?;
    let sampled = sol.sample(&grid, jets).map_err(solution_failure)?;
    Ok((sol.name.clone(), sampled))
}

fn needed_jets(spec: &FamilySpec, s: &SecondFundamentalForm) -> Vec<Jet> {
    let mut jets = BTreeSet::new();
    for e in spec.f.iter().flatten().chain(s.components()) {
        jets.extend(e.jets());
    }
    jets.into_iter().collect()
}

pub fn immerse(cfg: &RunConfig) -> Result<(), Failure> {
    let out = cfg.out.as_deref().ok_or_else(|| Failure::usage("no output path given (use --out)"))?;
    let spec = family(cfg)?;
    let tr = spec.triple();
    let s = closed_form(&spec, &immersion(cfg)).map_err(sff_failure)?;
    let (name, grid) = solution_grid(cfg, &spec, &needed_jets(&spec, &s))?;
    let opts = FrameOptions { eps_deg: cfg.eps_deg, ..FrameOptions::default() };
    let field = integrate_frame(&tr, &s, &grid, &opts).map_err(frame_failure)?;
    let diag = validate_surface(&field);
    let mesh = SurfaceMesh::from_field(&field);
    let export = export_mesh(&mesh, &diag, out).map_err(frame_failure)?;
    let tol = SurfaceTolerances { mean_k_error: cfg.mean_k_error, max_metric_error: cfg.max_metric_error, max_path_residual: cfg.max_path_residual };
    let failures = diag.failures(&tol);

    println!("family {} solution {name}", spec.id.name());
    println!("grid {}x{}, integrated {} of {} nodes ({} valid)", grid.spec.nx, grid.spec.nt, diag.component_nodes, diag.nodes, diag.valid_nodes);
    println!("mean |K+1| = {:.3e}, max |K+1| = {:.3e} over {} vertices", diag.mean_k_error, diag.max_k_error, diag.curvature_vertices);
    println!("metric error = {:.3e}, gauss map error = {:.3e}", diag.max_metric_error, diag.max_gauss_map_error);
    println!("path residual = {:.3e}, frame drift = {:.3e}", diag.max_path_residual, diag.max_drift);
    println!("mesh {} ({} vertices, {} triangles), diagnostics {}", out.display(), export.vertices, export.triangles, export.report.display());
    for w in &export.warnings {
        println!("warning: {w}");
    }
    for f in &failures {
        println!("FAILED: {f}");
    }

    let mut report = header(cfg, "immerse", &spec);
    report["solution"] = json!({ "kind": cfg.solution, "name": name });
    report["grid"] = json!(grid.spec);
    report["eps_deg"] = json!(cfg.eps_deg);
    report["tolerances"] = json!(tol);
    report["diagnostics"] = json!(diag);
    report["mesh"] = json!(export);
    report["failures"] = json!(failures);
    report["passed"] = json!(failures.is_empty());
    write_report(cfg, &report)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::check("surface diagnostics exceed tolerances"))
    }
}
