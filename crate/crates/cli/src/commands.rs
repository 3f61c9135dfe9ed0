use crate::config::{Command, ExperimentConfig, SobolevCase};
use crate::output::{csv, num, OutputDir};
use crate::svg::{line_plot, Series};
use crate::CliError;
use loghardy_core::analysis::{
    asymptotic_exponent_fit, radial_hardy_estimate, radial_lemma_check, scaling_family_quotient,
    sobolev_constant_estimate, test_function_bound_l, DescentOptions, FitResult, FitWindow, LDomainBound,
    RadialHardyEstimate, RadialLemmaReport,
};
use loghardy_core::assembly::{
    boundary_mass, constraint_vector, hardy_mass, plain_mass, stiffness, BetaSpec, SymmetricOperator,
};
use loghardy_core::eigensolve::{
    euler_lagrange_residual, pencil_max_eigen, radial_oracle_eigen, robin_first_eigen, second_neumann_eigen,
    EigOptions, EigResult, RadialBoundary,
};
use loghardy_core::geometry::{build_mesh, refine, DomainSpec, Mesh, Point};
use loghardy_core::weights::{admissible_grid, scan_sup, Admissibility, ScanQuantity, WeightParams};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

fn eig_options(cfg: &ExperimentConfig) -> EigOptions {
    EigOptions {
        tol: cfg.solver.tol,
        residual_tol: cfg.solver.residual_tol,
        max_iter: cfg.solver.max_iter,
        ..EigOptions::default()
    }
}

/// Meshes of `spec` at every refinement level up to the configured one.
fn mesh_levels(cfg: &ExperimentConfig, spec: &DomainSpec) -> Result<Vec<Mesh>, CliError> {
    let m = &cfg.mesh;
    let mut levels = vec![build_mesh(spec, m.target_h, m.grading_q, m.rings).map_err(compute)?];
    for _ in 0..m.refinements {
        let next = refine(levels.last().expect("at least one level"));
        levels.push(next);
    }
    Ok(levels)
}

fn finest_mesh(cfg: &ExperimentConfig, spec: &DomainSpec) -> Result<Mesh, CliError> {
    Ok(mesh_levels(cfg, spec)?.pop().expect("at least one level"))
}

/// Record of one constrained eigenvalue solve.
#[derive(Clone, Debug, Serialize)]
struct EigenEntry {
    a: f64,
    dofs: usize,
    #[serde(flatten)]
    result: EigResult,
    euler_lagrange_residual: f64,
}

fn solve_neumann(mesh: &Mesh, a: f64, opts: &EigOptions) -> Result<EigenEntry, CliError> {
    let k = stiffness(mesh).map_err(compute)?;
    let m = hardy_mass(mesh, a).map_err(compute)?;
    let w = constraint_vector(mesh, a).map_err(compute)?;
    let result = second_neumann_eigen(&k, &m, &w, opts).map_err(compute)?;
    let el = euler_lagrange_residual(&result.coefficients, result.lambda, &k, &m).map_err(compute)?;
    Ok(EigenEntry { a, dofs: mesh.num_vertices(), result, euler_lagrange_residual: el })
}

fn eigvec_rows<'m>(mesh: &'m Mesh, a: f64, u: &[f64]) -> impl Iterator<Item = Vec<String>> + 'm {
    let a = num(a);
    mesh.vertices.iter().zip(u.to_vec()).map(move |(p, v)| vec![a.clone(), num(p.x()), num(p.y()), num(v)])
}

#[derive(Serialize)]
struct OracleMode {
    m: u32,
    value: f64,
    coarse: f64,
    fine: f64,
}

#[derive(Serialize)]
struct OracleComparison {
    a: f64,
    radius: f64,
    modes: Vec<OracleMode>,
    oracle_min: f64,
    fem_lambda: f64,
    relative_error: f64,
    /// Next Ritz value of the FEM solve against the same minimum.
    fem_next_lambda: Option<f64>,
    next_relative_error: Option<f64>,
}

fn run_eigen(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let mesh = finest_mesh(cfg, &cfg.domain)?;
    let opts = eig_options(cfg);
    let entries: Vec<EigenEntry> =
        cfg.eigen.a_values.par_iter().map(|&a| solve_neumann(&mesh, a, &opts)).collect::<Result<_, _>>()?;
    let converged = entries.iter().all(|e| e.result.converged);
    out.write_json("lambda.json", Command::Eigen, cfg, &entries)?;
    let rows = entries.iter().flat_map(|e| eigvec_rows(&mesh, e.a, &e.result.coefficients));
    out.write("eigvec.csv", csv(&["a", "x", "y", "u"], rows).as_bytes())?;

    let mut oracle_points = Vec::new();
    if let DomainSpec::Disk { radius } = cfg.domain {
        let comparisons: Vec<OracleComparison> = entries
            .par_iter()
            .map(|e| {
                let modes: Vec<OracleMode> = (1..=cfg.eigen.oracle_modes)
                    .map(|m| {
                        radial_oracle_eigen(e.a, m, radius, cfg.eigen.oracle_grid, RadialBoundary::Neumann)
                            .map(|o| OracleMode { m, value: o.value, coarse: o.coarse, fine: o.fine })
                    })
                    .collect::<Result<_, _>>()
                    .map_err(compute)?;
                let oracle_min = modes.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
                let rel = |x: f64| (x - oracle_min) / oracle_min;
                Ok(OracleComparison {
                    a: e.a,
                    radius,
                    oracle_min,
                    fem_lambda: e.result.lambda,
                    relative_error: rel(e.result.lambda),
                    fem_next_lambda: e.result.next_lambda,
                    next_relative_error: e.result.next_lambda.map(rel),
                    modes,
                })
            })
            .collect::<Result<_, CliError>>()?;
        oracle_points = comparisons.iter().map(|c| (c.a, c.oracle_min)).collect();
        out.write_json("oracle_compare.json", Command::Eigen, cfg, &comparisons)?;
    }
    if cfg.outputs.emit_svg {
        let mut series = vec![Series { name: "FEM", points: entries.iter().map(|e| (e.a, e.result.lambda)).collect() }];
        if !oracle_points.is_empty() {
            series.push(Series { name: "radial oracle", points: oracle_points });
        }
        out.write("lambda.svg", line_plot("second eigenvalue", "a", "lambda", &series).as_bytes())?;
    }
    Ok(converged)
}

#[derive(Serialize)]
struct RobinReport {
    a: f64,
    beta: BetaSpec,
    dofs: usize,
    #[serde(flatten)]
    result: EigResult,
    beta_min: f64,
    beta_sup_norm: f64,
    /// `∫ β dS` over the Robin part of the boundary.
    beta_boundary_integral: f64,
    expected_sign: &'static str,
    sign_law_holds: Option<bool>,
    /// `‖β‖ R log(a/R)` for constant positive β on a disk.
    disk_upper_bound: Option<f64>,
    /// `max(0, −min u) / max |u|` after the sign normalization.
    sign_defect: f64,
}

fn run_robin(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let mesh = finest_mesh(cfg, &cfg.domain)?;
    let a = cfg.robin.a;
    let beta = &cfg.robin.beta;
    let k = stiffness(&mesh).map_err(compute)?;
    let b = boundary_mass(&mesh, beta).map_err(compute)?;
    let m = hardy_mass(&mesh, a).map_err(compute)?;
    let result = robin_first_eigen(&k, &b, &m, &eig_options(cfg)).map_err(compute)?;
    let ones = vec![1.0; mesh.num_vertices()];
    let beta_integral = b.quadratic_form(&ones);
    let beta_min = (0..3600).map(|i| beta.value(TAU * i as f64 / 3600.0)).fold(f64::INFINITY, f64::min);
    let beta_sup = beta.sup_norm();
    let (expected_sign, sign_law_holds) = if beta_sup == 0.0 {
        ("zero", Some(result.lambda.abs() <= 1e-8))
    } else if beta_min >= 0.0 {
        ("positive", Some(result.lambda > 0.0))
    } else if beta_integral < 0.0 {
        ("negative", Some(result.lambda < 0.0))
    } else {
        ("undetermined", None)
    };
    let disk_upper_bound = match (&cfg.domain, beta) {
        (DomainSpec::Disk { radius }, BetaSpec::Constant { value }) if *value > 0.0 => {
            Some(value * radius * (a / radius).ln())
        }
        _ => None,
    };
    let u = &result.coefficients;
    let peak = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let lowest = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let sign_defect = if peak > 0.0 { (-lowest).max(0.0) / peak } else { f64::NAN };
    let converged = result.converged;
    let rows = eigvec_rows(&mesh, a, u).collect::<Vec<_>>();
    out.write("robin_eigvec.csv", csv(&["a", "x", "y", "u"], rows).as_bytes())?;
    let report = RobinReport {
        a,
        beta: beta.clone(),
        dofs: mesh.num_vertices(),
        result,
        beta_min,
        beta_sup_norm: beta_sup,
        beta_boundary_integral: beta_integral,
        expected_sign,
        sign_law_holds,
        disk_upper_bound,
        sign_defect,
    };
    out.write_json("robin.json", Command::Robin, cfg, &report)?;
    Ok(converged)
}

#[derive(Serialize)]
struct Realization {
    a: f64,
    #[serde(rename = "L")]
    inner_radius: f64,
    domain: DomainSpec,
    eigen: EigenEntry,
    bound: LDomainBound,
    below_quarter: bool,
    within_chain: bool,
}

#[derive(Serialize)]
struct AdmissibleReport {
    grid: Vec<Admissibility>,
    admissible_count: usize,
    realizations: Vec<Realization>,
}

/// Tolerance on `λ ≤ chain value`.
const CHAIN_SLACK: f64 = 1e-3;

fn run_admissible(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let section = &cfg.admissible;
    let grid = admissible_grid(&section.a_values, &section.l_values).map_err(compute)?;
    let rows = grid.iter().map(|g| vec![num(g.a), num(g.inner_radius), num(g.integral), g.admissible.to_string()]);
    out.write("admissible.csv", csv(&["a", "L", "integral", "admissible"], rows).as_bytes())?;
    let opts = eig_options(cfg);
    let realizations: Vec<Realization> = grid
        .iter()
        .filter(|g| g.admissible)
        .take(section.realizations)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|g| {
            let domain = DomainSpec::LDomain {
                l: g.inner_radius,
                bump_angle: section.bump_angle,
                bump_amplitude: section.bump_amplitude,
            };
            let mesh = finest_mesh(cfg, &domain)?;
            let eigen = solve_neumann(&mesh, g.a, &opts)?;
            let bound = test_function_bound_l(&mesh, g.a).map_err(compute)?;
            let lambda = eigen.result.lambda;
            Ok(Realization {
                a: g.a,
                inner_radius: g.inner_radius,
                domain,
                below_quarter: lambda < 0.25,
                within_chain: lambda <= bound.chain_value + CHAIN_SLACK,
                eigen,
                bound,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let converged = realizations.iter().all(|r| r.eigen.result.converged);
    let report = AdmissibleReport { admissible_count: grid.iter().filter(|g| g.admissible).count(), grid, realizations };
    out.write_json("admissible.json", Command::Admissible, cfg, &report)?;
    Ok(converged)
}

#[derive(Serialize)]
struct SobolevRow {
    case: SobolevCase,
    level: usize,
    dofs: usize,
    c_estimate: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

#[derive(Serialize)]
struct ScalingRow {
    case: SobolevCase,
    lambda: f64,
    quotient: f64,
    ratio_to_unit_scale: f64,
}

#[derive(Serialize)]
struct SobolevReport {
    estimates: Vec<SobolevRow>,
    scaling: Vec<ScalingRow>,
    radial_hardy: Vec<RadialHardyEstimate>,
    radial_lemma: Vec<RadialLemmaReport>,
}

fn run_sobolev(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let section = &cfg.sobolev;
    let levels = mesh_levels(cfg, &cfg.domain)?;
    let opts = DescentOptions { max_iter: section.max_iter, tol: section.tol };
    let jobs: Vec<(SobolevCase, usize)> =
        section.cases.iter().flat_map(|c| (0..levels.len()).map(move |l| (*c, l))).collect();
    let estimates: Vec<SobolevRow> = jobs
        .par_iter()
        .map(|&(case, level)| {
            let est = sobolev_constant_estimate(&levels[level], &cfg.sobolev_params(&case), section.dirichlet, &opts)
                .map_err(compute)?;
            Ok(SobolevRow {
                case,
                level,
                dofs: est.dofs,
                c_estimate: est.c_estimate,
                iterations: est.iterations,
                converged: est.converged,
                history: est.history,
            })
        })
        .collect::<Result<_, CliError>>()?;

    let mut scaling = Vec::new();
    for case in &section.cases {
        for &offset in &section.scaling_offsets {
            let params = cfg.sobolev_params(case).with_mass_offset(offset);
            let unit = scaling_family_quotient(1.0, &params).map_err(compute)?;
            for &lambda in &section.scaling_lambdas {
                let quotient = scaling_family_quotient(lambda, &params).map_err(compute)?;
                scaling.push(ScalingRow {
                    case: SobolevCase { p: params.power, mass_exponent: params.mass_exponent, gradient_exponent: params.gradient_exponent },
                    lambda,
                    quotient,
                    ratio_to_unit_scale: quotient / unit,
                });
            }
        }
    }
    let a = cfg.weights.scale;
    let radial_hardy = section
        .radial_b_values
        .iter()
        .map(|&b| radial_hardy_estimate(a, b, section.radial_nodes))
        .collect::<Result<_, _>>()
        .map_err(compute)?;
    let radial_lemma = section
        .radial_b_values
        .iter()
        .map(|&b| radial_lemma_check(section.radial_samples, a, b, cfg.seed))
        .collect::<Result<_, _>>()
        .map_err(compute)?;

    let converged = estimates.iter().all(|e| e.converged);
    let rows = estimates.iter().map(|e| {
        vec![num(e.case.p), num(e.case.mass_exponent), num(e.case.gradient_exponent), e.level.to_string(), e.dofs.to_string(), num(e.c_estimate), e.iterations.to_string(), e.converged.to_string()]
    });
    out.write("sobolev.csv", csv(&["p", "A", "B", "level", "dofs", "c_estimate", "iterations", "converged"], rows).as_bytes())?;
    let rows = scaling.iter().map(|s| {
        vec![num(s.case.p), num(s.case.mass_exponent), num(s.case.gradient_exponent), num(s.lambda), num(s.quotient), num(s.ratio_to_unit_scale)]
    });
    out.write("scaling.csv", csv(&["p", "A", "B", "lambda", "quotient", "ratio"], rows).as_bytes())?;
    if cfg.outputs.emit_svg {
        let series: Vec<Series> = estimates
            .iter()
            .filter(|e| e.level + 1 == levels.len())
            .map(|e| Series {
                name: "descent",
                points: e.history.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect(),
            })
            .collect();
        out.write("sobolev_history.svg", line_plot("Sobolev quotient", "iteration", "quotient", &series).as_bytes())?;
    }
    let report = SobolevReport { estimates, scaling, radial_hardy, radial_lemma };
    out.write_json("sobolev.json", Command::Sobolev, cfg, &report)?;
    Ok(converged)
}

#[derive(Serialize)]
struct ScanEntry {
    quantity: ScanQuantity,
    params: WeightParams,
    sup_estimate: f64,
    argmax: (Point, f64),
    doubled_sup_estimate: Option<f64>,
    relative_change: Option<f64>,
    /// Supremum over centres for each radius.
    sup_by_radius: Vec<(f64, f64)>,
}

fn quantity_name(q: ScanQuantity) -> &'static str {
    match q {
        ScanQuantity::Muckenhoupt => "muckenhoupt",
        ScanQuantity::Adams => "adams",
    }
}

fn run_weights_scan(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let section = &cfg.scan;
    let mut entries = Vec::new();
    for &q in &section.quantities {
        let report = scan_sup(q, &cfg.weights, &section.grid).map_err(compute)?;
        let doubled = if section.doubling_check {
            Some(scan_sup(q, &cfg.weights, &section.grid.doubled()).map_err(compute)?.sup_estimate)
        } else {
            None
        };
        let radii = section.grid.radii();
        let sup_by_radius = radii
            .iter()
            .map(|&r| {
                let sup = report
                    .grid
                    .iter()
                    .zip(&report.values)
                    .filter(|((_, rr), _)| *rr == r)
                    .fold(0.0_f64, |m, (_, v)| m.max(*v));
                (r, sup)
            })
            .collect();
        out.write(&format!("scan_{}.csv", quantity_name(q)), report.to_csv().as_bytes())?;
        entries.push(ScanEntry {
            quantity: q,
            params: cfg.weights,
            sup_estimate: report.sup_estimate,
            argmax: report.argmax,
            doubled_sup_estimate: doubled,
            relative_change: doubled.map(|d| (d - report.sup_estimate).abs() / report.sup_estimate),
            sup_by_radius,
        });
    }
    if cfg.outputs.emit_svg {
        let series: Vec<Series> = entries
            .iter()
            .map(|e| Series {
                name: quantity_name(e.quantity),
                points: e.sup_by_radius.iter().map(|&(r, s)| (r.log10(), s.log10())).collect(),
            })
            .collect();
        out.write("weights_scan.svg", line_plot("scan supremum by radius", "log10 r", "log10 sup", &series).as_bytes())?;
    }
    out.write_json("weights_scan.json", Command::WeightsScan, cfg, &entries)?;
    Ok(true)
}

#[derive(Serialize)]
struct AsymptoticsReport {
    a: f64,
    eigen: EigenEntry,
    fits: Vec<FitResult>,
    /// Relative change of the scaled supremum between the first two windows.
    sup_variation: Option<f64>,
}

fn run_asymptotics(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let a = cfg.asymptotics.a;
    let mesh = finest_mesh(cfg, &cfg.domain)?;
    let eigen = solve_neumann(&mesh, a, &eig_options(cfg))?;
    let grading = mesh.grading;
    let [outer, inner] = cfg.asymptotics.window_rings.unwrap_or_else(|| {
        let inner = grading.rings.saturating_sub(2).max(1);
        [(grading.rings / 2).min(inner - 1), inner]
    });
    if outer >= inner || inner > grading.rings {
        return Err(CliError::Config(format!(
            "asymptotics.window_rings: need outer < inner ≤ {}, got [{outer}, {inner}]",
            grading.rings
        )));
    }
    let mut windows = vec![FitWindow::between_rings(&grading, outer, inner)];
    if outer + 1 < inner {
        windows.push(FitWindow::between_rings(&grading, outer + 1, inner));
    }
    let fits: Vec<FitResult> = windows
        .iter()
        .map(|w| asymptotic_exponent_fit(&eigen.result, &mesh, a, Some(*w)))
        .collect::<Result<_, _>>()
        .map_err(compute)?;
    let sup_variation = (fits.len() > 1).then(|| (fits[0].sup_scaled - fits[1].sup_scaled).abs() / fits[0].sup_scaled);
    out.write("rays.csv", fits[0].samples_csv(a).as_bytes())?;
    if cfg.outputs.emit_svg {
        let fit = &fits[0];
        let rays: Vec<usize> = {
            let mut r: Vec<usize> = fit.ray_samples.iter().map(|s| s.ray).collect();
            r.dedup();
            r.into_iter().take(4).collect()
        };
        let series: Vec<Series> = rays
            .iter()
            .map(|&ray| Series {
                name: "ray",
                points: fit
                    .ray_samples
                    .iter()
                    .filter(|s| s.ray == ray)
                    .map(|s| ((a / s.r).ln().ln(), s.u.abs().ln()))
                    .collect(),
            })
            .collect();
        out.write("asymptotics.svg", line_plot("eigenfunction near the origin", "log log(a/r)", "log|u|", &series).as_bytes())?;
    }
    let converged = eigen.result.converged;
    let report = AsymptoticsReport { a, eigen, fits, sup_variation };
    out.write_json("asymptotics.json", Command::Asymptotics, cfg, &report)?;
    Ok(converged)
}

#[derive(Serialize)]
struct PencilRow {
    epsilon: f64,
    /// Largest eigenvalue of the pencil; `null` when unbounded.
    constant: f64,
    unbounded: bool,
    converged: bool,
    /// Rayleigh quotient of the constant function, a lower bound.
    constant_function_bound: f64,
}

#[derive(Serialize)]
struct PencilReport {
    a: f64,
    dofs: usize,
    hardy: Vec<PencilRow>,
    trace: Vec<PencilRow>,
}

fn pencil_rows(
    epsilons: &[f64],
    positive: &SymmetricOperator,
    k: &SymmetricOperator,
    m0: &SymmetricOperator,
    gradient_factor: impl Fn(f64) -> f64 + Sync,
    opts: &EigOptions,
) -> Result<Vec<PencilRow>, CliError> {
    let ones = vec![1.0; k.dim()];
    let lower = positive.quadratic_form(&ones) / m0.quadratic_form(&ones);
    epsilons
        .par_iter()
        .map(|&eps| {
            let a = SymmetricOperator::combine(&[(1.0, positive), (-gradient_factor(eps), k)]).map_err(compute)?;
            let r = pencil_max_eigen(&a, m0, opts).map_err(compute)?;
            Ok(PencilRow {
                epsilon: eps,
                constant: r.lambda,
                unbounded: r.unbounded,
                converged: r.converged || r.unbounded,
                constant_function_bound: lower,
            })
        })
        .collect()
}

fn run_pencil(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let section = &cfg.pencil;
    let mesh = finest_mesh(cfg, &cfg.domain)?;
    let opts = eig_options(cfg);
    let k = stiffness(&mesh).map_err(compute)?;
    let m0 = plain_mass(&mesh).map_err(compute)?;
    let mw = hardy_mass(&mesh, section.a).map_err(compute)?;
    let hardy = pencil_rows(&section.epsilons, &mw, &k, &m0, |e| 4.0 + e, &opts)?;
    let trace = if section.trace {
        let b1 = boundary_mass(&mesh, &BetaSpec::Constant { value: 1.0 }).map_err(compute)?;
        pencil_rows(&section.epsilons, &b1, &k, &m0, |e| e, &opts)?
    } else {
        Vec::new()
    };
    let converged = hardy.iter().chain(&trace).all(|r| r.converged);
    let rows = hardy
        .iter()
        .map(|r| ("hardy", r))
        .chain(trace.iter().map(|r| ("trace", r)))
        .map(|(kind, r)| vec![kind.to_string(), num(r.epsilon), num(r.constant), r.unbounded.to_string(), num(r.constant_function_bound)]);
    out.write("pencil.csv", csv(&["pencil", "epsilon", "constant", "unbounded", "constant_function_bound"], rows).as_bytes())?;
    let report = PencilReport { a: section.a, dofs: mesh.num_vertices(), hardy, trace };
    out.write_json("pencil.json", Command::Pencil, cfg, &report)?;
    Ok(converged)
}

/// Runs one experiment; returns whether every iterative solve converged.
pub fn dispatch(command: Command, cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    match command {
        Command::Eigen => run_eigen(cfg, out),
        Command::Robin => run_robin(cfg, out),
        Command::Admissible => run_admissible(cfg, out),
        Command::Sobolev => run_sobolev(cfg, out),
        Command::WeightsScan => run_weights_scan(cfg, out),
        Command::Asymptotics => run_asymptotics(cfg, out),
        Command::Pencil => run_pencil(cfg, out),
    }
}
