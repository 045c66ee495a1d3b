//! Subcommand implementations. Each returns the JSON report; CSV output is
//! written as a side effect. Timings never include file I/O.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use csfmm::apps::bve::{vorticity_error, BveConfig, BveInitial, BveSolver, BveState, RemeshFit};
use csfmm::apps::greens::solve_greens;
use csfmm::apps::metrics::{loglog_slope, relative_l2_error};
use csfmm::apps::sal::{default_sal_config, sal_potential};
use csfmm::grid::{build_grid, GridKind, SphericalGrid};
use csfmm::kernels::{Biharmonic, BiotSavart, KernelKind, Laplace, Sal, SalForm, SalParams};
use csfmm::summation::{
    direct_sum, fast_sum, relative_l2_gap, relative_max_error, with_threads, Method, SumReport, TraversalConfig,
};
use csfmm::Vec3;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::fields::Field;
use crate::io::{read_particles, read_reference, write_json, ParticleFormat, Table};

pub fn run(cmd: &Command) -> CliResult<(Value, Option<&Path>)> {
    match cmd {
        Command::Grid(a) => Ok((grid(a)?, a.output.report.as_deref())),
        Command::Sum(a) => Ok((sum(a)?, a.output.report.as_deref())),
        Command::Solve(a) => Ok((solve(a)?, a.output.report.as_deref())),
        Command::Bve(a) => Ok((bve(a)?, a.report.as_deref())),
        Command::Sal(a) => Ok((sal(a)?, a.output.report.as_deref())),
        Command::Convergence(a) => Ok((convergence(a)?, a.output.report.as_deref())),
        Command::Bench(a) => Ok((bench(a)?, a.output.report.as_deref())),
    }
}

/// Prints the report, or writes it when a path is given.
pub fn emit(report: &Value, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => write_json(p, report),
        None => {
            let text = serde_json::to_string_pretty(report)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Option parsing

fn parse_kind(s: &str) -> CliResult<GridKind> {
    s.parse().map_err(|e: csfmm::Error| CliError::Grid(e.to_string()))
}

/// `kind:level`.
pub fn parse_grid_spec(s: &str) -> CliResult<(GridKind, u32)> {
    let (kind, level) =
        s.split_once(':').ok_or_else(|| CliError::Grid(format!("grid `{s}` must look like kind:level")))?;
    let level = level.trim().parse().map_err(|_| CliError::Grid(format!("bad grid level `{level}`")))?;
    Ok((parse_kind(kind.trim())?, level))
}

fn make_grid(kind: GridKind, level: u32) -> CliResult<SphericalGrid> {
    build_grid(kind, level).map_err(|e| CliError::Grid(e.to_string()))
}

fn parse_kernel(s: &str) -> CliResult<KernelKind> {
    s.parse()
        .map_err(|_| CliError::Kernel(format!("unknown kernel `{s}`; use laplace, biharmonic, biot_savart or sal")))
}

fn parse_method(s: &str) -> CliResult<Method> {
    s.parse().map_err(|_| CliError::Method(format!("unknown method `{s}`; use direct, cstc or csfmm")))
}

struct Resolved {
    kernel: KernelKind,
    cfg: TraversalConfig,
    threads: Option<usize>,
    stats: bool,
}

fn resolve(t: &Tuning, mut cfg: TraversalConfig, kernel: KernelKind) -> CliResult<Resolved> {
    let kernel = t.kernel.as_deref().map_or(Ok(kernel), parse_kernel)?;
    if let Some(m) = &t.method {
        cfg.method = parse_method(m)?;
    }
    cfg.mac = t.mac.unwrap_or(cfg.mac);
    cfg.degree = t.degree.unwrap_or(cfg.degree);
    cfg.leaf_size = t.n0.or(cfg.leaf_size);
    cfg.shrink = cfg.shrink && !t.no_shrink;
    cfg.validate()?;
    if t.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    Ok(Resolved { kernel, cfg, threads: t.threads, stats: t.stats })
}

fn sal_params(c: &SalCoefficients) -> CliResult<SalParams> {
    let d = SalParams::default();
    let form = match c.sal_form.as_deref() {
        None => d.form,
        Some(s) => s.parse::<SalForm>()?,
    };
    let p = SalParams {
        a1: c.a1.unwrap_or(d.a1),
        b0: c.b0.unwrap_or(d.b0),
        b1: c.b1.unwrap_or(d.b1),
        rho_ratio: c.rho_ratio.unwrap_or(d.rho_ratio),
        form,
    };
    if p.rho_ratio.is_nan() || p.rho_ratio <= 0.0 || ![p.a1, p.b0, p.b1].iter().all(|v| v.is_finite()) {
        return Err(CliError::Config("SAL coefficients must be finite with a positive density ratio".into()));
    }
    Ok(p)
}

fn threaded<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        Some(n) => Ok(with_threads(n, f)?),
        None => Ok(f()),
    }
}

fn config_json(r: &Resolved) -> Value {
    json!({
        "kernel": r.kernel.name(),
        "method": r.cfg.method.name(),
        "mac": r.cfg.mac,
        "degree": r.cfg.degree,
        "n0": r.cfg.leaf_size(),
        "shrink": r.cfg.shrink,
    })
}

fn environment(threads: Option<usize>) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "os": std::env::consts::OS,
        "arch": std::env::consts::ARCH,
        "available_parallelism": std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        "threads": threads,
    })
}

fn sum_report_json(rep: &SumReport, stats: bool) -> CliResult<Value> {
    let t = rep.timings;
    let mut v = json!({
        "timings": serde_json::to_value(t)?,
        "phase_sum_over_total": if t.total > 0.0 { t.phase_sum() / t.total } else { 1.0 },
        "counts": serde_json::to_value(rep.counts)?,
    });
    if stats {
        v["source_tree"] = serde_json::to_value(&rep.source_tree)?;
        v["target_tree"] = serde_json::to_value(&rep.target_tree)?;
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Particle input

struct Loaded {
    positions: Vec<Vec3>,
    weights: Vec<f64>,
    areas: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
    field: Option<Field>,
    source: String,
}

fn load(input: &Input, default_field: Field) -> CliResult<Loaded> {
    if let Some(path) = &input.particles {
        if input.field.is_some() {
            return Err(CliError::Config("--field applies to built-in grids, not particle files".into()));
        }
        let p = read_particles(path)?;
        return Ok(Loaded {
            positions: p.positions,
            weights: p.weights,
            areas: p.areas,
            values: p.values,
            field: None,
            source: path.display().to_string(),
        });
    }
    let spec =
        input.grid.as_deref().ok_or_else(|| CliError::Config("one of --grid or --particles is required".into()))?;
    let (kind, level) = parse_grid_spec(spec)?;
    let g = make_grid(kind, level)?;
    let field = input.field.as_deref().map_or(Ok(default_field), str::parse)?;
    let values = field.values(&g.centers, input.seed);
    let weights = values.iter().zip(&g.areas).map(|(v, a)| v * a).collect();
    Ok(Loaded {
        positions: g.centers,
        weights,
        areas: Some(g.areas),
        values: Some(values),
        field: Some(field),
        source: format!("{kind}:{level}"),
    })
}

// ---------------------------------------------------------------------------
// Potentials of either output dimension

#[derive(Clone, Debug)]
pub enum Potentials {
    Scalar(Vec<f64>),
    Vector(Vec<Vec3>),
}

impl Potentials {
    fn columns(&self) -> &'static [&'static str] {
        match self {
            Potentials::Scalar(_) => &["phi"],
            Potentials::Vector(_) => &["phi_x", "phi_y", "phi_z"],
        }
    }

    fn row(&self, i: usize) -> Vec<f64> {
        match self {
            Potentials::Scalar(v) => vec![v[i]],
            Potentials::Vector(v) => v[i].to_array().to_vec(),
        }
    }

    fn from_rows(rows: Vec<Vec<f64>>, like: &Potentials) -> CliResult<Self> {
        let width = like.columns().len();
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(CliError::Dimension(format!("reference has {} value columns, expected {width}", r.len())));
        }
        Ok(match like {
            Potentials::Scalar(_) => Potentials::Scalar(rows.into_iter().map(|r| r[0]).collect()),
            Potentials::Vector(_) => {
                Potentials::Vector(rows.into_iter().map(|r| Vec3::new(r[0], r[1], r[2])).collect())
            }
        })
    }

    /// Relative errors against `reference`; area weighted for scalars when
    /// areas are known.
    fn compare(&self, reference: &Potentials, areas: Option<&[f64]>) -> CliResult<Value> {
        Ok(match (self, reference) {
            (Potentials::Scalar(a), Potentials::Scalar(b)) => {
                let (l2, metric) = match areas {
                    Some(w) => (relative_l2_error(a, b, b, w)?, "area_weighted"),
                    None => (relative_l2_gap(a, b), "unweighted"),
                };
                json!({ "relative_l2_error": l2, "l2_metric": metric, "relative_max_error": relative_max_error(a, b) })
            }
            (Potentials::Vector(a), Potentials::Vector(b)) => json!({
                "relative_l2_error": relative_l2_gap(a, b),
                "l2_metric": "unweighted",
                "relative_max_error": relative_max_error(a, b),
            }),
            _ => return Err(CliError::Dimension("reference dimension differs from the kernel output".into())),
        })
    }
}

fn evaluate(
    kind: KernelKind,
    params: SalParams,
    points: &[Vec3],
    weights: &[f64],
    cfg: &TraversalConfig,
) -> CliResult<(Potentials, SumReport)> {
    Ok(match kind {
        KernelKind::Laplace => {
            fast_sum(points, points, weights, &Laplace, cfg).map(|(p, r)| (Potentials::Scalar(p), r))?
        }
        KernelKind::Biharmonic => {
            fast_sum(points, points, weights, &Biharmonic, cfg).map(|(p, r)| (Potentials::Scalar(p), r))?
        }
        KernelKind::BiotSavart => {
            fast_sum(points, points, weights, &BiotSavart, cfg).map(|(p, r)| (Potentials::Vector(p), r))?
        }
        KernelKind::Sal => {
            fast_sum(points, points, weights, &Sal::new(params), cfg).map(|(p, r)| (Potentials::Scalar(p), r))?
        }
    })
}

fn direct(kind: KernelKind, params: SalParams, points: &[Vec3], weights: &[f64]) -> Potentials {
    match kind {
        KernelKind::Laplace => Potentials::Scalar(direct_sum(points, points, weights, &Laplace)),
        KernelKind::Biharmonic => Potentials::Scalar(direct_sum(points, points, weights, &Biharmonic)),
        KernelKind::BiotSavart => Potentials::Vector(direct_sum(points, points, weights, &BiotSavart)),
        KernelKind::Sal => Potentials::Scalar(direct_sum(points, points, weights, &Sal::new(params))),
    }
}

fn write_potentials(path: &Path, points: &[Vec3], phi: &Potentials, extra: Option<(&str, &[f64])>) -> CliResult<()> {
    let mut header = vec!["x", "y", "z"];
    header.extend_from_slice(phi.columns());
    if let Some((name, _)) = extra {
        header.push(name);
    }
    let mut t = Table::create(path, &header)?;
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![p.x, p.y, p.z];
        row.extend(phi.row(i));
        if let Some((_, v)) = extra {
            row.push(v[i]);
        }
        t.row(&row)?;
    }
    t.finish()
}

// ---------------------------------------------------------------------------
// Subcommands

fn grid(a: &GridArgs) -> CliResult<Value> {
    let (kind, level) = match (&a.grid, &a.kind, a.level) {
        (Some(s), _, _) => parse_grid_spec(s)?,
        (None, Some(k), Some(l)) => (parse_kind(k)?, l),
        _ => return Err(CliError::Config("give --kind and --level, or --grid kind:level".into())),
    };
    let format = match a.format.as_str() {
        "xyz" => ParticleFormat::Xyz,
        "lonlat" => ParticleFormat::LonLat,
        other => return Err(CliError::Config(format!("unknown format `{other}`; use xyz or lonlat"))),
    };
    let g = make_grid(kind, level)?;
    let field: Field = a.field.as_deref().map_or(Ok(Field::One), str::parse)?;
    let values = field.values(&g.centers, a.seed);
    if let Some(path) = &a.output.out {
        let mut t = Table::create(path, &format.header())?;
        for ((p, area), v) in g.centers.iter().zip(&g.areas).zip(&values) {
            match format {
                ParticleFormat::Xyz => t.row(&[p.x, p.y, p.z, area * v])?,
                ParticleFormat::LonLat => {
                    let (lon, lat) = p.lon_lat();
                    t.row(&[lon.to_degrees(), lat.to_degrees(), *area, *v])?
                }
            }
        }
        t.finish()?;
    }
    Ok(json!({
        "command": "grid",
        "grid": kind.name(),
        "level": level,
        "n": g.len(),
        "total_area": g.total_area(),
        "min_area": g.areas.iter().cloned().fold(f64::INFINITY, f64::min),
        "max_area": g.areas.iter().cloned().fold(0.0, f64::max),
    }))
}

fn reference_potentials(
    spec: Option<&str>,
    phi: &Potentials,
    compute: impl FnOnce() -> CliResult<Potentials>,
    positions: &[Vec3],
) -> CliResult<Option<(Potentials, String, Option<f64>)>> {
    match spec {
        None => Ok(None),
        Some("direct") => {
            let start = Instant::now();
            let r = compute()?;
            Ok(Some((r, "direct".into(), Some(start.elapsed().as_secs_f64()))))
        }
        Some(path) => {
            let rows = read_reference(Path::new(path), positions)?;
            Ok(Some((Potentials::from_rows(rows, phi)?, path.to_string(), None)))
        }
    }
}

fn sum(a: &SumArgs) -> CliResult<Value> {
    let r = resolve(&a.tuning, TraversalConfig::default(), KernelKind::Laplace)?;
    let params = sal_params(&a.sal)?;
    let input = load(&a.input, Field::Harmonic(4, 3))?;
    let (phi, rep) = threaded(r.threads, || evaluate(r.kernel, params, &input.positions, &input.weights, &r.cfg))??;
    let reference = reference_potentials(
        a.reference.as_deref(),
        &phi,
        || threaded(r.threads, || direct(r.kernel, params, &input.positions, &input.weights)),
        &input.positions,
    )?;
    let mut report = json!({
        "command": "sum",
        "input": input.source,
        "n": input.positions.len(),
        "config": config_json(&r),
        "run": sum_report_json(&rep, r.stats)?,
        "environment": environment(r.threads),
    });
    if let Some((ref_phi, source, seconds)) = reference {
        let mut cmp = phi.compare(&ref_phi, input.areas.as_deref())?;
        cmp["source"] = json!(source);
        cmp["seconds"] = json!(seconds);
        report["reference"] = cmp;
    }
    if let Some(path) = &a.output.out {
        write_potentials(path, &input.positions, &phi, None)?;
    }
    Ok(report)
}

fn solve(a: &SolveArgs) -> CliResult<Value> {
    let r = resolve(&a.tuning, TraversalConfig::default(), KernelKind::Laplace)?;
    if !matches!(r.kernel, KernelKind::Laplace | KernelKind::Biharmonic) {
        return Err(CliError::Kernel(format!("solve needs laplace or biharmonic, not {}", r.kernel.name())));
    }
    let input = load(&a.input, Field::Harmonic(4, 3))?;
    let n = input.positions.len();
    let values = input.values.clone().unwrap_or_else(|| input.weights.clone());
    let areas = input.areas.clone().unwrap_or_else(|| vec![1.0; n]);
    let (phi, rep) = threaded(r.threads, || solve_greens(&input.positions, &areas, &values, r.kernel, &r.cfg))??;
    let exact = input.field.and_then(|f| f.exact_solution(r.kernel, &input.positions));
    let mut report = json!({
        "command": "solve",
        "input": input.source,
        "n": n,
        "config": config_json(&r),
        "run": sum_report_json(&rep, r.stats)?,
        "environment": environment(r.threads),
    });
    if let Some(ex) = &exact {
        report["error_vs_exact"] = json!({
            "relative_l2_error": relative_l2_error(&phi, ex, ex, &areas)?,
            "relative_max_error": relative_max_error(&phi, ex),
        });
    }
    if let Some(path) = &a.output.out {
        let extra = exact.as_deref().map(|e| ("exact", e));
        write_potentials(path, &input.positions, &Potentials::Scalar(phi), extra)?;
    }
    Ok(report)
}

fn write_snapshot(dir: &Path, step: usize, s: &BveState) -> CliResult<()> {
    let path = dir.join(format!("step_{step:05}.csv"));
    let mut header = vec!["x", "y", "z", "zeta"];
    if s.tracer.is_some() {
        header.push("tracer");
    }
    let mut t = Table::create(&path, &header)?;
    for (i, p) in s.positions.iter().enumerate() {
        let mut row = vec![p.x, p.y, p.z, s.zeta[i]];
        if let Some(tr) = &s.tracer {
            row.push(tr[i]);
        }
        t.row(&row)?;
    }
    t.finish()
}

fn bve(a: &BveArgs) -> CliResult<Value> {
    let r = resolve(&a.tuning, TraversalConfig::default(), KernelKind::BiotSavart)?;
    if r.kernel != KernelKind::BiotSavart {
        return Err(CliError::Kernel("the vorticity equation uses the biot_savart kernel".into()));
    }
    let (kind, level) = parse_grid_spec(a.grid.as_deref().unwrap_or("icosahedral:4"))?;
    let g = make_grid(kind, level)?;
    let initial: BveInitial = a.initial.parse()?;
    let fit: RemeshFit = a.fit.as_deref().map_or(Ok(RemeshFit::default()), str::parse)?;
    let mut cfg = BveConfig { sum: r.cfg, fit, ..Default::default() };
    cfg.stencil = a.stencil.unwrap_or(cfg.stencil);
    if !(a.dt > 0.0 && a.dt.is_finite()) {
        return Err(CliError::Config("--dt must be positive".into()));
    }
    let every = a.every.unwrap_or(a.steps.max(1));
    if every == 0 {
        return Err(CliError::Config("--every must be at least 1".into()));
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let solver = BveSolver::new(&g, cfg)?;
    let mut state = initial.state(&g);
    if a.tracer {
        state = state.with_z_tracer();
    }
    // The Rossby-Haurwitz wave is stationary at this rotation rate.
    let exact = (initial == BveInitial::RossbyHaurwitz).then(|| state.zeta.clone());
    let record = |step: usize, s: &BveState| -> CliResult<Value> {
        let mut e = json!({ "step": step, "time": s.time, "total_vorticity": s.total_vorticity() });
        if let Some(ex) = &exact {
            e["zeta_error"] = json!(vorticity_error(s, ex)?);
        }
        Ok(e)
    };
    let mut log = vec![record(0, &state)?];
    if let Some(dir) = &a.out_dir {
        write_snapshot(dir, 0, &state)?;
    }
    let mut seconds = 0.0;
    for step in 1..=a.steps {
        let start = Instant::now();
        state = threaded(r.threads, || solver.step(&state, a.dt))??;
        seconds += start.elapsed().as_secs_f64();
        if step % every == 0 || step == a.steps {
            log.push(record(step, &state)?);
            if let Some(dir) = &a.out_dir {
                write_snapshot(dir, step, &state)?;
            }
        }
    }
    Ok(json!({
        "command": "bve",
        "grid": kind.name(),
        "level": level,
        "n": g.len(),
        "initial": initial.name(),
        "dt": a.dt,
        "steps": a.steps,
        "fit": format!("{fit:?}").to_ascii_lowercase(),
        "config": config_json(&r),
        "seconds": seconds,
        "log": log,
        "environment": environment(r.threads),
    }))
}

fn area_l2(v: &[f64], areas: &[f64]) -> f64 {
    v.iter().zip(areas).map(|(x, a)| x * x * a).sum::<f64>().sqrt()
}

fn sal(a: &SalArgs) -> CliResult<Value> {
    let r = resolve(&a.tuning, default_sal_config(), KernelKind::Sal)?;
    if r.kernel != KernelKind::Sal {
        return Err(CliError::Kernel(format!("sal uses the sal kernel, not {}", r.kernel.name())));
    }
    let params = sal_params(&a.sal)?;
    let input = load(&a.input, Field::Band)?;
    let (Some(areas), Some(ssh)) = (&input.areas, &input.values) else {
        return Err(CliError::Csv("SAL input needs cell areas: use a lon,lat,area,value file".into()));
    };
    let (eta, rep) = threaded(r.threads, || sal_potential(&input.positions, areas, ssh, params, &r.cfg))??;
    let phi = Potentials::Scalar(eta);
    let reference = match a.reference.as_deref() {
        None => None,
        Some("direct") => {
            let start = Instant::now();
            let d = threaded(r.threads, || direct(KernelKind::Sal, params, &input.positions, &input.weights))?;
            Some((d, "direct".to_string(), Some(start.elapsed().as_secs_f64())))
        }
        Some(path) => {
            let p = read_particles(Path::new(path))?;
            let v = p.values.ok_or_else(|| CliError::Reference("SAL reference must be lon,lat,area,value".into()))?;
            if v.len() != input.positions.len() {
                return Err(CliError::Reference(format!(
                    "reference has {} rows, expected {}",
                    v.len(),
                    input.positions.len()
                )));
            }
            Some((Potentials::Scalar(v), path.to_string(), None))
        }
    };
    let Potentials::Scalar(eta) = &phi else { unreachable!() };
    let mut report = json!({
        "command": "sal",
        "input": input.source,
        "n": input.positions.len(),
        "config": config_json(&r),
        "coefficients": { "a1": params.a1, "b0": params.b0, "b1": params.b1, "rho_ratio": params.rho_ratio,
                          "form": format!("{:?}", params.form).to_ascii_lowercase() },
        "norm_ratio": area_l2(eta, areas) / area_l2(ssh, areas),
        "run": sum_report_json(&rep, r.stats)?,
        "environment": environment(r.threads),
    });
    if let Some((ref_phi, source, seconds)) = reference {
        let mut cmp = phi.compare(&ref_phi, Some(areas))?;
        cmp["source"] = json!(source);
        cmp["seconds"] = json!(seconds);
        report["reference"] = cmp;
    }
    if let Some(path) = &a.output.out {
        let mut t = Table::create(path, &ParticleFormat::LonLat.header())?;
        for ((p, area), v) in input.positions.iter().zip(areas).zip(eta) {
            let (lon, lat) = p.lon_lat();
            t.row(&[lon.to_degrees(), lat.to_degrees(), *area, *v])?;
        }
        t.finish()?;
    }
    Ok(report)
}

fn convergence(a: &ConvergenceArgs) -> CliResult<Value> {
    let r = resolve(&a.tuning, TraversalConfig::default(), KernelKind::Laplace)?;
    if !matches!(r.kernel, KernelKind::Laplace | KernelKind::Biharmonic) {
        return Err(CliError::Kernel(format!("convergence needs laplace or biharmonic, not {}", r.kernel.name())));
    }
    let kind = a.kind.as_deref().map_or(Ok(GridKind::Icosahedral), parse_kind)?;
    let field: Field = a.field.as_deref().map_or(Ok(Field::Harmonic(4, 3)), str::parse)?;
    let mut levels = a.levels.clone();
    levels.dedup();
    let sweep = a.degrees.len() >= 2;
    if levels.len() < 2 && !sweep {
        return Err(CliError::Config("fewer than 2 levels: cannot fit a slope".into()));
    }
    let degrees = if a.degrees.is_empty() { vec![r.cfg.degree] } else { a.degrees.clone() };
    let mut rows = vec![];
    for &level in &levels {
        let g = make_grid(kind, level)?;
        let values = field.values(&g.centers, 0);
        let exact = field
            .exact_solution(r.kernel, &g.centers)
            .ok_or_else(|| CliError::Field("convergence needs a field with a known solution, e.g. y43".into()))?;
        let (ds, _) = threaded(r.threads, || {
            let cfg = TraversalConfig { method: Method::Direct, ..r.cfg };
            solve_greens(&g.centers, &g.areas, &values, r.kernel, &cfg)
        })??;
        let e_ds = relative_l2_error(&ds, &exact, &exact, &g.areas)?;
        for &degree in &degrees {
            let cfg = TraversalConfig { degree, ..r.cfg };
            cfg.validate()?;
            let (fs, _) = threaded(r.threads, || solve_greens(&g.centers, &g.areas, &values, r.kernel, &cfg))??;
            rows.push(json!({
                "level": level,
                "N": g.len(),
                "degree": degree,
                "E_DS_EX": e_ds,
                "E_FS_EX": relative_l2_error(&fs, &exact, &exact, &g.areas)?,
                "E_FS_DS": relative_l2_error(&fs, &ds, &ds, &g.areas)?,
            }));
        }
    }
    let col = |name: &str, degree: usize| -> Vec<f64> {
        rows.iter().filter(|r| r["degree"] == degree).map(|r| r[name].as_f64().unwrap()).collect()
    };
    let slopes = if levels.len() >= 2 {
        let n = col("N", degrees[0]);
        json!({
            "E_DS_EX": loglog_slope(&n, &col("E_DS_EX", degrees[0])).ok(),
            "E_FS_EX": loglog_slope(&n, &col("E_FS_EX", degrees[0])).ok(),
        })
    } else {
        Value::Null
    };
    if let Some(path) = &a.output.out {
        let mut t = Table::create(path, &["level", "N", "degree", "E_DS_EX", "E_FS_EX", "E_FS_DS"])?;
        for row in &rows {
            let ints: Vec<String> = ["level", "N", "degree"].iter().map(|k| row[*k].to_string()).collect();
            let errs: Vec<f64> = ["E_DS_EX", "E_FS_EX", "E_FS_DS"].iter().map(|k| row[*k].as_f64().unwrap()).collect();
            t.mixed_row(&ints.iter().map(String::as_str).collect::<Vec<_>>(), &errs)?;
        }
        t.finish()?;
    }
    Ok(json!({
        "command": "convergence",
        "grid": kind.name(),
        "config": config_json(&r),
        "rows": rows,
        "slopes": slopes,
        "environment": environment(r.threads),
    }))
}

/// Median of `reps` timed runs after one warm-up.
fn median_seconds(reps: usize, mut f: impl FnMut() -> CliResult<()>) -> CliResult<f64> {
    f()?;
    let mut t = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        f()?;
        t.push(start.elapsed().as_secs_f64());
    }
    t.sort_by(f64::total_cmp);
    Ok(t[t.len() / 2])
}

fn bench(a: &BenchArgs) -> CliResult<Value> {
    let mut base = resolve(&a.tuning, TraversalConfig::default(), KernelKind::Laplace)?;
    base.threads = Some(base.threads.unwrap_or(1));
    let kind = a.kind.as_deref().map_or(Ok(GridKind::Icosahedral), parse_kind)?;
    let kernels = a.kernels.iter().map(|k| parse_kernel(k)).collect::<CliResult<Vec<_>>>()?;
    let methods = a.methods.iter().map(|m| parse_method(m)).collect::<CliResult<Vec<_>>>()?;
    let params = SalParams::default();
    let mut rows: Vec<(KernelKind, Method, u32, usize, f64)> = vec![];
    for &level in &a.levels {
        let g = make_grid(kind, level)?;
        let w: Vec<f64> =
            Field::Harmonic(4, 3).values(&g.centers, 0).iter().zip(&g.areas).map(|(v, a)| v * a).collect();
        for &kernel in &kernels {
            for &method in &methods {
                if method == Method::Direct && level > a.max_direct_level {
                    continue;
                }
                let cfg = TraversalConfig { method, ..base.cfg };
                let secs = threaded(base.threads, || {
                    median_seconds(a.reps, || evaluate(kernel, params, &g.centers, &w, &cfg).map(|_| ()))
                })??;
                rows.push((kernel, method, level, g.len(), secs));
            }
        }
    }
    let mut exponents = serde_json::Map::new();
    for &kernel in &kernels {
        for &method in &methods {
            let pts: Vec<_> = rows.iter().filter(|r| r.0 == kernel && r.1 == method).collect();
            let n: Vec<f64> = pts.iter().map(|r| r.3 as f64).collect();
            let t: Vec<f64> = pts.iter().map(|r| r.4).collect();
            exponents.insert(format!("{}/{}", kernel.name(), method.name()), json!(loglog_slope(&n, &t).ok()));
        }
    }
    let mut ratios = vec![];
    for r in rows.iter().filter(|r| r.0 == KernelKind::Biharmonic) {
        if let Some(l) = rows.iter().find(|l| l.0 == KernelKind::Laplace && l.1 == r.1 && l.2 == r.2) {
            ratios.push(json!({ "method": r.1.name(), "level": r.2, "biharmonic_over_laplace": r.4 / l.4 }));
        }
    }
    if let Some(path) = &a.output.out {
        let mut t = Table::create(path, &["kernel", "method", "level", "N", "seconds"])?;
        for r in &rows {
            t.mixed_row(&[r.0.name(), r.1.name(), &r.2.to_string(), &r.3.to_string()], &[r.4])?;
        }
        t.finish()?;
    }
    let table: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "kernel": r.0.name(), "method": r.1.name(), "level": r.2, "N": r.3, "seconds": r.4 }))
        .collect();
    Ok(json!({
        "command": "bench",
        "grid": kind.name(),
        "reps": a.reps,
        "config": config_json(&base),
        "rows": table,
        "exponents": exponents,
        "kernel_ratios": ratios,
        "environment": environment(base.threads),
    }))
}
