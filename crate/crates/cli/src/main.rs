//! `riemann` — command line for the surface-geometry library: claim audit,
//! flow traces, plane-map evaluation, tiling geometry and path continuation.
//!
//! Exit codes: 0 on success, 1 when the audit reports a failed asserted
//! claim, 2 on usage or input errors.

mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use riemann_core::abelian::{alpha, integrate_form, map_constants};
use riemann_core::audit::{run_audit, AuditConfig, SampleCounts};
use riemann_core::continuation::{self, monodromy, ZPath};
use riemann_core::curve::Curve;
use riemann_core::flow::{integrate_flow, project_to_surface};
use riemann_core::tiling::{build_stellated, HexLayout};
use riemann_core::{Complex64, SurfacePoint, Tolerances};

#[derive(Parser)]
#[command(
    name = "riemann",
    version,
    about = "Hamiltonian flows, analytic continuation, plane-map evaluation and \
             hexagonal tiling on plane algebraic curves, with a numerical claim audit"
)]
struct Cli {
    /// Curve preset name or path to a curve JSON file.
    #[arg(long, global = true)]
    curve: Option<String>,
    /// Seed for all randomized sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dominant tolerance of the subcommand (step tolerance for `flow`,
    /// quadrature tolerance for `constants`/`map`).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output path (defaults to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; each subcommand supports a subset.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON config file mirroring the flags (flags and RIEMANN_* environment
    /// variables take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
    Md,
}

#[derive(Subcommand)]
enum Command {
    /// Run the claim audit and write the report.
    Audit,
    /// Print the plane-map constants (alpha, edge length, doubled constant,
    /// Beta-function reference).
    Constants,
    /// Integrate the Hamiltonian flow and write a CSV trace.
    Flow(FlowArgs),
    /// Evaluate the plane coordinate over a grid or along a flow trace.
    Map(MapArgs),
    /// Emit the hexagonal tiling geometry.
    Tile(TileArgs),
    /// Continue w along a path; closed loops report their monodromy.
    #[command(name = "continue")]
    Continue(ContinueArgs),
}

#[derive(Args)]
struct FlowArgs {
    /// Start point: `re_z,re_w` or `re_z,im_z,re_w,im_w`.
    #[arg(long)]
    start: String,
    /// Flow time.
    #[arg(long)]
    t: f64,
    /// Complex-time direction `re,im`; normalized to the unit circle.
    #[arg(long, default_value = "1,0")]
    direction: String,
    /// Project the given w onto the surface before starting.
    #[arg(long)]
    project: bool,
}

#[derive(Args)]
struct MapArgs {
    /// Evaluate over an n-by-n grid on the square [-radius, radius]^2.
    #[arg(long)]
    grid: Option<usize>,
    /// Half-width of the grid square.
    #[arg(long, default_value_t = 0.95)]
    radius: f64,
    /// Map a flow trace instead: start point as in `flow`.
    #[arg(long)]
    flow_start: Option<String>,
    /// Flow time for --flow-start.
    #[arg(long, default_value_t = 0.5)]
    t: f64,
}

#[derive(Args)]
struct TileArgs {
    /// Edge length: `L` (integral to the first branch value), `C` (its
    /// double, the undivided constant) or an explicit number.
    #[arg(long, default_value = "C")]
    edge: String,
}

#[derive(Args)]
struct ContinueArgs {
    /// Path to a ZPath JSON file, or the JSON text itself.
    #[arg(long)]
    path: String,
}

/// Everything a subcommand needs after flag/env/config resolution.
struct Resolved {
    curve: Curve,
    curve_is_preset: Option<String>,
    seed: u64,
    tol: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    tolerances: Tolerances,
    counts: SampleCounts,
    tolerance_overrides: BTreeMap<String, f64>,
}

#[derive(serde::Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    curve: Option<String>,
    seed: Option<u64>,
    tol: Option<f64>,
    out: Option<PathBuf>,
    format: Option<String>,
    tolerances: Option<Tolerances>,
    counts: Option<SampleCounts>,
    tolerance_overrides: Option<BTreeMap<String, f64>>,
}

fn usage_error(message: impl std::fmt::Display) -> String {
    message.to_string()
}

fn env_f64(name: &str) -> Result<Option<f64>, String> {
    match std::env::var(name) {
        Ok(text) => text
            .parse::<f64>()
            .map(Some)
            .map_err(|_| usage_error(format!("{name} must be a number, got '{text}'"))),
        Err(_) => Ok(None),
    }
}

fn resolve(cli: &Cli) -> Result<Resolved, String> {
    let file: ConfigFile = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage_error(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage_error(format!("invalid config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };

    let mut tolerances = file.tolerances.unwrap_or_default();
    if let Some(v) = env_f64("RIEMANN_SURFACE_TOL")? {
        tolerances.surface_tol = v;
    }
    if let Some(v) = env_f64("RIEMANN_ROOT_TOL")? {
        tolerances.root_tol = v;
    }
    if let Some(v) = env_f64("RIEMANN_BRANCH_STANDOFF")? {
        tolerances.branch_standoff = v;
    }
    if let Some(v) = env_f64("RIEMANN_QUAD_TOL")? {
        tolerances.quad_tol = v;
    }
    if let Some(v) = env_f64("RIEMANN_STEP_TOL")? {
        tolerances.step_tol = v;
    }
    if let Some(v) = env_f64("RIEMANN_DRIFT_TOL")? {
        tolerances.drift_tol = v;
    }

    let seed = match (cli.seed, std::env::var("RIEMANN_SEED").ok(), file.seed) {
        (Some(s), _, _) => s,
        (None, Some(text), _) => text
            .parse::<u64>()
            .map_err(|_| usage_error(format!("RIEMANN_SEED must be an integer, got '{text}'")))?,
        (None, None, Some(s)) => s,
        (None, None, None) => 7,
    };
    let tol = match (cli.tol, env_f64("RIEMANN_TOL")?, file.tol) {
        (Some(t), _, _) => Some(t),
        (None, Some(t), _) => Some(t),
        (None, None, t) => t,
    };

    let curve_spec = cli
        .curve
        .clone()
        .or(file.curve)
        .unwrap_or_else(|| "w2z6".to_string());
    let (curve, curve_is_preset) = match Curve::preset(&curve_spec) {
        Some(c) => (c, Some(curve_spec)),
        None => {
            let text = fs::read_to_string(&curve_spec).map_err(|e| {
                usage_error(format!(
                    "--curve '{curve_spec}' is neither a known preset nor a readable file: {e}"
                ))
            })?;
            let curve: Curve = serde_json::from_str(&text)
                .map_err(|e| usage_error(format!("invalid curve file '{curve_spec}': {e}")))?;
            (curve, None)
        }
    };

    let format = match (cli.format, file.format.as_deref()) {
        (Some(f), _) => Some(f),
        (None, Some(name)) => Some(
            Format::from_str(name, true)
                .map_err(|_| usage_error(format!("unknown format '{name}' in config file")))?,
        ),
        (None, None) => None,
    };

    Ok(Resolved {
        curve,
        curve_is_preset,
        seed,
        tol,
        out: cli.out.clone().or(file.out),
        format,
        tolerances,
        counts: file.counts.unwrap_or_default(),
        tolerance_overrides: file.tolerance_overrides.unwrap_or_default(),
    })
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_reals(text: &str, what: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage_error(format!("{what}: '{s}' is not a number")))
        })
        .collect()
}

/// `re_z,re_w` (real start point) or `re_z,im_z,re_w,im_w`.
fn parse_start(text: &str) -> Result<(Complex64, Complex64), String> {
    let vals = parse_reals(text, "--start")?;
    match vals.len() {
        2 => Ok((Complex64::new(vals[0], 0.0), Complex64::new(vals[1], 0.0))),
        4 => Ok((Complex64::new(vals[0], vals[1]), Complex64::new(vals[2], vals[3]))),
        n => Err(usage_error(format!(
            "--start takes 2 numbers (re_z,re_w) or 4 (re_z,im_z,re_w,im_w), got {n}"
        ))),
    }
}

fn complex_json(z: Complex64) -> serde_json::Value {
    serde_json::json!([z.re, z.im])
}

fn start_point(
    resolved: &Resolved,
    text: &str,
    project: bool,
) -> Result<SurfacePoint, String> {
    let (z, w) = parse_start(text)?;
    let tols = resolved.tolerances;
    if project {
        return project_to_surface(&resolved.curve, z, w, tols.surface_tol)
            .map_err(|e| e.to_string());
    }
    SurfacePoint::on_surface(&resolved.curve, z, w, None, tols.surface_tol.max(1e-8))
        .map_err(|e| usage_error(format!("{e}; pass --project to snap w onto the surface")))
}

fn cmd_audit(resolved: &Resolved) -> Result<ExitCode, String> {
    let preset = resolved.curve_is_preset.clone().ok_or_else(|| {
        usage_error("the audit registry is specific to the curve presets; pass --curve w2z6")
    })?;
    let config = AuditConfig {
        preset,
        seed: resolved.seed,
        tolerances: resolved.tolerances,
        counts: resolved.counts,
        tolerance_overrides: resolved.tolerance_overrides.clone(),
    };
    let report = run_audit(&config).map_err(|e| e.to_string())?;
    let text = match resolved.format.unwrap_or(Format::Json) {
        Format::Json => report.to_canonical_json(),
        Format::Md => report.to_markdown(),
        _ => return Err(usage_error("audit supports --format json or md")),
    };
    write_output(&resolved.out, &text)?;
    eprintln!(
        "audit: {} passed, {} failed, {} value, {} error",
        report.summary.passed, report.summary.failed, report.summary.values, report.summary.errors
    );
    Ok(if report.has_failures() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_constants(resolved: &Resolved) -> Result<ExitCode, String> {
    let quad_tol = resolved.tol.unwrap_or(resolved.tolerances.quad_tol);
    let constants = map_constants(&resolved.curve, quad_tol).map_err(|e| e.to_string())?;
    let reference = riemann_core::special::edge_constant_reference();
    let text = match resolved.format.unwrap_or(Format::Json) {
        Format::Json => {
            let value = serde_json::json!({
                "alpha": complex_json(constants.alpha),
                "edge_length_L": constants.edge_length,
                "edge_constant_C": constants.edge_constant,
                "c_beta_reference": reference,
                "beta_agreement": (constants.edge_constant - reference).abs(),
            });
            format!("{}\n", serde_json::to_string_pretty(&value).unwrap())
        }
        Format::Md => format!(
            "| constant | value |\n|---|---|\n| alpha | {} + {} i |\n| L = f(1) | {:.15} |\n\
             | C = 2L | {:.15} |\n| (1/6) B(1/6, 1/2) | {:.15} |\n",
            constants.alpha.re, constants.alpha.im, constants.edge_length, constants.edge_constant,
            reference
        ),
        _ => return Err(usage_error("constants supports --format json or md")),
    };
    write_output(&resolved.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_flow(resolved: &Resolved, args: &FlowArgs) -> Result<ExitCode, String> {
    if !matches!(resolved.format, None | Some(Format::Csv)) {
        return Err(usage_error("flow writes CSV; use --format csv or omit it"));
    }
    let dir_vals = parse_reals(&args.direction, "--direction")?;
    if dir_vals.len() != 2 {
        return Err(usage_error("--direction takes two numbers re,im"));
    }
    let direction = Complex64::new(dir_vals[0], dir_vals[1]);
    if direction.norm() == 0.0 {
        return Err(usage_error("--direction must be nonzero"));
    }
    let direction = direction / direction.norm();
    let start = start_point(resolved, &args.start, args.project)?;
    let step_tol = resolved.tol.unwrap_or(resolved.tolerances.step_tol);
    let trace = integrate_flow(
        &resolved.curve,
        &start,
        direction,
        args.t,
        step_tol,
        resolved.tolerances.drift_tol,
    )
    .map_err(|e| e.to_string())?;
    write_output(&resolved.out, &trace.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn base_path_to(z: Complex64, w0: Complex64) -> ZPath {
    ZPath { vertices: vec![Complex64::ZERO, z], w_start: w0 }
}

fn cmd_map(resolved: &Resolved, args: &MapArgs) -> Result<ExitCode, String> {
    let quad_tol = resolved.tol.unwrap_or(resolved.tolerances.quad_tol);
    let curve = &resolved.curve;
    let w0 = curve
        .fiber(Complex64::ZERO)
        .map_err(|e| e.to_string())?
        .first()
        .copied()
        .ok_or("empty fiber over the basepoint")?;

    if let Some(start_text) = &args.flow_start {
        // Plane image of a flow trace: the straightening picture.
        let start = start_point(resolved, start_text, true)?;
        let base = base_path_to(start.z, w0);
        let trace = integrate_flow(
            curve,
            &start,
            Complex64::ONE,
            args.t,
            resolved.tolerances.step_tol,
            resolved.tolerances.drift_tol,
        )
        .map_err(|e| e.to_string())?;
        let zeta0 = alpha()
            * integrate_form(curve, &base, quad_tol)
                .map_err(|e| e.to_string())?
                .value;
        let mut rows = Vec::new();
        let mut cumulative = Complex64::new(0.0, 0.0);
        let mut prev: Option<SurfacePoint> = None;
        for &(t, p) in &trace.samples {
            if let Some(q) = prev {
                if (p.z - q.z).norm() > 0.0 {
                    let chord = ZPath { vertices: vec![q.z, p.z], w_start: q.w };
                    cumulative += integrate_form(curve, &chord, quad_tol)
                        .map_err(|e| e.to_string())?
                        .value;
                }
            }
            rows.push((t, p.z, p.w, zeta0 + alpha() * cumulative));
            prev = Some(p);
        }
        let text = match resolved.format.unwrap_or(Format::Json) {
            Format::Json => {
                let items: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|&(t, z, w, zeta)| {
                        serde_json::json!({
                            "t": t,
                            "z": complex_json(z),
                            "w": complex_json(w),
                            "zeta": complex_json(zeta),
                        })
                    })
                    .collect();
                format!("{}\n", serde_json::to_string_pretty(&items).unwrap())
            }
            Format::Svg => {
                let mut doc = svg::SvgDoc::new();
                let zetas: Vec<Complex64> = rows.iter().map(|r| r.3).collect();
                doc.polyline(&zetas, "#c02020", 0.004);
                doc.circle(zetas[0], 0.01, "#2020c0");
                doc.finish()
            }
            _ => return Err(usage_error("map supports --format json or svg")),
        };
        write_output(&resolved.out, &text)?;
        return Ok(ExitCode::SUCCESS);
    }

    let n = args.grid.unwrap_or(9);
    if n < 2 {
        return Err(usage_error("--grid must be at least 2"));
    }
    let branch_values = curve.branch_points().map_err(|e| e.to_string())?.values;
    let r = args.radius;
    let coord = |k: usize| -> f64 { -r + 2.0 * r * k as f64 / (n - 1) as f64 };
    // Row-major grid; cells that sit on a branch value or whose base path is
    // blocked are left empty.
    let mut cells: Vec<Vec<Option<(Complex64, Complex64, Complex64)>>> = vec![vec![None; n]; n];
    for (row, cell_row) in cells.iter_mut().enumerate() {
        for (col, cell) in cell_row.iter_mut().enumerate() {
            let z = Complex64::new(coord(col), coord(row));
            if branch_values.iter().any(|v| (z - v).norm() < 0.05) {
                continue;
            }
            let path = base_path_to(z, w0);
            if continuation::validate_path(curve, &path, resolved.tolerances.branch_standoff, false)
                .is_err()
            {
                continue;
            }
            if let Ok(out) = integrate_form(curve, &path, quad_tol) {
                *cell = Some((z, out.w_end, alpha() * out.value));
            }
        }
    }
    let text = match resolved.format.unwrap_or(Format::Json) {
        Format::Json => {
            let items: Vec<serde_json::Value> = cells
                .iter()
                .flatten()
                .flatten()
                .map(|&(z, w, zeta)| {
                    serde_json::json!({
                        "z": complex_json(z),
                        "w": complex_json(w),
                        "zeta": complex_json(zeta),
                    })
                })
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&items).unwrap())
        }
        Format::Svg => {
            let mut doc = svg::SvgDoc::new();
            // Image curves of grid rows and columns.
            for row in &cells {
                let mut run: Vec<Complex64> = Vec::new();
                for cell in row {
                    match cell {
                        Some((_, _, zeta)) => run.push(*zeta),
                        None => {
                            doc.polyline(&run, "#3050c0", 0.004);
                            run.clear();
                        }
                    }
                }
                doc.polyline(&run, "#3050c0", 0.004);
            }
            for col in 0..n {
                let mut run: Vec<Complex64> = Vec::new();
                for row in &cells {
                    match &row[col] {
                        Some((_, _, zeta)) => run.push(*zeta),
                        None => {
                            doc.polyline(&run, "#c05030", 0.004);
                            run.clear();
                        }
                    }
                }
                doc.polyline(&run, "#c05030", 0.004);
            }
            doc.finish()
        }
        _ => return Err(usage_error("map supports --format json or svg")),
    };
    write_output(&resolved.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_tile(resolved: &Resolved, args: &TileArgs) -> Result<ExitCode, String> {
    let quad_tol = resolved.tol.unwrap_or(resolved.tolerances.quad_tol);
    let edge = match args.edge.as_str() {
        "L" | "l" => map_constants(&resolved.curve, quad_tol)
            .map_err(|e| e.to_string())?
            .edge_length,
        "C" | "c" => map_constants(&resolved.curve, quad_tol)
            .map_err(|e| e.to_string())?
            .edge_constant,
        other => other
            .parse::<f64>()
            .map_err(|_| usage_error(format!("--edge must be L, C or a number, got '{other}'")))?,
    };
    if !(edge.is_finite() && edge > 0.0) {
        return Err(usage_error("--edge must be positive"));
    }
    let layout = HexLayout::new(edge);
    let hex: Vec<Complex64> = layout.hex_vertices().to_vec();
    let stellated = build_stellated(&layout);
    let u = layout.translations();
    let text = match resolved.format.unwrap_or(Format::Svg) {
        Format::Json => {
            let value = serde_json::json!({
                "edge": edge,
                "u": u.iter().map(|&v| complex_json(v)).collect::<Vec<_>>(),
                "H": hex.iter().map(|&v| complex_json(v)).collect::<Vec<_>>(),
                "K": stellated.iter().map(|&v| complex_json(v)).collect::<Vec<_>>(),
            });
            format!("{}\n", serde_json::to_string_pretty(&value).unwrap())
        }
        Format::Svg => {
            let mut doc = svg::SvgDoc::new();
            // Central hexagon, its six lattice translates, the stellated
            // outline and the translation vectors.
            for &t in &u {
                let moved: Vec<Complex64> = hex.iter().map(|&v| v + t).collect();
                doc.polygon(&moved, "#999999", "#f2f2f2", 0.01 * edge);
            }
            doc.polygon(&hex, "#444444", "#d8e4f0", 0.012 * edge);
            doc.polygon(&stellated, "#b03030", "none", 0.012 * edge);
            for &t in &u {
                doc.arrow(Complex64::new(0.0, 0.0), t, "#444444", 0.01 * edge);
            }
            doc.finish()
        }
        _ => return Err(usage_error("tile supports --format svg or json")),
    };
    write_output(&resolved.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_continue(resolved: &Resolved, args: &ContinueArgs) -> Result<ExitCode, String> {
    let text = if args.path.trim_start().starts_with('{') {
        args.path.clone()
    } else {
        fs::read_to_string(&args.path)
            .map_err(|e| usage_error(format!("cannot read path file '{}': {e}", args.path)))?
    };
    let path: ZPath = serde_json::from_str(&text)
        .map_err(|e| usage_error(format!("invalid path JSON: {e}")))?;
    if !matches!(resolved.format, None | Some(Format::Json)) {
        return Err(usage_error("continue writes JSON"));
    }
    let value = if path.is_closed(1e-12) {
        let perm = monodromy(&resolved.curve, &path).map_err(|e| e.to_string())?;
        serde_json::json!({ "closed": true, "monodromy": perm })
    } else {
        let out = continuation::continue_w(
            &resolved.curve,
            &path,
            resolved.tolerances.branch_standoff,
        )
        .map_err(|e| e.to_string())?;
        serde_json::json!({
            "closed": false,
            "w_end": complex_json(out.w_end),
            "vertex_ws": out.vertex_ws.iter().map(|&w| complex_json(w)).collect::<Vec<_>>(),
        })
    };
    write_output(&resolved.out, &format!("{}\n", serde_json::to_string_pretty(&value).unwrap()))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    let resolved = resolve(cli)?;
    match &cli.command {
        Command::Audit => cmd_audit(&resolved),
        Command::Constants => cmd_constants(&resolved),
        Command::Flow(args) => cmd_flow(&resolved, args),
        Command::Map(args) => cmd_map(&resolved, args),
        Command::Tile(args) => cmd_tile(&resolved, args),
        Command::Continue(args) => cmd_continue(&resolved, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
