//! Command-line front end: mesh generation, solves, convergence studies and
//! element diagnostics.
//!
//! Exit codes: 0 ok, 2 usage, 3 validation, 4 solver, 5 assertion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use polyvem::element::{shapes, CellGeometry, ElementConfig, LocalElement, Stabilization, VertexScaling};
use polyvem::mesh::{audit_quality, generate_mesh, load_mesh, Domain, MeshKind, PolygonalMesh, DEFAULT_SEED};
use polyvem::system::{default_quad_degree, BoundaryData, Discretization};
use polyvem::verify::{builtin_case, compute_errors, run_convergence, StudyMode, StudyOptions, BUILTIN_CASES};
use polyvem::VemError;
use serde::Serialize;
use serde_json::{json, Value};

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_ASSERTION: u8 = 5;

#[derive(Parser)]
#[command(name = "polyvem", version, about = "Conforming virtual elements for polyharmonic problems")]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a structured mesh of the unit square.
    Mesh(MeshArgs),
    /// Solve a manufactured problem on one mesh.
    Solve(SolveArgs),
    /// Run a refinement study and report fitted slopes.
    Convergence(ConvergenceArgs),
    /// Print DOF counts, ranks and projector residuals of one element.
    ElementInfo(ElementInfoArgs),
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: MeshKind,
    /// Subdivisions per side.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Cells whose kernel-ball ratio falls below this are flagged.
    #[arg(long, default_value_t = 0.05)]
    quality_threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpaceArgs {
    /// Smoothness: the space is `C^{p-1}`.
    #[arg(long)]
    p: usize,
    /// Polynomial degree, at least `2p - 1`.
    #[arg(long)]
    r: usize,
    /// Continuity surplus; the operator is `Δ^{p-t}`.
    #[arg(long, default_value_t = 0)]
    t: usize,
    /// Solve the projector in an L²-orthonormal polynomial basis.
    #[arg(long)]
    orthonormal: bool,
    #[arg(long, value_enum, default_value_t = ScalingArg::Vertex)]
    vertex_scaling: ScalingArg,
    #[arg(long, value_enum, default_value_t = StabilizationArg::Diagonal)]
    stabilization: StabilizationArg,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Mesh file; without it a mesh is generated from `--kind` and `--n`.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind, default_value = "square-grid", conflicts_with = "mesh")]
    kind: MeshKind,
    #[arg(long, default_value_t = 8, conflicts_with = "mesh")]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_parser = parse_case, default_value = "poly-bubble")]
    case: String,
    /// Quadrature exactness for the load (default from the configuration).
    #[arg(long)]
    quad_degree: Option<usize>,
    /// Solution JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, value_parser = parse_kind, default_value = "square-grid")]
    kind: MeshKind,
    /// Subdivisions per side at each level, e.g. `4,8,16,32`.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_parser = parse_case, default_value = "poly-bubble")]
    case: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Solve)]
    mode: ModeArg,
    /// `s:value:tol`: require the fitted slope of `e_s` within `value ± tol`.
    #[arg(long = "assert-slope", value_parser = parse_slope_assertion)]
    assert_slope: Vec<SlopeAssertion>,
    /// Table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table as JSON, with the run configuration.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ElementInfoArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, value_enum, conflicts_with_all = ["polygon", "polygon_file"])]
    shape: Option<ShapeArg>,
    /// Counterclockwise vertices `x,y;x,y;...`.
    #[arg(long, value_parser = parse_polygon, conflicts_with = "polygon_file")]
    polygon: Option<Polygon>,
    /// JSON array of `[x, y]` vertices.
    #[arg(long)]
    polygon_file: Option<PathBuf>,
    /// Full dump of the element matrices.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    Vertex,
    Cell,
}

#[derive(Clone, Copy, ValueEnum)]
enum StabilizationArg {
    Diagonal,
    Scalar,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Solve,
    Interpolate,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Square,
    Hexagon,
    Pentagon,
}

#[derive(Clone, Copy, Debug, Serialize)]
struct SlopeAssertion {
    order: usize,
    value: f64,
    tol: f64,
}

fn parse_kind(s: &str) -> Result<MeshKind, String> {
    s.parse().map_err(|e: VemError| e.to_string())
}

fn parse_case(s: &str) -> Result<String, String> {
    if BUILTIN_CASES.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("expected one of {}", BUILTIN_CASES.join(", ")))
    }
}

fn parse_slope_assertion(s: &str) -> Result<SlopeAssertion, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [order, value, tol] = parts[..] else {
        return Err("expected s:value:tol".into());
    };
    let tol: f64 = tol.parse().map_err(|e| format!("tolerance: {e}"))?;
    if !(tol >= 0.0) {
        return Err("tolerance must be non-negative".into());
    }
    Ok(SlopeAssertion {
        order: order.parse().map_err(|e| format!("norm index: {e}"))?,
        value: value.parse().map_err(|e| format!("slope: {e}"))?,
        tol,
    })
}

#[derive(Clone, Debug)]
struct Polygon(Vec<[f64; 2]>);

fn parse_polygon(s: &str) -> Result<Polygon, String> {
    s.split(';')
        .map(|pt| {
            let xy: Vec<&str> = pt.split(',').map(str::trim).collect();
            match xy[..] {
                [x, y] => Ok([
                    x.parse().map_err(|e| format!("'{pt}': {e}"))?,
                    y.parse().map_err(|e| format!("'{pt}': {e}"))?,
                ]),
                _ => Err(format!("'{pt}' is not an x,y pair")),
            }
        })
        .collect::<Result<_, _>>()
        .map(Polygon)
}

impl From<ScalingArg> for VertexScaling {
    fn from(a: ScalingArg) -> Self {
        match a {
            ScalingArg::Vertex => VertexScaling::Vertex,
            ScalingArg::Cell => VertexScaling::Cell,
        }
    }
}

impl From<StabilizationArg> for Stabilization {
    fn from(a: StabilizationArg) -> Self {
        match a {
            StabilizationArg::Diagonal => Stabilization::Diagonal,
            StabilizationArg::Scalar => Stabilization::Scalar,
        }
    }
}

impl From<ModeArg> for StudyMode {
    fn from(a: ModeArg) -> Self {
        match a {
            ModeArg::Solve => StudyMode::Solve,
            ModeArg::Interpolate => StudyMode::Interpolate,
        }
    }
}

impl SpaceArgs {
    fn config(&self) -> Result<ElementConfig, Failure> {
        let mut c = ElementConfig::new(self.p, self.r, self.t)?;
        c.orthonormal = self.orthonormal;
        c.vertex_scaling = self.vertex_scaling.into();
        c.stabilization = self.stabilization.into();
        Ok(c)
    }
}

/// Where the mesh or polygon of a run comes from.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
enum MeshSource {
    File { path: PathBuf },
    Generated { kind: MeshKind, n: usize, seed: u64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Everything that determines a run; echoed into every output.
#[derive(Clone, Debug, Serialize)]
struct RunConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    element: Option<ElementConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mesh: Option<MeshSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<StudyMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quad_degree: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    assertions: Vec<SlopeAssertion>,
    outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

impl RunConfig {
    fn new(command: &'static str, threads: Option<usize>) -> Self {
        Self {
            command,
            element: None,
            mesh: None,
            case: None,
            levels: None,
            mode: None,
            quad_degree: None,
            assertions: Vec::new(),
            outputs: Vec::new(),
            threads,
        }
    }

    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("run configuration serializes")
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn exit_code(e: &VemError) -> u8 {
    match e {
        VemError::Config(_) | VemError::Io(_) => EXIT_USAGE,
        VemError::Solver(_) => EXIT_SOLVER,
        VemError::Element { source, .. } => exit_code(source),
        _ => EXIT_VALIDATION,
    }
}

impl From<VemError> for Failure {
    fn from(e: VemError) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn cmd_mesh(args: &MeshArgs, mut run: RunConfig) -> Result<(), Failure> {
    run.mesh = Some(MeshSource::Generated {
        kind: args.kind,
        n: args.n,
        seed: args.seed,
    });
    run.outputs.extend(args.out.clone());
    let mesh = generate_mesh(args.kind, args.n, Domain::UNIT_SQUARE, args.seed)?;
    let audit = audit_quality(&mesh, args.quality_threshold);
    let summary = format!(
        "cells={} vertices={} edges={} h={:.4e} max_edge_ratio={:.4} min_ball_ratio={:.4} flagged={}",
        mesh.num_cells(),
        mesh.vertices().len(),
        mesh.edges().len(),
        mesh.h(),
        audit.max_edge_ratio,
        audit.min_ball_ratio,
        audit.flagged.len()
    );
    // the mesh reader ignores the extra key
    let body = mesh.to_json();
    let body = body.trim_end().strip_suffix('}').expect("mesh json is an object");
    let text = format!("{body},\"run_config\":{}}}\n", run.to_json());
    match &args.out {
        Some(path) => {
            write_output(path, &text)?;
            println!("{summary}");
            println!("wrote {}", path.display());
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn load_or_generate(args: &SolveArgs) -> Result<(PolygonalMesh, MeshSource), Failure> {
    match &args.mesh {
        Some(path) => {
            if !path.exists() {
                return Err(Failure::usage(format!("mesh file {} does not exist", path.display())));
            }
            Ok((load_mesh(path)?, MeshSource::File { path: path.clone() }))
        }
        None => Ok((
            generate_mesh(args.kind, args.n, Domain::UNIT_SQUARE, args.seed)?,
            MeshSource::Generated {
                kind: args.kind,
                n: args.n,
                seed: args.seed,
            },
        )),
    }
}

fn cmd_solve(args: &SolveArgs, mut run: RunConfig) -> Result<(), Failure> {
    let config = args.space.config()?;
    let mut case = builtin_case(config.p, config.r, config.t, &args.case)?;
    case.config = config;
    let (mesh, source) = load_or_generate(args)?;
    let quad = args.quad_degree.unwrap_or_else(|| default_quad_degree(&config));
    run.element = Some(config);
    run.mesh = Some(source);
    run.case = Some(args.case.clone());
    run.quad_degree = Some(quad);
    run.outputs.extend(args.out.clone());

    let disc = Discretization::new(mesh, &config)?;
    let sol = disc.solve(case.forcing.as_ref(), BoundaryData::Homogeneous, quad)?;
    let report = compute_errors(&disc, &case, &sol.values)?;
    let errors: Vec<String> = report
        .errors
        .iter()
        .enumerate()
        .map(|(s, e)| format!("e{s}={e:.4e}"))
        .collect();
    println!(
        "h={:.4e} dofs={} free={} {} residual={:.2e} cond~{:.2e}",
        report.h,
        report.dofs,
        sol.report.free_dofs,
        errors.join(" "),
        sol.report.relative_residual,
        sol.report.condition_estimate
    );
    if let Some(path) = &args.out {
        let doc = json!({
            "run_config": run.to_json(),
            "h": report.h,
            "dofs": report.dofs,
            "errors": report.errors,
            "solve": sol.report,
            "values": sol.values,
        });
        write_output(path, &pretty(&doc))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_convergence(args: &ConvergenceArgs, mut run: RunConfig) -> Result<(), Failure> {
    if args.levels.len() < 3 {
        return Err(Failure::usage(format!(
            "a convergence study needs at least 3 levels, got {}",
            args.levels.len()
        )));
    }
    let config = args.space.config()?;
    let orders = config.p_eff() + 1;
    if let Some(a) = args.assert_slope.iter().find(|a| a.order >= orders) {
        return Err(Failure::usage(format!(
            "--assert-slope refers to e{} but only e0..e{} are measured",
            a.order,
            orders - 1
        )));
    }
    let mut case = builtin_case(config.p, config.r, config.t, &args.case)?;
    case.config = config;
    run.element = Some(config);
    run.mesh = Some(MeshSource::Generated {
        kind: args.kind,
        n: args.levels[0],
        seed: args.seed,
    });
    run.case = Some(args.case.clone());
    run.levels = Some(args.levels.clone());
    run.mode = Some(args.mode.into());
    run.assertions = args.assert_slope.clone();
    run.outputs.extend(args.out.clone());
    run.outputs.extend(args.json.clone());
    println!("run_config {}", run.to_json());

    let mut options = StudyOptions::new(args.kind, &args.levels);
    options.seed = args.seed;
    options.mode = args.mode.into();
    let table = match run_convergence(&case, &options) {
        Ok(t) => t,
        Err(e) => {
            if !e.partial.rows.is_empty() {
                eprint!("completed levels:\n{}", e.partial.to_csv());
            }
            return Err(Failure {
                code: exit_code(&e.source),
                message: e.to_string(),
            });
        }
    };
    let csv = table.to_csv();
    print!("{csv}");
    let fitted = table.fitted_slopes();
    let slopes: Vec<String> = fitted.iter().enumerate().map(|(s, v)| format!("e{s}={v:.3}")).collect();
    println!("fitted slopes (last 3 levels): {}", slopes.join(" "));
    if let Some(path) = &args.out {
        write_output(path, &csv)?;
    }
    if let Some(path) = &args.json {
        let doc = json!({ "run_config": run.to_json(), "table": table.to_json() });
        write_output(path, &pretty(&doc))?;
    }
    let mut failed = Vec::new();
    for a in &args.assert_slope {
        let got = fitted[a.order];
        let ok = (got - a.value).abs() <= a.tol;
        println!(
            "assert slope e{} = {got:.3} within {} ± {}: {}",
            a.order,
            a.value,
            a.tol,
            if ok { "ok" } else { "FAILED" }
        );
        if !ok {
            failed.push(format!("e{} slope {got:.3} outside {} ± {}", a.order, a.value, a.tol));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_ASSERTION,
            message: failed.join("; "),
        })
    }
}

fn cmd_element_info(args: &ElementInfoArgs, mut run: RunConfig) -> Result<(), Failure> {
    let config = args.space.config()?;
    let vertices = match (&args.polygon, &args.polygon_file, args.shape) {
        (Some(Polygon(v)), _, _) => v.clone(),
        (None, Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure {
                code: EXIT_VALIDATION,
                message: format!("{}: {e}", path.display()),
            })?
        }
        (None, None, shape) => match shape.unwrap_or(ShapeArg::Square) {
            ShapeArg::Square => shapes::unit_square(),
            ShapeArg::Hexagon => shapes::regular_hexagon(),
            ShapeArg::Pentagon => shapes::perturbed_pentagon(),
        },
    };
    run.element = Some(config);
    run.mesh = Some(MeshSource::Polygon {
        vertices: vertices.clone(),
    });
    run.outputs.extend(args.json.clone());
    let geom = CellGeometry::from_polygon(vertices)?;
    let element = LocalElement::new(&config, geom)?;
    let rep = element.report();
    println!("dofs={}, rank(D)={}, rank(K)={}", rep.dofs, rep.rank_d, rep.rank_k);
    println!(
        "dimension formula={} dim P_r={} kernel={} rank(G)={}",
        rep.dimension_formula, rep.poly_dim, rep.kernel_dim, rep.rank_g
    );
    println!(
        "polynomial preservation={:.2e} idempotence={:.2e} |BD-G|={:.2e} |SD|={:.2e} sigma={:.4e}",
        rep.polynomial_preservation, rep.idempotence, rep.consistency, rep.stabilization_defect, rep.sigma
    );
    if let Some(path) = &args.json {
        let doc = json!({
            "run_config": run.to_json(),
            "report": rep,
            "element": element.to_json(),
        });
        write_output(path, &pretty(&doc))?;
    }
    if !rep.ranks_ok() || rep.dofs != rep.dimension_formula {
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: format!(
                "rank check failed: rank(D)={} (want {}), rank(G)={} (want {}), rank(K)={} (want {})",
                rep.rank_d,
                rep.poly_dim,
                rep.rank_g,
                rep.poly_dim - rep.kernel_dim,
                rep.rank_k,
                rep.dofs - rep.kernel_dim
            ),
        });
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Mesh(a) => cmd_mesh(a, RunConfig::new("mesh", cli.threads)),
        Command::Solve(a) => cmd_solve(a, RunConfig::new("solve", cli.threads)),
        Command::Convergence(a) => cmd_convergence(a, RunConfig::new("convergence", cli.threads)),
        Command::ElementInfo(a) => cmd_element_info(a, RunConfig::new("element-info", cli.threads)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            if f.code == EXIT_USAGE {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            ExitCode::from(f.code)
        }
    }
}
