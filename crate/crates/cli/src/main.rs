//! `surfel-riemann`: conformal structures on digital surfaces from the
//! command line.
//!
//! Every subcommand prints a one-line summary on stdout and, with `--out`,
//! writes its artifacts there. Exit codes: 0 on success, 2 when the input is
//! rejected, 1 on internal failures.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use surfel_riemann::conformal::{self, ConformalStructure, NormalField, Tolerances};
use surfel_riemann::dec::Cochain;
use surfel_riemann::graph::{build_double_graph, DoubleGraph, VertexKey};
use surfel_riemann::moves;
use surfel_riemann::operators;
use surfel_riemann::solver::{self, BoundaryCondition, LaplacianChoice};
use surfel_riemann::surface::{euler_genus, extract_surface, SurfelSurface};
use surfel_riemann::{io, Error};

const SCHEMA: &str = "surfel-riemann/1";

#[derive(Debug, Parser)]
#[command(name = "surfel-riemann", version, about = "Discrete conformal structures on surfel surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the surfel surface and report its topology.
    Extract {
        #[command(flatten)]
        input: SurfaceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compute the conformal ratios and validate them.
    Ratios {
        #[command(flatten)]
        input: StructureArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Export a Laplacian as sparse triplets.
    Laplacian {
        #[command(flatten)]
        input: StructureArgs,
        #[arg(long, value_enum, default_value_t = LaplacianKind::Complex)]
        kind: LaplacianKind,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve a Dirichlet problem with the given pins.
    Solve {
        #[command(flatten)]
        input: StructureArgs,
        #[command(flatten)]
        pins: PinArgs,
        #[arg(long, value_enum, default_value_t = DirichletKind::Complex)]
        laplacian: DirichletKind,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minimize the conformal energy with the given pins.
    Parametrize {
        #[command(flatten)]
        input: StructureArgs,
        #[command(flatten)]
        pins: PinArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Report the energies of a function given as a cochain CSV.
    Energy {
        #[command(flatten)]
        input: StructureArgs,
        /// CSV with columns `key,re,im` over all vertices.
        #[arg(long)]
        function: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the star-triangle identities at every flippable vertex.
    FlipCheck {
        #[command(flatten)]
        input: StructureArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct SurfaceArgs {
    /// Voxel list, one `x y z` per line; the surface is its boundary.
    #[arg(long, conflicts_with = "surfels", required_unless_present = "surfels")]
    voxels: Option<PathBuf>,
    /// Explicit surfel list, one `x y z F [nx ny nz]` per line.
    #[arg(long)]
    surfels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StructureArgs {
    #[command(flatten)]
    surface: SurfaceArgs,
    /// Per-surfel normals `x y z F nx ny nz`; face normals fill the gaps.
    #[arg(long)]
    normals: Option<PathBuf>,
    /// Minimum admissible real part of a ratio.
    #[arg(long, default_value_t = Tolerances::default().eps_re)]
    eps_re: f64,
    /// Minimum projected diagonal length and quad area.
    #[arg(long, default_value_t = Tolerances::default().eps_len)]
    eps_len: f64,
}

#[derive(Debug, Args)]
struct PinArgs {
    /// Pinned values, `cx,cy,cz=re,im;…`.
    #[arg(long, default_value = "")]
    pins: String,
    /// Relative residual required from the solver.
    #[arg(long, default_value_t = solver::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Directory receiving the artifacts; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact kinds to write.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Emit::Json, Emit::Csv])]
    emit: Vec<Emit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LaplacianKind {
    Real,
    Complex,
    Compositional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirichletKind {
    Real,
    Complex,
}

/// A failed run: input errors exit with 2, everything else with 1.
#[derive(Debug)]
enum Failure {
    Input { kind: String, message: String },
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input {
                kind: e.kind().to_string(),
                message: e.to_string(),
            }
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

impl Failure {
    fn input(kind: &str, message: impl Into<String>) -> Self {
        Failure::Input {
            kind: kind.to_string(),
            message: message.into(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// One file of output.
struct Artifact {
    name: &'static str,
    kind: Emit,
    content: String,
}

impl Artifact {
    fn json(name: &'static str, value: &impl Serialize) -> Self {
        let mut content = serde_json::to_string_pretty(value).expect("reports serialize");
        content.push('\n');
        Self {
            name,
            kind: Emit::Json,
            content,
        }
    }

    fn csv(name: &'static str, content: String) -> Self {
        Self {
            name,
            kind: Emit::Csv,
            content,
        }
    }

    fn svg(name: &'static str, content: String) -> Self {
        Self {
            name,
            kind: Emit::Svg,
            content,
        }
    }
}

fn write_artifacts(output: &OutputArgs, artifacts: Vec<Artifact>) -> CliResult<()> {
    let Some(dir) = &output.out else {
        return Ok(());
    };
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Internal(format!("cannot create {}: {e}", dir.display())))?;
    for artifact in artifacts.into_iter().filter(|a| output.emit.contains(&a.kind)) {
        let path = dir.join(artifact.name);
        fs::write(&path, artifact.content)
            .map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn readable(path: &Path) -> CliResult<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Failure::input("Io", format!("cannot read {}", path.display())))
    }
}

impl SurfaceArgs {
    fn load(&self) -> CliResult<(SurfelSurface, NormalField)> {
        if let Some(path) = &self.voxels {
            let voxels = io::read_voxels(readable(path)?)?;
            Ok((extract_surface(voxels)?, NormalField::new()))
        } else {
            let path = self.surfels.as_ref().expect("clap enforces one input");
            let (surfels, normals) = io::read_surfels(readable(path)?)?;
            if surfels.is_empty() {
                return Err(Error::EmptyInput.into());
            }
            Ok((SurfelSurface::from_surfels(surfels)?, normals))
        }
    }
}

struct Loaded {
    graph: Arc<DoubleGraph>,
    structure: ConformalStructure,
}

impl StructureArgs {
    fn tolerances(&self) -> CliResult<Tolerances> {
        for (name, value) in [("--eps-re", self.eps_re), ("--eps-len", self.eps_len)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Failure::input(
                    "InvalidConfiguration",
                    format!("{name} must be positive, got {value}"),
                ));
            }
        }
        Ok(Tolerances {
            eps_re: self.eps_re,
            eps_len: self.eps_len,
        })
    }

    fn load(&self) -> CliResult<Loaded> {
        let tol = self.tolerances()?;
        let (surface, mut normals) = self.surface.load()?;
        if let Some(path) = &self.normals {
            for (surfel, n) in io::read_normals(readable(path)?)?.iter() {
                normals.insert(surfel, n)?;
            }
        }
        let graph = Arc::new(build_double_graph(&surface)?);
        let structure = conformal::compute_rho(graph.clone(), &normals, tol)?;
        Ok(Loaded { graph, structure })
    }
}

impl PinArgs {
    fn resolve(&self, graph: &DoubleGraph) -> CliResult<BoundaryCondition> {
        let pins = io::parse_pins(&self.pins)?;
        let bc = BoundaryCondition::from_keys(graph, pins.into_iter().map(|(c, z)| (VertexKey::Corner(c), z)))?;
        if !(self.tol > 0.0) {
            return Err(Failure::input("InvalidConfiguration", "--tol must be positive"));
        }
        Ok(bc)
    }
}

fn cmd_extract(input: &SurfaceArgs, output: &OutputArgs) -> CliResult<String> {
    let (surface, _) = input.load()?;
    let graph = build_double_graph(&surface)?;
    let topology = euler_genus(&surface);
    let summary = json!({
        "schema": SCHEMA,
        "topology": topology,
        "surfels": surface.surfels().len(),
        "black_vertices": graph.count_color(surfel_riemann::surface::Color::Black),
        "white_vertices": graph.count_color(surfel_riemann::surface::Color::White),
        "dropped_components": surface.dropped_components(),
    });
    let mut surfels = String::from("surfel,x,y,x1,y1\n");
    for q in 0..graph.quad_count() {
        let cycle = graph.quad(q).cycle.map(|v| graph.vertex_label(v));
        surfels.push_str(&format!("{},{}\n", graph.quad_label(q), cycle.join(",")));
    }
    write_artifacts(
        output,
        vec![
            Artifact::json("extract.json", &summary),
            Artifact::csv("surfels.csv", surfels),
            Artifact {
                name: "complex.txt",
                kind: Emit::Csv,
                content: graph.dump(),
            },
        ],
    )?;
    Ok(topology.to_string())
}

fn cmd_ratios(input: &StructureArgs, output: &OutputArgs) -> CliResult<String> {
    let Loaded { graph, structure } = input.load()?;
    let report = conformal::validate_structure(&structure);
    let rho = Cochain::from_values(&graph, 1, structure.rhos().to_vec())?;
    let (min_re, max_re) = structure
        .rhos()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.re), hi.max(r.re)));
    let max_im = structure.rhos().iter().fold(0.0f64, |m, r| m.max(r.im.abs()));
    let summary = json!({
        "schema": SCHEMA,
        "valid": report.is_valid(),
        "validation": report,
        "min_re": min_re,
        "max_re": max_re,
        "max_abs_im": max_im,
    });
    write_artifacts(
        output,
        vec![
            Artifact::json("ratios.json", &summary),
            Artifact::csv("rho.csv", io::write_cochain(&graph, &rho)),
        ],
    )?;
    Ok(format!(
        "edges={} valid={} re=[{min_re:e},{max_re:e}] max|im|={max_im:e}",
        report.edges,
        report.is_valid()
    ))
}

fn cmd_laplacian(input: &StructureArgs, kind: LaplacianKind, output: &OutputArgs) -> CliResult<String> {
    let Loaded { structure, .. } = input.load()?;
    let op = match kind {
        LaplacianKind::Real => operators::laplacian_closed_real(&structure)?,
        LaplacianKind::Complex => operators::laplacian_closed_complex(&structure)?,
        LaplacianKind::Compositional => operators::laplacian_compositional(&structure)?,
    };
    let symmetric = op.is_symmetric(operators::REAL_TOL);
    let real = op.is_real(operators::REAL_TOL);
    let summary = json!({
        "schema": SCHEMA,
        "rows": op.nrows(),
        "cols": op.ncols(),
        "nonzeros": op.entries().len(),
        "symmetric": symmetric,
        "real": real,
        "metadata": op.metadata(),
    });
    write_artifacts(
        output,
        vec![
            Artifact::json("laplacian.json", &summary),
            Artifact::csv("laplacian.csv", io::write_operator(&op)),
        ],
    )?;
    Ok(format!(
        "rows={} nonzeros={} symmetric={symmetric} real={real}",
        op.nrows(),
        op.entries().len()
    ))
}

fn solution_artifacts(
    structure: &ConformalStructure,
    f: &Cochain,
    report: serde_json::Value,
    json_name: &'static str,
) -> CliResult<Vec<Artifact>> {
    let densities = operators::energy_densities(structure, f)?;
    Ok(vec![
        Artifact::json(json_name, &report),
        Artifact::csv("solution.csv", io::write_solution(structure.graph(), f)?),
        Artifact::csv("function.csv", io::write_cochain(structure.graph(), f)),
        Artifact::svg("image.svg", svg::render(structure.graph(), f, &densities)),
    ])
}

fn cmd_solve(
    input: &StructureArgs,
    pins: &PinArgs,
    laplacian: DirichletKind,
    output: &OutputArgs,
) -> CliResult<String> {
    let Loaded { graph, structure } = input.load()?;
    let bc = pins.resolve(&graph)?;
    let choice = match laplacian {
        DirichletKind::Real => LaplacianChoice::Real,
        DirichletKind::Complex => LaplacianChoice::Complex,
    };
    let (f, report) = solver::solve_dirichlet(&structure, choice, &bc, pins.tol)?;
    let harmonicity = solver::harmonicity_report(&structure, &f)?;
    let max_unpinned = harmonicity
        .iter()
        .enumerate()
        .filter(|(v, _)| bc.get(*v).is_none())
        .fold(0.0f64, |m, (_, &x)| m.max(x));
    let summary = json!({
        "schema": SCHEMA,
        "report": report,
        "max_laplacian_unpinned": max_unpinned,
    });
    write_artifacts(output, solution_artifacts(&structure, &f, summary, "solve.json")?)?;
    Ok(format!(
        "unknowns={} residual={:e} max|Δf|={max_unpinned:e}",
        report.unknowns, report.residual
    ))
}

fn cmd_parametrize(input: &StructureArgs, pins: &PinArgs, output: &OutputArgs) -> CliResult<String> {
    let Loaded { graph, structure } = input.load()?;
    let bc = pins.resolve(&graph)?;
    let (f, report) = solver::parametrize(&structure, &bc, pins.tol)?;
    let summary = json!({
        "schema": SCHEMA,
        "report": report,
        "energies": report.energies,
    });
    write_artifacts(output, solution_artifacts(&structure, &f, summary, "energy.json")?)?;
    let e = report.energies;
    Ok(format!(
        "E_C={:e} E_D={:e} area={:e} iterations={}",
        e.conformal, e.dirichlet, e.area, report.iterations
    ))
}

fn cmd_energy(input: &StructureArgs, function: &Path, output: &OutputArgs) -> CliResult<String> {
    let Loaded { graph, structure } = input.load()?;
    let f = io::read_cochain(&graph, 0, readable(function)?)?;
    let report = operators::energies(&structure, &f)?;
    let relative = report.identity_residual / report.dirichlet.max(1.0);
    let summary = json!({
        "schema": SCHEMA,
        "dirichlet": report.dirichlet,
        "conformal": report.conformal,
        "area": report.area,
        "identity_residual": report.identity_residual,
        "identity_residual_relative": relative,
    });
    let mut densities = String::from("surfel,dirichlet,conformal,area\n");
    for (q, d) in operators::energy_densities(&structure, &f)?.iter().enumerate() {
        densities.push_str(&format!("{},{},{},{}\n", graph.quad_label(q), d[0], d[1], d[2]));
    }
    write_artifacts(
        output,
        vec![
            Artifact::json("energy.json", &summary),
            Artifact::csv("densities.csv", densities),
        ],
    )?;
    Ok(format!(
        "E_D={:e} E_C={:e} area={:e} residual={:e}",
        report.dirichlet, report.conformal, report.area, report.identity_residual
    ))
}

#[derive(Serialize)]
struct FlipDiagnostics {
    vertex: String,
    star: [Complex64; 3],
    flipped: [Complex64; 3],
    /// Relative spread of `ρᵢρ'ᵢ` around the elementary symmetric sum.
    product_residual: f64,
    /// Deviation of the inverse transformation from the input.
    round_trip: f64,
    /// Deviation of the ratios after flipping twice.
    double_flip: f64,
}

fn flip_diagnostics(structure: &ConformalStructure, v: usize) -> CliResult<FlipDiagnostics> {
    let hex = moves::hexagon_at(structure, v)?;
    let triangle = hex.triangle();
    let star = moves::star_triangle(triangle)?;
    let sum = triangle[0] * triangle[1] + triangle[1] * triangle[2] + triangle[2] * triangle[0];
    let product_residual = (0..3)
        .map(|i| (triangle[i] * star[i] - sum).norm() / sum.norm())
        .fold(0.0, f64::max);
    let back = moves::triangle_star(star)?;
    let round_trip = (0..3)
        .map(|i| (back[i] - triangle[i]).norm() / triangle[i].norm())
        .fold(0.0, f64::max);
    let once = moves::apply_flip(structure, v)?;
    let twice = moves::apply_flip(&once.structure, once.center)?;
    let restored = moves::hexagon_at(&twice.structure, twice.center)?.rho;
    // the ring comes back rotated, so compare up to rotation
    let double_flip = (0..3)
        .map(|shift| {
            (0..3)
                .map(|k| (restored[(k + shift) % 3] - hex.rho[k]).norm())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(FlipDiagnostics {
        vertex: structure.graph().vertex_label(v),
        star: hex.rho,
        flipped: hex.flipped_rho()?,
        product_residual,
        round_trip,
        double_flip,
    })
}

fn cmd_flip_check(input: &StructureArgs, output: &OutputArgs) -> CliResult<String> {
    let Loaded { structure, .. } = input.load()?;
    let vertices = moves::flippable_vertices(&structure);
    let diagnostics = vertices
        .iter()
        .map(|&v| flip_diagnostics(&structure, v))
        .collect::<CliResult<Vec<_>>>()?;
    let worst = |f: fn(&FlipDiagnostics) -> f64| diagnostics.iter().map(f).fold(0.0, f64::max);
    let (products, trips, doubles) = (
        worst(|d| d.product_residual),
        worst(|d| d.round_trip),
        worst(|d| d.double_flip),
    );
    let summary = json!({
        "schema": SCHEMA,
        "flippable": diagnostics.len(),
        "max_product_residual": products,
        "max_round_trip": trips,
        "max_double_flip": doubles,
        "vertices": diagnostics,
    });
    write_artifacts(output, vec![Artifact::json("flips.json", &summary)])?;
    Ok(format!(
        "flippable={} product={products:e} round_trip={trips:e} double_flip={doubles:e}",
        vertices.len()
    ))
}

fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Extract { input, output } => cmd_extract(input, output),
        Command::Ratios { input, output } => cmd_ratios(input, output),
        Command::Laplacian { input, kind, output } => cmd_laplacian(input, *kind, output),
        Command::Solve {
            input,
            pins,
            laplacian,
            output,
        } => cmd_solve(input, pins, *laplacian, output),
        Command::Parametrize { input, pins, output } => cmd_parametrize(input, pins, output),
        Command::Energy {
            input,
            function,
            output,
        } => cmd_energy(input, function, output),
        Command::FlipCheck { input, output } => cmd_flip_check(input, output),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Input { kind, message }) => {
            // core messages already start with their kind
            if message.starts_with(&kind) {
                eprintln!("error: {message}");
            } else {
                eprintln!("error: {kind}: {message}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Internal(message)) => {
            eprintln!("internal error: {message}");
            ExitCode::from(1)
        }
    }
}
