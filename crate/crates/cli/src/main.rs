use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use divpath::coords::{
    partition_boundary, solve_coordinates, BasisKind, BoundaryPartition, CoordinateField,
    LaplaceSystem, CLAMP_FLOOR,
};
use divpath::disk::verify::run_all;
use divpath::divergence::DistanceFn;
use divpath::geometry::{dist, generate_dense_mesh, load_domain, DomainSpec, Point, TriMesh};
use divpath::planner::{descend, distance_field, DistanceField, PlannedPath};
use divpath::routing::{
    augment_to_greedy, distance_matrix, greedy_route, sample_sites, EdgeTag, SiteGraph,
};
use divpath::svg::{Figure, BREAKPOINT_BLUE, SOURCE_GREEN, TARGET_RED};

/// Path planning and greedy routing with harmonic-measure coordinates and
/// f-divergence distances.
#[derive(Parser)]
#[command(name = "divpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Domain file -> triangle mesh file.
    Mesh(MeshArgs),
    /// Mesh -> coordinate cache.
    Coords(CoordsArgs),
    /// Coordinates + target -> distance field dump.
    Field(FieldArgs),
    /// Distance field + source -> path file.
    Plan(PlanArgs),
    /// Coordinates + sampled sites -> greedy site graph.
    Graph(GraphArgs),
    /// Greedy route between two sites of a graph.
    Route(RouteArgs),
    /// Certify the closed-form unit-disk formulas.
    VerifyDisk(VerifyArgs),
    /// Render any combination of artifacts to SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long)]
    domain: PathBuf,
    /// Target edge length.
    #[arg(long)]
    h: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CoordsArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    mesh: PathBuf,
    /// Longest boundary segment; polygon corners are always breakpoints.
    #[arg(long, default_value_t = f64::INFINITY)]
    max_seg_len: f64,
    #[arg(long, default_value = "box")]
    basis: BasisKind,
    /// Floor applied to interior coordinates before renormalizing.
    #[arg(long, default_value_t = CLAMP_FLOOR)]
    clamp: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    coords: PathBuf,
    /// Vertex index, or `x,y` snapped to the nearest interior vertex.
    #[arg(long)]
    target: String,
    #[arg(long = "f", default_value = "kl")]
    generator: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    field: PathBuf,
    /// Vertex index, or `x,y` snapped to the nearest interior vertex.
    #[arg(long)]
    source: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    coords: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "f", default_value = "kl")]
    generator: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    coords: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long = "f", default_value = "kl")]
    generator: String,
    /// Site index.
    #[arg(long)]
    source: usize,
    /// Site index.
    #[arg(long)]
    target: usize,
    /// Write the route here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    field: Option<PathBuf>,
    /// Path files; each needs `--field`.
    #[arg(long = "path")]
    paths: Vec<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// With `--max-seg-len`, draws the breakpoints.
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long)]
    max_seg_len: Option<f64>,
    /// Canvas size in pixels.
    #[arg(long, default_value_t = 800.0)]
    size: f64,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_mesh(path: &Path) -> Result<TriMesh> {
    TriMesh::from_text(&read(path)?).with_context(|| format!("mesh file {}", path.display()))
}

fn load_domain_file(path: &Path) -> Result<DomainSpec> {
    load_domain(&read(path)?).with_context(|| format!("domain file {}", path.display()))
}

fn load_coords(path: &Path, mesh: &TriMesh) -> Result<CoordinateField> {
    let c = CoordinateField::from_text(&read(path)?)
        .with_context(|| format!("coordinate file {}", path.display()))?;
    if c.k() != mesh.num_vertices() {
        bail!(
            "coordinate file {} has {} rows but the mesh has {} vertices",
            path.display(),
            c.k(),
            mesh.num_vertices()
        );
    }
    Ok(c)
}

fn load_field(path: &Path, mesh: &TriMesh) -> Result<DistanceField> {
    let f = DistanceField::from_text(&read(path)?)
        .with_context(|| format!("field file {}", path.display()))?;
    if f.len() != mesh.num_vertices() {
        bail!(
            "field file {} has {} values but the mesh has {} vertices",
            path.display(),
            f.len(),
            mesh.num_vertices()
        );
    }
    Ok(f)
}

fn load_graph(path: &Path, mesh: &TriMesh) -> Result<SiteGraph> {
    SiteGraph::from_text(&read(path)?, mesh)
        .with_context(|| format!("graph file {}", path.display()))
}

/// `17` or `0.3,-0.2` (nearest interior vertex).
fn resolve_vertex(mesh: &TriMesh, spec: &str) -> Result<usize> {
    if let Some((x, y)) = spec.split_once(',') {
        let p: Point = [
            x.trim()
                .parse()
                .with_context(|| format!("bad x in `{spec}`"))?,
            y.trim()
                .parse()
                .with_context(|| format!("bad y in `{spec}`"))?,
        ];
        return mesh
            .interior_vertices()
            .min_by(|&a, &b| dist(mesh.vertices()[a], p).total_cmp(&dist(mesh.vertices()[b], p)))
            .context("mesh has no interior vertices");
    }
    let v: usize = spec
        .parse()
        .with_context(|| format!("`{spec}` is neither a vertex index nor `x,y`"))?;
    if v >= mesh.num_vertices() {
        bail!("vertex {v} out of range (mesh has {})", mesh.num_vertices());
    }
    Ok(v)
}

fn run_mesh(a: &MeshArgs) -> Result<()> {
    let domain = load_domain_file(&a.domain)?;
    let mesh = generate_dense_mesh(&domain, a.h).context("mesh generation")?;
    write(&a.out, &mesh.to_text())?;
    if let Some(svg) = &a.svg {
        write(svg, &Figure::new(&mesh, 800.0).mesh(&mesh).finish())?;
    }
    eprintln!(
        "mesh: {} vertices, {} triangles, {} boundary loops",
        mesh.num_vertices(),
        mesh.triangles().len(),
        mesh.boundary_loops().len()
    );
    Ok(())
}

fn run_coords(a: &CoordsArgs) -> Result<()> {
    if !(a.clamp >= 0.0 && a.clamp < 1.0) {
        bail!("--clamp must lie in [0, 1), got {}", a.clamp);
    }
    let domain = load_domain_file(&a.domain)?;
    let mesh = load_mesh(&a.mesh)?;
    let partition =
        partition_boundary(&mesh, &domain, a.max_seg_len, a.basis).context("boundary partition")?;
    let system = LaplaceSystem::assemble(&mesh).context("Laplace assembly")?;
    let coords = solve_coordinates(&system, &partition.basis_vectors(&mesh), a.basis, a.clamp)
        .context("coordinate solve")?;
    write(&a.out, &coords.to_text())?;
    if let Some(d) = coords.diagnostics() {
        eprintln!(
            "coords: k = {}, n = {}, residual {:.2e}, row-sum error {:.2e}, min raw entry {:.2e}",
            coords.k(),
            coords.n(),
            d.max_residual,
            d.max_row_error,
            d.min_entry
        );
    }
    Ok(())
}

fn field_figure(mesh: &TriMesh, field: &DistanceField) -> Figure {
    let mut fig = Figure::new(mesh, 800.0);
    fig.field(mesh, field.values())
        .dot(mesh.vertices()[field.target()], 5.0, TARGET_RED);
    fig
}

fn run_field(a: &FieldArgs) -> Result<()> {
    let mesh = load_mesh(&a.mesh)?;
    let coords = load_coords(&a.coords, &mesh)?;
    let dist = DistanceFn::from_name(&a.generator)?;
    let target = resolve_vertex(&mesh, &a.target)?;
    let field = distance_field(&mesh, &coords, target, &dist).context("distance field")?;
    write(&a.out, &field.to_text())?;
    if let Some(svg) = &a.svg {
        write(svg, &field_figure(&mesh, &field).finish())?;
    }
    Ok(())
}

fn run_plan(a: &PlanArgs) -> Result<()> {
    let mesh = load_mesh(&a.mesh)?;
    let field = load_field(&a.field, &mesh)?;
    let source = resolve_vertex(&mesh, &a.source)?;
    let path = descend(&mesh, &field, source).context("descent")?;
    write(&a.out, &path.to_text())?;
    if let Some(svg) = &a.svg {
        let mut fig = field_figure(&mesh, &field);
        fig.path(&mesh, &path.vertices)
            .dot(mesh.vertices()[source], 5.0, SOURCE_GREEN);
        write(svg, &fig.finish())?;
    }
    eprintln!(
        "plan: {} after {} steps",
        path.status,
        path.vertices.len() - 1
    );
    Ok(())
}

fn run_graph(a: &GraphArgs) -> Result<()> {
    let domain = load_domain_file(&a.domain)?;
    let mesh = load_mesh(&a.mesh)?;
    let coords = load_coords(&a.coords, &mesh)?;
    let dist = DistanceFn::from_name(&a.generator)?;
    let sites = sample_sites(&mesh, a.m, a.seed, None).context("site sampling")?;
    let d = distance_matrix(&coords, &sites, &dist).context("distance matrix")?;
    let graph = augment_to_greedy(&sites, &domain, &d).context("graph augmentation")?;
    write(&a.out, &graph.to_text())?;
    if let Some(svg) = &a.svg {
        let mut fig = Figure::new(&mesh, 800.0);
        fig.mesh(&mesh).site_graph(&graph);
        write(svg, &fig.finish())?;
    }
    eprintln!(
        "graph: {} sites, {} delaunay edges, {} augmented edges",
        graph.len(),
        graph.count(EdgeTag::Delaunay),
        graph.count(EdgeTag::Augmented)
    );
    Ok(())
}

fn run_route(a: &RouteArgs) -> Result<String> {
    let mesh = load_mesh(&a.mesh)?;
    let graph = load_graph(&a.graph, &mesh)?;
    let dist = DistanceFn::from_name(&a.generator)?;
    if graph.generator() != dist.name() {
        bail!(
            "graph {} was made greedy for `{}`, not `{}`; rebuild it with --f {}",
            a.graph.display(),
            graph.generator(),
            dist.name(),
            a.generator
        );
    }
    let coords = load_coords(&a.coords, &mesh)?;
    let d = distance_matrix(&coords, graph.sites(), &dist).context("distance matrix")?;
    let route = greedy_route(&graph, &d, a.source, a.target).context("greedy route")?;
    let text: Vec<String> = route.iter().map(usize::to_string).collect();
    let text = text.join("\n") + "\n";
    if let Some(out) = &a.out {
        write(out, &text)?;
    }
    Ok(text)
}

fn run_verify(a: &VerifyArgs) -> Result<()> {
    let checks = run_all(a.seed);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} of {} disk checks failed", checks.len());
    }
    println!("all {} disk checks passed", checks.len());
    Ok(())
}

fn run_render(a: &RenderArgs) -> Result<()> {
    let mesh = load_mesh(&a.mesh)?;
    let field = a
        .field
        .as_deref()
        .map(|p| load_field(p, &mesh))
        .transpose()?;
    let mut fig = Figure::new(&mesh, a.size);
    if let Some(f) = &field {
        fig.field(&mesh, f.values());
    }
    fig.mesh(&mesh);
    if let Some(g) = &a.graph {
        fig.site_graph(&load_graph(g, &mesh)?);
    }
    for p in &a.paths {
        let Some(f) = &field else {
            bail!("--path {} needs --field", p.display());
        };
        let path = PlannedPath::from_text(&read(p)?, f)
            .with_context(|| format!("path file {}", p.display()))?;
        fig.path(&mesh, &path.vertices)
            .dot(mesh.vertices()[path.vertices[0]], 5.0, SOURCE_GREEN);
    }
    match (&a.domain, a.max_seg_len) {
        (Some(d), Some(len)) => {
            let domain = load_domain_file(d)?;
            let partition: BoundaryPartition =
                partition_boundary(&mesh, &domain, len, BasisKind::Box)
                    .context("boundary partition")?;
            for b in partition.breakpoints() {
                fig.dot(mesh.vertices()[b.vertex], 4.0, BREAKPOINT_BLUE);
            }
        }
        (None, None) => {}
        _ => bail!("--domain and --max-seg-len go together"),
    }
    if let Some(f) = &field {
        fig.dot(mesh.vertices()[f.target()], 5.0, TARGET_RED);
    }
    write(&a.out, &fig.finish())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, result) = match &cli.command {
        Command::Mesh(a) => ("mesh", run_mesh(a)),
        Command::Coords(a) => ("coords", run_coords(a)),
        Command::Field(a) => ("field", run_field(a)),
        Command::Plan(a) => ("plan", run_plan(a)),
        Command::Graph(a) => ("graph", run_graph(a)),
        Command::Route(a) => ("route", run_route(a).map(|text| print!("{text}"))),
        Command::VerifyDisk(a) => ("verify-disk", run_verify(a)),
        Command::Render(a) => ("render", run_render(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("divpath {stage}: {e:#}");
            ExitCode::FAILURE
        }
    }
}
