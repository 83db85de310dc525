//! Command-line front end: build size fields from surface meshes, query
//! and export them, and score meshes against them.

use std::io::{BufRead, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sizefield::medial::{DEFAULT_RHO, DEFAULT_THETA};
use sizefield::metrics;
use sizefield::pipeline::{build_size_field, BuildOptions};
use sizefield::{vec3, Error, SizeField, SizeFieldParams, SurfaceMesh};

const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

/// Isotropic mesh-size fields for 3D domains.
#[derive(Parser)]
#[command(name = "sizefield", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Verbose diagnostics on stderr (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Build a size field from a triangulated surface (STL/OBJ).
    Build(BuildArgs),
    /// Stream point queries against a field: one "x y z" per input line,
    /// one size per output line.
    Query(QueryArgs),
    /// Export the field octants as a legacy-VTK unstructured grid.
    Export(ExportArgs),
    /// Score a mesh against a field (metric edge lengths, efficiency
    /// index, gradation, tet quality).
    Stats(StatsArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Input surface mesh (.stl or .obj).
    #[arg(long = "in", value_name = "MESH")]
    input: PathBuf,
    /// Output field file.
    #[arg(long = "out", value_name = "FIELD")]
    output: PathBuf,
    /// Bulk size: absolute value or "L/k" (default L/20).
    #[arg(long)]
    bulk: Option<SizeSpec>,
    /// Minimum size: absolute value or "L/k" (default L/1000).
    #[arg(long)]
    min: Option<SizeSpec>,
    /// Nodes per osculating circle, n_d (default 20).
    #[arg(long)]
    density: Option<u32>,
    /// Element layers across gaps, n_g (default 4).
    #[arg(long)]
    layers: Option<u32>,
    /// Gradation alpha > 1 (default 1.1).
    #[arg(long)]
    gradation: Option<f64>,
    /// Skip the feature-size (medial axis) stage.
    #[arg(long)]
    no_features: bool,
    /// Also export the refined octants as VTK.
    #[arg(long, value_name = "VTK")]
    export_vtk: Option<PathBuf>,
    /// Dump per-vertex curvature as CSV (x,y,z,kmax,hc).
    #[arg(long, value_name = "CSV")]
    dump_curvature: Option<PathBuf>,
    /// Dump accepted feature edges as VTK line segments.
    #[arg(long, value_name = "VTK")]
    dump_features: Option<PathBuf>,
    /// Dump the Delaunay complex as VTK.
    #[arg(long, value_name = "VTK")]
    dump_delaunay: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    /// Field file to query.
    #[arg(long)]
    field: PathBuf,
    /// Points file, one "x y z" per line (default: stdin).
    #[arg(long)]
    points: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long = "out")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Field file to export.
    #[arg(long)]
    field: PathBuf,
    /// Output VTK file.
    #[arg(long = "out")]
    output: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Field file to score against.
    #[arg(long)]
    field: PathBuf,
    /// Mesh to score: .stl/.obj surface or .tet (ASCII tet format).
    #[arg(long)]
    mesh: PathBuf,
    /// Directory for histogram CSVs.
    #[arg(long, value_name = "DIR")]
    histograms: Option<PathBuf>,
}

/// Either an absolute size or a fraction of the largest bounding-box
/// dimension, written "L/k".
#[derive(Clone, Copy, Debug)]
enum SizeSpec {
    Absolute(f64),
    FractionOfL(f64),
}

impl SizeSpec {
    fn resolve(self, largest: f64) -> f64 {
        match self {
            SizeSpec::Absolute(v) => v,
            SizeSpec::FractionOfL(k) => largest / k,
        }
    }
}

impl FromStr for SizeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("L/").or_else(|| s.strip_prefix("l/")) {
            let k: f64 = rest
                .parse()
                .map_err(|_| format!("bad divisor in size spec {s:?}"))?;
            if !(k > 0.0) {
                return Err(format!("divisor must be positive in {s:?}"));
            }
            Ok(SizeSpec::FractionOfL(k))
        } else {
            let v: f64 = s.parse().map_err(|_| format!("bad size {s:?}"))?;
            if !(v > 0.0) {
                return Err(format!("size must be positive: {s:?}"));
            }
            Ok(SizeSpec::Absolute(v))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            eprintln!("sizefield: thread pool already initialized");
        }
    }
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Build(args) => run_build(args, verbose),
        Command::Query(args) => run_query(args),
        Command::Export(args) => run_export(args),
        Command::Stats(args) => run_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sizefield: error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e.root() {
        Error::InvalidParameter(_) => EXIT_USAGE,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::EmptyMesh
        | Error::AllDegenerate
        | Error::TooFewPoints(_)
        | Error::CoplanarPoints
        | Error::FieldFile { .. } => EXIT_INPUT,
        Error::DepthCap(_)
        | Error::LimiterDiverged { .. }
        | Error::Invariant(_)
        | Error::Stage { .. } => EXIT_INTERNAL,
    }
}

fn run_build(args: BuildArgs, verbose: u8) -> Result<(), Error> {
    let mesh = SurfaceMesh::load(&args.input)?;
    for w in &mesh.warnings {
        eprintln!("sizefield: warning: {w}");
    }
    let largest = mesh.bounding_box().largest_dimension();
    let mut params = SizeFieldParams::defaults_for(largest);
    if let Some(b) = args.bulk {
        params.h_bulk = b.resolve(largest);
    }
    if let Some(m) = args.min {
        params.h_min = m.resolve(largest);
    }
    if let Some(d) = args.density {
        params.node_density = d;
    }
    if let Some(l) = args.layers {
        params.gap_layers = l;
    }
    if let Some(g) = args.gradation {
        params.gradation = g;
    }
    params.validate()?;
    let opts = BuildOptions {
        features: !args.no_features,
        theta: DEFAULT_THETA,
        rho: DEFAULT_RHO,
    };

    let out = build_size_field(&mesh, &params, &opts)?;
    out.field.save(&args.output)?;

    eprintln!(
        "sizefield: {} vertices, {} triangles -> {} octants, {} limiter pass(es)",
        mesh.vertices.len(),
        mesh.triangles.len(),
        out.field.leaf_count(),
        out.limit_passes,
    );
    eprint!("{}", out.timings.table());
    if verbose > 0 {
        for (i, r) in out.limit_residuals.iter().enumerate() {
            eprintln!("limit pass {i}: max residual {r:.3e}");
        }
        if let (Some(feature), Some(complex)) = (&out.feature, &out.complex) {
            eprintln!(
                "feature edges accepted: {} ({} vertices constrained)",
                feature.edges.len(),
                feature.feature_size.iter().filter(|f| f.is_finite()).count()
            );
            let mut ratios = feature.sampling_ratios(&mesh, complex);
            if !ratios.is_empty() {
                ratios.sort_by(f64::total_cmp);
                eprintln!(
                    "sampling adequacy (local edge / feature size): median {:.3}, p90 {:.3}",
                    ratios[ratios.len() / 2],
                    ratios[ratios.len() * 9 / 10]
                );
            }
        }
    }

    if let Some(path) = &args.dump_curvature {
        sizefield::curvature::write_csv(&mesh, &out.curvature, path)?;
    }
    if let Some(path) = &args.export_vtk {
        sizefield::vtk::write_octree(&out.field.tree, path)?;
    }
    if let Some(path) = &args.dump_features {
        if let (Some(feature), Some(complex)) = (&out.feature, &out.complex) {
            let segments: Vec<_> = feature
                .edges
                .iter()
                .map(|e| {
                    (
                        complex.points[e.verts[0] as usize],
                        complex.points[e.verts[1] as usize],
                    )
                })
                .collect();
            let lengths: Vec<f64> = feature.edges.iter().map(|e| e.length).collect();
            sizefield::vtk::write_segments(&segments, Some(("length", lengths)), path)?;
        }
    }
    if let Some(path) = &args.dump_delaunay {
        if let Some(complex) = &out.complex {
            sizefield::vtk::write_delaunay(complex, path)?;
        }
    }
    Ok(())
}

fn run_query(args: QueryArgs) -> Result<(), Error> {
    let field = SizeField::load(&args.field)?;
    let stdin = std::io::stdin();
    let reader: Box<dyn BufRead> = match &args.points {
        Some(path) => Box::new(std::io::BufReader::new(
            std::fs::File::open(path).map_err(|e| Error::io(path, e))?,
        )),
        None => Box::new(stdin.lock()),
    };
    let source = args
        .points
        .clone()
        .unwrap_or_else(|| PathBuf::from("<stdin>"));
    let parse_and_query = |line: &str, lineno: usize| -> Result<Option<f64>, Error> {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return Ok(None);
        }
        let mut it = trimmed.split_whitespace();
        let mut coord = [0.0f64; 3];
        for c in &mut coord {
            *c = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(&source, lineno + 1, "expected \"x y z\""))?;
        }
        Ok(Some(field.query(vec3(coord[0], coord[1], coord[2]))))
    };
    match &args.output {
        Some(path) => {
            // File output is all-or-nothing: a malformed line must not
            // leave a partial result behind.
            let mut out = String::new();
            for (lineno, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io(&source, e))?;
                if let Some(h) = parse_and_query(&line, lineno)? {
                    out.push_str(&format!("{h}\n"));
                }
            }
            std::fs::write(path, out).map_err(|e| Error::io(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut writer = BufWriter::new(stdout.lock());
            for (lineno, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io(&source, e))?;
                if let Some(h) = parse_and_query(&line, lineno)? {
                    writeln!(writer, "{h}").map_err(|e| Error::io(&source, e))?;
                }
            }
            writer.flush().map_err(|e| Error::io(&source, e))
        }
    }
}

fn run_export(args: ExportArgs) -> Result<(), Error> {
    let field = SizeField::load(&args.field)?;
    sizefield::vtk::write_octree(&field.tree, &args.output)?;
    eprintln!(
        "sizefield: exported {} octants to {}",
        field.leaf_count(),
        args.output.display()
    );
    Ok(())
}

fn run_stats(args: StatsArgs) -> Result<(), Error> {
    let field = SizeField::load(&args.field)?;
    let is_tet = args
        .mesh
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("tet"))
        .unwrap_or(false);
    let report = if is_tet {
        let (points, tets) = metrics::read_tet_mesh(&args.mesh)?;
        let edges = metrics::tet_edges(&tets);
        metrics::evaluate(&field, &points, &edges, Some(&tets))
    } else {
        let mesh = SurfaceMesh::load(&args.mesh)?;
        metrics::evaluate(&field, &mesh.vertices, &mesh.edges, None)
    };
    print!("{}", report.summary());
    if let Some(dir) = &args.histograms {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, csv: String| -> Result<(), Error> {
            let path = dir.join(name);
            std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))
        };
        write("metric_lengths.csv", report.length_histogram.to_csv())?;
        write("gradation.csv", report.gradation_histogram.to_csv())?;
        if !report.tet_gamma.is_empty() {
            write("quality.csv", report.gamma_histogram.to_csv())?;
        }
    }
    Ok(())
}
