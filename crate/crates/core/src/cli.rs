//! Command-line front end. The `cpwalk` binary is a shim over [`main`].
//!
//! Every command returns a [`RunReport`]; the process exits 0 when all of
//! its certificates pass, 1 when one fails and 2 on usage or I/O errors.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::json;
use thiserror::Error;

use crate::geometry::{cross2, AlphaNice};
use crate::harmonic::{
    disc_integral_ratio, nicify_polygon, polygon_integral_check, predicted_split_depth,
    FourierHarmonic, TangentialPolygon, DISC_CONSTANT,
};
use crate::network::{
    annulus_test_function, carrier_inradius, dubejko_weights, formula_weight, WeightedNetwork,
};
use crate::packing::{
    build_flower, build_hexagonal, load_any, refine_face, refine_until, CirclePacking, PackingFile,
    ALPHA0,
};
use crate::report::{affine_fit, line_plot_svg, packing_svg, Certificate, RunReport};
use crate::sphere3d::{
    covered_cells, martingale_residual_3d, reciprocity_residual, weights_3d, SpherePacking3D,
};
use crate::walk::{escape_probability, martingale_residual, sample_rng, simulate};
use crate::VertexId;

/// Energy bound for the annulus test function.
pub const ENERGY_BOUND: f64 = 160.0 * PI;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "cpwalk",
    version,
    about = "Circle packings, Dubejko weights and random walks"
)]
pub struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Hex,
    Flower,
    Cubic3d,
    Fcc3d,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a packing file.
    Build(BuildArgs),
    /// Martingale, weight-bound and orthogonality certificates.
    Verify { file: PathBuf },
    /// Effective conductance from a root to graph-distance rings.
    Conductance(ConductanceArgs),
    /// Export the weighted network as JSON.
    Weights {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Simulate a walk and optionally estimate an escape probability.
    Walk(WalkArgs),
    /// Censor vertices out of a network.
    Censor(CensorArgs),
    /// Insert a chain of circles into a face.
    Refine(RefineArgs),
    /// Probe the disc and polygon integral inequalities.
    HarmonicCheck(HarmonicArgs),
    /// Draw a planar packing as SVG.
    Render {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also draw dual edges.
        #[arg(long)]
        dual: bool,
    },
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    /// Graph radius of a hex ball.
    #[arg(long)]
    pub radius: Option<u32>,
    /// Circle radius for hex balls.
    #[arg(long, default_value_t = 1.0)]
    pub circle_radius: f64,
    /// Number of petals of a flower.
    #[arg(long)]
    pub n: Option<u32>,
    /// Spheres per axis of a 3D lattice block.
    #[arg(long)]
    pub side: Option<u32>,
    /// Output path; the packing goes to stdout and the report to stderr
    /// when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConductanceArgs {
    pub file: PathBuf,
    /// Root vertex; defaults to the circle nearest the origin.
    #[arg(long)]
    pub rho: Option<u64>,
    /// Graph radii of the balls, for packings.
    #[arg(long, value_delimiter = ',')]
    pub rings: Vec<u32>,
    /// Explicit boundary set, for network files.
    #[arg(long, value_delimiter = ',')]
    pub boundary: Vec<u64>,
    /// Write 1/C_eff against log R as SVG.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    pub file: PathBuf,
    /// Start vertex; defaults to the circle nearest the origin, or the
    /// smallest id of a network.
    #[arg(long)]
    pub start: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Trace output, one vertex id per line.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Estimate escape to this graph-distance ring and compare with the
    /// linear solve.
    #[arg(long)]
    pub escape_ring: Option<u32>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
}

#[derive(Debug, Args)]
pub struct CensorArgs {
    pub file: PathBuf,
    /// Vertices to censor.
    #[arg(long, value_delimiter = ',', required = true)]
    pub remove: Vec<u64>,
    /// Drop self-loops after censoring.
    #[arg(long)]
    pub delete_loops: bool,
    /// Two retained vertices whose effective conductance is compared.
    #[arg(long, value_delimiter = ',')]
    pub terminals: Vec<u64>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    pub file: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub face: Vec<u64>,
    /// Chain length.
    #[arg(long, conflicts_with = "target")]
    pub k: Option<usize>,
    /// Grow the chain until its last two weights sum below this.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HarmonicArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 10)]
    pub terms: usize,
    #[arg(long, default_value_t = 100)]
    pub polygons: u64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
}

/// Parses the process arguments, runs the command and prints its report.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("CPWALK_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let format = cli.format;
    let to_stderr = matches!(&cli.command, Command::Build(b) if b.out.is_none());
    match run(cli) {
        Ok(report) => {
            let text = match format {
                Format::Json => report.to_json() + "\n",
                Format::Text => report.to_text(),
            };
            let written = if to_stderr {
                io::stderr().write_all(text.as_bytes())
            } else {
                io::stdout().write_all(text.as_bytes())
            };
            if written.is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(if report.passed() { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("cpwalk: {e}");
            ExitCode::from(2)
        }
    }
}

pub fn run(cli: Cli) -> Result<RunReport> {
    let seed = cli.seed;
    match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Verify { file } => cmd_verify(&file),
        Command::Conductance(a) => cmd_conductance(&a),
        Command::Weights { file, out } => cmd_weights(&file, &out),
        Command::Walk(a) => cmd_walk(&a, seed),
        Command::Censor(a) => cmd_censor(&a),
        Command::Refine(a) => cmd_refine(&a),
        Command::HarmonicCheck(a) => cmd_harmonic_check(&a, seed),
        Command::Render { file, out, dual } => cmd_render(&file, &out, dual),
    }
}

/// Anything a command can read.
enum Input {
    Planar(CirclePacking),
    Spatial(SpherePacking3D),
    Network(WeightedNetwork),
}

fn read_input(path: &Path) -> Result<Input> {
    let bad = |message: String| CliError::Input {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let is_network = serde_json::from_str::<serde_json::Value>(&text)
        .map(|v| v.get("vertices").is_some())
        .unwrap_or(false);
    if is_network {
        return WeightedNetwork::from_json(text.as_bytes())
            .map(Input::Network)
            .map_err(|e| bad(e.to_string()));
    }
    match load_any(text.as_bytes()).map_err(|e| bad(e.to_string()))? {
        PackingFile::Planar(p) => Ok(Input::Planar(p)),
        PackingFile::Spatial(s) => Ok(Input::Spatial(s)),
    }
}

fn read_planar(path: &Path) -> Result<CirclePacking> {
    match read_input(path)? {
        Input::Planar(p) => Ok(p),
        _ => Err(usage(format!("{} is not a planar packing", path.display()))),
    }
}

/// The network of any input kind.
fn network_of(input: &Input) -> Result<WeightedNetwork> {
    match input {
        Input::Planar(p) => dubejko_weights(p).map_err(failed),
        Input::Spatial(s) => weights_3d(s).map_err(failed),
        Input::Network(n) => Ok(n.clone()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn nearest_origin(p: &CirclePacking) -> usize {
    (0..p.len())
        .min_by(|&a, &b| {
            let (ca, cb) = (p.circle_at(a), p.circle_at(b));
            ca.center
                .norm()
                .total_cmp(&cb.center.norm())
                .then(ca.id.cmp(&cb.id))
        })
        .expect("packings are nonempty")
}

fn cmd_build(a: &BuildArgs) -> Result<RunReport> {
    let mut report = RunReport::new("build");
    let need = |v: Option<u32>, flag: &str| {
        v.ok_or_else(|| usage(format!("{flag} is required for this kind")))
    };
    let mut bytes = Vec::new();
    let count = match a.kind {
        Kind::Hex => {
            let r = need(a.radius, "--radius")?;
            report
                .input("kind", "hex")
                .input("radius", r)
                .input("circle_radius", a.circle_radius);
            let p = build_hexagonal(r, a.circle_radius).map_err(|e| usage(e.to_string()))?;
            report.certify(Certificate::at_most(
                "validation violations",
                p.validate().len() as f64,
                0.0,
            ));
            p.save(&mut bytes)?;
            p.len()
        }
        Kind::Flower => {
            let n = need(a.n, "--n")?;
            report.input("kind", "flower").input("n", n);
            let p = build_flower(n).map_err(|e| usage(e.to_string()))?;
            report.certify(Certificate::at_most(
                "validation violations",
                p.validate().len() as f64,
                0.0,
            ));
            p.save(&mut bytes)?;
            p.len()
        }
        Kind::Cubic3d | Kind::Fcc3d => {
            let side = need(a.side, "--side")?;
            let cubic = a.kind == Kind::Cubic3d;
            report
                .input("kind", if cubic { "cubic3d" } else { "fcc3d" })
                .input("side", side);
            let s = if cubic {
                SpherePacking3D::cubic(side)
            } else {
                SpherePacking3D::fcc(side)
            }
            .map_err(|e| usage(e.to_string()))?;
            s.save(&mut bytes)?;
            s.len()
        }
    };
    report.result("count", count);
    match &a.out {
        Some(path) => {
            report.input("out", path.display().to_string());
            write_file(path, &bytes)?;
        }
        None => io::stdout().write_all(&bytes)?,
    }
    Ok(report)
}

/// Verifies a planar packing; shared with the examples.
pub fn verify_planar(p: &CirclePacking) -> Result<RunReport> {
    let mut report = RunReport::new("verify");
    let net = dubejko_weights(p).map_err(failed)?;
    let interior: Vec<VertexId> = p.interior_ids().filter(|v| net.contains(*v)).collect();
    if interior.is_empty() {
        return Err(failed("packing has no interior vertex"));
    }
    let mut worst_drift: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for &v in &interior {
        worst_drift = worst_drift.max(martingale_residual(p, &net, v).map_err(failed)?);
        worst_sum = worst_sum.max(net.pi(v));
    }
    let mut worst_weight: f64 = 0.0;
    let mut worst_formula: f64 = 0.0;
    for (u, v, c) in net.weighted_edges() {
        worst_weight = worst_weight.max(c);
        let (i, j) = (
            p.index_of(u).expect("in packing"),
            p.index_of(v).expect("in packing"),
        );
        if let Some(f) = formula_weight(p, i, j) {
            worst_formula = worst_formula.max((f - c).abs() / c);
        }
    }
    let mut worst_cos: f64 = 0.0;
    for e in p.dual_edges() {
        if let (a, Some(b)) = e.endpoints {
            let (cu, cv) = (
                p.get(e.edge.0).expect("edge"),
                p.get(e.edge.1).expect("edge"),
            );
            let primal = cv.center - cu.center;
            let dual = b - a;
            worst_cos = worst_cos.max(primal.dot(&dual).abs() / (primal.norm() * dual.norm()));
        }
    }
    report
        .result("circles", p.len())
        .result("edges", p.edge_indices().len())
        .result("faces", p.faces().len())
        .result("interior_vertices", interior.len())
        .result("weighted_edges", net.edge_count());
    report
        .certify(Certificate::at_most(
            "martingale residual, max over interior vertices",
            worst_drift,
            1e-10,
        ))
        .certify(Certificate::below(
            "edge weight, max over interior edges",
            worst_weight,
            1.0,
        ))
        .certify(Certificate::below(
            "weight sum, max over interior vertices",
            worst_sum,
            2.0 * PI,
        ))
        .certify(Certificate::at_most(
            "dual/primal |cos|, max over interior edges",
            worst_cos,
            1e-9,
        ))
        .certify(Certificate::at_most(
            "radii formula vs |e†|/|e|, max relative difference",
            worst_formula,
            1e-10,
        ));
    Ok(report)
}

/// Verifies a 3D packing on its covered cells; shared with the examples.
pub fn verify_spatial(s: &SpherePacking3D) -> Result<RunReport> {
    let mut report = RunReport::new("verify");
    let cells = covered_cells(s);
    if cells.is_empty() {
        return Err(failed("no sphere has a bounded cell"));
    }
    let mut worst_vector: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    let mut face_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (v, cell) in &cells {
        worst_vector = worst_vector.max(cell.vector_area_residual() / cell.surface_area());
        worst_drift = worst_drift.max(martingale_residual_3d(s, *v).map_err(failed)?);
        *face_counts.entry(cell.faces.len()).or_default() += 1;
    }
    report
        .result("spheres", s.len())
        .result("covered", cells.len())
        .result("cells_by_face_count", face_counts);
    report
        .certify(Certificate::at_most(
            "vector area residual, max over covered cells",
            worst_vector,
            1e-10,
        ))
        .certify(Certificate::at_most(
            "martingale residual, max over covered cells",
            worst_drift,
            1e-10,
        ))
        .certify(Certificate::at_most(
            "face area reciprocity, max relative mismatch",
            reciprocity_residual(&cells),
            1e-9,
        ));
    Ok(report)
}

fn cmd_verify(file: &Path) -> Result<RunReport> {
    let mut report = match read_input(file)? {
        Input::Planar(p) => verify_planar(&p)?,
        Input::Spatial(s) => verify_spatial(&s)?,
        Input::Network(_) => return Err(usage("verify needs a packing file, not a network")),
    };
    report.input("file", file.display().to_string());
    Ok(report)
}

/// Effective conductance from `rho` to each ring `{hop distance ≥ R}`.
pub fn ring_conductances(
    p: &CirclePacking,
    net: &WeightedNetwork,
    rho: usize,
    rings: &[u32],
) -> Result<Vec<f64>> {
    if !p.is_interior_index(rho) {
        return Err(usage(format!(
            "rho {} is not an interior vertex",
            p.circle_at(rho).id
        )));
    }
    let hops = p.hop_distances(rho);
    rings
        .iter()
        .map(|&r| {
            let boundary: BTreeSet<VertexId> = (0..p.len())
                .filter(|&i| hops[i].is_some_and(|h| h >= r))
                .map(|i| p.circle_at(i).id)
                .filter(|v| net.contains(*v))
                .collect();
            let reach = hops.iter().flatten().max().copied().unwrap_or(0);
            if r == 0 || r > reach || boundary.is_empty() {
                return Err(usage(format!(
                    "ring {r} is outside the packing (max hop distance {reach})"
                )));
            }
            net.effective_conductance(p.circle_at(rho).id, &boundary)
                .map_err(failed)
        })
        .collect()
}

fn cmd_conductance(a: &ConductanceArgs) -> Result<RunReport> {
    let mut report = RunReport::new("conductance");
    report.input("file", a.file.display().to_string());
    match read_input(&a.file)? {
        Input::Network(net) => {
            let rho = VertexId(
                a.rho
                    .ok_or_else(|| usage("--rho is required for network files"))?,
            );
            if a.boundary.is_empty() {
                return Err(usage("--boundary is required for network files"));
            }
            let boundary: BTreeSet<VertexId> = a.boundary.iter().map(|&b| VertexId(b)).collect();
            report.input("rho", rho).input("boundary", &boundary);
            let c = net
                .effective_conductance(rho, &boundary)
                .map_err(|e| usage(e.to_string()))?;
            report.result("c_eff", c).result("resistance", 1.0 / c);
        }
        Input::Planar(p) => {
            if a.rings.is_empty() {
                return Err(usage("--rings is required for packings"));
            }
            let rho = match a.rho {
                Some(id) => p
                    .index_of(VertexId(id))
                    .ok_or_else(|| usage(format!("no vertex {id}")))?,
                None => nearest_origin(&p),
            };
            let mut rings = a.rings.clone();
            rings.sort_unstable();
            rings.dedup();
            report
                .input("rho", p.circle_at(rho).id)
                .input("rings", &rings);
            let net = dubejko_weights(&p).map_err(failed)?;
            let c = ring_conductances(&p, &net, rho, &rings)?;
            let table: Vec<_> = rings
                .iter()
                .zip(&c)
                .map(|(r, c)| json!({"R": r, "c_eff": c, "resistance": 1.0 / c}))
                .collect();
            report.result("table", table).result(
                "note",
                "finite-size evidence only: recurrence is a limit statement and is not decided here",
            );
            if c.len() >= 2 {
                let worst = c
                    .windows(2)
                    .map(|w| w[1] / w[0])
                    .fold(f64::NEG_INFINITY, f64::max);
                report.certify(Certificate::below(
                    "C_eff(R_next)/C_eff(R), max over rings",
                    worst,
                    1.0,
                ));
            }
            let points: Vec<(f64, f64)> = rings
                .iter()
                .zip(&c)
                .map(|(&r, &c)| ((r as f64).ln(), 1.0 / c))
                .collect();
            if points.len() >= 3 {
                let (a0, b0, rel) = affine_fit(&points);
                report.result("fit", json!({"intercept": a0, "slope": b0}));
                report.certify(Certificate::at_most(
                    "1/C_eff affine in log R, relative residual",
                    rel,
                    0.1,
                ));
            }
            if let Some(path) = &a.plot {
                write_file(path, line_plot_svg(&points, "log R", "1/C_eff").as_bytes())?;
            }
            // largest annulus that fits in the carrier around the origin
            let reach = carrier_inradius(&p) / 8.0 * (1.0 - 1e-9);
            if reach > 0.0 {
                if let Ok(f) = annulus_test_function(&p, reach) {
                    report.result("annulus_radius", reach);
                    report.certify(Certificate::at_most(
                        "annulus test function energy",
                        net.dirichlet_energy(&f),
                        ENERGY_BOUND,
                    ));
                }
            }
        }
        Input::Spatial(_) => {
            return Err(usage("conductance supports planar packings and networks"))
        }
    }
    Ok(report)
}

fn cmd_weights(file: &Path, out: &Path) -> Result<RunReport> {
    let input = read_input(file)?;
    let net = network_of(&input)?;
    let mut report = RunReport::new("weights");
    report
        .input("file", file.display().to_string())
        .input("out", out.display().to_string());
    let mut bytes = Vec::new();
    net.to_json(&mut bytes).map_err(failed)?;
    write_file(out, &bytes)?;
    let (lo, hi) = net
        .weighted_edges()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (_, _, c)| {
            (l.min(c), h.max(c))
        });
    report
        .result("vertices", net.len())
        .result("edges", net.edge_count())
        .result("min_weight", lo)
        .result("max_weight", hi);
    if let Input::Planar(p) = &input {
        let worst = p
            .interior_ids()
            .filter(|v| net.contains(*v))
            .map(|v| net.pi(v))
            .fold(0.0, f64::max);
        report
            .certify(Certificate::below("edge weight, max", hi, 1.0))
            .certify(Certificate::below(
                "weight sum, max over interior vertices",
                worst,
                2.0 * PI,
            ));
    }
    Ok(report)
}

fn cmd_walk(a: &WalkArgs, seed: u64) -> Result<RunReport> {
    let input = read_input(&a.file)?;
    let net = network_of(&input)?;
    let start = match (a.start, &input) {
        (Some(id), _) => VertexId(id),
        (None, Input::Planar(p)) => p.circle_at(nearest_origin(p)).id,
        (None, _) => net.ids().next().expect("networks are nonempty"),
    };
    let mut report = RunReport::new("walk");
    report
        .input("file", a.file.display().to_string())
        .input("start", start)
        .input("steps", a.steps)
        .input("seed", seed);
    let trace = simulate(&net, start, a.steps, seed).map_err(|e| usage(e.to_string()))?;
    if let Some(path) = &a.out {
        let mut bytes = Vec::new();
        trace.write_to(&mut bytes)?;
        write_file(path, &bytes)?;
    }
    let distinct: BTreeSet<_> = trace.states.iter().collect();
    report
        .result("distinct_vertices", distinct.len())
        .result("final_vertex", trace.states.last());
    if let Some(r) = a.escape_ring {
        let Input::Planar(p) = &input else {
            return Err(usage("--escape-ring needs a planar packing"));
        };
        let rho = p
            .index_of(start)
            .ok_or_else(|| usage(format!("no vertex {start}")))?;
        let c = ring_conductances(p, &net, rho, &[r])?[0];
        let hops = p.hop_distances(rho);
        let boundary: BTreeSet<VertexId> = (0..p.len())
            .filter(|&i| hops[i].is_some_and(|h| h >= r))
            .map(|i| p.circle_at(i).id)
            .filter(|v| net.contains(*v))
            .collect();
        let est = escape_probability(&net, start, &boundary, a.samples, seed).map_err(failed)?;
        let exact = c / net.pi(start);
        report
            .result("escape", est)
            .result("escape_from_solve", exact);
        report.certify(Certificate::at_most(
            "|escape estimate − C_eff/π(ρ)| in standard errors",
            (est.estimate - exact).abs() / est.stderr,
            3.0,
        ));
    }
    Ok(report)
}

fn cmd_censor(a: &CensorArgs) -> Result<RunReport> {
    let net = network_of(&read_input(&a.file)?)?;
    let remove: BTreeSet<VertexId> = a.remove.iter().map(|&v| VertexId(v)).collect();
    let mut report = RunReport::new("censor");
    report
        .input("file", a.file.display().to_string())
        .input("remove", &remove)
        .input("delete_loops", a.delete_loops);
    let censored = net.censor_set(&remove).map_err(|e| usage(e.to_string()))?;
    let worst = censored
        .ids()
        .map(|v| (censored.pi(v) - net.pi(v)).abs() / net.pi(v))
        .fold(0.0, f64::max);
    report.certify(Certificate::at_most(
        "π on retained vertices, max relative change",
        worst,
        1e-12,
    ));
    if !matches!(a.terminals.len(), 0 | 2) {
        return Err(usage("--terminals takes two ids"));
    }
    if let [s, t] = a.terminals[..] {
        let (s, t) = (VertexId(s), VertexId(t));
        let before = net
            .effective_conductance(s, &BTreeSet::from([t]))
            .map_err(|e| usage(e.to_string()))?;
        let after = censored
            .effective_conductance(s, &BTreeSet::from([t]))
            .map_err(|e| usage(e.to_string()))?;
        report.result("c_eff", json!({"before": before, "after": after}));
        report.certify(Certificate::at_most(
            "terminal effective conductance, relative change",
            (after - before).abs() / before,
            1e-12,
        ));
    }
    let out = if a.delete_loops {
        censored.delete_loops().map_err(failed)?
    } else {
        censored
    };
    report
        .result("vertices", out.len())
        .result("edges", out.edge_count())
        .result("has_loops", out.has_loops());
    if let Some(path) = &a.out {
        let mut bytes = Vec::new();
        out.to_json(&mut bytes).map_err(failed)?;
        write_file(path, &bytes)?;
    }
    Ok(report)
}

fn cmd_refine(a: &RefineArgs) -> Result<RunReport> {
    let [x, y, z] = a.face[..] else {
        return Err(usage("--face takes three ids"));
    };
    let p = read_planar(&a.file)?;
    let face = [VertexId(x), VertexId(y), VertexId(z)];
    let mut report = RunReport::new("refine");
    report
        .input("file", a.file.display().to_string())
        .input("face", face);
    let (refined, r) = match (a.k, a.target) {
        (Some(k), None) => {
            report.input("k", k);
            refine_face(&p, face, k)
        }
        (None, Some(t)) => {
            report.input("target", t);
            refine_until(&p, face, t)
        }
        _ => return Err(usage("exactly one of --k and --target is required")),
    }
    .map_err(|e| usage(e.to_string()))?;
    let rx = p.get(r.face[0]).expect("face vertex").radius;
    let worst_ratio = r.radius_ratios(rx).into_iter().fold(0.0, f64::max);
    report
        .result("ordered_face", r.face)
        .result("k", r.k)
        .result("chain_ids", &r.chain_ids)
        .result("chain_radii", &r.chain_radii)
        .result("final_weight_sum", r.final_weight_sum)
        .result("last_corner_angle", r.last_corner_angle);
    report
        .certify(Certificate::at_most(
            "consecutive chain radius ratio, max",
            worst_ratio,
            7.0,
        ))
        .certify(Certificate::above(
            "smallest new corner angle (exempt angle excluded)",
            r.min_new_angle,
            ALPHA0,
        ))
        .certify(Certificate::at_most(
            "validation violations",
            refined.validate().len() as f64,
            0.0,
        ));
    if let Some(t) = a.target {
        report.certify(Certificate::below(
            "last two chain weights, sum",
            r.final_weight_sum,
            t,
        ));
    }
    if let Some(path) = &a.out {
        let mut bytes = Vec::new();
        refined.save(&mut bytes)?;
        write_file(path, &bytes)?;
    }
    Ok(report)
}

fn cmd_harmonic_check(a: &HarmonicArgs, seed: u64) -> Result<RunReport> {
    if !(a.alpha > 0.0 && a.alpha < PI) {
        return Err(usage("--alpha must lie in (0, π)"));
    }
    let mut report = RunReport::new("harmonic-check");
    report
        .input("trials", a.trials)
        .input("terms", a.terms)
        .input("polygons", a.polygons)
        .input("alpha", a.alpha)
        .input("seed", seed);
    // Disc: small damping rates push the ratio toward its supremum.
    let mut sup: f64 = 0.0;
    for i in 0..a.trials {
        let mut rng = sample_rng(seed, i);
        let rate = rng.gen_range(0.001..1.0);
        let f = FourierHarmonic::random(&mut rng, a.terms, rate);
        sup = sup.max(disc_integral_ratio(&f).ratio());
    }
    report.result("disc_ratio_sup", sup);
    if a.trials > 0 {
        report
            .certify(Certificate::at_most(
                "disc ratio, max over trials",
                sup,
                DISC_CONSTANT,
            ))
            .certify(Certificate::above(
                "disc ratio, max over trials (sharpness)",
                sup,
                1.9,
            ));
    }
    let mut worst: f64 = 0.0;
    for i in 0..a.polygons {
        let mut rng = sample_rng(seed ^ 0x9e37_79b9, i);
        let p = TangentialPolygon::random_nice(&mut rng, a.alpha);
        let rate = rng.gen_range(0.1..1.0);
        let f = FourierHarmonic::random(&mut rng, a.terms, rate)
            .shifted(p.incenter, 2.0 * p.inradius / (a.alpha / 2.0).sin());
        let q = polygon_integral_check(&p, &f, a.alpha).map_err(failed)?;
        worst = worst.max(q.ratio());
    }
    if a.polygons > 0 {
        report.result("polygon_ratio_max", worst);
        report.certify(Certificate::at_most(
            "polygon lhs/(C₁ rhs), max (quadrature tolerance 1e-4)",
            worst,
            1.0 + 1e-4,
        ));
    }
    let mut mismatches = 0u32;
    let mut not_nice = 0u32;
    for i in 0..a.polygons {
        let mut rng = sample_rng(seed ^ 0x7f4a_7c15, i);
        let n = rng.gen_range(3..8);
        let mut t: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        t.sort_by(f64::total_cmp);
        let Ok(p) = TangentialPolygon::new(crate::geometry::Point::zeros(), 1.0, t) else {
            continue;
        };
        let (q, depths) = nicify_polygon(&p, a.alpha).map_err(failed)?;
        for (d, beta) in depths.iter().zip(&p.angles) {
            if *d != predicted_split_depth(*beta, a.alpha) {
                mismatches += 1;
            }
        }
        if !q.is_alpha_nice(a.alpha) || !convex(&q) {
            not_nice += 1;
        }
    }
    if a.polygons > 0 {
        report
            .certify(Certificate::at_most(
                "nicify split depth mismatches",
                mismatches as f64,
                0.0,
            ))
            .certify(Certificate::at_most(
                "nicified polygons not α-nice",
                not_nice as f64,
                0.0,
            ));
    }
    Ok(report)
}

fn convex(p: &TangentialPolygon) -> bool {
    let n = p.vertices.len();
    (0..n).all(|i| {
        let (a, b, c) = (
            p.vertices[i],
            p.vertices[(i + 1) % n],
            p.vertices[(i + 2) % n],
        );
        cross2(&(b - a), &(c - b)) > 0.0
    })
}

fn cmd_render(file: &Path, out: &Path, dual: bool) -> Result<RunReport> {
    let p = read_planar(file)?;
    write_file(out, packing_svg(&p, dual).as_bytes())?;
    let mut report = RunReport::new("render");
    report
        .input("file", file.display().to_string())
        .input("out", out.display().to_string())
        .input("dual", dual)
        .result("circles", p.len());
    Ok(report)
}
