//! Command-line front end: loads network, aggregation, and corridor files,
//! runs the regional transfer-capacity computations, and writes JSON set
//! files plus 2D SVG overlays.
//!
//! Units: files store MW throughout; terminal input and output use GW with
//! three decimals. Exit codes: 0 success, 2 unreadable or invalid input,
//! 3 empty or degenerate feasible sets, 4 work caps (elimination rows,
//! solver iterations; `GRIDHULL_ROW_CAP` raises the elimination cap).
//! `check` additionally exits 10 (feasible but not strongly) and 11
//! (infeasible).

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridhull::capacity::{
    capacity_account, check_feasible, ntc_direction_search, ntc_line_scaling, ntc_max_scaling,
    strong_feasible_set, verify_ntc, CapError, CapacityAccount, LineFlowOracle, NtcSpec,
};
use gridhull::casefmt::{
    parse_aggregation, parse_matpower, parse_network_json, parse_ntc_spec, parse_polytope_json,
    write_polytope_json, FmtError, SetFile,
};
use gridhull::lpsolve::LpError;
use gridhull::netmodel::{generator_polyhedron, line_polyhedron, NetError, NetworkModel};
use gridhull::polytope::{intersect, is_empty, vertices_2d, PolyError, Polyhedron};
use gridhull::project::{
    image_approx_oracle, image_approx_seeded, image_exact, linear_image_exact, AggregationMap,
    ApproxSet, ProjError,
};
use gridhull::setdiff::SetDiffError;
use nalgebra::DMatrix;
use nalgebra::DVector;
use thiserror::Error;

const MW_PER_GW: f64 = 1000.0;
/// Largest network projected exactly when `--method` is not given.
const EXACT_BUS_DEFAULT: usize = 12;

// ---------------------------------------------------------------------------
// Failure classification and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
enum Failure {
    /// Unreadable files, malformed data, bad flags — exit 2.
    #[error("{0}")]
    Input(String),
    /// Empty or degenerate feasible sets — exit 3.
    #[error("{0}")]
    Geometry(String),
    /// Row caps, iteration caps, numerical breakdown — exit 4.
    #[error("{0}")]
    Resource(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Geometry(_) => 3,
            Failure::Resource(_) => 4,
        }
    }
}

impl From<FmtError> for Failure {
    fn from(e: FmtError) -> Self {
        match e {
            FmtError::Proj(p) => p.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<NetError> for Failure {
    fn from(e: NetError) -> Self {
        match e {
            NetError::Singular(_) => Failure::Resource(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<LpError> for Failure {
    fn from(e: LpError) -> Self {
        match e {
            LpError::IterationLimit(_) | LpError::Numerical(_) => {
                Failure::Resource(e.to_string())
            }
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<PolyError> for Failure {
    fn from(e: PolyError) -> Self {
        match e {
            PolyError::Empty | PolyError::Unbounded(_) => Failure::Geometry(e.to_string()),
            PolyError::Lp(l) => l.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<ProjError> for Failure {
    fn from(e: ProjError) -> Self {
        match e {
            ProjError::RowCap { .. } => Failure::Resource(e.to_string()),
            ProjError::EmptySet | ProjError::Unbounded(_) => Failure::Geometry(e.to_string()),
            ProjError::Poly(p) => p.into(),
            ProjError::Lp(l) => l.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<SetDiffError> for Failure {
    fn from(e: SetDiffError) -> Self {
        match e {
            SetDiffError::Unbounded(_) => Failure::Geometry(e.to_string()),
            SetDiffError::Poly(p) => p.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<CapError> for Failure {
    fn from(e: CapError) -> Self {
        match e {
            CapError::Unprotectable(_) => Failure::Geometry(e.to_string()),
            CapError::Net(n) => n.into(),
            CapError::Poly(p) => p.into(),
            CapError::Proj(p) => p.into(),
            CapError::Diff(d) => d.into(),
            CapError::Lp(l) => l.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "gridhull",
    version,
    about = "Regional transfer-capacity sets from DC network models",
    after_help = "Exit codes: 0 ok; 2 bad input; 3 empty/degenerate set; 4 work cap hit.\n\
                  `check` exits 10 when feasible but not strongly, 11 when infeasible."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project the generator-only and jointly feasible dispatch sets onto
    /// regions; writes PGt.json and PLt.json.
    Project(ProjectArgs),
    /// Scale corridor bounds to the largest jointly safe multiple, search
    /// directions, or verify given bounds; writes ntc_result.json.
    Ntc(NtcArgs),
    /// Compute the strongly feasible exchange set (a union of polytopes);
    /// writes pft.json.
    Strong(StrongArgs),
    /// Classify one regional exchange vector (GW, comma-separated).
    Check(CheckArgs),
    /// Net out capacity accounting quantities and print ntc/atc.
    Account(AccountArgs),
    /// Render polytope JSON files as one layered SVG over two region axes.
    Plot(PlotArgs),
}

#[derive(Args)]
struct NetArg {
    /// Network file: JSON or MATPOWER-style `.m` text (auto-detected).
    #[arg(long, value_name = "FILE")]
    net: PathBuf,
}

#[derive(Args)]
struct AggArg {
    /// Region aggregation JSON: {"regions": {"name": [bus ids], ...}}.
    #[arg(long, value_name = "FILE")]
    agg: PathBuf,
}

#[derive(Args)]
struct OutArg {
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    /// Seed for sampled directions and searches.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Direction budget for sampled projections (≥ 1).
    #[arg(long, default_value_t = 64)]
    budget: usize,
    /// Target sandwich gap for sampled projections, MW (> 0).
    #[arg(long, value_name = "MW", default_value_t = 1.0)]
    tol_mw: f64,
}

impl SampleArgs {
    fn validate(&self) -> Result<(), Failure> {
        if self.budget < 1 {
            return Err(Failure::Input("--budget must be at least 1".into()));
        }
        if !(self.tol_mw > 0.0) {
            return Err(Failure::Input("--tol-mw must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Elimination-based projection with every facet.
    Exact,
    /// Support-sampled inner/outer sandwich.
    Approx,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    net: NetArg,
    #[command(flatten)]
    agg: AggArg,
    #[command(flatten)]
    out: OutArg,
    #[command(flatten)]
    sample: SampleArgs,
    /// Projection method; defaults to exact up to 12 buses, approx above.
    #[arg(long, value_enum)]
    method: Option<Method>,
}

#[derive(Args)]
struct NtcArgs {
    #[command(flatten)]
    net: NetArg,
    #[command(flatten)]
    out: OutArg,
    /// Corridor specification JSON.
    #[arg(long, value_name = "FILE")]
    ntc: PathBuf,
    /// Override the spec's objective weights (comma-separated, one per
    /// corridor).
    #[arg(long, value_name = "W,W,...", allow_hyphen_values = true)]
    weights: Option<String>,
    /// Sample N random nonnegative directions and keep the best verified
    /// bounds instead of scaling the spec's nominal direction.
    #[arg(long, value_name = "N", conflicts_with = "verify")]
    search: Option<usize>,
    /// Verify the bounds already present in the spec instead of computing
    /// new ones.
    #[arg(long)]
    verify: bool,
    /// Seed for --search.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct StrongArgs {
    #[command(flatten)]
    net: NetArg,
    #[command(flatten)]
    agg: AggArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    net: NetArg,
    #[command(flatten)]
    agg: AggArg,
    /// Regional exchanges in GW, comma-separated in region declaration
    /// order; must sum to zero.
    #[arg(value_name = "GW,GW,...", allow_hyphen_values = true)]
    y: String,
}

#[derive(Args)]
struct AccountArgs {
    /// Total transfer capacity, GW.
    #[arg(long, value_name = "GW", allow_hyphen_values = true)]
    ttc: f64,
    /// Transmission reliability margin, GW.
    #[arg(long, value_name = "GW", default_value_t = 0.0, allow_hyphen_values = true)]
    trm: f64,
    /// Long-term allocated capacity, GW.
    #[arg(long, value_name = "GW", default_value_t = 0.0, allow_hyphen_values = true)]
    ltc: f64,
    /// Already-allocated capacity, GW.
    #[arg(long, value_name = "GW", default_value_t = 0.0, allow_hyphen_values = true)]
    aac: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// Set files (polyhedron, union, or approximation JSON), drawn bottom
    /// to top in the order given.
    #[arg(value_name = "SET_FILE", required = true)]
    sets: Vec<PathBuf>,
    #[command(flatten)]
    net: NetArg,
    #[command(flatten)]
    agg: AggArg,
    /// Two region names giving the x and y axes.
    #[arg(long, value_name = "NAME,NAME")]
    axes: String,
    /// Output SVG path.
    #[arg(long, value_name = "FILE", default_value = "plot.svg")]
    out: PathBuf,
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Project(args) => cmd_project(args),
        Command::Ntc(args) => cmd_ntc(args),
        Command::Strong(args) => cmd_strong(args),
        Command::Check(args) => cmd_check(args),
        Command::Account(args) => cmd_account(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

// ---------------------------------------------------------------------------
// Shared loading and formatting helpers
// ---------------------------------------------------------------------------

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_net(path: &Path) -> Result<NetworkModel, Failure> {
    let text = read_text(path)?;
    let net = if text.trim_start().starts_with('{') {
        parse_network_json(&text)?
    } else {
        parse_matpower(&text)?
    };
    Ok(net)
}

fn load_agg(path: &Path, net: &NetworkModel) -> Result<AggregationMap, Failure> {
    Ok(parse_aggregation(&read_text(path)?, net)?)
}

fn load_ntc(path: &Path) -> Result<NtcSpec, Failure> {
    Ok(parse_ntc_spec(&read_text(path)?)?)
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// MW quantity for the terminal: GW with three decimals.
fn gw(mw: f64) -> String {
    if mw.is_finite() {
        format!("{:.3}", mw / MW_PER_GW)
    } else {
        "unbounded".into()
    }
}

fn parse_gw_list(text: &str, expected: usize, what: &str) -> Result<DVector<f64>, Failure> {
    let vals: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| Failure::Input(format!("{what}: {e} in '{text}'")))?;
    if vals.len() != expected {
        return Err(Failure::Input(format!(
            "{what}: got {} values, expected {expected}",
            vals.len()
        )));
    }
    Ok(DVector::from_vec(vals))
}

// ---------------------------------------------------------------------------
// project
// ---------------------------------------------------------------------------

fn cmd_project(args: ProjectArgs) -> Result<ExitCode, Failure> {
    args.sample.validate()?;
    let net = load_net(&args.net.net)?;
    let agg = load_agg(&args.agg.agg, &net)?;
    ensure_dir(&args.out.out)?;
    let method = args.method.unwrap_or(if net.n_bus() <= EXACT_BUS_DEFAULT {
        Method::Exact
    } else {
        Method::Approx
    });

    let pg = generator_polyhedron(&net);
    match method {
        Method::Exact => {
            let pgt = image_exact(&pg, &agg)?;
            if is_empty(&pgt)? {
                return Err(Failure::Geometry(
                    "generator set is empty: generation cannot balance demand".into(),
                ));
            }
            let joint = intersect(&pg, &line_polyhedron(&net)?)?;
            let plt = image_exact(&joint, &agg)?;
            if is_empty(&plt)? {
                return Err(Failure::Geometry(
                    "jointly feasible set is empty: no admissible dispatch respects every line limit"
                        .into(),
                ));
            }
            println!(
                "method exact: generator image has {} facets, joint image has {} facets",
                pgt.a.nrows(),
                plt.a.nrows()
            );
            let f1 = write_file(&args.out.out, "PGt.json", &write_polytope_json(&pgt.into()))?;
            let f2 = write_file(&args.out.out, "PLt.json", &write_polytope_json(&plt.into()))?;
            println!("wrote {} and {}", f1.display(), f2.display());
        }
        Method::Approx => {
            let s = &args.sample;
            let pgt = image_approx_seeded(&pg, &agg, s.budget, s.tol_mw, s.seed)?;
            let oracle = LineFlowOracle::new(&net)?;
            let plt = image_approx_oracle(&oracle, &agg.matrix(), s.budget, s.tol_mw, s.seed)?;
            println!(
                "method approx (budget {}, seed {}): certified gaps {} / {} GW, {} line rows cut",
                s.budget,
                s.seed,
                gw(pgt.gap),
                gw(plt.gap),
                oracle.n_cuts()
            );
            let report = serde_json::json!({
                "method": "approx",
                "seed": s.seed,
                "budget": s.budget,
                "tol_mw": s.tol_mw,
                "generator_image": approx_summary(&pgt),
                "joint_image": approx_summary(&plt),
                "line_rows_cut": oracle.n_cuts(),
            });
            let f1 = write_file(&args.out.out, "PGt.json", &write_polytope_json(&pgt.into()))?;
            let f2 = write_file(&args.out.out, "PLt.json", &write_polytope_json(&plt.into()))?;
            let f3 = write_file(
                &args.out.out,
                "projection_report.json",
                &serde_json::to_string_pretty(&report).expect("report serializes"),
            )?;
            println!("wrote {}, {}, {}", f1.display(), f2.display(), f3.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn approx_summary(a: &ApproxSet) -> serde_json::Value {
    serde_json::json!({
        "gap_mw": a.gap,
        "inner_vertices": a.inner_vertices.len(),
        "outer_facets": a.outer.a.nrows(),
    })
}

// ---------------------------------------------------------------------------
// ntc
// ---------------------------------------------------------------------------

fn cmd_ntc(args: NtcArgs) -> Result<ExitCode, Failure> {
    let net = load_net(&args.net.net)?;
    let mut spec = load_ntc(&args.ntc)?;
    if let Some(w) = &args.weights {
        spec.weights = parse_gw_list(w, spec.corridors.len(), "--weights")?;
    }
    ensure_dir(&args.out.out)?;
    let names: Vec<&str> = spec.corridors.iter().map(|c| c.name.as_str()).collect();

    let report = if args.verify {
        let (ok, violators) = verify_ntc(&net, &spec)?;
        if ok {
            println!("bounds verified: every admissible dispatch under them is line-safe");
        } else {
            println!("bounds rejected: lines {violators:?} can exceed their limits");
        }
        serde_json::json!({
            "mode": "verify",
            "corridors": names,
            "bounds_mw": spec.bounds.as_slice(),
            "verified": ok,
            "violating_lines": violators,
        })
    } else if let Some(n) = args.search {
        if n == 0 {
            return Err(Failure::Input("--search must sample at least 1 direction".into()));
        }
        let best = ntc_direction_search(&net, &spec.corridors, n, &spec.weights, args.seed)?;
        let objective = spec.weights.dot(&best.bounds);
        println!(
            "best verified bounds over {n} sampled directions (seed {}):",
            args.seed
        );
        for (i, name) in names.iter().enumerate() {
            println!("  {name}: {} GW (direction weight {:.4})", gw(best.bounds[i]), best.nominal[i]);
        }
        println!("objective (weights · bounds): {} GW", gw(objective));
        serde_json::json!({
            "mode": "search",
            "samples": n,
            "seed": args.seed,
            "corridors": names,
            "nominal": best.nominal.as_slice(),
            "bounds_mw": best.bounds.as_slice(),
            "weights": spec.weights.as_slice(),
            "objective_mw": objective,
        })
    } else {
        let k_star = ntc_max_scaling(&net, &spec)?;
        let mut per_line = Vec::with_capacity(net.n_line());
        let mut binding = Vec::new();
        for line in 0..net.n_line() {
            let k = ntc_line_scaling(&net, &spec, line, 1.0)?
                .min(ntc_line_scaling(&net, &spec, line, -1.0)?);
            let id = net.lines[line].id;
            if k <= k_star + 1e-6 * k_star.abs().max(1.0) {
                binding.push(id);
            }
            per_line.push(serde_json::json!({ "line": id, "k_mw": k }));
        }
        let bounds = &spec.nominal * k_star;
        println!("largest safe scaling of the nominal direction: k* = {} GW", gw(k_star));
        println!("binding lines: {binding:?}");
        for (i, name) in names.iter().enumerate() {
            println!("  {name}: {} GW", gw(bounds[i]));
        }
        if net.n_line() <= 20 {
            println!("per-line scaling (GW):");
            for (line, entry) in per_line.iter().enumerate() {
                let k = entry["k_mw"].as_f64().unwrap_or(f64::INFINITY);
                let mark = if binding.contains(&net.lines[line].id) { "  *binding*" } else { "" };
                println!("  line {:>4}: {}{mark}", net.lines[line].id, gw(k));
            }
        }
        serde_json::json!({
            "mode": "scale",
            "corridors": names,
            "nominal": spec.nominal.as_slice(),
            "k_star_mw": k_star,
            "binding_lines": binding,
            "bounds_mw": bounds.as_slice(),
            "per_line": per_line,
        })
    };

    let path = write_file(
        &args.out.out,
        "ntc_result.json",
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// strong
// ---------------------------------------------------------------------------

fn cmd_strong(args: StrongArgs) -> Result<ExitCode, Failure> {
    let net = load_net(&args.net.net)?;
    let agg = load_agg(&args.agg.agg, &net)?;
    ensure_dir(&args.out.out)?;
    let pft = strong_feasible_set(&net, &agg)?;
    if pft.parts.is_empty() {
        println!("strongly feasible set is empty: every exchange leaves some admissible dispatch overloading a line");
    } else {
        println!("strongly feasible set has {} polytope parts", pft.parts.len());
    }
    let path = write_file(&args.out.out, "pft.json", &write_polytope_json(&pft.into()))?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(args: CheckArgs) -> Result<ExitCode, Failure> {
    let net = load_net(&args.net.net)?;
    let agg = load_agg(&args.agg.agg, &net)?;
    let y_gw = parse_gw_list(&args.y, agg.n_regions, "exchange vector")?;
    let imbalance = y_gw.sum();
    if imbalance.abs() > 1e-9 {
        return Err(Failure::Input(format!(
            "exchanges must sum to zero, got {imbalance:+.6} GW"
        )));
    }
    let y = &y_gw * MW_PER_GW;
    let report = check_feasible(&net, &agg, &y)?;
    for (i, name) in agg.region_names.iter().enumerate() {
        println!("  {name}: {} GW", gw(y[i]));
    }
    if !report.feasible {
        println!("infeasible: no admissible dispatch realizes these exchanges");
        return Ok(ExitCode::from(11));
    }
    if report.strongly_feasible {
        println!("strongly feasible: every admissible dispatch realizing them is line-safe");
        return Ok(ExitCode::SUCCESS);
    }
    if let Some((id, reach, limit)) = report.worst_line {
        println!(
            "feasible but not strongly: line {id} can be driven to {} GW against its {} GW limit",
            gw(reach),
            gw(limit)
        );
    } else {
        println!("feasible but not strongly: some admissible dispatch overloads a line");
    }
    Ok(ExitCode::from(10))
}

// ---------------------------------------------------------------------------
// account
// ---------------------------------------------------------------------------

fn cmd_account(args: AccountArgs) -> Result<ExitCode, Failure> {
    let (ntc, atc, clamped) = capacity_account(&CapacityAccount {
        ttc: args.ttc,
        trm: args.trm,
        ltc: args.ltc,
        aac: args.aac,
    })?;
    let note = if clamped { " (clamped at zero)" } else { "" };
    println!("ntc = {ntc:.3} GW{note}");
    println!("atc = {atc:.3} GW{note}");
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

fn cmd_plot(args: PlotArgs) -> Result<ExitCode, Failure> {
    let net = load_net(&args.net.net)?;
    let agg = load_agg(&args.agg.agg, &net)?;
    let (ix, iy) = parse_axes(&args.axes, &agg)?;

    let mut layers = Vec::new();
    for path in &args.sets {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let set = parse_polytope_json(&read_text(path)?)?;
        layers.push(build_layer(stem, &set, ix, iy, agg.n_regions)?);
    }

    let text = svg::render(
        &format!("{} (GW)", agg.region_names[ix]),
        &format!("{} (GW)", agg.region_names[iy]),
        &layers,
    );
    fs::write(&args.out, &text)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.out.display())))?;
    let shapes: usize = layers.iter().map(|l| l.polygons.len()).sum();
    println!(
        "wrote {} ({} layers, {} shapes, axes {} × {})",
        args.out.display(),
        layers.len(),
        shapes,
        agg.region_names[ix],
        agg.region_names[iy]
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_axes(axes: &str, agg: &AggregationMap) -> Result<(usize, usize), Failure> {
    let names: Vec<&str> = axes.split(',').map(str::trim).collect();
    if names.len() != 2 {
        return Err(Failure::Input(format!(
            "--axes needs exactly two region names, got '{axes}'"
        )));
    }
    let index_of = |name: &str| {
        agg.region_names.iter().position(|n| n == name).ok_or_else(|| {
            Failure::Input(format!(
                "unknown region '{name}'; this aggregation has: {}",
                agg.region_names.join(", ")
            ))
        })
    };
    let (ix, iy) = (index_of(names[0])?, index_of(names[1])?);
    if ix == iy {
        return Err(Failure::Input("--axes must name two different regions".into()));
    }
    Ok((ix, iy))
}

fn build_layer(
    label: String,
    set: &SetFile,
    ix: usize,
    iy: usize,
    n_regions: usize,
) -> Result<svg::Layer, Failure> {
    let mut polygons = Vec::new();
    let mut empty = false;
    match set {
        SetFile::Polyhedron(p) => match project_ring(p, ix, iy, n_regions)? {
            Some(ring) => polygons.push(svg::Polygon { points: ring, faint: false }),
            None => empty = true,
        },
        SetFile::Union(u) => {
            empty = u.parts.is_empty();
            for part in &u.parts {
                if let Some(ring) = project_ring(part, ix, iy, n_regions)? {
                    polygons.push(svg::Polygon { points: ring, faint: false });
                }
            }
        }
        SetFile::Approx(a) => {
            if let Some(ring) = project_ring(&a.outer, ix, iy, n_regions)? {
                polygons.push(svg::Polygon { points: ring, faint: true });
            }
            if let Some(hull) = &a.inner_hull {
                if let Some(ring) = project_ring(hull, ix, iy, n_regions)? {
                    polygons.push(svg::Polygon { points: ring, faint: false });
                }
            } else {
                let pts: Vec<(f64, f64)> = a
                    .inner_vertices
                    .iter()
                    .map(|v| (v[ix] / MW_PER_GW, v[iy] / MW_PER_GW))
                    .collect();
                let hull = hull_2d(pts);
                if !hull.is_empty() {
                    polygons.push(svg::Polygon { points: hull, faint: false });
                }
            }
            empty = polygons.is_empty();
        }
    }
    let label = if empty { format!("{label} (empty)") } else { label };
    Ok(svg::Layer { label, polygons })
}

/// Project one polyhedron onto the two chosen axes and return its vertex
/// ring in GW; `None` when the set is empty.
fn project_ring(
    p: &Polyhedron,
    ix: usize,
    iy: usize,
    n_regions: usize,
) -> Result<Option<Vec<(f64, f64)>>, Failure> {
    let flat = if p.dim == n_regions {
        let mut t = DMatrix::zeros(2, n_regions);
        t[(0, ix)] = 1.0;
        t[(1, iy)] = 1.0;
        match linear_image_exact(p, &t) {
            Ok(q) => q,
            Err(ProjError::EmptySet) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    } else if p.dim == 2 {
        p.clone()
    } else {
        return Err(Failure::Input(format!(
            "set has dimension {}, but the aggregation has {n_regions} regions; \
             plot takes sets in region space (picking two axes) or already-2D sets",
            p.dim
        )));
    };
    match vertices_2d(&flat) {
        Ok(verts) => Ok(Some(
            verts.iter().map(|v| (v[0] / MW_PER_GW, v[1] / MW_PER_GW)).collect(),
        )),
        Err(PolyError::Empty) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Convex hull of a 2D point cloud (monotone chain), counterclockwise.
fn hull_2d(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_point() {
        let hull = hull_2d(vec![
            (0.0, 0.0),
            (1.0, 0.0),
            (0.5, 0.5),
            (1.0, 1.0),
            (0.0, 1.0),
        ]);
        assert_eq!(hull.len(), 4);
        assert!(!hull.contains(&(0.5, 0.5)));
    }

    #[test]
    fn gw_formatting() {
        assert_eq!(gw(3914.2857), "3.914");
        assert_eq!(gw(-250.0), "-0.250");
        assert_eq!(gw(f64::INFINITY), "unbounded");
    }

    #[test]
    fn gw_list_parsing() {
        let v = parse_gw_list(" 4.25, -0.25 , -4 ", 3, "test").unwrap();
        assert_eq!(v.as_slice(), [4.25, -0.25, -4.0]);
        assert!(parse_gw_list("1,2", 3, "test").is_err());
        assert!(parse_gw_list("1,zwei,3", 3, "test").is_err());
    }
}
