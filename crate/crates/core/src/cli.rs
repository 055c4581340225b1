//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::blaschke::{build_slow_blaschke, DEFAULT_DEPTH};
use crate::carleson::build_pullback;
use crate::compactness::{diagnostic_report, ReportConfig};
use crate::error::{Error, Result};
use crate::harmonic::{
    bracket_midpoints, calibrate_chain, delta_max, exit_sample, omega, omega_n, rho_bound_report,
    Barrier, BarrierRun, EpsScheme, PlanarDomain, WalkConfig, DEFAULT_Y_CAP,
};
use crate::io::{load_spec, parse_complex, parse_h_grid, parse_range, sha256_hex, to_json, Csv, Field};
use crate::nevanlinna::{counting_function, luecking_integral};
use crate::orlicz::{delta_from_psi, OrliczFunction, PsiSpec};
use crate::selftest::run_with_determinism;
use crate::symbols::{SymbolMap, SymbolSpec, DEFAULT_EPS};

#[derive(Debug, Parser)]
#[command(name = "compop", version, about = "Numerical diagnostics for composition operators")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Build a slow Blaschke product for a decay rate derived from Psi
    BuildBlaschke(BuildBlaschkeArgs),
    /// Carleson function rho(h) of the pullback measure
    Rho(RhoArgs),
    /// Dyadic Luecking sums
    Luecking(LueckingArgs),
    /// Luecking integrals of the counting function
    LueckingA(LueckingAArgs),
    /// Nevanlinna counting function at given points
    Nevanlinna(NevanlinnaArgs),
    /// Closed-range test for the pullback measure
    ClosedRange(ClosedRangeArgs),
    /// Harmonic measure by Brownian exit simulation
    Harmonic(HarmonicArgs),
    /// Calibrate the barrier holes
    Calibrate(CalibrateArgs),
    /// Carleson-function bounds from calibrated barriers
    RhoBound(RhoBoundArgs),
    /// Full compactness and Schatten diagnostic report
    Report(ReportArgs),
    /// Run the acceptance suite
    Selftest(SelftestArgs),
}

#[derive(Debug, Args, Serialize)]
struct Common {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output JSON path; tables go next to it as CSV. Prints to stdout when
    /// absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BuildBlaschkeArgs {
    /// Psi spec, inline JSON or a path
    #[arg(long)]
    psi: String,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct SymbolArgs {
    /// Symbol spec, inline JSON or a path
    #[arg(long)]
    symbol: String,
    #[arg(long, default_value_t = 1 << 14, value_parser = parse_count)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
}

#[derive(Debug, Args, Serialize)]
struct GridArgs {
    /// Window sizes; repeatable
    #[arg(long = "h")]
    h: Vec<f64>,
    /// `geometric:start:ratio:count` or a comma-separated list
    #[arg(long)]
    h_grid: Option<String>,
}

impl GridArgs {
    fn resolve(&self, default: Option<&str>) -> Result<Vec<f64>> {
        let mut hs = self.h.clone();
        if let Some(g) = self.h_grid.as_deref().or(if hs.is_empty() { default } else { None }) {
            hs.extend(parse_h_grid(g)?);
        }
        if hs.is_empty() {
            return Err(Error::Config("no window sizes given (--h or --h-grid)".into()));
        }
        Ok(hs)
    }
}

#[derive(Debug, Args, Serialize)]
struct RhoArgs {
    #[command(flatten)]
    symbol: SymbolArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct LueckingArgs {
    #[command(flatten)]
    symbol: SymbolArgs,
    /// Exponents; repeatable
    #[arg(long = "p", default_values_t = vec![2.0])]
    p: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    n_max: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct LueckingAArgs {
    #[arg(long)]
    symbol: String,
    #[arg(long = "p", default_values_t = vec![2.0])]
    p: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    depth: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct NevanlinnaArgs {
    #[arg(long)]
    symbol: String,
    /// Points such as `0.3+0.1i`; repeatable
    #[arg(long = "w", required = true)]
    w: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct ClosedRangeArgs {
    #[command(flatten)]
    symbol: SymbolArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct WalkArgs {
    #[arg(long, default_value_t = 100_000, value_parser = parse_count)]
    paths: usize,
    #[arg(long, default_value_t = crate::harmonic::walk::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct HarmonicArgs {
    /// disk, half-plane, strip, regionR, omega_n or omega
    #[arg(long)]
    domain: String,
    /// Barrier index for omega_n, barrier count for omega
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Hole half-widths as a fraction of the admissible maximum
    #[arg(long, default_value_t = 0.99)]
    hole_fraction: f64,
    /// Calibrated barriers (output of `calibrate`) instead of fixed holes
    #[arg(long)]
    barriers: Option<PathBuf>,
    #[arg(long)]
    a: String,
    #[command(flatten)]
    walk: WalkArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct CalibrateArgs {
    /// `1..N`; the chain is always calibrated from index 1
    #[arg(long, default_value = "1..8")]
    n: String,
    /// exp, psi or const
    #[arg(long)]
    eps_scheme: Option<String>,
    /// Target for the const scheme
    #[arg(long)]
    eps: Option<f64>,
    /// Psi spec for the psi scheme
    #[arg(long)]
    psi: Option<String>,
    #[arg(long, default_value = "0.5+3.0i")]
    a: String,
    #[command(flatten)]
    walk: WalkArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct RhoBoundArgs {
    /// Output of `calibrate`
    #[arg(long)]
    barriers: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    psi: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    #[arg(long)]
    symbol: String,
    #[arg(long)]
    psi: String,
    #[arg(long, default_value = "geometric:0.25:2:12")]
    h_grid: String,
    #[arg(long, default_value_t = 1 << 17, value_parser = parse_count)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct SelftestArgs {
    #[command(flatten)]
    common: Common,
}

/// Accepts `100000` as well as `1e5`.
fn parse_count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e15 => Ok(v as usize),
        _ => Err(format!("`{s}` is not a nonnegative integer")),
    }
}

fn load_symbol(text: &str) -> Result<SymbolMap> {
    let (spec, base): (SymbolSpec, _) = load_spec(text)?;
    SymbolMap::from_spec(&spec, base.as_deref())
}

fn load_psi(text: &str) -> Result<OrliczFunction> {
    let (spec, _): (PsiSpec, _) = load_spec(text)?;
    OrliczFunction::from_spec(&spec)
}

fn load_run(path: &Path) -> Result<BarrierRun> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Artifacts of one run.
struct Outputs {
    json: String,
    extra: Vec<(&'static str, String)>,
    status: i32,
}

impl Outputs {
    fn json<T: Serialize>(v: &T) -> Result<Self> {
        Ok(Outputs {
            json: to_json(v)?,
            extra: Vec::new(),
            status: 0,
        })
    }

    fn with(mut self, suffix: &'static str, body: String) -> Self {
        self.extra.push((suffix, body));
        self
    }
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: &'a serde_json::Value,
    config_sha256: String,
    seed: u64,
    workers: Option<usize>,
    wall_time_seconds: f64,
    outputs: Vec<ManifestEntry>,
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.with_extension("");
    PathBuf::from(format!("{}{suffix}", stem.display()))
}

fn write(path: &Path, body: &str) -> Result<ManifestEntry> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, body)?;
    Ok(ManifestEntry {
        path: path.display().to_string(),
        sha256: sha256_hex(body.as_bytes()),
        bytes: body.len() as u64,
    })
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::BuildBlaschke(a) => &a.common,
            Command::Rho(a) => &a.common,
            Command::Luecking(a) => &a.common,
            Command::LueckingA(a) => &a.common,
            Command::Nevanlinna(a) => &a.common,
            Command::ClosedRange(a) => &a.common,
            Command::Harmonic(a) => &a.common,
            Command::Calibrate(a) => &a.common,
            Command::RhoBound(a) => &a.common,
            Command::Report(a) => &a.common,
            Command::Selftest(a) => &a.common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::BuildBlaschke(_) => "build-blaschke",
            Command::Rho(_) => "rho",
            Command::Luecking(_) => "luecking",
            Command::LueckingA(_) => "luecking-a",
            Command::Nevanlinna(_) => "nevanlinna",
            Command::ClosedRange(_) => "closed-range",
            Command::Harmonic(_) => "harmonic",
            Command::Calibrate(_) => "calibrate",
            Command::RhoBound(_) => "rho-bound",
            Command::Report(_) => "report",
            Command::Selftest(_) => "selftest",
        }
    }
}

fn run(cmd: &Command) -> Result<Outputs> {
    match cmd {
        Command::BuildBlaschke(a) => {
            let psi = load_psi(&a.psi)?;
            let spec = build_slow_blaschke(&delta_from_psi(&psi), a.depth)?;
            let invariants = spec.check_invariants()?;
            #[derive(Serialize)]
            struct Check {
                invariants: crate::blaschke::SpecInvariants,
                all: bool,
                certified_floor: f64,
            }
            let check = Check {
                all: invariants.all(),
                invariants,
                certified_floor: spec.certified_floor(),
            };
            Ok(Outputs::json(&spec.to_file())?.with(".invariants.json", to_json(&check)?))
        }
        Command::Rho(a) => {
            let phi = load_symbol(&a.symbol.symbol)?;
            let hs = a.grid.resolve(None)?;
            let sample = build_pullback(&phi, a.symbol.samples, a.symbol.eps)?;
            let rows = sample.rho_table(&hs)?;
            let mut csv = Csv::new(&["h", "rho", "stderr", "centers", "argmax_center"]);
            for r in &rows {
                csv.row(&[Field::F(r.h), Field::F(r.rho), Field::F(r.stderr), Field::U(r.centers as u64), Field::F(r.argmax_center)]);
            }
            #[derive(Serialize)]
            struct Out<'a> {
                symbol: &'a str,
                samples: usize,
                unconverged_fraction: f64,
                rows: &'a [crate::carleson::RhoEstimate],
            }
            let out = Out {
                symbol: phi.id(),
                samples: sample.len(),
                unconverged_fraction: sample.unconverged_fraction(),
                rows: &rows,
            };
            Ok(Outputs::json(&out)?.with(".csv", csv.finish()))
        }
        Command::Luecking(a) => {
            let phi = load_symbol(&a.symbol.symbol)?;
            let sample = build_pullback(&phi, a.symbol.samples, a.symbol.eps)?;
            let sums = a
                .p
                .iter()
                .map(|&p| sample.luecking_sum(p, a.n_max))
                .collect::<Result<Vec<_>>>()?;
            let mut csv = Csv::new(&["p", "n", "partial_sum"]);
            for s in &sums {
                for (k, v) in s.partial.iter().enumerate() {
                    csv.row(&[Field::F(s.p), Field::U(k as u64 + 1), Field::F(*v)]);
                }
            }
            Ok(Outputs::json(&sums)?.with(".csv", csv.finish()))
        }
        Command::LueckingA(a) => {
            let phi = load_symbol(&a.symbol)?;
            let ints = a
                .p
                .iter()
                .map(|&p| luecking_integral(&phi, p, a.depth))
                .collect::<Result<Vec<_>>>()?;
            let mut csv = Csv::new(&["p", "k", "ratio_form", "proof_form"]);
            for li in &ints {
                for (i, k) in li.k.iter().enumerate() {
                    csv.row(&[Field::F(li.p), Field::U(*k as u64), Field::F(li.ratio_form[i]), Field::F(li.proof_form[i])]);
                }
            }
            Ok(Outputs::json(&ints)?.with(".csv", csv.finish()))
        }
        Command::Nevanlinna(a) => {
            let phi = load_symbol(&a.symbol)?;
            let evals = a
                .w
                .iter()
                .map(|w| counting_function(&phi, parse_complex(w)?))
                .collect::<Result<Vec<_>>>()?;
            Ok(Outputs::json(&evals)?)
        }
        Command::ClosedRange(a) => {
            let phi = load_symbol(&a.symbol.symbol)?;
            let hs = a.grid.resolve(Some("0.2,0.1,0.05,0.025"))?;
            let sample = build_pullback(&phi, a.symbol.samples, a.symbol.eps)?;
            let res = sample.closed_range_test(&hs, None)?;
            let mut csv = Csv::new(&["h", "min_measure", "ratio", "stderr_over_h", "argmin_center"]);
            for r in &res.rows {
                csv.row(&[Field::F(r.h), Field::F(r.min_measure), Field::F(r.ratio), Field::F(r.stderr_over_h), Field::F(r.argmin_center)]);
            }
            Ok(Outputs::json(&res)?.with(".csv", csv.finish()))
        }
        Command::Harmonic(a) => harmonic(a),
        Command::Calibrate(a) => {
            let (lo, hi) = parse_range(&a.n)?;
            if lo != 1 {
                return Err(Error::Config("calibration starts at index 1".into()));
            }
            let scheme = match (a.eps_scheme.as_deref(), a.eps, a.psi.as_deref()) {
                (Some("exp"), None, None) => EpsScheme::Exp,
                (Some("const") | None, Some(e), None) => EpsScheme::Const(e),
                (Some("psi"), None, Some(p)) => EpsScheme::Psi(load_psi(p)?),
                (None, None, None) => EpsScheme::Exp,
                (s, e, p) => {
                    return Err(Error::Config(format!(
                        "inconsistent scheme options: scheme {s:?}, eps {e:?}, psi {p:?}"
                    )))
                }
            };
            let cfg = WalkConfig {
                paths: a.walk.paths,
                seed: a.common.seed,
                tol: a.walk.tol,
                ..WalkConfig::default()
            };
            let run = calibrate_chain(hi, &scheme, parse_complex(&a.a)?, &cfg)?;
            let mut csv = Csv::new(&["n", "eps", "delta", "delta_max", "estimate", "upper"]);
            for c in &run.calibrations {
                csv.row(&[Field::U(c.n as u64), Field::F(c.eps), Field::F(c.delta), Field::F(c.delta_max), Field::F(c.estimate), Field::F(c.upper)]);
            }
            Ok(Outputs::json(&run)?.with(".csv", csv.finish()))
        }
        Command::RhoBound(a) => {
            let run = load_run(&a.barriers)?;
            let hs = if a.grid.h.is_empty() && a.grid.h_grid.is_none() {
                bracket_midpoints(run.calibrations.len() as u32)
            } else {
                a.grid.resolve(None)?
            };
            let psi = a.psi.as_deref().map(load_psi).transpose()?;
            let rep = rho_bound_report(&run, &hs, psi.as_ref())?;
            let mut csv = Csv::new(&["h", "n", "bound", "measured_upper", "delta_bound"]);
            for r in &rep.rows {
                csv.row(&[Field::F(r.h), Field::U(r.n as u64), Field::F(r.bound), Field::F(r.measured_upper), Field::F(r.delta_bound.unwrap_or(f64::NAN))]);
            }
            Ok(Outputs::json(&rep)?.with(".csv", csv.finish()))
        }
        Command::Report(a) => {
            let phi = load_symbol(&a.symbol)?;
            let psi = load_psi(&a.psi)?;
            let hs = parse_h_grid(&a.h_grid)?;
            let cfg = ReportConfig {
                samples: a.samples,
                eps: a.eps,
                ..ReportConfig::default()
            };
            let rep = diagnostic_report(&phi, &psi, &hs, &cfg)?;
            let mut csv = Csv::new(&["h", "rho", "rho_stderr", "delta"]);
            for r in &rep.table {
                csv.row(&[Field::F(r.h), Field::F(r.rho), Field::F(r.rho_stderr), Field::F(r.delta)]);
            }
            eprintln!("{}: {} ({})", rep.symbol, rep.summary, rep.banner);
            Ok(Outputs::json(&rep)?.with(".csv", csv.finish()))
        }
        Command::Selftest(a) => {
            let rep = run_with_determinism(a.common.seed)?;
            for c in &rep.criteria {
                let tag = match (c.pass, c.attainable) {
                    (true, _) => "pass",
                    (false, true) => "FAIL",
                    (false, false) => "FAIL (unattainable as stated)",
                };
                eprintln!("[{:>2}] {tag}: {} - {}", c.id, c.name, c.detail);
            }
            let mut out = Outputs::json(&rep)?;
            out.status = if rep.pass { 0 } else { 1 };
            Ok(out)
        }
    }
}

fn harmonic(a: &HarmonicArgs) -> Result<Outputs> {
    let start = parse_complex(&a.a)?;
    let fixed = |count: u32| -> Result<Vec<Barrier>> {
        if !(a.hole_fraction > 0.0 && a.hole_fraction < 1.0) {
            return Err(Error::Config("--hole-fraction must lie in (0, 1)".into()));
        }
        (1..=count).map(|j| Barrier::new(j, a.hole_fraction * delta_max(j))).collect()
    };
    let barriers = |count: u32| -> Result<Vec<Barrier>> {
        match &a.barriers {
            Some(p) => {
                let run = load_run(p)?;
                if run.barriers.len() < count as usize {
                    return Err(Error::Config(format!("{} holds fewer than {count} barriers", p.display())));
                }
                Ok(run.barriers[..count as usize].to_vec())
            }
            None => fixed(count),
        }
    };
    let domain = match a.domain.as_str() {
        "disk" => PlanarDomain::disk(),
        "half-plane" => PlanarDomain::half_plane(-1.0, 1.0, 1e6),
        "strip" => PlanarDomain::strip(1.0),
        "regionR" | "region-r" => PlanarDomain::region_r(DEFAULT_Y_CAP),
        "omega_n" | "omega-n" => {
            if a.n == 0 {
                return Err(Error::Config("--n must be at least 1".into()));
            }
            let bars = barriers(a.n - 1)?;
            let hole = match &a.barriers {
                Some(p) => load_run(p)?
                    .barriers
                    .get(a.n as usize - 1)
                    .map(|b| b.delta)
                    .unwrap_or(a.hole_fraction * delta_max(a.n)),
                None => a.hole_fraction * delta_max(a.n),
            };
            omega_n(&bars, a.n, hole)?
        }
        "omega" => omega(&barriers(a.n)?, DEFAULT_Y_CAP)?,
        other => return Err(Error::Config(format!("unknown domain `{other}`"))),
    };
    let cfg = WalkConfig {
        paths: a.walk.paths,
        seed: a.common.seed,
        tol: a.walk.tol,
        ..WalkConfig::default()
    };
    let sample = exit_sample(&domain, start, &cfg)?;
    let dist = sample.distribution(&domain);
    #[derive(Serialize)]
    struct Out<'a> {
        domain: &'a str,
        start: num_complex::Complex64,
        paths: usize,
        tol: f64,
        mean_steps: f64,
        nonterminating: usize,
        labels: &'a [crate::harmonic::MeasureEstimate],
        pieces: Vec<crate::harmonic::domain::PieceReport>,
    }
    let out = Out {
        domain: &domain.name,
        start,
        paths: cfg.paths,
        tol: cfg.tol,
        mean_steps: sample.mean_steps(),
        nonterminating: sample.nonterminating,
        labels: &dist,
        pieces: domain.describe(),
    };
    let mut csv = Csv::new(&["label", "estimate", "stderr", "hits"]);
    for m in &dist {
        csv.row(&[Field::S(&m.label), Field::F(m.estimate), Field::F(m.stderr), Field::U(m.hits as u64)]);
    }
    Ok(Outputs::json(&out)?.with(".csv", csv.finish()))
}

fn emit(cmd: &Command, outputs: Outputs, started: Instant, workers: Option<usize>) -> Result<()> {
    let common = cmd.common();
    let Some(out) = &common.out else {
        print!("{}", outputs.json);
        return Ok(());
    };
    let mut entries = vec![write(out, &outputs.json)?];
    for (suffix, body) in &outputs.extra {
        entries.push(write(&sidecar(out, suffix), body)?);
    }
    let config = serde_json::to_value(cmd)?;
    let manifest = Manifest {
        tool: "compop",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cmd.name(),
        config_sha256: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
        config: &config,
        seed: common.seed,
        workers,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: entries,
    };
    let mpath = PathBuf::from(format!("{}.manifest.json", out.display()));
    std::fs::write(&mpath, to_json(&manifest)?)?;
    Ok(())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 2;
        }
    };
    let result = pool.install(|| run(&cli.command));
    match result.and_then(|o| {
        let status = o.status;
        emit(&cli.command, o, started, cli.workers).map(|_| status)
    }) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
