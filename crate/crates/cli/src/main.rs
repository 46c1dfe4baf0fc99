//! `swg`: build sparse grids, apply quasi-interpolants, evaluate Wiener norms,
//! certify schemes and run rate experiments from the command line.

mod plot;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use sparsewiener::kernels::{certify, Verdict};
use sparsewiener::rates::Report;
use sparsewiener::{
    apply_p, builtin_scheme, wiener_norm, Anisotropy, Error, Exponent, ExperimentConfig, NormParams, SparseIndexSet,
    SpectralFunction,
};

/// Relative output paths are resolved against this directory when it is set.
const OUT_DIR_ENV: &str = "SWG_OUT_DIR";

#[derive(Parser)]
#[command(name = "swg", version, about = "Sparse-grid quasi-interpolation in weighted Wiener spaces")]
struct Cli {
    /// Worker threads for parallel sections (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized test functions; overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted Wiener norm of a function given as JSON.
    Norm(NormArgs),
    /// Apply a sparse-grid quasi-interpolant to a function given as JSON.
    Approx(ApproxArgs),
    /// Emit the members, nodes or counts of an index set as CSV.
    Grid(GridArgs),
    /// Certify the growth, boundedness and compatibility conditions of a scheme.
    CheckConditions(CheckArgs),
    /// Run rate experiments from config files, or plot a saved report.
    Rates(RatesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Iso,
    Mix,
    Hybrid,
}

#[derive(Args)]
struct NormArgs {
    #[arg(long)]
    function: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Summability exponent; `inf` for the supremum.
    #[arg(long, default_value = "2")]
    q: String,
    /// Order of the product weight (hybrid), or of the whole weight when
    /// `--gamma` is absent.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Order of the isotropic or mixed weight.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Energy-set parameters `α,β,γ,ε,σ`.
#[derive(Clone, Copy, Debug)]
struct EnergyParams([f64; 5]);

fn parse_energy(s: &str) -> Result<EnergyParams, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    let arr: [f64; 5] = parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected five values α,β,γ,ε,σ, got {}", v.len()))?;
    Ok(EnergyParams(arr))
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    scheme: String,
    /// `smolyak`, `full`, `energy`, or `T=<t>` for `Δ(n, t)`.
    #[arg(long, allow_hyphen_values = true)]
    set: String,
    /// Level `n`, or `ξ` for energy sets.
    #[arg(long)]
    n: f64,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    function: PathBuf,
    /// Energy-set parameters `α,β,γ,ε,σ`; required with `--set energy`.
    #[arg(long, value_parser = parse_energy, allow_hyphen_values = true)]
    energy: Option<EnergyParams>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Members,
    Points,
    Counts,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    n: Option<f64>,
    /// Anisotropy `T < 1`; `-inf` selects the full box.
    #[arg(long = "T", allow_hyphen_values = true, default_value = "0")]
    t: String,
    /// Build the energy set `Δ(ξ)` with parameters `α,β,γ,ε,σ` instead.
    #[arg(long, value_parser = parse_energy, allow_hyphen_values = true, requires = "xi")]
    energy: Option<EnergyParams>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, value_enum, default_value = "members")]
    emit: Emit,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = 10)]
    jmax: u32,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    /// Experiment configs; several are run concurrently.
    #[arg(long, required_unless_present = "plot", conflicts_with = "plot")]
    config: Vec<PathBuf>,
    /// Output file; `.csv` writes the per-level table, anything else JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Saved JSON report to plot.
    #[arg(long, requires = "svg")]
    plot: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

/// Rejections happen before any computation and exit with 2; failures exit
/// with 1.
#[derive(Debug)]
enum Failure {
    Rejected(String),
    Failed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Rejected(_) => 2,
            Failure::Failed(_) => 1,
        }
    }
}

fn rejected(e: impl std::fmt::Display) -> Failure {
    Failure::Rejected(e.to_string())
}

/// Errors raised while computing; parameter and hypothesis errors still mean
/// the input was unusable.
fn classify(e: Error) -> Failure {
    match e {
        Error::InvalidParameter(_)
        | Error::HypothesisViolated(_)
        | Error::UnknownScheme(_)
        | Error::DimensionMismatch { .. }
        | Error::Json(_) => Failure::Rejected(e.to_string()),
        _ => Failure::Failed(e.to_string()),
    }
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let path = resolve_out(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Failure::Failed(format!("{}: {e}", parent.display())))?;
            }
            fs::write(&path, text).map_err(|e| Failure::Failed(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Failed(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Failed(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))
}

fn read_function(path: &Path) -> Result<SpectralFunction, Failure> {
    SpectralFunction::from_json_str(&read(path)?).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))
}

fn parse_exponent(s: &str) -> Result<Exponent, Failure> {
    let v: f64 = s.trim().parse().map_err(|_| rejected(format!("`{s}` is not an exponent")))?;
    Exponent::new(v).map_err(rejected)
}

fn parse_anisotropy(s: &str) -> Result<Anisotropy, Failure> {
    let v: f64 = s.trim().parse().map_err(|_| rejected(format!("`{s}` is not a value of T")))?;
    Anisotropy::new(v).map_err(rejected)
}

fn whole_level(n: f64) -> Result<u32, Failure> {
    if n >= 0.0 && n.fract() == 0.0 && n <= f64::from(u32::MAX) {
        Ok(n as u32)
    } else {
        Err(rejected(format!("this set needs a non-negative integer level, got {n}")))
    }
}

fn build_set(set: &str, n: f64, dim: usize, energy: Option<EnergyParams>) -> Result<SparseIndexSet, Failure> {
    match set.trim() {
        "smolyak" => Ok(SparseIndexSet::smolyak(whole_level(n)?, dim)),
        "full" => Ok(SparseIndexSet::full_box(whole_level(n)?, dim)),
        "energy" => {
            let EnergyParams([a, b, g, e, s]) =
                energy.ok_or_else(|| rejected("`--set energy` needs `--energy α,β,γ,ε,σ`"))?;
            SparseIndexSet::energy(n, a, b, g, e, s, dim).map_err(classify)
        }
        other => match other.strip_prefix("T=") {
            Some(t) => SparseIndexSet::delta(n, parse_anisotropy(t)?, dim).map_err(classify),
            None => Err(rejected(format!("unknown set `{other}`; use smolyak, full, energy or T=<t>"))),
        },
    }
}

fn run_norm(args: NormArgs) -> Result<(), Failure> {
    let f = read_function(&args.function)?;
    let q = parse_exponent(&args.q)?;
    let params = match args.variant {
        VariantArg::Hybrid => {
            let alpha = args.alpha.ok_or_else(|| rejected("the hybrid norm needs `--alpha`"))?;
            NormParams::hybrid(q, alpha, args.beta.unwrap_or(0.0))
        }
        VariantArg::Iso | VariantArg::Mix => {
            let gamma = args
                .gamma
                .or(args.alpha)
                .ok_or_else(|| rejected("isotropic and mixed norms need `--gamma`"))?;
            if matches!(args.variant, VariantArg::Iso) {
                NormParams::isotropic(q, gamma)
            } else {
                NormParams::mixed(q, gamma)
            }
        }
    };
    let value = wiener_norm(&f, params).map_err(|e| Failure::Failed(e.to_string()))?;
    emit(args.out.as_deref(), &to_json(&value)?)
}

fn run_approx(args: ApproxArgs) -> Result<(), Failure> {
    let scheme = builtin_scheme(&args.scheme).map_err(classify)?;
    let f = read_function(&args.function)?;
    if f.dim() != args.dim {
        return Err(rejected(format!("--dim {} does not match the function dimension {}", args.dim, f.dim())));
    }
    let set = build_set(&args.set, args.n, args.dim, args.energy)?;
    let approx = apply_p(&scheme, &set, &f).map_err(|e| Failure::Failed(e.to_string()))?;
    let text = approx.to_json_string().map_err(|e| Failure::Failed(e.to_string()))?;
    emit(args.out.as_deref(), &format!("{text}\n"))?;
    // The coefficient file has no slot for it, so the A_1 bound on the
    // truncation error goes to stderr.
    if approx.budget() > 0.0 {
        eprintln!("truncation budget (A_1): {:e}", approx.budget());
    }
    Ok(())
}

fn csv_text(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w).map_err(|e| Failure::Failed(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Failure::Failed(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Failed(e.to_string()))
}

fn run_grid(args: GridArgs) -> Result<(), Failure> {
    let d = args.dim;
    let set = match (args.energy, args.xi) {
        (Some(EnergyParams([a, b, g, e, s])), Some(xi)) => {
            SparseIndexSet::energy(xi, a, b, g, e, s, d).map_err(classify)?
        }
        _ => {
            let n = args.n.ok_or_else(|| rejected("`grid` needs `--n` or `--energy` with `--xi`"))?;
            SparseIndexSet::delta(n, parse_anisotropy(&args.t)?, d).map_err(classify)?
        }
    };
    let text = match args.emit {
        Emit::Members => csv_text(|w| {
            w.write_record((1..=d).map(|i| format!("k_{i}")))?;
            for k in set.members() {
                w.write_record(k.iter().map(|x| x.to_string()))?;
            }
            Ok(())
        })?,
        Emit::Points => csv_text(|w| {
            w.write_record((1..=d).map(|i| format!("x_{i}")))?;
            for x in set.grid_points() {
                // x_i = 2π·num/2^level, written as the reduced fraction num/2^level.
                w.write_record(x.iter().map(|t| format!("{}/{}", t.num, 1u64 << t.level)))?;
            }
            Ok(())
        })?,
        Emit::Counts => {
            let frequencies = set.frequency_count().map_err(classify)?;
            let points = set.grid_points().len();
            csv_text(|w| {
                w.write_record(["members", "points", "frequencies"])?;
                w.write_record([set.len().to_string(), points.to_string(), frequencies.to_string()])
            })?
        }
    };
    emit(args.out.as_deref(), &text)
}

fn run_check(args: CheckArgs) -> Result<bool, Failure> {
    let scheme = builtin_scheme(&args.scheme).map_err(classify)?;
    let cert = certify(&scheme, args.jmax, args.s).map_err(classify)?;
    emit(args.out.as_deref(), &to_json(&cert)?)?;
    Ok(cert.verdict == Verdict::Pass)
}

fn report_csv(report: &Report) -> Result<String, Failure> {
    csv_text(|w| {
        match report {
            Report::Rate(r) => r.rows.iter().try_for_each(|row| w.serialize(row))?,
            Report::Sharpness(r) => r.rows.iter().try_for_each(|row| w.serialize(row))?,
        }
        Ok(())
    })
}

fn write_report(report: &Report, out: Option<&Path>) -> Result<(), Failure> {
    let is_csv = out.is_some_and(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    let text = if is_csv { report_csv(report)? } else { to_json(report)? };
    emit(out, &text)
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut config =
        ExperimentConfig::from_json_str(&read(path)?).map_err(|e| rejected(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate().map_err(|e| rejected(format!("{}: {e}", path.display())))?;
    Ok(config)
}

fn run_rates(args: RatesArgs, seed: Option<u64>) -> Result<bool, Failure> {
    if let Some(plot_path) = &args.plot {
        let svg_path = args.svg.as_deref().expect("clap requires --svg with --plot");
        let text = read(plot_path)?;
        let report: Report =
            serde_json::from_str(&text).map_err(|e| rejected(format!("{}: {e}", plot_path.display())))?;
        emit(Some(svg_path), &plot::render(&report))?;
        return Ok(true);
    }
    if args.config.len() > 1 && args.out.is_some() {
        return Err(rejected("`--out` takes a single config; give each config its own `out` field"));
    }
    // Reject every config before running any of them.
    let configs: Vec<ExperimentConfig> = args
        .config
        .iter()
        .map(|p| load_config(p, seed))
        .collect::<Result<_, _>>()?;
    let reports: Vec<Report> = configs
        .par_iter()
        .map(|c| c.run().map_err(|e| Failure::Failed(e.to_string())))
        .collect::<Result<_, _>>()?;
    let mut all_pass = true;
    for (config, report) in configs.iter().zip(&reports) {
        let out = args.out.clone().or_else(|| config.out.as_ref().map(PathBuf::from));
        write_report(report, out.as_deref())?;
        all_pass &= report.verdict() == Verdict::Pass;
    }
    Ok(all_pass)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| rejected(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Norm(a) => run_norm(a).map(|()| true),
        Command::Approx(a) => run_approx(a).map(|()| true),
        Command::Grid(a) => run_grid(a).map(|()| true),
        Command::CheckConditions(a) => run_check(a),
        Command::Rates(a) => run_rates(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verdict: FAIL");
            ExitCode::from(1)
        }
        Err(f) => {
            let (Failure::Rejected(msg) | Failure::Failed(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
