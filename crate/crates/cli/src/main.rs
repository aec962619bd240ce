//! Command-line front end: runs the measurement patterns, verification
//! checks, fidelity sweeps, potential-map exports, and resource arithmetic
//! from the library, with deterministic seeding and file outputs written
//! atomically.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::Serialize;

use bowtie_mbqc::frame::ByproductFrame;
use bowtie_mbqc::heff::fidelity_surface;
use bowtie_mbqc::lattice::PotentialField;
use bowtie_mbqc::protocols::{
    break_link, bridging_gate, resource_estimates, toffoli_pattern, triangle_enlargement,
    run_wire, OutcomePlan,
};
use bowtie_mbqc::state::{gates, MeasurementRecord, SiteInit, StateVector};
use bowtie_mbqc::verify::{run_all, run_check};

#[derive(Parser)]
#[command(
    name = "bowtie-mbqc",
    version,
    about = "Measurement-based computing on lattices with a native three-site entangler"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the 13-site three-input gate pattern and report the corrected output.
    Toffoli(ToffoliArgs),
    /// Write the fidelity surface over evolution time and one coupling offset.
    Sweep(SweepArgs),
    /// Export the optical potential landscape as CSV or PGM.
    LatticeMap(LatticeMapArgs),
    /// Run named verification checks and print a pass/fail table.
    Verify(VerifyArgs),
    /// Print site and step counts for larger constructions.
    Estimate(EstimateArgs),
    /// Stretch a three-site entangler through the four-ancilla chain.
    Enlarge(EnlargeArgs),
    /// Fuse two wires through a triangle's third site.
    Bridge(BridgeArgs),
    /// Teleport a single-qubit state down a measured chain.
    Wire(WireArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pgm,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct OutcomeArgs {
    /// Forced measurement outcomes as a bit string, one bit per measured
    /// site in measurement order. Without it outcomes are sampled.
    #[arg(long, conflicts_with = "sample")]
    outcomes: Option<String>,
    /// Sample outcomes from the measurement distribution (the default when
    /// no outcomes are forced).
    #[arg(long)]
    sample: bool,
    /// Seed for sampled outcomes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ToffoliArgs {
    /// Three input wires, comma separated: zero|one|plus or re:im:re:im
    /// amplitude quadruples.
    #[arg(long = "in")]
    input: String,
    #[command(flatten)]
    outcomes: OutcomeArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Which coupling receives the offset (0..=4).
    #[arg(long = "eps-index", default_value_t = 2)]
    eps_index: usize,
    /// Evolution-time grid step.
    #[arg(long, default_value_t = 0.02)]
    tau_step: f64,
    /// Number of time grid points, starting at zero.
    #[arg(long, default_value_t = 101)]
    tau_count: usize,
    /// Offset grid step.
    #[arg(long, default_value_t = std::f64::consts::PI / 160.0)]
    eps_step: f64,
    /// Number of offset grid points, centered on zero.
    #[arg(long, default_value_t = 41)]
    eps_count: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LatticeMapArgs {
    /// Depth of the vertical-band component.
    #[arg(long, default_value_t = 2.0)]
    v1: f64,
    /// Depth of the horizontal-band component.
    #[arg(long, default_value_t = 2.0)]
    v2: f64,
    /// Wavelength setting the banding periods.
    #[arg(long, default_value_t = 2.0)]
    wavelength: f64,
    /// Grid points per axis over a two-wavelength window.
    #[arg(long, default_value_t = 121)]
    resolution: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run a single named check instead of the whole table.
    #[arg(long)]
    only: Option<String>,
    /// Widen the toffoli check to all 1024 outcome branches.
    #[arg(long)]
    exhaustive: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EstimateArgs {
    /// Inputs of the controlled flip being built (at least 3).
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EnlargeArgs {
    /// Three input wires, comma separated: zero|one|plus or re:im:re:im.
    #[arg(long = "in", default_value = "plus,plus,plus")]
    input: String,
    #[command(flatten)]
    outcomes: OutcomeArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BridgeBasis {
    /// Quarter-turn branch maps that fuse the wires.
    Y,
    /// Keep-or-break: outcome 1 commits the pair entangler, 0 removes it.
    Z,
}

#[derive(Args)]
struct BridgeArgs {
    /// Two input wires, comma separated: zero|one|plus or re:im:re:im.
    #[arg(long = "in", default_value = "plus,plus")]
    input: String,
    /// Measurement basis for the shared third site.
    #[arg(long, value_enum, default_value_t = BridgeBasis::Y)]
    basis: BridgeBasis,
    #[command(flatten)]
    outcomes: OutcomeArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct WireArgs {
    /// Input wire: zero|one|plus or re:im:re:im.
    #[arg(long = "in", default_value = "plus")]
    input: String,
    /// Number of chain steps (each one measured site).
    #[arg(long, default_value_t = 2)]
    length: usize,
    #[command(flatten)]
    outcomes: OutcomeArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Toffoli(args) => cmd_toffoli(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::LatticeMap(args) => cmd_lattice_map(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Enlarge(args) => cmd_enlarge(args),
        Command::Bridge(args) => cmd_bridge(args),
        Command::Wire(args) => cmd_wire(args),
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("BOWTIE_MBQC_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| anyhow!("BOWTIE_MBQC_THREADS must be a positive integer, got {raw:?}"))?;
        if n == 0 {
            bail!("BOWTIE_MBQC_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    Ok(())
}

/// Parses comma-separated wire specs: named states or re:im:re:im amplitude
/// quadruples (normalized here).
fn parse_wires(spec: &str, expected: usize) -> Result<Vec<StateVector>> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != expected {
        bail!("expected {expected} comma-separated wires, got {}", parts.len());
    }
    parts.iter().map(|p| parse_wire(p)).collect()
}

fn parse_wire(spec: &str) -> Result<StateVector> {
    let named = match spec.trim() {
        "zero" => Some(SiteInit::Zero),
        "one" => Some(SiteInit::One),
        "plus" => Some(SiteInit::Plus),
        _ => None,
    };
    if let Some(init) = named {
        return Ok(StateVector::product(&[(1, init)])?);
    }
    let nums: Vec<f64> = spec
        .split(':')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("wire {spec:?} is neither zero|one|plus nor re:im:re:im"))
        })
        .collect::<Result<_>>()?;
    if nums.len() != 4 {
        bail!("amplitude wire needs exactly 4 numbers re:im:re:im, got {}", nums.len());
    }
    let a0 = Complex64::new(nums[0], nums[1]);
    let a1 = Complex64::new(nums[2], nums[3]);
    let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
    if norm < 1e-12 {
        bail!("wire {spec:?} has zero norm");
    }
    Ok(StateVector::single(a0 / norm, a1 / norm)?)
}

fn parse_outcome_bits(spec: &str) -> Result<Vec<u8>> {
    spec.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(anyhow!("outcome string must be bits, found {other:?}")),
        })
        .collect()
}

/// Runs `body` with the plan the outcome flags ask for: forced bits when
/// given, otherwise sampling seeded from --seed.
fn with_plan<T>(
    outcomes: &OutcomeArgs,
    body: impl FnOnce(OutcomePlan<'_>) -> bowtie_mbqc::Result<T>,
) -> Result<T> {
    let out = match &outcomes.outcomes {
        Some(spec) => {
            let bits = parse_outcome_bits(spec)?;
            body(OutcomePlan::Forced(&bits))
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(outcomes.seed);
            body(OutcomePlan::Sample(&mut rng))
        }
    };
    Ok(out?)
}

fn format_or(output: &OutputArgs, default: Format, allowed: &[Format]) -> Result<Format> {
    let fmt = output.format.unwrap_or(default);
    if !allowed.contains(&fmt) {
        bail!("this subcommand cannot write that format");
    }
    Ok(fmt)
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print_stdout(contents);
            Ok(())
        }
    }
}

/// Prints to stdout, treating a closed pipe as an orderly stop instead of
/// a panic (readers like `head` close early).
fn print_stdout(contents: &str) {
    use std::io::Write;
    let mut handle = std::io::stdout().lock();
    if let Err(e) = handle.write_all(contents.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("output path {} has no file name", path.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn amplitude_pairs(state: &StateVector) -> Vec<[f64; 2]> {
    state.amplitudes().iter().map(|a| [a.re, a.im]).collect()
}

fn fidelity_exit(fidelity: f64) -> ExitCode {
    if fidelity >= 1.0 - 1e-9 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[derive(Serialize)]
struct PatternReport<'a> {
    record: &'a MeasurementRecord,
    frame: &'a ByproductFrame,
    output_sites: &'a [usize],
    output_amplitudes: Vec<[f64; 2]>,
}

fn cmd_toffoli(args: ToffoliArgs) -> Result<ExitCode> {
    format_or(&args.output, Format::Json, &[Format::Json])?;
    let wires = parse_wires(&args.input, 3)?;
    let run = with_plan(&args.outcomes, |plan| {
        toffoli_pattern([&wires[0], &wires[1], &wires[2]], plan)
    })?;

    #[derive(Serialize)]
    struct Out<'a> {
        #[serde(flatten)]
        pattern: PatternReport<'a>,
        fidelity_vs_oracle: f64,
    }
    let body = json_line(&Out {
        pattern: PatternReport {
            record: &run.run.record,
            frame: &run.run.frame,
            output_sites: &run.run.output_sites,
            output_amplitudes: amplitude_pairs(&run.run.output_state),
        },
        fidelity_vs_oracle: run.fidelity_vs_oracle,
    })?;
    emit(args.output.out.as_deref(), &body)?;
    Ok(fidelity_exit(run.fidelity_vs_oracle))
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    format_or(&args.output, Format::Csv, &[Format::Csv])?;
    if [args.tau_step, args.eps_step].iter().any(|s| !s.is_finite() || *s <= 0.0) {
        bail!("grid steps must be positive");
    }
    if args.tau_count < 2 || args.eps_count < 2 {
        bail!("grids need at least 2 points per axis");
    }
    let taus: Vec<f64> = (0..args.tau_count).map(|i| i as f64 * args.tau_step).collect();
    let half = (args.eps_count as i64 - 1) / 2;
    let eps: Vec<f64> = (0..args.eps_count as i64)
        .map(|j| (j - half) as f64 * args.eps_step)
        .collect();
    let start = StateVector::all_plus(3)?;
    let surface = fidelity_surface(&taus, &eps, args.eps_index, &start)?;
    emit(args.output.out.as_deref(), &surface.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_lattice_map(args: LatticeMapArgs) -> Result<ExitCode> {
    let fmt = format_or(&args.output, Format::Csv, &[Format::Csv, Format::Pgm])?;
    let field = PotentialField::new(args.v1, args.v2, args.wavelength)?;
    let span = 2.0 * args.wavelength;
    let grid = field.grid(0.0, span, 0.0, span, args.resolution, args.resolution)?;
    let body = match fmt {
        Format::Csv => grid.to_csv(),
        Format::Pgm => grid.to_pgm(),
        Format::Json => unreachable!("filtered above"),
    };
    emit(args.output.out.as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    format_or(&args.output, Format::Json, &[Format::Json])?;
    let reports = match &args.only {
        Some(name) => vec![run_check(name, args.exhaustive)?],
        None => run_all(args.exhaustive),
    };
    for r in &reports {
        print_stdout(&format!(
            "{} {} ({} ms): {}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.millis,
            r.detail
        ));
    }
    if let Some(path) = &args.output.out {
        write_atomic(path, &json_line(&reports)?)?;
    }
    if reports.iter().all(|r| r.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode> {
    format_or(&args.output, Format::Json, &[Format::Json])?;
    let report = resource_estimates(args.n)?;
    emit(args.output.out.as_deref(), &json_line(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_enlarge(args: EnlargeArgs) -> Result<ExitCode> {
    format_or(&args.output, Format::Json, &[Format::Json])?;
    let wires = parse_wires(&args.input, 3)?;
    let input = wires[0].tensor(&wires[1])?.tensor(&wires[2])?;
    let run = with_plan(&args.outcomes, |plan| triangle_enlargement(&input, plan))?;

    #[derive(Serialize)]
    struct Out<'a> {
        #[serde(flatten)]
        pattern: PatternReport<'a>,
        fidelity_vs_entangler: f64,
    }
    let body = json_line(&Out {
        pattern: PatternReport {
            record: &run.run.record,
            frame: &run.run.frame,
            output_sites: &run.run.output_sites,
            output_amplitudes: amplitude_pairs(&run.run.output_state),
        },
        fidelity_vs_entangler: run.fidelity_vs_entangler,
    })?;
    emit(args.output.out.as_deref(), &body)?;
    Ok(fidelity_exit(run.fidelity_vs_entangler))
}

fn cmd_bridge(args: BridgeArgs) -> Result<ExitCode> {
    format_or(&args.output, Format::Json, &[Format::Json])?;
    let wires = parse_wires(&args.input, 2)?;
    let input = wires[0].tensor(&wires[1])?;
    let body = match args.basis {
        BridgeBasis::Y => {
            let run = with_plan(&args.outcomes, |plan| bridging_gate(&input, plan))?;

            #[derive(Serialize)]
            struct Out {
                outcome: u8,
                probability: f64,
                classification: bowtie_mbqc::protocols::BridgeClassification,
                output_amplitudes: Vec<[f64; 2]>,
            }
            json_line(&Out {
                outcome: run.outcome,
                probability: run.probability,
                classification: run.classification,
                output_amplitudes: amplitude_pairs(&run.output),
            })?
        }
        BridgeBasis::Z => {
            let run = with_plan(&args.outcomes, |plan| break_link(&input, plan))?;

            #[derive(Serialize)]
            struct Out {
                outcome: u8,
                probability: f64,
                link_kept: bool,
                output_amplitudes: Vec<[f64; 2]>,
            }
            json_line(&Out {
                outcome: run.outcome,
                probability: run.probability,
                link_kept: run.link_kept,
                output_amplitudes: amplitude_pairs(&run.output),
            })?
        }
    };
    emit(args.output.out.as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_wire(args: WireArgs) -> Result<ExitCode> {
    format_or(&args.output, Format::Json, &[Format::Json])?;
    let wires = parse_wires(&args.input, 1)?;
    let run = with_plan(&args.outcomes, |plan| run_wire(&wires[0], args.length, plan))?;
    let mut ideal = wires[0].clone();
    for _ in 0..args.length {
        ideal.apply_single(1, &gates::hadamard())?;
    }
    let fidelity_vs_ideal = run.output.fidelity(&ideal)?;

    #[derive(Serialize)]
    struct Out<'a> {
        length: usize,
        record: &'a MeasurementRecord,
        frame: &'a ByproductFrame,
        output_amplitudes: Vec<[f64; 2]>,
        fidelity_vs_ideal: f64,
    }
    let body = json_line(&Out {
        length: args.length,
        record: &run.record,
        frame: &run.frame,
        output_amplitudes: amplitude_pairs(&run.output),
        fidelity_vs_ideal,
    })?;
    emit(args.output.out.as_deref(), &body)?;
    Ok(fidelity_exit(fidelity_vs_ideal))
}
