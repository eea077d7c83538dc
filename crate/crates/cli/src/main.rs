// SPDX-License-Identifier: Apache-2.0

//! `dfc`: generate frames, measure and correct delays, and rerun the
//! characterization sweeps from the command line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfc_core::characterization::{corner_errors, cost_model, sweep_degree, sweep_fractions_with};
use dfc_core::interpolation::{correct_frame, correct_frame_with_next};
use dfc_core::io::{
    read_frame_csv, write_corners_csv, write_corrected_csv, write_frame_csv, write_mdc_csv,
    write_sweep_csv, write_weights_csv, FrameMeta,
};
use dfc_core::mdc_sim::{run_scenario, Scenario};
use dfc_core::signal_model::{draw_delay, inject_pd, sample_frame};
use dfc_core::{
    Arithmetic, BoundaryPolicy, DelayDistribution, DfcError, FxFormat, InterpolationConfig,
    PdParams, Quantization, Rounding, TlSignalParams,
};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "dfc", version, about = "Merging-unit data-frame correction")]
struct Cli {
    /// Directory for relative output paths.
    #[arg(long, global = true, env = "DFC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one delayed frame of the line signal.
    Generate(GenerateArgs),
    /// Remove a measured delay from a frame.
    Correct(CorrectArgs),
    /// Replay DRDY/1PPS schedules through the delay-measurement model.
    Mdc(MdcArgs),
    /// Error sweep over interpolation degree or fraction bits.
    Sweep(SweepArgs),
    /// Arithmetic-unit and memory cost of a direct Lagrange datapath.
    Cost(CostArgs),
    /// Audit a corrected frame at the extrema of a reference frame.
    Corners(CornersArgs),
}

#[derive(Args, Debug)]
struct SignalArgs {
    #[arg(long, default_value_t = 1.0)]
    a_rms: f64,
    #[arg(long, default_value_t = 50.0)]
    freq_hz: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phase_rad: f64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    signal: SignalArgs,
    /// Fixed measurement delay.
    #[arg(long, conflicts_with = "seed")]
    delay_ns: Option<i64>,
    /// Draw the delay from the Gaussian model instead.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 500_000.0)]
    mean_ns: f64,
    #[arg(long, default_value_t = 200_000.0)]
    sigma_ns: f64,
    #[arg(long, default_value_t = 1_000_000)]
    clip_ns: i64,
    /// Add a partial-discharge burst.
    #[arg(long)]
    pd: bool,
    #[arg(long, default_value_t = 100)]
    pd_onset: usize,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pd_amplitude: f64,
    #[arg(long, default_value_t = 0.7)]
    pd_decay: f64,
    #[arg(long, default_value_t = 6.0)]
    pd_period: f64,
    /// Frame CSV; the metadata sidecar is written next to it with a `.json` extension.
    #[arg(long, short, default_value = "frame.csv")]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RoundingArg {
    Floor,
    Nearest,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum QuantArg {
    RegisterBoundary,
    EveryOperation,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundaryArg {
    Wrap,
    Hold,
}

#[derive(Args, Debug)]
struct InterpArgs {
    #[arg(long, default_value_t = 16)]
    degree: usize,
    #[arg(long, default_value_t = 12)]
    frac_bits: u8,
    /// Use the float reference path instead of fixed point.
    #[arg(long)]
    float: bool,
    #[arg(long, value_enum, default_value = "floor")]
    rounding: RoundingArg,
    #[arg(long, value_enum, default_value = "register-boundary")]
    quantization: QuantArg,
    #[arg(long, value_enum, default_value = "wrap")]
    boundary: BoundaryArg,
}

impl InterpArgs {
    fn config(&self) -> Result<InterpolationConfig, CliError> {
        let rounding = match self.rounding {
            RoundingArg::Floor => Rounding::Floor,
            RoundingArg::Nearest => Rounding::Nearest,
        };
        let cfg = InterpolationConfig {
            degree: self.degree,
            fmt: FxFormat::with_rounding(self.frac_bits, rounding)?,
            arithmetic: if self.float {
                Arithmetic::FloatReference
            } else {
                Arithmetic::FixedPoint
            },
            boundary_policy: match self.boundary {
                BoundaryArg::Wrap => BoundaryPolicy::WrapPeriodic,
                BoundaryArg::Hold => BoundaryPolicy::HoldNextFrame,
            },
            quantization: match self.quantization {
                QuantArg::RegisterBoundary => Quantization::RegisterBoundary,
                QuantArg::EveryOperation => Quantization::EveryOperation,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct CorrectArgs {
    /// Measured frame CSV.
    #[arg(long, short)]
    input: PathBuf,
    /// Measured delay in 10 ns ticks; read from the input's sidecar when omitted.
    #[arg(long)]
    delay_ticks: Option<i64>,
    /// Following frame, read past the end under `--boundary hold`.
    #[arg(long)]
    next: Option<PathBuf>,
    #[command(flatten)]
    interp: InterpArgs,
    #[arg(long, short, default_value = "corrected.csv")]
    output: PathBuf,
    /// Also dump the weight table as `i,m,raw,real`.
    #[arg(long)]
    weights_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MdcArgs {
    /// Scenario JSON with `drdy_ticks`, `pps_ticks` and `n_ticks`.
    #[arg(long, short)]
    scenario: PathBuf,
    #[arg(long, short, default_value = "mdc.csv")]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Axis {
    Degree,
    FracBits,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    axis: Axis,
    /// Grid stride over the 2,000,000-point 10 ns grid; 1 is the full grid.
    #[arg(long, default_value_t = 100)]
    stride: u64,
    #[arg(long, default_value_t = 0.001)]
    threshold: f64,
    /// Degree held fixed for the fraction-bit sweep.
    #[arg(long, default_value_t = 16)]
    degree: usize,
    #[arg(long, value_enum, default_value = "floor")]
    rounding: RoundingArg,
    #[arg(long, value_enum, default_value = "register-boundary")]
    quantization: QuantArg,
    #[arg(long, short, default_value = "sweep.csv")]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CostArgs {
    /// Number of interpolation nodes.
    #[arg(short = 'n', long, default_value_t = 256)]
    nodes: u64,
    /// Time-tag width in bits.
    #[arg(short = 'm', long, default_value_t = 25)]
    tag_bits: u64,
}

#[derive(Args, Debug)]
struct CornersArgs {
    /// Corrected frame CSV.
    #[arg(long)]
    frame: PathBuf,
    /// Undelayed reference frame CSV; corners are its strict local extrema.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, short, default_value = "corners.csv")]
    output: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(DfcError),
}

impl From<DfcError> for CliError {
    fn from(e: DfcError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(DfcError::Io(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                DfcError::Overflow { .. } => 3,
                DfcError::Format { .. } | DfcError::Io(_) | DfcError::Json(_) => 2,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

/// JSON formatter writing every real with 17 significant digits.
struct RealFormatter;

impl serde_json::ser::Formatter for RealFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RealFormatter);
    value.serialize(&mut ser).map_err(DfcError::Json)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Serialize)]
struct Echo<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: C,
    result: R,
}

fn echo<C: Serialize, R: Serialize>(command: &str, config: C, result: R) -> Result<(), CliError> {
    println!(
        "{}",
        to_json(&Echo {
            command,
            config,
            result
        })?
    );
    Ok(())
}

fn out_path(out_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| {
        CliError::Core(DfcError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn read_meta(frame_path: &Path) -> Result<Option<FrameMeta>, CliError> {
    let side = sidecar(frame_path);
    if !side.exists() {
        return Ok(None);
    }
    Ok(Some(
        serde_json::from_reader(open(&side)?).map_err(DfcError::Json)?,
    ))
}

fn cmd_generate(out_dir: &Path, a: &GenerateArgs) -> Result<(), CliError> {
    let params = TlSignalParams::new(a.signal.a_rms, a.signal.freq_hz, a.signal.phase_rad)?;
    let (delay_ns, dist) = match (a.delay_ns, a.seed) {
        (Some(d), _) => (d, None),
        (None, Some(seed)) => {
            let dist = DelayDistribution::new(a.mean_ns, a.sigma_ns, a.clip_ns)?;
            (draw_delay(&dist, seed)?, Some(dist))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --delay-ns or --seed is required".into(),
            ))
        }
    };
    let pd = a.pd.then_some(PdParams {
        onset_step: a.pd_onset,
        amplitude: a.pd_amplitude,
        decay_per_step: a.pd_decay,
        oscillation_period_steps: a.pd_period,
    });
    let mut frame = sample_frame(&params, delay_ns)?;
    if let Some(pd) = &pd {
        frame = inject_pd(&frame, pd)?;
    }

    let path = out_path(out_dir, &a.output);
    let mut w = create(&path)?;
    write_frame_csv(&mut w, &frame)?;
    w.flush()?;
    let meta = FrameMeta {
        delay_ns,
        params,
        seed: a.seed,
        pd,
    };
    let mut side = create(&sidecar(&path))?;
    writeln!(side, "{}", to_json(&meta)?)?;
    side.flush()?;

    #[derive(Serialize)]
    struct Config<'a> {
        meta: &'a FrameMeta,
        delay_distribution: Option<DelayDistribution>,
    }
    #[derive(Serialize)]
    struct Out {
        frame: PathBuf,
        sidecar: PathBuf,
        delay_ns: i64,
    }
    echo(
        "generate",
        Config {
            meta: &meta,
            delay_distribution: dist,
        },
        Out {
            sidecar: sidecar(&path),
            frame: path,
            delay_ns,
        },
    )
}

fn cmd_correct(out_dir: &Path, a: &CorrectArgs) -> Result<(), CliError> {
    let cfg = a.interp.config()?;
    let meta = read_meta(&a.input)?;
    let delay_ticks = match (a.delay_ticks, &meta) {
        (Some(t), _) => t,
        (None, Some(m)) => m.delay_ns / 10,
        (None, None) => {
            return Err(CliError::Usage(format!(
                "--delay-ticks is required: no sidecar {} found",
                sidecar(&a.input).display()
            )))
        }
    };
    let frame_delay = meta.as_ref().map_or(delay_ticks * 10, |m| m.delay_ns);
    let frame = read_frame_csv(open(&a.input)?, frame_delay)?;
    let wm = cfg.weights()?;
    let corrected = match &a.next {
        Some(next) => {
            let next = read_frame_csv(open(next)?, frame_delay)?;
            correct_frame_with_next(&frame, &next, delay_ticks, &cfg, &wm)?
        }
        None => correct_frame(&frame, delay_ticks, &cfg, &wm)?,
    };

    let path = out_path(out_dir, &a.output);
    let mut w = create(&path)?;
    write_corrected_csv(&mut w, &corrected)?;
    w.flush()?;
    let weights = match &a.weights_out {
        Some(p) => {
            let p = out_path(out_dir, p);
            let mut w = create(&p)?;
            write_weights_csv(&mut w, &wm)?;
            w.flush()?;
            Some(p)
        }
        None => None,
    };

    #[derive(Serialize)]
    struct Config<'a> {
        input: &'a Path,
        next: Option<&'a Path>,
        delay_ticks: i64,
        interpolation: InterpolationConfig,
    }
    #[derive(Serialize)]
    struct Out {
        output: PathBuf,
        weights: Option<PathBuf>,
        boundary_samples: usize,
    }
    echo(
        "correct",
        Config {
            input: &a.input,
            next: a.next.as_deref(),
            delay_ticks,
            interpolation: cfg,
        },
        Out {
            output: path,
            weights,
            boundary_samples: corrected.boundary_flags.iter().filter(|&&b| b).count(),
        },
    )
}

fn cmd_mdc(out_dir: &Path, a: &MdcArgs) -> Result<(), CliError> {
    let scenario: Scenario = serde_json::from_reader(open(&a.scenario)?).map_err(DfcError::Json)?;
    let records = run_scenario(&scenario)?;
    let path = out_path(out_dir, &a.output);
    let mut w = create(&path)?;
    write_mdc_csv(&mut w, &records)?;
    w.flush()?;

    #[derive(Serialize)]
    struct Out {
        output: PathBuf,
        periods: usize,
        lost_periods: usize,
    }
    echo(
        "mdc",
        &scenario,
        Out {
            output: path,
            periods: records.len(),
            lost_periods: records.iter().filter(|r| r.data_lost).count(),
        },
    )
}

fn cmd_sweep(out_dir: &Path, a: &SweepArgs) -> Result<(), CliError> {
    let rounding = match a.rounding {
        RoundingArg::Floor => Rounding::Floor,
        RoundingArg::Nearest => Rounding::Nearest,
    };
    let quantization = match a.quantization {
        QuantArg::RegisterBoundary => Quantization::RegisterBoundary,
        QuantArg::EveryOperation => Quantization::EveryOperation,
    };
    let report = match a.axis {
        Axis::Degree => sweep_degree(a.threshold, a.stride)?,
        Axis::FracBits => {
            sweep_fractions_with(a.degree, a.threshold, a.stride, quantization, rounding)?
        }
    };
    let path = out_path(out_dir, &a.output);
    let mut w = create(&path)?;
    write_sweep_csv(&mut w, &report)?;
    w.flush()?;

    #[derive(Serialize)]
    struct Config {
        axis: Axis,
        stride: u64,
        threshold: f64,
        degree: Option<usize>,
        rounding: Option<Rounding>,
        quantization: Option<Quantization>,
    }
    #[derive(Serialize)]
    struct Out {
        output: PathBuf,
        selected_min: Option<i64>,
    }
    let frac = matches!(a.axis, Axis::FracBits);
    echo(
        "sweep",
        Config {
            axis: a.axis,
            stride: a.stride,
            threshold: a.threshold,
            degree: frac.then_some(a.degree),
            rounding: frac.then_some(rounding),
            quantization: frac.then_some(quantization),
        },
        Out {
            output: path,
            selected_min: report.selected_min,
        },
    )
}

fn cmd_cost(a: &CostArgs) -> Result<(), CliError> {
    let report = cost_model(a.nodes, a.tag_bits)?;
    echo("cost", a, report)
}

fn cmd_corners(out_dir: &Path, a: &CornersArgs) -> Result<(), CliError> {
    let frame = read_frame_csv(open(&a.frame)?, 0)?;
    let reference = read_frame_csv(open(&a.reference)?, 0)?;
    let (corner_steps, abs_errors) = corner_errors(frame.samples(), reference.samples())?;
    let max_error = abs_errors.iter().copied().fold(0.0, f64::max);
    let path = out_path(out_dir, &a.output);
    let mut w = create(&path)?;
    write_corners_csv(&mut w, &corner_steps, &abs_errors)?;
    w.flush()?;

    #[derive(Serialize)]
    struct Config<'a> {
        frame: &'a Path,
        reference: &'a Path,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        output: PathBuf,
        corner_steps: &'a [usize],
        max_error: f64,
    }
    echo(
        "corners",
        Config {
            frame: &a.frame,
            reference: &a.reference,
        },
        Out {
            output: path,
            corner_steps: &corner_steps,
            max_error,
        },
    )
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(&cli.out_dir, a),
        Command::Correct(a) => cmd_correct(&cli.out_dir, a),
        Command::Mdc(a) => cmd_mdc(&cli.out_dir, a),
        Command::Sweep(a) => cmd_sweep(&cli.out_dir, a),
        Command::Cost(a) => cmd_cost(a),
        Command::Corners(a) => cmd_corners(&cli.out_dir, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dfc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
