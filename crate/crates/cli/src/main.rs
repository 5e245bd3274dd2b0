use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hrr_core::config::{parse_config, RunConfig};
use hrr_core::eval::{default_scenarios, sweep};
use hrr_core::hr::{build_report, HrError, HrSeries};
use hrr_core::io::{apply_meta, labels_csv, load_trace, meta_path, modes_csv, save_trace, trace_meta, trace_to_csv, write_file};
use hrr_core::pipeline::{estimate_trace, PipelineError, PipelineOutput};
use hrr_core::radar::{phase_to_displacement, phase_trace, simulate_frames, track_target, RadarCube, Target, TargetScene};
use hrr_core::signal::ChestMotionTrace;

#[derive(Parser)]
#[command(name = "hrr", version, about = "Heart-rate recovery from chest motion and FMCW radar data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// key=value configuration file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one key (repeatable); wins over the file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a chest-motion trace with known ground truth
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output CSV; a .meta side-car is written next to it
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Simulate FMCW radar frames for a target moving with a trace
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Displacement trace to move the target with (synthesized from the config if absent)
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Output radar cube
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the stitched range-bin phase as CSV
        #[arg(long)]
        phase_out: Option<PathBuf>,
    },
    /// Estimate the heart-rate curve and recovery report
    Estimate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Trace CSV or radar cube
        input: PathBuf,
        #[arg(short, long)]
        out_dir: PathBuf,
        /// Also write per-window mode and label tables
        #[arg(long)]
        dump_modes: bool,
    },
    /// Run the evaluation scenarios and write scores and archives
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long)]
        out_dir: PathBuf,
        /// Run only these scenarios (repeatable)
        #[arg(long)]
        scenario: Vec<String>,
    },
    /// Write per-window mode and label tables for an input
    DumpModes {
        #[command(flatten)]
        cfg: ConfigArgs,
        input: PathBuf,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Input(String),
    Pipeline(String),
    Degraded(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Pipeline(_) => 3,
            Failure::Degraded(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Pipeline(m) | Failure::Degraded(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn resolve(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let text = match &args.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let name = args.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    parse_config(text.as_deref().map(|t| (name.as_str(), t)), &args.set).map_err(|e| Failure::Usage(e.to_string()))
}

fn is_cube(path: &Path) -> Result<bool, Failure> {
    let mut magic = [0u8; 9];
    let mut f = File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let n = f.read(&mut magic).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(&magic[..n] == b"RADARCUBE")
}

/// A displacement trace from either input format. Radar cubes are tracked
/// at `target_range`; a `.meta` side-car supplies ground truth.
fn load_input(path: &Path, cfg: &RunConfig) -> Result<ChestMotionTrace, Failure> {
    if !is_cube(path)? {
        return load_trace(path).map_err(input_err);
    }
    let file = File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let cube = RadarCube::read_from(BufReader::new(file)).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let seq = track_target(&cube, cfg.target_range, cfg.search_width)
        .map_err(|e| Failure::Pipeline(format!("radar tracking: {e}")))?;
    let mut trace = phase_to_displacement(&seq, cube.wavelength());
    let meta = meta_path(path);
    if meta.exists() {
        let text = std::fs::read_to_string(&meta).map_err(|e| Failure::Input(format!("{}: {e}", meta.display())))?;
        apply_meta(&mut trace, &text, &meta.display().to_string()).map_err(input_err)?;
        trace.sample_rate = cube.frame_rate;
    }
    Ok(trace)
}

fn stage_failure(e: PipelineError) -> Failure {
    let msg = match &e {
        PipelineError::Preprocess(_) => format!("preprocess: {e}"),
        PipelineError::Vmd(_) => format!("vmd: {e}"),
        PipelineError::Hr(HrError::TooShort { .. }) => return Failure::Input(format!("hr-estimate: {e}")),
        PipelineError::Hr(_) => format!("hr-estimate: {e}"),
        PipelineError::Config(_) => return Failure::Usage(e.to_string()),
    };
    Failure::Pipeline(msg)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    write_file(path, contents).map_err(input_err)
}

fn write_series(out_dir: &Path, series: &HrSeries, trace: &ChestMotionTrace) -> Result<(), Failure> {
    write(&out_dir.join("hr.csv"), &series.to_csv())?;
    if let Ok(report) = build_report(series, trace.true_rate()) {
        write(&out_dir.join("report.txt"), &report.to_key_value())?;
        write(&out_dir.join("report.json"), &report.to_json())?;
        print!("{}", report.to_key_value());
    }
    Ok(())
}

fn write_dumps(out_dir: &Path, out: &PipelineOutput) -> Result<(), Failure> {
    write(&out_dir.join("modes.csv"), &modes_csv(&out.windows))?;
    write(&out_dir.join("labels.csv"), &labels_csv(&out.windows))
}

fn run_estimate(cfg: &RunConfig, input: &Path, out_dir: &Path, dump_modes: bool) -> Result<(), Failure> {
    let trace = load_input(input, cfg)?;
    write(&out_dir.join("config.txt"), &cfg.to_key_value())?;
    match estimate_trace(&trace, &cfg.pipeline()) {
        Ok(out) => {
            write(&out_dir.join("hr.csv"), &out.series.to_csv())?;
            if let Some(report) = &out.report {
                write(&out_dir.join("report.txt"), &report.to_key_value())?;
                write(&out_dir.join("report.json"), &report.to_json())?;
                print!("{}", report.to_key_value());
            } else {
                eprintln!("note: curve shorter than 60 s, no recovery report");
            }
            if dump_modes {
                write_dumps(out_dir, &out)?;
            }
            Ok(())
        }
        Err(PipelineError::Hr(HrError::Degraded { carried, total, series })) => {
            write_series(out_dir, &series, &trace)?;
            Err(Failure::Degraded(format!("hr-estimate: {carried} of {total} estimates were carried forward")))
        }
        Err(e) => Err(stage_failure(e)),
    }
}

fn run_dump_modes(cfg: &RunConfig, input: &Path, out_dir: &Path) -> Result<(), Failure> {
    let trace = load_input(input, cfg)?;
    let out = estimate_trace(&trace, &cfg.pipeline()).map_err(stage_failure)?;
    write_dumps(out_dir, &out)
}

fn run_simulate(cfg: &RunConfig, trace: Option<&Path>, out: &Path, phase_out: Option<&Path>) -> Result<(), Failure> {
    let trace = match trace {
        Some(p) => load_trace(p).map_err(input_err)?,
        None => cfg.synthesize().map_err(|e| Failure::Usage(format!("synth: {e}")))?,
    };
    let mut radar = cfg.radar();
    radar.frame_rate = trace.sample_rate;
    let mut target = Target::new(cfg.target_range, trace.clone());
    target.drift = cfg.drift;
    let scene = TargetScene { targets: vec![target], noise_floor: cfg.noise_floor };
    let cube = simulate_frames(&radar, &scene, trace.duration(), cfg.seed).map_err(|e| Failure::Usage(format!("radar: {e}")))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    }
    let file = File::create(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    cube.write_to(std::io::BufWriter::new(file)).map_err(input_err)?;
    write(&meta_path(out), &trace_meta(&trace))?;
    if let Some(p) = phase_out {
        let seq = track_target(&cube, cfg.target_range, cfg.search_width)
            .map_err(|e| Failure::Pipeline(format!("radar tracking: {e}")))?;
        write(p, &trace_to_csv(&phase_trace(&seq)))?;
    }
    Ok(())
}

fn run_eval(cfg: &RunConfig, out_dir: &Path, only: &[String]) -> Result<(), Failure> {
    let all = default_scenarios(cfg);
    for name in only {
        if !all.iter().any(|s| &s.name == name) {
            let names: Vec<_> = all.iter().map(|s| s.name.as_str()).collect();
            return Err(Failure::Usage(format!("unknown scenario {name:?}; available: {}", names.join(", "))));
        }
    }
    let picked: Vec<_> = all.into_iter().filter(|s| only.is_empty() || only.contains(&s.name)).collect();
    let table = sweep(&picked).map_err(Failure::Usage)?;
    table.write_archive(out_dir).map_err(input_err)?;
    write(&out_dir.join("config.txt"), &cfg.to_key_value())?;
    print!("{}", table.to_csv());
    for row in &table.rows {
        for rep in &row.repetitions {
            if let Err(e) = &rep.result {
                eprintln!("{} rep_{}: failed: {e}", row.scenario, rep.index);
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth { cfg, out } => {
            let cfg = resolve(&cfg)?;
            let trace = cfg.synthesize().map_err(|e| Failure::Usage(format!("synth: {e}")))?;
            save_trace(&out, &trace).map_err(input_err)
        }
        Command::Simulate { cfg, trace, out, phase_out } => {
            run_simulate(&resolve(&cfg)?, trace.as_deref(), &out, phase_out.as_deref())
        }
        Command::Estimate { cfg, input, out_dir, dump_modes } => run_estimate(&resolve(&cfg)?, &input, &out_dir, dump_modes),
        Command::Eval { cfg, out_dir, scenario } => run_eval(&resolve(&cfg)?, &out_dir, &scenario),
        Command::DumpModes { cfg, input, out_dir } => run_dump_modes(&resolve(&cfg)?, &input, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
