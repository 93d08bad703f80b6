//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use impact_core::geometry::TipSign;
use impact_core::ingest::{self, Format};
use impact_core::pats::FocalPattern;
use impact_core::swing::{find_swings, SwingRange};
use impact_core::synth::{self, scenes, SceneSpec};
use impact_core::EventStream;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::json;
use crate::locate::{self, ImpactResult, LocateReport};
use crate::plot;

#[derive(Debug, Parser)]
#[command(name = "impact", version, about = "Locate ball impacts on a racket from event-camera streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline: swings, impact times and uv positions.
    Locate(StageArgs),
    /// Swing ranges only.
    Swing(StageArgs),
    /// Impact time for a given range, or for every detected swing.
    Impact {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long, requires = "t_end")]
        t_start: Option<u64>,
        #[arg(long, requires = "t_start")]
        t_end: Option<u64>,
    },
    /// Racket and ball ellipses at a known impact time.
    Contours {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long)]
        t_imp: u64,
    },
    /// Generate a synthetic stream with a ground-truth sidecar.
    Synth(SynthArgs),
    /// Draw located impacts on a normalized racket face as SVG.
    Plot {
        /// Results JSON written by `locate`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Input format; detected from the file when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub tip_sign: Option<TipSign>,
    #[arg(long)]
    pub pattern: Option<FocalPattern>,
    #[arg(long)]
    pub n_candidates: Option<usize>,
    /// Add per-stage wall-clock times to the results.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene description (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Events file; the truth goes to `<output>.truth.json`.
    #[arg(long)]
    pub output: PathBuf,
    /// Defaults to the output extension (`.csv` or EVTS).
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Evts,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Evts => Format::Evts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Single,
    Random,
    Rally,
    Flicker,
    Artifact,
    FlickerOverImpact,
    Noise,
}

impl Preset {
    pub fn spec(self, seed: u64) -> SceneSpec {
        match self {
            Preset::Single => scenes::single_swing(seed, 20.0, -15.0),
            Preset::Random => scenes::random_clean(seed),
            Preset::Rally => scenes::rally(seed),
            Preset::Flicker => scenes::flicker(seed),
            Preset::Artifact => scenes::corner_artifact(seed),
            Preset::FlickerOverImpact => scenes::flicker_over_impact(seed),
            Preset::Noise => scenes::noise_only(seed),
        }
    }
}

pub fn read_stream(path: &Path, format: Option<Format>) -> anyhow::Result<EventStream> {
    let (_, stream) = match format {
        Some(f) => ingest::read(path, f),
        None => ingest::read_auto(path),
    }
    .with_context(|| format!("reading {}", path.display()))?;
    log::info!("{}: {} events", path.display(), stream.len());
    Ok(stream)
}

/// Config file plus command-line overrides.
pub fn load_config(args: &StageArgs) -> anyhow::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(args.config.as_deref())?;
    if let Some(p) = args.pattern {
        cfg.impact.pattern = p;
    }
    if let Some(n) = args.n_candidates {
        cfg.impact.n_c = n;
    }
    if let Some(t) = args.tip_sign {
        cfg.set_tip(t);
    }
    if args.timings {
        cfg.output.timings = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_locate(input: &Path, cfg: &PipelineConfig, format: Option<Format>) -> anyhow::Result<LocateReport> {
    let stream = read_stream(input, format)?;
    Ok(locate::locate(&stream, cfg)?)
}

#[derive(Debug, Serialize)]
struct SwingOutput {
    swings: Vec<SwingRange>,
}

#[derive(Debug, Serialize)]
struct ImpactOutput {
    impacts: Vec<locate::ImpactStage>,
}

fn write_output(dest: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match dest {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn json_dest<'a>(args: &'a StageArgs, cfg: &'a PipelineConfig) -> Option<&'a Path> {
    args.output.as_deref().or(cfg.output.json.as_deref())
}

fn exit(failed: bool) -> ExitCode {
    ExitCode::from(u8::from(failed))
}

/// Runs one command; `Err` means a fatal error (exit code 2).
pub fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Locate(args) => {
            let cfg = load_config(&args)?;
            let report = cmd_locate(&args.input, &cfg, args.format.map(Into::into))?;
            write_output(json_dest(&args, &cfg), &json::to_string(&report)?)?;
            if let Some(svg) = &cfg.output.plot {
                std::fs::write(svg, plot::render_svg(&report.results))
                    .with_context(|| format!("writing {}", svg.display()))?;
            }
            Ok(exit(report.has_failures()))
        }
        Command::Swing(args) => {
            let cfg = load_config(&args)?;
            let stream = read_stream(&args.input, args.format.map(Into::into))?;
            let swings = find_swings::<f64>(&stream, &cfg.swing)?;
            write_output(json_dest(&args, &cfg), &json::to_string(&SwingOutput { swings })?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Impact {
            stage: args,
            t_start,
            t_end,
        } => {
            let cfg = load_config(&args)?;
            let stream = read_stream(&args.input, args.format.map(Into::into))?;
            let ranges = match (t_start, t_end) {
                (Some(t_start), Some(t_end)) => vec![SwingRange {
                    t_start,
                    t_end,
                    truncated: false,
                }],
                _ => find_swings::<f64>(&stream, &cfg.swing)?,
            };
            let impacts: Vec<_> = ranges
                .into_iter()
                .map(|r| locate::impact_stage(&stream, r, &cfg))
                .collect();
            let failed = impacts.iter().any(|i| i.error.is_some());
            write_output(json_dest(&args, &cfg), &json::to_string(&ImpactOutput { impacts })?)?;
            Ok(exit(failed))
        }
        Command::Contours { stage: args, t_imp } => {
            let cfg = load_config(&args)?;
            let stream = read_stream(&args.input, args.format.map(Into::into))?;
            let out = locate::contour_stage(&stream, t_imp, &cfg);
            write_output(json_dest(&args, &cfg), &json::to_string(&out)?)?;
            Ok(exit(out.error.is_some()))
        }
        Command::Synth(args) => {
            let spec = match (&args.input, args.preset) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<SceneSpec>(&text)
                        .with_context(|| format!("parsing scene {}", path.display()))?
                }
                (None, Some(preset)) => preset.spec(args.seed),
                (None, None) => bail!("either --input or --preset is required"),
            };
            let format = args
                .format
                .map(Into::into)
                .unwrap_or_else(|| Format::from_path(&args.output));
            let (stream, truth) = synth::generate(&spec)?;
            let sidecar = synth::write_scene(&args.output, format, &stream, &truth)?;
            let summary = serde_json::json!({
                "events": stream.len(),
                "output": args.output,
                "truth": sidecar,
            });
            write_output(None, &json::to_string(&summary)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { input, output } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let results = parse_results(&text).with_context(|| format!("parsing {}", input.display()))?;
            write_output(output.as_deref(), &plot::render_svg(&results))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Accepts a `locate` report or a bare result list.
pub fn parse_results(text: &str) -> serde_json::Result<Vec<ImpactResult>> {
    serde_json::from_str::<LocateReport>(text)
        .map(|r| r.results)
        .or_else(|_| serde_json::from_str::<Vec<ImpactResult>>(text))
}

pub fn main_with(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
