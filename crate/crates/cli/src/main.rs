use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twinsynth::io::{read_jsonl, write_json_pretty, write_jsonl};
use twinsynth::par;
use twinsynth::pipeline::{
    build_dataset, dist_baseline, evaluate, load_assets, load_targets, random_baseline, stage_assign,
    stage_augment, stage_fit, stage_render, stage_select, synth_targets, ClassCoreset, DatasetManifest,
    DistTraceEntry, Modality, PipelineConfig, RunPaths, ScenarioConfig, TargetRecord, TwinRecord,
};
use twinsynth::{ErrorKind, RenderConfig};

/// Digital-twin training set synthesis.
#[derive(Debug, Parser)]
#[command(name = "twinsynth", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Pipeline config file (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set augment.n=300`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Seed for every random choice; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More log output; repeat for debug.
    #[arg(long, short, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic target scenario: assets, biased target renders,
    /// hidden labels and a ready-to-run config.
    SynthTargets {
        /// Directory to create the scenario in.
        dir: PathBuf,
        #[arg(long, default_value = "bimodal")]
        modality: Modality,
        /// Targets rendered per catalogue asset.
        #[arg(long, default_value_t = 20)]
        per_asset: usize,
        /// Image width and height.
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Extract target features and pseudo labels.
    Assign,
    /// Pick the per-class coreset from the assigned targets.
    Select,
    /// Fit a digital twin to every coreset target.
    Fit,
    /// Sample around the twins and render the dataset.
    Augment,
    /// Run assign, select, fit and augment in one go and write the report.
    Build,
    /// Produce a comparison dataset.
    Baseline {
        #[arg(long)]
        kind: BaselineKind,
    },
    /// Fréchet feature distance of a generated set against target images.
    Evaluate {
        /// Manifest to score (default: the config's run manifest).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Target image directory (default: the config's targets_dir).
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Report file (default: evaluation.json beside the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flatten fit traces into CSV.
    TraceExport {
        /// Run directory (default: the config's output_dir).
        #[arg(long)]
        run: Option<PathBuf>,
        /// Export the dist-baseline objective trace instead of twin fits.
        #[arg(long)]
        dist: bool,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineKind {
    Random,
    Dist,
}

fn load_config(global: &Global) -> anyhow::Result<PipelineConfig> {
    let path = global
        .config
        .as_deref()
        .ok_or_else(|| twinsynth::Error::Config("this command needs --config".into()))?;
    let mut cfg = PipelineConfig::load(path)?;
    cfg.apply_overrides(&global.overrides)?;
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    cfg.validate_paths()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

#[derive(Serialize)]
struct StageSummary<'a> {
    stage: &'a str,
    records: usize,
    output: PathBuf,
}

fn summary(stage: &str, records: usize, output: PathBuf) -> anyhow::Result<()> {
    log::info!("{stage}: {records} records -> {}", output.display());
    print_json(&StageSummary { stage, records, output })
}

#[derive(Serialize)]
struct FitRow<'a> {
    twin: usize,
    asset_id: &'a str,
    target_file: &'a str,
    epoch: usize,
    attribute: String,
    value: f64,
    loss: f64,
}

#[derive(Serialize)]
struct DistRow<'a> {
    asset_id: &'a str,
    epoch: usize,
    attribute: String,
    value: f64,
    objective: f64,
}

fn read_stage<T: serde::de::DeserializeOwned>(path: &Path, producer: &str) -> anyhow::Result<Vec<T>> {
    if !path.is_file() {
        return Err(twinsynth::Error::Config(format!(
            "{} is missing; run `{producer}` first",
            path.display()
        ))
        .into());
    }
    Ok(read_jsonl(path)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let global = &cli.global;
    match &cli.command {
        Command::SynthTargets { dir, modality, per_asset, size } => {
            let scenario = ScenarioConfig {
                modality: *modality,
                targets_per_asset: *per_asset,
                seed: global.seed.unwrap_or(0),
                render: RenderConfig {
                    image_width: *size,
                    image_height: *size,
                    ..RenderConfig::default()
                },
            };
            let cfg = synth_targets(dir, &scenario)?;
            summary("synth-targets", cfg.assets.len() * per_asset, dir.join("config.toml"))
        }
        Command::Assign => {
            let cfg = load_config(global)?;
            let paths = RunPaths::new(&cfg.output_dir);
            let assets = load_assets(&cfg)?;
            let targets = load_targets(&cfg.targets_dir, &cfg.render)?;
            let records = stage_assign(&cfg, &targets, &assets)?;
            write_jsonl(&paths.targets(), &records)?;
            summary("assign", records.len(), paths.targets())
        }
        Command::Select => {
            let cfg = load_config(global)?;
            let paths = RunPaths::new(&cfg.output_dir);
            let records: Vec<TargetRecord> = read_stage(&paths.targets(), "assign")?;
            let assets = load_assets(&cfg)?;
            let (coresets, _) = stage_select(&cfg, &records, &assets)?;
            write_jsonl(&paths.coreset(), &coresets)?;
            let selected = coresets.iter().map(|c| c.selected.len()).sum();
            summary("select", selected, paths.coreset())
        }
        Command::Fit => {
            let cfg = load_config(global)?;
            let paths = RunPaths::new(&cfg.output_dir);
            let coresets: Vec<ClassCoreset> = read_stage(&paths.coreset(), "select")?;
            let records: Vec<TargetRecord> = read_stage(&paths.targets(), "assign")?;
            let assets = load_assets(&cfg)?;
            let targets = load_targets(&cfg.targets_dir, &cfg.render)?;
            let stale = records.len() != targets.len()
                || records.iter().zip(&targets).any(|(r, t)| r.file != t.file);
            if stale {
                bail!(twinsynth::Error::Config(format!(
                    "{} does not match the images in {}; rerun `assign`",
                    paths.targets().display(),
                    cfg.targets_dir.display()
                )));
            }
            let twins = stage_fit(&cfg, &targets, &coresets, &assets)?;
            write_jsonl(&paths.twins(), &twins)?;
            summary("fit", twins.len(), paths.twins())
        }
        Command::Augment => {
            let cfg = load_config(global)?;
            let paths = RunPaths::new(&cfg.output_dir);
            let twins: Vec<TwinRecord> = read_stage(&paths.twins(), "fit")?;
            let assets = load_assets(&cfg)?;
            let samples = stage_augment(&cfg, &twins)?;
            write_jsonl(&paths.samples(), &samples)?;
            let manifest = stage_render(&cfg, &assets, &twins, &samples, &paths.root)?;
            manifest.write()?;
            summary("augment", manifest.records.len(), paths.manifest())
        }
        Command::Build => {
            let cfg = load_config(global)?;
            let out = build_dataset(&cfg)?;
            summary("build", out.manifest.records.len(), RunPaths::new(&cfg.output_dir).manifest())
        }
        Command::Baseline { kind } => {
            let cfg = load_config(global)?;
            let manifest = match kind {
                BaselineKind::Random => random_baseline(&cfg)?,
                BaselineKind::Dist => dist_baseline(&cfg)?,
            };
            let name = match kind {
                BaselineKind::Random => "baseline random",
                BaselineKind::Dist => "baseline dist",
            };
            summary(name, manifest.records.len(), manifest.root.join(twinsynth::pipeline::MANIFEST_FILE))
        }
        Command::Evaluate { manifest, targets, out } => {
            let (manifest_path, targets_dir) = match (manifest, targets) {
                (Some(m), Some(t)) => (m.clone(), t.clone()),
                (m, t) => {
                    let cfg = load_config(global)?;
                    (
                        m.clone().unwrap_or_else(|| RunPaths::new(&cfg.output_dir).manifest()),
                        t.clone().unwrap_or(cfg.targets_dir),
                    )
                }
            };
            let manifest = DatasetManifest::load(&manifest_path)
                .with_context(|| format!("loading manifest {}", manifest_path.display()))?;
            let report = evaluate(&manifest, &targets_dir)?;
            let out = out.clone().unwrap_or_else(|| manifest.root.join("evaluation.json"));
            write_json_pretty(&out, &report)?;
            log::info!("evaluation written to {}", out.display());
            print_json(&report)
        }
        Command::TraceExport { run, dist, out } => {
            let root = match run {
                Some(r) => r.clone(),
                None => load_config(global)?.output_dir,
            };
            let paths = RunPaths::new(root);
            let mut writer = csv::Writer::from_writer(Vec::new());
            if *dist {
                let trace: Vec<DistTraceEntry> =
                    read_stage(&paths.dist_baseline().join("trace.jsonl"), "baseline --kind dist")?;
                for t in &trace {
                    writer.serialize(DistRow {
                        asset_id: &t.asset_id,
                        epoch: t.epoch,
                        attribute: t.attribute.to_string(),
                        value: t.value,
                        objective: t.objective,
                    })?;
                }
            } else {
                let twins: Vec<TwinRecord> = read_stage(&paths.twins(), "fit")?;
                for t in &twins {
                    for e in &t.fit.trace {
                        writer.serialize(FitRow {
                            twin: t.twin,
                            asset_id: &t.asset_id,
                            target_file: &t.target_file,
                            epoch: e.epoch,
                            attribute: e.attribute.to_string(),
                            value: e.value,
                            loss: e.loss,
                        })?;
                    }
                }
            }
            let bytes = writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
            match out {
                Some(path) => twinsynth::io::write_atomic(path, &bytes)?,
                None => std::io::stdout().lock().write_all(&bytes)?,
            }
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<twinsynth::Error>()) {
        Some(e) => match e.kind() {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        },
        None => 2,
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
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let workers = cli.global.workers;
    match par::with_workers(workers, || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
