use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use noisecascade::dataset::{generate_synthetic, load, load_csv, save, FeatureDataset, SyntheticSpec};
use noisecascade::harness::{
    build_report, diagnose, load_records, prepare_data, run_experiment, DatasetSource,
    DiagnoseOptions, ExperimentConfig, MapRef, NoiseCondition, OUT_ENV,
};
use noisecascade::noise::inject;
use noisecascade::Error;

#[derive(Parser)]
#[command(name = "noisecascade", version, about = "Noise-robust head training on frozen features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic FVF1 feature file.
    Synth(SynthArgs),
    /// Corrupt the labels of a feature file.
    Inject(InjectArgs),
    /// Run an experiment sweep from a JSON config.
    Run(RunArgs),
    /// Loss-overlap, geometry and selection diagnostics under one noise condition.
    Diagnose(DiagnoseArgs),
    /// Aggregate run records into tables.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Isic,
    Balanced,
}

#[derive(Args)]
struct SynthArgs {
    /// Start from a preset; other flags override its fields.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated per-class counts.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    /// Per-class count for the balanced preset.
    #[arg(long, default_value_t = 1000)]
    per_class: usize,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Confusion pairs as `a-b` class indices, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pairs: Option<Vec<String>>,
    #[arg(long)]
    proximity: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    spread: Option<f64>,
    /// Comma-separated class names.
    #[arg(long, value_delimiter = ',')]
    names: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Clean,
    Sym,
    Asym,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, value_enum, default_value_t = Kind::Clean)]
    kind: Kind,
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    /// Built-in map name or `FROM:TO` class-name pairs, comma-separated.
    #[arg(long)]
    map: Option<String>,
}

impl NoiseArgs {
    fn condition(&self) -> NoiseCondition {
        match self.kind {
            Kind::Clean => NoiseCondition::clean(),
            Kind::Sym => NoiseCondition::symmetric(self.rate),
            Kind::Asym => {
                let mut c = NoiseCondition::asymmetric(self.rate, "isic8");
                c.map = self.map.as_deref().map(parse_map);
                c
            }
        }
    }
}

fn parse_map(s: &str) -> MapRef {
    if !s.contains(':') {
        return MapRef::Builtin(s.to_string());
    }
    MapRef::Pairs(
        s.split(',')
            .filter_map(|p| p.split_once(':'))
            .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
            .collect(),
    )
}

#[derive(Args)]
struct InjectArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the original/observed labels as JSON.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output root; `NOISECASCADE_OUT` takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Monitor early stopping on clean validation labels.
    #[arg(long)]
    clean_val: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory of run records (searched recursively).
    dir: PathBuf,
    /// Where to write report.md and the CSV tables; defaults to `dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_features(path: &Path) -> Result<FeatureDataset> {
    let ds = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        load_csv(path, None)
    } else {
        load(path)
    };
    ds.with_context(|| format!("loading {}", path.display()))
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once('-').with_context(|| format!("pair {s:?} is not a-b"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn synth_spec(a: &SynthArgs) -> Result<SyntheticSpec> {
    let mut spec = match a.preset {
        Some(Preset::Isic) => SyntheticSpec::isic_like(a.seed),
        Some(Preset::Balanced) => SyntheticSpec::balanced_like(a.per_class, a.seed),
        None => {
            let (Some(k), Some(d), Some(counts)) = (a.k, a.d, a.counts.clone()) else {
                bail!("--k, --d and --counts are required without --preset");
            };
            SyntheticSpec {
                num_classes: k,
                dim: d,
                class_counts: counts,
                centroid_scale: 4.0,
                sigma: 1.0,
                confusion_pairs: Vec::new(),
                proximity_factor: 1.0,
                modes_per_class: 1,
                mode_spread: 0.0,
                class_names: None,
                seed: a.seed,
            }
        }
    };
    if let Some(k) = a.k {
        spec.num_classes = k;
    }
    if let Some(d) = a.d {
        spec.dim = d;
    }
    if let Some(c) = &a.counts {
        spec.class_counts = c.clone();
    }
    if let Some(v) = a.scale {
        spec.centroid_scale = v;
    }
    if let Some(v) = a.sigma {
        spec.sigma = v;
    }
    if let Some(p) = &a.pairs {
        spec.confusion_pairs = p.iter().map(|s| parse_pair(s)).collect::<Result<_>>()?;
    }
    if let Some(v) = a.proximity {
        spec.proximity_factor = v;
    }
    if let Some(v) = a.modes {
        spec.modes_per_class = v;
    }
    if let Some(v) = a.spread {
        spec.mode_spread = v;
    }
    if let Some(n) = &a.names {
        spec.class_names = Some(n.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn print_summary(ds: &FeatureDataset, path: &Path) {
    println!("wrote {} (N={}, d={}, K={})", path.display(), ds.len(), ds.dim(), ds.num_classes());
    for (name, count) in ds.class_names().iter().zip(ds.class_counts()) {
        println!("  {name}: {count}");
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = synth_spec(&a)?;
    let ds = generate_synthetic(&spec)?;
    save(&ds, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    print_summary(&ds, &a.out);
    Ok(())
}

fn cmd_inject(a: InjectArgs) -> Result<()> {
    let ds = load_features(&a.input)?;
    let cond = a.noise.condition();
    let (noisy, rec) = match cond.noise_spec(ds.class_names(), a.seed)? {
        Some(spec) => inject(&ds, &spec)?,
        None => {
            let rec = noisecascade::noise::NoiseRecord::clean(ds.labels());
            (ds, rec)
        }
    };
    save(&noisy, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.record {
        std::fs::write(path, serde_json::to_string(&rec)?)?;
    }
    println!(
        "{}: flipped {} of {} labels ({:.4})",
        cond.label(),
        rec.num_flipped(),
        rec.len(),
        rec.num_flipped() as f64 / rec.len().max(1) as f64
    );
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::from_path(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))?;
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if let Some(e) = a.max_epochs {
        cfg.train.max_epochs = e;
    }
    if let Some(p) = a.patience {
        cfg.train.patience = p;
    }
    if let Some(o) = a.out {
        cfg.output_dir = Some(o);
    }
    cfg.validate()?;
    let root = cfg.output_root();
    if std::env::var_os(OUT_ENV).is_some() {
        log::info!("output root from {OUT_ENV}: {}", root.display());
    }
    match run_experiment(&cfg, &root, a.jobs) {
        Ok(out) => {
            println!("{} runs written to {}", out.records.len(), out.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ Error::RunsFailed { .. }) => {
            eprintln!("error: {e}");
            Ok(ExitCode::FAILURE)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_diagnose(a: DiagnoseArgs) -> Result<()> {
    let mut cfg = ExperimentConfig {
        dataset: DatasetSource::File(a.input.clone()),
        split: Default::default(),
        noise: vec![a.noise.condition()],
        methods: vec![noisecascade::methods::MethodSpec::Ce],
        seeds: vec![a.seed],
        train: Default::default(),
        noisy_val: !a.clean_val,
        output_dir: None,
    };
    if let Some(e) = a.max_epochs {
        cfg.train.max_epochs = e;
    }
    if let Some(p) = a.patience {
        cfg.train.patience = p;
    }
    cfg.validate()?;
    let data = prepare_data(&cfg).with_context(|| format!("loading {}", a.input.display()))?;
    let opts = DiagnoseOptions {
        noise: cfg.noise[0].clone(),
        seed: a.seed,
        train: cfg.train.clone(),
        noisy_val: cfg.noisy_val,
        bins: a.bins,
    };
    let report = diagnose(&data, &opts)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(p) => std::fs::write(p, json)?,
        None => println!("{json}"),
    }
    if let Some(note) = &report.note {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let records = load_records(&a.dir).with_context(|| format!("reading {}", a.dir.display()))?;
    let report = build_report(&records)?;
    let out = a.out.unwrap_or(a.dir);
    std::fs::create_dir_all(&out)?;
    let md = report.to_markdown();
    std::fs::write(out.join("report.md"), &md)?;
    report.write_csvs(&out)?;
    print!("{md}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Synth(a) => cmd_synth(a).map(|_| ExitCode::SUCCESS),
        Command::Inject(a) => cmd_inject(a).map(|_| ExitCode::SUCCESS),
        Command::Run(a) => cmd_run(a),
        Command::Diagnose(a) => cmd_diagnose(a).map(|_| ExitCode::SUCCESS),
        Command::Report(a) => cmd_report(a).map(|_| ExitCode::SUCCESS),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
