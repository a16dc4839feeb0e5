use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use chemoclass::dataset::{synth_spectra, SynthConfig};
use chemoclass::harness::{emit_table, parse_spec, preset, run_benchmark_detailed, PipelineSpec, PresetOptions};
use chemoclass::reduce::{pca_fit, Components};
use chemoclass::SpectraDataset;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

const OUT_DIR_ENV: &str = "CHEMOCLASS_OUT_DIR";

#[derive(Parser)]
#[command(name = "chemoclass", version, about = "Classification benchmarks for NIR spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labelled spectra CSV.
    Gen(GenArgs),
    /// Benchmark pipelines over repeated stratified splits.
    Run(RunArgs),
    /// Export plot data (PC scores or long-format spectra).
    Export(ExportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u32).range(1..))]
    n_per_class: u32,
    /// Number of wavelengths.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(2..))]
    p: u32,
    /// Number of classes.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
    k: u32,
    /// Informative wavelength indices (default: five evenly spaced).
    #[arg(long, value_delimiter = ',')]
    informative: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
    #[arg(long, default_value_t = 0.01)]
    noise_sd: f64,
    #[arg(long, default_value_t = 2.0)]
    bump_width: f64,
    #[arg(long, default_value_t = 0.05)]
    drift_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Preset {
    Table2,
    PlsOnly,
    Fast,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Self::Table2 => "table2",
            Self::PlsOnly => "pls-only",
            Self::Fast => "fast",
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Labelled spectra CSV (header `label,w_1,...,w_p`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Extra pipeline such as `pls:15`, `lda+pca` or `knn+mr:10`; repeatable.
    #[arg(long = "spec")]
    specs: Vec<String>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    splits: Option<u32>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pls_components: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    mr_count: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    ga_top: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    fpc_scores: Option<u32>,
    #[arg(long)]
    pca_target: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportKind {
    Pcs,
    Spectra,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    what: ExportKind,
    /// Principal components to export with `--what pcs`.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    ncomp: u32,
    #[arg(long)]
    out: PathBuf,
}

/// Settings of a `run`, as read from `--config` and echoed in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    data: Option<PathBuf>,
    preset: Option<String>,
    specs: Vec<String>,
    n_splits: usize,
    fraction: f64,
    seed: u64,
    out_dir: PathBuf,
    threads: Option<usize>,
    options: PresetOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            preset: None,
            specs: Vec::new(),
            n_splits: 100,
            fraction: 0.5,
            seed: 0,
            out_dir: PathBuf::from("results"),
            threads: None,
            options: PresetOptions::default(),
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Export(args) => cmd_export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let (p, k) = (args.p as usize, args.k as usize);
    let informative = args
        .informative
        .unwrap_or_else(|| (1..=5).map(|i| i * p / 6).filter(|&j| j < p).collect());
    let config = SynthConfig {
        noise_sd: args.noise_sd,
        bump_width: args.bump_width,
        signal: args.signal,
        drift_sd: args.drift_sd,
        ..SynthConfig::new(args.n_per_class as usize, p, k, informative, args.seed)
    };
    let data = synth_spectra(&config).map_err(|e| usage(e.to_string()))?;
    let mut bytes = Vec::new();
    data.write_csv(&mut bytes).context("encoding CSV")?;
    write_file(&args.out, bytes)?;
    println!("n={} p={} k={}", data.n_samples(), data.n_features(), data.n_classes());
    Ok(())
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(d) = &args.data {
        config.data = Some(d.clone());
    }
    if let Some(p) = args.preset {
        config.preset = Some(p.name().to_string());
    }
    config.specs.extend(args.specs.iter().cloned());
    if let Some(v) = args.splits {
        config.n_splits = v as usize;
    }
    if let Some(v) = args.fraction {
        config.fraction = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = &args.out_dir {
        config.out_dir = v.clone();
    }
    if let Some(v) = args.threads {
        config.threads = Some(v as usize);
    }
    let o = &mut config.options;
    if let Some(v) = args.pls_components {
        o.pls_components = v as usize;
    }
    if let Some(v) = args.mr_count {
        o.mr_count = v as usize;
    }
    if let Some(v) = args.ga_top {
        o.ga.top_k = v as usize;
    }
    if let Some(v) = args.fpc_scores {
        o.fpc_scores = v as usize;
    }
    if let Some(v) = args.pca_target {
        o.pca_target = v;
    }
    if config.preset.is_none() && config.specs.is_empty() {
        config.preset = Some("table2".into());
    }
    if config.n_splits == 0 {
        return Err(usage("n_splits must be at least 1"));
    }
    if !(config.fraction > 0.0 && config.fraction < 1.0) {
        return Err(usage(format!("fraction must lie in (0, 1), got {}", config.fraction)));
    }
    if config.threads == Some(0) {
        return Err(usage("threads must be at least 1"));
    }
    Ok(config)
}

fn roster(config: &RunConfig) -> Result<Vec<PipelineSpec>, Failure> {
    let mut specs = match &config.preset {
        Some(name) => preset(name, &config.options).map_err(|e| usage(e.to_string()))?,
        None => Vec::new(),
    };
    for text in &config.specs {
        specs.push(parse_spec(text, &config.options).map_err(|e| usage(e.to_string()))?);
    }
    Ok(specs)
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let config = load_config(&args)?;
    let specs = roster(&config)?;
    let data_path = config.data.clone().ok_or_else(|| usage("--data is required"))?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let data = SpectraDataset::load_csv(&data_path).context("loading data")?;
    let output = run_benchmark_detailed(&data, &specs, config.n_splits, config.fraction, config.seed)
        .context("running benchmark")?;
    let table = emit_table(&output.reports).context("formatting table")?;

    let out = &config.out_dir;
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        class_names: &'a [String],
        n_samples: usize,
        n_features: usize,
        specs: &'a [PipelineSpec],
        #[serde(flatten)]
        output: &'a chemoclass::harness::BenchmarkOutput,
    }
    let report = Report {
        config: &config,
        class_names: data.class_names(),
        n_samples: data.n_samples(),
        n_features: data.n_features(),
        specs: &specs,
        output: &output,
    };
    write_file(&out.join("report.json"), serde_json::to_string_pretty(&report).context("encoding report")?)?;
    write_file(&out.join("table.csv"), &table.csv)?;
    write_file(&out.join("table.txt"), &table.text)?;
    for r in &output.reports {
        if let Some(m) = &r.last_split_confusion {
            write_file(&out.join("confusion").join(format!("{}.csv", slug(&r.label))), m.to_csv(data.class_names()))?;
        }
    }
    for (i, run) in output.ga_runs.iter().enumerate() {
        if let Some(o) = &run.outcome {
            write_file(&out.join(format!("ga_{i}_trace.csv")), o.trace_csv())?;
            let subset = o.subset.to_json(data.grid()).context("encoding GA subset")?;
            write_file(&out.join(format!("ga_{i}_subset.json")), subset)?;
        }
    }
    print!("{}", table.text);
    let failed = output.reports.iter().filter(|r| r.has_failures()).count();
    if failed > 0 {
        eprintln!("{failed} pipeline(s) recorded failures; see report.json");
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), Failure> {
    let data = SpectraDataset::load_csv(&args.data).context("loading data")?;
    let names = data.class_names();
    let mut text = String::new();
    match args.what {
        ExportKind::Pcs => {
            let m = args.ncomp as usize;
            let limit = data.n_samples().min(data.n_features());
            if m > limit {
                return Err(usage(format!("--ncomp must be at most {limit} for this dataset")));
            }
            let pca = pca_fit(data.absorbances(), Components::Fixed(m)).context("fitting PCA")?;
            let scores = pca.transform(data.absorbances()).context("projecting spectra")?;
            for j in 1..=m {
                let _ = write!(text, "PC{j},");
            }
            text.push_str("label\n");
            for (i, &label) in data.labels().iter().enumerate() {
                for j in 0..m {
                    let _ = write!(text, "{},", scores[(i, j)]);
                }
                let _ = writeln!(text, "{}", names[label]);
            }
        }
        ExportKind::Spectra => {
            text.push_str("sample,label,wavelength,absorbance\n");
            let grid = data.grid().values();
            for (i, &label) in data.labels().iter().enumerate() {
                for (j, w) in grid.iter().enumerate() {
                    let _ = writeln!(text, "{i},{},{w},{}", names[label], data.absorbances()[(i, j)]);
                }
            }
        }
    }
    write_file(&args.out, text)?;
    Ok(())
}
