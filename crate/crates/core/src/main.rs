use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use antids::dataset::{self, ClassLabel, FeatureSet, Sample};
use antids::engine::{ItemData, Role};
use antids::experiment::config::parse_grid;
use antids::experiment::export::{read_positions, render_maps, to_json, write_pgm};
use antids::experiment::{export_artifacts, run_experiment, ExperimentConfig, MarkerPlacement, Mode};
use antids::habitat::Dims;
use antids::{Error, Result};

/// Ant-colony clustering of connection records with k-NN labelling.
#[derive(Parser)]
#[command(name = "antids", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split, scale and project raw connection records into train/test CSVs.
    Prepare(Overrides),
    /// Write a synthetic data set as train/test CSVs.
    Synth(Overrides),
    /// Run one clustering experiment as configured (synthetic by default).
    Cluster(Overrides),
    /// All test items on one grid with all markers.
    RunA(Overrides),
    /// Test items in batches, each on a fresh grid with all markers.
    RunB(Overrides),
    /// Render a positions table as item and role graymaps.
    Render {
        /// Positions CSV written by a run.
        positions: PathBuf,
        #[arg(long)]
        grid: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args, Default)]
struct Overrides {
    /// TOML configuration file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    features: Option<FeatureSet>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Grid size as WxH.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum)]
    placement: Option<MarkerPlacement>,
    /// Number of colony steps.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    ants: Option<usize>,
    /// Neighbors consulted by the classifier (odd).
    #[arg(long)]
    k: Option<usize>,
    /// "geometric" or a comma-separated list of steps.
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Raw connection records.
    #[arg(long)]
    kdd: Option<PathBuf>,
    /// Prepared marker CSV.
    #[arg(long, requires = "test")]
    train: Option<PathBuf>,
    /// Prepared test CSV.
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,
}

impl Overrides {
    fn resolve(self, mode: Option<Mode>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(seed => seed, features => features, batch_size => batch_size,
             placement => marker_placement, steps => steps, snapshots => snapshots,
             out => out, k => k);
        if self.grid.is_some() {
            cfg.grid = self.grid;
        }
        if self.ants.is_some() {
            cfg.ants = self.ants;
        }
        if self.kdd.is_some() {
            cfg.kdd_path = self.kdd;
        }
        if self.train.is_some() {
            cfg.train_path = self.train;
            cfg.test_path = self.test;
        }
        if let Some(mode) = mode {
            cfg.mode = mode;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn write_split(cfg: &ExperimentConfig, header: &[&str], train: &[Sample], test: &[Sample]) -> Result<()> {
    create_dir(&cfg.out)?;
    dataset::write_samples(create(&cfg.out.join("train.csv"))?, header, train)?;
    dataset::write_samples(create(&cfg.out.join("test.csv"))?, header, test)?;
    write(&cfg.out.join("config.toml"), &cfg.to_toml())?;
    println!(
        "wrote {} markers and {} test samples to {}",
        train.len(),
        test.len(),
        cfg.out.display()
    );
    Ok(())
}

fn prepare(cfg: ExperimentConfig) -> Result<()> {
    let path = cfg
        .kdd_path
        .clone()
        .ok_or_else(|| Error::Config("prepare needs --kdd".into()))?;
    let file = File::open(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    let records = dataset::parse_kdd(BufReader::new(file))?;
    let data = dataset::prepare(&records, cfg.split_counts(), cfg.features, cfg.seed)?;
    write_split(&cfg, &data.feature_set.header(), &data.train, &data.test)?;
    write(&cfg.out.join("split.json"), &to_json(&data.counts))
}

fn synth(cfg: ExperimentConfig) -> Result<()> {
    let items = dataset::generate_synthetic(&cfg.synthetic(), cfg.seed)?;
    let sample = |i: &ItemData| Sample {
        features: i.features.clone(),
        class: i.true_class.and_then(ClassLabel::from_value).expect("validated class count"),
    };
    let pick = |role| items.iter().filter(|i| i.role == role).map(sample).collect::<Vec<_>>();
    let names: Vec<String> = (1..=cfg.synth_dims).map(|d| format!("f{d}")).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    write_split(&cfg, &header, &pick(Role::Marker), &pick(Role::Test))
}

fn run(cfg: ExperimentConfig) -> Result<()> {
    let exp = run_experiment(&cfg)?;
    export_artifacts(&cfg.out, &exp)?;
    for b in &exp.report.batches {
        let acc = b.evaluation.as_ref().map(|e| e.overall_accuracy * 100.0);
        println!(
            "batch {:>2}: {} markers + {} tests on {}x{}, entropy {:.4}, accuracy {}",
            b.index,
            b.n_markers,
            b.n_test,
            b.grid[0],
            b.grid[1],
            b.final_entropy,
            acc.map_or("n/a".into(), |a| format!("{a:.2}%"))
        );
    }
    if let Some(agg) = &exp.report.aggregate {
        for (label, acc) in (1..).zip(agg.per_class_accuracy) {
            let name = ClassLabel::from_value(label).map_or("?", ClassLabel::name);
            match acc {
                Some(a) => println!("  {name:<7} {:6.2}%", a * 100.0),
                None => println!("  {name:<7}    n/a"),
            }
        }
        println!("  overall {:6.2}%", agg.overall_accuracy * 100.0);
    }
    println!("artifacts in {}", cfg.out.display());
    Ok(())
}

fn render(positions: &Path, grid: &str, out: &Path) -> Result<()> {
    let (w, h) = parse_grid(grid)?;
    let dims = Dims::new(w, h)?;
    let file = File::open(positions).map_err(|e| Error::Io { path: positions.into(), source: e })?;
    let rows = read_positions(BufReader::new(file))?;
    let (items, roles) = render_maps(&rows, dims)?;
    create_dir(out)?;
    write_pgm(create(&out.join("items.pgm"))?, dims, &items)?;
    write_pgm(create(&out.join("roles.pgm"))?, dims, &roles)?;
    println!("rendered {} items to {}", rows.len(), out.display());
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Prepare(o) => prepare(o.resolve(None)?),
        Command::Synth(o) => synth(o.resolve(Some(Mode::Synthetic))?),
        Command::Cluster(o) => run(o.resolve(None)?),
        Command::RunA(o) => run(o.resolve(Some(Mode::AntidsA))?),
        Command::RunB(o) => run(o.resolve(Some(Mode::AntidsB))?),
        Command::Render { positions, grid, out } => render(&positions, &grid, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("antids: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
