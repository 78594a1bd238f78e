//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input or usage, 3 when a single
//! clustering run stops at the iteration cap, 4 for filesystem failures.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::algorithms::{initialize, run_from, Algorithm, ClusteringResult, InitStrategy, RunConfig};
use crate::config::{CliConfig, Manifest};
use crate::datagen::{self, Dataset, MixtureConfig, OutlierConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    decay_points, decay_slope, run_decay_curve, run_l1_demo, run_regime, DecaySpec, InitKind, L1DemoSpec, Regime,
    RegimeSpec, RegimeTable, TRUE_CENTROID_LABELING,
};
use crate::io;
use crate::metrics::{mislabeling_aligned, mislabeling_raw, MAX_MATCH_K};
use crate::seed::rng_from_seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_ITERATION_CAP: i32 = 3;
pub const EXIT_IO: i32 = 4;

const DEFAULT_SEED: u64 = 0;
const DEMO_REPETITIONS: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "robust-kmedians", version, about = "Robust k-medians clustering and outlier experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo repetitions per sweep cell.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// kmeans, kmedians-l1 or hybrid.
    #[arg(long, global = true)]
    algo: Option<Algorithm>,
    /// random or omniscient.
    #[arg(long, global = true)]
    init: Option<InitKind>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Print the resolved configuration to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a contaminated mixture and write it as CSV.
    Generate(MixtureArgs),
    /// Run one clustering algorithm on a dataset file.
    Cluster(ClusterArgs),
    /// Run an outlier regime: outlier_variance, dimension, outlier_location or outlier_proportion.
    Regime(RegimeArgs),
    /// Compare l1 and l2 labeling at the true centroids of two clusters.
    Demo(DemoArgs),
    /// Mislabeling against SNR for two antipodal clusters.
    Decay(DecayArgs),
}

#[derive(Debug, Args)]
struct MixtureArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "points-per-cluster")]
    points_per_cluster: Option<usize>,
    #[arg(long = "centroid-radius")]
    centroid_radius: Option<f64>,
    /// Number of outliers.
    #[arg(long = "n-out")]
    n_out: Option<usize>,
    #[arg(long = "sigma-out")]
    sigma_out: Option<f64>,
    /// Distance of the outlier center from the origin.
    #[arg(long = "outlier-norm")]
    outlier_norm: Option<f64>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Dataset CSV.
    data: PathBuf,
    /// Centroid CSV used for omniscient starts; defaults to `<data stem>.centroids.csv`.
    #[arg(long)]
    centroids: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct RegimeArgs {
    name: String,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "points-per-cluster")]
    points_per_cluster: Option<usize>,
}

#[derive(Debug, Args)]
struct DecayArgs {
    /// Comma-separated SNR values.
    #[arg(long, value_delimiter = ',')]
    snrs: Option<Vec<f64>>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "points-per-cluster")]
    points_per_cluster: Option<usize>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    if let Some(jobs) = cli.common.jobs {
        if jobs == 0 {
            return Err(Error::invalid("jobs", "must be at least 1"));
        }
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let file = match &cli.common.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    let ctx = Context {
        seed: cli.common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        run: resolve_run(&cli.common, &file)?,
        common: cli.common,
        file,
    };
    std::fs::create_dir_all(&ctx.common.out)?;
    match cli.command {
        Command::Generate(a) => cmd_generate(&ctx, &a),
        Command::Cluster(a) => cmd_cluster(&ctx, &a),
        Command::Regime(a) => cmd_regime(&ctx, &a),
        Command::Demo(a) => cmd_demo(&ctx, &a),
        Command::Decay(a) => cmd_decay(&ctx, &a),
    }
}

struct Context {
    common: Common,
    file: CliConfig,
    seed: u64,
    run: RunConfig,
}

impl Context {
    fn repetitions(&self, default: usize) -> usize {
        self.common.reps.or(self.file.repetitions).unwrap_or(default)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.common.out.join(name)
    }

    fn log<T: Serialize>(&self, manifest: &Manifest<T>) -> Result<()> {
        if self.common.verbose > 0 {
            eprintln!("{}", serde_json::to_string_pretty(manifest)?);
        }
        Ok(())
    }
}

fn resolve_run(common: &Common, file: &CliConfig) -> Result<RunConfig> {
    let mut run = file.run.resolve();
    if let Some(v) = common.eps {
        run.eps = v;
    }
    if let Some(v) = common.max_iter {
        run.max_iter = v;
    }
    run.validate()?;
    Ok(run)
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_table(ctx: &Context, name: &str, table: &RegimeTable) -> Result<()> {
    write_with(&ctx.path(name), |w| table.write_csv(w))?;
    for line in table.summary_lines() {
        println!("{line}");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct GenerateConfig {
    mixture: MixtureConfig,
    outliers: Option<OutlierConfig>,
    /// Set when the outlier center was drawn at this distance in a random direction.
    outlier_norm: Option<f64>,
}

fn cmd_generate(ctx: &Context, a: &MixtureArgs) -> Result<i32> {
    let mut mixture = MixtureConfig::default();
    ctx.file.mixture.apply(&mut mixture);
    if let Some(v) = a.k {
        mixture.k = v;
    }
    if let Some(v) = a.d {
        mixture.d = v;
    }
    if let Some(v) = a.sigma {
        mixture.sigma = v;
    }
    if let Some(v) = a.points_per_cluster {
        mixture.points_per_cluster = v;
    }
    if let Some(v) = a.centroid_radius {
        mixture.centroid_radius = v;
    }
    mixture.validate()?;

    let o = &ctx.file.outliers;
    let count = a.n_out.or(o.count).unwrap_or(0);
    let sigma_out = a.sigma_out.or(o.sigma_out).unwrap_or(10.0);
    let norm = a.outlier_norm.or(if o.center.is_some() { None } else { o.center_norm });
    let explicit = if a.outlier_norm.is_some() { None } else { o.center.clone() };

    let mut rng = rng_from_seed(ctx.seed);
    let mut ds = datagen::generate_mixture(&mixture, &mut rng)?;
    let mut outliers = None;
    if count > 0 {
        let center = match (explicit, norm) {
            (Some(c), _) => c,
            (None, Some(r)) => datagen::outlier_center_at_radius(mixture.d, r, &mut rng)?,
            (None, None) => vec![0.0; mixture.d],
        };
        let cfg = OutlierConfig {
            count,
            center,
            sigma_out,
        };
        cfg.validate(mixture.d)?;
        ds = datagen::inject_outliers(ds, &cfg, &mut rng)?;
        outliers = Some(cfg);
    }

    let manifest = Manifest::new(
        "generate",
        ctx.seed,
        vec!["dataset.csv".into(), "dataset.centroids.csv".into()],
        GenerateConfig {
            mixture,
            outliers,
            outlier_norm: norm.filter(|_| count > 0),
        },
    );
    ctx.log(&manifest)?;
    write_with(&ctx.path("dataset.csv"), |w| io::write_dataset(&ds, w))?;
    write_with(&ctx.path("dataset.centroids.csv"), |w| io::write_centroids(&ds.true_centroids, w))?;
    manifest.write(&ctx.path("dataset.manifest.json"))?;

    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
    eprintln!(
        "n = {}, delta = {}, snr = {}, alpha = {:.6}",
        ds.len(),
        fmt(ds.delta()),
        fmt(ds.snr()),
        ds.alpha()
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ClusterConfig {
    dataset: String,
    centroids: Option<String>,
    k: usize,
    algorithm: Algorithm,
    init: InitKind,
    run: RunConfig,
}

#[derive(Debug, Serialize)]
struct ClusterOutput<'a> {
    algorithm: Algorithm,
    init: InitKind,
    k: usize,
    seed: u64,
    /// Raw mislabeling for omniscient starts, aligned for random starts.
    mislabeling: Option<f64>,
    result: &'a ClusteringResult,
}

fn sibling_centroids(data: &Path) -> PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data.with_file_name(format!("{stem}.centroids.csv"))
}

fn cmd_cluster(ctx: &Context, a: &ClusterArgs) -> Result<i32> {
    let algorithm = ctx.common.algo.or(ctx.file.cluster.algorithm).unwrap_or(Algorithm::KMediansHybrid);
    let init = ctx.common.init.or(ctx.file.cluster.init).unwrap_or(InitKind::Omniscient);

    let mut ds = io::read_dataset_file(&a.data)?;
    let centroid_path = a.centroids.clone().or_else(|| {
        let p = sibling_centroids(&a.data);
        p.exists().then_some(p)
    });
    if let Some(p) = &centroid_path {
        let c = io::read_centroids_file(p)?;
        ds = Dataset::new(ds.points, ds.truth, c)?;
    }
    let k = a
        .k
        .or(ctx.file.cluster.k)
        .or((!ds.true_centroids.is_empty()).then_some(ds.true_centroids.len()))
        .ok_or_else(|| Error::invalid("k", "not given and no centroid file found"))?;

    let strategy = match init {
        InitKind::Random => InitStrategy::Random,
        InitKind::Omniscient => InitStrategy::Omniscient,
    };
    let mut rng = rng_from_seed(ctx.seed);
    let start = initialize(&ds, k, &strategy, &mut rng)?;
    let result = run_from(&ds.points, algorithm.spec(), start, &ctx.run)?;

    let in_range = ds.truth.iter().filter_map(|t| t.cluster()).all(|h| h < k);
    let mislabeling = match init {
        _ if !in_range => None,
        InitKind::Omniscient => mislabeling_raw(&result.labels, &ds.truth).ok(),
        InitKind::Random if k <= MAX_MATCH_K => mislabeling_aligned(&result.labels, &ds.truth, k).ok().map(|x| x.mp),
        InitKind::Random => None,
    };

    let name = format!("result_{}.json", algorithm.name());
    let manifest = Manifest::new(
        "cluster",
        ctx.seed,
        vec![name.clone()],
        ClusterConfig {
            dataset: a.data.display().to_string(),
            centroids: centroid_path.map(|p| p.display().to_string()),
            k,
            algorithm,
            init,
            run: ctx.run,
        },
    );
    ctx.log(&manifest)?;
    let out = ClusterOutput {
        algorithm,
        init,
        k,
        seed: ctx.seed,
        mislabeling,
        result: &result,
    };
    write_with(&ctx.path(&name), |w| {
        serde_json::to_writer_pretty(&mut *w, &out)?;
        writeln!(w)?;
        Ok(())
    })?;
    manifest.write(&ctx.path(&format!("result_{}.manifest.json", algorithm.name())))?;

    let mp = mislabeling.map_or_else(|| "n/a".to_string(), |m| format!("{m:.6}"));
    println!(
        "{} ({}): iterations = {}, converged = {}, mislabeling = {mp}",
        algorithm,
        init.name(),
        result.iterations,
        result.converged
    );
    if result.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("stopped at the iteration cap ({})", ctx.run.max_iter);
        Ok(EXIT_ITERATION_CAP)
    }
}

fn cmd_regime(ctx: &Context, a: &RegimeArgs) -> Result<i32> {
    let regime: Regime = a.name.parse()?;
    if !Regime::SWEEPS.contains(&regime) {
        return Err(Error::invalid(
            "regime",
            format!("{regime} has its own subcommand; valid regimes: outlier_variance, dimension, outlier_location, outlier_proportion"),
        ));
    }
    let mut spec = RegimeSpec::standard(regime)?;
    ctx.file.mixture.apply(&mut spec.mixture);
    let r = &ctx.file.regime;
    if let Some(v) = &r.sweep {
        spec.sweep = v.clone();
    }
    if let Some(v) = &r.inits {
        spec.inits = v.clone();
    }
    if let Some(v) = &r.algorithms {
        spec.algorithms = v.clone();
    }
    if let Some(v) = r.outlier_count {
        spec.outlier_count = v;
    }
    if let Some(v) = r.sigma_out {
        spec.sigma_out = v;
    }
    if let Some(v) = r.outlier_norm {
        spec.outlier_norm = v;
    }
    if let Some(v) = &a.sweep {
        spec.sweep = v.clone();
    }
    if let Some(v) = ctx.common.init {
        spec.inits = vec![v];
    }
    if let Some(v) = ctx.common.algo {
        spec.algorithms = vec![v];
    }
    spec.repetitions = ctx.repetitions(spec.repetitions);
    spec.master_seed = ctx.seed;
    spec.run = ctx.run;
    spec.validate()?;

    let csv = format!("regime_{regime}.csv");
    let manifest = Manifest::new(format!("regime {regime}"), ctx.seed, vec![csv.clone()], &spec);
    ctx.log(&manifest)?;
    let table = run_regime(&spec)?;
    write_table(ctx, &csv, &table)?;
    manifest.write(&ctx.path(&format!("regime_{regime}.manifest.json")))?;
    Ok(EXIT_OK)
}

fn cmd_demo(ctx: &Context, a: &DemoArgs) -> Result<i32> {
    let mut spec = L1DemoSpec::new(ctx.repetitions(DEMO_REPETITIONS), ctx.seed);
    let d = &ctx.file.demo;
    if let Some(v) = a.sigma.or(d.sigma) {
        spec.sigma = v;
    }
    if let Some(v) = a.points_per_cluster.or(d.points_per_cluster) {
        spec.points_per_cluster = v;
    }
    if let Some(v) = &d.centroids {
        spec.centroids = v.clone();
    }
    let manifest = Manifest::new("demo", ctx.seed, vec!["l1_demo.csv".into()], &spec);
    ctx.log(&manifest)?;
    let res = run_l1_demo(&spec)?;
    write_with(&ctx.path("l1_demo.csv"), |w| res.to_table().write_csv(w))?;
    manifest.write(&ctx.path("l1_demo.manifest.json"))?;
    for (name, ci) in [("l1", res.mp_l1), ("l2", res.mp_l2)] {
        println!(
            "{name} labeling: mp = {:.4} ± {:.4} (se {:.5}, {} reps)",
            ci.mean, ci.half_width, ci.std_error, res.repetitions
        );
    }
    Ok(EXIT_OK)
}

fn cmd_decay(ctx: &Context, a: &DecayArgs) -> Result<i32> {
    let mut spec = DecaySpec {
        master_seed: ctx.seed,
        run: ctx.run,
        ..DecaySpec::default()
    };
    let f = &ctx.file.decay;
    if let Some(v) = a.snrs.as_ref().or(f.snrs.as_ref()) {
        spec.snrs = v.clone();
    }
    if let Some(v) = a.d.or(f.d) {
        spec.d = v;
    }
    if let Some(v) = a.sigma.or(f.sigma) {
        spec.sigma = v;
    }
    if let Some(v) = a.points_per_cluster.or(f.points_per_cluster) {
        spec.points_per_cluster = v;
    }
    if let Some(v) = &f.algorithms {
        spec.algorithms = v.clone();
    }
    if let Some(v) = ctx.common.algo {
        spec.algorithms = vec![v];
    }
    spec.repetitions = ctx.repetitions(spec.repetitions);
    spec.validate()?;

    let manifest = Manifest::new("decay", ctx.seed, vec!["decay.csv".into()], &spec);
    ctx.log(&manifest)?;
    let table = run_decay_curve(&spec)?;
    write_table(ctx, "decay.csv", &table)?;
    manifest.write(&ctx.path("decay.manifest.json"))?;
    let names = std::iter::once(TRUE_CENTROID_LABELING).chain(spec.algorithms.iter().map(|a| a.name()));
    for name in names {
        match decay_slope(&decay_points(&table, name)) {
            Some(s) => println!("{name}: slope of ln(mp) on snr^2 = {s:.4}"),
            None => println!("{name}: too few points with mp in [1e-4, 1e-1] to fit a slope"),
        }
    }
    Ok(EXIT_OK)
}
