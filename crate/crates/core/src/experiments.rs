//! Monte-Carlo comparison of the clustering algorithms.
//!
//! A regime fixes everything except one swept parameter. For each sweep value
//! ("cell") and each repetition a fresh dataset is drawn: new centroids on the
//! sphere, new clean points, new outliers, and one random-initialization draw.
//! Every algorithm and every initialization in that repetition sees the same
//! dataset and the same random starting points.
//!
//! Repetition `r` of cell `i` draws from a generator seeded by
//! `(master_seed, regime, i, r)`, so any repetition can be replayed on its own
//! and results do not depend on thread scheduling.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{initialize, run_from, Algorithm, InitStrategy, RunConfig};
use crate::datagen::{self, Dataset, MixtureConfig, OutlierConfig};
use crate::error::{Error, Result};
use crate::metrics::{centroid_error, confidence_interval, mislabeling_aligned, mislabeling_raw, MeanCi};
use crate::seed::{derive_rng, SimRng};
use crate::stats::Metric;

/// Header of every experiment CSV.
pub const CSV_HEADER: &str =
    "regime,sweep_name,sweep_value,algorithm,init,metric_name,mean,ci_half_width,repetitions,master_seed";

pub const DEFAULT_REPETITIONS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    OutlierVariance,
    Dimension,
    OutlierLocation,
    OutlierProportion,
    Decay,
    L1Demo,
}

impl Regime {
    /// The four outlier regimes run by [`run_regime`].
    pub const SWEEPS: [Regime; 4] = [
        Regime::OutlierVariance,
        Regime::Dimension,
        Regime::OutlierLocation,
        Regime::OutlierProportion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::OutlierVariance => "outlier_variance",
            Regime::Dimension => "dimension",
            Regime::OutlierLocation => "outlier_location",
            Regime::OutlierProportion => "outlier_proportion",
            Regime::Decay => "decay",
            Regime::L1Demo => "l1_demo",
        }
    }

    pub fn sweep_name(self) -> &'static str {
        match self {
            Regime::OutlierVariance => "sigma_out",
            Regime::Dimension => "d",
            Regime::OutlierLocation => "outlier_norm",
            Regime::OutlierProportion => "n_out",
            Regime::Decay => "snr",
            Regime::L1Demo => "sigma",
        }
    }

    /// Stable id mixed into per-repetition seeds.
    fn seed_tag(self) -> u64 {
        match self {
            Regime::OutlierVariance => 1,
            Regime::Dimension => 2,
            Regime::OutlierLocation => 3,
            Regime::OutlierProportion => 4,
            Regime::Decay => 5,
            Regime::L1Demo => 6,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::SWEEPS
            .into_iter()
            .chain([Regime::Decay, Regime::L1Demo])
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "regime",
                    format!("unknown regime {s:?}; valid regimes: outlier_variance, dimension, outlier_location, outlier_proportion"),
                )
            })
    }
}

/// Initialization used by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Random,
    Omniscient,
}

impl InitKind {
    pub fn name(self) -> &'static str {
        match self {
            InitKind::Random => "random",
            InitKind::Omniscient => "omniscient",
        }
    }

    /// Random starts cannot be matched to true labels, so they are scored
    /// after the best relabeling.
    pub fn metric_name(self) -> &'static str {
        match self {
            InitKind::Random => "mp_aligned",
            InitKind::Omniscient => "mp_raw",
        }
    }
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(InitKind::Random),
            "omniscient" => Ok(InitKind::Omniscient),
            _ => Err(Error::invalid("init", format!("unknown initialization {s:?} (expected random or omniscient)"))),
        }
    }
}

/// Full description of one outlier regime run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub regime: Regime,
    pub sweep: Vec<f64>,
    pub repetitions: usize,
    pub inits: Vec<InitKind>,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    /// Mixture parameters; the swept one is overridden per cell.
    pub mixture: MixtureConfig,
    pub outlier_count: usize,
    pub sigma_out: f64,
    /// Distance of the outlier center from the origin, in a random direction.
    pub outlier_norm: f64,
    pub run: RunConfig,
}

impl RegimeSpec {
    /// Default setting of each outlier regime.
    pub fn standard(regime: Regime) -> Result<Self> {
        let base = MixtureConfig {
            k: 4,
            d: 10,
            sigma: 2.0,
            points_per_cluster: 100,
            centroid_radius: 5.0,
            cluster_sizes: None,
        };
        let mut spec = Self {
            regime,
            sweep: Vec::new(),
            repetitions: DEFAULT_REPETITIONS,
            inits: vec![InitKind::Random, InitKind::Omniscient],
            algorithms: Algorithm::ALL.to_vec(),
            master_seed: 0,
            mixture: base,
            outlier_count: 60,
            sigma_out: 10.0,
            outlier_norm: 0.0,
            run: RunConfig::default(),
        };
        match regime {
            Regime::OutlierVariance => {
                spec.sweep = vec![1.0, 5.0, 10.0, 15.0, 20.0];
            }
            Regime::Dimension => {
                spec.sweep = vec![2.0, 5.0, 10.0, 15.0, 20.0];
            }
            Regime::OutlierLocation => {
                spec.mixture.sigma = 1.0;
                spec.outlier_count = 40;
                spec.sigma_out = 2.0;
                spec.sweep = vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0];
            }
            Regime::OutlierProportion => {
                spec.sweep = vec![0.0, 20.0, 40.0, 60.0, 80.0];
            }
            Regime::Decay | Regime::L1Demo => {
                return Err(Error::invalid(
                    "regime",
                    format!("{regime} is not an outlier sweep"),
                ))
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !Regime::SWEEPS.contains(&self.regime) {
            return Err(Error::invalid("regime", format!("{} is not an outlier sweep", self.regime)));
        }
        if self.sweep.is_empty() {
            return Err(Error::invalid("sweep", "needs at least one value"));
        }
        if self.repetitions < 2 {
            return Err(Error::invalid("repetitions", "must be at least 2"));
        }
        if self.inits.is_empty() {
            return Err(Error::invalid("inits", "needs at least one initialization"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("algorithms", "needs at least one algorithm"));
        }
        self.run.validate()?;
        for &v in &self.sweep {
            self.cell(v)?;
        }
        Ok(())
    }

    /// Mixture and outlier settings of the cell with sweep value `v`.
    pub fn cell(&self, v: f64) -> Result<(MixtureConfig, usize, f64, f64)> {
        let mut mixture = self.mixture.clone();
        let (mut count, mut sigma_out, mut norm) = (self.outlier_count, self.sigma_out, self.outlier_norm);
        let as_count = |field: &str| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
                Ok(v as usize)
            } else {
                Err(Error::invalid(field, format!("sweep value {v} is not a non-negative integer")))
            }
        };
        match self.regime {
            Regime::OutlierVariance => sigma_out = v,
            Regime::Dimension => mixture.d = as_count("sweep")?,
            Regime::OutlierLocation => norm = v,
            Regime::OutlierProportion => count = as_count("sweep")?,
            Regime::Decay | Regime::L1Demo => unreachable!("checked by validate"),
        }
        mixture.validate()?;
        if !(sigma_out > 0.0 && sigma_out.is_finite()) {
            return Err(Error::invalid("sigma_out", "must be a positive finite number"));
        }
        if !(norm >= 0.0 && norm.is_finite()) {
            return Err(Error::invalid("outlier_norm", "must be a non-negative finite number"));
        }
        Ok((mixture, count, sigma_out, norm))
    }
}

/// One aggregated cell of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub regime: Regime,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub algorithm: String,
    pub init: String,
    pub metric_name: String,
    pub mp: MeanCi,
    pub lambda: Option<MeanCi>,
    pub repetitions: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegimeTable {
    pub rows: Vec<RegimeRow>,
}

impl RegimeTable {
    pub fn find(&self, sweep_value: f64, algorithm: &str, init: &str) -> Option<&RegimeRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == sweep_value && r.algorithm == algorithm && r.init == init)
    }

    /// Writes the table as CSV; each row yields a mislabeling line and, when
    /// available, a `lambda` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            let mut line = |metric: &str, ci: &MeanCi| {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.regime,
                    r.sweep_name,
                    format_sig(r.sweep_value),
                    r.algorithm,
                    r.init,
                    metric,
                    format_sig(ci.mean),
                    format_sig(ci.half_width),
                    r.repetitions,
                    r.master_seed
                )
            };
            line(&r.metric_name, &r.mp)?;
            if let Some(l) = &r.lambda {
                line("lambda", l)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// One human-readable line per row.
    pub fn summary_lines(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let mut s = format!(
                    "{} {}={} {:<11} {:<10} {} = {:.5} ± {:.5}",
                    r.regime,
                    r.sweep_name,
                    format_sig(r.sweep_value),
                    r.algorithm,
                    r.init,
                    r.metric_name,
                    r.mp.mean,
                    r.mp.half_width
                );
                if let Some(l) = &r.lambda {
                    s.push_str(&format!("  lambda = {:.4} ± {:.4}", l.mean, l.half_width));
                }
                s
            })
            .collect()
    }
}

/// Formats `v` with 6 significant digits, like C's `%.6g`.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Scores for one (repetition, init, algorithm).
#[derive(Debug, Clone, Copy)]
struct Sample {
    mp: f64,
    lambda: f64,
}

fn score(ds: &Dataset, labels: &[usize], centroids: &[Vec<f64>], init: InitKind) -> Result<Sample> {
    let k = ds.true_centroids.len();
    let mp = match init {
        InitKind::Omniscient => mislabeling_raw(labels, &ds.truth)?,
        InitKind::Random => mislabeling_aligned(labels, &ds.truth, k)?.mp,
    };
    let delta = datagen::min_separation(&ds.true_centroids)?;
    let lambda = if delta > 0.0 {
        centroid_error(centroids, &ds.true_centroids, delta, k)?.lambda
    } else {
        f64::NAN
    };
    Ok(Sample { mp, lambda })
}

/// Draws the dataset and the random start for one repetition.
fn draw_repetition(spec: &RegimeSpec, value: f64, rng: &mut SimRng) -> Result<(Dataset, Vec<Vec<f64>>)> {
    let (mixture, count, sigma_out, norm) = spec.cell(value)?;
    let clean = datagen::generate_mixture(&mixture, rng)?;
    let center = datagen::outlier_center_at_radius(mixture.d, norm, rng)?;
    let outliers = OutlierConfig {
        count,
        center,
        sigma_out,
    };
    let ds = datagen::inject_outliers(clean, &outliers, rng)?;
    let random_start = initialize(&ds, mixture.k, &InitStrategy::Random, rng)?;
    Ok((ds, random_start))
}

/// Runs every (init, algorithm) pair on one repetition, in spec order.
fn run_repetition(spec: &RegimeSpec, cell: usize, rep: usize) -> Result<Vec<Sample>> {
    let value = spec.sweep[cell];
    let mut rng = derive_rng(spec.master_seed, &[spec.regime.seed_tag(), cell as u64, rep as u64]);
    let (ds, random_start) = draw_repetition(spec, value, &mut rng)?;
    let mut out = Vec::with_capacity(spec.inits.len() * spec.algorithms.len());
    for &init in &spec.inits {
        let start = match init {
            InitKind::Random => &random_start,
            InitKind::Omniscient => &ds.true_centroids,
        };
        for &algo in &spec.algorithms {
            let res = run_from(&ds.points, algo.spec(), start.clone(), &spec.run)?;
            out.push(score(&ds, &res.labels, &res.centroids, init)?);
        }
    }
    Ok(out)
}

/// Runs one of the four outlier regimes.
pub fn run_regime(spec: &RegimeSpec) -> Result<RegimeTable> {
    spec.validate()?;
    let reps = spec.repetitions;
    let jobs: Vec<(usize, usize)> = (0..spec.sweep.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let samples: Vec<Vec<Sample>> = jobs
        .par_iter()
        .map(|&(c, r)| run_repetition(spec, c, r))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (cell, &value) in spec.sweep.iter().enumerate() {
        let block = &samples[cell * reps..(cell + 1) * reps];
        let mut slot = 0;
        for &init in &spec.inits {
            for &algo in &spec.algorithms {
                let mp: Vec<f64> = block.iter().map(|s| s[slot].mp).collect();
                let lambda: Vec<f64> = block.iter().map(|s| s[slot].lambda).collect();
                rows.push(RegimeRow {
                    regime: spec.regime,
                    sweep_name: spec.regime.sweep_name().into(),
                    sweep_value: value,
                    algorithm: algo.name().into(),
                    init: init.name().into(),
                    metric_name: init.metric_name().into(),
                    mp: confidence_interval(&mp)?,
                    lambda: Some(confidence_interval(&lambda)?),
                    repetitions: reps,
                    master_seed: spec.master_seed,
                });
                slot += 1;
            }
        }
    }
    Ok(RegimeTable { rows })
}

fn expect_regime(spec: &RegimeSpec, regime: Regime) -> Result<RegimeTable> {
    if spec.regime != regime {
        return Err(Error::invalid(
            "regime",
            format!("expected {regime}, got {}", spec.regime),
        ));
    }
    run_regime(spec)
}

/// Outlier spread swept at fixed d = 10, sigma = 2, 60 centered outliers.
pub fn run_regime_outlier_variance(spec: &RegimeSpec) -> Result<RegimeTable> {
    expect_regime(spec, Regime::OutlierVariance)
}

/// Dimension swept with 60 outliers from N(0, 10^2 I).
pub fn run_regime_dimension(spec: &RegimeSpec) -> Result<RegimeTable> {
    expect_regime(spec, Regime::Dimension)
}

/// Outlier-center distance swept; the direction is redrawn every repetition.
pub fn run_regime_outlier_location(spec: &RegimeSpec) -> Result<RegimeTable> {
    expect_regime(spec, Regime::OutlierLocation)
}

/// Number of outliers swept.
pub fn run_regime_outlier_proportion(spec: &RegimeSpec) -> Result<RegimeTable> {
    expect_regime(spec, Regime::OutlierProportion)
}

/// Fraction of clean points whose nearest true centroid under `metric` is not
/// their own. Ties go to the lower cluster index.
pub fn true_centroid_mislabeling(ds: &Dataset, metric: Metric) -> Result<f64> {
    let labels = crate::algorithms::label_step(&ds.points, &ds.true_centroids, metric)?;
    mislabeling_raw(&labels, &ds.truth)
}

/// Two-cluster comparison of ℓ1 and ℓ2 labeling at the true centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1DemoSpec {
    pub repetitions: usize,
    pub seed: u64,
    pub centroids: Vec<Vec<f64>>,
    pub sigma: f64,
    pub points_per_cluster: usize,
}

impl L1DemoSpec {
    pub fn new(repetitions: usize, seed: u64) -> Self {
        Self {
            repetitions,
            seed,
            centroids: vec![vec![-5.0, 6.0], vec![5.0, -6.0]],
            sigma: 10.0,
            points_per_cluster: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1DemoResult {
    pub mp_l1: MeanCi,
    pub mp_l2: MeanCi,
    pub repetitions: usize,
    pub seed: u64,
    pub sigma: f64,
}

impl L1DemoResult {
    pub fn to_table(&self) -> RegimeTable {
        let row = |algorithm: &str, mp: MeanCi| RegimeRow {
            regime: Regime::L1Demo,
            sweep_name: Regime::L1Demo.sweep_name().into(),
            sweep_value: self.sigma,
            algorithm: algorithm.into(),
            init: "true_centroids".into(),
            metric_name: "mp_raw".into(),
            mp,
            lambda: None,
            repetitions: self.repetitions,
            master_seed: self.seed,
        };
        RegimeTable {
            rows: vec![row("l1_labeling", self.mp_l1), row("l2_labeling", self.mp_l2)],
        }
    }
}

pub fn run_l1_demo(spec: &L1DemoSpec) -> Result<L1DemoResult> {
    if spec.repetitions < 100 {
        return Err(Error::invalid("repetitions", "the demo needs at least 100 repetitions"));
    }
    if spec.centroids.len() < 2 {
        return Err(Error::invalid("centroids", "need at least 2 centroids"));
    }
    if spec.sigma.is_nan() || spec.sigma <= 0.0 || spec.points_per_cluster == 0 {
        return Err(Error::invalid("sigma", "sigma and points_per_cluster must be positive"));
    }
    let sizes = vec![spec.points_per_cluster; spec.centroids.len()];
    let pairs: Vec<(f64, f64)> = (0..spec.repetitions)
        .into_par_iter()
        .map(|r| {
            let mut rng = derive_rng(spec.seed, &[Regime::L1Demo.seed_tag(), 0, r as u64]);
            let ds = datagen::mixture_around(&spec.centroids, &sizes, spec.sigma, &mut rng)?;
            Ok((
                true_centroid_mislabeling(&ds, Metric::L1)?,
                true_centroid_mislabeling(&ds, Metric::L2)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (l1, l2): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(L1DemoResult {
        mp_l1: confidence_interval(&l1)?,
        mp_l2: confidence_interval(&l2)?,
        repetitions: spec.repetitions,
        seed: spec.seed,
        sigma: spec.sigma,
    })
}

/// Mislabeling against SNR for two antipodal clusters without outliers.
///
/// Centroids sit at `±(snr·sigma)·e_1`, so the separation is exactly
/// `2·snr·sigma`. Each repetition is scored both for the iterated algorithms
/// (started at the true centroids) and for labeling by the true centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    pub snrs: Vec<f64>,
    pub d: usize,
    pub sigma: f64,
    pub points_per_cluster: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub run: RunConfig,
}

impl Default for DecaySpec {
    fn default() -> Self {
        Self {
            snrs: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            d: 1,
            sigma: 1.0,
            points_per_cluster: 500,
            repetitions: 2000,
            master_seed: 0,
            algorithms: vec![Algorithm::KMediansHybrid],
            run: RunConfig::default(),
        }
    }
}

/// Algorithm label for the no-iteration baseline in decay tables.
pub const TRUE_CENTROID_LABELING: &str = "true_centroids";

impl DecaySpec {
    pub fn validate(&self) -> Result<()> {
        if self.snrs.is_empty() {
            return Err(Error::invalid("snrs", "needs at least one value"));
        }
        if self.snrs.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("snrs", "values must be positive"));
        }
        if self.d == 0 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be a positive finite number"));
        }
        if self.points_per_cluster == 0 {
            return Err(Error::invalid("points_per_cluster", "must be at least 1"));
        }
        if self.repetitions < 2 {
            return Err(Error::invalid("repetitions", "must be at least 2"));
        }
        self.run.validate()
    }

    pub fn centroids(&self, snr: f64) -> Vec<Vec<f64>> {
        let half = snr * self.sigma;
        let mut a = vec![0.0; self.d];
        let mut b = vec![0.0; self.d];
        a[0] = half;
        b[0] = -half;
        vec![a, b]
    }
}

pub fn run_decay_curve(spec: &DecaySpec) -> Result<RegimeTable> {
    spec.validate()?;
    let reps = spec.repetitions;
    let jobs: Vec<(usize, usize)> = (0..spec.snrs.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    // per repetition: true-centroid MP, then (mp, lambda) for each algorithm
    let samples: Vec<Vec<Sample>> = jobs
        .par_iter()
        .map(|&(cell, r)| {
            let snr = spec.snrs[cell];
            let centroids = spec.centroids(snr);
            let mut rng = derive_rng(spec.master_seed, &[Regime::Decay.seed_tag(), cell as u64, r as u64]);
            let ds = datagen::mixture_around(&centroids, &[spec.points_per_cluster; 2], spec.sigma, &mut rng)?;
            let mut out = vec![Sample {
                mp: true_centroid_mislabeling(&ds, Metric::L2)?,
                lambda: 0.0,
            }];
            for &algo in &spec.algorithms {
                let res = run_from(&ds.points, algo.spec(), centroids.clone(), &spec.run)?;
                out.push(score(&ds, &res.labels, &res.centroids, InitKind::Omniscient)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (cell, &snr) in spec.snrs.iter().enumerate() {
        let block = &samples[cell * reps..(cell + 1) * reps];
        let names = std::iter::once(TRUE_CENTROID_LABELING).chain(spec.algorithms.iter().map(|a| a.name()));
        for (slot, name) in names.enumerate() {
            let mp: Vec<f64> = block.iter().map(|s| s[slot].mp).collect();
            let lambda = if slot == 0 {
                None
            } else {
                let l: Vec<f64> = block.iter().map(|s| s[slot].lambda).collect();
                Some(confidence_interval(&l)?)
            };
            rows.push(RegimeRow {
                regime: Regime::Decay,
                sweep_name: Regime::Decay.sweep_name().into(),
                sweep_value: snr,
                algorithm: name.into(),
                init: InitKind::Omniscient.name().into(),
                metric_name: InitKind::Omniscient.metric_name().into(),
                mp: confidence_interval(&mp)?,
                lambda,
                repetitions: reps,
                master_seed: spec.master_seed,
            });
        }
    }
    Ok(RegimeTable { rows })
}

/// Least-squares slope of `ln(mp)` against `snr^2`, using only points with
/// `mp` in `[1e-4, 1e-1]`. `None` with fewer than two usable points.
pub fn decay_slope(points: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, mp)| (1e-4..=1e-1).contains(mp))
        .map(|&(snr, mp)| (snr * snr, mp.ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `(snr, mean mp)` pairs for one algorithm of a decay table.
pub fn decay_points(table: &RegimeTable, algorithm: &str) -> Vec<(f64, f64)> {
    table
        .rows
        .iter()
        .filter(|r| r.algorithm == algorithm)
        .map(|r| (r.sweep_value, r.mp.mean))
        .collect()
}
