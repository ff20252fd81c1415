use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "crosslid", version, about = "LID and CrossLID metrics for comparing sample sets")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Neighborhood size.
    #[arg(long, global = true, default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..))]
    pub k: u64,
    /// Reference batch size for the batched protocol.
    #[arg(long, global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch_size: u64,
    /// Worker threads; all cores when unset.
    #[arg(long, global = true, env = "CROSSLID_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Progress notes on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean self-LID of a dataset.
    Lid {
        #[arg(long)]
        input: PathBuf,
    },
    /// CrossLID of the real set measured in the generated set.
    Crosslid {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        /// Search all of the generated set instead of per-query batches.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 20_000)]
        max_real: usize,
        #[arg(long, default_value_t = 20_000)]
        max_generated: usize,
    },
    /// Per-class deviation factors and the oversampling plan.
    Modewise {
        #[command(flatten)]
        real: LabeledInput,
        #[arg(long)]
        generated: PathBuf,
        /// Oversampling size parameter.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 20_000)]
        max_per_class: usize,
        #[arg(long, default_value_t = 20_000)]
        max_generated: usize,
    },
    /// Write synthetic data as NPY.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Run a perturbation sweep and emit one record per grid point and seed.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Frechet distance between Gaussian fits of two sets.
    Frechet {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Exponentiated mean KL divergence of class-probability rows to their marginal.
    Klscore {
        #[arg(long)]
        probs: PathBuf,
    },
}

/// A real set with class labels, embedded as a CSV column or in a sidecar file.
#[derive(Debug, Args)]
#[command(group(ArgGroup::new("label_source").required(true).args(["labels_column", "labels"])))]
pub struct LabeledInput {
    #[arg(long = "real")]
    pub path: PathBuf,
    /// Zero-based CSV column holding class ids.
    #[arg(long)]
    pub labels_column: Option<usize>,
    /// File with one class id per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

/// Like [`LabeledInput`] but read from `--input`.
#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input_labels").required(true).args(["labels_column", "labels"])))]
pub struct LabeledSource {
    #[arg(long = "input")]
    pub path: PathBuf,
    #[arg(long)]
    pub labels_column: Option<usize>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Isotropic Gaussian mixture; labels go to `<out stem>.labels.csv`.
    Mixture {
        /// Mode means, `;` between modes and `,` between coordinates.
        #[arg(long, conflicts_with_all = ["modes", "d"])]
        means: Option<Means>,
        /// Number of random modes when `--means` is absent.
        #[arg(long, requires = "d")]
        modes: Option<usize>,
        /// Dimension of random modes.
        #[arg(long)]
        d: Option<usize>,
        /// Random means are drawn uniformly from `[-spread, spread]^d`.
        #[arg(long, default_value_t = 10.0)]
        spread: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Uniform points in a centered ball.
    Ball {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero-pad, rotate in a coordinate plane, then translate.
    Transform {
        #[arg(long)]
        input: PathBuf,
        /// Output dimension; the input dimension when unset.
        #[arg(long)]
        ambient_d: Option<usize>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        translation: Vec<f64>,
        /// Rotation angle in degrees.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        angle: f64,
        #[arg(long, default_value = "0,1")]
        plane: Pair<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep `n` unique samples of `c` classes, resampled to `total` rows.
    ModeDrop {
        #[command(flatten)]
        input: LabeledSource,
        #[arg(long)]
        n_unique: usize,
        #[arg(long)]
        classes: usize,
        /// Output rows; the input size when unset.
        #[arg(long)]
        total: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Perturb a fraction of the coordinates of every row.
    Noise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
        kind: NoiseArg,
        #[arg(long)]
        fraction: f64,
        #[command(flatten)]
        params: NoiseParams,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    SaltPepper,
}

/// Noise parameters; unset values take the command's defaults.
#[derive(Debug, Clone, Args)]
pub struct NoiseParams {
    /// Gaussian noise mean.
    #[arg(long, allow_hyphen_values = true)]
    pub location: Option<f64>,
    /// Gaussian noise standard deviation.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Clamp Gaussian-perturbed values to `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub clamp: Option<Pair<f64>>,
    /// Salt-and-pepper low value.
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// Salt-and-pepper high value.
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
}

/// Sweep inputs: the bundled preset unless `--real` and `--generated` are given.
#[derive(Debug, Args)]
pub struct SweepInputs {
    #[arg(long, requires = "generated")]
    pub real: Option<PathBuf>,
    #[arg(long, requires = "real")]
    pub generated: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCommon {
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    /// Any of crosslid, frechet, kl_score.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricArg>>,
    /// Report zero timings and skip warm-up, for byte-stable output.
    #[arg(long)]
    pub no_timing: bool,
    /// Exact neighbor search instead of the batched protocol.
    #[arg(long, conflicts_with = "batched")]
    pub exact: bool,
    /// Force the batched protocol.
    #[arg(long)]
    pub batched: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Crosslid,
    Frechet,
    #[value(name = "kl_score", alias = "kl-score")]
    KlScore,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Inter- or intra-class mode dropping on a labeled source.
    ModeDrop {
        #[arg(long, value_enum)]
        kind: DropArg,
        /// Grid of `c` (inter) or `n` (intra) values.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Unique samples per class for the inter-class sweep.
        #[arg(long, default_value_t = 50)]
        n_unique: usize,
        /// Labeled real set; the preset when unset.
        #[arg(long, requires_all = ["source", "labels_column"])]
        real: Option<PathBuf>,
        /// Labeled source to perturb.
        #[arg(long, requires = "real")]
        source: Option<PathBuf>,
        /// CSV column holding class ids in both files.
        #[arg(long)]
        labels_column: Option<usize>,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Coordinate noise at increasing fractions.
    Noise {
        #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
        kind: NoiseArg,
        #[arg(long, value_delimiter = ',', default_value = "0,0.02,0.1,0.25,0.5,1")]
        fractions: Vec<f64>,
        #[command(flatten)]
        params: NoiseParams,
        #[command(flatten)]
        inputs: SweepInputs,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Batched CrossLID at several neighborhood sizes.
    KSweep {
        #[arg(long, value_delimiter = ',', default_value = "20,50,100,200")]
        ks: Vec<usize>,
        #[command(flatten)]
        inputs: SweepInputs,
        #[arg(long)]
        no_timing: bool,
    },
    /// Both sets subsampled to each size.
    SampleSize {
        #[arg(long, value_delimiter = ',', default_value = "5000,10000,15000,20000,25000")]
        sizes: Vec<usize>,
        #[command(flatten)]
        inputs: SweepInputs,
        #[command(flatten)]
        common: SweepCommon,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DropArg {
    Inter,
    Intra,
}

/// Mode means parsed from `x,y;x,y`.
#[derive(Debug, Clone)]
pub struct Means(pub Vec<Vec<f64>>);

impl FromStr for Means {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(';')
            .map(|mode| {
                mode.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}")))
                    .collect()
            })
            .collect::<Result<_, _>>()
            .map(Means)
    }
}

/// Two comma-separated values.
#[derive(Debug, Clone, Copy)]
pub struct Pair<T>(pub T, pub T);

impl<T: FromStr> FromStr for Pair<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(',').ok_or("expected two comma-separated values")?;
        let parse = |v: &str| v.trim().parse::<T>().map_err(|e| format!("'{v}': {e}"));
        Ok(Pair(parse(a)?, parse(b)?))
    }
}
