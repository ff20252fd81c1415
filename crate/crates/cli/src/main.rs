mod args;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use serde::Serialize;

use crosslid_core::data::parse_label_lines;
use crosslid_core::presets;
use crosslid_core::sweep::{
    run_k_sweep, run_mode_drop_sweep, run_noise_sweep, run_sample_size_sweep, CentroidClassifier, Metric,
    MetricConfig, ModeDropKind, NoiseKind, SweepOptions, SweepReport, INTER_GRID, INTRA_GRID,
    STREAM_SUBSAMPLE_GENERATED, STREAM_SUBSAMPLE_REAL,
};
use crosslid_core::synth::{
    add_gaussian_noise, add_salt_pepper, embed_and_transform, gaussian_mixture, mode_drop, uniform_ball,
    GaussianNoise, MixtureMode, MixtureSpec, ModeDropSpec,
};
use crosslid_core::{
    crosslid_batched, crosslid_exact, fit_gaussian, frechet_distance, kl_score, load_csv, load_npy,
    modewise_crosslid, oversampling_plan, save_npy, self_lid, BatchSpec, ClassProbabilityMatrix, Error,
    FeatureMatrix, LabeledFeatureSet, ModeWiseConfig, RngSeed,
};

use args::{BenchCommand, Cli, Command, DropArg, Format, Global, MetricArg, NoiseArg, NoiseParams, SweepCommon, SynthCommand};

type Result<T> = std::result::Result<T, Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn usage_error(kind: ErrorKind, message: impl std::fmt::Display) -> ! {
    Cli::command().error(kind, message).exit()
}

struct Ctx<'a> {
    g: &'a Global,
}

impl Ctx<'_> {
    fn k(&self) -> usize {
        self.g.k as usize
    }

    fn seed(&self) -> RngSeed {
        RngSeed(self.g.seed)
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.g.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.g.output {
            Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| Error::io("<stdout>", e))
            }
        }
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        text.push('\n');
        self.emit(&text)
    }

    /// JSON, or CSV built from a header and rows.
    fn emit_table<T: Serialize>(&self, value: &T, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        match self.g.format {
            Format::Json => self.emit_json(value),
            Format::Csv => {
                let mut text = header.join(",");
                text.push('\n');
                for row in rows {
                    text.push_str(&row.join(","));
                    text.push('\n');
                }
                self.emit(&text)
            }
        }
    }

    fn emit_sweep(&self, report: &SweepReport) -> Result<()> {
        match self.g.format {
            Format::Json => {
                let mut text = report.to_json()?;
                text.push('\n');
                self.emit(&text)
            }
            Format::Csv => self.emit(&report.to_csv()?),
        }
    }
}

fn cell(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn load_features(path: &Path) -> Result<FeatureMatrix> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("npy") => load_npy(path),
        Some("csv") => Ok(load_csv(path, None)?.into_parts().0),
        _ => Err(Error::Format(format!("{}: expected a .npy or .csv file", path.display()))),
    }
}

fn load_labeled(path: &Path, labels_column: Option<usize>, labels: Option<&Path>) -> Result<LabeledFeatureSet> {
    match (labels_column, labels) {
        (Some(col), _) => {
            if !is_csv(path) {
                return Err(Error::Format(format!(
                    "{}: --labels-column needs a CSV input",
                    path.display()
                )));
            }
            load_csv(path, Some(col))
        }
        (None, Some(sidecar)) => {
            let features = load_features(path)?;
            let text = fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
            LabeledFeatureSet::new(features, parse_label_lines(&text)?)
        }
        (None, None) => Ok(LabeledFeatureSet::unlabeled(load_features(path)?)),
    }
}

fn labels_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.labels.csv"))
}

fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx { g: &cli.global };
    match &cli.command {
        Command::Lid { input } => {
            let x = load_features(input)?;
            ctx.log(format!("lid: {} x {}, k = {}", x.rows(), x.cols(), ctx.k()));
            let report = self_lid(&x, ctx.k())?;
            ctx.emit_table(
                &report,
                &["mean", "k", "n_queries", "nonfinite_count"],
                vec![vec![
                    cell(report.mean),
                    report.k.to_string(),
                    report.n_queries.to_string(),
                    report.nonfinite_count.to_string(),
                ]],
            )
        }
        Command::Crosslid {
            real,
            generated,
            exact,
            max_real,
            max_generated,
        } => {
            let a = load_features(real)?;
            let b = load_features(generated)?;
            let same = a == b;
            let a = a.subsample(a.rows().min(*max_real), ctx.seed().derive(STREAM_SUBSAMPLE_REAL))?;
            let b = b.subsample(b.rows().min(*max_generated), ctx.seed().derive(STREAM_SUBSAMPLE_GENERATED))?;
            if a.cols() != b.cols() {
                return Err(Error::DimensionMismatch {
                    expected: a.cols(),
                    found: b.cols(),
                });
            }
            let report = if *exact {
                ctx.log(format!("crosslid exact: {} queries, {} refs", a.rows(), b.rows()));
                crosslid_exact(&a, &b, ctx.k(), same && a.rows() == b.rows())?
            } else {
                let spec = BatchSpec::new(ctx.k(), ctx.g.batch_size as usize, ctx.seed());
                ctx.log(format!("crosslid batched: {} queries, batch {}", a.rows(), spec.batch_size));
                crosslid_batched(&a, &b, &spec)?
            };
            if report.warning {
                eprintln!(
                    "warning: {} of {} per-query estimates are non-finite",
                    report.nonfinite_count, report.n_queries
                );
            }
            ctx.emit_table(
                &report,
                &["score", "k", "n_queries", "n_refs", "nonfinite_count"],
                vec![vec![
                    cell(report.score),
                    report.k.to_string(),
                    report.n_queries.to_string(),
                    report.n_refs.to_string(),
                    report.nonfinite_count.to_string(),
                ]],
            )
        }
        Command::Modewise {
            real,
            generated,
            m,
            max_per_class,
            max_generated,
        } => {
            let r = load_labeled(&real.path, real.labels_column, real.labels.as_deref())?;
            let g = load_features(generated)?;
            let config = ModeWiseConfig {
                k: ctx.k(),
                max_per_class: *max_per_class,
                max_generated: *max_generated,
                seed: ctx.seed(),
            };
            ctx.log(format!("modewise: {} classes, {} generated", r.n_classes(), g.rows()));
            let report = modewise_crosslid(&r, &g, &config)?;
            let plan = oversampling_plan(&report, &r, *m, ctx.seed().derive(1 << 32))?;
            let rows = report
                .per_class
                .iter()
                .zip(&report.normalized_gamma)
                .zip(&plan.per_class_counts)
                .map(|((c, norm), count)| {
                    vec![
                        c.class.to_string(),
                        c.n_samples.to_string(),
                        cell(c.self_score),
                        cell(c.cross_score),
                        cell(c.gamma),
                        cell(*norm),
                        count.count.to_string(),
                    ]
                })
                .collect();
            #[derive(Serialize)]
            struct Out<'a> {
                report: &'a crosslid_core::ModeWiseReport,
                plan: &'a crosslid_core::OversamplingPlan,
            }
            ctx.emit_table(
                &Out {
                    report: &report,
                    plan: &plan,
                },
                &["class", "n_samples", "self_score", "cross_score", "gamma", "normalized_gamma", "count"],
                rows,
            )
        }
        Command::Synth(cmd) => synth(&ctx, cmd),
        Command::Bench(cmd) => bench(&ctx, cmd),
        Command::Frechet { a, b } => {
            let value = frechet_distance(&fit_gaussian(&load_features(a)?)?, &fit_gaussian(&load_features(b)?)?)?;
            emit_scalar(&ctx, "frechet", value)
        }
        Command::Klscore { probs } => {
            let p = ClassProbabilityMatrix::new(load_features(probs)?)?;
            emit_scalar(&ctx, "kl_score", kl_score(&p))
        }
    }
}

fn emit_scalar(ctx: &Ctx, metric: &str, value: f64) -> Result<()> {
    #[derive(Serialize)]
    struct Scalar<'a> {
        metric: &'a str,
        value: f64,
    }
    ctx.emit_table(
        &Scalar { metric, value },
        &["metric", "value"],
        vec![vec![metric.to_string(), cell(value)]],
    )
}

fn synth(ctx: &Ctx, cmd: &SynthCommand) -> Result<()> {
    let seed = ctx.seed();
    let written = match cmd {
        SynthCommand::Mixture {
            means,
            modes,
            d,
            spread,
            scale,
            weights,
            n,
            out,
        } => {
            let modes = match (means, modes, d) {
                (Some(means), _, _) => means
                    .0
                    .iter()
                    .map(|mean| MixtureMode {
                        mean: mean.clone(),
                        scale: *scale,
                    })
                    .collect(),
                (None, Some(c), Some(d)) => {
                    presets::random_modes(*c, *d, -spread, *spread, *scale, seed.derive(1))
                }
                _ => usage_error(ErrorKind::MissingRequiredArgument, "mixture needs --means or --modes with --d"),
            };
            let set = gaussian_mixture(&MixtureSpec {
                modes,
                n: *n,
                weights: weights.clone(),
                seed,
            })?;
            let labels = labels_path(out);
            save_npy(set.features(), out)?;
            write_labels(&labels, set.labels())?;
            vec![out.clone(), labels]
        }
        SynthCommand::Ball { d, n, radius, out } => {
            save_npy(&uniform_ball(*d, *n, *radius, seed)?, out)?;
            vec![out.clone()]
        }
        SynthCommand::Transform {
            input,
            ambient_d,
            translation,
            angle,
            plane,
            out,
        } => {
            let x = load_features(input)?;
            let y = embed_and_transform(&x, ambient_d.unwrap_or(x.cols()), translation, *angle, (plane.0, plane.1))?;
            save_npy(&y, out)?;
            vec![out.clone()]
        }
        SynthCommand::ModeDrop {
            input,
            n_unique,
            classes,
            total,
            out,
        } => {
            let set = load_labeled(&input.path, input.labels_column, input.labels.as_deref())?;
            let dropped = mode_drop(
                &set,
                &ModeDropSpec {
                    n_unique_per_class: *n_unique,
                    c_classes: *classes,
                    total: total.unwrap_or(set.len()),
                    seed,
                },
            )?;
            let labels = labels_path(out);
            save_npy(dropped.features(), out)?;
            write_labels(&labels, dropped.labels())?;
            vec![out.clone(), labels]
        }
        SynthCommand::Noise {
            input,
            kind,
            fraction,
            params,
            out,
        } => {
            let x = load_features(input)?;
            let y = match kind {
                NoiseArg::Gaussian => add_gaussian_noise(
                    &x,
                    &GaussianNoise {
                        fraction: *fraction,
                        location: params.location.unwrap_or(0.0),
                        scale: params.scale.unwrap_or(1.0),
                        clamp: params.clamp.map(|p| (p.0, p.1)),
                    },
                    seed,
                )?,
                NoiseArg::SaltPepper => {
                    add_salt_pepper(&x, *fraction, params.lo.unwrap_or(0.0), params.hi.unwrap_or(1.0), seed)?
                }
            };
            save_npy(&y, out)?;
            vec![out.clone()]
        }
    };
    for path in written {
        ctx.log(format!("wrote {}", path.display()));
    }
    Ok(())
}

fn metrics(requested: &Option<Vec<MetricArg>>, default: &[Metric]) -> Vec<Metric> {
    match requested {
        None => default.to_vec(),
        Some(list) => list
            .iter()
            .map(|m| match m {
                MetricArg::Crosslid => Metric::Crosslid,
                MetricArg::Frechet => Metric::Frechet,
                MetricArg::KlScore => Metric::KlScore,
            })
            .collect(),
    }
}

fn sweep_options(ctx: &Ctx, common: &SweepCommon, exact_by_default: bool) -> SweepOptions {
    let exact = common.exact || (exact_by_default && !common.batched);
    SweepOptions {
        config: MetricConfig {
            k: ctx.k(),
            batch_size: (!exact).then_some(ctx.g.batch_size as usize),
        },
        classifier: None,
        disable_timing: common.no_timing,
    }
}

/// Real and generated sets from files, or the preset scene.
fn sweep_pair(
    inputs: &args::SweepInputs,
    preset: impl FnOnce() -> Result<(LabeledFeatureSet, FeatureMatrix)>,
) -> Result<(LabeledFeatureSet, FeatureMatrix, bool)> {
    match (&inputs.real, &inputs.generated) {
        (Some(r), Some(g)) => Ok((LabeledFeatureSet::unlabeled(load_features(r)?), load_features(g)?, false)),
        _ => {
            let (r, g) = preset()?;
            Ok((r, g, true))
        }
    }
}

fn classifier_for(real: &LabeledFeatureSet, labeled: bool, metrics: &[Metric]) -> Result<Option<CentroidClassifier>> {
    if labeled && metrics.contains(&Metric::KlScore) {
        CentroidClassifier::fit(real).map(Some)
    } else {
        Ok(None)
    }
}

fn bench(ctx: &Ctx, cmd: &BenchCommand) -> Result<()> {
    let report = match cmd {
        BenchCommand::ModeDrop {
            kind,
            grid,
            n_unique,
            real,
            source,
            labels_column,
            common,
        } => {
            let (real, source) = match (real, source) {
                (Some(r), Some(s)) => (load_labeled(r, *labels_column, None)?, load_labeled(s, *labels_column, None)?),
                _ => {
                    let scene = presets::mode_drop_scene()?;
                    (scene.real, scene.source)
                }
            };
            let (kind, default_grid) = match kind {
                DropArg::Inter => (ModeDropKind::Inter { n_unique: *n_unique }, &INTER_GRID[..]),
                DropArg::Intra => (ModeDropKind::Intra, &INTRA_GRID[..]),
            };
            let options = sweep_options(ctx, common, kind == ModeDropKind::Intra);
            let metrics = metrics(&common.metrics, &Metric::ALL);
            ctx.log(format!("mode-drop {kind:?}: {} real, {} source", real.len(), source.len()));
            run_mode_drop_sweep(
                &real,
                &source,
                kind,
                grid.as_deref().unwrap_or(default_grid),
                &metrics,
                &common.seeds,
                &options,
            )?
        }
        BenchCommand::Noise {
            kind,
            fractions,
            params,
            inputs,
            common,
        } => {
            let (real, generated, labeled) = sweep_pair(inputs, || {
                let scene = presets::noise_scene()?;
                Ok((scene.real, scene.source.into_parts().0))
            })?;
            let noise = noise_kind(*kind, params);
            let default: &[Metric] = if labeled { &Metric::ALL } else { &[Metric::Crosslid, Metric::Frechet] };
            let metrics = metrics(&common.metrics, default);
            let mut options = sweep_options(ctx, common, false);
            options.classifier = classifier_for(&real, labeled, &metrics)?;
            ctx.log(format!("noise {noise:?}: {} real, {} generated", real.len(), generated.rows()));
            run_noise_sweep(real.features(), &generated, noise, fractions, &metrics, &common.seeds, &options)?
        }
        BenchCommand::KSweep { ks, inputs, no_timing } => {
            let (real, generated, _) = sweep_pair(inputs, || {
                let (r, g) = presets::gaussian_pair(8, 2000, 5000)?;
                Ok((LabeledFeatureSet::unlabeled(r), g))
            })?;
            if let Some(&bad) = ks.iter().find(|&&k| k < 2) {
                usage_error(ErrorKind::ValueValidation, format!("--ks entries must be at least 2, got {bad}"));
            }
            let spec = BatchSpec::new(ctx.k(), (ctx.g.batch_size as usize).min(generated.rows()), ctx.seed());
            let options = SweepOptions {
                disable_timing: *no_timing,
                ..SweepOptions::default()
            };
            ctx.log(format!("k-sweep {ks:?}: batch {}", spec.batch_size));
            run_k_sweep(real.features(), &generated, ks, &spec, &options)?
        }
        BenchCommand::SampleSize { sizes, inputs, common } => {
            let (real, generated, labeled) = sweep_pair(inputs, || {
                let scene = presets::sample_size_scene()?;
                Ok((scene.real, scene.source.into_parts().0))
            })?;
            let default: &[Metric] = if labeled { &Metric::ALL } else { &[Metric::Crosslid, Metric::Frechet] };
            let metrics = metrics(&common.metrics, default);
            let mut options = sweep_options(ctx, common, false);
            options.classifier = classifier_for(&real, labeled, &metrics)?;
            ctx.log(format!("sample-size {sizes:?}"));
            run_sample_size_sweep(real.features(), &generated, sizes, &metrics, &common.seeds, &options)?
        }
    };
    ctx.emit_sweep(&report)
}

/// Bench noise defaults target the pixel-like `[0, 255]` range of the preset.
fn noise_kind(kind: NoiseArg, p: &NoiseParams) -> NoiseKind {
    match kind {
        NoiseArg::Gaussian => NoiseKind::Gaussian {
            location: p.location.unwrap_or(127.5),
            scale: p.scale.unwrap_or(127.5f64.sqrt()),
            clamp: Some(p.clamp.map_or((0.0, 255.0), |c| (c.0, c.1))),
        },
        NoiseArg::SaltPepper => NoiseKind::SaltPepper {
            lo: p.lo.unwrap_or(0.0),
            hi: p.hi.unwrap_or(255.0),
        },
    }
}
