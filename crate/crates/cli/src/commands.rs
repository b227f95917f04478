use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use extremis::eval::{preprocess, run_benchmark, BaselineScores, BenchmarkConfig, Recipe};
use extremis::sim::{random_support, run_rng, sample, support_recovery, RecoveryConfig};
use extremis::{DamexModel, DamexParams, Error, FeatureMatrix, KChoice, MembershipMode};

use crate::{EvalArgs, FitArgs, ModelFlags, RecoverArgs, ScoreArgs, SimulateArgs};

const EXIT_INPUT: u8 = 2;
const EXIT_PARAMETER: u8 = 3;
const EXIT_UNDEFINED: u8 = 4;

/// Maps a failure to the process exit status.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Parameter(_)) => EXIT_PARAMETER,
        Some(Error::UndefinedMetric(_)) => EXIT_UNDEFINED,
        _ => EXIT_INPUT,
    }
}

impl ModelFlags {
    fn params(&self) -> Result<DamexParams> {
        let k: KChoice = self.k.parse()?;
        let mode: MembershipMode = self.mode.parse()?;
        Ok(DamexParams::default()
            .with_k(k)
            .with_epsilon(self.epsilon)
            .with_p(self.p)
            .with_mode(mode))
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path)
        .map_err(Error::from)
        .with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn read_matrix(path: &Path) -> Result<FeatureMatrix> {
    FeatureMatrix::read_csv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a truncated output behind.
fn write_atomic(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut out = BufWriter::new(
            File::create(&tmp)
                .map_err(Error::from)
                .with_context(|| format!("cannot create {}", tmp.display()))?,
        );
        body(&mut out)?;
        out.flush().map_err(Error::from)?;
        std::fs::rename(&tmp, path)
            .map_err(Error::from)
            .with_context(|| format!("cannot write {}", path.display()))
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(path) => write_atomic(path, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            writeln!(out).map_err(Error::from)?;
            Ok(())
        }),
        None => {
            let mut stdout = io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout).map_err(Error::from)?;
            Ok(())
        }
    }
}

pub fn fit(args: FitArgs) -> Result<()> {
    let params = args.model.params()?;
    let train = read_matrix(&args.train)?;
    let model = DamexModel::fit(&train, params)?;
    write_atomic(&args.out, |out| Ok(model.save(out)?))?;

    let rep = model.representation();
    println!(
        "n = {}, d = {}, k = {}, epsilon = {}, p = {}",
        model.n_train(),
        model.d(),
        rep.k(),
        rep.epsilon(),
        params.p
    );
    println!("charged subsets: {}", rep.len());
    println!("total mass: {}", rep.total_mass());
    let counts = subset_counts_by_dimension(&rep.subsets());
    println!("dimension histogram (|alpha|: subsets, mass):");
    for (dim, mass) in rep.dimension_histogram() {
        println!("  {dim:>2}: {}, {mass}", counts[&dim]);
    }
    Ok(())
}

fn subset_counts_by_dimension(subsets: &[extremis::FeatureSubset]) -> std::collections::BTreeMap<usize, usize> {
    let mut counts = std::collections::BTreeMap::new();
    for s in subsets {
        *counts.entry(s.len()).or_insert(0) += 1;
    }
    counts
}

pub fn score(args: ScoreArgs) -> Result<()> {
    let model = DamexModel::load(open(&args.model)?)
        .with_context(|| format!("loading {}", args.model.display()))?;
    let data = read_matrix(&args.input)?;
    let records = model.score_batch(&data)?;
    write_atomic(&args.out, |out| {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["row_index", "score", "radius", "subset"])?;
        for r in &records {
            let subset = r.subset.map(|s| s.to_string()).unwrap_or_default();
            wtr.write_record([r.row.to_string(), r.score.to_string(), r.radius.to_string(), subset])?;
        }
        wtr.flush().map_err(Error::from)?;
        Ok(())
    })
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let mut rng = run_rng(args.seed, 0);
    let spec = random_support(args.d, args.num_subsets, args.w, &mut rng)?;
    let data = sample(&spec, args.n, &mut rng)?;
    write_atomic(&args.out, |out| Ok(data.write_csv(out)?))?;
    if let Some(path) = &args.spec_out {
        write_json(Some(path), &spec)?;
    }
    Ok(())
}

pub fn recover(args: RecoverArgs) -> Result<()> {
    let params = args.model.params()?;
    let cfg = RecoveryConfig {
        d: args.d,
        num_subsets: args.num_subsets,
        n: args.n,
        runs: args.runs,
        w: args.w,
        seed: args.seed,
    };
    let report = support_recovery(&cfg, params)?;
    log::info!("mean |D △ D̂| = {}", report.mean_errors);
    write_json(args.out.as_deref(), &report)
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let recipe: Recipe = args.recipe.parse()?;
    let params = args.model.params()?;
    let sources = args.raw.iter().map(|p| open(p)).collect::<Result<Vec<_>>>()?;
    let mut rng = run_rng(args.seed, 0);
    let data = preprocess(recipe, sources, &mut rng)?;
    log::info!(
        "{recipe}: {} rows, {} features, anomaly rate {:.4}",
        data.n(),
        data.features.d(),
        data.anomaly_rate()
    );
    let baseline = match &args.baseline {
        Some(path) => Some(
            BaselineScores::read_csv(open(path)?)
                .with_context(|| format!("reading {}", path.display()))?,
        ),
        None => None,
    };
    let cfg = BenchmarkConfig {
        runs: args.runs,
        seed: args.seed,
        train_fraction: args.train_fraction,
    };
    let report = run_benchmark(&data, params, &cfg, baseline.as_ref())?;
    write_json(args.out.as_deref(), &report)
}
