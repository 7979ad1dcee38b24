mod config;
mod snapshot;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use tieprobe::dataset::{load_dataset_with, write_pairs};
use tieprobe::embed::{write_vectors, Embedding};
use tieprobe::evaluate::{self, CvSummary};
use tieprobe::experiment::Experiment;
use tieprobe::fusion::enumerate_subsets;
use tieprobe::synth::{generate, write_synth};
use tieprobe::{FeatureTable, Modality, ModalitySet, UserId};

use config::{CliError, Config};
use snapshot::Snapshot;

#[derive(Parser)]
#[command(name = "tieprobe", version, about = "Infer friendships from multimodal social footprints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network with planted friendships.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `synth.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Load raw posts and friendships, filter them and sample labelled pairs
    /// into a snapshot directory.
    Ingest {
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `experiment.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Extract pair features for one or more modalities.
    Features {
        #[arg(long)]
        snapshot: PathBuf,
        /// Modality letters (H, T, I, L, E) or `all`.
        #[arg(long, default_value = "all")]
        modality: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-validate a monomodal attack per requested modality.
    Attack {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        modality: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-validate the confidence-weighted fusion attack.
    Fuse {
        #[arg(long)]
        snapshot: PathBuf,
        /// Modality letters, `all`, or `enumerate` for every non-empty subset.
        #[arg(long, default_value = "all")]
        subset: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-run the content attacks after removing shares of the posts.
    Robustness {
        #[arg(long)]
        snapshot: PathBuf,
        /// Removal percentages.
        #[arg(long, value_delimiter = ',', default_values_t = [10u32, 20, 30, 40, 50])]
        steps: Vec<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for configuration problems, 3 for anything wrong with the data.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<CliError>() {
            return match c {
                CliError::Config(_) => 2,
                CliError::MissingArtifact { .. } => 3,
            };
        }
        if let Some(t) = cause.downcast_ref::<tieprobe::Error>() {
            return if t.is_config() { 2 } else { 3 };
        }
    }
    3
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth { config, out, seed } => synth(config.as_deref(), &out, seed),
        Command::Ingest {
            posts,
            edges,
            out,
            config,
            seed,
        } => ingest(&posts, &edges, &out, config.as_deref(), seed),
        Command::Features {
            snapshot,
            modality,
            seed,
        } => features(&open(&snapshot, seed)?, parse_set(&modality)?),
        Command::Attack {
            snapshot,
            modality,
            seed,
        } => attack(&open(&snapshot, seed)?, parse_set(&modality)?),
        Command::Fuse { snapshot, subset, seed } => fuse(&open(&snapshot, seed)?, &subset),
        Command::Robustness { snapshot, steps, seed } => robustness(&open(&snapshot, seed)?, &steps),
    }
}

fn open(dir: &Path, seed: Option<u64>) -> Result<Snapshot> {
    let mut s = Snapshot::open(dir)?;
    if let Some(seed) = seed {
        s.config.experiment.seed = seed;
    }
    Ok(s)
}

fn parse_set(s: &str) -> Result<ModalitySet> {
    Ok(s.parse::<ModalitySet>()?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn synth(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = Config::load(config)?;
    if let Some(seed) = seed {
        cfg.synth.seed = seed;
    }
    cfg.synth.validate()?;
    let (d, truth) = generate(&cfg.synth)?;
    write_synth(out, &d, &truth)?;
    println!(
        "synthesized {} users, {} posts, {} friendships, {} planted pair signals in {}",
        d.users().len(),
        d.posts().len(),
        d.edges().len(),
        truth.signals.len(),
        out.display()
    );
    Ok(())
}

fn ingest(posts: &Path, edges: &Path, out: &Path, config: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let mut cfg = Config::load(config)?;
    if let Some(seed) = seed {
        cfg.experiment.seed = seed;
    }
    cfg.validate()?;
    let raw = load_dataset_with(posts, edges, cfg.data.n_categories)?;
    let exp = Experiment::prepare(&raw, &cfg.experiment)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::copy(posts, out.join(snapshot::POSTS)).with_context(|| format!("copying {}", posts.display()))?;
    fs::copy(edges, out.join(snapshot::EDGES)).with_context(|| format!("copying {}", edges.display()))?;
    write(&out.join(snapshot::CONFIG), &cfg.to_toml()?)?;
    write_pairs(exp.pairs(), &out.join(snapshot::PAIRS))?;

    let d = exp.dataset();
    let friends = exp.pairs().iter().filter(|p| p.friend).count();
    println!("raw: {} users, {} posts, {} friendships", raw.users().len(), raw.posts().len(), raw.edges().len());
    println!(
        "filtered: {} users, {} posts, {} hashtags, {} tokens, {} friendships",
        d.users().len(),
        d.posts().len(),
        d.index().hashtag_users.len(),
        d.index().token_users.len(),
        d.edges().len()
    );
    println!("pairs: {} friends, {} strangers", friends, exp.pairs().len() - friends);
    for m in Modality::ALL {
        let n = exp.pairs().iter().filter(|p| p.available.contains(m)).count();
        println!("available {} ({}): {n}", m.letter(), m.name());
    }
    Ok(())
}

fn embedding_rows<'a>(embedding: &'a Embedding, ids: &'a [UserId]) -> impl Iterator<Item = (u64, &'a [f64])> {
    ids.iter()
        .enumerate()
        .filter_map(|(i, u)| embedding.vector(i).map(|v| (u.0, v)))
}

fn features(s: &Snapshot, set: ModalitySet) -> Result<()> {
    let cfg = &s.config.experiment;
    let exp = s.experiment()?;
    let dir = s.features_dir()?;
    for m in set.iter() {
        info!("extracting {} features", m.name());
        let table = match m {
            Modality::Location => {
                let loc = exp.location(cfg)?;
                let path = dir.join("embedding_L.csv");
                write_vectors(&path, loc.embedding.dim(), embedding_rows(&loc.embedding, &loc.users))?;
                loc.table
            }
            Modality::Network => {
                let net = exp.network(cfg)?;
                net.split.write_csv(&dir.join("network_split.csv"))?;
                let path = dir.join("embedding_E.csv");
                write_vectors(&path, net.embedding.dim(), embedding_rows(&net.embedding, &net.nodes))?;
                net.table
            }
            _ => exp.feature_table(m, cfg)?,
        };
        let path = s.features_path(m);
        table.write_csv(exp.pairs(), &path)?;
        println!(
            "{} ({}): {} of {} pairs, {} columns -> {}",
            m.letter(),
            m.name(),
            table.available_count(),
            table.len(),
            table.dim(),
            path.display()
        );
    }
    Ok(())
}

fn fold_rows(out: &mut String, experiment: &str, subset: &str, summary: &CvSummary) {
    for (f, a) in summary.fold_aucs.iter().enumerate() {
        let _ = writeln!(out, "{experiment},{subset},{f},{a}");
    }
}

fn attack(s: &Snapshot, set: ModalitySet) -> Result<()> {
    let cfg = &s.config.experiment;
    let exp = s.experiment()?;
    let tables = set
        .iter()
        .map(|m| s.load_table(&exp, m))
        .collect::<Result<Vec<FeatureTable>>>()?;
    let experiment = format!("attack-seed{}", cfg.seed);
    let mut csv = String::from("experiment,subset,fold,auc\n");
    let mut failed = Vec::new();
    for t in &tables {
        let letter = t.modality.letter().to_string();
        let summary = match exp.evaluate_monomodal(t, cfg) {
            Ok(s) => s,
            Err(e) if !e.is_config() => {
                println!("{letter} ({}): not evaluable: {e}", t.modality.name());
                failed.push(letter);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        fold_rows(&mut csv, &experiment, &letter, &summary);
        println!(
            "{letter} ({}): AUC {:.4} ± {:.4} over {} folds, {} pairs",
            t.modality.name(),
            summary.mean,
            summary.std,
            summary.fold_aucs.len(),
            t.available_count()
        );
    }
    let path = s.results_dir()?.join(format!("attack_{set}.csv"));
    write(&path, &csv)?;
    println!("wrote {}", path.display());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(tieprobe::Error::Data(format!("attack failed for {}", failed.join(", "))).into())
    }
}

fn fuse(s: &Snapshot, spec: &str) -> Result<()> {
    let cfg = &s.config.experiment;
    let (name, modalities, subsets) = if spec.eq_ignore_ascii_case("enumerate") {
        ("enumerate".to_string(), ModalitySet::FULL, enumerate_subsets())
    } else {
        let set = parse_set(spec)?;
        (set.to_string(), set, vec![set])
    };
    let exp = s.experiment()?;
    let tables = modalities
        .iter()
        .map(|m| s.load_table(&exp, m))
        .collect::<Result<Vec<FeatureTable>>>()?;
    let report = evaluate::cross_validate_fusion(exp.pairs(), &tables, &subsets, &cfg.evaluation, cfg.seed)?;

    let experiment = format!("fuse-seed{}", cfg.seed);
    let mut folds = String::from("experiment,subset,fold,auc\n");
    let mut summary = String::from("subset,mean_auc,std_auc\n");
    for r in &report.subsets {
        let label = r.subset.to_string();
        match &r.summary {
            Some(sm) => {
                fold_rows(&mut folds, &experiment, &label, sm);
                let _ = writeln!(summary, "{label},{},{}", sm.mean, sm.std);
                println!("{label:<6} AUC {:.4} ± {:.4}", sm.mean, sm.std);
            }
            None => {
                let _ = writeln!(summary, "{label},NA,NA");
                println!("{label:<6} not evaluable");
            }
        }
    }
    fold_rows(&mut folds, &experiment, "BL", &report.baseline);
    println!(
        "fusion over {modalities}: AUC {:.4} ± {:.4}; baseline (plain mean) AUC {:.4} ± {:.4}",
        report.multimodal.mean, report.multimodal.std, report.baseline.mean, report.baseline.std
    );

    let mut scores = String::from("u,v,label,fold");
    for m in Modality::ALL {
        let _ = write!(scores, ",x_{}", m.letter());
    }
    scores.push_str(",s_M,s_BL\n");
    for sc in &report.scores {
        let p = &exp.pairs()[sc.pair];
        let _ = write!(scores, "{},{},{},{}", p.u.0, p.v.0, p.label(), sc.fold);
        for x in sc.posteriors {
            let _ = write!(scores, ",{}", fmt_opt(x));
        }
        let _ = writeln!(scores, ",{},{}", fmt_opt(sc.multimodal), fmt_opt(sc.baseline));
    }

    let dir = s.results_dir()?;
    for (file, text) in [
        (format!("fuse_{name}.csv"), &folds),
        (format!("fuse_{name}_summary.csv"), &summary),
        (format!("fuse_{name}_scores.csv"), &scores),
    ] {
        let path = dir.join(file);
        write(&path, text)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn robustness(s: &Snapshot, steps: &[u32]) -> Result<()> {
    let mut cfg = s.config.experiment.clone();
    cfg.robustness.fractions = steps.iter().map(|&p| p as f64 / 100.0).collect();
    cfg.validate()?;
    let raw = s.raw()?;
    let exp = s.experiment()?;
    let rows = evaluate::robustness_sweep(&raw, exp.pairs(), &cfg)?;
    let mut csv = String::from("fraction,attack,mean_auc,std_auc,runs\n");
    for r in &rows {
        let valid = r.runs.iter().flatten().count();
        let (mean, std) = match r.summary() {
            Some((m, sd)) => (m.to_string(), sd.to_string()),
            None => ("NA".into(), "NA".into()),
        };
        let _ = writeln!(csv, "{},{},{mean},{std},{valid}", r.fraction, r.attack);
        match r.summary() {
            Some((m, sd)) => println!("{:>4.0}% {:<10} AUC {m:.4} ± {sd:.4}", r.fraction * 100.0, r.attack),
            None => println!("{:>4.0}% {:<10} not evaluable", r.fraction * 100.0, r.attack),
        }
    }
    let path = s.results_dir()?.join("robustness.csv");
    write(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}
