use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use palette_search::crc::{build_confidences, ConfidenceProvider, CrcWeights, FileProvider, MockProvider, RemoteProvider};
use palette_search::dataset::{
    generate_synthetic, load_bundle, Channel, DatasetBundle, Split, SynthConfig, CONFIDENCE_FILE, SYNTH_CONFIG_FILE,
};
use palette_search::nn::{load_checkpoint, save_checkpoint, FusionParameters, ModelConfig};
use palette_search::palette::{extract_directory, write_palette_file, PaletteConfig};
use palette_search::service::{serve, warm_index, AppState};
use palette_search::train::{evaluate, model_config_for, prepare_z, train_from, AdamConfig, LossMode, TrainConfig};

#[derive(Parser)]
#[command(version, about = "Palette-aware text-to-image retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    File,
    Mock,
    Remote,
}

#[derive(Subcommand)]
enum Command {
    /// Extract palette queries from masked image regions.
    ExtractPalette {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        theta_cluster: Option<f64>,
        #[arg(long)]
        theta_min: Option<f64>,
        #[arg(long)]
        theta_cum: Option<f64>,
        #[arg(long)]
        max_colors: Option<usize>,
        /// Accepted for interface stability; extraction is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a synthetic bundle with planted concept structure.
    GenSynth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 704)]
        records: usize,
        #[arg(long, default_value_t = 32)]
        concepts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        neighbor_pairs: usize,
    },
    /// Load a bundle, check it, and print a summary.
    ValidateBundle { dir: PathBuf },
    /// Prefilter candidates, score them with a provider, and store the confidences.
    BuildConfidence {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value_t = 30)]
        n_cand: usize,
        #[arg(long, value_enum, default_value = "mock")]
        provider: ProviderKind,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Remote provider URL.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value_t = 8)]
        parallelism: usize,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
    /// Train the fusion model and save the best-validation checkpoint.
    Train {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 1e-5)]
        lr: f64,
        #[arg(long, default_value_t = 0.7)]
        lambda_up: f64,
        #[arg(long, default_value_t = 0.7)]
        lambda_n: f64,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "crc")]
        loss: LossMode,
        #[arg(long, default_value_t = 30)]
        n_cand: usize,
        #[arg(long, default_value_t = 1024)]
        d: usize,
        #[arg(long, default_value_t = 8)]
        heads: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long)]
        palette_positions: bool,
        /// Per-epoch log; defaults to `<out>.history.jsonl`.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Report MRR and recall@K of a checkpoint on one split.
    Eval {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        k: Vec<usize>,
    },
    /// Serve the search API (and a UI bundle, if given).
    Serve {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        images: Option<PathBuf>,
        /// Directory with the built web client.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::ExtractPalette { images, masks, out, theta_cluster, theta_min, theta_cum, max_colors, seed: _ } => {
            let d = PaletteConfig::default();
            let config = PaletteConfig {
                theta_cluster: theta_cluster.unwrap_or(d.theta_cluster),
                theta_min: theta_min.unwrap_or(d.theta_min),
                theta_cum: theta_cum.unwrap_or(d.theta_cum),
                max_colors: max_colors.unwrap_or(d.max_colors),
                ..d
            };
            let lines = extract_directory(&images, &masks, &config)?;
            write_palette_file(&out, &lines)?;
            println!("{} palettes written to {}", lines.len(), out.display());
        }
        Command::GenSynth { out, records, concepts, seed, dim, noise, neighbor_pairs } => {
            let config = SynthConfig {
                n_records: records,
                n_concepts: concepts,
                seed,
                default_dim: dim,
                noise_sigma: noise,
                neighbor_pairs,
                ..Default::default()
            };
            let bundle = generate_synthetic(&config)?;
            bundle.save(&out)?;
            serde_json::to_writer_pretty(File::create(out.join(SYNTH_CONFIG_FILE))?, &config)?;
            println!("{} records, {} confidences written to {}", bundle.num_records(), bundle.confidences.len(), out.display());
        }
        Command::ValidateBundle { dir } => {
            let bundle = load_bundle(&dir).with_context(|| format!("loading {}", dir.display()))?;
            summarize(&bundle);
        }
        Command::BuildConfidence { bundle: dir, n_cand, provider, theta, endpoint, parallelism, timeout_secs } => {
            let bundle = load_bundle(&dir)?;
            let provider: Box<dyn ConfidenceProvider> = match provider {
                ProviderKind::File => Box::new(FileProvider::new(&bundle.confidences)),
                ProviderKind::Mock => Box::new(MockProvider::new(&bundle, &synth_neighbors(&dir)?)),
                ProviderKind::Remote => {
                    let Some(url) = endpoint else { bail!("--provider remote needs --endpoint") };
                    Box::new(RemoteProvider::new(url, Duration::from_secs(timeout_secs))?)
                }
            };
            let records = build_confidences(&bundle, provider.as_ref(), n_cand, parallelism)?;
            DatasetBundle::save_confidences(&dir.join(CONFIDENCE_FILE), &records)?;
            let eligible = records.iter().filter(|r| r.c >= theta).count();
            println!("{} confidences written, {eligible} with c >= {theta}", records.len());
        }
        Command::Train {
            bundle: dir,
            out,
            epochs,
            batch,
            lr,
            lambda_up,
            lambda_n,
            theta,
            seed,
            loss,
            n_cand,
            d,
            heads,
            depth,
            palette_positions,
            history,
        } => {
            let bundle = load_bundle(&dir)?;
            let base = ModelConfig { d, heads, depth, palette_positions, seed, ..Default::default() };
            let config = TrainConfig {
                optimizer: AdamConfig { lr, ..Default::default() },
                batch,
                epochs,
                seed,
                weights: CrcWeights { lambda_up, lambda_n },
                loss,
                model: model_config_for(&bundle, &base)?,
                ..Default::default()
            };
            let z = prepare_z(&bundle, n_cand, theta)?;
            log::info!("|Z| = {} at theta {theta}", z.len());
            let history = history.unwrap_or_else(|| with_suffix(&out, ".history.jsonl"));
            let mut log = BufWriter::new(File::create(&history)?);
            let mut write_err = None;
            let outcome = train_from(FusionParameters::init(&config.model)?, &bundle, &z, &config, |e| {
                let line = serde_json::to_string(e).expect("epoch log serializes");
                if let Err(err) = writeln!(log, "{line}") {
                    write_err.get_or_insert(err);
                }
            })?;
            log.flush()?;
            if let Some(err) = write_err {
                return Err(anyhow::Error::from(err).context(format!("writing {}", history.display())));
            }
            save_checkpoint(&outcome.best, &out)?;
            println!("best epoch {} saved to {} (history in {})", outcome.best_epoch, out.display(), history.display());
        }
        Command::Eval { bundle, ckpt, split, k } => {
            let bundle = load_bundle(&bundle)?;
            let params = load_checkpoint::<f32>(&ckpt)?;
            let report = evaluate(&params, &bundle, split, &k)?;
            print!("{:?}: mrr {:.4}", report.split, report.mrr);
            for (k, r) in &report.recall_at {
                print!("  recall@{k} {r:.4}");
            }
            println!();
        }
        Command::Serve { bundle, ckpt, port, images, static_dir, split, host } => {
            let index = warm_index(load_bundle(&bundle)?, load_checkpoint(&ckpt)?, split)?;
            log::info!("index warmed: {} images", index.len());
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(serve(AppState::new(index, images), SocketAddr::new(host, port), static_dir))?;
        }
    }
    Ok(())
}

fn summarize(bundle: &DatasetBundle) {
    let count = |s| bundle.split_indices(s).len();
    println!("records: {} (train {}, val {}, test {})", bundle.num_records(), count(Split::Train), count(Split::Val), count(Split::Test));
    println!("images: {}", bundle.num_images());
    for ch in Channel::ALL {
        match bundle.dim(ch) {
            Some(d) => println!("  {:<14} dim {d}", ch.name()),
            None => println!("  {:<14} absent", ch.name()),
        }
    }
    println!("confidences: {}", bundle.confidences.len());
}

/// Neighbor concept pairs of a generated bundle, if its generator config is present.
fn synth_neighbors(dir: &Path) -> Result<Vec<(u32, u32)>> {
    let path = dir.join(SYNTH_CONFIG_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let config: SynthConfig = serde_json::from_reader(File::open(&path)?).with_context(|| format!("reading {}", path.display()))?;
    Ok(config.neighbor_list())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
