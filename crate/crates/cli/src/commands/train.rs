use std::path::PathBuf;

use bridgekit::datasets::read_pairs;
use bridgekit::neural::save_model;
use bridgekit::training::{train_with_progress, write_loss_trace, TrainConfig};

use crate::error::CliError;
use crate::manifest::RunManifest;

pub const MODEL_FILE: &str = "model.bin";
pub const LOSS_FILE: &str = "loss.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(clap::Args)]
pub struct Args {
    /// Pair CSV to train on.
    #[arg(long)]
    data: PathBuf,
    /// `key = value` training configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the model, loss trace and manifest.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(args: &Args, argv: &[String]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("train", argv);
    manifest.input(&args.data)?;
    manifest.input(&args.config)?;
    let mut config = TrainConfig::read(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let data = read_pairs(&args.data)?;
    manifest.seed(config.seed);
    for (k, v) in config.to_pairs() {
        manifest.set(&k, v);
    }

    let output = train_with_progress(&data, &config, |iter, loss| {
        eprintln!(
            "iter {iter:>7}  total {:.6e}  regression {:.6e}  regularization {:.6e}",
            loss.total, loss.regression, loss.regularization
        );
    })?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    let model = args.out.join(MODEL_FILE);
    let loss = args.out.join(LOSS_FILE);
    save_model(&model, &output.bundle())?;
    write_loss_trace(&loss, &output.trace)?;
    manifest.output(&model);
    manifest.output(&loss);
    manifest.write(&args.out.join(MANIFEST_FILE))
}
