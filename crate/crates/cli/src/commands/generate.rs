use std::path::PathBuf;

use bridgekit::datasets::{generate_gauss_pairs, generate_moon, generate_t, write_pairs};
use bridgekit::rng::seeded;
use clap::ValueEnum;

use crate::error::CliError;
use crate::manifest::{manifest_path_for, RunManifest};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Dataset {
    Moon,
    T,
    GaussPairs,
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    dataset: Dataset,
    /// Number of pairs.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaussian noise std (moon default 0.05, t default 2).
    #[arg(long)]
    noise_std: Option<f64>,
    /// Comma-separated shift for gauss-pairs; its length sets the dimension.
    #[arg(long, value_delimiter = ',', default_value = "3,4")]
    shift: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &Args, argv: &[String]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("generate", argv);
    manifest.seed(args.seed);
    let mut rng = seeded(args.seed);
    let name = args
        .dataset
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string();
    manifest.set("dataset", &name);
    manifest.set("n", args.n);
    let ds = match args.dataset {
        Dataset::Moon => {
            let noise = args.noise_std.unwrap_or(0.05);
            manifest.set("noise_std", format!("{noise:?}"));
            generate_moon(args.n, noise, &mut rng)?
        }
        Dataset::T => {
            let noise = args.noise_std.unwrap_or(2.0);
            manifest.set("noise_std", format!("{noise:?}"));
            generate_t(args.n, noise, &mut rng)?
        }
        Dataset::GaussPairs => {
            if args.noise_std.is_some() {
                return Err(CliError::Usage(
                    "--noise-std does not apply to gauss-pairs".into(),
                ));
            }
            manifest.set("shift", format!("{:?}", args.shift));
            generate_gauss_pairs(args.n, &args.shift, &mut rng)?
        }
    };
    write_pairs(&args.out, &ds)?;
    manifest.output(&args.out);
    manifest.write(&manifest_path_for(&args.out))
}
