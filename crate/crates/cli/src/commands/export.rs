use std::path::PathBuf;

use bridgekit::training::export_drift;

use crate::error::CliError;
use crate::manifest::{manifest_path_for, RunManifest};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &Args, argv: &[String]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("export-drift", argv);
    manifest.input(&args.model)?;
    export_drift(&args.model, &args.out)?;
    manifest.output(&args.out);
    manifest.write(&manifest_path_for(&args.out))
}
