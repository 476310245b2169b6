use std::path::{Path, PathBuf};

use bridgekit::datasets::read_pairs;
use bridgekit::neural::load_model;
use bridgekit::rng::NoiseKey;
use bridgekit::sde::{
    simulate_sde, write_trajectories_csv, DiffusivitySchedule, TimeGrid, TrajectoryBatch,
};
use bridgekit::text::push_row;
use ndarray::Array2;

use crate::error::{write_file, CliError};
use crate::manifest::{manifest_path_for, RunManifest};

#[derive(clap::Args)]
pub struct Args {
    /// Model file from `train` or `export-drift`.
    #[arg(long)]
    model: PathBuf,
    /// Pair CSV whose x0 rows start the trajectories.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Independent trajectories per start point.
    #[arg(long, default_value_t = 1)]
    n_poses: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace the model's diffusivity with this constant.
    #[arg(long)]
    g: Option<f64>,
    /// Trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// Endpoint CSV (default: `<out stem>_endpoints.csv` beside `--out`).
    #[arg(long)]
    endpoints: Option<PathBuf>,
}

fn default_endpoints(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_endpoints.csv"))
}

/// `traj_id,pair_id,pose,x_0,...`, one row per trajectory.
fn endpoints_csv(batch: &TrajectoryBatch, n_poses: usize) -> String {
    let ends = batch.endpoints();
    let header: Vec<String> = (0..batch.dim()).map(|j| format!("x_{j}")).collect();
    let mut out = format!("traj_id,pair_id,pose,{}\n", header.join(","));
    for (k, row) in ends.rows().into_iter().enumerate() {
        let mut line = format!("{k},{},{}", k / n_poses, k % n_poses);
        push_row(&mut line, row.iter().copied());
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn run(args: &Args, argv: &[String]) -> Result<(), CliError> {
    if args.steps == 0 || args.n_poses == 0 {
        return Err(CliError::Usage(
            "--steps and --n-poses must be at least 1".into(),
        ));
    }
    let mut manifest = RunManifest::new("sample", argv);
    manifest.seed(args.seed);
    manifest.input(&args.model)?;
    manifest.input(&args.data)?;
    manifest.set("steps", args.steps);
    manifest.set("n_poses", args.n_poses);

    let bundle = load_model(&args.model)?;
    let data = read_pairs(&args.data)?;
    let d = bundle.drift.0.spec().state_dim;
    if data.dim() != d {
        return Err(CliError::Data(format!(
            "{} has dimension {} but the model expects {d}",
            args.data.display(),
            data.dim()
        )));
    }
    let schedule = match args.g {
        Some(g) => DiffusivitySchedule::constant(g)?,
        None => bundle.schedule.clone(),
    };
    let (g, breaks) = schedule.to_text();
    manifest.set("g", g);
    manifest.set("g_breakpoints", breaks);

    let n = data.len();
    let mut starts = Array2::zeros((n * args.n_poses, d));
    for i in 0..n {
        for p in 0..args.n_poses {
            starts
                .row_mut(i * args.n_poses + p)
                .assign(&data.x0().row(i));
        }
    }
    let grid = TimeGrid::new(args.steps)?;
    let batch = simulate_sde(
        starts.view(),
        &bundle.drift,
        &schedule,
        &grid,
        NoiseKey::new(args.seed),
    )?;

    let mut traj = Vec::new();
    write_trajectories_csv(&mut traj, &batch, None)
        .map_err(|e| CliError::Data(format!("cannot format trajectories: {e}")))?;
    write_file(&args.out, &traj)?;
    let endpoints = args
        .endpoints
        .clone()
        .unwrap_or_else(|| default_endpoints(&args.out));
    write_file(&endpoints, endpoints_csv(&batch, args.n_poses).as_bytes())?;
    manifest.output(&args.out);
    manifest.output(&endpoints);
    manifest.write(&manifest_path_for(&args.out))
}
