use std::collections::BTreeMap;
use std::path::PathBuf;

use bridgekit::datasets::read_pairs;

use crate::cloud::Table;
use crate::error::{write_file, CliError};
use crate::manifest::{manifest_path_for, RunManifest};
use crate::svg::{render, Scene};

#[derive(clap::Args)]
pub struct Args {
    /// Trajectory CSV from `sample`.
    #[arg(long)]
    traj: PathBuf,
    /// Pair CSV whose x0 to x1 matchings are drawn.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn not_2d(what: &str, d: usize) -> CliError {
    CliError::Data(format!(
        "plotting requires 2-D data; {what} has dimension {d}"
    ))
}

fn read_trajectories(table: &Table, what: &str) -> Result<Vec<Vec<[f64; 2]>>, CliError> {
    if table.header.is_empty() {
        return Ok(Vec::new());
    }
    let coords = table.indexed_columns("x_");
    if coords.len() != 2 {
        return Err(not_2d(what, coords.len()));
    }
    let id = table
        .column("traj_id")
        .ok_or_else(|| CliError::Data(format!("{what} has no traj_id column")))?;
    let step = table.column("step");
    let mut by_id: BTreeMap<i64, Vec<(f64, [f64; 2])>> = BTreeMap::new();
    for (k, row) in table.rows.iter().enumerate() {
        let order = step.map_or(k as f64, |s| row[s]);
        by_id
            .entry(row[id] as i64)
            .or_default()
            .push((order, [row[coords[0]], row[coords[1]]]));
    }
    Ok(by_id
        .into_values()
        .map(|mut pts| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.into_iter().map(|(_, p)| p).collect()
        })
        .collect())
}

pub fn run(args: &Args, argv: &[String]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("plot", argv);
    manifest.input(&args.traj)?;
    let table = Table::read(&args.traj)?;
    let mut scene = Scene {
        trajectories: read_trajectories(&table, &args.traj.display().to_string())?,
        matchings: vec![],
    };
    if let Some(pairs) = &args.pairs {
        manifest.input(pairs)?;
        let data = read_pairs(pairs)?;
        if data.dim() != 2 {
            return Err(not_2d(&pairs.display().to_string(), data.dim()));
        }
        let (x0, x1) = (data.x0(), data.x1());
        scene.matchings = (0..data.len())
            .map(|i| ([x0[[i, 0]], x0[[i, 1]]], [x1[[i, 0]], x1[[i, 1]]]))
            .collect();
    }
    write_file(&args.out, render(&scene).as_bytes())?;
    manifest.output(&args.out);
    manifest.write(&manifest_path_for(&args.out))
}
