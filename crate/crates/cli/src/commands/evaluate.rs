use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use bridgekit::metrics::{mmd, ps_l2, rmsd, sinkhorn_w, SinkhornOptions, DEFAULT_MMD_SCALES};
use bridgekit::text::fmt_f64;
use clap::ValueEnum;
use ndarray::Array2;

use crate::cloud::{read_cloud, CloudSpec};
use crate::error::{write_file, CliError};
use crate::manifest::{manifest_path_for, RunManifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    #[value(name = "mmd")]
    Mmd,
    #[value(name = "w_eps")]
    WEps,
    #[value(name = "rmsd")]
    Rmsd,
    #[value(name = "ps_l2")]
    PsL2,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Mmd => "mmd",
            Metric::WEps => "w_eps",
            Metric::Rmsd => "rmsd",
            Metric::PsL2 => "ps_l2",
        }
    }
}

#[derive(clap::Args)]
pub struct Args {
    /// Predicted cloud: CSV path, with `:x0` or `:x1` for pair files.
    #[arg(long)]
    pred: CloudSpec,
    /// Reference cloud, same syntax as `--pred`.
    #[arg(long = "ref")]
    reference: CloudSpec,
    /// Control cloud for ps_l2 (defaults to the reference; it cancels).
    #[arg(long)]
    control: Option<CloudSpec>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mmd,w_eps")]
    metrics: Vec<Metric>,
    /// Sinkhorn regularisation.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// MMD length scales.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    /// Write the `metric = value` report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append one CSV row (header written when the file is new).
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn check_aligned(
    metric: &str,
    pred: &Array2<f64>,
    reference: &Array2<f64>,
) -> Result<(), CliError> {
    if pred.dim() != reference.dim() {
        return Err(CliError::Data(format!(
            "{metric} compares index-aligned rows and needs equal shapes: pred is {}x{}, ref is {}x{}",
            pred.nrows(),
            pred.ncols(),
            reference.nrows(),
            reference.ncols()
        )));
    }
    Ok(())
}

fn check_dims(
    metric: &str,
    pred: &Array2<f64>,
    other: &Array2<f64>,
    what: &str,
) -> Result<(), CliError> {
    if pred.ncols() != other.ncols() {
        return Err(CliError::Data(format!(
            "{metric} needs clouds of one dimension: pred has {}, {what} has {}",
            pred.ncols(),
            other.ncols()
        )));
    }
    Ok(())
}

pub fn run(args: &Args, argv: &[String]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("evaluate", argv);
    for spec in [
        Some(&args.pred),
        Some(&args.reference),
        args.control.as_ref(),
    ]
    .into_iter()
    .flatten()
    {
        manifest.input(&spec.path)?;
    }
    manifest.set("pred", &args.pred);
    manifest.set("ref", &args.reference);
    let names: Vec<&str> = args.metrics.iter().map(|m| m.name()).collect();
    manifest.set("metrics", names.join(","));

    let pred = read_cloud(&args.pred)?;
    let reference = read_cloud(&args.reference)?;
    let scales = args
        .scales
        .clone()
        .unwrap_or_else(|| DEFAULT_MMD_SCALES.to_vec());

    let mut report = String::new();
    let mut values = Vec::new();
    for &metric in &args.metrics {
        let name = metric.name();
        let value = match metric {
            Metric::Mmd => {
                check_dims(name, &pred, &reference, "ref")?;
                manifest.set("mmd_scales", format!("{scales:?}"));
                mmd(pred.view(), reference.view(), &scales)?
            }
            Metric::WEps => {
                check_dims(name, &pred, &reference, "ref")?;
                let options = SinkhornOptions {
                    eps: args.eps,
                    max_iters: args.max_iters,
                    tol: args.tol,
                };
                manifest.set("w_eps_eps", format!("{:?}", args.eps));
                let result = sinkhorn_w(pred.view(), reference.view(), options)?;
                if !result.converged {
                    eprintln!(
                        "warning: sinkhorn stopped after {} iterations with marginal violation {:.3e}",
                        result.iterations, result.marginal_violation
                    );
                }
                result.cost
            }
            Metric::Rmsd => {
                check_aligned(name, &pred, &reference)?;
                rmsd(pred.view(), reference.view())?
            }
            Metric::PsL2 => {
                check_dims(name, &pred, &reference, "ref")?;
                let control = match &args.control {
                    Some(spec) => read_cloud(spec)?,
                    None => reference.clone(),
                };
                check_dims(name, &pred, &control, "control")?;
                ps_l2(pred.view(), reference.view(), control.view())?
            }
        };
        writeln!(report, "{name} = {}", fmt_f64(value)).unwrap();
        values.push(fmt_f64(value));
    }
    print!("{report}");

    let mut manifest_at = None;
    if let Some(out) = &args.out {
        write_file(out, report.as_bytes())?;
        manifest.output(out);
        manifest_at = Some(manifest_path_for(out));
    }
    if let Some(csv) = &args.csv {
        let fresh = !csv.exists();
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(csv)
            .map_err(|e| CliError::Data(format!("cannot open {}: {e}", csv.display())))?;
        let mut text = String::new();
        if fresh {
            writeln!(text, "pred,ref,{}", names.join(",")).unwrap();
        }
        writeln!(
            text,
            "{},{},{}",
            args.pred,
            args.reference,
            values.join(",")
        )
        .unwrap();
        file.write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", csv.display())))?;
        manifest.output(csv);
        manifest_at.get_or_insert_with(|| manifest_path_for(csv));
    }
    match manifest_at {
        Some(path) => manifest.write(&path),
        None => Ok(()),
    }
}
