use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Duration;

use chainsentry::dataset::{RecordReader, ScalerParams};
use chainsentry::dbn::load_model;
use chainsentry::detect::{DetectSummary, Detector};
use chainsentry::DbnModel;

use super::{sidecar, write_json};
use crate::cli::DetectArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub fn run(args: DetectArgs, argv: &[String]) -> CliResult {
    let mut manifest = RunManifest::new("detect", argv);
    if !(args.window.is_finite() && args.window > 0.0) {
        return Err(CliError::usage("--window must be a positive number of seconds"));
    }
    manifest.config(&serde_json::json!({
        "window_secs": args.window,
        "scheme": args.scheme,
        "classes": args.classes,
    }))?;
    let model = load_model(&args.model)?;
    manifest.input(&args.model);
    let scaler = match &args.scaler {
        Some(p) => {
            manifest.input(p);
            Some(ScalerParams::load(p)?)
        }
        None => None,
    };

    let input: Box<dyn Read> = match args.input.as_deref() {
        None => Box::new(io::stdin().lock()),
        Some(p) if p == Path::new("-") => Box::new(io::stdin().lock()),
        Some(p) => {
            manifest.input(p);
            Box::new(File::open(p)?)
        }
    };
    let source = args
        .input
        .as_ref()
        .map_or_else(|| "<stdin>".into(), |p| p.display().to_string());
    let records = RecordReader::new(BufReader::new(input), source, Some(model.input_dim()), args.classes)?;

    let summary = match &args.alerts {
        Some(p) => {
            manifest.output(p);
            stream(&model, scaler.as_ref(), &args, records, BufWriter::new(File::create(p)?))?
        }
        None => stream(&model, scaler.as_ref(), &args, records, BufWriter::new(io::stdout().lock()))?,
    };
    write_json(&summary, &args.summary)?;
    manifest.output(&args.summary);
    log::info!(
        "{} records in {:.3}s ({:.0} records/s) over {} window(s)",
        summary.records,
        summary.elapsed_secs,
        summary.records_per_sec,
        summary.windows
    );
    if let Some(m) = &summary.metrics {
        log::info!("accuracy {:.4}, plain {:.4}", m.accuracy, m.accuracy_plain);
    }
    manifest.time("detect", summary.elapsed_secs);
    let path = args.manifest.clone().unwrap_or_else(|| sidecar(&args.summary));
    manifest.write(&path)
}

fn stream<R: Read, W: Write>(
    model: &DbnModel,
    scaler: Option<&ScalerParams>,
    args: &DetectArgs,
    records: RecordReader<R>,
    out: W,
) -> CliResult<DetectSummary> {
    let detector = Detector::new(model, scaler)?
        .window(Duration::from_secs_f64(args.window))?
        .scheme(args.scheme.clone());
    Ok(detector.run(records, out)?)
}
