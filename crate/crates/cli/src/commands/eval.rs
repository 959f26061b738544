use chainsentry::dataset::{load_csv, ScalerParams};
use chainsentry::dbn::load_model;
use chainsentry::eval::{evaluate_model, EvalReport};

use super::{sidecar, write_json};
use crate::cli::EvalArgs;
use crate::error::CliResult;
use crate::manifest::RunManifest;

pub fn run(args: EvalArgs, argv: &[String]) -> CliResult {
    let mut manifest = RunManifest::new("eval", argv);
    let report = evaluate(&args, &mut manifest)?;
    write_json(&report, &args.out)?;
    println!(
        "accuracy {:.4}  plain {:.4}  macro precision {:.4}  macro recall {:.4}",
        report.accuracy, report.accuracy_plain, report.macro_precision, report.macro_recall
    );
    manifest.output(&args.out);
    let path = args.manifest.clone().unwrap_or_else(|| sidecar(&args.out));
    manifest.write(&path)
}

fn evaluate(args: &EvalArgs, manifest: &mut RunManifest) -> CliResult<EvalReport> {
    let model = load_model(&args.model)?;
    manifest.input(&args.model);
    let mut data = load_csv(&args.data, Some(model.input_dim()), model.classes())?;
    manifest.input(&args.data);
    if let Some(path) = &args.scaler {
        let scaler = ScalerParams::load(path)?;
        data = scaler.transform(&data)?;
        manifest.input(path);
    }
    manifest.config(&serde_json::json!({
        "scheme": args.scheme,
        "node": args.node,
        "architecture": model.architecture().sizes(),
    }))?;
    let cm = evaluate_model(&model, &data)?;
    Ok(EvalReport::new(args.scheme.clone(), args.node, &cm)?)
}
