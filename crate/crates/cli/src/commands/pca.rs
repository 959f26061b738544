use chainsentry::dataset::{load_csv, pca_project, write_pca_csv, ScalerParams};

use super::sidecar;
use crate::cli::PcaArgs;
use crate::error::CliResult;
use crate::manifest::RunManifest;

pub fn run(args: PcaArgs, argv: &[String]) -> CliResult {
    let mut manifest = RunManifest::new("pca", argv);
    manifest.config(&serde_json::json!({
        "components": args.components,
        "standardize": args.standardize,
        "classes": args.classes,
    }))?;
    let mut data = load_csv(&args.data, None, args.classes)?;
    manifest.input(&args.data);
    if args.standardize {
        data = ScalerParams::fit(&data)?.transform(&data)?;
    }
    let projection = pca_project(&data, args.components)?;
    write_pca_csv(&projection, &args.out)?;
    for (i, r) in projection.explained_ratio.iter().enumerate() {
        println!("pc{i}: {:.2}% of variance", 100.0 * r);
    }
    manifest.output(&args.out);
    let path = args.manifest.clone().unwrap_or_else(|| sidecar(&args.out));
    manifest.write(&path)
}
