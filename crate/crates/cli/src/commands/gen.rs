use std::time::Instant;

use chainsentry::dataset::{generate_synthetic, write_csv, SynthConfig};

use super::create_dir;
use crate::cli::{GenArgs, Preset};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub fn run(args: GenArgs, argv: &[String]) -> CliResult {
    let mut manifest = RunManifest::new("gen", argv);
    let mut config = match args.preset {
        Preset::Heterogeneous => {
            if args.nodes != 3 {
                return Err(CliError::usage("the heterogeneous preset has exactly 3 nodes"));
            }
            let mut c = SynthConfig::heterogeneous(args.seed);
            c.feature_dim = args.features;
            c
        }
        Preset::Uniform => SynthConfig::uniform(
            usize::from(args.nodes),
            &args.per_class,
            args.features,
            args.seed,
        ),
    };
    if let Some(o) = args.overlap {
        config.overlap = o;
    }
    if let Some(s) = args.node_shift {
        config.node_shift = s;
    }
    config.validate()?;
    manifest.config(&config)?;
    manifest.seeds.push(args.seed);

    let started = Instant::now();
    let nodes = generate_synthetic(&config)?;
    create_dir(&args.out)?;
    for (i, data) in nodes.iter().enumerate() {
        let path = args.out.join(format!("node{}.csv", i + 1));
        write_csv(data, &path)?;
        log::info!("wrote {} ({} rows)", path.display(), data.len());
        manifest.output(path);
    }
    manifest.time("generate", started.elapsed().as_secs_f64());
    manifest.write(&args.out.join("manifest.json"))
}
