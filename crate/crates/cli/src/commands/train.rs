use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chainsentry::collab::{
    train, train_pclm_node, write_history_csv, CollabConfig, PlateauRule, Scheme, TrainOutcome,
    TransportKind,
};
use chainsentry::dataset::{load_csv, Dataset, ScalerParams};
use chainsentry::dbn::save_model;
use chainsentry::experiment::{prepare, split_node, summarize, PreparedData};
use chainsentry::transport::{PeerAddr, SessionConfig};
use chainsentry::TrainConfig;

use super::{create_dir, write_json};
use crate::cli::{SchemeArg, TrainArgs, TransportArg};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

fn scheme(arg: SchemeArg) -> Scheme {
    match arg {
        SchemeArg::Pclm => Scheme::Pclm,
        SchemeArg::Clm => Scheme::Clm,
        SchemeArg::Llm => Scheme::Llm,
    }
}

/// `node{l}.csv` files of `dir`, numbered contiguously from 1.
fn node_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| {
        CliError::Core(chainsentry::Error::Data(format!(
            "cannot read data directory {}: {e}",
            dir.display()
        )))
    })?;
    let mut numbered = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(n) = name
            .strip_prefix("node")
            .and_then(|r| r.strip_suffix(".csv"))
            .and_then(|n| n.parse::<u16>().ok())
        {
            numbered.push((n, path));
        }
    }
    numbered.sort();
    if numbered.is_empty() {
        return Err(CliError::Core(chainsentry::Error::Data(format!(
            "no node*.csv files in {}",
            dir.display()
        ))));
    }
    for (i, (n, _)) in numbered.iter().enumerate() {
        if usize::from(*n) != i + 1 {
            return Err(CliError::Core(chainsentry::Error::Data(format!(
                "node files in {} are not numbered 1..{}",
                dir.display(),
                numbered.len()
            ))));
        }
    }
    Ok(numbered.into_iter().map(|(_, p)| p).collect())
}

fn collab_config(args: &TrainArgs, nodes: usize) -> CliResult<CollabConfig> {
    if args.arch.is_empty() || args.arch.contains(&0) {
        return Err(CliError::usage("--arch needs positive layer sizes"));
    }
    let train = TrainConfig {
        learning_rate: args.lr,
        cd_steps: args.cd_k,
        batch_size: args.batch,
        iterations: args.epochs,
        seed: args.seed,
        hidden: args.arch.clone(),
    };
    let mut config = CollabConfig::new(train, nodes);
    config.transport = match args.transport {
        TransportArg::Inproc => TransportKind::InProcess,
        TransportArg::Socket => TransportKind::Socket,
    };
    config.timeout = Duration::from_millis(args.timeout_ms);
    config.eval_every = args.eval_every;
    config.plateau = args.plateau.then(PlateauRule::default);
    config.validate()?;
    Ok(config)
}

fn check_flags(args: &TrainArgs) -> CliResult {
    if !(0.0..1.0).contains(&args.test_fraction) {
        return Err(CliError::usage("--test-fraction must lie in [0, 1)"));
    }
    let distributed = !args.peers.is_empty();
    if distributed && args.scheme != SchemeArg::Pclm {
        return Err(CliError::usage(format!(
            "--peers only applies to the collaborative scheme, not {:?}",
            scheme(args.scheme)
        )));
    }
    if distributed && args.transport != TransportArg::Socket {
        return Err(CliError::usage("--peers requires --transport socket"));
    }
    if !distributed && (args.node_id.is_some() || args.listen.is_some()) {
        return Err(CliError::usage("--node-id and --listen need --peers"));
    }
    if args.scheme != SchemeArg::Pclm && args.transport == TransportArg::Socket {
        return Err(CliError::usage(format!(
            "{} does not exchange gradients; drop --transport socket",
            scheme(args.scheme)
        )));
    }
    Ok(())
}

pub fn run(args: TrainArgs, argv: &[String]) -> CliResult {
    check_flags(&args)?;
    let mut manifest = RunManifest::new("train", argv);
    manifest.seeds.push(args.seed);
    create_dir(&args.out)?;
    if args.peers.is_empty() {
        run_local(&args, &mut manifest)?;
    } else {
        run_node(&args, &mut manifest)?;
    }
    manifest.write(&args.out.join("manifest.json"))
}

fn load_all(args: &TrainArgs, files: &[PathBuf], manifest: &mut RunManifest) -> CliResult<Vec<Dataset>> {
    let mut datasets = Vec::with_capacity(files.len());
    for f in files {
        let d = load_csv(f, None, args.classes)?;
        if let Some(first) = datasets.first().map(Dataset::feature_dim) {
            if d.feature_dim() != first {
                return Err(CliError::Core(chainsentry::Error::Shape(format!(
                    "{} has {} features, node 1 has {first}",
                    f.display(),
                    d.feature_dim()
                ))));
            }
        }
        manifest.input(f);
        datasets.push(d);
    }
    Ok(datasets)
}

/// Splits and scales `datasets`. A zero test fraction trains on everything.
fn prepare_data(args: &TrainArgs, datasets: &[Dataset]) -> CliResult<PreparedData> {
    let mut data = if args.test_fraction > 0.0 {
        prepare(datasets, args.test_fraction, args.seed)?
    } else {
        let union = Dataset::concat(datasets)?;
        let scaler = ScalerParams::fit(&union)?;
        PreparedData {
            train: datasets.iter().map(|d| scaler.transform(d)).collect::<Result<_, _>>()?,
            test: Vec::new(),
            global_test: scaler.transform(&union)?,
            scaler,
        }
    };
    if let Some(path) = &args.scaler {
        let scaler = ScalerParams::load(path)?;
        let raw = if args.test_fraction > 0.0 {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, d) in datasets.iter().enumerate() {
                let (tr, te) = split_node(d, args.test_fraction, args.seed, i as u16 + 1)?;
                train.push(scaler.transform(&tr)?);
                test.push(scaler.transform(&te)?);
            }
            let global_test = Dataset::concat(&test)?;
            PreparedData { train, test, global_test, scaler }
        } else {
            let union = Dataset::concat(datasets)?;
            PreparedData {
                train: datasets.iter().map(|d| scaler.transform(d)).collect::<Result<_, _>>()?,
                test: Vec::new(),
                global_test: scaler.transform(&union)?,
                scaler,
            }
        };
        data = raw;
    }
    Ok(data)
}

fn model_name(scheme: Scheme, node: u16) -> String {
    match scheme {
        Scheme::Clm => "model_clm.bndm".into(),
        _ => format!("model_node{node}.bndm"),
    }
}

fn write_outputs(
    args: &TrainArgs,
    outcome: &TrainOutcome,
    data: Option<&PreparedData>,
    manifest: &mut RunManifest,
) -> CliResult {
    for (model, &node) in outcome.models.iter().zip(&outcome.nodes) {
        let path = args.out.join(model_name(outcome.scheme, node));
        save_model(model, &path)?;
        manifest.output(path);
    }
    let history = args.out.join("history.csv");
    write_history_csv(outcome.scheme, &outcome.history, &history)?;
    manifest.output(history);
    if let Some(data) = data.filter(|d| !d.test.is_empty()) {
        let result = summarize(outcome, data)?;
        for r in &result.global {
            log::info!(
                "{} node {:?}: accuracy {:.4}, plain {:.4}",
                result.scheme,
                r.node,
                r.accuracy,
                r.accuracy_plain
            );
        }
        let report = args.out.join("report.json");
        write_json(&result, &report)?;
        manifest.output(report);
    }
    Ok(())
}

fn run_local(args: &TrainArgs, manifest: &mut RunManifest) -> CliResult {
    let mut files = node_files(&args.data)?;
    if let Some(n) = args.nodes {
        let n = usize::from(n);
        if n > files.len() {
            return Err(CliError::usage(format!(
                "--nodes {n} but only {} node files exist",
                files.len()
            )));
        }
        files.truncate(n);
    }
    let config = collab_config(args, files.len())?;
    manifest.config(&serde_json::json!({
        "scheme": scheme(args.scheme),
        "collab": config,
        "test_fraction": args.test_fraction,
        "classes": args.classes,
    }))?;
    let datasets = load_all(args, &files, manifest)?;
    let data = prepare_data(args, &datasets)?;
    let scaler_path = args.out.join("scaler.json");
    data.scaler.save(&scaler_path)?;
    manifest.output(&scaler_path);

    let eval = (!data.test.is_empty()).then_some(&data.global_test);
    let started = Instant::now();
    let outcome = train(scheme(args.scheme), &data.train, &config, eval, &mut |_, _| {})?;
    manifest.time("train", started.elapsed().as_secs_f64());
    write_outputs(args, &outcome, Some(&data), manifest)
}

fn run_node(args: &TrainArgs, manifest: &mut RunManifest) -> CliResult {
    let id = args
        .node_id
        .ok_or_else(|| CliError::usage("--peers requires --node-id"))?;
    let listen = args
        .listen
        .as_deref()
        .ok_or_else(|| CliError::usage("--peers requires --listen"))?
        .parse()
        .map_err(|e| CliError::usage(format!("--listen: {e}")))?;
    let peers = args
        .peers
        .iter()
        .map(|p| PeerAddr::parse(p))
        .collect::<Result<Vec<_>, _>>()?;
    let nodes = peers.len() + 1;
    let config = collab_config(args, nodes)?;
    manifest.config(&serde_json::json!({
        "scheme": Scheme::Pclm,
        "node_id": id,
        "listen": args.listen,
        "peers": args.peers,
        "collab": config,
        "test_fraction": args.test_fraction,
        "classes": args.classes,
    }))?;

    let file = args.data.join(format!("node{id}.csv"));
    let raw = load_all(args, std::slice::from_ref(&file), manifest)?.remove(0);
    let (train_raw, test_raw) = if args.test_fraction > 0.0 {
        let (a, b) = split_node(&raw, args.test_fraction, args.seed, id)?;
        (a, Some(b))
    } else {
        (raw, None)
    };
    let scaler = match &args.scaler {
        Some(p) => ScalerParams::load(p)?,
        None => {
            log::warn!("no --scaler given; fitting on this node's data only");
            ScalerParams::fit(&train_raw)?
        }
    };
    let train_data = scaler.transform(&train_raw)?;
    let test = test_raw.map(|t| scaler.transform(&t)).transpose()?;
    let scaler_path = args.out.join("scaler.json");
    scaler.save(&scaler_path)?;
    manifest.output(&scaler_path);

    let arch = config.train.architecture(train_data.feature_dim(), train_data.classes())?;
    let session = SessionConfig {
        node_id: id,
        nodes,
        listen,
        peers,
        expected_len: Some(arch.param_count()),
        connect_timeout: config.timeout,
    };
    let transport = session.connect()?;
    let started = Instant::now();
    let outcome = train_pclm_node(&train_data, &transport, &config, test.as_ref())?;
    manifest.time("train", started.elapsed().as_secs_f64());
    write_outputs(args, &outcome, None, manifest)?;
    if let Some(test) = &test {
        let cm = chainsentry::eval::evaluate_model(&outcome.models[0], test)?;
        let report = chainsentry::EvalReport::new("pclm", Some(u32::from(id)), &cm)?;
        let path = args.out.join("report.json");
        write_json(&report, &path)?;
        manifest.output(path);
    }
    Ok(())
}
