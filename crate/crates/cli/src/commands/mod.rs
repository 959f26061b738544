mod detect;
mod eval;
mod gen;
mod pca;
mod train;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::cli::{Cli, Command};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

/// Parses `argv` (program name first) and runs the selected command.
pub fn run(argv: &[String]) -> CliResult {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(e.into()) } else { Ok(()) };
        }
    };
    match cli.command {
        Command::Gen(a) => gen::run(a, argv),
        Command::Train(a) => train::run(a, argv),
        Command::Eval(a) => eval::run(a, argv),
        Command::Detect(a) => detect::run(a, argv),
        Command::Pca(a) => pca::run(a, argv),
        Command::Replay(a) => replay(&a.manifest),
    }
}

fn replay(path: &Path) -> CliResult {
    let manifest = RunManifest::load(path)?;
    if manifest.command == "replay" {
        return Err(CliError::usage("a replay manifest cannot be replayed"));
    }
    log::info!("replaying `{}` from {}", manifest.command, path.display());
    let mut argv = vec!["chainsentry".to_owned()];
    argv.extend(manifest.args);
    run(&argv)
}

/// `<file>.manifest.json` next to `file`.
fn sidecar(file: &Path) -> PathBuf {
    let mut name: OsString = file.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    file.with_file_name(name)
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Core(chainsentry::Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create {}: {e}", dir.display()),
        )))
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> CliResult {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Core(chainsentry::Error::Io(std::io::Error::other(e))))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("out/report.json")), PathBuf::from("out/report.json.manifest.json"));
        assert_eq!(sidecar(Path::new("pca.csv")), PathBuf::from("pca.csv.manifest.json"));
    }
}
