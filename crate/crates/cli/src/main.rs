use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config_args;

use config_args::ConfigArgs;

/// Landmark-based shape correspondence with a genetic search over
/// functional maps.
#[derive(Debug, Parser)]
#[command(name = "genmap", version)]
struct Cli {
    /// Directory for cached spectral bases.
    #[arg(long, global = true, env = "GENMAP_CACHE_DIR", value_name = "DIR")]
    cache_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect landmarks; writes landmarks.json and a colored landmarks.ply.
    Landmarks {
        mesh: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Match two meshes and write the maps, the match and the run log.
    Match {
        /// Source mesh; takes precedence over `--mesh-a`.
        #[arg(id = "source", value_name = "MESH_A")]
        source: Option<PathBuf>,
        /// Target mesh; takes precedence over `--mesh-b`.
        #[arg(id = "target", value_name = "MESH_B")]
        target: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Error curve of a vertex map against ground-truth pairs.
    Eval {
        /// Vertex map file (one target index per source vertex).
        #[arg(long = "map", value_name = "FILE")]
        vertex_map: PathBuf,
        /// Ground truth, one `source target` pair per line.
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
        /// Ground truth of the symmetric map, same sources in the same order.
        #[arg(long, value_name = "FILE")]
        symmetric: Option<PathBuf>,
        /// Target mesh of the map.
        #[arg(long, value_name = "FILE")]
        mesh_b: PathBuf,
        /// Output CSV (threshold,fraction).
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Pairwise chromosome distances of logged populations.
    Diversity {
        /// Run log written by `match`. The target mesh comes from `--mesh-b`
        /// or the configuration file.
        #[arg(long, value_name = "FILE")]
        log: PathBuf,
        /// Target landmarks written by `match`; detected again when omitted.
        #[arg(long, value_name = "FILE")]
        landmarks: Option<PathBuf>,
        /// Generations to export; defaults to the first and last logged population.
        #[arg(long = "generation", value_name = "G")]
        generations: Vec<usize>,
        /// Output CSV.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cache = cli.cache_dir.as_deref();
    let result = match cli.command {
        Command::Landmarks { mesh, out, config } => commands::landmarks(&mesh, &out, &config, cache),
        Command::Match {
            source,
            target,
            out,
            config,
        } => commands::run_match(source, target, &out, &config, cache),
        Command::Eval {
            vertex_map,
            truth,
            symmetric,
            mesh_b,
            out,
        } => commands::eval(&vertex_map, &truth, symmetric.as_deref(), &mesh_b, &out),
        Command::Diversity {
            log,
            landmarks,
            generations,
            out,
            config,
        } => commands::diversity(&log, landmarks.as_deref(), &generations, &out, &config, cache),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        super::Cli::command().debug_assert();
    }
}
