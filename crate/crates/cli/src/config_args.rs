//! One `--kebab-case` flag per run-configuration key.

use std::path::PathBuf;

use clap::{ArgMatches, Args, Command, FromArgMatches};
use genmap::RunConfig;

#[derive(Debug, Clone, Default)]
pub struct ConfigArgs {
    pub file: Option<PathBuf>,
    pub overrides: Vec<(String, String)>,
}

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

impl ConfigArgs {
    /// Defaults, then the config file, then individual flags.
    pub fn resolve(&self) -> genmap::Result<RunConfig> {
        let mut cfg = match &self.file {
            Some(path) => RunConfig::read(path)?,
            None => RunConfig::default(),
        };
        for (k, v) in &self.overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromArgMatches for ConfigArgs {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let mut out = Self {
            file: m.get_one::<PathBuf>("config").cloned(),
            overrides: Vec::new(),
        };
        for key in RunConfig::keys() {
            if let Some(v) = m.get_one::<String>(key.as_str()) {
                out.overrides.push((key, v.clone()));
            }
        }
        Ok(out)
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        *self = Self::from_arg_matches(m)?;
        Ok(())
    }
}

impl Args for ConfigArgs {
    fn augment_args(cmd: Command) -> Command {
        let defaults = RunConfig::default();
        let mut cmd = cmd.arg(
            clap::Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("Run configuration file (key = value lines)")
                .help_heading("Configuration"),
        );
        for key in RunConfig::keys() {
            let default = defaults.get(&key).unwrap_or_default();
            cmd = cmd.arg(
                clap::Arg::new(key.clone())
                    .long(flag(&key))
                    .value_name("VALUE")
                    .help(format!("[default: {default}]"))
                    .help_heading("Configuration"),
            );
        }
        cmd
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}
