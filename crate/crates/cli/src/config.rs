//! Flat `key = value` configuration shared by the command line and `--config` files.
//!
//! Every subcommand declares its keys once; command-line flags and config
//! file lines use the same names. Resolution order is built-in default, then
//! config file, then command line.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::CliError;

pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    pub default: Option<&'static str>,
    pub flag: bool,
    /// Output locations are not part of the recorded configuration.
    pub output: bool,
}

const fn key(name: &'static str, help: &'static str, default: Option<&'static str>) -> Key {
    Key {
        name,
        help,
        default,
        flag: false,
        output: false,
    }
}

const fn output(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        default: None,
        flag: false,
        output: true,
    }
}

const fn flag(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        default: None,
        flag: true,
        output: false,
    }
}

const DIST: Key = key(
    "dist",
    "shock distribution: normal, logistic, or path to an `x,density` CSV",
    Some("normal"),
);
const DELTA: Key = key("delta", "discount factor in [0, 1)", None);
const TOLERANCE: Key = key("tolerance", "root-finder residual tolerance", Some("1e-10"));
const MAX_BRACKET: Key = key(
    "max-bracket",
    "largest |x| searched when expanding a root bracket",
    Some("1000"),
);
const COSTS: Key = key("costs", "comma-separated unit costs c(0),...,c(m)", None);

pub struct Subcommand {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: Vec<Key>,
}

pub fn subcommands() -> Vec<Subcommand> {
    vec![
        Subcommand {
            name: "solve-lbd",
            about: "Solve the learning-by-doing equilibrium and write the state table",
            keys: vec![
                key(
                    "m",
                    "experience cap; must equal the number of costs minus one",
                    None,
                ),
                COSTS,
                DELTA,
                DIST,
                key(
                    "solver",
                    "backward, two-step, or value-iteration",
                    Some("backward"),
                ),
                key(
                    "oracle-tolerance",
                    "sup-norm stopping rule for value iteration",
                    Some("1e-8"),
                ),
                key(
                    "oracle-max-iter",
                    "pass limit for value iteration",
                    Some("100000"),
                ),
                TOLERANCE,
                MAX_BRACKET,
                output("out", "equilibrium CSV (default: stdout)"),
                output(
                    "summary",
                    "summary JSON (default: next to --out with a .json extension)",
                ),
            ],
        },
        Subcommand {
            name: "solve-switching",
            about: "Solve the switching-cost equilibrium",
            keys: vec![
                key("s", "switching cost (>= 0)", None),
                DELTA,
                DIST,
                TOLERANCE,
                MAX_BRACKET,
                output("out", "result JSON (default: stdout)"),
            ],
        },
        Subcommand {
            name: "sweep-switching",
            about: "Average price across switching costs s = 0, step, ..., max",
            keys: vec![
                DELTA,
                DIST,
                key("s-max", "largest switching cost in the grid", Some("10")),
                key("s-step", "grid spacing", Some("0.25")),
                TOLERANCE,
                MAX_BRACKET,
                output("out", "sweep CSV (default: stdout)"),
                output(
                    "summary",
                    "summary JSON (default: next to --out with a .json extension)",
                ),
            ],
        },
        Subcommand {
            name: "sweep-hypercomp",
            about: "Two-step equilibria across experienced cost c(1)",
            keys: vec![
                key("c0", "inexperienced unit cost c(0)", Some("1")),
                key(
                    "c1",
                    "comma-separated, strictly increasing c(1) values",
                    Some("0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"),
                ),
                DELTA,
                DIST,
                TOLERANCE,
                MAX_BRACKET,
                output("out", "sweep CSV (default: stdout)"),
                output(
                    "summary",
                    "summary JSON (default: next to --out with a .json extension)",
                ),
            ],
        },
        Subcommand {
            name: "predation",
            about: "Limit quantities of the exit (predation) model",
            keys: vec![
                COSTS,
                DELTA,
                DIST,
                key("v-mono", "monopoly value v~(1)", None),
                key(
                    "v-mono-factor",
                    "monopoly value as a multiple of v(1,1) (used when --v-mono is absent)",
                    None,
                ),
                key(
                    "fixed-cost",
                    "avoidable fixed cost A (reported only)",
                    Some("0"),
                ),
                key(
                    "alpha",
                    "probability of a zero fixed cost (reported only)",
                    None,
                ),
                TOLERANCE,
                MAX_BRACKET,
                output("out", "report JSON (default: stdout)"),
            ],
        },
        Subcommand {
            name: "simulate",
            about: "Monte Carlo of market dynamics under a solved equilibrium",
            keys: vec![
                key("model", "lbd or switching", Some("lbd")),
                key("costs", "unit costs for --model lbd", None),
                key("s", "switching cost for --model switching", None),
                DELTA,
                DIST,
                key("periods", "periods per replication", Some("100")),
                key("replications", "number of replications", Some("10000")),
                key("seed", "64-bit seed", Some("0")),
                key(
                    "initial",
                    "initial experience state i,j for --model lbd",
                    Some("0,0"),
                ),
                flag(
                    "sample-shocks",
                    "draw preference shocks instead of Bernoulli outcomes",
                ),
                TOLERANCE,
                MAX_BRACKET,
                output("out", "summary JSON (default: stdout)"),
                output("trajectories", "write per-period trajectories to this CSV"),
            ],
        },
        Subcommand {
            name: "validate-dist",
            about: "Check a shock distribution against the model assumptions",
            keys: vec![DIST, output("out", "report JSON (default: stdout)")],
        },
    ]
}

pub fn command() -> Command {
    let mut cmd = Command::new("oligodyn")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Markov-perfect equilibria of dynamic duopoly pricing models")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in subcommands() {
        let mut c = Command::new(sub.name).about(sub.about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("read flat `key = value` lines; command-line flags take precedence"),
        );
        for k in &sub.keys {
            let mut arg = Arg::new(k.name).long(k.name).help(k.help);
            if k.flag {
                arg = arg.action(ArgAction::SetTrue);
            } else {
                arg = arg.value_name("VALUE").allow_hyphen_values(true);
                if let Some(d) = k.default {
                    arg = arg.help(format!("{} [default: {d}]", k.help));
                }
            }
            c = c.arg(arg);
        }
        cmd = cmd.subcommand(c);
    }
    cmd
}

/// Fully resolved key/value settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub command: &'static str,
    values: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Invalid(format!("config line {}: expected `key = value`", n + 1))
        })?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

pub fn resolve(sub: &Subcommand, matches: &ArgMatches) -> Result<Resolved, CliError> {
    let mut values = BTreeMap::new();
    let mut outputs = BTreeMap::new();
    for k in &sub.keys {
        if let Some(d) = k.default {
            values.insert(k.name.to_string(), d.to_string());
        }
    }
    if let Some(path) = matches.get_one::<String>("config") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {path}: {e}")))?;
        for (name, value) in parse_config_file(&text)? {
            let k = sub.keys.iter().find(|k| k.name == name).ok_or_else(|| {
                CliError::Invalid(format!("unknown config key `{name}` for {}", sub.name))
            })?;
            if k.output {
                outputs.insert(name, value);
            } else {
                values.insert(name, value);
            }
        }
    }
    for k in &sub.keys {
        if matches.value_source(k.name) != Some(ValueSource::CommandLine) {
            continue;
        }
        let value = if k.flag {
            "true".to_string()
        } else {
            matches
                .get_one::<String>(k.name)
                .cloned()
                .unwrap_or_default()
        };
        if k.output {
            outputs.insert(k.name.to_string(), value);
        } else {
            values.insert(k.name.to_string(), value);
        }
    }
    Ok(Resolved {
        command: sub.name,
        values,
        outputs,
    })
}

impl Resolved {
    /// Recorded configuration, without output locations.
    pub fn recorded(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Invalid(format!("missing required --{key}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let raw = self.str(key)?;
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::Invalid(format!("--{key}: `{raw}` is not a finite number")))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        if self.has(key) {
            self.f64(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let raw = self.str(key)?;
        raw.parse::<usize>().map_err(|_| {
            CliError::Invalid(format!("--{key}: `{raw}` is not a non-negative integer"))
        })
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        let raw = self.str(key)?;
        raw.parse::<u64>().map_err(|_| {
            CliError::Invalid(format!(
                "--{key}: `{raw}` is not an unsigned 64-bit integer"
            ))
        })
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.values.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => Err(CliError::Invalid(format!(
                "--{key}: `{other}` is not a boolean"
            ))),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.str(key)?;
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::Invalid(format!("--{key}: `{p}` is not a finite number"))
                    })
            })
            .collect()
    }

    pub fn output(&self, key: &str) -> Option<PathBuf> {
        self.outputs
            .get(key)
            .filter(|p| p.as_str() != "-")
            .map(PathBuf::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_args(args: &[&str]) -> Resolved {
        let m = command().try_get_matches_from(args).unwrap();
        let (name, sub_m) = m.subcommand().unwrap();
        let sub = subcommands().into_iter().find(|s| s.name == name).unwrap();
        resolve(&sub, sub_m).unwrap()
    }

    #[test]
    fn defaults_and_overrides() {
        let r = resolve_args(&["oligodyn", "solve-switching", "--s", "1", "--delta", "0.5"]);
        assert_eq!(r.str("dist").unwrap(), "normal");
        assert_eq!(r.f64("s").unwrap(), 1.0);
        assert_eq!(r.f64("tolerance").unwrap(), 1e-10);
    }

    #[test]
    fn config_file_lines() {
        let parsed = parse_config_file("# c\nmax_bracket = 5\n\ns=2\n").unwrap();
        assert_eq!(
            parsed,
            vec![("max-bracket".into(), "5".into()), ("s".into(), "2".into())]
        );
        assert!(parse_config_file("garbage").is_err());
    }

    #[test]
    fn typed_getters_reject_garbage() {
        let r = resolve_args(&["oligodyn", "solve-lbd", "--costs", "1,x", "--delta", "nan"]);
        assert!(r.f64_list("costs").is_err());
        assert!(r.f64("delta").is_err());
        assert!(r.str("m").is_err());
    }

    #[test]
    fn negative_values_are_accepted() {
        let r = resolve_args(&["oligodyn", "solve-switching", "--s", "-1", "--delta", "0"]);
        assert_eq!(r.f64("s").unwrap(), -1.0);
    }
}
