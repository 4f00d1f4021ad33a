//! Run configuration: defaults, an optional key=value file with `[section]`
//! headers, then command-line overrides, in increasing precedence.
//!
//! ```text
//! seed = 7
//! threads = auto
//! out = results
//!
//! [raster]
//! width = 256
//! mode = dot
//! ```
//!
//! Keys before the first header (or under `[global]`) are global. Unknown
//! sections and keys are rejected by name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

pub const COMMANDS: [&str; 6] = [
    "raster",
    "bound",
    "stability",
    "usefulness",
    "symmetry",
    "attack",
];

const GLOBAL_KEYS: [&str; 3] = ["seed", "threads", "out"];

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "boundkit-out";

/// Keys accepted by each subcommand with their defaults.
pub fn defaults(command: &str) -> &'static [(&'static str, &'static str)] {
    match command {
        "raster" => &[
            ("classifier", "paper_filter_bank"),
            ("mode", "l1"),
            ("threshold", "0.5"),
            ("width", "512"),
            ("height", "512"),
            ("extent", "0,1,0,1"),
            ("neighborhood", "8"),
            ("depths", "8..10"),
        ],
        "bound" => &[
            ("curve", "bound"),
            ("class", "image_poly"),
            ("k", "10..200"),
            ("eps", "0.5"),
            ("m", "4..64"),
            ("channels", "1"),
        ],
        "stability" => &[
            ("classifier", "threshold1d"),
            ("mode", "l1"),
            ("threshold", "0.5"),
            ("dim", "1"),
            ("eps", "0.05"),
            ("samples", "100000"),
            ("directions", "32"),
            ("steps", "8"),
        ],
        "usefulness" => &[
            ("data", "synthetic"),
            ("size", "2000"),
            ("dim", "2"),
            ("features", "smooth:0,sign:0,coord:0,coord:1"),
            ("delta", "0.1"),
            ("coord_iters", "10"),
        ],
        "symmetry" => &[
            ("classifier", "mean_threshold"),
            ("mode", "l1"),
            ("threshold", "0.5"),
            ("m", "3"),
            ("n", "3"),
            ("point_ops", "false"),
            ("samples", "1000"),
        ],
        "attack" => &[
            ("classifier", "threshold1d"),
            ("mode", "l1"),
            ("threshold", "0.5"),
            ("x_orig", "0.2"),
            ("x_seed", "0.9"),
            ("tol", "0.001"),
            ("budgets", "0,5,100"),
            ("runs", "8"),
        ],
        _ => &[],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Count(usize),
}

impl Threads {
    /// Worker count for a rayon pool; 0 lets rayon choose.
    pub fn pool_size(&self) -> usize {
        match self {
            Threads::Auto => 0,
            Threads::Count(n) => *n,
        }
    }
}

impl FromStr for Threads {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(CliError::config(format!(
                "invalid value for 'threads': `{s}` (expected a positive integer or `auto`)"
            ))),
        }
    }
}

impl std::fmt::Display for Threads {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Count(n) => write!(f, "{n}"),
        }
    }
}

/// Fully resolved configuration for one subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub threads: Threads,
    pub out: PathBuf,
    pub check: bool,
    params: BTreeMap<String, String>,
}

/// Values from flags; `None` means not given.
#[derive(Debug, Default)]
pub struct GlobalFlags {
    pub seed: Option<u64>,
    pub threads: Option<String>,
    pub out: Option<PathBuf>,
    pub check: bool,
}

#[derive(Debug, Default)]
struct FileConfig {
    global: BTreeMap<String, String>,
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn parse_file(text: &str) -> Result<FileConfig, CliError> {
    let mut cfg = FileConfig::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| {
                    CliError::config(format!("line {lineno}: malformed section header `{line}`"))
                })?
                .trim();
            if name != "global" && !COMMANDS.contains(&name) {
                return Err(CliError::config(format!(
                    "line {lineno}: unknown section `[{name}]`"
                )));
            }
            section = (name != "global").then(|| name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!("line {lineno}: expected key = value, got `{line}`"))
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let target = match &section {
            None => {
                if !GLOBAL_KEYS.contains(&key.as_str()) {
                    return Err(CliError::config(format!(
                        "line {lineno}: unknown key '{key}' in [global]"
                    )));
                }
                &mut cfg.global
            }
            Some(name) => {
                if !defaults(name).iter().any(|(k, _)| *k == key) {
                    return Err(CliError::config(format!(
                        "line {lineno}: unknown key '{key}' in [{name}]"
                    )));
                }
                cfg.sections.entry(name.clone()).or_default()
            }
        };
        if target.insert(key.clone(), value).is_some() {
            return Err(CliError::config(format!(
                "line {lineno}: duplicate key '{key}'"
            )));
        }
    }
    Ok(cfg)
}

/// Expands positional overrides. A bare `mitigation` means `curve=mitigation`.
fn parse_overrides(command: &str, args: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for arg in args {
        let (key, value) = match arg.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None if command == "bound" && arg == "mitigation" => ("curve", "mitigation"),
            None => {
                return Err(CliError::config(format!("expected key=value, got `{arg}`")));
            }
        };
        if !defaults(command).iter().any(|(k, _)| *k == key) {
            return Err(CliError::config(format!(
                "unknown key '{key}' for `{command}`"
            )));
        }
        out.insert(key.to_string(), value.to_string());
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(
        command: &str,
        flags: GlobalFlags,
        config_path: Option<&Path>,
        overrides: &[String],
    ) -> Result<Self, CliError> {
        let file = match config_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Io(format!("cannot read config {}: {e}", p.display()))
                })?;
                parse_file(&text)?
            }
            None => FileConfig::default(),
        };
        let seed = match (flags.seed, file.global.get("seed")) {
            (Some(s), _) => s,
            (None, Some(s)) => parse_value("seed", s)?,
            (None, None) => DEFAULT_SEED,
        };
        let threads = flags
            .threads
            .as_deref()
            .or(file.global.get("threads").map(String::as_str))
            .unwrap_or("auto")
            .parse()?;
        let out = flags
            .out
            .or_else(|| file.global.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

        let mut params: BTreeMap<String, String> = defaults(command)
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        if let Some(section) = file.sections.get(command) {
            params.extend(section.clone());
        }
        params.extend(parse_overrides(command, overrides)?);
        Ok(Self {
            command: command.to_string(),
            seed,
            threads,
            out,
            check: flags.check,
            params,
        })
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn raw(&self, key: &str) -> &str {
        self.params
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("no default registered for key '{key}'"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        parse_value(key, self.raw(key))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        let items: Vec<T> = raw
            .split(',')
            .map(|s| parse_value(key, s.trim()))
            .collect::<Result<_, _>>()?;
        Ok(items)
    }

    /// An inclusive `a..b` range or a comma list.
    pub fn range(&self, key: &str) -> Result<Vec<u64>, CliError> {
        let raw = self.raw(key);
        match raw.split_once("..") {
            Some((a, b)) => {
                let a: u64 = parse_value(key, a.trim())?;
                let b: u64 = parse_value(key, b.trim())?;
                if a > b {
                    return Err(CliError::config(format!(
                        "invalid value for '{key}': empty range `{raw}`"
                    )));
                }
                Ok((a..=b).collect())
            }
            None => self.list(key),
        }
    }
}

pub fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| CliError::config(format!("invalid value for '{key}': `{raw}` ({e})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(cmd: &str, file: Option<&str>, overrides: &[&str]) -> Result<RunConfig, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        if let Some(text) = file {
            std::fs::write(&path, text).unwrap();
        }
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        RunConfig::resolve(
            cmd,
            GlobalFlags::default(),
            file.map(|_| path.as_path()),
            &overrides,
        )
    }

    #[test]
    fn defaults_fill_every_key() {
        for cmd in COMMANDS {
            let cfg = resolve(cmd, None, &[]).unwrap();
            assert_eq!(cfg.params().len(), defaults(cmd).len());
            assert_eq!(cfg.seed, DEFAULT_SEED);
            assert_eq!(cfg.threads, Threads::Auto);
        }
    }

    #[test]
    fn precedence_is_default_file_override() {
        let text = "seed = 9\nthreads = 2\n[raster]\nwidth = 64\nheight = 32\n";
        let cfg = resolve("raster", Some(text), &["width=16"]).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.threads, Threads::Count(2));
        assert_eq!(cfg.raw("width"), "16");
        assert_eq!(cfg.raw("height"), "32");
        assert_eq!(cfg.raw("mode"), "l1");
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = resolve("raster", Some("[raster]\nwidht = 3\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("'widht'"), "{err}");
        let err = resolve("bound", None, &["kk=3"]).unwrap_err();
        assert!(err.to_string().contains("'kk'"), "{err}");
        let err = resolve("bound", Some("colour = red\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("'colour'"), "{err}");
        assert!(resolve("bound", Some("[plot]\n"), &[]).is_err());
        assert!(resolve("bound", Some("[bound]\nk 3\n"), &[]).is_err());
    }

    #[test]
    fn other_sections_are_validated_but_ignored() {
        let cfg = resolve(
            "bound",
            Some("[raster]\nwidth = 8\n[bound]\neps = 0.1\n"),
            &[],
        )
        .unwrap();
        assert_eq!(cfg.raw("eps"), "0.1");
    }

    #[test]
    fn mitigation_shorthand_and_ranges() {
        let cfg = resolve("bound", None, &["mitigation", "m=4..6"]).unwrap();
        assert_eq!(cfg.raw("curve"), "mitigation");
        assert_eq!(cfg.range("m").unwrap(), vec![4, 5, 6]);
        let cfg = resolve("bound", None, &["k=3,5,8"]).unwrap();
        assert_eq!(cfg.range("k").unwrap(), vec![3, 5, 8]);
        assert_eq!(
            resolve("bound", None, &[])
                .unwrap()
                .range("k")
                .unwrap()
                .len(),
            191
        );
        assert!(resolve("bound", None, &["k=5..3"])
            .unwrap()
            .range("k")
            .is_err());
        assert!(resolve("raster", None, &["mitigation"]).is_err());
    }

    #[test]
    fn bad_values_name_the_key() {
        let cfg = resolve("raster", None, &["width=wide"]).unwrap();
        let err = cfg.get::<usize>("width").unwrap_err();
        assert!(err.to_string().contains("'width'"));
        assert!("0".parse::<Threads>().is_err());
        assert_eq!("auto".parse::<Threads>().unwrap(), Threads::Auto);
    }
}
