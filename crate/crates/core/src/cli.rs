//! `opbet` command line: argument parsing, `key = value` config files and
//! report output. Settings are resolved as defaults, then the config file,
//! then flags; the resolved map is echoed in the manifest.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::experiments::{
    check_rows, read_report_csv, run_coverage, run_evaluate, run_heavytail, run_learn, run_select, CoverageConfig,
    EvaluateConfig, ExperimentError, ExperimentReport, HeavyTailConfig, LearnConfig, Manifest, Result, SelectConfig,
};
use crate::learning::TrainConfig;

#[derive(Debug, Parser)]
#[command(name = "opbet", version, about = "Betting confidence bounds for off-policy evaluation, selection and learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Violation rates of lower bounds on distributions with known means.
    Coverage(CommonArgs),
    /// Bound trajectories on the heavy-tailed importance-weighting environment.
    Heavytail(CommonArgs),
    /// Train every objective family on bandit feedback built from classification data.
    Learn(CommonArgs),
    /// Compare policy selectors on the pool written by `learn`.
    Select(CommonArgs),
    /// Two-sided interval for one policy on one log.
    Evaluate(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Coverage(_) => "coverage",
            Command::Heavytail(_) => "heavytail",
            Command::Learn(_) => "learn",
            Command::Select(_) => "select",
            Command::Evaluate(_) => "evaluate",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Coverage(a)
            | Command::Heavytail(a)
            | Command::Learn(a)
            | Command::Select(a)
            | Command::Evaluate(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// File of `key = value` lines; `#` starts a comment.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for report.csv and manifest.json.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_name = "F")]
    pub delta: Option<String>,
    /// Number of replications: seeds 0..N for learn and select, trials otherwise.
    #[arg(long, value_name = "N")]
    pub seeds: Option<String>,
    /// Base seed.
    #[arg(long, value_name = "S")]
    pub seed: Option<String>,
    /// Datasets, distributions or a log file, depending on the subcommand.
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<String>,
    #[arg(long, value_name = "F")]
    pub fraction: Option<String>,
    /// Bound methods or selectors, comma separated.
    #[arg(long, value_name = "NAME[,NAME...]")]
    pub method: Option<String>,
    /// Policy file for `evaluate`.
    #[arg(long, value_name = "PATH")]
    pub policy: Option<String>,
    /// Any other setting, as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Re-verify an existing report in --out instead of running.
    #[arg(long)]
    pub check: bool,
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("config line {}: expected key = value", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(config_err(format!("config line {}: empty key", i + 1)));
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(config_err(format!("config line {}: duplicate key {k:?}", i + 1)));
        }
    }
    Ok(map)
}

/// Resolved settings of one subcommand.
struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    fn resolve(defaults: Vec<(&str, String)>, args: &CommonArgs) -> Result<Self> {
        let mut map: BTreeMap<String, String> = defaults.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let mut overlay = |k: &str, v: &str, origin: &str| -> Result<()> {
            match map.get_mut(k) {
                Some(slot) => {
                    *slot = v.trim().to_string();
                    Ok(())
                }
                None => Err(config_err(format!("unknown setting {k:?} in {origin}"))),
            }
        };
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            for (k, v) in parse_config_text(&text)? {
                overlay(&k, &v, &path.display().to_string())?;
            }
        }
        for kv in &args.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| config_err(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            overlay(k.trim(), v, "--set")?;
        }
        let flags = [
            ("delta", &args.delta),
            ("seeds", &args.seeds),
            ("seed", &args.seed),
            ("dataset", &args.dataset),
            ("fraction", &args.fraction),
            ("method", &args.method),
            ("policy", &args.policy),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                overlay(k, v, &format!("--{k}"))?;
            }
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> &str {
        self.map.get(key).map(String::as_str).expect("every read key has a default")
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e| config_err(format!("{key} = {v:?}: {e}")))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| config_err(format!("{key}: {s:?}: {e}"))))
            .collect()
    }

    fn seed_range(&self, key: &str) -> Result<Vec<u64>> {
        if self.raw(key).is_empty() {
            return Ok(vec![]);
        }
        Ok((0..self.get::<u64>(key)?).collect())
    }
}

fn coverage_defaults() -> Vec<(&'static str, String)> {
    let d = CoverageConfig::default();
    vec![
        ("dataset", join(&d.distributions)),
        ("method", join(&d.methods)),
        ("n", d.n.to_string()),
        ("seeds", d.trials.to_string()),
        ("seed", d.seed.to_string()),
        ("delta", d.delta.to_string()),
        ("checkpoints", join(&d.checkpoints)),
    ]
}

fn coverage_config(s: &Settings) -> Result<CoverageConfig> {
    Ok(CoverageConfig {
        distributions: s.list("dataset")?,
        methods: s.list("method")?,
        n: s.get("n")?,
        trials: s.get("seeds")?,
        delta: s.get("delta")?,
        seed: s.get("seed")?,
        checkpoints: s.list("checkpoints")?,
    })
}

fn heavytail_defaults() -> Vec<(&'static str, String)> {
    let d = HeavyTailConfig::default();
    vec![
        ("beta", d.beta.to_string()),
        ("method", join(&d.methods)),
        ("checkpoints", join(&d.checkpoints)),
        ("seeds", d.trials.to_string()),
        ("seed", d.seed.to_string()),
        ("delta", d.delta.to_string()),
    ]
}

fn heavytail_config(s: &Settings) -> Result<HeavyTailConfig> {
    Ok(HeavyTailConfig {
        beta: s.get("beta")?,
        target: None,
        methods: s.list("method")?,
        checkpoints: s.list("checkpoints")?,
        trials: s.get("seeds")?,
        delta: s.get("delta")?,
        seed: s.get("seed")?,
    })
}

fn learn_defaults() -> Vec<(&'static str, String)> {
    let d = LearnConfig::default();
    vec![
        ("dataset", join(&d.datasets)),
        ("fraction", join(&d.fractions)),
        ("seeds", d.seeds.len().to_string()),
        ("seed", d.data_seed.to_string()),
        ("delta", d.delta.to_string()),
        ("max_rows", d.max_rows.to_string()),
        ("epsilon", d.epsilon.to_string()),
        ("behavior", d.behavior.to_string()),
        ("betas", join(&d.betas)),
        ("families", join(&d.families)),
        ("learning_rate", d.train.learning_rate.to_string()),
        ("batch_size", d.train.batch_size.to_string()),
        ("epochs", d.train.epochs.to_string()),
        ("temperature", d.train.temperature.to_string()),
        ("cost", String::new()),
    ]
}

fn read_cost(path: &str) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ExperimentError::Data(format!("{path}: {e}")))?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| ExperimentError::Data(format!("{path}: {e}")))?;
            rec.iter()
                .map(|v| v.parse().map_err(|_| ExperimentError::Data(format!("{path}: bad cost {v:?}"))))
                .collect()
        })
        .collect()
}

fn learn_config(s: &Settings, out: &Path) -> Result<LearnConfig> {
    let cost = match s.raw("cost") {
        "" => None,
        path => Some(read_cost(path)?),
    };
    Ok(LearnConfig {
        datasets: s.list("dataset")?,
        fractions: s.list("fraction")?,
        seeds: s.seed_range("seeds")?,
        delta: s.get("delta")?,
        max_rows: s.get("max_rows")?,
        epsilon: s.get("epsilon")?,
        behavior: s.get("behavior")?,
        betas: s.list("betas")?,
        families: s.list("families")?,
        train: TrainConfig {
            learning_rate: s.get("learning_rate")?,
            batch_size: s.get("batch_size")?,
            epochs: s.get("epochs")?,
            seed: 0,
            temperature: s.get("temperature")?,
        },
        data_seed: s.get("seed")?,
        cost,
        pool_dir: Some(out.to_path_buf()),
    })
}

fn select_defaults(out: &Path) -> Vec<(&'static str, String)> {
    let d = SelectConfig::default();
    vec![
        ("pool", out.display().to_string()),
        ("method", join(&d.selectors)),
        ("delta", d.delta.to_string()),
        ("dataset", String::new()),
        ("fraction", String::new()),
        ("seeds", String::new()),
    ]
}

fn select_config(s: &Settings) -> Result<SelectConfig> {
    Ok(SelectConfig {
        pool: PathBuf::from(s.raw("pool")),
        selectors: s.list("method")?,
        delta: s.get("delta")?,
        datasets: s.list("dataset")?,
        fractions: s.list("fraction")?,
        seeds: s.seed_range("seeds")?,
    })
}

fn evaluate_defaults() -> Vec<(&'static str, String)> {
    vec![
        ("dataset", String::new()),
        ("policy", String::new()),
        ("method", "pcrp".into()),
        ("delta", "0.05".into()),
    ]
}

fn evaluate_config(s: &Settings) -> Result<EvaluateConfig> {
    let path = |key: &str| match s.raw(key) {
        "" => Err(config_err(format!("evaluate needs --{key}"))),
        p => Ok(PathBuf::from(p)),
    };
    Ok(EvaluateConfig {
        log: path("dataset")?,
        policy: path("policy")?,
        method: s.get("method")?,
        delta: s.get("delta")?,
    })
}

/// Runs one subcommand and returns its report without writing anything.
pub fn execute(command: &Command) -> Result<ExperimentReport> {
    let args = command.args();
    let defaults = match command {
        Command::Coverage(_) => coverage_defaults(),
        Command::Heavytail(_) => heavytail_defaults(),
        Command::Learn(_) => learn_defaults(),
        Command::Select(_) => select_defaults(&args.out),
        Command::Evaluate(_) => evaluate_defaults(),
    };
    let s = Settings::resolve(defaults, args)?;
    let echo = s.map.clone();
    match command {
        Command::Coverage(_) => run_coverage(&coverage_config(&s)?, echo),
        Command::Heavytail(_) => run_heavytail(&heavytail_config(&s)?, echo),
        Command::Learn(_) => run_learn(&learn_config(&s, &args.out)?, echo),
        Command::Select(_) => run_select(&select_config(&s)?, echo),
        Command::Evaluate(_) => run_evaluate(&evaluate_config(&s)?, echo),
    }
}

pub fn write_report(report: &ExperimentReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    report.write_csv(fs::File::create(out.join("report.csv"))?)?;
    fs::write(out.join("manifest.json"), report.manifest_json())?;
    Ok(())
}

/// Re-verifies `report.csv` against its manifest and the row invariants.
pub fn check_report(subcommand: &str, out: &Path) -> Result<usize> {
    let rows = read_report_csv(fs::File::open(out.join("report.csv"))?)?;
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json"))?)
        .map_err(|e| ExperimentError::Data(format!("manifest.json: {e}")))?;
    let mut problems = check_rows(&rows);
    if manifest.subcommand != subcommand {
        problems.push(format!("manifest is for {:?}, not {subcommand:?}", manifest.subcommand));
    }
    if manifest.rows != rows.len() {
        problems.push(format!("manifest lists {} rows, report has {}", manifest.rows, rows.len()));
    }
    if let Some(r) = rows.iter().find(|r| r.experiment != subcommand) {
        problems.push(format!("row from experiment {:?}", r.experiment));
    }
    if problems.is_empty() {
        Ok(rows.len())
    } else {
        Err(ExperimentError::Data(problems.join("\n")))
    }
}

/// Entry point shared by the binary and tests; returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let name = cli.command.name();
    let out = &cli.command.args().out;
    let result = if cli.command.args().check {
        check_report(name, out).map(|n| println!("{}: {n} rows ok", out.join("report.csv").display()))
    } else {
        execute(&cli.command).and_then(|rep| {
            write_report(&rep, out)?;
            println!("{name}: wrote {} rows to {}", rep.rows.len(), out.join("report.csv").display());
            Ok(())
        })
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("opbet {name}: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> CommonArgs {
        CommonArgs {
            config: None,
            out: PathBuf::from("out"),
            delta: None,
            seeds: None,
            seed: None,
            dataset: None,
            fraction: None,
            method: None,
            policy: None,
            set: vec![],
            check: false,
        }
    }

    #[test]
    fn defaults_reproduce_library_configs() {
        let s = Settings::resolve(coverage_defaults(), &args()).unwrap();
        assert_eq!(coverage_config(&s).unwrap(), CoverageConfig::default());
        let s = Settings::resolve(heavytail_defaults(), &args()).unwrap();
        assert_eq!(heavytail_config(&s).unwrap(), HeavyTailConfig::default());
        let s = Settings::resolve(learn_defaults(), &args()).unwrap();
        let cfg = learn_config(&s, Path::new("out")).unwrap();
        assert_eq!(cfg, LearnConfig { pool_dir: Some("out".into()), ..LearnConfig::default() });
        let s = Settings::resolve(select_defaults(Path::new("out")), &args()).unwrap();
        assert_eq!(select_config(&s).unwrap(), SelectConfig::default());
    }

    #[test]
    fn flags_override_file_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        fs::write(&path, "# comment\ndelta = 0.2\nn = 40 # inline\n").unwrap();
        let mut a = args();
        a.config = Some(path.clone());
        a.delta = Some("0.3".into());
        let s = Settings::resolve(coverage_defaults(), &a).unwrap();
        let cfg = coverage_config(&s).unwrap();
        assert_eq!((cfg.delta, cfg.n), (0.3, 40));
        fs::write(&path, "bogus = 1\n").unwrap();
        let err = Settings::resolve(coverage_defaults(), &a).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn config_text_errors() {
        assert!(parse_config_text("novalue\n").is_err());
        assert!(parse_config_text("a = 1\na = 2\n").is_err());
        assert_eq!(parse_config_text("\n  # only comments\n").unwrap().len(), 0);
    }

    #[test]
    fn bad_values_are_config_errors() {
        let mut a = args();
        a.method = Some("pcrp,nonsense".into());
        let s = Settings::resolve(coverage_defaults(), &a).unwrap();
        assert!(matches!(coverage_config(&s), Err(ExperimentError::Config(_))));
        a.method = None;
        a.delta = Some("1.5".into());
        let cmd = Command::Coverage(a);
        assert!(matches!(execute(&cmd), Err(ExperimentError::Config(_))));
    }
}
