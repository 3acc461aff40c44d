//! The `purex` command line.
//!
//! ```text
//! purex simulate <config.json> [--set path=value]... [--out DIR] [--jobs N] [--seed S] [--preset caption-contest]
//! purex bounds [--simple-regret] [--brackets] [--h2] [--sh-m] [--sh] [--dsh] [--bsh] [--table] key=value...
//! purex ingest <captions.csv> [-o instance.json]
//! purex report <summary.json>... --out DIR [--force]
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error. The master seed is
//! taken from `--seed`, then the config, then `PUREX_SEED`, then 0.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{self, BoundRow, TableInstance};
use crate::error::{Error, Result};
use crate::harness::{
    read_summary_json, write_summary_csv, write_summary_json, Checkpoints, Experiment, ExperimentConfig,
    MetricsSummary,
};
use crate::instance::caption::CaptionTable;
use crate::instance::{GapProfile, NoiseModel};

pub const SEED_ENV: &str = "PUREX_SEED";

#[derive(Debug, Parser)]
#[command(name = "purex", version, about = "Pure-exploration bandit experiments and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write summary files.
    Simulate(SimulateArgs),
    /// Evaluate closed-form bounds.
    Bounds(BoundsArgs),
    /// Convert a caption vote table into an instance document.
    Ingest(IngestArgs),
    /// Merge summaries into per-metric plot tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    #[value(name = "caption-contest")]
    CaptionContest,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Override a config field, e.g. `--set horizon=2000`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    simple_regret: bool,
    #[arg(long)]
    brackets: bool,
    #[arg(long)]
    h2: bool,
    #[arg(long)]
    sh_m: bool,
    #[arg(long)]
    sh: bool,
    #[arg(long)]
    dsh: bool,
    #[arg(long)]
    bsh: bool,
    #[arg(long)]
    table: bool,
    /// Inputs: n, T, t, eps, m, c, delta, gaps=a,b,..., kind=linear|equal-gap.
    #[arg(value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    csv: PathBuf,
    /// Output path; defaults to the input with a `.json` extension.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(required = true)]
    summaries: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Merge even if the config hashes differ.
    #[arg(long)]
    force: bool,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Bounds(a) => bounds_cmd(a, out),
        Command::Ingest(a) => ingest(a, out),
        Command::Report(a) => report(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

fn apply_preset(config: &mut ExperimentConfig, preset: Preset) {
    match preset {
        Preset::CaptionContest => {
            config.noise = Some(NoiseModel::Bernoulli);
            config.permute = true;
            config.reuse.sh_samples = true;
            config.horizon = 10_000;
            config.trials = 500;
            config.checkpoints = Checkpoints::Every { every: 200 };
        }
    }
}

fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn write_file(path: &Path, write: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write(&mut f)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_hash: String,
    seed: u64,
    trials: u64,
    trial_offset: u64,
    config: &'a ExperimentConfig,
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = ExperimentConfig::from_path(&args.config)?;
    if let Some(p) = args.preset {
        apply_preset(&mut config, p);
    }
    for o in &args.overrides {
        config.apply_override(o)?;
    }
    config.seed = Some(resolve_seed(args.seed, config.seed)?);
    if args.jobs == Some(0) {
        return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
    }
    let base = args.config.parent().filter(|p| !p.as_os_str().is_empty());
    let experiment = Experiment::new(config, base)?;
    let summary = experiment.monte_carlo(args.jobs)?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_file(&args.out.join("summary.csv"), |f| write_summary_csv(&summary, f))?;
    write_file(&args.out.join("summary.json"), |f| write_summary_json(&summary, f))?;
    let config = experiment.config();
    let manifest = Manifest {
        tool: "purex",
        version: env!("CARGO_PKG_VERSION"),
        config_hash: summary.config_hash.clone(),
        seed: config.master_seed(),
        trials: config.trials,
        trial_offset: config.trial_offset,
        config,
    };
    write_file(&args.out.join("manifest.json"), |f| {
        serde_json::to_writer_pretty(&mut *f, &manifest)?;
        f.write_all(b"\n").map_err(|e| Error::io("manifest.json", e))
    })?;

    let io = |e| Error::io("<stdout>", e);
    for p in &summary.policies {
        if let Some(last) = p.points.last() {
            writeln!(
                out,
                "{}: t={} mean_regret={:.6} se={:.6} trials={}",
                p.policy,
                last.t,
                last.mean_regret(),
                last.std_err(),
                last.trials
            )
            .map_err(io)?;
        }
    }
    writeln!(out, "wrote {}", args.out.display()).map_err(io)?;
    Ok(())
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn parse(raw: &[String]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for p in raw {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("parameter `{p}` is not key=value")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params(map))
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{key}`")))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::InvalidArgument(format!("parameter `{key}={v}` is not a valid number")))
    }

    fn num_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        if self.0.contains_key(key) {
            self.num(key)
        } else {
            Ok(default)
        }
    }

    /// `T` for fixed-budget bounds; `t` is accepted as an alias.
    fn budget(&self) -> Result<u64> {
        if self.0.contains_key("T") {
            self.num("T")
        } else {
            self.num("t")
        }
    }

    fn time(&self) -> Result<u64> {
        if self.0.contains_key("t") {
            self.num("t")
        } else {
            self.num("T")
        }
    }

    fn gaps(&self) -> Result<GapProfile> {
        let raw = self.raw("gaps")?;
        let gaps = raw
            .split(',')
            .map(|g| {
                g.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("gap `{g}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        GapProfile::from_gaps(gaps)
    }

    fn pairs(&self, keys: &[&str]) -> Vec<(&'static str, String)> {
        const NAMES: [&str; 9] = ["n", "T", "t", "eps", "m", "c", "delta", "gaps", "kind"];
        NAMES
            .iter()
            .filter(|k| keys.contains(k))
            .filter_map(|k| self.0.get(*k).map(|v| (*k, v.clone())))
            .collect()
    }
}

fn bounds_cmd(args: BoundsArgs, out: &mut dyn Write) -> Result<()> {
    let p = Params::parse(&args.params)?;
    let known = ["n", "T", "t", "eps", "m", "c", "delta", "gaps", "kind"];
    if let Some(k) = p.0.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::InvalidArgument(format!("unknown parameter `{k}`")));
    }
    let c: f64 = p.num_or("c", 1.0)?;
    let mut rows = Vec::new();
    if args.simple_regret {
        let v = bounds::simple_regret_bound(p.num("n")?, p.budget()?)?;
        rows.push(BoundRow::new("simple_regret", &p.pairs(&["n", "T", "t"]), v, None));
    }
    if args.brackets {
        let b = bounds::brackets_open(p.time()?)?;
        let params = p.pairs(&["t", "T"]);
        rows.push(BoundRow::new("brackets_open", &params, b.opened as f64, None));
        rows.push(BoundRow::new("brackets_lower", &params, b.lower, None));
        rows.push(BoundRow::new("brackets_upper", &params, b.upper, None));
    }
    if args.h2 {
        let v = bounds::hardness_h2(&p.gaps()?)?;
        rows.push(BoundRow::new("h2", &p.pairs(&["gaps"]), v, None));
    }
    if args.sh_m {
        let v = bounds::err_bound_sh_m(p.num("n")?, p.budget()?, p.num("eps")?, p.num("m")?, c)?;
        rows.push(BoundRow::new("err_sh_m", &p.pairs(&["n", "T", "t", "eps", "m", "c"]), v.value, Some(v.exponent)));
    }
    if args.sh {
        let v = bounds::err_bound_sh(&p.gaps()?, p.budget()?, p.num("eps")?, c)?;
        rows.push(BoundRow::new("err_sh", &p.pairs(&["gaps", "T", "t", "eps", "c"]), v.value, Some(v.exponent)));
    }
    if args.dsh {
        let v = bounds::err_bound_dsh(&p.gaps()?, p.time()?, p.num("eps")?, c)?;
        rows.push(BoundRow::new("err_dsh", &p.pairs(&["gaps", "t", "T", "eps", "c"]), v.value, Some(v.exponent)));
    }
    if args.bsh {
        let v = bounds::err_bound_bsh(&p.gaps()?, p.num("eps")?, p.time()?, c)?;
        rows.push(BoundRow::new("err_bsh", &p.pairs(&["gaps", "t", "T", "eps", "c"]), v.value, Some(v.exponent)));
    }
    if args.table {
        let kind = match p.raw("kind")? {
            "linear" => TableInstance::Linear,
            "equal-gap" | "equal_gap" => TableInstance::EqualGap,
            other => return Err(Error::InvalidArgument(format!("unknown table instance `{other}`"))),
        };
        let m = if kind == TableInstance::EqualGap { p.num("m")? } else { p.num_or("m", 1)? };
        let table = bounds::sample_complexity_table(kind, p.num("n")?, m, p.num("eps")?, p.num("delta")?)?;
        let params = p.pairs(&["kind", "n", "m", "eps", "delta"]);
        for (alg, v) in table {
            rows.push(BoundRow::new(&format!("complexity_{alg}"), &params, v, None));
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "select at least one bound (--simple-regret, --brackets, --h2, --sh-m, --sh, --dsh, --bsh, --table)"
                .into(),
        ));
    }
    let mut buf = Vec::new();
    bounds::write_bound_rows(&rows, &mut buf)?;
    out.write_all(&buf).map_err(|e| Error::io("<stdout>", e))
}

fn ingest(args: IngestArgs, out: &mut dyn Write) -> Result<()> {
    let file = fs::File::open(&args.csv).map_err(|e| Error::io(&args.csv, e))?;
    let table = CaptionTable::parse(std::io::BufReader::new(file))?;
    let label = args
        .csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "captions".into());
    let instance = table.to_instance(label)?;
    let dest = args.out.unwrap_or_else(|| args.csv.with_extension("json"));
    fs::write(&dest, instance.to_json()? + "\n").map_err(|e| Error::io(&dest, e))?;
    let means = instance.means();
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = instance.max_mean();
    writeln!(out, "n={} mean_min={lo:.6} mean_max={hi:.6} -> {}", instance.n(), dest.display())
        .map_err(|e| Error::io("<stdout>", e))
}

fn report(args: ReportArgs, out: &mut dyn Write) -> Result<()> {
    let mut merged: Option<MetricsSummary> = None;
    for path in &args.summaries {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let s = read_summary_json(std::io::BufReader::new(file))
            .map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))?;
        match merged.as_mut() {
            None => merged = Some(s),
            Some(m) if args.force => m.merge_unchecked(&s)?,
            Some(m) => m.merge(&s).map_err(|e| match e {
                Error::SchemaMismatch(msg) => {
                    Error::SchemaMismatch(format!("{}: {msg} (use --force to merge anyway)", path.display()))
                }
                other => other,
            })?,
        }
    }
    let summary = merged.expect("clap requires at least one summary");
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let mut written = vec![];
    let regret = plot_table(&summary, |pt| {
        let mean = pt.mean_regret();
        let se = pt.std_err();
        [mean, (mean - se).max(0.0), mean + se]
    });
    let path = args.out.join("regret.csv");
    fs::write(&path, regret).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    for (k, eps) in summary.epsilons.iter().enumerate() {
        let table = plot_table(&summary, |pt| {
            let (lo, hi) = crate::harness::wilson_interval(pt.failures[k], pt.trials);
            [pt.failures[k] as f64 / pt.trials as f64, lo, hi]
        });
        let path = args.out.join(format!("error_eps_{eps}.csv"));
        fs::write(&path, table).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let path = args.out.join("merged.json");
    write_file(&path, |f| write_summary_json(&summary, f))?;
    written.push(path);
    for p in written {
        writeln!(out, "wrote {}", p.display()).map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

/// Wide table: `t`, then `<policy>:value,<policy>:ci_low,<policy>:ci_high,<policy>:trials`.
fn plot_table(summary: &MetricsSummary, cell: impl Fn(&crate::harness::PointStats) -> [f64; 3]) -> String {
    let times: BTreeSet<u64> = summary.policies.iter().flat_map(|p| p.points.iter().map(|pt| pt.t)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for p in &summary.policies {
        for col in ["value", "ci_low", "ci_high", "trials"] {
            header.push(format!("{}:{col}", p.policy));
        }
    }
    w.write_record(&header).expect("in-memory csv");
    for t in times {
        let mut row = vec![t.to_string()];
        for p in &summary.policies {
            match p.points.iter().find(|pt| pt.t == t) {
                Some(pt) => {
                    row.extend(cell(pt).iter().map(f64::to_string));
                    row.push(pt.trials.to_string());
                }
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}
