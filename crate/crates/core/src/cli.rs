//! `tsrc` command line: each subcommand reads or generates its input, runs one
//! library operation and writes a self-describing output file.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::engineer::{plan, recipe_table, PlanOptions, Recipe, TGrid};
use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::io::{fmt17, read_json, write_atomic, StateFile};
use crate::lossy::{fidelity_sweep, sweep_csv as eta_csv, TRUSTED_ETA_MIN};
use crate::par::Exec;
use crate::stats::{ensemble_reports, husimi, scaling_sweep, stats_report, sweep_csv, StatsReport, Welford, Window};
use crate::tsrc::{generate_tsrc, EnsembleSpec, TsrcSpec, PRNG_ID};

pub const TOOL: &str = "tsrc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "tsrc", version, about = "Random truncated Fock states: statistics, phase space and conditional synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one state and write it as JSON.
    Gen(GenArgs),
    /// Photon statistics of one state, or of an ensemble.
    Stats(StatsArgs),
    /// Ensemble statistics over a range of truncation sizes (CSV).
    Sweep(SweepArgs),
    /// Husimi Q function on a grid (CSV).
    Husimi(HusimiArgs),
    /// Synthesis recipe for a state (JSON plus a table).
    Plan(PlanArgs),
    /// Fidelity of a recipe under detector inefficiency (CSV).
    Fidelity(FidelityArgs),
}

/// A state read from `--input` or generated from `--n`, `--theta`, `--seed`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct StateSource {
    /// State JSON written by `gen`.
    #[arg(long, conflicts_with = "n")]
    pub input: Option<PathBuf>,
    /// Truncation N (the state spans |0⟩..|N⟩).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl StateSource {
    fn load(&self) -> Result<FockState> {
        match (&self.input, self.n) {
            (Some(path), _) => read_json::<StateFile>(path)?.to_state(),
            (None, Some(n)) => {
                let spec = self.spec(n);
                spec.validate()?;
                generate_tsrc(&spec)
            }
            (None, None) => Err(Error::ConfigInvalid("give either --input or --n".into())),
        }
    }

    fn spec(&self, n: usize) -> TsrcSpec {
        TsrcSpec::new(n, self.theta, self.seed)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// With --n, also summarize this many seeded realizations.
    #[arg(long, default_value_t = 1)]
    pub realizations: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// `lo:hi`, `lo:hi:step` or a comma-separated list.
    #[arg(long)]
    pub n: String,
    #[arg(long, default_value_t = 30)]
    pub realizations: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write every realization, not only the first and the mean.
    #[arg(long)]
    pub all_realizations: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HusimiArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Cells per axis.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// `auto` or `re0:re1:im0:im1`.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    pub window: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlanArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Skip the optimization and use this transmittance.
    #[arg(long)]
    pub fixed_t: Option<f64>,
    /// `lo:hi:step` scan for the transmittance.
    #[arg(long, default_value = "0.5:0.999:0.001")]
    pub t_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the text table (default: next to --out with a .txt
    /// extension).
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FidelityArgs {
    /// Recipe JSON written by `plan`.
    #[arg(long)]
    pub input: PathBuf,
    /// Detector efficiency; repeat for a sweep.
    #[arg(long = "eta", default_values_t = vec![0.9, 0.95, 1.0])]
    pub eta: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    run(&cli.command)
}

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Stats(a) => stats(a),
        Command::Sweep(a) => sweep(a),
        Command::Husimi(a) => husimi_cmd(a),
        Command::Plan(a) => plan_cmd(a),
        Command::Fidelity(a) => fidelity(a),
    }
}

/// `{"error": kind, "message": text}` for stderr.
pub fn error_json(e: &Error) -> String {
    json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

fn meta(command: &str, config: &impl Serialize) -> Result<Value> {
    Ok(json!({
        "tool": TOOL,
        "version": VERSION,
        "prng": PRNG_ID,
        "command": command,
        "config": serde_json::to_value(config)?,
    }))
}

fn csv_preamble(meta: &Value) -> String {
    format!(
        "# tool={} version={} prng={}\n# config={}\n",
        TOOL,
        VERSION,
        PRNG_ID,
        serde_json::to_string(&meta["config"]).unwrap_or_default()
    )
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json_text(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn gen(a: &GenArgs) -> Result<()> {
    let spec = TsrcSpec::new(a.n, a.theta, a.seed);
    spec.validate()?;
    let state = generate_tsrc(&spec)?;
    let file = StateFile::new(&state, meta("gen", a)?);
    emit(a.out.as_deref(), &to_json_text(&file)?)
}

#[derive(Serialize)]
struct EnsembleSummary {
    realizations: usize,
    mean: Value,
    sub_poissonian_fraction: f64,
    squeezed_fraction: f64,
}

fn summarize(reports: &[StatsReport]) -> EnsembleSummary {
    let mut acc: [Welford; 7] = Default::default();
    let mut sub = 0usize;
    let mut squeezed = 0usize;
    for r in reports {
        let vals = [Some(r.mean_n), Some(r.delta_n), r.mandel_q, r.g2, Some(r.x1_var), Some(r.x2_var), Some(r.entropy)];
        for (w, v) in acc.iter_mut().zip(vals) {
            if let Some(v) = v {
                w.push(v);
            }
        }
        sub += usize::from(r.mandel_q.is_some_and(|q| q < 0.0));
        squeezed += usize::from(r.is_squeezed());
    }
    let names = ["mean_n", "delta_n", "mandel_q", "g2", "x1_var", "x2_var", "entropy"];
    let mean: serde_json::Map<String, Value> = names
        .iter()
        .zip(&acc)
        .map(|(k, w)| (k.to_string(), json!(w.mean())))
        .collect();
    let total = reports.len() as f64;
    EnsembleSummary {
        realizations: reports.len(),
        mean: Value::Object(mean),
        sub_poissonian_fraction: sub as f64 / total,
        squeezed_fraction: squeezed as f64 / total,
    }
}

fn stats(a: &StatsArgs) -> Result<()> {
    if a.realizations == 0 {
        return Err(Error::ConfigInvalid("--realizations must be at least 1".into()));
    }
    let state = a.source.load()?;
    let report = stats_report(&state)?;
    let ensemble = match (a.source.n, a.realizations) {
        (Some(n), r) if r > 1 => {
            let spec = EnsembleSpec::new(a.source.spec(n), r);
            Some(summarize(&ensemble_reports(&spec, Exec::default())?))
        }
        (None, r) if r > 1 => {
            return Err(Error::ConfigInvalid("--realizations needs a generated state (--n)".into()));
        }
        _ => None,
    };
    let body = json!({ "report": report, "ensemble": ensemble, "meta": meta("stats", a)? });
    emit(a.out.as_deref(), &to_json_text(&body)?)
}

/// `lo:hi`, `lo:hi:step`, `a,b,c` or a single value.
pub fn parse_n_values(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::ConfigInvalid(format!("bad N list {s:?}, expected lo:hi[:step] or a,b,c"));
    let nums = |sep: char| -> Result<Vec<usize>> {
        s.split(sep).map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect()
    };
    if s.contains(':') {
        let parts = nums(':')?;
        let (lo, hi, step) = match parts[..] {
            [lo, hi] => (lo, hi, 1),
            [lo, hi, step] => (lo, hi, step),
            _ => return Err(bad()),
        };
        if step == 0 || lo > hi {
            return Err(bad());
        }
        Ok((lo..=hi).step_by(step).collect())
    } else {
        nums(',')
    }
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let n_values = parse_n_values(&a.n)?;
    let base = TsrcSpec::new(0, a.theta, a.seed);
    base.validate()?;
    let rows = scaling_sweep(&n_values, &EnsembleSpec::new(base, a.realizations), a.all_realizations, Exec::default())?;
    let m = meta("sweep", a)?;
    emit(a.out.as_deref(), &(csv_preamble(&m) + &sweep_csv(&rows)))
}

/// `auto` or `re0:re1:im0:im1`.
pub fn parse_window(s: &str) -> Result<Window> {
    if s.trim() == "auto" {
        return Ok(Window::Auto);
    }
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::ConfigInvalid(format!("bad window {s:?}")))?;
    match parts[..] {
        [re_min, re_max, im_min, im_max] => Ok(Window::Explicit { re_min, re_max, im_min, im_max }),
        _ => Err(Error::ConfigInvalid(format!("bad window {s:?}, expected auto or re0:re1:im0:im1"))),
    }
}

fn husimi_cmd(a: &HusimiArgs) -> Result<()> {
    let window = parse_window(&a.window)?;
    let state = a.source.load()?;
    let grid = husimi(&state, window, a.grid)?;
    let m = meta("husimi", a)?;
    let text = format!(
        "{}# window={}:{}:{}:{} integral={}\n{}",
        csv_preamble(&m),
        fmt17(grid.re_min),
        fmt17(grid.re_max),
        fmt17(grid.im_min),
        fmt17(grid.im_max),
        fmt17(grid.integral()),
        grid.to_csv()
    );
    emit(a.out.as_deref(), &text)
}

#[derive(Serialize)]
struct RecipeFile<'a> {
    #[serde(flatten)]
    recipe: &'a Recipe,
    meta: Value,
}

fn plan_cmd(a: &PlanArgs) -> Result<()> {
    let t_grid: TGrid = a.t_grid.parse()?;
    let state = a.source.load()?;
    let options = PlanOptions { fixed_t: a.fixed_t, t_grid, dim: None };
    let recipe = plan(&state, &options)?;
    let json_text = to_json_text(&RecipeFile { recipe: &recipe, meta: meta("plan", a)? })?;
    let table = recipe_table(&recipe);
    emit(a.out.as_deref(), &json_text)?;
    let table_path = a.table.clone().or_else(|| a.out.as_ref().map(|p| p.with_extension("txt")));
    match table_path {
        Some(p) => {
            write_atomic(&p, table.as_bytes())?;
            if a.out.is_some() {
                print!("{table}");
            }
            Ok(())
        }
        None => {
            eprint!("{table}");
            Ok(())
        }
    }
}

fn fidelity(a: &FidelityArgs) -> Result<()> {
    let recipe: Recipe = read_json(&a.input)?;
    recipe.validate()?;
    let values = fidelity_sweep(&recipe, &a.eta)?;
    let m = meta("fidelity", a)?;
    let mut text = csv_preamble(&m);
    if a.eta.iter().any(|&e| e < TRUSTED_ETA_MIN) {
        text.push_str(&format!("# warning: first-order loss expansion is untrusted below eta={TRUSTED_ETA_MIN}\n"));
        eprintln!("warning: eta below {TRUSTED_ETA_MIN} is outside the first-order regime");
    }
    text.push_str(&eta_csv(&a.eta, &values));
    emit(a.out.as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_lists() {
        assert_eq!(parse_n_values("2:6").unwrap(), vec![2, 3, 4, 5, 6]);
        assert_eq!(parse_n_values("4:24:2").unwrap().len(), 11);
        assert_eq!(parse_n_values("10,100,1000").unwrap(), vec![10, 100, 1000]);
        assert_eq!(parse_n_values("7").unwrap(), vec![7]);
        for bad in ["5:2", "1:4:0", "a", "1:2:3:4", ""] {
            assert!(parse_n_values(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("auto").unwrap(), Window::Auto);
        assert_eq!(
            parse_window("-3:3:-2:2").unwrap(),
            Window::Explicit { re_min: -3.0, re_max: 3.0, im_min: -2.0, im_max: 2.0 }
        );
        assert!(parse_window("1:2:3").is_err());
    }

    #[test]
    fn usage_errors_are_config_errors() {
        let err = run_from(["tsrc", "gen", "--seed", "3"]).unwrap_err();
        assert_eq!(err.kind(), "ConfigInvalid");
        let v: Value = serde_json::from_str(&error_json(&err)).unwrap();
        assert_eq!(v["error"], "ConfigInvalid");
        let err = run_from(["tsrc", "stats"]).unwrap_err();
        assert_eq!(err.kind(), "ConfigInvalid");
    }

    #[test]
    fn files_round_trip_between_commands() {
        let dir = tempfile::tempdir().unwrap();
        let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
        run_from(["tsrc", "gen", "--n", "4", "--seed", "9", "--out", &p("s.json")]).unwrap();
        run_from(["tsrc", "stats", "--input", &p("s.json"), "--out", &p("r.json")]).unwrap();
        run_from(["tsrc", "husimi", "--input", &p("s.json"), "--grid", "12", "--out", &p("h.csv")]).unwrap();
        run_from(["tsrc", "plan", "--input", &p("s.json"), "--out", &p("plan.json")]).unwrap();
        run_from(["tsrc", "fidelity", "--input", &p("plan.json"), "--eta", "0.95", "--out", &p("f.csv")]).unwrap();
        let state: StateFile = read_json(Path::new(&p("s.json"))).unwrap();
        assert_eq!(state.meta["config"]["seed"], 9);
        assert_eq!(state.meta["prng"], PRNG_ID);
        let table = std::fs::read_to_string(p("plan.txt")).unwrap();
        assert_eq!(table.lines().count(), 2 + 5);
        let csv = std::fs::read_to_string(p("f.csv")).unwrap();
        assert!(csv.lines().any(|l| l == "eta,fidelity"));
    }
}
