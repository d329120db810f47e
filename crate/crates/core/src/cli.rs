//! Command-line front end.
//!
//! Subcommands: `solve-v`, `dist`, `ed`, `teleport` and `fig`. Every emitted
//! file carries `schema_version`, the subcommand and its fully resolved
//! `config` map, which `--config FILE` reads back. A config file may also be
//! plain `key = value` lines. Flags given on the command line override the
//! file. Exit codes: 0 success, 2 usage or domain error, 3 numerical failure.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dist::{
    arg_q_asymptotic, finite_n_distribution_at_time, fit_winding, large_n_distribution, s_support,
    ContinuousDistribution, GridSpec,
};
use crate::ed::pauli::MajoranaTable;
use crate::ed::{
    build_hamiltonian, build_majorana_ops, realization_distributions, realization_seed, run_ensemble,
    sample_couplings, EnsembleResult, Probe, SizeDistribution, SykParams,
};
use crate::error::{Error, Result};
use crate::io::SCHEMA_VERSION;
use crate::largeq::{solve_velocity, LargeQParams};
use crate::teleport::{scan_g, GScan, Method, TeleportSystem};

/// β𝒥 of the reference parameter set, giving `v ≈ 0.6`.
pub const REFERENCE_BETA_J: f64 = 3.206758;
/// Inverse temperature of the reference parameter set.
pub const REFERENCE_BETA: f64 = 2.0 * PI;
/// λ₀ values tabulated for the large-N figure.
pub const FIG3_LAMBDA0: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
/// Times tabulated for the finite-N figure.
pub const FIG4_TIMES: [f64; 4] = [3.0, 6.0, 9.0, 12.0];
/// Times of the exact-diagonalization figure.
pub const FIG5_TIMES: [f64; 5] = [0.5, 3.0, 6.0, 9.0, 12.0];

const BOOL_KEYS: [&str; 2] = ["probe-average", "exact"];

#[derive(Parser, Debug)]
#[command(
    name = "size-winding",
    version,
    about = "Operator size and size-winding distributions of the large-q SYK model",
    args_override_self = true,
    allow_negative_numbers = true
)]
pub struct Cli {
    /// Config file: `key = value` lines or a previous JSON/CSV output.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the large-q velocity equation and report v, κ and t_sc.
    SolveV(SolveVArgs),
    /// Tabulate the continuous size and winding size distributions.
    Dist(DistArgs),
    /// Exact-diagonalization ensemble of size distributions.
    Ed(EdArgs),
    /// Two-sided teleportation correlator over a coupling grid.
    Teleport(TeleportArgs),
    /// Regenerate the data behind one of the figures.
    Fig(FigArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistMode {
    #[value(alias = "largeN", alias = "large_n")]
    LargeN,
    #[value(alias = "finiteN", alias = "finite_n")]
    FiniteN,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SolveVArgs {
    /// Dimensionless coupling β𝒥.
    #[arg(long)]
    pub beta_j: f64,
    #[arg(long, default_value_t = REFERENCE_BETA)]
    pub beta: f64,
    /// Number of Majoranas, used for the default prefactor `C = N`.
    #[arg(long, default_value_t = 18)]
    pub n: u32,
    /// Scramblon prefactor `C` [default: N].
    #[arg(long)]
    pub prefactor_c: Option<f64>,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    pub format: TextFormat,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DistArgs {
    #[arg(long, value_enum)]
    pub mode: DistMode,
    /// Δ = 1/q.
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// Velocity v [default: 0.6 unless --beta-j is given].
    #[arg(long)]
    pub v: Option<f64>,
    /// Derive v from β𝒥 instead of giving it directly.
    #[arg(long)]
    pub beta_j: Option<f64>,
    #[arg(long, default_value_t = REFERENCE_BETA)]
    pub beta: f64,
    /// Number of Majoranas (finite-n width; default prefactor).
    #[arg(long, default_value_t = 18)]
    pub n: u32,
    /// Scramblon prefactor `C` [default: N].
    #[arg(long)]
    pub prefactor_c: Option<f64>,
    /// Real time (finite-n mode).
    #[arg(long)]
    pub t: Option<f64>,
    /// Propagator magnitude λ₀ (large-n mode).
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Uniform grid points on [0, 1].
    #[arg(long, default_value_t = 2001)]
    pub grid: usize,
    /// Extra points clustered at the support edge (large-n mode) [default: 20000].
    #[arg(long)]
    pub edge_points: Option<usize>,
    /// Window `lo,hi` for the linear fit of arg Q
    /// [default: 0.2,0.8 finite-n; s_min to s_min + 0.05 large-n].
    #[arg(long)]
    pub fit_window: Option<String>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    /// Output file [default: stdout].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EdArgs {
    /// Number of Majoranas.
    #[arg(long, default_value_t = 18)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub q: usize,
    #[arg(long, default_value_t = REFERENCE_BETA)]
    pub beta: f64,
    /// Coupling 𝒥 [default: 3.206758/β].
    #[arg(long)]
    pub script_j: Option<f64>,
    /// Comma-separated times.
    #[arg(long, default_value = "0.5,3,6,9,12", allow_hyphen_values = true)]
    pub t_list: String,
    #[arg(long, default_value_t = 100)]
    pub realizations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Probed flavor, 1-based.
    #[arg(long, default_value_t = 1)]
    pub probe: usize,
    /// Average over all flavors instead of probing one.
    #[arg(long)]
    pub probe_average: bool,
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    pub format: TableFormat,
    /// Worker threads [default: all cores].
    #[arg(long, env = "SIZE_WINDING_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TeleportArgs {
    /// JSON output of `ed` to read `Q(n)` and ⟨V⟩ from.
    #[arg(long, conflicts_with = "exact", required_unless_present = "exact")]
    pub from_ed: Option<PathBuf>,
    /// Evaluate the correlator exactly in the doubled space.
    #[arg(long)]
    pub exact: bool,
    /// Number of Majoranas (exact) [default: 8].
    #[arg(long)]
    pub n: Option<usize>,
    /// [default: 4]
    #[arg(long)]
    pub q: Option<usize>,
    /// [default: 2π]
    #[arg(long)]
    pub beta: Option<f64>,
    /// [default: 3.206758/β]
    #[arg(long)]
    pub script_j: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated times (exact) [default: 0.5,3,6,9,12].
    #[arg(long, allow_hyphen_values = true)]
    pub t_list: Option<String>,
    /// Probed flavor, 1-based (exact) [default: 1].
    #[arg(long)]
    pub probe: Option<usize>,
    /// Couplings: comma list or `start:stop:step`.
    #[arg(long, alias = "g", default_value = "-1:1:0.01", allow_hyphen_values = true)]
    pub g_grid: String,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FigArgs {
    #[arg(value_enum)]
    #[serde(skip)]
    pub figure: Figure,
    /// Realizations for fig5.
    #[arg(long, default_value_t = 100)]
    pub realizations: usize,
    /// Base seed for fig5.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, env = "SIZE_WINDING_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Output file [default: <figure>.csv].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match expand_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 3 for numerical failures, 2 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::SolveV(a) => cmd_solve_v(a),
        Command::Dist(a) => cmd_dist(a),
        Command::Ed(a) => cmd_ed(a),
        Command::Teleport(a) => cmd_teleport(a),
        Command::Fig(a) => cmd_fig(a),
    }
}

// ---------------------------------------------------------------- config files

/// Splice the contents of `--config FILE` in front of the explicit flags.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => {
                let p = it.next().ok_or_else(|| Error::domain("--config needs a file argument"))?;
                path = Some(PathBuf::from(p));
            }
            Some(s) if s.starts_with("--config=") => path = Some(PathBuf::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let (command, entries) = load_config(&path)?;
    let has_sub = rest.get(1).and_then(|a| a.to_str()).is_some_and(|s| !s.starts_with('-'));
    if !has_sub {
        let cmd = command.ok_or_else(|| {
            Error::Schema(format!("{} names no subcommand; give one on the command line", path.display()))
        })?;
        rest.insert(1.min(rest.len()), cmd.into());
    }
    let at = 2.min(rest.len());
    let flags: Vec<OsString> = entries.into_iter().flat_map(|(k, v)| to_flag(&k, &v)).collect();
    rest.splice(at..at, flags);
    Ok(rest)
}

fn to_flag(key: &str, value: &Value) -> Option<OsString> {
    let key = key.replace('_', "-");
    let text = match value {
        Value::Null => return None,
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if BOOL_KEYS.contains(&key.as_str()) {
        return (text == "true").then(|| format!("--{key}").into());
    }
    Some(format!("--{key}={text}").into())
}

type ConfigEntries = (Option<String>, Vec<(String, Value)>);

fn load_config(path: &Path) -> Result<ConfigEntries> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::domain(format!("cannot read config {}: {e}", path.display())))?;
    if let Ok(v) = serde_json::from_str::<Value>(&text) {
        return config_from_json(&v, path);
    }
    if let Some(first) = text.lines().next() {
        if let Some(meta) = first.strip_prefix('#') {
            if let Ok(v) = serde_json::from_str::<Value>(meta.trim()) {
                if v.get("config").is_some() {
                    return config_from_json(&v, path);
                }
            }
        }
    }
    let mut command = None;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Schema(format!("{}:{}: expected `key = value`, got `{line}`", path.display(), i + 1))
        })?;
        let (k, v) = (k.trim(), v.trim().trim_matches('"'));
        if k == "command" {
            command = Some(v.to_string());
        } else {
            entries.push((k.to_string(), Value::String(v.to_string())));
        }
    }
    Ok((command, entries))
}

fn config_from_json(v: &Value, path: &Path) -> Result<ConfigEntries> {
    let map = v
        .get("config")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Schema(format!("{} has no `config` object", path.display())))?;
    let command = v.get("command").and_then(Value::as_str).map(str::to_string);
    Ok((command, map.iter().map(|(k, v)| (k.clone(), v.clone())).collect()))
}

// ---------------------------------------------------------------- helpers

fn usage(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Comma-separated list of finite numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let out = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(format!("`{x}` is not a finite number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(usage("empty list"));
    }
    Ok(out)
}

/// Comma list or `start:stop:step` range, endpoints included.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [_] => parse_list(s),
        [a, b, h] => {
            let (a, b, h) = (parse_list(a)?[0], parse_list(b)?[0], parse_list(h)?[0]);
            if !(h > 0.0) || b < a {
                return Err(usage(format!("range {s} needs start ≤ stop and a positive step")));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            if n > 1_000_000 {
                return Err(usage(format!("range {s} has more than 10⁶ points")));
            }
            Ok((0..=n).map(|i| a + i as f64 * h).collect())
        }
        _ => Err(usage(format!("cannot parse grid `{s}`"))),
    }
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    match parse_list(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(usage(format!("fit window `{s}` must be `lo,hi`"))),
    }
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json(out: Option<&Path>, v: &Value) -> Result<()> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn config_of<T: Serialize>(args: &T) -> Result<Value> {
    Ok(serde_json::to_value(args)?)
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| usage(format!("cannot build worker pool: {e}")))
}

/// `𝒥 = 3.206758/β`, so that `β𝒥` stays at the reference value; at `β = 0`
/// the reference `β = 2π` is used instead.
fn reference_script_j(beta: f64) -> f64 {
    if beta > 0.0 {
        REFERENCE_BETA_J / beta
    } else {
        REFERENCE_BETA_J / REFERENCE_BETA
    }
}

fn one_based_probe(probe: usize, n: usize) -> Result<usize> {
    if probe == 0 || probe > n {
        return Err(usage(format!("--probe must lie in 1..={n}, got {probe}")));
    }
    Ok(probe - 1)
}

// ---------------------------------------------------------------- solve-v

fn cmd_solve_v(mut a: SolveVArgs) -> Result<()> {
    let c = a.prefactor_c.unwrap_or(a.n as f64);
    a.prefactor_c = Some(c);
    let v = solve_velocity(a.beta_j)?;
    let params = LargeQParams::from_coupling(0.25, a.beta_j, a.beta, c)?;
    match a.format {
        TextFormat::Text => {
            println!("v = {v}");
            println!("kappa = {}", params.kappa());
            println!("t_sc = {}", params.scrambling_time());
        }
        TextFormat::Json => write_json(
            None,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "solve-v",
                "config": config_of(&a)?,
                "v": v,
                "kappa": params.kappa(),
                "scrambling_time": params.scrambling_time(),
                "chaos_bound_ratio": params.chaos_bound_ratio(),
            }),
        )?,
    }
    Ok(())
}

// ---------------------------------------------------------------- dist

fn cmd_dist(mut a: DistArgs) -> Result<()> {
    if a.v.is_some() && a.beta_j.is_some() {
        return Err(usage("give either --v or --beta-j, not both"));
    }
    let c = a.prefactor_c.unwrap_or(a.n as f64);
    a.prefactor_c = Some(c);
    let params = match a.beta_j {
        Some(bj) => LargeQParams::from_coupling(a.delta, bj, a.beta, c)?,
        None => {
            let v = a.v.unwrap_or(0.6);
            a.v = Some(v);
            LargeQParams::new(a.delta, v, a.beta, c)?
        }
    };
    let dist = match a.mode {
        DistMode::LargeN => {
            if a.t.is_some() {
                return Err(usage("--t is not accepted in large-n mode; give --lambda0"));
            }
            let l0 = a.lambda0.ok_or_else(|| usage("--lambda0 is required in large-n mode"))?;
            let edge = a.edge_points.unwrap_or(GridSpec::default().edge_points);
            a.edge_points = Some(edge);
            large_n_distribution(l0, &params, &GridSpec { points: a.grid, edge_points: edge })?
        }
        DistMode::FiniteN => {
            if a.lambda0.is_some() {
                return Err(usage("--lambda0 is not accepted in finite-n mode; give --t"));
            }
            if a.edge_points.is_some() {
                return Err(usage("--edge-points applies to large-n mode only"));
            }
            let t = a.t.ok_or_else(|| usage("--t is required in finite-n mode"))?;
            finite_n_distribution_at_time(t, &params, a.n, &GridSpec::uniform(a.grid))?
        }
    };
    let window = match &a.fit_window {
        Some(w) => parse_window(w)?,
        None => {
            let w = match a.mode {
                DistMode::FiniteN => (0.2, 0.8),
                DistMode::LargeN => {
                    let lo = s_support(&params).0;
                    (lo + 1e-9, lo + 0.05)
                }
            };
            a.fit_window = Some(format!("{},{}", w.0, w.1));
            w
        }
    };
    let fit = match fit_winding(&dist, window) {
        Ok(f) => Some(f),
        Err(e) => {
            eprintln!("note: no winding fit: {e}");
            None
        }
    };
    let norm = dist.normalization();
    eprintln!(
        "lambda0 = {:.6e}, normalization = {norm:.9}, winding slope = {}",
        dist.lambda0,
        fit.map_or("n/a".into(), |f| format!("{:.6} rad per unit s", f.slope))
    );
    let mut meta = dist.metadata();
    let extra = json!({
        "command": "dist",
        "config": config_of(&a)?,
        "s_support": s_support(&params),
        "normalization": norm,
        "winding_fit": fit,
    });
    merge(&mut meta, extra);
    match a.format {
        TableFormat::Csv => {
            let mut w = open_out(a.out.as_deref())?;
            dist.write_csv_with_meta(&meta, &mut w)?;
            w.flush()?;
        }
        TableFormat::Json => {
            merge(&mut meta, dist_columns(&dist));
            write_json(a.out.as_deref(), &meta)?;
        }
    }
    Ok(())
}

fn dist_columns(d: &ContinuousDistribution) -> Value {
    json!({
        "s": d.s_grid,
        "P": d.p,
        "re_Q": d.q.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im_Q": d.q.iter().map(|z| z.im).collect::<Vec<_>>(),
        "abs_Q": d.q.iter().map(|z| z.norm()).collect::<Vec<_>>(),
        "arg_Q": d.q.iter().map(|z| z.arg()).collect::<Vec<_>>(),
    })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

// ---------------------------------------------------------------- ed

fn cmd_ed(mut a: EdArgs) -> Result<()> {
    let beta = a.beta;
    let script_j = *a.script_j.get_or_insert_with(|| reference_script_j(beta));
    let params = SykParams {
        n_majorana: a.n,
        q: a.q,
        script_j,
        beta: a.beta,
        base_seed: a.seed,
    };
    params.validate()?;
    let probe = if a.probe_average {
        Probe::AllFlavors
    } else {
        Probe::Flavor(one_based_probe(a.probe, a.n)?)
    };
    let t_list = parse_list(&a.t_list)?;
    let ens = run_ensemble(&params, &t_list, a.realizations, probe, a.threads)?;
    eprintln!("mean <V> = {:.6}", ens.mean_v_expectation);
    for (i, t) in ens.t_list.iter().enumerate() {
        let peak = argmax(&ens.mean_p[i]);
        eprintln!("t = {t}: mean P peaks at n = {peak}");
    }
    let config = config_of(&a)?;
    match a.format {
        TableFormat::Json => write_json(
            a.out.as_deref(),
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "ed",
                "config": config,
                "ensemble": ens,
            }),
        ),
        TableFormat::Csv => {
            let mut w = open_out(a.out.as_deref())?;
            write_ed_csv(&ens, config, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
}

fn write_ed_csv(ens: &EnsembleResult, config: Value, w: &mut dyn Write) -> Result<()> {
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "ed",
        "config": config,
        "params": ens.params,
        "probe": ens.probe,
        "realization_seeds": ens.realization_seeds,
        "mean_v_expectation": ens.mean_v_expectation,
    });
    writeln!(w, "# {meta}")?;
    writeln!(w, "t,n,P,re_Q,im_Q,abs_Q,arg_mean_Q,mean_arg_Q,stderr_P,stderr_re_Q,stderr_im_Q")?;
    for (i, t) in ens.t_list.iter().enumerate() {
        for n in 0..ens.mean_p[i].len() {
            let q = ens.mean_q[i][n];
            writeln!(
                w,
                "{t},{n},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                ens.mean_p[i][n],
                q.re,
                q.im,
                q.norm(),
                ens.arg_mean_q[i][n],
                ens.mean_arg_q[i][n],
                ens.stderr_p[i][n],
                ens.stderr_q[i][n].0,
                ens.stderr_q[i][n].1,
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- teleport

/// Read an `ed` JSON output, checking its schema.
pub fn load_ensemble(path: &Path) -> Result<EnsembleResult> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{} is not valid JSON: {e}", path.display())))?;
    match v.get("schema_version").and_then(Value::as_u64) {
        Some(x) if x == SCHEMA_VERSION as u64 => {}
        other => {
            return Err(Error::Schema(format!(
                "{}: schema_version {other:?}, expected {SCHEMA_VERSION}",
                path.display()
            )))
        }
    }
    if v.get("command").and_then(Value::as_str) != Some("ed") {
        return Err(Error::Schema(format!("{} is not the output of `ed`", path.display())));
    }
    let ens: EnsembleResult = serde_json::from_value(v.get("ensemble").cloned().unwrap_or(Value::Null))
        .map_err(|e| Error::Schema(format!("{}: malformed ensemble: {e}", path.display())))?;
    let n = ens.params.n_majorana;
    let consistent = ens.mean_q.len() == ens.t_list.len()
        && ens.mean_p.len() == ens.t_list.len()
        && ens.mean_q.iter().all(|q| q.len() == n + 1)
        && ens.mean_p.iter().all(|p| p.len() == n + 1);
    if !consistent {
        return Err(Error::Schema(format!(
            "{}: array lengths do not match t_list and N = {n}",
            path.display()
        )));
    }
    Ok(ens)
}

struct TeleportRow {
    t: f64,
    scan: GScan,
    method: Method,
    v_expectation: f64,
}

fn cmd_teleport(mut a: TeleportArgs) -> Result<()> {
    let g_grid = parse_grid(&a.g_grid)?;
    let rows = match &a.from_ed {
        Some(path) => {
            let exact_only = [
                ("--n", a.n.is_some()),
                ("--q", a.q.is_some()),
                ("--beta", a.beta.is_some()),
                ("--script-j", a.script_j.is_some()),
                ("--seed", a.seed.is_some()),
                ("--t-list", a.t_list.is_some()),
                ("--probe", a.probe.is_some()),
            ];
            if let Some((flag, _)) = exact_only.iter().find(|(_, set)| *set) {
                return Err(usage(format!("{flag} applies to --exact only; --from-ed reads it from the file")));
            }
            let ens = load_ensemble(path)?;
            let v = ens.mean_v_expectation;
            (0..ens.t_list.len())
                .map(|i| {
                    Ok(TeleportRow {
                        t: ens.t_list[i],
                        scan: scan_g(&ens.mean_distribution(i), &g_grid, v)?,
                        method: Method::FromQ,
                        v_expectation: v,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            let n = *a.n.get_or_insert(8);
            let beta = *a.beta.get_or_insert(REFERENCE_BETA);
            let params = SykParams {
                n_majorana: n,
                q: *a.q.get_or_insert(4),
                script_j: *a.script_j.get_or_insert_with(|| reference_script_j(beta)),
                beta,
                base_seed: *a.seed.get_or_insert(1),
            };
            let k = one_based_probe(*a.probe.get_or_insert(1), n)?;
            let t_list = parse_list(a.t_list.get_or_insert_with(|| "0.5,3,6,9,12".into()))?;
            exact_rows(&params, &t_list, &g_grid, k)?
        }
    };
    for r in &rows {
        eprintln!(
            "t = {} ({:?}): max |F| = {:.6} at g = {}",
            r.t, r.method, r.scan.peak_abs_f, r.scan.g_peak
        );
    }
    let config = config_of(&a)?;
    match a.format {
        TableFormat::Csv => {
            let mut w = open_out(a.out.as_deref())?;
            let meta = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "teleport",
                "config": config,
                "v_expectation": rows.first().map(|r| r.v_expectation),
            });
            writeln!(w, "# {meta}")?;
            writeln!(w, "t,g,re_F,im_F,abs_F,method,v_expectation")?;
            for r in &rows {
                let m = method_name(r.method);
                for x in &r.scan.results {
                    writeln!(
                        w,
                        "{},{},{:.17e},{:.17e},{:.17e},{m},{:.17e}",
                        x.t,
                        x.g,
                        x.f.re,
                        x.f.im,
                        x.f.norm(),
                        r.v_expectation
                    )?;
                }
            }
            w.flush()?;
        }
        TableFormat::Json => {
            let scans: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "t": r.t,
                        "method": r.method,
                        "v_expectation": r.v_expectation,
                        "g_peak": r.scan.g_peak,
                        "peak_abs_f": r.scan.peak_abs_f,
                        "results": r.scan.results,
                    })
                })
                .collect();
            write_json(
                a.out.as_deref(),
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": "teleport",
                    "config": config,
                    "v_expectation": rows.first().map(|r| r.v_expectation),
                    "scans": scans,
                }),
            )?;
        }
    }
    Ok(())
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::ExactDoubled => "exact_doubled",
        Method::FromQ => "from_q",
    }
}

/// Exact doubled-space correlator and its `Q(n)` counterpart for realization
/// 0 of `params.base_seed`.
fn exact_rows(params: &SykParams, t_list: &[f64], g_grid: &[f64], k: usize) -> Result<Vec<TeleportRow>> {
    params.validate()?;
    let h: Mat<C64> = build_hamiltonian(&sample_couplings(params, 0)?)?;
    let sys = TeleportSystem::new(&h, params.n_majorana, params.beta)?;
    let table = MajoranaTable::new(params.n_majorana)?;
    let chis = build_majorana_ops(params.n_majorana)?;
    let seed = realization_seed(params.base_seed, 0);
    let (dists, v_q): (Vec<SizeDistribution>, f64) =
        realization_distributions(params, seed, t_list, Probe::Flavor(k), &table, &chis)?;
    let mut rows = Vec::new();
    for (i, &t) in t_list.iter().enumerate() {
        let results = g_grid
            .iter()
            .map(|&g| sys.correlator(t, g, k))
            .collect::<Result<Vec<_>>>()?;
        let (argmax, peak) = results
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.f.norm()))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        rows.push(TeleportRow {
            t,
            scan: GScan {
                g_peak: g_grid[argmax],
                peak_abs_f: peak,
                argmax,
                results,
            },
            method: Method::ExactDoubled,
            v_expectation: sys.v_expectation(),
        });
        rows.push(TeleportRow {
            t,
            scan: scan_g(&dists[i], g_grid, v_q)?,
            method: Method::FromQ,
            v_expectation: v_q,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------- fig

fn cmd_fig(a: FigArgs) -> Result<()> {
    let default_out = PathBuf::from(format!("{}.csv", figure_name(a.figure)));
    let out = a.out.clone().unwrap_or(default_out);
    let mut config = config_of(&a)?;
    merge(&mut config, json!({ "figure": figure_name(a.figure) }));
    let meta_base = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "fig",
        "config": config,
    });
    let mut w = open_out(Some(&out))?;
    match a.figure {
        Figure::Fig3 => fig3(meta_base, a.threads, &mut w)?,
        Figure::Fig4 => fig4(meta_base, a.threads, &mut w)?,
        Figure::Fig5 => fig5(meta_base, &a, &mut w)?,
    }
    w.flush()?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn figure_name(f: Figure) -> &'static str {
    match f {
        Figure::Fig3 => "fig3",
        Figure::Fig4 => "fig4",
        Figure::Fig5 => "fig5",
    }
}

fn reference_params() -> Result<LargeQParams> {
    LargeQParams::new(0.25, 0.6, REFERENCE_BETA, 18.0)
}

fn dist_rows(w: &mut dyn Write, lead: &str, d: &ContinuousDistribution) -> Result<()> {
    for i in 0..d.s_grid.len() {
        let q = d.q[i];
        writeln!(
            w,
            "{lead},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            d.s_grid[i],
            d.p[i],
            q.re,
            q.im,
            q.norm(),
            q.arg()
        )?;
    }
    Ok(())
}

fn fig3(mut meta: Value, threads: Option<usize>, w: &mut dyn Write) -> Result<()> {
    let params = reference_params()?;
    let grid = GridSpec { points: 2001, edge_points: 2000 };
    let dists = pool(threads)?.install(|| {
        FIG3_LAMBDA0
            .par_iter()
            .map(|&l0| large_n_distribution(l0, &params, &grid))
            .collect::<Result<Vec<_>>>()
    })?;
    merge(&mut meta, json!({ "params": params, "lambda0": FIG3_LAMBDA0, "s_support": s_support(&params) }));
    writeln!(w, "# {meta}")?;
    writeln!(w, "lambda0,s,P,re_Q,im_Q,abs_Q,arg_Q")?;
    for d in &dists {
        dist_rows(w, &d.lambda0.to_string(), d)?;
    }
    Ok(())
}

fn fig4(mut meta: Value, threads: Option<usize>, w: &mut dyn Write) -> Result<()> {
    let params = reference_params()?;
    let n = 18;
    let dists = pool(threads)?.install(|| {
        FIG4_TIMES
            .par_iter()
            .map(|&t| finite_n_distribution_at_time(t, &params, n, &GridSpec::uniform(2001)))
            .collect::<Result<Vec<_>>>()
    })?;
    merge(&mut meta, json!({ "params": params, "n": n, "t": FIG4_TIMES }));
    writeln!(w, "# {meta}")?;
    writeln!(w, "t,lambda0,s,P,re_Q,im_Q,abs_Q,arg_Q")?;
    for d in &dists {
        let lead = format!("{},{:.17e}", d.t.unwrap_or(f64::NAN), d.lambda0);
        dist_rows(w, &lead, d)?;
    }
    Ok(())
}

fn fig5(mut meta: Value, a: &FigArgs, w: &mut dyn Write) -> Result<()> {
    let syk = SykParams {
        n_majorana: 18,
        q: 4,
        script_j: reference_script_j(REFERENCE_BETA),
        beta: REFERENCE_BETA,
        base_seed: a.seed,
    };
    let ens = run_ensemble(&syk, &FIG5_TIMES, a.realizations, Probe::Flavor(0), a.threads)?;
    let large_q = LargeQParams::from_coupling(0.25, REFERENCE_BETA_J, REFERENCE_BETA, 18.0)?;
    merge(
        &mut meta,
        json!({
            "params": syk,
            "large_q_params": large_q,
            "probe": ens.probe,
            "mean_v_expectation": ens.mean_v_expectation,
        }),
    );
    writeln!(w, "# {meta}")?;
    writeln!(w, "t,n,s,P,re_Q,im_Q,abs_Q,arg_Q,stderr_P,arg_Q_asymptotic")?;
    let nn = syk.n_majorana;
    for (i, &t) in ens.t_list.iter().enumerate() {
        for n in 0..=nn {
            let s = n as f64 / nn as f64;
            let q = ens.mean_q[i][n];
            writeln!(
                w,
                "{t},{n},{s:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                ens.mean_p[i][n],
                q.re,
                q.im,
                q.norm(),
                ens.arg_mean_q[i][n],
                ens.stderr_p[i][n],
                arg_q_asymptotic(s, t, &large_q, nn as u32),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_lists() {
        assert_eq!(parse_grid("0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("-1:1:0.5").unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("-1:1:0.01").unwrap().len(), 201);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_list("1,x").is_err());
        assert!(parse_window("0.2").is_err());
    }

    #[test]
    fn config_flags() {
        assert_eq!(to_flag("beta_j", &json!(3.5)), Some("--beta-j=3.5".into()));
        assert_eq!(to_flag("probe-average", &json!(true)), Some("--probe-average".into()));
        assert_eq!(to_flag("probe-average", &json!("false")), None);
        assert_eq!(to_flag("t", &Value::Null), None);
    }

    #[test]
    fn config_is_spliced_after_the_subcommand() {
        let dir = std::env::temp_dir().join(format!("sw-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("run.cfg");
        fs::write(&p, "# comment\ncommand = ed\nn = 8\nprobe_average = true\n").unwrap();
        let args: Vec<OsString> = ["size-winding", "--config", p.to_str().unwrap(), "--n", "6"]
            .iter()
            .map(OsString::from)
            .collect();
        let out = expand_config(args).unwrap();
        let out: Vec<&str> = out.iter().map(|s| s.to_str().unwrap()).collect();
        assert_eq!(out, ["size-winding", "ed", "--n=8", "--probe-average", "--n", "6"]);
        let cli = Cli::try_parse_from(out).unwrap();
        match cli.command {
            Command::Ed(a) => assert_eq!((a.n, a.probe_average), (6, true)),
            _ => panic!("wrong subcommand"),
        }
        fs::remove_dir_all(dir).unwrap();
    }
}
