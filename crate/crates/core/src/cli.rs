//! `spinctl` command-line front end.
//!
//! Every subcommand can also be driven by `--config <file.json>`, a JSON
//! object with a `"command"` tag and the same keys as the long flags. JSON
//! outputs carry a `"run_config"` entry in that format, so feeding it back
//! repeats the run.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::control::{
    bias_trace, optimize_bias, optimize_switching, switching_trace, BiasConfig, ControlParameters, SwitchingConfig, TargetTime,
};
use crate::controllability::{lie_report, DEFAULT_RANK_TOL};
use crate::dynamics::{probability_trace, spectral_decompose, write_trace_csv};
use crate::error::{Result, SpinError};
use crate::ident::{default_horizon, identify, simulate_experiment, write_records, IdentConfig, NoiselessRing};
use crate::itc::{attainability_report, AttainabilityOptions};
use crate::netmodel::{NetworkSpec, Topology};
use crate::scenarios::{run_scenario, SCENARIOS};
use crate::control::detuning_control;

/// Closed interval written `lo:hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: FromStr> FromStr for Span<T> {
    type Err = SpinError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SpinError::InvalidConfig(format!("expected lo:hi, got {s:?}"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        Ok(Span {
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
        })
    }
}

impl<T: fmt::Display> fmt::Display for Span<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl<T: fmt::Display> Serialize for Span<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de, T: FromStr> Deserialize<'de> for Span<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn one() -> f64 {
    1.0
}
fn site_one() -> usize {
    1
}
fn segments() -> usize {
    40
}
fn restarts() -> usize {
    20
}
fn max_iter() -> usize {
    2000
}
fn grid_points() -> usize {
    32
}
fn trace_points() -> usize {
    1000
}
fn rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}
fn samples() -> usize {
    50
}
fn ten() -> usize {
    10
}
fn ten_u32() -> u32 {
    10
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    pub topology: Topology,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub j: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub eps: f64,
    #[arg(long)]
    pub from: usize,
    #[arg(long)]
    pub to: usize,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long)]
    pub dt: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ItcArgs {
    #[arg(long)]
    pub topology: Topology,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub j: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub eps: f64,
    #[arg(long)]
    pub from: usize,
    #[arg(long)]
    pub to: usize,
    /// Scan horizon; defaults to 1000/J.
    #[arg(long)]
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Scan spacing; defaults to 2π/(64 × spectral range).
    #[arg(long)]
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SwitchArgs {
    #[arg(long)]
    pub topology: Topology,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub j: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub eps: f64,
    #[arg(long)]
    pub from: usize,
    #[arg(long)]
    pub to: usize,
    #[arg(long, default_value_t = 40)]
    #[serde(default = "segments")]
    pub segments: usize,
    /// Fixed total duration; free when omitted.
    #[arg(long)]
    #[serde(default)]
    pub total_time: Option<f64>,
    #[arg(long, default_value_t = 20)]
    #[serde(default = "restarts")]
    pub restarts: usize,
    /// Detuning strength; defaults to 2J.
    #[arg(long)]
    #[serde(default)]
    pub strength: Option<f64>,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "site_one")]
    pub control_site: usize,
    #[arg(long)]
    #[serde(default)]
    pub start_on: bool,
    #[arg(long, default_value_t = 2000)]
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    /// Also write the controlled `t,p` trace to this CSV file.
    #[arg(long)]
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    #[serde(default = "trace_points")]
    pub trace_points: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BiasArgs {
    #[arg(long)]
    pub topology: Topology,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub j: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub eps: f64,
    #[arg(long)]
    pub from: usize,
    #[arg(long)]
    pub to: usize,
    /// Fixed readout time.
    #[arg(long, conflicts_with = "t_range")]
    #[serde(default)]
    pub t: Option<f64>,
    /// Readout time range `lo:hi`.
    #[arg(long)]
    #[serde(default)]
    pub t_range: Option<Span<f64>>,
    #[arg(long, default_value_t = 32)]
    #[serde(default = "grid_points")]
    pub grid_points: usize,
    #[arg(long, default_value_t = 20)]
    #[serde(default = "restarts")]
    pub restarts: usize,
    /// Initial biases are drawn from ±scale; defaults to 5J.
    #[arg(long)]
    #[serde(default)]
    pub bias_scale: Option<f64>,
    /// Biases are kept inside ±bound; defaults to 100J.
    #[arg(long)]
    #[serde(default)]
    pub bias_bound: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    #[arg(long)]
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    #[serde(default = "trace_points")]
    pub trace_points: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LieArgs {
    #[arg(long)]
    pub topology: Topology,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub j: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "site_one")]
    pub control_site: usize,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    #[serde(default = "rank_tol")]
    pub rank_tol: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct IdentifyArgs {
    #[arg(long)]
    pub n_true: usize,
    #[arg(long)]
    pub j_true: f64,
    /// Ring sizes `min:max`.
    #[arg(long)]
    pub domain: Span<usize>,
    /// Coupling range `min:max`.
    #[arg(long)]
    pub j_range: Span<f64>,
    #[arg(long, default_value_t = 50)]
    #[serde(default = "samples")]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    #[serde(default = "ten")]
    pub times: usize,
    #[arg(long, default_value_t = 10)]
    #[serde(default = "ten_u32")]
    pub repetitions: u32,
    #[arg(long, default_value_t = 10)]
    #[serde(default = "ten")]
    pub iterations: usize,
    /// Stop early once the likelihood peak stands this many nats above the median.
    #[arg(long)]
    #[serde(default)]
    pub early_stop: Option<f64>,
    /// Measurement horizon; defaults to π 2^b / J_max with 2^b > times.
    #[arg(long)]
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Simulated device returns round(R θ) instead of binomial draws.
    #[arg(long)]
    #[serde(default)]
    pub noiseless: bool,
    /// Also write the measurement records to this CSV file.
    #[arg(long)]
    #[serde(default)]
    pub data: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ReproduceArgs {
    /// Scenario id, `all`, or `list`.
    pub claim: String,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Transfer probability trace p(t) as CSV.
    Simulate(SimulateArgs),
    /// Transfer capacity bound and attainability report.
    Itc(ItcArgs),
    /// Optimize bang-bang switching of a local detuning.
    OptimizeSwitch(SwitchArgs),
    /// Optimize static on-site biases.
    OptimizeBias(BiasArgs),
    /// Dimension of the dynamical Lie algebra with a detuning control.
    LieDim(LieArgs),
    /// Identify ring size and coupling from a simulated device.
    Identify(IdentifyArgs),
    /// Run a named reproduction scenario.
    Reproduce(ReproduceArgs),
}

impl Command {
    fn is_stochastic(&self) -> bool {
        match self {
            Command::OptimizeSwitch(_) | Command::OptimizeBias(_) | Command::Identify(_) => true,
            Command::Reproduce(a) => a.claim != "list",
            _ => false,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spinctl", version, about = "Spin network transfer, control and identification")]
struct Cli {
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Significant digits for CSV floats; shortest round-trip form when omitted.
    #[arg(long, global = true)]
    precision: Option<usize>,
    /// JSON run configuration instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

/// Fully resolved run: the command plus the global options that affect
/// results.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: Option<u64>,
    pub precision: Option<usize>,
}

impl RunConfig {
    pub fn to_json(&self) -> Value {
        let mut value = serde_json::to_value(&self.command).unwrap_or(Value::Null);
        if let Value::Object(map) = &mut value {
            map.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
            map.insert("precision".into(), self.precision.map_or(Value::Null, Value::from));
        }
        value
    }

    pub fn from_json(mut value: Value) -> Result<Self> {
        let Value::Object(map) = &mut value else {
            return Err(SpinError::InvalidConfig("configuration must be a JSON object".into()));
        };
        let take = |map: &mut Map<String, Value>, key: &str| -> Result<Option<u64>> {
            match map.remove(key) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => v
                    .as_u64()
                    .map(Some)
                    .ok_or_else(|| SpinError::InvalidConfig(format!("{key} must be a non-negative integer"))),
            }
        };
        let seed = take(map, "seed")?;
        let precision = take(map, "precision")?.map(|p| p as usize);
        let command = serde_json::from_value(value).map_err(|e| SpinError::InvalidConfig(e.to_string()))?;
        Ok(RunConfig { command, seed, precision })
    }
}

fn network(topology: Topology, n: usize, j: f64, eps: f64) -> Result<NetworkSpec> {
    NetworkSpec::new(topology, n, j, eps)
}

fn require_seed(config: &RunConfig) -> Result<u64> {
    config
        .seed
        .ok_or_else(|| SpinError::InvalidConfig("this command is stochastic and requires --seed".into()))
}

fn with_run_config<T: Serialize>(result: &T, config: &RunConfig) -> Result<String> {
    let mut value = serde_json::to_value(result).map_err(|e| SpinError::InvalidConfig(e.to_string()))?;
    if let Value::Object(map) = &mut value {
        map.insert("run_config".into(), config.to_json());
    }
    serde_json::to_string_pretty(&value).map_err(|e| SpinError::InvalidConfig(e.to_string()))
}

fn trace_times(end: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|i| end * i as f64 / (points - 1) as f64).collect()
}

fn write_csv_file(path: &Path, times: &[f64], probs: &[f64], precision: Option<usize>) -> Result<()> {
    let file = fs::File::create(path)?;
    write_trace_csv(std::io::BufWriter::new(file), times, probs, precision)
}

/// Executes one resolved run and returns the text to emit and whether the
/// run succeeded (a failed reproduction scenario is a runtime failure).
pub fn execute(config: &RunConfig) -> Result<(String, bool)> {
    if config.command.is_stochastic() {
        require_seed(config)?;
    }
    let seed = config.seed.unwrap_or(0);
    match &config.command {
        Command::Simulate(a) => {
            let spec = network(a.topology, a.n, a.j, a.eps)?;
            if !(a.t_max.is_finite() && a.t_max >= 0.0 && a.dt.is_finite() && a.dt > 0.0) {
                return Err(SpinError::InvalidGrid {
                    step: a.dt,
                    horizon: a.t_max,
                });
            }
            let count = (a.t_max / a.dt + 1e-9).floor() as usize;
            let times: Vec<f64> = (0..=count).map(|i| i as f64 * a.dt).collect();
            let s = spectral_decompose(&spec.hamiltonian(), None)?;
            let probs = probability_trace(&s, a.to, a.from, &times)?;
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &times, &probs, config.precision)?;
            Ok((String::from_utf8_lossy(&buf).into_owned(), true))
        }
        Command::Itc(a) => {
            let spec = network(a.topology, a.n, a.j, a.eps)?;
            let s = spectral_decompose(&spec.hamiltonian(), None)?;
            let options = AttainabilityOptions {
                step: a.step,
                ..AttainabilityOptions::new(a.horizon.unwrap_or(1000.0 / a.j))
            };
            let report = attainability_report(&s, a.to, a.from, &options)?;
            Ok((with_run_config(&report, config)?, true))
        }
        Command::OptimizeSwitch(a) => {
            let h0 = network(a.topology, a.n, a.j, a.eps)?.hamiltonian();
            let cfg = SwitchingConfig {
                segments: a.segments,
                total_time: a.total_time,
                restarts: a.restarts,
                seed,
                strength: a.strength,
                control_site: a.control_site,
                start_on: a.start_on,
                max_iter: a.max_iter,
            };
            let result = optimize_switching(&h0, a.to, a.from, &cfg)?;
            if let (Some(path), ControlParameters::Switching(s)) = (&a.trace, &result.parameters) {
                let times = trace_times(s.total_time(), a.trace_points);
                let probs = switching_trace(&h0, a.to, a.from, s, &times)?;
                write_csv_file(path, &times, &probs, config.precision)?;
            }
            Ok((with_run_config(&result, config)?, true))
        }
        Command::OptimizeBias(a) => {
            let h0 = network(a.topology, a.n, a.j, a.eps)?.hamiltonian();
            let target = match (a.t, a.t_range) {
                (Some(t), None) => TargetTime::Fixed(t),
                (None, Some(r)) => TargetTime::Range { lo: r.lo, hi: r.hi },
                _ => return Err(SpinError::InvalidConfig("give exactly one of --t or --t-range".into())),
            };
            let cfg = BiasConfig {
                target,
                grid_points: a.grid_points,
                restarts: a.restarts,
                seed,
                bias_scale: a.bias_scale,
                bias_bound: a.bias_bound,
                max_iter: a.max_iter,
            };
            let result = optimize_bias(&h0, a.to, a.from, &cfg)?;
            if let (Some(path), ControlParameters::Bias(b)) = (&a.trace, &result.parameters) {
                let times = trace_times(b.target_time, a.trace_points);
                let probs = bias_trace(&h0, a.to, a.from, b, &times)?;
                write_csv_file(path, &times, &probs, config.precision)?;
            }
            Ok((with_run_config(&result, config)?, true))
        }
        Command::LieDim(a) => {
            let h0 = network(a.topology, a.n, a.j, a.eps)?.hamiltonian();
            let hc = detuning_control(a.n, a.control_site)?;
            let description = format!(
                "{:?} n={} j={} eps={} + sigma_z({})",
                a.topology, a.n, a.j, a.eps, a.control_site
            )
            .to_lowercase();
            let report = lie_report(&[h0.matrix().clone(), hc], description, a.rank_tol)?;
            Ok((with_run_config(&report, config)?, true))
        }
        Command::Identify(a) => {
            let ident = IdentConfig {
                n_min: a.domain.lo,
                n_max: a.domain.hi,
                j_min: a.j_range.lo,
                j_max: a.j_range.hi,
                samples_per_size: a.samples,
                times_per_iteration: a.times,
                repetitions: a.repetitions,
                iterations: a.iterations,
                seed,
                early_stop_nats: a.early_stop,
            };
            ident.validate()?;
            let horizon = a.horizon.unwrap_or_else(|| default_horizon(a.j_range.hi, a.times));
            let result = if a.noiseless {
                identify(&mut NoiselessRing::new(a.n_true, a.j_true, horizon)?, &ident)?
            } else {
                identify(&mut simulate_experiment(a.n_true, a.j_true, horizon, seed)?, &ident)?
            };
            if let Some(path) = &a.data {
                write_records(fs::File::create(path)?, &result.records)?;
            }
            Ok((with_run_config(&result, config)?, true))
        }
        Command::Reproduce(a) => match a.claim.as_str() {
            "list" => {
                let lines: Vec<String> = SCENARIOS.iter().map(|s| format!("{:<24}{}", s.id, s.title)).collect();
                Ok((lines.join("\n") + "\n", true))
            }
            "all" => {
                let outcomes = SCENARIOS.iter().map(|s| run_scenario(s.id, seed)).collect::<Result<Vec<_>>>()?;
                let ok = outcomes.iter().all(|o| o.passed);
                let value = serde_json::json!({ "scenarios": outcomes, "passed": ok });
                Ok((with_run_config(&value, config)?, ok))
            }
            id => {
                let outcome = run_scenario(id, seed)?;
                let ok = outcome.passed;
                Ok((with_run_config(&outcome, config)?, ok))
            }
        },
    }
}

fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var("SPINCTL_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| SpinError::InvalidConfig(format!("SPINCTL_THREADS must be a positive integer, got {text:?}")))?;
    // the global pool can only be set once per process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn resolve(cli: Cli) -> Result<(RunConfig, Option<PathBuf>)> {
    let config = match (cli.config, cli.command) {
        (Some(_), Some(_)) => return Err(SpinError::InvalidConfig("--config replaces the subcommand; give one or the other".into())),
        (None, None) => return Err(SpinError::InvalidConfig("a subcommand or --config is required".into())),
        (None, Some(command)) => RunConfig {
            command,
            seed: cli.seed,
            precision: cli.precision,
        },
        (Some(path), None) => {
            let text = fs::read_to_string(&path)?;
            let value: Value = serde_json::from_str(&text).map_err(|e| SpinError::InvalidConfig(format!("{}: {e}", path.display())))?;
            let mut config = RunConfig::from_json(value)?;
            // flags override the file
            config.seed = cli.seed.or(config.seed);
            config.precision = cli.precision.or(config.precision);
            config
        }
    };
    Ok((config, cli.out))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    let newline: &[u8] = if text.ends_with('\n') { b"" } else { b"\n" };
    match out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            file.write_all(text.as_bytes())?;
            file.write_all(newline)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.write_all(newline)?;
        }
    }
    Ok(())
}

fn exit_code(err: &SpinError) -> i32 {
    if err.is_validation() {
        1
    } else {
        2
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on invalid input, 2 on runtime failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = configure_threads().and_then(|()| resolve(cli)).and_then(|(config, out)| {
        let (text, ok) = execute(&config)?;
        emit(&text, out.as_deref())?;
        Ok(ok)
    });
    match outcome {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
